//! Rank-one projector measurements and max pooling.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{shape_err, Error, Result};
use crate::linalg::ComplexVector;
use crate::mixture::{DensityMatrix, WindowSequence};

/// Allowed deviation from unit norm for a measurement vector.
pub const UNIT_NORM_TOL: f64 = 1e-6;
const IMAG_RESIDUE_TOL: f64 = 1e-9;

/// `k` measurement states of dimension `n`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    k: usize,
    n: usize,
    data: Vec<Complex64>,
}

impl MeasurementSet {
    pub fn from_vec(k: usize, n: usize, data: Vec<Complex64>) -> Result<Self> {
        if k == 0 || n == 0 {
            return Err(Error::Config("measurement set needs k >= 1 and n >= 1".into()));
        }
        if data.len() != k * n {
            return Err(shape_err("MeasurementSet", format!("{} values", k * n), format!("{}", data.len())));
        }
        Ok(Self { k, n, data })
    }

    pub fn from_rows(rows: &[ComplexVector]) -> Result<Self> {
        let n = rows.first().map_or(0, ComplexVector::dim);
        if rows.iter().any(|r| r.dim() != n) {
            return Err(shape_err("MeasurementSet::from_rows", format!("rows of dim {n}"), "ragged rows"));
        }
        Self::from_vec(rows.len(), n, rows.iter().flat_map(|r| r.as_slice().iter().copied()).collect())
    }

    pub fn count(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [Complex64] {
        &mut self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn vector(&self, i: usize) -> ComplexVector {
        ComplexVector::new(self.row(i).to_vec())
    }

    /// Rescales every row to unit length. Zero rows become `e_(i mod n)`.
    pub fn project_unit_norm(&mut self) {
        let n = self.n;
        for i in 0..self.k {
            let row = self.row_mut(i);
            let norm = row.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm > 0.0 && norm.is_finite() {
                for z in row.iter_mut() {
                    *z /= norm;
                }
            } else {
                row.fill(Complex64::new(0.0, 0.0));
                row[i % n] = Complex64::new(1.0, 0.0);
            }
        }
    }

    /// Largest `| ||v_i|| - 1 |` over rows.
    pub fn max_norm_deviation(&self) -> f64 {
        (0..self.k)
            .map(|i| (self.row(i).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// Row `i` is the real one-hot vector `e_(i mod n)`.
pub fn init_measurements(k: usize, n: usize) -> Result<MeasurementSet> {
    let mut data = vec![Complex64::new(0.0, 0.0); k * n];
    for i in 0..k {
        if n > 0 {
            data[i * n + i % n] = Complex64::new(1.0, 0.0);
        }
    }
    MeasurementSet::from_vec(k, n, data)
}

/// Probability `<v|rho|v>` of observing the rank-one projector `|v><v|`.
pub fn measure(rho: &DensityMatrix, v: &ComplexVector) -> Result<f64> {
    let n = rho.dim();
    if v.dim() != n {
        return Err(shape_err("measure", format!("dim {n}"), format!("dim {}", v.dim())));
    }
    let dev = (v.norm() - 1.0).abs();
    if dev > UNIT_NORM_TOL {
        return Err(Error::Domain(format!("measurement vector is not unit norm (deviation {dev:e})")));
    }
    let m = rho.matrix();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        acc += v[i].conj() * inner_row(m.row(i), v.as_slice());
    }
    if acc.im.abs() > IMAG_RESIDUE_TOL {
        return Err(Error::Numeric(format!("measurement has imaginary residue {:e}", acc.im)));
    }
    Ok(acc.re)
}

#[inline]
fn inner_row(row: &[Complex64], v: &[Complex64]) -> Complex64 {
    row.iter().zip(v).map(|(a, b)| a * b).sum()
}

/// `k x L` matrix of measurement outcomes, row-major by measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMatrix {
    k: usize,
    len: usize,
    values: Vec<f64>,
}

impl ProbabilityMatrix {
    pub fn from_vec(k: usize, len: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != k * len {
            return Err(shape_err("ProbabilityMatrix", format!("{} values", k * len), format!("{}", values.len())));
        }
        Ok(Self { k, len, values })
    }

    pub fn measurements(&self) -> usize {
        self.k
    }

    pub fn windows(&self) -> usize {
        self.len
    }

    pub fn get(&self, measurement: usize, window: usize) -> f64 {
        self.values[measurement * self.len + window]
    }

    pub fn row(&self, measurement: usize) -> &[f64] {
        &self.values[measurement * self.len..(measurement + 1) * self.len]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

pub fn measure_all(windows: &WindowSequence, measurements: &MeasurementSet) -> Result<ProbabilityMatrix> {
    let len = windows.windows.len();
    let k = measurements.count();
    let mut values = vec![0.0; k * len];
    for (j, rho) in windows.windows.iter().enumerate() {
        if rho.dim() != measurements.dim() {
            return Err(shape_err(
                "measure_all",
                format!("window dim {}", measurements.dim()),
                format!("window dim {}", rho.dim()),
            ));
        }
        for i in 0..k {
            values[i * len + j] = measure(rho, &measurements.vector(i))?;
        }
    }
    ProbabilityMatrix::from_vec(k, len, values)
}

/// Row-wise maximum with the index of the first maximal window.
#[derive(Debug, Clone, PartialEq)]
pub struct Pooled {
    pub values: Vec<f64>,
    pub argmax: Vec<usize>,
}

pub fn max_pool(p: &ProbabilityMatrix) -> Result<Pooled> {
    if p.windows() == 0 {
        return Err(Error::Domain("max pool over zero windows".into()));
    }
    let (values, argmax) = (0..p.measurements())
        .map(|i| {
            let (idx, val) = first_max(p.row(i));
            (val, idx)
        })
        .unzip();
    Ok(Pooled { values, argmax })
}

/// Maximum of a nonempty slice; ties resolve to the lowest index.
pub(crate) fn first_max(xs: &[f64]) -> (usize, f64) {
    let mut best = 0;
    for (j, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = j;
        }
    }
    (best, xs[best])
}
