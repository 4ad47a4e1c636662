//! Density matrices built from word states.

use alloc::format;
use alloc::vec::Vec;


use crate::embedding::WordState;
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eig, trace, ComplexMatrix};

pub const HERMITIAN_TOL: f64 = 1e-9;
pub const TRACE_TOL: f64 = 1e-9;
pub const PSD_TOL: f64 = 1e-8;

/// Hermitian, unit-trace, positive semi-definite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: ComplexMatrix,
}

/// Measured deviations from the density-matrix invariants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvariantReport {
    pub hermitian_defect: f64,
    pub trace_error: f64,
    pub min_eigenvalue: f64,
    pub min_diagonal: f64,
    pub diagonal_imag: f64,
}

impl InvariantReport {
    pub fn holds(&self) -> bool {
        self.hermitian_defect <= HERMITIAN_TOL
            && self.trace_error <= TRACE_TOL
            && self.min_eigenvalue >= -PSD_TOL
            && self.min_diagonal >= -PSD_TOL
            && self.diagonal_imag <= HERMITIAN_TOL
    }
}

impl DensityMatrix {
    /// Validates `mat` against every invariant.
    pub fn new(mat: ComplexMatrix) -> Result<Self> {
        let report = check_invariants(&mat)?;
        if !report.holds() {
            return Err(Error::Domain(format!("not a density matrix: {report:?}")));
        }
        Ok(Self { mat })
    }

    /// Wraps a matrix known to satisfy the invariants by construction.
    pub(crate) fn new_unchecked(mat: ComplexMatrix) -> Self {
        Self { mat }
    }

    /// Pure state `|v><v|`; `v` must be unit norm.
    pub fn pure(v: &crate::linalg::ComplexVector) -> Result<Self> {
        Self::new(crate::linalg::outer_product(v)?)
    }

    /// Diagonal density matrix from a probability vector.
    pub fn diagonal(probs: &[f64]) -> Result<Self> {
        Self::new(ComplexMatrix::from_diag(probs))
    }

    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.mat
    }

    pub fn invariants(&self) -> InvariantReport {
        // square by construction
        check_invariants(&self.mat).expect("density matrix is square")
    }
}

/// Measures every invariant of a candidate density matrix.
pub fn check_invariants(mat: &ComplexMatrix) -> Result<InvariantReport> {
    let hermitian_defect = mat.hermitian_defect()?;
    let tr = trace(mat)?;
    let n = mat.rows();
    let mut min_diagonal = f64::INFINITY;
    let mut diagonal_imag: f64 = 0.0;
    for i in 0..n {
        min_diagonal = min_diagonal.min(mat[(i, i)].re);
        diagonal_imag = diagonal_imag.max(mat[(i, i)].im.abs());
    }
    let min_eigenvalue = if hermitian_defect <= 1e-8 * mat.frobenius_norm().max(1.0) {
        hermitian_eig(mat)?.eigenvalues.last().copied().unwrap_or(0.0)
    } else {
        f64::NEG_INFINITY
    };
    Ok(InvariantReport {
        hermitian_defect,
        trace_error: (tr.re - 1.0).abs().max(tr.im.abs()),
        min_eigenvalue,
        min_diagonal,
        diagonal_imag,
    })
}

fn mix(words: &[WordState], weights: &[f64]) -> Result<DensityMatrix> {
    let n = words[0].state.dim();
    let mut rho = ComplexMatrix::zeros(n, n);
    for (w, &p) in words.iter().zip(weights) {
        rho.add_scaled_projector(p, w.state.as_slice())?;
    }
    // pin the diagonal to the real axis; imaginary parts there are pure rounding
    for i in 0..n {
        rho[(i, i)].im = 0.0;
    }
    Ok(DensityMatrix::new_unchecked(rho))
}

/// Equal-weight mixture `sum_j (1/m) |w_j><w_j|`.
pub fn global_mixture(words: &[WordState]) -> Result<DensityMatrix> {
    if words.is_empty() {
        return Err(Error::Domain("global mixture of an empty sequence".into()));
    }
    let m = words.len() as f64;
    let weights: Vec<f64> = words.iter().map(|_| 1.0 / m).collect();
    mix(words, &weights)
}

/// Softmax of word weights; shifted by the maximum for stability.
pub fn softmax(weights: &[f64]) -> Vec<f64> {
    let max = weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = weights.iter().map(|&w| (w - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Mixture weighted by the softmax of the word weights.
pub fn local_mixture(window: &[WordState]) -> Result<DensityMatrix> {
    if window.is_empty() {
        return Err(Error::Domain("local mixture of an empty window".into()));
    }
    let weights: Vec<f64> = window.iter().map(|w| w.weight).collect();
    mix(window, &softmax(&weights))
}

/// Token span `[start, end)` of every window over a sentence of `len` tokens.
///
/// One window per position; windows running past the end are truncated.
pub fn window_spans(len: usize, window: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..len).map(move |j| (j, (j + window).min(len)))
}

/// Sentence as a sequence of local mixtures.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSequence {
    pub windows: Vec<DensityMatrix>,
    pub window_length: usize,
    pub sentence_length: usize,
}

pub fn slide_windows(sentence: &[WordState], window_length: usize) -> Result<WindowSequence> {
    if sentence.is_empty() {
        return Err(Error::Domain("cannot slide windows over an empty sentence".into()));
    }
    if window_length == 0 {
        return Err(Error::Config("window length must be positive".into()));
    }
    let windows = window_spans(sentence.len(), window_length)
        .map(|(s, e)| local_mixture(&sentence[s..e]))
        .collect::<Result<Vec<_>>>()?;
    Ok(WindowSequence {
        windows,
        window_length,
        sentence_length: sentence.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{outer_product, Complex64, ComplexVector};
    use alloc::vec;

    fn word(state: ComplexVector, weight: f64) -> WordState {
        WordState { state, weight }
    }

    #[test]
    fn single_word_is_pure() {
        let v = ComplexVector::new(vec![Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)]);
        let rho = global_mixture(&[word(v.clone(), 2.0)]).unwrap();
        assert!(rho.matrix().frobenius_distance(&outer_product(&v).unwrap()).unwrap() < 1e-15);
    }

    #[test]
    fn orthogonal_words_give_classical_mixture() {
        let words = [word(ComplexVector::basis(4, 0), 1.0), word(ComplexVector::basis(4, 1), 1.0)];
        let rho = global_mixture(&words).unwrap();
        assert_eq!(rho.matrix(), &ComplexMatrix::from_diag(&[0.5, 0.5, 0.0, 0.0]));
    }

    #[test]
    fn empty_inputs_rejected() {
        assert!(global_mixture(&[]).is_err());
        assert!(local_mixture(&[]).is_err());
    }

    #[test]
    fn dominant_weight_wins() {
        let words = [
            word(ComplexVector::basis(3, 0), 10.0),
            word(ComplexVector::basis(3, 1), 0.0),
            word(ComplexVector::basis(3, 2), 0.0),
        ];
        let rho = local_mixture(&words).unwrap();
        // explicit softmax: (e^10, 1, 1) / (e^10 + 2)
        let p0 = 10f64.exp() / (10f64.exp() + 2.0);
        let p1 = 1.0 / (10f64.exp() + 2.0);
        let expect = ComplexMatrix::from_diag(&[p0, p1, p1]);
        assert!(rho.matrix().frobenius_distance(&expect).unwrap() < 1e-15);
        // orthogonal runners-up put the mixture sqrt(6) * e^-10 / (1 + 2e^-10) from the winner
        let d = rho.matrix().frobenius_distance(&ComplexMatrix::from_diag(&[1.0, 0.0, 0.0])).unwrap();
        assert!(d < 1.2e-4, "distance {d}");
    }

    #[test]
    fn window_truncation() {
        let spans: Vec<_> = window_spans(3, 3).collect();
        assert_eq!(spans, [(0, 3), (1, 3), (2, 3)]);
        assert_eq!(window_spans(1, 4).collect::<Vec<_>>(), [(0, 1)]);
        let sentence: Vec<_> = (0..5).map(|i| word(ComplexVector::basis(5, i), 1.0)).collect();
        let seq = slide_windows(&sentence, 1).unwrap();
        assert_eq!(seq.windows.len(), 5);
        for (i, w) in seq.windows.iter().enumerate() {
            assert_eq!(w.matrix()[(i, i)], Complex64::new(1.0, 0.0));
        }
    }

    #[test]
    fn density_matrix_validation() {
        assert!(DensityMatrix::diagonal(&[0.5, 0.5]).is_ok());
        assert!(DensityMatrix::diagonal(&[0.7, 0.5]).is_err());
        assert!(DensityMatrix::diagonal(&[1.5, -0.5]).is_err());
    }
}
