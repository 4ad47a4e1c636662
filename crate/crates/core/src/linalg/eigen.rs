use alloc::format;
use alloc::vec::Vec;

use num_complex::Complex64;

use super::ComplexMatrix;
use crate::error::{shape_err, Error, Result};

/// Sweep cap for the cyclic Jacobi iteration.
pub const MAX_SWEEPS: usize = 100;

const HERMITIAN_TOL: f64 = 1e-8;
const OFF_DIAG_TOL: f64 = 1e-12;

/// Spectral decomposition `A = V diag(values) V^dagger` of a Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    /// Eigenvalues in descending order.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns, in eigenvalue order.
    pub eigenvectors: ComplexMatrix,
}

impl EigenDecomposition {
    /// `V f(Lambda) V^dagger`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.eigenvalues.len();
        let v = &self.eigenvectors;
        let fvals: Vec<f64> = self.eigenvalues.iter().map(|&x| f(x)).collect();
        let mut out = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for (k, &fk) in fvals.iter().enumerate() {
                    if fk != 0.0 {
                        acc += v[(i, k)] * v[(j, k)].conj() * fk;
                    }
                }
                out[(i, j)] = acc;
            }
        }
        out
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.reconstruct_with(|x| x)
    }
}

/// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi rotations.
///
/// Input must be Hermitian to within `1e-8 * max(1, ||A||_F)`. Iterates until
/// the off-diagonal Frobenius mass drops to `1e-12 * ||A||_F`, giving up after
/// [`MAX_SWEEPS`] sweeps.
pub fn hermitian_eig(a: &ComplexMatrix) -> Result<EigenDecomposition> {
    if !a.is_square() {
        return Err(shape_err("hermitian_eig", "square matrix", format!("{}x{}", a.rows(), a.cols())));
    }
    let n = a.rows();
    let norm = a.frobenius_norm();
    if !norm.is_finite() {
        return Err(Error::Numeric("hermitian_eig: non-finite input".into()));
    }
    let defect = a.hermitian_defect()?;
    if defect > HERMITIAN_TOL * norm.max(1.0) {
        return Err(Error::Domain(format!(
            "hermitian_eig: matrix is not Hermitian (||A - A^dagger||_F = {defect:e})"
        )));
    }

    // symmetrise so that rounding in the input does not leak into the rotations
    let mut m = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = Complex64::new(a[(i, i)].re, 0.0);
        for j in (i + 1)..n {
            let z = (a[(i, j)] + a[(j, i)].conj()) * 0.5;
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
    }
    let mut v = ComplexMatrix::identity(n);
    let threshold = OFF_DIAG_TOL * norm;

    let mut converged = false;
    let mut residual = off_diagonal_norm(&m);
    for _ in 0..MAX_SWEEPS {
        if residual <= threshold {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut m, &mut v, p, q);
            }
        }
        residual = off_diagonal_norm(&m);
    }
    if !converged && residual > threshold {
        return Err(Error::Numeric(format!(
            "hermitian_eig: no convergence after {MAX_SWEEPS} sweeps (off-diagonal residual {residual:e})"
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| m[(y, y)].re.total_cmp(&m[(x, x)].re));
    let eigenvalues = order.iter().map(|&k| m[(k, k)].re).collect();
    let mut eigenvectors = ComplexMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        for i in 0..n {
            eigenvectors[(i, dst)] = v[(i, src)];
        }
    }
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

fn off_diagonal_norm(m: &ComplexMatrix) -> f64 {
    let n = m.rows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += m[(i, j)].norm_sqr();
            }
        }
    }
    acc.sqrt()
}

/// Annihilates `m[p][q]` with the unitary `U = diag(1, e^{-i theta}) R(c, s)`
/// acting on coordinates `p, q`, and accumulates `V <- V U`.
fn rotate(m: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let g = m[(p, q)];
    let r = g.norm();
    if r == 0.0 {
        return;
    }
    let phase = g / r;
    let app = m[(p, p)].re;
    let aqq = m[(q, q)].re;
    let tau = (aqq - app) / (2.0 * r);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    // 2x2 block of U in (p, q) coordinates
    let u_pp = Complex64::new(c, 0.0);
    let u_pq = Complex64::new(s, 0.0);
    let u_qp = -phase.conj() * s;
    let u_qq = phase.conj() * c;

    let n = m.rows();
    for k in 0..n {
        let mkp = m[(k, p)];
        let mkq = m[(k, q)];
        m[(k, p)] = mkp * u_pp + mkq * u_qp;
        m[(k, q)] = mkp * u_pq + mkq * u_qq;
    }
    for k in 0..n {
        let mpk = m[(p, k)];
        let mqk = m[(q, k)];
        m[(p, k)] = u_pp.conj() * mpk + u_qp.conj() * mqk;
        m[(q, k)] = u_pq.conj() * mpk + u_qq.conj() * mqk;
    }
    m[(p, q)] = Complex64::new(0.0, 0.0);
    m[(q, p)] = Complex64::new(0.0, 0.0);
    m[(p, p)] = Complex64::new(app - t * r, 0.0);
    m[(q, q)] = Complex64::new(aqq + t * r, 0.0);

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * u_pp + vkq * u_qp;
        v[(k, q)] = vkp * u_pq + vkq * u_qq;
    }
}

/// `V f(max(Lambda, floor)) V^dagger` for a Hermitian PSD matrix.
///
/// Eigenvalues below `eigen_floor` are clamped before `f` is applied; use
/// `1e-12` for the logarithm and `0.0` for the square root.
pub fn matrix_function(a: &ComplexMatrix, f: impl Fn(f64) -> f64, eigen_floor: f64) -> Result<ComplexMatrix> {
    let eig = hermitian_eig(a)?;
    let out = eig.reconstruct_with(|x| f(x.max(eigen_floor)));
    if out.as_slice().iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numeric("matrix_function: non-finite result".into()));
    }
    Ok(out)
}
