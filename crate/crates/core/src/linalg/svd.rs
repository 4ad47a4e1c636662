use alloc::format;
use alloc::vec::Vec;

use num_complex::Complex64;

use super::{ComplexMatrix, MAX_SWEEPS};
use crate::error::{Error, Result};

const ORTHO_TOL: f64 = 1e-15;

/// Singular values in descending order, by one-sided Jacobi rotations.
///
/// Columns are rotated pairwise until mutually orthogonal; the singular values
/// are then the column norms. Unlike an eigendecomposition of `A^dagger A`,
/// small singular values keep absolute accuracy near `eps * ||A||`.
pub fn singular_values(a: &ComplexMatrix) -> Result<Vec<f64>> {
    let (rows, cols) = (a.rows(), a.cols());
    // column-major working copy
    let mut x: Vec<Complex64> = (0..cols).flat_map(|j| (0..rows).map(move |i| (i, j))).map(|(i, j)| a[(i, j)]).collect();
    if x.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numeric("singular_values: non-finite input".into()));
    }
    let mut converged = cols < 2;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        converged = true;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let (cp, cq) = (p * rows, q * rows);
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = Complex64::new(0.0, 0.0);
                for i in 0..rows {
                    alpha += x[cp + i].norm_sqr();
                    beta += x[cq + i].norm_sqr();
                    gamma += x[cp + i].conj() * x[cq + i];
                }
                let g = gamma.norm();
                if g == 0.0 || g <= ORTHO_TOL * (alpha * beta).sqrt() {
                    continue;
                }
                converged = false;
                let phase = gamma / g;
                let tau = (beta - alpha) / (2.0 * g);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let u_qp = -phase.conj() * s;
                let u_qq = phase.conj() * c;
                for i in 0..rows {
                    let xp = x[cp + i];
                    let xq = x[cq + i];
                    x[cp + i] = xp * c + xq * u_qp;
                    x[cq + i] = xp * s + xq * u_qq;
                }
            }
        }
    }
    if !converged {
        return Err(Error::Numeric(format!(
            "singular_values: columns not orthogonal after {MAX_SWEEPS} sweeps"
        )));
    }
    let mut values: Vec<f64> = (0..cols)
        .map(|j| x[j * rows..(j + 1) * rows].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
        .collect();
    values.sort_by(|a, b| b.total_cmp(a));
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_and_rank_one() {
        let d = ComplexMatrix::from_real_rows(&[&[0.0, -3.0], &[2.0, 0.0]]).unwrap();
        assert_eq!(singular_values(&d).unwrap(), [3.0, 2.0]);
        let r = ComplexMatrix::from_real_rows(&[&[1.0, 1.0], &[1.0, 1.0]]).unwrap();
        let s = singular_values(&r).unwrap();
        assert!((s[0] - 2.0).abs() < 1e-15 && s[1].abs() < 1e-15);
    }

    #[test]
    fn complex_entries() {
        // [[1, i], [i, 1]] has singular values 2 and 0
        let mut m = ComplexMatrix::identity(2);
        m[(0, 1)] = Complex64::new(0.0, 1.0);
        m[(1, 0)] = Complex64::new(0.0, 1.0);
        let s = singular_values(&m).unwrap();
        assert!((s[0] - 2.0f64.sqrt()).abs() < 1e-15 && (s[1] - 2.0f64.sqrt()).abs() < 1e-15);
        m[(1, 0)] = Complex64::new(0.0, -1.0);
        let s = singular_values(&m).unwrap();
        assert!((s[0] - 2.0).abs() < 1e-15 && s[1].abs() < 1e-15);
    }
}
