//! Dense symmetric positive-definite solves for the (small) normal equations.
//!
//! The regression dimension `p` is tiny compared to the number of areas, so a
//! plain O(p³) Cholesky factorization of the p×p normal-equation matrix is all
//! the linear algebra this crate needs. Covariances across areas are diagonal
//! throughout and are handled by single-pass sums elsewhere.

use crate::error::{Error, Result};

/// Relative pivot tolerance below which the normal equations are declared
/// singular.
const PIVOT_TOL: f64 = 1e-12;

/// Cholesky factor `L` (lower triangular, row-major) of an SPD matrix.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: Vec<f64>,
    n: usize,
}

impl Cholesky {
    /// Factor a symmetric positive-definite `n×n` matrix (row-major, full
    /// storage; only the lower triangle is read).
    ///
    /// Fails with [`Error::SingularDesign`] when a pivot drops below
    /// `PIVOT_TOL` relative to the largest initial diagonal entry.
    pub fn factor(a: &[f64], n: usize) -> Result<Self> {
        assert_eq!(a.len(), n * n, "matrix storage must be n*n");
        let max_diag = (0..n).map(|i| a[i * n + i]).fold(0.0_f64, f64::max);
        let floor = PIVOT_TOL * max_diag.max(f64::MIN_POSITIVE);
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut sum = a[i * n + j];
                for k in 0..j {
                    sum -= l[i * n + k] * l[j * n + k];
                }
                if i == j {
                    if sum <= floor {
                        return Err(Error::SingularDesign(format!(
                            "pivot {sum:.3e} at column {i} below tolerance"
                        )));
                    }
                    l[i * n + i] = sum.sqrt();
                } else {
                    l[i * n + j] = sum / l[j * n + j];
                }
            }
        }
        Ok(Self { l, n })
    }

    /// Solve `A x = b` using the factorization.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        let l = &self.l;
        // Forward substitution: L y = b.
        let mut x = b.to_vec();
        for i in 0..n {
            for k in 0..i {
                x[i] -= l[i * n + k] * x[k];
            }
            x[i] /= l[i * n + i];
        }
        // Back substitution: Lᵀ x = y.
        for i in (0..n).rev() {
            for k in i + 1..n {
                x[i] -= l[k * n + i] * x[k];
            }
            x[i] /= l[i * n + i];
        }
        x
    }

    /// Dense inverse `A⁻¹` (row-major), via one solve per identity column.
    pub fn inverse(&self) -> Vec<f64> {
        let n = self.n;
        let mut inv = vec![0.0; n * n];
        let mut e = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            let col = self.solve(&e);
            e[j] = 0.0;
            for i in 0..n {
                inv[i * n + j] = col[i];
            }
        }
        inv
    }
}

/// Quadratic form `xᵀ M x` for a dense row-major `n×n` matrix.
pub fn quadratic_form(m: &[f64], x: &[f64]) -> f64 {
    let n = x.len();
    let mut total = 0.0;
    for i in 0..n {
        let mut row = 0.0;
        for j in 0..n {
            row += m[i * n + j] * x[j];
        }
        total += x[i] * row;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn factor_and_solve_2x2() {
        // A = [[4, 2], [2, 3]], b = (2, 3) → x = (0, 1).
        let a = [4.0, 2.0, 2.0, 3.0];
        let ch = Cholesky::factor(&a, 2).unwrap();
        let x = ch.solve(&[2.0, 3.0]);
        assert_relative_eq!(x[0], 0.0, epsilon = 1e-14);
        assert_relative_eq!(x[1], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn inverse_matches_hand_value() {
        // A = [[2, 1], [1, 2]] → A⁻¹ = [[2/3, -1/3], [-1/3, 2/3]].
        let a = [2.0, 1.0, 1.0, 2.0];
        let inv = Cholesky::factor(&a, 2).unwrap().inverse();
        for (got, want) in inv
            .iter()
            .zip([2.0 / 3.0, -1.0 / 3.0, -1.0 / 3.0, 2.0 / 3.0])
        {
            assert_relative_eq!(*got, want, epsilon = 1e-14);
        }
    }

    #[test]
    fn singular_matrix_is_rejected() {
        // Rank-1 matrix.
        let a = [1.0, 1.0, 1.0, 1.0];
        assert!(matches!(
            Cholesky::factor(&a, 2),
            Err(Error::SingularDesign(_))
        ));
    }

    #[test]
    fn quadratic_form_hand_value() {
        let m = [2.0, 1.0, 1.0, 3.0];
        // (1,2): 1·(2+2) + 2·(1+6) = 18.
        assert_relative_eq!(quadratic_form(&m, &[1.0, 2.0]), 18.0, epsilon = 1e-14);
    }
}
