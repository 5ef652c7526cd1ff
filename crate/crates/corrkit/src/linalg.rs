//! Small dense linear algebra on flat row-major buffers: minimum-norm
//! least squares through one-sided Jacobi SVD, and Cholesky factorization
//! for symmetric positive-definite solves. Problem sizes here are tiny
//! (tens of columns), so clarity and numerical robustness win over speed.

use crate::error::{CorrError, Result};

/// Least-squares solution with diagnostic rank information.
#[derive(Debug, Clone)]
pub struct Lstsq {
    pub x: Vec<f64>,
    pub rank: usize,
    pub singular_values: Vec<f64>,
}

/// Minimum-norm least squares for A x = y with A given row-major,
/// n_rows x n_cols. Columns are rescaled to unit infinity-norm before the
/// SVD so regressors of wildly different magnitude coexist. Singular
/// values below rank_tol times the largest count as zero.
pub fn lstsq(rows: &[f64], n_rows: usize, n_cols: usize, y: &[f64], rank_tol: f64) -> Result<Lstsq> {
    if rows.len() != n_rows * n_cols || y.len() != n_rows || n_rows == 0 || n_cols == 0 {
        return Err(CorrError::Invalid(format!(
            "lstsq shape mismatch: {} entries for {n_rows}x{n_cols}, {} targets",
            rows.len(),
            y.len()
        )));
    }

    // column scaling
    let mut scale = vec![0.0f64; n_cols];
    for r in 0..n_rows {
        for c in 0..n_cols {
            scale[c] = scale[c].max(rows[r * n_cols + c].abs());
        }
    }
    for s in &mut scale {
        if *s == 0.0 {
            *s = 1.0;
        }
    }

    // column-major scaled copy
    let mut a = vec![0.0f64; n_rows * n_cols];
    for r in 0..n_rows {
        for c in 0..n_cols {
            a[c * n_rows + r] = rows[r * n_cols + c] / scale[c];
        }
    }

    let (u, sigma, v) = svd_one_sided(&mut a, n_rows, n_cols);

    let smax = sigma.iter().cloned().fold(0.0f64, f64::max);
    let tol = smax * rank_tol;
    let rank = sigma.iter().filter(|&&s| s > tol).count();

    // x_scaled = V diag(1/sigma) U^T y over the retained spectrum
    let mut uty = vec![0.0f64; n_cols];
    for (j, coef) in uty.iter_mut().enumerate() {
        if sigma[j] > tol {
            let col = &u[j * n_rows..(j + 1) * n_rows];
            let dot: f64 = col.iter().zip(y).map(|(a, b)| a * b).sum();
            *coef = dot / sigma[j];
        }
    }
    let mut x = vec![0.0f64; n_cols];
    for i in 0..n_cols {
        let mut acc = 0.0;
        for (j, &coef) in uty.iter().enumerate() {
            acc += v[j * n_cols + i] * coef;
        }
        x[i] = acc / scale[i];
    }

    Ok(Lstsq {
        x,
        rank,
        singular_values: sigma,
    })
}

/// One-sided Jacobi SVD of a column-major n x m matrix (destroyed in
/// place). Returns (U columns n x m, singular values m, V column-major
/// m x m) with A = U diag(sigma) V^T. Zero singular values leave a zero
/// U column.
fn svd_one_sided(a: &mut [f64], n: usize, m: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut v = vec![0.0f64; m * m];
    for i in 0..m {
        v[i * m + i] = 1.0;
    }
    let eps = f64::EPSILON;
    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for p in 0..m {
            for q in (p + 1)..m {
                let (mut alpha, mut beta, mut g) = (0.0f64, 0.0f64, 0.0f64);
                for i in 0..n {
                    let ap = a[p * n + i];
                    let aq = a[q * n + i];
                    alpha += ap * ap;
                    beta += aq * aq;
                    g += ap * aq;
                }
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                off = off.max(g.abs() / (alpha * beta).sqrt());
                if g.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..n {
                    let ap = a[p * n + i];
                    let aq = a[q * n + i];
                    a[p * n + i] = c * ap - s * aq;
                    a[q * n + i] = s * ap + c * aq;
                }
                for i in 0..m {
                    let vp = v[p * m + i];
                    let vq = v[q * m + i];
                    v[p * m + i] = c * vp - s * vq;
                    v[q * m + i] = s * vp + c * vq;
                }
            }
        }
        if off < 1e-15 {
            break;
        }
    }
    let mut sigma = vec![0.0f64; m];
    let mut u = vec![0.0f64; n * m];
    for j in 0..m {
        let col = &a[j * n..(j + 1) * n];
        let norm = col.iter().map(|x| x * x).sum::<f64>().sqrt();
        sigma[j] = norm;
        if norm > 0.0 {
            for i in 0..n {
                u[j * n + i] = a[j * n + i] / norm;
            }
        }
    }
    (u, sigma, v)
}

/// Cholesky factorization of a symmetric positive-definite matrix,
/// row-major dim x dim.
pub struct Cholesky {
    l: Vec<f64>,
    dim: usize,
}

impl Cholesky {
    pub fn new(a: &[f64], dim: usize) -> Result<Cholesky> {
        if a.len() != dim * dim {
            return Err(CorrError::Invalid(format!(
                "Cholesky needs {dim}x{dim} entries, got {}",
                a.len()
            )));
        }
        let mut l = vec![0.0f64; dim * dim];
        for i in 0..dim {
            for j in 0..=i {
                let mut sum = a[i * dim + j];
                for k in 0..j {
                    sum -= l[i * dim + k] * l[j * dim + k];
                }
                if i == j {
                    if sum <= 0.0 {
                        return Err(CorrError::FitDegenerate(format!(
                            "matrix not positive definite at pivot {i} (value {sum:.3e})"
                        )));
                    }
                    l[i * dim + j] = sum.sqrt();
                } else {
                    l[i * dim + j] = sum / l[j * dim + j];
                }
            }
        }
        Ok(Cholesky { l, dim })
    }

    /// Solve A x = b using the stored factor.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim;
        let mut y = b.to_vec();
        for i in 0..n {
            for k in 0..i {
                y[i] -= self.l[i * n + k] * y[k];
            }
            y[i] /= self.l[i * n + i];
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                y[i] -= self.l[k * n + i] * y[k];
            }
            y[i] /= self.l[i * n + i];
        }
        y
    }
}

/// y = A x for row-major A (n_rows x n_cols).
pub fn matvec(rows: &[f64], n_rows: usize, n_cols: usize, x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0f64; n_rows];
    for r in 0..n_rows {
        let row = &rows[r * n_cols..(r + 1) * n_cols];
        y[r] = row.iter().zip(x).map(|(a, b)| a * b).sum();
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exact_overdetermined_fit() {
        // y = 2 a + 3 b sampled without noise
        let rows = [1.0, 1.0, 2.0, 1.0, 3.0, 0.5, 4.0, -1.0];
        let y = [5.0, 7.0, 7.5, 5.0];
        let sol = lstsq(&rows, 4, 2, &y, 1e-12).unwrap();
        assert_eq!(sol.rank, 2);
        assert_relative_eq!(sol.x[0], 2.0, max_relative = 1e-12);
        assert_relative_eq!(sol.x[1], 3.0, max_relative = 1e-12);
    }

    #[test]
    fn residual_minimizing_fit() {
        // classic: fit constant to [0, 1] -> mean 0.5
        let rows = [1.0, 1.0];
        let y = [0.0, 1.0];
        let sol = lstsq(&rows, 2, 1, &y, 1e-12).unwrap();
        assert_relative_eq!(sol.x[0], 0.5, max_relative = 1e-12);
    }

    #[test]
    fn minimum_norm_for_underdetermined() {
        // x + y = 2 has minimum-norm solution (1, 1)
        let rows = [1.0, 1.0];
        let y = [2.0];
        let sol = lstsq(&rows, 1, 2, &y, 1e-12).unwrap();
        assert_eq!(sol.rank, 1);
        assert_relative_eq!(sol.x[0], 1.0, max_relative = 1e-10);
        assert_relative_eq!(sol.x[1], 1.0, max_relative = 1e-10);
    }

    #[test]
    fn detects_rank_deficiency() {
        // second column is twice the first
        let rows = [1.0, 2.0, 2.0, 4.0, 3.0, 6.0];
        let y = [1.0, 2.0, 3.0];
        let sol = lstsq(&rows, 3, 2, &y, 1e-10).unwrap();
        assert_eq!(sol.rank, 1);
    }

    #[test]
    fn handles_badly_scaled_columns() {
        // columns 12 orders of magnitude apart, both carrying real signal
        let rows = [
            1.0e6, 2.0e-6, //
            2.0e6, 1.0e-6, //
            -1.0e6, 4.0e-6, //
            5.0e5, -3.0e-6,
        ];
        let x_true = [2.0e-6, 7.0e6];
        let y = matvec(&rows, 4, 2, &x_true);
        let sol = lstsq(&rows, 4, 2, &y, 1e-12).unwrap();
        assert_relative_eq!(sol.x[0], x_true[0], max_relative = 1e-9);
        assert_relative_eq!(sol.x[1], x_true[1], max_relative = 1e-9);
    }

    #[test]
    fn cholesky_solves_spd_system() {
        // A = [[4,2],[2,3]], b = [8, 7] -> x = (1.3, 1.4666...)
        let a = [4.0, 2.0, 2.0, 3.0];
        let chol = Cholesky::new(&a, 2).unwrap();
        let x = chol.solve(&[8.0, 7.0]);
        assert_relative_eq!(4.0 * x[0] + 2.0 * x[1], 8.0, max_relative = 1e-12);
        assert_relative_eq!(2.0 * x[0] + 3.0 * x[1], 7.0, max_relative = 1e-12);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = [1.0, 2.0, 2.0, 1.0]; // eigenvalues 3, -1
        assert!(Cholesky::new(&a, 2).is_err());
    }

    #[test]
    fn random_recovery_well_conditioned() {
        // deterministic pseudo-random matrix, solution recovered to 1e-9
        let mut state = 0x12345678u64;
        let mut rnd = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 33) as f64 / (1u64 << 31) as f64) - 1.0
        };
        for _ in 0..20 {
            let (n, m) = (12, 5);
            let mut rows = vec![0.0; n * m];
            for v in &mut rows {
                *v = rnd();
            }
            for i in 0..m {
                rows[i * m + i] += 3.0; // keep it comfortably full-rank
            }
            let x_true: Vec<f64> = (0..m).map(|_| rnd()).collect();
            let y = matvec(&rows, n, m, &x_true);
            let sol = lstsq(&rows, n, m, &y, 1e-12).unwrap();
            assert_eq!(sol.rank, m);
            for (a, b) in sol.x.iter().zip(&x_true) {
                assert_relative_eq!(a, b, max_relative = 1e-8, epsilon = 1e-10);
            }
        }
    }
}
