use alloc::vec::Vec;

use super::{norm2, DenseMatrix, DenseVector, LinalgError};

/// Singular values below `RANK_RELATIVE_TOL * σ_max` count as zero.
pub const RANK_RELATIVE_TOL: f64 = 1e-10;

const MAX_SWEEPS: usize = 80;

/// Thin SVD `A = U · diag(σ) · Vᵀ` with `k = min(rows, cols)` triplets.
///
/// Singular values are sorted in decreasing order. Columns of `U` belonging
/// to zero singular values are zero rather than completed to a basis.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: DenseMatrix,
    pub sigma: Vec<f64>,
    pub v: DenseMatrix,
}

impl Svd {
    /// One-sided (Hestenes) Jacobi. Works on `Aᵀ` when `A` is wide.
    pub fn compute(a: &DenseMatrix) -> Result<Self, LinalgError> {
        if a.rows() >= a.cols() {
            one_sided_jacobi(a)
        } else {
            let t = one_sided_jacobi(&a.transpose())?;
            Ok(Svd { u: t.v, sigma: t.sigma, v: t.u })
        }
    }

    pub fn sigma_max(&self) -> f64 {
        self.sigma.first().copied().unwrap_or(0.0)
    }

    pub fn rank(&self) -> usize {
        let cutoff = RANK_RELATIVE_TOL * self.sigma_max();
        self.sigma.iter().filter(|&&s| s > cutoff && s > 0.0).count()
    }
}

fn one_sided_jacobi(a: &DenseMatrix) -> Result<Svd, LinalgError> {
    let (m, n) = (a.rows(), a.cols());
    // column-major working copies
    let mut u: Vec<Vec<f64>> = (0..n).map(|c| (0..m).map(|r| a[(r, c)]).collect()).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|c| (0..n).map(|r| if r == c { 1.0 } else { 0.0 }).collect())
        .collect();

    let eps = f64::EPSILON;
    let tol = eps * libm::sqrt(m.max(1) as f64);
    // columns this small are rounding noise and never orthogonalize cleanly
    let frob = a.frobenius_norm();
    let floor = (eps * frob) * (eps * frob);
    let mut converged = n < 2;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let (alpha, beta, gamma) = {
                    let (cp, cq) = (&u[p], &u[q]);
                    let mut alpha = 0.0;
                    let mut beta = 0.0;
                    let mut gamma = 0.0;
                    for k in 0..m {
                        alpha += cp[k] * cp[k];
                        beta += cq[k] * cq[k];
                        gamma += cp[k] * cq[k];
                    }
                    (alpha, beta, gamma)
                };
                if gamma == 0.0 || alpha <= floor || beta <= floor || gamma.abs() <= tol * libm::sqrt(alpha * beta) {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + libm::sqrt(1.0 + zeta * zeta));
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = c * t;
                rotate(&mut u, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
        converged = !rotated;
    }
    if !converged {
        return Err(LinalgError::NoConvergence { routine: "jacobi svd", sweeps: MAX_SWEEPS });
    }

    let mut triplets: Vec<(f64, usize)> = u.iter().enumerate().map(|(i, col)| (norm2(col), i)).collect();
    triplets.sort_by(|x, y| y.0.total_cmp(&x.0));

    let mut um = DenseMatrix::zeros(m, n);
    let mut vm = DenseMatrix::zeros(n, n);
    let mut sigma = Vec::with_capacity(n);
    for (out, &(s, idx)) in triplets.iter().enumerate() {
        sigma.push(s);
        for r in 0..m {
            um[(r, out)] = if s > 0.0 { u[idx][r] / s } else { 0.0 };
        }
        for r in 0..n {
            vm[(r, out)] = v[idx][r];
        }
    }
    Ok(Svd { u: um, sigma, v: vm })
}

fn rotate(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (lo, hi) = cols.split_at_mut(q);
    let (cp, cq) = (&mut lo[p], &mut hi[0]);
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let t = *x;
        *x = c * t - s * *y;
        *y = s * t + c * *y;
    }
}

/// Singular values in decreasing order.
pub fn singular_values(a: &DenseMatrix) -> Result<Vec<f64>, LinalgError> {
    Ok(Svd::compute(a)?.sigma)
}

/// Number of singular values above `RANK_RELATIVE_TOL · σ_max`.
pub fn numerical_rank(a: &DenseMatrix) -> Result<usize, LinalgError> {
    if a.rows() == 0 || a.cols() == 0 {
        return Ok(0);
    }
    Ok(Svd::compute(a)?.rank())
}

/// Minimum-norm minimizer of `‖a·x − b‖₂` through the truncated pseudoinverse.
pub fn solve_least_squares(a: &DenseMatrix, b: &DenseVector) -> Result<DenseVector, LinalgError> {
    if a.rows() != b.dim() {
        return Err(LinalgError::DimensionMismatch { expected: a.rows(), found: b.dim() });
    }
    if a.cols() == 0 {
        return Ok(DenseVector::zeros(0));
    }
    if a.rows() == 0 {
        return Ok(DenseVector::zeros(a.cols()));
    }
    let svd = Svd::compute(a)?;
    let cutoff = RANK_RELATIVE_TOL * svd.sigma_max();
    let mut x = DenseVector::zeros(a.cols());
    for (k, &s) in svd.sigma.iter().enumerate() {
        if s <= cutoff || s == 0.0 {
            break;
        }
        let coef = (0..a.rows()).map(|r| svd.u[(r, k)] * b[r]).sum::<f64>() / s;
        for r in 0..a.cols() {
            x[r] += coef * svd.v[(r, k)];
        }
    }
    Ok(x)
}
