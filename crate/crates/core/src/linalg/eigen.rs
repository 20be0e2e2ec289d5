//! Eigenvalues of real square matrices.
//!
//! General matrices go through Householder reduction to upper Hessenberg
//! form followed by the Francis double-shift QR iteration. Exactly symmetric
//! inputs use cyclic Jacobi rotations instead, which keeps their spectrum real
//! by construction.

use alloc::vec;
use alloc::vec::Vec;

use super::{singular_values, DenseMatrix, LinalgError, Svd};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigenvalue {
    pub re: f64,
    pub im: f64,
}

/// Eigenvalues of `m` together with the numerical ranks of `m` and `m²`.
///
/// `rank == rank_sq` exactly when a zero eigenvalue (if any) is non-defective.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: Vec<Eigenvalue>,
    pub rank: usize,
    pub rank_sq: usize,
    /// Largest singular value of the matrix.
    pub spectral_norm: f64,
}

impl Spectrum {
    pub fn max_abs_imag(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |m, e| f64::max(m, e.im.abs()))
    }

    pub fn max_real(&self) -> f64 {
        self.eigenvalues.iter().map(|e| e.re).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn zero_is_non_defective(&self) -> bool {
        self.rank == self.rank_sq
    }
}

pub fn eig(m: &DenseMatrix) -> Result<Spectrum, LinalgError> {
    if !m.is_square() {
        return Err(LinalgError::NotSquare { rows: m.rows(), cols: m.cols() });
    }
    let eigenvalues = if m.is_symmetric(0.0) {
        eigenvalues_symmetric(m)?.into_iter().map(|re| Eigenvalue { re, im: 0.0 }).collect()
    } else {
        eigenvalues_general(m)?
    };
    let svd = Svd::compute(m)?;
    let rank = if m.rows() == 0 { 0 } else { svd.rank() };
    let rank_sq = rank_of_square(&svd, rank)?;
    Ok(Spectrum { eigenvalues, rank, rank_sq, spectral_norm: svd.sigma_max() })
}

/// Principal-angle sines at or below this count as a shared direction of
/// `range(m)` and `ker(m)`.
pub const INTERSECTION_TOL: f64 = 1e-8;

/// `rank(m²) = rank(m) − dim(range(m) ∩ ker(m))`, measured through principal
/// angles so tiny nonzero eigenvalues are not squared below the rank cutoff.
fn rank_of_square(svd: &Svd, rank: usize) -> Result<usize, LinalgError> {
    let n = svd.v.rows();
    if rank == 0 || rank == n {
        return Ok(rank);
    }
    let range = svd.u.submatrix(0..n, 0..rank);
    let kernel = svd.v.submatrix(0..n, rank..n);
    let off_range = kernel.sub(&range.matmul(&range.transpose().matmul(&kernel)));
    let shared = singular_values(&off_range)?.iter().filter(|&&s| s <= INTERSECTION_TOL).count();
    Ok(rank - shared)
}

const JACOBI_SWEEPS: usize = 100;

/// Eigenvalues of a symmetric matrix in ascending order (only the upper
/// triangle is read).
pub fn eigenvalues_symmetric(m: &DenseMatrix) -> Result<Vec<f64>, LinalgError> {
    if !m.is_square() {
        return Err(LinalgError::NotSquare { rows: m.rows(), cols: m.cols() });
    }
    let n = m.rows();
    let mut a = DenseMatrix::from_fn(n, n, |i, j| if i <= j { m[(i, j)] } else { m[(j, i)] });
    let scale = a.frobenius_norm();
    let mut done = n < 2 || scale == 0.0;
    for _ in 0..JACOBI_SWEEPS {
        if done {
            break;
        }
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[(p, q)] * a[(p, q)];
            }
        }
        if libm::sqrt(off) <= f64::EPSILON * 1e-2 * scale {
            done = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + libm::sqrt(1.0 + theta * theta));
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
            }
        }
    }
    if !done {
        // Final check: rounding can stall the off-diagonal just above the
        // threshold even though the diagonal is accurate to working precision.
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[(p, q)] * a[(p, q)];
            }
        }
        if libm::sqrt(off) > 1e-13 * scale {
            return Err(LinalgError::NoConvergence { routine: "symmetric jacobi", sweeps: JACOBI_SWEEPS });
        }
    }
    let mut vals: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    vals.sort_by(f64::total_cmp);
    Ok(vals)
}

/// Eigenvalues of a general real square matrix.
pub fn eigenvalues_general(m: &DenseMatrix) -> Result<Vec<Eigenvalue>, LinalgError> {
    if !m.is_square() {
        return Err(LinalgError::NotSquare { rows: m.rows(), cols: m.cols() });
    }
    let n = m.rows();
    let mut h: Vec<Vec<f64>> = (0..n).map(|r| m.row(r).to_vec()).collect();
    hessenberg(&mut h);
    hqr(h)
}

/// Householder similarity reduction to upper Hessenberg form, in place.
fn hessenberg(h: &mut [Vec<f64>]) {
    let n = h.len();
    if n < 3 {
        return;
    }
    let high = n - 1;
    let mut ort = vec![0.0; n];
    for m in 1..high {
        let scale: f64 = (m..=high).map(|i| h[i][m - 1].abs()).sum();
        if scale == 0.0 {
            continue;
        }
        let mut hh = 0.0;
        for i in (m..=high).rev() {
            ort[i] = h[i][m - 1] / scale;
            hh += ort[i] * ort[i];
        }
        let mut g = libm::sqrt(hh);
        if ort[m] > 0.0 {
            g = -g;
        }
        hh -= ort[m] * g;
        ort[m] -= g;

        for j in m..n {
            let mut f = 0.0;
            for i in (m..=high).rev() {
                f += ort[i] * h[i][j];
            }
            f /= hh;
            for i in m..=high {
                h[i][j] -= f * ort[i];
            }
        }
        for row in h.iter_mut() {
            let mut f = 0.0;
            for j in (m..=high).rev() {
                f += ort[j] * row[j];
            }
            f /= hh;
            for j in m..=high {
                row[j] -= f * ort[j];
            }
        }
        ort[m] *= scale;
        h[m][m - 1] = scale * g;
    }
    for (i, row) in h.iter_mut().enumerate() {
        for v in row.iter_mut().take(i.saturating_sub(1)) {
            *v = 0.0;
        }
    }
}

const QR_ITERATIONS_PER_EIGENVALUE: usize = 60;

/// Francis double-shift QR on an upper Hessenberg matrix (eigenvalues only).
fn hqr(mut h: Vec<Vec<f64>>) -> Result<Vec<Eigenvalue>, LinalgError> {
    let nn = h.len();
    let mut re = vec![0.0; nn];
    let mut im = vec![0.0; nn];
    if nn == 0 {
        return Ok(Vec::new());
    }
    let eps = f64::EPSILON;
    let mut norm = 0.0;
    for (i, row) in h.iter().enumerate() {
        for v in &row[i.saturating_sub(1)..] {
            norm += v.abs();
        }
    }

    let mut n = nn as isize - 1;
    let mut exshift = 0.0;
    let mut iter = 0usize;
    let mut total_iter = 0usize;
    let (mut p, mut q, mut r, mut s, mut z);
    let (mut x, mut y, mut w);

    while n >= 0 {
        let nu = n as usize;
        // smallest l with negligible sub-diagonal above the active block
        let mut l = nu;
        while l > 0 {
            s = h[l - 1][l - 1].abs() + h[l][l].abs();
            if s == 0.0 {
                s = norm;
            }
            if h[l][l - 1].abs() <= eps * s {
                break;
            }
            l -= 1;
        }

        if l == nu {
            re[nu] = h[nu][nu] + exshift;
            im[nu] = 0.0;
            n -= 1;
            iter = 0;
        } else if l + 1 == nu {
            w = h[nu][nu - 1] * h[nu - 1][nu];
            p = (h[nu - 1][nu - 1] - h[nu][nu]) / 2.0;
            q = p * p + w;
            z = libm::sqrt(q.abs());
            h[nu][nu] += exshift;
            h[nu - 1][nu - 1] += exshift;
            x = h[nu][nu];
            if q >= 0.0 {
                z = if p >= 0.0 { p + z } else { p - z };
                re[nu - 1] = x + z;
                re[nu] = re[nu - 1];
                if z != 0.0 {
                    re[nu] = x - w / z;
                }
                im[nu - 1] = 0.0;
                im[nu] = 0.0;
            } else {
                re[nu - 1] = x + p;
                re[nu] = x + p;
                im[nu - 1] = z;
                im[nu] = -z;
            }
            n -= 2;
            iter = 0;
        } else {
            x = h[nu][nu];
            y = 0.0;
            w = 0.0;
            if l < nu {
                y = h[nu - 1][nu - 1];
                w = h[nu][nu - 1] * h[nu - 1][nu];
            }

            // exceptional shifts
            if iter == 10 {
                exshift += x;
                for (i, row) in h.iter_mut().enumerate().take(nu + 1) {
                    row[i] -= x;
                }
                s = h[nu][nu - 1].abs() + h[nu - 1][nu - 2].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            if iter == 30 {
                s = (y - x) / 2.0;
                s = s * s + w;
                if s > 0.0 {
                    s = libm::sqrt(s);
                    if y < x {
                        s = -s;
                    }
                    s = x - w / ((y - x) / 2.0 + s);
                    for (i, row) in h.iter_mut().enumerate().take(nu + 1) {
                        row[i] -= s;
                    }
                    exshift += s;
                    x = 0.964;
                    y = x;
                    w = x;
                }
            }
            iter += 1;
            total_iter += 1;
            if total_iter > QR_ITERATIONS_PER_EIGENVALUE * nn {
                return Err(LinalgError::NoConvergence { routine: "hessenberg qr", sweeps: total_iter });
            }

            // two consecutive small sub-diagonal elements
            let mut m = nu - 2;
            loop {
                z = h[m][m];
                r = x - z;
                s = y - z;
                p = (r * s - w) / h[m + 1][m] + h[m][m + 1];
                q = h[m + 1][m + 1] - z - r - s;
                r = h[m + 2][m + 1];
                s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                if h[m][m - 1].abs() * (q.abs() + r.abs())
                    < eps * (p.abs() * (h[m - 1][m - 1].abs() + z.abs() + h[m + 1][m + 1].abs()))
                {
                    break;
                }
                m -= 1;
            }

            for i in (m + 2)..=nu {
                h[i][i - 2] = 0.0;
                if i > m + 2 {
                    h[i][i - 3] = 0.0;
                }
            }

            // double QR step on rows l..=n, columns m..=n
            let mut k = m;
            while k < nu {
                let notlast = k != nu - 1;
                if k != m {
                    p = h[k][k - 1];
                    q = h[k + 1][k - 1];
                    r = if notlast { h[k + 2][k - 1] } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x == 0.0 {
                        k += 1;
                        continue;
                    }
                    p /= x;
                    q /= x;
                    r /= x;
                }
                s = libm::sqrt(p * p + q * q + r * r);
                if p < 0.0 {
                    s = -s;
                }
                if s != 0.0 {
                    if k != m {
                        h[k][k - 1] = -s * x;
                    } else if l != m {
                        h[k][k - 1] = -h[k][k - 1];
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    z = r / s;
                    q /= p;
                    r /= p;

                    for j in k..nn {
                        p = h[k][j] + q * h[k + 1][j];
                        if notlast {
                            p += r * h[k + 2][j];
                            h[k + 2][j] -= p * z;
                        }
                        h[k][j] -= p * x;
                        h[k + 1][j] -= p * y;
                    }
                    for row in h.iter_mut().take(nu.min(k + 3) + 1) {
                        p = x * row[k] + y * row[k + 1];
                        if notlast {
                            p += z * row[k + 2];
                            row[k + 2] -= p * r;
                        }
                        row[k] -= p;
                        row[k + 1] -= p * q;
                    }
                }
                k += 1;
            }
        }
    }

    Ok(re.into_iter().zip(im).map(|(re, im)| Eigenvalue { re, im }).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};

    fn sorted_re(s: &[Eigenvalue]) -> Vec<f64> {
        let mut v: Vec<f64> = s.iter().map(|e| e.re).collect();
        v.sort_by(f64::total_cmp);
        v
    }

    #[test]
    fn diagonal_spectrum() {
        let s = eig(&DenseMatrix::diagonal(&[-1.0, -2.0])).unwrap();
        assert_eq!(sorted_re(&s.eigenvalues), [-2.0, -1.0]);
        assert_eq!((s.rank, s.rank_sq), (2, 2));
    }

    #[test]
    fn zero_matrix() {
        let s = eig(&DenseMatrix::zeros(3, 3)).unwrap();
        assert_eq!(sorted_re(&s.eigenvalues), [0.0, 0.0, 0.0]);
        assert_eq!((s.rank, s.rank_sq), (0, 0));
        // also through the general route
        let g = eigenvalues_general(&DenseMatrix::zeros(3, 3)).unwrap();
        assert!(g.iter().all(|e| e.re == 0.0 && e.im == 0.0));
    }

    #[test]
    fn nilpotent_block_is_defective() {
        let m = DenseMatrix::from_rows(&[[0.0, 1.0], [0.0, 0.0]]).unwrap();
        let s = eig(&m).unwrap();
        assert_eq!(sorted_re(&s.eigenvalues), [0.0, 0.0]);
        assert_eq!((s.rank, s.rank_sq), (1, 0));
        assert!(!s.zero_is_non_defective());
    }

    #[test]
    fn non_square_rejected() {
        assert_eq!(eig(&DenseMatrix::zeros(2, 3)), Err(LinalgError::NotSquare { rows: 2, cols: 3 }));
    }

    #[test]
    fn rotation_has_complex_pair() {
        let m = DenseMatrix::from_rows(&[[0.0, -2.0], [2.0, 0.0]]).unwrap();
        let ev = eigenvalues_general(&m).unwrap();
        let mut ims: Vec<f64> = ev.iter().map(|e| e.im).collect();
        ims.sort_by(f64::total_cmp);
        assert_abs_diff_eq!(ims[0], -2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(ims[1], 2.0, epsilon = 1e-14);
        assert!(ev.iter().all(|e| e.re.abs() < 1e-14));
    }

    #[test]
    fn companion_matrix_roots() {
        // x^3 - 6x^2 + 11x - 6 = (x-1)(x-2)(x-3)
        let m = DenseMatrix::from_rows(&[[6.0, -11.0, 6.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]).unwrap();
        let got = sorted_re(&eigenvalues_general(&m).unwrap());
        for (g, w) in got.iter().zip([1.0, 2.0, 3.0]) {
            assert_abs_diff_eq!(*g, w, epsilon = 1e-10);
        }
    }

    #[test]
    fn symmetric_routes_agree() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(21);
        for n in 1..9 {
            let g = DenseMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
            let s = g.add(&g.transpose());
            let sym = eigenvalues_symmetric(&s).unwrap();
            let gen = eigenvalues_general(&s).unwrap();
            assert!(gen.iter().all(|e| e.im.abs() < 1e-10));
            for (a, b) in sym.iter().zip(sorted_re(&gen)) {
                assert_abs_diff_eq!(*a, b, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn trace_and_determinant_preserved() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(8);
        for n in 2..10 {
            let m = DenseMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
            let ev = eigenvalues_general(&m).unwrap();
            let trace: f64 = (0..n).map(|i| m[(i, i)]).sum();
            let sum_re: f64 = ev.iter().map(|e| e.re).sum();
            let sum_im: f64 = ev.iter().map(|e| e.im).sum();
            assert_abs_diff_eq!(trace, sum_re, epsilon = 1e-11);
            assert_abs_diff_eq!(sum_im, 0.0, epsilon = 1e-11);
        }
    }
}
