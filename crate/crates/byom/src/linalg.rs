//! SVD kernels: Householder QR reduction plus a one-sided Jacobi sweep on
//! the small core, with 64-bit accumulation throughout and 32-bit results.
//!
//! The product kernel factors `a·bᵀ` without ever materializing the full
//! `d_out × d_in` matrix: thin QR of each factor reduces the problem to an
//! SVD of the small `r × r` core `R_a · R_bᵀ`.

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Convergence threshold for normalized off-diagonal mass in Jacobi sweeps.
const JACOBI_TOL: f64 = 1e-12;
/// Sweep cap before the kernel reports failure.
const JACOBI_MAX_SWEEPS: usize = 60;
/// Singular values below `s_max * RANK_TOL` are treated as exact zeros.
const RANK_TOL: f64 = 1e-12;

/// Thin SVD factors: `u · diag(s) · vᵀ` reconstructs the input.
#[derive(Debug, Clone)]
pub struct SvdResult {
    /// Left singular vectors, `n × k`, orthonormal columns.
    pub u: Tensor,
    /// Singular values, non-negative, descending.
    pub s: Vec<f32>,
    /// Right singular vectors, `m × k`, orthonormal columns.
    pub v: Tensor,
}

impl SvdResult {
    /// Number of retained singular triples.
    pub fn rank_bound(&self) -> usize {
        self.s.len()
    }

    /// Materializes `u · diag(s) · vᵀ` as a dense tensor.
    pub fn reconstruction(&self) -> Tensor {
        let (n, k) = (self.u.shape()[0], self.u.shape()[1]);
        let m = self.v.shape()[0];
        let u = self.u.data();
        let v = self.v.data();
        let mut out = vec![0.0f32; n * m];
        for (t, &sv) in self.s.iter().enumerate() {
            if sv == 0.0 {
                continue;
            }
            let sv = sv as f64;
            for i in 0..n {
                let ui = u[i * k + t] as f64 * sv;
                for j in 0..m {
                    let acc = out[i * m + j] as f64 + ui * v[j * k + t] as f64;
                    out[i * m + j] = acc as f32;
                }
            }
        }
        Tensor::from_parts_unchecked(vec![n, m], out)
    }
}

/// Internal row-major `f64` matrix.
#[derive(Debug, Clone)]
pub(crate) struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_tensor(t: &Tensor) -> Result<Self> {
        let (rows, cols) = t.dims2()?;
        Ok(Self {
            rows,
            cols,
            data: t.data().iter().map(|&v| v as f64).collect(),
        })
    }

    pub fn to_tensor(&self) -> Tensor {
        Tensor::from_parts_unchecked(
            vec![self.rows, self.cols],
            self.data.iter().map(|&v| v as f32).collect(),
        )
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn transpose(&self) -> Mat {
        let mut out = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.at(i, j));
            }
        }
        out
    }

    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows);
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.at(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.at(k, j);
                }
            }
        }
        out
    }

    /// Keeps only the first `k` columns.
    pub fn take_cols(&self, k: usize) -> Mat {
        let mut out = Mat::zeros(self.rows, k);
        for i in 0..self.rows {
            for j in 0..k {
                out.set(i, j, self.at(i, j));
            }
        }
        out
    }
}

/// Householder thin QR: `a = q · r` with `q` having `min(n, m)` orthonormal
/// columns and `r` upper-trapezoidal.
pub(crate) fn qr_thin(a: &Mat) -> (Mat, Mat) {
    let (n, m) = (a.rows, a.cols);
    let k = n.min(m);
    let mut work = a.clone();
    // Reflector vectors, one per factored column.
    let mut reflectors: Vec<Vec<f64>> = Vec::with_capacity(k);

    for j in 0..k {
        let mut v: Vec<f64> = (j..n).map(|i| work.at(i, j)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            reflectors.push(Vec::new());
            continue;
        }
        let alpha = if v[0] >= 0.0 { -norm } else { norm };
        v[0] -= alpha;
        let vnorm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            reflectors.push(Vec::new());
            continue;
        }
        for x in &mut v {
            *x /= vnorm;
        }
        // Apply H = I - 2vvᵀ to the trailing block.
        for c in j..m {
            let dot: f64 = v.iter().enumerate().map(|(i, &vi)| vi * work.at(j + i, c)).sum();
            for (i, &vi) in v.iter().enumerate() {
                let cur = work.at(j + i, c);
                work.set(j + i, c, cur - 2.0 * vi * dot);
            }
        }
        reflectors.push(v);
    }

    let mut r = Mat::zeros(k, m);
    for i in 0..k {
        for j in i..m {
            r.set(i, j, work.at(i, j));
        }
    }

    // Accumulate the thin Q by applying reflectors to the identity block.
    let mut q = Mat::zeros(n, k);
    for i in 0..k {
        q.set(i, i, 1.0);
    }
    for j in (0..k).rev() {
        let v = &reflectors[j];
        if v.is_empty() {
            continue;
        }
        for c in 0..k {
            let dot: f64 = v.iter().enumerate().map(|(i, &vi)| vi * q.at(j + i, c)).sum();
            for (i, &vi) in v.iter().enumerate() {
                let cur = q.at(j + i, c);
                q.set(j + i, c, cur - 2.0 * vi * dot);
            }
        }
    }
    (q, r)
}

/// One-sided Jacobi on `w` (`n × m`, `n >= m`): returns `(u, s, v)` with
/// `w = u · diag(s) · vᵀ`, `s` unsorted, zero columns not yet completed.
fn jacobi_one_sided(w: &mut Mat) -> Result<(Mat, Vec<f64>)> {
    let m = w.cols;
    let n = w.rows;
    let mut v = Mat::identity(m);
    let mut converged = m < 2;
    for _sweep in 0..JACOBI_MAX_SWEEPS {
        if m < 2 {
            break;
        }
        converged = true;
        for i in 0..m - 1 {
            for j in i + 1..m {
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = 0.0;
                for k in 0..n {
                    let wi = w.at(k, i);
                    let wj = w.at(k, j);
                    alpha += wi * wi;
                    beta += wj * wj;
                    gamma += wi * wj;
                }
                if gamma == 0.0 || gamma.abs() <= JACOBI_TOL * (alpha * beta).sqrt() {
                    continue;
                }
                converged = false;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for k in 0..n {
                    let wi = w.at(k, i);
                    let wj = w.at(k, j);
                    w.set(k, i, c * wi - s * wj);
                    w.set(k, j, s * wi + c * wj);
                }
                for k in 0..m {
                    let vi = v.at(k, i);
                    let vj = v.at(k, j);
                    v.set(k, i, c * vi - s * vj);
                    v.set(k, j, s * vi + c * vj);
                }
            }
        }
        if converged {
            break;
        }
    }
    if !converged {
        return Err(Error::ConvergenceFailure {
            sweeps: JACOBI_MAX_SWEEPS,
        });
    }
    let s: Vec<f64> = (0..m)
        .map(|j| (0..n).map(|k| w.at(k, j).powi(2)).sum::<f64>().sqrt())
        .collect();
    Ok((v, s))
}

/// Replaces near-zero columns of `u` with an orthonormal completion built
/// from canonical basis vectors, lowest index first.
fn complete_basis(u: &mut Mat, live: &[bool]) {
    let (n, k) = (u.rows, u.cols);
    for j in 0..k {
        if live[j] {
            continue;
        }
        'candidates: for e in 0..n {
            let mut r: Vec<f64> = (0..n).map(|i| if i == e { 1.0 } else { 0.0 }).collect();
            for c in 0..k {
                if c == j || (!live[c] && c > j) {
                    continue;
                }
                let dot: f64 = (0..n).map(|i| u.at(i, c) * r[i]).sum();
                for (i, ri) in r.iter_mut().enumerate() {
                    *ri -= dot * u.at(i, c);
                }
            }
            let norm = r.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.5 {
                for (i, ri) in r.iter().enumerate() {
                    u.set(i, j, ri / norm);
                }
                break 'candidates;
            }
        }
    }
}

/// Core f64 thin SVD for `n >= m` inputs. No sign convention, sorted
/// descending, zero columns basis-completed.
fn svd_tall(a: &Mat) -> Result<(Mat, Vec<f64>, Mat)> {
    debug_assert!(a.rows >= a.cols);
    let (q, r) = qr_thin(a);
    let mut w = r;
    let (v, s_raw) = jacobi_one_sided(&mut w)?;
    let m = w.cols;

    // Sort triples by singular value, descending; ties keep sweep order.
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| s_raw[j].total_cmp(&s_raw[i]).then(i.cmp(&j)));

    let s_max = s_raw.iter().cloned().fold(0.0f64, f64::max);
    let tol = s_max * RANK_TOL;

    let mut u_core = Mat::zeros(m, m);
    let mut v_sorted = Mat::zeros(m, m);
    let mut s = vec![0.0f64; m];
    let mut live = vec![false; m];
    for (dst, &src) in order.iter().enumerate() {
        let sv = s_raw[src];
        if sv > tol && sv > 0.0 {
            s[dst] = sv;
            live[dst] = true;
            for i in 0..m {
                u_core.set(i, dst, w.at(i, src) / sv);
            }
        }
        for i in 0..m {
            v_sorted.set(i, dst, v.at(i, src));
        }
    }
    complete_basis(&mut u_core, &live);
    let u = q.matmul(&u_core);
    Ok((u, s, v_sorted))
}

/// General f64 thin SVD with `k = min(rows, cols)`.
pub(crate) fn svd_f64(a: &Mat) -> Result<(Mat, Vec<f64>, Mat)> {
    if a.rows >= a.cols {
        svd_tall(a)
    } else {
        let (u_t, s, v_t) = svd_tall(&a.transpose())?;
        Ok((v_t, s, u_t))
    }
}

/// Flips factor column signs so the first nonzero entry of each `u` column
/// is non-negative; `v` columns flip in lockstep.
fn apply_sign_convention(u: &mut Mat, v: &mut Mat) {
    for j in 0..u.cols {
        let mut sign = 0.0;
        for i in 0..u.rows {
            let x = u.at(i, j);
            if x != 0.0 {
                sign = x.signum();
                break;
            }
        }
        if sign < 0.0 {
            for i in 0..u.rows {
                let x = u.at(i, j);
                u.set(i, j, -x);
            }
            for i in 0..v.rows {
                let x = v.at(i, j);
                v.set(i, j, -x);
            }
        }
    }
}

fn finish(mut u: Mat, s: Vec<f64>, mut v: Mat) -> SvdResult {
    apply_sign_convention(&mut u, &mut v);
    SvdResult {
        u: u.to_tensor(),
        s: s.iter().map(|&x| x as f32).collect(),
        v: v.to_tensor(),
    }
}

/// Full thin SVD of a 2-D tensor, `k = min(rows, cols)`.
///
/// Deterministic for a fixed input: descending singular values, and the
/// first nonzero entry of each left singular vector is non-negative.
pub fn svd_thin(a: &Tensor) -> Result<SvdResult> {
    let m = Mat::from_tensor(a)?;
    let (u, s, v) = svd_f64(&m)?;
    Ok(finish(u, s, v))
}

/// Top-`q` SVD of `a · bᵀ` computed from the factors alone.
///
/// `a` is `d_out × r`, `b` is `d_in × r`; the dense product is never formed.
/// Thin QR of each factor reduces the problem to the `r × r` core
/// `R_a · R_bᵀ`, whose SVD maps back through the orthonormal Q factors.
pub fn truncated_svd_of_product(a: &Tensor, b: &Tensor, q: usize) -> Result<SvdResult> {
    let (d_out, ra) = a.dims2()?;
    let (d_in, rb) = b.dims2()?;
    if ra != rb {
        return Err(Error::InnerDimMismatch { left: ra, right: rb });
    }
    let max_rank = ra.min(d_out).min(d_in);
    if q == 0 || q > ra {
        return Err(Error::RankOutOfRange { rank: q, max: ra });
    }
    if q > max_rank {
        // A rank-q triple needs q orthonormal columns on both sides.
        return Err(Error::RankOutOfRange { rank: q, max: max_rank });
    }

    let (qa, ra_mat) = qr_thin(&Mat::from_tensor(a)?);
    let (qb, rb_mat) = qr_thin(&Mat::from_tensor(b)?);
    let core = ra_mat.matmul(&rb_mat.transpose());
    let (uc, s, vc) = svd_f64(&core)?;

    let u = qa.matmul(&uc.take_cols(q));
    let v = qb.matmul(&vc.take_cols(q));
    let s: Vec<f64> = s.into_iter().take(q).collect();
    Ok(finish(u, s, v))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tensor2(rows: usize, cols: usize, vals: &[f32]) -> Tensor {
        Tensor::matrix(rows, cols, vals.to_vec()).unwrap()
    }

    fn frob(t: &Tensor) -> f64 {
        t.data().iter().map(|&v| (v as f64).powi(2)).sum::<f64>().sqrt()
    }

    fn frob_diff(a: &Tensor, b: &Tensor) -> f64 {
        a.data()
            .iter()
            .zip(b.data())
            .map(|(&x, &y)| (x as f64 - y as f64).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    fn check_orthonormal(t: &Tensor, tol: f64) {
        let (n, k) = t.dims2().unwrap();
        let d = t.data();
        for c1 in 0..k {
            for c2 in 0..k {
                let dot: f64 = (0..n).map(|i| d[i * k + c1] as f64 * d[i * k + c2] as f64).sum();
                let expect = if c1 == c2 { 1.0 } else { 0.0 };
                assert!(
                    (dot - expect).abs() < tol,
                    "col {c1}·col {c2} = {dot}, expected {expect}"
                );
            }
        }
    }

    /// Tiny deterministic generator for test matrices.
    struct Lcg(u64);
    impl Lcg {
        fn next_f32(&mut self) -> f32 {
            self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((self.0 >> 40) as f32 / (1u64 << 24) as f32) * 2.0 - 1.0
        }
        fn mat(&mut self, r: usize, c: usize) -> Tensor {
            let data: Vec<f32> = (0..r * c).map(|_| self.next_f32()).collect();
            Tensor::matrix(r, c, data).unwrap()
        }
    }

    /// Classical two-sided Jacobi eigenvalue iteration for symmetric
    /// matrices; independent oracle for singular values.
    fn symmetric_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
        let n = a.len();
        for _ in 0..200 {
            let mut off = 0.0;
            for i in 0..n {
                for j in i + 1..n {
                    off += a[i][j] * a[i][j];
                }
            }
            if off < 1e-28 {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    if a[p][q].abs() < 1e-300 {
                        continue;
                    }
                    let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                    let t = theta.signum() / (theta.abs() + (1.0 + theta * theta).sqrt());
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = c * t;
                    for k in 0..n {
                        let akp = a[k][p];
                        let akq = a[k][q];
                        a[k][p] = c * akp - s * akq;
                        a[k][q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[p][k];
                        let aqk = a[q][k];
                        a[p][k] = c * apk - s * aqk;
                        a[q][k] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut eig: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
        eig.sort_by(|x, y| y.total_cmp(x));
        eig
    }

    #[test]
    fn svd_identity() {
        let a = tensor2(3, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        let r = svd_thin(&a).unwrap();
        assert_eq!(r.s, vec![1.0, 1.0, 1.0]);
        assert!(frob_diff(&r.reconstruction(), &a) < 1e-6);
    }

    #[test]
    fn svd_diagonal() {
        let a = tensor2(3, 3, &[3.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 1.0]);
        let r = svd_thin(&a).unwrap();
        assert_eq!(r.s, vec![3.0, 2.0, 1.0]);
        // u and v are the same permuted identity under the sign convention.
        for (i, expect) in [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0].iter().enumerate() {
            assert!((r.u.data()[i] - expect).abs() < 1e-6);
            assert!((r.v.data()[i] - expect).abs() < 1e-6);
        }
    }

    #[test]
    fn svd_rank_one() {
        let a = tensor2(2, 2, &[1.0, 1.0, 0.0, 0.0]);
        let r = svd_thin(&a).unwrap();
        assert!((r.s[0] - 2f32.sqrt()).abs() < 1e-6);
        assert_eq!(r.s[1], 0.0);
        check_orthonormal(&r.u, 1e-6);
        check_orthonormal(&r.v, 1e-6);
        assert!(frob_diff(&r.reconstruction(), &a) < 1e-6);
    }

    #[test]
    fn svd_rejects_non_matrix() {
        let t = Tensor::vector(vec![1.0, 2.0]).unwrap();
        assert!(matches!(svd_thin(&t), Err(Error::NotAMatrix(_))));
    }

    #[test]
    fn svd_random_shapes_reconstruct_and_orthonormal() {
        let mut rng = Lcg(7);
        for &(n, m) in &[(1usize, 1usize), (5, 3), (3, 5), (8, 8), (16, 2), (2, 16)] {
            let a = rng.mat(n, m);
            let r = svd_thin(&a).unwrap();
            let k = n.min(m);
            assert_eq!(r.u.shape(), &[n, k]);
            assert_eq!(r.v.shape(), &[m, k]);
            check_orthonormal(&r.u, 1e-6);
            check_orthonormal(&r.v, 1e-6);
            for w in r.s.windows(2) {
                assert!(w[0] >= w[1]);
            }
            let err = frob_diff(&r.reconstruction(), &a) / frob(&a).max(1e-30);
            assert!(err < 1e-5, "({n},{m}) reconstruction error {err}");
        }
    }

    #[test]
    fn svd_values_match_gram_eigenvalues() {
        let mut rng = Lcg(21);
        for &(n, m) in &[(4usize, 4usize), (6, 3), (5, 5)] {
            let a = rng.mat(n, m);
            let r = svd_thin(&a).unwrap();
            // Gram matrix aᵀa in f64.
            let d = a.data();
            let mut gram = vec![vec![0.0f64; m]; m];
            for i in 0..m {
                for j in 0..m {
                    gram[i][j] = (0..n).map(|k| d[k * m + i] as f64 * d[k * m + j] as f64).sum();
                }
            }
            let eig = symmetric_eigenvalues(gram);
            for (sv, ev) in r.s.iter().zip(eig.iter()) {
                let expect = ev.max(0.0).sqrt();
                assert!(
                    (*sv as f64 - expect).abs() <= 1e-5 * expect.max(1e-6),
                    "sv {sv} vs sqrt-eig {expect}"
                );
            }
        }
    }

    #[test]
    fn svd_is_deterministic() {
        let mut rng = Lcg(3);
        let a = rng.mat(7, 5);
        let r1 = svd_thin(&a).unwrap();
        let r2 = svd_thin(&a).unwrap();
        assert_eq!(r1.u.data(), r2.u.data());
        assert_eq!(r1.s, r2.s);
        assert_eq!(r1.v.data(), r2.v.data());
    }

    #[test]
    fn product_svd_hand_case() {
        let a = tensor2(2, 1, &[1.0, 0.0]);
        let b = tensor2(2, 1, &[2.0, 0.0]);
        let r = truncated_svd_of_product(&a, &b, 1).unwrap();
        assert!((r.s[0] - 2.0).abs() < 1e-6);
        let rec = r.reconstruction();
        let expect = tensor2(2, 2, &[2.0, 0.0, 0.0, 0.0]);
        assert!(frob_diff(&rec, &expect) < 1e-6);
    }

    #[test]
    fn product_svd_full_rank_is_lossless() {
        let mut rng = Lcg(11);
        let a = rng.mat(8, 3);
        let b = rng.mat(6, 3);
        let r = truncated_svd_of_product(&a, &b, 3).unwrap();
        // Dense product oracle.
        let mut dense = vec![0.0f32; 8 * 6];
        for i in 0..8 {
            for j in 0..6 {
                let mut acc = 0.0f64;
                for k in 0..3 {
                    acc += a.data()[i * 3 + k] as f64 * b.data()[j * 3 + k] as f64;
                }
                dense[i * 6 + j] = acc as f32;
            }
        }
        let dense = tensor2(8, 6, &dense);
        let err = frob_diff(&r.reconstruction(), &dense) / frob(&dense).max(1e-30);
        assert!(err < 1e-5, "lossless truncation error {err}");
    }

    #[test]
    fn product_svd_matches_materialized_oracle() {
        let mut rng = Lcg(13);
        for q in 1..=2usize {
            let a = rng.mat(8, 3);
            let b = rng.mat(8, 3);
            let fast = truncated_svd_of_product(&a, &b, q).unwrap();
            // Materialize, run the full SVD, truncate.
            let mut dense = vec![0.0f32; 64];
            for i in 0..8 {
                for j in 0..8 {
                    let mut acc = 0.0f64;
                    for k in 0..3 {
                        acc += a.data()[i * 3 + k] as f64 * b.data()[j * 3 + k] as f64;
                    }
                    dense[i * 8 + j] = acc as f32;
                }
            }
            let dense = tensor2(8, 8, &dense);
            let full = svd_thin(&dense).unwrap();
            let err_fast = frob_diff(&fast.reconstruction(), &dense);
            let mut trunc = full.clone();
            trunc.s.truncate(q);
            let (n, k) = trunc.u.dims2().unwrap();
            let u_cut: Vec<f32> = (0..n)
                .flat_map(|i| (0..q).map(move |j| (i, j)))
                .map(|(i, j)| trunc.u.data()[i * k + j])
                .collect();
            let v_cut: Vec<f32> = (0..8)
                .flat_map(|i| (0..q).map(move |j| (i, j)))
                .map(|(i, j)| trunc.v.data()[i * k + j])
                .collect();
            let trunc = SvdResult {
                u: tensor2(n, q, &u_cut),
                s: trunc.s,
                v: tensor2(8, q, &v_cut),
            };
            let err_full = frob_diff(&trunc.reconstruction(), &dense);
            assert!(
                (err_fast - err_full).abs() < 1e-6,
                "q={q}: fast {err_fast} vs materialized {err_full}"
            );
        }
    }

    #[test]
    fn product_svd_rejects_bad_ranks_and_dims() {
        let mut rng = Lcg(17);
        let a = rng.mat(8, 3);
        let b = rng.mat(6, 4);
        assert!(matches!(
            truncated_svd_of_product(&a, &b, 1),
            Err(Error::InnerDimMismatch { .. })
        ));
        let b = rng.mat(6, 3);
        assert!(matches!(
            truncated_svd_of_product(&a, &b, 0),
            Err(Error::RankOutOfRange { .. })
        ));
        assert!(matches!(
            truncated_svd_of_product(&a, &b, 4),
            Err(Error::RankOutOfRange { .. })
        ));
    }

    #[test]
    fn truncation_beats_random_factorizations() {
        // Eckart-Young: the SVD truncation minimizes Frobenius error among
        // rank-q approximations; compare against random range projections.
        let mut rng = Lcg(29);
        for &(n, m, q) in &[(6usize, 5usize, 2usize), (16, 16, 4), (9, 12, 3)] {
            let a = rng.mat(n, m);
            let full = svd_thin(&a).unwrap();
            let opt_err: f64 = full.s[q..].iter().map(|&s| (s as f64).powi(2)).sum::<f64>().sqrt();
            let a64 = Mat::from_tensor(&a).unwrap();
            for _ in 0..100 {
                let omega = {
                    let t = rng.mat(m, q);
                    Mat::from_tensor(&t).unwrap()
                };
                let y = a64.matmul(&omega);
                let (qy, _) = qr_thin(&y);
                // Error of projecting a onto the random range.
                let proj = qy.matmul(&qy.transpose().matmul(&a64));
                let err: f64 = proj
                    .data
                    .iter()
                    .zip(a64.data.iter())
                    .map(|(&p, &x)| (p - x) * (p - x))
                    .sum::<f64>()
                    .sqrt();
                assert!(
                    opt_err <= err + 1e-9,
                    "({n},{m},{q}): optimal {opt_err} > random {err}"
                );
            }
        }
    }
}
