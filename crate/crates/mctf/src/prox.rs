//! Closed-form proximal operators of the low-rankness measures: singular
//! value thresholding for the nuclear norm, its reweighted variant for the
//! log penalty, and the mode-n Fourier-domain liftings of both that act on
//! the frontal slices of a transformed tensor.
//!
//! The log penalty `sum_i log(sigma_i + eps)` is handled by one-step
//! majorization at the current iterate: singular value `sigma_j` is shrunk
//! by `gamma * d_j` with weight `d_j = 1 / (sigma_j + eps)`. The weights are
//! non-decreasing whenever the singular values are non-increasing, which is
//! what the weighted thresholding result requires.

use crate::tensor::{
    fft_mode, ifft_mode, permute_from_mode3, permute_to_mode3, CMatrix, Matrix, Tensor3,
};
use crate::{Error, Result};
use nalgebra::{ComplexField, DMatrix, DVector};

/// Relative cutoff below which a singular value counts as zero when ranks
/// are decided (`1e-10 * sigma_max`).
pub const RANK_TOL: f64 = 1e-10;

/// Thin singular value decomposition with singular values sorted
/// non-increasing: `m = u * diag(s) * v^T`.
#[derive(Debug, Clone)]
pub struct SvdTriple {
    pub u: Matrix,
    pub s: Vec<f64>,
    pub v: Matrix,
}

impl SvdTriple {
    pub fn reconstruct(&self) -> Matrix {
        let d = Matrix::from_diagonal(&DVector::from_vec(self.s.clone()));
        &self.u * d * self.v.transpose()
    }

    /// Number of singular values above `RANK_TOL * sigma_max`.
    pub fn rank(&self) -> usize {
        let smax = self.s.first().copied().unwrap_or(0.0);
        self.s.iter().filter(|&&x| x > RANK_TOL * smax).count()
    }
}

fn sorted_svd<T>(m: &DMatrix<T>) -> (DMatrix<T>, Vec<f64>, DMatrix<T>)
where
    T: ComplexField<RealField = f64>,
{
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("svd requested u");
    let v_t = svd.v_t.expect("svd requested v_t");
    let s: Vec<f64> = svd.singular_values.iter().copied().collect();

    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s[b].partial_cmp(&s[a]).expect("finite singular values"));

    let k = s.len();
    let mut us = DMatrix::<T>::zeros(u.nrows(), k);
    let mut vs = DMatrix::<T>::zeros(v_t.ncols(), k);
    let mut ss = Vec::with_capacity(k);
    for (dst, &src) in order.iter().enumerate() {
        us.set_column(dst, &u.column(src));
        vs.set_column(dst, &v_t.row(src).transpose().map(|x| x.conjugate()));
        ss.push(s[src]);
    }
    (us, ss, vs)
}

/// Thin SVD of a real matrix with non-increasing singular values.
pub fn thin_svd(m: &Matrix) -> SvdTriple {
    let (u, s, v) = sorted_svd(m);
    SvdTriple { u, s, v }
}

/// Rebuild `u * diag(f(s)) * v^H` with the singular values mapped by `f`.
fn shrink_singular_values<T>(m: &DMatrix<T>, f: impl Fn(&[f64]) -> Vec<f64>) -> DMatrix<T>
where
    T: ComplexField<RealField = f64>,
{
    let (u, s, v) = sorted_svd(m);
    let shrunk = f(&s);
    debug_assert_eq!(shrunk.len(), s.len());
    let d = DMatrix::<T>::from_diagonal(&DVector::from_vec(
        shrunk.into_iter().map(T::from_real).collect::<Vec<_>>(),
    ));
    u * d * v.adjoint()
}

fn check_finite(m: &Matrix) -> Result<()> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(
            "matrix contains non-finite entries".into(),
        ));
    }
    Ok(())
}

/// Singular value shrinkage: keeps the singular subspaces and replaces each
/// singular value by `max(sigma - delta, 0)`. This is the proximal operator
/// of `delta * ||.||_*`.
pub fn svt(m: &Matrix, delta: f64) -> Result<Matrix> {
    check_finite(m)?;
    if !(delta >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "svt threshold must be non-negative, got {delta}"
        )));
    }
    Ok(shrink_singular_values(m, |s| {
        s.iter().map(|&x| (x - delta).max(0.0)).collect()
    }))
}

/// Weighted shrinkage for the log penalty: `sigma_j` is replaced by
/// `max(sigma_j - gamma / (sigma_j + eps), 0)`.
pub fn log_svt(m: &Matrix, gamma: f64, eps: f64) -> Result<Matrix> {
    check_finite(m)?;
    if !(gamma > 0.0) || !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "log_svt requires gamma > 0 and eps > 0, got gamma = {gamma}, eps = {eps}"
        )));
    }
    Ok(shrink_singular_values(m, |s| {
        s.iter().map(|&x| (x - gamma / (x + eps)).max(0.0)).collect()
    }))
}

/// [`svt`] on a complex matrix. Singular values of complex matrices are real
/// and non-negative, so the threshold rule carries over unchanged.
pub(crate) fn svt_complex(m: &CMatrix, delta: f64) -> Result<CMatrix> {
    if !(delta >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "svt threshold must be non-negative, got {delta}"
        )));
    }
    Ok(shrink_singular_values(m, |s| {
        s.iter().map(|&x| (x - delta).max(0.0)).collect()
    }))
}

/// [`log_svt`] on a complex matrix.
pub(crate) fn log_svt_complex(m: &CMatrix, gamma: f64, eps: f64) -> Result<CMatrix> {
    if !(gamma > 0.0) || !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "log_svt requires gamma > 0 and eps > 0, got gamma = {gamma}, eps = {eps}"
        )));
    }
    Ok(shrink_singular_values(m, |s| {
        s.iter().map(|&x| (x - gamma / (x + eps)).max(0.0)).collect()
    }))
}

fn tubal_prox(
    t: &Tensor3,
    mode: usize,
    slice_op: impl Fn(&CMatrix) -> Result<CMatrix>,
) -> Result<Tensor3> {
    let p = permute_to_mode3(t, mode)?;
    let mut ct = fft_mode(&p, 3)?;
    let slices = ct.shape().2;
    for q in 0..slices {
        let shrunk = slice_op(&ct.frontal_slice(q))?;
        ct.set_frontal_slice(q, &shrunk);
    }
    let back = ifft_mode(&ct, 3)?;
    permute_from_mode3(&back, mode)
}

/// Proximal operator of the mode-`mode` tubal nuclear norm: permutes the
/// chosen mode to the back, applies [`svt`] to every frontal slice in the
/// Fourier domain, and transforms back.
pub fn tnn_prox(t: &Tensor3, mode: usize, delta: f64) -> Result<Tensor3> {
    if !(delta >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tnn_prox threshold must be non-negative, got {delta}"
        )));
    }
    tubal_prox(t, mode, |s| svt_complex(s, delta))
}

/// Log-penalty variant of [`tnn_prox`]: applies [`log_svt`] per Fourier slice.
pub fn log_tnn_prox(t: &Tensor3, mode: usize, gamma: f64, eps: f64) -> Result<Tensor3> {
    if !(gamma > 0.0) || !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "log_tnn_prox requires gamma > 0 and eps > 0, got gamma = {gamma}, eps = {eps}"
        )));
    }
    tubal_prox(t, mode, |s| log_svt_complex(s, gamma, eps))
}

/// Nuclear norm (sum of singular values).
pub fn nuclear_norm(m: &Matrix) -> f64 {
    m.clone().singular_values().iter().sum()
}

/// Log norm `sum_i log(sigma_i + eps)` over all `min(rows, cols)` singular
/// values, including zero ones.
pub fn log_norm(m: &Matrix, eps: f64) -> f64 {
    m.clone()
        .singular_values()
        .iter()
        .map(|&s| (s + eps).ln())
        .sum()
}

fn tubal_measure(t: &Tensor3, mode: usize, slice_value: impl Fn(&CMatrix) -> f64) -> Result<f64> {
    let p = permute_to_mode3(t, mode)?;
    let ct = fft_mode(&p, 3)?;
    let slices = ct.shape().2;
    let mut total = 0.0;
    for q in 0..slices {
        total += slice_value(&ct.frontal_slice(q));
    }
    Ok(total / slices as f64)
}

/// Mode-`mode` tubal nuclear norm: the average of the nuclear norms of the
/// frontal slices after a DFT along that mode.
pub fn tubal_nuclear_norm(t: &Tensor3, mode: usize) -> Result<f64> {
    tubal_measure(t, mode, |s| s.clone().singular_values().iter().sum())
}

/// Log variant of [`tubal_nuclear_norm`].
pub fn tubal_log_norm(t: &Tensor3, mode: usize, eps: f64) -> Result<f64> {
    tubal_measure(t, mode, |s| {
        s.clone()
            .singular_values()
            .iter()
            .map(|&x| (x + eps).ln())
            .sum()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::fro_norm;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Matrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
    }

    fn random_tensor(shape: (usize, usize, usize), seed: u64) -> Tensor3 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Tensor3::from_fn(shape, |_, _, _| rng.gen_range(-1.0..1.0))
    }

    fn rel_err(a: &Matrix, b: &Matrix) -> f64 {
        (a - b).norm() / b.norm().max(1e-300)
    }

    #[test]
    fn svd_triple_contract() {
        let m = random_matrix(5, 3, 1);
        let svd = thin_svd(&m);
        // Non-increasing singular values.
        assert!(svd.s.windows(2).all(|w| w[0] >= w[1]));
        // Orthonormal columns.
        let eye3 = Matrix::identity(3, 3);
        assert!((svd.u.transpose() * &svd.u - &eye3).norm() <= 1e-8);
        assert!((svd.v.transpose() * &svd.v - &eye3).norm() <= 1e-8);
        // Reconstruction.
        assert!(rel_err(&svd.reconstruct(), &m) <= 1e-8);
    }

    #[test]
    fn svt_zero_threshold_is_identity() {
        let m = random_matrix(4, 6, 2);
        assert!(rel_err(&svt(&m, 0.0).unwrap(), &m) <= 1e-10);
    }

    #[test]
    fn svt_full_shrinkage_gives_zero() {
        let m = random_matrix(4, 4, 3);
        let smax = m.clone().singular_values()[0];
        let out = svt(&m, smax * 1.000001).unwrap();
        assert!(out.norm() <= 1e-10);
    }

    #[test]
    fn svt_on_diagonal_matrix() {
        let m = Matrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, 1.0]));
        let out = svt(&m, 2.0).unwrap();
        let expect = Matrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 0.0]));
        assert!((out - expect).norm() <= 1e-8);
    }

    #[test]
    fn svt_rejects_bad_input() {
        let m = random_matrix(3, 3, 4);
        assert!(svt(&m, -1.0).is_err());
        let mut bad = m.clone();
        bad[(0, 0)] = f64::NAN;
        assert!(svt(&bad, 1.0).is_err());
    }

    #[test]
    fn svt_is_nonexpansive() {
        for seed in 0..10 {
            let a = random_matrix(5, 4, 100 + seed);
            let b = random_matrix(5, 4, 200 + seed);
            let delta = 0.3;
            let lhs = (svt(&a, delta).unwrap() - svt(&b, delta).unwrap()).norm();
            assert!(lhs <= (&a - &b).norm() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn svt_rank_counts_values_above_threshold() {
        let m = random_matrix(6, 5, 5);
        let delta = 0.8;
        let before = thin_svd(&m);
        let expected = before.s.iter().filter(|&&x| x > delta + 1e-8).count();
        let after = thin_svd(&svt(&m, delta).unwrap());
        assert_eq!(after.rank(), expected);
    }

    #[test]
    fn log_svt_tiny_gamma_is_identity() {
        let m = random_matrix(4, 4, 6);
        assert!(rel_err(&log_svt(&m, 1e-12, 1e-3).unwrap(), &m) <= 1e-8);
    }

    #[test]
    fn log_svt_hand_weights_on_diagonal() {
        // sigma = (3, 1), gamma = eps = 1: weights 1/(3+1) and 1/(1+1),
        // so the shrunk values are (2.75, 0.5).
        let m = Matrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, 1.0]));
        let out = log_svt(&m, 1.0, 1.0).unwrap();
        let expect = Matrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.75, 0.5]));
        assert!((out - expect).norm() <= 1e-8);
    }

    #[test]
    fn log_svt_large_eps_approaches_svt() {
        let m = random_matrix(5, 5, 7).scale(3.0);
        let eps = 1e6;
        let gamma = 2e5;
        let log_out = log_svt(&m, gamma, eps).unwrap();
        let svt_out = svt(&m, gamma / eps).unwrap();
        assert!((log_out - &svt_out).norm() <= 1e-6 * svt_out.norm().max(1.0));
    }

    #[test]
    fn log_svt_rejects_bad_parameters() {
        let m = random_matrix(3, 3, 8);
        assert!(log_svt(&m, 0.0, 1.0).is_err());
        assert!(log_svt(&m, 1.0, 0.0).is_err());
        assert!(log_svt(&m, -1.0, 1.0).is_err());
    }

    #[test]
    fn log_svt_never_increases_singular_values() {
        for seed in 0..10 {
            let m = random_matrix(5, 4, 300 + seed);
            let out = log_svt(&m, 0.4, 1e-2).unwrap();
            let before = thin_svd(&m).s;
            let after = thin_svd(&out).s;
            for (a, b) in after.iter().zip(&before) {
                assert!(a <= &(b + 1e-10));
            }
        }
    }

    #[test]
    fn tnn_prox_single_slice_is_plain_svt() {
        // Third mode of size 1 after permutation: the DFT is the identity.
        let t = random_tensor((4, 3, 1), 9);
        let out = tnn_prox(&t, 3, 0.5).unwrap();
        let frontal = Matrix::from_fn(4, 3, |i, j| t.get(i, j, 0));
        let expect = svt(&frontal, 0.5).unwrap();
        for i in 0..4 {
            for j in 0..3 {
                assert!((out.get(i, j, 0) - expect[(i, j)]).abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn tnn_prox_zero_tensor_stays_zero() {
        let t = Tensor3::zeros((3, 4, 5));
        for mode in 1..=3 {
            for delta in [0.0, 1.0, 100.0] {
                let out = tnn_prox(&t, mode, delta).unwrap();
                assert!(fro_norm(&out) == 0.0);
            }
        }
    }

    #[test]
    fn log_tnn_prox_single_slice_and_tiny_gamma() {
        let t = random_tensor((3, 4, 1), 10);
        let frontal = Matrix::from_fn(3, 4, |i, j| t.get(i, j, 0));
        let expect = log_svt(&frontal, 0.7, 1e-2).unwrap();
        let out = log_tnn_prox(&t, 3, 0.7, 1e-2).unwrap();
        for i in 0..3 {
            for j in 0..4 {
                assert!((out.get(i, j, 0) - expect[(i, j)]).abs() <= 1e-8);
            }
        }

        let t2 = random_tensor((3, 3, 4), 11);
        let out2 = log_tnn_prox(&t2, 2, 1e-12, 1e-3).unwrap();
        let err = fro_norm(&out2.add_scaled(-1.0, &t2).unwrap());
        assert!(err <= 1e-8 * fro_norm(&t2));
    }

    #[test]
    fn complex_svt_shrinks_singular_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let m = CMatrix::from_fn(4, 4, |_, _| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let delta = 0.5;
        let out = svt_complex(&m, delta).unwrap();
        let before = m.clone().singular_values();
        let after = out.clone().singular_values();
        for (a, b) in after.iter().zip(before.iter()) {
            assert!((a - (b - delta).max(0.0)).abs() <= 1e-8);
        }
    }

    #[test]
    fn tubal_norm_values_match_slice_sums() {
        // For a single-slice tensor the tubal norms reduce to the matrix ones.
        let t = random_tensor((4, 3, 1), 13);
        let frontal = Matrix::from_fn(4, 3, |i, j| t.get(i, j, 0));
        let tn = tubal_nuclear_norm(&t, 3).unwrap();
        assert!((tn - nuclear_norm(&frontal)).abs() <= 1e-10);
        let tl = tubal_log_norm(&t, 3, 1e-2).unwrap();
        assert!((tl - log_norm(&frontal, 1e-2)).abs() <= 1e-10);
    }
}
