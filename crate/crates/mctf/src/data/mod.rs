//! Observation masks and sampling, rank selection, synthetic ground-truth
//! generation, and the on-disk tensor/mask formats.

mod io;

pub use io::{load_mask, load_tensor, save_mask, save_tensor};

use crate::solver::MctfFactors;
use crate::tensor::{mode_n_product, Matrix, Tensor3};
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Index set of observed entries of a tensor, as strictly increasing flat
/// offsets in the tensor's layout order.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationMask {
    shape: (usize, usize, usize),
    indices: Vec<u64>,
    sr: f64,
}

impl ObservationMask {
    /// Builds a mask from raw offsets, which must be strictly increasing and
    /// in range for `shape`.
    pub fn from_indices(shape: (usize, usize, usize), indices: Vec<u64>) -> Result<Self> {
        let n = (shape.0 * shape.1 * shape.2) as u64;
        for w in indices.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::InvalidArgument(format!(
                    "mask offsets must be strictly increasing, got {} then {}",
                    w[0], w[1]
                )));
            }
        }
        if let Some(&last) = indices.last() {
            if last >= n {
                return Err(Error::InvalidArgument(format!(
                    "mask offset {last} out of range for {shape:?} ({n} entries)"
                )));
            }
        }
        let sr = indices.len() as f64 / n as f64;
        Ok(Self { shape, indices, sr })
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize, usize) {
        self.shape
    }

    #[inline]
    pub fn indices(&self) -> &[u64] {
        &self.indices
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Sampling ratio, `|indices| / (n1 * n2 * n3)`.
    #[inline]
    pub fn sr(&self) -> f64 {
        self.sr
    }

    /// Mask of all entries NOT in this mask.
    pub fn complement(&self) -> ObservationMask {
        let n = (self.shape.0 * self.shape.1 * self.shape.2) as u64;
        let mut out = Vec::with_capacity(n as usize - self.indices.len());
        let mut it = self.indices.iter().copied().peekable();
        for off in 0..n {
            if it.peek() == Some(&off) {
                it.next();
            } else {
                out.push(off);
            }
        }
        ObservationMask::from_indices(self.shape, out).expect("complement is sorted and in range")
    }
}

/// Draws `round(sr * n)` distinct offsets uniformly without replacement.
///
/// Uses a seeded counter-based generator and a partial Fisher-Yates shuffle
/// over the flat offsets, so masks are reproducible across platforms.
pub fn sample_uniform(shape: (usize, usize, usize), sr: f64, seed: u64) -> Result<ObservationMask> {
    if !(0.0..=1.0).contains(&sr) {
        return Err(Error::InvalidArgument(format!(
            "sampling ratio must lie in [0, 1], got {sr}"
        )));
    }
    let n = shape.0 * shape.1 * shape.2;
    let count = ((sr * n as f64).round() as usize).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pool: Vec<u64> = (0..n as u64).collect();
    for i in 0..count {
        let j = rng.gen_range(i..n);
        pool.swap(i, j);
    }
    let mut picked = pool[..count].to_vec();
    picked.sort_unstable();
    ObservationMask::from_indices(shape, picked)
}

/// Zero-fills every entry outside the mask.
pub fn apply_mask(t: &Tensor3, mask: &ObservationMask) -> Result<Tensor3> {
    if t.shape() != mask.shape() {
        return Err(Error::ShapeMismatch(format!(
            "mask for {:?} applied to tensor {:?}",
            mask.shape(),
            t.shape()
        )));
    }
    let mut out = Tensor3::zeros(t.shape());
    for &off in mask.indices() {
        out.data_mut()[off as usize] = t.data()[off as usize];
    }
    Ok(out)
}

/// Same operation as [`apply_mask`]; the name reads better at solver call
/// sites where it plays the role of the sampling projection.
pub fn project(t: &Tensor3, mask: &ObservationMask) -> Result<Tensor3> {
    apply_mask(t, mask)
}

/// Per-mode rank guess: the count corresponding to the largest `fraction`
/// (default 0.005) of the maximal possible rank of each unfolding, floored
/// at one. This is a count-based rule on the dimensions; it does not look at
/// the data values.
pub fn rank_heuristic(t: &Tensor3, fraction: f64) -> Result<(usize, usize, usize)> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "rank fraction must lie in (0, 1], got {fraction}"
        )));
    }
    let (n1, n2, n3) = t.shape();
    let pick = |rows: usize, others: usize| -> usize {
        let max_rank = rows.min(others);
        ((fraction * max_rank as f64).round() as usize).max(1)
    };
    Ok((
        pick(n1, n2 * n3),
        pick(n2, n1 * n3),
        pick(n3, n1 * n2),
    ))
}

/// Default fraction for [`rank_heuristic`].
pub const RANK_FRACTION_DEFAULT: f64 = 0.005;

/// Draws a synthetic ground-truth tensor together with the factorization
/// that generates it.
///
/// Factor matrices `X_n` and a shared seed core are drawn standard-normal
/// from a counter-based generator; each mode's core `G_n` is the seed core
/// contracted with the other two factor matrices, so all three per-mode
/// factorizations reproduce the same tensor and the output has multilinear
/// rank at most `ranks`. With `noise_sigma > 0`, elementwise Gaussian noise
/// of that standard deviation is added to the returned tensor (the factors
/// stay noiseless).
pub fn synth_mctf(
    shape: (usize, usize, usize),
    ranks: (usize, usize, usize),
    seed: u64,
    noise_sigma: f64,
) -> Result<(Tensor3, MctfFactors)> {
    let dims = [shape.0, shape.1, shape.2];
    let r = [ranks.0, ranks.1, ranks.2];
    for n in 0..3 {
        if r[n] == 0 || r[n] > dims[n] {
            return Err(Error::InvalidArgument(format!(
                "rank {} invalid for mode {} of size {}",
                r[n],
                n + 1,
                dims[n]
            )));
        }
    }
    if noise_sigma < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "noise sigma must be non-negative, got {noise_sigma}"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |len: usize| -> Vec<f64> {
        (0..len).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
    };

    let x: Vec<Matrix> = (0..3)
        .map(|n| {
            let buf = draw(dims[n] * r[n]);
            Matrix::from_column_slice(dims[n], r[n], &buf)
        })
        .collect();
    let seed_core = Tensor3::from_vec((r[0], r[1], r[2]), draw(r[0] * r[1] * r[2]))?;

    // G_n contracts the seed core with the other two factors, leaving the
    // rank dimension open along mode n.
    let mut g = Vec::with_capacity(3);
    for n in 0..3 {
        let mut core = seed_core.clone();
        for m in 0..3 {
            if m != n {
                core = mode_n_product(&core, &x[m], m + 1)?;
            }
        }
        g.push(core);
    }

    let factors = MctfFactors {
        x: [x[0].clone(), x[1].clone(), x[2].clone()],
        g: [g[0].clone(), g[1].clone(), g[2].clone()],
        alpha: [1.0 / 3.0; 3],
    };
    let mut tensor = factors.compose()?;
    if noise_sigma > 0.0 {
        for v in tensor.data_mut() {
            *v += noise_sigma * rng.sample::<f64, _>(StandardNormal);
        }
    }
    Ok((tensor, factors))
}
