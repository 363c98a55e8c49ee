//! Low-rank tensor completion by multi-modal core tensor factorization.
//!
//! The model represents a third-order tensor as a weighted sum of per-mode
//! factorizations `sum_n alpha_n * (G_n x_n X_n)`, measures low-rankness of
//! the factor matrices with the nuclear norm (or its log relaxation) and of
//! the core tensors with transform-domain tubal nuclear norms, and recovers
//! missing entries with a block successive upper-bound minimization loop
//! built on augmented Lagrangian splitting.
//!
//! Crate layout:
//!
//! - [`tensor`] — dense third-order tensors: unfold/fold, n-mode products,
//!   mode permutation, fiber FFTs, inner products.
//! - [`prox`] — singular value thresholding, weighted log-penalty
//!   thresholding, and their per-slice Fourier-domain tensor liftings.
//! - [`solver`] — the block-update completion solver, objectives for both
//!   penalty variants, and the per-iteration cost model.
//! - [`data`] — observation masks, sampling, rank selection, synthetic
//!   ground truth, and the `TNS1`/`.msk` file formats.
//! - [`metrics`] — PSNR / SSIM / ERGAS / SAM quality indices, global and
//!   per frontal slice.
//! - [`cli`] — the `mctf` command-line front end (`synth`, `mask`,
//!   `complete`, `metrics`, `experiment`).
//!
//! The `examples/` directory contains one runnable walkthrough per
//! capability; start with `synthetic_completion`.

// Per-mode loops index several fixed [_; 3] arrays at once, and negated
// comparisons like `!(x > 0.0)` are deliberate so NaN parameters fail
// validation.
#![allow(clippy::needless_range_loop)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod data;
pub mod error;
pub mod metrics;
pub mod prox;
pub mod solver;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::{ComplexTensor3, Matrix, Tensor3};
