//! The thresholding operators behind the low-rankness measures: plain
//! singular value shrinkage, the reweighted log-penalty variant, and their
//! per-Fourier-slice tensor liftings.
//!
//! Run with `cargo run --example prox_operators`.

use mctf::prox::{log_svt, svt, thin_svd, tnn_prox, tubal_nuclear_norm};
use mctf::tensor::{Matrix, Tensor3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let m = Matrix::from_fn(6, 5, |_, _| rng.gen_range(-1.0..1.0f64)) * 2.0;

    let before = thin_svd(&m).s;
    println!("input singular values:        {}", fmt(&before));

    // svt subtracts the threshold from every singular value; spectral
    // directions are untouched.
    let delta = 1.0;
    let after_svt = thin_svd(&svt(&m, delta).unwrap()).s;
    println!("after svt(delta = {delta}):        {}", fmt(&after_svt));

    // The log penalty shrinks adaptively: large values barely move, small
    // ones are pushed hard toward zero.
    let (gamma, eps) = (1.0, 1e-2);
    let after_log = thin_svd(&log_svt(&m, gamma, eps).unwrap()).s;
    println!("after log_svt(gamma = {gamma}):   {}", fmt(&after_log));

    // Tensor lifting: the same shrinkage applied to every frontal slice in
    // the Fourier domain along a chosen mode. The mode-n tubal nuclear
    // norm drops accordingly.
    let t = Tensor3::from_fn((6, 5, 4), |_, _, _| rng.gen_range(-1.0..1.0));
    for mode in 1..=3 {
        let before = tubal_nuclear_norm(&t, mode).unwrap();
        let shrunk = tnn_prox(&t, mode, 0.5).unwrap();
        let after = tubal_nuclear_norm(&shrunk, mode).unwrap();
        println!("mode {mode} tubal nuclear norm: {before:.4} -> {after:.4}");
    }
}

fn fmt(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| format!("{v:.4}"))
        .collect::<Vec<_>>()
        .join("  ")
}
