//! End-to-end synthetic recovery: generate a low-rank ground truth, keep a
//! random 30% of its entries, and complete it with both penalty variants.
//!
//! Run with `cargo run --release --example synthetic_completion`.

use mctf::data::{apply_mask, sample_uniform, synth_mctf};
use mctf::metrics::psnr;
use mctf::solver::{solve, SolverConfig, Variant};
use mctf::tensor::fro_norm;

fn main() {
    let shape = (20, 20, 20);
    let ranks = (2, 2, 2);
    let (truth, _factors) = synth_mctf(shape, ranks, 42, 0.0).unwrap();

    let mask = sample_uniform(shape, 0.3, 7).unwrap();
    let observed = apply_mask(&truth, &mask).unwrap();
    println!(
        "observing {} of {} entries (sr = {})",
        mask.len(),
        truth.len(),
        mask.sr()
    );

    let lo = truth.data().iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = truth.data().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let peak = hi - lo;

    for variant in [Variant::Convex, Variant::Log] {
        let config = SolverConfig::new(variant, [ranks.0, ranks.1, ranks.2]);
        let out = solve(&observed, &mask, &config).unwrap();
        let err = fro_norm(&out.y_hat.add_scaled(-1.0, &truth).unwrap()) / fro_norm(&truth);
        println!(
            "{:7}: {} iterations, converged = {}, RSE = {:.3e}, PSNR = {:.2} dB",
            variant.as_str(),
            out.iterations,
            out.converged,
            err,
            psnr(&truth, &out.y_hat, peak).unwrap()
        );
        // The objective trace is monotone over 5-iteration windows.
        let trace = &out.objective_trace;
        println!(
            "         objective: {:.4e} (first) -> {:.4e} (last)",
            trace.first().unwrap(),
            trace.last().unwrap()
        );
    }
}
