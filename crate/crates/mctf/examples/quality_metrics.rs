//! Quality indices on a reference/estimate pair: global values and the
//! per-frontal-slice curves.
//!
//! Run with `cargo run --example quality_metrics`.

use mctf::data::synth_mctf;
use mctf::metrics::quality_report;

fn main() {
    // Reference plus a mildly noisy estimate of it.
    let (reference, _) = synth_mctf((24, 24, 6), (3, 3, 2), 5, 0.0).unwrap();
    let (estimate, _) = synth_mctf((24, 24, 6), (3, 3, 2), 5, 0.02).unwrap();

    let lo = reference.data().iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = reference
        .data()
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);

    let report = quality_report(&reference, &estimate, hi - lo, 1.0).unwrap();
    println!("peak (dynamic range) = {:.4}", report.peak);
    println!("PSNR  = {:.3} dB", report.psnr);
    println!("SSIM  = {:.4}", report.ssim);
    println!("ERGAS = {:.4}", report.ergas);
    println!(
        "SAM   = {:.5} rad ({} zero fibers skipped)",
        report.sam, report.sam_zero_fibers
    );

    println!("\nper-slice curves (slice, psnr, ssim):");
    for (k, (p, s)) in report
        .per_slice_psnr
        .iter()
        .zip(&report.per_slice_ssim)
        .enumerate()
    {
        println!("  {k:2}  {p:7.3}  {s:.4}");
    }
}
