//! Quality indices for completed tensors: PSNR, SSIM, ERGAS and SAM,
//! reported globally and per frontal slice.
//!
//! Conventions, fixed here so that reported tables are interpretable:
//!
//! - PSNR is computed per frontal slice as `10 log10(peak^2 / MSE)` and
//!   averaged over slices. Identical inputs (and anything above it) report
//!   the documented cap of 100 dB so CSV outputs stay finite.
//! - SSIM is the single-scale index with an 11x11 Gaussian window of sigma
//!   1.5 and constants `C1 = (0.01 peak)^2`, `C2 = (0.03 peak)^2`, averaged
//!   first over pixels (with symmetric border padding, which also covers
//!   slices smaller than the window), then over slices.
//! - ERGAS treats frontal slices as bands:
//!   `100 * scale_ratio * sqrt(mean_b(MSE_b / mean_b^2))`.
//! - SAM is the mean angle between mode-3 fibers in radians; zero fibers
//!   are skipped and counted.

use crate::tensor::Tensor3;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Slice-averaged indices plus the per-slice curves behind them. The FSIM
/// column is a placeholder and stays empty.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QualityReport {
    pub psnr: f64,
    pub ssim: f64,
    pub ergas: f64,
    pub sam: f64,
    /// Dynamic-range scalar the PSNR/SSIM constants were built from.
    pub peak: f64,
    pub scale_ratio: f64,
    /// Number of zero fibers skipped by SAM.
    pub sam_zero_fibers: usize,
    pub per_slice_psnr: Vec<f64>,
    pub per_slice_ssim: Vec<f64>,
    pub per_slice_fsim: Vec<Option<f64>>,
}

/// PSNR cap reported for identical inputs.
pub const PSNR_CAP: f64 = 100.0;

const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;

fn check_pair(reference: &Tensor3, estimate: &Tensor3) -> Result<()> {
    if reference.shape() != estimate.shape() {
        return Err(Error::ShapeMismatch(format!(
            "reference {:?} vs estimate {:?}",
            reference.shape(),
            estimate.shape()
        )));
    }
    Ok(())
}

fn check_peak(peak: f64) -> Result<()> {
    if !(peak > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "peak must be positive, got {peak}"
        )));
    }
    Ok(())
}

fn slice_mse(reference: &Tensor3, estimate: &Tensor3, k: usize) -> f64 {
    let (n1, n2, _) = reference.shape();
    let mut acc = 0.0;
    for j in 0..n2 {
        for i in 0..n1 {
            let d = reference.get(i, j, k) - estimate.get(i, j, k);
            acc += d * d;
        }
    }
    acc / (n1 * n2) as f64
}

/// Per-frontal-slice PSNR in dB, capped at [`PSNR_CAP`].
pub fn psnr_per_slice(reference: &Tensor3, estimate: &Tensor3, peak: f64) -> Result<Vec<f64>> {
    check_pair(reference, estimate)?;
    check_peak(peak)?;
    let n3 = reference.shape().2;
    let mut out = Vec::with_capacity(n3);
    for k in 0..n3 {
        let mse = slice_mse(reference, estimate, k);
        out.push(if mse == 0.0 {
            PSNR_CAP
        } else {
            (10.0 * (peak * peak / mse).log10()).min(PSNR_CAP)
        });
    }
    Ok(out)
}

/// Slice-averaged PSNR in dB.
pub fn psnr(reference: &Tensor3, estimate: &Tensor3, peak: f64) -> Result<f64> {
    let per = psnr_per_slice(reference, estimate, peak)?;
    Ok(per.iter().sum::<f64>() / per.len() as f64)
}

fn gaussian_window() -> Vec<f64> {
    let half = (SSIM_WINDOW / 2) as isize;
    let mut w = Vec::with_capacity(SSIM_WINDOW * SSIM_WINDOW);
    let mut total = 0.0;
    for dy in -half..=half {
        for dx in -half..=half {
            // black_box keeps the compiler from constant-folding exp with
            // its own rounding; the weights must be bitwise identical in
            // every binary that links this code.
            let arg = -((dx * dx + dy * dy) as f64) / (2.0 * SSIM_SIGMA * SSIM_SIGMA);
            let v = std::hint::black_box(arg).exp();
            w.push(v);
            total += v;
        }
    }
    for v in w.iter_mut() {
        *v /= total;
    }
    w
}

/// Symmetric (mirror-with-edge) padding index.
fn reflect(p: isize, n: usize) -> usize {
    let n = n as isize;
    let period = 2 * n;
    let mut m = p % period;
    if m < 0 {
        m += period;
    }
    if m < n {
        m as usize
    } else {
        (period - 1 - m) as usize
    }
}

fn ssim_slice(reference: &Tensor3, estimate: &Tensor3, k: usize, peak: f64) -> f64 {
    let (n1, n2, _) = reference.shape();
    let window = gaussian_window();
    let half = (SSIM_WINDOW / 2) as isize;
    let c1 = (0.01 * peak) * (0.01 * peak);
    let c2 = (0.03 * peak) * (0.03 * peak);

    let mut acc = 0.0;
    for j in 0..n2 as isize {
        for i in 0..n1 as isize {
            let mut mx = 0.0;
            let mut my = 0.0;
            let mut sxx = 0.0;
            let mut syy = 0.0;
            let mut sxy = 0.0;
            let mut widx = 0;
            for dy in -half..=half {
                let jj = reflect(j + dy, n2);
                for dx in -half..=half {
                    let ii = reflect(i + dx, n1);
                    let w = window[widx];
                    widx += 1;
                    let x = reference.get(ii, jj, k);
                    let y = estimate.get(ii, jj, k);
                    mx += w * x;
                    my += w * y;
                    sxx += w * x * x;
                    syy += w * y * y;
                    sxy += w * x * y;
                }
            }
            let vx = sxx - mx * mx;
            let vy = syy - my * my;
            let cov = sxy - mx * my;
            let num = (2.0 * mx * my + c1) * (2.0 * cov + c2);
            let den = (mx * mx + my * my + c1) * (vx + vy + c2);
            acc += num / den;
        }
    }
    acc / (n1 * n2) as f64
}

/// Per-frontal-slice single-scale SSIM.
pub fn ssim_per_slice(reference: &Tensor3, estimate: &Tensor3, peak: f64) -> Result<Vec<f64>> {
    check_pair(reference, estimate)?;
    check_peak(peak)?;
    let n3 = reference.shape().2;
    Ok((0..n3)
        .map(|k| ssim_slice(reference, estimate, k, peak))
        .collect())
}

/// Slice-averaged SSIM.
pub fn ssim(reference: &Tensor3, estimate: &Tensor3, peak: f64) -> Result<f64> {
    let per = ssim_per_slice(reference, estimate, peak)?;
    Ok(per.iter().sum::<f64>() / per.len() as f64)
}

/// Relative dimensionless global error with frontal slices as bands.
pub fn ergas(reference: &Tensor3, estimate: &Tensor3, scale_ratio: f64) -> Result<f64> {
    check_pair(reference, estimate)?;
    if !(scale_ratio > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "scale ratio must be positive, got {scale_ratio}"
        )));
    }
    let (n1, n2, n3) = reference.shape();
    let mut acc = 0.0;
    for k in 0..n3 {
        let mut mean = 0.0;
        for j in 0..n2 {
            for i in 0..n1 {
                mean += reference.get(i, j, k);
            }
        }
        mean /= (n1 * n2) as f64;
        if mean == 0.0 {
            return Err(Error::InvalidArgument(format!(
                "band {k} of the reference has zero mean"
            )));
        }
        acc += slice_mse(reference, estimate, k) / (mean * mean);
    }
    Ok(100.0 * scale_ratio * (acc / n3 as f64).sqrt())
}

/// Mean spectral angle between mode-3 fibers, in radians, plus the number
/// of zero fibers that had to be skipped.
pub fn sam_with_skipped(reference: &Tensor3, estimate: &Tensor3) -> Result<(f64, usize)> {
    check_pair(reference, estimate)?;
    let (n1, n2, n3) = reference.shape();
    let mut acc = 0.0;
    let mut counted = 0usize;
    let mut skipped = 0usize;
    let mut u = vec![0.0; n3];
    let mut v = vec![0.0; n3];
    for j in 0..n2 {
        for i in 0..n1 {
            let mut nu = 0.0;
            let mut nv = 0.0;
            for k in 0..n3 {
                u[k] = reference.get(i, j, k);
                v[k] = estimate.get(i, j, k);
                nu += u[k] * u[k];
                nv += v[k] * v[k];
            }
            if nu == 0.0 || nv == 0.0 {
                skipped += 1;
                continue;
            }
            let nu = nu.sqrt();
            let nv = nv.sqrt();
            // Angle via the normalized difference and sum; exactly zero for
            // bitwise-identical directions and stable near 0 and pi.
            let mut diff = 0.0;
            let mut sum = 0.0;
            for k in 0..n3 {
                let a = u[k] / nu;
                let b = v[k] / nv;
                diff += (a - b) * (a - b);
                sum += (a + b) * (a + b);
            }
            acc += 2.0 * diff.sqrt().atan2(sum.sqrt());
            counted += 1;
        }
    }
    let mean = if counted == 0 { 0.0 } else { acc / counted as f64 };
    Ok((mean, skipped))
}

/// Mean spectral angle in radians.
pub fn sam(reference: &Tensor3, estimate: &Tensor3) -> Result<f64> {
    sam_with_skipped(reference, estimate).map(|(a, _)| a)
}

/// Computes all four indices and the per-slice curves in one pass.
pub fn quality_report(
    reference: &Tensor3,
    estimate: &Tensor3,
    peak: f64,
    scale_ratio: f64,
) -> Result<QualityReport> {
    let per_slice_psnr = psnr_per_slice(reference, estimate, peak)?;
    let per_slice_ssim = ssim_per_slice(reference, estimate, peak)?;
    let (sam, sam_zero_fibers) = sam_with_skipped(reference, estimate)?;
    let n3 = reference.shape().2;
    Ok(QualityReport {
        psnr: per_slice_psnr.iter().sum::<f64>() / n3 as f64,
        ssim: per_slice_ssim.iter().sum::<f64>() / n3 as f64,
        ergas: ergas(reference, estimate, scale_ratio)?,
        sam,
        peak,
        scale_ratio,
        sam_zero_fibers,
        per_slice_psnr,
        per_slice_ssim,
        per_slice_fsim: vec![None; n3],
    })
}
