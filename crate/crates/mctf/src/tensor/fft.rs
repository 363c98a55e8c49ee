//! Fiber-wise discrete Fourier transforms along a tensor mode.
//!
//! The forward transform is unnormalized and the inverse carries the `1/n`
//! factor, so a length-`n` constant fiber of value `c` transforms to
//! `(n*c, 0, ..., 0)`.

use super::{ComplexTensor3, Tensor3};
use crate::{Error, Result};
use num_complex::Complex64;
use rustfft::FftPlanner;
use std::sync::Arc;

/// Largest imaginary-to-total norm ratio accepted by [`ifft_mode`] before the
/// input is considered to have lost conjugate symmetry.
const IMAG_RESIDUAL_TOL: f64 = 1e-6;

struct FiberPlan {
    len: usize,
    count: usize,
    stride: usize,
    // Offset of the first element of each fiber.
    starts: Vec<usize>,
}

fn fiber_plan(shape: (usize, usize, usize), mode: usize) -> Result<FiberPlan> {
    let (n1, n2, n3) = shape;
    let (len, stride) = match mode {
        1 => (n1, 1),
        2 => (n2, n1),
        3 => (n3, n1 * n2),
        _ => {
            return Err(Error::InvalidArgument(format!(
                "mode must be 1, 2 or 3, got {mode}"
            )))
        }
    };
    let count = n1 * n2 * n3 / len;
    let mut starts = Vec::with_capacity(count);
    match mode {
        1 => {
            for k in 0..n3 {
                for j in 0..n2 {
                    starts.push(n1 * (j + n2 * k));
                }
            }
        }
        2 => {
            for k in 0..n3 {
                for i in 0..n1 {
                    starts.push(i + n1 * n2 * k);
                }
            }
        }
        3 => {
            for j in 0..n2 {
                for i in 0..n1 {
                    starts.push(i + n1 * j);
                }
            }
        }
        _ => unreachable!(),
    }
    Ok(FiberPlan {
        len,
        count,
        stride,
        starts,
    })
}

fn transform_fibers(
    data: &mut [Complex64],
    plan: &FiberPlan,
    fft: &Arc<dyn rustfft::Fft<f64>>,
) {
    let mut fiber = vec![Complex64::new(0.0, 0.0); plan.len];
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    for f in 0..plan.count {
        let start = plan.starts[f];
        for (p, slot) in fiber.iter_mut().enumerate() {
            *slot = data[start + p * plan.stride];
        }
        fft.process_with_scratch(&mut fiber, &mut scratch);
        for (p, slot) in fiber.iter().enumerate() {
            data[start + p * plan.stride] = *slot;
        }
    }
}

/// Unnormalized forward DFT of every mode-`mode` fiber.
pub fn fft_mode(t: &Tensor3, mode: usize) -> Result<ComplexTensor3> {
    let plan = fiber_plan(t.shape(), mode)?;
    let mut out = ComplexTensor3::zeros(t.shape());
    for (slot, &v) in out.data_mut().iter_mut().zip(t.data()) {
        *slot = Complex64::new(v, 0.0);
    }
    let fft = FftPlanner::new().plan_fft_forward(plan.len);
    transform_fibers(out.data_mut(), &plan, &fft);
    Ok(out)
}

/// `1/n`-normalized inverse DFT of every mode-`mode` fiber, returning the
/// real part.
///
/// All solver tensors are real, so a significant imaginary residual means the
/// caller corrupted the conjugate symmetry of the spectrum; that is reported
/// as an error instead of silently discarded.
pub fn ifft_mode(ct: &ComplexTensor3, mode: usize) -> Result<Tensor3> {
    let plan = fiber_plan(ct.shape(), mode)?;
    let mut buf = ct.data().to_vec();
    let fft = FftPlanner::new().plan_fft_inverse(plan.len);
    transform_fibers(&mut buf, &plan, &fft);
    let scale = 1.0 / plan.len as f64;
    for v in buf.iter_mut() {
        *v *= scale;
    }
    let total_sq: f64 = buf.iter().map(|z| z.norm_sqr()).sum();
    let imag_sq: f64 = buf.iter().map(|z| z.im * z.im).sum();
    if imag_sq.sqrt() > IMAG_RESIDUAL_TOL * total_sq.sqrt() {
        return Err(Error::NumericalConsistency(format!(
            "inverse transform has imaginary residual {:.3e} vs norm {:.3e}",
            imag_sq.sqrt(),
            total_sq.sqrt()
        )));
    }
    let data = buf.iter().map(|z| z.re).collect();
    Tensor3::from_vec(ct.shape(), data)
}
