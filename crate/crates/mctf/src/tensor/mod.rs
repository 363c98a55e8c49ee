//! Dense third-order tensors and the algebra everything else is built on:
//! mode-n unfolding and folding, n-mode products, cyclic mode permutation,
//! fiber-wise FFTs, inner products and Frobenius norms.
//!
//! Entries are stored first-index-fastest: element `(i, j, k)` of a tensor
//! with shape `(n1, n2, n3)` lives at flat offset `i + n1 * (j + n2 * k)`.
//! This is the column-major convention generalized to three ways, so the
//! mode-1 unfolding is a plain reshape of the buffer.

mod fft;

pub use fft::{fft_mode, ifft_mode};

use crate::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;

/// Dense real matrix, column-major.
pub type Matrix = DMatrix<f64>;

/// Dense complex matrix, column-major.
pub type CMatrix = DMatrix<Complex64>;

/// Dense real third-order tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    shape: (usize, usize, usize),
    data: Vec<f64>,
}

/// Dense complex third-order tensor, produced by [`fft_mode`].
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexTensor3 {
    shape: (usize, usize, usize),
    data: Vec<Complex64>,
}

fn check_shape(shape: (usize, usize, usize)) -> Result<()> {
    if shape.0 == 0 || shape.1 == 0 || shape.2 == 0 {
        return Err(Error::InvalidArgument(format!(
            "tensor dimensions must be positive, got {shape:?}"
        )));
    }
    Ok(())
}

impl Tensor3 {
    pub fn zeros(shape: (usize, usize, usize)) -> Self {
        Self {
            shape,
            data: vec![0.0; shape.0 * shape.1 * shape.2],
        }
    }

    pub fn from_vec(shape: (usize, usize, usize), data: Vec<f64>) -> Result<Self> {
        check_shape(shape)?;
        if data.len() != shape.0 * shape.1 * shape.2 {
            return Err(Error::ShapeMismatch(format!(
                "buffer of length {} does not fill a {:?} tensor",
                data.len(),
                shape
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn from_fn(shape: (usize, usize, usize), mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut t = Self::zeros(shape);
        for k in 0..shape.2 {
            for j in 0..shape.1 {
                for i in 0..shape.0 {
                    let off = t.offset(i, j, k);
                    t.data[off] = f(i, j, k);
                }
            }
        }
        t
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize, usize) {
        self.shape
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn offset(&self, i: usize, j: usize, k: usize) -> usize {
        debug_assert!(i < self.shape.0 && j < self.shape.1 && k < self.shape.2);
        i + self.shape.0 * (j + self.shape.1 * k)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[self.offset(i, j, k)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        let off = self.offset(i, j, k);
        self.data[off] = v;
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// `self + c * other`, elementwise.
    pub fn add_scaled(&self, c: f64, other: &Tensor3) -> Result<Tensor3> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch(format!(
                "cannot combine {:?} with {:?}",
                self.shape, other.shape
            )));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + c * b)
            .collect();
        Ok(Tensor3 {
            shape: self.shape,
            data,
        })
    }

    pub fn scale(&self, c: f64) -> Tensor3 {
        Tensor3 {
            shape: self.shape,
            data: self.data.iter().map(|v| c * v).collect(),
        }
    }
}

impl ComplexTensor3 {
    pub fn zeros(shape: (usize, usize, usize)) -> Self {
        Self {
            shape,
            data: vec![Complex64::new(0.0, 0.0); shape.0 * shape.1 * shape.2],
        }
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize, usize) {
        self.shape
    }

    #[inline]
    pub fn offset(&self, i: usize, j: usize, k: usize) -> usize {
        debug_assert!(i < self.shape.0 && j < self.shape.1 && k < self.shape.2);
        i + self.shape.0 * (j + self.shape.1 * k)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> Complex64 {
        self.data[self.offset(i, j, k)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: Complex64) {
        let off = self.offset(i, j, k);
        self.data[off] = v;
    }

    #[inline]
    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn fro_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// The `q`-th frontal slice as an `n1 x n2` matrix. Frontal slices are
    /// contiguous in the buffer, so this is a single copy.
    pub fn frontal_slice(&self, q: usize) -> CMatrix {
        let (n1, n2, _) = self.shape;
        let start = q * n1 * n2;
        CMatrix::from_column_slice(n1, n2, &self.data[start..start + n1 * n2])
    }

    pub fn set_frontal_slice(&mut self, q: usize, m: &CMatrix) {
        let (n1, n2, _) = self.shape;
        debug_assert_eq!((m.nrows(), m.ncols()), (n1, n2));
        let start = q * n1 * n2;
        self.data[start..start + n1 * n2].copy_from_slice(m.as_slice());
    }
}

fn mode_index(mode: usize) -> Result<usize> {
    match mode {
        1..=3 => Ok(mode - 1),
        _ => Err(Error::InvalidArgument(format!(
            "mode must be 1, 2 or 3, got {mode}"
        ))),
    }
}

fn dims(shape: (usize, usize, usize)) -> [usize; 3] {
    [shape.0, shape.1, shape.2]
}

/// Mode-n unfolding: rows index mode `mode`, columns enumerate the remaining
/// modes with the lower-numbered one varying fastest.
pub fn unfold(t: &Tensor3, mode: usize) -> Result<Matrix> {
    mode_index(mode)?;
    let (n1, n2, n3) = t.shape;
    match mode {
        // Matches the memory layout: a reshape.
        1 => Ok(Matrix::from_column_slice(n1, n2 * n3, &t.data)),
        2 => {
            let mut m = Matrix::zeros(n2, n1 * n3);
            for k in 0..n3 {
                for j in 0..n2 {
                    for i in 0..n1 {
                        m[(j, i + n1 * k)] = t.data[t.offset(i, j, k)];
                    }
                }
            }
            Ok(m)
        }
        3 => {
            let mut m = Matrix::zeros(n3, n1 * n2);
            for k in 0..n3 {
                for j in 0..n2 {
                    for i in 0..n1 {
                        m[(k, i + n1 * j)] = t.data[t.offset(i, j, k)];
                    }
                }
            }
            Ok(m)
        }
        _ => unreachable!(),
    }
}

/// Inverse of [`unfold`]: exact (bitwise), no arithmetic involved.
pub fn fold(m: &Matrix, mode: usize, shape: (usize, usize, usize)) -> Result<Tensor3> {
    let idx = mode_index(mode)?;
    check_shape(shape)?;
    let d = dims(shape);
    let other: usize = d.iter().enumerate().filter(|(n, _)| *n != idx).map(|(_, v)| v).product();
    if m.nrows() != d[idx] || m.ncols() != other {
        return Err(Error::ShapeMismatch(format!(
            "{}x{} matrix is not a mode-{mode} unfolding of {shape:?}",
            m.nrows(),
            m.ncols()
        )));
    }
    let (n1, n2, n3) = shape;
    let mut t = Tensor3::zeros(shape);
    match mode {
        1 => t.data.copy_from_slice(m.as_slice()),
        2 => {
            for k in 0..n3 {
                for j in 0..n2 {
                    for i in 0..n1 {
                        let off = t.offset(i, j, k);
                        t.data[off] = m[(j, i + n1 * k)];
                    }
                }
            }
        }
        3 => {
            for k in 0..n3 {
                for j in 0..n2 {
                    for i in 0..n1 {
                        let off = t.offset(i, j, k);
                        t.data[off] = m[(k, i + n1 * j)];
                    }
                }
            }
        }
        _ => unreachable!(),
    }
    Ok(t)
}

/// n-mode product `t x_mode m`: contracts mode `mode` of `t` with the columns
/// of `m`, replacing that dimension by `m.nrows()`.
///
/// Satisfies `unfold(t x_n M, n) = M * unfold(t, n)`.
pub fn mode_n_product(t: &Tensor3, m: &Matrix, mode: usize) -> Result<Tensor3> {
    let idx = mode_index(mode)?;
    let d = dims(t.shape);
    if m.ncols() != d[idx] {
        return Err(Error::ShapeMismatch(format!(
            "matrix with {} columns cannot contract mode {mode} of size {}",
            m.ncols(),
            d[idx]
        )));
    }
    let (n1, n2, n3) = t.shape;
    let rows = m.nrows();
    match mode {
        1 => {
            let mut out = Tensor3::zeros((rows, n2, n3));
            for k in 0..n3 {
                for j in 0..n2 {
                    let ob = out.offset(0, j, k);
                    for i in 0..n1 {
                        let x = t.data[t.offset(i, j, k)];
                        let col = m.column(i);
                        let col = col.as_slice();
                        for (r, c) in col.iter().enumerate() {
                            out.data[ob + r] += c * x;
                        }
                    }
                }
            }
            Ok(out)
        }
        2 => {
            let mut out = Tensor3::zeros((n1, rows, n3));
            for k in 0..n3 {
                for j in 0..n2 {
                    let tb = t.offset(0, j, k);
                    for r in 0..rows {
                        let c = m[(r, j)];
                        if c == 0.0 {
                            continue;
                        }
                        let ob = out.offset(0, r, k);
                        for i in 0..n1 {
                            out.data[ob + i] += c * t.data[tb + i];
                        }
                    }
                }
            }
            Ok(out)
        }
        3 => {
            let slab = n1 * n2;
            let mut out = Tensor3::zeros((n1, n2, rows));
            for k in 0..n3 {
                let tb = k * slab;
                for r in 0..rows {
                    let c = m[(r, k)];
                    if c == 0.0 {
                        continue;
                    }
                    let ob = r * slab;
                    for i in 0..slab {
                        out.data[ob + i] += c * t.data[tb + i];
                    }
                }
            }
            Ok(out)
        }
        _ => unreachable!(),
    }
}

/// Cyclic permutation that makes mode `k` the third mode.
///
/// With `p = permute_to_mode3(t, k)`:
/// - `k = 1`: `p` has shape `(n2, n3, n1)` and `p[j, s, i] = t[i, j, s]`,
/// - `k = 2`: `p` has shape `(n3, n1, n2)` and `p[s, i, j] = t[i, j, s]`,
/// - `k = 3`: `p = t`.
pub fn permute_to_mode3(t: &Tensor3, k: usize) -> Result<Tensor3> {
    mode_index(k)?;
    let (n1, n2, n3) = t.shape;
    match k {
        3 => Ok(t.clone()),
        1 => {
            let mut out = Tensor3::zeros((n2, n3, n1));
            for s in 0..n3 {
                for j in 0..n2 {
                    for i in 0..n1 {
                        let off = out.offset(j, s, i);
                        out.data[off] = t.data[t.offset(i, j, s)];
                    }
                }
            }
            Ok(out)
        }
        2 => {
            let mut out = Tensor3::zeros((n3, n1, n2));
            for s in 0..n3 {
                for j in 0..n2 {
                    for i in 0..n1 {
                        let off = out.offset(s, i, j);
                        out.data[off] = t.data[t.offset(i, j, s)];
                    }
                }
            }
            Ok(out)
        }
        _ => unreachable!(),
    }
}

/// Exact inverse of [`permute_to_mode3`].
pub fn permute_from_mode3(t: &Tensor3, k: usize) -> Result<Tensor3> {
    mode_index(k)?;
    let (p1, p2, p3) = t.shape;
    match k {
        3 => Ok(t.clone()),
        // t[j, s, i] holds original [i, j, s]; original shape is (p3, p1, p2).
        1 => {
            let mut out = Tensor3::zeros((p3, p1, p2));
            for i in 0..p3 {
                for s in 0..p2 {
                    for j in 0..p1 {
                        let off = out.offset(i, j, s);
                        out.data[off] = t.data[t.offset(j, s, i)];
                    }
                }
            }
            Ok(out)
        }
        // t[s, i, j] holds original [i, j, s]; original shape is (p2, p3, p1).
        2 => {
            let mut out = Tensor3::zeros((p2, p3, p1));
            for s in 0..p1 {
                for j in 0..p3 {
                    for i in 0..p2 {
                        let off = out.offset(i, j, s);
                        out.data[off] = t.data[t.offset(s, i, j)];
                    }
                }
            }
            Ok(out)
        }
        _ => unreachable!(),
    }
}

/// Inner product of two equally shaped tensors.
pub fn inner(a: &Tensor3, b: &Tensor3) -> Result<f64> {
    if a.shape != b.shape {
        return Err(Error::ShapeMismatch(format!(
            "inner product of {:?} with {:?}",
            a.shape, b.shape
        )));
    }
    Ok(a.data.iter().zip(&b.data).map(|(x, y)| x * y).sum())
}

/// Frobenius norm, `sqrt(<t, t>)`.
pub fn fro_norm(t: &Tensor3) -> f64 {
    t.data.iter().map(|x| x * x).sum::<f64>().sqrt()
}
