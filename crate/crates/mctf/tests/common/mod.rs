//! Independent numerical oracles for the acceptance suite.
//!
//! Nothing here touches the crate's SVD or FFT code paths: singular values
//! come from a hand-rolled cyclic Jacobi eigensolver on the Gram matrix,
//! complex matrices go through their real 2m x 2n embedding, and Fourier
//! slices are built by naive DFT summation.

#![allow(dead_code)]
#![allow(clippy::needless_range_loop)]

use mctf::tensor::{CMatrix, Matrix, Tensor3};
use num_complex::Complex64;

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns the
/// eigenvalues sorted descending and the matching eigenvectors as columns.
pub fn jacobi_eigh(a: &Matrix) -> (Vec<f64>, Matrix) {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "jacobi_eigh needs a square matrix");
    let mut d = a.clone();
    let mut v = Matrix::identity(n, n);
    let scale = a.norm().max(1e-300);

    for _sweep in 0..200 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += d[(p, q)] * d[(p, q)];
            }
        }
        if off.sqrt() <= 1e-14 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = d[(p, q)];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = 0.5 * (d[(q, q)] - d[(p, p)]) / apq;
                let t = if theta == 0.0 {
                    1.0
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                let dpp = d[(p, p)];
                let dqq = d[(q, q)];
                d[(p, p)] = dpp - t * apq;
                d[(q, q)] = dqq + t * apq;
                d[(p, q)] = 0.0;
                d[(q, p)] = 0.0;
                for i in 0..n {
                    if i != p && i != q {
                        let dip = d[(i, p)];
                        let diq = d[(i, q)];
                        d[(i, p)] = c * dip - s * diq;
                        d[(p, i)] = d[(i, p)];
                        d[(i, q)] = s * dip + c * diq;
                        d[(q, i)] = d[(i, q)];
                    }
                }
                for i in 0..n {
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = c * vip - s * viq;
                    v[(i, q)] = s * vip + c * viq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[(b, b)].partial_cmp(&d[(a, a)]).unwrap());
    let evals: Vec<f64> = order.iter().map(|&i| d[(i, i)]).collect();
    let mut vecs = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vecs.set_column(dst, &v.column(src));
    }
    (evals, vecs)
}

/// Singular values (descending) via Jacobi on the smaller Gram matrix.
pub fn singular_values_oracle(a: &Matrix) -> Vec<f64> {
    let gram = if a.nrows() <= a.ncols() {
        a * a.transpose()
    } else {
        a.transpose() * a
    };
    let (evals, _) = jacobi_eigh(&gram);
    evals.iter().map(|&e| e.max(0.0).sqrt()).collect()
}

/// Applies `sigma -> f(sigma)` to the singular values of `a` without an
/// explicit U factor: `a * V diag(f(sigma)/sigma) V^T` with V from the
/// Jacobi eigendecomposition of `a^T a`. Requires `f(0) = 0`.
pub fn shrink_oracle(a: &Matrix, f: impl Fn(f64) -> f64) -> Matrix {
    let gram = a.transpose() * a;
    let (evals, v) = jacobi_eigh(&gram);
    let smax = evals.first().copied().unwrap_or(0.0).max(0.0).sqrt();
    let n = gram.nrows();
    let mut scaled = Matrix::zeros(n, n);
    for i in 0..n {
        let sigma = evals[i].max(0.0).sqrt();
        let c = if sigma > 1e-12 * smax.max(1.0) {
            f(sigma) / sigma
        } else {
            0.0
        };
        for r in 0..n {
            scaled[(r, i)] = v[(r, i)] * c;
        }
    }
    a * scaled * v.transpose()
}

pub fn svt_oracle(a: &Matrix, delta: f64) -> Matrix {
    shrink_oracle(a, |s| (s - delta).max(0.0))
}

pub fn log_svt_oracle(a: &Matrix, gamma: f64, eps: f64) -> Matrix {
    shrink_oracle(a, |s| (s - gamma / (s + eps)).max(0.0))
}

/// Real embedding [[Re, -Im], [Im, Re]] of a complex matrix. Its singular
/// values are those of the complex matrix, each twice.
pub fn embed_complex(a: &CMatrix) -> Matrix {
    let (m, n) = (a.nrows(), a.ncols());
    let mut e = Matrix::zeros(2 * m, 2 * n);
    for j in 0..n {
        for i in 0..m {
            let z = a[(i, j)];
            e[(i, j)] = z.re;
            e[(i, j + n)] = -z.im;
            e[(i + m, j)] = z.im;
            e[(i + m, j + n)] = z.re;
        }
    }
    e
}

pub fn unembed_complex(e: &Matrix, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |i, j| {
        Complex64::new(e[(i, j)], e[(i + rows, j)])
    })
}

/// Complex singular value shrinkage through the real embedding. Equal
/// shrink factors on the duplicated singular values make the result
/// independent of the eigenbasis choice, so the embedding round-trip is
/// exact up to rounding.
pub fn shrink_oracle_complex(a: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let e = shrink_oracle(&embed_complex(a), f);
    unembed_complex(&e, a.nrows(), a.ncols())
}

/// Slice-by-slice oracle for the tubal prox operators: builds every Fourier
/// slice by naive DFT sums along `mode`, shrinks its singular values with
/// `f`, and inverts by naive sums.
pub fn tubal_prox_oracle(t: &Tensor3, mode: usize, f: impl Fn(f64) -> f64 + Copy) -> Tensor3 {
    let (n1, n2, n3) = t.shape();
    let p = [n1, n2, n3][mode - 1];
    let omega = |q: usize, x: usize| -> Complex64 {
        let angle = -2.0 * std::f64::consts::PI * (q * x) as f64 / p as f64;
        Complex64::new(angle.cos(), angle.sin())
    };

    // Slice q, entry (row, col) in the rotated orientation used by the
    // implementation: mode 1 -> (j, s), mode 2 -> (s, i), mode 3 -> (i, j).
    let slice_dims = match mode {
        1 => (n2, n3),
        2 => (n3, n1),
        _ => (n1, n2),
    };
    let entry = |row: usize, col: usize, fiber: usize| -> f64 {
        match mode {
            1 => t.get(fiber, row, col),
            2 => t.get(col, fiber, row),
            _ => t.get(row, col, fiber),
        }
    };

    let mut shrunk: Vec<CMatrix> = Vec::with_capacity(p);
    for q in 0..p {
        let slice = CMatrix::from_fn(slice_dims.0, slice_dims.1, |r, c| {
            let mut acc = Complex64::new(0.0, 0.0);
            for x in 0..p {
                acc += omega(q, x) * entry(r, c, x);
            }
            acc
        });
        shrunk.push(shrink_oracle_complex(&slice, f));
    }

    let mut out = Tensor3::zeros(t.shape());
    for s in 0..n3 {
        for j in 0..n2 {
            for i in 0..n1 {
                let (row, col, fiber) = match mode {
                    1 => (j, s, i),
                    2 => (s, i, j),
                    _ => (i, j, s),
                };
                let mut acc = Complex64::new(0.0, 0.0);
                for q in 0..p {
                    acc += shrunk[q][(row, col)] * omega(q, fiber).conj();
                }
                acc /= p as f64;
                assert!(
                    acc.im.abs() <= 1e-8 * (1.0 + acc.norm()),
                    "oracle inverse lost conjugate symmetry"
                );
                out.set(i, j, s, acc.re);
            }
        }
    }
    out
}

/// Nuclear norm from the Jacobi singular values.
pub fn nuclear_norm_oracle(a: &Matrix) -> f64 {
    singular_values_oracle(a).iter().sum()
}

pub fn rel_err(a: &Tensor3, b: &Tensor3) -> f64 {
    mctf::tensor::fro_norm(&a.add_scaled(-1.0, b).unwrap()) / mctf::tensor::fro_norm(b).max(1e-300)
}
