//! Tour of the tensor algebra: unfolding, n-mode products, the cyclic mode
//! permutation, and fiber FFTs.
//!
//! Run with `cargo run --example tensor_ops`.

use mctf::tensor::{
    fft_mode, fold, fro_norm, ifft_mode, inner, mode_n_product, permute_from_mode3,
    permute_to_mode3, unfold, Matrix, Tensor3,
};

fn main() {
    // A 2 x 2 x 2 tensor holding 1..=8 in layout order (first index
    // fastest), handy because every unfolding is easy to read.
    let t = Tensor3::from_vec((2, 2, 2), (1..=8).map(f64::from).collect()).unwrap();

    println!("mode-1 unfolding (rows follow the first index):");
    let m1 = unfold(&t, 1).unwrap();
    for r in 0..m1.nrows() {
        let row: Vec<f64> = m1.row(r).iter().copied().collect();
        println!("  {row:?}");
    }

    // Folding inverts unfolding exactly, for every mode.
    for mode in 1..=3 {
        let back = fold(&unfold(&t, mode).unwrap(), mode, t.shape()).unwrap();
        assert_eq!(back, t);
    }
    println!("fold(unfold(t, n), n) == t for n = 1, 2, 3");

    // The n-mode product satisfies unfold_n(t x_n M) = M * unfold_n(t).
    let m = Matrix::from_column_slice(1, 2, &[1.0, 1.0]);
    let contracted = mode_n_product(&t, &m, 1).unwrap();
    println!(
        "contracting mode 1 with [1 1] sums index pairs: shape {:?}, data {:?}",
        contracted.shape(),
        contracted.data()
    );

    // The permutation moves a chosen mode to the back: entry (i, j, s)
    // lands at (j, s, i) for k = 1.
    let p = permute_to_mode3(&t, 1).unwrap();
    assert_eq!(p.get(1, 0, 0), t.get(0, 1, 0));
    let round = permute_from_mode3(&p, 1).unwrap();
    assert_eq!(round, t);
    println!("permute_to_mode3 / permute_from_mode3 round-trip is exact");

    // Fiber FFTs: unnormalized forward, 1/n inverse, energy scaled by the
    // fiber length (Parseval).
    let spectrum = fft_mode(&t, 3).unwrap();
    let back = ifft_mode(&spectrum, 3).unwrap();
    let roundtrip_err = fro_norm(&back.add_scaled(-1.0, &t).unwrap()) / fro_norm(&t);
    println!("fft/ifft round-trip relative error: {roundtrip_err:.2e}");
    println!(
        "Parseval: |fft|^2 = {:.3}, n3 * |t|^2 = {:.3}",
        spectrum.fro_norm().powi(2),
        2.0 * fro_norm(&t).powi(2)
    );

    println!("<t, t> = {}", inner(&t, &t).unwrap());
}
