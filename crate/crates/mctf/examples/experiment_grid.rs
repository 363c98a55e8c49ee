//! A small batch experiment: one input tensor swept over a sampling-ratio
//! grid with both penalty variants, producing one CSV row per cell. This is
//! the library-level core of the `mctf experiment` subcommand.
//!
//! Run with `cargo run --release --example experiment_grid`.

use mctf::cli::{ExperimentSpec, SolverConfigFile};
use mctf::data::{save_tensor, synth_mctf};

fn main() {
    let dir = std::env::temp_dir().join("mctf_experiment_grid");
    std::fs::create_dir_all(&dir).unwrap();

    let input_path = dir.join("truth.tns");
    let (truth, _) = synth_mctf((16, 16, 16), (2, 2, 2), 11, 0.0).unwrap();
    save_tensor(&truth, &input_path).unwrap();

    let out_csv = dir.join("grid.csv");
    let spec = ExperimentSpec {
        inputs: vec![input_path.display().to_string()],
        srs: vec![0.2, 0.4, 0.6],
        variants: vec!["mctf".into(), "ncmctf".into()],
        seeds: vec![0],
        ranks: Some([2, 2, 2]),
        peak: None,       // dynamic range of the input
        scale_ratio: 1.0,
        config: Some(SolverConfigFile {
            max_iter: Some(300),
            ..Default::default()
        }),
        out_csv: out_csv.display().to_string(),
    };

    let csv = mctf::cli::run_experiment(&spec).unwrap();
    println!("{csv}");
    println!("written to {}", out_csv.display());
    println!("rerunning the same spec reproduces this file byte for byte");
}
