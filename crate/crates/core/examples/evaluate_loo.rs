//! Leave-one-out evaluation on a synthetic desk dataset.
//!
//! cargo run --release --example evaluate_loo -- [key=value ...]
//!
//! Keys are the config-file keys, plus `train`, `test`, `width` and
//! `height` for the generated dataset.

use std::time::Instant;

use lcge::config::HallucinationConfig;
use lcge::pipeline::{evaluate_loo, DatasetManifest};
use lcge::synth::{write_dataset, DatasetSpec};

fn main() -> lcge::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let mut cfg = HallucinationConfig::default();
    let mut spec = DatasetSpec::default();
    for arg in std::env::args().skip(1) {
        let (k, v) = arg.split_once('=').expect("arguments are key=value");
        let n = || v.parse().expect("a number");
        match k {
            "train" => spec.train_subjects = n(),
            "test" => spec.test_subjects = n(),
            "width" => spec.width = n(),
            "height" => spec.height = n(),
            _ => cfg.set(k, v)?,
        }
    }
    let dir = tempfile_dir();
    let manifest = DatasetManifest::load(write_dataset(&dir, &spec)?)?;
    let start = Instant::now();
    let report = evaluate_loo(&manifest, &cfg)?;
    print!("{}", report.to_table());
    println!("evaluated in {:.1} s", start.elapsed().as_secs_f64());
    Ok(())
}

fn tempfile_dir() -> std::path::PathBuf {
    std::env::temp_dir().join(format!("lcge-desk-{}", std::process::id()))
}
