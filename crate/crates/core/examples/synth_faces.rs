//! Write a small synthetic dataset (faces, landmark files and a manifest).
//!
//! cargo run --example synth_faces -- out_dir [train] [test] [width] [height]

use lcge::synth::{write_dataset, DatasetSpec};

fn main() -> lcge::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let dir = args.first().cloned().unwrap_or_else(|| "synth_faces".into());
    let num = |i: usize, default: usize| args.get(i).and_then(|s| s.parse().ok()).unwrap_or(default);
    let spec = DatasetSpec {
        train_subjects: num(1, 8),
        test_subjects: num(2, 16),
        width: num(3, 160),
        height: num(4, 120),
        seed: 1,
    };
    let manifest = write_dataset(&dir, &spec)?;
    println!("wrote {} subjects, manifest at {}", spec.train_subjects + spec.test_subjects, manifest.display());
    Ok(())
}
