//! The whole pipeline on one face: train networks and databases on a
//! synthetic training set, then hallucinate a held-out subject and write
//! the bicubic, CNN-only and enhanced results as PNGs.
//!
//! cargo run --release --example hallucinate_face -- [out_dir]

use std::path::PathBuf;

use lcge::config::HallucinationConfig;
use lcge::image::{bicubic_resize, write_png};
use lcge::metrics::psnr;
use lcge::pipeline::{build_databases, cnn_only, hallucinate, make_low_res, train_models, Prepared, Sample, Split};
use lcge::synth::face;

fn main() -> lcge::Result<()> {
    let out_dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "hallucinated".into()));
    std::fs::create_dir_all(&out_dir).map_err(|e| lcge::Error::from(e).at(&out_dir))?;
    let mut cfg = HallucinationConfig::default();
    cfg.train.epochs = 100;
    cfg.train.learning_rate = 0.01;

    let sample = |seed: u64, split| -> lcge::Result<Sample> {
        let f = face(seed, 160, 120)?;
        Ok(Sample {
            id: format!("subject_{seed:03}"),
            split,
            hr: f.image,
            landmarks: f.landmarks,
        })
    };
    let train = (1..9)
        .map(|s| Prepared::new(&sample(s, Split::Train)?, &cfg))
        .collect::<lcge::Result<Vec<_>>>()?;
    let refs: Vec<&Prepared> = train.iter().collect();
    let models = train_models(&refs, &cfg)?;
    let dbs = build_databases(&refs, &models, &cfg)?;

    let test = sample(0, Split::Test)?;
    let lr = make_low_res(&test.hr, cfg.scale)?;
    let (w, h) = (test.hr.width(), test.hr.height());
    let bicubic = lr.map_planes(|p| bicubic_resize(p, w, h))?;
    let deep = cnn_only(&lr, &test.landmarks, &models, &cfg)?;
    let enhanced = hallucinate(&lr, &test.landmarks, &models, &dbs, &cfg)?;
    for (name, img) in [("input", &lr), ("bicubic", &bicubic), ("cnn_only", &deep), ("lcge", &enhanced)] {
        let path = out_dir.join(format!("{name}.png"));
        write_png(&path, img)?;
        if img.width() == w {
            println!("{name:>8}: {:.3} dB  -> {}", psnr(&test.hr.y, &img.y)?, path.display());
        } else {
            println!("{name:>8}: {}x{}  -> {}", img.width(), img.height(), path.display());
        }
    }
    Ok(())
}
