//! Train one component network on synthetic mouths and verify its
//! gradients by finite differences.
//!
//! cargo run --release --example train_cnn -- [epochs] [learning_rate]

use lcge::cnn::{gradient_check, net_forward, train, Architecture, Init, TrainConfig};
use lcge::image::degrade;
use lcge::metrics::psnr;
use lcge::regions::{build_regions, crop};
use lcge::synth::face;
use lcge::{Category, ImagePlane};

fn mouth(seed: u64) -> lcge::Result<ImagePlane> {
    let f = face(seed, 160, 120)?;
    let regions = build_regions(&f.landmarks, 160, 120, 8)?;
    crop(&f.image.y, &regions[Category::Mouth.index()])
}

fn main() -> lcge::Result<()> {
    let mut args = std::env::args().skip(1);
    let epochs = args.next().map_or(100, |s| s.parse().expect("epochs"));
    let learning_rate = args.next().map_or(0.01, |s| s.parse().expect("learning rate"));
    let scale = 4;

    let pairs = (0..6)
        .map(|s| {
            let hr = mouth(s)?;
            Ok((degrade(&hr, scale)?, hr))
        })
        .collect::<lcge::Result<Vec<_>>>()?;
    let cfg = TrainConfig {
        learning_rate,
        epochs,
        ..TrainConfig::default()
    };
    let trained = train(Category::Mouth, &pairs, &cfg)?;
    let trace = &trained.loss_trace;
    println!("loss: first epoch {:.3e}, last epoch {:.3e}", trace[0], trace[trace.len() - 1]);

    let hr = mouth(100)?;
    let up = degrade(&hr, scale)?;
    let out = net_forward(&up, &trained.net)?.clamp_unit();
    println!("held-out mouth: bicubic {:.3} dB, network {:.3} dB", psnr(&hr, &up)?, psnr(&hr, &out)?);

    // a small net keeps the finite-difference sweep quick
    let small = TrainConfig {
        architecture: Architecture {
            kernels: [3, 1, 3],
            hidden: [4, 4],
        },
        init: Init::Gaussian { sigma: 0.5 },
        epochs: 1,
        learning_rate: 0.0,
        ..cfg
    };
    let net = train(Category::Mouth, &pairs[..1], &small)?.net;
    let patch = |p: &ImagePlane| p.sub_image(0, 0, 10, 10);
    let check = gradient_check(&net, &patch(&pairs[0].0)?, &patch(&pairs[0].1)?, 1e-6)?;
    println!(
        "gradient check over {} parameters: max relative error {:.2e}",
        check.params_checked, check.max_relative_error
    );
    Ok(())
}
