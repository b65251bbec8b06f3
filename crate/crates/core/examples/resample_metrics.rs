//! Bicubic degradation and the two quality metrics.
//!
//! cargo run --example resample_metrics -- [factor]

use lcge::image::{bicubic_resize, downsample};
use lcge::metrics::{psnr, ssim};
use lcge::synth::face;

fn main() -> lcge::Result<()> {
    let factor: usize = std::env::args().nth(1).map_or(4, |s| s.parse().expect("an integer factor"));
    let hr = face(7, 160, 120)?.image.y;
    let low = downsample(&hr, factor)?.plane;
    println!("{}x{} -> {}x{} (factor {factor})", hr.width(), hr.height(), low.width(), low.height());

    let up = bicubic_resize(&low, hr.width(), hr.height())?;
    println!("bicubic: PSNR {:.3} dB, SSIM {:.4}", psnr(&hr, &up)?, ssim(&hr, &up)?);
    println!("identity: PSNR {} dB, SSIM {:.4}", psnr(&hr, &hr)?, ssim(&hr, &hr)?);
    Ok(())
}
