//! Full-reference quality metrics on the normalized `[0, 1]` scale.

use crate::error::{Error, Result};
use crate::image::ImagePlane;

const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_C1: f64 = 0.01 * 0.01;
const SSIM_C2: f64 = 0.03 * 0.03;

pub fn mse(a: &ImagePlane, b: &ImagePlane) -> Result<f64> {
    a.ensure_same_dims(b)?;
    if a.is_empty() {
        return Err(Error::invalid("mse of empty planes"));
    }
    let sum: f64 = a
        .samples()
        .iter()
        .zip(b.samples())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    Ok(sum / a.samples().len() as f64)
}

/// Peak signal-to-noise ratio in dB with a peak of 1.0. Identical planes
/// give `f64::INFINITY`.
pub fn psnr(a: &ImagePlane, b: &ImagePlane) -> Result<f64> {
    let m = mse(a, b)?;
    if m == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (1.0 / m).log10())
}

/// Normalized 1-D Gaussian taps of length 11, sigma 1.5.
pub fn ssim_gaussian_taps() -> [f64; SSIM_WINDOW] {
    let mut taps = [0.0; SSIM_WINDOW];
    let c = (SSIM_WINDOW / 2) as f64;
    for (i, t) in taps.iter_mut().enumerate() {
        let d = i as f64 - c;
        *t = (-(d * d) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let sum: f64 = taps.iter().sum();
    for t in &mut taps {
        *t /= sum;
    }
    taps
}

/// Separable "valid" Gaussian filtering: output shrinks by window-1.
fn filter_valid(src: &[f64], w: usize, h: usize, taps: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let ow = w - SSIM_WINDOW + 1;
    let oh = h - SSIM_WINDOW + 1;
    let mut horiz = vec![0.0; ow * h];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        for x in 0..ow {
            horiz[y * ow + x] = taps.iter().zip(&row[x..]).map(|(t, v)| t * v).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = taps
                .iter()
                .enumerate()
                .map(|(k, t)| t * horiz[(y + k) * ow + x])
                .sum();
        }
    }
    out
}

/// Mean structural similarity over all valid 11x11 Gaussian windows.
pub fn ssim(a: &ImagePlane, b: &ImagePlane) -> Result<f64> {
    a.ensure_same_dims(b)?;
    let (w, h) = a.dims();
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(Error::invalid(format!(
            "ssim needs at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {w}x{h}"
        )));
    }
    let taps = ssim_gaussian_taps();
    let (xa, xb) = (a.samples(), b.samples());
    let sq = |s: &[f64]| s.iter().map(|v| v * v).collect::<Vec<_>>();
    let prod: Vec<f64> = xa.iter().zip(xb).map(|(p, q)| p * q).collect();

    let mu_a = filter_valid(xa, w, h, &taps);
    let mu_b = filter_valid(xb, w, h, &taps);
    let e_aa = filter_valid(&sq(xa), w, h, &taps);
    let e_bb = filter_valid(&sq(xb), w, h, &taps);
    let e_ab = filter_valid(&prod, w, h, &taps);

    let mut total = 0.0;
    for i in 0..mu_a.len() {
        let (ma, mb) = (mu_a[i], mu_b[i]);
        let va = e_aa[i] - ma * ma;
        let vb = e_bb[i] - mb * mb;
        let cov = e_ab[i] - ma * mb;
        total += ((2.0 * ma * mb + SSIM_C1) * (2.0 * cov + SSIM_C2))
            / ((ma * ma + mb * mb + SSIM_C1) * (va + vb + SSIM_C2));
    }
    Ok(total / mu_a.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn textured(w: usize, h: usize) -> ImagePlane {
        ImagePlane::from_fn(w, h, |x, y| {
            (0.45 + 0.4 * ((x as f64 * 0.7).sin() * (y as f64 * 0.3).cos())).clamp(0.0, 0.9)
        })
    }

    #[test]
    fn psnr_identical_is_infinite() {
        let a = textured(16, 16);
        assert_eq!(psnr(&a, &a).unwrap(), f64::INFINITY);
    }

    #[test]
    fn psnr_golden_values() {
        let a = ImagePlane::filled(8, 8, 0.2);
        let b = a.map(|v| v + 16.0 / 255.0);
        // 20 log10(255 / 16)
        assert!((psnr(&a, &b).unwrap() - 24.048_404).abs() < 1e-6);
        let c = a.map(|v| v + 0.1);
        assert!((psnr(&a, &c).unwrap() - 20.0).abs() < 1e-9);
    }

    #[test]
    fn psnr_rejects_mismatched_dims() {
        assert!(psnr(&ImagePlane::zeros(3, 3), &ImagePlane::zeros(3, 4)).is_err());
    }

    #[test]
    fn ssim_identity_and_zero() {
        let a = textured(20, 17);
        assert!((ssim(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        let z = ImagePlane::zeros(12, 12);
        assert_eq!(ssim(&z, &z).unwrap(), 1.0);
        assert!(ssim(&ImagePlane::zeros(10, 20), &ImagePlane::zeros(10, 20)).is_err());
    }

    #[test]
    fn taps_are_normalized() {
        let t = ssim_gaussian_taps();
        assert!((t.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(t[0], t[10]);
    }
}
