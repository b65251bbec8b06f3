//! Guided filtering and the detail transfer built on it.

use crate::error::{Error, Result};
use crate::image::ImagePlane;

pub const DEFAULT_RADIUS: usize = 8;
pub const DEFAULT_EPSILON: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GuidedFilterParams {
    /// Half-width of the square window.
    pub radius: usize,
    pub epsilon: f64,
}

impl Default for GuidedFilterParams {
    fn default() -> Self {
        Self {
            radius: DEFAULT_RADIUS,
            epsilon: DEFAULT_EPSILON,
        }
    }
}

impl GuidedFilterParams {
    pub fn validate(&self) -> Result<()> {
        if self.radius == 0 {
            return Err(Error::invalid("guided filter radius must be at least 1"));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::invalid(format!("epsilon must be finite and >= 0, got {}", self.epsilon)));
        }
        Ok(())
    }
}

/// Window means with windows truncated at the border (each mean divides by
/// the number of pixels actually inside the image).
///
/// Each output is the sum over window rows, top to bottom, of that row's
/// left-to-right sum.
fn box_mean(v: &[f64], w: usize, h: usize, r: usize) -> Vec<f64> {
    let mut rows = vec![0.0; w * h];
    for y in 0..h {
        let line = &v[y * w..(y + 1) * w];
        for x in 0..w {
            let mut s = 0.0;
            for &s_x in &line[x.saturating_sub(r)..(x + r + 1).min(w)] {
                s += s_x;
            }
            rows[y * w + x] = s;
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        let (y0, y1) = (y.saturating_sub(r), (y + r + 1).min(h));
        for x in 0..w {
            let mut s = 0.0;
            for yy in y0..y1 {
                s += rows[yy * w + x];
            }
            let nx = (x + r + 1).min(w) - x.saturating_sub(r);
            out[y * w + x] = s / ((y1 - y0) * nx) as f64;
        }
    }
    out
}

/// Single-channel guided filter of `p` steered by `guide`.
///
/// Both inputs are shifted by their first sample before filtering; the
/// filter is invariant to such shifts and constant inputs then produce
/// exact zeros inside the window sums.
pub fn guided_filter(p: &ImagePlane, guide: &ImagePlane, params: &GuidedFilterParams) -> Result<ImagePlane> {
    params.validate()?;
    p.ensure_same_dims(guide)?;
    let (w, h) = p.dims();
    if p.is_empty() {
        return Ok(p.clone());
    }
    let r = params.radius;
    let p0 = p.samples()[0];
    let i0 = guide.samples()[0];
    let pv: Vec<f64> = p.samples().iter().map(|v| v - p0).collect();
    let iv: Vec<f64> = guide.samples().iter().map(|v| v - i0).collect();
    let ii: Vec<f64> = iv.iter().map(|v| v * v).collect();
    let ip: Vec<f64> = iv.iter().zip(&pv).map(|(a, b)| a * b).collect();

    let mean_i = box_mean(&iv, w, h, r);
    let mean_p = box_mean(&pv, w, h, r);
    let corr_ii = box_mean(&ii, w, h, r);
    let corr_ip = box_mean(&ip, w, h, r);

    let mut a = vec![0.0; w * h];
    let mut b = vec![0.0; w * h];
    for k in 0..w * h {
        let (ak, bk) = linear_coefficients(mean_i[k], mean_p[k], corr_ii[k], corr_ip[k], params.epsilon);
        a[k] = ak;
        b[k] = bk;
    }
    let mean_a = box_mean(&a, w, h, r);
    let mean_b = box_mean(&b, w, h, r);
    let out = (0..w * h).map(|k| mean_a[k] * iv[k] + mean_b[k] + p0).collect();
    ImagePlane::new(w, h, out)
}

/// Per-window affine model `q = a·I + b`. A window with zero variance and
/// zero epsilon gets `a = 0`.
#[inline]
pub(crate) fn linear_coefficients(mean_i: f64, mean_p: f64, corr_ii: f64, corr_ip: f64, eps: f64) -> (f64, f64) {
    let var = corr_ii - mean_i * mean_i;
    let cov = corr_ip - mean_i * mean_p;
    let denom = var + eps;
    let a = if denom > 0.0 { cov / denom } else { 0.0 };
    (a, mean_p - a * mean_i)
}

/// Transplant the high frequencies of `extracted` onto `deep`.
///
/// `D` smooths the deep component under the extracted structure's guidance,
/// `E` smooths the extracted structure by itself, and the output is
/// `D + (extracted - E)` clamped to `[0, 1]`.
pub fn transfer_details(deep: &ImagePlane, extracted: &ImagePlane, params: &GuidedFilterParams) -> Result<ImagePlane> {
    Ok(transfer_details_unclamped(deep, extracted, params)?.clamp_unit())
}

/// [`transfer_details`] without the final clamp.
pub fn transfer_details_unclamped(
    deep: &ImagePlane,
    extracted: &ImagePlane,
    params: &GuidedFilterParams,
) -> Result<ImagePlane> {
    deep.ensure_same_dims(extracted)?;
    let d = guided_filter(deep, extracted, params)?;
    let e = guided_filter(extracted, extracted, params)?;
    // summed as extracted + (D - E) so that deep == extracted comes back unchanged
    let out = extracted
        .samples()
        .iter()
        .zip(d.samples().iter().zip(e.samples()))
        .map(|(&x, (&dv, &ev))| x + (dv - ev))
        .collect();
    ImagePlane::new(deep.width(), deep.height(), out)
}
