//! Pixel containers, bicubic resampling, patch access and PNG I/O.

use std::path::Path;

use crate::error::{Error, Result};

/// A single-channel grid of real samples, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ImagePlane {
    width: usize,
    height: usize,
    samples: Vec<f64>,
}

impl ImagePlane {
    pub fn new(width: usize, height: usize, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != width * height {
            return Err(Error::invalid(format!(
                "{} samples for a {width}x{height} plane",
                samples.len()
            )));
        }
        Ok(Self {
            width,
            height,
            samples,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self {
            width,
            height,
            samples: vec![value; width * height],
        }
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::filled(width, height, 0.0)
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut samples = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                samples.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            samples,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    #[inline]
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    #[inline]
    pub fn samples_mut(&mut self) -> &mut [f64] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.samples[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: f64) {
        self.samples[y * self.width + x] = value;
    }

    /// Sample with replicate extension outside the grid.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> f64 {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.samples[y * self.width + x]
    }

    pub fn row(&self, y: usize) -> &[f64] {
        &self.samples[y * self.width..(y + 1) * self.width]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            width: self.width,
            height: self.height,
            samples: self.samples.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Element-wise combination of two planes of equal dims.
    pub fn zip_map(&self, other: &ImagePlane, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.ensure_same_dims(other)?;
        Ok(Self {
            width: self.width,
            height: self.height,
            samples: self
                .samples
                .iter()
                .zip(&other.samples)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn clamp_unit(mut self) -> Self {
        for v in &mut self.samples {
            *v = v.clamp(0.0, 1.0);
        }
        self
    }

    /// Copy out the `w x h` window whose top-left corner is `(x0, y0)`.
    pub fn sub_image(&self, x0: usize, y0: usize, w: usize, h: usize) -> Result<Self> {
        if x0 + w > self.width || y0 + h > self.height {
            return Err(Error::invalid(format!(
                "window {w}x{h} at ({x0}, {y0}) exceeds {}x{} plane",
                self.width, self.height
            )));
        }
        let mut samples = Vec::with_capacity(w * h);
        for y in y0..y0 + h {
            let start = y * self.width + x0;
            samples.extend_from_slice(&self.samples[start..start + w]);
        }
        Ok(Self {
            width: w,
            height: h,
            samples,
        })
    }

    /// Grow the plane to `w x h` by replicating its last column and row.
    pub fn pad_replicate(&self, w: usize, h: usize) -> Self {
        debug_assert!(w >= self.width && h >= self.height);
        Self::from_fn(w, h, |x, y| self.get_clamped(x as isize, y as isize))
    }

    pub(crate) fn ensure_same_dims(&self, other: &ImagePlane) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::invalid(format!(
                "dimension mismatch: {}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        Ok(())
    }
}

/// Luma plus two chroma planes (BT.601 full range).
#[derive(Clone, Debug, PartialEq)]
pub struct ColorImage {
    pub y: ImagePlane,
    pub cb: ImagePlane,
    pub cr: ImagePlane,
    /// Set when the image came from (or should be written as) grayscale.
    pub grayscale: bool,
}

impl ColorImage {
    pub fn from_planes(y: ImagePlane, cb: ImagePlane, cr: ImagePlane) -> Result<Self> {
        if y.dims() != cb.dims() || y.dims() != cr.dims() {
            return Err(Error::invalid("color planes differ in size"));
        }
        Ok(Self {
            y,
            cb,
            cr,
            grayscale: false,
        })
    }

    pub fn from_gray(y: ImagePlane) -> Self {
        let (w, h) = y.dims();
        Self {
            y,
            cb: ImagePlane::filled(w, h, 0.5),
            cr: ImagePlane::filled(w, h, 0.5),
            grayscale: true,
        }
    }

    pub fn width(&self) -> usize {
        self.y.width()
    }

    pub fn height(&self) -> usize {
        self.y.height()
    }

    /// Build from interleaved RGB samples in `[0, 1]`.
    pub fn from_rgb(width: usize, height: usize, rgb: &[f64]) -> Result<Self> {
        if rgb.len() != width * height * 3 {
            return Err(Error::invalid("rgb buffer has wrong length"));
        }
        let n = width * height;
        let (mut y, mut cb, mut cr) = (
            Vec::with_capacity(n),
            Vec::with_capacity(n),
            Vec::with_capacity(n),
        );
        for px in rgb.chunks_exact(3) {
            let (l, b, r) = rgb_to_ycbcr(px[0], px[1], px[2]);
            y.push(l);
            cb.push(b);
            cr.push(r);
        }
        Self::from_planes(
            ImagePlane::new(width, height, y)?,
            ImagePlane::new(width, height, cb)?,
            ImagePlane::new(width, height, cr)?,
        )
    }

    /// Interleaved RGB samples, clamped to `[0, 1]`.
    pub fn to_rgb(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.y.samples().len() * 3);
        for ((&l, &b), &r) in self
            .y
            .samples()
            .iter()
            .zip(self.cb.samples())
            .zip(self.cr.samples())
        {
            let (r, g, b) = ycbcr_to_rgb(l, b, r);
            out.extend([r.clamp(0.0, 1.0), g.clamp(0.0, 1.0), b.clamp(0.0, 1.0)]);
        }
        out
    }

    /// Apply the same plane transform to all three channels.
    pub fn map_planes(&self, f: impl Fn(&ImagePlane) -> Result<ImagePlane>) -> Result<Self> {
        Ok(Self {
            y: f(&self.y)?,
            cb: f(&self.cb)?,
            cr: f(&self.cr)?,
            grayscale: self.grayscale,
        })
    }
}

pub fn rgb_to_ycbcr(r: f64, g: f64, b: f64) -> (f64, f64, f64) {
    let y = 0.299 * r + 0.587 * g + 0.114 * b;
    let cb = 0.5 - 0.168_736 * r - 0.331_264 * g + 0.5 * b;
    let cr = 0.5 + 0.5 * r - 0.418_688 * g - 0.081_312 * b;
    (y, cb, cr)
}

pub fn ycbcr_to_rgb(y: f64, cb: f64, cr: f64) -> (f64, f64, f64) {
    let (cb, cr) = (cb - 0.5, cr - 0.5);
    (
        y + 1.402 * cr,
        y - 0.344_136 * cb - 0.714_136 * cr,
        y + 1.772 * cb,
    )
}

/// Square patch of odd side length, values in scan order.
#[derive(Clone, Debug, PartialEq)]
pub struct Patch {
    pub center: (usize, usize),
    pub size: usize,
    pub values: Vec<f64>,
}

impl Patch {
    pub fn new(center: (usize, usize), size: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != size * size {
            return Err(Error::invalid(format!(
                "patch of size {size} needs {} values, got {}",
                size * size,
                values.len()
            )));
        }
        Ok(Self {
            center,
            size,
            values,
        })
    }
}

pub(crate) fn check_patch_size(size: usize) -> Result<()> {
    if size == 0 || size.is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "patch size must be odd and positive, got {size}"
        )));
    }
    Ok(())
}

/// Extract the `size x size` patch centred on `(row, col)`. Taps outside the
/// plane replicate the nearest border sample.
pub fn extract_patch(src: &ImagePlane, center: (usize, usize), size: usize) -> Result<Patch> {
    check_patch_size(size)?;
    if src.is_empty() {
        return Err(Error::invalid("cannot take a patch from an empty plane"));
    }
    let mut values = Vec::with_capacity(size * size);
    extract_patch_into(src, center, size, &mut values);
    Ok(Patch {
        center,
        size,
        values,
    })
}

/// Append patch values to `out`; the caller guarantees `size` is odd.
pub(crate) fn extract_patch_into(
    src: &ImagePlane,
    (row, col): (usize, usize),
    size: usize,
    out: &mut Vec<f64>,
) {
    let half = (size / 2) as isize;
    let (row, col) = (row as isize, col as isize);
    let w = src.width();
    let interior = row >= half
        && col >= half
        && row + half < src.height() as isize
        && col + half < w as isize;
    if interior {
        for y in (row - half)..=(row + half) {
            let start = y as usize * w + (col - half) as usize;
            out.extend_from_slice(&src.samples()[start..start + size]);
        }
    } else {
        for y in (row - half)..=(row + half) {
            for x in (col - half)..=(col + half) {
                out.push(src.get_clamped(x, y));
            }
        }
    }
}

/// Keys cubic convolution kernel with `a = -0.5` (Catmull-Rom).
pub fn cubic_kernel(x: f64) -> f64 {
    const A: f64 = -0.5;
    let x = x.abs();
    if x <= 1.0 {
        ((A + 2.0) * x - (A + 3.0)) * x * x + 1.0
    } else if x < 2.0 {
        ((A * x - 5.0 * A) * x + 8.0 * A) * x - 4.0 * A
    } else {
        0.0
    }
}

struct Taps {
    start: isize,
    weights: Vec<f64>,
}

/// Per-output-index taps along one axis. Downscaling widens the kernel by
/// the inverse scale so the resampler also acts as an anti-alias filter.
fn axis_taps(in_len: usize, out_len: usize) -> Vec<Taps> {
    let scale = out_len as f64 / in_len as f64;
    let (kernel_scale, support) = if scale < 1.0 {
        (scale, 2.0 / scale)
    } else {
        (1.0, 2.0)
    };
    (0..out_len)
        .map(|i| {
            let center = (i as f64 + 0.5) / scale - 0.5;
            let first = (center - support).floor() as isize + 1;
            let last = (center + support).ceil() as isize - 1;
            let mut weights: Vec<f64> = (first..=last)
                .map(|j| cubic_kernel((center - j as f64) * kernel_scale))
                .collect();
            let sum: f64 = weights.iter().sum();
            if sum != 1.0 {
                for w in &mut weights {
                    *w /= sum;
                }
            }
            Taps {
                start: first,
                weights,
            }
        })
        .collect()
}

/// Bicubic resampling with replicate boundary extension; output is clamped
/// to `[0, 1]`.
pub fn bicubic_resize(src: &ImagePlane, out_w: usize, out_h: usize) -> Result<ImagePlane> {
    if src.is_empty() || out_w == 0 || out_h == 0 {
        return Err(Error::invalid(format!(
            "cannot resize {}x{} to {out_w}x{out_h}",
            src.width(),
            src.height()
        )));
    }
    let (in_w, in_h) = src.dims();
    let xs = axis_taps(in_w, out_w);
    let ys = axis_taps(in_h, out_h);

    let mut horiz = vec![0.0; out_w * in_h];
    for y in 0..in_h {
        let row = src.row(y);
        let dst = &mut horiz[y * out_w..(y + 1) * out_w];
        for (d, taps) in dst.iter_mut().zip(&xs) {
            let mut acc = 0.0;
            for (k, &w) in taps.weights.iter().enumerate() {
                let x = (taps.start + k as isize).clamp(0, in_w as isize - 1) as usize;
                acc += w * row[x];
            }
            *d = acc;
        }
    }

    let mut out = vec![0.0; out_w * out_h];
    for (y, taps) in ys.iter().enumerate() {
        let dst = &mut out[y * out_w..(y + 1) * out_w];
        for (k, &w) in taps.weights.iter().enumerate() {
            let sy = (taps.start + k as isize).clamp(0, in_h as isize - 1) as usize;
            let src_row = &horiz[sy * out_w..(sy + 1) * out_w];
            for (d, &s) in dst.iter_mut().zip(src_row) {
                *d += w * s;
            }
        }
    }
    for v in &mut out {
        *v = v.clamp(0.0, 1.0);
    }
    ImagePlane::new(out_w, out_h, out)
}

/// Result of [`downsample`]: the reduced plane and the replicate padding
/// that was added to make the source divisible by the factor.
#[derive(Clone, Debug, PartialEq)]
pub struct Downsampled {
    pub plane: ImagePlane,
    pub pad_right: usize,
    pub pad_bottom: usize,
}

pub fn downsample(src: &ImagePlane, factor: usize) -> Result<Downsampled> {
    if factor < 2 {
        return Err(Error::invalid(format!(
            "downsampling factor must be at least 2, got {factor}"
        )));
    }
    if src.is_empty() {
        return Err(Error::invalid("cannot downsample an empty plane"));
    }
    let (w, h) = src.dims();
    let (out_w, out_h) = (w.div_ceil(factor), h.div_ceil(factor));
    let (pad_right, pad_bottom) = (out_w * factor - w, out_h * factor - h);
    let plane = if pad_right == 0 && pad_bottom == 0 {
        bicubic_resize(src, out_w, out_h)?
    } else {
        bicubic_resize(&src.pad_replicate(w + pad_right, h + pad_bottom), out_w, out_h)?
    };
    Ok(Downsampled {
        plane,
        pad_right,
        pad_bottom,
    })
}

/// Downsample by `factor`, then bicubic-upsample back to the source grid.
/// Padding added for divisibility is cropped away again.
pub fn degrade(src: &ImagePlane, factor: usize) -> Result<ImagePlane> {
    let low = downsample(src, factor)?;
    let (w, h) = src.dims();
    let up = bicubic_resize(&low.plane, w + low.pad_right, h + low.pad_bottom)?;
    if low.pad_right == 0 && low.pad_bottom == 0 {
        Ok(up)
    } else {
        up.sub_image(0, 0, w, h)
    }
}

/// Read an 8-bit grayscale or RGB PNG. Samples map to `v / 255`.
pub fn read_png(path: impl AsRef<Path>) -> Result<ColorImage> {
    let path = path.as_ref();
    let img = ::image::open(path).map_err(|e| Error::from(e).at(path))?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    if img.color().has_color() {
        let rgb = img.to_rgb8();
        let samples: Vec<f64> = rgb.as_raw().iter().map(|&v| v as f64 / 255.0).collect();
        ColorImage::from_rgb(w, h, &samples)
    } else {
        let gray = img.to_luma8();
        let samples = gray.as_raw().iter().map(|&v| v as f64 / 255.0).collect();
        Ok(ColorImage::from_gray(ImagePlane::new(w, h, samples)?))
    }
}

#[inline]
pub fn quantize(v: f64) -> u8 {
    (v * 255.0).round().clamp(0.0, 255.0) as u8
}

/// Write as 8-bit PNG; grayscale images keep a single channel.
pub fn write_png(path: impl AsRef<Path>, img: &ColorImage) -> Result<()> {
    let path = path.as_ref();
    let (w, h) = (img.width() as u32, img.height() as u32);
    let res = if img.grayscale {
        let raw = img.y.samples().iter().map(|&v| quantize(v)).collect();
        ::image::GrayImage::from_raw(w, h, raw)
            .expect("buffer matches dims")
            .save(path)
    } else {
        let raw = img.to_rgb().into_iter().map(quantize).collect();
        ::image::RgbImage::from_raw(w, h, raw)
            .expect("buffer matches dims")
            .save(path)
    };
    res.map_err(|e| Error::from(e).at(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counting(w: usize, h: usize) -> ImagePlane {
        ImagePlane::from_fn(w, h, |x, y| (y * w + x) as f64)
    }

    #[test]
    fn kernel_interpolates_at_integers() {
        assert_eq!(cubic_kernel(0.0), 1.0);
        for x in [-2.0, -1.0, 1.0, 2.0, 2.5] {
            assert_eq!(cubic_kernel(x), 0.0);
        }
        // partition of unity at a half offset
        let s: f64 = [-1.5, -0.5, 0.5, 1.5].iter().map(|&x| cubic_kernel(x)).sum();
        assert!((s - 1.0).abs() < 1e-15);
    }

    #[test]
    fn constant_plane_stays_constant() {
        let src = ImagePlane::filled(13, 7, 0.37);
        for (w, h) in [(26, 14), (5, 3), (40, 9), (1, 1)] {
            let out = bicubic_resize(&src, w, h).unwrap();
            assert_eq!(out.dims(), (w, h));
            assert!(out.samples().iter().all(|&v| (v - 0.37).abs() < 1e-12));
        }
    }

    #[test]
    fn identical_dims_is_identity() {
        let src = ImagePlane::from_fn(11, 9, |x, y| ((x * 7 + y * 3) % 10) as f64 / 10.0);
        let out = bicubic_resize(&src, 11, 9).unwrap();
        for (a, b) in src.samples().iter().zip(out.samples()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn ramp_is_reproduced_in_the_interior() {
        let w = 16;
        let src = ImagePlane::from_fn(w, 4, |x, _| 0.1 + 0.05 * x as f64);
        let out = bicubic_resize(&src, 2 * w, 8).unwrap();
        for y in 0..8 {
            // interior: all four horizontal taps in range
            for x in 4..2 * w - 4 {
                let sx = (x as f64 + 0.5) / 2.0 - 0.5;
                let expect = 0.1 + 0.05 * sx;
                assert!((out.get(x, y) - expect).abs() < 1e-12, "x={x}");
            }
        }
    }

    #[test]
    fn resize_rejects_zero_dims() {
        let src = ImagePlane::filled(4, 4, 0.0);
        assert!(bicubic_resize(&src, 0, 3).is_err());
        assert!(bicubic_resize(&ImagePlane::zeros(0, 0), 3, 3).is_err());
    }

    #[test]
    fn downsample_dims_match_protocol() {
        let a = downsample(&ImagePlane::filled(320, 240, 0.5), 4).unwrap();
        assert_eq!(a.plane.dims(), (80, 60));
        let b = downsample(&ImagePlane::filled(800, 600, 0.5), 10).unwrap();
        assert_eq!(b.plane.dims(), (80, 60));
        assert!(b.plane.samples().iter().all(|&v| (v - 0.5).abs() < 1e-12));
    }

    #[test]
    fn downsample_pads_and_records() {
        let d = downsample(&ImagePlane::filled(10, 7, 0.2), 4).unwrap();
        assert_eq!(d.plane.dims(), (3, 2));
        assert_eq!((d.pad_right, d.pad_bottom), (2, 1));
        assert!(downsample(&ImagePlane::filled(8, 8, 0.2), 1).is_err());
        let back = degrade(&ImagePlane::filled(10, 7, 0.2), 4).unwrap();
        assert_eq!(back.dims(), (10, 7));
    }

    #[test]
    fn patch_single_sample_and_corner() {
        let img = counting(5, 4);
        assert_eq!(extract_patch(&img, (2, 3), 1).unwrap().values, vec![13.0]);
        let corner = extract_patch(&img, (0, 0), 3).unwrap();
        assert_eq!(
            corner.values,
            vec![0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 5.0, 5.0, 6.0]
        );
        assert!(extract_patch(&img, (1, 1), 4).is_err());
    }

    #[test]
    fn patch_matches_hand_enumeration() {
        let img = counting(5, 4);
        let p = extract_patch(&img, (1, 2), 3).unwrap();
        assert_eq!(p.values, vec![1.0, 2.0, 3.0, 6.0, 7.0, 8.0, 11.0, 12.0, 13.0]);
        // bottom-right corner, replicated
        let q = extract_patch(&img, (3, 4), 3).unwrap();
        assert_eq!(
            q.values,
            vec![13.0, 14.0, 14.0, 18.0, 19.0, 19.0, 18.0, 19.0, 19.0]
        );
    }

    #[test]
    fn ycbcr_round_trip() {
        for &(r, g, b) in &[(0.0, 0.0, 0.0), (1.0, 0.5, 0.25), (0.3, 0.9, 0.6)] {
            let (y, cb, cr) = rgb_to_ycbcr(r, g, b);
            let (r2, g2, b2) = ycbcr_to_rgb(y, cb, cr);
            assert!((r - r2).abs() < 1e-5 && (g - g2).abs() < 1e-5 && (b - b2).abs() < 1e-5);
        }
    }

    #[test]
    fn png_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.png");
        let plane = ImagePlane::from_fn(6, 5, |x, y| ((x + y * 6) * 8) as f64 / 255.0);
        write_png(&path, &ColorImage::from_gray(plane.clone())).unwrap();
        let back = read_png(&path).unwrap();
        assert!(back.grayscale);
        assert_eq!(back.y, plane);
    }
}
