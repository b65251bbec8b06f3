//! Parametric face-like test images with matching landmark files.
//!
//! Every subject is drawn from a seed: an oval face on a shaded background
//! with hair, brows, almond eyes (iris, pupil, glint, lid line), a nose
//! with nostrils and two-tone lips. Geometry scales with the image height,
//! so the same subject can be rendered at any size. Edges are about one
//! pixel wide, sharp enough that bicubic upsampling visibly blurs them.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::image::{write_png, ColorImage};
use crate::regions::{Landmark, LandmarkName, LandmarkSet};

type Rgb = [f64; 3];

/// Per-subject shape and colour parameters, in units of the image height
/// (positions are offsets from the image centre).
#[derive(Clone, Debug, PartialEq)]
pub struct FaceParams {
    pub face_center: (f64, f64),
    pub face_axes: (f64, f64),
    pub eye_y: f64,
    pub eye_dx: f64,
    pub eye_size: (f64, f64),
    pub iris_radius: f64,
    pub brow_gap: f64,
    pub brow_thickness: f64,
    pub brow_arch: f64,
    pub nose_length: f64,
    pub nose_width: f64,
    pub mouth_y: f64,
    pub mouth_size: (f64, f64),
    pub hair_line: f64,
    pub skin: Rgb,
    pub hair: Rgb,
    pub iris: Rgb,
    pub lips: Rgb,
    pub background: (Rgb, Rgb),
}

impl FaceParams {
    pub fn random(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut u = |lo: f64, hi: f64| rng.random_range(lo..hi);
        let skin_tone = u(0.35, 0.85);
        let skin = [skin_tone + 0.1, skin_tone * 0.82 + 0.04, skin_tone * 0.68];
        let hair_tone = u(0.05, 0.45);
        Self {
            face_center: (u(-0.03, 0.03), u(-0.02, 0.03)),
            face_axes: (u(0.29, 0.35), u(0.38, 0.44)),
            eye_y: u(-0.13, -0.09),
            eye_dx: u(0.14, 0.17),
            eye_size: (u(0.065, 0.085), u(0.028, 0.040)),
            iris_radius: u(0.022, 0.030),
            brow_gap: u(0.06, 0.085),
            brow_thickness: u(0.012, 0.024),
            brow_arch: u(0.01, 0.03),
            nose_length: u(0.12, 0.17),
            nose_width: u(0.035, 0.05),
            mouth_y: u(0.18, 0.23),
            mouth_size: (u(0.09, 0.13), u(0.025, 0.04)),
            hair_line: u(0.23, 0.30),
            skin: skin.map(|v| v.clamp(0.0, 1.0)),
            hair: [hair_tone, hair_tone * 0.8, hair_tone * 0.6],
            iris: [u(0.1, 0.5), u(0.15, 0.5), u(0.1, 0.45)],
            lips: [u(0.55, 0.8), u(0.2, 0.35), u(0.25, 0.4)],
            background: ([u(0.3, 0.9), u(0.3, 0.9), u(0.3, 0.9)], [u(0.1, 0.6), u(0.1, 0.6), u(0.1, 0.6)]),
        }
    }
}

/// Coverage of a shape with signed distance `sd` (negative inside) under a
/// linear ramp `edge` pixels wide.
fn coverage(sd: f64, edge: f64) -> f64 {
    (0.5 - sd / edge).clamp(0.0, 1.0)
}

fn ellipse_sd(x: f64, y: f64, cx: f64, cy: f64, ax: f64, ay: f64) -> f64 {
    let (dx, dy) = ((x - cx) / ax, (y - cy) / ay);
    ((dx * dx + dy * dy).sqrt() - 1.0) * ax.min(ay)
}

fn blend(dst: &mut Rgb, src: Rgb, a: f64) {
    for c in 0..3 {
        dst[c] += (src[c] - dst[c]) * a;
    }
}

/// Pixel-space layout derived from [`FaceParams`] for one image size.
struct Layout {
    p: FaceParams,
    h: f64,
    cx: f64,
    cy: f64,
}

impl Layout {
    fn new(p: &FaceParams, width: usize, height: usize) -> Self {
        let h = height as f64;
        Self {
            p: p.clone(),
            h,
            cx: width as f64 / 2.0 + p.face_center.0 * h,
            cy: h / 2.0 + p.face_center.1 * h,
        }
    }

    fn at(&self, dx: f64, dy: f64) -> (f64, f64) {
        (self.cx + dx * self.h, self.cy + dy * self.h)
    }

    fn eye(&self, side: f64) -> (f64, f64) {
        self.at(side * self.p.eye_dx, self.p.eye_y)
    }

    /// Brow centre line at horizontal offset `t` in [-1, 1] along the brow.
    fn brow_y(&self, side: f64, t: f64) -> (f64, f64) {
        let (ex, ey) = self.eye(side);
        let half = self.p.eye_size.0 * 1.2 * self.h;
        let x = ex + t * half;
        let y = ey - self.p.brow_gap * self.h - self.p.brow_arch * self.h * (1.0 - t * t);
        (x, y)
    }

    fn shade(&self, x: f64, y: f64) -> Rgb {
        let p = &self.p;
        let h = self.h;
        let edge = 1.0;
        let t = (y / h).clamp(0.0, 1.0);
        let mut c = [0.0; 3];
        for i in 0..3 {
            c[i] = p.background.0[i] * (1.0 - t) + p.background.1[i] * t;
        }

        let (fax, fay) = (p.face_axes.0 * h, p.face_axes.1 * h);
        // hair: a slightly larger oval, visible above the hair line
        let hair_sd = ellipse_sd(x, y, self.cx, self.cy - 0.03 * h, fax * 1.08, fay * 1.06);
        let above = (self.cy - p.hair_line * h) - y;
        blend(&mut c, p.hair, coverage(hair_sd.max(-above), edge));

        let face_sd = ellipse_sd(x, y, self.cx, self.cy, fax, fay);
        let face_sd = face_sd.max(-(y - (self.cy - p.hair_line * h)));
        let mut skin = p.skin;
        // soft cheek shading towards the outline
        let r = (((x - self.cx) / fax).powi(2) + ((y - self.cy) / fay).powi(2)).sqrt();
        for v in &mut skin {
            *v *= 1.0 - 0.18 * r.min(1.0).powi(3);
        }
        blend(&mut c, skin, coverage(face_sd, edge));

        for side in [-1.0, 1.0] {
            // brow: a thick arc
            let half = p.eye_size.0 * 1.2 * h;
            let (bx0, _) = self.brow_y(side, 0.0);
            let t = ((x - bx0) / half).clamp(-1.0, 1.0);
            let (_, by) = self.brow_y(side, t);
            let along = ((x - bx0).abs() - half).max(0.0);
            let across = (y - by).abs() - p.brow_thickness * h / 2.0;
            let brow_sd = across.max(along);
            blend(&mut c, p.hair.map(|v| v * 0.7), coverage(brow_sd, edge));

            let (ex, ey) = self.eye(side);
            let (eax, eay) = (p.eye_size.0 * h, p.eye_size.1 * h);
            let eye_sd = ellipse_sd(x, y, ex, ey, eax, eay);
            let white = coverage(eye_sd, edge);
            if white > 0.0 {
                let mut e = [0.93, 0.92, 0.9];
                let ir = p.iris_radius * h;
                blend(&mut e, p.iris, coverage(ellipse_sd(x, y, ex, ey, ir, ir), edge));
                blend(&mut e, [0.03; 3], coverage(ellipse_sd(x, y, ex, ey, ir * 0.45, ir * 0.45), edge));
                let g = ir * 0.22;
                blend(&mut e, [1.0; 3], coverage(ellipse_sd(x, y, ex - ir * 0.35, ey - ir * 0.35, g, g), edge));
                blend(&mut c, e, white);
            }
            // upper lid line along the top of the almond
            let lid = (eye_sd.abs() - 0.6).max(y - ey);
            blend(&mut c, [0.08, 0.05, 0.05], coverage(lid, edge) * 0.85);
        }

        // nose: a shaded ridge and two nostrils
        let (nx, ny) = self.at(0.0, p.eye_y + 0.03);
        let len = p.nose_length * h;
        let nw = p.nose_width * h;
        if y > ny && y < ny + len {
            let s = (y - ny) / len;
            let ridge = (x - (nx + nw * 0.35)).abs() - 0.8 - s * 0.8;
            blend(&mut c, skin.map(|v| v * 0.72), coverage(ridge, edge) * (0.3 + 0.5 * s));
        }
        for side in [-1.0, 1.0] {
            let sd = ellipse_sd(x, y, nx + side * nw * 0.55, ny + len, nw * 0.33, nw * 0.2);
            blend(&mut c, [0.12, 0.06, 0.05], coverage(sd, edge));
        }

        // lips with a dark parting line
        let (mx, my) = self.at(0.0, p.mouth_y);
        let (max_, may) = (p.mouth_size.0 * h, p.mouth_size.1 * h);
        let lip_sd = ellipse_sd(x, y, mx, my, max_, may);
        let upper = if y < my { p.lips.map(|v| v * 0.8) } else { p.lips };
        blend(&mut c, upper, coverage(lip_sd, edge));
        let bend = may * 0.25 * (1.0 - ((x - mx) / max_).powi(2));
        let parting = ((y - my - bend).abs() - 0.5).max((x - mx).abs() - max_ * 0.95);
        blend(&mut c, [0.2, 0.05, 0.06], coverage(parting, edge));

        c.map(|v| v.clamp(0.0, 1.0))
    }

    fn landmarks(&self, width: usize, height: usize) -> Result<LandmarkSet> {
        let p = &self.p;
        let h = self.h;
        let mut pts = Vec::new();
        let mut push = |name, (x, y): (f64, f64)| {
            let x = x.round().clamp(0.0, width as f64 - 1.0);
            let y = y.round().clamp(0.0, height as f64 - 1.0);
            pts.push(Landmark { name, x, y });
        };
        for (side, eye, brow) in [
            (-1.0, LandmarkName::LeftEye, LandmarkName::LeftEyebrow),
            (1.0, LandmarkName::RightEye, LandmarkName::RightEyebrow),
        ] {
            let (ex, ey) = self.eye(side);
            let (ax, ay) = (p.eye_size.0 * h, p.eye_size.1 * h);
            for pt in [(ex - ax, ey), (ex + ax, ey), (ex, ey - ay), (ex, ey + ay)] {
                push(eye, pt);
            }
            let thick = p.brow_thickness * h / 2.0;
            for t in [-1.0, 0.0, 1.0] {
                let (bx, by) = self.brow_y(side, t);
                push(brow, (bx, by - thick));
                push(brow, (bx, by + thick));
            }
        }
        let (nx, ny) = self.at(0.0, p.eye_y + 0.03);
        let len = p.nose_length * h;
        let nw = p.nose_width * h;
        for pt in [(nx, ny), (nx, ny + len), (nx - nw * 0.9, ny + len + nw * 0.2), (nx + nw * 0.9, ny + len + nw * 0.2)] {
            push(LandmarkName::Nose, pt);
        }
        let (mx, my) = self.at(0.0, p.mouth_y);
        let (ax, ay) = (p.mouth_size.0 * h, p.mouth_size.1 * h);
        for pt in [(mx - ax, my), (mx + ax, my), (mx, my - ay), (mx, my + ay)] {
            push(LandmarkName::Mouth, pt);
        }
        let (fax, fay) = (p.face_axes.0 * h, p.face_axes.1 * h);
        for i in 0..12 {
            let a = i as f64 * std::f64::consts::TAU / 12.0;
            push(LandmarkName::FaceOutline, (self.cx + fax * a.cos(), self.cy + fay * a.sin()));
        }
        LandmarkSet::new(pts, width, height)
    }
}

/// A rendered subject: RGB image plus landmarks in its pixel space.
#[derive(Clone, Debug)]
pub struct SynthFace {
    pub image: ColorImage,
    pub landmarks: LandmarkSet,
}

/// Render `params` at `width` x `height`. Each pixel averages a 2x2 grid of
/// sub-samples.
pub fn render(params: &FaceParams, width: usize, height: usize) -> Result<SynthFace> {
    if width < 16 || height < 16 {
        return Err(Error::invalid(format!("synthetic faces need at least 16x16 pixels, got {width}x{height}")));
    }
    let layout = Layout::new(params, width, height);
    let mut rgb = Vec::with_capacity(width * height * 3);
    for y in 0..height {
        for x in 0..width {
            let mut acc = [0.0; 3];
            for (sx, sy) in [(0.25, 0.25), (0.75, 0.25), (0.25, 0.75), (0.75, 0.75)] {
                let c = layout.shade(x as f64 + sx, y as f64 + sy);
                for i in 0..3 {
                    acc[i] += c[i] / 4.0;
                }
            }
            rgb.extend_from_slice(&acc);
        }
    }
    Ok(SynthFace {
        image: ColorImage::from_rgb(width, height, &rgb)?,
        landmarks: layout.landmarks(width, height)?,
    })
}

/// Render the subject with the given seed.
pub fn face(seed: u64, width: usize, height: usize) -> Result<SynthFace> {
    render(&FaceParams::random(seed), width, height)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetSpec {
    pub train_subjects: usize,
    pub test_subjects: usize,
    pub width: usize,
    pub height: usize,
    pub seed: u64,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        Self {
            train_subjects: 8,
            test_subjects: 16,
            width: 160,
            height: 120,
            seed: 1,
        }
    }
}

/// Subject seed for the `i`-th face of a dataset.
pub fn subject_seed(dataset_seed: u64, i: usize) -> u64 {
    dataset_seed.wrapping_mul(0x2545_f491_4f6c_dd1d).wrapping_add(i as u64 + 1)
}

/// Write `subject_NNN.png` / `subject_NNN.txt` pairs and a `manifest.txt`
/// into `dir`, training subjects first. Returns the manifest path.
pub fn write_dataset(dir: impl AsRef<Path>, spec: &DatasetSpec) -> Result<PathBuf> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::from(e).at(dir))?;
    let mut manifest = String::from("# image\tlandmarks\tsplit\n");
    for i in 0..spec.train_subjects + spec.test_subjects {
        let f = face(subject_seed(spec.seed, i), spec.width, spec.height)?;
        let stem = format!("subject_{i:03}");
        let png = format!("{stem}.png");
        let txt = format!("{stem}.txt");
        write_png(dir.join(&png), &f.image)?;
        let lm_path = dir.join(&txt);
        fs::write(&lm_path, f.landmarks.to_text()).map_err(|e| Error::from(e).at(&lm_path))?;
        let split = if i < spec.train_subjects { "train" } else { "test" };
        manifest.push_str(&format!("{png}\t{txt}\t{split}\n"));
    }
    let path = dir.join("manifest.txt");
    fs::write(&path, manifest).map_err(|e| Error::from(e).at(&path))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regions::build_regions;

    #[test]
    fn deterministic_and_distinct() {
        let a = face(3, 64, 48).unwrap();
        let b = face(3, 64, 48).unwrap();
        let c = face(4, 64, 48).unwrap();
        assert_eq!(a.image, b.image);
        assert_eq!(a.landmarks, b.landmarks);
        assert_ne!(a.image, c.image);
    }

    #[test]
    fn landmarks_scale_with_size_and_give_regions() {
        for (w, h) in [(160, 120), (800, 600)] {
            let f = face(11, w, h).unwrap();
            assert_eq!(f.image.width(), w);
            let regions = build_regions(&f.landmarks, w, h, 8).unwrap();
            let eyes = regions[0].rect;
            // both eyes sit in the upper half
            assert!(eyes.y1 < h / 2);
            assert!(eyes.width() > w / 5);
        }
    }

    #[test]
    fn too_small_is_rejected() {
        assert!(face(1, 8, 8).is_err());
    }
}
