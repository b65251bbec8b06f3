//! Facial landmarks, the five component regions derived from them, and
//! crop/stitch between full faces and component planes.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::image::ImagePlane;

/// One of the five subregions of a face. Each category gets its own network
/// and exemplar database.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Category {
    Eyes,
    Eyebrows,
    Nose,
    Mouth,
    Remainder,
}

impl Category {
    pub const ALL: [Category; 5] = [
        Category::Eyes,
        Category::Eyebrows,
        Category::Nose,
        Category::Mouth,
        Category::Remainder,
    ];

    /// The four categories that undergo exemplar enhancement by default.
    pub const FACIAL: [Category; 4] = [
        Category::Eyes,
        Category::Eyebrows,
        Category::Nose,
        Category::Mouth,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Eyes => "eyes",
            Category::Eyebrows => "eyebrows",
            Category::Nose => "nose",
            Category::Mouth => "mouth",
            Category::Remainder => "remainder",
        }
    }

    pub fn to_byte(self) -> u8 {
        self as u8
    }

    pub fn from_byte(b: u8) -> Option<Self> {
        Self::ALL.get(b as usize).copied()
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Landmark names whose points bound this category's rectangle.
    fn landmark_names(self) -> &'static [LandmarkName] {
        use LandmarkName::*;
        match self {
            Category::Eyes => &[LeftEye, RightEye],
            Category::Eyebrows => &[LeftEyebrow, RightEyebrow],
            Category::Nose => &[Nose],
            Category::Mouth => &[Mouth],
            Category::Remainder => &[],
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown category {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LandmarkName {
    LeftEye,
    RightEye,
    LeftEyebrow,
    RightEyebrow,
    Nose,
    Mouth,
    FaceOutline,
}

impl LandmarkName {
    pub const ALL: [LandmarkName; 7] = [
        LandmarkName::LeftEye,
        LandmarkName::RightEye,
        LandmarkName::LeftEyebrow,
        LandmarkName::RightEyebrow,
        LandmarkName::Nose,
        LandmarkName::Mouth,
        LandmarkName::FaceOutline,
    ];

    pub const REQUIRED: [LandmarkName; 6] = [
        LandmarkName::LeftEye,
        LandmarkName::RightEye,
        LandmarkName::LeftEyebrow,
        LandmarkName::RightEyebrow,
        LandmarkName::Nose,
        LandmarkName::Mouth,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LandmarkName::LeftEye => "left_eye",
            LandmarkName::RightEye => "right_eye",
            LandmarkName::LeftEyebrow => "left_eyebrow",
            LandmarkName::RightEyebrow => "right_eyebrow",
            LandmarkName::Nose => "nose",
            LandmarkName::Mouth => "mouth",
            LandmarkName::FaceOutline => "face_outline",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|n| n.as_str() == s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Landmark {
    pub name: LandmarkName,
    pub x: f64,
    pub y: f64,
}

/// Named landmark points for one face, all inside the image bounds.
#[derive(Clone, Debug, PartialEq)]
pub struct LandmarkSet {
    points: Vec<Landmark>,
    width: usize,
    height: usize,
}

impl LandmarkSet {
    pub fn new(points: Vec<Landmark>, width: usize, height: usize) -> Result<Self> {
        for p in &points {
            if !in_bounds(p.x, width) || !in_bounds(p.y, height) {
                return Err(Error::invalid(format!(
                    "{} point ({}, {}) outside {width}x{height} image",
                    p.name.as_str(),
                    p.x,
                    p.y
                )));
            }
        }
        for name in LandmarkName::REQUIRED {
            if !points.iter().any(|p| p.name == name) {
                return Err(Error::invalid(format!(
                    "missing landmarks for {}",
                    name.as_str()
                )));
            }
        }
        Ok(Self {
            points,
            width,
            height,
        })
    }

    pub fn points(&self) -> &[Landmark] {
        &self.points
    }

    pub fn image_dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn named(&self, name: LandmarkName) -> impl Iterator<Item = &Landmark> {
        self.points.iter().filter(move |p| p.name == name)
    }

    /// Serialize in the `name x y` text format.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for p in &self.points {
            s.push_str(&format!("{} {} {}\n", p.name.as_str(), p.x, p.y));
        }
        s
    }
}

fn in_bounds(v: f64, len: usize) -> bool {
    v.is_finite() && v >= 0.0 && v < len as f64
}

/// Parse `name x y` lines. Blank lines and `#` comments are skipped.
pub fn parse_landmarks(text: &str, img_w: usize, img_h: usize) -> Result<LandmarkSet> {
    let mut points = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse {
            line: line_no,
            message,
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(err(format!("expected \"name x y\", got {line:?}")));
        }
        let name = LandmarkName::parse(fields[0])
            .ok_or_else(|| err(format!("unknown landmark name {:?}", fields[0])))?;
        let coord = |s: &str| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| err(format!("bad coordinate {s:?}")))
        };
        let (x, y) = (coord(fields[1])?, coord(fields[2])?);
        if !in_bounds(x, img_w) || !in_bounds(y, img_h) {
            return Err(err(format!(
                "coordinate ({x}, {y}) out of bounds for {img_w}x{img_h} image"
            )));
        }
        points.push(Landmark { name, x, y });
    }
    LandmarkSet::new(points, img_w, img_h)
}

/// Inclusive pixel rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Rect {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl Rect {
    pub fn width(&self) -> usize {
        self.x1 - self.x0 + 1
    }

    pub fn height(&self) -> usize {
        self.y1 - self.y0 + 1
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        self.x0 <= other.x0 && self.y0 <= other.y0 && self.x1 >= other.x1 && self.y1 >= other.y1
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x0 && x <= self.x1 && y >= self.y0 && y <= self.y1
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComponentRegion {
    pub category: Category,
    pub rect: Rect,
    /// 1.0 where the region owns the pixel, 0.0 elsewhere; sized like `rect`.
    pub mask: ImagePlane,
}

impl ComponentRegion {
    pub fn full(category: Category, width: usize, height: usize) -> Self {
        Self {
            category,
            rect: Rect {
                x0: 0,
                y0: 0,
                x1: width - 1,
                y1: height - 1,
            },
            mask: ImagePlane::filled(width, height, 1.0),
        }
    }
}

/// Derive the five regions in [`Category::ALL`] order. Facial components
/// are the padded bounding boxes of their landmarks; the remainder spans
/// the image with the complement of the four boxes as its mask.
pub fn build_regions(
    lms: &LandmarkSet,
    img_w: usize,
    img_h: usize,
    pad: usize,
) -> Result<Vec<ComponentRegion>> {
    if img_w == 0 || img_h == 0 {
        return Err(Error::invalid("empty image"));
    }
    let mut regions = Vec::with_capacity(5);
    for category in Category::FACIAL {
        let (mut min_x, mut min_y) = (f64::INFINITY, f64::INFINITY);
        let (mut max_x, mut max_y) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for name in category.landmark_names() {
            for p in lms.named(*name) {
                min_x = min_x.min(p.x);
                min_y = min_y.min(p.y);
                max_x = max_x.max(p.x);
                max_y = max_y.max(p.y);
            }
        }
        if !min_x.is_finite() {
            return Err(Error::invalid(format!("no landmarks for {category}")));
        }
        let lo = |v: f64| (v.floor() as isize - pad as isize).max(0) as usize;
        let hi = |v: f64, len: usize| ((v.ceil() as usize) + pad).min(len - 1);
        let rect = Rect {
            x0: lo(min_x),
            y0: lo(min_y),
            x1: hi(max_x, img_w),
            y1: hi(max_y, img_h),
        };
        regions.push(ComponentRegion {
            category,
            rect,
            mask: ImagePlane::filled(rect.width(), rect.height(), 1.0),
        });
    }
    let mut remainder = ImagePlane::filled(img_w, img_h, 1.0);
    for r in &regions {
        for y in r.rect.y0..=r.rect.y1 {
            for x in r.rect.x0..=r.rect.x1 {
                remainder.set(x, y, 0.0);
            }
        }
    }
    regions.push(ComponentRegion {
        category: Category::Remainder,
        rect: Rect {
            x0: 0,
            y0: 0,
            x1: img_w - 1,
            y1: img_h - 1,
        },
        mask: remainder,
    });
    Ok(regions)
}

pub fn crop(img: &ImagePlane, region: &ComponentRegion) -> Result<ImagePlane> {
    let r = region.rect;
    img.sub_image(r.x0, r.y0, r.width(), r.height())
}

/// Average every piece into the canvas wherever its mask is set. The mean
/// is accumulated incrementally so overlapping identical values stay exact.
pub fn stitch(
    pieces: &[(ComponentRegion, ImagePlane)],
    img_w: usize,
    img_h: usize,
) -> Result<ImagePlane> {
    let mut acc = vec![0.0; img_w * img_h];
    let mut count = vec![0u32; img_w * img_h];
    for (region, plane) in pieces {
        let r = region.rect;
        if plane.dims() != (r.width(), r.height()) || region.mask.dims() != plane.dims() {
            return Err(Error::invalid(format!(
                "{} piece is {}x{} but its rect is {}x{}",
                region.category,
                plane.width(),
                plane.height(),
                r.width(),
                r.height()
            )));
        }
        if r.x1 >= img_w || r.y1 >= img_h {
            return Err(Error::invalid(format!(
                "{} rect exceeds the canvas",
                region.category
            )));
        }
        for ly in 0..r.height() {
            for lx in 0..r.width() {
                if region.mask.get(lx, ly) > 0.5 {
                    let i = (r.y0 + ly) * img_w + r.x0 + lx;
                    count[i] += 1;
                    acc[i] += (plane.get(lx, ly) - acc[i]) / count[i] as f64;
                }
            }
        }
    }
    if let Some(i) = count.iter().position(|&c| c == 0) {
        return Err(Error::IncompleteCoverage {
            x: i % img_w,
            y: i / img_w,
        });
    }
    ImagePlane::new(img_w, img_h, acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# synthetic face
left_eye 20 30
left_eye 28 32
right_eye 50 30
right_eye 58 31
left_eyebrow 18 20
right_eyebrow 60 21
nose 39 45
nose 36 52
nose 42 52
mouth 30 65
mouth 48 66
face_outline 5 40
";

    #[test]
    fn parses_points_and_comments() {
        let lms = parse_landmarks(SAMPLE, 80, 90).unwrap();
        assert_eq!(lms.points().len(), 12);
        assert_eq!(lms.named(LandmarkName::Nose).count(), 3);
        let p = lms.points()[0];
        assert_eq!((p.name, p.x, p.y), (LandmarkName::LeftEye, 20.0, 30.0));
    }

    #[test]
    fn missing_category_is_named() {
        let text: String = SAMPLE
            .lines()
            .filter(|l| !l.starts_with("mouth"))
            .map(|l| format!("{l}\n"))
            .collect();
        let err = parse_landmarks(&text, 80, 90).unwrap_err().to_string();
        assert!(err.contains("mouth"), "{err}");
    }

    #[test]
    fn out_of_bounds_and_malformed_lines() {
        let err = parse_landmarks("left_eye 400 10\n", 320, 240).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        assert!(matches!(
            parse_landmarks("\n\nchin 1 2\n", 320, 240),
            Err(Error::Parse { line: 3, .. })
        ));
        assert!(matches!(
            parse_landmarks("nose 1\n", 320, 240),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn zero_pad_gives_tight_boxes() {
        let lms = parse_landmarks(SAMPLE, 80, 90).unwrap();
        let regions = build_regions(&lms, 80, 90, 0).unwrap();
        assert_eq!(regions[0].rect, Rect { x0: 20, y0: 30, x1: 58, y1: 32 });
        assert_eq!(regions[1].rect, Rect { x0: 18, y0: 20, x1: 60, y1: 21 });
        assert_eq!(regions[2].rect, Rect { x0: 36, y0: 45, x1: 42, y1: 52 });
        assert_eq!(regions[3].rect, Rect { x0: 30, y0: 65, x1: 48, y1: 66 });
    }

    #[test]
    fn pad_eight_matches_hand_enumeration() {
        let lms = parse_landmarks(SAMPLE, 80, 90).unwrap();
        let regions = build_regions(&lms, 80, 90, 8).unwrap();
        assert_eq!(regions[0].rect, Rect { x0: 12, y0: 22, x1: 66, y1: 40 });
        assert_eq!(regions[1].rect, Rect { x0: 10, y0: 12, x1: 68, y1: 29 });
        assert_eq!(regions[2].rect, Rect { x0: 28, y0: 37, x1: 50, y1: 60 });
        assert_eq!(regions[3].rect, Rect { x0: 22, y0: 57, x1: 56, y1: 74 });
        // clamped at the image border
        let tight = build_regions(&lms, 80, 90, 30).unwrap();
        assert_eq!(tight[0].rect, Rect { x0: 0, y0: 0, x1: 79, y1: 62 });
    }

    #[test]
    fn every_pixel_is_covered() {
        let lms = parse_landmarks(SAMPLE, 80, 90).unwrap();
        let regions = build_regions(&lms, 80, 90, 3).unwrap();
        for y in 0..90 {
            for x in 0..80 {
                let covered = regions.iter().any(|r| {
                    r.rect.contains(x, y) && r.mask.get(x - r.rect.x0, y - r.rect.y0) > 0.5
                });
                assert!(covered, "({x}, {y})");
            }
        }
    }

    #[test]
    fn crop_cases() {
        let img = ImagePlane::from_fn(6, 5, |x, y| (y * 6 + x) as f64);
        let full = ComponentRegion::full(Category::Remainder, 6, 5);
        assert_eq!(crop(&img, &full).unwrap(), img);
        let one = ComponentRegion {
            category: Category::Nose,
            rect: Rect { x0: 4, y0: 2, x1: 4, y1: 2 },
            mask: ImagePlane::filled(1, 1, 1.0),
        };
        assert_eq!(crop(&img, &one).unwrap().samples(), &[16.0]);
        let r = ComponentRegion {
            category: Category::Mouth,
            rect: Rect { x0: 1, y0: 1, x1: 3, y1: 2 },
            mask: ImagePlane::filled(3, 2, 1.0),
        };
        assert_eq!(
            crop(&img, &r).unwrap().samples(),
            &[7.0, 8.0, 9.0, 13.0, 14.0, 15.0]
        );
    }

    #[test]
    fn stitch_averages_overlap() {
        let left = ComponentRegion {
            category: Category::Eyes,
            rect: Rect { x0: 0, y0: 0, x1: 5, y1: 3 },
            mask: ImagePlane::filled(6, 4, 1.0),
        };
        let right = ComponentRegion {
            category: Category::Nose,
            rect: Rect { x0: 4, y0: 0, x1: 9, y1: 3 },
            mask: ImagePlane::filled(6, 4, 1.0),
        };
        let out = stitch(
            &[
                (left, ImagePlane::filled(6, 4, 0.0)),
                (right, ImagePlane::filled(6, 4, 1.0)),
            ],
            10,
            4,
        )
        .unwrap();
        assert_eq!(out.get(3, 1), 0.0);
        assert_eq!(out.get(4, 1), 0.5);
        assert_eq!(out.get(5, 2), 0.5);
        assert_eq!(out.get(6, 0), 1.0);
    }

    #[test]
    fn stitch_reports_uncovered_pixel() {
        let r = ComponentRegion {
            category: Category::Eyes,
            rect: Rect { x0: 0, y0: 0, x1: 2, y1: 2 },
            mask: ImagePlane::filled(3, 3, 1.0),
        };
        let err = stitch(&[(r, ImagePlane::zeros(3, 3))], 4, 3).unwrap_err();
        assert!(matches!(err, Error::IncompleteCoverage { x: 3, y: 0 }));
    }

    #[test]
    fn stitch_of_crops_reconstructs() {
        let lms = parse_landmarks(SAMPLE, 80, 90).unwrap();
        let img = ImagePlane::from_fn(80, 90, |x, y| ((x * 31 + y * 17) % 97) as f64 / 97.0);
        let regions = build_regions(&lms, 80, 90, 8).unwrap();
        let pieces: Vec<_> = regions
            .into_iter()
            .map(|r| {
                let c = crop(&img, &r).unwrap();
                (r, c)
            })
            .collect();
        assert_eq!(stitch(&pieces, 80, 90).unwrap(), img);
    }
}
