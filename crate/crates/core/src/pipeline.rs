//! End-to-end hallucination, model/database sets, dataset manifests and
//! the leave-one-out evaluation harness.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::cnn::{load_net_for, net_forward, save_net, train, Architecture, ConvNet, TrainConfig};
use crate::config::HallucinationConfig;
use crate::error::{Error, Result};
use crate::guided::transfer_details;
use crate::image::{bicubic_resize, downsample, read_png, ColorImage, ImagePlane};
use crate::metrics::{psnr, ssim};
use crate::patch_db::{load_db_for, save_db, PatchDatabase, TrainingPair};
use crate::regions::{build_regions, crop, parse_landmarks, stitch, Category, ComponentRegion, LandmarkSet};
use crate::regression::extract_structure;

/// One trained network per category.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelSet {
    nets: Vec<ConvNet>,
}

impl ModelSet {
    /// `nets` in any order, exactly one per category, all sharing one
    /// architecture.
    pub fn new(nets: Vec<ConvNet>) -> Result<Self> {
        let mut slots: Vec<Option<ConvNet>> = vec![None; 5];
        for net in nets {
            net.validate()?;
            let i = net.category.index();
            if slots[i].is_some() {
                return Err(Error::invalid(format!("two networks for {}", net.category)));
            }
            slots[i] = Some(net);
        }
        let mut out = Vec::with_capacity(5);
        for (slot, category) in slots.into_iter().zip(Category::ALL) {
            out.push(slot.ok_or(Error::Missing {
                what: "network",
                category,
            })?);
        }
        if out.iter().any(|n| n.architecture() != out[0].architecture()) {
            return Err(Error::ArchitectureMismatch("networks differ in architecture".into()));
        }
        Ok(Self { nets: out })
    }

    /// Identity networks: the pipeline then reduces to bicubic upsampling
    /// plus exemplar enhancement.
    pub fn identity(arch: Architecture) -> Self {
        Self {
            nets: Category::ALL.iter().map(|&c| ConvNet::identity(c, arch)).collect(),
        }
    }

    pub fn get(&self, category: Category) -> &ConvNet {
        &self.nets[category.index()]
    }

    pub fn architecture(&self) -> Architecture {
        self.nets[0].architecture()
    }

    pub fn file_name(category: Category) -> String {
        format!("{category}.cnn")
    }

    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::from(e).at(dir))?;
        for net in &self.nets {
            save_net(dir.join(Self::file_name(net.category)), net)?;
        }
        Ok(())
    }

    pub fn load(dir: impl AsRef<Path>, arch: Architecture) -> Result<Self> {
        let dir = dir.as_ref();
        let nets = Category::ALL
            .iter()
            .map(|&c| load_net_for(dir.join(Self::file_name(c)), c, arch))
            .collect::<Result<_>>()?;
        Ok(Self { nets })
    }
}

/// Patch databases by category. The remainder database is optional.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct DatabaseSet {
    dbs: Vec<Option<PatchDatabase>>,
}

impl DatabaseSet {
    pub fn new(dbs: Vec<PatchDatabase>) -> Result<Self> {
        let mut slots = vec![None; 5];
        for db in dbs {
            let i = db.category().index();
            if slots[i].is_some() {
                return Err(Error::invalid(format!("two databases for {}", db.category())));
            }
            slots[i] = Some(db);
        }
        Ok(Self { dbs: slots })
    }

    pub fn get(&self, category: Category) -> Option<&PatchDatabase> {
        self.dbs.get(category.index()).and_then(Option::as_ref)
    }

    pub fn require(&self, category: Category) -> Result<&PatchDatabase> {
        self.get(category).ok_or(Error::Missing {
            what: "patch database",
            category,
        })
    }

    /// The same databases with every entry from `source_id` removed.
    pub fn without_source(&self, source_id: &str) -> Self {
        Self {
            dbs: self
                .dbs
                .iter()
                .map(|d| d.as_ref().map(|d| d.without_source(source_id)))
                .collect(),
        }
    }

    pub fn file_name(category: Category) -> String {
        format!("{category}.pdb")
    }

    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::from(e).at(dir))?;
        for db in self.dbs.iter().flatten() {
            save_db(dir.join(Self::file_name(db.category())), db)?;
        }
        Ok(())
    }

    /// Load the four facial databases, plus the remainder one when
    /// `with_remainder` is set.
    pub fn load(dir: impl AsRef<Path>, with_remainder: bool) -> Result<Self> {
        let dir = dir.as_ref();
        let mut dbs = Vec::new();
        for &c in Category::ALL.iter() {
            if c == Category::Remainder && !with_remainder {
                continue;
            }
            dbs.push(load_db_for(dir.join(Self::file_name(c)), c)?);
        }
        Self::new(dbs)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ManifestEntry {
    /// File stem of the image.
    pub id: String,
    pub image: PathBuf,
    pub landmarks: PathBuf,
    pub split: Split,
}

/// Dataset listing, one `image<TAB>landmarks<TAB>split` line per entry with
/// paths relative to the manifest's directory. A `!strict` line asks the
/// evaluation to retrain networks for every fold.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetManifest {
    pub root: PathBuf,
    pub entries: Vec<ManifestEntry>,
    pub strict: bool,
}

impl DatasetManifest {
    pub fn parse(text: &str, root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        let mut entries: Vec<ManifestEntry> = Vec::new();
        let mut strict = false;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let err = |message: String| Error::Parse { line: i + 1, message };
            if line.trim() == "!strict" {
                strict = true;
                continue;
            }
            let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(err(format!("expected image<TAB>landmarks<TAB>split, got {line:?}")));
            }
            let split = match fields[2] {
                "train" => Split::Train,
                "test" => Split::Test,
                s => return Err(err(format!("unknown split {s:?}"))),
            };
            let image = root.join(fields[0]);
            let id = image
                .file_stem()
                .and_then(|s| s.to_str())
                .ok_or_else(|| err(format!("no file name in {:?}", fields[0])))?
                .to_string();
            if entries.iter().any(|e| e.id == id) {
                return Err(err(format!("duplicate image id {id:?}")));
            }
            entries.push(ManifestEntry {
                id,
                image,
                landmarks: root.join(fields[1]),
                split,
            });
        }
        Ok(Self { root, entries, strict })
    }

    /// Read a manifest and check that every referenced file exists.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::from(e).at(path))?;
        let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let m = Self::parse(&text, root).map_err(|e| e.at(path))?;
        for e in &m.entries {
            for f in [&e.image, &e.landmarks] {
                if !f.is_file() {
                    return Err(Error::invalid(format!("{}: missing file {}", e.id, f.display())).at(path));
                }
            }
        }
        Ok(m)
    }

    pub fn with_split(&self, split: Split) -> Vec<&ManifestEntry> {
        self.entries.iter().filter(|e| e.split == split).collect()
    }
}

/// A ground-truth face with landmarks in its pixel space.
#[derive(Clone, Debug)]
pub struct Sample {
    pub id: String,
    pub split: Split,
    pub hr: ColorImage,
    pub landmarks: LandmarkSet,
}

pub fn read_landmarks(path: impl AsRef<Path>, width: usize, height: usize) -> Result<LandmarkSet> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::from(e).at(path))?;
    parse_landmarks(&text, width, height).map_err(|e| e.at(path))
}

impl Sample {
    pub fn load(entry: &ManifestEntry) -> Result<Self> {
        let hr = read_png(&entry.image)?;
        let landmarks = read_landmarks(&entry.landmarks, hr.width(), hr.height())?;
        Ok(Self {
            id: entry.id.clone(),
            split: entry.split,
            hr,
            landmarks,
        })
    }
}

/// Degrade every plane of an HR image by `scale`.
pub fn make_low_res(hr: &ColorImage, scale: usize) -> Result<ColorImage> {
    hr.map_planes(|p| Ok(downsample(p, scale)?.plane))
}

/// Luma data shared by training, database construction and evaluation:
/// the bicubic upsampling of the degraded image, the matching ground
/// truth and the regions. Images whose sides are not multiples of the
/// scale are padded by replication.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub id: String,
    pub split: Split,
    pub hr: ImagePlane,
    pub up: ImagePlane,
    pub regions: Vec<ComponentRegion>,
    /// Size of the unpadded ground truth.
    pub dims: (usize, usize),
}

impl Prepared {
    pub fn new(sample: &Sample, cfg: &HallucinationConfig) -> Result<Self> {
        let s = cfg.scale;
        let dims = sample.hr.y.dims();
        let lr = downsample(&sample.hr.y, s)?.plane;
        let (w, h) = (lr.width() * s, lr.height() * s);
        let up = bicubic_resize(&lr, w, h)?;
        let lms = LandmarkSet::new(sample.landmarks.points().to_vec(), w, h)?;
        Ok(Self {
            id: sample.id.clone(),
            split: sample.split,
            hr: sample.hr.y.pad_replicate(w, h),
            up,
            regions: build_regions(&lms, w, h, cfg.region_pad)?,
            dims,
        })
    }

    fn region(&self, category: Category) -> &ComponentRegion {
        &self.regions[category.index()]
    }

    /// `(upsampled, ground truth)` crops of one category.
    pub fn component(&self, category: Category) -> Result<(ImagePlane, ImagePlane)> {
        let r = self.region(category);
        Ok((crop(&self.up, r)?, crop(&self.hr, r)?))
    }

    /// Crop a full-size result back to the ground-truth size.
    pub fn unpad(&self, plane: &ImagePlane) -> Result<ImagePlane> {
        plane.sub_image(0, 0, self.dims.0, self.dims.1)
    }

    pub fn hr_unpadded(&self) -> Result<ImagePlane> {
        self.unpad(&self.hr)
    }
}

pub fn prepare_all(samples: &[Sample], cfg: &HallucinationConfig) -> Result<Vec<Prepared>> {
    samples
        .iter()
        .map(|s| Prepared::new(s, cfg).map_err(|e| Error::invalid(format!("{}: {e}", s.id))))
        .collect()
}

/// Train one network per category on the given faces.
pub fn train_models(data: &[&Prepared], cfg: &HallucinationConfig) -> Result<ModelSet> {
    if data.is_empty() {
        return Err(Error::invalid("no training faces"));
    }
    let mut nets = Vec::with_capacity(5);
    for category in Category::ALL {
        let pairs = data
            .iter()
            .map(|p| p.component(category))
            .collect::<Result<Vec<_>>>()?;
        let tc = TrainConfig {
            seed: cfg.seed.wrapping_mul(0x100).wrapping_add(category.index() as u64),
            ..cfg.train.clone()
        };
        let trained = train(category, &pairs, &tc)?;
        log::info!(
            "trained {category}: loss {:.3e} -> {:.3e}",
            trained.loss_trace.first().copied().unwrap_or(f64::NAN),
            trained.loss_trace.last().copied().unwrap_or(f64::NAN)
        );
        nets.push(trained.net);
    }
    ModelSet::new(nets)
}

fn enhanced_categories(cfg: &HallucinationConfig) -> Vec<Category> {
    let mut cats = Category::FACIAL.to_vec();
    if cfg.enhance_remainder {
        cats.push(Category::Remainder);
    }
    cats
}

/// Pair each face's deep components with its ground truth and index the
/// patches.
pub fn build_databases(data: &[&Prepared], models: &ModelSet, cfg: &HallucinationConfig) -> Result<DatabaseSet> {
    let mut dbs = Vec::new();
    for category in enhanced_categories(cfg) {
        let net = models.get(category);
        let pairs = data
            .iter()
            .map(|p| {
                let (up, hr) = p.component(category)?;
                Ok(TrainingPair {
                    category,
                    deep: net_forward(&up, net)?,
                    hr,
                    source_id: p.id.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let db = PatchDatabase::build(category, cfg.patch_size, &pairs)?;
        log::info!("{category} database: {} patches", db.len());
        dbs.push(db);
    }
    DatabaseSet::new(dbs)
}

/// Deep component of one region, enhanced when a database is supplied.
pub fn process_component(
    up: &ImagePlane,
    region: &ComponentRegion,
    models: &ModelSet,
    dbs: Option<&DatabaseSet>,
    cfg: &HallucinationConfig,
) -> Result<ImagePlane> {
    let category = region.category;
    let deep = net_forward(&crop(up, region)?, models.get(category))?;
    let enhance = category != Category::Remainder || cfg.enhance_remainder;
    match dbs {
        Some(dbs) if enhance => {
            let db = dbs.require(category)?;
            if db.patch_size() != cfg.patch_size {
                return Err(Error::invalid(format!(
                    "{category} database uses {}x{} patches, config asks for {}",
                    db.patch_size(),
                    db.patch_size(),
                    cfg.patch_size
                )));
            }
            let extracted = extract_structure(&deep, db, &cfg.structure())?;
            transfer_details(&deep, &extracted, &cfg.guided())
        }
        _ => Ok(deep.clamp_unit()),
    }
}

/// Run every region of an upsampled luma plane and stitch the results.
pub fn reconstruct_luma(
    up: &ImagePlane,
    regions: &[ComponentRegion],
    models: &ModelSet,
    dbs: Option<&DatabaseSet>,
    cfg: &HallucinationConfig,
) -> Result<ImagePlane> {
    let pieces = regions
        .iter()
        .map(|r| Ok((r.clone(), process_component(up, r, models, dbs, cfg)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(stitch(&pieces, up.width(), up.height())?.clamp_unit())
}

fn upscale(
    lr: &ColorImage,
    lms: &LandmarkSet,
    models: &ModelSet,
    dbs: Option<&DatabaseSet>,
    cfg: &HallucinationConfig,
) -> Result<ColorImage> {
    cfg.validate()?;
    let (w, h) = (lr.width() * cfg.scale, lr.height() * cfg.scale);
    if lms.image_dims() != (w, h) {
        let (lw, lh) = lms.image_dims();
        return Err(Error::invalid(format!(
            "landmarks are for a {lw}x{lh} image but the output is {w}x{h}"
        )));
    }
    let regions = build_regions(lms, w, h, cfg.region_pad)?;
    let up_y = bicubic_resize(&lr.y, w, h)?;
    let y = reconstruct_luma(&up_y, &regions, models, dbs, cfg)?;
    let mut out = ColorImage::from_planes(y, bicubic_resize(&lr.cb, w, h)?, bicubic_resize(&lr.cr, w, h)?)?;
    out.grayscale = lr.grayscale;
    Ok(out)
}

/// Hallucinate a face `cfg.scale` times larger than `lr`. Landmarks are in
/// the output's pixel space.
pub fn hallucinate(
    lr: &ColorImage,
    lms: &LandmarkSet,
    models: &ModelSet,
    dbs: &DatabaseSet,
    cfg: &HallucinationConfig,
) -> Result<ColorImage> {
    upscale(lr, lms, models, Some(dbs), cfg)
}

/// The pipeline without exemplar enhancement.
pub fn cnn_only(lr: &ColorImage, lms: &LandmarkSet, models: &ModelSet, cfg: &HallucinationConfig) -> Result<ColorImage> {
    upscale(lr, lms, models, None, cfg)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Bicubic,
    CnnOnly,
    Lcge,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Bicubic, Method::CnnOnly, Method::Lcge];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Bicubic => "bicubic",
            Method::CnnOnly => "cnn_only",
            Method::Lcge => "lcge",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub id: String,
    pub method: Method,
    pub psnr: f64,
    pub ssim: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MethodSummary {
    pub method: Method,
    pub images: usize,
    /// Mean over finite PSNR values.
    pub mean_psnr: f64,
    /// Rows left out of the PSNR mean because they were infinite.
    pub infinite_psnr: usize,
    pub mean_ssim: f64,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct EvaluationReport {
    pub rows: Vec<ReportRow>,
}

fn fmt_value(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else {
        format!("{v:.6}")
    }
}

impl EvaluationReport {
    pub fn summary(&self, method: Method) -> MethodSummary {
        let rows: Vec<&ReportRow> = self.rows.iter().filter(|r| r.method == method).collect();
        let finite: Vec<f64> = rows.iter().map(|r| r.psnr).filter(|v| v.is_finite()).collect();
        let mean = |v: &[f64]| {
            if v.is_empty() {
                f64::NAN
            } else {
                v.iter().sum::<f64>() / v.len() as f64
            }
        };
        let ssims: Vec<f64> = rows.iter().map(|r| r.ssim).collect();
        MethodSummary {
            method,
            images: rows.len(),
            mean_psnr: mean(&finite),
            infinite_psnr: rows.len() - finite.len(),
            mean_ssim: mean(&ssims),
        }
    }

    pub fn summaries(&self) -> Vec<MethodSummary> {
        Method::ALL.iter().map(|&m| self.summary(m)).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("id,method,psnr,ssim\n");
        for r in &self.rows {
            let _ = writeln!(s, "{},{},{},{}", r.id, r.method.as_str(), fmt_value(r.psnr), fmt_value(r.ssim));
        }
        s
    }

    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<16} {:<9} {:>10} {:>8}", "id", "method", "psnr", "ssim");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:<16} {:<9} {:>10} {:>8.4}",
                r.id,
                r.method.as_str(),
                fmt_value(r.psnr),
                r.ssim
            );
        }
        let _ = writeln!(s);
        for m in self.summaries() {
            let _ = write!(
                s,
                "{:<16} {:<9} {:>10.4} {:>8.4}",
                "mean",
                m.method.as_str(),
                m.mean_psnr,
                m.mean_ssim
            );
            if m.infinite_psnr > 0 {
                let _ = write!(s, "  ({} infinite PSNR excluded)", m.infinite_psnr);
            }
            let _ = writeln!(s);
        }
        s
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_csv()).map_err(|e| Error::from(e).at(path))
    }
}

/// Score the three methods on one prepared face.
pub fn score_face(prep: &Prepared, models: &ModelSet, dbs: &DatabaseSet, cfg: &HallucinationConfig) -> Result<Vec<ReportRow>> {
    let truth = prep.hr_unpadded()?;
    let outputs = [
        (Method::Bicubic, prep.up.clone()),
        (Method::CnnOnly, reconstruct_luma(&prep.up, &prep.regions, models, None, cfg)?),
        (Method::Lcge, reconstruct_luma(&prep.up, &prep.regions, models, Some(dbs), cfg)?),
    ];
    outputs
        .into_iter()
        .map(|(method, out)| {
            let out = prep.unpad(&out)?;
            Ok(ReportRow {
                id: prep.id.clone(),
                method,
                psnr: psnr(&out, &truth)?,
                ssim: ssim(&out, &truth)?,
            })
        })
        .collect()
}

/// Leave-one-out evaluation over already prepared faces.
///
/// Faces tagged `test` are evaluated (all faces when none are tagged).
/// Networks are trained on the `train` faces (all faces when none are
/// tagged), once, or per fold without the held-out face when `strict`.
/// Each fold's databases hold every face except the held-out one.
pub fn evaluate_prepared(data: &[Prepared], cfg: &HallucinationConfig, strict: bool) -> Result<EvaluationReport> {
    cfg.validate()?;
    if data.len() < 2 {
        return Err(Error::invalid(format!(
            "leave-one-out needs at least 2 faces, got {}",
            data.len()
        )));
    }
    let pick = |split: Split| -> Vec<&Prepared> {
        let v: Vec<&Prepared> = data.iter().filter(|p| p.split == split).collect();
        if v.is_empty() {
            data.iter().collect()
        } else {
            v
        }
    };
    let eval = pick(Split::Test);
    let train_set = pick(Split::Train);
    let all: Vec<&Prepared> = data.iter().collect();

    let shared = if strict {
        None
    } else {
        let models = train_models(&train_set, cfg)?;
        let dbs = build_databases(&all, &models, cfg)?;
        Some((models, dbs))
    };

    let mut report = EvaluationReport::default();
    for prep in eval {
        let fold = || -> Result<Vec<ReportRow>> {
            let rows = match &shared {
                Some((models, dbs)) => score_face(prep, models, &dbs.without_source(&prep.id), cfg)?,
                None => {
                    let train_fold: Vec<&Prepared> =
                        train_set.iter().copied().filter(|p| p.id != prep.id).collect();
                    let others: Vec<&Prepared> = all.iter().copied().filter(|p| p.id != prep.id).collect();
                    let models = train_models(&train_fold, cfg)?;
                    let dbs = build_databases(&others, &models, cfg)?;
                    score_face(prep, &models, &dbs, cfg)?
                }
            };
            Ok(rows)
        };
        let rows = fold().map_err(|e| Error::invalid(format!("{}: {e}", prep.id)))?;
        for r in &rows {
            log::info!("{} {}: {:.3} dB, ssim {:.4}", r.id, r.method.as_str(), r.psnr, r.ssim);
        }
        report.rows.extend(rows);
    }
    Ok(report)
}

/// Leave-one-out evaluation of a manifest.
pub fn evaluate_loo(manifest: &DatasetManifest, cfg: &HallucinationConfig) -> Result<EvaluationReport> {
    let samples = manifest
        .entries
        .iter()
        .map(|e| Sample::load(e).map_err(|err| Error::invalid(format!("{}: {err}", e.id))))
        .collect::<Result<Vec<_>>>()?;
    let data = prepare_all(&samples, cfg)?;
    evaluate_prepared(&data, cfg, cfg.strict || manifest.strict)
}
