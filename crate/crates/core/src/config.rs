//! Run configuration and its `key = value` file format.
//!
//! ```text
//! # comments and blank lines are ignored
//! scale = 4
//! lambda = n_squared      # or a number
//! search_radius = none    # or a pixel count
//! ```

use std::fmt::Write as _;
use std::path::Path;

use crate::cnn::{Init, TrainConfig};
use crate::error::{Error, Result};
use crate::guided::GuidedFilterParams;
use crate::image::check_patch_size;
use crate::patch_db::{DEFAULT_ALPHA, DEFAULT_K, DEFAULT_PATCH_SIZE};
use crate::regression::{LambdaRule, StructureParams};

#[derive(Clone, Debug, PartialEq)]
pub struct HallucinationConfig {
    pub scale: usize,
    pub patch_size: usize,
    pub k: usize,
    pub alpha: f64,
    pub lambda: LambdaRule,
    pub gf_radius: usize,
    pub gf_epsilon: f64,
    /// Padding around landmark boxes, in HR pixels.
    pub region_pad: usize,
    pub stride: usize,
    pub enhance_remainder: bool,
    /// Restricts candidate patches to a window around the query position;
    /// `None` scans the whole database.
    pub search_radius: Option<usize>,
    /// Retrain the networks for every leave-one-out fold.
    pub strict: bool,
    pub seed: u64,
    pub train: TrainConfig,
}

impl Default for HallucinationConfig {
    fn default() -> Self {
        let gf = GuidedFilterParams::default();
        Self {
            scale: 4,
            patch_size: DEFAULT_PATCH_SIZE,
            k: DEFAULT_K,
            alpha: DEFAULT_ALPHA,
            lambda: LambdaRule::PatchPixels,
            gf_radius: gf.radius,
            gf_epsilon: gf.epsilon,
            region_pad: 8,
            stride: 1,
            enhance_remainder: false,
            search_radius: None,
            strict: false,
            seed: 0,
            train: TrainConfig::default(),
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::invalid(format!("bad value {value:?} for {key}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::invalid(format!("bad value {value:?} for {key}, expected true or false"))),
    }
}

impl HallucinationConfig {
    pub const KEYS: &'static [&'static str] = &[
        "scale",
        "patch_size",
        "k",
        "alpha",
        "lambda",
        "gf_radius",
        "gf_epsilon",
        "region_pad",
        "stride",
        "enhance_remainder",
        "search_radius",
        "strict",
        "seed",
        "learning_rate",
        "epochs",
        "batch_size",
        "sample_patch_size",
        "init",
        "init_sigma",
    ];

    /// Set one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "scale" => self.scale = parse_num(key, value)?,
            "patch_size" => self.patch_size = parse_num(key, value)?,
            "k" => self.k = parse_num(key, value)?,
            "alpha" => self.alpha = parse_num(key, value)?,
            "lambda" => {
                self.lambda = match value {
                    "n_squared" | "n2" => LambdaRule::PatchPixels,
                    v => LambdaRule::Fixed(parse_num(key, v)?),
                }
            }
            "gf_radius" => self.gf_radius = parse_num(key, value)?,
            "gf_epsilon" => self.gf_epsilon = parse_num(key, value)?,
            "region_pad" => self.region_pad = parse_num(key, value)?,
            "stride" => self.stride = parse_num(key, value)?,
            "enhance_remainder" => self.enhance_remainder = parse_bool(key, value)?,
            "search_radius" => {
                self.search_radius = match value {
                    "none" | "" => None,
                    v => Some(parse_num(key, v)?),
                }
            }
            "strict" => self.strict = parse_bool(key, value)?,
            "seed" => self.seed = parse_num(key, value)?,
            "learning_rate" => self.train.learning_rate = parse_num(key, value)?,
            "epochs" => self.train.epochs = parse_num(key, value)?,
            "batch_size" => self.train.batch_size = parse_num(key, value)?,
            "sample_patch_size" => self.train.sample_patch_size = parse_num(key, value)?,
            "init" => {
                let sigma = self.init_sigma();
                self.train.init = match value {
                    "gaussian" => Init::Gaussian { sigma },
                    "identity_gaussian" => Init::IdentityGaussian { sigma },
                    _ => return Err(Error::invalid(format!("unknown init {value:?}"))),
                }
            }
            "init_sigma" => {
                let sigma = parse_num(key, value)?;
                self.train.init = match self.train.init {
                    Init::Gaussian { .. } => Init::Gaussian { sigma },
                    Init::IdentityGaussian { .. } => Init::IdentityGaussian { sigma },
                }
            }
            other => return Err(Error::invalid(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    fn init_sigma(&self) -> f64 {
        match self.train.init {
            Init::Gaussian { sigma } | Init::IdentityGaussian { sigma } => sigma,
        }
    }

    /// Apply `key = value` lines on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: i + 1,
                message: format!("expected key = value, got {line:?}"),
            })?;
            self.set(key, value).map_err(|e| Error::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::from(e).at(path))?;
        Self::from_text(&text).map_err(|e| e.at(path))
    }

    /// Render every key in the file format; parsing the result gives back
    /// an equal config.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let lambda = match self.lambda {
            LambdaRule::PatchPixels => "n_squared".to_string(),
            LambdaRule::Fixed(v) => format!("{v:?}"),
        };
        let radius = self.search_radius.map_or("none".to_string(), |r| r.to_string());
        let init = match self.train.init {
            Init::Gaussian { .. } => "gaussian",
            Init::IdentityGaussian { .. } => "identity_gaussian",
        };
        let t = &self.train;
        let _ = write!(
            s,
            "scale = {}\npatch_size = {}\nk = {}\nalpha = {:?}\nlambda = {lambda}\n\
             gf_radius = {}\ngf_epsilon = {:?}\nregion_pad = {}\nstride = {}\n\
             enhance_remainder = {}\nsearch_radius = {radius}\nstrict = {}\nseed = {}\n\
             learning_rate = {:?}\nepochs = {}\nbatch_size = {}\nsample_patch_size = {}\n\
             init = {init}\ninit_sigma = {:?}\n",
            self.scale,
            self.patch_size,
            self.k,
            self.alpha,
            self.gf_radius,
            self.gf_epsilon,
            self.region_pad,
            self.stride,
            self.enhance_remainder,
            self.strict,
            self.seed,
            t.learning_rate,
            t.epochs,
            t.batch_size,
            t.sample_patch_size,
            self.init_sigma(),
        );
        s
    }

    pub fn validate(&self) -> Result<()> {
        if self.scale < 1 {
            return Err(Error::invalid("scale must be at least 1"));
        }
        check_patch_size(self.patch_size)?;
        if self.k == 0 {
            return Err(Error::invalid("k must be positive"));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::invalid(format!("alpha must lie in [0, 1], got {}", self.alpha)));
        }
        if let LambdaRule::Fixed(v) = self.lambda {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("lambda must be finite and >= 0, got {v}")));
            }
        }
        if self.stride == 0 {
            return Err(Error::invalid("stride must be positive"));
        }
        self.guided().validate()?;
        self.train.validate()
    }

    pub fn guided(&self) -> GuidedFilterParams {
        GuidedFilterParams {
            radius: self.gf_radius,
            epsilon: self.gf_epsilon,
        }
    }

    pub fn structure(&self) -> StructureParams {
        StructureParams {
            k: self.k,
            alpha: self.alpha,
            lambda: self.lambda,
            stride: self.stride,
            search_radius: self.search_radius,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_reference_constants() {
        let c = HallucinationConfig::default();
        assert_eq!((c.k, c.alpha, c.lambda), (5, 0.2, LambdaRule::PatchPixels));
        assert_eq!(c.lambda.value(c.patch_size), 49.0);
        assert!(!c.enhance_remainder);
        c.validate().unwrap();
    }

    #[test]
    fn parse_file_and_round_trip() {
        let c = HallucinationConfig::from_text(
            "# desk run\nscale = 10\nlambda = 0.5\nsearch_radius = 3\nenhance_remainder = yes\n\ninit = gaussian\ninit_sigma=0.01\n",
        )
        .unwrap();
        assert_eq!(c.scale, 10);
        assert_eq!(c.lambda, LambdaRule::Fixed(0.5));
        assert_eq!(c.search_radius, Some(3));
        assert!(c.enhance_remainder);
        assert_eq!(c.train.init, Init::Gaussian { sigma: 0.01 });
        assert_eq!(HallucinationConfig::from_text(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = HallucinationConfig::from_text("scale = 4\nfoo = 1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        assert!(HallucinationConfig::from_text("scale 4").is_err());
        assert!(HallucinationConfig::from_text("patch_size = 6").is_err());
        assert!(HallucinationConfig::from_text("alpha = 1.5").is_err());
    }
}
