//! Face hallucination in two stages.
//!
//! A low-resolution face is split into five regions (eyes, eyebrows, nose,
//! mouth and the remainder). Each region is bicubic-upsampled and passed
//! through its own three-layer convolutional network, producing a *deep
//! facial component*. The four facial components are then enhanced from an
//! exemplar database:
//!
//! 1. every pixel's patch is matched against deep-component patches of
//!    training faces ([`patch_db`]),
//! 2. a ridge regression over the K best candidates is mapped onto their
//!    high-resolution counterparts and averaged into an *extracted
//!    structure* ([`regression`]),
//! 3. high-frequency detail of the extracted structure is transplanted onto
//!    the deep component with guided filtering ([`guided`]).
//!
//! The enhanced components are stitched back together and recombined with
//! the upsampled chroma ([`pipeline`]).
//!
//! Everything runs on `f64` planes with samples in `[0, 1]`.

pub mod cnn;
pub mod config;
pub mod error;
pub mod guided;
pub mod image;
pub mod metrics;
pub mod patch_db;
pub mod pipeline;
pub mod regions;
pub mod regression;
pub mod synth;

pub use crate::error::{Error, Result};
pub use crate::image::{ColorImage, ImagePlane, Patch};
pub use crate::regions::Category;
