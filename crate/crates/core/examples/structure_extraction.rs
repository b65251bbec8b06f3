//! Extracted structure of a nose from exemplars of other faces, compared
//! with the deep component it started from.
//!
//! cargo run --release --example structure_extraction -- [stride]

use lcge::cnn::{Architecture, ConvNet};
use lcge::guided::{transfer_details, GuidedFilterParams};
use lcge::image::degrade;
use lcge::metrics::psnr;
use lcge::patch_db::{build_pairs, PatchDatabase, DEFAULT_PATCH_SIZE};
use lcge::regions::{build_regions, crop};
use lcge::regression::{extract_structure, query_centers, StructureParams};
use lcge::synth::face;
use lcge::{Category, ImagePlane};

fn nose(seed: u64) -> lcge::Result<ImagePlane> {
    let f = face(seed, 160, 120)?;
    let regions = build_regions(&f.landmarks, 160, 120, 8)?;
    crop(&f.image.y, &regions[Category::Nose.index()])
}

fn main() -> lcge::Result<()> {
    let stride = std::env::args().nth(1).map_or(1, |s| s.parse().expect("stride"));
    let scale = 4;
    let net = ConvNet::identity(Category::Nose, Architecture::REFERENCE);
    let components = (1..13)
        .map(|s| Ok((format!("subject_{s:03}"), nose(s)?)))
        .collect::<lcge::Result<Vec<_>>>()?;
    let db = PatchDatabase::build(Category::Nose, DEFAULT_PATCH_SIZE, &build_pairs(&components, scale, &net)?)?;

    let hr = nose(0)?;
    let deep = degrade(&hr, scale)?;
    let params = StructureParams {
        stride,
        ..StructureParams::default()
    };
    let queries = query_centers(deep.width(), deep.height(), DEFAULT_PATCH_SIZE, stride).len();
    let extracted = extract_structure(&deep, &db, &params)?;
    println!("{queries} queries against {} entries", db.len());
    println!("deep component:        {:.3} dB", psnr(&hr, &deep)?);
    // ridge shrinkage darkens the structure; only its detail layer is kept
    println!("extracted structure:   {:.3} dB", psnr(&hr, &extracted)?);
    let enhanced = transfer_details(&deep, &extracted, &GuidedFilterParams::default())?;
    println!("after detail transfer: {:.3} dB", psnr(&hr, &enhanced)?);
    Ok(())
}
