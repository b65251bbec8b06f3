//! Landmark-driven component regions and stitching them back together.
//!
//! cargo run --example face_regions

use lcge::regions::{build_regions, crop, stitch};
use lcge::synth::face;

fn main() -> lcge::Result<()> {
    let f = face(3, 160, 120)?;
    print!("{}", f.landmarks.to_text());
    let y = &f.image.y;
    let regions = build_regions(&f.landmarks, y.width(), y.height(), 8)?;
    for r in &regions {
        let owned = r.mask.samples().iter().filter(|&&m| m > 0.5).count();
        println!(
            "{:>9}: x {:>3}..={:<3} y {:>3}..={:<3} ({} pixels owned)",
            r.category.as_str(),
            r.rect.x0,
            r.rect.x1,
            r.rect.y0,
            r.rect.y1,
            owned
        );
    }
    let pieces = regions
        .iter()
        .map(|r| Ok((r.clone(), crop(y, r)?)))
        .collect::<lcge::Result<Vec<_>>>()?;
    let back = stitch(&pieces, y.width(), y.height())?;
    println!("stitching the crops reproduces the image: {}", back == *y);
    Ok(())
}
