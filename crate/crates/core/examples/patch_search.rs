//! Build a patch database from several faces and query it.
//!
//! cargo run --release --example patch_search -- [k]

use lcge::cnn::{Architecture, ConvNet};
use lcge::image::extract_patch;
use lcge::patch_db::{build_pairs, similarity, PatchDatabase, DEFAULT_ALPHA, DEFAULT_PATCH_SIZE};
use lcge::regions::{build_regions, crop};
use lcge::synth::face;
use lcge::Category;

fn main() -> lcge::Result<()> {
    let k = std::env::args().nth(1).map_or(5, |s| s.parse().expect("k"));
    let components = (0..8)
        .map(|s| {
            let f = face(s, 160, 120)?;
            let regions = build_regions(&f.landmarks, 160, 120, 8)?;
            Ok((format!("subject_{s:03}"), crop(&f.image.y, &regions[Category::Eyes.index()])?))
        })
        .collect::<lcge::Result<Vec<_>>>()?;
    // an identity network stands in for a trained one
    let net = ConvNet::identity(Category::Eyes, Architecture::REFERENCE);
    let pairs = build_pairs(&components, 4, &net)?;
    let db = PatchDatabase::build(Category::Eyes, DEFAULT_PATCH_SIZE, &pairs)?;
    println!("{} entries from {:?}", db.len(), db.source_ids());

    let query_face = &pairs[0].deep;
    let centre = (query_face.height() / 2, query_face.width() / 3);
    let q = extract_patch(query_face, centre, DEFAULT_PATCH_SIZE)?;
    println!("query centred at (row {}, col {}) of {}", centre.0, centre.1, pairs[0].source_id);
    for hit in db.knn(&q, k, DEFAULT_ALPHA)? {
        let e = db.entry(hit.index);
        println!("  #{:<5} {} at {:?}: distance {:.5}", hit.index, e.source_id, e.center, hit.distance);
    }

    let without = db.without_source(&pairs[0].source_id);
    let best = without.knn(&q, 1, DEFAULT_ALPHA)?[0];
    let e = without.entry(best.index);
    let p = lcge::Patch::new(e.center, DEFAULT_PATCH_SIZE, e.deep.to_vec())?;
    println!(
        "best match from another face: {} (distance {:.5})",
        e.source_id,
        similarity(&p, &q, DEFAULT_ALPHA)?
    );
    Ok(())
}
