//! Exemplar databases of aligned (deep component, HR component) patches and
//! exact K-nearest-neighbour search under a blended NCC / absolute
//! difference distance.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::cnn::{net_forward, ConvNet};
use crate::error::{Error, Result};
use crate::image::{check_patch_size, degrade, extract_patch_into, ImagePlane, Patch};
use crate::regions::Category;

/// Weight of the correlation term in the patch distance.
pub const DEFAULT_ALPHA: f64 = 0.2;
pub const DEFAULT_K: usize = 5;
pub const DEFAULT_PATCH_SIZE: usize = 7;

/// A deep facial component aligned with its ground-truth component.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingPair {
    pub category: Category,
    pub deep: ImagePlane,
    pub hr: ImagePlane,
    pub source_id: String,
}

/// Degrade each HR component by `scale`, run it through `net`, and pair the
/// result with the original. Components smaller than the scale factor are
/// skipped.
pub fn build_pairs(
    hr_components: &[(String, ImagePlane)],
    scale: usize,
    net: &ConvNet,
) -> Result<Vec<TrainingPair>> {
    let mut pairs = Vec::with_capacity(hr_components.len());
    for (id, hr) in hr_components {
        if hr.width() < scale || hr.height() < scale {
            log::warn!(
                "skipping {} component of {id}: {}x{} is smaller than scale {scale}",
                net.category,
                hr.width(),
                hr.height()
            );
            continue;
        }
        let up = degrade(hr, scale)?;
        let deep = net_forward(&up, net)?;
        pairs.push(TrainingPair {
            category: net.category,
            deep,
            hr: hr.clone(),
            source_id: id.clone(),
        });
    }
    Ok(pairs)
}

/// Zero-mean copy of a patch and its squared Euclidean norm. Constant
/// patches get zero so their correlation is treated as undefined.
pub(crate) fn centre(values: &[f64], centered: &mut Vec<f64>) -> f64 {
    let n = values.len();
    let mut sum = 0.0;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in values {
        sum += v;
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if lo == hi {
        centered.extend(std::iter::repeat_n(0.0, n));
        return 0.0;
    }
    let mean = sum / n as f64;
    let mut sq = 0.0;
    for &v in values {
        let c = v - mean;
        centered.push(c);
        sq += c * c;
    }
    sq
}

#[inline]
fn abs_diff_sum(p: &[f64], q: &[f64], mut acc: f64) -> f64 {
    for (a, b) in p.iter().zip(q) {
        acc += (a - b).abs();
    }
    acc
}

#[inline]
fn combine(
    abs_sum: f64,
    n: usize,
    pc: &[f64],
    pn: f64,
    qc: &[f64],
    qn: f64,
    alpha: f64,
) -> f64 {
    let d_abs = abs_sum / n as f64;
    let ncc = if pn == 0.0 || qn == 0.0 {
        0.0
    } else {
        let mut dot = 0.0;
        for (a, b) in pc.iter().zip(qc) {
            dot += a * b;
        }
        // sqrt(x * x) == x exactly, so a patch matched with itself gives 1
        (dot / (pn * qn).sqrt()).clamp(-1.0, 1.0)
    };
    alpha * (1.0 - ncc) + (1.0 - alpha) * d_abs
}

/// `alpha * (1 - ncc) + (1 - alpha) * mean|p - q|`, where `ncc` is the
/// zero-mean normalized cross correlation (0 when either patch is flat).
pub fn similarity(p: &Patch, q: &Patch, alpha: f64) -> Result<f64> {
    similarity_values(&p.values, &q.values, alpha)
}

pub fn similarity_values(p: &[f64], q: &[f64], alpha: f64) -> Result<f64> {
    if p.len() != q.len() || p.is_empty() {
        return Err(Error::invalid(format!(
            "patch lengths differ: {} vs {}",
            p.len(),
            q.len()
        )));
    }
    let (mut pc, mut qc) = (Vec::with_capacity(p.len()), Vec::with_capacity(q.len()));
    let pn = centre(p, &mut pc);
    let qn = centre(q, &mut qc);
    Ok(combine(abs_diff_sum(p, q, 0.0), p.len(), &pc, pn, &qc, qn, alpha))
}

/// Dense block of entries taken from one training pair.
#[derive(Clone, Debug, PartialEq)]
struct Block {
    source_id: String,
    first: usize,
    rows: usize,
    cols: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub distance: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EntryRef<'a> {
    pub source_id: &'a str,
    /// (row, col) of the patch centre inside the training component.
    pub center: (usize, usize),
    pub deep: &'a [f64],
    pub hr: &'a [f64],
}

/// A query patch with its correlation statistics precomputed.
pub struct Query {
    values: Vec<f64>,
    centered: Vec<f64>,
    norm: f64,
    center: (usize, usize),
}

impl Query {
    pub fn new(patch: &Patch) -> Self {
        Self::from_values(patch.values.clone(), patch.center)
    }

    pub(crate) fn from_values(values: Vec<f64>, center: (usize, usize)) -> Self {
        let mut centered = Vec::with_capacity(values.len());
        let norm = centre(&values, &mut centered);
        Self {
            values,
            centered,
            norm,
            center,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// All interior patches of a category's training pairs, ordered by
/// `(source_id, row, col)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PatchDatabase {
    category: Category,
    patch_size: usize,
    blocks: Vec<Block>,
    deep: Vec<f64>,
    hr: Vec<f64>,
    centered: Vec<f64>,
    norms: Vec<f64>,
}

impl PatchDatabase {
    /// Enumerate every interior pixel (stride 1, margin `patch_size / 2`) of
    /// every pair.
    pub fn build(category: Category, patch_size: usize, pairs: &[TrainingPair]) -> Result<Self> {
        check_patch_size(patch_size)?;
        let mut order: Vec<usize> = (0..pairs.len()).collect();
        order.sort_by(|&a, &b| pairs[a].source_id.cmp(&pairs[b].source_id));
        let m = patch_size / 2;
        let mut db = Self {
            category,
            patch_size,
            blocks: Vec::new(),
            deep: Vec::new(),
            hr: Vec::new(),
            centered: Vec::new(),
            norms: Vec::new(),
        };
        for &pi in &order {
            let pair = &pairs[pi];
            if pair.category != category {
                return Err(Error::CategoryMismatch {
                    expected: category,
                    found: pair.category,
                });
            }
            pair.deep.ensure_same_dims(&pair.hr)?;
            let (w, h) = pair.deep.dims();
            if w <= 2 * m || h <= 2 * m {
                continue;
            }
            let (rows, cols) = (h - 2 * m, w - 2 * m);
            db.blocks.push(Block {
                source_id: pair.source_id.clone(),
                first: db.deep.len() / (patch_size * patch_size),
                rows,
                cols,
            });
            for row in m..m + rows {
                for col in m..m + cols {
                    extract_patch_into(&pair.deep, (row, col), patch_size, &mut db.deep);
                    extract_patch_into(&pair.hr, (row, col), patch_size, &mut db.hr);
                }
            }
        }
        db.compute_stats();
        Ok(db)
    }

    fn compute_stats(&mut self) {
        let nn = self.patch_size * self.patch_size;
        self.centered = Vec::with_capacity(self.deep.len());
        self.norms = self
            .deep
            .chunks_exact(nn)
            .map(|p| centre(p, &mut self.centered))
            .collect();
    }

    pub fn category(&self) -> Category {
        self.category
    }

    pub fn patch_size(&self) -> usize {
        self.patch_size
    }

    pub fn len(&self) -> usize {
        self.norms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.norms.is_empty()
    }

    /// Distinct source ids in database order.
    pub fn source_ids(&self) -> Vec<&str> {
        let mut ids: Vec<&str> = self.blocks.iter().map(|b| b.source_id.as_str()).collect();
        ids.dedup();
        ids
    }

    pub fn entry(&self, index: usize) -> EntryRef<'_> {
        let nn = self.patch_size * self.patch_size;
        let bi = self.blocks.partition_point(|b| b.first <= index) - 1;
        let b = &self.blocks[bi];
        let local = index - b.first;
        let m = self.patch_size / 2;
        EntryRef {
            source_id: &b.source_id,
            center: (m + local / b.cols, m + local % b.cols),
            deep: &self.deep[index * nn..(index + 1) * nn],
            hr: &self.hr[index * nn..(index + 1) * nn],
        }
    }

    /// Copy of the database without any entry from `source_id`.
    pub fn without_source(&self, source_id: &str) -> Self {
        let nn = self.patch_size * self.patch_size;
        let mut out = Self {
            category: self.category,
            patch_size: self.patch_size,
            blocks: Vec::new(),
            deep: Vec::new(),
            hr: Vec::new(),
            centered: Vec::new(),
            norms: Vec::new(),
        };
        for b in self.blocks.iter().filter(|b| b.source_id != source_id) {
            let count = b.rows * b.cols;
            let range = b.first * nn..(b.first + count) * nn;
            out.blocks.push(Block {
                first: out.norms.len(),
                ..b.clone()
            });
            out.deep.extend_from_slice(&self.deep[range.clone()]);
            out.hr.extend_from_slice(&self.hr[range.clone()]);
            out.centered.extend_from_slice(&self.centered[range]);
            out.norms
                .extend_from_slice(&self.norms[b.first..b.first + count]);
        }
        out
    }

    /// Exact K nearest neighbours over the whole database, ascending by
    /// distance, ties broken by database order.
    pub fn knn(&self, query: &Patch, k: usize, alpha: f64) -> Result<Vec<Neighbor>> {
        self.check_query(query.values.len(), k)?;
        Ok(self.search(&Query::new(query), k, alpha, None))
    }

    pub(crate) fn check_query(&self, len: usize, k: usize) -> Result<()> {
        let nn = self.patch_size * self.patch_size;
        if len != nn {
            return Err(Error::invalid(format!(
                "query has {len} values, database patches have {nn}"
            )));
        }
        if k == 0 || k > self.len() {
            return Err(Error::invalid(format!(
                "k = {k} but the {} database has {} entries",
                self.category,
                self.len()
            )));
        }
        Ok(())
    }

    /// Search restricted to entries whose centre lies within `radius` rows
    /// and columns of the query centre. Falls back to the full scan when the
    /// window holds fewer than `k` entries.
    pub(crate) fn search(&self, q: &Query, k: usize, alpha: f64, window: Option<usize>) -> Vec<Neighbor> {
        let mut top = TopK::new(k);
        match window {
            None => {
                for j in 0..self.len() {
                    self.consider(q, j, alpha, &mut top);
                }
            }
            Some(radius) => {
                let m = self.patch_size / 2;
                let (qr, qc) = q.center;
                let mut seen = 0;
                for b in &self.blocks {
                    let r0 = qr.saturating_sub(radius).max(m);
                    let r1 = (qr + radius).min(m + b.rows - 1);
                    let c0 = qc.saturating_sub(radius).max(m);
                    let c1 = (qc + radius).min(m + b.cols - 1);
                    if r0 > r1 || c0 > c1 {
                        continue;
                    }
                    for row in r0..=r1 {
                        let base = b.first + (row - m) * b.cols;
                        for col in c0..=c1 {
                            self.consider(q, base + col - m, alpha, &mut top);
                            seen += 1;
                        }
                    }
                }
                if seen < k {
                    return self.search(q, k, alpha, None);
                }
            }
        }
        top.into_vec()
    }

    /// Score entry `j` against the query, abandoning early once the
    /// absolute-difference term alone cannot beat the current k-th best.
    #[inline]
    fn consider(&self, q: &Query, j: usize, alpha: f64, top: &mut TopK) {
        let n = self.patch_size;
        let nn = n * n;
        let deep = &self.deep[j * nn..(j + 1) * nn];
        let bound = top.threshold();
        let mut acc = 0.0;
        for r in 0..n {
            acc = abs_diff_sum(&deep[r * n..(r + 1) * n], &q.values[r * n..(r + 1) * n], acc);
            if (1.0 - alpha) * (acc / nn as f64) > bound {
                return;
            }
        }
        let d = combine(
            acc,
            nn,
            &self.centered[j * nn..(j + 1) * nn],
            self.norms[j],
            &q.centered,
            q.norm,
            alpha,
        );
        top.offer(d, j);
    }
}

struct TopK {
    k: usize,
    items: Vec<Neighbor>,
}

impl TopK {
    fn new(k: usize) -> Self {
        Self {
            k,
            items: Vec::with_capacity(k + 1),
        }
    }

    #[inline]
    fn threshold(&self) -> f64 {
        if self.items.len() < self.k {
            f64::INFINITY
        } else {
            self.items[self.k - 1].distance
        }
    }

    #[inline]
    fn offer(&mut self, distance: f64, index: usize) {
        if self.items.len() == self.k && distance >= self.threshold() {
            return;
        }
        let pos = self.items.partition_point(|n| n.distance <= distance);
        self.items.insert(pos, Neighbor { index, distance });
        self.items.truncate(self.k);
    }

    fn into_vec(self) -> Vec<Neighbor> {
        self.items
    }
}

// Binary format, little-endian:
//   b"LCGEPDB1", u8 category, u32 patch size, u64 entry count, u32 block count,
//   per block: u32 id length, id bytes (utf-8), u32 rows, u32 cols,
//   then f64 deep payload followed by f64 hr payload (entry count * size²).
const DB_MAGIC: &[u8; 8] = b"LCGEPDB1";

pub fn write_db(mut w: impl Write, db: &PatchDatabase) -> Result<()> {
    w.write_all(DB_MAGIC)?;
    w.write_all(&[db.category.to_byte()])?;
    w.write_all(&(db.patch_size as u32).to_le_bytes())?;
    w.write_all(&(db.len() as u64).to_le_bytes())?;
    w.write_all(&(db.blocks.len() as u32).to_le_bytes())?;
    for b in &db.blocks {
        w.write_all(&(b.source_id.len() as u32).to_le_bytes())?;
        w.write_all(b.source_id.as_bytes())?;
        w.write_all(&(b.rows as u32).to_le_bytes())?;
        w.write_all(&(b.cols as u32).to_le_bytes())?;
    }
    for v in db.deep.iter().chain(&db.hr) {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_exact(r: &mut impl Read, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Format("database file is truncated".into()),
        _ => Error::Io(e),
    })
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b)?;
    Ok(u32::from_le_bytes(b))
}

pub fn read_db(mut r: impl Read) -> Result<PatchDatabase> {
    let mut magic = [0u8; 8];
    read_exact(&mut r, &mut magic)?;
    if &magic != DB_MAGIC {
        return Err(Error::Format("not a patch database (bad magic or version)".into()));
    }
    let mut cat = [0u8; 1];
    read_exact(&mut r, &mut cat)?;
    let category = Category::from_byte(cat[0])
        .ok_or_else(|| Error::Format(format!("unknown category byte {}", cat[0])))?;
    let patch_size = read_u32(&mut r)? as usize;
    check_patch_size(patch_size).map_err(|e| Error::Format(e.to_string()))?;
    let mut cnt = [0u8; 8];
    read_exact(&mut r, &mut cnt)?;
    let count = u64::from_le_bytes(cnt) as usize;
    let nblocks = read_u32(&mut r)? as usize;
    let mut blocks = Vec::with_capacity(nblocks.min(1 << 16));
    let mut first = 0usize;
    for _ in 0..nblocks {
        let len = read_u32(&mut r)? as usize;
        if len > 4096 {
            return Err(Error::Format(format!("source id length {len} is implausible")));
        }
        let mut id = vec![0u8; len];
        read_exact(&mut r, &mut id)?;
        let source_id =
            String::from_utf8(id).map_err(|_| Error::Format("source id is not utf-8".into()))?;
        let rows = read_u32(&mut r)? as usize;
        let cols = read_u32(&mut r)? as usize;
        blocks.push(Block {
            source_id,
            first,
            rows,
            cols,
        });
        first += rows * cols;
    }
    if first != count {
        return Err(Error::Format(format!(
            "header claims {count} entries but blocks hold {first}"
        )));
    }
    let nn = patch_size * patch_size;
    let mut read_floats = |len: usize| -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(len);
        let mut b = [0u8; 8];
        for _ in 0..len {
            read_exact(&mut r, &mut b)?;
            out.push(f64::from_le_bytes(b));
        }
        Ok(out)
    };
    let deep = read_floats(count * nn)?;
    let hr = read_floats(count * nn)?;
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing)? != 0 {
        return Err(Error::Format("trailing bytes after database payload".into()));
    }
    let mut db = PatchDatabase {
        category,
        patch_size,
        blocks,
        deep,
        hr,
        centered: Vec::new(),
        norms: Vec::new(),
    };
    db.compute_stats();
    Ok(db)
}

pub fn save_db(path: impl AsRef<Path>, db: &PatchDatabase) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::from(e).at(path))?;
    let mut w = BufWriter::new(file);
    write_db(&mut w, db).map_err(|e| e.at(path))?;
    w.flush().map_err(|e| Error::from(e).at(path))
}

pub fn load_db(path: impl AsRef<Path>) -> Result<PatchDatabase> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::from(e).at(path))?;
    read_db(BufReader::new(file)).map_err(|e| e.at(path))
}

/// Load a database and require it to belong to `category`.
pub fn load_db_for(path: impl AsRef<Path>, category: Category) -> Result<PatchDatabase> {
    let path = path.as_ref();
    let db = load_db(path)?;
    if db.category != category {
        return Err(Error::CategoryMismatch {
            expected: category,
            found: db.category,
        }
        .at(path));
    }
    Ok(db)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnn::Architecture;
    use crate::image::extract_patch;

    fn textured(w: usize, h: usize, seed: f64) -> ImagePlane {
        ImagePlane::from_fn(w, h, |x, y| {
            (0.5 + 0.3 * ((x as f64 * 0.8 + seed).sin() + (y as f64 * 0.5 * seed).cos()) / 2.0)
                .clamp(0.0, 1.0)
        })
    }

    fn pair(id: &str, w: usize, h: usize, seed: f64) -> TrainingPair {
        let hr = textured(w, h, seed);
        TrainingPair {
            category: Category::Nose,
            deep: hr.map(|v| v * 0.9 + 0.05),
            hr,
            source_id: id.into(),
        }
    }

    #[test]
    fn similarity_perfect_match_and_opposites() {
        let p = Patch::new((0, 0), 3, (0..9).map(|v| v as f64 / 8.0).collect()).unwrap();
        assert_eq!(similarity(&p, &p, 0.2).unwrap(), 0.0);
        let zeros = Patch::new((0, 0), 3, vec![0.0; 9]).unwrap();
        let ones = Patch::new((0, 0), 3, vec![1.0; 9]).unwrap();
        assert_eq!(similarity(&zeros, &ones, 0.2).unwrap(), 1.0);
        let short = Patch::new((0, 0), 1, vec![0.0]).unwrap();
        assert!(similarity(&p, &short, 0.2).is_err());
    }

    #[test]
    fn build_pairs_with_identity_net() {
        let net = ConvNet::identity(Category::Mouth, Architecture::REFERENCE);
        let hr = textured(80, 56, 1.3);
        let pairs = build_pairs(&[("a".into(), hr.clone()), ("tiny".into(), ImagePlane::zeros(3, 3))], 4, &net).unwrap();
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].deep.dims(), (80, 56));
        assert_eq!(pairs[0].deep, degrade(&hr, 4).unwrap());
        assert_eq!(pairs[0].category, Category::Mouth);
    }

    #[test]
    fn entries_cover_interiors_in_order() {
        let pairs = vec![pair("b", 12, 10, 0.7), pair("a", 9, 8, 1.9)];
        let db = PatchDatabase::build(Category::Nose, 5, &pairs).unwrap();
        assert_eq!(db.len(), (12 - 4) * (10 - 4) + (9 - 4) * (8 - 4));
        assert_eq!(db.source_ids(), vec!["a", "b"]);
        let e = db.entry(0);
        assert_eq!((e.source_id, e.center), ("a", (2, 2)));
        let e = db.entry(6);
        assert_eq!((e.source_id, e.center), ("a", (3, 3)));
        let e = db.entry(20);
        assert_eq!((e.source_id, e.center), ("b", (2, 2)));
        let expect = extract_patch(&pairs[0].hr, (2, 2), 5).unwrap();
        assert_eq!(e.hr, expect.values.as_slice());
    }

    #[test]
    fn knn_finds_exact_entry_first() {
        let pairs = vec![pair("a", 20, 16, 0.4), pair("b", 20, 16, 2.2)];
        let db = PatchDatabase::build(Category::Nose, 5, &pairs).unwrap();
        let target = 57;
        let e = db.entry(target);
        let q = Patch::new(e.center, 5, e.deep.to_vec()).unwrap();
        let hits = db.knn(&q, 5, 0.2).unwrap();
        assert_eq!(hits[0].distance, 0.0);
        assert_eq!(hits[0].index, target);
        assert!(hits.windows(2).all(|w| w[0].distance <= w[1].distance));
    }

    #[test]
    fn knn_k_equal_to_len_and_too_large() {
        let pairs = vec![pair("a", 7, 7, 0.4)];
        let db = PatchDatabase::build(Category::Nose, 5, &pairs).unwrap();
        assert_eq!(db.len(), 9);
        let q = extract_patch(&pairs[0].deep, (0, 0), 5).unwrap();
        let all = db.knn(&q, 9, 0.2).unwrap();
        assert_eq!(all.len(), 9);
        let mut idx: Vec<_> = all.iter().map(|n| n.index).collect();
        idx.sort();
        assert_eq!(idx, (0..9).collect::<Vec<_>>());
        assert!(db.knn(&q, 10, 0.2).is_err());
    }

    #[test]
    fn windowed_search_stays_within_radius() {
        let pairs = vec![pair("a", 30, 30, 0.4), pair("b", 30, 30, 1.4)];
        let db = PatchDatabase::build(Category::Nose, 5, &pairs).unwrap();
        let q = Query::new(&extract_patch(&pairs[0].deep, (10, 12), 5).unwrap());
        let hits = db.search(&q, 5, 0.2, Some(2));
        for h in &hits {
            let (r, c) = db.entry(h.index).center;
            assert!(r.abs_diff(10) <= 2 && c.abs_diff(12) <= 2);
        }
        assert_eq!(hits[0].distance, 0.0);
    }

    #[test]
    fn without_source_drops_entries() {
        let pairs = vec![pair("a", 9, 9, 0.4), pair("b", 10, 9, 1.4)];
        let db = PatchDatabase::build(Category::Nose, 3, &pairs).unwrap();
        let rest = db.without_source("a");
        assert_eq!(rest.len(), 8 * 7);
        assert_eq!(rest.source_ids(), vec!["b"]);
        assert_eq!(rest.entry(0).hr, db.entry(49).hr);
    }

    #[test]
    fn save_load_round_trip_and_errors() {
        let pairs = vec![pair("a", 11, 9, 0.4), pair("b", 10, 12, 1.4)];
        let db = PatchDatabase::build(Category::Nose, 5, &pairs).unwrap();
        let mut buf = Vec::new();
        write_db(&mut buf, &db).unwrap();
        assert_eq!(read_db(buf.as_slice()).unwrap(), db);

        let cut = &buf[..buf.len() - 8];
        assert!(matches!(read_db(cut), Err(Error::Format(_))));
        let mut bad = buf.clone();
        bad[7] = b'2';
        assert!(matches!(read_db(bad.as_slice()), Err(Error::Format(_))));

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nose.pdb");
        save_db(&path, &db).unwrap();
        assert!(load_db_for(&path, Category::Eyes).is_err());
        assert_eq!(load_db_for(&path, Category::Nose).unwrap(), db);
    }
}
