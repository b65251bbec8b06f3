//! Slow, independent reference implementations used as test oracles.
#![allow(dead_code)]

use lcge::cnn::{conv_forward, Activation, Architecture, ConvLayer, ConvNet, FeatureMap};
use lcge::image::{extract_patch, ImagePlane};
use lcge::patch_db::{similarity_values, Neighbor, PatchDatabase};
use lcge::regression::{synthesize, RegressionProblem, StructureParams};
use lcge::regions::Category;
use lcge::Patch;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_plane(rng: &mut impl Rng, w: usize, h: usize, lo: f64, hi: f64) -> ImagePlane {
    ImagePlane::from_fn(w, h, |_, _| rng.random_range(lo..hi))
}

/// Smooth-ish random image: a few random sinusoids.
pub fn wavy_plane(rng: &mut impl Rng, w: usize, h: usize) -> ImagePlane {
    let terms: Vec<(f64, f64, f64, f64)> = (0..4)
        .map(|_| {
            (
                rng.random_range(0.05..0.9),
                rng.random_range(0.05..0.9),
                rng.random_range(0.0..6.3),
                rng.random_range(0.05..0.12),
            )
        })
        .collect();
    ImagePlane::from_fn(w, h, |x, y| {
        let mut v = 0.5;
        for &(fx, fy, ph, amp) in &terms {
            v += amp * (fx * x as f64 + fy * y as f64 + ph).sin();
        }
        v.clamp(0.0, 1.0)
    })
}

/// Mean SSIM over every valid 11x11 window, each window evaluated with
/// explicit 2-D Gaussian weights.
pub fn naive_ssim(a: &ImagePlane, b: &ImagePlane) -> f64 {
    let n = 11;
    let sigma: f64 = 1.5;
    let mut g = [0.0; 11];
    let mut total = 0.0;
    for (i, gi) in g.iter_mut().enumerate() {
        let d = i as f64 - 5.0;
        *gi = (-d * d / (2.0 * sigma * sigma)).exp();
        total += *gi;
    }
    for gi in &mut g {
        *gi /= total;
    }
    let (c1, c2) = (0.01f64.powi(2), 0.03f64.powi(2));
    let (w, h) = a.dims();
    let mut sum = 0.0;
    let mut windows = 0.0;
    for y0 in 0..=h - n {
        for x0 in 0..=w - n {
            let (mut ma, mut mb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for j in 0..n {
                for i in 0..n {
                    let wt = g[i] * g[j];
                    let (va, vb) = (a.get(x0 + i, y0 + j), b.get(x0 + i, y0 + j));
                    ma += wt * va;
                    mb += wt * vb;
                    saa += wt * va * va;
                    sbb += wt * vb * vb;
                    sab += wt * va * vb;
                }
            }
            let (va, vb, cov) = (saa - ma * ma, sbb - mb * mb, sab - ma * mb);
            sum += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            windows += 1.0;
        }
    }
    sum / windows
}

/// Distance to every entry, stable-sorted, first `k`.
pub fn brute_knn(db: &PatchDatabase, query: &[f64], k: usize, alpha: f64) -> Vec<Neighbor> {
    let mut all: Vec<Neighbor> = (0..db.len())
        .map(|i| Neighbor {
            index: i,
            distance: similarity_values(db.entry(i).deep, query, alpha).unwrap(),
        })
        .collect();
    all.sort_by(|a, b| a.distance.partial_cmp(&b.distance).unwrap());
    all.truncate(k);
    all
}

/// Sliding-window guided filter. Every window sum is formed row by row
/// (each row summed left to right), windows are truncated at the border,
/// and both inputs are shifted by their first sample.
pub fn naive_guided_filter(p: &ImagePlane, guide: &ImagePlane, r: usize, eps: f64) -> ImagePlane {
    let (w, h) = p.dims();
    let p0 = p.samples()[0];
    let i0 = guide.samples()[0];
    let pv = |x: usize, y: usize| p.get(x, y) - p0;
    let iv = |x: usize, y: usize| guide.get(x, y) - i0;
    let window_mean = |f: &dyn Fn(usize, usize) -> f64, x: usize, y: usize| {
        let (y0, y1) = (y.saturating_sub(r), (y + r + 1).min(h));
        let (x0, x1) = (x.saturating_sub(r), (x + r + 1).min(w));
        let mut total = 0.0;
        for yy in y0..y1 {
            let mut row = 0.0;
            for xx in x0..x1 {
                row += f(xx, yy);
            }
            total += row;
        }
        total / ((y1 - y0) * (x1 - x0)) as f64
    };
    let mut a = vec![0.0; w * h];
    let mut b = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mi = window_mean(&iv, x, y);
            let mp = window_mean(&pv, x, y);
            let cii = window_mean(&|xx, yy| iv(xx, yy) * iv(xx, yy), x, y);
            let cip = window_mean(&|xx, yy| iv(xx, yy) * pv(xx, yy), x, y);
            let var = cii - mi * mi;
            let cov = cip - mi * mp;
            let ak = if var + eps > 0.0 { cov / (var + eps) } else { 0.0 };
            a[y * w + x] = ak;
            b[y * w + x] = mp - ak * mi;
        }
    }
    ImagePlane::from_fn(w, h, |x, y| {
        let ma = window_mean(&|xx, yy| a[yy * w + xx], x, y);
        let mb = window_mean(&|xx, yy| b[yy * w + xx], x, y);
        ma * iv(x, y) + mb + p0
    })
}

/// Structure extraction gathered per output pixel: every query centre
/// covering the pixel contributes, visited in scan order. Centres sit on
/// the interior grid (margin n/2) stepped by the stride.
pub fn naive_extract_structure(deep: &ImagePlane, db: &PatchDatabase, params: &StructureParams) -> ImagePlane {
    let n = db.patch_size();
    let half = (n / 2) as isize;
    let (w, h) = deep.dims();
    let centre_patch = |row: usize, col: usize| -> Patch {
        let q = extract_patch(deep, (row, col), n).unwrap();
        let hits = brute_knn(db, &q.values, params.k, params.alpha);
        let problem = RegressionProblem {
            candidates: hits.iter().map(|h| db.entry(h.index).deep.to_vec()).collect(),
            query: q.values.clone(),
            lambda: params.lambda.value(n),
        };
        let weights = problem.solve().unwrap();
        let hr: Vec<Patch> = hits
            .iter()
            .map(|h| Patch::new((row, col), n, db.entry(h.index).hr.to_vec()).unwrap())
            .collect();
        synthesize(&weights, &hr).unwrap()
    };
    let mut cache: Vec<Vec<Option<Patch>>> = vec![vec![None; w]; h];
    let m = n / 2;
    let rows: Vec<usize> = if h > 2 * m { (m..h - m).step_by(params.stride).collect() } else { (0..h).step_by(params.stride).collect() };
    let cols: Vec<usize> = if w > 2 * m { (m..w - m).step_by(params.stride).collect() } else { (0..w).step_by(params.stride).collect() };
    let mut out = ImagePlane::zeros(w, h);
    for y in 0..h {
        for x in 0..w {
            let mut sum = 0.0;
            let mut count = 0u32;
            for &row in &rows {
                for &col in &cols {
                    let (dy, dx) = (y as isize - row as isize, x as isize - col as isize);
                    if dy.abs() > half || dx.abs() > half {
                        continue;
                    }
                    if cache[row][col].is_none() {
                        cache[row][col] = Some(centre_patch(row, col));
                    }
                    let p = cache[row][col].as_ref().unwrap();
                    sum += p.values[((dy + half) * n as isize + dx + half) as usize];
                    count += 1;
                }
            }
            let v = if count == 0 { deep.get(x, y) } else { sum / count as f64 };
            out.set(x, y, v.clamp(0.0, 1.0));
        }
    }
    out
}

/// FNV-1a over the bit patterns of a plane.
pub fn plane_hash(p: &ImagePlane) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in p.samples() {
        for byte in v.to_bits().to_le_bytes() {
            h ^= byte as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}

/// Smallest |pre-activation| of the two ReLU layers on `input`.
pub fn kink_margin(net: &ConvNet, input: &ImagePlane) -> f64 {
    let mut fm = FeatureMap::from_plane(input);
    let mut margin = f64::INFINITY;
    for layer in &net.layers[..2] {
        let linear = ConvLayer {
            activation: Activation::None,
            ..layer.clone()
        };
        let pre = conv_forward(&fm, &linear).unwrap();
        margin = pre.data.iter().fold(margin, |m, v| m.min(v.abs()));
        fm = conv_forward(&fm, layer).unwrap();
    }
    margin
}

pub fn tiny_arch() -> Architecture {
    Architecture {
        kernels: [3, 1, 3],
        hidden: [2, 2],
    }
}

/// A random 1-2-2-1 net (kernels 3, 1, 3) with an 8x8 input and target,
/// redrawn until every hidden pre-activation is at least `margin` away from
/// the ReLU kink. Returns the case and the number of rejected draws.
pub fn random_gradient_case(rng: &mut impl Rng, margin: f64) -> ((ConvNet, ImagePlane, ImagePlane), usize) {
    let normal = Normal::new(0.0, 0.5).unwrap();
    let mut rejected = 0;
    loop {
        let mut net = ConvNet::zeros(Category::Eyes, tiny_arch());
        for layer in &mut net.layers {
            for w in &mut layer.weights {
                *w = normal.sample(rng);
            }
            for b in &mut layer.biases {
                *b = rng.random_range(-0.1..0.1);
            }
        }
        let input = random_plane(rng, 8, 8, 0.0, 1.0);
        let target = random_plane(rng, 8, 8, 0.0, 1.0);
        if kink_margin(&net, &input) >= margin {
            return ((net, input, target), rejected);
        }
        rejected += 1;
    }
}
