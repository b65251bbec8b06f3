//! Structure extraction: for every pixel, regress the query patch onto its
//! K nearest deep-component candidates, apply the coefficients to the
//! matching HR patches, and average the overlapping results.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::{extract_patch_into, ImagePlane, Patch};
use crate::patch_db::{PatchDatabase, Query, DEFAULT_ALPHA, DEFAULT_K};

/// How the ridge weight is chosen.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LambdaRule {
    /// The number of pixels in a patch (`n²`).
    PatchPixels,
    Fixed(f64),
}

impl LambdaRule {
    pub fn value(self, patch_size: usize) -> f64 {
        match self {
            LambdaRule::PatchPixels => (patch_size * patch_size) as f64,
            LambdaRule::Fixed(v) => v,
        }
    }
}

/// Candidate columns (each of length `n²`), the query vector and the ridge
/// weight.
#[derive(Clone, Debug, PartialEq)]
pub struct RegressionProblem {
    pub candidates: Vec<Vec<f64>>,
    pub query: Vec<f64>,
    pub lambda: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegressionWeights {
    pub coefficients: Vec<f64>,
    /// `‖T·F − I‖²` at the solution.
    pub residual: f64,
}

impl RegressionProblem {
    pub fn solve(&self) -> Result<RegressionWeights> {
        let cols: Vec<&[f64]> = self.candidates.iter().map(Vec::as_slice).collect();
        solve_columns(&cols, &self.query, self.lambda)
    }
}

pub fn solve(problem: &RegressionProblem) -> Result<RegressionWeights> {
    problem.solve()
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        s += x * y;
    }
    s
}

/// Ridge solution `F = (TᵀT + λI)⁻¹ TᵀI` via Cholesky factorisation of the
/// K x K normal matrix.
pub fn solve_columns(columns: &[&[f64]], query: &[f64], lambda: f64) -> Result<RegressionWeights> {
    let k = columns.len();
    if k == 0 {
        return Err(Error::invalid("regression needs at least one candidate"));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::invalid(format!("lambda must be finite and >= 0, got {lambda}")));
    }
    if let Some(c) = columns.iter().find(|c| c.len() != query.len()) {
        return Err(Error::invalid(format!(
            "candidate has {} values, query has {}",
            c.len(),
            query.len()
        )));
    }

    let mut a = vec![0.0; k * k];
    let mut rhs = vec![0.0; k];
    for i in 0..k {
        for j in 0..=i {
            let v = dot(columns[i], columns[j]);
            a[i * k + j] = v;
            a[j * k + i] = v;
        }
        a[i * k + i] += lambda;
        rhs[i] = dot(columns[i], query);
    }
    let scale = (0..k).map(|i| a[i * k + i]).fold(0.0f64, f64::max).max(f64::MIN_POSITIVE);

    // lower-triangular factor in place
    let mut l = vec![0.0; k * k];
    for j in 0..k {
        let mut d = a[j * k + j];
        for p in 0..j {
            d -= l[j * k + p] * l[j * k + p];
        }
        if d <= 1e-12 * scale {
            return Err(Error::Singular { column: j, pivot: d });
        }
        let d = d.sqrt();
        l[j * k + j] = d;
        for i in j + 1..k {
            let mut s = a[i * k + j];
            for p in 0..j {
                s -= l[i * k + p] * l[j * k + p];
            }
            l[i * k + j] = s / d;
        }
    }
    let mut y = vec![0.0; k];
    for i in 0..k {
        let mut s = rhs[i];
        for p in 0..i {
            s -= l[i * k + p] * y[p];
        }
        y[i] = s / l[i * k + i];
    }
    let mut f = vec![0.0; k];
    for i in (0..k).rev() {
        let mut s = y[i];
        for p in i + 1..k {
            s -= l[p * k + i] * f[p];
        }
        f[i] = s / l[i * k + i];
    }
    if !f.iter().all(|v| v.is_finite()) {
        return Err(Error::Singular {
            column: 0,
            pivot: f64::NAN,
        });
    }

    let mut residual = 0.0;
    for (e, &target) in query.iter().enumerate() {
        let mut fit = 0.0;
        for (c, &w) in columns.iter().zip(&f) {
            fit += w * c[e];
        }
        residual += (fit - target) * (fit - target);
    }
    Ok(RegressionWeights {
        coefficients: f,
        residual,
    })
}

/// Weighted sum of the HR candidate patches.
pub fn synthesize(weights: &RegressionWeights, hr_patches: &[Patch]) -> Result<Patch> {
    let first = hr_patches
        .first()
        .ok_or_else(|| Error::invalid("no HR patches to synthesize from"))?;
    let slices: Vec<&[f64]> = hr_patches.iter().map(|p| p.values.as_slice()).collect();
    let values = synthesize_slices(&weights.coefficients, &slices)?;
    Patch::new(first.center, first.size, values)
}

pub fn synthesize_slices(coefficients: &[f64], hr: &[&[f64]]) -> Result<Vec<f64>> {
    if coefficients.len() != hr.len() || hr.is_empty() {
        return Err(Error::invalid(format!(
            "{} coefficients for {} patches",
            coefficients.len(),
            hr.len()
        )));
    }
    let len = hr[0].len();
    if hr.iter().any(|p| p.len() != len) {
        return Err(Error::invalid("HR patches differ in length"));
    }
    let mut out = vec![0.0; len];
    for (&w, p) in coefficients.iter().zip(hr) {
        for (o, v) in out.iter_mut().zip(*p) {
            *o += w * v;
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct StructureParams {
    pub k: usize,
    pub alpha: f64,
    pub lambda: LambdaRule,
    /// Spacing between query centres; 1 queries every pixel.
    pub stride: usize,
    /// Restrict candidates to centres within this many rows/cols of the
    /// query centre. `None` searches the whole database.
    pub search_radius: Option<usize>,
}

impl Default for StructureParams {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            alpha: DEFAULT_ALPHA,
            lambda: LambdaRule::PatchPixels,
            stride: 1,
            search_radius: None,
        }
    }
}

/// Query centres for a `w` x `h` plane: the same interior grid the
/// database enumerates (margin `patch_size / 2`), stepped by `stride`. A
/// side too short to have an interior uses every position instead.
pub fn query_centers(w: usize, h: usize, patch_size: usize, stride: usize) -> Vec<(usize, usize)> {
    let m = patch_size / 2;
    let span = |len: usize| if len > 2 * m { m..len - m } else { 0..len };
    let mut centers = Vec::new();
    for row in span(h).step_by(stride) {
        for col in span(w).step_by(stride) {
            centers.push((row, col));
        }
    }
    centers
}

/// The extracted HR patch for one query centre.
pub fn extracted_patch(
    deep: &ImagePlane,
    center: (usize, usize),
    db: &PatchDatabase,
    params: &StructureParams,
) -> Result<Vec<f64>> {
    let n = db.patch_size();
    let mut values = Vec::with_capacity(n * n);
    extract_patch_into(deep, center, n, &mut values);
    let q = Query::from_values(values, center);
    let hits = db.search(&q, params.k, params.alpha, params.search_radius);
    let entries: Vec<_> = hits.iter().map(|h| db.entry(h.index)).collect();
    let cols: Vec<&[f64]> = entries.iter().map(|e| e.deep).collect();
    let weights = solve_columns(&cols, q.values(), params.lambda.value(n))?;
    let hr: Vec<&[f64]> = entries.iter().map(|e| e.hr).collect();
    synthesize_slices(&weights.coefficients, &hr)
}

/// Build the extracted structure of a deep component from the database.
///
/// Queries are centred on the interior grid of [`query_centers`], so each
/// query patch lies inside the component just like the database patches;
/// border pixels are reached through the overlap of interior patches.
/// Patches are computed independently (in parallel) and then accumulated in
/// scan order, so the result does not depend on the number of workers.
/// Pixels no patch reaches keep their deep value. Output is clamped to
/// `[0, 1]`.
pub fn extract_structure(
    deep: &ImagePlane,
    db: &PatchDatabase,
    params: &StructureParams,
) -> Result<ImagePlane> {
    if params.stride == 0 {
        return Err(Error::invalid("stride must be positive"));
    }
    if !(0.0..=1.0).contains(&params.alpha) {
        return Err(Error::invalid(format!("alpha must lie in [0, 1], got {}", params.alpha)));
    }
    if deep.is_empty() {
        return Err(Error::invalid("empty deep component"));
    }
    let n = db.patch_size();
    db.check_query(n * n, params.k)?;

    let (w, h) = deep.dims();
    let centers = query_centers(w, h, n, params.stride);
    let patches: Vec<Vec<f64>> = centers
        .par_iter()
        .map(|&c| extracted_patch(deep, c, db, params))
        .collect::<Result<_>>()?;

    let half = (n / 2) as isize;
    let mut acc = vec![0.0; w * h];
    let mut count = vec![0u32; w * h];
    for (&(row, col), values) in centers.iter().zip(&patches) {
        for dy in -half..=half {
            let y = row as isize + dy;
            if y < 0 || y >= h as isize {
                continue;
            }
            for dx in -half..=half {
                let x = col as isize + dx;
                if x < 0 || x >= w as isize {
                    continue;
                }
                let i = y as usize * w + x as usize;
                acc[i] += values[((dy + half) * n as isize + dx + half) as usize];
                count[i] += 1;
            }
        }
    }
    let out = acc
        .iter()
        .zip(&count)
        .zip(deep.samples())
        .map(|((&a, &c), &d)| {
            let v = if c == 0 { d } else { a / c as f64 };
            v.clamp(0.0, 1.0)
        })
        .collect();
    ImagePlane::new(w, h, out)
}
