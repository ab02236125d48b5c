//! Per-class statistical baseline.
//!
//! Two indicators are computed for every character and OR-ed (or AND-ed):
//!
//! 1. Within each page, every glyph class's pairwise Hu-vector distances
//!    are ranked. Members of a pair closer than the `lower_pct` percentile
//!    (near-exact copies) or farther than the `upper_pct` percentile are
//!    flagged.
//! 2. A character's W vector is compared with its class model from the
//!    training set by Mahalanobis distance.
//!
//! W is `(width, height, hu1..hu7)`; the extended form appends the
//! character's vertical offset from its neighbours and its inertia angle.

use std::collections::BTreeMap;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{center_offset, field, FeatureMatrix, FIELDS_PER_NODE};
use crate::forest::{evaluate, stratified_folds, MetricSummary, Metrics};
use crate::seed::derive_seed;

/// Added to `|phi|` before taking the logarithm.
pub const LOG_EPSILON: f64 = 1e-30;
const RIDGE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Combine {
    #[default]
    Or,
    And,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineParams {
    pub upper_pct: f64,
    pub lower_pct: f64,
    pub mahalanobis_threshold: f64,
    pub log_hu: bool,
    #[serde(default)]
    pub combine: Combine,
    #[serde(default)]
    pub extended_w: bool,
}

impl Default for BaselineParams {
    fn default() -> Self {
        Self {
            upper_pct: 90.0,
            lower_pct: 5.0,
            mahalanobis_threshold: 6.0,
            log_hu: true,
            combine: Combine::Or,
            extended_w: false,
        }
    }
}

impl BaselineParams {
    pub fn validate(&self) -> Result<()> {
        let pct = 0.0..=100.0;
        if !pct.contains(&self.upper_pct) || !pct.contains(&self.lower_pct) || self.lower_pct > self.upper_pct {
            return Err(Error::Config(format!(
                "percentiles must satisfy 0 <= lower ({}) <= upper ({}) <= 100",
                self.lower_pct, self.upper_pct
            )));
        }
        if !(self.mahalanobis_threshold > 0.0) {
            return Err(Error::Config("mahalanobis threshold must be positive".into()));
        }
        Ok(())
    }
}

/// `sign(phi) * log10(|phi| + 1e-30)`.
pub fn log_transform(phi: f64) -> f64 {
    let v = (phi.abs() + LOG_EPSILON).log10();
    if phi < 0.0 {
        -v
    } else {
        v
    }
}

/// The centre character's values needed by the baseline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharRecord {
    pub page_index: usize,
    pub glyph: char,
    pub width: f64,
    pub height: f64,
    pub hu: [f64; 7],
    /// Negated median of the neighbours' `dy`: positive when the character sits lower.
    pub alignment: f64,
    pub inertia_angle: f64,
}

impl CharRecord {
    pub fn hu_vector(&self, log_hu: bool) -> [f64; 7] {
        if log_hu {
            self.hu.map(log_transform)
        } else {
            self.hu
        }
    }

    pub fn w(&self, log_hu: bool, extended: bool) -> Vec<f64> {
        let mut w = vec![self.width, self.height];
        w.extend_from_slice(&self.hu_vector(log_hu));
        if extended {
            w.push(self.alignment);
            w.push(self.inertia_angle);
        }
        w
    }
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_unstable_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

pub fn records(matrix: &FeatureMatrix) -> Vec<CharRecord> {
    let c = center_offset(matrix.n);
    matrix
        .iter_rows()
        .enumerate()
        .map(|(i, row)| {
            let mut dys: Vec<f64> = (0..2 * matrix.n + 1)
                .filter(|&k| k != matrix.n)
                .map(|k| row[k * FIELDS_PER_NODE + field::DY])
                .collect();
            CharRecord {
                page_index: matrix.page_index[i],
                glyph: matrix.glyphs[i],
                width: row[c + field::WIDTH],
                height: row[c + field::HEIGHT],
                hu: row[c + field::HU..c + field::HU + 7].try_into().expect("seven values"),
                alignment: -median(&mut dys),
                inertia_angle: row[c + field::INERTIA_ANGLE],
            }
        })
        .collect()
}

/// Linear-interpolated percentile of sorted data.
pub fn percentile(sorted: &[f64], pct: f64) -> f64 {
    let pos = pct / 100.0 * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// All pairwise distances within one class, with the sorted copy.
#[derive(Debug, Clone)]
struct PairTable {
    pairs: Vec<(usize, usize, f64)>,
    sorted: Vec<f64>,
}

impl PairTable {
    fn new(vectors: &[[f64; 7]]) -> Self {
        let mut pairs = Vec::new();
        for i in 0..vectors.len() {
            for j in i + 1..vectors.len() {
                let d = vectors[i]
                    .iter()
                    .zip(&vectors[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                pairs.push((i, j, d));
            }
        }
        let mut sorted: Vec<f64> = pairs.iter().map(|p| p.2).collect();
        sorted.sort_unstable_by(f64::total_cmp);
        Self { pairs, sorted }
    }

    fn flags(&self, members: usize, lower_pct: f64, upper_pct: f64) -> Vec<bool> {
        let mut flags = vec![false; members];
        if self.pairs.is_empty() {
            return flags;
        }
        let lo = percentile(&self.sorted, lower_pct);
        let hi = percentile(&self.sorted, upper_pct);
        for &(i, j, d) in &self.pairs {
            if (lower_pct > 0.0 && d <= lo) || d > hi {
                flags[i] = true;
                flags[j] = true;
            }
        }
        flags
    }
}

/// Method 1 on the members of one glyph class (already log-transformed if wanted).
/// Classes with fewer than two members are never flagged.
pub fn method1_pairwise(hu: &[[f64; 7]], lower_pct: f64, upper_pct: f64) -> Vec<bool> {
    PairTable::new(hu).flags(hu.len(), lower_pct, upper_pct)
}

/// Pair tables for every (page, glyph) group of a record set.
#[derive(Debug, Clone)]
pub struct Method1Index {
    groups: Vec<(Vec<usize>, PairTable)>,
    len: usize,
}

impl Method1Index {
    pub fn new(records: &[CharRecord], log_hu: bool) -> Self {
        let mut by_group: BTreeMap<(usize, char), Vec<usize>> = BTreeMap::new();
        for (i, r) in records.iter().enumerate() {
            by_group.entry((r.page_index, r.glyph)).or_default().push(i);
        }
        let groups = by_group
            .into_values()
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|rows| {
                let hu: Vec<[f64; 7]> = rows.iter().map(|&i| records[i].hu_vector(log_hu)).collect();
                let table = PairTable::new(&hu);
                (rows, table)
            })
            .collect();
        Self {
            groups,
            len: records.len(),
        }
    }

    pub fn flags(&self, lower_pct: f64, upper_pct: f64) -> Vec<bool> {
        let mut out = vec![false; self.len];
        for (rows, table) in &self.groups {
            for (k, f) in table.flags(rows.len(), lower_pct, upper_pct).into_iter().enumerate() {
                out[rows[k]] = f;
            }
        }
        out
    }
}

/// Mean and covariance of one glyph class's W vectors.
#[derive(Debug, Clone)]
pub struct ClassModel {
    pub glyph_class: char,
    pub mean: Vec<f64>,
    /// Row-major sample covariance (divisor `count - 1`).
    pub covariance: Vec<f64>,
    pub count: usize,
    /// Per-coordinate scale and Cholesky factor of the regularized
    /// correlation matrix; `None` when the class has fewer than two samples.
    factor: Option<(Vec<f64>, nalgebra::Cholesky<f64, nalgebra::Dyn>)>,
}

impl ClassModel {
    /// Fits a model with Welford's streaming mean and covariance.
    pub fn fit<'a>(glyph_class: char, samples: impl IntoIterator<Item = &'a [f64]>) -> Self {
        let mut it = samples.into_iter().peekable();
        let dim = it.peek().map_or(0, |s| s.len());
        let mut mean = vec![0.0; dim];
        let mut m2 = vec![0.0; dim * dim];
        let mut count = 0usize;
        let mut delta = vec![0.0; dim];
        for s in it {
            count += 1;
            for k in 0..dim {
                delta[k] = s[k] - mean[k];
                mean[k] += delta[k] / count as f64;
            }
            for a in 0..dim {
                let after = s[a] - mean[a];
                for b in 0..dim {
                    m2[a * dim + b] += delta[b] * after;
                }
            }
        }
        let covariance: Vec<f64> = if count >= 2 {
            // Symmetrize the accumulated co-moments.
            (0..dim * dim)
                .map(|k| {
                    let (a, b) = (k / dim, k % dim);
                    (m2[a * dim + b] + m2[b * dim + a]) / 2.0 / (count - 1) as f64
                })
                .collect()
        } else {
            vec![0.0; dim * dim]
        };
        Self::from_parts(glyph_class, mean, covariance, count)
    }

    /// A model from precomputed statistics; `covariance` is row-major.
    pub fn from_parts(glyph_class: char, mean: Vec<f64>, covariance: Vec<f64>, count: usize) -> Self {
        let dim = mean.len();
        assert_eq!(covariance.len(), dim * dim, "covariance must be dim x dim");
        let factor = (count >= 2).then(|| regularized_factor(&mean, &covariance, dim));
        Self {
            glyph_class,
            mean,
            covariance,
            count,
            factor,
        }
    }

    pub fn usable(&self) -> bool {
        self.factor.is_some()
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Mahalanobis distance of `w`, or `None` for an unusable model.
    pub fn distance(&self, w: &[f64]) -> Option<f64> {
        let (scale, chol) = self.factor.as_ref()?;
        let z = DVector::from_iterator(
            w.len(),
            w.iter().zip(&self.mean).zip(scale).map(|((x, m), s)| (x - m) / s),
        );
        let y = chol.solve(&z);
        Some(z.dot(&y).max(0.0).sqrt())
    }
}

/// Smallest acceptable squared pivot of the correlation Cholesky factor.
const MIN_PIVOT: f64 = 1e-10;

/// Cholesky factor of the correlation form of `cov` and the per-coordinate
/// scales. A well-conditioned covariance is used as is; otherwise a ridge of
/// `1e-6 * var_i` is added to each diagonal entry (a tiny multiple of the
/// squared mean for constant coordinates) and grown until the factor exists.
fn regularized_factor(mean: &[f64], cov: &[f64], dim: usize) -> (Vec<f64>, nalgebra::Cholesky<f64, nalgebra::Dyn>) {
    let factor = |diag_extra: &[f64]| {
        let scale: Vec<f64> = (0..dim).map(|i| (cov[i * dim + i] + diag_extra[i]).sqrt()).collect();
        let corr = DMatrix::from_fn(dim, dim, |a, b| {
            let extra = if a == b { diag_extra[a] } else { 0.0 };
            (cov[a * dim + b] + extra) / (scale[a] * scale[b])
        });
        let ch = corr.cholesky()?;
        let min_pivot = (0..dim).map(|i| ch.l_dirty()[(i, i)].powi(2)).fold(f64::INFINITY, f64::min);
        (min_pivot >= MIN_PIVOT).then_some((scale, ch))
    };
    if (0..dim).all(|i| cov[i * dim + i] > 0.0) {
        if let Some(f) = factor(&vec![0.0; dim]) {
            return f;
        }
    }
    let ridge: Vec<f64> = (0..dim)
        .map(|i| {
            let v = cov[i * dim + i];
            if v > 0.0 {
                RIDGE * v
            } else if mean[i] != 0.0 {
                RIDGE * RIDGE * mean[i] * mean[i]
            } else {
                RIDGE * RIDGE
            }
        })
        .collect();
    let mut boost = 1.0;
    loop {
        let extra: Vec<f64> = ridge.iter().map(|r| r * boost).collect();
        if let Some(f) = factor(&extra) {
            return f;
        }
        boost *= 10.0;
        log::debug!("class covariance ill-conditioned, ridge x{boost}");
    }
}

/// Method 2: Mahalanobis distance above `threshold`. Unusable models never flag.
pub fn method2_mahalanobis(w: &[f64], model: &ClassModel, threshold: f64) -> bool {
    model.distance(w).is_some_and(|d| d > threshold)
}

pub fn combine(flag1: bool, flag2: bool, rule: Combine) -> u8 {
    u8::from(match rule {
        Combine::Or => flag1 || flag2,
        Combine::And => flag1 && flag2,
    })
}

/// Class models from labelled records. Only unmanipulated (label 0) rows are used.
pub fn fit_class_models(records: &[CharRecord], labels: &[u8], log_hu: bool, extended: bool) -> BTreeMap<char, ClassModel> {
    let mut by_class: BTreeMap<char, Vec<Vec<f64>>> = BTreeMap::new();
    for (r, &y) in records.iter().zip(labels) {
        if y == 0 {
            by_class.entry(r.glyph).or_default().push(r.w(log_hu, extended));
        }
    }
    let models: Vec<ClassModel> = by_class
        .into_iter()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(g, ws)| ClassModel::fit(g, ws.iter().map(Vec::as_slice)))
        .collect();
    for m in models.iter().filter(|m| !m.usable()) {
        log::debug!("class {:?} has {} training sample(s); method 2 disabled for it", m.glyph_class, m.count);
    }
    models.into_iter().map(|m| (m.glyph_class, m)).collect()
}

/// Mahalanobis distance of every record to its class (`None` without a usable model).
pub fn class_distances(records: &[CharRecord], models: &BTreeMap<char, ClassModel>, log_hu: bool, extended: bool) -> Vec<Option<f64>> {
    records
        .iter()
        .map(|r| models.get(&r.glyph).and_then(|m| m.distance(&r.w(log_hu, extended))))
        .collect()
}

/// A fitted baseline detector.
#[derive(Debug, Clone)]
pub struct Baseline {
    pub params: BaselineParams,
    pub models: BTreeMap<char, ClassModel>,
}

/// Per-character outcome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BaselineFlag {
    pub page_index: usize,
    pub box_index: usize,
    pub glyph: char,
    pub method1: bool,
    pub method2: bool,
    pub mahalanobis: Option<f64>,
    pub label: u8,
}

impl Baseline {
    pub fn fit(train: &FeatureMatrix, params: BaselineParams) -> Result<Self> {
        params.validate()?;
        if train.is_empty() {
            return Err(Error::EmptyData);
        }
        let recs = records(train);
        Ok(Self {
            params,
            models: fit_class_models(&recs, &train.labels, params.log_hu, params.extended_w),
        })
    }

    pub fn flags(&self, matrix: &FeatureMatrix) -> Vec<BaselineFlag> {
        let p = &self.params;
        let recs = records(matrix);
        let m1 = Method1Index::new(&recs, p.log_hu).flags(p.lower_pct, p.upper_pct);
        let dist = class_distances(&recs, &self.models, p.log_hu, p.extended_w);
        (0..matrix.rows())
            .map(|i| BaselineFlag {
                page_index: matrix.page_index[i],
                box_index: matrix.box_index[i],
                glyph: matrix.glyphs[i],
                method1: m1[i],
                method2: dist[i].is_some_and(|d| d > p.mahalanobis_threshold),
                mahalanobis: dist[i],
                label: combine(m1[i], dist[i].is_some_and(|d| d > p.mahalanobis_threshold), p.combine),
            })
            .collect()
    }

    pub fn predict(&self, matrix: &FeatureMatrix) -> Vec<u8> {
        self.flags(matrix).into_iter().map(|f| f.label).collect()
    }
}

pub fn write_flags_csv<W: Write>(flags: &[BaselineFlag], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["page_index", "box_index", "glyph", "method1", "method2", "mahalanobis", "label"])?;
    for f in flags {
        w.write_record([
            f.page_index.to_string(),
            f.box_index.to_string(),
            f.glyph.to_string(),
            u8::from(f.method1).to_string(),
            u8::from(f.method2).to_string(),
            f.mahalanobis.map_or_else(String::new, |d| d.to_string()),
            f.label.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Candidate values for the baseline search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineGrid {
    pub upper_pct: Vec<f64>,
    pub lower_pct: Vec<f64>,
    pub mahalanobis_threshold: Vec<f64>,
    pub log_hu: Vec<bool>,
}

impl BaselineGrid {
    /// 3 upper x 3 lower percentiles x 3 distance thresholds x 2 transforms.
    pub fn reference() -> Self {
        Self {
            upper_pct: vec![80.0, 90.0, 95.0],
            lower_pct: vec![0.0, 5.0, 10.0],
            mahalanobis_threshold: vec![5.0, 6.0, 7.0],
            log_hu: vec![false, true],
        }
    }

    /// Every combination, in grid order.
    pub fn combinations(&self, combine: Combine, extended_w: bool) -> Vec<BaselineParams> {
        let mut out = Vec::new();
        for &upper_pct in &self.upper_pct {
            for &lower_pct in &self.lower_pct {
                for &mahalanobis_threshold in &self.mahalanobis_threshold {
                    for &log_hu in &self.log_hu {
                        out.push(BaselineParams {
                            upper_pct,
                            lower_pct,
                            mahalanobis_threshold,
                            log_hu,
                            combine,
                            extended_w,
                        });
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum BaselineSearchMode {
    Exhaustive,
    /// Uniform draws with replacement.
    Random { iterations: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineSearchConfig {
    pub mode: BaselineSearchMode,
    pub folds: usize,
    pub seed: u64,
    #[serde(default)]
    pub combine: Combine,
    #[serde(default)]
    pub extended_w: bool,
}

impl Default for BaselineSearchConfig {
    fn default() -> Self {
        Self {
            mode: BaselineSearchMode::Exhaustive,
            folds: 5,
            seed: 0,
            combine: Combine::Or,
            extended_w: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineCandidate {
    pub params: BaselineParams,
    pub folds: Vec<Metrics>,
    pub summary: MetricSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineSearchResult {
    pub best: BaselineParams,
    pub candidates: Vec<BaselineCandidate>,
}

/// Cross-validated search by mean F1; ties go to the earlier candidate.
///
/// Method 1 uses no labels, so it is computed once over whole pages.
/// Class models are refitted on each training fold.
pub fn baseline_search(
    train: &FeatureMatrix,
    grid: &BaselineGrid,
    config: &BaselineSearchConfig,
) -> Result<BaselineSearchResult> {
    let all = grid.combinations(config.combine, config.extended_w);
    if all.is_empty() {
        return Err(Error::Config("baseline grid is empty".into()));
    }
    for p in &all {
        p.validate()?;
    }
    let candidates: Vec<BaselineParams> = match config.mode {
        BaselineSearchMode::Exhaustive => all,
        BaselineSearchMode::Random { iterations } => {
            if iterations == 0 {
                return Err(Error::Config("search needs at least one iteration".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, 1));
            (0..iterations).map(|_| *all.choose(&mut rng).expect("non-empty")).collect()
        }
    };
    let fold_of = stratified_folds(&train.labels, config.folds, derive_seed(config.seed, 0))?;
    let recs = records(train);

    let mut m1_index: BTreeMap<bool, Method1Index> = BTreeMap::new();
    let mut distances: BTreeMap<bool, Vec<Vec<Option<f64>>>> = BTreeMap::new();
    for &log_hu in &grid.log_hu {
        m1_index.insert(log_hu, Method1Index::new(&recs, log_hu));
        let per_fold = (0..config.folds)
            .map(|k| {
                // Held-out rows are excluded from fitting by marking them as label 1.
                let mask: Vec<u8> = (0..recs.len())
                    .map(|i| if fold_of[i] == k { 1 } else { train.labels[i] })
                    .collect();
                let models = fit_class_models(&recs, &mask, log_hu, config.extended_w);
                class_distances(&recs, &models, log_hu, config.extended_w)
            })
            .collect();
        distances.insert(log_hu, per_fold);
    }

    let mut m1_cache: BTreeMap<(bool, u64, u64), Vec<bool>> = BTreeMap::new();
    let mut results = Vec::with_capacity(candidates.len());
    for p in &candidates {
        let key = (p.log_hu, p.lower_pct.to_bits(), p.upper_pct.to_bits());
        let m1 = m1_cache
            .entry(key)
            .or_insert_with(|| m1_index[&p.log_hu].flags(p.lower_pct, p.upper_pct));
        let folds = (0..config.folds)
            .map(|k| {
                let rows: Vec<usize> = (0..recs.len()).filter(|&i| fold_of[i] == k).collect();
                let dist = &distances[&p.log_hu][k];
                let pred: Vec<u8> = rows
                    .iter()
                    .map(|&i| combine(m1[i], dist[i].is_some_and(|d| d > p.mahalanobis_threshold), p.combine))
                    .collect();
                let truth: Vec<u8> = rows.iter().map(|&i| train.labels[i]).collect();
                evaluate(&truth, &pred)
            })
            .collect::<Result<Vec<_>>>()?;
        results.push(BaselineCandidate {
            params: *p,
            summary: MetricSummary::of(&folds),
            folds,
        });
    }
    let best = results
        .iter()
        .fold(&results[0], |b, c| if c.summary.f1.mean > b.summary.f1.mean { c } else { b })
        .params;
    Ok(BaselineSearchResult {
        best,
        candidates: results,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percentile_interpolates() {
        assert!((percentile(&[1.0, 1.0, 10.0], 80.0) - 6.4).abs() < 1e-12);
        assert_eq!(percentile(&[2.0], 95.0), 2.0);
        assert_eq!(percentile(&[0.0, 10.0], 0.0), 0.0);
    }

    #[test]
    fn identical_pair_is_flagged_low() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0];
        let b = [1.5, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0];
        let c = [3.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0];
        assert_eq!(method1_pairwise(&[a, a], 5.0, 95.0), vec![true, true]);
        assert_eq!(method1_pairwise(&[a, a, b, c], 5.0, 100.0), vec![true, true, false, false]);
        assert_eq!(method1_pairwise(&[a, a, b, c], 0.0, 100.0), vec![false; 4]);
    }

    #[test]
    fn far_pair_is_flagged_high() {
        // Distances: (0,1) = 1, (0,2) = 1 is impossible on a line, so use a
        // right angle: (0,1) = 1, (0,2) = 1, (1,2) = sqrt 2.
        let z = [0.0; 7];
        let mut x = z;
        x[0] = 1.0;
        let mut y = z;
        y[1] = 1.0;
        assert_eq!(method1_pairwise(&[z, x, y], 0.0, 80.0), vec![false, true, true]);
        assert_eq!(method1_pairwise(&[z, x, y], 0.0, 100.0), vec![false; 3]);
    }

    #[test]
    fn uniform_distances_flag_nothing() {
        let z = [0.0; 7];
        let mut x = z;
        x[0] = 1.0;
        assert_eq!(method1_pairwise(&[z, x], 0.0, 80.0), vec![false, false]);
        assert_eq!(method1_pairwise(&[z], 5.0, 80.0), vec![false]);
    }

    #[test]
    fn combination_rules() {
        assert_eq!(combine(true, false, Combine::Or), 1);
        assert_eq!(combine(false, false, Combine::Or), 0);
        assert_eq!(combine(false, false, Combine::And), 0);
        assert_eq!(combine(true, false, Combine::And), 0);
        assert_eq!(combine(true, true, Combine::And), 1);
    }

    #[test]
    fn log_transform_keeps_sign() {
        assert_eq!(log_transform(1e-3), -3.0);
        assert_eq!(log_transform(-1e-3), 3.0);
        assert_eq!(log_transform(0.0), -30.0);
    }

    #[test]
    fn two_sample_model() {
        let a = [1.0, 2.0];
        let b = [3.0, 6.0];
        let m = ClassModel::fit('x', [&a[..], &b[..]]);
        assert_eq!(m.mean, vec![2.0, 4.0]);
        assert!(m.usable());
        assert_eq!(m.distance(&[2.0, 4.0]), Some(0.0));
        let single = ClassModel::fit('y', [&a[..]]);
        assert!(!single.usable());
        assert!(!method2_mahalanobis(&[100.0, 100.0], &single, 5.0));
    }

    #[test]
    fn constant_class_has_finite_distances() {
        let s = [4.0, 4.0, 0.0];
        let m = ClassModel::fit('c', [&s[..], &s[..], &s[..]]);
        assert_eq!(m.distance(&s), Some(0.0));
        let d = m.distance(&[4.0 + 1e-9, 4.0, 0.0]).unwrap();
        assert!(d.is_finite() && d > 0.0);
    }

    #[test]
    fn reference_grid_has_54_combinations() {
        assert_eq!(BaselineGrid::reference().combinations(Combine::Or, false).len(), 54);
    }
}
