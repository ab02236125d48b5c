use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{evaluate, mean_score, score_units, train, ForestHyperparams, ForestModel, MetricSummary, Metrics};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::seed::derive_seed;

/// Value lists sampled independently and uniformly by the search.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchGrid {
    pub n_trees: Vec<usize>,
    pub max_depth: Vec<usize>,
    pub min_samples_leaf: Vec<usize>,
    pub n_neighbors: Vec<usize>,
    /// Whether to weight classes inversely to frequency; `[false]` unless set.
    #[serde(default = "unweighted")]
    pub balanced: Vec<bool>,
}

fn unweighted() -> Vec<bool> {
    vec![false]
}

impl SearchGrid {
    /// The reference grid: 14 forest sizes, depths 5 to 50, five leaf sizes, n in {3, 5, 7, 9}.
    pub fn reference() -> Self {
        Self {
            n_trees: vec![
                1000, 250, 1500, 1750, 2000, 2250, 2500, 2750, 3000, 3250, 3500, 3750, 4000, 5000,
            ],
            max_depth: (1..=10).map(|k| 5 * k).collect(),
            min_samples_leaf: vec![4, 6, 8, 10, 12],
            n_neighbors: vec![3, 5, 7, 9],
            balanced: unweighted(),
        }
    }

    pub fn size(&self) -> usize {
        self.n_trees.len()
            * self.max_depth.len()
            * self.min_samples_leaf.len()
            * self.n_neighbors.len()
            * self.balanced.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.size() == 0 {
            return Err(Error::Config("every search grid dimension needs at least one value".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub iterations: usize,
    pub folds: usize,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            iterations: 480,
            folds: 5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateResult {
    pub id: usize,
    pub hyperparams: ForestHyperparams,
    pub folds: Vec<Metrics>,
    pub summary: MetricSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub best: ForestHyperparams,
    pub best_id: usize,
    pub candidates: Vec<CandidateResult>,
}

impl SearchResult {
    pub fn best_candidate(&self) -> &CandidateResult {
        &self.candidates[self.best_id]
    }
}

/// Fold id of every row. Each class is shuffled and dealt round-robin,
/// negatives continuing where positives stopped, so every fold's positive
/// count is within one of the average.
pub fn stratified_folds(labels: &[u8], folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds < 2 {
        return Err(Error::Config(format!("need at least 2 folds, got {folds}")));
    }
    if labels.len() < folds {
        return Err(Error::Config(format!("{} rows cannot fill {folds} folds", labels.len())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0; labels.len()];
    let mut next = 0;
    for class in [1u8, 0] {
        let mut rows: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        rows.shuffle(&mut rng);
        for i in rows {
            assignment[i] = next;
            next = (next + 1) % folds;
        }
    }
    Ok(assignment)
}

/// Metrics on each held-out fold. A training split with a single class
/// predicts that class everywhere.
pub fn cross_validate(matrix: &FeatureMatrix, hp: &ForestHyperparams, fold_of: &[usize]) -> Result<Vec<Metrics>> {
    if fold_of.len() != matrix.rows() {
        return Err(Error::LengthMismatch {
            expected: matrix.rows(),
            actual: fold_of.len(),
        });
    }
    let k = fold_of.iter().max().map_or(0, |m| m + 1);
    (0..k)
        .map(|fold| {
            let (test, train_rows): (Vec<usize>, Vec<usize>) = (0..matrix.rows()).partition(|&i| fold_of[i] == fold);
            let train_m = matrix.subset(&train_rows);
            let test_m = matrix.subset(&test);
            let pred = match train(&train_m, hp) {
                Ok(model) => model.predict_matrix(&test_m)?,
                Err(Error::DegenerateLabels) => vec![train_m.labels.first().copied().unwrap_or(0); test.len()],
                Err(e) => return Err(e),
            };
            evaluate(&test_m.labels, &pred)
        })
        .collect()
}

/// Randomized search by mean cross-validated F1.
///
/// Candidates are drawn with replacement; repeated draws reuse the first
/// evaluation. All candidates share one fold assignment and one training
/// seed. Ties go to the earliest candidate.
pub fn random_search(
    matrices: &BTreeMap<usize, FeatureMatrix>,
    grid: &SearchGrid,
    config: &SearchConfig,
) -> Result<SearchResult> {
    grid.validate()?;
    if config.iterations == 0 {
        return Err(Error::Config("search needs at least one iteration".into()));
    }
    for n in &grid.n_neighbors {
        if !matrices.contains_key(n) {
            return Err(Error::Config(format!("no feature matrix for n={n}")));
        }
    }
    let reference = &matrices[&grid.n_neighbors[0]];
    for (n, m) in matrices {
        if m.labels != reference.labels {
            return Err(Error::Matrix(format!("matrix n={n} rows differ from n={}", grid.n_neighbors[0])));
        }
    }
    let fold_of = stratified_folds(&reference.labels, config.folds, derive_seed(config.seed, 0))?;
    let train_seed = derive_seed(config.seed, 2);

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, 1));
    fn pick<T: Copy>(rng: &mut ChaCha8Rng, v: &[T]) -> T {
        *v.choose(rng).expect("grid validated")
    }
    let draws: Vec<ForestHyperparams> = (0..config.iterations)
        .map(|_| ForestHyperparams {
            n_trees: pick(&mut rng, &grid.n_trees),
            max_depth: pick(&mut rng, &grid.max_depth),
            min_samples_leaf: pick(&mut rng, &grid.min_samples_leaf),
            n_neighbors: pick(&mut rng, &grid.n_neighbors),
            seed: train_seed,
            balanced: pick(&mut rng, &grid.balanced),
        })
        .collect();

    let mut unique: Vec<ForestHyperparams> = Vec::new();
    for hp in &draws {
        if !unique.contains(hp) {
            unique.push(*hp);
        }
    }
    log::info!("search: {} draws, {} distinct candidates", draws.len(), unique.len());
    let memo = evaluate_shared(matrices, &unique, &fold_of, config.folds)?;
    let candidates: Vec<CandidateResult> = draws
        .iter()
        .enumerate()
        .map(|(id, hp)| {
            let folds = memo[hp].clone();
            CandidateResult {
                id,
                hyperparams: *hp,
                summary: MetricSummary::of(&folds),
                folds,
            }
        })
        .collect();
    let best_id = candidates
        .iter()
        .fold(0, |best, c| if c.summary.f1.mean > candidates[best].summary.f1.mean { c.id } else { best });
    Ok(SearchResult {
        best: candidates[best_id].hyperparams,
        best_id,
        candidates,
    })
}

/// Cross-validates many candidates at once.
///
/// Candidates sharing `n_neighbors`, `min_samples_leaf` and class weighting are scored from a
/// single forest per fold grown with the group's largest tree count and
/// depth: tree `t` never depends on the forest size, and cutting a tree at
/// depth `d` gives exactly the tree grown with `max_depth = d`. Results
/// equal [`cross_validate`] run on each candidate.
fn evaluate_shared(
    matrices: &BTreeMap<usize, FeatureMatrix>,
    candidates: &[ForestHyperparams],
    fold_of: &[usize],
    folds: usize,
) -> Result<HashMap<ForestHyperparams, Vec<Metrics>>> {
    let mut groups: BTreeMap<(usize, usize, bool), Vec<ForestHyperparams>> = BTreeMap::new();
    for hp in candidates {
        groups
            .entry((hp.n_neighbors, hp.min_samples_leaf, hp.balanced))
            .or_default()
            .push(*hp);
    }
    let jobs: Vec<(&Vec<ForestHyperparams>, usize)> =
        groups.values().flat_map(|g| (0..folds).map(move |k| (g, k))).collect();
    let results: Vec<Vec<(ForestHyperparams, usize, Metrics)>> = jobs
        .par_iter()
        .map(|&(group, fold)| {
            let n = group[0].n_neighbors;
            let matrix = &matrices[&n];
            let (test, train_rows): (Vec<usize>, Vec<usize>) = (0..matrix.rows()).partition(|&i| fold_of[i] == fold);
            let train_m = matrix.subset(&train_rows);
            let test_m = matrix.subset(&test);
            let widest = ForestHyperparams {
                n_trees: group.iter().map(|h| h.n_trees).max().unwrap_or(1),
                max_depth: group.iter().map(|h| h.max_depth).max().unwrap_or(1),
                ..group[0]
            };
            let model = match train(&train_m, &widest) {
                Ok(m) => Some(m),
                Err(Error::DegenerateLabels) => None,
                Err(e) => return Err(e),
            };
            let mut checkpoints: Vec<usize> = group.iter().map(|h| h.n_trees).collect();
            checkpoints.sort_unstable();
            checkpoints.dedup();
            let mut prefix: BTreeMap<usize, Vec<Vec<u128>>> = BTreeMap::new();
            group
                .iter()
                .map(|hp| {
                    let pred: Vec<u8> = match &model {
                        None => vec![train_m.labels.first().copied().unwrap_or(0); test.len()],
                        Some(model) => {
                            let sums = prefix
                                .entry(hp.max_depth)
                                .or_insert_with(|| tree_prefix_sums(model, &test_m, hp.max_depth, &checkpoints));
                            let j = checkpoints.binary_search(&hp.n_trees).expect("every size is a checkpoint");
                            sums.iter()
                                .map(|row| u8::from(mean_score(row[j], hp.n_trees) >= 0.5))
                                .collect()
                        }
                    };
                    Ok((*hp, fold, evaluate(&test_m.labels, &pred)?))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let mut out: HashMap<ForestHyperparams, Vec<Metrics>> = HashMap::new();
    for (hp, fold, m) in results.into_iter().flatten() {
        let entry = out.entry(hp).or_insert_with(|| vec![Metrics::default(); folds]);
        entry[fold] = m;
    }
    Ok(out)
}

/// Per row, fixed-point score sums of the first `checkpoints[j]` trees cut at `depth`.
fn tree_prefix_sums(model: &ForestModel, matrix: &FeatureMatrix, depth: usize, checkpoints: &[usize]) -> Vec<Vec<u128>> {
    matrix
        .values
        .par_chunks(matrix.cols())
        .map(|row| {
            let mut out = Vec::with_capacity(checkpoints.len());
            let mut acc = 0u128;
            let mut next = 0;
            for (t, tree) in model.trees.iter().enumerate() {
                acc += score_units(tree.score_within_depth(row, depth));
                while next < checkpoints.len() && checkpoints[next] == t + 1 {
                    out.push(acc);
                    next += 1;
                }
            }
            out
        })
        .collect()
}

/// One row per candidate and fold.
pub fn write_candidates_csv<W: Write>(result: &SearchResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "candidate_id",
        "n_trees",
        "max_depth",
        "min_samples_leaf",
        "n_neighbors",
        "balanced",
        "fold",
        "precision",
        "recall",
        "accuracy",
        "f1",
    ])?;
    for c in &result.candidates {
        let hp = &c.hyperparams;
        for (fold, m) in c.folds.iter().enumerate() {
            w.write_record([
                c.id.to_string(),
                hp.n_trees.to_string(),
                hp.max_depth.to_string(),
                hp.min_samples_leaf.to_string(),
                hp.n_neighbors.to_string(),
                hp.balanced.to_string(),
                fold.to_string(),
                m.precision.to_string(),
                m.recall.to_string(),
                m.accuracy.to_string(),
                m.f1.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// One row per candidate with fold means and standard deviations.
pub fn write_summary_csv<W: Write>(result: &SearchResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "candidate_id",
        "n_trees",
        "max_depth",
        "min_samples_leaf",
        "n_neighbors",
        "balanced",
        "precision_mean",
        "precision_std",
        "recall_mean",
        "recall_std",
        "accuracy_mean",
        "accuracy_std",
        "f1_mean",
        "f1_std",
    ])?;
    for c in &result.candidates {
        let hp = &c.hyperparams;
        let s = &c.summary;
        let mut rec = vec![
            c.id.to_string(),
            hp.n_trees.to_string(),
            hp.max_depth.to_string(),
            hp.min_samples_leaf.to_string(),
            hp.n_neighbors.to_string(),
            hp.balanced.to_string(),
        ];
        for m in [s.precision, s.recall, s.accuracy, s.f1] {
            rec.push(m.mean.to_string());
            rec.push(m.std.to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
