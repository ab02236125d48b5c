//! Random forest classifier with bootstrap sampling and Gini splits,
//! stratified cross-validation and randomized hyperparameter search.

mod io;
mod metrics;
mod search;
mod tree;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, NODE_FIELDS};
use crate::seed::derive_seed;

pub use io::{load_model, save_model, FORMAT_VERSION, MAGIC};
pub use metrics::{evaluate, Confusion, MeanStd, MetricSummary, Metrics};
pub use search::{
    cross_validate, random_search, stratified_folds, write_candidates_csv, write_summary_csv, CandidateResult,
    SearchConfig, SearchGrid, SearchResult,
};
pub use tree::{best_split, Node, SplitChoice, Tree};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ForestHyperparams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub n_neighbors: usize,
    pub seed: u64,
    /// Weight classes inversely to their frequency. Off by default.
    #[serde(default)]
    pub balanced: bool,
}

impl Default for ForestHyperparams {
    fn default() -> Self {
        Self {
            n_trees: 250,
            max_depth: 20,
            min_samples_leaf: 4,
            n_neighbors: 3,
            seed: 0,
            balanced: false,
        }
    }
}

impl ForestHyperparams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("n_trees", self.n_trees),
            ("max_depth", self.max_depth),
            ("min_samples_leaf", self.min_samples_leaf),
        ] {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        Ok(())
    }
}

/// Describes the vectors a model was trained on.
///
/// For sub-graph features `field_names` lists the twelve per-node fields;
/// for arbitrary matrices (`n_neighbors == 0`) it names every column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub n_neighbors: usize,
    pub vector_len: usize,
    pub field_names: Vec<String>,
}

impl FeatureSchema {
    pub fn subgraph(n: usize) -> Self {
        Self {
            n_neighbors: n,
            vector_len: crate::features::vector_len(n),
            field_names: NODE_FIELDS.iter().map(|s| (*s).to_owned()).collect(),
        }
    }

    pub fn plain(cols: usize) -> Self {
        Self {
            n_neighbors: 0,
            vector_len: cols,
            field_names: (0..cols).map(|i| format!("x{i}")).collect(),
        }
    }

    pub fn describe(&self) -> String {
        if self.n_neighbors == 0 {
            format!("{} plain features", self.vector_len)
        } else {
            format!("n={} ({} features)", self.n_neighbors, self.vector_len)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<Tree>,
    pub hyperparams: ForestHyperparams,
    pub schema: FeatureSchema,
    pub train_seed: u64,
}

/// `max(1, floor(sqrt(d)))`.
pub fn default_max_features(d: usize) -> usize {
    ((d as f64).sqrt() as usize).max(1)
}

/// Trains on a row-major matrix `x` with `cols` values per row.
pub fn train_raw(x: &[f64], cols: usize, y: &[u8], hp: &ForestHyperparams, schema: FeatureSchema) -> Result<ForestModel> {
    hp.validate()?;
    if y.is_empty() || cols == 0 {
        return Err(Error::EmptyData);
    }
    if x.len() != y.len() * cols {
        return Err(Error::LengthMismatch {
            expected: y.len() * cols,
            actual: x.len(),
        });
    }
    if let Some(i) = x.iter().position(|v| v.is_nan()) {
        return Err(Error::Matrix(format!("NaN at row {} column {}", i / cols, i % cols)));
    }
    let positives = y.iter().filter(|&&v| v == 1).count();
    if y.iter().any(|&v| v > 1) {
        return Err(Error::Matrix("labels must be 0 or 1".into()));
    }
    if y.len() < 2 || positives == 0 || positives == y.len() {
        return Err(Error::DegenerateLabels);
    }
    let class_weight = if hp.balanced {
        let n = y.len() as f64;
        [n / (2.0 * (y.len() - positives) as f64), n / (2.0 * positives as f64)]
    } else {
        [1.0, 1.0]
    };
    let params = tree::TreeParams {
        max_depth: hp.max_depth,
        min_samples_leaf: hp.min_samples_leaf as u64,
        max_features: default_max_features(cols),
        class_weight,
        bootstrap: true,
    };
    let data = tree::RankedData::new(x, cols, y);
    let trees = (0..hp.n_trees)
        .into_par_iter()
        .map(|t| tree::grow_tree(&data, params, derive_seed(hp.seed, t as u64)))
        .collect();
    Ok(ForestModel {
        trees,
        hyperparams: *hp,
        schema,
        train_seed: hp.seed,
    })
}

pub fn train(matrix: &FeatureMatrix, hp: &ForestHyperparams) -> Result<ForestModel> {
    if hp.n_neighbors != matrix.n {
        return Err(Error::Config(format!(
            "hyperparameters ask for n={} but the matrix was extracted with n={}",
            hp.n_neighbors, matrix.n
        )));
    }
    train_raw(&matrix.values, matrix.cols(), &matrix.labels, hp, FeatureSchema::subgraph(matrix.n))
}

const SCORE_ONE: f64 = (1u64 << 60) as f64;

/// A leaf score in 2^-60 fixed point. Integer sums of these do not depend
/// on the order of the trees.
pub(crate) fn score_units(score: f64) -> u128 {
    (score * SCORE_ONE).round() as u128
}

pub(crate) fn mean_score(units: u128, trees: usize) -> f64 {
    units as f64 / SCORE_ONE / trees as f64
}

impl ForestModel {
    /// Mean leaf positive fraction and the thresholded label (score >= 0.5 is 1).
    pub fn predict(&self, x: &[f64]) -> Result<(u8, f64)> {
        if x.len() != self.schema.vector_len {
            return Err(Error::LengthMismatch {
                expected: self.schema.vector_len,
                actual: x.len(),
            });
        }
        let score = self.score_unchecked(x);
        Ok((u8::from(score >= 0.5), score))
    }

    fn score_unchecked(&self, x: &[f64]) -> f64 {
        let sum: u128 = self.trees.iter().map(|t| score_units(t.leaf_score(x))).sum();
        mean_score(sum, self.trees.len())
    }

    pub fn check_schema(&self, matrix: &FeatureMatrix) -> Result<()> {
        if self.schema.vector_len != matrix.cols() || (self.schema.n_neighbors != 0 && self.schema.n_neighbors != matrix.n) {
            return Err(Error::SchemaMismatch {
                model: self.schema.describe(),
                matrix: FeatureSchema::subgraph(matrix.n).describe(),
            });
        }
        Ok(())
    }

    /// Scores for every row of a matrix.
    pub fn scores(&self, matrix: &FeatureMatrix) -> Result<Vec<f64>> {
        self.check_schema(matrix)?;
        Ok(self.scores_raw(&matrix.values))
    }

    pub(crate) fn scores_raw(&self, values: &[f64]) -> Vec<f64> {
        values
            .par_chunks(self.schema.vector_len)
            .map(|row| self.score_unchecked(row))
            .collect()
    }

    pub fn predict_matrix(&self, matrix: &FeatureMatrix) -> Result<Vec<u8>> {
        Ok(self.scores(matrix)?.into_iter().map(|s| u8::from(s >= 0.5)).collect())
    }

    /// Mean out-of-bag fraction over trees.
    pub fn mean_oob_fraction(&self) -> f64 {
        self.trees.iter().map(|t| t.oob_fraction).sum::<f64>() / self.trees.len().max(1) as f64
    }

    /// Number of splits on each feature across all trees.
    pub fn split_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.schema.vector_len];
        for t in &self.trees {
            for n in &t.nodes {
                if let Node::Split { feature, .. } = n {
                    counts[*feature as usize] += 1;
                }
            }
        }
        counts
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
