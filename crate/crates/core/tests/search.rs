use std::collections::BTreeMap;

use docforge::features::vector_len;
use docforge::forest::{
    cross_validate, random_search, stratified_folds, write_candidates_csv, SearchConfig, SearchGrid,
};
use docforge::seed::derive_seed;
use docforge::FeatureMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Matrix whose first column carries the label with some noise, or pure noise.
fn matrix(n: usize, labels: &[u8], informative: bool, seed: u64) -> FeatureMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cols = vector_len(n);
    let mut m = FeatureMatrix::new(n);
    for (i, &y) in labels.iter().enumerate() {
        for c in 0..cols {
            let noise: f64 = rng.random_range(0.0..1.0);
            let v = if informative && c == 0 { f64::from(y) + 0.8 * noise } else { noise };
            m.values.push(v);
        }
        m.labels.push(y);
        m.page_index.push(i / 100);
        m.box_index.push(i % 100);
        m.glyphs.push('a');
    }
    m
}

fn labels(rows: usize, rate: f64, seed: u64) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..rows).map(|_| u8::from(rng.random_bool(rate))).collect()
}

fn grid(n_trees: Vec<usize>, max_depth: Vec<usize>, leaf: Vec<usize>, n: Vec<usize>) -> SearchGrid {
    SearchGrid {
        n_trees,
        max_depth,
        min_samples_leaf: leaf,
        n_neighbors: n,
        balanced: vec![false],
    }
}

proptest! {
    #[test]
    fn folds_are_stratified(
        y in prop::collection::vec(0u8..=1, 10..300),
        folds in 2usize..8,
        seed in any::<u64>(),
    ) {
        prop_assume!(y.len() >= folds);
        let fold_of = stratified_folds(&y, folds, seed).unwrap();
        let pos = y.iter().filter(|&&v| v == 1).count() as f64;
        for k in 0..folds {
            let rows: Vec<usize> = (0..y.len()).filter(|&i| fold_of[i] == k).collect();
            let fold_pos = rows.iter().filter(|&&i| y[i] == 1).count() as f64;
            let expected = pos * rows.len() as f64 / y.len() as f64;
            prop_assert!((fold_pos - expected).abs() <= 1.0 + 1e-9, "fold {} has {} positives, expected {}", k, fold_pos, expected);
            prop_assert!(rows.len() + 1 >= y.len() / folds);
        }
    }
}

#[test]
fn informative_features_win() {
    let y = labels(600, 0.2, 1);
    let mut matrices = BTreeMap::new();
    matrices.insert(1, matrix(1, &y, true, 2));
    matrices.insert(2, matrix(2, &y, false, 3));
    let g = grid(vec![15], vec![4], vec![4], vec![1, 2]);
    let config = SearchConfig { iterations: 6, folds: 5, seed: 4 };
    let result = random_search(&matrices, &g, &config).unwrap();
    assert_eq!(result.best.n_neighbors, 1);
    assert!(result.best_candidate().summary.f1.mean > 0.9);
    let noise = result.candidates.iter().find(|c| c.hyperparams.n_neighbors == 2).unwrap();
    assert!(noise.summary.f1.mean < 0.5);
}

#[test]
fn single_combination_grid_is_stable() {
    let y = labels(300, 0.3, 5);
    let mut matrices = BTreeMap::new();
    matrices.insert(1, matrix(1, &y, true, 6));
    let g = grid(vec![5], vec![3], vec![4], vec![1]);
    let once = random_search(&matrices, &g, &SearchConfig { iterations: 1, folds: 5, seed: 7 }).unwrap();
    let many = random_search(&matrices, &g, &SearchConfig { iterations: 480, folds: 5, seed: 7 }).unwrap();
    assert_eq!(once.best, many.best);
    assert_eq!(many.candidates.len(), 480);
    assert_eq!(many.best_id, 0);
    for c in &many.candidates {
        assert_eq!(c.folds, once.candidates[0].folds);
    }
    let mut csv = Vec::new();
    write_candidates_csv(&many, &mut csv).unwrap();
    assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 1 + 480 * 5);
}

#[test]
fn shared_forests_match_independent_cross_validation() {
    let y = labels(400, 0.25, 8);
    let mut matrices = BTreeMap::new();
    matrices.insert(1, matrix(1, &y, true, 9));
    matrices.insert(2, matrix(2, &y, true, 10));
    let mut g = grid(vec![3, 7, 12], vec![2, 4, 9], vec![1, 4], vec![1, 2]);
    g.balanced = vec![false, true];
    let config = SearchConfig { iterations: 25, folds: 4, seed: 11 };
    let result = random_search(&matrices, &g, &config).unwrap();
    let fold_of = stratified_folds(&y, 4, derive_seed(11, 0)).unwrap();
    for c in &result.candidates {
        let direct = cross_validate(&matrices[&c.hyperparams.n_neighbors], &c.hyperparams, &fold_of).unwrap();
        assert_eq!(direct, c.folds, "candidate {}", c.id);
    }
    let best_f1 = result.best_candidate().summary.f1.mean;
    let first_best = result.candidates.iter().find(|c| c.summary.f1.mean == best_f1).unwrap();
    assert_eq!(first_best.id, result.best_id);
}

#[test]
fn degenerate_inputs_are_rejected() {
    let y = labels(50, 0.3, 12);
    let mut matrices = BTreeMap::new();
    matrices.insert(1, matrix(1, &y, true, 13));
    let config = SearchConfig { iterations: 3, folds: 5, seed: 1 };
    assert!(random_search(&matrices, &grid(vec![], vec![3], vec![4], vec![1]), &config).is_err());
    assert!(random_search(&matrices, &grid(vec![5], vec![3], vec![4], vec![3]), &config).is_err());
    let zero = SearchConfig { iterations: 0, ..config };
    assert!(random_search(&matrices, &grid(vec![5], vec![3], vec![4], vec![1]), &zero).is_err());
}
