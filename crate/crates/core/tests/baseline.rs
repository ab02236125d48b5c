use docforge::baseline::{method1_pairwise, ClassModel};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DIM: usize = 9;

/// Approximately normal via the sum of twelve uniforms.
fn normal(rng: &mut ChaCha8Rng) -> f64 {
    (0..12).map(|_| rng.random_range(0.0..1.0)).sum::<f64>() - 6.0
}

/// Correlated samples with very different coordinate scales.
fn samples(count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mix = DMatrix::from_fn(DIM, DIM, |a, b| if a == b { 1.0 } else { 0.3 * ((a + 2 * b) % 5) as f64 / 5.0 });
    let scales = [40.0, 30.0, 1e-3, 1e-5, 1e-8, 1e-10, 1e-12, 1e-11, 1e-13];
    (0..count)
        .map(|_| {
            let z = DVector::from_fn(DIM, |_, _| normal(&mut rng));
            let x = &mix * z;
            (0..DIM).map(|k| 100.0 * scales[k] + x[k] * scales[k]).collect()
        })
        .collect()
}

fn two_pass(data: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let n = data.len() as f64;
    let mean: Vec<f64> = (0..DIM).map(|k| data.iter().map(|s| s[k]).sum::<f64>() / n).collect();
    let mut cov = vec![0.0; DIM * DIM];
    for a in 0..DIM {
        for b in 0..DIM {
            cov[a * DIM + b] = data.iter().map(|s| (s[a] - mean[a]) * (s[b] - mean[b])).sum::<f64>() / (n - 1.0);
        }
    }
    (mean, cov)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

#[test]
fn streaming_statistics_match_two_pass() {
    let data = samples(500, 1);
    let model = ClassModel::fit('a', data.iter().map(Vec::as_slice));
    let (mean, cov) = two_pass(&data);
    assert_eq!(model.count, 500);
    for k in 0..DIM {
        assert!(rel(model.mean[k], mean[k]) < 1e-12, "mean {k}");
    }
    for k in 0..DIM * DIM {
        let scale = (cov[(k / DIM) * DIM + k / DIM] * cov[(k % DIM) * DIM + k % DIM]).sqrt();
        assert!((model.covariance[k] - cov[k]).abs() <= 1e-12 * scale, "cov {k}");
    }
}

#[test]
fn distance_matches_explicit_inverse() {
    let data = samples(300, 2);
    let model = ClassModel::fit('a', data.iter().map(Vec::as_slice));
    let cov = DMatrix::from_row_slice(DIM, DIM, &model.covariance);
    // Invert in the correlation form so the explicit inverse is accurate.
    let s = DVector::from_fn(DIM, |i, _| cov[(i, i)].sqrt());
    let corr = DMatrix::from_fn(DIM, DIM, |a, b| cov[(a, b)] / (s[a] * s[b]));
    let inv = corr.try_inverse().unwrap();
    for w in samples(50, 3) {
        let z = DVector::from_fn(DIM, |i, _| (w[i] - model.mean[i]) / s[i]);
        let expected = (z.transpose() * &inv * &z)[(0, 0)].sqrt();
        let got = model.distance(&w).unwrap();
        assert!(rel(got, expected) < 1e-9, "{got} vs {expected}");
    }
}

#[test]
fn identity_covariance_is_euclidean() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mean: Vec<f64> = (0..DIM).map(|_| rng.random_range(-3.0..3.0)).collect();
    let identity: Vec<f64> = (0..DIM * DIM).map(|k| if k / DIM == k % DIM { 1.0 } else { 0.0 }).collect();
    let model = ClassModel::from_parts('x', mean.clone(), identity, 10);
    for _ in 0..100 {
        let w: Vec<f64> = (0..DIM).map(|_| rng.random_range(-10.0..10.0)).collect();
        let euclid = w.iter().zip(&mean).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        assert!((model.distance(&w).unwrap() - euclid).abs() < 1e-12);
    }
}

#[test]
fn rescaling_a_coordinate_leaves_distances_unchanged() {
    let data = samples(200, 5);
    let probes = samples(40, 6);
    let base = ClassModel::fit('a', data.iter().map(Vec::as_slice));
    for (k, factor) in [(0, 1e6), (4, 1e-6), (8, 37.0)] {
        let scale = |v: &Vec<f64>| {
            let mut v = v.clone();
            v[k] *= factor;
            v
        };
        let scaled_data: Vec<Vec<f64>> = data.iter().map(scale).collect();
        let scaled = ClassModel::fit('a', scaled_data.iter().map(Vec::as_slice));
        for p in &probes {
            let a = base.distance(p).unwrap();
            let b = scaled.distance(&scale(p)).unwrap();
            assert!(rel(b, a) < 1e-6, "coordinate {k}: {a} vs {b}");
        }
    }
}

#[test]
fn planted_outlier_stands_out() {
    let data = samples(400, 7);
    let model = ClassModel::fit('a', data.iter().map(Vec::as_slice));
    let inliers = samples(200, 8);
    let typical: Vec<f64> = inliers.iter().map(|w| model.distance(w).unwrap()).collect();
    let flagged = typical.iter().filter(|&&d| d > 6.0).count();
    assert!(flagged <= 2, "{flagged} inliers flagged");
    let mut outlier = model.mean.clone();
    outlier[2] += 12.0 * model.covariance[2 * DIM + 2].sqrt();
    assert!(model.distance(&outlier).unwrap() > 6.0);
}

#[test]
fn exact_duplicate_is_flagged() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut hu: Vec<[f64; 7]> = (0..30).map(|_| std::array::from_fn(|_| rng.random_range(-5.0..5.0))).collect();
    hu.push(hu[3]);
    let flags = method1_pairwise(&hu, 5.0, 100.0);
    assert!(flags[3] && flags[30]);
    assert!(flags.iter().filter(|&&f| f).count() < hu.len());
}

proptest! {
    #[test]
    fn method1_commutes_with_permutation(
        values in prop::collection::vec(prop::array::uniform7(-8.0f64..8.0), 2..25),
        lower in 0.0f64..30.0,
        upper in 60.0f64..100.0,
        seed in any::<u64>(),
    ) {
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let permuted: Vec<[f64; 7]> = order.iter().map(|&i| values[i]).collect();
        let direct = method1_pairwise(&values, lower, upper);
        let shuffled = method1_pairwise(&permuted, lower, upper);
        for (k, &i) in order.iter().enumerate() {
            prop_assert_eq!(shuffled[k], direct[i]);
        }
    }
}
