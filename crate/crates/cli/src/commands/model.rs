use std::collections::BTreeMap;
use std::fs;
use std::io::BufWriter;
use std::path::Path;

use anyhow::{bail, Context};
use docforge::forest::{
    self, evaluate as score, load_model, random_search, save_model, stratified_folds, write_candidates_csv,
    write_summary_csv, MetricSummary, SearchConfig, SearchGrid,
};
use docforge::seed::derive_seed;
use docforge::{FeatureMatrix, ForestHyperparams, ForestModel, Metrics};
use serde::{Deserialize, Serialize};

use super::{create_file, write_json};
use crate::config::{EvaluateArgs, RunConfig, SearchArgs, TrainArgs};

pub(crate) fn load_matrix(path: &Path) -> anyhow::Result<FeatureMatrix> {
    Ok(FeatureMatrix::load(path)?)
}

pub(crate) fn read_model(path: &Path) -> anyhow::Result<ForestModel> {
    let bytes = fs::read(path).with_context(|| format!("reading model {}", path.display()))?;
    load_model(&bytes).with_context(|| format!("loading model {}", path.display()))
}

pub fn train(run: &RunConfig, args: &TrainArgs) -> anyhow::Result<()> {
    let matrix = load_matrix(&args.features)?;
    let hp = ForestHyperparams {
        n_trees: args.trees,
        max_depth: args.max_depth,
        min_samples_leaf: args.min_samples_leaf,
        n_neighbors: matrix.n,
        seed: run.seed,
        balanced: args.balanced,
    };
    let model = forest::train(&matrix, &hp)?;
    let path = run.out.join("model.dfrf");
    fs::write(&path, save_model(&model)).with_context(|| format!("writing {}", path.display()))?;
    if args.json {
        let json = run.out.join("model.json");
        fs::write(&json, model.to_json()?).with_context(|| format!("writing {}", json.display()))?;
    }
    let fit = score(&matrix.labels, &model.predict_matrix(&matrix)?)?;
    println!(
        "trained {} trees on {} rows ({} columns), mean out-of-bag fraction {:.3}",
        model.trees.len(),
        matrix.rows(),
        matrix.cols(),
        model.mean_oob_fraction()
    );
    println!("training-set F1 {:.4}; model written to {}", fit.f1, path.display());
    Ok(())
}

#[derive(Debug, Serialize)]
struct SearchReport<'a> {
    best_id: usize,
    best: &'a ForestHyperparams,
    summary: &'a MetricSummary,
    grid: &'a SearchGrid,
    iterations: usize,
    folds: usize,
}

pub fn search(run: &RunConfig, args: &SearchArgs) -> anyhow::Result<()> {
    let mut matrices = BTreeMap::new();
    for path in &args.features {
        let m = load_matrix(path)?;
        if matrices.insert(m.n, m).is_some() {
            bail!("two feature files share a neighbour count ({})", path.display());
        }
    }
    let grid = match &args.grid {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => {
            let mut g = SearchGrid::reference();
            g.n_neighbors.retain(|n| matrices.contains_key(n));
            if g.n_neighbors.is_empty() {
                bail!(
                    "the default grid searches n in {:?}; supply matching feature files or --grid",
                    SearchGrid::reference().n_neighbors
                );
            }
            g
        }
    };
    let config = SearchConfig {
        iterations: args.iterations,
        folds: args.folds,
        seed: run.seed,
    };
    let result = random_search(&matrices, &grid, &config)?;
    write_candidates_csv(&result, BufWriter::new(create_file(&run.out.join("candidates.csv"))?))?;
    write_summary_csv(&result, BufWriter::new(create_file(&run.out.join("summary.csv"))?))?;
    let best = result.best_candidate();
    write_json(
        &run.out.join("search.json"),
        &SearchReport {
            best_id: result.best_id,
            best: &result.best,
            summary: &best.summary,
            grid: &grid,
            iterations: args.iterations,
            folds: args.folds,
        },
    )?;
    println!(
        "best candidate #{}: {} trees, depth {}, leaf {}, n={}{}",
        result.best_id,
        result.best.n_trees,
        result.best.max_depth,
        result.best.min_samples_leaf,
        result.best.n_neighbors,
        if result.best.balanced { ", balanced" } else { "" }
    );
    print!("{}", best.summary.table("Metric"));
    if args.train_best {
        let model = forest::train(&matrices[&result.best.n_neighbors], &result.best)?;
        let path = run.out.join("model.dfrf");
        fs::write(&path, save_model(&model)).with_context(|| format!("writing {}", path.display()))?;
        println!("best model written to {}", path.display());
    }
    Ok(())
}

#[derive(Debug, Deserialize)]
struct PredictionRow {
    label: u8,
    prediction: u8,
}

#[derive(Debug, Serialize)]
struct Evaluation {
    overall: Metrics,
    folds: Vec<Metrics>,
    summary: MetricSummary,
}

#[derive(Debug, Serialize)]
struct ScoredRow {
    page_index: usize,
    box_index: usize,
    glyph: char,
    label: u8,
    score: f64,
    prediction: u8,
}

fn labels_and_predictions(run: &RunConfig, args: &EvaluateArgs) -> anyhow::Result<(Vec<u8>, Vec<u8>)> {
    match (&args.model, &args.features, &args.predictions) {
        (Some(model), Some(features), None) => {
            let model = read_model(model)?;
            let matrix = load_matrix(features)?;
            let scores = model.scores(&matrix)?;
            let predictions: Vec<u8> = scores.iter().map(|&s| u8::from(s >= 0.5)).collect();
            let mut w = csv::Writer::from_writer(BufWriter::new(create_file(&run.out.join("predictions.csv"))?));
            for (i, (&score, &prediction)) in scores.iter().zip(&predictions).enumerate() {
                w.serialize(ScoredRow {
                    page_index: matrix.page_index[i],
                    box_index: matrix.box_index[i],
                    glyph: matrix.glyphs[i],
                    label: matrix.labels[i],
                    score,
                    prediction,
                })?;
            }
            w.flush()?;
            Ok((matrix.labels, predictions))
        }
        (None, None, Some(path)) => {
            let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
            let rows = r
                .deserialize::<PredictionRow>()
                .collect::<Result<Vec<_>, _>>()
                .with_context(|| format!("parsing {}", path.display()))?;
            if rows.iter().any(|r| r.label > 1 || r.prediction > 1) {
                bail!("{}: labels and predictions must be 0 or 1", path.display());
            }
            Ok(rows.iter().map(|r| (r.label, r.prediction)).unzip())
        }
        _ => bail!("evaluate needs either --model with --features, or --predictions"),
    }
}

pub fn evaluate(run: &RunConfig, args: &EvaluateArgs) -> anyhow::Result<()> {
    let (labels, predictions) = labels_and_predictions(run, args)?;
    let overall = score(&labels, &predictions)?;
    let fold_of = stratified_folds(&labels, args.folds, derive_seed(run.seed, 0))?;
    let folds = (0..args.folds)
        .map(|k| {
            let (y, p): (Vec<u8>, Vec<u8>) = fold_of
                .iter()
                .zip(labels.iter().zip(&predictions))
                .filter(|(&f, _)| f == k)
                .map(|(_, (&y, &p))| (y, p))
                .unzip();
            score(&y, &p)
        })
        .collect::<docforge::Result<Vec<_>>>()?;
    let summary = MetricSummary::of(&folds);
    print!("{}", summary.table("Metric"));
    println!(
        "all {} rows: tp {} fp {} tn {} fn {}",
        labels.len(),
        overall.confusion.tp,
        overall.confusion.fp,
        overall.confusion.tn,
        overall.confusion.fn_
    );
    write_json(&run.out.join("metrics.json"), &Evaluation { overall, folds, summary })
}
