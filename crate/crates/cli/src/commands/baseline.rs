use std::fs;
use std::io::BufWriter;

use anyhow::Context;
use docforge::baseline::{
    baseline_search, write_flags_csv, Baseline, BaselineGrid, BaselineParams, BaselineSearchConfig,
    BaselineSearchMode, BaselineSearchResult, Combine,
};
use docforge::forest::{evaluate as score, MetricSummary};
use docforge::Metrics;
use serde::Serialize;

use super::model::load_matrix;
use super::{create_file, write_json};
use crate::config::{BaselineArgs, BaselineMode, CombineRule, RunConfig};

#[derive(Debug, Serialize)]
struct CandidateRow {
    candidate_id: usize,
    upper_pct: f64,
    lower_pct: f64,
    mahalanobis_threshold: f64,
    log_hu: bool,
    fold: usize,
    precision: f64,
    recall: f64,
    accuracy: f64,
    f1: f64,
}

fn write_candidates(result: &BaselineSearchResult, path: &std::path::Path) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(create_file(path)?));
    for (id, c) in result.candidates.iter().enumerate() {
        for (fold, m) in c.folds.iter().enumerate() {
            w.serialize(CandidateRow {
                candidate_id: id,
                upper_pct: c.params.upper_pct,
                lower_pct: c.params.lower_pct,
                mahalanobis_threshold: c.params.mahalanobis_threshold,
                log_hu: c.params.log_hu,
                fold,
                precision: m.precision,
                recall: m.recall,
                accuracy: m.accuracy,
                f1: m.f1,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct BaselineReport {
    params: BaselineParams,
    cross_validation: Option<MetricSummary>,
    test: Option<Metrics>,
}

pub fn baseline(run: &RunConfig, args: &BaselineArgs) -> anyhow::Result<()> {
    let train = load_matrix(&args.train)?;
    let combine = match args.combine {
        CombineRule::Or => Combine::Or,
        CombineRule::And => Combine::And,
    };
    let (params, cross_validation) = match &args.params {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let params: BaselineParams =
                serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
            params.validate()?;
            (params, None)
        }
        None => {
            let config = BaselineSearchConfig {
                mode: match args.mode {
                    BaselineMode::Exhaustive => BaselineSearchMode::Exhaustive,
                    BaselineMode::Random => BaselineSearchMode::Random {
                        iterations: args.iterations,
                    },
                },
                folds: args.folds,
                seed: run.seed,
                combine,
                extended_w: args.extended_w,
            };
            let result = baseline_search(&train, &BaselineGrid::reference(), &config)?;
            write_candidates(&result, &run.out.join("baseline_candidates.csv"))?;
            let best = result
                .candidates
                .iter()
                .find(|c| c.params == result.best)
                .expect("best params come from the candidate list");
            print!("{}", best.summary.table("Baseline CV"));
            (result.best, Some(best.summary))
        }
    };
    println!(
        "parameters: upper {} lower {} threshold {} log_hu {}",
        params.upper_pct, params.lower_pct, params.mahalanobis_threshold, params.log_hu
    );
    let model = Baseline::fit(&train, params)?;
    let test = match &args.test {
        Some(path) => {
            let matrix = load_matrix(path)?;
            let flags = model.flags(&matrix);
            write_flags_csv(&flags, BufWriter::new(create_file(&run.out.join("baseline_flags.csv"))?))?;
            let m = score(&matrix.labels, &model.predict(&matrix))?;
            println!(
                "test: precision {:.4} recall {:.4} accuracy {:.4} F1 {:.4}",
                m.precision, m.recall, m.accuracy, m.f1
            );
            Some(m)
        }
        None => None,
    };
    write_json(
        &run.out.join("baseline.json"),
        &BaselineReport {
            params,
            cross_validation,
            test,
        },
    )
}
