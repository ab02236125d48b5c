mod baseline;
mod corpus;
mod model;
mod report;

use std::fs;
use std::path::Path;

use anyhow::Context;
use serde::Serialize;

use crate::config::{Command, RunConfig};

pub fn run(run: &RunConfig) -> anyhow::Result<()> {
    if let Some(jobs) = run.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global()
            .context("configuring worker threads")?;
    }
    fs::create_dir_all(&run.out).with_context(|| format!("creating {}", run.out.display()))?;
    write_json(&run.record_path(), run)?;
    match &run.command {
        Command::Render(a) => corpus::render(run, a),
        Command::Synth(a) => corpus::synth(run, a),
        Command::Ocr(a) => corpus::ocr(run, a),
        Command::Extract(a) => corpus::extract(run, a),
        Command::Train(a) => model::train(run, a),
        Command::Search(a) => model::search(run, a),
        Command::Evaluate(a) => model::evaluate(run, a),
        Command::Baseline(a) => baseline::baseline(run, a),
        Command::Report(a) => report::report(run, a),
    }
}

pub(crate) fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub(crate) fn create_file(path: &Path) -> anyhow::Result<fs::File> {
    fs::File::create(path).with_context(|| format!("creating {}", path.display()))
}
