use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use docforge::docgen::{self, ocr_sim, RenderStyle};
use docforge::features::extract_page;
use docforge::ocr::{parse_tsv, write_tsv};
use docforge::synth::{
    assign_splits, build_corpus, load_source_documents, page_file_name, read_truth, CorpusManifest,
    DirectionPolicy, ScalePolicy, Split, SourceDocument,
};
use docforge::{FeatureMatrix, ManipulationKind, ManipulationRecord, ManipulationSpec, Page};
use rayon::prelude::*;
use serde::Serialize;

use super::write_json;
use crate::config::{
    Direction, ExtractArgs, OcrArgs, RenderArgs, RunConfig, ScaleMode, SpecKind, SplitChoice, SynthArgs,
};

pub fn render(run: &RunConfig, args: &RenderArgs) -> anyhow::Result<()> {
    let style = RenderStyle::default();
    let docs: Vec<SourceDocument> = (args.first..args.first + args.pages)
        .into_par_iter()
        .map(|page_index| {
            let page = docgen::statement_page(run.seed, page_index, &style);
            let file = page_file_name(page_index);
            let path = run.out.join(&file);
            page.image.save(&path).with_context(|| format!("writing {}", path.display()))?;
            Ok(SourceDocument {
                page_index,
                image: PathBuf::from(file),
                boxes: page.boxes,
            })
        })
        .collect::<anyhow::Result<_>>()?;
    let characters: usize = docs.iter().map(|d| d.boxes.len()).sum();
    write_json(&run.out.join("pages.json"), &docs)?;
    println!("rendered {} pages, {characters} characters", docs.len());
    Ok(())
}

pub fn synth_spec(args: &SynthArgs, seed: u64) -> anyhow::Result<ManipulationSpec> {
    let [lo, hi] = args.range[..] else {
        bail!("--range takes exactly two values");
    };
    let spec = ManipulationSpec {
        kind: match args.spec {
            SpecKind::Shift => ManipulationKind::Shift,
            SpecKind::Scale => ManipulationKind::Scale,
        },
        magnitude_range: [lo, hi],
        probability: args.prob,
        direction_policy: match args.direction {
            Direction::Axis4 => DirectionPolicy::Axis4,
            Direction::VerticalOnly => DirectionPolicy::VerticalOnly,
        },
        scale_policy: match args.scale_mode {
            ScaleMode::Both => ScalePolicy::Both,
            ScaleMode::Enlarge => ScalePolicy::Enlarge,
            ScaleMode::Shrink => ScalePolicy::Shrink,
        },
        seed,
    };
    spec.validate()?;
    if !(0.0..=1.0).contains(&args.test_fraction) {
        bail!("--test-fraction must lie in [0, 1], got {}", args.test_fraction);
    }
    Ok(spec)
}

pub fn synth(run: &RunConfig, args: &SynthArgs) -> anyhow::Result<()> {
    let spec = synth_spec(args, run.seed)?;
    let docs = load_source_documents(&args.input)?;
    let indices: Vec<usize> = docs.iter().map(|d| d.page_index).collect();
    let splits = assign_splits(&indices, args.test_fraction, run.seed);
    let stats = build_corpus(&docs, &spec, &splits, &run.out)?;
    println!("pages:       {}", stats.pages);
    println!("characters:  {}", stats.characters);
    for (kind, count) in &stats.manipulations_by_kind {
        println!("{:<12} {count}", format!("{kind}:"));
    }
    if stats.manipulations_by_kind.is_empty() {
        println!("manipulated: 0");
    }
    if stats.failed_documents > 0 {
        bail!(
            "{} of {} input pages could not be processed (see manifest.json)",
            stats.failed_documents,
            docs.len()
        );
    }
    Ok(())
}

pub(crate) fn read_manifest(corpus: &Path) -> anyhow::Result<CorpusManifest> {
    let path = corpus.join("manifest.json");
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn tsv_name(page_index: usize) -> String {
    format!("page{page_index:04}.tsv")
}

pub fn ocr(run: &RunConfig, args: &OcrArgs) -> anyhow::Result<()> {
    let manifest = read_manifest(&args.corpus)?;
    let sources: BTreeMap<usize, SourceDocument> = load_source_documents(&args.sources)?
        .into_iter()
        .map(|d| (d.page_index, d))
        .collect();
    let config = ocr_sim::InkOcrConfig::default();
    for split in [Split::Train, Split::Test] {
        fs::create_dir_all(run.out.join(split.dir_name()))?;
    }
    let written: Vec<usize> = manifest
        .pages
        .par_iter()
        .map(|p| {
            let src = sources
                .get(&p.page_index)
                .with_context(|| format!("page {} is missing from {}", p.page_index, args.sources.display()))?;
            let path = args.corpus.join(&p.file);
            let image = image::open(&path)
                .with_context(|| format!("reading {}", path.display()))?
                .to_luma8();
            let boxes = ocr_sim::extract_boxes(&image, &src.boxes, p.page_index, &config);
            let out = run.out.join(p.split.dir_name()).join(tsv_name(p.page_index));
            fs::write(&out, write_tsv(&boxes)).with_context(|| format!("writing {}", out.display()))?;
            Ok(boxes.len())
        })
        .collect::<anyhow::Result<_>>()?;
    println!("wrote {} tsv files, {} boxes", written.len(), written.iter().sum::<usize>());
    Ok(())
}

#[derive(Debug, Serialize)]
struct SkippedPage {
    page_index: usize,
    reason: String,
}

#[derive(Debug, Serialize)]
struct ExtractLog {
    pages_processed: usize,
    skipped: Vec<SkippedPage>,
    matrices: BTreeMap<String, usize>,
}

fn page_vectors(
    corpus: &Path,
    tsv_dir: &Path,
    split: Split,
    page_index: usize,
    file: &str,
    ns: &[usize],
    truth: &[ManipulationRecord],
) -> Result<Vec<Vec<docforge::SubGraphVector>>, SkippedPage> {
    let skip = |reason: String| SkippedPage { page_index, reason };
    let tsv_path = tsv_dir.join(split.dir_name()).join(tsv_name(page_index));
    let text = fs::read_to_string(&tsv_path).map_err(|e| skip(format!("{}: {e}", tsv_path.display())))?;
    let boxes = parse_tsv(&text, page_index).map_err(|e| skip(format!("{}: {e}", tsv_path.display())))?;
    let image_path = corpus.join(file);
    let image = image::open(&image_path)
        .map_err(|e| skip(format!("{}: {e}", image_path.display())))?
        .to_luma8();
    let page = Page::new(page_index, &image_path, image.width(), image.height(), boxes)
        .map_err(|e| skip(format!("{}: {e}", tsv_path.display())))?;
    let own: Vec<ManipulationRecord> = truth.iter().filter(|r| r.page_index == page_index).cloned().collect();
    extract_page(&page, &image, ns, &own).map_err(|e| skip(e.to_string()))
}

pub fn extract(run: &RunConfig, args: &ExtractArgs) -> anyhow::Result<()> {
    let mut ns = args.n.clone();
    ns.sort_unstable();
    ns.dedup();
    if let Some(&0) = ns.first() {
        bail!("--n must be at least 1");
    }
    let manifest = read_manifest(&args.corpus)?;
    let tsv_dir = args.tsv.as_deref().unwrap_or(&args.corpus);
    let splits: &[Split] = match args.split {
        SplitChoice::Train => &[Split::Train],
        SplitChoice::Test => &[Split::Test],
        SplitChoice::All => &[Split::Train, Split::Test],
    };
    let mut log = ExtractLog {
        pages_processed: 0,
        skipped: Vec::new(),
        matrices: BTreeMap::new(),
    };
    for &split in splits {
        let truth_path = args.corpus.join(split.dir_name()).join("truth.json");
        let truth = if truth_path.exists() {
            read_truth(&truth_path)?
        } else {
            log::warn!("{} not found; all labels are 0", truth_path.display());
            Vec::new()
        };
        let pages: Vec<_> = manifest.pages.iter().filter(|p| p.split == split).collect();
        let results: Vec<_> = pages
            .par_iter()
            .map(|p| page_vectors(&args.corpus, tsv_dir, split, p.page_index, &p.file, &ns, &truth))
            .collect();
        let mut matrices: Vec<FeatureMatrix> = ns.iter().map(|&n| FeatureMatrix::new(n)).collect();
        for result in results {
            match result {
                Ok(per_n) => {
                    log.pages_processed += 1;
                    for (m, vectors) in matrices.iter_mut().zip(per_n) {
                        for v in vectors {
                            m.push(v)?;
                        }
                    }
                }
                Err(skipped) => {
                    log::warn!("page {} skipped: {}", skipped.page_index, skipped.reason);
                    log.skipped.push(skipped);
                }
            }
        }
        for m in &matrices {
            let name = format!("features_{}_n{}.{}", split.dir_name(), m.n, args.format.extension());
            m.save(&run.out.join(&name))?;
            let positives = m.labels.iter().filter(|&&l| l == 1).count();
            println!("{name}: {} rows x {} columns, {positives} manipulated", m.rows(), m.cols());
            log.matrices.insert(name, m.rows());
        }
    }
    write_json(&run.out.join("extract_log.json"), &log)?;
    Ok(())
}
