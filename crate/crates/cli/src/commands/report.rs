use std::fs;
use std::path::Path;

use anyhow::Context;
use docforge::features::extract_page;
use docforge::ocr::parse_tsv;
use docforge::report::render_overlay;
use docforge::synth::read_truth;
use docforge::{FeatureMatrix, Page, Rect};
use serde::Serialize;

use super::model::read_model;
use super::write_json;
use crate::config::{ReportArgs, RunConfig};

#[derive(Debug, Serialize)]
struct Detection {
    box_index: usize,
    glyph: char,
    rect: Rect,
    score: f64,
}

#[derive(Debug, Serialize)]
struct PageReport {
    page_index: usize,
    predicted: Vec<Detection>,
    truth: Vec<Rect>,
}

fn index_from_name(path: &Path) -> usize {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let digits: String = stem.chars().filter(char::is_ascii_digit).collect();
    digits.parse().unwrap_or(0)
}

pub fn report(run: &RunConfig, args: &ReportArgs) -> anyhow::Result<()> {
    let model = read_model(&args.model)?;
    let page_index = args.page_index.unwrap_or_else(|| index_from_name(&args.image));
    let image = image::open(&args.image)
        .with_context(|| format!("reading {}", args.image.display()))?
        .to_luma8();
    let text = fs::read_to_string(&args.tsv).with_context(|| format!("reading {}", args.tsv.display()))?;
    let boxes = parse_tsv(&text, page_index).with_context(|| format!("parsing {}", args.tsv.display()))?;
    let page = Page::new(page_index, &args.image, image.width(), image.height(), boxes)
        .with_context(|| format!("checking {}", args.tsv.display()))?;
    let truth: Vec<_> = match &args.truth {
        Some(path) => read_truth(path)?
            .into_iter()
            .filter(|r| r.page_index == page_index)
            .collect(),
        None => Vec::new(),
    };
    let n = model.schema.n_neighbors;
    let vectors = extract_page(&page, &image, &[n], &truth)?.remove(0);
    let matrix = FeatureMatrix::from_vectors(n, vectors)?;
    let scores = model.scores(&matrix)?;
    let boxes: Vec<_> = page.boxes().collect();
    let predicted: Vec<Detection> = scores
        .iter()
        .enumerate()
        .filter(|(_, &s)| s >= 0.5)
        .map(|(i, &score)| {
            let b = boxes[matrix.box_index[i]];
            Detection {
                box_index: matrix.box_index[i],
                glyph: b.glyph,
                rect: b.rect(),
                score,
            }
        })
        .collect();
    let truth_rects: Vec<Rect> = truth.iter().map(|r| r.altered_box).collect();
    let rects: Vec<Rect> = predicted.iter().map(|d| d.rect).collect();
    let overlay = render_overlay(&image, &rects, &truth_rects);
    let png = run.out.join(format!("report_page{page_index:04}.png"));
    overlay.save(&png).with_context(|| format!("writing {}", png.display()))?;
    println!(
        "page {page_index}: {} predicted, {} true manipulations; overlay written to {}",
        predicted.len(),
        truth_rects.len(),
        png.display()
    );
    write_json(
        &run.out.join(format!("report_page{page_index:04}.json")),
        &PageReport {
            page_index,
            predicted,
            truth: truth_rects,
        },
    )
}
