//! Writes a one-page corpus with exactly one shifted character, plus the
//! TSV file the box extractor produces for it.
//!
//! Usage: `cargo run -p docforge --example e2e_fixture -- <out_dir>`

use std::fs;
use std::path::PathBuf;

use docforge::docgen::{ocr_sim, render_lines, RenderStyle};
use docforge::ocr::write_tsv;
use docforge::synth::{manipulate_page, page_file_name, CorpusManifest, DirectionPolicy, ManifestPage, Split};
use docforge::ManipulationSpec;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = PathBuf::from(std::env::args().nth(1).ok_or("usage: e2e_fixture <out_dir>")?);
    let lines: Vec<String> = [
        "ACME SAVINGS BANK",
        "Date 03/14/2022  Amount $4,182.50",
        "Closing Balance: $12,907.31",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let page = render_lines(&lines, 760, 200, &RenderStyle::default(), 5);
    // The '8' of the amount on the second line.
    let target = page
        .boxes
        .iter()
        .position(|b| b.glyph == '8' && b.y0 > page.boxes[0].y0 + 20)
        .ok_or("no target glyph")?;
    let mut spec = ManipulationSpec::shift(4, 4, 11).with_probability(1.0);
    spec.direction_policy = DirectionPolicy::VerticalOnly;
    let (image, truth) = manipulate_page(&page.image, 0, &page.boxes[target..=target], &spec)?;
    assert_eq!(truth.len(), 1);

    let boxes = ocr_sim::extract_boxes(&image, &page.boxes, 0, &ocr_sim::InkOcrConfig::default());
    for split in ["train", "test"] {
        fs::create_dir_all(out.join(split))?;
    }
    let file = page_file_name(0);
    image.save(out.join("train").join(&file))?;
    fs::write(out.join("train/page0000.tsv"), write_tsv(&boxes))?;
    fs::write(out.join("train/truth.json"), serde_json::to_string_pretty(&truth)? + "\n")?;
    fs::write(out.join("test/truth.json"), "[]\n")?;
    let manifest = CorpusManifest {
        tool: "docforge".into(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        seed: spec.seed,
        spec,
        pages: vec![ManifestPage {
            page_index: 0,
            split: Split::Train,
            file: format!("train/{file}"),
            characters: page.boxes.len(),
            manipulations: 1,
        }],
        errors: Vec::new(),
    };
    fs::write(out.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
    println!("{} boxes, manipulated {:?}", boxes.len(), truth[0]);
    Ok(())
}
