use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use docforge::docgen::{forged_statement_page, ocr_sim::InkOcrConfig, RenderStyle};
use docforge::features::extract_page;
use docforge::forest::train;
use docforge::moments::glyph_moments;
use docforge::{FeatureMatrix, ForestHyperparams, ManipulationSpec};

fn corpus_page(index: usize) -> docforge::docgen::ForgedPage {
    let spec = ManipulationSpec::shift(1, 5, 7);
    forged_statement_page(1, index, &RenderStyle::default(), &spec, &InkOcrConfig::default()).unwrap()
}

fn moments(c: &mut Criterion) {
    let page = corpus_page(0);
    let crops: Vec<_> = page
        .page
        .boxes()
        .take(200)
        .map(|b| image::imageops::crop_imm(&page.image, b.x0, b.y0, b.width, b.height).to_image())
        .collect();
    c.bench_function("glyph_moments x200", |bench| {
        bench.iter(|| {
            for crop in &crops {
                black_box(glyph_moments(crop).unwrap());
            }
        })
    });
}

fn extraction(c: &mut Criterion) {
    let page = corpus_page(1);
    c.bench_function("extract_page n=3", |bench| {
        bench.iter(|| black_box(extract_page(&page.page, &page.image, &[3], &page.truth).unwrap()))
    });
}

fn training(c: &mut Criterion) {
    let mut matrix = FeatureMatrix::new(3);
    for index in 0..4 {
        let page = corpus_page(index);
        for v in extract_page(&page.page, &page.image, &[3], &page.truth).unwrap().remove(0) {
            matrix.push(v).unwrap();
        }
    }
    let hp = ForestHyperparams {
        n_trees: 20,
        max_depth: 20,
        min_samples_leaf: 4,
        n_neighbors: 3,
        seed: 1,
        balanced: false,
    };
    let mut group = c.benchmark_group("forest");
    group.sample_size(10);
    group.bench_function("train 20 trees", |bench| bench.iter(|| black_box(train(&matrix, &hp).unwrap())));
    let model = train(&matrix, &hp).unwrap();
    group.bench_function("score matrix", |bench| {
        bench.iter_batched(|| &matrix, |m| black_box(model.scores(m).unwrap()), BatchSize::SmallInput)
    });
    group.finish();
}

criterion_group!(benches, moments, extraction, training);
criterion_main!(benches);
