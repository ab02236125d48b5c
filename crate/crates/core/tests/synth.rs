use docforge::docgen::{forged_statement_page, ocr_sim::InkOcrConfig, RenderStyle};
use docforge::features::extract_page;
use docforge::synth::{manipulate_page, DirectionPolicy, ManipulationParams, ScalePolicy};
use docforge::{ManipulationKind, ManipulationRecord, ManipulationSpec, Rect, SourceBox};
use image::{GrayImage, Luma};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PITCH: u32 = 24;
const MARGIN: u32 = 30;

/// A grid of ink blobs far enough apart that no alteration can collide.
fn grid_page(cols: u32, rows: u32, seed: u64) -> (GrayImage, Vec<SourceBox>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut image = GrayImage::from_pixel(2 * MARGIN + cols * PITCH, 2 * MARGIN + rows * PITCH, Luma([250]));
    let mut boxes = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let (x0, y0) = (MARGIN + c * PITCH, MARGIN + r * PITCH);
            for y in y0..y0 + 12 {
                for x in x0..x0 + 10 {
                    if rng.random_bool(0.6) {
                        image.put_pixel(x, y, Luma([rng.random_range(0..60)]));
                    }
                }
            }
            boxes.push(SourceBox { glyph: 'x', x0, y0, width: 10, height: 12 });
        }
    }
    (image, boxes)
}

fn touched(records: &[ManipulationRecord], x: u32, y: u32) -> bool {
    let (fx, fy) = (f64::from(x) + 0.5, f64::from(y) + 0.5);
    records
        .iter()
        .any(|r| r.original_box.contains_point(fx, fy) || r.altered_box.contains_point(fx, fy))
}

fn check_page(spec: &ManipulationSpec, seed: u64) -> Result<(), TestCaseError> {
    let (clean, boxes) = grid_page(12, 10, seed);
    let (altered, records) = manipulate_page(&clean, 3, &boxes, spec).unwrap();
    let (w, h) = clean.dimensions();
    let [lo, hi] = spec.magnitude_range;
    for r in &records {
        prop_assert!(r.altered_box.fits_within(w, h));
        prop_assert_eq!(r.page_index, 3);
        prop_assert_eq!(r.kind, spec.kind);
        match r.params {
            ManipulationParams::Offset { dx, dy } => {
                prop_assert!(dx == 0 || dy == 0);
                let m = f64::from(dx.abs() + dy.abs());
                prop_assert!(lo <= m && m <= hi);
                if spec.direction_policy == DirectionPolicy::VerticalOnly {
                    prop_assert_eq!(dx, 0);
                }
                let o = r.original_box;
                prop_assert_eq!(
                    r.altered_box,
                    Rect::new((o.x0 as i32 + dx) as u32, (o.y0 as i32 + dy) as u32, o.width, o.height)
                );
            }
            ManipulationParams::Factor { factor } => {
                let u = (factor - 1.0).abs();
                prop_assert!(lo - 1e-12 <= u && u <= hi + 1e-12);
                match spec.scale_policy {
                    ScalePolicy::Enlarge => prop_assert!(factor > 1.0),
                    ScalePolicy::Shrink => prop_assert!(factor < 1.0),
                    ScalePolicy::Both => {}
                }
                prop_assert_ne!(
                    (r.altered_box.width, r.altered_box.height),
                    (r.original_box.width, r.original_box.height)
                );
            }
        }
    }
    for (x, y, p) in altered.enumerate_pixels() {
        if !touched(&records, x, y) {
            prop_assert_eq!(p, clean.get_pixel(x, y), "pixel ({}, {}) changed", x, y);
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn shifts_stay_inside_and_touch_only_their_boxes(
        lo in 1u32..6,
        extra in 0u32..5,
        vertical in any::<bool>(),
        seed in any::<u64>(),
    ) {
        let mut spec = ManipulationSpec::shift(lo, lo + extra, seed).with_probability(0.3);
        if vertical {
            spec.direction_policy = DirectionPolicy::VerticalOnly;
        }
        check_page(&spec, seed)?;
    }

    #[test]
    fn scales_stay_inside_and_touch_only_their_boxes(
        lo in 0.05f64..0.2,
        extra in 0.0f64..0.1,
        policy in prop_oneof![Just(ScalePolicy::Both), Just(ScalePolicy::Enlarge), Just(ScalePolicy::Shrink)],
        seed in any::<u64>(),
    ) {
        let mut spec = ManipulationSpec::scale(lo, lo + extra, seed).with_probability(0.3);
        spec.scale_policy = policy;
        check_page(&spec, seed)?;
    }
}

#[test]
fn same_seed_same_corpus() {
    let (clean, boxes) = grid_page(20, 10, 1);
    for spec in [ManipulationSpec::shift(1, 5, 9), ManipulationSpec::scale(0.07, 0.14, 9)] {
        let spec = spec.with_probability(0.2);
        let a = manipulate_page(&clean, 4, &boxes, &spec).unwrap();
        let b = manipulate_page(&clean, 4, &boxes, &spec).unwrap();
        assert_eq!(a, b);
        let other = manipulate_page(&clean, 4, &boxes, &ManipulationSpec { seed: 10, ..spec.clone() }).unwrap();
        assert_ne!(a.1, other.1);
    }
}

#[test]
fn manipulation_count_is_binomial() {
    let (clean, boxes) = grid_page(40, 25, 2);
    assert_eq!(boxes.len(), 1000);
    for seed in 0..5 {
        let (_, records) = manipulate_page(&clean, 0, &boxes, &ManipulationSpec::shift(1, 5, seed)).unwrap();
        assert!((25..=75).contains(&records.len()), "seed {seed}: {} manipulations", records.len());
        assert!(records.iter().all(|r| r.kind == ManipulationKind::Shift));
    }
}

#[test]
fn label_rate_tracks_probability() {
    let style = RenderStyle::default();
    let ocr = InkOcrConfig::default();
    for (name, spec) in ManipulationSpec::reference_ranges(21) {
        let p = spec.probability;
        let (mut pos, mut total) = (0usize, 0usize);
        for page in 0..2 {
            let forged = forged_statement_page(5, page, &style, &spec, &ocr).unwrap();
            let vectors = extract_page(&forged.page, &forged.image, &[1], &forged.truth).unwrap();
            pos += vectors[0].iter().filter(|v| v.label == 1).count();
            total += vectors[0].len();
        }
        let rate = pos as f64 / total as f64;
        assert!(p / 2.0 <= rate && rate <= 2.0 * p, "{name}: positive rate {rate}");
    }
}
