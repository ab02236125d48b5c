//! Synthetic forgery corpora: stochastic shift and scale manipulations of
//! character boxes in clean page images, with recorded ground truth.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use image::{GrayImage, Luma};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Rect;
use crate::seed::derive_seed;

pub const DEFAULT_PROBABILITY: f64 = 0.05;
const SCALE_REDRAWS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ManipulationKind {
    Shift,
    Scale,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DirectionPolicy {
    /// Up, down, left or right with equal probability.
    #[default]
    Axis4,
    VerticalOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalePolicy {
    Enlarge,
    Shrink,
    #[default]
    Both,
}

/// What to manipulate and how strongly.
///
/// `magnitude_range` is in pixels for shifts (integers, inclusive) and a
/// relative change for scaling: a draw `u` becomes factor `1 + u` or `1 - u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManipulationSpec {
    pub kind: ManipulationKind,
    pub magnitude_range: [f64; 2],
    pub probability: f64,
    #[serde(default)]
    pub direction_policy: DirectionPolicy,
    #[serde(default)]
    pub scale_policy: ScalePolicy,
    pub seed: u64,
}

impl ManipulationSpec {
    pub fn shift(lo: u32, hi: u32, seed: u64) -> Self {
        Self {
            kind: ManipulationKind::Shift,
            magnitude_range: [f64::from(lo), f64::from(hi)],
            probability: DEFAULT_PROBABILITY,
            direction_policy: DirectionPolicy::default(),
            scale_policy: ScalePolicy::default(),
            seed,
        }
    }

    pub fn scale(lo: f64, hi: f64, seed: u64) -> Self {
        Self {
            kind: ManipulationKind::Scale,
            magnitude_range: [lo, hi],
            ..Self::shift(1, 1, seed)
        }
    }

    /// The four manipulation regimes: shifts of 1-5 and 5-10 pixels, scaling by 7-14% and 15-25%.
    pub fn reference_ranges(seed: u64) -> [(&'static str, Self); 4] {
        [
            ("shift_1_5", Self::shift(1, 5, seed)),
            ("shift_5_10", Self::shift(5, 10, seed)),
            ("scale_7_14", Self::scale(0.07, 0.14, seed)),
            ("scale_15_25", Self::scale(0.15, 0.25, seed)),
        ]
    }

    pub fn with_probability(mut self, p: f64) -> Self {
        self.probability = p;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let [lo, hi] = self.magnitude_range;
        if !(0.0..=1.0).contains(&self.probability) {
            return Err(Error::Config(format!(
                "manipulation probability must lie in [0, 1], got {}",
                self.probability
            )));
        }
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::Config(format!("bad magnitude range [{lo}, {hi}]")));
        }
        match self.kind {
            ManipulationKind::Shift => {
                if lo < 1.0 || lo.fract() != 0.0 || hi.fract() != 0.0 {
                    return Err(Error::Config(format!(
                        "shift range must be whole pixels >= 1, got [{lo}, {hi}]"
                    )));
                }
            }
            ManipulationKind::Scale => {
                if lo <= 0.0 || hi >= 1.0 {
                    return Err(Error::Config(format!(
                        "scale range must lie in (0, 1), got [{lo}, {hi}]"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// The applied change, in image coordinates (y grows downward).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ManipulationParams {
    Offset { dx: i32, dy: i32 },
    Factor { factor: f64 },
}

/// Ground truth for one altered character.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManipulationRecord {
    pub page_index: usize,
    pub original_box: Rect,
    pub altered_box: Rect,
    pub kind: ManipulationKind,
    pub params: ManipulationParams,
    pub glyph: char,
}

/// An authoritative character box of a clean page (never shown to detectors).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceBox {
    pub glyph: char,
    pub x0: u32,
    pub y0: u32,
    pub width: u32,
    pub height: u32,
}

impl SourceBox {
    pub fn rect(&self) -> Rect {
        Rect::new(self.x0, self.y0, self.width, self.height)
    }
}

/// A clean input page: rendered image plus its character boxes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceDocument {
    pub page_index: usize,
    pub image: PathBuf,
    pub boxes: Vec<SourceBox>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShiftDirection {
    Up,
    Down,
    Left,
    Right,
}

impl ShiftDirection {
    fn offset(self, magnitude: i32) -> (i32, i32) {
        match self {
            ShiftDirection::Up => (0, -magnitude),
            ShiftDirection::Down => (0, magnitude),
            ShiftDirection::Left => (-magnitude, 0),
            ShiftDirection::Right => (magnitude, 0),
        }
    }
}

fn offset_rect(r: Rect, dx: i32, dy: i32) -> Option<Rect> {
    let x0 = i64::from(r.x0) + i64::from(dx);
    let y0 = i64::from(r.y0) + i64::from(dy);
    (x0 >= 0 && y0 >= 0).then(|| Rect::new(x0 as u32, y0 as u32, r.width, r.height))
}

/// Moves a box by `magnitude` pixels; `Up` decreases `y0`.
pub fn shifted_box(r: Rect, direction: ShiftDirection, magnitude: u32) -> Option<Rect> {
    let (dx, dy) = direction.offset(magnitude as i32);
    offset_rect(r, dx, dy)
}

fn round_half_up(v: f64) -> i64 {
    (v + 0.5).floor() as i64
}

/// Resizes a box by `factor` about its centre.
pub fn scaled_box(r: Rect, factor: f64) -> Option<Rect> {
    let w = round_half_up(f64::from(r.width) * factor).max(1);
    let h = round_half_up(f64::from(r.height) * factor).max(1);
    let (cx, cy) = r.center();
    let x0 = round_half_up(cx - w as f64 / 2.0);
    let y0 = round_half_up(cy - h as f64 / 2.0);
    (x0 >= 0 && y0 >= 0).then(|| Rect::new(x0 as u32, y0 as u32, w as u32, h as u32))
}

/// Most frequent value on the one-pixel ring around `r`; ties go to the lighter value.
pub fn background_value(image: &GrayImage, r: Rect) -> u8 {
    let (w, h) = image.dimensions();
    let mut hist = [0u32; 256];
    let x_lo = i64::from(r.x0) - 1;
    let x_hi = i64::from(r.x1());
    let y_lo = i64::from(r.y0) - 1;
    let y_hi = i64::from(r.y1());
    let mut visit = |x: i64, y: i64| {
        if x >= 0 && y >= 0 && x < i64::from(w) && y < i64::from(h) {
            hist[image.get_pixel(x as u32, y as u32)[0] as usize] += 1;
        }
    };
    for x in x_lo..=x_hi {
        visit(x, y_lo);
        visit(x, y_hi);
    }
    for y in (y_lo + 1)..y_hi {
        visit(x_lo, y);
        visit(x_hi, y);
    }
    if hist.iter().all(|&c| c == 0) {
        return 255;
    }
    let mut best = 0usize;
    for v in 0..256 {
        if hist[v] >= hist[best] {
            best = v;
        }
    }
    best as u8
}

fn crop(image: &GrayImage, r: Rect) -> GrayImage {
    image::imageops::crop_imm(image, r.x0, r.y0, r.width, r.height).to_image()
}

fn fill(image: &mut GrayImage, r: Rect, value: u8) {
    for y in r.y0..r.y1() {
        for x in r.x0..r.x1() {
            image.put_pixel(x, y, Luma([value]));
        }
    }
}

fn paste(image: &mut GrayImage, patch: &GrayImage, x0: u32, y0: u32) {
    for (x, y, p) in patch.enumerate_pixels() {
        image.put_pixel(x0 + x, y0 + y, *p);
    }
}

/// Bilinear resampling with pixel-centre alignment and edge clamping.
pub fn resize_bilinear(src: &GrayImage, width: u32, height: u32) -> GrayImage {
    let (sw, sh) = src.dimensions();
    let sx = f64::from(sw) / f64::from(width);
    let sy = f64::from(sh) / f64::from(height);
    GrayImage::from_fn(width, height, |x, y| {
        let fx = ((f64::from(x) + 0.5) * sx - 0.5).clamp(0.0, f64::from(sw - 1));
        let fy = ((f64::from(y) + 0.5) * sy - 0.5).clamp(0.0, f64::from(sh - 1));
        let (x0, y0) = (fx.floor() as u32, fy.floor() as u32);
        let (x1, y1) = ((x0 + 1).min(sw - 1), (y0 + 1).min(sh - 1));
        let (tx, ty) = (fx - f64::from(x0), fy - f64::from(y0));
        let at = |x: u32, y: u32| f64::from(src.get_pixel(x, y)[0]);
        let top = at(x0, y0) * (1.0 - tx) + at(x1, y0) * tx;
        let bottom = at(x0, y1) * (1.0 - tx) + at(x1, y1) * tx;
        Luma([(top * (1.0 - ty) + bottom * ty).round().clamp(0.0, 255.0) as u8])
    })
}

fn draw_alteration(
    rng: &mut ChaCha8Rng,
    spec: &ManipulationSpec,
    r: Rect,
) -> Option<(Rect, ManipulationParams)> {
    let [lo, hi] = spec.magnitude_range;
    match spec.kind {
        ManipulationKind::Shift => {
            let direction = match spec.direction_policy {
                DirectionPolicy::Axis4 => [
                    ShiftDirection::Up,
                    ShiftDirection::Down,
                    ShiftDirection::Left,
                    ShiftDirection::Right,
                ][rng.random_range(0..4)],
                DirectionPolicy::VerticalOnly => {
                    [ShiftDirection::Up, ShiftDirection::Down][rng.random_range(0..2)]
                }
            };
            let magnitude = rng.random_range(lo as u32..=hi as u32);
            let (dx, dy) = direction.offset(magnitude as i32);
            shifted_box(r, direction, magnitude).map(|b| (b, ManipulationParams::Offset { dx, dy }))
        }
        ManipulationKind::Scale => {
            for _ in 0..SCALE_REDRAWS {
                let u = if lo == hi { lo } else { rng.random_range(lo..=hi) };
                let enlarge = match spec.scale_policy {
                    ScalePolicy::Enlarge => true,
                    ScalePolicy::Shrink => false,
                    ScalePolicy::Both => rng.random_bool(0.5),
                };
                let factor = if enlarge { 1.0 + u } else { 1.0 - u };
                match scaled_box(r, factor) {
                    Some(b) if (b.width, b.height) != (r.width, r.height) => {
                        return Some((b, ManipulationParams::Factor { factor }));
                    }
                    Some(_) => continue,
                    None => return None,
                }
            }
            None
        }
    }
}

/// Alters each box with probability `spec.probability`.
///
/// Randomness comes from a per-page stream derived from `(spec.seed,
/// page_index)`, so pages can be processed in any order. Alterations that
/// would leave the image, overlap an earlier alteration, or (for scaling)
/// fail to change the integer box size are skipped and not recorded.
pub fn manipulate_page(
    image: &GrayImage,
    page_index: usize,
    boxes: &[SourceBox],
    spec: &ManipulationSpec,
) -> Result<(GrayImage, Vec<ManipulationRecord>)> {
    spec.validate()?;
    let (iw, ih) = image.dimensions();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, page_index as u64));
    let mut out = image.clone();
    let mut records: Vec<ManipulationRecord> = Vec::new();
    for (i, b) in boxes.iter().enumerate() {
        let original = b.rect();
        if original.width == 0 || original.height == 0 || !original.fits_within(iw, ih) {
            log::warn!("page {page_index}: source box {i} '{}' is empty or outside the image", b.glyph);
            continue;
        }
        if !rng.random_bool(spec.probability) {
            continue;
        }
        let Some((altered, params)) = draw_alteration(&mut rng, spec, original) else {
            log::debug!("page {page_index}: box {i} '{}' left unaltered", b.glyph);
            continue;
        };
        if !altered.fits_within(iw, ih) {
            log::warn!("page {page_index}: altered box {i} '{}' would leave the image, skipped", b.glyph);
            continue;
        }
        let clashes = records.iter().any(|r| {
            [r.original_box, r.altered_box]
                .iter()
                .any(|p| p.intersects(&original) || p.intersects(&altered))
        });
        if clashes {
            continue;
        }
        let content = crop(&out, original);
        let background = background_value(&out, original);
        fill(&mut out, original, background);
        let patch = match params {
            ManipulationParams::Offset { .. } => content,
            ManipulationParams::Factor { .. } => {
                resize_bilinear(&content, altered.width, altered.height)
            }
        };
        paste(&mut out, &patch, altered.x0, altered.y0);
        records.push(ManipulationRecord {
            page_index,
            original_box: original,
            altered_box: altered,
            kind: spec.kind,
            params,
            glyph: b.glyph,
        });
    }
    Ok((out, records))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn dir_name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

/// Deterministically sends `round(test_fraction · n)` of the pages to the test split.
pub fn assign_splits(page_indices: &[usize], test_fraction: f64, seed: u64) -> BTreeMap<usize, Split> {
    use rand::seq::SliceRandom;
    let mut order: Vec<usize> = page_indices.to_vec();
    order.sort_unstable();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(seed, u64::MAX)));
    let n_test = (test_fraction.clamp(0.0, 1.0) * order.len() as f64).round() as usize;
    order
        .into_iter()
        .enumerate()
        .map(|(i, p)| (p, if i < n_test { Split::Test } else { Split::Train }))
        .collect()
}

pub fn page_file_name(page_index: usize) -> String {
    format!("page{page_index:04}.png")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestPage {
    pub page_index: usize,
    pub split: Split,
    pub file: String,
    pub characters: usize,
    pub manipulations: usize,
}

/// Written to `corpus_dir/manifest.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub tool: String,
    pub tool_version: String,
    pub spec: ManipulationSpec,
    pub seed: u64,
    pub pages: Vec<ManifestPage>,
    pub errors: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CorpusStats {
    pub pages: usize,
    pub characters: usize,
    pub manipulations_by_kind: BTreeMap<String, usize>,
    pub failed_documents: usize,
}

/// Reads `pages.json`: an array of [`SourceDocument`] with image paths relative to the file.
pub fn load_source_documents(manifest: &Path) -> Result<Vec<SourceDocument>> {
    let text = fs::read_to_string(manifest).map_err(|e| Error::from(e).at(manifest))?;
    let mut docs: Vec<SourceDocument> =
        serde_json::from_str(&text).map_err(|e| Error::from(e).at(manifest))?;
    let base = manifest.parent().unwrap_or(Path::new("."));
    for d in &mut docs {
        if d.image.is_relative() {
            d.image = base.join(&d.image);
        }
    }
    Ok(docs)
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::from(e).at(path))
}

/// Builds `out_dir/{train,test}/pageNNNN.png`, per-split `truth.json` and `manifest.json`.
///
/// A document that cannot be read is reported in the manifest and skipped.
pub fn build_corpus(
    documents: &[SourceDocument],
    spec: &ManipulationSpec,
    splits: &BTreeMap<usize, Split>,
    out_dir: &Path,
) -> Result<CorpusStats> {
    use rayon::prelude::*;

    spec.validate()?;
    for split in [Split::Train, Split::Test] {
        fs::create_dir_all(out_dir.join(split.dir_name()))?;
    }
    let results: Vec<(usize, Split, Result<(usize, Vec<ManipulationRecord>)>)> = documents
        .par_iter()
        .map(|doc| {
            let split = splits.get(&doc.page_index).copied().unwrap_or(Split::Train);
            let outcome = (|| {
                let image = image::open(&doc.image)
                    .map_err(|e| Error::from(e).at(&doc.image))?
                    .to_luma8();
                let (altered, records) = manipulate_page(&image, doc.page_index, &doc.boxes, spec)?;
                let path = out_dir
                    .join(split.dir_name())
                    .join(page_file_name(doc.page_index));
                altered.save(&path).map_err(|e| Error::from(e).at(&path))?;
                Ok((doc.boxes.len(), records))
            })();
            (doc.page_index, split, outcome)
        })
        .collect();

    let mut stats = CorpusStats::default();
    let mut truth: BTreeMap<Split, Vec<ManipulationRecord>> = BTreeMap::new();
    let mut pages = Vec::new();
    let mut errors = Vec::new();
    for (page_index, split, outcome) in results {
        match outcome {
            Ok((characters, records)) => {
                stats.pages += 1;
                stats.characters += characters;
                for r in &records {
                    let key = serde_json::to_value(r.kind)?.as_str().unwrap_or_default().to_owned();
                    *stats.manipulations_by_kind.entry(key).or_default() += 1;
                }
                pages.push(ManifestPage {
                    page_index,
                    split,
                    file: format!("{}/{}", split.dir_name(), page_file_name(page_index)),
                    characters,
                    manipulations: records.len(),
                });
                truth.entry(split).or_default().extend(records);
            }
            Err(e) => {
                log::warn!("page {page_index}: {e}");
                stats.failed_documents += 1;
                errors.push(format!("page {page_index}: {e}"));
            }
        }
    }
    pages.sort_by_key(|p| p.page_index);
    for split in [Split::Train, Split::Test] {
        let mut records = truth.remove(&split).unwrap_or_default();
        records.sort_by_key(|r| r.page_index);
        write_json(&out_dir.join(split.dir_name()).join("truth.json"), &records)?;
    }
    let manifest = CorpusManifest {
        tool: env!("CARGO_PKG_NAME").to_owned(),
        tool_version: env!("CARGO_PKG_VERSION").to_owned(),
        spec: spec.clone(),
        seed: spec.seed,
        pages,
        errors,
    };
    write_json(&out_dir.join("manifest.json"), &manifest)?;
    Ok(stats)
}

pub fn read_truth(path: &Path) -> Result<Vec<ManipulationRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::from(e).at(path))?;
    serde_json::from_str(&text).map_err(|e| Error::from(e).at(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn page_with_glyphs() -> (GrayImage, Vec<SourceBox>) {
        let mut img = GrayImage::from_pixel(200, 60, Luma([250]));
        let mut boxes = Vec::new();
        for i in 0..8u32 {
            let r = Rect::new(10 + i * 22, 20, 12, 18);
            fill(&mut img, Rect::new(r.x0 + 2, r.y0 + 2, 8, 14), 20);
            boxes.push(SourceBox {
                glyph: 'A',
                x0: r.x0,
                y0: r.y0,
                width: r.width,
                height: r.height,
            });
        }
        (img, boxes)
    }

    #[test]
    fn upward_shift_decreases_y0() {
        let r = Rect::new(100, 50, 10, 20);
        assert_eq!(shifted_box(r, ShiftDirection::Up, 3), Some(Rect::new(100, 47, 10, 20)));
        assert_eq!(shifted_box(r, ShiftDirection::Left, 3), Some(Rect::new(97, 50, 10, 20)));
        assert_eq!(shifted_box(Rect::new(1, 1, 2, 2), ShiftDirection::Up, 3), None);
    }

    #[test]
    fn scaling_is_centre_anchored() {
        assert_eq!(scaled_box(Rect::new(100, 50, 10, 20), 1.2), Some(Rect::new(99, 48, 12, 24)));
        assert_eq!(scaled_box(Rect::new(100, 50, 10, 20), 0.8), Some(Rect::new(101, 52, 8, 16)));
    }

    #[test]
    fn zero_probability_changes_nothing() {
        let (img, boxes) = page_with_glyphs();
        let spec = ManipulationSpec::shift(1, 5, 3).with_probability(0.0);
        let (out, records) = manipulate_page(&img, 0, &boxes, &spec).unwrap();
        assert_eq!(out, img);
        assert!(records.is_empty());
    }

    #[test]
    fn certain_shift_moves_pixels_and_records() {
        let (img, boxes) = page_with_glyphs();
        let mut spec = ManipulationSpec::shift(2, 2, 11).with_probability(1.0);
        spec.direction_policy = DirectionPolicy::VerticalOnly;
        let (out, records) = manipulate_page(&img, 0, &boxes, &spec).unwrap();
        assert_eq!(records.len(), boxes.len());
        for r in &records {
            let ManipulationParams::Offset { dx, dy } = r.params else { panic!() };
            assert_eq!(dx, 0);
            assert_eq!(dy.abs(), 2);
            let moved = crop(&out, r.altered_box);
            let orig = crop(&img, r.original_box);
            assert_eq!(moved, orig);
        }
    }

    #[test]
    fn background_fill_uses_border_mode() {
        let mut img = GrayImage::from_pixel(10, 10, Luma([200]));
        img.put_pixel(2, 2, Luma([0]));
        assert_eq!(background_value(&img, Rect::new(3, 3, 2, 2)), 200);
        assert_eq!(background_value(&img, Rect::new(0, 0, 10, 10)), 255);
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(ManipulationSpec::shift(1, 5, 0).with_probability(1.5).validate().is_err());
        assert!(ManipulationSpec::shift(0, 5, 0).validate().is_err());
        assert!(ManipulationSpec::scale(0.2, 0.1, 0).validate().is_err());
        assert!(ManipulationSpec::scale(0.07, 0.14, 0).validate().is_ok());
    }

    #[test]
    fn splits_are_deterministic() {
        let pages: Vec<usize> = (0..10).collect();
        let a = assign_splits(&pages, 0.2, 5);
        assert_eq!(a, assign_splits(&pages, 0.2, 5));
        assert_eq!(a.values().filter(|s| **s == Split::Test).count(), 2);
    }
}
