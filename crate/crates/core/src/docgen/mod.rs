//! Fixture generation: business-style document pages rendered from an
//! embedded bitmap font, and an ink-component box extractor that writes
//! Tesseract-format TSV for them.
//!
//! Rendering uses exact area coverage at fractional glyph positions, so the
//! same character differs slightly in anti-aliasing from one occurrence to
//! the next, much like a rasterized PDF.

pub mod font;
pub mod ocr_sim;

use image::{GrayImage, Luma};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::ocr::Page;
use crate::seed::derive_seed;
use crate::synth::{manipulate_page, ManipulationRecord, ManipulationSpec, SourceBox};
use font::{GLYPH_COLS, GLYPH_ROWS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderStyle {
    /// Pixels per font cell.
    pub scale: f64,
    /// Horizontal advance per character, in font cells.
    pub advance: f64,
    /// Baseline-to-baseline distance, in font cells.
    pub line_pitch: f64,
    pub margin: f64,
    pub paper: u8,
    pub ink: u8,
    /// Uniform noise amplitude added to every pixel.
    pub noise: u8,
}

impl Default for RenderStyle {
    fn default() -> Self {
        Self {
            scale: 3.2,
            advance: 6.0,
            line_pitch: 13.0,
            margin: 48.0,
            paper: 248,
            ink: 28,
            noise: 4,
        }
    }
}

/// A rendered clean page and the exact ink extent of every glyph on it.
#[derive(Debug, Clone)]
pub struct RenderedPage {
    pub image: GrayImage,
    pub boxes: Vec<SourceBox>,
}

/// Renders text lines top to bottom; spaces advance without producing boxes.
///
/// Characters the font lacks are rendered as spaces.
pub fn render_lines(lines: &[String], width: u32, height: u32, style: &RenderStyle, seed: u64) -> RenderedPage {
    let mut coverage = vec![0f32; (width * height) as usize];
    let mut boxes = Vec::new();
    let s = style.scale;
    for (li, line) in lines.iter().enumerate() {
        let top = style.margin + li as f64 * style.line_pitch * s;
        if top + GLYPH_ROWS as f64 * s >= f64::from(height) {
            break;
        }
        for (ci, c) in line.chars().enumerate() {
            let left = style.margin + ci as f64 * style.advance * s;
            if left + GLYPH_COLS as f64 * s >= f64::from(width) {
                break;
            }
            let cells = font::ink_cells(c);
            if cells.is_empty() {
                continue;
            }
            let (mut x_lo, mut y_lo, mut x_hi, mut y_hi) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
            for &(col, row) in &cells {
                let cx0 = left + col as f64 * s;
                let cy0 = top + row as f64 * s;
                let (cx1, cy1) = (cx0 + s, cy0 + s);
                x_lo = x_lo.min(cx0);
                y_lo = y_lo.min(cy0);
                x_hi = x_hi.max(cx1);
                y_hi = y_hi.max(cy1);
                for py in cy0.floor() as u32..cy1.ceil() as u32 {
                    let oy = (cy1.min(f64::from(py + 1)) - cy0.max(f64::from(py))).max(0.0);
                    for px in cx0.floor() as u32..cx1.ceil() as u32 {
                        let ox = (cx1.min(f64::from(px + 1)) - cx0.max(f64::from(px))).max(0.0);
                        coverage[(py * width + px) as usize] += (ox * oy) as f32;
                    }
                }
            }
            let x0 = x_lo.floor() as u32;
            let y0 = y_lo.floor() as u32;
            boxes.push(SourceBox {
                glyph: c,
                x0,
                y0,
                width: x_hi.ceil() as u32 - x0,
                height: y_hi.ceil() as u32 - y0,
            });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let span = f64::from(style.paper) - f64::from(style.ink);
    let noise = i32::from(style.noise);
    let image = GrayImage::from_fn(width, height, |x, y| {
        let c = f64::from(coverage[(y * width + x) as usize].min(1.0));
        let base = f64::from(style.paper) - c * span;
        let jitter = if noise > 0 { rng.random_range(-noise..=noise) } else { 0 };
        Luma([(base.round() as i32 + jitter).clamp(0, 255) as u8])
    });
    RenderedPage { image, boxes }
}

const BANKS: &[&str] = &[
    "FIRST NATIONAL BANK",
    "RIVERSIDE CREDIT UNION",
    "SUMMIT SAVINGS & LOAN",
    "HARBOR TRUST COMPANY",
    "NORTHGATE FINANCIAL",
];
const FIRST: &[&str] = &["John", "Maria", "Wei", "Aisha", "Carlos", "Emma", "Liam", "Priya", "Olga", "Kwame"];
const LAST: &[&str] = &["Smith", "Garcia", "Chen", "Okafor", "Novak", "Jensen", "Patel", "Rossi", "Kim", "Adams"];
const STREETS: &[&str] = &["Main Street", "Oak Avenue", "Harbor Road", "Elm Court", "Pine Lane", "Maple Drive"];
const CITIES: &[&str] = &["Springfield", "Riverton", "Lakeside", "Fairview", "Georgetown", "Milford"];
const MERCHANTS: &[&str] = &[
    "GROCERY MART",
    "Coffee House",
    "CITY UTILITIES",
    "Online Transfer",
    "PAYROLL DEPOSIT",
    "Gas Station",
    "Pharmacy Plus",
    "RENT PAYMENT",
    "Book Store",
    "ATM Withdrawal",
    "Insurance Premium",
    "Phone Bill",
    "Hardware Depot",
    "Restaurant",
    "Interest Credit",
];

fn money(rng: &mut ChaCha8Rng, max_cents: u64) -> String {
    let cents = rng.random_range(100..max_cents);
    let whole = cents / 100;
    let digits = whole.to_string();
    let mut grouped = String::new();
    for (i, ch) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i) % 3 == 0 {
            grouped.push(',');
        }
        grouped.push(ch);
    }
    format!("{grouped}.{:02}", cents % 100)
}

fn date(rng: &mut ChaCha8Rng, month: u32, year: u32) -> String {
    format!("{month:02}/{:02}/{year}", rng.random_range(1..=28))
}

/// Text of a bank-statement style page.
pub fn statement_lines(rng: &mut ChaCha8Rng, page_number: usize) -> Vec<String> {
    let bank = *BANKS.choose(rng).unwrap();
    let name = format!("{} {}", FIRST.choose(rng).unwrap(), LAST.choose(rng).unwrap());
    let month = rng.random_range(1..=12);
    let year = rng.random_range(2015..=2023);
    let mut lines = vec![
        bank.to_owned(),
        format!("Statement of Account  Page {} of {}", page_number % 4 + 1, 4),
        format!("Customer: {name}"),
        format!(
            "Address: {} {}, {}",
            rng.random_range(10..9999),
            STREETS.choose(rng).unwrap(),
            CITIES.choose(rng).unwrap()
        ),
        format!(
            "Account Number: {:04}-{:04}-{:04}",
            rng.random_range(0..10000),
            rng.random_range(0..10000),
            rng.random_range(0..10000)
        ),
        format!("Statement Period: {month:02}/01/{year} - {month:02}/28/{year}"),
        format!("Opening Balance: ${}", money(rng, 2_000_000)),
        String::new(),
        "Date        Description            Amount     Balance".to_owned(),
    ];
    let rows = rng.random_range(17..=20);
    for _ in 0..rows {
        let merchant = MERCHANTS.choose(rng).unwrap();
        let reference = rng.random_range(100..9999);
        let sign = if rng.random_bool(0.7) { "-" } else { "+" };
        let description = format!("{merchant} #{reference}");
        lines.push(format!(
            "{}  {:<21.21} {:>10} {:>11}",
            date(rng, month, year),
            description,
            format!("{sign}{}", money(rng, 250_000)),
            money(rng, 2_000_000)
        ));
    }
    lines.push(String::new());
    lines.push(format!("Total Deposits: ${}   Total Withdrawals: ${}", money(rng, 900_000), money(rng, 900_000)));
    lines.push(format!("Closing Balance: ${}", money(rng, 2_000_000)));
    lines.push("Questions? Call (800) 555-0199 or visit our branch.".to_owned());
    lines
}

pub const PAGE_WIDTH: u32 = 1200;
pub const PAGE_HEIGHT: u32 = 1500;

/// Renders statement page `page_index` of a fixture set.
pub fn statement_page(seed: u64, page_index: usize, style: &RenderStyle) -> RenderedPage {
    let stream = derive_seed(seed, page_index as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(stream);
    let lines = statement_lines(&mut rng, page_index);
    render_lines(&lines, PAGE_WIDTH, PAGE_HEIGHT, style, derive_seed(stream, 1))
}

/// A manipulated page with emulated OCR boxes and its ground truth.
#[derive(Debug, Clone)]
pub struct ForgedPage {
    pub page: Page,
    pub image: GrayImage,
    pub truth: Vec<ManipulationRecord>,
}

/// Renders statement page `page_index`, applies `spec` and reads the result
/// back with the ink-component extractor.
pub fn forged_statement_page(
    render_seed: u64,
    page_index: usize,
    style: &RenderStyle,
    spec: &ManipulationSpec,
    ocr: &ocr_sim::InkOcrConfig,
) -> Result<ForgedPage> {
    let clean = statement_page(render_seed, page_index, style);
    let (image, truth) = manipulate_page(&clean.image, page_index, &clean.boxes, spec)?;
    let boxes = ocr_sim::extract_boxes(&image, &clean.boxes, page_index, ocr);
    let page = Page::new(page_index, page_file_name_png(page_index), image.width(), image.height(), boxes)?;
    Ok(ForgedPage { page, image, truth })
}

fn page_file_name_png(page_index: usize) -> String {
    crate::synth::page_file_name(page_index)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rendering_is_deterministic_and_boxes_cover_ink() {
        let style = RenderStyle::default();
        let a = statement_page(3, 0, &style);
        let b = statement_page(3, 0, &style);
        assert_eq!(a.image, b.image);
        assert_eq!(a.boxes, b.boxes);
        assert!(a.boxes.len() > 700, "only {} glyphs", a.boxes.len());
        for bx in a.boxes.iter().take(50) {
            let r = bx.rect();
            assert!(r.fits_within(PAGE_WIDTH, PAGE_HEIGHT));
            let darkest = (r.y0..r.y1())
                .flat_map(|y| (r.x0..r.x1()).map(move |x| (x, y)))
                .map(|(x, y)| a.image.get_pixel(x, y)[0])
                .min()
                .unwrap();
            assert!(darkest < 100, "glyph {:?} has no ink", bx.glyph);
        }
    }

    #[test]
    fn monetary_formatting() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let m = money(&mut rng, 10_000_000);
            let (whole, cents) = m.split_once('.').unwrap();
            assert_eq!(cents.len(), 2);
            assert!(whole.split(',').skip(1).all(|g| g.len() == 3));
        }
    }
}
