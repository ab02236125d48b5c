//! Tesseract TSV ingestion and text-line grouping.
//!
//! Tesseract's TSV output has twelve tab-separated columns:
//! `level page_num block_num par_num line_num word_num left top width height conf text`.
//! Only word-level rows (`level == 5`) carry text. A row whose text is a
//! single character maps to one [`CharBox`]; longer words are split into
//! per-character boxes by uniform horizontal subdivision.

use std::fmt::Write as _;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Rect;

const TSV_COLUMNS: usize = 12;
const TSV_HEADER: &str =
    "level\tpage_num\tblock_num\tpar_num\tline_num\tword_num\tleft\ttop\twidth\theight\tconf\ttext";

/// One OCR character bounding box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharBox {
    pub page_index: usize,
    pub glyph: char,
    pub x0: u32,
    pub y0: u32,
    pub width: u32,
    pub height: u32,
    pub confidence: f64,
}

impl CharBox {
    pub fn rect(&self) -> Rect {
        Rect::new(self.x0, self.y0, self.width, self.height)
    }

    pub fn center(&self) -> (f64, f64) {
        self.rect().center()
    }

    fn sort_key(&self) -> (u32, u32, u32) {
        (self.x0, self.y0, self.glyph as u32)
    }
}

/// Boxes sharing a text line, ordered left to right.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextLine {
    pub page_index: usize,
    pub boxes: Vec<CharBox>,
}

/// A page image together with its grouped OCR boxes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Page {
    pub page_index: usize,
    pub image_path: PathBuf,
    pub image_width: u32,
    pub image_height: u32,
    pub lines: Vec<TextLine>,
}

impl Page {
    /// Validates every box against the image bounds and groups them into lines.
    pub fn new(
        page_index: usize,
        image_path: impl Into<PathBuf>,
        image_width: u32,
        image_height: u32,
        boxes: Vec<CharBox>,
    ) -> Result<Self> {
        for (index, b) in boxes.iter().enumerate() {
            if !b.rect().fits_within(image_width, image_height) {
                return Err(Error::BoxOutOfBounds {
                    index,
                    glyph: b.glyph,
                    x0: b.x0,
                    y0: b.y0,
                    width: b.width,
                    height: b.height,
                    image_width,
                    image_height,
                });
            }
        }
        Ok(Self {
            page_index,
            image_path: image_path.into(),
            image_width,
            image_height,
            lines: group_lines(boxes),
        })
    }

    /// Boxes in reading order: lines top to bottom, boxes left to right.
    ///
    /// The position of a box in this sequence is its box index.
    pub fn boxes(&self) -> impl Iterator<Item = &CharBox> {
        self.lines.iter().flat_map(|l| l.boxes.iter())
    }

    pub fn box_count(&self) -> usize {
        self.lines.iter().map(|l| l.boxes.len()).sum()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

fn tsv_err(line: usize, message: impl Into<String>) -> Error {
    Error::Tsv {
        line,
        message: message.into(),
    }
}

fn parse_int(field: &str, name: &str, line: usize) -> Result<i64> {
    field
        .trim()
        .parse::<i64>()
        .map_err(|_| tsv_err(line, format!("non-numeric {name} '{field}'")))
}

/// Parses Tesseract TSV text into character boxes for one page.
pub fn parse_tsv(tsv_text: &str, page_index: usize) -> Result<Vec<CharBox>> {
    let mut out = Vec::new();
    for (i, raw) in tsv_text.lines().enumerate() {
        let line_no = i + 1;
        let raw = raw.strip_suffix('\r').unwrap_or(raw);
        if raw.trim().is_empty() || raw.starts_with("level") {
            continue;
        }
        let fields: Vec<&str> = if raw.contains('\t') {
            raw.split('\t').collect()
        } else {
            // Space-separated rows; an empty text column simply disappears.
            let mut f: Vec<&str> = raw.split_whitespace().collect();
            if f.len() == TSV_COLUMNS - 1 {
                f.push("");
            }
            f
        };
        if fields.len() != TSV_COLUMNS {
            return Err(tsv_err(
                line_no,
                format!("expected {TSV_COLUMNS} columns, found {}", fields.len()),
            ));
        }
        let level = parse_int(fields[0], "level", line_no)?;
        for (idx, name) in [(1, "page_num"), (2, "block_num"), (3, "par_num"), (4, "line_num"), (5, "word_num")] {
            parse_int(fields[idx], name, line_no)?;
        }
        let left = parse_int(fields[6], "left", line_no)?;
        let top = parse_int(fields[7], "top", line_no)?;
        let width = parse_int(fields[8], "width", line_no)?;
        let height = parse_int(fields[9], "height", line_no)?;
        let conf: f64 = fields[10]
            .trim()
            .parse()
            .map_err(|_| tsv_err(line_no, format!("non-numeric conf '{}'", fields[10])))?;
        if width < 0 || height < 0 {
            return Err(tsv_err(line_no, format!("negative box size {width}x{height}")));
        }
        if left < 0 || top < 0 {
            return Err(tsv_err(line_no, format!("negative box origin ({left},{top})")));
        }
        let text = fields[11].trim();
        if level != 5 || conf < 0.0 || text.is_empty() {
            continue;
        }
        if width == 0 || height == 0 {
            log::warn!("tsv line {line_no}: zero-size box for '{text}' skipped");
            continue;
        }
        let glyphs: Vec<char> = text.chars().collect();
        let k = glyphs.len() as i64;
        if width < k {
            log::warn!("tsv line {line_no}: word '{text}' narrower than its character count, skipped");
            continue;
        }
        let confidence = conf.min(100.0);
        for (j, &glyph) in glyphs.iter().enumerate() {
            let j = j as i64;
            let start = left + j * width / k;
            let end = left + (j + 1) * width / k;
            out.push(CharBox {
                page_index,
                glyph,
                x0: start as u32,
                y0: top as u32,
                width: (end - start) as u32,
                height: height as u32,
                confidence,
            });
        }
    }
    Ok(out)
}

/// Writes boxes as Tesseract-style TSV, one single-character word row per box.
pub fn write_tsv(boxes: &[CharBox]) -> String {
    let mut s = String::with_capacity(64 * (boxes.len() + 1));
    s.push_str(TSV_HEADER);
    s.push('\n');
    for (i, b) in boxes.iter().enumerate() {
        let _ = writeln!(
            s,
            "5\t{}\t1\t1\t1\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            b.page_index + 1,
            i + 1,
            b.x0,
            b.y0,
            b.width,
            b.height,
            b.confidence,
            b.glyph
        );
    }
    s
}

/// Same-line rule: `|y0_a - y0_b| < 0.85 * max(height_a, height_b)`.
///
/// Evaluated in integers (`100·|Δy| < 85·max h`) so the strict bound is exact.
pub fn same_line(a: &CharBox, b: &CharBox) -> bool {
    let dy = (i64::from(a.y0) - i64::from(b.y0)).abs();
    let h = i64::from(a.height.max(b.height));
    100 * dy < 85 * h
}

/// Greedy left-to-right grouping of one page's boxes into text lines.
///
/// Boxes are visited in `(x0, y0, glyph)` order. Each joins the open line
/// whose most recently added box passes [`same_line`] (closest top edge wins,
/// then the earliest line); otherwise it starts a new line. Because only the
/// last member is compared, a slowly drifting chain of boxes stays in one
/// line even when its ends would fail the pairwise test.
pub fn group_lines(mut boxes: Vec<CharBox>) -> Vec<TextLine> {
    boxes.sort_by_key(CharBox::sort_key);
    let mut lines: Vec<Vec<CharBox>> = Vec::new();
    for b in boxes {
        let target = lines
            .iter()
            .enumerate()
            .filter_map(|(i, line)| {
                let last = line.last().expect("lines are never empty");
                same_line(last, &b).then(|| ((i64::from(last.y0) - i64::from(b.y0)).abs(), i))
            })
            .min();
        match target {
            Some((_, i)) => lines[i].push(b),
            None => lines.push(vec![b]),
        }
    }
    lines.sort_by_key(|l| (l[0].y0, l[0].x0));
    lines
        .into_iter()
        .map(|boxes| TextLine {
            page_index: boxes[0].page_index,
            boxes,
        })
        .collect()
}
