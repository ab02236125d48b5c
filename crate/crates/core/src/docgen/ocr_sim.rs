//! Character boxes from ink connected components.
//!
//! This stands in for Tesseract when generating test fixtures: boxes are
//! the tight extents of dark pixel groups, and each group takes its label
//! from the best-overlapping clean source box (a perfect recognizer). Box
//! geometry therefore reflects exactly what is on the altered image.

use image::GrayImage;

use crate::geometry::Rect;
use crate::ocr::CharBox;
use crate::synth::SourceBox;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InkOcrConfig {
    /// Pixels strictly darker than this are ink.
    pub ink_threshold: u8,
    /// Components smaller than this are treated as specks.
    pub min_pixels: usize,
    /// Largest vertical gap bridged when joining parts of one glyph (i, j, :, ;).
    pub max_part_gap: u32,
    pub confidence: f64,
}

impl Default for InkOcrConfig {
    fn default() -> Self {
        Self {
            ink_threshold: 128,
            min_pixels: 3,
            max_part_gap: 8,
            confidence: 95.0,
        }
    }
}

fn find(parent: &mut [u32], mut i: u32) -> u32 {
    while parent[i as usize] != i {
        parent[i as usize] = parent[parent[i as usize] as usize];
        i = parent[i as usize];
    }
    i
}

fn union(parent: &mut [u32], a: u32, b: u32) {
    let (ra, rb) = (find(parent, a), find(parent, b));
    if ra != rb {
        parent[ra.max(rb) as usize] = ra.min(rb);
    }
}

#[derive(Debug, Clone, Copy)]
struct Component {
    x0: u32,
    y0: u32,
    x1: u32,
    y1: u32,
    pixels: usize,
}

impl Component {
    fn rect(&self) -> Rect {
        Rect::new(self.x0, self.y0, self.x1 - self.x0, self.y1 - self.y0)
    }

    fn absorb(&mut self, o: &Component) {
        self.x0 = self.x0.min(o.x0);
        self.y0 = self.y0.min(o.y0);
        self.x1 = self.x1.max(o.x1);
        self.y1 = self.y1.max(o.y1);
        self.pixels += o.pixels;
    }

    fn parts_of_one_glyph(&self, o: &Component, max_gap: u32) -> bool {
        let overlap = self.x1.min(o.x1).saturating_sub(self.x0.max(o.x0));
        let narrow = (self.x1 - self.x0).min(o.x1 - o.x0);
        let gap = if self.y1 <= o.y0 {
            o.y0 - self.y1
        } else if o.y1 <= self.y0 {
            self.y0 - o.y1
        } else {
            0
        };
        2 * overlap >= narrow && gap <= max_gap
    }
}

/// 8-connected ink components with bounding boxes, in raster order of first pixel.
fn components(image: &GrayImage, threshold: u8) -> Vec<Component> {
    let (w, h) = image.dimensions();
    let ink: Vec<bool> = image.as_raw().iter().map(|&v| v < threshold).collect();
    let n = (w * h) as usize;
    let mut parent: Vec<u32> = (0..n as u32).collect();
    for y in 0..h {
        for x in 0..w {
            let i = (y * w + x) as usize;
            if !ink[i] {
                continue;
            }
            let mut link = |nx: i64, ny: i64| {
                if nx >= 0 && ny >= 0 && nx < i64::from(w) {
                    let j = (ny as u32 * w + nx as u32) as usize;
                    if ink[j] {
                        union(&mut parent, i as u32, j as u32);
                    }
                }
            };
            let (xi, yi) = (i64::from(x), i64::from(y));
            link(xi - 1, yi);
            link(xi - 1, yi - 1);
            link(xi, yi - 1);
            link(xi + 1, yi - 1);
        }
    }
    let mut slot = vec![u32::MAX; n];
    let mut comps: Vec<Component> = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let i = (y * w + x) as usize;
            if !ink[i] {
                continue;
            }
            let root = find(&mut parent, i as u32) as usize;
            if slot[root] == u32::MAX {
                slot[root] = comps.len() as u32;
                comps.push(Component {
                    x0: x,
                    y0: y,
                    x1: x + 1,
                    y1: y + 1,
                    pixels: 0,
                });
            }
            let c = &mut comps[slot[root] as usize];
            c.x0 = c.x0.min(x);
            c.x1 = c.x1.max(x + 1);
            c.y1 = c.y1.max(y + 1);
            c.pixels += 1;
        }
    }
    comps
}

/// Extracts one [`CharBox`] per ink glyph, labelled from `sources`.
pub fn extract_boxes(
    image: &GrayImage,
    sources: &[SourceBox],
    page_index: usize,
    config: &InkOcrConfig,
) -> Vec<CharBox> {
    let mut comps = components(image, config.ink_threshold);

    // Join stacked parts (dots of i/j, colons) until nothing changes.
    comps.sort_by_key(|c| (c.x0, c.y0));
    let mut merged = true;
    while merged {
        merged = false;
        let mut out: Vec<Component> = Vec::with_capacity(comps.len());
        'next: for c in comps.drain(..) {
            for o in out.iter_mut().rev().take(64) {
                if o.parts_of_one_glyph(&c, config.max_part_gap) {
                    o.absorb(&c);
                    merged = true;
                    continue 'next;
                }
            }
            out.push(c);
        }
        comps = out;
        comps.sort_by_key(|c| (c.x0, c.y0));
    }

    comps
        .iter()
        .filter(|c| c.pixels >= config.min_pixels)
        .map(|c| {
            let r = c.rect();
            let glyph = best_source(&r, sources).map_or('?', |s| s.glyph);
            CharBox {
                page_index,
                glyph,
                x0: r.x0,
                y0: r.y0,
                width: r.width,
                height: r.height,
                confidence: config.confidence,
            }
        })
        .collect()
}

fn best_source<'a>(r: &Rect, sources: &'a [SourceBox]) -> Option<&'a SourceBox> {
    let by_iou = sources
        .iter()
        .map(|s| (s.rect().iou(r), s))
        .filter(|(iou, _)| *iou > 0.0)
        .max_by(|a, b| a.0.total_cmp(&b.0));
    if let Some((_, s)) = by_iou {
        return Some(s);
    }
    let (cx, cy) = r.center();
    sources
        .iter()
        .map(|s| {
            let (sx, sy) = s.rect().center();
            ((sx - cx).hypot(sy - cy), s)
        })
        .filter(|(d, _)| *d < 24.0)
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, s)| s)
}
