//! Overlay images marking predicted and true manipulations.
//!
//! Predicted boxes get a solid two-pixel ring just outside the box; true
//! boxes a dashed ring one pixel further out, so a correct detection shows
//! both around the same character. Pixels inside boxes are never touched.
//! A legend strip is appended below the page.

use image::{GrayImage, Rgb, RgbImage};

use crate::docgen::font::{self, GLYPH_COLS, GLYPH_ROWS};
use crate::geometry::Rect;

pub const PREDICTED_COLOR: Rgb<u8> = Rgb([220, 20, 20]);
pub const TRUTH_COLOR: Rgb<u8> = Rgb([0, 160, 60]);
pub const LEGEND_HEIGHT: u32 = 36;
const DASH: i64 = 3;

/// Ring `offset` pixels outside `r`, as integer coordinates in perimeter order.
fn ring(r: &Rect, offset: i64) -> Vec<(i64, i64)> {
    let x0 = i64::from(r.x0) - offset;
    let y0 = i64::from(r.y0) - offset;
    let x1 = i64::from(r.x1()) - 1 + offset;
    let y1 = i64::from(r.y1()) - 1 + offset;
    let mut pts = Vec::new();
    pts.extend((x0..=x1).map(|x| (x, y0)));
    pts.extend((y0 + 1..=y1).map(|y| (x1, y)));
    pts.extend((x0..x1).rev().map(|x| (x, y1)));
    pts.extend((y0 + 1..y1).rev().map(|y| (x0, y)));
    pts
}

fn put(img: &mut RgbImage, (x, y): (i64, i64), limit_h: u32, c: Rgb<u8>) {
    if x >= 0 && y >= 0 && (x as u32) < img.width() && (y as u32) < limit_h {
        img.put_pixel(x as u32, y as u32, c);
    }
}

pub fn draw_predicted(img: &mut RgbImage, r: &Rect, page_height: u32) {
    for offset in 1..=2 {
        for p in ring(r, offset) {
            put(img, p, page_height, PREDICTED_COLOR);
        }
    }
}

pub fn draw_truth(img: &mut RgbImage, r: &Rect, page_height: u32) {
    for (k, p) in ring(r, 3).into_iter().enumerate() {
        if (k as i64 / DASH) % 2 == 0 {
            put(img, p, page_height, TRUTH_COLOR);
        }
    }
}

fn draw_text(img: &mut RgbImage, text: &str, x: u32, y: u32, scale: u32, c: Rgb<u8>) {
    let advance = (GLYPH_COLS as u32 + 1) * scale;
    for (i, ch) in text.chars().enumerate() {
        for (col, row) in font::ink_cells(ch) {
            for dy in 0..scale {
                for dx in 0..scale {
                    let px = x + i as u32 * advance + col as u32 * scale + dx;
                    let py = y + row as u32 * scale + dy;
                    if px < img.width() && py < img.height() {
                        img.put_pixel(px, py, c);
                    }
                }
            }
        }
    }
}

fn draw_legend(img: &mut RgbImage, page_height: u32) {
    let black = Rgb([0, 0, 0]);
    let top = page_height + (LEGEND_HEIGHT - GLYPH_ROWS as u32 * 2) / 2;
    let mut x = 8;
    let sample = Rect::new(x + 3, top + 3, 12, 12);
    draw_predicted(img, &sample, img.height());
    x += 26;
    draw_text(img, "predicted", x, top, 2, black);
    x += 9 * 12 + 24;
    let sample = Rect::new(x + 3, top + 3, 12, 12);
    draw_truth(img, &sample, img.height());
    x += 26;
    draw_text(img, "ground truth", x, top, 2, black);
}

/// The page in colour with outlines and a legend strip of [`LEGEND_HEIGHT`] rows.
pub fn render_overlay(page: &GrayImage, predicted: &[Rect], truth: &[Rect]) -> RgbImage {
    let (w, h) = page.dimensions();
    let mut img = RgbImage::from_fn(w, h + LEGEND_HEIGHT, |x, y| {
        if y < h {
            let v = page.get_pixel(x, y)[0];
            Rgb([v, v, v])
        } else {
            Rgb([255, 255, 255])
        }
    });
    for r in truth {
        draw_truth(&mut img, r, h);
    }
    for r in predicted {
        draw_predicted(&mut img, r, h);
    }
    draw_legend(&mut img, h);
    img
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_overlay_keeps_page_pixels() {
        let page = GrayImage::from_fn(60, 40, |x, y| image::Luma([(x * 3 + y) as u8]));
        let out = render_overlay(&page, &[], &[]);
        assert_eq!(out.height(), 40 + LEGEND_HEIGHT);
        for (x, y, p) in page.enumerate_pixels() {
            assert_eq!(out.get_pixel(x, y).0, [p[0]; 3]);
        }
    }

    #[test]
    fn outlines_surround_without_covering_the_box() {
        let page = GrayImage::from_pixel(60, 40, image::Luma([250]));
        let r = Rect::new(20, 10, 8, 12);
        let out = render_overlay(&page, &[r], &[r]);
        for y in r.y0..r.y1() {
            for x in r.x0..r.x1() {
                assert_eq!(out.get_pixel(x, y).0, [250; 3]);
            }
        }
        assert_eq!(*out.get_pixel(19, 9), PREDICTED_COLOR);
        assert_eq!(*out.get_pixel(18, 8), PREDICTED_COLOR);
        assert_eq!(*out.get_pixel(17, 7), TRUTH_COLOR);
    }

    #[test]
    fn ring_is_closed() {
        let r = Rect::new(5, 5, 3, 2);
        let pts = ring(&r, 1);
        assert_eq!(pts.len(), 2 * (5 + 4) - 4);
        assert!(pts.contains(&(4, 4)) && pts.contains(&(8, 7)));
    }
}
