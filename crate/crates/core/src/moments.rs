//! Glyph moments: central moments, normalized moments, the seven Hu
//! invariants and the principal inertia axis of a binarized character crop.
//!
//! Pixels sit at integer centres `(x, y)`, `x ∈ 0..width`, `y ∈ 0..height`,
//! with y growing downward. Central moments are accumulated exactly in
//! integer arithmetic as `Σ (m00·x − m10)^p (m00·y − m01)^q` and scaled by
//! `m00^(p+q)` once at the end, so each μ_pq is the correctly rounded value
//! of the exact discrete sum and is bitwise invariant under translation.

use std::f64::consts::{FRAC_PI_2, PI};

use image::GrayImage;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major binary grid, `1` = ink.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryPatch {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl BinaryPatch {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyCrop);
        }
        if pixels.len() != width * height || pixels.iter().any(|&p| p > 1) {
            return Err(Error::Config(format!(
                "binary patch needs {} pixels in {{0,1}}",
                width * height
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// Builds a patch from rows of `'#'` (ink) and any other character.
    pub fn from_ascii(rows: &[&str]) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.chars().count());
        let pixels = rows
            .iter()
            .flat_map(|r| r.chars().map(|c| u8::from(c == '#')))
            .collect();
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.pixels[y * self.width + x] == 1
    }

    pub fn foreground_count(&self) -> usize {
        self.pixels.iter().filter(|&&p| p == 1).count()
    }
}

/// Otsu threshold over a 256-bin histogram. Values `<= t` form the dark class.
///
/// Returns `None` for constant input.
pub fn otsu_threshold(histogram: &[u64; 256]) -> Option<u8> {
    let total: u64 = histogram.iter().sum();
    let occupied = histogram.iter().filter(|&&c| c > 0).count();
    if total == 0 || occupied < 2 {
        return None;
    }
    let total_f = total as f64;
    let sum_all: f64 = histogram
        .iter()
        .enumerate()
        .map(|(v, &c)| v as f64 * c as f64)
        .sum();
    let mut weight_dark = 0.0;
    let mut sum_dark = 0.0;
    let mut best = (f64::NEG_INFINITY, 0u8);
    for (t, &count) in histogram.iter().enumerate().take(255) {
        weight_dark += count as f64;
        sum_dark += t as f64 * count as f64;
        let weight_light = total_f - weight_dark;
        if weight_dark == 0.0 {
            continue;
        }
        if weight_light == 0.0 {
            break;
        }
        let mean_dark = sum_dark / weight_dark;
        let mean_light = (sum_all - sum_dark) / weight_light;
        let between = weight_dark * weight_light * (mean_dark - mean_light).powi(2);
        if between > best.0 {
            best = (between, t as u8);
        }
    }
    Some(best.1)
}

/// Otsu binarization; the darker side of the threshold is ink.
///
/// A constant-valued crop has no ink at all.
pub fn binarize(crop: &GrayImage) -> Result<BinaryPatch> {
    let (w, h) = crop.dimensions();
    if w == 0 || h == 0 {
        return Err(Error::EmptyCrop);
    }
    let mut hist = [0u64; 256];
    for p in crop.as_raw() {
        hist[*p as usize] += 1;
    }
    let pixels = match otsu_threshold(&hist) {
        Some(t) => crop.as_raw().iter().map(|&v| u8::from(v <= t)).collect(),
        None => vec![0; (w * h) as usize],
    };
    BinaryPatch::new(w as usize, h as usize, pixels)
}

/// Central moments μ_pq for `p + q <= 3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CentralMoments {
    pub mu00: f64,
    pub mu10: f64,
    pub mu01: f64,
    pub mu20: f64,
    pub mu11: f64,
    pub mu02: f64,
    pub mu30: f64,
    pub mu21: f64,
    pub mu12: f64,
    pub mu03: f64,
    /// Second-order moments describe an isotropic mass (μ20 = μ02, μ11 = 0), decided exactly.
    pub isotropic: bool,
}

impl CentralMoments {
    /// Looks up μ_pq; `None` when `p + q > 3`.
    pub fn get(&self, p: u32, q: u32) -> Option<f64> {
        Some(match (p, q) {
            (0, 0) => self.mu00,
            (1, 0) => self.mu10,
            (0, 1) => self.mu01,
            (2, 0) => self.mu20,
            (1, 1) => self.mu11,
            (0, 2) => self.mu02,
            (3, 0) => self.mu30,
            (2, 1) => self.mu21,
            (1, 2) => self.mu12,
            (0, 3) => self.mu03,
            _ => return None,
        })
    }

    const fn zero() -> Self {
        Self {
            mu00: 0.0,
            mu10: 0.0,
            mu01: 0.0,
            mu20: 0.0,
            mu11: 0.0,
            mu02: 0.0,
            mu30: 0.0,
            mu21: 0.0,
            mu12: 0.0,
            mu03: 0.0,
            isotropic: true,
        }
    }
}

/// Central moments of the ink distribution about its centroid.
pub fn central_moments(patch: &BinaryPatch) -> Result<CentralMoments> {
    let mut m00: i128 = 0;
    let mut m10: i128 = 0;
    let mut m01: i128 = 0;
    for y in 0..patch.height {
        for x in 0..patch.width {
            if patch.get(x, y) {
                m00 += 1;
                m10 += x as i128;
                m01 += y as i128;
            }
        }
    }
    if m00 == 0 {
        return Err(Error::EmptyGlyph);
    }

    // s_pq = m00^(p+q) · μ_pq, exact.
    let mut s = [0i128; 10];
    for y in 0..patch.height {
        for x in 0..patch.width {
            if !patch.get(x, y) {
                continue;
            }
            let dx = m00 * x as i128 - m10;
            let dy = m00 * y as i128 - m01;
            let (dx2, dy2) = (dx * dx, dy * dy);
            s[0] += 1;
            s[1] += dx;
            s[2] += dy;
            s[3] += dx2;
            s[4] += dx * dy;
            s[5] += dy2;
            s[6] += dx2 * dx;
            s[7] += dx2 * dy;
            s[8] += dx * dy2;
            s[9] += dy2 * dy;
        }
    }
    let mass = m00 as f64;
    let scale = |v: i128, order: i32| v as f64 / mass.powi(order);
    Ok(CentralMoments {
        mu00: s[0] as f64,
        mu10: scale(s[1], 1),
        mu01: scale(s[2], 1),
        mu20: scale(s[3], 2),
        mu11: scale(s[4], 2),
        mu02: scale(s[5], 2),
        mu30: scale(s[6], 3),
        mu21: scale(s[7], 3),
        mu12: scale(s[8], 3),
        mu03: scale(s[9], 3),
        isotropic: s[3] == s[5] && s[4] == 0,
    })
}

/// Normalized moments η_pq = μ_pq / μ00^((p+q+2)/2) for `2 <= p + q <= 3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizedMoments {
    pub eta20: f64,
    pub eta11: f64,
    pub eta02: f64,
    pub eta30: f64,
    pub eta21: f64,
    pub eta12: f64,
    pub eta03: f64,
}

pub fn normalized_moments(mu: &CentralMoments) -> Result<NormalizedMoments> {
    if !(mu.mu00 > 0.0) {
        return Err(Error::NonPositiveMass(mu.mu00));
    }
    let second = mu.mu00.powi(2);
    let third = mu.mu00.powf(2.5);
    Ok(NormalizedMoments {
        eta20: mu.mu20 / second,
        eta11: mu.mu11 / second,
        eta02: mu.mu02 / second,
        eta30: mu.mu30 / third,
        eta21: mu.mu21 / third,
        eta12: mu.mu12 / third,
        eta03: mu.mu03 / third,
    })
}

/// The seven Hu invariants φ1..φ7.
pub fn hu_from_normalized(e: &NormalizedMoments) -> [f64; 7] {
    let NormalizedMoments {
        eta20: n20,
        eta11: n11,
        eta02: n02,
        eta30: n30,
        eta21: n21,
        eta12: n12,
        eta03: n03,
    } = *e;
    let a = n30 + n12;
    let b = n21 + n03;
    let c = n30 - 3.0 * n12;
    let d = 3.0 * n21 - n03;
    [
        n20 + n02,
        (n20 - n02).powi(2) + 4.0 * n11 * n11,
        c * c + d * d,
        a * a + b * b,
        c * a * (a * a - 3.0 * b * b) + d * b * (3.0 * a * a - b * b),
        (n20 - n02) * (a * a - b * b) + 4.0 * n11 * a * b,
        d * a * (a * a - 3.0 * b * b) - c * b * (3.0 * a * a - b * b),
    ]
}

pub fn hu_moments(mu: &CentralMoments) -> Result<[f64; 7]> {
    Ok(hu_from_normalized(&normalized_moments(mu)?))
}

/// Orientation of the principal axis of `[[μ20, μ11], [μ11, μ02]]`, in `[-π/2, π/2)`.
///
/// Isotropic second moments have no principal axis; they map to `0` and the
/// second tuple element is `true`.
pub fn inertia_axis(mu: &CentralMoments) -> Result<(f64, bool)> {
    if !(mu.mu00 > 0.0) {
        return Err(Error::NonPositiveMass(mu.mu00));
    }
    if mu.isotropic {
        return Ok((0.0, true));
    }
    let mut angle = 0.5 * (2.0 * mu.mu11).atan2(mu.mu20 - mu.mu02);
    if angle >= FRAC_PI_2 {
        angle -= PI;
    }
    Ok((angle, false))
}

/// Everything the feature extractor needs from one glyph crop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSet {
    pub mu: CentralMoments,
    pub eta: NormalizedMoments,
    pub hu: [f64; 7],
    pub inertia_angle: f64,
    /// The crop held no ink; all values are zero.
    pub empty: bool,
    /// The inertia axis was undefined and set to zero.
    pub axis_degenerate: bool,
}

impl MomentSet {
    pub fn empty() -> Self {
        Self {
            mu: CentralMoments::zero(),
            eta: NormalizedMoments {
                eta20: 0.0,
                eta11: 0.0,
                eta02: 0.0,
                eta30: 0.0,
                eta21: 0.0,
                eta12: 0.0,
                eta03: 0.0,
            },
            hu: [0.0; 7],
            inertia_angle: 0.0,
            empty: true,
            axis_degenerate: true,
        }
    }

    pub fn from_patch(patch: &BinaryPatch) -> Result<Self> {
        let mu = match central_moments(patch) {
            Ok(mu) => mu,
            Err(Error::EmptyGlyph) => return Ok(Self::empty()),
            Err(e) => return Err(e),
        };
        let eta = normalized_moments(&mu)?;
        let (inertia_angle, axis_degenerate) = inertia_axis(&mu)?;
        Ok(Self {
            mu,
            eta,
            hu: hu_from_normalized(&eta),
            inertia_angle,
            empty: false,
            axis_degenerate,
        })
    }
}

/// Binarizes a grayscale crop and computes its moments; ink-free crops give [`MomentSet::empty`].
pub fn glyph_moments(crop: &GrayImage) -> Result<MomentSet> {
    MomentSet::from_patch(&binarize(crop)?)
}
