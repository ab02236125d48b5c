//! Sub-graph feature vectors.
//!
//! Every character is the centre of a sub-graph of `2n + 1` nodes: itself
//! and up to `n` same-line neighbours on each side. Each node contributes
//! twelve values in this order:
//!
//! | offset | field           | meaning                                         |
//! |--------|-----------------|-------------------------------------------------|
//! | 0      | `height`        | OCR box height, px                              |
//! | 1      | `width`         | OCR box width, px                               |
//! | 2      | `dy`            | node `y0` minus centre `y0`, px (signed)        |
//! | 3      | `distance`      | centre-to-centre Euclidean distance, px         |
//! | 4..=10 | `hu1`..`hu7`    | Hu invariants of the binarized box crop         |
//! | 11     | `inertia_angle` | principal axis orientation, radians             |
//!
//! Nodes are laid out left-most neighbour first, then the centre, then the
//! right neighbours nearest first, so the centre occupies offsets
//! `12n..12n+12`. Missing neighbours at line edges are imputed from the
//! same rank on the other side, or from the centre itself.

use image::GrayImage;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments::{glyph_moments, MomentSet};
use crate::ocr::{CharBox, Page, TextLine};
use crate::synth::ManipulationRecord;

pub const FIELDS_PER_NODE: usize = 12;
pub const NODE_FIELDS: [&str; FIELDS_PER_NODE] = [
    "height",
    "width",
    "dy",
    "distance",
    "hu1",
    "hu2",
    "hu3",
    "hu4",
    "hu5",
    "hu6",
    "hu7",
    "inertia_angle",
];

/// Field offsets inside one node's block.
pub mod field {
    pub const HEIGHT: usize = 0;
    pub const WIDTH: usize = 1;
    pub const DY: usize = 2;
    pub const DISTANCE: usize = 3;
    pub const HU: usize = 4;
    pub const INERTIA_ANGLE: usize = 11;
}

/// Number of values in a sub-graph vector with `n` neighbours per side.
pub const fn vector_len(n: usize) -> usize {
    FIELDS_PER_NODE * (2 * n + 1)
}

/// Offset of the central node's block.
pub const fn center_offset(n: usize) -> usize {
    FIELDS_PER_NODE * n
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeFeatures {
    pub height: f64,
    pub width: f64,
    pub dy: f64,
    pub distance: f64,
    pub hu: [f64; 7],
    pub inertia_angle: f64,
    /// Copied in for a missing neighbour; not part of the numeric vector.
    pub imputed: bool,
}

impl NodeFeatures {
    pub fn values(&self) -> [f64; FIELDS_PER_NODE] {
        let mut v = [0.0; FIELDS_PER_NODE];
        v[field::HEIGHT] = self.height;
        v[field::WIDTH] = self.width;
        v[field::DY] = self.dy;
        v[field::DISTANCE] = self.distance;
        v[field::HU..field::HU + 7].copy_from_slice(&self.hu);
        v[field::INERTIA_ANGLE] = self.inertia_angle;
        v
    }

    /// Describes `node` relative to `center`.
    pub fn relative(node: &CharBox, moments: &MomentSet, center: &CharBox) -> Self {
        Self {
            height: f64::from(node.height),
            width: f64::from(node.width),
            dy: f64::from(node.y0) - f64::from(center.y0),
            distance: distance(node, center),
            hu: moments.hu,
            inertia_angle: moments.inertia_angle,
            imputed: false,
        }
    }

    fn imputed_copy(&self) -> Self {
        Self {
            imputed: true,
            ..*self
        }
    }

    fn as_center_copy(&self) -> Self {
        Self {
            dy: 0.0,
            distance: 0.0,
            imputed: true,
            ..*self
        }
    }
}

/// Euclidean distance between box centres.
pub fn distance(a: &CharBox, b: &CharBox) -> f64 {
    let (ax, ay) = a.center();
    let (bx, by) = b.center();
    (ax - bx).hypot(ay - by)
}

/// Up to `n` neighbours on each side of `center_index`, nearest first.
pub fn neighbors(line: &TextLine, center_index: usize, n: usize) -> (Vec<&CharBox>, Vec<&CharBox>) {
    let left = line.boxes[..center_index].iter().rev().take(n).collect();
    let right = line.boxes[center_index + 1..].iter().take(n).collect();
    (left, right)
}

/// Pads both sides to `n` nodes.
///
/// A missing rank copies the same rank from the other side; when both sides
/// lack it, the central node is copied with `dy = distance = 0`. All copies
/// are marked imputed.
pub fn impute(
    left: &[NodeFeatures],
    right: &[NodeFeatures],
    center: &NodeFeatures,
    n: usize,
) -> (Vec<NodeFeatures>, Vec<NodeFeatures>) {
    let fill = |own: &[NodeFeatures], other: &[NodeFeatures]| -> Vec<NodeFeatures> {
        (0..n)
            .map(|rank| match (own.get(rank), other.get(rank)) {
                (Some(node), _) => *node,
                (None, Some(mirror)) => mirror.imputed_copy(),
                (None, None) => center.as_center_copy(),
            })
            .collect()
    };
    (fill(left, right), fill(right, left))
}

/// One character's sub-graph description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubGraphVector {
    pub central_glyph: char,
    pub n: usize,
    pub values: Vec<f64>,
    pub label: u8,
    pub page_index: usize,
    pub box_index: usize,
}

/// Per-page label lookup indexed by box index (reading order).
pub type Labels = Vec<u8>;

/// Label 1 when the OCR box overlaps an altered box with IoU >= 0.5, or
/// contains the altered box's centre.
pub fn label_boxes<'a>(
    ocr_boxes: impl IntoIterator<Item = &'a CharBox>,
    truth: &[ManipulationRecord],
) -> Labels {
    ocr_boxes
        .into_iter()
        .map(|b| {
            let r = b.rect();
            let hit = truth
                .iter()
                .filter(|t| t.page_index == b.page_index)
                .any(|t| {
                    let (cx, cy) = t.altered_box.center();
                    r.iou(&t.altered_box) >= 0.5 || r.contains_point(cx, cy)
                });
            u8::from(hit)
        })
        .collect()
}

fn crop_moments(image: &GrayImage, b: &CharBox, index: usize) -> Result<MomentSet> {
    let (w, h) = image.dimensions();
    if !b.rect().fits_within(w, h) || b.width == 0 || b.height == 0 {
        return Err(Error::BoxOutOfBounds {
            index,
            glyph: b.glyph,
            x0: b.x0,
            y0: b.y0,
            width: b.width,
            height: b.height,
            image_width: w,
            image_height: h,
        });
    }
    let crop = image::imageops::crop_imm(image, b.x0, b.y0, b.width, b.height).to_image();
    glyph_moments(&crop)
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Config("neighbour count n must be at least 1".into()));
    }
    Ok(())
}

fn assemble(line: &TextLine, moments: &[MomentSet], center_index: usize, n: usize) -> Vec<f64> {
    let center_box = &line.boxes[center_index];
    let node = |i: usize| NodeFeatures::relative(&line.boxes[i], &moments[i], center_box);
    let center = node(center_index);
    let left: Vec<NodeFeatures> = (0..center_index).rev().take(n).map(node).collect();
    let right: Vec<NodeFeatures> = (center_index + 1..line.boxes.len()).take(n).map(node).collect();
    let (left, right) = impute(&left, &right, &center, n);
    let mut values = Vec::with_capacity(vector_len(n));
    for nf in left.iter().rev().chain(std::iter::once(&center)).chain(right.iter()) {
        values.extend_from_slice(&nf.values());
    }
    values
}

/// Builds the vector for one centre character.
///
/// `labels` is indexed by the box index of `page` (reading order); `line_offset`
/// is the box index of the line's first box.
pub fn build_vector(
    page: &Page,
    image: &GrayImage,
    line: &TextLine,
    line_offset: usize,
    center_index: usize,
    n: usize,
    labels: &[u8],
) -> Result<SubGraphVector> {
    check_n(n)?;
    if image.dimensions() != (page.image_width, page.image_height) {
        return Err(Error::Config(format!(
            "page {} declares {}x{} but the image is {}x{}",
            page.page_index,
            page.image_width,
            page.image_height,
            image.width(),
            image.height()
        )));
    }
    let moments = line
        .boxes
        .iter()
        .enumerate()
        .map(|(i, b)| crop_moments(image, b, line_offset + i))
        .collect::<Result<Vec<_>>>()?;
    let box_index = line_offset + center_index;
    Ok(SubGraphVector {
        central_glyph: line.boxes[center_index].glyph,
        n,
        values: assemble(line, &moments, center_index, n),
        label: labels.get(box_index).copied().unwrap_or(0),
        page_index: page.page_index,
        box_index,
    })
}

/// Vectors for every character of a page, for each requested `n`, in
/// (line, position) order. Moments are computed once per box.
pub fn extract_page(
    page: &Page,
    image: &GrayImage,
    ns: &[usize],
    truth: &[ManipulationRecord],
) -> Result<Vec<Vec<SubGraphVector>>> {
    for &n in ns {
        check_n(n)?;
    }
    let labels = label_boxes(page.boxes(), truth);
    let mut out = vec![Vec::with_capacity(page.box_count()); ns.len()];
    let mut offset = 0;
    for line in &page.lines {
        let moments = line
            .boxes
            .iter()
            .enumerate()
            .map(|(i, b)| crop_moments(image, b, offset + i))
            .collect::<Result<Vec<_>>>()?;
        for center_index in 0..line.boxes.len() {
            for (k, &n) in ns.iter().enumerate() {
                out[k].push(SubGraphVector {
                    central_glyph: line.boxes[center_index].glyph,
                    n,
                    values: assemble(line, &moments, center_index, n),
                    label: labels[offset + center_index],
                    page_index: page.page_index,
                    box_index: offset + center_index,
                });
            }
        }
        offset += line.boxes.len();
    }
    Ok(out)
}

/// Dense row-major matrix of sub-graph vectors with per-row provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub n: usize,
    pub values: Vec<f64>,
    pub labels: Vec<u8>,
    pub page_index: Vec<usize>,
    pub box_index: Vec<usize>,
    pub glyphs: Vec<char>,
}

const MATRIX_MAGIC: &[u8; 4] = b"DFMX";
const MATRIX_VERSION: u32 = 1;

impl FeatureMatrix {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            values: Vec::new(),
            labels: Vec::new(),
            page_index: Vec::new(),
            box_index: Vec::new(),
            glyphs: Vec::new(),
        }
    }

    pub fn from_vectors(n: usize, vectors: impl IntoIterator<Item = SubGraphVector>) -> Result<Self> {
        let mut m = Self::new(n);
        for v in vectors {
            m.push(v)?;
        }
        Ok(m)
    }

    pub fn push(&mut self, v: SubGraphVector) -> Result<()> {
        if v.n != self.n || v.values.len() != self.cols() {
            return Err(Error::LengthMismatch {
                expected: self.cols(),
                actual: v.values.len(),
            });
        }
        self.values.extend_from_slice(&v.values);
        self.labels.push(v.label);
        self.page_index.push(v.page_index);
        self.box_index.push(v.box_index);
        self.glyphs.push(v.central_glyph);
        Ok(())
    }

    pub fn cols(&self) -> usize {
        vector_len(self.n)
    }

    pub fn rows(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let c = self.cols();
        &self.values[i * c..(i + 1) * c]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.cols())
    }

    /// Column names: `f000`, `f001`, ...
    pub fn column_names(&self) -> Vec<String> {
        (0..self.cols()).map(|i| format!("f{i:03}")).collect()
    }

    /// Human-readable name of column `i`, e.g. `node-3.height` or `center.hu2`.
    pub fn describe_column(n: usize, i: usize) -> String {
        let node = (i / FIELDS_PER_NODE) as i64 - n as i64;
        let name = NODE_FIELDS[i % FIELDS_PER_NODE];
        match node {
            0 => format!("center.{name}"),
            k if k < 0 => format!("node{k}.{name}"),
            k => format!("node+{k}.{name}"),
        }
    }

    /// Rows whose index is in `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        let mut m = Self::new(self.n);
        for &i in indices {
            m.values.extend_from_slice(self.row(i));
            m.labels.push(self.labels[i]);
            m.page_index.push(self.page_index[i]);
            m.box_index.push(self.box_index[i]);
            m.glyphs.push(self.glyphs[i]);
        }
        m
    }

    pub fn append(&mut self, other: &FeatureMatrix) -> Result<()> {
        if other.n != self.n {
            return Err(Error::LengthMismatch {
                expected: self.cols(),
                actual: other.cols(),
            });
        }
        self.values.extend_from_slice(&other.values);
        self.labels.extend_from_slice(&other.labels);
        self.page_index.extend_from_slice(&other.page_index);
        self.box_index.extend_from_slice(&other.box_index);
        self.glyphs.extend_from_slice(&other.glyphs);
        Ok(())
    }

    /// CSV: `page_index,box_index,glyph,n,f000,...,label`.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["page_index".to_owned(), "box_index".into(), "glyph".into(), "n".into()];
        header.extend(self.column_names());
        header.push("label".into());
        w.write_record(&header)?;
        for (i, row) in self.iter_rows().enumerate() {
            let mut rec = vec![
                self.page_index[i].to_string(),
                self.box_index[i].to_string(),
                self.glyphs[i].to_string(),
                self.n.to_string(),
            ];
            rec.extend(row.iter().map(f64::to_string));
            rec.push(self.labels[i].to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: std::io::Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let header = r.headers()?.clone();
        let cols = header.len().checked_sub(5).ok_or_else(|| Error::Tsv {
            line: 1,
            message: "feature CSV header too short".into(),
        })?;
        if cols % FIELDS_PER_NODE != 0 || (cols / FIELDS_PER_NODE) % 2 != 1 {
            return Err(Error::Tsv {
                line: 1,
                message: format!("{cols} feature columns is not 12*(2n+1)"),
            });
        }
        let n = (cols / FIELDS_PER_NODE - 1) / 2;
        let mut m = Self::new(n);
        for (k, rec) in r.records().enumerate() {
            let rec = rec?;
            let line = k + 2;
            let bad = |what: &str| Error::Tsv {
                line,
                message: format!("invalid {what}"),
            };
            let field = |i: usize| rec.get(i).ok_or_else(|| bad("column count"));
            m.page_index.push(field(0)?.parse().map_err(|_| bad("page_index"))?);
            m.box_index.push(field(1)?.parse().map_err(|_| bad("box_index"))?);
            let mut chars = field(2)?.chars();
            let glyph = chars.next().ok_or_else(|| bad("glyph"))?;
            if chars.next().is_some() {
                return Err(bad("glyph"));
            }
            m.glyphs.push(glyph);
            if field(3)?.parse::<usize>().map_err(|_| bad("n"))? != n {
                return Err(bad("n"));
            }
            for i in 0..cols {
                m.values.push(field(4 + i)?.parse().map_err(|_| bad("feature value"))?);
            }
            let label: u8 = field(4 + cols)?.parse().map_err(|_| bad("label"))?;
            if label > 1 {
                return Err(bad("label"));
            }
            m.labels.push(label);
        }
        Ok(m)
    }

    /// Binary layout, little-endian:
    /// `"DFMX"`, version u32, n u32, rows u64, then per row
    /// page u32, box u32, glyph u32, label u8, `12(2n+1)` f64 values.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(20 + self.rows() * (13 + 8 * self.cols()));
        out.extend_from_slice(MATRIX_MAGIC);
        out.extend_from_slice(&MATRIX_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.n as u32).to_le_bytes());
        out.extend_from_slice(&(self.rows() as u64).to_le_bytes());
        for (i, row) in self.iter_rows().enumerate() {
            out.extend_from_slice(&(self.page_index[i] as u32).to_le_bytes());
            out.extend_from_slice(&(self.box_index[i] as u32).to_le_bytes());
            out.extend_from_slice(&u32::from(self.glyphs[i]).to_le_bytes());
            out.push(self.labels[i]);
            for v in row {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let corrupt = |m: &str| Error::ModelFormat(format!("feature matrix: {m}"));
        let mut cur = crate::binio::Cursor::new(bytes);
        if cur.take(4).map_err(|_| corrupt("empty or truncated header"))? != MATRIX_MAGIC {
            return Err(corrupt("bad magic bytes"));
        }
        let version = cur.u32()?;
        if version != MATRIX_VERSION {
            return Err(corrupt(&format!("format version {version}, expected {MATRIX_VERSION}")));
        }
        let n = cur.u32()? as usize;
        let rows = cur.u64()? as usize;
        let mut m = Self::new(n);
        let cols = m.cols();
        if cur.remaining() != rows.saturating_mul(13 + 8 * cols) {
            return Err(corrupt("payload length does not match row count"));
        }
        for _ in 0..rows {
            m.page_index.push(cur.u32()? as usize);
            m.box_index.push(cur.u32()? as usize);
            m.glyphs.push(char::from_u32(cur.u32()?).ok_or_else(|| corrupt("invalid glyph"))?);
            let label = cur.u8()?;
            if label > 1 {
                return Err(corrupt("invalid label"));
            }
            m.labels.push(label);
            for _ in 0..cols {
                m.values.push(cur.f64()?);
            }
        }
        Ok(m)
    }

    /// Reads `.csv` as CSV and anything else as the binary format.
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let run = || -> Result<Self> {
            if path.extension().is_some_and(|e| e == "csv") {
                Self::read_csv(std::fs::File::open(path)?)
            } else {
                Self::from_bytes(&std::fs::read(path)?)
            }
        };
        run().map_err(|e| e.at(path))
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let run = || -> Result<()> {
            if path.extension().is_some_and(|e| e == "csv") {
                self.write_csv(std::io::BufWriter::new(std::fs::File::create(path)?))
            } else {
                Ok(std::fs::write(path, self.to_bytes())?)
            }
        };
        run().map_err(|e| e.at(path))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Rect;
    use crate::synth::{ManipulationKind, ManipulationParams};

    fn cb(x0: u32, y0: u32, w: u32, h: u32) -> CharBox {
        CharBox {
            page_index: 0,
            glyph: 'a',
            x0,
            y0,
            width: w,
            height: h,
            confidence: 90.0,
        }
    }

    fn node(tag: f64) -> NodeFeatures {
        NodeFeatures {
            height: tag,
            width: tag,
            dy: tag,
            distance: tag,
            hu: [tag; 7],
            inertia_angle: tag,
            imputed: false,
        }
    }

    fn line(k: u32) -> TextLine {
        TextLine {
            page_index: 0,
            boxes: (0..k).map(|i| cb(i * 10, 0, 8, 12)).collect(),
        }
    }

    #[test]
    fn neighbour_windows() {
        let l = line(9);
        let (left, right) = neighbors(&l, 4, 3);
        let xs = |v: &[&CharBox]| v.iter().map(|b| b.x0 / 10).collect::<Vec<_>>();
        assert_eq!(xs(&left), vec![3, 2, 1]);
        assert_eq!(xs(&right), vec![5, 6, 7]);
        let (left, right) = neighbors(&l, 0, 3);
        assert!(left.is_empty());
        assert_eq!(xs(&right), vec![1, 2, 3]);
        let short = line(2);
        let (left, right) = neighbors(&short, 0, 3);
        assert!(left.is_empty());
        assert_eq!(xs(&right), vec![1]);
    }

    #[test]
    fn imputation_mirrors_same_rank() {
        let center = node(0.0);
        let (l, r) = impute(&[], &[node(1.0)], &center, 1);
        assert_eq!(l[0].height, 1.0);
        assert!(l[0].imputed && !r[0].imputed);

        let (l, _) = impute(&[node(1.0), node(2.0)], &[node(11.0), node(12.0), node(13.0)], &center, 3);
        assert_eq!(l.iter().map(|n| n.height).collect::<Vec<_>>(), vec![1.0, 2.0, 13.0]);
        assert!(l[2].imputed);
    }

    #[test]
    fn isolated_character_copies_centre() {
        let mut center = node(5.0);
        center.dy = 0.0;
        center.distance = 0.0;
        let (l, r) = impute(&[], &[], &center, 3);
        for nf in l.iter().chain(r.iter()) {
            assert!(nf.imputed);
            assert_eq!((nf.dy, nf.distance, nf.height), (0.0, 0.0, 5.0));
        }
    }

    #[test]
    fn euclidean_centre_distance() {
        let a = cb(0, 0, 10, 10);
        assert_eq!(distance(&a, &a), 0.0);
        // centres (0,0) and (3,4)
        assert_eq!(distance(&cb(0, 0, 0, 0), &cb(3, 4, 0, 0)), 5.0);
        // centres (10,20) and (13,24)
        assert_eq!(distance(&cb(8, 18, 4, 4), &cb(11, 22, 4, 4)), 5.0);
    }

    #[test]
    fn layout_constants() {
        assert_eq!(vector_len(3), 84);
        assert_eq!(center_offset(3), 36);
        assert_eq!(vector_len(9), 228);
    }

    fn record(r: Rect) -> ManipulationRecord {
        ManipulationRecord {
            page_index: 0,
            original_box: r,
            altered_box: r,
            kind: ManipulationKind::Shift,
            params: ManipulationParams::Offset { dx: 0, dy: 0 },
            glyph: 'a',
        }
    }

    #[test]
    fn labels_by_iou_or_centre() {
        let truth = [record(Rect::new(100, 50, 10, 20))];
        let boxes = [
            cb(100, 50, 10, 20),
            cb(300, 50, 10, 20),
            cb(101, 51, 10, 20),
            cb(90, 40, 40, 40),
        ];
        assert_eq!(label_boxes(&boxes, &truth), vec![1, 0, 1, 1]);
        assert_eq!(label_boxes(&boxes, &[]), vec![0, 0, 0, 0]);
    }
}
