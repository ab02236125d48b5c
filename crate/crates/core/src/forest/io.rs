//! Versioned binary model format, little-endian:
//!
//! ```text
//! magic      "DFRF"
//! version    u32
//! schema     n_neighbors u32, vector_len u32, field count u32,
//!            then per field: byte length u32, UTF-8 bytes
//! hyper      n_trees u32, max_depth u32, min_samples_leaf u32,
//!            n_neighbors u32, seed u64, balanced u8
//! train_seed u64
//! trees      count u32, then per tree: oob_fraction f64, node count u32,
//!            nodes: tag u8 (0 leaf, 1 split), neg u32, pos u32, score f64,
//!                   and for splits: feature u32, threshold f64, left u32, right u32
//! ```

use super::{FeatureSchema, ForestHyperparams, ForestModel, Node, Tree};
use crate::binio::Cursor;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"DFRF";
pub const FORMAT_VERSION: u32 = 1;

fn put_u32(out: &mut Vec<u8>, v: usize) {
    out.extend_from_slice(&(v as u32).to_le_bytes());
}

pub fn save_model(model: &ForestModel) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    let s = &model.schema;
    put_u32(&mut out, s.n_neighbors);
    put_u32(&mut out, s.vector_len);
    put_u32(&mut out, s.field_names.len());
    for name in &s.field_names {
        put_u32(&mut out, name.len());
        out.extend_from_slice(name.as_bytes());
    }
    let hp = &model.hyperparams;
    for v in [hp.n_trees, hp.max_depth, hp.min_samples_leaf, hp.n_neighbors] {
        put_u32(&mut out, v);
    }
    out.extend_from_slice(&hp.seed.to_le_bytes());
    out.push(u8::from(hp.balanced));
    out.extend_from_slice(&model.train_seed.to_le_bytes());
    put_u32(&mut out, model.trees.len());
    for t in &model.trees {
        out.extend_from_slice(&t.oob_fraction.to_le_bytes());
        put_u32(&mut out, t.nodes.len());
        for node in &t.nodes {
            out.push(u8::from(matches!(node, Node::Split { .. })));
            let counts = node.counts();
            out.extend_from_slice(&counts[0].to_le_bytes());
            out.extend_from_slice(&counts[1].to_le_bytes());
            out.extend_from_slice(&node.score().to_le_bytes());
            match *node {
                Node::Leaf { .. } => {}
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    out.extend_from_slice(&feature.to_le_bytes());
                    out.extend_from_slice(&threshold.to_le_bytes());
                    out.extend_from_slice(&left.to_le_bytes());
                    out.extend_from_slice(&right.to_le_bytes());
                }
            }
        }
    }
    out
}

fn corrupt(msg: impl Into<String>) -> Error {
    Error::ModelFormat(format!("corrupt payload: {}", msg.into()))
}

pub fn load_model(bytes: &[u8]) -> Result<ForestModel> {
    if bytes.is_empty() {
        return Err(Error::ModelFormat("empty model file".into()));
    }
    let mut c = Cursor::new(bytes);
    if c.take(4).map_err(|_| corrupt("shorter than the magic bytes"))? != MAGIC {
        return Err(Error::ModelFormat("not a forest model (bad magic bytes)".into()));
    }
    let version = c.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::ModelFormat(format!(
            "format version {version} is not supported (this build reads version {FORMAT_VERSION})"
        )));
    }
    let n_neighbors = c.u32()? as usize;
    let vector_len = c.u32()? as usize;
    let field_count = c.u32()? as usize;
    let mut field_names = Vec::with_capacity(field_count.min(1024));
    for _ in 0..field_count {
        let len = c.u32()? as usize;
        let raw = c.take(len)?;
        field_names.push(String::from_utf8(raw.to_vec()).map_err(|_| corrupt("field name is not UTF-8"))?);
    }
    let mut next = || c.u32().map(|v| v as usize);
    let (n_trees, max_depth, min_samples_leaf, hp_n) = (next()?, next()?, next()?, next()?);
    let seed = c.u64()?;
    let balanced = match c.u8()? {
        0 => false,
        1 => true,
        b => return Err(corrupt(format!("balanced flag {b}"))),
    };
    let train_seed = c.u64()?;
    let tree_count = c.u32()? as usize;
    let mut trees = Vec::with_capacity(tree_count.min(1 << 16));
    for t in 0..tree_count {
        let oob_fraction = c.f64()?;
        let count = c.u32()? as usize;
        if count == 0 {
            return Err(corrupt(format!("tree {t} has no nodes")));
        }
        let mut nodes = Vec::with_capacity(count.min(1 << 20));
        for i in 0..count {
            let tag = c.u8()?;
            let counts = [c.u32()?, c.u32()?];
            let score = c.f64()?;
            let node = match tag {
                0 => Node::Leaf { counts, score },
                1 => {
                    let (feature, threshold, left, right) = (c.u32()?, c.f64()?, c.u32()?, c.u32()?);
                    let child_ok = |ch: u32| (ch as usize) > i && (ch as usize) < count;
                    if feature as usize >= vector_len || !child_ok(left) || !child_ok(right) {
                        return Err(corrupt(format!("tree {t} node {i} has invalid links")));
                    }
                    Node::Split {
                        feature,
                        threshold,
                        left,
                        right,
                        counts,
                        score,
                    }
                }
                tag => return Err(corrupt(format!("tree {t} node {i} has tag {tag}"))),
            };
            nodes.push(node);
        }
        trees.push(Tree { nodes, oob_fraction });
    }
    if c.remaining() != 0 {
        return Err(corrupt(format!("{} trailing bytes", c.remaining())));
    }
    if trees.is_empty() {
        return Err(corrupt("model has no trees"));
    }
    Ok(ForestModel {
        trees,
        hyperparams: ForestHyperparams {
            n_trees,
            max_depth,
            min_samples_leaf,
            n_neighbors: hp_n,
            seed,
            balanced,
        },
        schema: FeatureSchema {
            n_neighbors,
            vector_len,
            field_names,
        },
        train_seed,
    })
}
