//! Detection of manipulated characters in scanned business documents.
//!
//! Each OCR character box is described together with its same-line
//! neighbours (size, vertical offset, spacing, Hu moments and principal
//! axis of every glyph) and classified by a random forest. A per-class
//! statistical baseline, a forgery synthesizer for building labelled
//! corpora and a small page renderer for fixtures are included.

mod binio;
pub mod baseline;
pub mod docgen;
pub mod error;
pub mod features;
pub mod forest;
pub mod geometry;
pub mod moments;
pub mod ocr;
pub mod report;
pub mod seed;
pub mod synth;

pub use error::{Error, Result};
pub use features::{FeatureMatrix, NodeFeatures, SubGraphVector};
pub use forest::{ForestHyperparams, ForestModel, Metrics};
pub use geometry::Rect;
pub use moments::{BinaryPatch, CentralMoments, MomentSet};
pub use ocr::{CharBox, Page, TextLine};
pub use synth::{ManipulationKind, ManipulationRecord, ManipulationSpec, SourceBox};
