use std::path::PathBuf;

/// Errors raised anywhere in the detection pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("tsv line {line}: {message}")]
    Tsv { line: usize, message: String },

    #[error("cannot binarize an empty crop")]
    EmptyCrop,

    #[error("empty glyph: patch has no foreground pixels")]
    EmptyGlyph,

    #[error("mu00 must be positive, got {0}")]
    NonPositiveMass(f64),

    #[error("box #{index} '{glyph}' at ({x0},{y0}) {width}x{height} lies outside the {image_width}x{image_height} page image")]
    BoxOutOfBounds {
        index: usize,
        glyph: char,
        x0: u32,
        y0: u32,
        width: u32,
        height: u32,
        image_width: u32,
        image_height: u32,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("degenerate labels: training data must contain both classes")]
    DegenerateLabels,

    #[error("empty training set")]
    EmptyData,

    #[error("feature length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("model file: {0}")]
    ModelFormat(String),

    #[error("schema mismatch: model expects {model}, matrix provides {matrix}")]
    SchemaMismatch { model: String, matrix: String },

    #[error("feature matrix: {0}")]
    Matrix(String),

    #[error("{path}: {source}")]
    Path {
        path: PathBuf,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Attaches the file a failure relates to.
    pub fn at(self, path: impl Into<PathBuf>) -> Self {
        Error::Path {
            path: path.into(),
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
