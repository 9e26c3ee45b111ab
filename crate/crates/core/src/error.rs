//! Error type shared by all pipeline stages.

use std::path::PathBuf;

/// Errors produced by pattern generation, parsing, calibration and the
/// batch pipeline. Display strings start with a stable kebab-case token
/// so callers (and the batch summary) can match on the failure class.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("unsatisfiable-dictionary: placed {placed} of {requested} codes after {attempts} attempts")]
    UnsatisfiableDictionary {
        placed: usize,
        requested: usize,
        attempts: u64,
    },

    #[error("id-out-of-range: marker id {id} outside dictionary of {len} codes")]
    IdOutOfRange { id: usize, len: usize },

    #[error("unknown-marker: id {id} is not part of the board layout")]
    UnknownMarker { id: usize },

    #[error("invalid-board: {0}")]
    InvalidBoard(String),

    #[error("not-an-image: {0}")]
    NotAnImage(String),

    #[error("no-exif-segment")]
    NoExifSegment,

    #[error("malformed-ifd: {0}")]
    MalformedIfd(String),

    #[error("no-focal-length")]
    NoFocalLength,

    #[error("invalid-raster: {0}")]
    InvalidRaster(String),

    #[error("window-out-of-bounds: window {window} around ({x:.1}, {y:.1}) leaves the image")]
    WindowOutOfBounds { x: f64, y: f64, window: usize },

    #[error("insufficient-correspondences: {got} point pairs, need at least {need}")]
    InsufficientCorrespondences { got: usize, need: usize },

    #[error("degenerate-configuration: {0}")]
    DegenerateConfiguration(String),

    #[error("no-consensus: best sample had {best} inliers")]
    NoConsensus { best: usize },

    #[error("diverged: reprojection cost became non-finite")]
    Diverged,

    #[error("invalid-calibration: {0}")]
    InvalidCalibration(String),

    #[error("invalid-truth: {0}")]
    InvalidTruth(String),

    #[error("config-invalid: {0}")]
    ConfigInvalid(String),

    #[error("no-images-found: no decodable images under {0}")]
    NoImagesFound(PathBuf),

    #[error("non-positive-measurement: {0}")]
    NonPositiveMeasurement(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("image-codec: {0}")]
    ImageCodec(#[from] image::ImageError),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// The leading kebab-case token, e.g. `no-focal-length`. Used as the
    /// machine-readable skip reason in batch summaries.
    pub fn token(&self) -> String {
        let s = self.to_string();
        match s.split_once(':') {
            Some((head, _)) => head.to_string(),
            None => s,
        }
    }
}
