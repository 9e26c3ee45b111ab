//! Camera-as-scanner: metrically rectify photographs of planar objects
//! resting on a printed fiducial board, so that a fixed number of pixels
//! equals one millimeter.
//!
//! Stages, mirrored by the modules below:
//!
//! 1. [`pattern`] – synthesize a marker dictionary, lay out and render
//!    the printable board, persist it as a board file.
//! 2. [`exif`] – byte-level EXIF/TIFF parsing to seed camera intrinsics
//!    from the focal length tag and the sensor size.
//! 3. [`detect`] – locate and decode markers in a photograph with
//!    sub-pixel corners.
//! 4. [`calib`] – per-image homography estimation (normalized DLT,
//!    RANSAC) and joint focal/distortion/homography refinement.
//! 5. [`rectify`] – inverse-warp the photograph onto the board's
//!    millimeter grid at a chosen pixels-per-millimeter.
//! 6. [`synth`] – synthetic scene rendering with exact ground truth,
//!    used as the oracle for everything above.
//! 7. [`pipeline`] – batch orchestration, config and summary files,
//!    artifact verification.

pub mod calib;
pub mod detect;
pub mod error;
pub mod exif;
pub mod pattern;
pub mod pipeline;
pub mod raster;
pub mod rectify;
pub mod synth;

pub use error::{Error, Result};
