//! Metric rectification: warp a calibrated photograph onto the board's
//! millimeter grid so that `np` output pixels span one millimeter.
//!
//! Inverse mapping: every output pixel center maps to world millimeters
//! (origin at the board's top-left, +X right, +Y down), through the
//! homography into undistorted pixels, through the forward distortion
//! model into source coordinates, where the source is sampled
//! bilinearly. Samples falling outside the source are black.

use nalgebra::Point2;
use rayon::prelude::*;

use crate::calib::{CameraIntrinsics, PlaneHomography};
use crate::error::{Error, Result};
use crate::pattern::BoardSpec;
use crate::raster::RasterImage;

/// Output raster geometry: pixels-per-millimeter and the derived
/// dimensions `round(board_mm * np)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RectifySpec {
    np: f64,
    out_width_px: usize,
    out_height_px: usize,
}

impl RectifySpec {
    /// Derive output dimensions from the physical board size.
    pub fn new(np: f64, board_width_mm: f64, board_height_mm: f64) -> Result<Self> {
        if !(np > 0.0) || !np.is_finite() {
            return Err(Error::ConfigInvalid(format!(
                "pixels-per-millimeter {np} must be positive"
            )));
        }
        if !(board_width_mm > 0.0 && board_height_mm > 0.0) {
            return Err(Error::ConfigInvalid(format!(
                "board dimensions {board_width_mm} x {board_height_mm} must be positive"
            )));
        }
        let w = (board_width_mm * np).round() as usize;
        let h = (board_height_mm * np).round() as usize;
        if w == 0 || h == 0 {
            return Err(Error::ConfigInvalid(
                "output dimensions round to zero".into(),
            ));
        }
        Ok(Self {
            np,
            out_width_px: w,
            out_height_px: h,
        })
    }

    pub fn for_board(np: f64, board: &BoardSpec) -> Result<Self> {
        Self::new(np, board.board_width_mm(), board.board_height_mm())
    }

    pub fn np(&self) -> f64 {
        self.np
    }

    pub fn out_width_px(&self) -> usize {
        self.out_width_px
    }

    pub fn out_height_px(&self) -> usize {
        self.out_height_px
    }
}

/// Warp `image` onto the world grid. Output rows are computed
/// independently (data-parallel); the result is identical regardless of
/// thread count.
pub fn rectify_image(
    image: &RasterImage,
    intrinsics: &CameraIntrinsics,
    h: &PlaneHomography,
    spec: &RectifySpec,
) -> Result<RasterImage> {
    if !intrinsics.is_finite() || !h.is_finite() {
        return Err(Error::InvalidCalibration(
            "non-finite intrinsics or homography".into(),
        ));
    }
    let channels = image.channels();
    let (out_w, out_h) = (spec.out_width_px, spec.out_height_px);
    let np = spec.np;
    let mut out = RasterImage::new(out_w, out_h, channels)?;

    out.data_mut()
        .par_chunks_mut(out_w * channels)
        .enumerate()
        .for_each(|(v, row)| {
            let y_mm = (v as f64 + 0.5) / np;
            for u in 0..out_w {
                let x_mm = (u as f64 + 0.5) / np;
                let undistorted = h.apply(Point2::new(x_mm, y_mm));
                let source = intrinsics.distort_px(undistorted);
                for c in 0..channels {
                    let value = if source.x.is_finite() && source.y.is_finite() {
                        image.bilinear_channel(source.x - 0.5, source.y - 0.5, c)
                    } else {
                        0.0
                    };
                    row[u * channels + c] = value.round().clamp(0.0, 255.0) as u8;
                }
            }
        });
    Ok(out)
}
