//! Synthetic-scene oracle: render the board (and optionally a flat
//! rectangular artifact lying on it) under a known homography,
//! distortion, noise and blur. Every downstream stage is tested against
//! the analytically known answers this module provides.

use nalgebra::{Matrix3, Point2, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;

use crate::calib::{project_board_point, CameraIntrinsics, PlaneHomography};
use crate::error::{Error, Result};
use crate::pattern::{board_color_at, BoardSpec, MarkerDictionary};
use crate::raster::RasterImage;

/// Ground truth for one synthetic view.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct SceneTruth {
    /// World millimeters to undistorted pixels.
    pub homography: PlaneHomography,
    /// Intrinsics whose `k1`/`k2` distort the projected scene.
    pub intrinsics: CameraIntrinsics,
    /// Gaussian noise sigma as a fraction of full scale (e.g. 3/255).
    pub noise_sigma: f64,
    /// Box blur radius in pixels; 0 disables blurring.
    pub blur_radius: f64,
    pub seed: u64,
}

impl SceneTruth {
    fn validate(&self) -> Result<()> {
        if !self.homography.is_finite() {
            return Err(Error::InvalidTruth("non-finite homography".into()));
        }
        if !self.intrinsics.is_finite() {
            return Err(Error::InvalidTruth("invalid intrinsics".into()));
        }
        if !(self.noise_sigma >= 0.0) || !self.noise_sigma.is_finite() {
            return Err(Error::InvalidTruth(format!(
                "noise sigma {} must be non-negative",
                self.noise_sigma
            )));
        }
        if !(self.blur_radius >= 0.0) || !self.blur_radius.is_finite() {
            return Err(Error::InvalidTruth(format!(
                "blur radius {} must be non-negative",
                self.blur_radius
            )));
        }
        Ok(())
    }
}

/// A flat rectangle of known size resting on the board plane, standing
/// in for the measurement artifact (the paper-protocol playing card).
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct ArtifactRect {
    pub center_mm: [f64; 2],
    pub width_mm: f64,
    pub height_mm: f64,
    /// Fill intensity (the board behind it is white).
    pub gray: u8,
}

impl ArtifactRect {
    fn covers(&self, x_mm: f64, y_mm: f64) -> bool {
        (x_mm - self.center_mm[0]).abs() <= self.width_mm / 2.0
            && (y_mm - self.center_mm[1]).abs() <= self.height_mm / 2.0
    }
}

/// Render the board alone under the given truth, one sample per pixel
/// center.
pub fn render_scene(
    dict: &MarkerDictionary,
    spec: &BoardSpec,
    truth: &SceneTruth,
    out_w: usize,
    out_h: usize,
) -> Result<RasterImage> {
    render_scene_sampled(dict, spec, truth, None, out_w, out_h, 1)
}

/// Render the board with an optional artifact laid over it, one sample
/// per pixel center. Each pixel is inverse-mapped through the
/// distortion and the homography to board millimeters and the analytic
/// scene function is sampled there; seeded Gaussian noise and a box
/// blur follow.
pub fn render_scene_with_artifact(
    dict: &MarkerDictionary,
    spec: &BoardSpec,
    truth: &SceneTruth,
    artifact: Option<&ArtifactRect>,
    out_w: usize,
    out_h: usize,
) -> Result<RasterImage> {
    render_scene_sampled(dict, spec, truth, artifact, out_w, out_h, 1)
}

/// Area-sampled render: every pixel averages a `subsamples x subsamples`
/// grid of analytic samples, emulating an integrating sensor. Pure
/// point sampling (`subsamples = 1`) leaves staircase aliasing on
/// near-axis-aligned edges, which biases sub-pixel corner estimates by
/// a sizeable fraction of a pixel.
pub fn render_scene_antialiased(
    dict: &MarkerDictionary,
    spec: &BoardSpec,
    truth: &SceneTruth,
    artifact: Option<&ArtifactRect>,
    out_w: usize,
    out_h: usize,
    subsamples: usize,
) -> Result<RasterImage> {
    render_scene_sampled(dict, spec, truth, artifact, out_w, out_h, subsamples.max(1))
}

fn render_scene_sampled(
    dict: &MarkerDictionary,
    spec: &BoardSpec,
    truth: &SceneTruth,
    artifact: Option<&ArtifactRect>,
    out_w: usize,
    out_h: usize,
    subsamples: usize,
) -> Result<RasterImage> {
    truth.validate()?;
    if out_w == 0 || out_h == 0 {
        return Err(Error::InvalidRaster("empty scene dimensions".into()));
    }
    let h_inv = truth
        .homography
        .inverse()
        .map_err(|_| Error::InvalidTruth("homography is not invertible".into()))?;

    let sample_at = |p: Point2<f64>| -> f64 {
        let undistorted = truth.intrinsics.undistort_px(p);
        let world = h_inv.apply(undistorted);
        if !world.x.is_finite() || !world.y.is_finite() {
            255.0
        } else if artifact.map_or(false, |a| a.covers(world.x, world.y)) {
            artifact.unwrap().gray as f64
        } else {
            board_color_at(dict, spec, world.x, world.y) as f64
        }
    };

    let mut field = vec![0f64; out_w * out_h];
    let s = subsamples;
    let inv = 1.0 / s as f64;
    for v in 0..out_h {
        for u in 0..out_w {
            let mut acc = 0.0;
            for sy in 0..s {
                for sx in 0..s {
                    let p = Point2::new(
                        u as f64 + (sx as f64 + 0.5) * inv,
                        v as f64 + (sy as f64 + 0.5) * inv,
                    );
                    acc += sample_at(p);
                }
            }
            field[v * out_w + u] = acc * inv * inv;
        }
    }

    if truth.noise_sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(truth.seed);
        let normal = rand_distr::Normal::new(0.0, truth.noise_sigma * 255.0)
            .map_err(|e| Error::InvalidTruth(e.to_string()))?;
        for value in field.iter_mut() {
            *value += normal.sample(&mut rng);
        }
    }
    if truth.blur_radius > 0.0 {
        field = box_blur(&field, out_w, out_h, truth.blur_radius);
    }

    let data = field
        .iter()
        .map(|v| v.round().clamp(0.0, 255.0) as u8)
        .collect();
    RasterImage::from_vec(out_w, out_h, 1, data)
}

/// Exact projection of a marker corner through the scene truth.
pub fn expected_corner(
    truth: &SceneTruth,
    spec: &BoardSpec,
    id: usize,
    corner: usize,
) -> Result<Point2<f64>> {
    if corner >= 4 {
        return Err(Error::ConfigInvalid(format!(
            "corner index {corner} outside 0..4"
        )));
    }
    let corners = spec.corner_coords(id)?;
    Ok(project_board_point(
        &truth.homography,
        &truth.intrinsics,
        corners[corner],
    ))
}

/// Separable box blur with fractional radius; the kernel weight of
/// integer offset `k` is the overlap of `[k-0.5, k+0.5]` with
/// `[-radius, radius]`. Edges are clamped.
fn box_blur(field: &[f64], w: usize, h: usize, radius: f64) -> Vec<f64> {
    let reach = (radius + 0.5).ceil() as i64;
    let mut weights = Vec::with_capacity((2 * reach + 1) as usize);
    let mut total = 0.0;
    for k in -reach..=reach {
        let lo = (k as f64 - 0.5).max(-radius);
        let hi = (k as f64 + 0.5).min(radius);
        let wgt = (hi - lo).max(0.0);
        weights.push(wgt);
        total += wgt;
    }
    for wgt in weights.iter_mut() {
        *wgt /= total;
    }

    let clamp_x = |x: i64| x.clamp(0, w as i64 - 1) as usize;
    let clamp_y = |y: i64| y.clamp(0, h as i64 - 1) as usize;

    let mut tmp = vec![0f64; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (i, wgt) in weights.iter().enumerate() {
                let sx = clamp_x(x as i64 + i as i64 - reach);
                acc += wgt * field[y * w + sx];
            }
            tmp[y * w + x] = acc;
        }
    }
    let mut out = vec![0f64; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (i, wgt) in weights.iter().enumerate() {
                let sy = clamp_y(y as i64 + i as i64 - reach);
                acc += wgt * tmp[sy * w + x];
            }
            out[y * w + x] = acc;
        }
    }
    out
}

/// Homography of a camera looking at the board center from an oblique
/// pose: tilt degrees about the board's X axis, roll degrees about the
/// view axis, at a distance that fits the board into `fill` of the
/// output frame.
pub fn oblique_view_homography(
    intrinsics: &CameraIntrinsics,
    board_width_mm: f64,
    board_height_mm: f64,
    out_w: usize,
    out_h: usize,
    tilt_deg: f64,
    roll_deg: f64,
    fill: f64,
) -> Result<PlaneHomography> {
    if !(fill > 0.0 && fill <= 1.0) {
        return Err(Error::ConfigInvalid(format!("fill {fill} outside (0, 1]")));
    }
    let f = 0.5 * (intrinsics.fx + intrinsics.fy);
    let distance = f * (board_width_mm / (fill * out_w as f64))
        .max(board_height_mm / (fill * out_h as f64));

    let tilt = tilt_deg.to_radians();
    let roll = roll_deg.to_radians();
    let rx = Matrix3::new(
        1.0,
        0.0,
        0.0,
        0.0,
        tilt.cos(),
        -tilt.sin(),
        0.0,
        tilt.sin(),
        tilt.cos(),
    );
    let rz = Matrix3::new(
        roll.cos(),
        -roll.sin(),
        0.0,
        roll.sin(),
        roll.cos(),
        0.0,
        0.0,
        0.0,
        1.0,
    );
    let r = rz * rx;
    let center = Vector3::new(board_width_mm / 2.0, board_height_mm / 2.0, 0.0);
    let t = Vector3::new(0.0, 0.0, distance) - r * center;

    let k = Matrix3::new(
        f,
        0.0,
        intrinsics.cx,
        0.0,
        f,
        intrinsics.cy,
        0.0,
        0.0,
        1.0,
    );
    let rt = Matrix3::from_columns(&[r.column(0).into(), r.column(1).into(), t]);
    PlaneHomography::new(k * rt)
}
