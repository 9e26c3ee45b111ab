//! Per-image calibration: homography estimation from marker
//! correspondences and joint refinement of focal length, radial
//! distortion and the homography.
//!
//! Projection model: board point (mm) -> homography -> undistorted pixel
//! -> radial distortion `(1 + k1 r^2 + k2 r^4)` applied in normalized
//! coordinates -> observed pixel. A single planar view cannot separate
//! the principal point from the homography, so `cx, cy` stay pinned at
//! the image center and only `{f, k1, k2, H}` are refined.

use nalgebra::{DMatrix, DVector, Matrix3, Point2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::detect::MarkerDetection;
use crate::error::{Error, Result};
use crate::pattern::BoardSpec;

/// Pinhole parameters in pixels plus two radial distortion terms.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub k1: f64,
    pub k2: f64,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, k1: f64, k2: f64) -> Self {
        Self {
            fx,
            fy,
            cx,
            cy,
            k1,
            k2,
        }
    }

    pub fn is_finite(&self) -> bool {
        [self.fx, self.fy, self.cx, self.cy, self.k1, self.k2]
            .iter()
            .all(|v| v.is_finite())
            && self.fx > 0.0
            && self.fy > 0.0
    }

    /// Apply forward radial distortion to an undistorted pixel.
    pub fn distort_px(&self, p: Point2<f64>) -> Point2<f64> {
        let x = (p.x - self.cx) / self.fx;
        let y = (p.y - self.cy) / self.fy;
        let r2 = x * x + y * y;
        let s = 1.0 + self.k1 * r2 + self.k2 * r2 * r2;
        Point2::new(self.fx * x * s + self.cx, self.fy * y * s + self.cy)
    }

    /// Invert the radial model by fixed-point iteration.
    pub fn undistort_px(&self, p: Point2<f64>) -> Point2<f64> {
        let xd = (p.x - self.cx) / self.fx;
        let yd = (p.y - self.cy) / self.fy;
        let mut x = xd;
        let mut y = yd;
        for _ in 0..10 {
            let r2 = x * x + y * y;
            let s = 1.0 + self.k1 * r2 + self.k2 * r2 * r2;
            x = xd / s;
            y = yd / s;
        }
        Point2::new(self.fx * x + self.cx, self.fy * y + self.cy)
    }
}

/// Undistort a batch of pixel coordinates.
pub fn undistort_points(
    points_px: &[Point2<f64>],
    intrinsics: &CameraIntrinsics,
) -> Vec<Point2<f64>> {
    points_px
        .iter()
        .map(|&p| intrinsics.undistort_px(p))
        .collect()
}

/// 3x3 projective map from world-plane millimeters to undistorted image
/// pixels, stored with unit Frobenius norm and a non-negative
/// bottom-right entry.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PlaneHomography {
    m: Matrix3<f64>,
}

impl PlaneHomography {
    pub fn new(m: Matrix3<f64>) -> Result<Self> {
        if !m.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidCalibration("non-finite homography".into()));
        }
        let norm = m.norm();
        if norm == 0.0 || m.determinant().abs() < 1e-15 * norm.powi(3) {
            return Err(Error::DegenerateConfiguration(
                "homography is singular".into(),
            ));
        }
        let mut m = m / norm;
        if m[(2, 2)] < 0.0 {
            m = -m;
        }
        Ok(Self { m })
    }

    pub fn identity() -> Self {
        Self {
            m: Matrix3::identity() / 3f64.sqrt(),
        }
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.m
    }

    pub fn apply(&self, p: Point2<f64>) -> Point2<f64> {
        let v = self.m * Vector3::new(p.x, p.y, 1.0);
        Point2::new(v.x / v.z, v.y / v.z)
    }

    pub fn inverse(&self) -> Result<PlaneHomography> {
        let inv = self
            .m
            .try_inverse()
            .ok_or_else(|| Error::DegenerateConfiguration("homography is singular".into()))?;
        PlaneHomography::new(inv)
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().all(|v| v.is_finite())
    }
}

/// Project a board point through homography and forward distortion into
/// observed pixel coordinates.
pub fn project_board_point(
    h: &PlaneHomography,
    intrinsics: &CameraIntrinsics,
    world_mm: Point2<f64>,
) -> Point2<f64> {
    intrinsics.distort_px(h.apply(world_mm))
}

/// One world-to-image point pair, tagged with its marker corner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correspondence {
    pub world_mm: Point2<f64>,
    pub image_px: Point2<f64>,
    pub marker_id: usize,
    pub corner_index: u8,
}

/// Collection of point pairs feeding homography estimation. Each
/// `(marker_id, corner_index)` pair appears at most once.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Correspondences {
    items: Vec<Correspondence>,
}

impl Correspondences {
    pub fn new(items: Vec<Correspondence>) -> Result<Self> {
        let mut keys: Vec<(usize, u8)> = items
            .iter()
            .map(|c| (c.marker_id, c.corner_index))
            .collect();
        keys.sort_unstable();
        if keys.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::ConfigInvalid(
                "duplicate (marker, corner) correspondence".into(),
            ));
        }
        Ok(Self { items })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Correspondence> {
        self.items.iter()
    }

    pub fn as_slice(&self) -> &[Correspondence] {
        &self.items
    }

    /// Subset selected by a boolean mask.
    pub fn masked(&self, mask: &[bool]) -> Correspondences {
        Correspondences {
            items: self
                .items
                .iter()
                .zip(mask)
                .filter(|(_, &keep)| keep)
                .map(|(c, _)| *c)
                .collect(),
        }
    }

    fn world(&self) -> Vec<Point2<f64>> {
        self.items.iter().map(|c| c.world_mm).collect()
    }

    fn image(&self) -> Vec<Point2<f64>> {
        self.items.iter().map(|c| c.image_px).collect()
    }
}

/// Pair every detected corner with its world coordinates from the board
/// layout. Requires at least two markers (eight corners).
pub fn build_correspondences(
    detections: &[MarkerDetection],
    spec: &BoardSpec,
) -> Result<Correspondences> {
    if detections.len() < 2 {
        return Err(Error::InsufficientCorrespondences {
            got: detections.len() * 4,
            need: 8,
        });
    }
    let mut items = Vec::with_capacity(detections.len() * 4);
    for det in detections {
        let world = spec.corner_coords(det.id)?;
        for (idx, (&w, &i)) in world.iter().zip(det.corners_px.iter()).enumerate() {
            items.push(Correspondence {
                world_mm: w,
                image_px: i,
                marker_id: det.id,
                corner_index: idx as u8,
            });
        }
    }
    Correspondences::new(items)
}

/// Similarity transform taking the point set to zero centroid and mean
/// distance sqrt(2).
fn hartley_normalization(points: &[Point2<f64>]) -> Result<Matrix3<f64>> {
    let n = points.len() as f64;
    let cx = points.iter().map(|p| p.x).sum::<f64>() / n;
    let cy = points.iter().map(|p| p.y).sum::<f64>() / n;
    let mean_dist = points
        .iter()
        .map(|p| ((p.x - cx).powi(2) + (p.y - cy).powi(2)).sqrt())
        .sum::<f64>()
        / n;
    if mean_dist < 1e-12 {
        return Err(Error::DegenerateConfiguration("all points coincide".into()));
    }
    let s = 2f64.sqrt() / mean_dist;
    Ok(Matrix3::new(s, 0.0, -s * cx, 0.0, s, -s * cy, 0.0, 0.0, 1.0))
}

/// Normalized DLT from raw point slices.
pub fn dlt_from_points(world: &[Point2<f64>], image: &[Point2<f64>]) -> Result<PlaneHomography> {
    let n = world.len();
    if n < 4 || image.len() != n {
        return Err(Error::InsufficientCorrespondences { got: n, need: 4 });
    }
    let t_w = hartley_normalization(world)?;
    let t_i = hartley_normalization(image)?;
    let norm = |t: &Matrix3<f64>, p: &Point2<f64>| {
        Point2::new(t[(0, 0)] * p.x + t[(0, 2)], t[(1, 1)] * p.y + t[(1, 2)])
    };

    // Design matrix rows come in pairs; pad to 9 rows so the SVD always
    // exposes the null space.
    let rows = (2 * n).max(9);
    let mut a = DMatrix::<f64>::zeros(rows, 9);
    for (i, (pw, pi)) in world.iter().zip(image.iter()).enumerate() {
        let w = norm(&t_w, pw);
        let q = norm(&t_i, pi);
        let r0 = 2 * i;
        let r1 = 2 * i + 1;
        a[(r0, 0)] = -w.x;
        a[(r0, 1)] = -w.y;
        a[(r0, 2)] = -1.0;
        a[(r0, 6)] = q.x * w.x;
        a[(r0, 7)] = q.x * w.y;
        a[(r0, 8)] = q.x;
        a[(r1, 3)] = -w.x;
        a[(r1, 4)] = -w.y;
        a[(r1, 5)] = -1.0;
        a[(r1, 6)] = q.y * w.x;
        a[(r1, 7)] = q.y * w.y;
        a[(r1, 8)] = q.y;
    }

    let svd = a.svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::DegenerateConfiguration("svd failed".into()))?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| {
        svd.singular_values[i]
            .partial_cmp(&svd.singular_values[j])
            .unwrap()
    });
    let smallest = order[0];
    let second = order[1];
    let largest = *order.last().unwrap();
    if svd.singular_values[second] < 1e-12 * svd.singular_values[largest].max(1e-300) {
        return Err(Error::DegenerateConfiguration(
            "design matrix is rank deficient".into(),
        ));
    }

    let h_vec = v_t.row(smallest);
    let h_norm = Matrix3::new(
        h_vec[0], h_vec[1], h_vec[2], h_vec[3], h_vec[4], h_vec[5], h_vec[6], h_vec[7], h_vec[8],
    );
    let t_i_inv = t_i
        .try_inverse()
        .ok_or_else(|| Error::DegenerateConfiguration("normalization singular".into()))?;
    PlaneHomography::new(t_i_inv * h_norm * t_w)
}

/// Normalized DLT over a correspondence set.
pub fn estimate_homography_dlt(corr: &Correspondences) -> Result<PlaneHomography> {
    dlt_from_points(&corr.world(), &corr.image())
}

fn triple_collinear(a: Point2<f64>, b: Point2<f64>, c: Point2<f64>) -> bool {
    let area2 = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
    let scale = (b - a).norm() * (c - a).norm();
    area2.abs() <= 1e-9 * scale.max(1e-12)
}

fn sample_has_degenerate_world(corr: &[Correspondence], idx: &[usize; 4]) -> bool {
    for skip in 0..4 {
        let pts: Vec<Point2<f64>> = idx
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != skip)
            .map(|(_, &k)| corr[k].world_mm)
            .collect();
        if triple_collinear(pts[0], pts[1], pts[2]) {
            return true;
        }
    }
    false
}

/// Four-point RANSAC with adaptive iteration count; the winning
/// consensus set is re-fit with the full DLT. Deterministic per seed.
pub fn estimate_homography_ransac(
    corr: &Correspondences,
    threshold_px: f64,
    confidence: f64,
    seed: u64,
) -> Result<(PlaneHomography, Vec<bool>)> {
    let n = corr.len();
    if n < 4 {
        return Err(Error::InsufficientCorrespondences { got: n, need: 4 });
    }
    if !(0.0 < confidence && confidence < 1.0) {
        return Err(Error::ConfigInvalid(format!(
            "confidence {confidence} outside (0, 1)"
        )));
    }
    const MAX_ITERS: u64 = 10_000;
    let items = corr.as_slice();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best_mask: Vec<bool> = Vec::new();
    let mut best_count = 0usize;
    let mut best_err = f64::INFINITY;
    let mut needed = MAX_ITERS;
    let mut iter = 0u64;

    while iter < needed {
        iter += 1;
        let mut idx = [0usize; 4];
        let mut filled = 0;
        while filled < 4 {
            let cand = rng.random_range(0..n);
            if !idx[..filled].contains(&cand) {
                idx[filled] = cand;
                filled += 1;
            }
        }
        if sample_has_degenerate_world(items, &idx) {
            continue;
        }
        let world: Vec<Point2<f64>> = idx.iter().map(|&k| items[k].world_mm).collect();
        let image: Vec<Point2<f64>> = idx.iter().map(|&k| items[k].image_px).collect();
        let Ok(h) = dlt_from_points(&world, &image) else {
            continue;
        };

        let mut mask = vec![false; n];
        let mut count = 0usize;
        let mut err_sum = 0.0;
        for (i, c) in items.iter().enumerate() {
            let p = h.apply(c.world_mm);
            let e = (p - c.image_px).norm();
            if e.is_finite() && e < threshold_px {
                mask[i] = true;
                count += 1;
                err_sum += e;
            }
        }
        if count > best_count || (count == best_count && err_sum < best_err) {
            best_count = count;
            best_err = err_sum;
            best_mask = mask;
            if count == n {
                break;
            }
            let inlier_ratio = count as f64 / n as f64;
            let p_outlier_free = inlier_ratio.powi(4);
            if p_outlier_free > 1e-12 {
                let est = ((1.0 - confidence).ln() / (1.0 - p_outlier_free).ln()).ceil();
                needed = (est as u64).clamp(iter, MAX_ITERS);
            }
        }
    }

    if best_count < 4 {
        return Err(Error::NoConsensus { best: best_count });
    }
    let inliers = corr.masked(&best_mask);
    let h = estimate_homography_dlt(&inliers)?;
    let final_mask: Vec<bool> = items
        .iter()
        .map(|c| {
            let e = (h.apply(c.world_mm) - c.image_px).norm();
            e.is_finite() && e < threshold_px
        })
        .collect();
    Ok((h, final_mask))
}

/// Result of the nonlinear refinement.
#[derive(Debug, Clone)]
pub struct RefineOutcome {
    pub intrinsics: CameraIntrinsics,
    pub homography: PlaneHomography,
    pub rms_px: f64,
    pub iterations: usize,
    /// Root-mean-square reprojection error after each accepted step,
    /// starting with the initial state. Non-increasing by construction.
    pub rms_history: Vec<f64>,
}

// Parameter vector layout for the refiner: [f, k1, k2, h00..h21],
// h22 pinned at 1.
const P_F: usize = 0;
const P_K1: usize = 1;
const P_K2: usize = 2;
const P_H: usize = 3;

struct ResidualModel<'a> {
    corr: &'a [Correspondence],
    cx: f64,
    cy: f64,
}

impl ResidualModel<'_> {
    fn project(&self, p: &DVector<f64>, w: Point2<f64>) -> (f64, f64) {
        let f = p[P_F];
        let (k1, k2) = (p[P_K1], p[P_K2]);
        let d = p[P_H + 6] * w.x + p[P_H + 7] * w.y + 1.0;
        let uh = (p[P_H] * w.x + p[P_H + 1] * w.y + p[P_H + 2]) / d;
        let vh = (p[P_H + 3] * w.x + p[P_H + 4] * w.y + p[P_H + 5]) / d;
        let a = uh - self.cx;
        let b = vh - self.cy;
        let r2 = (a * a + b * b) / (f * f);
        let s = 1.0 + k1 * r2 + k2 * r2 * r2;
        (self.cx + a * s, self.cy + b * s)
    }

    fn residuals(&self, p: &DVector<f64>) -> DVector<f64> {
        let mut r = DVector::zeros(2 * self.corr.len());
        for (i, c) in self.corr.iter().enumerate() {
            let (u, v) = self.project(p, c.world_mm);
            r[2 * i] = u - c.image_px.x;
            r[2 * i + 1] = v - c.image_px.y;
        }
        r
    }

    fn jacobian(&self, p: &DVector<f64>) -> DMatrix<f64> {
        let mut j = DMatrix::zeros(2 * self.corr.len(), 11);
        let f = p[P_F];
        let (k1, k2) = (p[P_K1], p[P_K2]);
        for (i, c) in self.corr.iter().enumerate() {
            let w = c.world_mm;
            let d = p[P_H + 6] * w.x + p[P_H + 7] * w.y + 1.0;
            let uh = (p[P_H] * w.x + p[P_H + 1] * w.y + p[P_H + 2]) / d;
            let vh = (p[P_H + 3] * w.x + p[P_H + 4] * w.y + p[P_H + 5]) / d;
            let a = uh - self.cx;
            let b = vh - self.cy;
            let r2 = (a * a + b * b) / (f * f);
            let s = 1.0 + k1 * r2 + k2 * r2 * r2;
            let ds_dr2 = k1 + 2.0 * k2 * r2;

            // Direct parameters.
            let ds_df = ds_dr2 * (-2.0 * r2 / f);
            j[(2 * i, P_F)] = a * ds_df;
            j[(2 * i + 1, P_F)] = b * ds_df;
            j[(2 * i, P_K1)] = a * r2;
            j[(2 * i + 1, P_K1)] = b * r2;
            j[(2 * i, P_K2)] = a * r2 * r2;
            j[(2 * i + 1, P_K2)] = b * r2 * r2;

            // Through the undistorted projection (uh, vh).
            let ds_duh = ds_dr2 * 2.0 * a / (f * f);
            let ds_dvh = ds_dr2 * 2.0 * b / (f * f);
            let du_duh = s + a * ds_duh;
            let du_dvh = a * ds_dvh;
            let dv_duh = b * ds_duh;
            let dv_dvh = s + b * ds_dvh;

            let duh_dh = [
                w.x / d,
                w.y / d,
                1.0 / d,
                0.0,
                0.0,
                0.0,
                -uh * w.x / d,
                -uh * w.y / d,
            ];
            let dvh_dh = [
                0.0,
                0.0,
                0.0,
                w.x / d,
                w.y / d,
                1.0 / d,
                -vh * w.x / d,
                -vh * w.y / d,
            ];
            for k in 0..8 {
                j[(2 * i, P_H + k)] = du_duh * duh_dh[k] + du_dvh * dvh_dh[k];
                j[(2 * i + 1, P_H + k)] = dv_duh * duh_dh[k] + dv_dvh * dvh_dh[k];
            }
        }
        j
    }
}

/// Levenberg-Marquardt minimization of the reprojection error over
/// `{f, k1, k2, H}`. Accepted steps never increase the cost; damping
/// starts at 1e-3, divides by 10 on accept and multiplies by 10 on
/// reject. Converged when the relative cost drop falls below 1e-10.
///
/// With a free 8-dof homography the focal only enters through the
/// distortion normalization, so `(f, k1, k2)` carries an exact gauge
/// freedom `(lf, l^2 k1, l^4 k2)`. The optimizer may drift along that
/// valley; the result is re-expressed at the seeded focal length, which
/// leaves the projection function untouched.
pub fn refine_calibration(
    corr: &Correspondences,
    intrinsics0: &CameraIntrinsics,
    h0: &PlaneHomography,
) -> Result<RefineOutcome> {
    if corr.len() < 8 {
        return Err(Error::InsufficientCorrespondences {
            got: corr.len(),
            need: 8,
        });
    }
    if !intrinsics0.is_finite() || !h0.is_finite() {
        return Err(Error::InvalidCalibration(
            "non-finite initial calibration".into(),
        ));
    }
    let hm = h0.matrix();
    if hm[(2, 2)].abs() < 1e-9 {
        return Err(Error::DegenerateConfiguration(
            "homography cannot be scaled to h22 = 1".into(),
        ));
    }
    let hs = hm / hm[(2, 2)];

    let mut p = DVector::zeros(11);
    p[P_F] = 0.5 * (intrinsics0.fx + intrinsics0.fy);
    p[P_K1] = intrinsics0.k1;
    p[P_K2] = intrinsics0.k2;
    for k in 0..8 {
        p[P_H + k] = hs[(k / 3, k % 3)];
    }

    let model = ResidualModel {
        corr: corr.as_slice(),
        cx: intrinsics0.cx,
        cy: intrinsics0.cy,
    };
    let n_points = corr.len() as f64;
    let rms_of = |r: &DVector<f64>| (r.norm_squared() / n_points).sqrt();

    let mut residuals = model.residuals(&p);
    let mut cost = residuals.norm_squared();
    if !cost.is_finite() {
        return Err(Error::Diverged);
    }
    let mut rms_history = vec![rms_of(&residuals)];
    let mut lambda = 1e-3;
    let mut iterations = 0;

    'outer: for _ in 0..100 {
        iterations += 1;
        let j = model.jacobian(&p);
        let jtj = j.transpose() * &j;
        let g = j.transpose() * &residuals;

        let mut accepted = false;
        for _ in 0..25 {
            let mut a = jtj.clone();
            for d in 0..11 {
                a[(d, d)] += lambda * jtj[(d, d)].max(1e-12);
            }
            let Some(chol) = a.cholesky() else {
                lambda *= 10.0;
                continue;
            };
            let delta = chol.solve(&(-&g));
            let p_try = &p + &delta;
            let r_try = model.residuals(&p_try);
            let cost_try = r_try.norm_squared();
            if cost_try.is_finite() && cost_try < cost {
                let relative_drop = (cost - cost_try) / cost.max(1e-300);
                p = p_try;
                residuals = r_try;
                cost = cost_try;
                rms_history.push(rms_of(&residuals));
                lambda = (lambda / 10.0).max(1e-15);
                accepted = true;
                if relative_drop < 1e-10 {
                    break 'outer;
                }
                break;
            }
            lambda *= 10.0;
            if lambda > 1e14 {
                break;
            }
        }
        if !accepted {
            break;
        }
    }

    let h = Matrix3::new(
        p[P_H],
        p[P_H + 1],
        p[P_H + 2],
        p[P_H + 3],
        p[P_H + 4],
        p[P_H + 5],
        p[P_H + 6],
        p[P_H + 7],
        1.0,
    );
    if !(p[P_F] > 0.0) || !p[P_F].is_finite() {
        return Err(Error::Diverged);
    }
    // Canonical gauge: pin the reported focal at the seed value.
    let f0 = 0.5 * (intrinsics0.fx + intrinsics0.fy);
    let gauge = f0 / p[P_F];
    let k1 = p[P_K1] * gauge * gauge;
    let k2 = p[P_K2] * gauge.powi(4);
    Ok(RefineOutcome {
        intrinsics: CameraIntrinsics::new(f0, f0, intrinsics0.cx, intrinsics0.cy, k1, k2),
        homography: PlaneHomography::new(h)?,
        rms_px: *rms_history.last().unwrap(),
        iterations,
        rms_history,
    })
}

/// Diagnostic: worst relative deviation between the refiner's analytic
/// Jacobian and central finite differences of its residual function at
/// the given state (steps are relative, `1e-6 * max(1, |p|)`).
pub fn jacobian_fd_relative_error(
    corr: &Correspondences,
    intrinsics: &CameraIntrinsics,
    h: &PlaneHomography,
) -> Result<f64> {
    if corr.is_empty() {
        return Err(Error::InsufficientCorrespondences { got: 0, need: 1 });
    }
    let hm = h.matrix();
    if hm[(2, 2)].abs() < 1e-9 {
        return Err(Error::DegenerateConfiguration(
            "homography cannot be scaled to h22 = 1".into(),
        ));
    }
    let hs = hm / hm[(2, 2)];
    let mut p = DVector::zeros(11);
    p[P_F] = 0.5 * (intrinsics.fx + intrinsics.fy);
    p[P_K1] = intrinsics.k1;
    p[P_K2] = intrinsics.k2;
    for k in 0..8 {
        p[P_H + k] = hs[(k / 3, k % 3)];
    }
    let model = ResidualModel {
        corr: corr.as_slice(),
        cx: intrinsics.cx,
        cy: intrinsics.cy,
    };
    let jac = model.jacobian(&p);
    let mut worst = 0.0f64;
    for col in 0..11 {
        let step = 1e-6 * p[col].abs().max(1.0);
        let mut plus = p.clone();
        let mut minus = p.clone();
        plus[col] += step;
        minus[col] -= step;
        let fd = (model.residuals(&plus) - model.residuals(&minus)) / (2.0 * step);
        for row in 0..fd.len() {
            let a = jac[(row, col)];
            let d = fd[row];
            let denom = a.abs().max(d.abs()).max(1e-3);
            worst = worst.max((a - d).abs() / denom);
        }
    }
    Ok(worst)
}
