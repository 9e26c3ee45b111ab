//! Marker detection: adaptive thresholding, contour tracing, quad
//! extraction, bit decoding against a dictionary, sub-pixel corner
//! refinement.
//!
//! Detected corners are reported in continuous image coordinates (pixel
//! `(i, j)` is centered at `(i+0.5, j+0.5)`), ordered to match
//! `BoardSpec::corner_coords`: clockwise from the marker's canonical
//! top-left once the decode rotation has been undone.

use nalgebra::Point2;

use crate::calib::dlt_from_points;
use crate::error::{Error, Result};
use crate::pattern::MarkerDictionary;
use crate::raster::RasterImage;

/// Tunables for the detection pipeline.
#[derive(Debug, Clone)]
pub struct DetectParams {
    /// Window sizes for adaptive mean thresholding, in pixels.
    pub adaptive_windows: Vec<usize>,
    /// Threshold offset below the local mean.
    pub adaptive_offset: f64,
    /// Polygon approximation tolerance as a fraction of the contour
    /// perimeter.
    pub approx_tolerance_ratio: f64,
    /// Reject candidate quads below this perimeter.
    pub min_perimeter_px: f64,
    /// Reject candidate quads below this area.
    pub min_area_px: f64,
    /// Bit errors tolerated when matching the dictionary; `None` uses
    /// the dictionary's unique-decoding bound `(min_distance - 1) / 2`.
    pub max_correction: Option<usize>,
    /// Canonical patch resolution per marker module.
    pub cell_px: usize,
    /// Fraction of each cell skipped on every side when voting
    /// (0.2 keeps the central 60%).
    pub cell_margin: f64,
    /// Half-width of the corner refinement window.
    pub refine_window: usize,
}

impl Default for DetectParams {
    fn default() -> Self {
        Self {
            adaptive_windows: vec![15, 35, 75],
            adaptive_offset: 7.0,
            approx_tolerance_ratio: 0.03,
            min_perimeter_px: 40.0,
            min_area_px: 64.0,
            max_correction: None,
            cell_px: 8,
            cell_margin: 0.2,
            refine_window: 4,
        }
    }
}

/// One identified marker.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkerDetection {
    /// Dictionary id.
    pub id: usize,
    /// Corners in continuous image coordinates, clockwise from the
    /// marker's canonical top-left.
    pub corners_px: [Point2<f64>; 4],
    /// Clockwise quarter turns applied to the observed bits to match
    /// the stored code.
    pub decode_rotation: u8,
    /// Hamming distance between observed and stored bits.
    pub bit_errors: u32,
}

impl MarkerDetection {
    pub fn center(&self) -> Point2<f64> {
        let mut x = 0.0;
        let mut y = 0.0;
        for c in &self.corners_px {
            x += c.x;
            y += c.y;
        }
        Point2::new(x / 4.0, y / 4.0)
    }

    pub fn area(&self) -> f64 {
        shoelace_area(&self.corners_px).abs()
    }
}

/// Detect and decode all markers in an image.
pub fn detect_markers(
    image: &RasterImage,
    dict: &MarkerDictionary,
    params: &DetectParams,
) -> Vec<MarkerDetection> {
    let gray = image.to_gray();
    let integral = IntegralImage::build(&gray);
    let max_correction = params
        .max_correction
        .unwrap_or_else(|| dict.max_correction());

    let mut best: std::collections::BTreeMap<usize, MarkerDetection> =
        std::collections::BTreeMap::new();
    for &window in &params.adaptive_windows {
        let binary = integral.adaptive_threshold(&gray, window, params.adaptive_offset);
        for quad in extract_quads(&binary, gray.width(), gray.height(), params) {
            let Some(candidate) = decode_quad(&gray, &quad, dict, max_correction, params) else {
                continue;
            };
            let replace = match best.get(&candidate.id) {
                None => true,
                Some(held) => {
                    candidate.bit_errors < held.bit_errors
                        || (candidate.bit_errors == held.bit_errors
                            && candidate.area() > held.area())
                }
            };
            if replace {
                best.insert(candidate.id, candidate);
            }
        }
    }

    best.into_values()
        .map(|mut det| {
            if let Some(polished) = refine_quad_edges(&gray, &det.corners_px) {
                det.corners_px = polished;
            } else {
                for corner in det.corners_px.iter_mut() {
                    if let Ok(refined) = refine_corner(&gray, *corner, params.refine_window) {
                        *corner = refined;
                    }
                }
            }
            det
        })
        .collect()
}

/// Image gradient at a continuous position, from central differences of
/// bilinear samples.
fn gradient_at(gray: &RasterImage, p: Point2<f64>) -> (f64, f64) {
    let (x, y) = (p.x - 0.5, p.y - 0.5);
    let gx = (gray.bilinear_channel(x + 1.0, y, 0) - gray.bilinear_channel(x - 1.0, y, 0)) / 2.0;
    let gy = (gray.bilinear_channel(x, y + 1.0, 0) - gray.bilinear_channel(x, y - 1.0, 0)) / 2.0;
    (gx, gy)
}

struct EdgeLine {
    point: Point2<f64>,
    dir: nalgebra::Vector2<f64>,
}

/// Total-least-squares line through weighted points.
fn fit_line(points: &[(Point2<f64>, f64)]) -> Option<EdgeLine> {
    let wsum: f64 = points.iter().map(|(_, w)| w).sum();
    if points.len() < 3 || wsum <= 0.0 {
        return None;
    }
    let mut mx = 0.0;
    let mut my = 0.0;
    for (p, w) in points {
        mx += w * p.x;
        my += w * p.y;
    }
    mx /= wsum;
    my /= wsum;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (p, w) in points {
        let dx = p.x - mx;
        let dy = p.y - my;
        sxx += w * dx * dx;
        sxy += w * dx * dy;
        syy += w * dy * dy;
    }
    // Principal eigenvector of the 2x2 scatter matrix.
    let tr_half = (sxx + syy) / 2.0;
    let delta = ((sxx - syy) / 2.0).hypot(sxy);
    let lam = tr_half + delta;
    let dir = if sxy.abs() > 1e-12 {
        nalgebra::Vector2::new(sxy, lam - sxx)
    } else if sxx >= syy {
        nalgebra::Vector2::new(1.0, 0.0)
    } else {
        nalgebra::Vector2::new(0.0, 1.0)
    };
    let norm = dir.norm();
    if !norm.is_finite() || norm < 1e-12 {
        return None;
    }
    Some(EdgeLine {
        point: Point2::new(mx, my),
        dir: dir / norm,
    })
}

/// Sub-pixel line along one quad edge: gradient-magnitude centroids
/// across the edge at points sampled away from the corners.
fn fit_edge_line(gray: &RasterImage, a: Point2<f64>, b: Point2<f64>) -> Option<EdgeLine> {
    let len = (b - a).norm();
    if len < 6.0 {
        return None;
    }
    let dir = (b - a) / len;
    let normal = nalgebra::Vector2::new(-dir.y, dir.x);
    let margin = (0.12 * len).max(2.0);
    let span = len - 2.0 * margin;
    if span < 2.0 {
        return None;
    }
    let count = (span.floor() as usize).clamp(3, 48);
    let range = ((len / 12.0).round() as i64).clamp(1, 3);

    let mut points = Vec::with_capacity(count);
    for k in 0..count {
        let t = margin + span * (k as f64 + 0.5) / count as f64;
        let base = a + dir * t;
        let mut center = 0.0;
        let mut weight = 0.0;
        for _ in 0..2 {
            let mut wsum = 0.0;
            let mut osum = 0.0;
            for o in -range..=range {
                let offset = center + o as f64;
                let pos = base + normal * offset;
                let (gx, gy) = gradient_at(gray, pos);
                let g = gx.hypot(gy);
                wsum += g;
                osum += g * offset;
            }
            if wsum < 1e-6 {
                weight = 0.0;
                break;
            }
            center = osum / wsum;
            weight = wsum;
        }
        if weight > 0.0 && center.abs() <= range as f64 + 1.0 {
            points.push((base + normal * center, weight));
        }
    }
    fit_line(&points)
}

fn intersect_lines(l1: &EdgeLine, l2: &EdgeLine) -> Option<Point2<f64>> {
    let det = l1.dir.x * l2.dir.y - l1.dir.y * l2.dir.x;
    if det.abs() < 1e-9 {
        return None;
    }
    let dx = l2.point.x - l1.point.x;
    let dy = l2.point.y - l1.point.y;
    let t = (dx * l2.dir.y - dy * l2.dir.x) / det;
    Some(Point2::new(
        l1.point.x + t * l1.dir.x,
        l1.point.y + t * l1.dir.y,
    ))
}

/// Polish a decoded quad: fit each edge as a line and intersect
/// adjacent ones. Falls back to `None` (caller keeps coarse corners)
/// when an edge cannot be fit or a corner moves implausibly far.
fn refine_quad_edges(gray: &RasterImage, corners: &[Point2<f64>; 4]) -> Option<[Point2<f64>; 4]> {
    let mut lines = Vec::with_capacity(4);
    for i in 0..4 {
        lines.push(fit_edge_line(gray, corners[i], corners[(i + 1) % 4])?);
    }
    let mut out = *corners;
    for j in 0..4 {
        let p = intersect_lines(&lines[(j + 3) % 4], &lines[j])?;
        if (p - corners[j]).norm() > 3.0 {
            return None;
        }
        out[j] = p;
    }
    Some(out)
}

/// Sub-pixel corner location from the gradient-orthogonality criterion:
/// the point `p` minimizing `sum((grad I(q) . (q - p))^2)` over the
/// window. Flat windows (degenerate normal matrix) return `approx`
/// unchanged; the result never moves more than `window / 2` pixels.
pub fn refine_corner(
    image: &RasterImage,
    approx: Point2<f64>,
    window: usize,
) -> Result<Point2<f64>> {
    if window < 2 {
        return Err(Error::ConfigInvalid(format!(
            "refinement window {window} must be at least 2"
        )));
    }
    let gray;
    let img = if image.channels() == 1 {
        image
    } else {
        gray = image.to_gray();
        &gray
    };

    // Work on the sample lattice; convert back at the end.
    let mut px = approx.x - 0.5;
    let mut py = approx.y - 0.5;
    let w = window as f64;
    let reach = w + 1.0;
    if px - reach < 0.0
        || py - reach < 0.0
        || px + reach > (img.width() - 1) as f64
        || py + reach > (img.height() - 1) as f64
    {
        return Err(Error::WindowOutOfBounds {
            x: approx.x,
            y: approx.y,
            window,
        });
    }
    let (ox, oy) = (px, py);

    for _ in 0..5 {
        let cx = px.round() as i64;
        let cy = py.round() as i64;
        let mut a11 = 0.0;
        let mut a12 = 0.0;
        let mut a22 = 0.0;
        let mut b1 = 0.0;
        let mut b2 = 0.0;
        for qy in cy - window as i64..=cy + window as i64 {
            for qx in cx - window as i64..=cx + window as i64 {
                let gx = (img.get_or_black(qx + 1, qy, 0) as f64
                    - img.get_or_black(qx - 1, qy, 0) as f64)
                    / 2.0;
                let gy = (img.get_or_black(qx, qy + 1, 0) as f64
                    - img.get_or_black(qx, qy - 1, 0) as f64)
                    / 2.0;
                a11 += gx * gx;
                a12 += gx * gy;
                a22 += gy * gy;
                b1 += gx * gx * qx as f64 + gx * gy * qy as f64;
                b2 += gx * gy * qx as f64 + gy * gy * qy as f64;
            }
        }
        let det = a11 * a22 - a12 * a12;
        if det.abs() < 1e-9 * (a11 + a22).max(1.0).powi(2) {
            break; // flat or single-edge window
        }
        let nx = (a22 * b1 - a12 * b2) / det;
        let ny = (a11 * b2 - a12 * b1) / det;

        // Never leave the neighborhood of the initial guess.
        let max_move = w / 2.0;
        let dx = nx - ox;
        let dy = ny - oy;
        let dist = (dx * dx + dy * dy).sqrt();
        let (nx, ny) = if dist > max_move {
            (ox + dx / dist * max_move, oy + dy / dist * max_move)
        } else {
            (nx, ny)
        };
        let moved = ((nx - px).powi(2) + (ny - py).powi(2)).sqrt();
        px = nx;
        py = ny;
        if moved < 1e-3 {
            break;
        }
    }
    Ok(Point2::new(px + 0.5, py + 0.5))
}

// ---------------------------------------------------------------------------
// Thresholding

struct IntegralImage {
    width: usize,
    height: usize,
    sums: Vec<u64>,
}

impl IntegralImage {
    fn build(gray: &RasterImage) -> Self {
        let (w, h) = (gray.width(), gray.height());
        let mut sums = vec![0u64; (w + 1) * (h + 1)];
        for y in 0..h {
            let mut row = 0u64;
            for x in 0..w {
                row += gray.get(x, y, 0) as u64;
                sums[(y + 1) * (w + 1) + x + 1] = sums[y * (w + 1) + x + 1] + row;
            }
        }
        Self {
            width: w,
            height: h,
            sums,
        }
    }

    fn box_sum(&self, x0: usize, y0: usize, x1: usize, y1: usize) -> u64 {
        let w = self.width + 1;
        self.sums[y1 * w + x1] + self.sums[y0 * w + x0]
            - self.sums[y0 * w + x1]
            - self.sums[y1 * w + x0]
    }

    /// 1 where the pixel is darker than the local mean by `offset`.
    fn adaptive_threshold(&self, gray: &RasterImage, window: usize, offset: f64) -> Vec<u8> {
        let (w, h) = (self.width, self.height);
        let half = (window / 2).max(1);
        let mut out = vec![0u8; w * h];
        for y in 0..h {
            let y0 = y.saturating_sub(half);
            let y1 = (y + half + 1).min(h);
            for x in 0..w {
                let x0 = x.saturating_sub(half);
                let x1 = (x + half + 1).min(w);
                let area = ((x1 - x0) * (y1 - y0)) as f64;
                let mean = self.box_sum(x0, y0, x1, y1) as f64 / area;
                if (gray.get(x, y, 0) as f64) < mean - offset {
                    out[y * w + x] = 1;
                }
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Contours and quads

/// Quadrilateral candidate in continuous coordinates, clockwise.
#[derive(Debug, Clone)]
struct Quad {
    corners: [Point2<f64>; 4],
}

// Clockwise Moore neighborhood with y pointing down.
const DIRS: [(i64, i64); 8] = [
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
];

fn dir_index(from: (i64, i64), to: (i64, i64)) -> usize {
    let d = (to.0 - from.0, to.1 - from.1);
    DIRS.iter().position(|&v| v == d).expect("adjacent pixels")
}

fn extract_quads(binary: &[u8], w: usize, h: usize, params: &DetectParams) -> Vec<Quad> {
    let mut labels = vec![0u32; w * h];
    let mut next_label = 0u32;
    let mut quads = Vec::new();
    let mut stack = Vec::new();

    for start_y in 0..h {
        for start_x in 0..w {
            let idx = start_y * w + start_x;
            if binary[idx] == 0 || labels[idx] != 0 {
                continue;
            }
            next_label += 1;
            let label = next_label;
            // Flood-fill the component (8-connected).
            let mut area = 0usize;
            stack.clear();
            stack.push((start_x as i64, start_y as i64));
            labels[idx] = label;
            while let Some((x, y)) = stack.pop() {
                area += 1;
                for &(dx, dy) in &DIRS {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                        continue;
                    }
                    let nidx = ny as usize * w + nx as usize;
                    if binary[nidx] == 1 && labels[nidx] == 0 {
                        labels[nidx] = label;
                        stack.push((nx, ny));
                    }
                }
            }
            if (area as f64) < params.min_area_px.min(16.0) {
                continue;
            }
            let contour = trace_boundary(&labels, w, h, label, (start_x as i64, start_y as i64));
            if let Some(quad) = quad_from_contour(&contour, w, h, params) {
                quads.push(quad);
            }
        }
    }
    quads
}

/// Moore-neighbor boundary trace, clockwise, starting from the
/// component's topmost-leftmost pixel.
fn trace_boundary(
    labels: &[u32],
    w: usize,
    h: usize,
    label: u32,
    start: (i64, i64),
) -> Vec<(i64, i64)> {
    let is_fg = |x: i64, y: i64| {
        x >= 0
            && y >= 0
            && x < w as i64
            && y < h as i64
            && labels[y as usize * w + x as usize] == label
    };
    let mut contour = vec![start];
    let initial_back = (start.0 - 1, start.1);
    let mut p = start;
    let mut back = initial_back;
    let cap = 4 * w * h + 16;

    for _ in 0..cap {
        let back_dir = dir_index(p, back);
        let mut prev = back;
        let mut found = None;
        for i in 1..=8 {
            let d = (back_dir + i) % 8;
            let q = (p.0 + DIRS[d].0, p.1 + DIRS[d].1);
            if is_fg(q.0, q.1) {
                found = Some(q);
                break;
            }
            prev = q;
        }
        let Some(q) = found else {
            break; // isolated pixel
        };
        if q == start && prev == initial_back && contour.len() > 1 {
            break; // closed the loop entering the same way
        }
        contour.push(q);
        back = prev;
        p = q;
    }
    contour
}

fn polyline_length(points: &[Point2<f64>], closed: bool) -> f64 {
    let mut len = 0.0;
    for w in points.windows(2) {
        len += (w[1] - w[0]).norm();
    }
    if closed && points.len() > 1 {
        len += (points[0] - points[points.len() - 1]).norm();
    }
    len
}

fn perpendicular_distance(p: Point2<f64>, a: Point2<f64>, b: Point2<f64>) -> f64 {
    let ab = b - a;
    let len = ab.norm();
    if len < 1e-12 {
        return (p - a).norm();
    }
    ((p.x - a.x) * ab.y - (p.y - a.y) * ab.x).abs() / len
}

/// Iterative Douglas-Peucker on an open chain, endpoints kept.
fn simplify_chain(points: &[Point2<f64>], eps: f64) -> Vec<Point2<f64>> {
    if points.len() < 3 {
        return points.to_vec();
    }
    let mut keep = vec![false; points.len()];
    keep[0] = true;
    keep[points.len() - 1] = true;
    let mut stack = vec![(0usize, points.len() - 1)];
    while let Some((lo, hi)) = stack.pop() {
        if hi <= lo + 1 {
            continue;
        }
        let (mut best, mut best_d) = (lo, -1.0);
        for i in lo + 1..hi {
            let d = perpendicular_distance(points[i], points[lo], points[hi]);
            if d > best_d {
                best_d = d;
                best = i;
            }
        }
        if best_d > eps {
            keep[best] = true;
            stack.push((lo, best));
            stack.push((best, hi));
        }
    }
    points
        .iter()
        .zip(&keep)
        .filter(|(_, &k)| k)
        .map(|(&p, _)| p)
        .collect()
}

/// Closed-curve polygon approximation: split at the two mutually
/// farthest samples, simplify both chains.
fn approximate_polygon(contour: &[Point2<f64>], eps: f64) -> Vec<Point2<f64>> {
    let n = contour.len();
    if n < 3 {
        return contour.to_vec();
    }
    let a = (0..n)
        .max_by(|&i, &j| {
            let di = (contour[i] - contour[0]).norm();
            let dj = (contour[j] - contour[0]).norm();
            di.partial_cmp(&dj).unwrap()
        })
        .unwrap();
    let b = (0..n)
        .max_by(|&i, &j| {
            let di = (contour[i] - contour[a]).norm();
            let dj = (contour[j] - contour[a]).norm();
            di.partial_cmp(&dj).unwrap()
        })
        .unwrap();
    let (a, b) = (a.min(b), a.max(b));
    if a == b {
        return vec![contour[a]];
    }
    let chain_one: Vec<Point2<f64>> = contour[a..=b].to_vec();
    let mut chain_two: Vec<Point2<f64>> = contour[b..].to_vec();
    chain_two.extend_from_slice(&contour[..=a]);

    let mut poly = simplify_chain(&chain_one, eps);
    poly.pop();
    let mut second = simplify_chain(&chain_two, eps);
    second.pop();
    poly.extend(second);
    poly
}

fn shoelace_area(points: &[Point2<f64>]) -> f64 {
    let n = points.len();
    let mut acc = 0.0;
    for i in 0..n {
        let a = points[i];
        let b = points[(i + 1) % n];
        acc += a.x * b.y - b.x * a.y;
    }
    acc / 2.0
}

fn is_convex_clockwise(corners: &[Point2<f64>; 4]) -> bool {
    for i in 0..4 {
        let a = corners[i];
        let b = corners[(i + 1) % 4];
        let c = corners[(i + 2) % 4];
        let cross = (b.x - a.x) * (c.y - b.y) - (b.y - a.y) * (c.x - b.x);
        if cross <= 0.0 {
            return false;
        }
    }
    true
}

fn quad_from_contour(
    contour: &[(i64, i64)],
    w: usize,
    h: usize,
    params: &DetectParams,
) -> Option<Quad> {
    if contour.len() < 4 {
        return None;
    }
    // Clipped blobs cannot yield reliable corners.
    if contour
        .iter()
        .any(|&(x, y)| x <= 0 || y <= 0 || x >= w as i64 - 1 || y >= h as i64 - 1)
    {
        return None;
    }
    let points: Vec<Point2<f64>> = contour
        .iter()
        .map(|&(x, y)| Point2::new(x as f64 + 0.5, y as f64 + 0.5))
        .collect();
    let perimeter = polyline_length(&points, true);
    if perimeter < params.min_perimeter_px {
        return None;
    }

    let mut eps = params.approx_tolerance_ratio * perimeter;
    let mut poly = approximate_polygon(&points, eps);
    for _ in 0..2 {
        if poly.len() <= 4 {
            break;
        }
        eps *= 1.5;
        poly = approximate_polygon(&points, eps);
    }
    if poly.len() != 4 {
        return None;
    }

    let mut corners = [poly[0], poly[1], poly[2], poly[3]];
    // Canonical clockwise order (y-down screen sense).
    if shoelace_area(&corners) < 0.0 {
        corners = [corners[0], corners[3], corners[2], corners[1]];
    }
    if !is_convex_clockwise(&corners) {
        return None;
    }
    if shoelace_area(&corners).abs() < params.min_area_px {
        return None;
    }
    Some(Quad { corners })
}

// ---------------------------------------------------------------------------
// Decoding

fn otsu_threshold(values: &[u8]) -> Option<u8> {
    let mut hist = [0u64; 256];
    for &v in values {
        hist[v as usize] += 1;
    }
    let total: u64 = values.len() as u64;
    let sum_all: f64 = hist
        .iter()
        .enumerate()
        .map(|(v, &c)| v as f64 * c as f64)
        .sum();
    let mut best: Option<(f64, u8)> = None;
    let mut w0 = 0u64;
    let mut sum0 = 0.0;
    for t in 0..255u16 {
        w0 += hist[t as usize];
        sum0 += t as f64 * hist[t as usize] as f64;
        let w1 = total - w0;
        if w0 == 0 || w1 == 0 {
            continue;
        }
        let m0 = sum0 / w0 as f64;
        let m1 = (sum_all - sum0) / w1 as f64;
        let between = w0 as f64 * w1 as f64 * (m0 - m1).powi(2);
        if best.map_or(true, |(b, _)| between > b) {
            best = Some((between, t as u8));
        }
    }
    best.map(|(_, t)| t)
}

fn decode_quad(
    gray: &RasterImage,
    quad: &Quad,
    dict: &MarkerDictionary,
    max_correction: usize,
    params: &DetectParams,
) -> Option<MarkerDetection> {
    let n = dict.bit_size();
    let modules = n + 2;
    let cell = params.cell_px;
    let size = (modules * cell) as f64;

    let patch_corners = [
        Point2::new(0.0, 0.0),
        Point2::new(size, 0.0),
        Point2::new(size, size),
        Point2::new(0.0, size),
    ];
    let h = dlt_from_points(&patch_corners, &quad.corners).ok()?;

    let side = modules * cell;
    let mut patch = vec![0u8; side * side];
    for j in 0..side {
        for i in 0..side {
            let p = h.apply(Point2::new(i as f64 + 0.5, j as f64 + 0.5));
            let v = gray.bilinear_channel(p.x - 0.5, p.y - 0.5, 0);
            patch[j * side + i] = v.round().clamp(0.0, 255.0) as u8;
        }
    }
    let threshold = otsu_threshold(&patch)?;

    // Majority vote over the central region of each cell.
    let lo = (params.cell_margin * cell as f64 - 0.5).ceil().max(0.0) as usize;
    let hi = ((1.0 - params.cell_margin) * cell as f64 - 0.5).floor() as usize;
    if hi < lo {
        return None;
    }
    let mut cells = vec![false; modules * modules];
    for cj in 0..modules {
        for ci in 0..modules {
            let mut white = 0usize;
            let mut count = 0usize;
            for kj in lo..=hi {
                for ki in lo..=hi {
                    let v = patch[(cj * cell + kj) * side + ci * cell + ki];
                    if v > threshold {
                        white += 1;
                    }
                    count += 1;
                }
            }
            cells[cj * modules + ci] = white * 2 > count;
        }
    }

    // The one-module border must be entirely black.
    for k in 0..modules {
        if cells[k]
            || cells[(modules - 1) * modules + k]
            || cells[k * modules]
            || cells[k * modules + modules - 1]
        {
            return None;
        }
    }

    let mut bits = 0u64;
    for r in 0..n {
        for c in 0..n {
            if cells[(r + 1) * modules + c + 1] {
                bits |= 1 << (r * n + c);
            }
        }
    }

    let (id, errors, rotation) = dict.decode(bits, max_correction)?;
    // Undo the decode rotation so corner j faces world corner j.
    let o = &quad.corners;
    let k = rotation as usize;
    let corners = [
        o[(3 * k) % 4],
        o[(1 + 3 * k) % 4],
        o[(2 + 3 * k) % 4],
        o[(3 + 3 * k) % 4],
    ];
    Some(MarkerDetection {
        id,
        corners_px: corners,
        decode_rotation: rotation,
        bit_errors: errors,
    })
}
