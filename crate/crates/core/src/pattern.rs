//! Fiducial dictionary synthesis, board layout and board rendering.
//!
//! Markers are square binary tags: a one-module black border around an
//! `n x n` data-bit grid. Codes are stored as `u64` bit sets in row-major
//! order (bit `r*n + c`, bit value 1 = white module). The printable board
//! is a uniform grid of markers; each marker sits centered in a cell of
//! `square_length_mm * (1 + margin_ratio)` so that the white quiet zone
//! between two markers is `square_length_mm * margin_ratio`.

use nalgebra::Point2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::RasterImage;

/// Cap on candidate draws during greedy dictionary synthesis.
pub const DICTIONARY_ATTEMPT_BUDGET: u64 = 1_000_000;

/// Rotate a row-major `dim x dim` bit set 90 degrees clockwise.
pub fn rotate_code_cw(bits: u64, dim: usize) -> u64 {
    let mut out = 0u64;
    for r in 0..dim {
        for c in 0..dim {
            if bits >> (r * dim + c) & 1 != 0 {
                let (nr, nc) = (c, dim - 1 - r);
                out |= 1 << (nr * dim + nc);
            }
        }
    }
    out
}

/// Set of marker codes with a guaranteed rotation-robust Hamming
/// separation between (and within) codes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarkerDictionary {
    bit_size: usize,
    codes: Vec<u64>,
    min_distance: usize,
}

impl MarkerDictionary {
    /// Greedy-random synthesis: draw candidate codes from a seeded
    /// generator and keep those that stay `min_distance` away from every
    /// accepted code under all four rotations (and from their own
    /// non-identity rotations, so orientation is never ambiguous).
    pub fn generate(
        bit_size: usize,
        count: usize,
        min_distance: usize,
        seed: u64,
    ) -> Result<Self> {
        if bit_size < 3 || bit_size > 8 {
            return Err(Error::ConfigInvalid(format!(
                "bit_size {bit_size} outside supported range 3..=8"
            )));
        }
        if count == 0 || min_distance == 0 {
            return Err(Error::ConfigInvalid(
                "count and min_distance must be at least 1".into(),
            ));
        }
        let n_bits = bit_size * bit_size;
        let mask = if n_bits == 64 {
            u64::MAX
        } else {
            (1u64 << n_bits) - 1
        };

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut codes: Vec<u64> = Vec::with_capacity(count);
        let mut rotations: Vec<[u64; 4]> = Vec::with_capacity(count);
        let mut attempts = 0u64;

        while codes.len() < count {
            if attempts >= DICTIONARY_ATTEMPT_BUDGET {
                return Err(Error::UnsatisfiableDictionary {
                    placed: codes.len(),
                    requested: count,
                    attempts,
                });
            }
            attempts += 1;
            let candidate = rng.random::<u64>() & mask;
            if !self_rotation_ok(candidate, bit_size, min_distance) {
                continue;
            }
            // d(candidate, rot^k(code)) covers all relative rotations of
            // the pair, so one direction suffices.
            let clashes = rotations.iter().any(|rots| {
                rots.iter()
                    .any(|&r| (r ^ candidate).count_ones() < min_distance as u32)
            });
            if clashes {
                continue;
            }
            rotations.push(all_rotations(candidate, bit_size));
            codes.push(candidate);
        }

        Ok(Self {
            bit_size,
            codes,
            min_distance,
        })
    }

    /// Rebuild a dictionary from stored codes, recomputing the actual
    /// rotation-robust separation. Used when loading a board file.
    pub fn from_codes(bit_size: usize, codes: Vec<u64>) -> Result<Self> {
        if bit_size < 3 || bit_size > 8 {
            return Err(Error::ConfigInvalid(format!(
                "bit_size {bit_size} outside supported range 3..=8"
            )));
        }
        if codes.is_empty() {
            return Err(Error::ConfigInvalid("dictionary has no codes".into()));
        }
        let n_bits = bit_size * bit_size;
        let mask = if n_bits == 64 {
            u64::MAX
        } else {
            (1u64 << n_bits) - 1
        };
        if let Some(bad) = codes.iter().position(|&c| c & !mask != 0) {
            return Err(Error::ConfigInvalid(format!(
                "code {bad} uses bits beyond {bit_size}x{bit_size}"
            )));
        }
        let min_distance = min_rotation_distance(&codes, bit_size);
        if min_distance == 0 {
            return Err(Error::ConfigInvalid(
                "codes are not rotation-distinct".into(),
            ));
        }
        Ok(Self {
            bit_size,
            codes,
            min_distance,
        })
    }

    pub fn bit_size(&self) -> usize {
        self.bit_size
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn min_distance(&self) -> usize {
        self.min_distance
    }

    pub fn codes(&self) -> &[u64] {
        &self.codes
    }

    pub fn code(&self, id: usize) -> Result<u64> {
        self.codes.get(id).copied().ok_or(Error::IdOutOfRange {
            id,
            len: self.codes.len(),
        })
    }

    /// Bit of code `id` at data-grid row `r`, column `c` (1 = white).
    pub fn bit(&self, id: usize, r: usize, c: usize) -> Result<bool> {
        Ok(self.code(id)? >> (r * self.bit_size + c) & 1 != 0)
    }

    /// Largest error count that still decodes uniquely.
    pub fn max_correction(&self) -> usize {
        (self.min_distance - 1) / 2
    }

    /// Match observed bits against the dictionary under all four
    /// rotations, tolerating up to `max_errors` bit flips. Returns
    /// `(id, bit_errors, rotation)` where rotating the observation
    /// `rotation` times clockwise yields the stored code.
    pub fn decode(&self, observed: u64, max_errors: usize) -> Option<(usize, u32, u8)> {
        let mut best: Option<(usize, u32, u8)> = None;
        let mut obs = observed;
        for rot in 0..4u8 {
            for (id, &code) in self.codes.iter().enumerate() {
                let errs = (obs ^ code).count_ones();
                if errs <= max_errors as u32 && best.map_or(true, |(_, be, _)| errs < be) {
                    best = Some((id, errs, rot));
                }
            }
            obs = rotate_code_cw(obs, self.bit_size);
        }
        best
    }
}

fn all_rotations(code: u64, dim: usize) -> [u64; 4] {
    let r1 = rotate_code_cw(code, dim);
    let r2 = rotate_code_cw(r1, dim);
    let r3 = rotate_code_cw(r2, dim);
    [code, r1, r2, r3]
}

fn self_rotation_ok(code: u64, dim: usize, min_distance: usize) -> bool {
    let rots = all_rotations(code, dim);
    rots[1..]
        .iter()
        .all(|&r| (r ^ code).count_ones() >= min_distance as u32)
}

/// Exhaustive minimum of all pairwise-rotation and self-rotation Hamming
/// distances of a code set.
pub fn min_rotation_distance(codes: &[u64], dim: usize) -> usize {
    let mut min = u32::MAX;
    let rotation_sets: Vec<[u64; 4]> = codes.iter().map(|&c| all_rotations(c, dim)).collect();
    for (i, rots_i) in rotation_sets.iter().enumerate() {
        for &r in &rots_i[1..] {
            min = min.min((r ^ rots_i[0]).count_ones());
        }
        for rots_j in rotation_sets.iter().skip(i + 1) {
            for &r in rots_j.iter() {
                min = min.min((r ^ rots_i[0]).count_ones());
            }
        }
    }
    min as usize
}

/// Physical layout of the printed pattern: a `rows x cols` grid of
/// markers, world coordinates in millimeters, +X right, +Y down, origin
/// at the board's top-left corner.
#[derive(Debug, Clone, PartialEq)]
pub struct BoardSpec {
    rows: usize,
    cols: usize,
    square_length_mm: f64,
    margin_ratio: f64,
    marker_ids: Vec<usize>,
}

impl BoardSpec {
    pub fn new(
        rows: usize,
        cols: usize,
        square_length_mm: f64,
        margin_ratio: f64,
        marker_ids: Vec<usize>,
    ) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidBoard("empty grid".into()));
        }
        if !(square_length_mm > 0.0) || !square_length_mm.is_finite() {
            return Err(Error::InvalidBoard(format!(
                "square_length_mm {square_length_mm} must be positive"
            )));
        }
        if !(0.0..1.0).contains(&margin_ratio) {
            return Err(Error::InvalidBoard(format!(
                "margin_ratio {margin_ratio} outside [0, 1)"
            )));
        }
        if marker_ids.len() != rows * cols {
            return Err(Error::InvalidBoard(format!(
                "{} marker ids for a {rows}x{cols} grid",
                marker_ids.len()
            )));
        }
        let mut seen = marker_ids.clone();
        seen.sort_unstable();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidBoard("duplicate marker ids".into()));
        }
        Ok(Self {
            rows,
            cols,
            square_length_mm,
            margin_ratio,
            marker_ids,
        })
    }

    /// Grid filled with ids `0..rows*cols` in row-major order.
    pub fn with_sequential_ids(
        rows: usize,
        cols: usize,
        square_length_mm: f64,
        margin_ratio: f64,
    ) -> Result<Self> {
        Self::new(
            rows,
            cols,
            square_length_mm,
            margin_ratio,
            (0..rows * cols).collect(),
        )
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn square_length_mm(&self) -> f64 {
        self.square_length_mm
    }

    pub fn margin_ratio(&self) -> f64 {
        self.margin_ratio
    }

    pub fn marker_ids(&self) -> &[usize] {
        &self.marker_ids
    }

    /// Center-to-center spacing of adjacent markers.
    pub fn pitch_mm(&self) -> f64 {
        self.square_length_mm * (1.0 + self.margin_ratio)
    }

    pub fn board_width_mm(&self) -> f64 {
        self.cols as f64 * self.pitch_mm()
    }

    pub fn board_height_mm(&self) -> f64 {
        self.rows as f64 * self.pitch_mm()
    }

    /// Same layout rescaled so one marker square measures
    /// `square_length_mm` (the value measured off the physical print).
    pub fn with_square_length(&self, square_length_mm: f64) -> Result<Self> {
        Self::new(
            self.rows,
            self.cols,
            square_length_mm,
            self.margin_ratio,
            self.marker_ids.clone(),
        )
    }

    /// Grid position of a marker id.
    pub fn position_of(&self, marker_id: usize) -> Option<(usize, usize)> {
        self.marker_ids
            .iter()
            .position(|&id| id == marker_id)
            .map(|idx| (idx / self.cols, idx % self.cols))
    }

    /// The marker's four outer corners in world millimeters, clockwise
    /// from top-left.
    pub fn corner_coords(&self, marker_id: usize) -> Result<[Point2<f64>; 4]> {
        let (r, c) = self
            .position_of(marker_id)
            .ok_or(Error::UnknownMarker { id: marker_id })?;
        let p = self.pitch_mm();
        let s = self.square_length_mm;
        let offset = self.square_length_mm * self.margin_ratio / 2.0;
        let x0 = c as f64 * p + offset;
        let y0 = r as f64 * p + offset;
        Ok([
            Point2::new(x0, y0),
            Point2::new(x0 + s, y0),
            Point2::new(x0 + s, y0 + s),
            Point2::new(x0, y0 + s),
        ])
    }
}

/// Ideal board intensity (0 or 255) at world point `(x_mm, y_mm)`.
/// This is the one source of truth for what the printed board looks
/// like; both the raster renderer and the synthetic-scene oracle sample
/// it.
pub fn board_color_at(dict: &MarkerDictionary, spec: &BoardSpec, x_mm: f64, y_mm: f64) -> u8 {
    const WHITE: u8 = 255;
    const BLACK: u8 = 0;
    let p = spec.pitch_mm();
    let s = spec.square_length_mm();
    if x_mm < 0.0 || y_mm < 0.0 {
        return WHITE;
    }
    let c = (x_mm / p).floor() as i64;
    let r = (y_mm / p).floor() as i64;
    if c < 0 || r < 0 || c >= spec.cols() as i64 || r >= spec.rows() as i64 {
        return WHITE;
    }
    let offset = s * spec.margin_ratio() / 2.0;
    let u = x_mm - c as f64 * p - offset;
    let v = y_mm - r as f64 * p - offset;
    if u < 0.0 || v < 0.0 || u >= s || v >= s {
        return WHITE;
    }
    let modules = (dict.bit_size() + 2) as f64;
    let mi = ((u / s * modules) as usize).min(dict.bit_size() + 1);
    let mj = ((v / s * modules) as usize).min(dict.bit_size() + 1);
    if mi == 0 || mj == 0 || mi == dict.bit_size() + 1 || mj == dict.bit_size() + 1 {
        return BLACK;
    }
    let id = spec.marker_ids()[r as usize * spec.cols() + c as usize];
    match dict.bit(id, mj - 1, mi - 1) {
        Ok(true) => WHITE,
        _ => BLACK,
    }
}

/// Render the printable board: pure black/white grayscale raster of
/// `round(board_width_mm * px_per_mm) x round(board_height_mm * px_per_mm)`
/// pixels, each sampled at its center.
pub fn render_board(
    dict: &MarkerDictionary,
    spec: &BoardSpec,
    px_per_mm: f64,
) -> Result<RasterImage> {
    if !(px_per_mm > 0.0) || !px_per_mm.is_finite() {
        return Err(Error::ConfigInvalid(format!(
            "px_per_mm {px_per_mm} must be positive"
        )));
    }
    for &id in spec.marker_ids() {
        if id >= dict.len() {
            return Err(Error::IdOutOfRange {
                id,
                len: dict.len(),
            });
        }
    }
    let width = (spec.board_width_mm() * px_per_mm).round().max(1.0) as usize;
    let height = (spec.board_height_mm() * px_per_mm).round().max(1.0) as usize;
    let mut img = RasterImage::new(width, height, 1)?;
    for y in 0..height {
        for x in 0..width {
            let x_mm = (x as f64 + 0.5) / px_per_mm;
            let y_mm = (y as f64 + 0.5) / px_per_mm;
            img.set(x, y, 0, board_color_at(dict, spec, x_mm, y_mm));
        }
    }
    Ok(img)
}

/// On-disk board description: dictionary codes plus layout, enough for
/// detection and calibration to agree on world coordinates. Codes are
/// hex strings of the row-major data bits packed MSB-first.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoardFile {
    pub bit_size: usize,
    pub codes: Vec<String>,
    pub rows: usize,
    pub cols: usize,
    pub square_length_mm: f64,
    pub margin_ratio: f64,
    pub marker_ids: Vec<usize>,
}

impl BoardFile {
    pub fn pack(dict: &MarkerDictionary, spec: &BoardSpec) -> Self {
        Self {
            bit_size: dict.bit_size(),
            codes: dict
                .codes()
                .iter()
                .map(|&c| code_to_hex(c, dict.bit_size()))
                .collect(),
            rows: spec.rows(),
            cols: spec.cols(),
            square_length_mm: spec.square_length_mm(),
            margin_ratio: spec.margin_ratio(),
            marker_ids: spec.marker_ids().to_vec(),
        }
    }

    pub fn unpack(&self) -> Result<(MarkerDictionary, BoardSpec)> {
        let codes = self
            .codes
            .iter()
            .map(|hex| code_from_hex(hex, self.bit_size))
            .collect::<Result<Vec<u64>>>()?;
        let dict = MarkerDictionary::from_codes(self.bit_size, codes)?;
        let spec = BoardSpec::new(
            self.rows,
            self.cols,
            self.square_length_mm,
            self.margin_ratio,
            self.marker_ids.clone(),
        )?;
        for &id in spec.marker_ids() {
            if id >= dict.len() {
                return Err(Error::IdOutOfRange {
                    id,
                    len: dict.len(),
                });
            }
        }
        Ok((dict, spec))
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(path, json)?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

fn code_to_hex(code: u64, bit_size: usize) -> String {
    let n_bits = bit_size * bit_size;
    let n_bytes = n_bits.div_ceil(8);
    let mut bytes = vec![0u8; n_bytes];
    for k in 0..n_bits {
        if code >> k & 1 != 0 {
            bytes[k / 8] |= 1 << (7 - k % 8);
        }
    }
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn code_from_hex(hex: &str, bit_size: usize) -> Result<u64> {
    let n_bits = bit_size * bit_size;
    let n_bytes = n_bits.div_ceil(8);
    if hex.len() != n_bytes * 2 {
        return Err(Error::ConfigInvalid(format!(
            "code '{hex}' has {} hex digits, expected {}",
            hex.len(),
            n_bytes * 2
        )));
    }
    let mut code = 0u64;
    for k in 0..n_bits {
        let byte = u8::from_str_radix(&hex[k / 8 * 2..k / 8 * 2 + 2], 16)
            .map_err(|e| Error::ConfigInvalid(format!("code '{hex}': {e}")))?;
        if byte >> (7 - k % 8) & 1 != 0 {
            code |= 1 << k;
        }
    }
    Ok(code)
}

/// Default dictionary parameters: 4x4 grid, 50 codes, separation 4.
pub fn default_dictionary() -> Result<MarkerDictionary> {
    MarkerDictionary::generate(4, 50, 4, 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent brute-force oracle: bit-matrix rotations, no shared
    /// code with the u64 path above.
    fn oracle_min_distance(codes: &[u64], dim: usize) -> usize {
        fn to_matrix(code: u64, dim: usize) -> Vec<Vec<bool>> {
            (0..dim)
                .map(|r| (0..dim).map(|c| code >> (r * dim + c) & 1 != 0).collect())
                .collect()
        }
        fn rot(m: &[Vec<bool>]) -> Vec<Vec<bool>> {
            let dim = m.len();
            (0..dim)
                .map(|r| (0..dim).map(|c| m[dim - 1 - c][r]).collect())
                .collect()
        }
        fn dist(a: &[Vec<bool>], b: &[Vec<bool>]) -> usize {
            a.iter()
                .flatten()
                .zip(b.iter().flatten())
                .filter(|(x, y)| x != y)
                .count()
        }
        let mut min = usize::MAX;
        for (i, &ci) in codes.iter().enumerate() {
            let mi = to_matrix(ci, dim);
            let mut r = rot(&mi);
            for _ in 0..3 {
                min = min.min(dist(&mi, &r));
                r = rot(&r);
            }
            for &cj in codes.iter().skip(i + 1) {
                let mut mj = to_matrix(cj, dim);
                for _ in 0..4 {
                    min = min.min(dist(&mi, &mj));
                    mj = rot(&mj);
                }
            }
        }
        min
    }

    #[test]
    fn single_code_dictionary_respects_self_rotation() {
        let dict = MarkerDictionary::generate(4, 1, 1, 0).unwrap();
        assert_eq!(dict.len(), 1);
        assert!(oracle_min_distance(dict.codes(), 4) >= 1);
    }

    #[test]
    fn default_sized_dictionary_meets_separation() {
        let dict = MarkerDictionary::generate(4, 50, 4, 7).unwrap();
        assert_eq!(dict.len(), 50);
        assert!(oracle_min_distance(dict.codes(), 4) >= 4);
        assert_eq!(dict.min_distance(), 4);
        assert_eq!(dict.max_correction(), 1);
    }

    #[test]
    fn impossible_dictionary_reports_exhaustion() {
        let err = MarkerDictionary::generate(3, 600, 5, 0).unwrap_err();
        match err {
            Error::UnsatisfiableDictionary {
                placed,
                requested,
                attempts,
            } => {
                assert!(placed < 600);
                assert_eq!(requested, 600);
                assert_eq!(attempts, DICTIONARY_ATTEMPT_BUDGET);
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let a = MarkerDictionary::generate(4, 20, 3, 42).unwrap();
        let b = MarkerDictionary::generate(4, 20, 3, 42).unwrap();
        assert_eq!(a, b);
        let c = MarkerDictionary::generate(4, 20, 3, 43).unwrap();
        assert_ne!(a.codes(), c.codes());
    }

    #[test]
    fn decode_identifies_rotation() {
        let dict = MarkerDictionary::generate(4, 10, 4, 0).unwrap();
        for (id, &code) in dict.codes().iter().enumerate() {
            // Observation rotated k times counter-clockwise needs k
            // clockwise rotations to match.
            let mut obs = code;
            for k in 0..4u8 {
                let got = dict.decode(obs, dict.max_correction()).unwrap();
                assert_eq!(got, (id, 0, k));
                // One CCW turn = three CW turns.
                obs = rotate_code_cw(rotate_code_cw(rotate_code_cw(obs, 4), 4), 4);
            }
        }
    }

    #[test]
    fn decode_tolerates_bounded_errors() {
        let dict = MarkerDictionary::generate(4, 10, 4, 1).unwrap();
        let code = dict.code(3).unwrap();
        let corrupted = code ^ 0b10; // one flipped bit
        let (id, errs, rot) = dict.decode(corrupted, 1).unwrap();
        assert_eq!((id, errs, rot), (3, 1, 0));
        assert!(dict.decode(code ^ 0b11011, 1).is_none());
    }

    #[test]
    fn origin_marker_corners() {
        let spec = BoardSpec::with_sequential_ids(2, 3, 10.0, 0.0).unwrap();
        let c = spec.corner_coords(0).unwrap();
        assert_eq!(c[0], Point2::new(0.0, 0.0));
        assert_eq!(c[1], Point2::new(10.0, 0.0));
        assert_eq!(c[2], Point2::new(10.0, 10.0));
        assert_eq!(c[3], Point2::new(0.0, 10.0));
    }

    #[test]
    fn grid_marker_corners_follow_pitch() {
        // square 10, margin 0.25: pitch 12.5, quiet-zone offset 1.25.
        let spec = BoardSpec::with_sequential_ids(2, 3, 10.0, 0.25).unwrap();
        let id = spec.marker_ids()[1 * 3 + 2];
        let c = spec.corner_coords(id).unwrap();
        assert_eq!(c[0], Point2::new(26.25, 13.75));
        assert_eq!(c[1], Point2::new(36.25, 13.75));
        assert_eq!(c[2], Point2::new(36.25, 23.75));
        assert_eq!(c[3], Point2::new(26.25, 23.75));
    }

    #[test]
    fn all_corners_inside_board() {
        let spec = BoardSpec::with_sequential_ids(5, 7, 24.0, 0.25).unwrap();
        let (w, h) = (spec.board_width_mm(), spec.board_height_mm());
        for &id in spec.marker_ids() {
            for p in spec.corner_coords(id).unwrap() {
                assert!(p.x >= 0.0 && p.x <= w && p.y >= 0.0 && p.y <= h);
            }
        }
    }

    #[test]
    fn unknown_marker_is_an_error() {
        let spec = BoardSpec::with_sequential_ids(2, 2, 10.0, 0.25).unwrap();
        assert!(matches!(
            spec.corner_coords(99),
            Err(Error::UnknownMarker { id: 99 })
        ));
    }

    #[test]
    fn board_rejects_bad_layouts() {
        assert!(BoardSpec::new(2, 2, 10.0, 0.25, vec![0, 1, 2]).is_err());
        assert!(BoardSpec::new(2, 2, 10.0, 0.25, vec![0, 1, 2, 2]).is_err());
        assert!(BoardSpec::new(2, 2, 10.0, 1.0, vec![0, 1, 2, 3]).is_err());
        assert!(BoardSpec::new(2, 2, -1.0, 0.25, vec![0, 1, 2, 3]).is_err());
    }

    #[test]
    fn render_dimensions_follow_layout() {
        let dict = MarkerDictionary::generate(4, 4, 3, 0).unwrap();
        let spec = BoardSpec::with_sequential_ids(1, 1, 10.0, 0.25).unwrap();
        let img = render_board(&dict, &spec, 10.0).unwrap();
        assert_eq!((img.width(), img.height()), (125, 125));
        assert!(img.data().iter().all(|&v| v == 0 || v == 255));
        // Quiet zone at the rim, black border module inside the square.
        assert_eq!(img.get(0, 0, 0), 255);
        assert_eq!(img.get(20, 20, 0), 0);
    }

    #[test]
    fn render_scales_linearly() {
        let dict = MarkerDictionary::generate(4, 4, 3, 0).unwrap();
        let spec = BoardSpec::with_sequential_ids(2, 2, 12.0, 0.25).unwrap();
        let a = render_board(&dict, &spec, 10.0).unwrap();
        let b = render_board(&dict, &spec, 20.0).unwrap();
        assert_eq!(b.width(), 2 * a.width());
        assert_eq!(b.height(), 2 * a.height());
    }

    #[test]
    fn render_requires_known_ids() {
        let dict = MarkerDictionary::generate(4, 2, 3, 0).unwrap();
        let spec = BoardSpec::new(1, 2, 10.0, 0.25, vec![0, 5]).unwrap();
        assert!(matches!(
            render_board(&dict, &spec, 10.0),
            Err(Error::IdOutOfRange { id: 5, .. })
        ));
    }

    #[test]
    fn board_file_round_trip() {
        let dict = MarkerDictionary::generate(4, 12, 4, 0).unwrap();
        let spec = BoardSpec::with_sequential_ids(3, 4, 24.0, 0.25).unwrap();
        let file = BoardFile::pack(&dict, &spec);
        let json = serde_json::to_string(&file).unwrap();
        let parsed: BoardFile = serde_json::from_str(&json).unwrap();
        let (dict2, spec2) = parsed.unpack().unwrap();
        assert_eq!(dict2.codes(), dict.codes());
        assert_eq!(dict2.min_distance(), dict.min_distance());
        assert_eq!(spec2, spec);
    }

    #[test]
    fn hex_packing_is_msb_first() {
        // Single set bit at row 0, col 0 -> first hex byte 0x80.
        assert_eq!(code_to_hex(1, 4), "8000");
        assert_eq!(code_from_hex("8000", 4).unwrap(), 1);
        // 3x3 uses 9 bits -> 2 bytes; bit 8 is MSB of second byte.
        assert_eq!(code_to_hex(1 << 8, 3), "0080");
        assert_eq!(code_from_hex("0080", 3).unwrap(), 1 << 8);
    }
}
