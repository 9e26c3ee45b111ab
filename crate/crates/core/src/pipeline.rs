//! Batch orchestration: read the run configuration, push every image in
//! the input directory through detect -> calibrate -> rectify, write
//! rectified outputs plus a machine-readable summary, and provide the
//! artifact verification arithmetic.
//!
//! A failing image is reported as skipped with the leading token of its
//! error (`no-focal-length`, `insufficient-correspondences`, ...); the
//! batch itself never aborts on bad input files.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use nalgebra::Point2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calib::{
    build_correspondences, estimate_homography_ransac, refine_calibration, CameraIntrinsics,
};
use crate::detect::{detect_markers, DetectParams, MarkerDetection};
use crate::error::{Error, Result};
use crate::exif::{parse_exif, seed_intrinsics, seed_intrinsics_from_focal, SensorSpec};
use crate::pattern::{BoardFile, BoardSpec, MarkerDictionary};
use crate::raster::RasterImage;
use crate::rectify::{rectify_image, RectifySpec};

/// `cass.json`, read from the input directory: the camera's sensor
/// size, the measured square length of the physical print, and the
/// board file the print was generated from.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConfigFile {
    pub sensor_width_mm: f64,
    pub sensor_height_mm: f64,
    pub square_length_mm: f64,
    /// Path of the board file, relative to the input directory.
    pub board_spec: String,
    /// Focal length for images without usable EXIF (required for PNG
    /// input).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub focal_length_mm_override: Option<f64>,
}

impl ConfigFile {
    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::ConfigInvalid(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::ConfigInvalid(format!("{}: {e}", path.display())))
    }
}

/// Everything a batch run needs, resolved and validated.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub sensor: SensorSpec,
    pub square_length_mm: f64,
    pub dictionary: MarkerDictionary,
    /// Board layout rescaled so one square equals the measured
    /// `square_length_mm`.
    pub board: BoardSpec,
    pub np: f64,
    pub write_intermediate: bool,
    pub input_dir: PathBuf,
    pub output_dir: PathBuf,
    pub focal_length_mm_override: Option<f64>,
    /// Worker threads; `None` uses the available parallelism.
    pub jobs: Option<usize>,
    pub detect: DetectParams,
    pub ransac_threshold_px: f64,
    pub ransac_confidence: f64,
    pub ransac_seed: u64,
}

impl RunConfig {
    /// Resolve a run from `<input_dir>/cass.json`. The input directory
    /// must contain an `images` subdirectory.
    pub fn load(
        input_dir: &Path,
        output_dir: &Path,
        np: f64,
        write_intermediate: bool,
    ) -> Result<Self> {
        if !(np > 0.0) || !np.is_finite() {
            return Err(Error::ConfigInvalid(format!(
                "pixels-per-millimeter {np} must be positive"
            )));
        }
        let config_path = input_dir.join("cass.json");
        let file = ConfigFile::load(&config_path)?;
        let sensor = SensorSpec::new(file.sensor_width_mm, file.sensor_height_mm)?;
        if !(file.square_length_mm > 0.0) {
            return Err(Error::ConfigInvalid(format!(
                "square_length_mm {} must be positive",
                file.square_length_mm
            )));
        }
        let board_path = input_dir.join(&file.board_spec);
        let board_file = BoardFile::load(&board_path)
            .map_err(|e| Error::ConfigInvalid(format!("{}: {e}", board_path.display())))?;
        let (dictionary, nominal_board) = board_file.unpack()?;
        let board = nominal_board.with_square_length(file.square_length_mm)?;
        let images_dir = input_dir.join("images");
        if !images_dir.is_dir() {
            return Err(Error::ConfigInvalid(format!(
                "{} has no images subdirectory",
                input_dir.display()
            )));
        }
        Ok(Self {
            sensor,
            square_length_mm: file.square_length_mm,
            dictionary,
            board,
            np,
            write_intermediate,
            input_dir: input_dir.to_path_buf(),
            output_dir: output_dir.to_path_buf(),
            focal_length_mm_override: file.focal_length_mm_override,
            jobs: None,
            detect: DetectParams::default(),
            ransac_threshold_px: 3.0,
            ransac_confidence: 0.999,
            ransac_seed: 0,
        })
    }
}

/// Outcome for one input image.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ImageResult {
    pub input: String,
    /// `ok` or `skipped`.
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub markers: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rms_px: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl ImageResult {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }

    fn skipped(input: String, reason: String, markers: usize) -> Self {
        Self {
            input,
            status: "skipped".into(),
            reason: Some(reason),
            markers,
            rms_px: None,
            output: None,
            warnings: Vec::new(),
        }
    }
}

/// Machine-readable batch summary, written as `run_summary.json` in the
/// output directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub np: f64,
    pub out_width_px: usize,
    pub out_height_px: usize,
    pub image_count: usize,
    pub ok: usize,
    pub skipped: usize,
    pub results: Vec<ImageResult>,
}

fn list_images(images_dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(images_dir)?
        .filter_map(|entry| entry.ok())
        .map(|entry| entry.path())
        .filter(|path| {
            path.is_file()
                && path
                    .extension()
                    .and_then(|e| e.to_str())
                    .map(|e| {
                        let e = e.to_ascii_lowercase();
                        e == "jpg" || e == "jpeg" || e == "png"
                    })
                    .unwrap_or(false)
        })
        .collect();
    files.sort();
    Ok(files)
}

/// Process every image under `<input_dir>/images` and write rectified
/// outputs, per-image intermediates (when enabled) and the summary.
pub fn run_batch(config: &RunConfig) -> Result<RunSummary> {
    let images = list_images(&config.input_dir.join("images"))?;
    if images.is_empty() {
        return Err(Error::NoImagesFound(config.input_dir.join("images")));
    }
    std::fs::create_dir_all(&config.output_dir)?;
    let rectify_spec = RectifySpec::for_board(config.np, &config.board)?;

    let worker = |path: &PathBuf| -> ImageResult {
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        let outcome = catch_unwind(AssertUnwindSafe(|| {
            process_image(path, &name, config, &rectify_spec)
        }));
        match outcome {
            Ok(Ok(result)) => result,
            Ok(Err(err)) => ImageResult::skipped(name, err.token(), 0),
            Err(_) => ImageResult::skipped(name, "internal-panic".into(), 0),
        }
    };

    let results: Vec<ImageResult> = match config.jobs {
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build()
            .map_err(|e| Error::ConfigInvalid(format!("worker pool: {e}")))?
            .install(|| images.par_iter().map(worker).collect()),
        None => images.par_iter().map(worker).collect(),
    };

    let ok = results.iter().filter(|r| r.is_ok()).count();
    let summary = RunSummary {
        np: config.np,
        out_width_px: rectify_spec.out_width_px(),
        out_height_px: rectify_spec.out_height_px(),
        image_count: results.len(),
        ok,
        skipped: results.len() - ok,
        results,
    };
    let summary_json = serde_json::to_string_pretty(&summary)?;
    std::fs::write(config.output_dir.join("run_summary.json"), summary_json)?;
    Ok(summary)
}

fn is_jpeg(path: &Path) -> bool {
    matches!(
        path.extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
            .as_deref(),
        Some("jpg") | Some("jpeg")
    )
}

fn process_image(
    path: &Path,
    name: &str,
    config: &RunConfig,
    rectify_spec: &RectifySpec,
) -> Result<ImageResult> {
    let bytes = std::fs::read(path)?;
    let raster = RasterImage::decode(&bytes)?;
    let (w, h) = (raster.width() as u32, raster.height() as u32);

    // Focal length: EXIF for JPEG, the config override otherwise.
    let exif_intrinsics: Option<CameraIntrinsics> = if is_jpeg(path) {
        match parse_exif(&bytes) {
            Ok(record) => seed_intrinsics(&record, &config.sensor, w, h).ok(),
            Err(_) => None,
        }
    } else {
        None
    };
    let intrinsics0 = match exif_intrinsics {
        Some(intr) => intr,
        None => match config.focal_length_mm_override {
            Some(focal) => seed_intrinsics_from_focal(focal, &config.sensor, w, h)?,
            None => return Err(Error::NoFocalLength),
        },
    };

    let detections = detect_markers(&raster, &config.dictionary, &config.detect);
    let correspondences = build_correspondences(&detections, &config.board)?;
    let (h0, inlier_mask) = estimate_homography_ransac(
        &correspondences,
        config.ransac_threshold_px,
        config.ransac_confidence,
        config.ransac_seed,
    )?;
    let inliers = correspondences.masked(&inlier_mask);
    let refined = refine_calibration(&inliers, &intrinsics0, &h0)?;

    let rectified = rectify_image(
        &raster,
        &refined.intrinsics,
        &refined.homography,
        rectify_spec,
    )?;
    let stem = Path::new(name)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| name.to_string());
    let out_name = format!("{stem}_rectified.png");
    rectified.save_png(&config.output_dir.join(&out_name))?;

    let mut warnings = Vec::new();
    if let Some(warning) = quadrant_warning(&detections, raster.width(), raster.height()) {
        warnings.push(warning);
    }

    if config.write_intermediate {
        let overlay = detection_overlay(&raster, &detections);
        overlay.save_png(&config.output_dir.join(format!("{stem}_detections.png")))?;
        let report = format!(
            "image: {name}\nmarkers: {}\ninliers: {}\nf_px: {:.6}\nk1: {:.8}\nk2: {:.8}\nrms_px: {:.6}\n",
            detections.len(),
            inliers.len(),
            refined.intrinsics.fx,
            refined.intrinsics.k1,
            refined.intrinsics.k2,
            refined.rms_px,
        );
        std::fs::write(
            config.output_dir.join(format!("{stem}_calibration.txt")),
            report,
        )?;
    }

    Ok(ImageResult {
        input: name.to_string(),
        status: "ok".into(),
        reason: None,
        markers: detections.len(),
        rms_px: Some(refined.rms_px),
        output: Some(out_name),
        warnings,
    })
}

/// Acquisition-quality advisory: markers should surround the object,
/// so they ought to appear in all four image quadrants.
fn quadrant_warning(
    detections: &[MarkerDetection],
    width: usize,
    height: usize,
) -> Option<String> {
    let cx = width as f64 / 2.0;
    let cy = height as f64 / 2.0;
    let mut seen = [false; 4];
    for det in detections {
        let c = det.center();
        let q = (c.x >= cx) as usize + 2 * ((c.y >= cy) as usize);
        seen[q] = true;
    }
    if seen.iter().all(|&s| s) {
        None
    } else {
        Some("markers do not span all four image quadrants".into())
    }
}

fn draw_segment(img: &mut RasterImage, a: Point2<f64>, b: Point2<f64>, color: [u8; 3]) {
    let steps = (b - a).norm().ceil().max(1.0) as usize;
    for k in 0..=steps {
        let t = k as f64 / steps as f64;
        let x = (a.x + t * (b.x - a.x) - 0.5).round() as i64;
        let y = (a.y + t * (b.y - a.y) - 0.5).round() as i64;
        if x >= 0 && y >= 0 && (x as usize) < img.width() && (y as usize) < img.height() {
            for (c, &v) in color.iter().enumerate() {
                img.set(x as usize, y as usize, c, v);
            }
        }
    }
}

/// Input image with detected marker outlines (green) and first corners
/// (red) burned in.
fn detection_overlay(image: &RasterImage, detections: &[MarkerDetection]) -> RasterImage {
    let mut rgb = if image.channels() == 3 {
        image.clone()
    } else {
        let mut out = RasterImage::new(image.width(), image.height(), 3).unwrap();
        for y in 0..image.height() {
            for x in 0..image.width() {
                let v = image.get(x, y, 0);
                for c in 0..3 {
                    out.set(x, y, c, v);
                }
            }
        }
        out
    };
    for det in detections {
        for i in 0..4 {
            draw_segment(
                &mut rgb,
                det.corners_px[i],
                det.corners_px[(i + 1) % 4],
                [0, 255, 0],
            );
        }
        let c0 = det.corners_px[0];
        for dy in -1i64..=1 {
            for dx in -1i64..=1 {
                let x = (c0.x - 0.5).round() as i64 + dx;
                let y = (c0.y - 0.5).round() as i64 + dy;
                if x >= 0 && y >= 0 && (x as usize) < rgb.width() && (y as usize) < rgb.height() {
                    rgb.set(x as usize, y as usize, 0, 255);
                    rgb.set(x as usize, y as usize, 1, 0);
                    rgb.set(x as usize, y as usize, 2, 0);
                }
            }
        }
    }
    rgb
}

/// The verification identity: pixel measurements from a rectified image
/// divided by `np` give millimeters.
pub fn verify_artifact(np: f64, edge_a_px: f64, edge_b_px: f64) -> Result<(f64, f64)> {
    if !(np > 0.0) || !np.is_finite() {
        return Err(Error::NonPositiveMeasurement(format!(
            "pixels-per-millimeter {np}"
        )));
    }
    for (label, v) in [("edge_a_px", edge_a_px), ("edge_b_px", edge_b_px)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::NonPositiveMeasurement(format!("{label} = {v}")));
        }
    }
    Ok((edge_a_px / np, edge_b_px / np))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verify_artifact_divides() {
        let (a, b) = verify_artifact(10.0, 635.02, 888.07).unwrap();
        assert_eq!(a.to_bits(), (635.02f64 / 10.0).to_bits());
        assert_eq!(b.to_bits(), (888.07f64 / 10.0).to_bits());
        assert!((a - 63.502).abs() < 1e-9);
        assert!((b - 88.807).abs() < 1e-9);
    }

    #[test]
    fn verify_artifact_is_exact_division() {
        let (a, b) = verify_artifact(7.3, 123.456, 9.87).unwrap();
        assert_eq!(a.to_bits(), (123.456f64 / 7.3).to_bits());
        assert_eq!(b.to_bits(), (9.87f64 / 7.3).to_bits());
    }

    #[test]
    fn verify_artifact_rejects_bad_measurements() {
        assert!(matches!(
            verify_artifact(10.0, -1.0, 5.0),
            Err(Error::NonPositiveMeasurement(_))
        ));
        assert!(matches!(
            verify_artifact(0.0, 1.0, 5.0),
            Err(Error::NonPositiveMeasurement(_))
        ));
        assert!(matches!(
            verify_artifact(10.0, 1.0, f64::NAN),
            Err(Error::NonPositiveMeasurement(_))
        ));
    }

    #[test]
    fn quadrant_warning_fires_on_clustered_markers() {
        let det = |x: f64, y: f64| MarkerDetection {
            id: 0,
            corners_px: [
                Point2::new(x, y),
                Point2::new(x + 2.0, y),
                Point2::new(x + 2.0, y + 2.0),
                Point2::new(x, y + 2.0),
            ],
            decode_rotation: 0,
            bit_errors: 0,
        };
        let clustered = vec![det(1.0, 1.0), det(5.0, 5.0)];
        assert!(quadrant_warning(&clustered, 100, 100).is_some());
        let spread = vec![
            det(10.0, 10.0),
            det(80.0, 10.0),
            det(10.0, 80.0),
            det(80.0, 80.0),
        ];
        assert!(quadrant_warning(&spread, 100, 100).is_none());
    }
}
