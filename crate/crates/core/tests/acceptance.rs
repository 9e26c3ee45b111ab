//! End-to-end acceptance suite. Each test exercises one numbered
//! requirement at its stated tolerance and prints a `[criterion N]`
//! line (visible with `cargo test --test acceptance -- --nocapture`).

use std::time::Instant;

use nalgebra::Point2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cass_core::calib::{
    build_correspondences, dlt_from_points, estimate_homography_ransac, refine_calibration,
    CameraIntrinsics, Correspondence, Correspondences,
};
use cass_core::detect::{detect_markers, DetectParams};
use cass_core::pattern::{render_board, BoardSpec, MarkerDictionary};
use cass_core::pipeline::verify_artifact;
use cass_core::raster::RasterImage;
use cass_core::rectify::{rectify_image, RectifySpec};
use cass_core::synth::{
    expected_corner, oblique_view_homography, render_scene_antialiased, ArtifactRect, SceneTruth,
};

const CARD_WIDTH_MM: f64 = 63.5;
const CARD_HEIGHT_MM: f64 = 88.9;

fn paper_board() -> (MarkerDictionary, BoardSpec) {
    let dict = MarkerDictionary::generate(4, 50, 4, 0).unwrap();
    let spec = BoardSpec::with_sequential_ids(5, 7, 24.0, 0.25).unwrap();
    (dict, spec)
}

fn phone_camera(width: usize, height: usize, k1: f64, k2: f64) -> CameraIntrinsics {
    let f = 1550.0 * width as f64 / 1600.0;
    CameraIntrinsics::new(f, f, width as f64 / 2.0, height as f64 / 2.0, k1, k2)
}

/// Sub-pixel threshold crossing walking outward from `start` along a
/// sampled profile (sample `i` sits at coordinate `i + 0.5`).
fn crossing(profile: &[f64], start: usize, step: i64, threshold: f64) -> f64 {
    let mut i = start as i64;
    while i > 0 && (i as usize) < profile.len() - 1 && profile[i as usize] < threshold {
        i += step;
    }
    let prev = (i - step) as usize;
    let a = profile[prev];
    let b = profile[i as usize];
    let t = (threshold - a) / (b - a);
    prev as f64 + 0.5 + t * step as f64
}

fn row_profile(img: &RasterImage, y: usize) -> Vec<f64> {
    (0..img.width()).map(|x| img.get(x, y, 0) as f64).collect()
}

fn column_profile(img: &RasterImage, x: usize) -> Vec<f64> {
    (0..img.height()).map(|y| img.get(x, y, 0) as f64).collect()
}

/// Measure the centered card in a rectified image. Horizontal scans run
/// through the quiet-zone band between marker rows 2 and 3, vertical
/// scans through the band between marker columns 3 and 4, the way a
/// human would pick clean scanlines in an image editor.
fn measure_card(rectified: &RasterImage, np: f64) -> (f64, f64) {
    let threshold = (60.0 + 255.0) / 2.0;
    let cx = (105.0 * np) as usize;
    let cy = (75.0 * np) as usize;

    let mut widths = Vec::new();
    for k in 0..5 {
        let y = ((88.0 + k as f64) * np) as usize;
        let profile = row_profile(rectified, y);
        widths.push(crossing(&profile, cx, 1, threshold) - crossing(&profile, cx, -1, threshold));
    }
    let mut heights = Vec::new();
    for k in 0..5 {
        let x = ((118.0 + k as f64) * np) as usize;
        let profile = column_profile(rectified, x);
        heights.push(crossing(&profile, cy, 1, threshold) - crossing(&profile, cy, -1, threshold));
    }
    (
        widths.iter().sum::<f64>() / widths.len() as f64,
        heights.iter().sum::<f64>() / heights.len() as f64,
    )
}

/// Full per-image pipeline as the batch runs it: detect, robust fit,
/// refine, rectify.
fn process_scene(
    image: &RasterImage,
    dict: &MarkerDictionary,
    board: &BoardSpec,
    seed_intrinsics: &CameraIntrinsics,
    np: f64,
) -> (RasterImage, f64, usize) {
    let detections = detect_markers(image, dict, &DetectParams::default());
    let corr = build_correspondences(&detections, board).unwrap();
    let (h0, mask) = estimate_homography_ransac(&corr, 3.0, 0.999, 0).unwrap();
    let inliers = corr.masked(&mask);
    let refined = refine_calibration(&inliers, seed_intrinsics, &h0).unwrap();
    let spec = RectifySpec::for_board(np, board).unwrap();
    let out = rectify_image(image, &refined.intrinsics, &refined.homography, &spec).unwrap();
    (out, refined.rms_px, detections.len())
}

#[test]
fn criterion_01_card_scale_metric_accuracy() {
    let (dict, board) = paper_board();
    let (w, h) = (1600usize, 1200usize);
    let truth_intr = phone_camera(w, h, -0.10, 0.0);
    let homography = oblique_view_homography(
        &truth_intr,
        board.board_width_mm(),
        board.board_height_mm(),
        w,
        h,
        20.0,
        5.0,
        0.75,
    )
    .unwrap();
    let truth = SceneTruth {
        homography,
        intrinsics: truth_intr,
        noise_sigma: 3.0 / 255.0,
        blur_radius: 0.8,
        seed: 11,
    };
    let card = ArtifactRect {
        center_mm: [board.board_width_mm() / 2.0, board.board_height_mm() / 2.0],
        width_mm: CARD_WIDTH_MM,
        height_mm: CARD_HEIGHT_MM,
        gray: 60,
    };
    let scene = render_scene_antialiased(&dict, &board, &truth, Some(&card), w, h, 3).unwrap();

    let seed = phone_camera(w, h, 0.0, 0.0);
    let started = Instant::now();
    let (rectified, rms, markers) = process_scene(&scene, &dict, &board, &seed, 10.0);
    let elapsed = started.elapsed();

    let (width_px, height_px) = measure_card(&rectified, 10.0);
    let width_err = (width_px - 635.0).abs();
    let height_err = (height_px - 889.0).abs();
    assert!(markers >= 20, "only {markers} markers visible");
    assert!(
        width_err <= 1.5 && height_err <= 1.5,
        "card measured {width_px:.2} x {height_px:.2} px, want 635.0 x 889.0 +/- 1.5"
    );
    assert!(
        elapsed.as_secs_f64() < 10.0,
        "pipeline took {elapsed:?}, budget 10 s"
    );
    println!(
        "[criterion 1] PASS - card {width_px:.2} x {height_px:.2} px (errors {width_err:.2}/{height_err:.2} px, \
         rms {rms:.3} px, {markers} markers, {elapsed:.2?} per image)"
    );
}

#[test]
fn criterion_02_output_sizing_rule() {
    let (dict, board) = paper_board();
    let intr = phone_camera(800, 600, 0.0, 0.0);
    let homography = oblique_view_homography(
        &intr,
        board.board_width_mm(),
        board.board_height_mm(),
        800,
        600,
        15.0,
        3.0,
        0.8,
    )
    .unwrap();
    let truth = SceneTruth {
        homography,
        intrinsics: intr,
        noise_sigma: 0.0,
        blur_radius: 0.8,
        seed: 1,
    };
    let scene = render_scene_antialiased(&dict, &board, &truth, None, 800, 600, 2).unwrap();

    for np in [5.0, 10.0, 20.0] {
        let spec = RectifySpec::for_board(np, &board).unwrap();
        let expect_w = (board.board_width_mm() * np).round() as usize;
        let expect_h = (board.board_height_mm() * np).round() as usize;
        assert_eq!(spec.out_width_px(), expect_w);
        assert_eq!(spec.out_height_px(), expect_h);
        let out = rectify_image(&scene, &intr, &truth.homography, &spec).unwrap();
        assert_eq!(
            (out.width(), out.height()),
            (expect_w, expect_h),
            "np = {np}"
        );
    }
    println!("[criterion 2] PASS - output dimensions are round(board_mm * np) at np in {{5, 10, 20}}");
}

#[test]
fn criterion_03_verification_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..10_000 {
        let np = rng.random_range(1e-3..1e3);
        let a = rng.random_range(1e-3..1e6);
        let b = rng.random_range(1e-3..1e6);
        let (mm_a, mm_b) = verify_artifact(np, a, b).unwrap();
        assert_eq!(mm_a.to_bits(), (a / np).to_bits());
        assert_eq!(mm_b.to_bits(), (b / np).to_bits());
    }
    println!("[criterion 3] PASS - verify_artifact returns w_p / np bit-exactly over 10000 random cases");
}

#[test]
fn criterion_04_homography_oracle() {
    let mut worst = 0.0f64;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = rng.random_range(900.0..2500.0);
        let intr = CameraIntrinsics::new(f, f, 800.0, 600.0, 0.0, 0.0);
        let homography = oblique_view_homography(
            &intr,
            210.0,
            150.0,
            1600,
            1200,
            rng.random_range(0.0..40.0),
            rng.random_range(0.0..360.0),
            rng.random_range(0.5..0.9),
        )
        .unwrap();

        let mut world = Vec::new();
        for j in 0..5 {
            for i in 0..7 {
                world.push(Point2::new(
                    i as f64 * 30.0 + rng.random_range(-3.0..3.0),
                    j as f64 * 30.0 + rng.random_range(-3.0..3.0),
                ));
            }
        }
        let image: Vec<Point2<f64>> = world.iter().map(|&p| homography.apply(p)).collect();
        let recovered = dlt_from_points(&world, &image).unwrap();
        for (&w, &observed) in world.iter().zip(&image) {
            let err = (recovered.apply(w) - observed).norm();
            worst = worst.max(err);
        }
    }
    assert!(worst < 1e-9, "worst reprojection {worst:.3e} px");
    println!("[criterion 4] PASS - DLT max reprojection {worst:.2e} px over 100 seeded trials");
}

#[test]
fn criterion_05_ransac_robustness() {
    let mut worst_rms = 0.0f64;
    for seed in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let f = rng.random_range(1200.0..2200.0);
        let intr = CameraIntrinsics::new(f, f, 800.0, 600.0, 0.0, 0.0);
        let homography = oblique_view_homography(
            &intr,
            210.0,
            150.0,
            1600,
            1200,
            rng.random_range(5.0..35.0),
            rng.random_range(0.0..360.0),
            0.75,
        )
        .unwrap();

        let mut items = Vec::new();
        let mut clean = Vec::new();
        for j in 0..5 {
            for i in 0..7 {
                let w = Point2::new(i as f64 * 30.0, j as f64 * 30.0);
                let p = homography.apply(w);
                clean.push((w, p));
                let observed = Point2::new(
                    p.x + rng.random_range(-0.05..0.05),
                    p.y + rng.random_range(-0.05..0.05),
                );
                items.push(Correspondence {
                    world_mm: w,
                    image_px: observed,
                    marker_id: (j * 7 + i) / 4,
                    corner_index: ((j * 7 + i) % 4) as u8,
                });
            }
        }
        // Corrupt every fifth point (20%) by a gross offset.
        for k in (0..items.len()).step_by(5) {
            let angle: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let radius = rng.random_range(30.0..300.0);
            items[k].image_px.x += radius * angle.cos();
            items[k].image_px.y += radius * angle.sin();
        }

        let corr = Correspondences::new(items).unwrap();
        let (h0, mask) = estimate_homography_ransac(&corr, 3.0, 0.999, seed).unwrap();
        let inliers = corr.masked(&mask);
        let refined = refine_calibration(&inliers, &intr, &h0).unwrap();

        let mut sq = 0.0;
        for (w, p_true) in &clean {
            let p = cass_core::calib::project_board_point(
                &refined.homography,
                &refined.intrinsics,
                *w,
            );
            sq += (p - p_true).norm_squared();
        }
        let rms = (sq / clean.len() as f64).sqrt();
        worst_rms = worst_rms.max(rms);
    }
    assert!(worst_rms < 0.3, "worst rms {worst_rms:.4} px");
    println!(
        "[criterion 5] PASS - RANSAC + refinement rms vs truth {worst_rms:.4} px worst over 50 trials with 20% outliers"
    );
}

#[test]
fn criterion_06_refinement_correctness() {
    // Jacobian versus central finite differences on random scenes.
    let mut worst_rel = 0.0f64;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(2000 + seed);
        let f = rng.random_range(1200.0..3000.0);
        let truth_intr = CameraIntrinsics::new(
            f,
            f,
            800.0,
            600.0,
            rng.random_range(-0.2..0.1),
            rng.random_range(-0.05..0.05),
        );
        let homography = oblique_view_homography(
            &truth_intr,
            210.0,
            150.0,
            1600,
            1200,
            rng.random_range(0.0..35.0),
            rng.random_range(0.0..360.0),
            0.75,
        )
        .unwrap();
        let world: Vec<Point2<f64>> = (0..16)
            .map(|_| {
                Point2::new(rng.random_range(0.0..210.0), rng.random_range(0.0..150.0))
            })
            .collect();
        let image: Vec<Point2<f64>> = world
            .iter()
            .map(|&w| cass_core::calib::project_board_point(&homography, &truth_intr, w))
            .collect();
        let corr = Correspondences::new(
            world
                .iter()
                .zip(&image)
                .enumerate()
                .map(|(i, (&w, &p))| Correspondence {
                    world_mm: w,
                    image_px: p,
                    marker_id: i / 4,
                    corner_index: (i % 4) as u8,
                })
                .collect(),
        )
        .unwrap();
        let rel = cass_core::calib::jacobian_fd_relative_error(&corr, &truth_intr, &homography)
            .unwrap();
        worst_rel = worst_rel.max(rel);
    }
    assert!(worst_rel < 1e-4, "worst relative error {worst_rel:.3e}");

    // Monotone cost on accepted steps, from perturbed starts.
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(3000 + seed);
        let truth_intr = CameraIntrinsics::new(1800.0, 1800.0, 800.0, 600.0, -0.1, 0.03);
        let homography = oblique_view_homography(
            &truth_intr,
            210.0,
            150.0,
            1600,
            1200,
            rng.random_range(5.0..30.0),
            rng.random_range(0.0..360.0),
            0.75,
        )
        .unwrap();
        let mut items = Vec::new();
        for j in 0..5 {
            for i in 0..7 {
                let w = Point2::new(i as f64 * 30.0, j as f64 * 30.0);
                let p =
                    cass_core::calib::project_board_point(&homography, &truth_intr, w);
                items.push(Correspondence {
                    world_mm: w,
                    image_px: Point2::new(
                        p.x + rng.random_range(-0.3..0.3),
                        p.y + rng.random_range(-0.3..0.3),
                    ),
                    marker_id: (j * 7 + i) / 4,
                    corner_index: ((j * 7 + i) % 4) as u8,
                });
            }
        }
        let corr = Correspondences::new(items).unwrap();
        let seed_intr = CameraIntrinsics::new(1700.0, 1700.0, 800.0, 600.0, 0.0, 0.0);
        let h0 = cass_core::calib::estimate_homography_dlt(&corr).unwrap();
        let outcome = refine_calibration(&corr, &seed_intr, &h0).unwrap();
        for pair in outcome.rms_history.windows(2) {
            assert!(
                pair[1] <= pair[0] + 1e-12,
                "cost increased: {} -> {}",
                pair[0],
                pair[1]
            );
        }
    }
    println!(
        "[criterion 6] PASS - jacobian matches finite differences (worst rel {worst_rel:.2e}); accepted steps never increase cost"
    );
}

#[test]
fn criterion_07_dictionary_validity() {
    // Independent brute-force verifier over bit matrices.
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

    let started = Instant::now();
    let dict = MarkerDictionary::generate(4, 50, 4, 0).unwrap();
    let mut min = usize::MAX;
    for (i, &ci) in dict.codes().iter().enumerate() {
        let mi = to_matrix(ci, 4);
        let mut r = rot(&mi);
        for _ in 0..3 {
            min = min.min(dist(&mi, &r));
            r = rot(&r);
        }
        for &cj in dict.codes().iter().skip(i + 1) {
            let mut mj = to_matrix(cj, 4);
            for _ in 0..4 {
                min = min.min(dist(&mi, &mj));
                mj = rot(&mj);
            }
        }
    }
    let elapsed = started.elapsed();
    assert_eq!(dict.len(), 50);
    assert!(min >= 4, "minimum rotation distance {min}");
    assert!(elapsed.as_secs_f64() < 5.0, "took {elapsed:?}");
    println!(
        "[criterion 7] PASS - 4x4/50 dictionary min rotation-Hamming {min} >= 4, generated + verified in {elapsed:.2?}"
    );
}

#[test]
fn criterion_08_detection_round_trip() {
    let (dict, board) = paper_board();

    // Frontal print-resolution render.
    let ppmm = 10.0;
    let frontal = render_board(&dict, &board, ppmm).unwrap();
    let found = detect_markers(&frontal, &dict, &DetectParams::default());
    assert_eq!(found.len(), 35, "frontal: found {}", found.len());
    let mut worst_frontal = 0.0f64;
    for det in &found {
        let world = board.corner_coords(det.id).unwrap();
        for (w, p) in world.iter().zip(&det.corners_px) {
            let expected = Point2::new(w.x * ppmm, w.y * ppmm);
            worst_frontal = worst_frontal.max((p - expected).norm());
        }
    }
    assert!(worst_frontal < 0.5, "frontal worst {worst_frontal:.3}");

    // Oblique scenes up to 40 degrees, including a distorted one.
    let (w, h) = (1280usize, 960usize);
    let mut worst_oblique = 0.0f64;
    for (tilt, k1) in [(10.0, 0.0), (25.0, 0.0), (40.0, 0.0), (20.0, -0.10)] {
        let intr = phone_camera(w, h, k1, 0.0);
        let homography = oblique_view_homography(
            &intr,
            board.board_width_mm(),
            board.board_height_mm(),
            w,
            h,
            tilt,
            5.0,
            0.75,
        )
        .unwrap();
        let truth = SceneTruth {
            homography,
            intrinsics: intr,
            noise_sigma: 0.0,
            blur_radius: 0.8,
            seed: 7,
        };
        let scene = render_scene_antialiased(&dict, &board, &truth, None, w, h, 3).unwrap();
        let found = detect_markers(&scene, &dict, &DetectParams::default());
        assert_eq!(found.len(), 35, "tilt {tilt}: found {}", found.len());
        for det in &found {
            for (i, p) in det.corners_px.iter().enumerate() {
                let expected = expected_corner(&truth, &board, det.id, i).unwrap();
                let err = (p - expected).norm();
                assert!(
                    err < 0.5,
                    "tilt {tilt} marker {} corner {i}: {err:.3} px",
                    det.id
                );
                worst_oblique = worst_oblique.max(err);
            }
        }
    }
    println!(
        "[criterion 8] PASS - all 35 markers on frontal (worst {worst_frontal:.3} px) and oblique scenes <= 40 deg (worst {worst_oblique:.3} px)"
    );
}

#[test]
fn criterion_09_exif_parser_fixtures() {
    use cass_core::exif::*;
    use cass_core::Error;

    // Little-endian: focal must be exact to the rational representation.
    let le = encode_exif_tiff(
        &ExifRecord {
            focal_length_mm: Some(ExifRational::new(415, 100)),
            focal_length_35mm: Some(29),
            pixel_width: Some(3264),
            pixel_height: Some(2448),
            orientation: 1,
        },
        true,
    );
    let parsed = parse_exif(&le).unwrap();
    let focal = parsed.focal_length_mm.unwrap();
    assert_eq!((focal.num, focal.den), (415, 100));
    assert_eq!(focal.as_f64().to_bits(), (415.0f64 / 100.0).to_bits());

    // Big-endian content parses to the identical record.
    let be = encode_exif_tiff(&parsed, false);
    assert_eq!(parse_exif(&be).unwrap(), parsed);

    // Missing focal tags: parse fine, seeding reports the absence.
    let missing = encode_exif_tiff(&ExifRecord::default(), true);
    let record = parse_exif(&missing).unwrap();
    let sensor = SensorSpec::new(4.8, 3.6).unwrap();
    assert!(matches!(
        seed_intrinsics(&record, &sensor, 100, 100),
        Err(Error::NoFocalLength)
    ));

    // Truncations of a valid blob must error (or parse), never panic
    // or read out of bounds.
    for cut in 0..le.len() {
        let _ = parse_exif(&le[..cut]);
    }

    // Seeded fuzz: random buffers and random mutations.
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..5000 {
        let len = rng.random_range(0..200);
        let mut bytes: Vec<u8> = (0..len).map(|_| rng.random()).collect();
        if len >= 4 && rng.random_bool(0.4) {
            let head: [u8; 4] = if rng.random_bool(0.5) {
                [0x49, 0x49, 0x2A, 0x00]
            } else {
                [0x4D, 0x4D, 0x00, 0x2A]
            };
            bytes[..4].copy_from_slice(&head);
        }
        let _ = parse_exif(&bytes);

        let mut mutated = le.clone();
        for _ in 0..rng.random_range(1..8) {
            let i = rng.random_range(0..mutated.len());
            mutated[i] = rng.random();
        }
        let _ = parse_exif(&mutated);
    }
    println!(
        "[criterion 9] PASS - LE/BE/missing-tag/truncated/fuzzed EXIF fixtures parse without panics; rationals exact"
    );
}

#[test]
fn criterion_10_batch_determinism() {
    use cass_core::pipeline::{run_batch, ConfigFile, RunConfig};

    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("input");
    let images = input.join("images");
    std::fs::create_dir_all(&images).unwrap();

    // Small board keeps the fixtures quick.
    let dict = MarkerDictionary::generate(4, 50, 4, 0).unwrap();
    let board = BoardSpec::with_sequential_ids(3, 4, 12.0, 0.25).unwrap();
    cass_core::pattern::BoardFile::pack(&dict, &board)
        .save(&input.join("board.json"))
        .unwrap();

    let f_px = 900.0;
    let sensor_w = 4.8;
    ConfigFile {
        sensor_width_mm: sensor_w,
        sensor_height_mm: 3.6,
        square_length_mm: board.square_length_mm(),
        board_spec: "board.json".into(),
        focal_length_mm_override: Some(f_px * sensor_w / 640.0),
    }
    .save(&input.join("cass.json"))
    .unwrap();

    let intr = CameraIntrinsics::new(f_px, f_px, 320.0, 240.0, -0.05, 0.0);
    for (i, tilt) in [12.0, 24.0].iter().enumerate() {
        let homography = oblique_view_homography(
            &intr,
            board.board_width_mm(),
            board.board_height_mm(),
            640,
            480,
            *tilt,
            5.0 + i as f64 * 9.0,
            0.75,
        )
        .unwrap();
        let truth = SceneTruth {
            homography,
            intrinsics: intr,
            noise_sigma: 2.0 / 255.0,
            blur_radius: 0.8,
            seed: i as u64,
        };
        let scene = render_scene_antialiased(&dict, &board, &truth, None, 640, 480, 3).unwrap();
        scene
            .save_png(&images.join(format!("scene_{i:02}.png")))
            .unwrap();
    }
    // A corrupt file and a marker-free image must be skipped, not abort.
    std::fs::write(images.join("broken.jpg"), b"not really a jpeg").unwrap();
    RasterImage::from_vec(64, 64, 1, vec![140; 64 * 64])
        .unwrap()
        .save_png(&images.join("plain.png"))
        .unwrap();

    let run = |out: &std::path::Path, jobs: Option<usize>| {
        let mut config = RunConfig::load(&input, out, 10.0, false).unwrap();
        config.jobs = jobs;
        run_batch(&config).unwrap()
    };
    let out_a = dir.path().join("out_a");
    let out_b = dir.path().join("out_b");
    let summary_a = run(&out_a, None);
    let _summary_b = run(&out_b, Some(2));

    assert_eq!(summary_a.image_count, 4);
    assert_eq!(summary_a.ok, 2);
    assert_eq!(summary_a.skipped, 2);
    assert_eq!(summary_a.ok + summary_a.skipped, summary_a.image_count);

    let bytes = |p: &std::path::Path| std::fs::read(p).unwrap();
    assert_eq!(
        bytes(&out_a.join("run_summary.json")),
        bytes(&out_b.join("run_summary.json"))
    );
    for result in &summary_a.results {
        if let Some(output) = &result.output {
            assert!(out_a.join(output).is_file());
            assert_eq!(bytes(&out_a.join(output)), bytes(&out_b.join(output)));
        }
    }
    let reasons: Vec<&str> = summary_a
        .results
        .iter()
        .filter_map(|r| r.reason.as_deref())
        .collect();
    assert!(reasons.contains(&"image-codec") || reasons.contains(&"not-an-image"));
    assert!(reasons.contains(&"insufficient-correspondences"));
    println!(
        "[criterion 10] PASS - two runs (serial and 2 workers) produced bit-identical summaries and rectified outputs"
    );
}
