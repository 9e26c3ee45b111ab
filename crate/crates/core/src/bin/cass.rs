//! Command-line front end: generate printable boards, synthesize test
//! scenes, run the batch rectification, and check artifact
//! measurements.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cass_core::calib::CameraIntrinsics;
use cass_core::exif::SensorSpec;
use cass_core::pattern::{render_board, BoardFile, BoardSpec, MarkerDictionary};
use cass_core::pipeline::{run_batch, verify_artifact, ConfigFile, RunConfig};
use cass_core::synth::{
    oblique_view_homography, render_scene_antialiased, ArtifactRect, SceneTruth,
};
use cass_core::{Error, Result};

#[derive(Parser)]
#[command(
    name = "cass",
    about = "Turn photos over a printed marker board into millimeter-true scans",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a printable marker board (PNG) and its board file (JSON).
    Pattern(PatternArgs),
    /// Render synthetic photographs with known ground truth.
    Synth(SynthArgs),
    /// Rectify every image in <input_dir>/images into <output_dir>.
    Scan(ScanArgs),
    /// Check measured artifact edges against their physical size.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct PatternArgs {
    /// Directory for board.png and board.json.
    #[arg(long, default_value = "board")]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 5)]
    rows: usize,
    #[arg(long, default_value_t = 7)]
    cols: usize,
    /// Marker square side in millimeters.
    #[arg(long, default_value_t = 24.0)]
    square_mm: f64,
    /// Quiet zone between markers as a fraction of the square.
    #[arg(long, default_value_t = 0.25)]
    margin_ratio: f64,
    /// Data grid size of each marker.
    #[arg(long, default_value_t = 4)]
    bit_size: usize,
    /// Number of codes to synthesize.
    #[arg(long, default_value_t = 50)]
    count: usize,
    /// Minimum rotation-robust Hamming separation.
    #[arg(long, default_value_t = 4)]
    min_distance: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Print resolution of board.png.
    #[arg(long, default_value_t = 10.0)]
    px_per_mm: f64,
}

#[derive(Args)]
struct SynthArgs {
    /// Directory receiving images/, board.json, cass.json and truth
    /// sidecars; ready for `cass scan`.
    #[arg(long, default_value = "fixtures")]
    out_dir: PathBuf,
    /// Board file to render; generated with defaults when omitted.
    #[arg(long)]
    board: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    scenes: usize,
    #[arg(long, default_value_t = 1600)]
    width: usize,
    #[arg(long, default_value_t = 1200)]
    height: usize,
    /// Camera tilt from frontal, degrees.
    #[arg(long, default_value_t = 20.0)]
    tilt_deg: f64,
    /// In-plane rotation, degrees (advances per scene).
    #[arg(long, default_value_t = 5.0)]
    roll_deg: f64,
    #[arg(long, default_value_t = -0.1, allow_hyphen_values = true)]
    k1: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    k2: f64,
    /// Gaussian noise sigma on [0,1] scale.
    #[arg(long, default_value_t = 3.0 / 255.0)]
    noise: f64,
    /// Box blur radius in pixels.
    #[arg(long, default_value_t = 0.8)]
    blur: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Lay a rectangle of this size (WxH mm, e.g. 63.5x88.9) on the
    /// board center as a measurement artifact.
    #[arg(long)]
    artifact_mm: Option<String>,
}

#[derive(Args)]
struct ScanArgs {
    /// Test directory containing cass.json, the board file and images/.
    input_dir: PathBuf,
    /// Where rectified images and the run summary go.
    output_dir: PathBuf,
    /// Pixels per millimeter of the rectified output (try 5, 10, 20).
    np: f64,
    /// Also write detection overlays and calibration reports.
    #[arg(long)]
    write_intermediate: bool,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Pixels per millimeter the batch was run with.
    np: f64,
    /// First measured edge, pixels.
    edge_a_px: f64,
    /// Second measured edge, pixels.
    edge_b_px: f64,
    /// Known physical size of edge A, millimeters.
    #[arg(long)]
    expected_a_mm: Option<f64>,
    /// Known physical size of edge B, millimeters.
    #[arg(long)]
    expected_b_mm: Option<f64>,
    /// Allowed deviation when expectations are given.
    #[arg(long, default_value_t = 0.5)]
    tolerance_mm: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Pattern(args) => cmd_pattern(args),
        Command::Synth(args) => cmd_synth(args),
        Command::Scan(args) => cmd_scan(args),
        Command::Verify(args) => cmd_verify(args),
    };
    match outcome {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}

fn cmd_pattern(args: PatternArgs) -> Result<ExitCode> {
    let dict = MarkerDictionary::generate(args.bit_size, args.count, args.min_distance, args.seed)?;
    let spec =
        BoardSpec::with_sequential_ids(args.rows, args.cols, args.square_mm, args.margin_ratio)?;
    let raster = render_board(&dict, &spec, args.px_per_mm)?;

    std::fs::create_dir_all(&args.out_dir)?;
    let png_path = args.out_dir.join("board.png");
    let json_path = args.out_dir.join("board.json");
    raster.save_png(&png_path)?;
    BoardFile::pack(&dict, &spec).save(&json_path)?;

    println!(
        "board: {} x {} markers, {:.1} x {:.1} mm",
        args.cols,
        args.rows,
        spec.board_width_mm(),
        spec.board_height_mm()
    );
    println!("wrote {}", png_path.display());
    println!("wrote {}", json_path.display());
    Ok(ExitCode::SUCCESS)
}

/// Truth sidecar accompanying each synthetic image.
#[derive(serde::Serialize)]
struct SceneSidecar<'a> {
    image: String,
    truth: &'a SceneTruth,
    #[serde(skip_serializing_if = "Option::is_none")]
    artifact: Option<&'a ArtifactRect>,
}

fn cmd_synth(args: SynthArgs) -> Result<ExitCode> {
    let (dict, spec) = match &args.board {
        Some(path) => BoardFile::load(path)?.unpack()?,
        None => {
            let dict = MarkerDictionary::generate(4, 50, 4, 0)?;
            let spec = BoardSpec::with_sequential_ids(5, 7, 24.0, 0.25)?;
            (dict, spec)
        }
    };
    let artifact = match &args.artifact_mm {
        Some(text) => {
            let (w, h) = text.split_once('x').ok_or_else(|| {
                Error::ConfigInvalid(format!("artifact size '{text}' must look like 63.5x88.9"))
            })?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::ConfigInvalid(format!("artifact size '{text}': {e}")))
            };
            Some(ArtifactRect {
                center_mm: [spec.board_width_mm() / 2.0, spec.board_height_mm() / 2.0],
                width_mm: parse(w)?,
                height_mm: parse(h)?,
                gray: 60,
            })
        }
        None => None,
    };

    let images_dir = args.out_dir.join("images");
    std::fs::create_dir_all(&images_dir)?;
    BoardFile::pack(&dict, &spec).save(&args.out_dir.join("board.json"))?;

    // A phone-like camera; the focal override in cass.json recovers
    // exactly the pixel focal the scenes were built with.
    let sensor = SensorSpec::new(4.8, 3.6)?;
    let f_px = 1550.0 * args.width as f64 / 1600.0;
    let focal_mm = f_px * sensor.width_mm() / args.width as f64;
    ConfigFile {
        sensor_width_mm: sensor.width_mm(),
        sensor_height_mm: sensor.height_mm(),
        square_length_mm: spec.square_length_mm(),
        board_spec: "board.json".into(),
        focal_length_mm_override: Some(focal_mm),
    }
    .save(&args.out_dir.join("cass.json"))?;

    for i in 0..args.scenes {
        let intrinsics = CameraIntrinsics::new(
            f_px,
            f_px,
            args.width as f64 / 2.0,
            args.height as f64 / 2.0,
            args.k1,
            args.k2,
        );
        let roll = args.roll_deg + 9.0 * i as f64;
        let homography = oblique_view_homography(
            &intrinsics,
            spec.board_width_mm(),
            spec.board_height_mm(),
            args.width,
            args.height,
            args.tilt_deg,
            roll,
            0.75,
        )?;
        let truth = SceneTruth {
            homography,
            intrinsics,
            noise_sigma: args.noise,
            blur_radius: args.blur,
            seed: args.seed + i as u64,
        };
        let image = render_scene_antialiased(
            &dict,
            &spec,
            &truth,
            artifact.as_ref(),
            args.width,
            args.height,
            3,
        )?;
        let name = format!("scene_{i:02}.png");
        image.save_png(&images_dir.join(&name))?;
        let sidecar = SceneSidecar {
            image: name.clone(),
            truth: &truth,
            artifact: artifact.as_ref(),
        };
        std::fs::write(
            args.out_dir.join(format!("scene_{i:02}_truth.json")),
            serde_json::to_string_pretty(&sidecar)?,
        )?;
        println!("wrote {}", images_dir.join(&name).display());
    }
    println!(
        "fixture directory ready: cass scan {} <out> <np>",
        args.out_dir.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_scan(args: ScanArgs) -> Result<ExitCode> {
    let mut config = RunConfig::load(
        &args.input_dir,
        &args.output_dir,
        args.np,
        args.write_intermediate,
    )?;
    config.jobs = args.jobs;
    let summary = run_batch(&config)?;
    for result in &summary.results {
        match (&result.reason, &result.output) {
            (None, Some(output)) => {
                let rms = result.rms_px.unwrap_or(f64::NAN);
                println!(
                    "ok      {} -> {} ({} markers, rms {:.3} px)",
                    result.input, output, result.markers, rms
                );
            }
            (reason, _) => println!(
                "skipped {} ({})",
                result.input,
                reason.as_deref().unwrap_or("unknown")
            ),
        }
        for warning in &result.warnings {
            println!("        warning: {warning}");
        }
    }
    println!(
        "{} ok, {} skipped; outputs are {} x {} px at {} px/mm",
        summary.ok, summary.skipped, summary.out_width_px, summary.out_height_px, summary.np
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(args: VerifyArgs) -> Result<ExitCode> {
    let (a_mm, b_mm) = verify_artifact(args.np, args.edge_a_px, args.edge_b_px)?;
    println!(
        "edge A: {:.3} px / {} px/mm = {:.4} mm",
        args.edge_a_px, args.np, a_mm
    );
    println!(
        "edge B: {:.3} px / {} px/mm = {:.4} mm",
        args.edge_b_px, args.np, b_mm
    );

    let mut pass = true;
    for (label, measured, expected) in [
        ("A", a_mm, args.expected_a_mm),
        ("B", b_mm, args.expected_b_mm),
    ] {
        if let Some(expected) = expected {
            let deviation = measured - expected;
            let ok = deviation.abs() <= args.tolerance_mm;
            pass &= ok;
            println!(
                "edge {label}: expected {expected:.4} mm, deviation {deviation:+.4} mm -> {}",
                if ok { "PASS" } else { "FAIL" }
            );
        }
    }
    if pass {
        Ok(ExitCode::SUCCESS)
    } else {
        println!("verification failed: recheck sensor size, square length and np");
        Ok(ExitCode::from(2))
    }
}
