use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use rayon::prelude::*;
use serde_json::{json, Value};

use symrecon::io::{dataset_from_scene, export_points, write_trace, Dataset, ResultFile};
use symrecon::pipeline::{evaluate_result, run_multi, run_single};
use symrecon::rsfm::MultiConfig;
use symrecon::single_image::SingleImageConfig;
use symrecon::synthetic::{gen_scene, SceneConfig};
use symrecon::Error;

const EXIT_INPUT: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_NOT_CONVERGED: u8 = 4;

/// Camera and symmetric 3D structure recovery from 2D keypoints.
#[derive(Parser, Debug)]
#[command(name = "symrecon", version)]
struct Cli {
    /// Random seed (used by `synth`).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Only log errors.
    #[arg(long, global = true)]
    quiet: bool,
    /// Print a machine-readable JSON summary on stdout.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic scene: DIR/dataset.json and DIR/groundtruth.json.
    Synth(SynthArgs),
    /// Reconstruct each fully visible image from its Manhattan axes.
    ReconstructSingle(SingleArgs),
    /// Reconstruct all images of a dataset jointly. Given a directory,
    /// every `*.json` dataset in it is processed and OUT is a directory.
    ReconstructMulti(MultiArgs),
    /// Print rotation and shape errors of a result against groundtruth.
    Evaluate(EvalArgs),
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long)]
    images: usize,
    #[arg(long)]
    pairs: usize,
    /// Noise standard deviation as a fraction of the shape diameter.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Per-keypoint occlusion probability.
    #[arg(long, default_value_t = 0.0)]
    occlusion: f64,
    /// Emit Manhattan axis declarations.
    #[arg(long)]
    manhattan: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SingleArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Also store the other seven members of each camera sign family.
    #[arg(long)]
    all_signs: bool,
    /// Write each image's shape as an ASCII PLY file (the image id is added
    /// to the name when there are several images).
    #[arg(long)]
    points: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MultiArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = MultiConfig::default().max_iters)]
    max_iters: usize,
    #[arg(long, default_value_t = MultiConfig::default().tol)]
    tol: f64,
    /// Rank-3 completion rounds before initialization.
    #[arg(long = "init-T", default_value_t = MultiConfig::default().init_iters)]
    init_t: usize,
    /// Write the energy trace as CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Write the shape as an ASCII PLY file.
    #[arg(long)]
    points: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    result: PathBuf,
    #[arg(long)]
    groundtruth: PathBuf,
}

/// A finished command: its stdout summary and exit code.
struct Outcome {
    summary: Value,
    text: String,
    code: u8,
}

fn exit_code(e: &Error) -> u8 {
    if e.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_INPUT
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "error" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();

    let result = match &cli.command {
        Command::Synth(a) => synth(a, cli.seed),
        Command::ReconstructSingle(a) => reconstruct_single(a),
        Command::ReconstructMulti(a) if a.dataset.is_dir() => reconstruct_dir(a),
        Command::ReconstructMulti(a) => reconstruct_multi(a),
        Command::Evaluate(a) => evaluate(a),
    };
    match result {
        Ok(out) => {
            if cli.json {
                println!("{}", out.summary);
            } else if !out.text.is_empty() {
                println!("{}", out.text);
            }
            ExitCode::from(out.code)
        }
        Err(e) => {
            if cli.json {
                println!("{}", json!({ "error": e.to_string(), "exit_code": exit_code(&e) }));
            }
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn synth(a: &SynthArgs, seed: u64) -> Result<Outcome, Error> {
    let scene = gen_scene(&SceneConfig {
        n_images: a.images,
        n_pairs: a.pairs,
        noise_sigma: a.noise,
        occlusion_rate: a.occlusion,
        seed,
        manhattan: a.manhattan,
    })?;
    fs::create_dir_all(&a.out)?;
    let dataset = a.out.join("dataset.json");
    let groundtruth = a.out.join("groundtruth.json");
    dataset_from_scene(&scene, false).to_file().write(&dataset)?;
    dataset_from_scene(&scene, true).to_file().write(&groundtruth)?;
    Ok(Outcome {
        summary: json!({
            "dataset": dataset,
            "groundtruth": groundtruth,
            "images": a.images,
            "pairs": a.pairs,
            "seed": seed,
        }),
        text: format!("wrote {} and {}", dataset.display(), groundtruth.display()),
        code: 0,
    })
}

fn summarize(result: &ResultFile, out: &Path) -> Outcome {
    let mut summary = json!({
        "output": out,
        "method": result.method,
        "images": result.images.len(),
        "dropped_images": result.dropped_images.len(),
        "skipped_images": result.skipped_images.len(),
        "converged": result.converged,
        "iterations": result.iterations,
    });
    let mut text = format!(
        "reconstructed {} image(s) -> {}",
        result.images.len(),
        out.display()
    );
    if let Some(last) = result.trace.last() {
        summary["energy"] = json!(last.energy);
        text.push_str(&format!(
            "\niterations: {}, energy: {:e}, converged: {}",
            result.iterations, last.energy, result.converged
        ));
    }
    if let Some(m) = &result.metrics {
        summary["metrics"] = json!(m);
        text.push_str(&format!("\ne_R = {}\ne_S = {}", m.e_r, m.e_s));
    }
    Outcome {
        summary,
        text,
        code: if result.converged { 0 } else { EXIT_NOT_CONVERGED },
    }
}

fn with_suffix(path: &Path, id: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("points");
    let ext = path.extension().and_then(|s| s.to_str()).unwrap_or("ply");
    path.with_file_name(format!("{stem}.{id}.{ext}"))
}

fn reconstruct_single(a: &SingleArgs) -> Result<Outcome, Error> {
    let ds = Dataset::load(&a.dataset)?;
    let result = run_single(&ds, &SingleImageConfig::default(), a.all_signs)?;
    result.write(&a.out)?;
    if let Some(points) = &a.points {
        let shapes = result.shapes()?;
        if shapes.len() == 1 {
            export_points(&shapes[0], points)?;
        } else {
            for (img, shape) in result.images.iter().zip(&shapes) {
                export_points(shape, &with_suffix(points, &img.id))?;
            }
        }
    }
    Ok(summarize(&result, &a.out))
}

fn multi_config(a: &MultiArgs) -> MultiConfig {
    MultiConfig {
        max_iters: a.max_iters,
        tol: a.tol,
        init_iters: a.init_t,
    }
}

fn run_multi_file(
    dataset: &Path,
    out: &Path,
    trace: Option<&Path>,
    points: Option<&Path>,
    cfg: &MultiConfig,
) -> Result<Outcome, Error> {
    let ds = Dataset::load(dataset)?;
    let result = run_multi(&ds, cfg)?;
    result.write(out)?;
    if let Some(path) = trace {
        write_trace(path, &result.trace)?;
    }
    if let Some(path) = points {
        export_points(&result.shapes()?[0], path)?;
    }
    if !result.converged {
        warn!(
            "{}: no convergence within {} iterations; result written",
            dataset.display(),
            result.iterations
        );
    }
    Ok(summarize(&result, out))
}

fn reconstruct_multi(a: &MultiArgs) -> Result<Outcome, Error> {
    run_multi_file(
        &a.dataset,
        &a.out,
        a.trace.as_deref(),
        a.points.as_deref(),
        &multi_config(a),
    )
}

/// One dataset per `*.json` file in the directory, reconstructed in
/// parallel. The exit code is the largest of the per-file codes.
fn reconstruct_dir(a: &MultiArgs) -> Result<Outcome, Error> {
    let mut files: Vec<PathBuf> = fs::read_dir(&a.dataset)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e == "json"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::InvalidInput(format!(
            "no *.json datasets in {}",
            a.dataset.display()
        )));
    }
    fs::create_dir_all(&a.out)?;
    for dir in [&a.trace, &a.points].into_iter().flatten() {
        fs::create_dir_all(dir)?;
    }
    let cfg = multi_config(a);
    let outcomes: Vec<(String, Result<Outcome, Error>)> = files
        .par_iter()
        .map(|file| {
            let stem = file.file_stem().and_then(|s| s.to_str()).unwrap_or("dataset").to_string();
            let out = a.out.join(format!("{stem}.result.json"));
            let trace = a.trace.as_ref().map(|d| d.join(format!("{stem}.trace.csv")));
            let points = a.points.as_ref().map(|d| d.join(format!("{stem}.ply")));
            let outcome = run_multi_file(file, &out, trace.as_deref(), points.as_deref(), &cfg);
            (stem, outcome)
        })
        .collect();

    let mut code = 0;
    let mut summary = serde_json::Map::new();
    let mut text = Vec::new();
    for (stem, outcome) in outcomes {
        match outcome {
            Ok(o) => {
                info!("{stem}: done");
                code = code.max(o.code);
                text.extend(o.text.lines().map(|l| format!("[{stem}] {l}")));
                summary.insert(stem, o.summary);
            }
            Err(e) => {
                eprintln!("error: {stem}: {e}");
                code = code.max(exit_code(&e));
                text.push(format!("[{stem}] failed: {e}"));
                summary.insert(stem, json!({ "error": e.to_string(), "exit_code": exit_code(&e) }));
            }
        }
    }
    Ok(Outcome {
        summary: Value::Object(summary),
        text: text.join("\n"),
        code,
    })
}

fn evaluate(a: &EvalArgs) -> Result<Outcome, Error> {
    let result = ResultFile::read(&a.result)?;
    let groundtruth = Dataset::load(&a.groundtruth)?;
    let report = evaluate_result(&result, &groundtruth)?;
    Ok(Outcome {
        summary: json!(report),
        text: format!("e_R = {}\ne_S = {}", report.e_r, report.e_s),
        code: 0,
    })
}
