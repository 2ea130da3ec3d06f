//! `latentmotion` — train, sample, interpolate, and self-check from one
//! binary. Exit codes are the machine contract: 0 success, 2 bad arguments
//! or config, 3 numeric abort, 4 unreadable checkpoint, 5 failed self-check,
//! 1 anything else. Stdout is for humans (the loss CSV on disk is not).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use latentmotion_cli::{checks, load_config};
use latentmotion_flow::{interpolate_sequence, FlowConfig, Frame};
use latentmotion_model::{
    eval_temporal_consistency, load_checkpoint, sample_video, train, ModelError, Result,
};

#[derive(Parser)]
#[command(name = "latentmotion", version, about = "Latent video diffusion at desk scale")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Train from a JSON config, writing checkpoints and a loss log.
    Train {
        /// Path to the JSON training config.
        #[arg(long, value_name = "PATH")]
        config: PathBuf,
        /// Checkpoint directory to resume from.
        #[arg(long, value_name = "CKPT")]
        resume: Option<PathBuf>,
    },
    /// Sample a clip from a checkpoint and write interpolated PGM frames.
    Sample {
        /// Checkpoint directory (config.json + manifest.txt + tensors.bin).
        #[arg(long, value_name = "CKPT")]
        ckpt: PathBuf,
        /// Condition class id.
        #[arg(long, value_name = "INT")]
        cond: usize,
        /// Seed for the starting noise.
        #[arg(long, value_name = "INT")]
        seed: u64,
        /// Number of sampling steps (must divide into the training schedule).
        #[arg(long, value_name = "INT")]
        steps: usize,
        /// Output directory for frame_XXX.pgm files.
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
    /// Double a directory of PGM frames to 2N−1 by mid-frame synthesis.
    Interpolate {
        /// Directory holding ≥2 PGM frames, interpolated in lexical order.
        #[arg(long = "in", value_name = "DIR")]
        input: PathBuf,
        /// Output directory for the 2N−1 result frames.
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
    /// Run gradient checks and mask/schedule invariants; print a table.
    Check {
        /// Path to a (small) JSON training config sizing the checks.
        #[arg(long, value_name = "PATH")]
        config: PathBuf,
        /// Deliberately corrupt one gradient comparison (test fixture).
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// Map error kinds onto the documented exit codes.
fn exit_code(e: &ModelError) -> u8 {
    match e {
        ModelError::Config(_) | ModelError::Contract(_) | ModelError::Lookup(_) => 2,
        ModelError::Numeric(_) => 3,
        ModelError::Checkpoint(_) => 4,
        _ => 1,
    }
}

fn run(cmd: Cmd) -> Result<ExitCode> {
    match cmd {
        Cmd::Train { config, resume } => cmd_train(&config, resume.as_deref()),
        Cmd::Sample { ckpt, cond, seed, steps, out } => cmd_sample(&ckpt, cond, seed, steps, &out),
        Cmd::Interpolate { input, out } => cmd_interpolate(&input, &out),
        Cmd::Check { config, inject_fault } => cmd_check(&config, inject_fault),
    }
}

fn cmd_train(config: &Path, resume: Option<&Path>) -> Result<ExitCode> {
    let cfg = load_config(config)?;
    let report = train(&cfg, resume)?;
    println!("trained to step {}", report.final_step);
    println!("loss log: {}", report.loss_csv.display());
    println!("final checkpoint: {}", report.final_checkpoint.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_sample(ckpt: &Path, cond: usize, seed: u64, steps: usize, out: &Path) -> Result<ExitCode> {
    let stored = load_checkpoint(ckpt)?;
    let frames = sample_video(&stored.params, &stored.config, cond, steps, seed)?;
    fs::create_dir_all(out)?;
    for (i, frame) in frames.iter().enumerate() {
        frame.write_pgm(&out.join(format!("frame_{i:03}.pgm")))?;
    }
    let consistency = eval_temporal_consistency(&frames)?;
    println!("wrote {} frames to {}", frames.len(), out.display());
    println!("temporal consistency: {consistency:.6}");
    Ok(ExitCode::SUCCESS)
}

fn cmd_interpolate(input: &Path, out: &Path) -> Result<ExitCode> {
    let entries = fs::read_dir(input)
        .map_err(|e| ModelError::Contract(format!("cannot read {}: {e}", input.display())))?;
    let mut paths: Vec<PathBuf> = entries
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()
        .map_err(|e| ModelError::Contract(format!("cannot list {}: {e}", input.display())))?;
    paths.sort();
    let mut frames = Vec::with_capacity(paths.len());
    for path in &paths {
        let frame = Frame::read_pgm(path)
            .map_err(|e| ModelError::Contract(format!("{}: not a PGM frame: {e}", path.display())))?;
        frames.push(frame);
    }
    if frames.len() < 2 {
        return Err(ModelError::Contract(format!(
            "need at least 2 input frames in {}, found {}",
            input.display(),
            frames.len()
        )));
    }
    let expanded = interpolate_sequence(&frames, &FlowConfig::default())
        .map_err(|e| ModelError::Contract(format!("interpolation failed: {e}")))?;
    fs::create_dir_all(out)?;
    for (i, frame) in expanded.iter().enumerate() {
        frame.write_pgm(&out.join(format!("frame_{i:03}.pgm")))?;
    }
    println!("interpolated {} frames to {} in {}", frames.len(), expanded.len(), out.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_check(config: &Path, inject_fault: bool) -> Result<ExitCode> {
    let cfg = load_config(config)?;
    let reports = checks::run_all(&cfg, inject_fault);
    let width = reports.iter().map(|r| r.name.len()).max().unwrap_or(0);
    let mut all_passed = true;
    for r in &reports {
        let verdict = if r.passed { "pass" } else { "FAIL" };
        println!("{:<width$}  {verdict}  {}", r.name, r.detail);
        all_passed &= r.passed;
    }
    if all_passed {
        println!("all {} checks passed", reports.len());
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("error: one or more checks failed");
        Ok(ExitCode::from(5))
    }
}
