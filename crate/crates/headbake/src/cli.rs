//! Command-line interface.
//!
//! Exit codes: 0 success, 2 configuration error (bad flags, unknown scene,
//! unreadable config or input path), 3 data error (corrupt file, empty
//! level, dimension mismatch in a sequence), 4 validation below threshold.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use headbake_core::asset::AvatarBundle;
use headbake_core::field::lattice::LatticeField;
use headbake_core::raster::{RenderSettings, Renderer};
use headbake_core::rig::FramePose;

use crate::bench::{affine_fit, format_report, run_bench};
use crate::bundle_io::{load_bundle, save_bundle};
use crate::config::{BakeArgs, BenchArgs, ConfigFile, RenderArgs, SceneArgs, ValidateArgs};
use crate::error::{CliError, CliResult, FormatError};
use crate::images::{unpremultiply_to_u8, write_png, write_raw};
use crate::lattice_io::save_lattice;
use crate::pipeline::{bake_bundle, stats_line, validate_bundle, validation_poses};
use crate::scene_source::{load_scene, SceneSource};
use crate::sequence::{load_sequence, AnimationSequence, FrameRecord, PoseError};
use crate::web_export::export_web;

pub const THREADS_ENV: &str = "HEADBAKE_THREADS";

#[derive(Debug, Parser)]
#[command(name = "headbake", version, about = "Bake layered head avatars and render them in software")]
pub struct Cli {
    /// TOML file with defaults for every command.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, env = THREADS_ENV)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Bake a scene into a bundle file.
    Bake {
        /// Library scene name or lattice dump path.
        scene: String,
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        scene_args: SceneArgs,
        #[command(flatten)]
        bake: BakeArgs,
    },
    /// Render one pose or a sequence to images.
    Render {
        bundle: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        pose: PoseArgs,
        #[command(flatten)]
        render: RenderArgs,
    },
    /// Render a reenactment sequence (synthetic when no file is given).
    Reenact {
        bundle: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long)]
        sequence: Option<PathBuf>,
        /// Length of the synthetic sequence.
        #[arg(long, default_value_t = 30)]
        frames: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        render: RenderArgs,
    },
    /// Compare a bundle against the reference renderer of its scene.
    Validate {
        bundle: PathBuf,
        /// Scene the bundle was baked from.
        scene: String,
        #[command(flatten)]
        scene_args: SceneArgs,
        #[command(flatten)]
        validate: ValidateArgs,
        /// Write the report as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Measure frame rate and per-stage timings.
    Bench {
        bundle: PathBuf,
        #[command(flatten)]
        bench: BenchArgs,
        /// Write the reports as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Write the static asset directory for the browser viewer.
    ExportWeb {
        bundle: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Sample a scene onto a lattice and write it as a dump.
    DumpLattice {
        scene: String,
        #[arg(short, long)]
        output: PathBuf,
        /// Lattice points per axis.
        #[arg(long, default_value_t = 128)]
        dims: usize,
        #[command(flatten)]
        scene_args: SceneArgs,
    },
    /// Print a bundle's manifest and payload sizes.
    Inspect { bundle: PathBuf },
}

#[derive(Debug, Clone, Default, Args)]
pub struct PoseArgs {
    /// Pose assignment, repeatable: `expr:I=V`, `joint:NAME=X,Y,Z`,
    /// `global=X,Y,Z`, `translate=X,Y,Z`, `yaw=D`, `pitch=D`,
    /// `distance=D`, `fov=D`.
    #[arg(long = "pose", value_name = "KEY=VALUE")]
    pub assignments: Vec<String>,
    /// JSON-lines sequence; one image per frame.
    #[arg(long, conflicts_with = "assignments")]
    pub sequence: Option<PathBuf>,
}

fn pose_error(e: PoseError) -> CliError {
    match e {
        PoseError::Spec { .. } | PoseError::UnknownJoint(_) => CliError::config(e),
        _ => CliError::data(e),
    }
}

fn inline_pose(assignments: &[String], bundle: &AvatarBundle) -> CliResult<FramePose> {
    let mut rec = FrameRecord::rest(0.0);
    for a in assignments {
        rec.apply_assignment(a).map_err(CliError::config)?;
    }
    let m = &bundle.manifest;
    rec.to_pose(m.n_expr, m.n_joints).map_err(CliError::config)
}

fn open_bundle(path: &Path) -> CliResult<AvatarBundle> {
    if !path.is_file() {
        return Err(CliError::config(anyhow::anyhow!("{}: no such bundle file", path.display())));
    }
    Ok(load_bundle(path)?)
}

fn sequence_poses(seq: &AnimationSequence, bundle: &AvatarBundle) -> CliResult<Vec<FramePose>> {
    let m = &bundle.manifest;
    seq.poses(m.n_expr, m.n_joints).map_err(pose_error)
}

fn read_sequence(path: &Path) -> CliResult<AnimationSequence> {
    if !path.is_file() {
        return Err(CliError::config(anyhow::anyhow!("{}: no such sequence file", path.display())));
    }
    Ok(load_sequence(path)?)
}

/// Writes `frame_NNNN.png` (and `.f32` when `raw`) per pose.
pub fn render_poses(bundle: &AvatarBundle, poses: &[FramePose], settings: &RenderSettings, raw: bool, dir: &Path) -> CliResult<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::config(FormatError::io(dir, e)))?;
    let renderer = Renderer::new(bundle)?;
    let mut written = Vec::with_capacity(poses.len());
    for (i, pose) in poses.iter().enumerate() {
        let img = renderer.render(pose, settings)?;
        let png = dir.join(format!("frame_{i:04}.png"));
        write_png(&unpremultiply_to_u8(&img), &png)?;
        if raw {
            write_raw(&img, dir.join(format!("frame_{i:04}.f32")))?;
        }
        written.push(png);
    }
    Ok(written)
}

/// Resolves the effective thread count and installs the global pool.
fn init_threads(threads: Option<usize>) -> CliResult<()> {
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::config(anyhow::anyhow!("thread pool: {e}")))?;
    }
    Ok(())
}

pub fn run(cli: Cli) -> CliResult<()> {
    let file = match &cli.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    init_threads(cli.threads.or(file.threads))?;
    match cli.command {
        Command::Bake {
            scene,
            output,
            scene_args,
            bake,
        } => {
            let cfg = bake.overlay(&file.bake).resolve();
            cfg.validate()?;
            let loaded = load_scene(&SceneSource::parse(&scene), &scene_args.overlay(&file.scene).resolve())?;
            let seed = scene_args.overlay(&file.scene).resolve().seed;
            let (bundle, stats) = bake_bundle(&loaded, &cfg, seed)?;
            for (i, s) in stats.iter().enumerate() {
                println!("{}", stats_line(i, s));
            }
            save_bundle(&bundle, &output)?;
            let size = std::fs::metadata(&output).map(|m| m.len()).unwrap_or(0);
            println!(
                "wrote {} ({} layers, {} faces, {size} bytes, provenance {})",
                output.display(),
                bundle.layers.len(),
                bundle.manifest.layer_faces.iter().sum::<usize>(),
                bundle.manifest.provenance
            );
        }
        Command::Render {
            bundle,
            output,
            pose,
            render,
        } => {
            let render = render.overlay(&file.render);
            let b = open_bundle(&bundle)?;
            let poses = match &pose.sequence {
                Some(p) => sequence_poses(&read_sequence(p)?, &b)?,
                None => vec![inline_pose(&pose.assignments, &b)?],
            };
            let written = render_poses(&b, &poses, &render.resolve(), render.raw.unwrap_or(false), &output)?;
            println!("wrote {} frames to {}", written.len(), output.display());
        }
        Command::Reenact {
            bundle,
            output,
            sequence,
            frames,
            seed,
            render,
        } => {
            let render = render.overlay(&file.render);
            let b = open_bundle(&bundle)?;
            let seq = match &sequence {
                Some(p) => read_sequence(p)?,
                None => AnimationSequence::synthetic(frames, b.manifest.n_expr, seed),
            };
            let poses = sequence_poses(&seq, &b)?;
            std::fs::create_dir_all(&output).map_err(|e| CliError::config(FormatError::io(&output, e)))?;
            let seq_path = output.join("sequence.jsonl");
            std::fs::write(&seq_path, seq.to_jsonl()).map_err(|e| CliError::config(FormatError::io(&seq_path, e)))?;
            let written = render_poses(&b, &poses, &render.resolve(), render.raw.unwrap_or(false), &output)?;
            println!("wrote {} frames to {}", written.len(), output.display());
        }
        Command::Validate {
            bundle,
            scene,
            scene_args,
            validate,
            json,
        } => {
            let v = validate.overlay(&file.validate);
            let b = open_bundle(&bundle)?;
            let loaded = load_scene(&SceneSource::parse(&scene), &scene_args.overlay(&file.scene).resolve())?;
            let poses = validation_poses(&b, v.poses.unwrap_or(5).max(1));
            let report = validate_bundle(&b, &loaded, &poses, v.size.unwrap_or(256), v.thresholds())?;
            for (i, f) in report.frames.iter().enumerate() {
                println!("pose {i}: L1 {:.5} PSNR {:.2} dB", f.l1, f.psnr);
            }
            let verdict = if report.pass { "PASS" } else { "FAIL" };
            println!(
                "{verdict}: mean L1 {:.5} (max {}), min PSNR {:.2} dB (min {})",
                report.mean_l1, report.thresholds.max_l1, report.min_psnr, report.thresholds.min_psnr
            );
            if let Some(p) = json {
                let text = serde_json::to_string_pretty(&report).map_err(CliError::data)?;
                std::fs::write(&p, text).map_err(|e| CliError::config(FormatError::io(&p, e)))?;
            }
            if !report.pass {
                return Err(CliError::validation(anyhow::anyhow!("validation below threshold")));
            }
        }
        Command::Bench { bundle, bench, json } => {
            let cfg = bench.overlay(&file.bench).resolve();
            let b = open_bundle(&bundle)?;
            let reports = run_bench(&b, &cfg)?;
            for r in &reports {
                println!("{}", format_report(r));
            }
            for &res in &cfg.resolutions {
                let pts: Vec<(f64, f64)> = reports
                    .iter()
                    .filter(|r| r.resolution == res)
                    .map(|r| (r.layers as f64, r.frame_ms))
                    .collect();
                if pts.len() >= 3 {
                    let (a, k, dev) = affine_fit(&pts);
                    println!("layer scaling at {res}: {a:.2} ms + {k:.2} ms/layer, max deviation {:.1}%", dev * 100.0);
                }
            }
            if let Some(p) = json {
                let text = serde_json::to_string_pretty(&reports).map_err(CliError::data)?;
                std::fs::write(&p, text).map_err(|e| CliError::config(FormatError::io(&p, e)))?;
            }
        }
        Command::ExportWeb { bundle, output } => {
            let b = open_bundle(&bundle)?;
            let m = export_web(&b, &output).map_err(|e| match e {
                FormatError::Io { .. } => CliError::config(e),
                e => e.into(),
            })?;
            println!("wrote {} layers to {}", m.layers.len(), output.display());
        }
        Command::DumpLattice {
            scene,
            output,
            dims,
            scene_args,
        } => {
            let loaded = load_scene(&SceneSource::parse(&scene), &scene_args.overlay(&file.scene).resolve())?;
            let lattice = LatticeField::sample_from(&loaded.scene, [dims; 3])?;
            save_lattice(&lattice, &output).map_err(|e| match e {
                FormatError::Io { .. } => CliError::config(e),
                e => e.into(),
            })?;
            println!("wrote {}^3 lattice to {}", dims, output.display());
        }
        Command::Inspect { bundle } => {
            let b = open_bundle(&bundle)?;
            let doc = crate::manifest::ManifestDoc::from(&b.manifest);
            println!("{}", serde_json::to_string_pretty(&doc).map_err(CliError::data)?);
            let s = b.size_report();
            println!(
                "geometry {} B, textures {} B, template {} B, decoder {} B, {} triangles",
                s.geometry, s.textures, s.template, s.decoder, s.triangles
            );
        }
    }
    Ok(())
}
