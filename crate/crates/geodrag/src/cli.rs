//! Command-line pipeline: scene projection, dragging, benchmarking,
//! trajectory plots, and synthetic-case generation.
//!
//! Exit codes: 0 success, 2 input/validation error, 3 runtime drag error.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{CommandFactory, FromArgMatches, Parser, Subcommand};

use crate::drag::{run_drag, AblationFlags, Denoiser, DragConfig, EditableMask};
use crate::error::{Error, Result};
use crate::eval::{
    generate_synthetic_case, mean_distance, reference_suite, run_benchmark, BenchSetup, CaseSpec,
    SuiteSpec, Variant,
};
use crate::field::{detect_points, Extractor, LatentField};
use crate::geometry::Point2;
use crate::pgm;
use crate::plot::render_trajectory_svg;
use crate::scene3d::{pairs_to_instruction, render_wireframe, SceneSpec};

const EXIT_OK: i32 = 0;
const EXIT_VALIDATION: i32 = 2;
const EXIT_RUNTIME: i32 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "geodrag",
    version,
    about = "Geometry-guided drag editing on latent feature grids"
)]
struct Cli {
    /// Seed overriding the config seed; all randomness flows from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Project a scene's source/target keypoints into image space and write
    /// a drag instruction.
    Project {
        /// Scene document (JSON).
        scene: PathBuf,
        /// Output instruction path.
        #[arg(long)]
        out: PathBuf,
        /// Also render the mesh wireframe to this PGM file.
        #[arg(long)]
        wireframe: Option<PathBuf>,
        /// Integral image-to-latent downscale written into the instruction.
        #[arg(long, default_value_t = 1)]
        latent_scale: usize,
    },
    /// Run the drag procedure on a latent container.
    Drag {
        /// Input latent container.
        latent: PathBuf,
        /// Drag instruction (JSON).
        instruction: PathBuf,
        /// Config file (JSON, DragConfig keys plus optional
        /// extractor/denoiser blocks).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory for the final latent and trajectory log.
        #[arg(long)]
        out_dir: PathBuf,
        /// Config override, dotted-key=value; repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Run a benchmark suite across ablation variants and write a report.
    Bench {
        /// Suite spec (JSON).
        suite: PathBuf,
        /// Output report path.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        /// Variants to run, overriding the suite's list.
        #[arg(long, value_name = "VARIANT")]
        variants: Vec<String>,
        /// Worker threads for case execution.
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Write each case's final latent into this directory.
        #[arg(long)]
        save_latents: Option<PathBuf>,
    },
    /// Render a trajectory log as an SVG plot.
    Plot {
        /// Trajectory log (JSON lines).
        log: PathBuf,
        /// Output SVG path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate synthetic blob cases: latents, instructions, ground truths,
    /// and a suite spec.
    Synth {
        /// Output directory.
        #[arg(long)]
        out_dir: PathBuf,
        /// Number of cases (the shipped reference suite has 20).
        #[arg(long, default_value_t = 20)]
        cases: usize,
    },
}

fn config_keys_help() -> String {
    let defaults = serde_json::to_value(DragConfig::default()).expect("config serializes");
    let mut help = String::from("Config keys and defaults (config file JSON / --set overrides):\n");
    for (key, value) in defaults.as_object().expect("config is an object") {
        let _ = writeln!(help, "  {key} = {value}");
    }
    help.push_str("  extractor = {\"kind\":\"identity\"} or {\"kind\":\"conv\",\"layers\":[...]}\n");
    help.push_str("  denoiser = {\"kind\":\"identity\"}, {\"kind\":\"gaussian\",\"sigma\":S} or {\"kind\":\"external\",\"command\":[...]}\n");
    help
}

/// Parses arguments and dispatches; returns the process exit code.
pub fn run() -> i32 {
    let help: &'static str = Box::leak(config_keys_help().into_boxed_str());
    let mut command = Cli::command();
    for name in ["project", "drag", "bench", "plot", "synth"] {
        command = command.mut_subcommand(name, |sub| sub.after_help(help));
    }
    let matches = match command.try_get_matches() {
        Ok(matches) => matches,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_VALIDATION,
            };
            let _ = err.print();
            return code;
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return EXIT_VALIDATION;
        }
    };

    let outcome = match cli.command {
        Command::Project {
            scene,
            out,
            wireframe,
            latent_scale,
        } => cmd_project(&scene, &out, wireframe.as_deref(), latent_scale),
        Command::Drag {
            latent,
            instruction,
            config,
            out_dir,
            set,
        } => cmd_drag(&latent, &instruction, config.as_deref(), &out_dir, &set, cli.seed),
        Command::Bench {
            suite,
            out,
            config,
            set,
            variants,
            workers,
            save_latents,
        } => cmd_bench(
            &suite,
            &out,
            config.as_deref(),
            &set,
            &variants,
            workers,
            save_latents.as_deref(),
            cli.seed,
        ),
        Command::Plot { log, out } => cmd_plot(&log, &out),
        Command::Synth { out_dir, cases } => cmd_synth(&out_dir, cases, cli.seed),
    };

    match outcome {
        Ok(()) => EXIT_OK,
        Err(CmdError { exit_code, error }) => {
            eprintln!("error: {error}");
            exit_code
        }
    }
}

struct CmdError {
    exit_code: i32,
    error: Error,
}

trait Phase<T> {
    fn validation(self) -> std::result::Result<T, CmdError>;
    fn runtime(self) -> std::result::Result<T, CmdError>;
}

impl<T> Phase<T> for Result<T> {
    fn validation(self) -> std::result::Result<T, CmdError> {
        self.map_err(|error| CmdError {
            exit_code: EXIT_VALIDATION,
            error,
        })
    }
    fn runtime(self) -> std::result::Result<T, CmdError> {
        self.map_err(|error| CmdError {
            exit_code: EXIT_RUNTIME,
            error,
        })
    }
}

/// Effective run settings: drag config plus extractor and denoiser.
pub struct RunSettings {
    pub config: DragConfig,
    pub extractor: Extractor,
    pub denoiser: Denoiser,
}

/// Loads a config file, applies dotted-key overrides, and splits out the
/// extractor/denoiser blocks. Unknown keys are rejected.
pub fn load_settings(
    config_path: Option<&Path>,
    overrides: &[String],
    seed: Option<u64>,
) -> Result<RunSettings> {
    let mut value: serde_json::Value = match config_path {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
            })?;
            serde_json::from_str(&text)
                .map_err(|e| Error::parse(format!("config {}: {e}", path.display())))?
        }
        None => serde_json::json!({}),
    };
    if !value.is_object() {
        return Err(Error::invalid("config file must hold a JSON object"));
    }
    for setting in overrides {
        apply_override(&mut value, setting)?;
    }
    let obj = value.as_object_mut().expect("checked object");
    let extractor: Extractor = match obj.remove("extractor") {
        Some(v) => serde_json::from_value(v).map_err(|e| Error::parse(format!("extractor: {e}")))?,
        None => Extractor::Identity,
    };
    let denoiser: Denoiser = match obj.remove("denoiser") {
        Some(v) => serde_json::from_value(v).map_err(|e| Error::parse(format!("denoiser: {e}")))?,
        None => Denoiser::Identity,
    };
    let mut config: DragConfig = serde_json::from_value(serde_json::Value::Object(obj.clone()))
        .map_err(|e| Error::parse(format!("config: {e}")))?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    config.validate()?;
    denoiser.validate()?;
    Ok(RunSettings {
        config,
        extractor,
        denoiser,
    })
}

fn apply_override(value: &mut serde_json::Value, setting: &str) -> Result<()> {
    let (key, raw) = setting
        .split_once('=')
        .ok_or_else(|| Error::invalid(format!("override {setting:?} is not KEY=VALUE")))?;
    let parsed: serde_json::Value =
        serde_json::from_str(raw).unwrap_or_else(|_| serde_json::Value::String(raw.to_string()));
    let parts: Vec<&str> = key.split('.').collect();
    let mut cursor = value;
    for part in &parts[..parts.len() - 1] {
        cursor = cursor
            .as_object_mut()
            .ok_or_else(|| Error::invalid(format!("override {key:?} crosses a non-object value")))?
            .entry(part.to_string())
            .or_insert_with(|| serde_json::json!({}));
    }
    cursor
        .as_object_mut()
        .ok_or_else(|| Error::invalid(format!("override {key:?} crosses a non-object value")))?
        .insert(parts[parts.len() - 1].to_string(), parsed);
    Ok(())
}

fn cmd_project(
    scene_path: &Path,
    out: &Path,
    wireframe: Option<&Path>,
    latent_scale: usize,
) -> std::result::Result<(), CmdError> {
    let scene = SceneSpec::load(scene_path).validation()?;
    let (obj, camera, pairs) = scene.project(scene_path).validation()?;
    for pair in &pairs {
        println!("{}: {} -> {}", pair.name, pair.source, pair.target);
    }
    let instruction = pairs_to_instruction(&pairs, camera.pose(), latent_scale).validation()?;
    instruction.save(out).validation()?;
    println!("instruction written to {}", out.display());
    if let Some(wf_path) = wireframe {
        let raster = render_wireframe(&obj.mesh, &camera).validation()?;
        pgm::write_pgm(wf_path, raster.width, raster.height, &raster.pixels).validation()?;
        println!("wireframe written to {}", wf_path.display());
    }
    Ok(())
}

fn load_mask(instruction_path: &Path, mask_path: &str, scale: usize) -> Result<EditableMask> {
    let resolved = if Path::new(mask_path).is_absolute() {
        PathBuf::from(mask_path)
    } else {
        instruction_path
            .parent()
            .unwrap_or(Path::new("."))
            .join(mask_path)
    };
    let (w, h, pixels) = pgm::read_pgm(&resolved)?;
    EditableMask::from_image(&pixels, w, h, scale)
}

fn cmd_drag(
    latent_path: &Path,
    instruction_path: &Path,
    config_path: Option<&Path>,
    out_dir: &Path,
    overrides: &[String],
    seed: Option<u64>,
) -> std::result::Result<(), CmdError> {
    let settings = load_settings(config_path, overrides, seed).validation()?;
    let latent = LatentField::load(latent_path).validation()?;
    let instruction = crate::eval::DragInstruction::load(instruction_path).validation()?;
    let scale = instruction.scale().validation()?;
    let mask = match &instruction.mask_path {
        Some(p) => Some(load_mask(instruction_path, p, scale).validation()?),
        None => None,
    };
    std::fs::create_dir_all(out_dir).map_err(Error::from).validation()?;

    let log_path = out_dir.join("trajectory.jsonl");
    let outcome = match run_drag(
        &latent,
        &instruction,
        mask,
        &settings.extractor,
        &settings.denoiser,
        &settings.config,
        &AblationFlags::default(),
    ) {
        Ok(outcome) => outcome,
        Err(failure) => {
            // partial log is still written
            let _ = failure.log.save(&log_path);
            return Err(CmdError {
                exit_code: EXIT_RUNTIME,
                error: failure.error,
            });
        }
    };

    outcome.latent.save(&out_dir.join("final.latent")).runtime()?;
    outcome.log.save(&log_path).runtime()?;

    let (sources, targets) = instruction.latent_points().validation()?;
    let md_before = mean_distance(&sources, &targets, scale as f64).runtime()?;
    let md_tracked = mean_distance(outcome.state.points(), &targets, scale as f64).runtime()?;
    let md_detected = {
        let feat_ref = settings.extractor.apply(&latent).runtime()?;
        let feat_new = settings.extractor.apply(&outcome.latent).runtime()?;
        let detections = detect_points(&feat_ref, &feat_new, outcome.state.origins()).runtime()?;
        let points: Vec<Point2> = detections.iter().map(|d| d.point()).collect();
        mean_distance(&points, &targets, scale as f64).runtime()?
    };
    println!(
        "MD before {md_before:.3}px, after {md_detected:.3}px (tracked {md_tracked:.3}px); outputs in {}",
        out_dir.display()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_bench(
    suite_path: &Path,
    out: &Path,
    config_path: Option<&Path>,
    overrides: &[String],
    variant_names: &[String],
    workers: usize,
    save_latents: Option<&Path>,
    seed: Option<u64>,
) -> std::result::Result<(), CmdError> {
    let suite = SuiteSpec::load(suite_path).validation()?;
    let settings = load_settings(config_path, overrides, seed).validation()?;
    let variants: Vec<Variant> = if variant_names.is_empty() {
        suite.variants.clone()
    } else {
        variant_names
            .iter()
            .map(|name| name.parse())
            .collect::<Result<_>>()
            .validation()?
    };

    let setup = BenchSetup {
        config: &settings.config,
        extractor: &settings.extractor,
        denoiser: &settings.denoiser,
        workers,
        save_latents,
    };
    let report = run_benchmark(&suite, &variants, &setup).runtime()?;
    report.save(out).runtime()?;
    for aggregate in &report.aggregates {
        println!(
            "{:<20} mean MD {:>7.3}  median MD {:>7.3}  (tracked median {:>7.3})  mean time {:>8.1} ms",
            aggregate.variant.name(),
            aggregate.mean_md,
            aggregate.median_md,
            aggregate.median_md_tracked,
            aggregate.mean_time_ms
        );
    }
    println!("report written to {}", out.display());
    Ok(())
}

fn cmd_plot(log_path: &Path, out: &Path) -> std::result::Result<(), CmdError> {
    let log = crate::drag::TrajectoryLog::load(log_path).validation()?;
    let svg = render_trajectory_svg(&log).validation()?;
    std::fs::write(out, svg).map_err(Error::from).validation()?;
    println!("plot written to {}", out.display());
    Ok(())
}

fn cmd_synth(out_dir: &Path, cases: usize, seed: Option<u64>) -> std::result::Result<(), CmdError> {
    if cases == 0 {
        return Err(CmdError {
            exit_code: EXIT_VALIDATION,
            error: Error::invalid("--cases must be >= 1"),
        });
    }
    std::fs::create_dir_all(out_dir).map_err(Error::from).validation()?;
    let reference = reference_suite();
    let mut specs = Vec::with_capacity(cases);
    for i in 0..cases {
        let (id, mut synth) = reference[i % reference.len()].clone();
        let id = if cases <= reference.len() { id } else { format!("case{i:02}") };
        if let Some(base) = seed {
            synth.seed = base.wrapping_add(i as u64);
        }
        specs.push(CaseSpec { id, synth });
    }
    let suite = SuiteSpec {
        cases: specs,
        variants: Variant::ALL.to_vec(),
    };
    suite.save(&out_dir.join("suite.json")).validation()?;

    for case_spec in &suite.cases {
        let case = generate_synthetic_case(&case_spec.synth).validation()?;
        case.field
            .save(&out_dir.join(format!("{}.latent", case_spec.id)))
            .validation()?;
        case.instruction
            .save(&out_dir.join(format!("{}.instruction.json", case_spec.id)))
            .validation()?;
        case.ground_truth
            .save(&out_dir.join(format!("{}.truth.latent", case_spec.id)))
            .validation()?;
        println!("generated {}", case_spec.id);
    }
    println!("suite written to {}", out_dir.join("suite.json").display());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_apply_and_unknown_keys_reject() {
        let settings = load_settings(None, &["learning_rate=0.5".into()], None).unwrap();
        assert_eq!(settings.config.learning_rate, 0.5);
        assert!(load_settings(None, &["bogus=1".into()], None).is_err());
    }

    #[test]
    fn dotted_overrides_reach_nested_blocks() {
        let settings = load_settings(None, &["denoiser.kind=gaussian".into(), "denoiser.sigma=0.7".into()], None).unwrap();
        match settings.denoiser {
            Denoiser::Gaussian { sigma } => assert_eq!(sigma, 0.7),
            other => panic!("expected gaussian denoiser, got {other:?}"),
        }
    }

    #[test]
    fn seed_flag_overrides_config() {
        let settings = load_settings(None, &["seed=5".into()], Some(9)).unwrap();
        assert_eq!(settings.config.seed, 9);
    }
}
