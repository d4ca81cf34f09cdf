//! Benchmark runner: executes drag runs over a suite of synthetic cases and
//! ablation variants, measures dragging accuracy, and emits a report.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::drag::{run_drag, AblationFlags, Denoiser, DragConfig};
use crate::error::{Error, Result};
use crate::eval::metrics::{mean_distance, median, normalize_to_512};
use crate::eval::synthetic::{generate_synthetic_case, reference_suite, SyntheticSpec};
use crate::field::{detect_points, Extractor};
use crate::geometry::Point2;

/// Ablation variants the harness can run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Full,
    NoFinalCopyPaste,
    NoReentry,
    NoFixation,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::Full,
        Variant::NoFinalCopyPaste,
        Variant::NoReentry,
        Variant::NoFixation,
    ];

    pub fn flags(&self) -> AblationFlags {
        match self {
            Variant::Full => AblationFlags::default(),
            Variant::NoFinalCopyPaste => AblationFlags {
                final_copy_paste: false,
                ..AblationFlags::default()
            },
            Variant::NoReentry => AblationFlags {
                reentry: false,
                ..AblationFlags::default()
            },
            Variant::NoFixation => AblationFlags {
                fixation: false,
                ..AblationFlags::default()
            },
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::NoFinalCopyPaste => "no_final_copy_paste",
            Variant::NoReentry => "no_reentry",
            Variant::NoFixation => "no_fixation",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Variant> {
        match s {
            "full" => Ok(Variant::Full),
            "no_final_copy_paste" => Ok(Variant::NoFinalCopyPaste),
            "no_reentry" => Ok(Variant::NoReentry),
            "no_fixation" => Ok(Variant::NoFixation),
            other => Err(Error::invalid(format!("unknown variant {other:?}"))),
        }
    }
}

/// One benchmark case: an id plus the synthetic-case parameters.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CaseSpec {
    pub id: String,
    #[serde(flatten)]
    pub synth: SyntheticSpec,
}

/// A benchmark suite as stored on disk.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SuiteSpec {
    pub cases: Vec<CaseSpec>,
    /// Variants to run; an empty list means the full variant only.
    #[serde(default)]
    pub variants: Vec<Variant>,
}

impl SuiteSpec {
    pub fn validate(&self) -> Result<()> {
        if self.cases.is_empty() {
            return Err(Error::invalid("suite has no cases"));
        }
        let mut seen = std::collections::BTreeSet::new();
        for case in &self.cases {
            if !seen.insert(case.id.as_str()) {
                return Err(Error::invalid(format!("duplicate case id {:?}", case.id)));
            }
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<SuiteSpec> {
        let text = std::fs::read_to_string(path)?;
        let suite: SuiteSpec = serde_json::from_str(&text)
            .map_err(|e| Error::parse(format!("suite {}: {e}", path.display())))?;
        suite.validate()?;
        Ok(suite)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    /// The shipped 20-case suite over all ablation variants.
    pub fn reference() -> SuiteSpec {
        SuiteSpec {
            cases: reference_suite()
                .into_iter()
                .map(|(id, synth)| CaseSpec { id, synth })
                .collect(),
            variants: Variant::ALL.to_vec(),
        }
    }
}

/// Per-case, per-variant benchmark row. `md_after` is measured by
/// re-detecting the original point features in the final latent;
/// `md_after_tracked` is the tracked handle position when the drag stage
/// ended, before the remaining denoising timesteps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseResult {
    pub case_id: String,
    pub variant: Variant,
    pub status: String,
    pub md_before: f64,
    pub md_after: f64,
    pub md_after_tracked: f64,
    pub md_after_512: f64,
    pub wall_time_ms: f64,
    pub fixation_events: usize,
    pub config_hash: String,
}

/// Per-variant aggregate statistics, recomputable from the rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariantAggregate {
    pub variant: Variant,
    pub mean_md: f64,
    pub median_md: f64,
    pub mean_md_tracked: f64,
    pub median_md_tracked: f64,
    pub mean_time_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub cases: Vec<CaseResult>,
    pub aggregates: Vec<VariantAggregate>,
}

impl BenchReport {
    pub fn new(cases: Vec<CaseResult>) -> Self {
        let aggregates = Self::compute_aggregates(&cases);
        BenchReport { cases, aggregates }
    }

    pub fn compute_aggregates(cases: &[CaseResult]) -> Vec<VariantAggregate> {
        let mut variants: Vec<Variant> = Vec::new();
        for c in cases {
            if !variants.contains(&c.variant) {
                variants.push(c.variant);
            }
        }
        variants
            .into_iter()
            .map(|variant| {
                let rows: Vec<&CaseResult> = cases.iter().filter(|c| c.variant == variant).collect();
                let md: Vec<f64> = rows.iter().map(|c| c.md_after).collect();
                let md_tracked: Vec<f64> = rows.iter().map(|c| c.md_after_tracked).collect();
                let time: Vec<f64> = rows.iter().map(|c| c.wall_time_ms).collect();
                VariantAggregate {
                    variant,
                    mean_md: md.iter().sum::<f64>() / md.len() as f64,
                    median_md: median(&md),
                    mean_md_tracked: md_tracked.iter().sum::<f64>() / md_tracked.len() as f64,
                    median_md_tracked: median(&md_tracked),
                    mean_time_ms: time.iter().sum::<f64>() / time.len() as f64,
                }
            })
            .collect()
    }

    /// Consistency check: aggregates must equal a fresh recomputation from
    /// the per-case rows. Run on every emission.
    pub fn verify(&self) -> Result<()> {
        let fresh = Self::compute_aggregates(&self.cases);
        if fresh == self.aggregates {
            Ok(())
        } else {
            Err(Error::invalid("report aggregates do not match per-case rows"))
        }
    }

    pub fn aggregate_for(&self, variant: Variant) -> Option<&VariantAggregate> {
        self.aggregates.iter().find(|a| a.variant == variant)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.verify()?;
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<BenchReport> {
        let text = std::fs::read_to_string(path)?;
        let report: BenchReport = serde_json::from_str(&text)
            .map_err(|e| Error::parse(format!("report {}: {e}", path.display())))?;
        Ok(report)
    }
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

/// Fingerprint of the effective configuration, recorded per row.
pub fn config_hash(cfg: &DragConfig, extractor: &Extractor, denoiser: &Denoiser) -> String {
    let blob = serde_json::json!({
        "config": cfg,
        "extractor": extractor,
        "denoiser": denoiser,
    });
    format!("{:016x}", fnv1a64(blob.to_string().as_bytes()))
}

/// Everything `run_benchmark` needs besides the suite itself.
pub struct BenchSetup<'a> {
    pub config: &'a DragConfig,
    pub extractor: &'a Extractor,
    pub denoiser: &'a Denoiser,
    /// Worker threads; 1 = sequential.
    pub workers: usize,
    /// When set, final latents are written here as `{case}_{variant}.latent`.
    pub save_latents: Option<&'a Path>,
}

struct Job {
    case_index: usize,
    variant: Variant,
}

/// Runs every case under every requested variant. Case failures become rows
/// with the error recorded and the dragging accuracy held at its initial
/// value; they never abort the suite.
pub fn run_benchmark(suite: &SuiteSpec, variants: &[Variant], setup: &BenchSetup) -> Result<BenchReport> {
    suite.validate()?;
    setup.config.validate()?;
    let variants: Vec<Variant> = if variants.is_empty() {
        vec![Variant::Full]
    } else {
        variants.to_vec()
    };
    if let Some(dir) = setup.save_latents {
        std::fs::create_dir_all(dir)?;
    }

    let mut jobs = Vec::new();
    for case_index in 0..suite.cases.len() {
        for &variant in &variants {
            jobs.push(Job { case_index, variant });
        }
    }

    let workers = setup.workers.max(1).min(jobs.len().max(1));
    let mut results: Vec<Option<CaseResult>> = (0..jobs.len()).map(|_| None).collect();

    if workers <= 1 {
        for (slot, job) in results.iter_mut().zip(jobs.iter()) {
            *slot = Some(run_job(suite, job, setup));
        }
    } else {
        let chunk = jobs.len().div_ceil(workers);
        std::thread::scope(|scope| {
            for (job_chunk, slot_chunk) in jobs.chunks(chunk).zip(results.chunks_mut(chunk)) {
                scope.spawn(move || {
                    for (slot, job) in slot_chunk.iter_mut().zip(job_chunk.iter()) {
                        *slot = Some(run_job(suite, job, setup));
                    }
                });
            }
        });
    }

    let rows: Vec<CaseResult> = results.into_iter().map(|r| r.expect("job completed")).collect();
    let report = BenchReport::new(rows);
    report.verify()?;
    Ok(report)
}

fn run_job(suite: &SuiteSpec, job: &Job, setup: &BenchSetup) -> CaseResult {
    let case_spec = &suite.cases[job.case_index];
    let hash = config_hash(setup.config, setup.extractor, setup.denoiser);
    let start = Instant::now();
    match execute_case(case_spec, job.variant, setup) {
        Ok(mut row) => {
            row.wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
            row
        }
        Err((err, md_before, fixation_events)) => CaseResult {
            case_id: case_spec.id.clone(),
            variant: job.variant,
            status: format!("error: {err}"),
            md_before,
            md_after: md_before,
            md_after_tracked: md_before,
            md_after_512: normalize_to_512(md_before, case_spec.synth.width),
            wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
            fixation_events,
            config_hash: hash,
        },
    }
}

type CaseFailure = (Error, f64, usize);

fn execute_case(case_spec: &CaseSpec, variant: Variant, setup: &BenchSetup) -> std::result::Result<CaseResult, CaseFailure> {
    let case = generate_synthetic_case(&case_spec.synth).map_err(|e| (e, 0.0, 0))?;
    let scale = case.instruction.scale().map_err(|e| (e, 0.0, 0))? as f64;
    let (sources, targets) = case.instruction.latent_points().map_err(|e| (e, 0.0, 0))?;
    let md_before = mean_distance(&sources, &targets, scale).map_err(|e| (e, 0.0, 0))?;

    // decouple per-case randomness from the shared base seed
    let mut cfg = setup.config.clone();
    cfg.seed = cfg
        .seed
        .wrapping_add(case_spec.synth.seed.wrapping_mul(0x9E3779B97F4A7C15));

    let outcome = run_drag(
        &case.field,
        &case.instruction,
        None,
        setup.extractor,
        setup.denoiser,
        &cfg,
        &variant.flags(),
    )
    .map_err(|failure| {
        let events = failure.log.fixation_event_count();
        (failure.error, md_before, events)
    })?;

    let md_after_tracked = mean_distance(outcome.state.points(), &targets, scale)
        .map_err(|e| (e, md_before, 0))?;

    let feat_ref = setup.extractor.apply(&case.field).map_err(|e| (e, md_before, 0))?;
    let feat_new = setup.extractor.apply(&outcome.latent).map_err(|e| (e, md_before, 0))?;
    let detections = detect_points(&feat_ref, &feat_new, outcome.state.origins())
        .map_err(|e| (e, md_before, 0))?;
    let detected: Vec<Point2> = detections.iter().map(|d| d.point()).collect();
    let md_after = mean_distance(&detected, &targets, scale).map_err(|e| (e, md_before, 0))?;

    if let Some(dir) = setup.save_latents {
        let path: PathBuf = dir.join(format!("{}_{}.latent", case_spec.id, variant.name()));
        outcome.latent.save(&path).map_err(|e| (e, md_before, 0))?;
    }

    Ok(CaseResult {
        case_id: case_spec.id.clone(),
        variant,
        status: "ok".to_string(),
        md_before,
        md_after,
        md_after_tracked,
        md_after_512: normalize_to_512(md_after, case_spec.synth.width),
        wall_time_ms: 0.0,
        fixation_events: outcome.log.fixation_event_count(),
        config_hash: config_hash(setup.config, setup.extractor, setup.denoiser),
    })
}
