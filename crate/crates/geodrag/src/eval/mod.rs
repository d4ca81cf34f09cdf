//! Benchmark harness: instructions, dragging-accuracy metrics, synthetic
//! case generation, and the ablation benchmark runner.

mod bench;
mod instruction;
mod metrics;
mod synthetic;

pub use bench::{
    config_hash, run_benchmark, BenchReport, BenchSetup, CaseResult, CaseSpec, SuiteSpec, Variant,
    VariantAggregate,
};
pub use instruction::{Dims, DragInstruction, PointPair};
pub use metrics::{mean_distance, median, normalize_to_512};
pub use synthetic::{generate_synthetic_case, reference_suite, SyntheticCase, SyntheticSpec};
