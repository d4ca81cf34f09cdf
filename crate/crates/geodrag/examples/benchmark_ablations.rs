//! Runs the shipped 20-case synthetic suite across all ablation variants
//! and prints the per-variant accuracy table.

use geodrag::drag::{Denoiser, DragConfig};
use geodrag::eval::{run_benchmark, BenchSetup, SuiteSpec, Variant};
use geodrag::field::Extractor;

fn main() {
    let suite = SuiteSpec::reference();
    let config = DragConfig::default();
    let extractor = Extractor::Identity;
    let denoiser = Denoiser::Identity;

    let setup = BenchSetup {
        config: &config,
        extractor: &extractor,
        denoiser: &denoiser,
        workers: 4,
        save_latents: None,
    };
    let started = std::time::Instant::now();
    let report = run_benchmark(&suite, &Variant::ALL, &setup).expect("benchmark run");

    println!("case                 variant               md_before md_after md_tracked  fix_events");
    for row in &report.cases {
        println!(
            "{:<20} {:<20} {:>9.3} {:>8.3} {:>10.3} {:>11}",
            row.case_id, row.variant.name(), row.md_before, row.md_after, row.md_after_tracked, row.fixation_events
        );
    }
    println!();
    for aggregate in &report.aggregates {
        println!(
            "{:<20} mean MD {:>7.3}  median MD {:>7.3}  tracked median {:>7.3}  mean time {:>7.1} ms",
            aggregate.variant.name(),
            aggregate.mean_md,
            aggregate.median_md,
            aggregate.median_md_tracked,
            aggregate.mean_time_ms
        );
    }
    println!("\ntotal wall time: {:.1} s", started.elapsed().as_secs_f64());
}
