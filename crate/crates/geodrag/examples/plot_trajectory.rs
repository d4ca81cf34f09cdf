//! Runs a small drag and renders the point trajectories as an SVG plot:
//! polylines from source to final position, targets as crosses, fixation
//! events as squares.

use geodrag::drag::{run_drag, AblationFlags, Denoiser, DragConfig};
use geodrag::eval::{generate_synthetic_case, SyntheticSpec};
use geodrag::field::Extractor;
use geodrag::plot::render_trajectory_svg;

fn main() -> Result<(), geodrag::Error> {
    let case = generate_synthetic_case(&SyntheticSpec {
        blob_count: 2,
        drags: vec![[16.0, -8.0], [-10.0, 12.0]],
        seed: 31,
        ..SyntheticSpec::default()
    })?;
    let outcome = run_drag(
        &case.field,
        &case.instruction,
        None,
        &Extractor::Identity,
        &Denoiser::Identity,
        &DragConfig::default(),
        &AblationFlags::default(),
    )
    .map_err(|failure| failure.error)?;

    let svg = render_trajectory_svg(&outcome.log)?;
    let out = std::env::temp_dir().join("geodrag_trajectory.svg");
    std::fs::write(&out, &svg)?;
    println!(
        "{} log records, {} fixation events",
        outcome.log.records.len(),
        outcome.log.fixation_event_count()
    );
    println!("trajectory plot -> {}", out.display());
    Ok(())
}
