//! Generates a synthetic blob case, runs the full drag procedure on it, and
//! reports the dragging accuracy before and after.

use geodrag::drag::{run_drag, AblationFlags, Denoiser, DragConfig};
use geodrag::eval::{generate_synthetic_case, mean_distance, SyntheticSpec};
use geodrag::field::{detect_points, Extractor};
use geodrag::geometry::Point2;

fn main() -> Result<(), geodrag::Error> {
    let spec = SyntheticSpec {
        blob_count: 2,
        drags: vec![[18.0, 6.0], [-12.0, 10.0]],
        seed: 7,
        ..SyntheticSpec::default()
    };
    let case = generate_synthetic_case(&spec)?;
    println!(
        "case: {}x{}x{} latent, {} blobs",
        case.field.width(),
        case.field.height(),
        case.field.channels(),
        case.centers.len()
    );
    for pair in &case.instruction.pairs {
        println!("  drag {} -> {}", pair.source, pair.target);
    }

    let cfg = DragConfig::default();
    let extractor = Extractor::Identity;
    let denoiser = Denoiser::Identity;
    let outcome = run_drag(
        &case.field,
        &case.instruction,
        None,
        &extractor,
        &denoiser,
        &cfg,
        &AblationFlags::default(),
    )
    .map_err(|failure| failure.error)?;

    let (sources, targets) = case.instruction.latent_points()?;
    let scale = case.instruction.scale()? as f64;
    let md_before = mean_distance(&sources, &targets, scale)?;
    let md_tracked = mean_distance(outcome.state.points(), &targets, scale)?;

    let feat_ref = extractor.apply(&case.field)?;
    let feat_new = extractor.apply(&outcome.latent)?;
    let detections = detect_points(&feat_ref, &feat_new, outcome.state.origins())?;
    let detected: Vec<Point2> = detections.iter().map(|d| d.point()).collect();
    let md_detected = mean_distance(&detected, &targets, scale)?;

    println!("MD before:          {md_before:.3} px");
    println!("MD after (tracked): {md_tracked:.3} px");
    println!("MD after (re-detected in the final latent): {md_detected:.3} px");
    println!(
        "fixation events: {}, log records: {}",
        outcome.log.fixation_event_count(),
        outcome.log.records.len()
    );

    let out_dir = std::env::temp_dir().join("geodrag_drag_blob");
    std::fs::create_dir_all(&out_dir)?;
    outcome.latent.save(&out_dir.join("final.latent"))?;
    outcome.log.save(&out_dir.join("trajectory.jsonl"))?;
    println!("outputs -> {}", out_dir.display());
    Ok(())
}
