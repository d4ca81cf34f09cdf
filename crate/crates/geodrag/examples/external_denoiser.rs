//! Demonstrates the file-exchange denoiser hook: the latent container is
//! written to a file, an external command produces the denoised container,
//! and the run reads it back. Here the command is plain `cp`, i.e. an
//! identity denoiser living outside the process.

use geodrag::drag::{run_drag, AblationFlags, Denoiser, DragConfig};
use geodrag::eval::{generate_synthetic_case, mean_distance, SyntheticSpec};
use geodrag::field::Extractor;

fn main() -> Result<(), geodrag::Error> {
    let case = generate_synthetic_case(&SyntheticSpec {
        drags: vec![[14.0, 0.0]],
        seed: 12,
        ..SyntheticSpec::default()
    })?;

    let denoiser = Denoiser::External {
        command: vec!["cp".into(), "{in}".into(), "{out}".into()],
    };
    let outcome = run_drag(
        &case.field,
        &case.instruction,
        None,
        &Extractor::Identity,
        &denoiser,
        &DragConfig::default(),
        &AblationFlags::default(),
    )
    .map_err(|failure| failure.error)?;

    let (_, targets) = case.instruction.latent_points()?;
    let md = mean_distance(outcome.state.points(), &targets, 1.0)?;
    println!("drag with an external (cp) denoiser finished; tracked MD {md:.3} cells");

    let denoise_steps = outcome
        .log
        .records
        .iter()
        .filter(|r| r.event == Some(geodrag::drag::LogEvent::Denoise))
        .count();
    println!("external command invoked for {denoise_steps} denoise steps");
    Ok(())
}
