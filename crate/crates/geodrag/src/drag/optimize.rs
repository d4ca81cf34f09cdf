//! The drag optimizer: motion supervision with point fixation and gradient
//! masking, gradient descent on the latent, point tracking, copy-and-paste
//! refinement, and the timestep schedule that alternates dragging with
//! denoising.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::drag::config::DragConfig;
use crate::drag::denoise::Denoiser;
use crate::drag::log::{LogEvent, LogRecord, TrajectoryLog};
use crate::drag::state::{DragState, EditableMask, FixationEvent};
use crate::error::{Error, Result};
use crate::eval::DragInstruction;
use crate::field::{
    eval_masked_diff, eval_patch_terms, sample_patch_features, sample_vector, Extractor,
    LatentField, MaskedDiffTerm, Patch, PatchAlignTerm,
};
use crate::geometry::Point2;

/// Mechanism switches used by the ablation variants. Everything is enabled
/// in a normal run.
#[derive(Clone, Copy, Debug)]
pub struct AblationFlags {
    /// Stage-2 pinning over the remaining timesteps after dragging.
    pub final_copy_paste: bool,
    /// Re-entry of fixated points that drift past the exit threshold.
    pub reentry: bool,
    /// The fixation mechanism as a whole (fixation set, gradient mask, and
    /// the per-timestep copy-paste of fixated points).
    pub fixation: bool,
}

impl Default for AblationFlags {
    fn default() -> Self {
        AblationFlags {
            final_copy_paste: true,
            reentry: true,
            fixation: true,
        }
    }
}

/// Loss value, gradient field, and any points force-entered into the
/// fixation set because they sat exactly on their targets.
#[derive(Debug)]
pub struct MotionLoss {
    pub loss: f64,
    pub gradient: LatentField,
    pub forced_fixations: Vec<usize>,
}

/// Assembles the supervision loss and its gradient for the current state.
///
/// The first part sums, over non-fixated points, the L1 distance between the
/// features of `z` on the patch shifted one step toward the target and the
/// (stop-gradient) features of `z0` on the original patch. The second part
/// weights the difference between the denoised latent and `z0_prev` on the
/// non-editable region. The gradient is pulled back through the denoiser for
/// the second part and zeroed on patches around fixated points.
#[allow(clippy::too_many_arguments)]
pub fn motion_supervision_loss(
    z: &LatentField,
    z0: &LatentField,
    z0_prev: &LatentField,
    state: &mut DragState,
    mask: &EditableMask,
    extractor: &Extractor,
    denoiser: &Denoiser,
    cfg: &DragConfig,
    fixation_enabled: bool,
) -> Result<MotionLoss> {
    let forced = if fixation_enabled {
        state
            .enforce_zero_distance_fixation()
            .into_iter()
            .map(|ev| match ev {
                FixationEvent::Enter(i) => i,
                FixationEvent::Exit(i) => i,
            })
            .collect()
    } else {
        Vec::new()
    };

    let feat0 = extractor.apply(z0)?;
    let mut terms = Vec::new();
    for i in 0..state.len() {
        if fixation_enabled && state.is_fixated(i) {
            continue;
        }
        let direction = state.direction(i);
        let center = state.points()[i].add(&direction.scale(cfg.step_size));
        let target = sample_patch_features(&feat0, &Patch::new(state.origins()[i], cfg.sup_radius))?;
        terms.push(PatchAlignTerm {
            center,
            radius: cfg.sup_radius,
            target,
        });
    }
    let (mut loss, mut gradient) = eval_patch_terms(z, extractor, &terms)?;

    let weights = mask.protection_weights(cfg.mask_weight);
    if weights.iter().any(|&w| w != 0.0) {
        let z_prev = denoiser.apply(z)?;
        let (l2, g2_prev) = eval_masked_diff(
            &z_prev,
            &MaskedDiffTerm {
                reference: z0_prev.clone(),
                weights,
            },
        )?;
        let g2 = denoiser.pullback(&g2_prev)?;
        loss += l2;
        gradient = gradient.add_scaled(&g2, 1.0)?;
    }

    if fixation_enabled {
        for i in 0..state.len() {
            if state.is_fixated(i) {
                zero_block(&mut gradient, state.points()[i], cfg.grad_mask_radius);
            }
        }
    }

    if !loss.is_finite() || !gradient.is_finite() {
        return Err(Error::NonFinite("motion supervision".into()));
    }
    Ok(MotionLoss {
        loss,
        gradient,
        forced_fixations: forced,
    })
}

/// Zeroes all channels on the integer block of radius `r` around the cell
/// nearest `center`, clamped to the grid.
fn zero_block(field: &mut LatentField, center: Point2, r: usize) {
    let (cx, cy) = center.round_cell();
    let r = r as i64;
    let (h, w, c) = field.shape();
    for y in (cy - r).max(0)..=(cy + r).min(h as i64 - 1) {
        for x in (cx - r).max(0)..=(cx + r).min(w as i64 - 1) {
            for ch in 0..c {
                field.set(x as usize, y as usize, ch, 0.0);
            }
        }
    }
}

/// One descent step `z - learning_rate * gradient`.
pub fn gradient_step(z: &LatentField, gradient: &LatentField, cfg: &DragConfig) -> Result<LatentField> {
    let next = z.add_scaled(gradient, -cfg.learning_rate)?;
    if !next.is_finite() {
        return Err(Error::NonFinite("gradient step".into()));
    }
    Ok(next)
}

/// Runs `j_steps` inner gradient steps, re-evaluating the loss before each
/// one. Returns the updated latent and the last loss value.
#[allow(clippy::too_many_arguments)]
pub fn drag_inner_steps(
    z: &LatentField,
    z0: &LatentField,
    z0_prev: &LatentField,
    state: &mut DragState,
    mask: &EditableMask,
    extractor: &Extractor,
    denoiser: &Denoiser,
    cfg: &DragConfig,
    fixation_enabled: bool,
    j_steps: usize,
) -> Result<(LatentField, f64, Vec<usize>)> {
    let mut current = z.clone();
    let mut last_loss = 0.0;
    let mut forced = Vec::new();
    for _ in 0..j_steps {
        let motion = motion_supervision_loss(
            &current,
            z0,
            z0_prev,
            state,
            mask,
            extractor,
            denoiser,
            cfg,
            fixation_enabled,
        )?;
        current = gradient_step(&current, &motion.gradient, cfg)?;
        last_loss = motion.loss;
        forced.extend(motion.forced_fixations);
    }
    Ok((current, last_loss, forced))
}

/// Relocates every handle point to the integer position inside its search
/// window whose feature vector is closest (L1) to the original point's
/// feature vector in `z0`. Fixated points are tracked too, so the exit
/// threshold stays observable. Ties prefer the position nearest
/// `p + step_size * d`, then row-major order.
pub fn track_points(
    z_new: &LatentField,
    z0: &LatentField,
    state: &mut DragState,
    extractor: &Extractor,
    cfg: &DragConfig,
) -> Result<()> {
    let feat_new = extractor.apply(z_new)?;
    let feat0 = extractor.apply(z0)?;
    let (h, w, _) = feat_new.shape();
    let r = cfg.track_radius as f64;

    for i in 0..state.len() {
        let p = state.points()[i];
        let lo_x = (p.x - r).ceil();
        let hi_x = (p.x + r).floor();
        let lo_y = (p.y - r).ceil();
        let hi_y = (p.y + r).floor();
        if lo_x < 0.0 || lo_y < 0.0 || hi_x > (w - 1) as f64 || hi_y > (h - 1) as f64 {
            return Err(Error::PatchOutOfBounds {
                x: p.x,
                y: p.y,
                radius: cfg.track_radius,
                width: w,
                height: h,
            });
        }
        // a radius-0 window around a fractional point holds no integer cells
        if lo_x > hi_x || lo_y > hi_y {
            return Err(Error::invalid(format!(
                "tracking window of radius {} around {p} contains no grid cells",
                cfg.track_radius
            )));
        }
        let reference = sample_vector(&feat0, state.origins()[i].x, state.origins()[i].y)?;
        let anchor = p.add(&state.direction(i).scale(cfg.step_size));

        let mut best: Option<(f64, f64, Point2)> = None; // (feature dist, anchor dist, position)
        for y in lo_y as usize..=hi_y as usize {
            for x in lo_x as usize..=hi_x as usize {
                let candidate = feat_new.cell_vector(x, y);
                let dist: f64 = candidate
                    .iter()
                    .zip(reference.iter())
                    .map(|(a, b)| (a - b).abs())
                    .sum();
                let pos = Point2::new(x as f64, y as f64);
                let anchor_dist = pos.distance(&anchor);
                let replace = match &best {
                    None => true,
                    Some((bd, bad, _)) => dist < *bd || (dist == *bd && anchor_dist < *bad),
                };
                if replace {
                    best = Some((dist, anchor_dist, pos));
                }
            }
        }
        let (_, _, pos) = best.expect("non-empty search window");
        state.set_point(i, pos);
    }
    Ok(())
}

/// Where copy-paste reads its source positions from.
#[derive(Clone, Copy, Debug)]
pub struct PasteOptions {
    /// Blur the vacated source cells with Gaussian noise.
    pub blur: bool,
    /// Read source patches at the original points instead of the current ones.
    pub use_origins: bool,
}

/// Copies the source patch of each listed point from `z_source`, amplified,
/// onto the patch around its target in `z`, then blurs the vacated source
/// cells. A point whose rounded source and target coincide is left alone:
/// there is nothing to relocate. Returns the indices actually pasted.
#[allow(clippy::too_many_arguments)]
pub fn copy_paste_refine<R: Rng>(
    z: &mut LatentField,
    z_source: &LatentField,
    state: &DragState,
    indices: &[usize],
    cfg: &DragConfig,
    rng: &mut R,
    options: PasteOptions,
) -> Result<Vec<usize>> {
    if !z.same_shape(z_source) {
        return Err(Error::ShapeMismatch {
            expected: format!("{:?}", z.shape()),
            got: format!("{:?}", z_source.shape()),
        });
    }
    let (h, w, channels) = z.shape();
    let r = cfg.paste_radius as i64;
    let mut pasted = Vec::new();

    for &i in indices {
        let src_pt = if options.use_origins {
            state.origins()[i]
        } else {
            state.points()[i]
        };
        let (qx, qy) = src_pt.round_cell();
        let (gx, gy) = state.targets()[i].round_cell();
        if (qx, qy) == (gx, gy) {
            continue;
        }
        let in_bounds = |cx: i64, cy: i64| cx - r >= 0 && cy - r >= 0 && cx + r < w as i64 && cy + r < h as i64;
        if !in_bounds(qx, qy) || !in_bounds(gx, gy) {
            return Err(Error::PatchOutOfBounds {
                x: src_pt.x,
                y: src_pt.y,
                radius: cfg.paste_radius,
                width: w,
                height: h,
            });
        }

        // read the source block first so pasting cannot feed on itself
        let side = (2 * r + 1) as usize;
        let mut block = vec![0.0; side * side * channels];
        let mut k = 0;
        for dy in -r..=r {
            for dx in -r..=r {
                for c in 0..channels {
                    block[k] = z_source.get((qx + dx) as usize, (qy + dy) as usize, c);
                    k += 1;
                }
            }
        }
        let mut k = 0;
        for dy in -r..=r {
            for dx in -r..=r {
                for c in 0..channels {
                    z.set((gx + dx) as usize, (gy + dy) as usize, c, cfg.amplify * block[k]);
                    k += 1;
                }
            }
        }

        if options.blur {
            let noise_scale = (1.0 - cfg.blur_retain * cfg.blur_retain).sqrt();
            for dy in -r..=r {
                for dx in -r..=r {
                    let (cx, cy) = (qx + dx, qy + dy);
                    let in_target = (cx - gx).abs() <= r && (cy - gy).abs() <= r;
                    if in_target {
                        continue;
                    }
                    for c in 0..channels {
                        let eps: f64 = rng.sample(rand_distr::StandardNormal);
                        let old = z.get(cx as usize, cy as usize, c);
                        z.set(cx as usize, cy as usize, c, cfg.blur_retain * old + noise_scale * eps);
                    }
                }
            }
        }
        pasted.push(i);
    }
    Ok(pasted)
}

fn log_fixation_events(log: &mut TrajectoryLog, timestep: usize, iteration: usize, events: &[FixationEvent]) {
    for ev in events {
        let record = match ev {
            FixationEvent::Enter(i) => LogRecord::event(timestep, iteration, Some(*i), LogEvent::EnterFixation),
            FixationEvent::Exit(i) => LogRecord::event(timestep, iteration, Some(*i), LogEvent::ExitFixation),
        };
        log.push(record);
    }
}

fn log_point_rows(log: &mut TrajectoryLog, timestep: usize, iteration: usize, state: &DragState, loss: Option<f64>, with_targets: bool) {
    for i in 0..state.len() {
        log.push(LogRecord {
            timestep,
            iteration,
            point_id: Some(i),
            x: Some(state.points()[i].x),
            y: Some(state.points()[i].y),
            e: Some(state.distances()[i]),
            fixated: Some(state.is_fixated(i)),
            loss,
            event: None,
            gx: with_targets.then(|| state.targets()[i].x),
            gy: with_targets.then(|| state.targets()[i].y),
        });
    }
}

/// One drag timestep: `iters_per_timestep` iterations of supervision,
/// descent, tracking, and fixation update; copy-paste refinement for the
/// fixated points; one denoiser step. Returns the next `(z, z0)` pair.
#[allow(clippy::too_many_arguments)]
pub fn run_timestep(
    z: LatentField,
    z0: LatentField,
    state: &mut DragState,
    mask: &EditableMask,
    extractor: &Extractor,
    denoiser: &Denoiser,
    cfg: &DragConfig,
    flags: &AblationFlags,
    rng: &mut ChaCha8Rng,
    log: &mut TrajectoryLog,
    timestep: usize,
) -> Result<(LatentField, LatentField)> {
    let mut z = z;
    let z0_prev = denoiser.apply(&z0)?;

    for iteration in 1..=cfg.iters_per_timestep {
        state.timestep = timestep;
        state.iteration = iteration;
        let (next, loss, forced) = drag_inner_steps(
            &z,
            &z0,
            &z0_prev,
            state,
            mask,
            extractor,
            denoiser,
            cfg,
            flags.fixation,
            cfg.inner_steps,
        )?;
        z = next;
        for i in forced {
            log.push(LogRecord::event(timestep, iteration, Some(i), LogEvent::EnterFixation));
        }
        track_points(&z, &z0, state, extractor, cfg)?;
        if flags.fixation {
            let events = state.update_fixation(cfg.fix_enter, cfg.fix_exit, flags.reentry);
            log_fixation_events(log, timestep, iteration, &events);
        }
        log_point_rows(log, timestep, iteration, state, Some(loss), false);
    }

    if flags.fixation {
        let fixated = state.fixated_indices();
        if !fixated.is_empty() {
            let source = z.clone();
            let pasted = copy_paste_refine(
                &mut z,
                &source,
                state,
                &fixated,
                cfg,
                rng,
                PasteOptions {
                    blur: true,
                    use_origins: false,
                },
            )?;
            for i in pasted {
                log.push(LogRecord::event(timestep, cfg.iters_per_timestep, Some(i), LogEvent::CopyPaste));
            }
        }
    }

    let z_next = denoiser.apply(&z)?;
    let z0_next = denoiser.apply(&z0)?;
    log.push(LogRecord::event(timestep, cfg.iters_per_timestep, None, LogEvent::Denoise));
    Ok((z_next, z0_next))
}

/// Everything a completed drag run produces.
#[derive(Debug)]
pub struct DragOutcome {
    pub latent: LatentField,
    pub state: DragState,
    pub log: TrajectoryLog,
}

/// A failed run still carries the partial trajectory log.
#[derive(Debug)]
pub struct DragFailure {
    pub error: Error,
    pub log: TrajectoryLog,
}

/// Runs the full two-stage drag procedure on a latent.
///
/// Stage 1 executes `drag_timesteps` drag/denoise timesteps. Stage 2 runs
/// `post_timesteps` more timesteps that pin every target patch from the
/// original latent at the original points (no blurring), each followed by a
/// denoiser step.
pub fn run_drag(
    z_input: &LatentField,
    instruction: &DragInstruction,
    mask: Option<EditableMask>,
    extractor: &Extractor,
    denoiser: &Denoiser,
    cfg: &DragConfig,
    flags: &AblationFlags,
) -> std::result::Result<DragOutcome, Box<DragFailure>> {
    let mut log = TrajectoryLog::default();
    match run_drag_inner(z_input, instruction, mask, extractor, denoiser, cfg, flags, &mut log) {
        Ok((latent, state)) => Ok(DragOutcome { latent, state, log }),
        Err(error) => Err(Box::new(DragFailure { error, log })),
    }
}

#[allow(clippy::too_many_arguments)]
fn run_drag_inner(
    z_input: &LatentField,
    instruction: &DragInstruction,
    mask: Option<EditableMask>,
    extractor: &Extractor,
    denoiser: &Denoiser,
    cfg: &DragConfig,
    flags: &AblationFlags,
    log: &mut TrajectoryLog,
) -> Result<(LatentField, DragState)> {
    cfg.validate()?;
    extractor.validate(z_input.channels())?;
    denoiser.validate()?;
    instruction.validate()?;
    if (instruction.latent.h, instruction.latent.w) != (z_input.height(), z_input.width()) {
        return Err(Error::ShapeMismatch {
            expected: format!("{}x{} latent", instruction.latent.w, instruction.latent.h),
            got: format!("{}x{}", z_input.width(), z_input.height()),
        });
    }
    let (points, targets) = instruction.latent_points()?;
    let mask = match mask {
        Some(m) => {
            if (m.height(), m.width()) != (z_input.height(), z_input.width()) {
                return Err(Error::ShapeMismatch {
                    expected: format!("{}x{} mask", z_input.width(), z_input.height()),
                    got: format!("{}x{}", m.width(), m.height()),
                });
            }
            m
        }
        None => EditableMask::all_editable(z_input.height(), z_input.width()),
    };

    let mut state = DragState::new(points, targets)?;
    let mut rng = <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(cfg.seed);
    log_point_rows(log, 0, 0, &state, None, true);
    if flags.fixation {
        let events = state.update_fixation(cfg.fix_enter, cfg.fix_exit, flags.reentry);
        log_fixation_events(log, 0, 0, &events);
    }

    let mut z = z_input.clone();
    let mut z0 = z_input.clone();
    for t in 0..cfg.drag_timesteps {
        let (zn, z0n) = run_timestep(
            z, z0, &mut state, &mask, extractor, denoiser, cfg, flags, &mut rng, log, t,
        )?;
        z = zn;
        z0 = z0n;
    }

    if flags.final_copy_paste {
        let all = state.all_indices();
        for step in 0..cfg.post_timesteps {
            let t = cfg.drag_timesteps + step;
            let source = z0.clone();
            let pasted = copy_paste_refine(
                &mut z,
                &source,
                &state,
                &all,
                cfg,
                &mut rng,
                PasteOptions {
                    blur: false,
                    use_origins: true,
                },
            )?;
            for i in pasted {
                log.push(LogRecord::event(t, 0, Some(i), LogEvent::CopyPaste));
            }
            z = denoiser.apply(&z)?;
            z0 = denoiser.apply(&z0)?;
            log.push(LogRecord::event(t, 0, None, LogEvent::Denoise));
        }
    }

    Ok((z, state))
}
