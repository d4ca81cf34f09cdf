//! The drag optimizer: configuration, state, denoisers, trajectory logging,
//! and the two-stage drag procedure itself.

mod config;
mod denoise;
mod log;
mod optimize;
mod state;

pub use config::DragConfig;
pub use denoise::Denoiser;
pub use log::{LogEvent, LogRecord, TrajectoryLog};
pub use optimize::{
    copy_paste_refine, drag_inner_steps, gradient_step, motion_supervision_loss, run_drag,
    run_timestep, track_points, AblationFlags, DragFailure, DragOutcome, MotionLoss, PasteOptions,
};
pub use state::{DragState, EditableMask, FixationEvent};
