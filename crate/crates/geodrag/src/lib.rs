//! Geometry-guided drag editing on latent feature grids.
//!
//! The crate turns parametric 3D edits of a reference object into
//! viewpoint-correct 2D source/target keypoint pairs, then executes them on
//! a latent grid with a drag optimizer built around four mechanisms: motion
//! supervision with point fixation, gradient masking around settled points,
//! feature-space point tracking, and copy-and-paste refinement with a final
//! pinning stage. A benchmark harness measures dragging accuracy over
//! seeded synthetic cases and ablation variants.
//!
//! Modules:
//! - [`scene3d`] — reference meshes, the rule DSL, the pinhole camera, and
//!   keypoint projection.
//! - [`field`] — latent grids, feature extractors, differentiable patch
//!   sampling, and cosine-similarity re-detection.
//! - [`drag`] — the optimizer: config, state, denoisers, the drag loop, and
//!   trajectory logs.
//! - [`eval`] — instructions, the mean-distance metric, synthetic cases,
//!   and the ablation benchmark runner.
//! - [`plot`] — SVG trajectory rendering.
//!
//! Runnable walkthroughs live in `examples/`:
//!
//! ```bash
//! cargo run --release --example project_scene
//! cargo run --release --example drag_blob
//! cargo run --release --example benchmark_ablations
//! cargo run --release --example detect_keypoints
//! cargo run --release --example plot_trajectory
//! cargo run --release --example external_denoiser
//! ```
//!
//! The same capabilities are exposed by the `geodrag` binary
//! (`project`, `drag`, `bench`, `plot`, `synth`).

pub mod cli;
pub mod drag;
pub mod error;
pub mod eval;
pub mod field;
pub mod geometry;
pub mod pgm;
pub mod plot;
pub mod scene3d;

pub use drag::{run_drag, AblationFlags, Denoiser, DragConfig, DragState, EditableMask, TrajectoryLog};
pub use error::{Error, Result};
pub use eval::{run_benchmark, BenchReport, DragInstruction, SuiteSpec, Variant};
pub use field::{Extractor, LatentField};
pub use geometry::Point2;
pub use scene3d::{Camera, CameraPose, ReferenceObject, SceneSpec};
