//! Drag optimizer configuration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// All tunable parameters of the drag procedure. Serialized field names are
/// the config-file keys; see `DragConfig::default` for the shipped values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DragConfig {
    /// Patch radius for motion supervision (cells).
    pub sup_radius: usize,
    /// Point-tracking search radius (cells). Must be >= `sup_radius`.
    pub track_radius: usize,
    /// Radius of the gradient mask around fixated points (cells).
    pub grad_mask_radius: usize,
    /// Copy-paste patch radius (cells).
    pub paste_radius: usize,
    /// Handle step size per supervision term (cells).
    pub step_size: f64,
    /// Gradient descent learning rate. Must be > 0.
    pub learning_rate: f64,
    /// Inner gradient steps per drag iteration (loss re-evaluated each step).
    pub inner_steps: usize,
    /// Drag iterations per timestep.
    pub iters_per_timestep: usize,
    /// Number of timesteps that include drag phases.
    pub drag_timesteps: usize,
    /// Remaining timesteps after dragging; each pins target patches from the
    /// original latent, then denoises.
    pub post_timesteps: usize,
    /// Weight of the non-editable-region term.
    pub mask_weight: f64,
    /// Fixation entry threshold (cells): a point with distance <= this is
    /// removed from the optimization.
    pub fix_enter: f64,
    /// Fixation exit threshold (cells): a fixated point dragged beyond this
    /// re-enters the optimization. Must be > `fix_enter`.
    pub fix_exit: f64,
    /// Copy-paste amplification factor. Must be >= 1.
    pub amplify: f64,
    /// Retention factor when blurring vacated source patches, in [0, 1).
    pub blur_retain: f64,
    /// Seed for all randomness in a run.
    pub seed: u64,
}

impl Default for DragConfig {
    fn default() -> Self {
        DragConfig {
            sup_radius: 3,
            track_radius: 6,
            grad_mask_radius: 3,
            paste_radius: 2,
            step_size: 2.0,
            learning_rate: 0.2,
            inner_steps: 1,
            iters_per_timestep: 12,
            drag_timesteps: 8,
            post_timesteps: 4,
            mask_weight: 0.1,
            fix_enter: 1.0,
            fix_exit: 3.0,
            amplify: 1.1,
            blur_retain: 0.8,
            seed: 0,
        }
    }
}

impl DragConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.fix_enter > 0.0 && self.fix_enter < self.fix_exit) {
            return Err(Error::invalid(format!(
                "fixation thresholds must satisfy 0 < fix_enter < fix_exit (got {} and {})",
                self.fix_enter, self.fix_exit
            )));
        }
        if self.track_radius < self.sup_radius {
            return Err(Error::invalid(format!(
                "track_radius ({}) must be >= sup_radius ({})",
                self.track_radius, self.sup_radius
            )));
        }
        if self.amplify < 1.0 {
            return Err(Error::invalid(format!("amplify must be >= 1 (got {})", self.amplify)));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid(format!(
                "learning_rate must be positive (got {})",
                self.learning_rate
            )));
        }
        if self.inner_steps == 0 {
            return Err(Error::invalid("inner_steps must be >= 1"));
        }
        if self.iters_per_timestep == 0 {
            return Err(Error::invalid("iters_per_timestep must be >= 1"));
        }
        if self.drag_timesteps == 0 {
            return Err(Error::invalid("drag_timesteps must be >= 1"));
        }
        if !(0.0..1.0).contains(&self.blur_retain) {
            return Err(Error::invalid(format!(
                "blur_retain must lie in [0, 1) (got {})",
                self.blur_retain
            )));
        }
        if self.mask_weight < 0.0 || !self.mask_weight.is_finite() {
            return Err(Error::invalid(format!(
                "mask_weight must be >= 0 (got {})",
                self.mask_weight
            )));
        }
        if !self.step_size.is_finite() || self.step_size < 0.0 {
            return Err(Error::invalid(format!(
                "step_size must be >= 0 (got {})",
                self.step_size
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        DragConfig::default().validate().unwrap();
    }

    #[test]
    fn thresholds_must_be_ordered() {
        let cfg = DragConfig {
            fix_enter: 3.0,
            fix_exit: 3.0,
            ..DragConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = serde_json::from_str::<DragConfig>(r#"{"learning_rate": 0.1, "bogus": 1}"#);
        assert!(err.is_err());
    }
}
