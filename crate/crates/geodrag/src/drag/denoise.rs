//! Pluggable denoisers — the latent transition applied between drag phases.

use std::path::PathBuf;
use std::process::Command;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::LatentField;

/// Shape-preserving latent transition. The built-in kinds are linear maps,
/// so the supervision loss can pull gradients back through them exactly;
/// the external hook is treated as the identity for gradient purposes.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
#[derive(Default)]
pub enum Denoiser {
    /// Latent passes through unchanged.
    #[default]
    Identity,
    /// Separable Gaussian smoothing, zero-padded, kernel truncated at 3 sigma.
    Gaussian { sigma: f64 },
    /// File-exchange hook: the latent container is written to a temp file,
    /// the command runs with `{in}`/`{out}` placeholders substituted (or the
    /// two paths appended), and the result container is read back.
    External { command: Vec<String> },
}


impl Denoiser {
    pub fn validate(&self) -> Result<()> {
        match self {
            Denoiser::Identity => Ok(()),
            Denoiser::Gaussian { sigma } => {
                if *sigma > 0.0 && sigma.is_finite() {
                    Ok(())
                } else {
                    Err(Error::invalid(format!("gaussian sigma must be > 0 (got {sigma})")))
                }
            }
            Denoiser::External { command } => {
                if command.is_empty() {
                    Err(Error::invalid("external denoiser command is empty"))
                } else {
                    Ok(())
                }
            }
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, Denoiser::Identity)
    }

    pub fn apply(&self, z: &LatentField) -> Result<LatentField> {
        match self {
            Denoiser::Identity => Ok(z.clone()),
            Denoiser::Gaussian { sigma } => Ok(gaussian_smooth(z, *sigma)),
            Denoiser::External { command } => run_external(command, z),
        }
    }

    /// Pulls a gradient with respect to the denoiser output back to its
    /// input. Gaussian smoothing with zero padding is a symmetric operator,
    /// so its pullback is the smoothing itself; the external hook cannot be
    /// differentiated and passes the gradient through unchanged.
    pub fn pullback(&self, grad: &LatentField) -> Result<LatentField> {
        match self {
            Denoiser::Identity | Denoiser::External { .. } => Ok(grad.clone()),
            Denoiser::Gaussian { sigma } => Ok(gaussian_smooth(grad, *sigma)),
        }
    }
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil().max(1.0) as usize;
    let mut kernel = Vec::with_capacity(2 * radius + 1);
    for i in 0..=2 * radius {
        let d = i as f64 - radius as f64;
        kernel.push((-d * d / (2.0 * sigma * sigma)).exp());
    }
    let total: f64 = kernel.iter().sum();
    for k in kernel.iter_mut() {
        *k /= total;
    }
    kernel
}

fn gaussian_smooth(z: &LatentField, sigma: f64) -> LatentField {
    let kernel = gaussian_kernel(sigma);
    let radius = kernel.len() / 2;
    let (h, w, c) = z.shape();

    // horizontal pass
    let mut mid = LatentField::zeros(h, w, c);
    for y in 0..h {
        for x in 0..w {
            for ch in 0..c {
                let mut acc = 0.0;
                for (k, weight) in kernel.iter().enumerate() {
                    let sx = x as isize + k as isize - radius as isize;
                    if sx >= 0 && (sx as usize) < w {
                        acc += weight * z.get(sx as usize, y, ch);
                    }
                }
                mid.set(x, y, ch, acc);
            }
        }
    }
    // vertical pass
    let mut out = LatentField::zeros(h, w, c);
    for y in 0..h {
        for x in 0..w {
            for ch in 0..c {
                let mut acc = 0.0;
                for (k, weight) in kernel.iter().enumerate() {
                    let sy = y as isize + k as isize - radius as isize;
                    if sy >= 0 && (sy as usize) < h {
                        acc += weight * mid.get(x, sy as usize, ch);
                    }
                }
                out.set(x, y, ch, acc);
            }
        }
    }
    out
}

fn run_external(command: &[String], z: &LatentField) -> Result<LatentField> {
    if command.is_empty() {
        return Err(Error::invalid("external denoiser command is empty"));
    }
    // unique per call: concurrent runs must not share exchange files
    static CALL: std::sync::atomic::AtomicU64 = std::sync::atomic::AtomicU64::new(0);
    let call = CALL.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
    let dir = std::env::temp_dir();
    let tag = format!("{}_{call}", std::process::id());
    let in_path: PathBuf = dir.join(format!("geodrag_denoise_in_{tag}.latent"));
    let out_path: PathBuf = dir.join(format!("geodrag_denoise_out_{tag}.latent"));
    z.save(&in_path)?;
    let _ = std::fs::remove_file(&out_path);

    let mut args: Vec<String> = Vec::new();
    let mut substituted = false;
    for part in command.iter() {
        let replaced = part
            .replace("{in}", &in_path.to_string_lossy())
            .replace("{out}", &out_path.to_string_lossy());
        if replaced != *part {
            substituted = true;
        }
        args.push(replaced);
    }
    if !substituted {
        args.push(in_path.to_string_lossy().into_owned());
        args.push(out_path.to_string_lossy().into_owned());
    }

    let status = Command::new(&args[0])
        .args(&args[1..])
        .status()
        .map_err(|e| Error::External(format!("failed to launch {:?}: {e}", args[0])))?;
    if !status.success() {
        return Err(Error::External(format!(
            "denoiser command exited with {status}"
        )));
    }
    let result = LatentField::load(&out_path)?;
    let _ = std::fs::remove_file(&in_path);
    let _ = std::fs::remove_file(&out_path);
    if result.shape() != z.shape() {
        return Err(Error::ShapeMismatch {
            expected: format!("{:?}", z.shape()),
            got: format!("{:?}", result.shape()),
        });
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_passes_through() {
        let z = LatentField::from_fn(4, 4, 2, |x, y, c| (x + y + c) as f64);
        assert_eq!(Denoiser::Identity.apply(&z).unwrap(), z);
    }

    #[test]
    fn gaussian_preserves_shape_and_smooths() {
        let mut z = LatentField::zeros(9, 9, 1);
        z.set(4, 4, 0, 1.0);
        let out = Denoiser::Gaussian { sigma: 1.0 }.apply(&z).unwrap();
        assert_eq!(out.shape(), z.shape());
        assert!(out.get(4, 4, 0) < 1.0);
        assert!(out.get(3, 4, 0) > 0.0);
    }

    #[test]
    fn gaussian_pullback_is_adjoint() {
        let d = Denoiser::Gaussian { sigma: 0.8 };
        let x = LatentField::from_fn(7, 6, 1, |i, j, _| ((i * 5 + j * 3) % 7) as f64 - 3.0);
        let y = LatentField::from_fn(7, 6, 1, |i, j, _| ((i * 11 + j * 13) % 5) as f64 - 2.0);
        let ax = d.apply(&x).unwrap();
        let aty = d.pullback(&y).unwrap();
        let lhs: f64 = ax.data().iter().zip(y.data()).map(|(a, b)| a * b).sum();
        let rhs: f64 = x.data().iter().zip(aty.data()).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-10);
    }

    #[test]
    fn external_roundtrip_with_cp() {
        let z = LatentField::from_fn(4, 4, 1, |x, y, _| (x * 4 + y) as f64);
        let d = Denoiser::External {
            command: vec!["cp".into(), "{in}".into(), "{out}".into()],
        };
        let out = d.apply(&z).unwrap();
        // container stores f32, so compare through the same truncation
        let expect: Vec<f64> = z.data().iter().map(|&v| v as f32 as f64).collect();
        assert_eq!(out.data(), expect.as_slice());
    }
}
