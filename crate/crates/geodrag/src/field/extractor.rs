//! Pluggable feature extractors.
//!
//! An extractor maps a latent grid to a feature grid of the same H x W.
//! Every supported extractor is linear in its input, which keeps the loss
//! gradients analytic: the backward pass is the exact transpose of the
//! forward map.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::LatentField;

/// A single convolution layer: stride 1, zero "same" padding, odd kernel.
/// Weights are laid out `[out_channel][in_channel][ky][kx]`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConvLayer {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel_h: usize,
    pub kernel_w: usize,
    pub weights: Vec<f64>,
}

impl ConvLayer {
    pub fn new(in_channels: usize, out_channels: usize, kernel_h: usize, kernel_w: usize, weights: Vec<f64>) -> Result<Self> {
        if kernel_h.is_multiple_of(2) || kernel_w.is_multiple_of(2) || kernel_h == 0 || kernel_w == 0 {
            return Err(Error::invalid("conv kernel dimensions must be odd"));
        }
        let expected = out_channels * in_channels * kernel_h * kernel_w;
        if weights.len() != expected {
            return Err(Error::ShapeMismatch {
                expected: format!("{expected} conv weights"),
                got: format!("{}", weights.len()),
            });
        }
        if !weights.iter().all(|w| w.is_finite()) {
            return Err(Error::NonFinite("conv weights".into()));
        }
        Ok(ConvLayer {
            in_channels,
            out_channels,
            kernel_h,
            kernel_w,
            weights,
        })
    }

    #[inline]
    fn weight(&self, oc: usize, ic: usize, ky: usize, kx: usize) -> f64 {
        self.weights[((oc * self.in_channels + ic) * self.kernel_h + ky) * self.kernel_w + kx]
    }

    fn forward(&self, input: &LatentField) -> Result<LatentField> {
        if input.channels() != self.in_channels {
            return Err(Error::ShapeMismatch {
                expected: format!("{} channels", self.in_channels),
                got: format!("{}", input.channels()),
            });
        }
        let (h, w, _) = input.shape();
        let ph = (self.kernel_h / 2) as isize;
        let pw = (self.kernel_w / 2) as isize;
        let mut out = LatentField::zeros(h, w, self.out_channels);
        for y in 0..h as isize {
            for x in 0..w as isize {
                for oc in 0..self.out_channels {
                    let mut acc = 0.0;
                    for ky in 0..self.kernel_h as isize {
                        let sy = y + ky - ph;
                        if sy < 0 || sy >= h as isize {
                            continue;
                        }
                        for kx in 0..self.kernel_w as isize {
                            let sx = x + kx - pw;
                            if sx < 0 || sx >= w as isize {
                                continue;
                            }
                            for ic in 0..self.in_channels {
                                acc += self.weight(oc, ic, ky as usize, kx as usize)
                                    * input.get(sx as usize, sy as usize, ic);
                            }
                        }
                    }
                    out.set(x as usize, y as usize, oc, acc);
                }
            }
        }
        Ok(out)
    }

    /// Transpose of [`ConvLayer::forward`]: scatters output-side gradients
    /// back to input cells through the same weights.
    fn backward(&self, grad_out: &LatentField) -> Result<LatentField> {
        if grad_out.channels() != self.out_channels {
            return Err(Error::ShapeMismatch {
                expected: format!("{} channels", self.out_channels),
                got: format!("{}", grad_out.channels()),
            });
        }
        let (h, w, _) = grad_out.shape();
        let ph = (self.kernel_h / 2) as isize;
        let pw = (self.kernel_w / 2) as isize;
        let mut grad_in = LatentField::zeros(h, w, self.in_channels);
        for y in 0..h as isize {
            for x in 0..w as isize {
                for oc in 0..self.out_channels {
                    let g = grad_out.get(x as usize, y as usize, oc);
                    if g == 0.0 {
                        continue;
                    }
                    for ky in 0..self.kernel_h as isize {
                        let sy = y + ky - ph;
                        if sy < 0 || sy >= h as isize {
                            continue;
                        }
                        for kx in 0..self.kernel_w as isize {
                            let sx = x + kx - pw;
                            if sx < 0 || sx >= w as isize {
                                continue;
                            }
                            for ic in 0..self.in_channels {
                                let idx = grad_in.index(sx as usize, sy as usize, ic);
                                grad_in.data_mut()[idx] += self.weight(oc, ic, ky as usize, kx as usize) * g;
                            }
                        }
                    }
                }
            }
        }
        Ok(grad_in)
    }
}

/// Deterministic, linear feature extractor over latent grids.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
#[derive(Default)]
pub enum Extractor {
    /// Features are the latent values themselves.
    #[default]
    Identity,
    /// A stack of convolution layers applied in order.
    Conv { layers: Vec<ConvLayer> },
}


impl Extractor {
    /// 3x3 binomial smoothing kernel applied per channel, C in -> C out.
    pub fn binomial3x3(channels: usize) -> Self {
        let k = [1.0, 2.0, 1.0];
        let mut weights = vec![0.0; channels * channels * 9];
        for c in 0..channels {
            for (ky, wy) in k.iter().enumerate() {
                for (kx, wx) in k.iter().enumerate() {
                    weights[((c * channels + c) * 3 + ky) * 3 + kx] = wy * wx / 16.0;
                }
            }
        }
        Extractor::Conv {
            layers: vec![ConvLayer::new(channels, channels, 3, 3, weights).expect("valid kernel")],
        }
    }

    pub fn validate(&self, input_channels: usize) -> Result<()> {
        match self {
            Extractor::Identity => Ok(()),
            Extractor::Conv { layers } => {
                if layers.is_empty() {
                    return Err(Error::invalid("conv extractor needs at least one layer"));
                }
                let mut c = input_channels;
                for layer in layers {
                    ConvLayer::new(
                        layer.in_channels,
                        layer.out_channels,
                        layer.kernel_h,
                        layer.kernel_w,
                        layer.weights.clone(),
                    )?;
                    if layer.in_channels != c {
                        return Err(Error::ShapeMismatch {
                            expected: format!("{c} input channels"),
                            got: format!("{}", layer.in_channels),
                        });
                    }
                    c = layer.out_channels;
                }
                Ok(())
            }
        }
    }

    pub fn output_channels(&self, input_channels: usize) -> usize {
        match self {
            Extractor::Identity => input_channels,
            Extractor::Conv { layers } => layers.last().map_or(input_channels, |l| l.out_channels),
        }
    }

    pub fn apply(&self, input: &LatentField) -> Result<LatentField> {
        match self {
            Extractor::Identity => Ok(input.clone()),
            Extractor::Conv { layers } => {
                let mut current = input.clone();
                for layer in layers {
                    current = layer.forward(&current)?;
                }
                Ok(current)
            }
        }
    }

    /// Pulls a gradient with respect to the feature grid back to a gradient
    /// with respect to the input grid.
    pub fn pullback(&self, grad_features: &LatentField) -> Result<LatentField> {
        match self {
            Extractor::Identity => Ok(grad_features.clone()),
            Extractor::Conv { layers } => {
                let mut current = grad_features.clone();
                for layer in layers.iter().rev() {
                    current = layer.backward(&current)?;
                }
                Ok(current)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn averaging(channels: usize) -> Extractor {
        let mut weights = vec![0.0; channels * channels * 9];
        for c in 0..channels {
            for k in 0..9 {
                weights[(c * channels + c) * 9 + k] = 1.0 / 9.0;
            }
        }
        Extractor::Conv {
            layers: vec![ConvLayer::new(channels, channels, 3, 3, weights).unwrap()],
        }
    }

    #[test]
    fn conv_matches_bruteforce_on_interior() {
        let field = LatentField::from_fn(6, 6, 1, |x, y, _| (3 * x + 7 * y) as f64);
        let ex = averaging(1);
        let out = ex.apply(&field).unwrap();
        // interior cell (2,2): mean of the 3x3 neighborhood
        let mut acc = 0.0;
        for dy in -1i64..=1 {
            for dx in -1i64..=1 {
                acc += field.get((2 + dx) as usize, (2 + dy) as usize, 0);
            }
        }
        assert!((out.get(2, 2, 0) - acc / 9.0).abs() < 1e-12);
    }

    #[test]
    fn pullback_is_transpose_of_apply() {
        // <A x, y> == <x, A^T y> for random x, y
        let ex = Extractor::binomial3x3(2);
        let x = LatentField::from_fn(5, 4, 2, |i, j, c| ((i * 31 + j * 17 + c * 7) % 13) as f64 - 6.0);
        let y = LatentField::from_fn(5, 4, 2, |i, j, c| ((i * 5 + j * 11 + c * 3) % 9) as f64 - 4.0);
        let ax = ex.apply(&x).unwrap();
        let aty = ex.pullback(&y).unwrap();
        let lhs: f64 = ax.data().iter().zip(y.data()).map(|(a, b)| a * b).sum();
        let rhs: f64 = x.data().iter().zip(aty.data()).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-9, "lhs={lhs} rhs={rhs}");
    }

    #[test]
    fn rejects_even_kernel() {
        assert!(ConvLayer::new(1, 1, 2, 3, vec![0.0; 6]).is_err());
    }
}
