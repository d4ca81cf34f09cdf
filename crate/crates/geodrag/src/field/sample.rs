//! Differentiable patch sampling.
//!
//! Patch entries at fractional positions are bilinearly interpolated.
//! Integral coordinates short-circuit to direct indexing so that sampling
//! at a grid cell is bit-exact equal to reading the cell.

use crate::error::{Error, Result};
use crate::field::{Extractor, LatentField, Patch};

/// A (2r+1) x (2r+1) x C block of sampled feature values, row-major,
/// channels last.
#[derive(Clone, Debug, PartialEq)]
pub struct PatchBlock {
    pub radius: usize,
    pub channels: usize,
    pub data: Vec<f64>,
}

impl PatchBlock {
    pub fn side(&self) -> usize {
        2 * self.radius + 1
    }

    #[inline]
    pub fn get(&self, ox: usize, oy: usize, c: usize) -> f64 {
        self.data[(oy * self.side() + ox) * self.channels + c]
    }
}

/// The four-cell stencil of a fractional coordinate along one axis.
/// `base` is the lower cell; weight `1 - frac` applies to it and `frac`
/// to `base + 1`. When `frac == 0` only `base` participates.
#[derive(Clone, Copy, Debug)]
pub(crate) struct AxisStencil {
    pub base: usize,
    pub frac: f64,
}

impl AxisStencil {
    pub(crate) fn new(coord: f64) -> Self {
        let base = coord.floor();
        AxisStencil {
            base: base as usize,
            frac: coord - base,
        }
    }
}

#[inline]
pub(crate) fn bilinear_at(field: &LatentField, sx: AxisStencil, sy: AxisStencil, c: usize) -> f64 {
    let v00 = field.get(sx.base, sy.base, c);
    match (sx.frac == 0.0, sy.frac == 0.0) {
        (true, true) => v00,
        (false, true) => {
            let v10 = field.get(sx.base + 1, sy.base, c);
            v00 * (1.0 - sx.frac) + v10 * sx.frac
        }
        (true, false) => {
            let v01 = field.get(sx.base, sy.base + 1, c);
            v00 * (1.0 - sy.frac) + v01 * sy.frac
        }
        (false, false) => {
            let v10 = field.get(sx.base + 1, sy.base, c);
            let v01 = field.get(sx.base, sy.base + 1, c);
            let v11 = field.get(sx.base + 1, sy.base + 1, c);
            v00 * (1.0 - sx.frac) * (1.0 - sy.frac)
                + v10 * sx.frac * (1.0 - sy.frac)
                + v01 * (1.0 - sx.frac) * sy.frac
                + v11 * sx.frac * sy.frac
        }
    }
}

/// Samples the feature block of `F(z)` on a square patch.
///
/// The extractor runs on the full grid first; the patch is then read off the
/// feature grid with bilinear interpolation at each entry.
pub fn sample_patch(z: &LatentField, extractor: &Extractor, patch: &Patch) -> Result<PatchBlock> {
    let features = extractor.apply(z)?;
    sample_patch_features(&features, patch)
}

/// Same as [`sample_patch`] but on an already-extracted feature grid.
pub fn sample_patch_features(features: &LatentField, patch: &Patch) -> Result<PatchBlock> {
    patch.check_bounds(features.width(), features.height())?;
    let r = patch.radius as isize;
    let side = 2 * patch.radius + 1;
    let channels = features.channels();
    let mut data = Vec::with_capacity(side * side * channels);
    for dy in -r..=r {
        let sy = AxisStencil::new(patch.center.y + dy as f64);
        for dx in -r..=r {
            let sx = AxisStencil::new(patch.center.x + dx as f64);
            for c in 0..channels {
                let v = bilinear_at(features, sx, sy, c);
                if !v.is_finite() {
                    return Err(Error::NonFinite("sampled patch".into()));
                }
                data.push(v);
            }
        }
    }
    Ok(PatchBlock {
        radius: patch.radius,
        channels,
        data,
    })
}

/// The feature vector of `features` at one continuous position
/// (a radius-0 patch, returned as a plain vector).
pub fn sample_vector(features: &LatentField, x: f64, y: f64) -> Result<Vec<f64>> {
    let block = sample_patch_features(
        features,
        &Patch::new(crate::geometry::Point2::new(x, y), 0),
    )?;
    Ok(block.data)
}

/// Sum of absolute differences between two equal-shape blocks.
pub fn patch_l1(a: &PatchBlock, b: &PatchBlock) -> Result<f64> {
    if a.radius != b.radius || a.channels != b.channels {
        return Err(Error::ShapeMismatch {
            expected: format!("block r={} c={}", a.radius, a.channels),
            got: format!("block r={} c={}", b.radius, b.channels),
        });
    }
    Ok(a.data
        .iter()
        .zip(b.data.iter())
        .map(|(x, y)| (x - y).abs())
        .sum())
}
