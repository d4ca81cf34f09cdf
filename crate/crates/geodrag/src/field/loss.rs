//! L1 feature-alignment losses and their analytic reverse-mode gradients.
//!
//! A loss assembly is a sum of patch-alignment terms (L1 distance between a
//! bilinearly sampled feature patch and a constant target block) and an
//! optional per-cell weighted L1 difference against a constant reference
//! field. Both pieces are piecewise linear, so the gradient is assembled
//! from subgradient signs, with `sign(0) = 0`, scattered back through the
//! bilinear stencil and the extractor transpose.

use crate::error::{Error, Result};
use crate::field::sample::{bilinear_at, AxisStencil, PatchBlock};
use crate::field::{Extractor, LatentField, Patch};
use crate::geometry::Point2;

/// L1 distance between `F(z)` sampled on `Ω(center, radius)` and a constant
/// target block. Gradients flow into `z` only; the target is held fixed.
#[derive(Clone, Debug)]
pub struct PatchAlignTerm {
    pub center: Point2,
    pub radius: usize,
    pub target: PatchBlock,
}

/// `sum_cells w[cell] * sum_c |x[cell,c] - reference[cell,c]|` with one
/// weight per grid cell. The reference is constant.
#[derive(Clone, Debug)]
pub struct MaskedDiffTerm {
    pub reference: LatentField,
    /// One weight per cell, length H*W. Zero weight skips the cell.
    pub weights: Vec<f64>,
}

/// The loss shape the optimizer is allowed to assemble.
#[derive(Clone, Debug, Default)]
pub struct LossAssembly {
    pub patch_terms: Vec<PatchAlignTerm>,
    pub masked_diff: Option<MaskedDiffTerm>,
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Evaluates the patch-alignment terms on `z`, returning the loss value and
/// its gradient with respect to `z`.
pub fn eval_patch_terms(
    z: &LatentField,
    extractor: &Extractor,
    terms: &[PatchAlignTerm],
) -> Result<(f64, LatentField)> {
    let features = extractor.apply(z)?;
    let (h, w, fc) = features.shape();
    let mut loss = 0.0;
    let mut grad_features = LatentField::zeros(h, w, fc);

    for term in terms {
        if term.target.channels != fc {
            return Err(Error::ShapeMismatch {
                expected: format!("{fc} target channels"),
                got: format!("{}", term.target.channels),
            });
        }
        if term.target.radius != term.radius {
            return Err(Error::ShapeMismatch {
                expected: format!("target radius {}", term.radius),
                got: format!("{}", term.target.radius),
            });
        }
        let patch = Patch::new(term.center, term.radius);
        patch.check_bounds(w, h)?;
        let r = term.radius as isize;
        let side = 2 * term.radius + 1;
        for dy in -r..=r {
            let sy = AxisStencil::new(term.center.y + dy as f64);
            for dx in -r..=r {
                let sx = AxisStencil::new(term.center.x + dx as f64);
                for c in 0..fc {
                    let sampled = bilinear_at(&features, sx, sy, c);
                    let target = term.target.get((dx + r) as usize, (dy + r) as usize, c);
                    let diff = sampled - target;
                    loss += diff.abs();
                    let s = sign(diff);
                    if s == 0.0 {
                        continue;
                    }
                    scatter_bilinear(&mut grad_features, sx, sy, c, s);
                }
            }
        }
        let _ = side;
    }

    let grad = extractor.pullback(&grad_features)?;
    if !grad.is_finite() || !loss.is_finite() {
        return Err(Error::NonFinite("patch-alignment gradient".into()));
    }
    Ok((loss, grad))
}

#[inline]
fn scatter_bilinear(grad: &mut LatentField, sx: AxisStencil, sy: AxisStencil, c: usize, value: f64) {
    let (x0, y0) = (sx.base, sy.base);
    match (sx.frac == 0.0, sy.frac == 0.0) {
        (true, true) => {
            let i = grad.index(x0, y0, c);
            grad.data_mut()[i] += value;
        }
        (false, true) => {
            let i = grad.index(x0, y0, c);
            grad.data_mut()[i] += value * (1.0 - sx.frac);
            let i = grad.index(x0 + 1, y0, c);
            grad.data_mut()[i] += value * sx.frac;
        }
        (true, false) => {
            let i = grad.index(x0, y0, c);
            grad.data_mut()[i] += value * (1.0 - sy.frac);
            let i = grad.index(x0, y0 + 1, c);
            grad.data_mut()[i] += value * sy.frac;
        }
        (false, false) => {
            let i = grad.index(x0, y0, c);
            grad.data_mut()[i] += value * (1.0 - sx.frac) * (1.0 - sy.frac);
            let i = grad.index(x0 + 1, y0, c);
            grad.data_mut()[i] += value * sx.frac * (1.0 - sy.frac);
            let i = grad.index(x0, y0 + 1, c);
            grad.data_mut()[i] += value * (1.0 - sx.frac) * sy.frac;
            let i = grad.index(x0 + 1, y0 + 1, c);
            grad.data_mut()[i] += value * sx.frac * sy.frac;
        }
    }
}

/// Evaluates the weighted L1 difference term on `x`, returning the loss and
/// its gradient with respect to `x`.
pub fn eval_masked_diff(x: &LatentField, term: &MaskedDiffTerm) -> Result<(f64, LatentField)> {
    if !x.same_shape(&term.reference) {
        return Err(Error::ShapeMismatch {
            expected: format!("{:?}", term.reference.shape()),
            got: format!("{:?}", x.shape()),
        });
    }
    let (h, w, c) = x.shape();
    if term.weights.len() != h * w {
        return Err(Error::ShapeMismatch {
            expected: format!("{} cell weights", h * w),
            got: format!("{}", term.weights.len()),
        });
    }
    let mut loss = 0.0;
    let mut grad = LatentField::zeros(h, w, c);
    for cell in 0..h * w {
        let weight = term.weights[cell];
        if weight == 0.0 {
            continue;
        }
        for ch in 0..c {
            let i = cell * c + ch;
            let diff = x.data()[i] - term.reference.data()[i];
            loss += weight * diff.abs();
            grad.data_mut()[i] = weight * sign(diff);
        }
    }
    if !loss.is_finite() {
        return Err(Error::NonFinite("masked-difference loss".into()));
    }
    Ok((loss, grad))
}

/// Evaluates a full assembly on `z`: patch terms plus the masked-difference
/// term, both taken directly on `z`.
pub fn eval_assembly(
    z: &LatentField,
    extractor: &Extractor,
    assembly: &LossAssembly,
) -> Result<(f64, LatentField)> {
    let (mut loss, mut grad) = eval_patch_terms(z, extractor, &assembly.patch_terms)?;
    if let Some(term) = &assembly.masked_diff {
        let (l2, g2) = eval_masked_diff(z, term)?;
        loss += l2;
        grad = grad.add_scaled(&g2, 1.0)?;
    }
    Ok((loss, grad))
}
