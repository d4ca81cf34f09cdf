//! Shared test oracles, independent of the library's implementation paths.

#![allow(dead_code)]

use geodrag::drag::{Denoiser, DragConfig, DragState, EditableMask};
use geodrag::field::{Extractor, LatentField};
use geodrag::geometry::Point2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

// ---------------------------------------------------------------------------
// Projection oracle: explicit homogeneous matrix chain.
//
// The camera rig is the canonical one at (r, 0, 0) — right (0,1,0),
// down (0,0,-1), forward (-1,0,0) — rotated by Rz(phi) * Ry(-theta).
// Composition and application are hand-rolled 4x4 / 3x4 products, fully
// separate from the library's cross-product construction.
// ---------------------------------------------------------------------------

pub struct OraclePose {
    pub r: f64,
    pub theta_deg: f64,
    pub phi_deg: f64,
    pub focal: f64,
    pub cx: f64,
    pub cy: f64,
}

fn mat3_mul(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for (k, bk) in b.iter().enumerate() {
                out[i][j] += a[i][k] * bk[j];
            }
        }
    }
    out
}

fn mat3_vec(a: &[[f64; 3]; 3], v: &[f64; 3]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for i in 0..3 {
        for (k, vk) in v.iter().enumerate() {
            out[i] += a[i][k] * vk;
        }
    }
    out
}

/// Projects a world point through the explicit K * [R|t] chain. Returns
/// `None` for points at or behind the camera plane.
pub fn oracle_project(pose: &OraclePose, point: [f64; 3]) -> Option<(f64, f64)> {
    let th = pose.theta_deg.to_radians();
    let ph = pose.phi_deg.to_radians();
    let ry = [
        [(-th).cos(), 0.0, (-th).sin()],
        [0.0, 1.0, 0.0],
        [-(-th).sin(), 0.0, (-th).cos()],
    ];
    let rz = [
        [ph.cos(), -ph.sin(), 0.0],
        [ph.sin(), ph.cos(), 0.0],
        [0.0, 0.0, 1.0],
    ];
    let q = mat3_mul(&rz, &ry);
    let eye = mat3_vec(&q, &[pose.r, 0.0, 0.0]);
    let right = mat3_vec(&q, &[0.0, 1.0, 0.0]);
    let down = mat3_vec(&q, &[0.0, 0.0, -1.0]);
    let forward = mat3_vec(&q, &[-1.0, 0.0, 0.0]);

    // E = [R | -R*eye] as a 4x4, K as a 3x4, P = K*E applied to [X; 1]
    let r_mat = [right, down, forward];
    let t = {
        let re = mat3_vec(&r_mat, &eye);
        [-re[0], -re[1], -re[2]]
    };
    let mut e4 = [[0.0; 4]; 4];
    for i in 0..3 {
        e4[i][..3].copy_from_slice(&r_mat[i]);
        e4[i][3] = t[i];
    }
    e4[3][3] = 1.0;
    let k = [
        [pose.focal, 0.0, pose.cx, 0.0],
        [0.0, pose.focal, pose.cy, 0.0],
        [0.0, 0.0, 1.0, 0.0],
    ];
    let mut p = [[0.0; 4]; 3];
    for i in 0..3 {
        for j in 0..4 {
            for (m, e_row) in e4.iter().enumerate() {
                p[i][j] += k[i][m] * e_row[j];
            }
        }
    }
    let xh = [point[0], point[1], point[2], 1.0];
    let mut proj = [0.0; 3];
    for i in 0..3 {
        for (j, x) in xh.iter().enumerate() {
            proj[i] += p[i][j] * x;
        }
    }
    if proj[2] <= 0.0 {
        return None;
    }
    Some((proj[0] / proj[2], proj[1] / proj[2]))
}

// ---------------------------------------------------------------------------
// Gradient-check fixtures.
//
// Fields hold small integer values and all patch geometry is dyadic
// (quarter-fraction positions, axis-aligned step directions), so every
// loss term evaluates exactly in binary floating point. Breakpoints of the
// piecewise-linear loss are then either exactly zero (where analytic and
// central differences agree identically) or at least 1/16 away from zero,
// far outside the finite-difference window.
// ---------------------------------------------------------------------------

pub fn integer_field(rng: &mut ChaCha8Rng, h: usize, w: usize, c: usize) -> LatentField {
    let data: Vec<f64> = (0..h * w * c).map(|_| rng.random_range(-8..=8) as f64).collect();
    LatentField::from_data(h, w, c, data).unwrap()
}

pub fn random_binary_mask(rng: &mut ChaCha8Rng, h: usize, w: usize) -> EditableMask {
    let cells: Vec<u8> = (0..h * w).map(|_| u8::from(rng.random_bool(0.6))).collect();
    EditableMask::from_cells(h, w, cells).unwrap()
}

/// Integer-weight conv extractor, 4 -> 2 channels, 3x3 kernel.
pub fn integer_conv_extractor(rng: &mut ChaCha8Rng) -> Extractor {
    let weights: Vec<f64> = (0..2 * 4 * 9).map(|_| rng.random_range(-2..=2) as f64).collect();
    Extractor::Conv {
        layers: vec![geodrag::field::ConvLayer::new(4, 2, 3, 3, weights).unwrap()],
    }
}

/// Three handle points at quarter-fraction positions with axis-aligned
/// directions to their targets, patches safely in bounds for a 16x16 grid.
pub fn quarter_fraction_state(rng: &mut ChaCha8Rng) -> DragState {
    let mut points = Vec::new();
    let mut targets = Vec::new();
    for i in 0..3 {
        let px = 6.0 + rng.random_range(0..=12) as f64 * 0.25;
        let py = 6.0 + rng.random_range(0..=12) as f64 * 0.25;
        let dist = 5.0;
        let (gx, gy) = match (i + rng.random_range(0..4usize)) % 4 {
            0 => (px + dist, py),
            1 => (px - dist, py),
            2 => (px, py + dist),
            _ => (px, py - dist),
        };
        points.push(Point2::new(px, py));
        targets.push(Point2::new(gx, gy));
    }
    DragState::new(points, targets).unwrap()
}

/// Config used by the gradient checks: dyadic step size and mask weight.
pub fn gradient_check_config() -> DragConfig {
    DragConfig {
        sup_radius: 2,
        track_radius: 4,
        grad_mask_radius: 2,
        step_size: 2.25,
        mask_weight: 0.125,
        ..DragConfig::default()
    }
}

/// Central finite difference of the motion-supervision loss with respect to
/// every latent entry.
#[allow(clippy::too_many_arguments)]
pub fn finite_difference_gradient(
    z: &LatentField,
    z0: &LatentField,
    z0_prev: &LatentField,
    state: &DragState,
    mask: &EditableMask,
    extractor: &Extractor,
    cfg: &DragConfig,
    step: f64,
) -> LatentField {
    let denoiser = Denoiser::Identity;
    let loss_of = |field: &LatentField| -> f64 {
        let mut s = state.clone();
        geodrag::drag::motion_supervision_loss(field, z0, z0_prev, &mut s, mask, extractor, &denoiser, cfg, true)
            .expect("loss evaluates")
            .loss
    };
    let (h, w, c) = z.shape();
    let mut grad = LatentField::zeros(h, w, c);
    for idx in 0..h * w * c {
        let mut plus = z.clone();
        plus.data_mut()[idx] += step;
        let mut minus = z.clone();
        minus.data_mut()[idx] -= step;
        grad.data_mut()[idx] = (loss_of(&plus) - loss_of(&minus)) / (2.0 * step);
    }
    grad
}

/// Max relative error between analytic and finite-difference gradients over
/// entries where the analytic gradient is meaningfully nonzero.
pub fn max_relative_error(analytic: &LatentField, fd: &LatentField, floor: f64) -> f64 {
    analytic
        .data()
        .iter()
        .zip(fd.data().iter())
        .filter(|(a, _)| a.abs() > floor)
        .map(|(a, f)| (a - f).abs() / a.abs())
        .fold(0.0, f64::max)
}
