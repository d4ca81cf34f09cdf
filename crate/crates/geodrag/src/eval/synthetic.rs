//! Synthetic drag cases: seeded Gaussian blobs on a textured background,
//! with instructions that drag the blob centers and an analytic ground
//! truth with the blobs re-centered at the targets.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::instruction::{Dims, DragInstruction, PointPair};
use crate::field::LatentField;
use crate::geometry::Point2;

/// Parameters of one synthetic case.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub blob_count: usize,
    pub blob_sigma: f64,
    /// One drag vector `[dx, dy]` per blob, in cells.
    pub drags: Vec<[f64; 2]>,
    pub seed: u64,
    /// Border band (cells) that blob centers and drag endpoints must avoid;
    /// keep it at least the tracking radius plus the supervision radius of
    /// the config the case will run under.
    pub margin: usize,
    /// Amplitude of the uniform background texture.
    pub background_amplitude: f64,
    /// Minimum pairwise distance between any two of the sources and targets.
    pub min_separation: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            height: 64,
            width: 64,
            channels: 4,
            blob_count: 1,
            blob_sigma: 2.0,
            drags: vec![[15.0, 0.0]],
            seed: 0,
            margin: 16,
            background_amplitude: 0.05,
            min_separation: 10.0,
        }
    }
}

/// A generated case: the input field, the instruction that drags the blob
/// centers, and the analytically translated ground-truth field. Centers and
/// per-blob channel amplitudes are exposed for oracle checks.
#[derive(Clone, Debug)]
pub struct SyntheticCase {
    pub field: LatentField,
    pub instruction: DragInstruction,
    pub ground_truth: LatentField,
    pub centers: Vec<Point2>,
    pub amplitudes: Vec<Vec<f64>>,
}

const PLACEMENT_ATTEMPTS: usize = 20_000;

pub fn generate_synthetic_case(spec: &SyntheticSpec) -> Result<SyntheticCase> {
    if spec.blob_count == 0 {
        return Err(Error::invalid("blob_count must be >= 1"));
    }
    if spec.drags.len() != spec.blob_count {
        return Err(Error::invalid(format!(
            "expected {} drag vectors, got {}",
            spec.blob_count,
            spec.drags.len()
        )));
    }
    if spec.blob_sigma.is_nan() || spec.blob_sigma <= 0.0 {
        return Err(Error::invalid("blob_sigma must be > 0"));
    }
    if 2 * spec.margin + 1 >= spec.width || 2 * spec.margin + 1 >= spec.height {
        return Err(Error::invalid(format!(
            "margin {} leaves no interior in a {}x{} grid",
            spec.margin, spec.width, spec.height
        )));
    }

    let mut rng = <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(spec.seed);

    let background: Vec<f64> = (0..spec.height * spec.width * spec.channels)
        .map(|_| rng.random_range(-spec.background_amplitude..=spec.background_amplitude))
        .collect();

    let centers = place_centers(spec, &mut rng)?;
    let targets: Vec<Point2> = centers
        .iter()
        .zip(spec.drags.iter())
        .map(|(c, d)| Point2::new(c.x + d[0], c.y + d[1]))
        .collect();

    let mut amplitudes = Vec::with_capacity(spec.blob_count);
    for _ in 0..spec.blob_count {
        let mut amps = Vec::with_capacity(spec.channels);
        for _ in 0..spec.channels {
            let magnitude: f64 = rng.random_range(1.5..=2.5);
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            amps.push(sign * magnitude);
        }
        amplitudes.push(amps);
    }

    let render = |blob_positions: &[Point2]| -> LatentField {
        let mut data = background.clone();
        let two_sigma_sq = 2.0 * spec.blob_sigma * spec.blob_sigma;
        for y in 0..spec.height {
            for x in 0..spec.width {
                for (b, pos) in blob_positions.iter().enumerate() {
                    let dx = x as f64 - pos.x;
                    let dy = y as f64 - pos.y;
                    let falloff = (-(dx * dx + dy * dy) / two_sigma_sq).exp();
                    if falloff < 1e-12 {
                        continue;
                    }
                    let base = (y * spec.width + x) * spec.channels;
                    for c in 0..spec.channels {
                        data[base + c] += amplitudes[b][c] * falloff;
                    }
                }
            }
        }
        LatentField::from_data(spec.height, spec.width, spec.channels, data).expect("consistent dims")
    };

    let field = render(&centers);
    let ground_truth = render(&targets);

    let mut tags = std::collections::BTreeMap::new();
    tags.insert("seed".to_string(), serde_json::json!(spec.seed));
    tags.insert("blob_sigma".to_string(), serde_json::json!(spec.blob_sigma));
    let instruction = DragInstruction {
        image: Dims {
            w: spec.width,
            h: spec.height,
        },
        latent: Dims {
            w: spec.width,
            h: spec.height,
        },
        pairs: centers
            .iter()
            .zip(targets.iter())
            .map(|(s, t)| PointPair {
                source: *s,
                target: *t,
            })
            .collect(),
        mask_path: None,
        tags,
    };
    instruction.validate()?;

    Ok(SyntheticCase {
        field,
        instruction,
        ground_truth,
        centers,
        amplitudes,
    })
}

fn place_centers(spec: &SyntheticSpec, rng: &mut ChaCha8Rng) -> Result<Vec<Point2>> {
    let lo_x = spec.margin as f64;
    let hi_x = (spec.width - 1 - spec.margin) as f64;
    let lo_y = spec.margin as f64;
    let hi_y = (spec.height - 1 - spec.margin) as f64;

    'attempt: for _ in 0..PLACEMENT_ATTEMPTS {
        let mut centers = Vec::with_capacity(spec.blob_count);
        for _ in 0..spec.blob_count {
            let x = rng.random_range(spec.margin..=spec.width - 1 - spec.margin) as f64;
            let y = rng.random_range(spec.margin..=spec.height - 1 - spec.margin) as f64;
            centers.push(Point2::new(x, y));
        }
        let mut endpoints = Vec::with_capacity(2 * spec.blob_count);
        for (c, d) in centers.iter().zip(spec.drags.iter()) {
            let t = Point2::new(c.x + d[0], c.y + d[1]);
            if t.x < lo_x || t.x > hi_x || t.y < lo_y || t.y > hi_y {
                continue 'attempt;
            }
            endpoints.push(*c);
            endpoints.push(t);
        }
        for a in 0..endpoints.len() {
            for b in a + 1..endpoints.len() {
                // a source and its own target may sit anywhere relative to
                // each other; distinct blobs must keep their distance
                if a / 2 == b / 2 {
                    continue;
                }
                if endpoints[a].distance(&endpoints[b]) < spec.min_separation {
                    continue 'attempt;
                }
            }
        }
        return Ok(centers);
    }
    Err(Error::invalid(format!(
        "could not place {} blobs with margin {} and min separation {} in a {}x{} grid",
        spec.blob_count, spec.margin, spec.min_separation, spec.width, spec.height
    )))
}

/// The fixed 20-case suite shipped with the crate: 64x64x4 grids with one to
/// three blobs and drags between 10 and 25 cells.
pub fn reference_suite() -> Vec<(String, SyntheticSpec)> {
    let mut cases = Vec::with_capacity(20);
    for i in 0..20usize {
        let blob_count = 1 + i % 3;
        let base_len = 11.0 + 13.0 * i as f64 / 19.0;
        let mut drags = Vec::with_capacity(blob_count);
        for b in 0..blob_count {
            let angle = i as f64 * 2.399963 + b as f64 * 2.0944;
            let dx = (base_len * angle.cos()).round();
            let dy = (base_len * angle.sin()).round();
            drags.push([dx, dy]);
        }
        let spec = SyntheticSpec {
            blob_count,
            drags,
            seed: 1000 + i as u64,
            ..SyntheticSpec::default()
        };
        cases.push((format!("case{i:02}"), spec));
    }
    cases
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_drag_gives_identity_instruction_and_ground_truth() {
        let spec = SyntheticSpec {
            drags: vec![[0.0, 0.0]],
            ..SyntheticSpec::default()
        };
        let case = generate_synthetic_case(&spec).unwrap();
        for pair in &case.instruction.pairs {
            assert_eq!(pair.source, pair.target);
        }
        assert_eq!(case.field, case.ground_truth);
    }

    #[test]
    fn single_blob_ground_truth_center_is_shifted() {
        let spec = SyntheticSpec {
            drags: vec![[20.0, 0.0]],
            seed: 7,
            ..SyntheticSpec::default()
        };
        let case = generate_synthetic_case(&spec).unwrap();
        let center = case.centers[0];
        let target = case.instruction.pairs[0].target;
        assert_eq!(target.x, center.x + 20.0);
        assert_eq!(target.y, center.y);
        // the strongest matched-filter response of the ground truth sits at the target
        let amps = &case.amplitudes[0];
        let score = |f: &LatentField, x: usize, y: usize| -> f64 {
            (0..4).map(|c| f.get(x, y, c) * amps[c]).sum()
        };
        let mut best = (0usize, 0usize, f64::NEG_INFINITY);
        for y in 0..64 {
            for x in 0..64 {
                let s = score(&case.ground_truth, x, y);
                if s > best.2 {
                    best = (x, y, s);
                }
            }
        }
        assert_eq!((best.0 as f64, best.1 as f64), (target.x, target.y));
    }

    #[test]
    fn blob_centroids_match_spec_centers() {
        // weighted-centroid oracle: matched-filter response around each
        // claimed center, positive part only
        let spec = SyntheticSpec {
            blob_count: 3,
            drags: vec![[12.0, 0.0], [0.0, 14.0], [-11.0, -5.0]],
            seed: 42,
            ..SyntheticSpec::default()
        };
        let case = generate_synthetic_case(&spec).unwrap();
        let window = (3.0 * spec.blob_sigma).ceil() as i64;
        for (b, center) in case.centers.iter().enumerate() {
            let amps = &case.amplitudes[b];
            let (mut wx, mut wy, mut total) = (0.0, 0.0, 0.0);
            for dy in -window..=window {
                for dx in -window..=window {
                    let x = center.x as i64 + dx;
                    let y = center.y as i64 + dy;
                    let response: f64 = (0..spec.channels)
                        .map(|c| case.field.get(x as usize, y as usize, c) * amps[c])
                        .sum();
                    let w = response.max(0.0);
                    wx += w * x as f64;
                    wy += w * y as f64;
                    total += w;
                }
            }
            let cx = wx / total;
            let cy = wy / total;
            assert!(
                (cx - center.x).abs() < 0.1 && (cy - center.y).abs() < 0.1,
                "blob {b}: centroid ({cx:.3}, {cy:.3}) vs center {center}"
            );
        }
    }

    #[test]
    fn impossible_margins_error() {
        let spec = SyntheticSpec {
            margin: 32,
            ..SyntheticSpec::default()
        };
        assert!(generate_synthetic_case(&spec).is_err());
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = SyntheticSpec {
            blob_count: 2,
            drags: vec![[10.0, 5.0], [-8.0, 9.0]],
            seed: 11,
            ..SyntheticSpec::default()
        };
        let a = generate_synthetic_case(&spec).unwrap();
        let b = generate_synthetic_case(&spec).unwrap();
        assert_eq!(a.field, b.field);
        assert_eq!(a.instruction, b.instruction);
        assert_eq!(a.ground_truth, b.ground_truth);
    }

    #[test]
    fn reference_suite_is_well_formed() {
        let suite = reference_suite();
        assert_eq!(suite.len(), 20);
        for (id, spec) in &suite {
            let case = generate_synthetic_case(spec).expect(id);
            for (pair, drag) in case.instruction.pairs.iter().zip(spec.drags.iter()) {
                let len = (drag[0].powi(2) + drag[1].powi(2)).sqrt();
                assert!((10.0..=25.0).contains(&len), "{id}: drag length {len}");
                assert_eq!(pair.target.x - pair.source.x, drag[0]);
            }
        }
    }
}
