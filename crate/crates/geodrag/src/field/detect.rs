//! Keypoint re-detection by cosine similarity.
//!
//! For each annotated point, the detector takes the feature vector at the
//! nearest grid cell of the reference field and scans the whole new field
//! for the integer position whose feature vector has maximum cosine
//! similarity. Ties keep the first position in row-major order; the number
//! of positions achieving the maximum is reported so degenerate
//! (zero-discriminability) fields are visible to the caller.

use crate::error::{Error, Result};
use crate::field::LatentField;
use crate::geometry::Point2;

/// One detected position with its winning similarity and tie count.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Detection {
    /// Integer grid position `(x, y)` of the best match.
    pub position: (usize, usize),
    /// Cosine similarity of the winner.
    pub similarity: f64,
    /// Number of grid positions that achieve exactly the winning similarity.
    pub tie_count: usize,
}

impl Detection {
    pub fn point(&self) -> Point2 {
        Point2::new(self.position.0 as f64, self.position.1 as f64)
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn detect_points(
    feat_ref: &LatentField,
    feat_new: &LatentField,
    annotated: &[Point2],
) -> Result<Vec<Detection>> {
    if feat_ref.channels() != feat_new.channels() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} channels", feat_ref.channels()),
            got: format!("{}", feat_new.channels()),
        });
    }
    let mut detections = Vec::with_capacity(annotated.len());
    for p in annotated {
        let (cx, cy) = p.round_cell();
        if cx < 0 || cy < 0 || cx as usize >= feat_ref.width() || cy as usize >= feat_ref.height() {
            return Err(Error::invalid(format!(
                "annotated point {p} outside {}x{} reference grid",
                feat_ref.width(),
                feat_ref.height()
            )));
        }
        let reference = feat_ref.cell_vector(cx as usize, cy as usize);
        let ref_norm = norm(reference);
        if ref_norm == 0.0 {
            return Err(Error::ZeroNormFeature { x: p.x, y: p.y });
        }
        let mut best: Option<Detection> = None;
        for y in 0..feat_new.height() {
            for x in 0..feat_new.width() {
                let candidate = feat_new.cell_vector(x, y);
                let cand_norm = norm(candidate);
                if cand_norm == 0.0 {
                    continue;
                }
                let sim = dot(reference, candidate) / (ref_norm * cand_norm);
                match &mut best {
                    None => {
                        best = Some(Detection {
                            position: (x, y),
                            similarity: sim,
                            tie_count: 1,
                        })
                    }
                    Some(b) => {
                        if sim > b.similarity {
                            b.position = (x, y);
                            b.similarity = sim;
                            b.tie_count = 1;
                        } else if sim == b.similarity {
                            b.tie_count += 1;
                        }
                    }
                }
            }
        }
        match best {
            Some(d) => detections.push(d),
            None => return Err(Error::ZeroNormFeature { x: p.x, y: p.y }),
        }
    }
    Ok(detections)
}
