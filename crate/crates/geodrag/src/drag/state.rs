//! Handle-point state, the fixation hysteresis, and the editable mask.

use crate::error::{Error, Result};
use crate::geometry::Point2;

/// Fixation membership change produced by the hysteresis update.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FixationEvent {
    Enter(usize),
    Exit(usize),
}

/// Mutable state of a drag run: current handle points, targets, original
/// points, per-point distance to target, and the fixation set.
#[derive(Clone, Debug)]
pub struct DragState {
    points: Vec<Point2>,
    targets: Vec<Point2>,
    origins: Vec<Point2>,
    fixated: Vec<bool>,
    dist: Vec<f64>,
    pub timestep: usize,
    pub iteration: usize,
}

impl DragState {
    pub fn new(points: Vec<Point2>, targets: Vec<Point2>) -> Result<Self> {
        if points.len() != targets.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} targets", points.len()),
                got: format!("{}", targets.len()),
            });
        }
        if points.is_empty() {
            return Err(Error::invalid("drag state needs at least one point"));
        }
        for p in points.iter().chain(targets.iter()) {
            if !p.is_finite() {
                return Err(Error::NonFinite("drag points".into()));
            }
        }
        let dist = points
            .iter()
            .zip(targets.iter())
            .map(|(p, g)| p.distance(g))
            .collect();
        Ok(DragState {
            origins: points.clone(),
            fixated: vec![false; points.len()],
            points,
            targets,
            dist,
            timestep: 0,
            iteration: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    pub fn targets(&self) -> &[Point2] {
        &self.targets
    }

    pub fn origins(&self) -> &[Point2] {
        &self.origins
    }

    pub fn distances(&self) -> &[f64] {
        &self.dist
    }

    pub fn is_fixated(&self, i: usize) -> bool {
        self.fixated[i]
    }

    pub fn fixated_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.fixated[i]).collect()
    }

    pub fn all_indices(&self) -> Vec<usize> {
        (0..self.len()).collect()
    }

    /// Moves a handle point and refreshes its distance to target.
    pub fn set_point(&mut self, i: usize, p: Point2) {
        self.points[i] = p;
        self.dist[i] = p.distance(&self.targets[i]);
    }

    /// Unit direction from point `i` toward its target; the zero vector when
    /// the point sits exactly on the target.
    pub fn direction(&self, i: usize) -> Point2 {
        let d = self.targets[i].sub(&self.points[i]);
        let n = d.norm();
        if n == 0.0 {
            Point2::new(0.0, 0.0)
        } else {
            d.scale(1.0 / n)
        }
    }

    /// Hysteresis update of the fixation set.
    ///
    /// A point outside the set enters when its distance drops to the entry
    /// threshold or below; a point inside leaves when its distance reaches
    /// the exit threshold or beyond. In between, membership is unchanged.
    /// With `reentry_enabled == false` the exit rule is disabled.
    pub fn update_fixation(&mut self, enter: f64, exit: f64, reentry_enabled: bool) -> Vec<FixationEvent> {
        let mut events = Vec::new();
        for i in 0..self.len() {
            let e = self.dist[i];
            if !self.fixated[i] && e <= enter {
                self.fixated[i] = true;
                events.push(FixationEvent::Enter(i));
            } else if self.fixated[i] && reentry_enabled && e >= exit {
                self.fixated[i] = false;
                events.push(FixationEvent::Exit(i));
            }
        }
        events
    }

    /// Forces any non-fixated point sitting exactly on its target into the
    /// fixation set; its movement direction is undefined there, so it cannot
    /// participate in the supervision loss.
    pub fn enforce_zero_distance_fixation(&mut self) -> Vec<FixationEvent> {
        let mut events = Vec::new();
        for i in 0..self.len() {
            if !self.fixated[i] && self.dist[i] == 0.0 {
                self.fixated[i] = true;
                events.push(FixationEvent::Enter(i));
            }
        }
        events
    }
}

/// Binary editable-region mask at latent resolution; 1 = editable.
#[derive(Clone, Debug, PartialEq)]
pub struct EditableMask {
    height: usize,
    width: usize,
    data: Vec<u8>,
}

impl EditableMask {
    pub fn all_editable(height: usize, width: usize) -> Self {
        EditableMask {
            height,
            width,
            data: vec![1; height * width],
        }
    }

    pub fn from_cells(height: usize, width: usize, data: Vec<u8>) -> Result<Self> {
        if data.len() != height * width {
            return Err(Error::ShapeMismatch {
                expected: format!("{} mask cells", height * width),
                got: format!("{}", data.len()),
            });
        }
        Ok(EditableMask {
            height,
            width,
            data: data.into_iter().map(|v| u8::from(v != 0)).collect(),
        })
    }

    /// Downsamples an image-resolution mask by an integral factor. A latent
    /// cell is editable when any covered pixel is editable.
    pub fn from_image(pixels: &[u8], img_width: usize, img_height: usize, scale: usize) -> Result<Self> {
        if scale == 0 || !img_width.is_multiple_of(scale) || !img_height.is_multiple_of(scale) {
            return Err(Error::invalid(format!(
                "mask dimensions {img_width}x{img_height} not divisible by scale {scale}"
            )));
        }
        if pixels.len() != img_width * img_height {
            return Err(Error::ShapeMismatch {
                expected: format!("{} mask pixels", img_width * img_height),
                got: format!("{}", pixels.len()),
            });
        }
        let width = img_width / scale;
        let height = img_height / scale;
        let mut data = vec![0u8; width * height];
        for y in 0..img_height {
            for x in 0..img_width {
                if pixels[y * img_width + x] > 127 {
                    data[(y / scale) * width + (x / scale)] = 1;
                }
            }
        }
        Ok(EditableMask {
            height,
            width,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn editable(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x] != 0
    }

    /// Per-cell weights `weight * (1 - M)` for the non-editable-region term.
    pub fn protection_weights(&self, weight: f64) -> Vec<f64> {
        self.data
            .iter()
            .map(|&m| if m == 0 { weight } else { 0.0 })
            .collect()
    }

    pub fn is_all_editable(&self) -> bool {
        self.data.iter().all(|&m| m != 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state_with_distance(e: f64) -> DragState {
        DragState::new(vec![Point2::new(0.0, 0.0)], vec![Point2::new(e, 0.0)]).unwrap()
    }

    #[test]
    fn enters_at_or_below_entry_threshold() {
        let mut s = state_with_distance(1.0);
        let events = s.update_fixation(1.0, 3.0, true);
        assert_eq!(events, vec![FixationEvent::Enter(0)]);
        assert!(s.is_fixated(0));
    }

    #[test]
    fn stays_inside_hysteresis_band() {
        let mut s = state_with_distance(0.5);
        s.update_fixation(1.0, 3.0, true);
        s.set_point(0, Point2::new(-1.5, 0.0)); // e = 2.0, inside (l, u)
        let events = s.update_fixation(1.0, 3.0, true);
        assert!(events.is_empty());
        assert!(s.is_fixated(0));
    }

    #[test]
    fn exits_at_exit_threshold() {
        let mut s = state_with_distance(0.5);
        s.update_fixation(1.0, 3.0, true);
        s.set_point(0, Point2::new(-2.5, 0.0)); // e = 3.0
        let events = s.update_fixation(1.0, 3.0, true);
        assert_eq!(events, vec![FixationEvent::Exit(0)]);
        assert!(!s.is_fixated(0));
    }

    #[test]
    fn no_reentry_keeps_membership() {
        let mut s = state_with_distance(0.5);
        s.update_fixation(1.0, 3.0, false);
        s.set_point(0, Point2::new(-9.0, 0.0));
        let events = s.update_fixation(1.0, 3.0, false);
        assert!(events.is_empty());
        assert!(s.is_fixated(0));
    }

    #[test]
    fn mask_downsampling_any_editable_wins() {
        // 4x4 image, scale 2: only one editable pixel in the top-left block
        let mut pixels = vec![0u8; 16];
        pixels[1] = 255;
        let mask = EditableMask::from_image(&pixels, 4, 4, 2).unwrap();
        assert!(mask.editable(0, 0));
        assert!(!mask.editable(1, 0));
        assert!(!mask.editable(0, 1));
        assert!(!mask.editable(1, 1));
    }
}
