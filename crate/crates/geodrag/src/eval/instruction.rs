//! Drag instruction documents: paired source/target pixels plus grid
//! geometry, exchanged as JSON.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub w: usize,
    pub h: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointPair {
    pub source: Point2,
    pub target: Point2,
}

/// A drag instruction: where each keypoint sits in the image and where it
/// must go, with the latent grid the drag operates on. Points are in image
/// pixels; the latent dimensions must divide the image dimensions by one
/// integral factor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DragInstruction {
    pub image: Dims,
    pub latent: Dims,
    pub pairs: Vec<PointPair>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mask_path: Option<String>,
    #[serde(default)]
    pub tags: BTreeMap<String, serde_json::Value>,
}

impl DragInstruction {
    pub fn validate(&self) -> Result<()> {
        self.scale()?;
        if self.pairs.is_empty() {
            return Err(Error::invalid("instruction has no point pairs"));
        }
        for (i, pair) in self.pairs.iter().enumerate() {
            for (label, p) in [("source", pair.source), ("target", pair.target)] {
                if !p.is_finite() {
                    return Err(Error::NonFinite(format!("pair {i} {label}")));
                }
                if p.x < 0.0
                    || p.y < 0.0
                    || p.x > (self.image.w - 1) as f64
                    || p.y > (self.image.h - 1) as f64
                {
                    return Err(Error::invalid(format!(
                        "pair {i} {label} {p} outside {}x{} image",
                        self.image.w, self.image.h
                    )));
                }
            }
        }
        Ok(())
    }

    /// The integral image-to-latent downscale factor.
    pub fn scale(&self) -> Result<usize> {
        if self.latent.w == 0 || self.latent.h == 0 || self.image.w == 0 || self.image.h == 0 {
            return Err(Error::invalid("instruction dimensions must be positive"));
        }
        if !self.image.w.is_multiple_of(self.latent.w) || !self.image.h.is_multiple_of(self.latent.h) {
            return Err(Error::invalid(format!(
                "latent {}x{} does not evenly divide image {}x{}",
                self.latent.w, self.latent.h, self.image.w, self.image.h
            )));
        }
        let sx = self.image.w / self.latent.w;
        let sy = self.image.h / self.latent.h;
        if sx != sy {
            return Err(Error::invalid(format!(
                "image-to-latent scale differs per axis ({sx} vs {sy})"
            )));
        }
        Ok(sx)
    }

    /// Source and target points scaled into latent coordinates, checked
    /// against the latent bounds.
    pub fn latent_points(&self) -> Result<(Vec<Point2>, Vec<Point2>)> {
        let scale = self.scale()? as f64;
        let to_latent = |p: Point2, i: usize, label: &str| -> Result<Point2> {
            let q = p.scale(1.0 / scale);
            if q.x < 0.0
                || q.y < 0.0
                || q.x > (self.latent.w - 1) as f64
                || q.y > (self.latent.h - 1) as f64
            {
                return Err(Error::invalid(format!(
                    "pair {i} {label} {p} maps outside the {}x{} latent grid",
                    self.latent.w, self.latent.h
                )));
            }
            Ok(q)
        };
        let mut sources = Vec::with_capacity(self.pairs.len());
        let mut targets = Vec::with_capacity(self.pairs.len());
        for (i, pair) in self.pairs.iter().enumerate() {
            sources.push(to_latent(pair.source, i, "source")?);
            targets.push(to_latent(pair.target, i, "target")?);
        }
        Ok((sources, targets))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<DragInstruction> {
        let text = std::fs::read_to_string(path)?;
        let instruction: DragInstruction = serde_json::from_str(&text)
            .map_err(|e| Error::parse(format!("instruction {}: {e}", path.display())))?;
        instruction.validate()?;
        Ok(instruction)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> DragInstruction {
        DragInstruction {
            image: Dims { w: 128, h: 128 },
            latent: Dims { w: 64, h: 64 },
            pairs: vec![PointPair {
                source: Point2::new(20.0, 30.0),
                target: Point2::new(60.0, 30.0),
            }],
            mask_path: None,
            tags: BTreeMap::new(),
        }
    }

    #[test]
    fn scale_and_latent_points() {
        let instr = sample();
        assert_eq!(instr.scale().unwrap(), 2);
        let (src, tgt) = instr.latent_points().unwrap();
        assert_eq!(src[0], Point2::new(10.0, 15.0));
        assert_eq!(tgt[0], Point2::new(30.0, 15.0));
    }

    #[test]
    fn uneven_scale_is_rejected() {
        let mut instr = sample();
        instr.latent = Dims { w: 60, h: 64 };
        assert!(instr.scale().is_err());
        instr.latent = Dims { w: 64, h: 32 };
        assert!(instr.scale().is_err());
    }

    #[test]
    fn out_of_image_point_is_rejected() {
        let mut instr = sample();
        instr.pairs[0].target = Point2::new(128.0, 30.0);
        assert!(instr.validate().is_err());
    }

    #[test]
    fn json_roundtrip() {
        let instr = sample();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("instr.json");
        instr.save(&path).unwrap();
        let loaded = DragInstruction::load(&path).unwrap();
        assert_eq!(loaded, instr);
    }
}
