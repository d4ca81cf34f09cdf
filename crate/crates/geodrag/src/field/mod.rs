//! Latent feature grids and the operations the drag optimizer is built on:
//! differentiable patch sampling, pluggable linear feature extractors,
//! L1 patch losses with analytic gradients, and cosine-similarity
//! keypoint re-detection.

mod detect;
mod extractor;
mod loss;
mod sample;

pub use detect::{detect_points, Detection};
pub use extractor::{ConvLayer, Extractor};
pub use loss::{eval_assembly, eval_masked_diff, eval_patch_terms, LossAssembly, MaskedDiffTerm, PatchAlignTerm};
pub use sample::{patch_l1, sample_patch, sample_patch_features, sample_vector, PatchBlock};

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point2;

/// A dense H x W x C grid of real values, stored row-major with channels last.
///
/// This is the object the drag procedure optimizes. Values are held as `f64`
/// in memory; the on-disk container stores them as little-endian `f32`.
/// Continuous positions use `x` in `[0, W-1]` and `y` in `[0, H-1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LatentField {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ContainerHeader {
    height: usize,
    width: usize,
    channels: usize,
    dtype: String,
    order: String,
}

const CONTAINER_DTYPE: &str = "f32";
const CONTAINER_ORDER: &str = "row-major, channel-last";

impl LatentField {
    pub fn zeros(height: usize, width: usize, channels: usize) -> Self {
        LatentField {
            height,
            width,
            channels,
            data: vec![0.0; height * width * channels],
        }
    }

    pub fn from_data(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != height * width * channels {
            return Err(Error::ShapeMismatch {
                expected: format!("{} values ({height}x{width}x{channels})", height * width * channels),
                got: format!("{}", data.len()),
            });
        }
        Ok(LatentField {
            height,
            width,
            channels,
            data,
        })
    }

    /// Builds a field by evaluating `f(x, y, c)` at every cell.
    pub fn from_fn(height: usize, width: usize, channels: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(height * width * channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    data.push(f(x, y, c));
                }
            }
        }
        LatentField {
            height,
            width,
            channels,
            data,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.height, self.width, self.channels)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, c: usize) -> usize {
        (y * self.width + x) * self.channels + c
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, value: f64) {
        self.data[(y * self.width + x) * self.channels + c] = value;
    }

    /// The channel vector at an integer cell.
    pub fn cell_vector(&self, x: usize, y: usize) -> &[f64] {
        let start = (y * self.width + x) * self.channels;
        &self.data[start..start + self.channels]
    }

    pub fn same_shape(&self, other: &LatentField) -> bool {
        self.shape() == other.shape()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// `self + factor * other`, elementwise.
    pub fn add_scaled(&self, other: &LatentField, factor: f64) -> Result<LatentField> {
        if !self.same_shape(other) {
            return Err(Error::ShapeMismatch {
                expected: format!("{:?}", self.shape()),
                got: format!("{:?}", other.shape()),
            });
        }
        let data = self
            .data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| a + factor * b)
            .collect();
        LatentField::from_data(self.height, self.width, self.channels, data)
    }

    /// Writes the latent container: a one-line JSON header followed by
    /// H*W*C little-endian f32 values. Round-trips bit-exactly.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        let header = ContainerHeader {
            height: self.height,
            width: self.width,
            channels: self.channels,
            dtype: CONTAINER_DTYPE.to_string(),
            order: CONTAINER_ORDER.to_string(),
        };
        serde_json::to_writer(&mut out, &header)?;
        out.write_all(b"\n")?;
        for v in &self.data {
            out.write_all(&(*v as f32).to_le_bytes())?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<LatentField> {
        let mut reader = BufReader::new(File::open(path)?);
        let mut header_bytes = Vec::new();
        let mut byte = [0u8; 1];
        loop {
            let n = reader.read(&mut byte)?;
            if n == 0 {
                return Err(Error::parse("latent container: missing header line"));
            }
            if byte[0] == b'\n' {
                break;
            }
            header_bytes.push(byte[0]);
            if header_bytes.len() > 4096 {
                return Err(Error::parse("latent container: header line too long"));
            }
        }
        let header: ContainerHeader = serde_json::from_slice(&header_bytes)
            .map_err(|e| Error::parse(format!("latent container header: {e}")))?;
        if header.dtype != CONTAINER_DTYPE {
            return Err(Error::parse(format!(
                "latent container: unsupported dtype {:?}",
                header.dtype
            )));
        }
        if header.order != CONTAINER_ORDER {
            return Err(Error::parse(format!(
                "latent container: unsupported order {:?}",
                header.order
            )));
        }
        let count = header.height * header.width * header.channels;
        let mut raw = vec![0u8; count * 4];
        reader.read_exact(&mut raw).map_err(|_| {
            Error::parse(format!("latent container: expected {count} f32 values"))
        })?;
        let mut trailing = [0u8; 1];
        if reader.read(&mut trailing)? != 0 {
            return Err(Error::parse("latent container: trailing bytes after payload"));
        }
        let mut data = Vec::with_capacity(count);
        for chunk in raw.chunks_exact(4) {
            let v = f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]) as f64;
            if !v.is_finite() {
                return Err(Error::NonFinite("latent container payload".into()));
            }
            data.push(v);
        }
        LatentField::from_data(header.height, header.width, header.channels, data)
    }
}

/// A square patch of integer offsets around a continuous center.
///
/// `Patch { center, radius: r }` covers the (2r+1) x (2r+1) grid of offsets
/// `(dx, dy)` with `|dx|, |dy| <= r` around `center`. Patches never clamp:
/// an out-of-bounds patch is an error at the operation that uses it.
#[derive(Clone, Copy, Debug)]
pub struct Patch {
    pub center: Point2,
    pub radius: usize,
}

impl Patch {
    pub fn new(center: Point2, radius: usize) -> Self {
        Patch { center, radius }
    }

    /// Checks that every sampled position, including the bilinear support of
    /// fractional centers, lies inside a `width` x `height` grid.
    pub fn check_bounds(&self, width: usize, height: usize) -> Result<()> {
        let r = self.radius as f64;
        let ok_axis = |c: f64, n: usize| -> bool {
            if !c.is_finite() || n == 0 {
                return false;
            }
            let lo = c - r;
            let hi = c + r;
            let lo_cell = lo.floor();
            let hi_cell = if hi.fract() == 0.0 { hi } else { hi.floor() + 1.0 };
            lo_cell >= 0.0 && hi_cell <= (n - 1) as f64
        };
        if ok_axis(self.center.x, width) && ok_axis(self.center.y, height) {
            Ok(())
        } else {
            Err(Error::PatchOutOfBounds {
                x: self.center.x,
                y: self.center.y,
                radius: self.radius,
                width,
                height,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn container_roundtrip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("field.latent");
        let field = LatentField::from_fn(5, 7, 3, |x, y, c| (x as f64 * 0.37 - y as f64 * 1.21 + c as f64).sin());
        field.save(&path).unwrap();
        let bytes1 = std::fs::read(&path).unwrap();
        let loaded = LatentField::load(&path).unwrap();
        let path2 = dir.path().join("field2.latent");
        loaded.save(&path2).unwrap();
        let bytes2 = std::fs::read(&path2).unwrap();
        assert_eq!(bytes1, bytes2);
    }

    #[test]
    fn container_header_is_the_documented_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("field.latent");
        LatentField::zeros(3, 4, 2).save(&path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        let newline = bytes.iter().position(|&b| b == b'\n').unwrap();
        let header = std::str::from_utf8(&bytes[..newline]).unwrap();
        assert_eq!(
            header,
            r#"{"height":3,"width":4,"channels":2,"dtype":"f32","order":"row-major, channel-last"}"#
        );
        assert_eq!(bytes.len() - newline - 1, 3 * 4 * 2 * 4);
    }

    #[test]
    fn load_rejects_corrupt_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.latent");
        std::fs::write(&path, b"{\"height\":2\n\x00\x00\x00\x00").unwrap();
        assert!(matches!(LatentField::load(&path), Err(Error::Parse(_))));
    }

    #[test]
    fn load_rejects_truncated_payload() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("short.latent");
        let field = LatentField::zeros(4, 4, 2);
        field.save(&path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes.truncate(bytes.len() - 3);
        std::fs::write(&path, &bytes).unwrap();
        assert!(LatentField::load(&path).is_err());
    }

    #[test]
    fn patch_bounds() {
        let ok = Patch::new(Point2::new(3.0, 3.0), 2).check_bounds(8, 8);
        assert!(ok.is_ok());
        // fractional center needs one extra cell of support on the high side
        assert!(Patch::new(Point2::new(5.5, 3.0), 2).check_bounds(8, 8).is_err());
        assert!(Patch::new(Point2::new(5.0, 3.0), 2).check_bounds(8, 8).is_ok());
        assert!(Patch::new(Point2::new(1.5, 3.0), 2).check_bounds(8, 8).is_err());
    }
}
