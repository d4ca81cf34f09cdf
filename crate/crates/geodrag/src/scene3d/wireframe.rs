//! Wireframe rasterization: projected mesh edges on a grayscale raster.

use crate::error::{Error, Result};
use crate::scene3d::camera::Camera;
use crate::scene3d::mesh::Mesh;

/// A grayscale raster, one byte per pixel, row-major from the top-left.
#[derive(Clone, Debug, PartialEq)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl Raster {
    pub fn blank(width: usize, height: usize) -> Self {
        Raster {
            width,
            height,
            pixels: vec![0; width * height],
        }
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    fn plot(&mut self, x: i64, y: i64) {
        if x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height {
            self.pixels[y as usize * self.width + x as usize] = 255;
        }
    }

    /// DDA line from `a` to `b` in continuous pixel coordinates; pixels
    /// outside the raster are clipped away.
    fn line(&mut self, a: (f64, f64), b: (f64, f64)) {
        let dx = b.0 - a.0;
        let dy = b.1 - a.1;
        let steps = dx.abs().max(dy.abs()).ceil().max(1.0) as usize;
        for s in 0..=steps {
            let t = s as f64 / steps as f64;
            let x = (a.0 + t * dx).round() as i64;
            let y = (a.1 + t * dy).round() as i64;
            self.plot(x, y);
        }
    }
}

/// Projects every mesh edge and rasterizes it. Edges with an endpoint behind
/// the camera are skipped; if every vertex is behind the camera the render
/// fails. Output is deterministic for fixed inputs.
pub fn render_wireframe(mesh: &Mesh, camera: &Camera) -> Result<Raster> {
    let pose = camera.pose();
    let mut raster = Raster::blank(pose.width, pose.height);

    let projected: Vec<Option<(f64, f64)>> = mesh
        .vertices
        .iter()
        .map(|v| camera.project_unchecked(v).ok())
        .collect();

    if !mesh.vertices.is_empty() && projected.iter().all(|p| p.is_none()) {
        return Err(Error::invalid("all mesh vertices are behind the camera"));
    }

    for (a, b) in mesh.edges() {
        if let (Some(pa), Some(pb)) = (projected[a], projected[b]) {
            raster.line(pa, pb);
        }
    }
    Ok(raster)
}
