//! Pinhole camera on a spherical mount.
//!
//! The camera sits at spherical coordinates (distance, elevation, azimuth)
//! about the world origin and looks at the origin. World coordinates are
//! right-handed with +z up; image coordinates have the origin at the
//! top-left with y running down. No lens distortion.

use nalgebra::{Matrix3, Point3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Camera placement and intrinsics. Angles are in degrees; `r`, `theta_deg`
/// and `phi_deg` place the camera at
/// `(r cosθ cosφ, r cosθ sinφ, r sinθ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraPose {
    pub r: f64,
    pub theta_deg: f64,
    pub phi_deg: f64,
    pub focal_px: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

impl CameraPose {
    pub fn validate(&self) -> Result<()> {
        if !(self.r > 0.0 && self.r.is_finite()) {
            return Err(Error::invalid(format!("camera distance r must be > 0 (got {})", self.r)));
        }
        if !(-90.0..=90.0).contains(&self.theta_deg) {
            return Err(Error::invalid(format!(
                "elevation theta_deg must lie in [-90, 90] (got {})",
                self.theta_deg
            )));
        }
        if !(0.0..360.0).contains(&self.phi_deg) {
            return Err(Error::invalid(format!(
                "azimuth phi_deg must lie in [0, 360) (got {})",
                self.phi_deg
            )));
        }
        if !(self.focal_px > 0.0 && self.focal_px.is_finite()) {
            return Err(Error::invalid(format!(
                "focal length must be > 0 (got {})",
                self.focal_px
            )));
        }
        if self.width < 16 || self.height < 16 {
            return Err(Error::invalid(format!(
                "image dimensions must be at least 16x16 (got {}x{})",
                self.width, self.height
            )));
        }
        if self.cx < 0.0 || self.cx > (self.width - 1) as f64 || self.cy < 0.0 || self.cy > (self.height - 1) as f64 {
            return Err(Error::invalid(format!(
                "principal point ({}, {}) outside {}x{} image",
                self.cx, self.cy, self.width, self.height
            )));
        }
        Ok(())
    }

    pub fn eye(&self) -> Point3<f64> {
        let theta = self.theta_deg.to_radians();
        let phi = self.phi_deg.to_radians();
        Point3::new(
            self.r * theta.cos() * phi.cos(),
            self.r * theta.cos() * phi.sin(),
            self.r * theta.sin(),
        )
    }
}

/// The composed world-to-pixel map of a validated pose.
#[derive(Clone, Debug)]
pub struct Camera {
    pose: CameraPose,
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

impl Camera {
    pub fn new(pose: CameraPose) -> Result<Camera> {
        pose.validate()?;
        let eye = pose.eye();
        let forward = (-eye.coords).normalize();
        // at theta = +-90 the view direction is parallel to world up;
        // substitute +x as the up vector there
        let up = if pose.theta_deg.abs() == 90.0 {
            Vector3::new(1.0, 0.0, 0.0)
        } else {
            Vector3::new(0.0, 0.0, 1.0)
        };
        let right = forward.cross(&up).normalize();
        let down = forward.cross(&right);
        let rotation = Matrix3::from_rows(&[right.transpose(), down.transpose(), forward.transpose()]);
        let translation = -rotation * eye.coords;
        Ok(Camera {
            pose,
            rotation,
            translation,
        })
    }

    pub fn pose(&self) -> &CameraPose {
        &self.pose
    }

    /// World point to continuous pixel coordinates; errors only when the
    /// point is at or behind the camera plane. The result may lie outside
    /// the image.
    pub fn project_unchecked(&self, point: &Point3<f64>) -> Result<(f64, f64)> {
        let cam = self.rotation * point.coords + self.translation;
        if cam.z <= 0.0 {
            return Err(Error::BehindCamera {
                x: point.x,
                y: point.y,
                z: point.z,
            });
        }
        let u = self.pose.focal_px * cam.x / cam.z + self.pose.cx;
        let v = self.pose.focal_px * cam.y / cam.z + self.pose.cy;
        Ok((u, v))
    }

    /// World point to pixel coordinates, rejecting projections outside the
    /// image bounds.
    pub fn project(&self, point: &Point3<f64>) -> Result<(f64, f64)> {
        let (u, v) = self.project_unchecked(point)?;
        if u < 0.0 || v < 0.0 || u > (self.pose.width - 1) as f64 || v > (self.pose.height - 1) as f64 {
            return Err(Error::OutsideImage {
                u,
                v,
                width: self.pose.width,
                height: self.pose.height,
            });
        }
        Ok((u, v))
    }

    /// The world-space ray through a pixel: camera center plus unit
    /// direction.
    pub fn ray_through_pixel(&self, u: f64, v: f64) -> (Point3<f64>, Vector3<f64>) {
        let dir_cam = Vector3::new(
            (u - self.pose.cx) / self.pose.focal_px,
            (v - self.pose.cy) / self.pose.focal_px,
            1.0,
        );
        let dir_world = self.rotation.transpose() * dir_cam;
        (self.pose.eye(), dir_world.normalize())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pose() -> CameraPose {
        CameraPose {
            r: 4.0,
            theta_deg: 0.0,
            phi_deg: 0.0,
            focal_px: 512.0,
            cx: 256.0,
            cy: 256.0,
            width: 512,
            height: 512,
        }
    }

    #[test]
    fn eye_sits_on_the_x_axis_at_zero_angles() {
        let eye = pose().eye();
        assert!((eye.x - 4.0).abs() < 1e-12);
        assert!(eye.y.abs() < 1e-12);
        assert!(eye.z.abs() < 1e-12);
    }

    #[test]
    fn origin_projects_to_principal_point() {
        for (theta, phi) in [(0.0, 0.0), (30.0, 45.0), (-20.0, 250.0), (90.0, 0.0)] {
            let camera = Camera::new(CameraPose {
                theta_deg: theta,
                phi_deg: phi,
                ..pose()
            })
            .unwrap();
            let (u, v) = camera.project(&Point3::origin()).unwrap();
            assert!((u - 256.0).abs() < 1e-9, "theta={theta} phi={phi}: u={u}");
            assert!((v - 256.0).abs() < 1e-9, "theta={theta} phi={phi}: v={v}");
        }
    }

    #[test]
    fn world_up_is_image_up() {
        let camera = Camera::new(pose()).unwrap();
        let (_, v) = camera.project(&Point3::new(0.0, 0.0, 0.5)).unwrap();
        assert!(v < 256.0, "point above origin must land above the principal point");
        let (u, _) = camera.project(&Point3::new(0.0, 0.5, 0.0)).unwrap();
        assert!(u > 256.0, "+y is to the right for a camera on +x");
    }

    #[test]
    fn behind_camera_is_an_error() {
        let camera = Camera::new(pose()).unwrap();
        assert!(matches!(
            camera.project(&Point3::new(5.0, 0.0, 0.0)),
            Err(Error::BehindCamera { .. })
        ));
        // exactly on the camera plane
        assert!(camera.project(&Point3::new(4.0, 1.0, 0.0)).is_err());
    }

    #[test]
    fn out_of_image_is_an_error() {
        let camera = Camera::new(pose()).unwrap();
        // steep angle from close: projects far outside
        assert!(matches!(
            camera.project(&Point3::new(3.9, 3.0, 0.0)),
            Err(Error::OutsideImage { .. })
        ));
    }

    #[test]
    fn degenerate_elevation_uses_x_up() {
        let camera = Camera::new(CameraPose {
            theta_deg: 90.0,
            ..pose()
        })
        .unwrap();
        let (u, v) = camera.project(&Point3::origin()).unwrap();
        assert!((u - 256.0).abs() < 1e-9 && (v - 256.0).abs() < 1e-9);
        // a point along +x must move on the image plane, not collapse
        let (u2, v2) = camera.project(&Point3::new(0.5, 0.0, 0.0)).unwrap();
        assert!((u2 - u).abs() + (v2 - v).abs() > 1.0);
    }

    #[test]
    fn pose_validation() {
        assert!(CameraPose { r: 0.0, ..pose() }.validate().is_err());
        assert!(CameraPose { theta_deg: 91.0, ..pose() }.validate().is_err());
        assert!(CameraPose { phi_deg: 360.0, ..pose() }.validate().is_err());
        assert!(CameraPose { cx: 600.0, ..pose() }.validate().is_err());
        assert!(CameraPose { width: 8, ..pose() }.validate().is_err());
    }

    #[test]
    fn ray_roundtrip() {
        let camera = Camera::new(CameraPose {
            theta_deg: 25.0,
            phi_deg: 130.0,
            ..pose()
        })
        .unwrap();
        let point = Point3::new(0.3, -0.4, 0.2);
        let (u, v) = camera.project(&point).unwrap();
        let (origin, dir) = camera.ray_through_pixel(u, v);
        let reprojected = camera.project(&(origin + dir * 2.0)).unwrap();
        assert!((reprojected.0 - u).abs() < 1e-9);
        assert!((reprojected.1 - v).abs() < 1e-9);
    }
}
