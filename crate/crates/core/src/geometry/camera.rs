use serde::{Deserialize, Serialize};

use super::{Ray, Vec3};
use crate::error::GeometryError;

/// Pinhole camera with square pixels. Pixel `(0, 0)` is the top-left corner
/// of the image; pixel centers sit at half-integer coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Camera {
    pub position: Vec3,
    pub look_at: Vec3,
    pub up: Vec3,
    pub vertical_fov_deg: f64,
    pub width: u32,
    pub height: u32,
    pub near: f64,
    pub far: f64,
}

/// Orthonormal camera frame. `forward` points at the look-at target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraBasis {
    pub right: Vec3,
    pub up: Vec3,
    pub forward: Vec3,
}

impl Camera {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        position: Vec3,
        look_at: Vec3,
        up: Vec3,
        vertical_fov_deg: f64,
        width: u32,
        height: u32,
        near: f64,
        far: f64,
    ) -> Result<Self, GeometryError> {
        let cam = Camera {
            position,
            look_at,
            up,
            vertical_fov_deg,
            width,
            height,
            near,
            far,
        };
        cam.validate()?;
        Ok(cam)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if !(self.near > 0.0 && self.near < self.far) {
            return Err(GeometryError::InvalidCamera(format!(
                "need 0 < near < far, got near={} far={}",
                self.near, self.far
            )));
        }
        if !(self.vertical_fov_deg > 0.0 && self.vertical_fov_deg < 180.0) {
            return Err(GeometryError::InvalidCamera(format!(
                "vertical fov {} outside (0, 180)",
                self.vertical_fov_deg
            )));
        }
        if self.position == self.look_at {
            return Err(GeometryError::InvalidCamera(
                "position coincides with look_at".into(),
            ));
        }
        if self.width == 0 || self.height == 0 {
            return Err(GeometryError::InvalidCamera("zero image size".into()));
        }
        if self.up.try_normalize().is_none() {
            return Err(GeometryError::InvalidCamera("zero up vector".into()));
        }
        Ok(())
    }

    /// When `up` is parallel to the view direction, world +y stands in for it.
    pub fn basis(&self) -> CameraBasis {
        let forward = (self.look_at - self.position).normalize();
        let right = forward
            .cross(self.up)
            .try_normalize()
            .filter(|r| r.norm_squared() > 0.5)
            .unwrap_or_else(|| forward.cross(Vec3::Y).normalize());
        let up = right.cross(forward);
        CameraBasis { right, up, forward }
    }

    /// Focal length in pixels.
    pub fn focal_px(&self) -> f64 {
        0.5 * self.height as f64 / (0.5 * self.vertical_fov_deg.to_radians()).tan()
    }

    pub fn view(&self) -> ViewTransform {
        ViewTransform {
            origin: self.position,
            basis: self.basis(),
            focal: self.focal_px(),
            cx: 0.5 * self.width as f64,
            cy: 0.5 * self.height as f64,
            near: self.near,
            far: self.far,
            width: self.width,
            height: self.height,
        }
    }

    /// Continuous pixel coordinate of `p`; `None` when its view depth is
    /// below `near`.
    pub fn project_point(&self, p: Vec3) -> Option<(f64, f64)> {
        self.view().project(p).map(|(x, y, _)| (x, y))
    }

    /// True iff `p` projects inside the image rectangle with view depth in `[near, far]`.
    pub fn point_in_frustum(&self, p: Vec3) -> bool {
        self.view().in_frustum(p)
    }

    /// World point at view depth `depth` along the ray through pixel `(px, py)`.
    pub fn unproject(&self, px: f64, py: f64, depth: f64) -> Vec3 {
        self.view().unproject(px, py, depth)
    }

    /// Ray through the center of pixel `(col, row)`.
    pub fn pixel_ray(&self, col: u32, row: u32) -> Ray {
        self.view().ray_through(col as f64 + 0.5, row as f64 + 0.5)
    }
}

/// Precomputed camera frame for bulk projection.
#[derive(Debug, Clone, Copy)]
pub struct ViewTransform {
    pub origin: Vec3,
    pub basis: CameraBasis,
    pub focal: f64,
    pub cx: f64,
    pub cy: f64,
    pub near: f64,
    pub far: f64,
    pub width: u32,
    pub height: u32,
}

impl ViewTransform {
    /// Camera-space coordinates: x right, y up, z = depth along the view axis.
    #[inline]
    pub fn to_view(&self, p: Vec3) -> Vec3 {
        let d = p - self.origin;
        Vec3::new(
            d.dot(self.basis.right),
            d.dot(self.basis.up),
            d.dot(self.basis.forward),
        )
    }

    /// Pixel coordinates of a camera-space point with positive depth.
    #[inline]
    pub fn view_to_pixel(&self, v: Vec3) -> (f64, f64) {
        (
            self.cx + self.focal * v.x / v.z,
            self.cy - self.focal * v.y / v.z,
        )
    }

    /// `(px, py, depth)`, or `None` when depth < near.
    pub fn project(&self, p: Vec3) -> Option<(f64, f64, f64)> {
        let v = self.to_view(p);
        if v.z < self.near {
            return None;
        }
        let (x, y) = self.view_to_pixel(v);
        Some((x, y, v.z))
    }

    pub fn in_frustum(&self, p: Vec3) -> bool {
        match self.project(p) {
            Some((x, y, z)) => {
                z <= self.far
                    && (0.0..=self.width as f64).contains(&x)
                    && (0.0..=self.height as f64).contains(&y)
            }
            None => false,
        }
    }

    /// Unnormalized world direction through pixel coordinate `(px, py)`
    /// whose component along the view axis is exactly one.
    #[inline]
    pub fn direction_through(&self, px: f64, py: f64) -> Vec3 {
        let x = (px - self.cx) / self.focal;
        let y = -(py - self.cy) / self.focal;
        self.basis.right * x + self.basis.up * y + self.basis.forward
    }

    pub fn ray_through(&self, px: f64, py: f64) -> Ray {
        Ray::new(self.origin, self.direction_through(px, py))
    }

    pub fn unproject(&self, px: f64, py: f64, depth: f64) -> Vec3 {
        self.origin + self.direction_through(px, py) * depth
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cam() -> Camera {
        Camera::new(
            Vec3::new(-4.0, -3.0, 1.6),
            Vec3::new(0.5, 0.2, 0.7),
            Vec3::Z,
            60.0,
            320,
            240,
            0.05,
            100.0,
        )
        .unwrap()
    }

    #[test]
    fn look_at_projects_to_image_center() {
        let c = cam();
        let (x, y) = c.project_point(c.look_at).unwrap();
        assert!((x - 160.0).abs() < 1e-9 && (y - 120.0).abs() < 1e-9);
    }

    #[test]
    fn point_behind_camera_does_not_project() {
        let c = cam();
        let behind = c.position - (c.look_at - c.position);
        assert!(c.project_point(behind).is_none());
        assert!(!c.point_in_frustum(behind));
    }

    #[test]
    fn frustum_corner_ray_projects_to_top_left_pixel() {
        // Corner direction built from the half-angles: tan(v/2) vertically,
        // aspect·tan(v/2) horizontally.
        let c = cam();
        let b = c.basis();
        let tv = (0.5 * c.vertical_fov_deg.to_radians()).tan();
        let th = tv * c.width as f64 / c.height as f64;
        let d = 7.3;
        let p = c.position + (b.forward - b.right * th + b.up * tv) * d;
        let (x, y) = c.project_point(p).unwrap();
        assert!(x.abs() < 0.5 && y.abs() < 0.5, "got ({x}, {y})");
    }

    #[test]
    fn look_at_at_mid_depth_is_in_frustum() {
        let c = cam();
        assert!(c.point_in_frustum(c.look_at));
    }

    #[test]
    fn point_just_beyond_half_fov_is_outside() {
        let c = cam();
        let b = c.basis();
        let half = 0.5 * c.vertical_fov_deg.to_radians();
        let angle = 1.01 * half;
        let p = c.position + (b.forward * angle.cos() + b.up * angle.sin()) * 5.0;
        assert!(!c.point_in_frustum(p));
        let angle = 0.99 * half;
        let p = c.position + (b.forward * angle.cos() + b.up * angle.sin()) * 5.0;
        assert!(c.point_in_frustum(p));
    }

    #[test]
    fn invalid_cameras_are_rejected() {
        let p = Vec3::ZERO;
        assert!(Camera::new(p, p, Vec3::Z, 60.0, 10, 10, 0.1, 10.0).is_err());
        assert!(Camera::new(p, Vec3::X, Vec3::Z, 180.0, 10, 10, 0.1, 10.0).is_err());
        assert!(Camera::new(p, Vec3::X, Vec3::Z, 60.0, 10, 10, 1.0, 0.5).is_err());
    }

    #[test]
    fn straight_down_camera_has_valid_basis() {
        let c = Camera::new(Vec3::new(0.0, 0.0, 5.0), Vec3::ZERO, Vec3::Z, 60.0, 8, 8, 0.1, 10.0)
            .unwrap();
        let b = c.basis();
        assert!((b.right.norm() - 1.0).abs() < 1e-12);
        assert!(b.right.dot(b.forward).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn unprojection_recovers_point(x in -3.0f64..3.0, y in -3.0f64..3.0, z in 0.0f64..3.0) {
            let c = cam();
            let p = Vec3::new(x, y, z);
            let v = c.view();
            if let Some((px, py, depth)) = v.project(p) {
                let back = c.unproject(px, py, depth);
                prop_assert!((back - p).norm() < 1e-6);
            }
        }

        #[test]
        fn frustum_test_agrees_with_projection(x in -12.0f64..12.0, y in -12.0f64..12.0, z in -4.0f64..6.0) {
            let c = cam();
            let p = Vec3::new(x, y, z);
            let v = c.view();
            let in_bounds = match v.project(p) {
                Some((px, py, d)) => d <= c.far && (0.0..=320.0).contains(&px) && (0.0..=240.0).contains(&py),
                None => false,
            };
            prop_assert_eq!(c.point_in_frustum(p), in_bounds);
        }
    }
}
