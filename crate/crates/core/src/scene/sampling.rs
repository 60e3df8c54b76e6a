//! Camera, scale and rotation samplers.

use std::f64::consts::TAU;

use rand::Rng;

use super::background::BackgroundShell;
use super::params::{LayoutParams, RotationAxes, ScaleMode};
use crate::error::SceneError;
use crate::geometry::{ray_cast_scene, Camera, Ray, Rotation, TriangleGroup, Vec3};

/// Cameras keep at least this distance from walls, floor and ceiling.
pub const CAMERA_WALL_MARGIN: f64 = 0.05;

/// Places a camera away from the background center, aimed at a point in the
/// central area (half the horizontal extents, centered on the origin).
/// Resamples until [`clearance`] reaches `camera_clearance_min`.
pub fn sample_camera<R: Rng + ?Sized>(
    params: &LayoutParams,
    background: &BackgroundShell,
    rng: &mut R,
) -> Result<Camera, SceneError> {
    let exhausted = || SceneError::PlacementExhausted {
        what: "camera".into(),
        attempts: params.max_placement_attempts,
    };
    let interior = background
        .interior()
        .ok_or_else(|| SceneError::InvalidParams("camera sampling needs a background".into()))?;
    let e = background.extents;
    let walls: Vec<_> = background.triangle_group().into_iter().collect();

    let [h_lo, h_hi] = params.camera_height_range;
    let h_lo = h_lo.max(CAMERA_WALL_MARGIN);
    let h_hi = h_hi.min(interior.max.z - CAMERA_WALL_MARGIN);
    let [l_lo, l_hi] = params.look_at_height_range;
    let l_lo = l_lo.max(0.0);
    let l_hi = l_hi.min(interior.max.z);
    let half_x = 0.5 * e.x - CAMERA_WALL_MARGIN;
    let half_y = 0.5 * e.y - CAMERA_WALL_MARGIN;
    if h_lo > h_hi || l_lo > l_hi || half_x <= 0.0 || half_y <= 0.0 {
        return Err(exhausted());
    }
    let min_radius = params
        .camera_min_radius
        .unwrap_or(0.25 * e.x.min(e.y));

    for _ in 0..params.max_placement_attempts {
        let x = rng.random_range(-half_x..=half_x);
        let y = rng.random_range(-half_y..=half_y);
        let z = uniform(rng, h_lo, h_hi);
        let target = Vec3::new(
            uniform(rng, -0.25 * e.x, 0.25 * e.x),
            uniform(rng, -0.25 * e.y, 0.25 * e.y),
            uniform(rng, l_lo, l_hi),
        );
        if x.hypot(y) < min_radius {
            continue;
        }
        let position = Vec3::new(x, y, z);
        let Ok(camera) = Camera::new(
            position,
            target,
            Vec3::Z,
            params.vertical_fov_deg,
            params.image_width,
            params.image_height,
            params.near,
            params.far,
        ) else {
            continue;
        };
        if clearance(position, target, &walls, params.far) >= params.camera_clearance_min {
            return Ok(camera);
        }
    }
    Err(exhausted())
}

/// Free distance in front of a camera: the nearer background hit along the
/// view ray and along its horizontal heading.
pub fn clearance(position: Vec3, target: Vec3, walls: &[TriangleGroup], max_distance: f64) -> f64 {
    let free = |ray: Ray| ray_cast_scene(&ray, walls, max_distance).map_or(f64::INFINITY, |h| h.distance);
    let mut d = free(Ray::towards(position, target));
    let heading = Vec3::new(target.x - position.x, target.y - position.y, 0.0);
    if let Some(h) = heading.try_normalize() {
        d = d.min(free(Ray::new(position, h)));
    }
    d
}

#[inline]
pub(crate) fn uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// Uniform scale in the chosen interval. Returns the scale and the index of
/// the interval it came from (0 for a single uniform range).
pub fn sample_scale_with_interval<R: Rng + ?Sized>(mode: &ScaleMode, rng: &mut R) -> (f64, usize) {
    match mode {
        ScaleMode::UniformRange { lo, hi } => (uniform(rng, *lo, *hi), 0),
        ScaleMode::Intervals { intervals } => {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut chosen = intervals.len() - 1;
            for (i, iv) in intervals.iter().enumerate() {
                acc += iv.probability;
                if u < acc {
                    chosen = i;
                    break;
                }
            }
            let iv = intervals[chosen];
            (uniform(rng, iv.lo, iv.hi), chosen)
        }
    }
}

pub fn sample_scale<R: Rng + ?Sized>(params: &LayoutParams, rng: &mut R) -> f64 {
    sample_scale_with_interval(&params.scale_mode, rng).0
}

/// `rz · ry · rx`: x first, then y, then z, all about world axes.
pub fn rotation_from_angles(ax: f64, ay: f64, az: f64) -> Rotation {
    Rotation::about_z(az) * Rotation::from_axis_angle(Vec3::Y, ay) * Rotation::from_axis_angle(Vec3::X, ax)
}

pub fn sample_rotation<R: Rng + ?Sized>(axes: RotationAxes, rng: &mut R) -> Rotation {
    match axes {
        RotationAxes::ZOnly => Rotation::about_z(TAU * rng.random::<f64>()),
        RotationAxes::AllAxes => {
            let ax = TAU * rng.random::<f64>();
            let ay = TAU * rng.random::<f64>();
            let az = TAU * rng.random::<f64>();
            rotation_from_angles(ax, ay, az)
        }
        RotationAxes::Uniform => {
            // Shoemake's subgroup algorithm.
            let u1: f64 = rng.random();
            let u2 = TAU * rng.random::<f64>();
            let u3 = TAU * rng.random::<f64>();
            let (a, b) = ((1.0 - u1).sqrt(), u1.sqrt());
            Rotation::from_wxyz(b * u3.cos(), a * u2.sin(), a * u2.cos(), b * u3.sin())
        }
    }
}
