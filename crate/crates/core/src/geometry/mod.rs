//! 3D math shared by every other module. Right-handed, z-up; all reals are f64.

mod aabb;
mod camera;
mod ray;
mod rotation;
mod vec3;

pub use aabb::Aabb;
pub use camera::{Camera, CameraBasis, ViewTransform};
pub use ray::{
    closer, nearest_hit_in_range, ray_cast_scene, tie_priority, Ray, RayHit, Triangle,
    TriangleGroup, DEPTH_TIE_EPS,
};
pub use rotation::{mat_mul_vec, Rotation};
pub use vec3::Vec3;

/// Overlap test for two boxes; touching faces intersect.
pub fn aabb_intersects(a: &Aabb, b: &Aabb) -> bool {
    a.intersects(b)
}
