use super::{Aabb, Vec3};

/// Two hits whose depths differ by at most this many meters are a tie;
/// ties go to the lower instance index, background last.
pub const DEPTH_TIE_EPS: f64 = 1e-9;

/// Half-line with a unit-norm direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: Vec3,
    pub direction: Vec3,
}

impl Ray {
    /// Normalizes `direction`. Panics on a zero direction.
    pub fn new(origin: Vec3, direction: Vec3) -> Self {
        Ray {
            origin,
            direction: direction.normalize(),
        }
    }

    pub fn towards(origin: Vec3, target: Vec3) -> Self {
        Ray::new(origin, target - origin)
    }

    pub fn at(&self, t: f64) -> Vec3 {
        self.origin + self.direction * t
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triangle {
    pub a: Vec3,
    pub b: Vec3,
    pub c: Vec3,
}

impl Triangle {
    pub fn new(a: Vec3, b: Vec3, c: Vec3) -> Self {
        Triangle { a, b, c }
    }

    pub fn area(&self) -> f64 {
        0.5 * (self.b - self.a).cross(self.c - self.a).norm()
    }

    pub fn is_degenerate(&self) -> bool {
        (self.b - self.a).cross(self.c - self.a).norm_squared() == 0.0
    }

    /// Möller–Trumbore. Returns the ray parameter of the hit; edges and
    /// vertices are inclusive. Degenerate and edge-on triangles never hit.
    pub fn intersect(&self, ray: &Ray) -> Option<f64> {
        let e1 = self.b - self.a;
        let e2 = self.c - self.a;
        let p = ray.direction.cross(e2);
        let det = e1.dot(p);
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let inv = 1.0 / det;
        let s = ray.origin - self.a;
        let u = s.dot(p) * inv;
        if !(0.0..=1.0).contains(&u) {
            return None;
        }
        let q = s.cross(e1);
        let v = ray.direction.dot(q) * inv;
        if v < 0.0 || u + v > 1.0 {
            return None;
        }
        Some(e2.dot(q) * inv)
    }
}

/// Triangles belonging to one scene entity. `id` 0 is background; objects
/// use `instance index + 1`.
#[derive(Debug, Clone)]
pub struct TriangleGroup {
    pub id: u32,
    pub bounds: Aabb,
    pub triangles: Vec<Triangle>,
}

impl TriangleGroup {
    /// `None` when `triangles` is empty.
    pub fn new(id: u32, triangles: Vec<Triangle>) -> Option<Self> {
        let bounds = Aabb::from_points(triangles.iter().flat_map(|t| [t.a, t.b, t.c]))?;
        Some(TriangleGroup {
            id,
            bounds,
            triangles,
        })
    }
}

/// Tie priority: lower wins. Background sorts after every object.
#[inline]
pub fn tie_priority(id: u32) -> u32 {
    if id == 0 {
        u32::MAX
    } else {
        id
    }
}

/// True when a hit at `(depth, id)` should replace the current `(cur_depth, cur_id)`.
#[inline]
pub fn closer(depth: f64, id: u32, cur_depth: f64, cur_id: u32) -> bool {
    if depth < cur_depth - DEPTH_TIE_EPS {
        true
    } else if depth <= cur_depth + DEPTH_TIE_EPS {
        tie_priority(id) < tie_priority(cur_id)
    } else {
        false
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayHit {
    /// Distance along the ray in meters.
    pub distance: f64,
    /// Group id of the hit triangle (0 = background).
    pub id: u32,
}

/// Nearest hit with `min_distance <= t <= max_distance`, resolving depth
/// ties with [`closer`]. Groups whose bounds the ray misses are skipped.
pub fn nearest_hit_in_range(
    ray: &Ray,
    groups: &[TriangleGroup],
    min_distance: f64,
    max_distance: f64,
) -> Option<RayHit> {
    let mut best: Option<RayHit> = None;
    for g in groups {
        match g.bounds.ray_interval(ray) {
            Some((t0, t1)) if t1 >= min_distance && t0 <= max_distance => {}
            _ => continue,
        }
        for tri in &g.triangles {
            let Some(t) = tri.intersect(ray) else { continue };
            if t < min_distance || t > max_distance {
                continue;
            }
            let better = match best {
                None => true,
                Some(b) => closer(t, g.id, b.distance, b.id),
            };
            if better {
                best = Some(RayHit {
                    distance: t,
                    id: g.id,
                });
            }
        }
    }
    best
}

/// Nearest strictly positive-distance hit no farther than `max_distance`.
pub fn ray_cast_scene(ray: &Ray, groups: &[TriangleGroup], max_distance: f64) -> Option<RayHit> {
    nearest_hit_in_range(ray, groups, f64::MIN_POSITIVE, max_distance)
}
