use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::SceneError;
use crate::geometry::{Aabb, Triangle, TriangleGroup, Vec3};

/// How a scene's background shell is produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackgroundSpec {
    WhiteCube {
        side: f64,
    },
    /// Parametric room: floor, four walls and a ceiling with extents drawn
    /// uniformly from the given ranges.
    RoomShell {
        width_range: [f64; 2],
        depth_range: [f64; 2],
        height_range: [f64; 2],
    },
    /// No geometry at all.
    Empty,
}

impl BackgroundSpec {
    pub fn room_shell() -> Self {
        BackgroundSpec::RoomShell {
            width_range: [4.0, 10.0],
            depth_range: [4.0, 10.0],
            height_range: [2.5, 3.5],
        }
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        let bad = |m: String| Err(SceneError::InvalidParams(m));
        match self {
            BackgroundSpec::WhiteCube { side } if !(*side > 0.0 && side.is_finite()) => {
                bad(format!("cube side {side} must be positive"))
            }
            BackgroundSpec::RoomShell {
                width_range,
                depth_range,
                height_range,
            } => {
                for (name, r) in [
                    ("width", width_range),
                    ("depth", depth_range),
                    ("height", height_range),
                ] {
                    if !(r[0] > 0.0 && r[0] <= r[1] && r[1].is_finite()) {
                        return bad(format!("room {name} range [{}, {}] invalid", r[0], r[1]));
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn instantiate<R: Rng + ?Sized>(&self, rng: &mut R) -> BackgroundShell {
        match self {
            BackgroundSpec::WhiteCube { side } => BackgroundShell {
                kind: BackgroundKind::WhiteCube,
                extents: Vec3::splat(*side),
            },
            BackgroundSpec::RoomShell {
                width_range,
                depth_range,
                height_range,
            } => {
                let mut draw = |r: &[f64; 2]| r[0] + (r[1] - r[0]) * rng.random::<f64>();
                let w = draw(width_range);
                let d = draw(depth_range);
                let h = draw(height_range);
                BackgroundShell {
                    kind: BackgroundKind::RoomShell,
                    extents: Vec3::new(w, d, h),
                }
            }
            BackgroundSpec::Empty => BackgroundShell::empty(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackgroundKind {
    WhiteCube,
    RoomShell,
    Empty,
}

/// Concrete background: an axis-aligned shell centered on the origin in x/y
/// with its floor at z = 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BackgroundShell {
    pub kind: BackgroundKind,
    /// Width (x), depth (y), height (z) in meters.
    pub extents: Vec3,
}

impl BackgroundShell {
    pub fn empty() -> Self {
        BackgroundShell {
            kind: BackgroundKind::Empty,
            extents: Vec3::ZERO,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.kind == BackgroundKind::Empty
    }

    /// Free interior volume; `None` for an empty background.
    pub fn interior(&self) -> Option<Aabb> {
        if self.is_empty() {
            return None;
        }
        let e = self.extents;
        Some(Aabb::new(
            Vec3::new(-0.5 * e.x, -0.5 * e.y, 0.0),
            Vec3::new(0.5 * e.x, 0.5 * e.y, e.z),
        ))
    }

    /// Floor, walls and ceiling as triangles (12 in total).
    pub fn triangles(&self) -> Vec<Triangle> {
        let Some(b) = self.interior() else {
            return Vec::new();
        };
        let c = b.corners();
        // floor, ceiling, -y wall, +y wall, -x wall, +x wall
        let quads = [
            [0, 1, 3, 2],
            [4, 6, 7, 5],
            [0, 4, 5, 1],
            [2, 3, 7, 6],
            [0, 2, 6, 4],
            [1, 5, 7, 3],
        ];
        quads
            .iter()
            .flat_map(|q| {
                [
                    Triangle::new(c[q[0]], c[q[1]], c[q[2]]),
                    Triangle::new(c[q[0]], c[q[2]], c[q[3]]),
                ]
            })
            .collect()
    }

    pub fn triangle_group(&self) -> Option<TriangleGroup> {
        TriangleGroup::new(0, self.triangles())
    }
}
