//! Layout presets for the six ablation datasets: random placement,
//! occlusion, scale distribution, rotation, room background, more objects.
//! Each preset changes one design choice relative to the one before it;
//! the last one floats objects and requests more of them.

use serde::Serialize;

use super::{BackgroundSpec, LayoutParams, Placement, RotationAxes, ScaleMode};

#[derive(Debug, Clone, Serialize)]
pub struct Preset {
    pub name: &'static str,
    pub title: &'static str,
    pub description: &'static str,
    pub params: LayoutParams,
}

/// Object count requested once floating placement frees the volume above
/// the floor.
const PACKED_OBJECT_COUNT: u32 = 24;

/// Eye-level camera used from the occlusion preset onward.
const EYE_LEVEL_CAMERA: [f64; 2] = [0.5, 2.0];
const EYE_LEVEL_TARGET: [f64; 2] = [0.0, 1.5];

pub fn presets() -> Vec<Preset> {
    let random_placement = LayoutParams::default();

    let occlusion = LayoutParams {
        placement: Placement::OcclusionAware,
        camera_height_range: EYE_LEVEL_CAMERA,
        look_at_height_range: EYE_LEVEL_TARGET,
        ..random_placement.clone()
    };

    let scale_distribution = LayoutParams {
        scale_mode: ScaleMode::small_biased_intervals(),
        ..occlusion.clone()
    };

    let rotation = LayoutParams {
        rotation_axes: RotationAxes::AllAxes,
        ..scale_distribution.clone()
    };

    let scenenet_background = LayoutParams {
        background: BackgroundSpec::room_shell(),
        ..rotation.clone()
    };

    let more_objects = LayoutParams {
        placement: Placement::Floating,
        target_object_count: PACKED_OBJECT_COUNT,
        ..scenenet_background.clone()
    };

    vec![
        Preset {
            name: "random_placement",
            title: "Random Placement",
            description: "white cube, objects on the floor, scale U[0.4, 2.0], z rotation, camera 0.1-5.0 m",
            params: random_placement,
        },
        Preset {
            name: "occlusion",
            title: "Occlusion",
            description: "objects placed in front of or behind others along camera rays, eye-level camera",
            params: occlusion,
        },
        Preset {
            name: "scale_distribution",
            title: "Scale Distribution",
            description: "scales from [0.1,1],[1,2],[2,3] with probabilities 0.7/0.1/0.2",
            params: scale_distribution,
        },
        Preset {
            name: "rotation",
            title: "Rotation",
            description: "objects rotated about x, y and z",
            params: rotation,
        },
        Preset {
            name: "scenenet_background",
            title: "SceneNet Background",
            description: "parametric room shell (floor, walls, ceiling) instead of the white cube",
            params: scenenet_background,
        },
        Preset {
            name: "more_objects",
            title: "More Objects",
            description: "objects may float anywhere in the visible room volume, twice as many requested",
            params: more_objects,
        },
    ]
}

pub fn preset(name: &str) -> Option<Preset> {
    presets().into_iter().find(|p| p.name == name)
}
