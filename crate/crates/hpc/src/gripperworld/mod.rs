//! Desk-scale deterministic 2D pick-and-place environments with a planar
//! effector, a latching gripper and a scripted expert controller.

mod expert;
mod world;

pub use expert::scripted_expert;
pub use world::{GripperEnv, WorldState};

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::HpcError;

pub const ARENA_HALF: f64 = 1.0;
/// Max effector translation per step, per dimension.
pub const STEP_DELTA: f64 = 0.05;
/// Max aperture change per step.
pub const APERTURE_RATE: f64 = 0.1;
/// Max heading change per step (radians).
pub const MAX_TURN: f64 = 0.4;
/// Grasp latch radius.
pub const EPS_GRASP: f64 = 0.08;
/// Aperture threshold the gripper must cross downwards to latch.
pub const APERTURE_CLOSE: f64 = 0.3;
/// Aperture threshold above which a held object is released.
pub const APERTURE_OPEN: f64 = 0.7;
/// Heading must be within 45 degrees of the object bearing to latch.
pub const ALIGN_LIMIT: f64 = std::f64::consts::FRAC_PI_4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskId {
    Reach,
    Grasp,
    Release,
    Pick,
    Place,
    PickAndPlace,
}

impl TaskId {
    pub fn name(self) -> &'static str {
        match self {
            TaskId::Reach => "reach",
            TaskId::Grasp => "grasp",
            TaskId::Release => "release",
            TaskId::Pick => "pick",
            TaskId::Place => "place",
            TaskId::PickAndPlace => "pick-and-place",
        }
    }

    pub fn parse(s: &str) -> Result<Self, HpcError> {
        match s {
            "reach" => Ok(TaskId::Reach),
            "grasp" => Ok(TaskId::Grasp),
            "release" => Ok(TaskId::Release),
            "pick" => Ok(TaskId::Pick),
            "place" => Ok(TaskId::Place),
            "pick-and-place" => Ok(TaskId::PickAndPlace),
            other => Err(HpcError::Argument(format!("unknown task '{other}'"))),
        }
    }

    pub fn level(self) -> u32 {
        match self {
            TaskId::Reach | TaskId::Grasp | TaskId::Release => 1,
            TaskId::Pick | TaskId::Place => 2,
            TaskId::PickAndPlace => 3,
        }
    }

    /// Observation schema; level-2 schemas are exactly the union of their
    /// sub-task schemas, level-3 the union of pick and place.
    pub fn schema(self) -> Vec<String> {
        let dims: &[&str] = match self {
            TaskId::Reach => &["ex", "ey", "tx", "ty"],
            TaskId::Grasp => &["ex", "ey", "th", "ap", "ox", "oy", "held"],
            TaskId::Release => &["ex", "ey", "ap", "bx", "by", "held"],
            TaskId::Pick => &["ex", "ey", "tx", "ty", "th", "ap", "ox", "oy", "held"],
            TaskId::Place => &["ex", "ey", "tx", "ty", "ap", "bx", "by", "held"],
            TaskId::PickAndPlace => &[
                "ex", "ey", "tx", "ty", "th", "ap", "ox", "oy", "held", "bx", "by",
            ],
        };
        dims.iter().map(|d| d.to_string()).collect()
    }

    pub fn action_dims(self) -> Vec<String> {
        let dims: &[&str] = match self {
            TaskId::Reach => &["dx", "dy"],
            _ => &["dx", "dy", "dg"],
        };
        dims.iter().map(|d| d.to_string()).collect()
    }
}

/// Axis-aligned uniform spawn region, degenerate when half-width is zero.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SpawnRegion {
    pub center: [f64; 2],
    pub half: [f64; 2],
}

impl SpawnRegion {
    pub fn point(x: f64, y: f64) -> Self {
        Self {
            center: [x, y],
            half: [0.0, 0.0],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpawnConfig {
    pub effector: SpawnRegion,
    pub object: SpawnRegion,
    pub bin: SpawnRegion,
    pub target: SpawnRegion,
    /// Grasp-task curriculum: effector spawns within this radius of the object.
    pub grasp_radius: f64,
    /// Release-task curriculum: effector spawns within this radius of the bin.
    #[serde(default = "default_release_radius")]
    pub release_radius: f64,
}

fn default_release_radius() -> f64 {
    0.2
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RewardConfig {
    pub success_bonus: f64,
    pub hold_bonus: f64,
    pub deliver_bonus: f64,
    pub c1: f64,
    pub c2: f64,
    /// Per-step bonus of `c3 * aperture` while holding the object next to the
    /// bin. Opening the gripper is the only action channel with no distance
    /// shaping of its own; without this term the release reward is flat in
    /// the aperture until the first successful drop.
    #[serde(default = "default_c3")]
    pub c3: f64,
    /// Cost of dropping the object away from the bin in the release task,
    /// which also ends the episode.
    #[serde(default = "default_drop_penalty")]
    pub drop_penalty: f64,
}

fn default_c3() -> f64 {
    // Kept small enough that collecting the bonus for a whole horizon is
    // still worth less than one successful drop.
    0.03
}

fn default_drop_penalty() -> f64 {
    5.0
}

impl Default for RewardConfig {
    fn default() -> Self {
        // Shaping is capped at c1/c2 = 0.1 per step so that loitering next to
        // the object for a whole horizon can never out-earn the latch and
        // success bonuses of an actual grasp.
        Self {
            success_bonus: 10.0,
            hold_bonus: 5.0,
            deliver_bonus: 5.0,
            c1: 0.05,
            c2: 0.5,
            c3: default_c3(),
            drop_penalty: default_drop_penalty(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaskConfig {
    pub task: TaskId,
    pub horizon: usize,
    pub success_radius: f64,
    pub spawn: SpawnConfig,
    pub reward: RewardConfig,
}

impl TaskConfig {
    pub fn defaults(task: TaskId) -> Self {
        let horizon = match task {
            TaskId::Reach => 60,
            TaskId::Grasp | TaskId::Release => 80,
            TaskId::Pick | TaskId::Place => 120,
            TaskId::PickAndPlace => 200,
        };
        let spawn = SpawnConfig {
            effector: SpawnRegion {
                center: [0.0, 0.0],
                half: [0.5, 0.5],
            },
            object: SpawnRegion {
                center: [0.35, 0.35],
                half: [0.25, 0.25],
            },
            bin: SpawnRegion {
                center: [-0.5, -0.5],
                half: [0.15, 0.15],
            },
            target: SpawnRegion {
                center: [0.0, 0.0],
                half: [0.6, 0.6],
            },
            grasp_radius: 0.3,
            release_radius: default_release_radius(),
        };
        Self {
            task,
            horizon,
            success_radius: 0.05,
            spawn,
            reward: RewardConfig::default(),
        }
    }

    pub fn from_file(path: &Path) -> Result<Self, HpcError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HpcError::Io(format!("cannot read '{}': {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| {
            HpcError::Format(format!(
                "invalid task config '{}' at line {}, column {}: {e}",
                path.display(),
                e.line(),
                e.column()
            ))
        })
    }
}

pub(crate) fn wrap_angle(a: f64) -> f64 {
    let mut a = a % std::f64::consts::TAU;
    if a > std::f64::consts::PI {
        a -= std::f64::consts::TAU;
    } else if a < -std::f64::consts::PI {
        a += std::f64::consts::TAU;
    }
    a
}
