use super::world::WorldState;
use super::*;
use crate::error::HpcError;

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn toward(from: [f64; 2], to: [f64; 2], gain: f64) -> [f64; 2] {
    [
        ((to[0] - from[0]) * gain).clamp(-1.0, 1.0),
        ((to[1] - from[1]) * gain).clamp(-1.0, 1.0),
    ]
}

/// Proportional controller for the level-1 tasks: orient, approach, actuate
/// the aperture at the latch thresholds.
pub fn scripted_expert(task: TaskId, state: &WorldState) -> Result<Vec<f64>, HpcError> {
    match task {
        TaskId::Reach => {
            let a = toward(state.effector, state.target, 20.0);
            Ok(vec![a[0], a[1]])
        }
        TaskId::Release => {
            let d = dist(state.effector, state.bin);
            if d > 0.8 * 0.05 {
                let a = toward(state.effector, state.bin, 20.0);
                Ok(vec![a[0], a[1], -0.2])
            } else {
                Ok(vec![0.0, 0.0, 1.0])
            }
        }
        TaskId::Grasp => {
            if state.held {
                // Keep the gripper closed until the hold registers as success.
                return Ok(vec![0.0, 0.0, -0.2]);
            }
            let d = dist(state.effector, state.object);
            let bearing =
                (state.object[1] - state.effector[1]).atan2(state.object[0] - state.effector[0]);
            let align = wrap_angle(bearing - state.heading).abs();
            if d < 0.03 {
                // Too close to orient; back off along the current heading.
                return Ok(vec![
                    -0.5 * state.heading.cos(),
                    -0.5 * state.heading.sin(),
                    0.5,
                ]);
            }
            if d >= EPS_GRASP * 0.8 {
                // Approach radially; the heading follows the motion direction.
                // Pre-shape the aperture down to just above the latch
                // threshold while still out of range.
                let a = toward(state.effector, state.object, 4.0);
                let dg = if state.aperture > APERTURE_CLOSE + 0.08 {
                    -0.5
                } else {
                    0.1
                };
                return Ok(vec![a[0], a[1], dg]);
            }
            if align < ALIGN_LIMIT * 0.8 {
                // In range and aligned: creep forward and close.
                let a = toward(state.effector, state.object, 1.0);
                Ok(vec![0.2 * a[0], 0.2 * a[1], -1.0])
            } else {
                // In range but misaligned: reopen if needed and creep toward
                // the object so the heading rotates onto the bearing.
                let a = toward(state.effector, state.object, 1.0);
                let dg = if state.aperture < APERTURE_CLOSE + 0.05 {
                    1.0
                } else {
                    0.1
                };
                Ok(vec![0.3 * a[0], 0.3 * a[1], dg])
            }
        }
        other => Err(HpcError::Argument(format!(
            "scripted expert does not support task '{}'",
            other.name()
        ))),
    }
}
