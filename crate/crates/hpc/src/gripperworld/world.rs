use std::collections::BTreeMap;

use rand::{Rng, RngCore};

use super::*;
use crate::error::HpcError;
use crate::mdp::{Env, EnvStep};

/// Raw (unnormalized) world state.
#[derive(Debug, Clone)]
pub struct WorldState {
    pub effector: [f64; 2],
    pub heading: f64,
    pub aperture: f64,
    pub object: [f64; 2],
    pub held: bool,
    pub target: [f64; 2],
    pub bin: [f64; 2],
    pub step_count: usize,
    pub held_steps: usize,
    pub ever_held: bool,
    pub delivered: bool,
}

pub(crate) fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

#[derive(Debug, Clone)]
pub struct GripperEnv {
    pub cfg: TaskConfig,
    schema: Vec<String>,
    action_dims: Vec<String>,
    state: WorldState,
    done: bool,
    started: bool,
}

impl GripperEnv {
    pub fn new(cfg: TaskConfig) -> Self {
        let schema = cfg.task.schema();
        let action_dims = cfg.task.action_dims();
        Self {
            cfg,
            schema,
            action_dims,
            state: WorldState {
                effector: [0.0; 2],
                heading: 0.0,
                aperture: 1.0,
                object: [0.0; 2],
                held: false,
                target: [0.0; 2],
                bin: [0.0; 2],
                step_count: 0,
                held_steps: 0,
                ever_held: false,
                delivered: false,
            },
            done: true,
            started: false,
        }
    }

    pub fn state(&self) -> &WorldState {
        &self.state
    }

    /// Fixed affine normalization per schema dim into roughly [-1, 1].
    pub fn observation(&self) -> Vec<f64> {
        let s = &self.state;
        self.schema
            .iter()
            .map(|d| match d.as_str() {
                "ex" => s.effector[0],
                "ey" => s.effector[1],
                "th" => s.heading / std::f64::consts::PI,
                "ap" => 2.0 * s.aperture - 1.0,
                "ox" => s.object[0],
                "oy" => s.object[1],
                "held" => {
                    if s.held {
                        1.0
                    } else {
                        -1.0
                    }
                }
                "tx" => s.target[0],
                "ty" => s.target[1],
                "bx" => s.bin[0],
                "by" => s.bin[1],
                other => unreachable!("unknown schema dim {other}"),
            })
            .collect()
    }

    fn sample_region(region: &SpawnRegion, rng: &mut dyn RngCore) -> [f64; 2] {
        let mut out = [0.0; 2];
        for k in 0..2 {
            let (c, h) = (region.center[k], region.half[k]);
            out[k] = if h > 0.0 {
                rng.random_range(c - h..c + h)
            } else {
                c
            };
            out[k] = out[k].clamp(-0.9 * ARENA_HALF, 0.9 * ARENA_HALF);
        }
        out
    }

    fn refresh_target(&mut self) {
        // The environment-provided subgoal: where the reach sub-behavior
        // should be headed for the current phase of the task.
        self.state.target = match self.cfg.task {
            TaskId::Reach => self.state.target,
            TaskId::Grasp | TaskId::Pick => self.state.object,
            TaskId::Release | TaskId::Place => self.state.bin,
            TaskId::PickAndPlace => {
                if self.state.held {
                    self.state.bin
                } else {
                    self.state.object
                }
            }
        };
    }

    fn compute_reward_and_success(&mut self, latched_now: bool) -> (f64, bool) {
        let s = &mut self.state;
        let rw = &self.cfg.reward;
        let eps = self.cfg.success_radius;
        match self.cfg.task {
            TaskId::Reach => {
                let d = dist2(s.effector, s.target);
                let success = d < eps;
                (-d + if success { rw.success_bonus } else { 0.0 }, success)
            }
            TaskId::Release => {
                let d = dist2(s.effector, s.bin);
                let mut r = -d;
                // A wider gripper can only end in a drop, so this bonus is a
                // gradient toward the success event, not a farmable income:
                // it tops out below the threshold and the drop ends the hold.
                if s.held && d < 2.0 * eps {
                    r += rw.c3 * s.aperture;
                }
                let success = !s.held && dist2(s.object, s.bin) < eps;
                if success {
                    r += rw.success_bonus;
                }
                (r, success)
            }
            TaskId::Grasp => {
                let d = dist2(s.effector, s.object);
                let bearing = (s.object[1] - s.effector[1]).atan2(s.object[0] - s.effector[0]);
                let align = if s.held {
                    1.0
                } else {
                    wrap_angle(bearing - s.heading).cos().max(0.0)
                };
                let shaping = -d + rw.c1 / (d + rw.c2) * align;
                let success = s.held && s.held_steps >= 3;
                let mut r = shaping;
                if latched_now {
                    r += rw.hold_bonus;
                }
                if success {
                    r += rw.success_bonus;
                }
                (r, success)
            }
            TaskId::Pick => {
                let success = s.held && s.held_steps >= 3;
                let mut r = 0.0;
                if latched_now {
                    r += rw.hold_bonus;
                }
                if success {
                    r += rw.success_bonus;
                }
                (r, success)
            }
            TaskId::Place => {
                let mut r = 0.0;
                if s.held && !s.delivered && dist2(s.object, s.bin) < 2.0 * eps {
                    s.delivered = true;
                    r += rw.deliver_bonus;
                }
                let success = !s.held && dist2(s.object, s.bin) < eps;
                if success {
                    r += rw.success_bonus;
                }
                (r, success)
            }
            TaskId::PickAndPlace => {
                let mut r = 0.0;
                if latched_now {
                    r += rw.hold_bonus;
                }
                if s.held && !s.delivered && dist2(s.object, s.bin) < 2.0 * eps {
                    s.delivered = true;
                    r += rw.deliver_bonus;
                }
                let success = s.ever_held && !s.held && dist2(s.object, s.bin) < eps;
                if success {
                    r += rw.success_bonus;
                }
                (r, success)
            }
        }
    }
}

impl Env for GripperEnv {
    fn task_name(&self) -> &str {
        self.cfg.task.name()
    }

    fn schema(&self) -> &[String] {
        &self.schema
    }

    fn action_dims(&self) -> &[String] {
        &self.action_dims
    }

    fn horizon(&self) -> usize {
        self.cfg.horizon
    }

    fn reset(&mut self, rng: &mut dyn RngCore) -> Vec<f64> {
        let sp = &self.cfg.spawn;
        let object = Self::sample_region(&sp.object, rng);
        let bin = Self::sample_region(&sp.bin, rng);
        let mut effector = Self::sample_region(&sp.effector, rng);
        if self.cfg.task == TaskId::Grasp {
            // Curriculum region: spawn near the object.
            let r = sp.grasp_radius;
            for k in 0..2 {
                effector[k] = (object[k] + rng.random_range(-r..r))
                    .clamp(-0.9 * ARENA_HALF, 0.9 * ARENA_HALF);
            }
        }
        if self.cfg.task == TaskId::Release {
            // Curriculum region: spawn near the bin so random warmup episodes
            // occasionally drop the object inside it; the opening move gets no
            // reward gradient at all until those successes exist.
            let r = sp.release_radius;
            for k in 0..2 {
                effector[k] =
                    (bin[k] + rng.random_range(-r..r)).clamp(-0.9 * ARENA_HALF, 0.9 * ARENA_HALF);
            }
        }
        let held = matches!(self.cfg.task, TaskId::Release | TaskId::Place);
        let target = match self.cfg.task {
            TaskId::Reach => Self::sample_region(&sp.target, rng),
            _ => [0.0; 2],
        };
        self.state = WorldState {
            effector,
            heading: rng.random_range(-std::f64::consts::PI..std::f64::consts::PI),
            // Held spawns draw the grip anywhere below the release latch so
            // that some episodes start one nudge away from letting go; the
            // value function then backs the opening move down the range.
            aperture: if held {
                rng.random_range(0.2..0.68)
            } else {
                1.0
            },
            object: if held { effector } else { object },
            held,
            target,
            bin,
            step_count: 0,
            held_steps: 0,
            ever_held: held,
            delivered: false,
        };
        self.refresh_target();
        self.done = false;
        self.started = true;
        self.observation()
    }

    fn step(&mut self, action: &[f64]) -> Result<EnvStep, HpcError> {
        if !self.started || self.done {
            return Err(HpcError::State("step on a terminated environment".into()));
        }
        if action.len() != self.action_dims.len() {
            return Err(HpcError::Schema(format!(
                "task '{}' expects {} action dims, got {}",
                self.task_name(),
                self.action_dims.len(),
                action.len()
            )));
        }
        let a: Vec<f64> = action.iter().map(|v| v.clamp(-1.0, 1.0)).collect();
        let s = &mut self.state;

        let (dx, dy) = (a[0] * STEP_DELTA, a[1] * STEP_DELTA);
        s.effector[0] = (s.effector[0] + dx).clamp(-ARENA_HALF, ARENA_HALF);
        s.effector[1] = (s.effector[1] + dy).clamp(-ARENA_HALF, ARENA_HALF);

        if dx.abs() > 1e-9 || dy.abs() > 1e-9 {
            let desired = dy.atan2(dx);
            let diff = wrap_angle(desired - s.heading);
            s.heading = wrap_angle(s.heading + diff.clamp(-MAX_TURN, MAX_TURN));
        }

        let prev_aperture = s.aperture;
        if a.len() > 2 {
            s.aperture = (s.aperture + a[2] * APERTURE_RATE).clamp(0.0, 1.0);
        }

        let mut latched_now = false;
        if !s.held
            && dist2(s.effector, s.object) < EPS_GRASP
            && prev_aperture >= APERTURE_CLOSE
            && s.aperture < APERTURE_CLOSE
        {
            let bearing = (s.object[1] - s.effector[1]).atan2(s.object[0] - s.effector[0]);
            if wrap_angle(bearing - s.heading).abs() < ALIGN_LIMIT {
                s.held = true;
                s.ever_held = true;
                s.held_steps = 0;
                latched_now = true;
            }
        }
        let mut released_now = false;
        if s.held && s.aperture > APERTURE_OPEN {
            s.held = false;
            released_now = true;
        }
        if s.held {
            s.object = s.effector;
            s.held_steps += 1;
        }
        s.step_count += 1;

        let (mut reward, success) = self.compute_reward_and_success(latched_now);
        self.refresh_target();
        // Dropping the object away from the bin costs the release task a
        // penalty while the episode keeps running: ending it there would turn
        // an early drop into an exit from the per-step distance cost, which
        // is exactly the wrong incentive. The penalty is graded by how far
        // the object lands from the bin edge, so a stochastic near-miss is a
        // cheap attempt while dumping the object at the spawn point is not.
        let failed_drop = self.cfg.task == TaskId::Release && released_now && !success;
        if failed_drop {
            let miss = dist2(self.state.object, self.state.bin);
            let overshoot = (miss - self.cfg.success_radius).max(0.0);
            reward -= self.cfg.reward.drop_penalty * overshoot / (miss + 0.1);
        }
        let horizon_hit = self.state.step_count >= self.cfg.horizon;
        self.done = success || horizon_hit;

        let mut info = BTreeMap::new();
        info.insert("success".to_string(), if success { 1.0 } else { 0.0 });
        info.insert("failed".to_string(), if failed_drop { 1.0 } else { 0.0 });
        info.insert("held".to_string(), if self.state.held { 1.0 } else { 0.0 });
        info.insert(
            "dist_obj".to_string(),
            dist2(self.state.effector, self.state.object),
        );
        Ok(EnvStep {
            observation: self.observation(),
            reward,
            done: self.done,
            info,
        })
    }

    fn is_done(&self) -> bool {
        self.done
    }
}
