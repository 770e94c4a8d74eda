//! Soft actor-critic: standard SAC for level-1 primitives, the meta policy
//! iteration for compound levels, replay, critics, warmstart and metrics.

mod buffer;
mod critics;
mod demo;
mod losses;
mod meta;
mod metrics;
mod primitive;
mod warmstart;

pub use buffer::ReplayBuffer;
pub use critics::{load_critics, save_critics, CriticPair};
pub use demo::{collect_demos, load_demos, save_demos, DemoSet, DemoTransition};
pub use losses::{policy_loss, policy_loss_value, q_loss, q_loss_value, v_loss, v_loss_value};
pub use meta::{evaluate_node, meta_policy_iteration, MetaTrainResult};
pub use metrics::{MetricsRow, MetricsWriter, METRICS_HEADER};
pub use primitive::{evaluate_primitive, sac_train_primitive, PrimitiveTrainResult};
pub use warmstart::{bc_warmstart, q_warmstart, returns_to_go};

use serde::{Deserialize, Serialize};

/// Training hyperparameters shared by level-1 SAC and meta policy iteration.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SacConfig {
    pub hidden: Vec<usize>,
    pub gamma: f64,
    pub tau: f64,
    pub alpha: f64,
    pub lr: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub updates_per_step: usize,
    /// Uniform-random action steps before the policy takes over.
    pub start_steps: usize,
    /// Environment steps before actor updates begin. Critics keep learning
    /// from step one; holding the actor back protects a demonstration-cloned
    /// policy from being dragged around by a still-uninformed critic.
    #[serde(default)]
    pub actor_delay: usize,
    pub total_steps: usize,
    pub eval_every: usize,
    pub eval_episodes: usize,
    /// Optional Dirichlet perturbation of rollout intents (meta training).
    pub dirichlet_beta: Option<f64>,
}

impl Default for SacConfig {
    fn default() -> Self {
        Self {
            hidden: vec![64, 64],
            gamma: 0.99,
            tau: 0.005,
            alpha: 0.2,
            lr: 3e-4,
            batch_size: 256,
            buffer_capacity: 100_000,
            updates_per_step: 1,
            start_steps: 1000,
            actor_delay: 0,
            total_steps: 30_000,
            eval_every: 2000,
            eval_episodes: 20,
            dirichlet_beta: None,
        }
    }
}

impl SacConfig {
    pub fn from_file(path: &std::path::Path) -> Result<Self, crate::error::HpcError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            crate::error::HpcError::Io(format!("cannot read '{}': {e}", path.display()))
        })?;
        serde_json::from_str(&text).map_err(|e| {
            crate::error::HpcError::Format(format!(
                "invalid training config '{}' at line {}, column {}: {e}",
                path.display(),
                e.line(),
                e.column()
            ))
        })
    }
}
