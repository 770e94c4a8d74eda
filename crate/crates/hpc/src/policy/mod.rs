//! Gaussian primitive policies, the multiplicative compound policy and the
//! deterministic meta-policy producing intents and subgoals.

mod compound;
mod intent;
mod meta;
mod primitive;

pub use compound::{compose, CompoundSpec, SubgoalSlotSpec};
pub use intent::{intent_entropy, IntentVector};
pub use meta::{MetaCache, MetaPolicy};
pub use primitive::{GaussianPrimitive, LogStdHead, LOG_STD_CLAMP_DEFAULT, SIGMA_FLOOR};

use rand::Rng;
use rand_distr::StandardNormal;

/// Subgoal vectors per primitive; `None` for primitives without a slot.
#[derive(Debug, Clone, Default)]
pub struct SubgoalBundle {
    pub per_primitive: Vec<Option<Vec<f64>>>,
}

impl SubgoalBundle {
    pub fn none(n_primitives: usize) -> Self {
        Self {
            per_primitive: vec![None; n_primitives],
        }
    }

    /// Concatenation of all present subgoals, in primitive order.
    pub fn flat(&self) -> Vec<f64> {
        self.per_primitive
            .iter()
            .flatten()
            .flatten()
            .copied()
            .collect()
    }
}

/// Draws `squash(mu + sigma * eps)` with tanh squashing into per-dimension
/// bounds; `deterministic` returns `squash(mu)`.
pub fn sample_action(
    mu: &[f64],
    sigma: &[f64],
    bounds: &[(f64, f64)],
    deterministic: bool,
    rng: &mut (impl Rng + ?Sized),
) -> Vec<f64> {
    debug_assert_eq!(mu.len(), sigma.len());
    debug_assert_eq!(mu.len(), bounds.len());
    mu.iter()
        .zip(sigma)
        .zip(bounds)
        .map(|((&m, &s), &(lo, hi))| {
            let u = if deterministic {
                m
            } else {
                let eps: f64 = rng.sample(StandardNormal);
                m + s * eps
            };
            let center = 0.5 * (lo + hi);
            let half = 0.5 * (hi - lo);
            center + half * u.tanh()
        })
        .collect()
}
