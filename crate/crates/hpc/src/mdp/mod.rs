//! Environment abstraction, the state siever, the surrogate meta-MDP wrapper
//! and the hierarchy registry.

mod hierarchy;
mod siever;

pub use hierarchy::{
    assemble_compound, load_node, save_compound, save_primitive, sieve_compound, CompoundNode,
    HierarchyDef, HierarchyNode, IntentTraceEntry, NodeDist,
};
pub use siever::{sieve, ChildSieve, SieverMap};

use std::collections::BTreeMap;

use rand::RngCore;

use crate::error::HpcError;
use crate::policy::sample_action;

/// One environment step: named observation vector, reward, termination and
/// diagnostic info.
#[derive(Debug, Clone)]
pub struct EnvStep {
    pub observation: Vec<f64>,
    pub reward: f64,
    pub done: bool,
    pub info: BTreeMap<String, f64>,
}

impl EnvStep {
    pub fn success(&self) -> bool {
        self.info.get("success").copied().unwrap_or(0.0) > 0.5
    }
}

/// Single-owner environment; observations are already normalized per the
/// declared schema.
pub trait Env {
    fn task_name(&self) -> &str;
    /// Named observation dims in order.
    fn schema(&self) -> &[String];
    fn action_dims(&self) -> &[String];
    fn action_bounds(&self) -> Vec<(f64, f64)> {
        vec![(-1.0, 1.0); self.action_dims().len()]
    }
    fn horizon(&self) -> usize;
    fn reset(&mut self, rng: &mut dyn RngCore) -> Vec<f64>;
    fn step(&mut self, action: &[f64]) -> Result<EnvStep, HpcError>;
    fn is_done(&self) -> bool;
}

/// Replay record of the meta-MDP: (s_t, omega_t (+) g_t, r_t, s_{t+1}, done).
#[derive(Debug, Clone)]
pub struct MetaTransition {
    pub state: Vec<f64>,
    pub omega: Vec<f64>,
    pub subgoal: Vec<f64>,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub done: bool,
}

/// Runs the meta-policy once from `state`, executes the sampled compound
/// action and records the transition. The executed-action reward is the
/// single-sample estimate of the meta reward.
pub fn meta_step(
    env: &mut dyn Env,
    node: &HierarchyNode,
    state: &[f64],
    rng: &mut dyn RngCore,
) -> Result<(MetaTransition, EnvStep), HpcError> {
    if env.is_done() {
        return Err(HpcError::State(
            "meta_step on a terminated environment".into(),
        ));
    }
    let dist = node.dist(state)?;
    let root = dist
        .trace
        .first()
        .ok_or_else(|| HpcError::State("meta_step requires a compound node".into()))?;
    let action = sample_action(&dist.mu, &dist.sigma, &env.action_bounds(), false, rng);
    let step = env.step(&action)?;
    let transition = MetaTransition {
        state: state.to_vec(),
        omega: root.omega.clone(),
        subgoal: root.subgoal.clone(),
        reward: step.reward,
        next_state: step.observation.clone(),
        done: step.done,
    };
    Ok((transition, step))
}

/// Outcome of one episode rollout.
#[derive(Debug, Clone)]
pub struct RolloutResult {
    pub transitions: Vec<MetaTransition>,
    pub episode_return: f64,
    pub success: bool,
    pub steps: usize,
}

pub fn rollout(
    env: &mut dyn Env,
    node: &HierarchyNode,
    max_steps: usize,
    rng: &mut dyn RngCore,
) -> Result<RolloutResult, HpcError> {
    let mut state = env.reset(rng);
    let mut transitions = Vec::new();
    let mut episode_return = 0.0;
    let mut success = false;
    let mut steps = 0;
    for _ in 0..max_steps {
        let (tr, step) = meta_step(env, node, &state, rng)?;
        episode_return += tr.reward;
        success = success || step.success();
        state = tr.next_state.clone();
        let done = tr.done;
        transitions.push(tr);
        steps += 1;
        if done {
            break;
        }
    }
    Ok(RolloutResult {
        transitions,
        episode_return,
        success,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approx::{Activation, Mlp, ParamTensor};
    use crate::policy::{GaussianPrimitive, LogStdHead, LOG_STD_CLAMP_DEFAULT};
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    /// 1-state env paying a constant reward until the horizon.
    struct ConstEnv {
        schema: Vec<String>,
        actions: Vec<String>,
        steps: usize,
        horizon: usize,
    }

    impl ConstEnv {
        fn new(horizon: usize) -> Self {
            Self {
                schema: vec!["x".into()],
                actions: vec!["a".into()],
                steps: 0,
                horizon,
            }
        }
    }

    impl Env for ConstEnv {
        fn task_name(&self) -> &str {
            "const"
        }
        fn schema(&self) -> &[String] {
            &self.schema
        }
        fn action_dims(&self) -> &[String] {
            &self.actions
        }
        fn horizon(&self) -> usize {
            self.horizon
        }
        fn reset(&mut self, _rng: &mut dyn rand::RngCore) -> Vec<f64> {
            self.steps = 0;
            vec![0.0]
        }
        fn step(&mut self, _action: &[f64]) -> Result<EnvStep, HpcError> {
            self.steps += 1;
            Ok(EnvStep {
                observation: vec![0.0],
                reward: 1.0,
                done: self.steps >= self.horizon,
                info: Default::default(),
            })
        }
        fn is_done(&self) -> bool {
            self.steps >= self.horizon
        }
    }

    fn constant_primitive(id: &str, mu: f64) -> GaussianPrimitive {
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        let mut mean_net = Mlp::new("mean", &[1, 1], Activation::Tanh, 1.0, &mut rng);
        mean_net.weights[0].values = vec![0.0];
        mean_net.biases[0].values = vec![mu];
        GaussianPrimitive {
            id: id.into(),
            level: 1,
            state_dims: vec!["x".into()],
            action_dims: vec!["a".into()],
            mean_net,
            log_std: LogStdHead::PerDim(ParamTensor::new("log_std/p", vec![1], vec![-1.0])),
            log_std_clamp: LOG_STD_CLAMP_DEFAULT,
            frozen: true,
        }
    }

    fn toy_compound() -> HierarchyNode {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let children = vec![
            HierarchyNode::Base(constant_primitive("p0", 0.2)),
            HierarchyNode::Base(constant_primitive("p1", -0.4)),
        ];
        let node = assemble_compound(
            "toy",
            2,
            vec!["x".into()],
            children,
            vec![None, None],
            &[4],
            vec!["p0.ckpt".into(), "p1.ckpt".into()],
            &mut rng,
        )
        .unwrap();
        HierarchyNode::Compound(node)
    }

    #[test]
    fn zero_step_rollout_is_empty() {
        let mut env = ConstEnv::new(10);
        let node = toy_compound();
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        let r = rollout(&mut env, &node, 0, &mut rng).unwrap();
        assert!(r.transitions.is_empty());
        assert_eq!(r.episode_return, 0.0);
    }

    #[test]
    fn constant_reward_rollout_sums_to_horizon() {
        let mut env = ConstEnv::new(10);
        let node = toy_compound();
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        let r = rollout(&mut env, &node, 50, &mut rng).unwrap();
        assert_eq!(r.steps, 10);
        assert_eq!(r.episode_return, 10.0);
        assert!(r.transitions.last().unwrap().done);
        assert!(!r.transitions[0].done);
    }

    #[test]
    fn meta_step_on_terminated_env_errors() {
        let mut env = ConstEnv::new(1);
        let node = toy_compound();
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        let state = env.reset(&mut rng);
        meta_step(&mut env, &node, &state, &mut rng).unwrap();
        assert!(meta_step(&mut env, &node, &state, &mut rng).is_err());
    }

    #[test]
    fn meta_step_records_the_root_intent() {
        let mut env = ConstEnv::new(5);
        let node = toy_compound();
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        let state = env.reset(&mut rng);
        let (tr, _) = meta_step(&mut env, &node, &state, &mut rng).unwrap();
        assert_eq!(tr.omega.len(), 2);
        assert!((tr.omega.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert_eq!(tr.state, vec![0.0]);
    }

    #[test]
    fn seeded_rollouts_replay_bit_identically() {
        let node = toy_compound();
        let run = || {
            let mut env = ConstEnv::new(10);
            let mut rng = ChaCha12Rng::seed_from_u64(123);
            rollout(&mut env, &node, 50, &mut rng).unwrap()
        };
        let (a, b) = (run(), run());
        assert_eq!(a.episode_return.to_bits(), b.episode_return.to_bits());
        for (x, y) in a.transitions.iter().zip(&b.transitions) {
            for (u, v) in x.omega.iter().zip(&y.omega) {
                assert_eq!(u.to_bits(), v.to_bits());
            }
        }
    }
}
