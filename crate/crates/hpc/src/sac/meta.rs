use rand::{Rng, RngCore, SeedableRng};
use rand_distr::Gamma;

use super::buffer::ReplayBuffer;
use super::critics::CriticPair;
use super::losses::{policy_loss, q_loss, v_loss};
use super::metrics::{MetricsRow, MetricsWriter};
use super::SacConfig;
use crate::approx::AdamState;
use crate::error::HpcError;
use crate::mdp::{Env, HierarchyNode, MetaTransition};
use crate::policy::sample_action;

pub struct MetaTrainResult {
    pub critics: CriticPair,
    pub best_eval_success: f64,
    pub best_eval_return: f64,
    pub metrics: Vec<MetricsRow>,
}

/// Mean return, success rate and mean length of the hierarchy on `env`,
/// acting with the composed distribution's mean.
pub fn evaluate_node(
    node: &HierarchyNode,
    env: &mut dyn Env,
    episodes: usize,
    rng: &mut dyn RngCore,
) -> Result<(f64, f64, f64), HpcError> {
    let bounds = env.action_bounds();
    let mut total_return = 0.0;
    let mut successes = 0usize;
    let mut total_len = 0usize;
    for _ in 0..episodes {
        let mut state = env.reset(rng);
        let mut success = false;
        for _ in 0..env.horizon() {
            let dist = node.dist(&state)?;
            let action = sample_action(&dist.mu, &dist.sigma, &bounds, true, rng);
            let step = env.step(&action)?;
            total_return += step.reward;
            success = success || step.success();
            total_len += 1;
            state = step.observation;
            if step.done {
                break;
            }
        }
        if success {
            successes += 1;
        }
    }
    let n = episodes.max(1) as f64;
    Ok((total_return / n, successes as f64 / n, total_len as f64 / n))
}

/// One environment interaction with an optional intent override for
/// exploration. The stored intent is the executed one.
fn explore_step(
    env: &mut dyn Env,
    node: &HierarchyNode,
    state: &[f64],
    omega_override: Option<&[f64]>,
    rng: &mut dyn RngCore,
) -> Result<(MetaTransition, bool), HpcError> {
    let dist = node.dist_with_root_intent(state, omega_override)?;
    let root = dist
        .trace
        .first()
        .ok_or_else(|| HpcError::State("meta training requires a compound node".into()))?;
    let action = sample_action(&dist.mu, &dist.sigma, &env.action_bounds(), false, rng);
    let step = env.step(&action)?;
    let tr = MetaTransition {
        state: state.to_vec(),
        omega: root.omega.clone(),
        subgoal: root.subgoal.clone(),
        reward: step.reward,
        next_state: step.observation.clone(),
        // Bootstrap through horizon truncation; only success terminates value.
        done: step.done && step.success(),
    };
    Ok((tr, step.done))
}

fn dirichlet_around(omega: &[f64], beta: f64, rng: &mut impl Rng) -> Result<Vec<f64>, HpcError> {
    let mut out = Vec::with_capacity(omega.len());
    let mut sum = 0.0;
    for &w in omega {
        let shape = (beta * w).max(1e-3);
        let g = Gamma::new(shape, 1.0)
            .map_err(|e| HpcError::Argument(format!("bad Dirichlet shape: {e}")))?;
        let x: f64 = rng.sample(g).max(1e-12);
        sum += x;
        out.push(x);
    }
    for x in &mut out {
        *x /= sum;
    }
    Ok(out)
}

fn uniform_simplex(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    let mut out: Vec<f64> = (0..n)
        .map(|_| -f64::ln(rng.random_range(1e-12..1.0)))
        .collect();
    let sum: f64 = out.iter().sum();
    for x in &mut out {
        *x /= sum;
    }
    out
}

/// Soft policy iteration over the surrogate decision process induced by the
/// frozen children: V update, twin Q updates, meta-policy update, then a
/// Polyak step on the value target.
pub fn meta_policy_iteration(
    env: &mut dyn Env,
    eval_env: &mut dyn Env,
    node: &mut HierarchyNode,
    cfg: &SacConfig,
    metrics: &mut MetricsWriter,
    rng: &mut impl Rng,
) -> Result<MetaTrainResult, HpcError> {
    let (n_prims, subgoal_width) = match &*node {
        HierarchyNode::Compound(c) => (c.spec.n_primitives, c.spec.subgoal_width()),
        HierarchyNode::Base(_) => {
            return Err(HpcError::Argument(
                "meta training needs a compound node".into(),
            ))
        }
    };
    if node.state_dims() != env.schema() {
        return Err(HpcError::Schema(format!(
            "hierarchy state schema {:?} does not match environment schema {:?}",
            node.state_dims(),
            env.schema()
        )));
    }
    let s_dim = env.schema().len();
    let mut critics = CriticPair::new(
        s_dim,
        n_prims + subgoal_width,
        &cfg.hidden,
        cfg.alpha,
        cfg.gamma,
        rng,
    );
    let mut buffer: ReplayBuffer<MetaTransition> = ReplayBuffer::new(cfg.buffer_capacity);

    let mut opt_q1 = AdamState::for_params(cfg.lr, &critics.q1.params());
    let mut opt_q2 = AdamState::for_params(cfg.lr, &critics.q2.params());
    let mut opt_v = AdamState::for_params(cfg.lr, &critics.v.params());
    let mut opt_pi = {
        let HierarchyNode::Compound(c) = &*node else {
            unreachable!()
        };
        AdamState::for_params(cfg.lr, &c.meta.params())
    };

    let mut state = env.reset(rng);
    let mut episode = 0usize;
    let mut episode_return = 0.0;
    let mut episode_success = false;
    let mut last = (0.0, 0.0, 0.0, 0.0);
    let mut best = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut best_meta = {
        let HierarchyNode::Compound(c) = &*node else {
            unreachable!()
        };
        c.meta.clone()
    };

    for step in 1..=cfg.total_steps {
        let omega_override = if step <= cfg.start_steps {
            Some(uniform_simplex(n_prims, rng))
        } else if let Some(beta) = cfg.dirichlet_beta {
            let (omega, _) = {
                let HierarchyNode::Compound(c) = &*node else {
                    unreachable!()
                };
                c.meta.forward(&state)?
            };
            Some(dirichlet_around(omega.weights(), beta, rng)?)
        } else {
            None
        };
        let (tr, env_done) = explore_step(env, node, &state, omega_override.as_deref(), rng)?;
        episode_return += tr.reward;
        episode_success = episode_success || tr.done;
        state = tr.next_state.clone();
        buffer.push(tr);

        if env_done {
            metrics.push(MetricsRow {
                step,
                episode,
                episode_return,
                success: episode_success,
                loss_q: last.0,
                loss_v: last.1,
                loss_pi: last.2,
                entropy: last.3,
                alpha: cfg.alpha,
            })?;
            episode += 1;
            episode_return = 0.0;
            episode_success = false;
            state = env.reset(rng);
        }

        if step > cfg.start_steps && buffer.len() >= cfg.batch_size {
            for _ in 0..cfg.updates_per_step {
                let idx = buffer.sample_indices(cfg.batch_size, rng);
                let batch: Vec<&MetaTransition> = idx.iter().map(|&i| buffer.get(i)).collect();
                let HierarchyNode::Compound(c) = &mut *node else {
                    unreachable!()
                };

                critics.zero_grads();
                let lv = v_loss(&batch, &mut critics, &c.meta)?;
                opt_v.step(&mut critics.v.params_mut())?;

                critics.zero_grads();
                let lq = q_loss(&batch, &mut critics)?;
                opt_q1.step(&mut critics.q1.params_mut())?;
                opt_q2.step(&mut critics.q2.params_mut())?;

                critics.zero_grads();
                c.meta.zero_grad();
                let lp = policy_loss(&batch, &mut critics, &mut c.meta)?;
                opt_pi.step(&mut c.meta.params_mut())?;

                crate::approx::soft_update(
                    &mut critics.v_target.params_mut(),
                    &critics.v.params(),
                    cfg.tau,
                )?;

                if !(lq.is_finite() && lv.is_finite() && lp.is_finite()) {
                    return Err(HpcError::Diverged(format!(
                        "non-finite meta losses: q={lq} v={lv} pi={lp}"
                    )));
                }
                let mean_h = batch
                    .iter()
                    .map(|t| {
                        -t.omega
                            .iter()
                            .map(|&w| if w > 0.0 { w * w.ln() } else { 0.0 })
                            .sum::<f64>()
                    })
                    .sum::<f64>()
                    / batch.len() as f64;
                last = (lq, lv, lp, mean_h);
            }
        }

        if cfg.eval_every > 0 && step % cfg.eval_every == 0 {
            let mut eval_rng = rand_chacha::ChaCha12Rng::seed_from_u64(rng.next_u64());
            let (ret, succ, _) = evaluate_node(node, eval_env, cfg.eval_episodes, &mut eval_rng)?;
            if (succ, ret) > best {
                best = (succ, ret);
                let HierarchyNode::Compound(c) = &*node else {
                    unreachable!()
                };
                best_meta = c.meta.clone();
            }
        }
    }

    let mut eval_rng = rand_chacha::ChaCha12Rng::seed_from_u64(rng.next_u64());
    let (ret, succ, _) = evaluate_node(node, eval_env, cfg.eval_episodes.max(1), &mut eval_rng)?;
    if (succ, ret) > best {
        best = (succ, ret);
        let HierarchyNode::Compound(c) = &*node else {
            unreachable!()
        };
        best_meta = c.meta.clone();
    }
    {
        let HierarchyNode::Compound(c) = &mut *node else {
            unreachable!()
        };
        c.meta = best_meta;
    }
    Ok(MetaTrainResult {
        critics,
        best_eval_success: best.0.max(0.0),
        best_eval_return: best.1,
        metrics: metrics.rows.clone(),
    })
}
