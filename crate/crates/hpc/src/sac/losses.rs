use super::critics::CriticPair;
use crate::error::HpcError;
use crate::mdp::MetaTransition;
use crate::policy::{intent_entropy, IntentVector, MetaPolicy};

fn critic_input(state: &[f64], omega: &[f64], subgoal: &[f64]) -> Vec<f64> {
    let mut x = Vec::with_capacity(state.len() + omega.len() + subgoal.len());
    x.extend_from_slice(state);
    x.extend_from_slice(omega);
    x.extend_from_slice(subgoal);
    x
}

/// Soft Bellman residual of both Q critics against the detached target
/// `r + gamma * (1 - done) * V_target(s')`, using the stored intent. Returns
/// the per-critic mean loss and accumulates gradients into Q1 and Q2.
pub fn q_loss(batch: &[&MetaTransition], critics: &mut CriticPair) -> Result<f64, HpcError> {
    if batch.is_empty() {
        return Err(HpcError::Argument("q_loss on an empty batch".into()));
    }
    let n = batch.len() as f64;
    let mut total = 0.0;
    for tr in batch {
        let y = tr.reward
            + critics.gamma
                * if tr.done {
                    0.0
                } else {
                    critics.v_target.forward(&tr.next_state)?[0]
                };
        let x = critic_input(&tr.state, &tr.omega, &tr.subgoal);
        for q in [&mut critics.q1, &mut critics.q2] {
            let cache = q.forward_cached(&x)?;
            let d = cache.output()[0] - y;
            total += 0.5 * d * d;
            q.backward(&cache, &[d / n])?;
        }
    }
    Ok(total / (2.0 * n))
}

/// Loss value only (no gradients); the evaluation path used by the
/// finite-difference checks.
pub fn q_loss_value(batch: &[&MetaTransition], critics: &CriticPair) -> Result<f64, HpcError> {
    let n = batch.len() as f64;
    let mut total = 0.0;
    for tr in batch {
        let y = tr.reward
            + critics.gamma
                * if tr.done {
                    0.0
                } else {
                    critics.v_target.forward(&tr.next_state)?[0]
                };
        let x = critic_input(&tr.state, &tr.omega, &tr.subgoal);
        for q in [&critics.q1, &critics.q2] {
            let d = q.forward(&x)?[0] - y;
            total += 0.5 * d * d;
        }
    }
    Ok(total / (2.0 * n))
}

/// Soft value residual against the detached target
/// `min(Q1,Q2)(s, omega (+) g) + alpha * H(omega)`, with the intent
/// recomputed from the current meta-policy. Gradients go into V only.
pub fn v_loss(
    batch: &[&MetaTransition],
    critics: &mut CriticPair,
    meta: &MetaPolicy,
) -> Result<f64, HpcError> {
    if batch.is_empty() {
        return Err(HpcError::Argument("v_loss on an empty batch".into()));
    }
    let n = batch.len() as f64;
    let mut total = 0.0;
    for tr in batch {
        let (omega, subgoal) = meta.forward(&tr.state)?;
        let h = intent_entropy(&omega);
        let x = critic_input(&tr.state, omega.weights(), &subgoal);
        let y = critics.min_q(&x)? + critics.alpha * h;
        let cache = critics.v.forward_cached(&tr.state)?;
        let d = cache.output()[0] - y;
        total += 0.5 * d * d;
        critics.v.backward(&cache, &[d / n])?;
    }
    Ok(total / n)
}

pub fn v_loss_value(
    batch: &[&MetaTransition],
    critics: &CriticPair,
    meta: &MetaPolicy,
) -> Result<f64, HpcError> {
    let n = batch.len() as f64;
    let mut total = 0.0;
    for tr in batch {
        let (omega, subgoal) = meta.forward(&tr.state)?;
        let h = intent_entropy(&omega);
        let x = critic_input(&tr.state, omega.weights(), &subgoal);
        let y = critics.min_q(&x)? + critics.alpha * h;
        let d = critics.v.forward(&tr.state)?[0] - y;
        total += 0.5 * d * d;
    }
    Ok(total / n)
}

/// Meta-policy objective `-E[min(Q1,Q2)(s, omega (+) g) + alpha * H(omega)]`
/// with the intent recomputed differentiably; gradients reach the meta-policy
/// parameters through both the Q input and the entropy.
pub fn policy_loss(
    batch: &[&MetaTransition],
    critics: &mut CriticPair,
    meta: &mut MetaPolicy,
) -> Result<f64, HpcError> {
    if batch.is_empty() {
        return Err(HpcError::Argument("policy_loss on an empty batch".into()));
    }
    let n = batch.len() as f64;
    let s_len = batch[0].state.len();
    let p = meta.n_primitives();
    let mut total = 0.0;
    for tr in batch {
        let cache = meta.forward_cached(&tr.state)?;
        let omega = IntentVector::new(cache.omega.clone())?;
        let h = intent_entropy(&omega);
        let x = critic_input(&tr.state, &cache.omega, &cache.subgoal_flat);
        let q1_cache = critics.q1.forward_cached(&x)?;
        let q2_cache = critics.q2.forward_cached(&x)?;
        let (q1_out, q2_out) = (q1_cache.output()[0], q2_cache.output()[0]);
        let qmin = q1_out.min(q2_out);
        total += -(qmin + critics.alpha * h);
        // Input gradient through whichever critic attains the min.
        let gx = if q1_out <= q2_out {
            critics.q1.backward(&q1_cache, &[-1.0 / n])?
        } else {
            critics.q2.backward(&q2_cache, &[-1.0 / n])?
        };
        let mut d_omega: Vec<f64> = gx[s_len..s_len + p].to_vec();
        for (i, w) in cache.omega.iter().enumerate() {
            // d/d_omega_i of -alpha*H = alpha*(ln w + 1).
            let lw = if *w > 0.0 { w.ln() } else { 0.0 };
            d_omega[i] += critics.alpha * (lw + 1.0) / n;
        }
        let d_subgoal: Vec<f64> = gx[s_len + p..].to_vec();
        meta.backward(&cache, &d_omega, &d_subgoal)?;
    }
    Ok(total / n)
}

pub fn policy_loss_value(
    batch: &[&MetaTransition],
    critics: &CriticPair,
    meta: &MetaPolicy,
) -> Result<f64, HpcError> {
    let n = batch.len() as f64;
    let mut total = 0.0;
    for tr in batch {
        let (omega, subgoal) = meta.forward(&tr.state)?;
        let h = intent_entropy(&omega);
        let x = critic_input(&tr.state, omega.weights(), &subgoal);
        total += -(critics.min_q(&x)? + critics.alpha * h);
    }
    Ok(total / n)
}
