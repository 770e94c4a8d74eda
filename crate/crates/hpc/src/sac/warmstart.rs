use rand::Rng;

use super::critics::CriticPair;
use super::demo::DemoSet;
use crate::approx::AdamState;
use crate::error::HpcError;

/// Per-transition discounted return-to-go within each demonstration episode.
pub fn returns_to_go(set: &DemoSet, gamma: f64) -> Vec<f64> {
    let mut out = vec![0.0; set.transitions.len()];
    for e in 0..set.episodes() {
        let range = set.episode_range(e);
        let mut acc = 0.0;
        for i in range.rev() {
            acc = set.transitions[i].reward + gamma * acc;
            out[i] = acc;
        }
    }
    out
}

/// Regresses both Q heads and the value nets onto demonstration
/// returns-to-go so that a fresh learner starts from informed critics.
pub fn q_warmstart(
    critics: &mut CriticPair,
    demos: &DemoSet,
    epochs: usize,
    lr: f64,
    batch_size: usize,
    rng: &mut impl Rng,
) -> Result<f64, HpcError> {
    if demos.transitions.is_empty() {
        return Err(HpcError::Argument(
            "warmstart needs at least one demonstration".into(),
        ));
    }
    if critics.q1.input_width() != demos.obs_dim + demos.act_dim
        || critics.v.input_width() != demos.obs_dim
    {
        return Err(HpcError::Schema(format!(
            "critic inputs ({} / {}) do not match demo dims ({} + {})",
            critics.q1.input_width(),
            critics.v.input_width(),
            demos.obs_dim,
            demos.act_dim
        )));
    }
    let targets = returns_to_go(demos, critics.gamma);
    let n = demos.transitions.len();
    let batch = batch_size.min(n).max(1);

    let mut opt_q1 = AdamState::for_params(lr, &critics.q1.params());
    let mut opt_q2 = AdamState::for_params(lr, &critics.q2.params());
    let mut opt_v = AdamState::for_params(lr, &critics.v.params());

    let mut last_loss = f64::INFINITY;
    for _ in 0..epochs {
        let idx = rand::seq::index::sample(rng, n, batch);
        critics.zero_grads();
        let mut loss = 0.0;
        for i in idx {
            let tr = &demos.transitions[i];
            let y = targets[i];
            let mut x = tr.state.clone();
            x.extend_from_slice(&tr.action);
            for q in [&mut critics.q1, &mut critics.q2] {
                let cache = q.forward_cached(&x)?;
                let d = cache.output()[0] - y;
                loss += 0.5 * d * d;
                q.backward(&cache, &[d / batch as f64])?;
            }
            let cache = critics.v.forward_cached(&tr.state)?;
            let d = cache.output()[0] - y;
            loss += 0.5 * d * d;
            critics.v.backward(&cache, &[d / batch as f64])?;
        }
        opt_q1.step(&mut critics.q1.params_mut())?;
        opt_q2.step(&mut critics.q2.params_mut())?;
        opt_v.step(&mut critics.v.params_mut())?;
        last_loss = loss / (3.0 * batch as f64);
        if !last_loss.is_finite() {
            return Err(HpcError::Diverged(format!(
                "warmstart loss became {last_loss}"
            )));
        }
    }
    // Start the target net where the fitted value net ends up.
    critics.v_target = critics.v.clone();
    for p in critics.v_target.params_mut() {
        p.name = p.name.replacen("v/", "v_target/", 1);
    }
    Ok(last_loss)
}

/// Regresses the actor mean head onto demonstration actions (behavior
/// cloning). The squashed mean is matched against the demo action mapped
/// into squash space, so saturated expert actions do not blow up the
/// targets. Returns the final mean squared action error.
pub fn bc_warmstart(
    mean_net: &mut crate::approx::Mlp,
    bounds: &[(f64, f64)],
    demos: &DemoSet,
    epochs: usize,
    lr: f64,
    batch_size: usize,
    rng: &mut impl Rng,
) -> Result<f64, HpcError> {
    if demos.transitions.is_empty() {
        return Err(HpcError::Argument(
            "warmstart needs at least one demonstration".into(),
        ));
    }
    if mean_net.input_width() != demos.obs_dim || mean_net.output_width() != demos.act_dim {
        return Err(HpcError::Schema(format!(
            "actor mean head ({} -> {}) does not match demo dims ({} -> {})",
            mean_net.input_width(),
            mean_net.output_width(),
            demos.obs_dim,
            demos.act_dim
        )));
    }
    let n = demos.transitions.len();
    let batch = batch_size.min(n).max(1);
    let mut opt = AdamState::for_params(lr, &mean_net.params());

    let mut last_loss = f64::INFINITY;
    for _ in 0..epochs {
        let idx = rand::seq::index::sample(rng, n, batch);
        for p in mean_net.params_mut() {
            p.grad.iter_mut().for_each(|g| *g = 0.0);
        }
        let mut loss = 0.0;
        for i in idx {
            let tr = &demos.transitions[i];
            let cache = mean_net.forward_cached(&tr.state)?;
            let mut grad = vec![0.0; demos.act_dim];
            for (k, (&m, &(lo, hi))) in cache.output().iter().zip(bounds).enumerate() {
                let half = 0.5 * (hi - lo);
                let target = ((tr.action[k] - 0.5 * (lo + hi)) / half).clamp(-0.999, 0.999);
                let t = m.tanh();
                let d = t - target;
                loss += 0.5 * d * d;
                grad[k] = d * (1.0 - t * t) / batch as f64;
            }
            mean_net.backward(&cache, &grad)?;
        }
        opt.step(&mut mean_net.params_mut())?;
        last_loss = loss / batch as f64;
        if !last_loss.is_finite() {
            return Err(HpcError::Diverged(format!(
                "warmstart loss became {last_loss}"
            )));
        }
    }
    Ok(last_loss)
}
