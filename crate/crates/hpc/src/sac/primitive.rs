use rand::{Rng, RngCore, SeedableRng};
use rand_distr::StandardNormal;

use super::buffer::ReplayBuffer;
use super::critics::CriticPair;
use super::metrics::{MetricsRow, MetricsWriter};
use super::SacConfig;
use crate::approx::{Activation, AdamState, Mlp};
use crate::error::HpcError;
use crate::mdp::Env;
use crate::policy::{GaussianPrimitive, LogStdHead, LOG_STD_CLAMP_DEFAULT, SIGMA_FLOOR};

struct Transition {
    state: Vec<f64>,
    action_u: Vec<f64>,
    reward: f64,
    next_state: Vec<f64>,
    done: bool,
}

/// Stochastic tanh-Gaussian actor for level-1 training.
struct Actor {
    policy: GaussianPrimitive,
    bounds: Vec<(f64, f64)>,
}

const LOG_SQRT_2PI: f64 = 0.9189385332046727;

impl Actor {
    fn new(env: &dyn Env, hidden: &[usize], rng: &mut impl Rng) -> Self {
        let s = env.schema().len();
        let a = env.action_dims().len();
        let mut widths = vec![s];
        widths.extend_from_slice(hidden);
        widths.push(a);
        let mean_net = Mlp::new("mean", &widths, Activation::Tanh, 0.01, rng);
        let log_std_net = Mlp::new("log_std", &widths, Activation::Tanh, 0.01, rng);
        let policy = GaussianPrimitive {
            id: env.task_name().to_string(),
            level: 1,
            state_dims: env.schema().to_vec(),
            action_dims: env.action_dims().to_vec(),
            mean_net,
            log_std: LogStdHead::Net(log_std_net),
            log_std_clamp: LOG_STD_CLAMP_DEFAULT,
            frozen: false,
        };
        Self {
            policy,
            bounds: env.action_bounds(),
        }
    }

    fn squash(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(&self.bounds)
            .map(|(&ui, &(lo, hi))| 0.5 * (lo + hi) + 0.5 * (hi - lo) * ui.tanh())
            .collect()
    }

    /// Sample pre-squash action and its squashed log-density.
    fn sample(&self, state: &[f64], rng: &mut dyn RngCore) -> Result<(Vec<f64>, f64), HpcError> {
        let (mu, sigma) = self.policy.dist(state)?;
        let mut u = Vec::with_capacity(mu.len());
        let mut log_pi = 0.0;
        for ((&m, &s), &(lo, hi)) in mu.iter().zip(&sigma).zip(&self.bounds) {
            let eps: f64 = rng.sample(StandardNormal);
            let ui = m + s * eps;
            let t = ui.tanh();
            let half = 0.5 * (hi - lo);
            log_pi += -s.ln() - 0.5 * eps * eps - LOG_SQRT_2PI;
            log_pi -= (half * (1.0 - t * t)).max(1e-12).ln();
            u.push(ui);
        }
        Ok((u, log_pi))
    }
}

pub struct PrimitiveTrainResult {
    pub policy: GaussianPrimitive,
    pub critics: CriticPair,
    pub best_eval_success: f64,
    pub best_eval_return: f64,
    pub metrics: Vec<MetricsRow>,
}

/// Mean return, success rate and mean length over deterministic episodes.
pub fn evaluate_primitive(
    policy: &GaussianPrimitive,
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
            let (mu, _) = policy.dist(&state)?;
            let action: Vec<f64> = mu
                .iter()
                .zip(&bounds)
                .map(|(&m, &(lo, hi))| 0.5 * (lo + hi) + 0.5 * (hi - lo) * m.tanh())
                .collect();
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

/// Standard SAC on a level-1 environment; checkpoints the best-eval policy.
pub fn sac_train_primitive(
    env: &mut dyn Env,
    eval_env: &mut dyn Env,
    cfg: &SacConfig,
    init_critics: Option<CriticPair>,
    demo_seed: Option<&crate::sac::DemoSet>,
    metrics: &mut MetricsWriter,
    rng: &mut impl Rng,
) -> Result<PrimitiveTrainResult, HpcError> {
    let s_dim = env.schema().len();
    let a_dim = env.action_dims().len();
    let mut actor = Actor::new(env, &cfg.hidden, rng);
    let mut critics = match init_critics {
        Some(c) => {
            if c.q1.input_width() != s_dim + a_dim || c.v.input_width() != s_dim {
                return Err(HpcError::Schema(
                    "warmstart critics do not match the environment dimensions".into(),
                ));
            }
            c
        }
        None => CriticPair::new(s_dim, a_dim, &cfg.hidden, cfg.alpha, cfg.gamma, rng),
    };
    let mut buffer: ReplayBuffer<Transition> = ReplayBuffer::new(cfg.buffer_capacity);
    if let Some(demos) = demo_seed {
        if demos.obs_dim != s_dim || demos.act_dim != a_dim {
            return Err(HpcError::Schema(format!(
                "demo dims {}+{} do not match the environment ({s_dim}+{a_dim})",
                demos.obs_dim, demos.act_dim
            )));
        }
        // Keep the rare success rewards in the sampling pool from step one;
        // fresh rollouts alone can take thousands of episodes to find them.
        for tr in &demos.transitions {
            buffer.push(Transition {
                state: tr.state.clone(),
                action_u: tr
                    .action
                    .iter()
                    .map(|&a| a.clamp(-0.999_999, 0.999_999).atanh())
                    .collect(),
                reward: tr.reward,
                next_state: tr.next_state.clone(),
                done: tr.done,
            });
        }
        // Clone the expert's mean action up front: the rare terminal rewards
        // in the buffer are much easier to amplify from a policy that already
        // conditions on the right state features than from a random one.
        let bounds = actor.bounds.clone();
        crate::sac::bc_warmstart(
            &mut actor.policy.mean_net,
            &bounds,
            demos,
            6000,
            1e-3,
            256,
            rng,
        )?;
    }

    let mut opt_q1 = AdamState::for_params(cfg.lr, &critics.q1.params());
    let mut opt_q2 = AdamState::for_params(cfg.lr, &critics.q2.params());
    let mut opt_v = AdamState::for_params(cfg.lr, &critics.v.params());
    let mut opt_pi = AdamState::for_params(cfg.lr, &actor.policy.params());

    let mut state = env.reset(rng);
    let mut episode = 0usize;
    let mut episode_return = 0.0;
    let mut episode_success = false;
    let mut last = (0.0, 0.0, 0.0, 0.0); // loss_q, loss_v, loss_pi, entropy
    let mut best = (f64::NEG_INFINITY, f64::NEG_INFINITY); // success, return
    let mut best_policy = actor.policy.clone();

    for step in 1..=cfg.total_steps {
        let action_u = if step <= cfg.start_steps {
            (0..a_dim)
                .map(|_| rng.random_range(-2.0..2.0))
                .collect::<Vec<f64>>()
        } else {
            actor.sample(&state, rng)?.0
        };
        let action = actor.squash(&action_u);
        let env_step = env.step(&action)?;
        episode_return += env_step.reward;
        episode_success = episode_success || env_step.success();
        // Bootstrap through horizon truncation; only a real outcome (success
        // or an environment-reported failure) terminates value.
        let failed = env_step.info.get("failed").is_some_and(|v| *v > 0.5);
        let terminal = env_step.done && (env_step.success() || failed);
        buffer.push(Transition {
            state: state.clone(),
            action_u,
            reward: env_step.reward,
            next_state: env_step.observation.clone(),
            done: terminal,
        });
        state = env_step.observation;

        if env_step.done {
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
                last = sac_update(
                    &mut actor,
                    &mut critics,
                    &buffer,
                    cfg,
                    (&mut opt_q1, &mut opt_q2, &mut opt_v, &mut opt_pi),
                    step > cfg.actor_delay,
                    rng,
                )?;
            }
        }

        if cfg.eval_every > 0 && step % cfg.eval_every == 0 {
            let mut eval_rng = rand_chacha::ChaCha12Rng::seed_from_u64(rng.next_u64());
            let (ret, succ, _) =
                evaluate_primitive(&actor.policy, eval_env, cfg.eval_episodes, &mut eval_rng)?;
            if (succ, ret) > best {
                best = (succ, ret);
                best_policy = actor.policy.clone();
            }
        }
    }
    let mut eval_rng = rand_chacha::ChaCha12Rng::seed_from_u64(rng.next_u64());
    let (ret, succ, _) = evaluate_primitive(
        &actor.policy,
        eval_env,
        cfg.eval_episodes.max(1),
        &mut eval_rng,
    )?;
    if (succ, ret) > best {
        best = (succ, ret);
        best_policy = actor.policy.clone();
    }
    Ok(PrimitiveTrainResult {
        policy: best_policy,
        critics,
        best_eval_success: best.0.max(0.0),
        best_eval_return: best.1,
        metrics: metrics.rows.clone(),
    })
}

type Opts<'a> = (
    &'a mut AdamState,
    &'a mut AdamState,
    &'a mut AdamState,
    &'a mut AdamState,
);

fn sac_update(
    actor: &mut Actor,
    critics: &mut CriticPair,
    buffer: &ReplayBuffer<Transition>,
    cfg: &SacConfig,
    opts: Opts,
    update_actor: bool,
    rng: &mut impl Rng,
) -> Result<(f64, f64, f64, f64), HpcError> {
    let (opt_q1, opt_q2, opt_v, opt_pi) = opts;
    let idx = buffer.sample_indices(cfg.batch_size, rng);
    let n = idx.len() as f64;
    let (lo_ls, hi_ls) = actor.policy.log_std_clamp;

    // Q update: y = r + gamma * (1 - done) * V_target(s').
    critics.zero_grads();
    let mut loss_q = 0.0;
    for &i in &idx {
        let tr = buffer.get(i);
        let a = actor.squash(&tr.action_u);
        let mut x = tr.state.clone();
        x.extend_from_slice(&a);
        let y = tr.reward
            + cfg.gamma
                * if tr.done {
                    0.0
                } else {
                    critics.v_target.forward(&tr.next_state)?[0]
                };
        for q in [&mut critics.q1, &mut critics.q2] {
            let cache = q.forward_cached(&x)?;
            let d = cache.output()[0] - y;
            loss_q += 0.5 * d * d;
            q.backward(&cache, &[d / n])?;
        }
    }
    loss_q /= 2.0 * n;
    opt_q1.step(&mut critics.q1.params_mut())?;
    opt_q2.step(&mut critics.q2.params_mut())?;

    // V update with a fresh action: y = min Q(s, a~) - alpha * log pi(a~|s).
    let mut loss_v = 0.0;
    let mut entropy_acc = 0.0;
    for &i in &idx {
        let tr = buffer.get(i);
        let (u, log_pi) = actor.sample(&tr.state, rng)?;
        let a = actor.squash(&u);
        let mut x = tr.state.clone();
        x.extend_from_slice(&a);
        let y = critics.min_q(&x)? - cfg.alpha * log_pi;
        entropy_acc += -log_pi;
        let cache = critics.v.forward_cached(&tr.state)?;
        let d = cache.output()[0] - y;
        loss_v += 0.5 * d * d;
        critics.v.backward(&cache, &[d / n])?;
    }
    loss_v /= n;
    opt_v.step(&mut critics.v.params_mut())?;

    // Actor update: minimize alpha * log pi - min Q, reparameterized.
    let mut loss_pi = 0.0;
    if update_actor {
        critics.zero_grads();
        for p in actor.policy.params_mut() {
            p.zero_grad();
        }
        for &i in &idx {
            let tr = buffer.get(i);
            let mean_cache = actor.policy.mean_net.forward_cached(&tr.state)?;
            let LogStdHead::Net(log_std_net) = &actor.policy.log_std else {
                return Err(HpcError::State(
                    "level-1 actor requires a log-std net".into(),
                ));
            };
            let ls_cache = log_std_net.forward_cached(&tr.state)?;
            let mu = mean_cache.output().to_vec();
            let ls_raw = ls_cache.output().to_vec();
            let a_dim = mu.len();
            let mut d_mu = vec![0.0; a_dim];
            let mut d_ls = vec![0.0; a_dim];
            let mut u = Vec::with_capacity(a_dim);
            let mut log_pi = 0.0;
            let mut sig = Vec::with_capacity(a_dim);
            let mut epss = Vec::with_capacity(a_dim);
            for j in 0..a_dim {
                let s = ls_raw[j].clamp(lo_ls, hi_ls).exp().max(SIGMA_FLOOR);
                let eps: f64 = rng.sample(StandardNormal);
                let uj = mu[j] + s * eps;
                let t = uj.tanh();
                let half = 0.5 * (actor.bounds[j].1 - actor.bounds[j].0);
                log_pi += -s.ln()
                    - 0.5 * eps * eps
                    - LOG_SQRT_2PI
                    - (half * (1.0 - t * t)).max(1e-12).ln();
                u.push(uj);
                sig.push(s);
                epss.push(eps);
            }
            let a = actor.squash(&u);
            let mut x = tr.state.clone();
            x.extend_from_slice(&a);
            let q1c = critics.q1.forward_cached(&x)?;
            let q2c = critics.q2.forward_cached(&x)?;
            let (q1o, q2o) = (q1c.output()[0], q2c.output()[0]);
            let qmin = q1o.min(q2o);
            loss_pi += cfg.alpha * log_pi - qmin;
            let gx = if q1o <= q2o {
                critics.q1.backward(&q1c, &[-1.0 / n])?
            } else {
                critics.q2.backward(&q2c, &[-1.0 / n])?
            };
            let ga = &gx[tr.state.len()..];
            for j in 0..a_dim {
                let t = u[j].tanh();
                let half = 0.5 * (actor.bounds[j].1 - actor.bounds[j].0);
                // Q path through a = center + half * tanh(u), plus the entropy
                // path through the tanh log-density correction (2 * tanh(u)).
                let d_u = ga[j] * half * (1.0 - t * t) + (cfg.alpha / n) * 2.0 * t;
                d_mu[j] += d_u;
                let mut d_sigma = d_u * epss[j];
                d_sigma += -(cfg.alpha / n) / sig[j];
                // d sigma / d log_std_raw is zero outside the clamp.
                if ls_raw[j] > lo_ls && ls_raw[j] < hi_ls && sig[j] > SIGMA_FLOOR {
                    d_ls[j] += d_sigma * sig[j];
                }
            }
            actor.policy.mean_net.backward(&mean_cache, &d_mu)?;
            let LogStdHead::Net(log_std_net) = &mut actor.policy.log_std else {
                unreachable!()
            };
            log_std_net.backward(&ls_cache, &d_ls)?;
        }
        loss_pi /= n;
        opt_pi.step(&mut actor.policy.params_mut())?;
    }

    crate::approx::soft_update(
        &mut critics.v_target.params_mut(),
        &critics.v.params(),
        cfg.tau,
    )
    .map_err(|e| HpcError::State(format!("target update failed: {e}")))?;

    let out = (loss_q, loss_v, loss_pi, entropy_acc / n);
    if !(out.0.is_finite() && out.1.is_finite() && out.2.is_finite()) {
        return Err(HpcError::Diverged(format!(
            "non-finite losses: q={} v={} pi={}",
            out.0, out.1, out.2
        )));
    }
    Ok(out)
}
