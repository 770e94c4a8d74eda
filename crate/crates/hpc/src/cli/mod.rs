//! Command-line harness: training curricula, demo collection, evaluation,
//! intent-trace export and plot emission.

mod plot;

pub use plot::write_line_plot;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use sha2::{Digest, Sha256};

use crate::error::HpcError;
use crate::gripperworld::{GripperEnv, TaskConfig, TaskId};
use crate::mdp::{load_node, save_compound, save_primitive, Env, HierarchyDef, HierarchyNode};
use crate::policy::sample_action;
use crate::sac::{
    collect_demos, load_demos, meta_policy_iteration, q_warmstart, sac_train_primitive,
    save_critics, save_demos, CriticPair, MetricsWriter, SacConfig,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ARG: i32 = 2;
pub const EXIT_MISSING: i32 = 3;
pub const EXIT_SCHEMA: i32 = 4;
pub const EXIT_DIVERGED: i32 = 5;

pub fn exit_code_for(err: &HpcError) -> i32 {
    match err {
        HpcError::MissingArtifact(_) => EXIT_MISSING,
        HpcError::Schema(_) | HpcError::Dimension(_) => EXIT_SCHEMA,
        HpcError::Diverged(_) | HpcError::NonFinite(_) => EXIT_DIVERGED,
        _ => EXIT_ARG,
    }
}

#[derive(Parser)]
#[command(
    name = "hpc",
    version,
    about = "Hierarchical policy composition toolkit"
)]
pub struct Cli {
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Subcommand)]
pub enum Cmd {
    /// Train a level-1 primitive with SAC on a gripper-world task.
    TrainPrimitive {
        #[arg(long)]
        task: String,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Demo file used to warmstart the critics before training.
        #[arg(long)]
        demos: Option<PathBuf>,
    },
    /// Train the meta-policy of a compound node over frozen children.
    TrainMeta {
        #[arg(long)]
        hierarchy: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Collect successful scripted-expert episodes into a demo file.
    CollectDemos {
        #[arg(long)]
        task: String,
        #[arg(long)]
        episodes: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Fit critics to demo returns-to-go and save them for later training.
    Warmstart {
        #[arg(long)]
        demos: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Evaluate a checkpoint; prints and writes a JSON report.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 100)]
        episodes: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Task to evaluate on; defaults to the checkpoint id.
        #[arg(long)]
        task: Option<String>,
        #[arg(long, default_value_t = 1)]
        eval_workers: usize,
    },
    /// Export per-step intent/subgoal traces and intent plots.
    Trace {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 5)]
        episodes: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        task: Option<String>,
    },
    /// Train flat SAC directly on a compound task's full spaces.
    BaselineFlat {
        #[arg(long)]
        task: String,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

/// Optional run configuration: task overrides and SAC hyperparameters.
#[derive(Debug, Clone, Default, serde::Serialize, serde::Deserialize)]
pub struct RunConfig {
    #[serde(default)]
    pub task_config: Option<TaskConfig>,
    #[serde(default)]
    pub sac: Option<SacConfig>,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, HpcError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HpcError::Io(format!("cannot read '{}': {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| {
            HpcError::Format(format!(
                "invalid run config '{}' at line {}, column {}: {e}",
                path.display(),
                e.line(),
                e.column()
            ))
        })
    }

    fn load(path: Option<&PathBuf>) -> Result<Self, HpcError> {
        match path {
            Some(p) => Self::from_file(p),
            None => Ok(Self::default()),
        }
    }
}

/// Built-in step budgets; a run config overrides any of it.
pub fn default_sac(task: TaskId) -> SacConfig {
    let mut cfg = SacConfig::default();
    cfg.hidden = vec![32, 32];
    cfg.batch_size = 128;
    cfg.lr = 1e-3;
    cfg.alpha = 0.05;
    cfg.start_steps = 1000;
    cfg.eval_every = 2500;
    cfg.eval_episodes = 20;
    cfg.total_steps = match task {
        TaskId::Reach => 15_000,
        TaskId::Release => 20_000,
        TaskId::Grasp => 25_000,
        TaskId::Pick | TaskId::Place => 20_000,
        TaskId::PickAndPlace => 25_000,
    };
    // The manipulation primitives train from demonstrations; holding the
    // actor back while the critics settle keeps the cloned behavior intact.
    if matches!(task, TaskId::Grasp | TaskId::Release) {
        cfg.actor_delay = 5000;
    }
    cfg
}

pub fn run() -> i32 {
    let cli = Cli::parse();
    match dispatch(cli.cmd) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

fn dispatch(cmd: Cmd) -> Result<(), HpcError> {
    match cmd {
        Cmd::TrainPrimitive {
            task,
            seed,
            out,
            config,
            demos,
        } => cmd_train_primitive(&task, seed, &out, config.as_ref(), demos.as_ref()),
        Cmd::TrainMeta {
            hierarchy,
            seed,
            out,
            config,
        } => cmd_train_meta(&hierarchy, seed, &out, config.as_ref()),
        Cmd::CollectDemos {
            task,
            episodes,
            seed,
            out,
            config,
        } => cmd_collect_demos(&task, episodes, seed, &out, config.as_ref()),
        Cmd::Warmstart {
            demos,
            seed,
            out,
            config,
        } => cmd_warmstart(&demos, seed, &out, config.as_ref()),
        Cmd::Eval {
            checkpoint,
            episodes,
            seed,
            out,
            config,
            task,
            eval_workers,
        } => cmd_eval(
            &checkpoint,
            episodes,
            seed,
            &out,
            config.as_ref(),
            task.as_deref(),
            eval_workers,
        ),
        Cmd::Trace {
            checkpoint,
            episodes,
            seed,
            out,
            config,
            task,
        } => cmd_trace(
            &checkpoint,
            episodes,
            seed,
            &out,
            config.as_ref(),
            task.as_deref(),
        ),
        Cmd::BaselineFlat {
            task,
            seed,
            out,
            config,
        } => cmd_baseline_flat(&task, seed, &out, config.as_ref()),
    }
}

// ---------------------------------------------------------------------------
// Shared plumbing
// ---------------------------------------------------------------------------

fn ensure_dir(path: &Path) -> Result<(), HpcError> {
    std::fs::create_dir_all(path)
        .map_err(|e| HpcError::Io(format!("cannot create '{}': {e}", path.display())))
}

fn sha_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    format!("{:x}", h.finalize())
}

fn code_version() -> String {
    sha_hex(format!("hpc-{}", env!("CARGO_PKG_VERSION")).as_bytes())
}

fn effective_configs(run: &RunConfig, task: TaskId) -> (TaskConfig, SacConfig) {
    let task_cfg = run
        .task_config
        .clone()
        .unwrap_or_else(|| TaskConfig::defaults(task));
    let sac = run.sac.clone().unwrap_or_else(|| default_sac(task));
    (task_cfg, sac)
}

fn write_manifest(
    out: &Path,
    command: &str,
    seed: u64,
    config_hash: &str,
    extra: serde_json::Value,
) -> Result<(), HpcError> {
    let manifest = serde_json::json!({
        "command": command,
        "seed": seed,
        "config_hash": config_hash,
        "code_version": code_version(),
        "details": extra,
    });
    let path = out.join("manifest.json");
    std::fs::write(
        &path,
        serde_json::to_string_pretty(&manifest).unwrap() + "\n",
    )
    .map_err(|e| HpcError::Io(format!("cannot write '{}': {e}", path.display())))
}

fn config_hash(task_cfg: &TaskConfig, sac: &SacConfig) -> String {
    let blob = serde_json::json!({ "task_config": task_cfg, "sac": sac });
    sha_hex(serde_json::to_string(&blob).unwrap().as_bytes())
}

/// One deterministic-action episode; returns (return, success, length).
fn run_episode(
    node: &HierarchyNode,
    env: &mut dyn Env,
    rng: &mut dyn RngCore,
) -> Result<(f64, bool, usize), HpcError> {
    let bounds = env.action_bounds();
    let mut state = env.reset(rng);
    let mut ep_return = 0.0;
    let mut success = false;
    let mut len = 0;
    for _ in 0..env.horizon() {
        let dist = node.dist(&state)?;
        let action = sample_action(&dist.mu, &dist.sigma, &bounds, true, rng);
        let step = env.step(&action)?;
        ep_return += step.reward;
        success = success || step.success();
        len += 1;
        state = step.observation;
        if step.done {
            break;
        }
    }
    Ok((ep_return, success, len))
}

fn episode_seed(seed: u64, episode: usize) -> u64 {
    seed.wrapping_add((episode as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn checkpoint_task(node: &HierarchyNode, flag: Option<&str>) -> Result<TaskId, HpcError> {
    match flag {
        Some(t) => TaskId::parse(t),
        None => TaskId::parse(node.id()).map_err(|_| {
            HpcError::Argument(format!(
                "checkpoint id '{}' is not a task name; pass --task",
                node.id()
            ))
        }),
    }
}

fn check_env_schema(node: &HierarchyNode, env: &GripperEnv) -> Result<(), HpcError> {
    if node.state_dims() != env.schema() {
        return Err(HpcError::Schema(format!(
            "checkpoint schema {:?} does not match task schema {:?}",
            node.state_dims(),
            env.schema()
        )));
    }
    if node.action_dims() != env.action_dims() {
        return Err(HpcError::Schema(format!(
            "checkpoint action dims {:?} do not match task action dims {:?}",
            node.action_dims(),
            env.action_dims()
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

fn cmd_train_primitive(
    task: &str,
    seed: u64,
    out: &Path,
    config: Option<&PathBuf>,
    demos: Option<&PathBuf>,
) -> Result<(), HpcError> {
    let task = TaskId::parse(task)?;
    if task.level() != 1 {
        return Err(HpcError::Argument(format!(
            "'{}' is a level-{} task; use train-meta or baseline-flat",
            task.name(),
            task.level()
        )));
    }
    let run = RunConfig::load(config)?;
    let (task_cfg, sac) = effective_configs(&run, task);
    ensure_dir(out)?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut env = GripperEnv::new(task_cfg.clone());
    let mut eval_env = GripperEnv::new(task_cfg.clone());

    let (init_critics, demo_seed) = match demos {
        Some(path) => {
            if !path.exists() {
                return Err(HpcError::MissingArtifact(format!(
                    "demo file '{}' not found",
                    path.display()
                )));
            }
            let set = load_demos(path)?;
            let mut critics = CriticPair::new(
                set.obs_dim,
                set.act_dim,
                &sac.hidden,
                sac.alpha,
                sac.gamma,
                &mut rng,
            );
            let loss = q_warmstart(&mut critics, &set, 3000, 1e-3, 128, &mut rng)?;
            println!("warmstart regression loss {loss:.6}");
            (Some(critics), Some(set))
        }
        None => (None, None),
    };

    let mut metrics = MetricsWriter::to_file(&out.join("metrics.csv"))?;
    let result = sac_train_primitive(
        &mut env,
        &mut eval_env,
        &sac,
        init_critics,
        demo_seed.as_ref(),
        &mut metrics,
        &mut rng,
    )?;
    metrics.finish()?;
    let ckpt = out.join(format!("{}.ckpt", task.name()));
    save_primitive(&ckpt, &result.policy)?;
    save_critics(&out.join("critics.ckpt"), &result.critics)?;
    write_manifest(
        out,
        "train-primitive",
        seed,
        &config_hash(&task_cfg, &sac),
        serde_json::json!({
            "task": task.name(),
            "warmstarted": demos.is_some(),
            "best_eval_success": result.best_eval_success,
            "best_eval_return": result.best_eval_return,
        }),
    )?;
    println!(
        "trained {} -> {} (best eval success {:.2})",
        task.name(),
        ckpt.display(),
        result.best_eval_success
    );
    Ok(())
}

fn cmd_train_meta(
    hierarchy: &Path,
    seed: u64,
    out: &Path,
    config: Option<&PathBuf>,
) -> Result<(), HpcError> {
    let def = HierarchyDef::from_file(hierarchy)?;
    let task = TaskId::parse(&def.task)?;
    let run = RunConfig::load(config)?;
    let (task_cfg, sac) = effective_configs(&run, task);
    ensure_dir(out)?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut env = GripperEnv::new(task_cfg.clone());
    let mut eval_env = GripperEnv::new(task_cfg.clone());
    let base_dir = hierarchy.parent().unwrap_or_else(|| Path::new("."));
    let compound = def.build(env.schema(), base_dir, &mut rng)?;
    let mut node = HierarchyNode::Compound(compound);

    let mut metrics = MetricsWriter::to_file(&out.join("metrics.csv"))?;
    let result = meta_policy_iteration(
        &mut env,
        &mut eval_env,
        &mut node,
        &sac,
        &mut metrics,
        &mut rng,
    )?;
    metrics.finish()?;
    let ckpt = out.join(format!("{}.ckpt", def.id));
    let HierarchyNode::Compound(trained) = &node else {
        unreachable!()
    };
    save_compound(&ckpt, trained)?;
    // A few interpretability traces of the freshly trained node.
    let mut trace_rng = ChaCha12Rng::seed_from_u64(episode_seed(seed, 777));
    export_traces(&node, &task_cfg, 3, out, &mut trace_rng)?;
    write_manifest(
        out,
        "train-meta",
        seed,
        &config_hash(&task_cfg, &sac),
        serde_json::json!({
            "hierarchy": hierarchy.display().to_string(),
            "task": task.name(),
            "id": def.id,
            "best_eval_success": result.best_eval_success,
            "best_eval_return": result.best_eval_return,
        }),
    )?;
    println!(
        "trained {} -> {} (best eval success {:.2})",
        def.id,
        ckpt.display(),
        result.best_eval_success
    );
    Ok(())
}

fn cmd_collect_demos(
    task: &str,
    episodes: usize,
    seed: u64,
    out: &Path,
    config: Option<&PathBuf>,
) -> Result<(), HpcError> {
    let task = TaskId::parse(task)?;
    let run = RunConfig::load(config)?;
    let (task_cfg, sac) = effective_configs(&run, task);
    ensure_dir(out)?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut env = GripperEnv::new(task_cfg.clone());
    let set = collect_demos(&mut env, episodes, &mut rng)?;
    let path = out.join(format!("demos_{}.bin", task.name()));
    save_demos(&path, &set)?;
    write_manifest(
        out,
        "collect-demos",
        seed,
        &config_hash(&task_cfg, &sac),
        serde_json::json!({
            "task": task.name(),
            "episodes": set.episodes(),
            "transitions": set.transitions.len(),
            "discarded": set.discarded,
        }),
    )?;
    println!(
        "collected {} episodes ({} transitions, {} discarded) -> {}",
        set.episodes(),
        set.transitions.len(),
        set.discarded,
        path.display()
    );
    Ok(())
}

fn cmd_warmstart(
    demos: &Path,
    seed: u64,
    out: &Path,
    config: Option<&PathBuf>,
) -> Result<(), HpcError> {
    if !demos.exists() {
        return Err(HpcError::MissingArtifact(format!(
            "demo file '{}' not found",
            demos.display()
        )));
    }
    let set = load_demos(demos)?;
    let run = RunConfig::load(config)?;
    let (task_cfg, sac) = effective_configs(&run, set.task);
    ensure_dir(out)?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut critics = CriticPair::new(
        set.obs_dim,
        set.act_dim,
        &sac.hidden,
        sac.alpha,
        sac.gamma,
        &mut rng,
    );
    let loss = q_warmstart(&mut critics, &set, 3000, 1e-3, 128, &mut rng)?;
    let path = out.join("critics.ckpt");
    save_critics(&path, &critics)?;
    write_manifest(
        out,
        "warmstart",
        seed,
        &config_hash(&task_cfg, &sac),
        serde_json::json!({
            "demos": demos.display().to_string(),
            "task": set.task.name(),
            "episodes": set.episodes(),
            "final_loss": loss,
        }),
    )?;
    println!("warmstarted critics (loss {loss:.6}) -> {}", path.display());
    Ok(())
}

fn cmd_eval(
    checkpoint: &Path,
    episodes: usize,
    seed: u64,
    out: &Path,
    config: Option<&PathBuf>,
    task_flag: Option<&str>,
    eval_workers: usize,
) -> Result<(), HpcError> {
    if episodes == 0 {
        return Err(HpcError::Argument("eval needs at least one episode".into()));
    }
    if !checkpoint.exists() {
        return Err(HpcError::MissingArtifact(format!(
            "checkpoint '{}' not found",
            checkpoint.display()
        )));
    }
    let node = load_node(checkpoint)?;
    let task = checkpoint_task(&node, task_flag)?;
    let run = RunConfig::load(config)?;
    let (task_cfg, sac) = effective_configs(&run, task);
    let probe = GripperEnv::new(task_cfg.clone());
    check_env_schema(&node, &probe)?;
    ensure_dir(out)?;

    let workers = eval_workers.max(1).min(episodes);
    let mut results: Vec<(f64, bool, usize)> = Vec::with_capacity(episodes);
    if workers == 1 {
        let mut env = GripperEnv::new(task_cfg.clone());
        for e in 0..episodes {
            let mut rng = ChaCha12Rng::seed_from_u64(episode_seed(seed, e));
            results.push(run_episode(&node, &mut env, &mut rng)?);
        }
    } else {
        // Per-episode seeding makes the outcome independent of the split.
        let mut slots: Vec<Option<Result<(f64, bool, usize), HpcError>>> = Vec::new();
        slots.resize_with(episodes, || None);
        let chunk = episodes.div_ceil(workers);
        std::thread::scope(|scope| {
            for (w, part) in slots.chunks_mut(chunk).enumerate() {
                let node = &node;
                let task_cfg = task_cfg.clone();
                scope.spawn(move || {
                    let mut env = GripperEnv::new(task_cfg);
                    for (i, slot) in part.iter_mut().enumerate() {
                        let e = w * chunk + i;
                        let mut rng = ChaCha12Rng::seed_from_u64(episode_seed(seed, e));
                        *slot = Some(run_episode(node, &mut env, &mut rng));
                    }
                });
            }
        });
        for slot in slots {
            results.push(slot.expect("episode slot filled")?);
        }
    }

    let n = results.len() as f64;
    let mean_return = results.iter().map(|r| r.0).sum::<f64>() / n;
    let success_rate = results.iter().filter(|r| r.1).count() as f64 / n;
    let mean_length = results.iter().map(|r| r.2 as f64).sum::<f64>() / n;
    let std_error = if results.len() > 1 {
        let var = results
            .iter()
            .map(|r| (r.0 - mean_return).powi(2))
            .sum::<f64>()
            / (n - 1.0);
        Some((var / n).sqrt())
    } else {
        None
    };
    let report = serde_json::json!({
        "checkpoint": checkpoint.display().to_string(),
        "task": task.name(),
        "episodes": episodes,
        "seed": seed,
        "mean_return": mean_return,
        "std_error": std_error,
        "success_rate": success_rate,
        "mean_length": mean_length,
    });
    let path = out.join("eval_report.json");
    std::fs::write(&path, serde_json::to_string_pretty(&report).unwrap() + "\n")
        .map_err(|e| HpcError::Io(format!("cannot write '{}': {e}", path.display())))?;
    write_manifest(
        out,
        "eval",
        seed,
        &config_hash(&task_cfg, &sac),
        serde_json::json!({ "checkpoint": checkpoint.display().to_string() }),
    )?;
    match std_error {
        Some(se) => println!(
            "return {mean_return:.3} +/- {se:.3}, success {success_rate:.3}, length {mean_length:.1}"
        ),
        None => println!(
            "return {mean_return:.3} +/- n/a, success {success_rate:.3}, length {mean_length:.1}"
        ),
    }
    Ok(())
}

fn cmd_trace(
    checkpoint: &Path,
    episodes: usize,
    seed: u64,
    out: &Path,
    config: Option<&PathBuf>,
    task_flag: Option<&str>,
) -> Result<(), HpcError> {
    if !checkpoint.exists() {
        return Err(HpcError::MissingArtifact(format!(
            "checkpoint '{}' not found",
            checkpoint.display()
        )));
    }
    let node = load_node(checkpoint)?;
    if matches!(node, HierarchyNode::Base(_)) {
        return Err(HpcError::Argument(
            "no intents to trace in a base primitive".into(),
        ));
    }
    let task = checkpoint_task(&node, task_flag)?;
    let run = RunConfig::load(config)?;
    let (task_cfg, sac) = effective_configs(&run, task);
    let probe = GripperEnv::new(task_cfg.clone());
    check_env_schema(&node, &probe)?;
    ensure_dir(out)?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let written = export_traces(&node, &task_cfg, episodes, out, &mut rng)?;
    write_manifest(
        out,
        "trace",
        seed,
        &config_hash(&task_cfg, &sac),
        serde_json::json!({
            "checkpoint": checkpoint.display().to_string(),
            "episodes": episodes,
            "files": written,
        }),
    )?;
    println!("wrote {written} trace episodes to {}", out.display());
    Ok(())
}

/// Runs deterministic episodes and writes per-episode intent CSVs plus one
/// root-intent SVG each. Returns the number of episodes written.
pub fn export_traces(
    node: &HierarchyNode,
    task_cfg: &TaskConfig,
    episodes: usize,
    out: &Path,
    rng: &mut dyn RngCore,
) -> Result<usize, HpcError> {
    let mut env = GripperEnv::new(task_cfg.clone());
    let bounds = env.action_bounds();
    for e in 0..episodes {
        let mut state = env.reset(rng);
        let mut header: Option<Vec<String>> = None;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut root_series: Vec<(String, Vec<f64>)> = Vec::new();
        for t in 0..env.horizon() {
            let dist = node.dist(&state)?;
            if header.is_none() {
                let mut cols = vec!["step".to_string(), "t".to_string()];
                for entry in &dist.trace {
                    for pid in &entry.primitive_ids {
                        cols.push(format!("omega_{}.{}", entry.node_id, pid));
                    }
                    for k in 0..entry.subgoal.len() {
                        cols.push(format!("subgoal_{}.{}", entry.node_id, k));
                    }
                }
                header = Some(cols);
                let root = &dist.trace[0];
                root_series = root
                    .primitive_ids
                    .iter()
                    .map(|pid| (pid.clone(), Vec::new()))
                    .collect();
            }
            let mut row = vec![t as f64, t as f64];
            for entry in &dist.trace {
                row.extend_from_slice(&entry.omega);
                row.extend_from_slice(&entry.subgoal);
            }
            rows.push(row);
            let root = &dist.trace[0];
            for (series, &w) in root_series.iter_mut().zip(&root.omega) {
                series.1.push(w);
            }
            let action = sample_action(&dist.mu, &dist.sigma, &bounds, true, rng);
            let step = env.step(&action)?;
            state = step.observation;
            if step.done {
                break;
            }
        }
        let header = header.ok_or_else(|| HpcError::State("empty trace episode".into()))?;
        let csv_path = out.join(format!("trace_ep{e}.csv"));
        let mut text = header.join(",") + "\n";
        for row in &rows {
            let cells: Vec<String> = row
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    if i < 2 {
                        format!("{}", *v as usize)
                    } else {
                        format!("{v}")
                    }
                })
                .collect();
            text.push_str(&cells.join(","));
            text.push('\n');
        }
        std::fs::write(&csv_path, text)
            .map_err(|e| HpcError::Io(format!("cannot write '{}': {e}", csv_path.display())))?;
        write_line_plot(
            &out.join(format!("trace_ep{e}.svg")),
            &format!("{} intents, episode {e}", node.id()),
            &root_series,
            0.0,
            1.0,
        )?;
    }
    Ok(episodes)
}

fn cmd_baseline_flat(
    task: &str,
    seed: u64,
    out: &Path,
    config: Option<&PathBuf>,
) -> Result<(), HpcError> {
    let task = TaskId::parse(task)?;
    let run = RunConfig::load(config)?;
    let (task_cfg, sac) = effective_configs(&run, task);
    ensure_dir(out)?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut env = GripperEnv::new(task_cfg.clone());
    let mut eval_env = GripperEnv::new(task_cfg.clone());
    let mut metrics = MetricsWriter::to_file(&out.join("metrics.csv"))?;
    let result = sac_train_primitive(
        &mut env,
        &mut eval_env,
        &sac,
        None,
        None,
        &mut metrics,
        &mut rng,
    )?;
    metrics.finish()?;
    let ckpt = out.join(format!("flat_{}.ckpt", task.name()));
    save_primitive(&ckpt, &result.policy)?;
    write_manifest(
        out,
        "baseline-flat",
        seed,
        &config_hash(&task_cfg, &sac),
        serde_json::json!({
            "task": task.name(),
            "best_eval_success": result.best_eval_success,
            "best_eval_return": result.best_eval_return,
        }),
    )?;
    println!(
        "flat baseline on {} -> {} (best eval success {:.2})",
        task.name(),
        ckpt.display(),
        result.best_eval_success
    );
    Ok(())
}
