use std::path::Path;

use rand::RngCore;

use crate::approx::{read_container, write_container, TensorRecord};
use crate::error::HpcError;
use crate::gripperworld::{scripted_expert, GripperEnv, TaskId};
use crate::mdp::Env;

#[derive(Debug, Clone)]
pub struct DemoTransition {
    pub state: Vec<f64>,
    pub action: Vec<f64>,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub done: bool,
}

/// Expert trajectories for warmstarting; only successful episodes are kept.
#[derive(Debug, Clone)]
pub struct DemoSet {
    pub task: TaskId,
    pub obs_dim: usize,
    pub act_dim: usize,
    pub transitions: Vec<DemoTransition>,
    /// Start index of each episode within `transitions`.
    pub episode_starts: Vec<usize>,
    /// Episodes attempted but discarded as failures.
    pub discarded: usize,
}

impl DemoSet {
    pub fn episodes(&self) -> usize {
        self.episode_starts.len()
    }

    pub fn episode_range(&self, e: usize) -> std::ops::Range<usize> {
        let start = self.episode_starts[e];
        let end = self
            .episode_starts
            .get(e + 1)
            .copied()
            .unwrap_or(self.transitions.len());
        start..end
    }
}

/// Runs the scripted expert until `episodes` successful episodes are stored.
pub fn collect_demos(
    env: &mut GripperEnv,
    episodes: usize,
    rng: &mut dyn RngCore,
) -> Result<DemoSet, HpcError> {
    if episodes == 0 {
        return Err(HpcError::Argument("empty demo sets are rejected".into()));
    }
    let task = env.cfg.task;
    let obs_dim = env.schema().len();
    let act_dim = env.action_dims().len();
    let mut set = DemoSet {
        task,
        obs_dim,
        act_dim,
        transitions: Vec::new(),
        episode_starts: Vec::new(),
        discarded: 0,
    };
    let mut attempts = 0;
    while set.episode_starts.len() < episodes {
        attempts += 1;
        if attempts > episodes * 20 {
            return Err(HpcError::State(format!(
                "expert failed too often on '{}' ({} successes of {} attempts)",
                task.name(),
                set.episode_starts.len(),
                attempts
            )));
        }
        let mut state = env.reset(rng);
        let mut episode = Vec::new();
        let mut success = false;
        for _ in 0..env.horizon() {
            let action = scripted_expert(task, env.state())?;
            let step = env.step(&action)?;
            episode.push(DemoTransition {
                state,
                action,
                reward: step.reward,
                next_state: step.observation.clone(),
                done: step.done,
            });
            success = success || step.success();
            state = step.observation;
            if step.done {
                break;
            }
        }
        if success {
            set.episode_starts.push(set.transitions.len());
            set.transitions.extend(episode);
        } else {
            set.discarded += 1;
        }
    }
    Ok(set)
}

pub fn save_demos(path: &Path, set: &DemoSet) -> Result<(), HpcError> {
    let n = set.transitions.len();
    let flat = |f: &dyn Fn(&DemoTransition) -> Vec<f64>| -> Vec<f64> {
        set.transitions.iter().flat_map(|t| f(t)).collect()
    };
    let records = vec![
        TensorRecord {
            name: "DEMO/meta".into(),
            shape: vec![4],
            values: vec![
                set.task.level() as f64,
                set.obs_dim as f64,
                set.act_dim as f64,
                set.discarded as f64,
            ],
        },
        TensorRecord {
            name: format!("DEMO/task/{}", set.task.name()),
            shape: vec![0],
            values: vec![],
        },
        TensorRecord {
            name: "DEMO/states".into(),
            shape: vec![n, set.obs_dim],
            values: flat(&|t| t.state.clone()),
        },
        TensorRecord {
            name: "DEMO/actions".into(),
            shape: vec![n, set.act_dim],
            values: flat(&|t| t.action.clone()),
        },
        TensorRecord {
            name: "DEMO/rewards".into(),
            shape: vec![n],
            values: set.transitions.iter().map(|t| t.reward).collect(),
        },
        TensorRecord {
            name: "DEMO/next_states".into(),
            shape: vec![n, set.obs_dim],
            values: flat(&|t| t.next_state.clone()),
        },
        TensorRecord {
            name: "DEMO/dones".into(),
            shape: vec![n],
            values: set
                .transitions
                .iter()
                .map(|t| if t.done { 1.0 } else { 0.0 })
                .collect(),
        },
        TensorRecord {
            name: "DEMO/episode_starts".into(),
            shape: vec![set.episode_starts.len()],
            values: set.episode_starts.iter().map(|&s| s as f64).collect(),
        },
    ];
    write_container(path, &records)
}

pub fn load_demos(path: &Path) -> Result<DemoSet, HpcError> {
    let records = read_container(path)?;
    let find = |name: &str| -> Result<&TensorRecord, HpcError> {
        records
            .iter()
            .find(|r| r.name == name)
            .ok_or_else(|| HpcError::Format(format!("demo file is missing record '{name}'")))
    };
    let task_name = records
        .iter()
        .find_map(|r| r.name.strip_prefix("DEMO/task/"))
        .ok_or_else(|| HpcError::Format("demo file is missing the task record".into()))?;
    let task = TaskId::parse(task_name)?;
    let meta = find("DEMO/meta")?;
    let (obs_dim, act_dim) = (meta.values[1] as usize, meta.values[2] as usize);
    let discarded = meta.values[3] as usize;
    let states = find("DEMO/states")?;
    let actions = find("DEMO/actions")?;
    let rewards = find("DEMO/rewards")?;
    let next_states = find("DEMO/next_states")?;
    let dones = find("DEMO/dones")?;
    let starts = find("DEMO/episode_starts")?;
    let n = rewards.values.len();
    let mut transitions = Vec::with_capacity(n);
    for i in 0..n {
        transitions.push(DemoTransition {
            state: states.values[i * obs_dim..(i + 1) * obs_dim].to_vec(),
            action: actions.values[i * act_dim..(i + 1) * act_dim].to_vec(),
            reward: rewards.values[i],
            next_state: next_states.values[i * obs_dim..(i + 1) * obs_dim].to_vec(),
            done: dones.values[i] > 0.5,
        });
    }
    Ok(DemoSet {
        task,
        obs_dim,
        act_dim,
        transitions,
        episode_starts: starts.values.iter().map(|&v| v as usize).collect(),
        discarded,
    })
}
