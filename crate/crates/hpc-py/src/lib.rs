//! Python bindings for the hierarchical policy composition engine: the
//! closed-form Gaussian composition, the gripper world, and saved policy
//! checkpoints (primitive or compound).

use std::path::Path;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use hpc::error::HpcError;
use hpc::gripperworld::{GripperEnv, TaskConfig, TaskId};
use hpc::mdp::{load_node, Env, HierarchyNode};
use hpc::policy::{
    compose as compose_rs, intent_entropy as intent_entropy_rs, sample_action, CompoundSpec,
    IntentVector,
};

fn err(e: HpcError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Closed-form parameters of the intent-weighted product of diagonal
/// Gaussians. Returns (union action dims, mean, std).
#[pyfunction]
fn compose(
    action_dims: Vec<Vec<String>>,
    mus: Vec<Vec<f64>>,
    sigmas: Vec<Vec<f64>>,
    omega: Vec<f64>,
) -> PyResult<(Vec<String>, Vec<f64>, Vec<f64>)> {
    let n = action_dims.len();
    let spec = CompoundSpec::from_action_dims(&action_dims, vec![None; n]).map_err(err)?;
    if mus.len() != n || sigmas.len() != n {
        return Err(PyValueError::new_err(
            "one (mu, sigma) pair per primitive required",
        ));
    }
    let dists: Vec<(Vec<f64>, Vec<f64>)> = mus.into_iter().zip(sigmas).collect();
    let w = IntentVector::new(omega).map_err(err)?;
    let (mu, sigma) = compose_rs(&spec, &dists, &w).map_err(err)?;
    Ok((spec.union_action_dims, mu, sigma))
}

/// Entropy of the categorical distribution given by the intent weights.
#[pyfunction]
fn intent_entropy(omega: Vec<f64>) -> PyResult<f64> {
    let w = IntentVector::new(omega).map_err(err)?;
    Ok(intent_entropy_rs(&w))
}

/// The 2-D gripper world. Tasks: reach, grasp, release, pick, place,
/// pick-and-place.
#[pyclass]
struct GripperWorld {
    env: GripperEnv,
    rng: ChaCha12Rng,
}

#[pymethods]
impl GripperWorld {
    #[new]
    fn new(task: &str, seed: u64) -> PyResult<Self> {
        let task = TaskId::parse(task).map_err(err)?;
        Ok(Self {
            env: GripperEnv::new(TaskConfig::defaults(task)),
            rng: ChaCha12Rng::seed_from_u64(seed),
        })
    }

    fn reset(&mut self) -> Vec<f64> {
        self.env.reset(&mut self.rng)
    }

    /// Returns (observation, reward, done, success).
    fn step(&mut self, action: Vec<f64>) -> PyResult<(Vec<f64>, f64, bool, bool)> {
        let s = self.env.step(&action).map_err(err)?;
        let success = s.success();
        Ok((s.observation, s.reward, s.done, success))
    }

    fn schema(&self) -> Vec<String> {
        self.env.schema().to_vec()
    }

    fn action_dims(&self) -> Vec<String> {
        self.env.action_dims().to_vec()
    }

    fn horizon(&self) -> usize {
        self.env.horizon()
    }
}

/// A saved policy checkpoint: either a Gaussian primitive or a compound node
/// with its full subtree.
#[pyclass]
struct Policy {
    node: HierarchyNode,
    rng: ChaCha12Rng,
}

#[pymethods]
impl Policy {
    #[staticmethod]
    fn load(path: &str, seed: u64) -> PyResult<Self> {
        Ok(Self {
            node: load_node(Path::new(path)).map_err(err)?,
            rng: ChaCha12Rng::seed_from_u64(seed),
        })
    }

    fn id(&self) -> String {
        self.node.id().to_string()
    }

    /// Pre-squash (mean, std) of the composed action distribution.
    fn dist(&self, state: Vec<f64>) -> PyResult<(Vec<f64>, Vec<f64>)> {
        let d = self.node.dist(&state).map_err(err)?;
        Ok((d.mu, d.sigma))
    }

    /// Squashed action in [-1, 1]; stochastic unless `deterministic`.
    fn act(&mut self, state: Vec<f64>, deterministic: bool) -> PyResult<Vec<f64>> {
        let d = self.node.dist(&state).map_err(err)?;
        let bounds = vec![(-1.0, 1.0); d.mu.len()];
        Ok(sample_action(
            &d.mu,
            &d.sigma,
            &bounds,
            deterministic,
            &mut self.rng,
        ))
    }

    /// Intent weights of every compound level for this state, root first:
    /// a list of (node id, child ids, weights).
    fn intents(&self, state: Vec<f64>) -> PyResult<Vec<(String, Vec<String>, Vec<f64>)>> {
        let d = self.node.dist(&state).map_err(err)?;
        Ok(d.trace
            .into_iter()
            .map(|t| (t.node_id, t.primitive_ids, t.omega))
            .collect())
    }
}

/// Scripted controller action for a level-1 task state.
#[pyfunction]
fn expert_action(task: &str, world: &GripperWorld) -> PyResult<Vec<f64>> {
    let task = TaskId::parse(task).map_err(err)?;
    hpc::gripperworld::scripted_expert(task, world.env.state()).map_err(err)
}

#[pymodule]
fn hpc_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(compose, m)?)?;
    m.add_function(wrap_pyfunction!(intent_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(expert_action, m)?)?;
    m.add_class::<GripperWorld>()?;
    m.add_class::<Policy>()?;
    Ok(())
}
