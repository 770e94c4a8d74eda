use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use super::siever::{sieve, ChildSieve, SieverMap};
use crate::approx::{read_container, write_container, Activation, Mlp, ParamTensor, TensorRecord};
use crate::error::HpcError;
use crate::policy::{
    compose, CompoundSpec, GaussianPrimitive, IntentVector, LogStdHead, MetaPolicy,
    SubgoalSlotSpec, LOG_STD_CLAMP_DEFAULT,
};

/// A level in the hierarchy: either a base Gaussian primitive or a compound
/// with its own meta-policy and children one level down.
#[derive(Debug, Clone)]
pub enum HierarchyNode {
    Base(GaussianPrimitive),
    Compound(CompoundNode),
}

#[derive(Debug, Clone)]
pub struct CompoundNode {
    pub id: String,
    pub level: u32,
    pub state_dims: Vec<String>,
    pub meta: MetaPolicy,
    pub spec: CompoundSpec,
    pub siever: SieverMap,
    pub children: Vec<HierarchyNode>,
    /// Checkpoint paths of the children, as referenced at build time.
    pub child_paths: Vec<String>,
}

/// Per-level intent/subgoal record captured during one distribution pass.
#[derive(Debug, Clone)]
pub struct IntentTraceEntry {
    pub node_id: String,
    pub level: u32,
    pub primitive_ids: Vec<String>,
    pub omega: Vec<f64>,
    pub subgoal: Vec<f64>,
}

/// Pre-squash compound distribution plus the intent trace of every compound
/// level visited (depth-first, root first).
#[derive(Debug, Clone)]
pub struct NodeDist {
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
    pub trace: Vec<IntentTraceEntry>,
}

impl HierarchyNode {
    pub fn id(&self) -> &str {
        match self {
            HierarchyNode::Base(p) => &p.id,
            HierarchyNode::Compound(c) => &c.id,
        }
    }

    pub fn level(&self) -> u32 {
        match self {
            HierarchyNode::Base(p) => p.level,
            HierarchyNode::Compound(c) => c.level,
        }
    }

    pub fn state_dims(&self) -> &[String] {
        match self {
            HierarchyNode::Base(p) => &p.state_dims,
            HierarchyNode::Compound(c) => &c.state_dims,
        }
    }

    pub fn action_dims(&self) -> &[String] {
        match self {
            HierarchyNode::Base(p) => &p.action_dims,
            HierarchyNode::Compound(c) => &c.spec.union_action_dims,
        }
    }

    /// Bottom-up distribution: base nodes report their own Gaussian, compound
    /// nodes run the meta-policy, sieve, recurse and compose.
    pub fn dist(&self, state: &[f64]) -> Result<NodeDist, HpcError> {
        self.dist_with_root_intent(state, None)
    }

    /// Same as `dist` but with the root intent overridden (exploration).
    pub fn dist_with_root_intent(
        &self,
        state: &[f64],
        omega_override: Option<&[f64]>,
    ) -> Result<NodeDist, HpcError> {
        match self {
            HierarchyNode::Base(p) => {
                let (mu, sigma) = p.dist(state)?;
                Ok(NodeDist {
                    mu,
                    sigma,
                    trace: Vec::new(),
                })
            }
            HierarchyNode::Compound(c) => {
                let (omega, flat) = c.meta.forward(state)?;
                let omega = match omega_override {
                    Some(w) => IntentVector::new(w.to_vec())?,
                    None => omega,
                };
                let bundle = c.meta.bundle(&c.spec, &flat);
                let child_states = sieve(&c.siever, state, &bundle)?;
                let mut trace = vec![IntentTraceEntry {
                    node_id: c.id.clone(),
                    level: c.level,
                    primitive_ids: c.children.iter().map(|n| n.id().to_string()).collect(),
                    omega: omega.weights().to_vec(),
                    subgoal: flat.clone(),
                }];
                let mut dists = Vec::with_capacity(c.children.len());
                for (child, cs) in c.children.iter().zip(&child_states) {
                    let d = child.dist(cs)?;
                    trace.extend(d.trace);
                    dists.push((d.mu, d.sigma));
                }
                let (mu, sigma) = compose(&c.spec, &dists, &omega)?;
                Ok(NodeDist { mu, sigma, trace })
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Hierarchy definition files (inputs to meta training)
// ---------------------------------------------------------------------------

fn default_hidden() -> Vec<usize> {
    vec![64, 64]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChildDef {
    pub checkpoint: String,
    #[serde(default)]
    pub subgoal: Option<SubgoalSlotSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HierarchyDef {
    pub id: String,
    pub level: u32,
    pub task: String,
    #[serde(default = "default_hidden")]
    pub meta_hidden: Vec<usize>,
    pub children: Vec<ChildDef>,
}

impl HierarchyDef {
    pub fn from_file(path: &Path) -> Result<Self, HpcError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HpcError::Io(format!("cannot read '{}': {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| {
            HpcError::Format(format!(
                "invalid hierarchy file '{}' at line {}, column {}: {e}",
                path.display(),
                e.line(),
                e.column()
            ))
        })
    }

    /// Loads every child checkpoint and assembles an untrained compound node
    /// over the given environment schema. Child paths are resolved relative
    /// to `base_dir`.
    pub fn build(
        &self,
        env_schema: &[String],
        base_dir: &Path,
        rng: &mut impl Rng,
    ) -> Result<CompoundNode, HpcError> {
        let mut children = Vec::new();
        let mut missing = Vec::new();
        for child in &self.children {
            let path = base_dir.join(&child.checkpoint);
            if !path.exists() {
                missing.push(child.checkpoint.clone());
                continue;
            }
            children.push(load_node(&path)?);
        }
        if !missing.is_empty() {
            return Err(HpcError::MissingArtifact(format!(
                "child checkpoints not found: {}",
                missing.join(", ")
            )));
        }
        let slots: Vec<Option<SubgoalSlotSpec>> =
            self.children.iter().map(|c| c.subgoal.clone()).collect();
        assemble_compound(
            &self.id,
            self.level,
            env_schema.to_vec(),
            children,
            slots,
            &self.meta_hidden,
            self.children.iter().map(|c| c.checkpoint.clone()).collect(),
            rng,
        )
    }
}

/// Validates schema closure, derives the siever by dim-name lookup and
/// initializes a fresh meta-policy.
#[allow(clippy::too_many_arguments)]
pub fn assemble_compound(
    id: &str,
    level: u32,
    state_dims: Vec<String>,
    children: Vec<HierarchyNode>,
    slots: Vec<Option<SubgoalSlotSpec>>,
    meta_hidden: &[usize],
    child_paths: Vec<String>,
    rng: &mut impl Rng,
) -> Result<CompoundNode, HpcError> {
    let action_dims: Vec<Vec<String>> = children.iter().map(|c| c.action_dims().to_vec()).collect();
    let spec = CompoundSpec::from_action_dims(&action_dims, slots)?;
    let siever = derive_siever(&state_dims, &children, &spec)?;
    for (child, lvl) in children.iter().map(|c| (c.id().to_string(), c.level())) {
        if lvl >= level {
            return Err(HpcError::Schema(format!(
                "child '{child}' has level {lvl}, expected below {level}"
            )));
        }
    }
    let meta = MetaPolicy::new(state_dims.len(), children.len(), meta_hidden, &spec, rng);
    Ok(CompoundNode {
        id: id.to_string(),
        level,
        state_dims,
        meta,
        spec,
        siever,
        children,
        child_paths,
    })
}

fn derive_siever(
    parent_dims: &[String],
    children: &[HierarchyNode],
    spec: &CompoundSpec,
) -> Result<SieverMap, HpcError> {
    let mut out = Vec::with_capacity(children.len());
    for (i, child) in children.iter().enumerate() {
        let slot = spec.subgoal_slots[i].as_ref();
        let mut sources = Vec::new();
        let mut subst = Vec::new();
        for (pos, dim) in child.state_dims().iter().enumerate() {
            let parent_idx = parent_dims.iter().position(|d| d == dim);
            let slot_offset = slot.and_then(|s| s.dims.iter().position(|d| d == dim));
            match (parent_idx, slot_offset) {
                (_, Some(offset)) => {
                    sources.push(parent_idx);
                    subst.push((pos, offset));
                }
                (Some(idx), None) => sources.push(Some(idx)),
                (None, None) => {
                    return Err(HpcError::Schema(format!(
                        "state dim '{dim}' of child '{}' is neither in the compound schema nor a subgoal slot",
                        child.id()
                    )));
                }
            }
        }
        if let Some(s) = slot {
            for dim in &s.dims {
                if !child.state_dims().contains(dim) {
                    return Err(HpcError::Schema(format!(
                        "subgoal dim '{dim}' is not a state dim of child '{}'",
                        child.id()
                    )));
                }
            }
            if s.bounds.len() != s.dims.len() {
                return Err(HpcError::Schema(format!(
                    "subgoal slot of child '{}' declares {} bounds for {} dims",
                    child.id(),
                    s.bounds.len(),
                    s.dims.len()
                )));
            }
        }
        out.push(ChildSieve { sources, subst });
    }
    Ok(SieverMap { children: out })
}

/// Sieved states for every child of a compound, given the meta subgoal.
pub fn sieve_compound(
    node: &CompoundNode,
    state: &[f64],
    subgoal_flat: &[f64],
) -> Result<Vec<Vec<f64>>, HpcError> {
    let bundle = node.meta.bundle(&node.spec, subgoal_flat);
    sieve(&node.siever, state, &bundle)
}

// ---------------------------------------------------------------------------
// Checkpoint serialization (HPC1 container + JSON sidecar)
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct Sidecar {
    schema_version: u32,
    kind: String,
    id: String,
    level: u32,
    state_dims: Vec<String>,
    action_dims: Vec<String>,
    cj: Option<Vec<Vec<usize>>>,
    subgoal_slots: Option<Vec<Option<SubgoalSlotSpec>>>,
    bounds: serde_json::Value,
    activation: Activation,
    mean_widths: Option<Vec<usize>>,
    log_std_widths: Option<Vec<usize>>,
    meta_hidden: Option<Vec<usize>>,
    children: Option<Vec<String>>,
}

fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

fn records_of(params: &[&ParamTensor]) -> Vec<TensorRecord> {
    params
        .iter()
        .map(|p| TensorRecord {
            name: p.name.clone(),
            shape: p.shape.clone(),
            values: p.values.clone(),
        })
        .collect()
}

fn restore_params(
    params: &mut [&mut ParamTensor],
    records: &[TensorRecord],
) -> Result<(), HpcError> {
    for p in params.iter_mut() {
        let rec = records.iter().find(|r| r.name == p.name).ok_or_else(|| {
            HpcError::Format(format!("checkpoint is missing tensor '{}'", p.name))
        })?;
        if rec.shape != p.shape {
            return Err(HpcError::Format(format!(
                "tensor '{}' has shape {:?}, expected {:?}",
                p.name, rec.shape, p.shape
            )));
        }
        p.values.copy_from_slice(&rec.values);
    }
    Ok(())
}

pub fn save_primitive(path: &Path, prim: &GaussianPrimitive) -> Result<(), HpcError> {
    write_container(path, &records_of(&prim.params()))?;
    let log_std_widths = match &prim.log_std {
        LogStdHead::Net(net) => Some(net.widths.clone()),
        LogStdHead::PerDim(_) => None,
    };
    let sidecar = Sidecar {
        schema_version: 1,
        kind: "primitive".into(),
        id: prim.id.clone(),
        level: prim.level,
        state_dims: prim.state_dims.clone(),
        action_dims: prim.action_dims.clone(),
        cj: None,
        subgoal_slots: None,
        bounds: serde_json::json!({ "log_std_clamp": [prim.log_std_clamp.0, prim.log_std_clamp.1] }),
        activation: prim.mean_net.activation,
        mean_widths: Some(prim.mean_net.widths.clone()),
        log_std_widths,
        meta_hidden: None,
        children: None,
    };
    write_sidecar(path, &sidecar)
}

pub fn save_compound(path: &Path, node: &CompoundNode) -> Result<(), HpcError> {
    write_container(path, &records_of(&node.meta.params()))?;
    let sidecar = Sidecar {
        schema_version: 1,
        kind: "compound".into(),
        id: node.id.clone(),
        level: node.level,
        state_dims: node.state_dims.clone(),
        action_dims: node.spec.union_action_dims.clone(),
        cj: Some(
            node.spec
                .cj
                .iter()
                .map(|c| c.iter().map(|&(p, _)| p).collect())
                .collect(),
        ),
        subgoal_slots: Some(node.spec.subgoal_slots.clone()),
        bounds: serde_json::json!({ "subgoal": node.meta.subgoal_bounds }),
        activation: node.meta.trunk.activation,
        mean_widths: None,
        log_std_widths: None,
        meta_hidden: Some(node.meta.trunk.widths[1..].to_vec()),
        children: Some(node.child_paths.clone()),
    };
    write_sidecar(path, &sidecar)
}

fn write_sidecar(path: &Path, sidecar: &Sidecar) -> Result<(), HpcError> {
    let text = serde_json::to_string_pretty(sidecar)
        .map_err(|e| HpcError::Format(format!("sidecar serialization failed: {e}")))?;
    std::fs::write(sidecar_path(path), text).map_err(|e| {
        HpcError::Io(format!(
            "cannot write sidecar for '{}': {e}",
            path.display()
        ))
    })
}

fn read_sidecar(path: &Path) -> Result<Sidecar, HpcError> {
    let sc_path = sidecar_path(path);
    let text = std::fs::read_to_string(&sc_path).map_err(|e| {
        HpcError::MissingArtifact(format!("cannot read sidecar '{}': {e}", sc_path.display()))
    })?;
    serde_json::from_str(&text).map_err(|e| {
        HpcError::Format(format!(
            "invalid sidecar '{}' at line {}, column {}: {e}",
            sc_path.display(),
            e.line(),
            e.column()
        ))
    })
}

/// Loads a primitive or compound checkpoint; compounds pull in their children
/// recursively (paths relative to the checkpoint's directory). Loaded
/// primitives are frozen.
pub fn load_node(path: &Path) -> Result<HierarchyNode, HpcError> {
    if !path.exists() {
        return Err(HpcError::MissingArtifact(format!(
            "checkpoint '{}' not found",
            path.display()
        )));
    }
    let sidecar = read_sidecar(path)?;
    let records = read_container(path)?;
    match sidecar.kind.as_str() {
        "primitive" => {
            let mut prim = build_primitive_skeleton(&sidecar)?;
            restore_params(&mut prim.params_mut(), &records)?;
            prim.frozen = true;
            Ok(HierarchyNode::Base(prim))
        }
        "compound" => {
            let dir = path.parent().unwrap_or_else(|| Path::new("."));
            let child_paths = sidecar.children.clone().unwrap_or_default();
            let mut children = Vec::new();
            for child in &child_paths {
                children.push(load_node(&dir.join(child))?);
            }
            let hidden = sidecar
                .meta_hidden
                .clone()
                .ok_or_else(|| HpcError::Format("compound sidecar missing meta_hidden".into()))?;
            let slots = sidecar
                .subgoal_slots
                .clone()
                .ok_or_else(|| HpcError::Format("compound sidecar missing subgoal_slots".into()))?;
            let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(0);
            let mut node = assemble_compound(
                &sidecar.id,
                sidecar.level,
                sidecar.state_dims.clone(),
                children,
                slots,
                &hidden,
                child_paths,
                &mut rng,
            )?;
            restore_params(&mut node.meta.params_mut(), &records)?;
            Ok(HierarchyNode::Compound(node))
        }
        other => Err(HpcError::Format(format!(
            "unknown checkpoint kind '{other}'"
        ))),
    }
}

fn build_primitive_skeleton(sidecar: &Sidecar) -> Result<GaussianPrimitive, HpcError> {
    let mean_widths = sidecar
        .mean_widths
        .clone()
        .ok_or_else(|| HpcError::Format("primitive sidecar missing mean_widths".into()))?;
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(0);
    let mean_net = Mlp::new("mean", &mean_widths, sidecar.activation, 1.0, &mut rng);
    let log_std = match &sidecar.log_std_widths {
        Some(widths) => LogStdHead::Net(Mlp::new(
            "log_std",
            widths,
            sidecar.activation,
            1.0,
            &mut rng,
        )),
        None => LogStdHead::PerDim(ParamTensor::zeros(
            "log_std/per_dim",
            vec![sidecar.action_dims.len()],
        )),
    };
    let clamp = sidecar
        .bounds
        .get("log_std_clamp")
        .and_then(|v| v.as_array())
        .and_then(|a| Some((a.first()?.as_f64()?, a.get(1)?.as_f64()?)))
        .unwrap_or(LOG_STD_CLAMP_DEFAULT);
    Ok(GaussianPrimitive {
        id: sidecar.id.clone(),
        level: sidecar.level,
        state_dims: sidecar.state_dims.clone(),
        action_dims: sidecar.action_dims.clone(),
        mean_net,
        log_std,
        log_std_clamp: clamp,
        frozen: false,
    })
}
