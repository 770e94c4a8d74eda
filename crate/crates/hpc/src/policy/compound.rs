use serde::{Deserialize, Serialize};

use super::intent::IntentVector;
use crate::error::HpcError;

/// Fallback std for a union dim whose covering intents sum to ~0. The softmax
/// simplex map makes exact zeros unreachable, so this is a numerical guard.
pub const ZERO_COVERAGE_SIGMA: f64 = 0.05;
const ZERO_COVERAGE_TOL: f64 = 1e-12;

/// Declared width and bounds of one primitive's subgoal slot.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubgoalSlotSpec {
    /// Named state dims of the child that the subgoal overwrites.
    pub dims: Vec<String>,
    /// Per-dimension (lo, hi) bounds of the emitted subgoal.
    pub bounds: Vec<(f64, f64)>,
}

impl SubgoalSlotSpec {
    pub fn width(&self) -> usize {
        self.dims.len()
    }
}

/// Wiring of one compound level: union action dims, per-dimension coverage
/// sets and the local action index of each covering primitive.
#[derive(Debug, Clone)]
pub struct CompoundSpec {
    pub union_action_dims: Vec<String>,
    /// cj[j] lists (primitive index, local action index of union dim j).
    pub cj: Vec<Vec<(usize, usize)>>,
    pub n_primitives: usize,
    /// One entry per primitive; `None` for primitives without a slot.
    pub subgoal_slots: Vec<Option<SubgoalSlotSpec>>,
}

impl CompoundSpec {
    /// Builds the union action space and coverage sets from the per-primitive
    /// action dim name lists, in first-occurrence order.
    pub fn from_action_dims(
        per_primitive_action_dims: &[Vec<String>],
        subgoal_slots: Vec<Option<SubgoalSlotSpec>>,
    ) -> Result<Self, HpcError> {
        let n_primitives = per_primitive_action_dims.len();
        if subgoal_slots.len() != n_primitives {
            return Err(HpcError::Argument(format!(
                "{} subgoal slots for {} primitives",
                subgoal_slots.len(),
                n_primitives
            )));
        }
        let mut union: Vec<String> = Vec::new();
        for dims in per_primitive_action_dims {
            for d in dims {
                if !union.contains(d) {
                    union.push(d.clone());
                }
            }
        }
        let cj = union
            .iter()
            .map(|d| {
                per_primitive_action_dims
                    .iter()
                    .enumerate()
                    .filter_map(|(p, dims)| {
                        dims.iter().position(|x| x == d).map(|local| (p, local))
                    })
                    .collect::<Vec<_>>()
            })
            .collect::<Vec<_>>();
        if cj.iter().any(|c| c.is_empty()) {
            return Err(HpcError::Schema(
                "a union action dim has an empty coverage set".into(),
            ));
        }
        Ok(Self {
            union_action_dims: union,
            cj,
            n_primitives,
            subgoal_slots,
        })
    }

    pub fn subgoal_width(&self) -> usize {
        self.subgoal_slots.iter().flatten().map(|s| s.width()).sum()
    }
}

/// Closed-form parameters of the multiplicative composition. For each union
/// dim j, with all sums restricted to the covering set C_j:
///   sigma_j^2 = (sum_{c in C_j} w_c) / (sum_{p in C_j} w_p / sigma_pj^2)
///   mu_j      = sigma_j^2 * sum_{i in C_j} (w_i / sigma_ij^2) * mu_ij
pub fn compose(
    spec: &CompoundSpec,
    dists: &[(Vec<f64>, Vec<f64>)],
    omega: &IntentVector,
) -> Result<(Vec<f64>, Vec<f64>), HpcError> {
    if dists.len() != spec.n_primitives {
        return Err(HpcError::Dimension(format!(
            "{} primitive distributions for {} primitives",
            dists.len(),
            spec.n_primitives
        )));
    }
    if omega.len() != spec.n_primitives {
        return Err(HpcError::Dimension(format!(
            "intent width {} does not match {} primitives",
            omega.len(),
            spec.n_primitives
        )));
    }
    let w = omega.weights();
    let n_dims = spec.union_action_dims.len();
    let mut mu = Vec::with_capacity(n_dims);
    let mut sigma = Vec::with_capacity(n_dims);
    for cov in &spec.cj {
        let mut w_sum = 0.0;
        let mut precision = 0.0;
        let mut weighted_mean = 0.0;
        for &(p, local) in cov {
            let (mu_p, sigma_p) = &dists[p];
            let s = sigma_p[local];
            if s <= 0.0 {
                return Err(HpcError::Domain(format!(
                    "non-positive sigma {s} in primitive {p}"
                )));
            }
            let inv_var = w[p] / (s * s);
            w_sum += w[p];
            precision += inv_var;
            weighted_mean += inv_var * mu_p[local];
        }
        if w_sum <= ZERO_COVERAGE_TOL {
            mu.push(0.0);
            sigma.push(ZERO_COVERAGE_SIGMA);
            continue;
        }
        let var = w_sum / precision;
        mu.push(var * weighted_mean);
        sigma.push(var.sqrt());
    }
    Ok((mu, sigma))
}
