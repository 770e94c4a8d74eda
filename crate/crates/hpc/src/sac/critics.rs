use std::path::Path;

use rand::Rng;

use crate::approx::{read_container, write_container, Activation, Mlp, ParamTensor, TensorRecord};
use crate::error::HpcError;

/// Double soft-Q plus soft-V with its target copy. For the meta-MDP the
/// "action" input is the concatenated intent and subgoal.
#[derive(Debug, Clone)]
pub struct CriticPair {
    pub q1: Mlp,
    pub q2: Mlp,
    pub v: Mlp,
    pub v_target: Mlp,
    pub alpha: f64,
    pub gamma: f64,
}

impl CriticPair {
    pub fn new(
        state_width: usize,
        action_width: usize,
        hidden: &[usize],
        alpha: f64,
        gamma: f64,
        rng: &mut impl Rng,
    ) -> Self {
        assert!(alpha >= 0.0, "temperature must be nonnegative");
        assert!(gamma > 0.0 && gamma < 1.0, "discount must be in (0,1)");
        let mut q_widths = vec![state_width + action_width];
        q_widths.extend_from_slice(hidden);
        q_widths.push(1);
        let mut v_widths = vec![state_width];
        v_widths.extend_from_slice(hidden);
        v_widths.push(1);
        let q1 = Mlp::new("q1", &q_widths, Activation::Tanh, 1.0, rng);
        let q2 = Mlp::new("q2", &q_widths, Activation::Tanh, 1.0, rng);
        let v = Mlp::new("v", &v_widths, Activation::Tanh, 1.0, rng);
        let mut v_target = v.clone();
        for p in v_target.params_mut() {
            p.name = p.name.replace("v/", "v_target/");
        }
        Self {
            q1,
            q2,
            v,
            v_target,
            alpha,
            gamma,
        }
    }

    pub fn min_q(&self, input: &[f64]) -> Result<f64, HpcError> {
        let a = self.q1.forward(input)?[0];
        let b = self.q2.forward(input)?[0];
        Ok(a.min(b))
    }

    pub fn zero_grads(&mut self) {
        self.q1.zero_grad();
        self.q2.zero_grad();
        self.v.zero_grad();
    }

    pub fn all_params(&self) -> Vec<&ParamTensor> {
        let mut out = self.q1.params();
        out.extend(self.q2.params());
        out.extend(self.v.params());
        out.extend(self.v_target.params());
        out
    }
}

pub fn save_critics(path: &Path, critics: &CriticPair) -> Result<(), HpcError> {
    let records: Vec<TensorRecord> = critics
        .all_params()
        .iter()
        .map(|p| TensorRecord {
            name: p.name.clone(),
            shape: p.shape.clone(),
            values: p.values.clone(),
        })
        .collect();
    write_container(path, &records)
}

/// Restores critic weights from a container into an already-shaped pair.
pub fn load_critics(path: &Path, critics: &mut CriticPair) -> Result<(), HpcError> {
    let records = read_container(path)?;
    let mut params = critics.q1.params_mut();
    params.extend(critics.q2.params_mut());
    params.extend(critics.v.params_mut());
    params.extend(critics.v_target.params_mut());
    for p in params.iter_mut() {
        let rec = records.iter().find(|r| r.name == p.name).ok_or_else(|| {
            HpcError::Format(format!("critic checkpoint is missing tensor '{}'", p.name))
        })?;
        if rec.shape != p.shape {
            return Err(HpcError::Schema(format!(
                "critic tensor '{}' has shape {:?}, expected {:?}",
                p.name, rec.shape, p.shape
            )));
        }
        p.values.copy_from_slice(&rec.values);
    }
    Ok(())
}
