use rand::Rng;

use super::compound::CompoundSpec;
use super::intent::IntentVector;
use super::SubgoalBundle;
use crate::approx::{Activation, Mlp, MlpCache, ParamTensor};
use crate::error::HpcError;

/// Deterministic map from state to intents (softmax simplex) and subgoals
/// (tanh squashed into their declared bounds).
#[derive(Debug, Clone)]
pub struct MetaPolicy {
    pub trunk: Mlp,
    pub intent_head: Mlp,
    pub subgoal_head: Option<Mlp>,
    /// Flat per-dimension bounds of the concatenated subgoal output.
    pub subgoal_bounds: Vec<(f64, f64)>,
}

/// Tapes and intermediate values from one meta forward pass.
pub struct MetaCache {
    trunk: MlpCache,
    intent: MlpCache,
    subgoal: Option<MlpCache>,
    pub omega: Vec<f64>,
    pub subgoal_flat: Vec<f64>,
}

impl MetaPolicy {
    pub fn new(
        state_width: usize,
        n_primitives: usize,
        hidden: &[usize],
        spec: &CompoundSpec,
        rng: &mut impl Rng,
    ) -> Self {
        assert!(
            !hidden.is_empty(),
            "meta-policy trunk needs at least one hidden layer"
        );
        let mut trunk_widths = vec![state_width];
        trunk_widths.extend_from_slice(hidden);
        let trunk = Mlp::new("meta/trunk", &trunk_widths, Activation::Tanh, 1.0, rng);
        let h = *hidden.last().unwrap();
        // Final heads scaled down for near-uniform initial intents.
        let intent_head = Mlp::new(
            "meta/intent",
            &[h, n_primitives],
            Activation::Tanh,
            0.01,
            rng,
        );
        let sg_width = spec.subgoal_width();
        let (subgoal_head, subgoal_bounds) = if sg_width > 0 {
            let head = Mlp::new("meta/subgoal", &[h, sg_width], Activation::Tanh, 0.01, rng);
            let bounds = spec
                .subgoal_slots
                .iter()
                .flatten()
                .flat_map(|s| s.bounds.iter().copied())
                .collect();
            (Some(head), bounds)
        } else {
            (None, Vec::new())
        };
        Self {
            trunk,
            intent_head,
            subgoal_head,
            subgoal_bounds,
        }
    }

    pub fn n_primitives(&self) -> usize {
        self.intent_head.output_width()
    }

    /// Splits the flat subgoal output into the per-primitive bundle.
    pub fn bundle(&self, spec: &CompoundSpec, flat: &[f64]) -> SubgoalBundle {
        let mut per_primitive = Vec::with_capacity(spec.subgoal_slots.len());
        let mut offset = 0;
        for slot in &spec.subgoal_slots {
            match slot {
                Some(s) => {
                    per_primitive.push(Some(flat[offset..offset + s.width()].to_vec()));
                    offset += s.width();
                }
                None => per_primitive.push(None),
            }
        }
        SubgoalBundle { per_primitive }
    }

    pub fn forward(&self, state: &[f64]) -> Result<(IntentVector, Vec<f64>), HpcError> {
        let cache = self.forward_cached(state)?;
        Ok((IntentVector::new(cache.omega.clone())?, cache.subgoal_flat))
    }

    pub fn forward_cached(&self, state: &[f64]) -> Result<MetaCache, HpcError> {
        let trunk = self.trunk.forward_cached(state)?;
        let h: Vec<f64> = trunk.output().iter().map(|v| v.tanh()).collect();
        let intent = self.intent_head.forward_cached(&h)?;
        let omega = softmax(intent.output());
        let (subgoal, subgoal_flat) = match &self.subgoal_head {
            Some(head) => {
                let cache = head.forward_cached(&h)?;
                let flat = cache
                    .output()
                    .iter()
                    .zip(&self.subgoal_bounds)
                    .map(|(&raw, &(lo, hi))| 0.5 * (lo + hi) + 0.5 * (hi - lo) * raw.tanh())
                    .collect();
                (Some(cache), flat)
            }
            None => (None, Vec::new()),
        };
        Ok(MetaCache {
            trunk,
            intent,
            subgoal,
            omega,
            subgoal_flat,
        })
    }

    /// Backpropagates dL/d(omega) and dL/d(subgoal) through the simplex map,
    /// the bound squash and both heads into the trunk parameters.
    pub fn backward(
        &mut self,
        cache: &MetaCache,
        d_omega: &[f64],
        d_subgoal: &[f64],
    ) -> Result<(), HpcError> {
        // Softmax Jacobian: dlogits_k = w_k * (d_k - sum_j d_j w_j).
        let dot: f64 = d_omega.iter().zip(&cache.omega).map(|(d, w)| d * w).sum();
        let d_logits: Vec<f64> = cache
            .omega
            .iter()
            .zip(d_omega)
            .map(|(&w, &d)| w * (d - dot))
            .collect();
        let mut d_h = self.intent_head.backward(&cache.intent, &d_logits)?;
        if let (Some(head), Some(sg_cache)) = (&mut self.subgoal_head, &cache.subgoal) {
            let d_raw: Vec<f64> = sg_cache
                .output()
                .iter()
                .zip(&self.subgoal_bounds)
                .zip(d_subgoal)
                .map(|((&raw, &(lo, hi)), &d)| {
                    let t = raw.tanh();
                    d * 0.5 * (hi - lo) * (1.0 - t * t)
                })
                .collect();
            let d_h_sg = head.backward(sg_cache, &d_raw)?;
            for (a, b) in d_h.iter_mut().zip(&d_h_sg) {
                *a += b;
            }
        }
        // Through the tanh on the trunk output.
        let d_trunk_out: Vec<f64> = cache
            .trunk
            .output()
            .iter()
            .zip(&d_h)
            .map(|(&z, &d)| {
                let t = z.tanh();
                d * (1.0 - t * t)
            })
            .collect();
        self.trunk.backward(&cache.trunk, &d_trunk_out)?;
        Ok(())
    }

    pub fn params(&self) -> Vec<&ParamTensor> {
        let mut out = self.trunk.params();
        out.extend(self.intent_head.params());
        if let Some(h) = &self.subgoal_head {
            out.extend(h.params());
        }
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut ParamTensor> {
        let mut out = self.trunk.params_mut();
        out.extend(self.intent_head.params_mut());
        if let Some(h) = &mut self.subgoal_head {
            out.extend(h.params_mut());
        }
        out
    }

    pub fn zero_grad(&mut self) {
        for p in self.params_mut() {
            p.zero_grad();
        }
    }
}

pub(crate) fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::SubgoalSlotSpec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn spec_with_slot() -> CompoundSpec {
        let dims = vec![
            vec!["dx".to_string()],
            vec!["dx".to_string(), "dg".to_string()],
        ];
        let slot = SubgoalSlotSpec {
            dims: vec!["tx".to_string(), "ty".to_string()],
            bounds: vec![(-1.0, 1.0), (-2.0, 0.0)],
        };
        CompoundSpec::from_action_dims(&dims, vec![None, Some(slot)]).unwrap()
    }

    #[test]
    fn softmax_of_equal_logits_is_uniform() {
        let w = softmax(&[0.3, 0.3, 0.3, 0.3]);
        for wi in w {
            assert!((wi - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn softmax_arithmetic() {
        let w = softmax(&[3.0f64.ln(), 0.0]);
        assert!((w[0] - 0.75).abs() < 1e-12);
        assert!((w[1] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn zero_heads_give_uniform_intents_and_centered_subgoals() {
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        let spec = spec_with_slot();
        let mut meta = MetaPolicy::new(3, 2, &[4], &spec, &mut rng);
        for p in meta.intent_head.params_mut() {
            p.values.iter_mut().for_each(|v| *v = 0.0);
        }
        for p in meta.subgoal_head.as_mut().unwrap().params_mut() {
            p.values.iter_mut().for_each(|v| *v = 0.0);
        }
        let (omega, sg) = meta.forward(&[0.2, -0.4, 0.9]).unwrap();
        assert!((omega.weights()[0] - 0.5).abs() < 1e-12);
        // tanh(0) = 0 maps to each slot's midpoint.
        assert_eq!(sg, vec![0.0, -1.0]);
    }

    #[test]
    fn forward_always_lands_on_the_simplex() {
        use proptest::prelude::*;
        let spec = spec_with_slot();
        proptest!(|(seed in 0u64..50, state in proptest::collection::vec(-5.0f64..5.0, 3))| {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let meta = MetaPolicy::new(3, 2, &[6, 4], &spec, &mut rng);
            let (omega, sg) = meta.forward(&state).unwrap();
            let sum: f64 = omega.weights().iter().sum();
            prop_assert!((sum - 1.0).abs() <= 1e-9);
            prop_assert!(omega.weights().iter().all(|&w| w >= 0.0));
            for (v, (lo, hi)) in sg.iter().zip(&meta.subgoal_bounds) {
                prop_assert!(*v >= *lo && *v <= *hi);
            }
        });
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let spec = spec_with_slot();
        let mut meta = MetaPolicy::new(3, 2, &[4], &spec, &mut rng);
        let state = [0.4, -0.1, 0.8];
        // Loss = sum(c_i * omega_i) + sum(d_k * g_k) with fixed coefficients.
        let c = [0.7, -0.3];
        let d = [0.2, -0.9];
        let loss = |m: &MetaPolicy| {
            let (omega, sg) = m.forward(&state).unwrap();
            omega
                .weights()
                .iter()
                .zip(&c)
                .map(|(w, ci)| w * ci)
                .sum::<f64>()
                + sg.iter().zip(&d).map(|(g, di)| g * di).sum::<f64>()
        };
        let cache = meta.forward_cached(&state).unwrap();
        meta.zero_grad();
        meta.backward(&cache, &c, &d).unwrap();
        let grads: Vec<Vec<f64>> = meta.params().iter().map(|p| p.grad.clone()).collect();
        let h = 1e-5;
        for k in 0..grads.len() {
            for i in 0..grads[k].len() {
                let orig = meta.params()[k].values[i];
                meta.params_mut()[k].values[i] = orig + h;
                let up = loss(&meta);
                meta.params_mut()[k].values[i] = orig - h;
                let down = loss(&meta);
                meta.params_mut()[k].values[i] = orig;
                let fd = (up - down) / (2.0 * h);
                let g = grads[k][i];
                let denom = g.abs().max(fd.abs()).max(1e-6);
                assert!(
                    ((g - fd) / denom).abs() <= 1e-4,
                    "tensor {k} idx {i}: {g} vs {fd}"
                );
            }
        }
    }
}
