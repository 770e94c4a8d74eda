use crate::approx::{Mlp, ParamTensor};
use crate::error::HpcError;

pub const LOG_STD_CLAMP_DEFAULT: (f64, f64) = (-5.0, 2.0);
/// Floor applied after exp-clamp, guarding the precision sums in composition.
pub const SIGMA_FLOOR: f64 = 1e-3;

/// State-dependent or constant per-dimension log standard deviation.
#[derive(Debug, Clone)]
pub enum LogStdHead {
    Net(Mlp),
    PerDim(ParamTensor),
}

/// A diagonal-Gaussian policy over a named subset of state/action dimensions.
#[derive(Debug, Clone)]
pub struct GaussianPrimitive {
    pub id: String,
    pub level: u32,
    pub state_dims: Vec<String>,
    pub action_dims: Vec<String>,
    pub mean_net: Mlp,
    pub log_std: LogStdHead,
    pub log_std_clamp: (f64, f64),
    pub frozen: bool,
}

impl GaussianPrimitive {
    /// Pre-squash mean and standard deviation for one state.
    pub fn dist(&self, state: &[f64]) -> Result<(Vec<f64>, Vec<f64>), HpcError> {
        if state.len() != self.state_dims.len() {
            return Err(HpcError::Dimension(format!(
                "primitive '{}' expects {} state dims, got {}",
                self.id,
                self.state_dims.len(),
                state.len()
            )));
        }
        let mu = self.mean_net.forward(state)?;
        let log_std_raw = match &self.log_std {
            LogStdHead::Net(net) => net.forward(state)?,
            LogStdHead::PerDim(t) => t.values.clone(),
        };
        if log_std_raw.len() != self.action_dims.len() {
            return Err(HpcError::Dimension(format!(
                "primitive '{}' log-std width {} does not match {} action dims",
                self.id,
                log_std_raw.len(),
                self.action_dims.len()
            )));
        }
        let (lo, hi) = self.log_std_clamp;
        let sigma = log_std_raw
            .iter()
            .map(|&ls| ls.clamp(lo, hi).exp().max(SIGMA_FLOOR))
            .collect();
        Ok((mu, sigma))
    }

    pub fn params(&self) -> Vec<&ParamTensor> {
        let mut out = self.mean_net.params();
        match &self.log_std {
            LogStdHead::Net(net) => out.extend(net.params()),
            LogStdHead::PerDim(t) => out.push(t),
        }
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut ParamTensor> {
        let mut out = self.mean_net.params_mut();
        match &mut self.log_std {
            LogStdHead::Net(net) => out.extend(net.params_mut()),
            LogStdHead::PerDim(t) => out.push(t),
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approx::Activation;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn constant_primitive(mu: f64, log_std: f64) -> GaussianPrimitive {
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        let mut mean_net = Mlp::new("p/mean", &[1, 1], Activation::Tanh, 1.0, &mut rng);
        mean_net.weights[0].values = vec![0.0];
        mean_net.biases[0].values = vec![mu];
        GaussianPrimitive {
            id: "p".into(),
            level: 1,
            state_dims: vec!["x".into()],
            action_dims: vec!["a".into()],
            mean_net,
            log_std: LogStdHead::PerDim(ParamTensor::new("p/ls", vec![1], vec![log_std])),
            log_std_clamp: LOG_STD_CLAMP_DEFAULT,
            frozen: true,
        }
    }

    #[test]
    fn constant_heads_give_constant_dist() {
        let p = constant_primitive(0.3, -1.0);
        for state in [[0.0], [5.0], [-2.5]] {
            let (mu, sigma) = p.dist(&state).unwrap();
            assert_eq!(mu, vec![0.3]);
            assert!((sigma[0] - (-1.0f64).exp()).abs() < 1e-15);
        }
    }

    #[test]
    fn log_std_clamps_at_the_boundaries() {
        let low = constant_primitive(0.0, -40.0);
        assert!((low.dist(&[0.0]).unwrap().1[0] - (-5.0f64).exp()).abs() < 1e-15);
        let high = constant_primitive(0.0, 11.0);
        assert!((high.dist(&[0.0]).unwrap().1[0] - 2.0f64.exp()).abs() < 1e-12);
    }

    #[test]
    fn random_net_matches_layer_algebra() {
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        let mean_net = Mlp::new("p/mean", &[2, 3, 1], Activation::Tanh, 1.0, &mut rng);
        let expected = mean_net.forward(&[0.2, -0.6]).unwrap();
        let p = GaussianPrimitive {
            id: "p".into(),
            level: 1,
            state_dims: vec!["x".into(), "y".into()],
            action_dims: vec!["a".into()],
            mean_net,
            log_std: LogStdHead::PerDim(ParamTensor::new("p/ls", vec![1], vec![0.0])),
            log_std_clamp: LOG_STD_CLAMP_DEFAULT,
            frozen: true,
        };
        let (mu, sigma) = p.dist(&[0.2, -0.6]).unwrap();
        assert!((mu[0] - expected[0]).abs() <= 1e-12);
        assert_eq!(sigma, vec![1.0]);
    }

    #[test]
    fn state_width_mismatch_errors() {
        let p = constant_primitive(0.0, 0.0);
        assert!(p.dist(&[1.0, 2.0]).is_err());
    }
}
