use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tensor::ParamTensor;
use crate::error::HpcError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Relu,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Relu => x.max(0.0),
        }
    }

    /// Derivative expressed through the activation output `y`.
    fn deriv_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - y * y,
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Fully connected net. The hidden activations sit between layers, the final
/// layer is linear. Weights are stored row-major as `[out, in]`.
#[derive(Debug, Clone)]
pub struct Mlp {
    pub widths: Vec<usize>,
    pub activation: Activation,
    pub weights: Vec<ParamTensor>,
    pub biases: Vec<ParamTensor>,
}

/// Per-layer inputs and outputs retained from a forward pass; the tape for
/// one backward call.
#[derive(Debug, Clone)]
pub struct MlpCache {
    /// layer_inputs[k] is the input to layer k; layer_inputs.last() is the output.
    layer_inputs: Vec<Vec<f64>>,
}

impl MlpCache {
    pub fn output(&self) -> &[f64] {
        self.layer_inputs
            .last()
            .expect("cache always holds the input")
    }
}

impl Mlp {
    /// Uniform init in +/- sqrt(6/(fan_in+fan_out)); `final_scale` shrinks the
    /// last layer (near-zero initial policy heads).
    pub fn new(
        name: &str,
        widths: &[usize],
        activation: Activation,
        final_scale: f64,
        rng: &mut impl Rng,
    ) -> Self {
        assert!(
            widths.len() >= 2,
            "an MLP needs at least input and output widths"
        );
        assert!(
            widths.iter().all(|&w| w > 0),
            "layer widths must be positive"
        );
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        let layers = widths.len() - 1;
        for k in 0..layers {
            let (fan_in, fan_out) = (widths[k], widths[k + 1]);
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let scale = if k == layers - 1 { final_scale } else { 1.0 };
            let vals: Vec<f64> = (0..fan_in * fan_out)
                .map(|_| rng.random_range(-bound..bound) * scale)
                .collect();
            weights.push(ParamTensor::new(
                format!("{name}/w{k}"),
                vec![fan_out, fan_in],
                vals,
            ));
            biases.push(ParamTensor::zeros(format!("{name}/b{k}"), vec![fan_out]));
        }
        Self {
            widths: widths.to_vec(),
            activation,
            weights,
            biases,
        }
    }

    pub fn input_width(&self) -> usize {
        self.widths[0]
    }

    pub fn output_width(&self) -> usize {
        *self.widths.last().unwrap()
    }

    pub fn param_count(&self) -> usize {
        self.widths.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    pub fn params(&self) -> Vec<&ParamTensor> {
        self.weights.iter().chain(self.biases.iter()).collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut ParamTensor> {
        self.weights
            .iter_mut()
            .chain(self.biases.iter_mut())
            .collect()
    }

    fn check_input(&self, input: &[f64]) -> Result<(), HpcError> {
        if input.len() != self.input_width() {
            return Err(HpcError::Dimension(format!(
                "mlp input width {} does not match first layer width {}",
                input.len(),
                self.input_width()
            )));
        }
        Ok(())
    }

    /// Plain forward pass, no tape.
    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>, HpcError> {
        self.check_input(input)?;
        let layers = self.weights.len();
        let mut x = input.to_vec();
        for k in 0..layers {
            x = self.layer_forward(k, &x);
            if k + 1 < layers {
                x.iter_mut().for_each(|v| *v = self.activation.apply(*v));
            }
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(HpcError::NonFinite(format!(
                "mlp '{}' produced a non-finite output",
                self.weights[0].name
            )));
        }
        Ok(x)
    }

    /// Forward pass that records the tape for `backward`.
    pub fn forward_cached(&self, input: &[f64]) -> Result<MlpCache, HpcError> {
        self.check_input(input)?;
        let layers = self.weights.len();
        let mut layer_inputs = Vec::with_capacity(layers + 1);
        let mut x = input.to_vec();
        for k in 0..layers {
            layer_inputs.push(x.clone());
            x = self.layer_forward(k, &x);
            if k + 1 < layers {
                x.iter_mut().for_each(|v| *v = self.activation.apply(*v));
            }
        }
        layer_inputs.push(x);
        Ok(MlpCache { layer_inputs })
    }

    fn layer_forward(&self, k: usize, x: &[f64]) -> Vec<f64> {
        let (n_in, n_out) = (self.widths[k], self.widths[k + 1]);
        let w = &self.weights[k].values;
        let b = &self.biases[k].values;
        let mut out = Vec::with_capacity(n_out);
        for o in 0..n_out {
            let row = &w[o * n_in..(o + 1) * n_in];
            let mut acc = b[o];
            for (wi, xi) in row.iter().zip(x) {
                acc += wi * xi;
            }
            out.push(acc);
        }
        out
    }

    /// Accumulates parameter gradients for the forward pass recorded in
    /// `cache` and returns the gradient with respect to the input.
    pub fn backward(
        &mut self,
        cache: &MlpCache,
        output_grad: &[f64],
    ) -> Result<Vec<f64>, HpcError> {
        let layers = self.weights.len();
        if cache.layer_inputs.len() != layers + 1 {
            return Err(HpcError::State(
                "backward called without a matching forward".into(),
            ));
        }
        if output_grad.len() != self.output_width() {
            return Err(HpcError::Dimension(format!(
                "output gradient width {} does not match output width {}",
                output_grad.len(),
                self.output_width()
            )));
        }
        let mut g = output_grad.to_vec();
        for k in (0..layers).rev() {
            let (n_in, n_out) = (self.widths[k], self.widths[k + 1]);
            // Gradient through the activation of this layer's output (hidden
            // layers only; the last layer is linear).
            if k + 1 < layers {
                let act_out = &cache.layer_inputs[k + 1];
                for (gi, yi) in g.iter_mut().zip(act_out) {
                    *gi *= self.activation.deriv_from_output(*yi);
                }
            }
            let x = &cache.layer_inputs[k];
            let w = &mut self.weights[k];
            let b = &mut self.biases[k];
            let mut gx = vec![0.0; n_in];
            for o in 0..n_out {
                let go = g[o];
                b.grad[o] += go;
                let row_v = &w.values[o * n_in..(o + 1) * n_in];
                let row_g = &mut w.grad[o * n_in..(o + 1) * n_in];
                for i in 0..n_in {
                    row_g[i] += go * x[i];
                    gx[i] += go * row_v[i];
                }
            }
            g = gx;
        }
        Ok(g)
    }

    pub fn zero_grad(&mut self) {
        for p in self.params_mut() {
            p.zero_grad();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn rng(seed: u64) -> ChaCha12Rng {
        ChaCha12Rng::seed_from_u64(seed)
    }

    #[test]
    fn identity_layer_passes_input_through() {
        let mut net = Mlp::new("t", &[2, 2], Activation::Tanh, 1.0, &mut rng(0));
        net.weights[0].values = vec![1.0, 0.0, 0.0, 1.0];
        net.biases[0].values = vec![0.0, 0.0];
        assert_eq!(net.forward(&[1.0, 2.0]).unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn zero_weights_return_bias() {
        let mut net = Mlp::new("t", &[3, 2], Activation::Relu, 1.0, &mut rng(0));
        net.weights[0].values = vec![0.0; 6];
        net.biases[0].values = vec![0.5, -0.25];
        for input in [[0.0, 0.0, 0.0], [1.0, -2.0, 7.0]] {
            assert_eq!(net.forward(&input).unwrap(), vec![0.5, -0.25]);
        }
    }

    #[test]
    fn two_layer_tanh_matches_hand_rolled_algebra() {
        let net = Mlp::new("t", &[3, 4, 2], Activation::Tanh, 1.0, &mut rng(9));
        let input = [0.3, -0.7, 1.1];
        // Independent recomputation of the layer algebra.
        let mut h = vec![0.0; 4];
        for o in 0..4 {
            let mut acc = net.biases[0].values[o];
            for i in 0..3 {
                acc += net.weights[0].values[o * 3 + i] * input[i];
            }
            h[o] = acc.tanh();
        }
        let mut expected = vec![0.0; 2];
        for o in 0..2 {
            let mut acc = net.biases[1].values[o];
            for i in 0..4 {
                acc += net.weights[1].values[o * 4 + i] * h[i];
            }
            expected[o] = acc;
        }
        let out = net.forward(&input).unwrap();
        for (a, b) in out.iter().zip(&expected) {
            assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn forward_is_pure() {
        let net = Mlp::new("t", &[2, 5, 1], Activation::Tanh, 1.0, &mut rng(4));
        let a = net.forward(&[0.1, 0.2]).unwrap();
        let b = net.forward(&[0.1, 0.2]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn wrong_input_width_errors() {
        let net = Mlp::new("t", &[2, 1], Activation::Tanh, 1.0, &mut rng(0));
        assert!(net.forward(&[1.0]).is_err());
    }

    #[test]
    fn scalar_tanh_weight_gradient() {
        // f(x) = 1 * tanh(w x) with w = 0.5, x = 1: df/dw = x (1 - tanh^2(0.5)).
        let mut net = Mlp::new("t", &[1, 1, 1], Activation::Tanh, 1.0, &mut rng(0));
        net.weights[0].values = vec![0.5];
        net.biases[0].values = vec![0.0];
        net.weights[1].values = vec![1.0];
        net.biases[1].values = vec![0.0];
        let cache = net.forward_cached(&[1.0]).unwrap();
        net.backward(&cache, &[1.0]).unwrap();
        let expected = 1.0 - 0.5_f64.tanh().powi(2);
        assert!((expected - 0.786448).abs() < 1e-6);
        assert!((net.weights[0].grad[0] - expected).abs() < 1e-12);
    }

    #[test]
    fn zero_output_gradient_gives_zero_grads() {
        let mut net = Mlp::new("t", &[2, 3, 2], Activation::Tanh, 1.0, &mut rng(2));
        let cache = net.forward_cached(&[0.4, -0.9]).unwrap();
        net.backward(&cache, &[0.0, 0.0]).unwrap();
        for p in net.params() {
            assert!(p.grad.iter().all(|&g| g == 0.0));
        }
    }

    #[test]
    fn backward_accumulates_additively() {
        let mut net = Mlp::new("t", &[2, 3, 1], Activation::Tanh, 1.0, &mut rng(3));
        let cache = net.forward_cached(&[0.4, -0.9]).unwrap();
        net.backward(&cache, &[1.0]).unwrap();
        let single: Vec<Vec<f64>> = net.params().iter().map(|p| p.grad.clone()).collect();
        net.zero_grad();
        net.backward(&cache, &[1.0]).unwrap();
        net.backward(&cache, &[1.0]).unwrap();
        for (p, s) in net.params().iter().zip(&single) {
            for (g, g1) in p.grad.iter().zip(s) {
                assert!((g - 2.0 * g1).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gradients_match_central_finite_differences() {
        // Scalar loss = sum of outputs; perturb every parameter.
        for seed in 0..100 {
            let mut net = Mlp::new("t", &[3, 4, 2], Activation::Tanh, 1.0, &mut rng(seed));
            let input = [0.2, -0.5, 0.9];
            let cache = net.forward_cached(&input).unwrap();
            net.backward(&cache, &[1.0, 1.0]).unwrap();
            let grads: Vec<Vec<f64>> = net.params().iter().map(|p| p.grad.clone()).collect();
            let h = 1e-5;
            for k in 0..grads.len() {
                for i in 0..grads[k].len() {
                    let orig = {
                        let mut ps = net.params_mut();
                        let v = ps[k].values[i];
                        ps[k].values[i] = v + h;
                        v
                    };
                    let up: f64 = net.forward(&input).unwrap().iter().sum();
                    net.params_mut()[k].values[i] = orig - h;
                    let down: f64 = net.forward(&input).unwrap().iter().sum();
                    net.params_mut()[k].values[i] = orig;
                    let fd = (up - down) / (2.0 * h);
                    let g = grads[k][i];
                    let denom = g.abs().max(fd.abs()).max(1e-6);
                    assert!(
                        ((g - fd) / denom).abs() <= 1e-4,
                        "seed {seed} tensor {k} idx {i}: {g} vs fd {fd}"
                    );
                }
            }
        }
    }

    #[test]
    fn input_gradient_matches_finite_differences() {
        let mut net = Mlp::new("t", &[2, 4, 1], Activation::Tanh, 1.0, &mut rng(11));
        let input = [0.3, -0.2];
        let cache = net.forward_cached(&input).unwrap();
        let gin = net.backward(&cache, &[1.0]).unwrap();
        let h = 1e-5;
        for i in 0..2 {
            let mut up_in = input;
            up_in[i] += h;
            let mut dn_in = input;
            dn_in[i] -= h;
            let fd =
                (net.forward(&up_in).unwrap()[0] - net.forward(&dn_in).unwrap()[0]) / (2.0 * h);
            assert!((gin[i] - fd).abs() < 1e-6, "{} vs {}", gin[i], fd);
        }
    }

    #[test]
    fn param_count_formula() {
        use proptest::prelude::*;
        proptest!(|(widths in proptest::collection::vec(1usize..6, 2..5))| {
            let net = Mlp::new("t", &widths, Activation::Tanh, 1.0, &mut rng(0));
            let expected: usize = widths.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
            prop_assert_eq!(net.param_count(), expected);
        });
    }
}
