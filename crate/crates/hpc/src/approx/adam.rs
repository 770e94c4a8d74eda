use super::tensor::ParamTensor;
use crate::error::HpcError;

/// Adam with bias correction. Moment buffers are kept positionally aligned
/// with the parameter list handed to `step`.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub step_count: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(lr: f64, shapes: &[usize]) -> Self {
        assert!(lr > 0.0, "learning rate must be positive");
        Self {
            step_count: 0,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            v: shapes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    pub fn for_params(lr: f64, params: &[&ParamTensor]) -> Self {
        let shapes: Vec<usize> = params.iter().map(|p| p.len()).collect();
        Self::new(lr, &shapes)
    }

    /// One update on every tensor; gradients are zeroed afterwards.
    pub fn step(&mut self, params: &mut [&mut ParamTensor]) -> Result<(), HpcError> {
        if params.len() != self.m.len() {
            return Err(HpcError::State(format!(
                "adam holds {} moment buffers but got {} tensors",
                self.m.len(),
                params.len()
            )));
        }
        self.step_count += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step_count as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step_count as i32);
        for (idx, p) in params.iter_mut().enumerate() {
            if p.grad.iter().any(|g| !g.is_finite()) {
                return Err(HpcError::NonFinite(format!(
                    "gradient of tensor '{}'",
                    p.name
                )));
            }
            let (m, v) = (&mut self.m[idx], &mut self.v[idx]);
            if m.len() != p.len() {
                return Err(HpcError::Dimension(format!(
                    "adam moment buffer mismatch on tensor '{}'",
                    p.name
                )));
            }
            for i in 0..p.len() {
                let g = p.grad[i];
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g;
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g * g;
                let mhat = m[i] / bc1;
                let vhat = v[i] / bc2;
                p.values[i] -= self.lr * mhat / (vhat.sqrt() + self.eps);
            }
            p.zero_grad();
        }
        Ok(())
    }
}
