//! Differentiable function approximation: parameter tensors, small MLPs with
//! reverse-mode gradients, an Adam optimizer and target-network updates.

mod adam;
mod checkpoint;
mod mlp;
mod tensor;

pub use adam::AdamState;
pub use checkpoint::{read_container, write_container, TensorRecord, CONTAINER_MAGIC};
pub use mlp::{Activation, Mlp, MlpCache};
pub use tensor::ParamTensor;

use crate::error::HpcError;

/// Polyak update: `target <- tau * online + (1 - tau) * target`, elementwise.
pub fn soft_update(
    target: &mut [&mut ParamTensor],
    online: &[&ParamTensor],
    tau: f64,
) -> Result<(), HpcError> {
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(HpcError::Argument(format!(
            "tau must be in (0,1], got {tau}"
        )));
    }
    if target.len() != online.len() {
        return Err(HpcError::Dimension(format!(
            "soft_update: {} target tensors vs {} online",
            target.len(),
            online.len()
        )));
    }
    for (t, o) in target.iter_mut().zip(online.iter()) {
        if t.values.len() != o.values.len() {
            return Err(HpcError::Dimension(format!(
                "soft_update: shape mismatch on tensor '{}'",
                t.name
            )));
        }
        for (tv, ov) in t.values.iter_mut().zip(&o.values) {
            *tv = tau * ov + (1.0 - tau) * *tv;
        }
    }
    Ok(())
}
