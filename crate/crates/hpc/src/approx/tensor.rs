use crate::error::HpcError;

/// A named parameter block with its accumulated gradient.
#[derive(Debug, Clone)]
pub struct ParamTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
    pub grad: Vec<f64>,
}

impl ParamTensor {
    pub fn new(name: impl Into<String>, shape: Vec<usize>, values: Vec<f64>) -> Self {
        let n: usize = shape.iter().product();
        assert_eq!(n, values.len(), "tensor value count does not match shape");
        let grad = vec![0.0; n];
        Self {
            name: name.into(),
            shape,
            values,
            grad,
        }
    }

    pub fn zeros(name: impl Into<String>, shape: Vec<usize>) -> Self {
        let n: usize = shape.iter().product();
        Self::new(name, shape, vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn zero_grad(&mut self) {
        self.grad.iter_mut().for_each(|g| *g = 0.0);
    }

    pub fn check_finite(&self) -> Result<(), HpcError> {
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(HpcError::NonFinite(format!(
                "values of tensor '{}'",
                self.name
            )));
        }
        if self.grad.iter().any(|g| !g.is_finite()) {
            return Err(HpcError::NonFinite(format!(
                "grad of tensor '{}'",
                self.name
            )));
        }
        Ok(())
    }
}
