use crate::error::HpcError;

const SIMPLEX_TOL: f64 = 1e-9;

/// Nonnegative weights over primitives summing to 1; the parameters of a
/// categorical distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct IntentVector(Vec<f64>);

impl IntentVector {
    pub fn new(weights: Vec<f64>) -> Result<Self, HpcError> {
        if weights.is_empty() {
            return Err(HpcError::Domain("intent vector must be nonempty".into()));
        }
        if weights.iter().any(|&w| !w.is_finite() || w < 0.0) {
            return Err(HpcError::Domain(format!(
                "intent weights must be finite and >= 0: {weights:?}"
            )));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(HpcError::Domain(format!(
                "intent weights sum to {sum}, expected 1"
            )));
        }
        Ok(Self(weights))
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Entropy of the categorical distribution with the intents as parameters,
/// with 0*ln(0) taken as 0.
pub fn intent_entropy(omega: &IntentVector) -> f64 {
    -omega
        .weights()
        .iter()
        .map(|&w| if w > 0.0 { w * w.ln() } else { 0.0 })
        .sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_pair_entropy_is_ln2() {
        let w = IntentVector::new(vec![0.5, 0.5]).unwrap();
        assert!((intent_entropy(&w) - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn degenerate_entropy_is_zero() {
        let w = IntentVector::new(vec![1.0, 0.0]).unwrap();
        assert_eq!(intent_entropy(&w), 0.0);
    }

    #[test]
    fn skewed_pair_entropy() {
        let w = IntentVector::new(vec![0.75, 0.25]).unwrap();
        assert!((intent_entropy(&w) - 0.562335).abs() < 1e-6);
    }

    #[test]
    fn invalid_simplexes_rejected() {
        assert!(IntentVector::new(vec![]).is_err());
        assert!(IntentVector::new(vec![0.5, 0.6]).is_err());
        assert!(IntentVector::new(vec![-0.1, 1.1]).is_err());
        assert!(IntentVector::new(vec![f64::NAN, 1.0]).is_err());
    }

    #[test]
    fn entropy_bounds_and_uniform_maximum() {
        use proptest::prelude::*;
        proptest!(|(raw in proptest::collection::vec(1e-6f64..1.0, 2..6))| {
            let total: f64 = raw.iter().sum();
            let w: Vec<f64> = raw.iter().map(|x| x / total).collect();
            let n = w.len();
            let h = intent_entropy(&IntentVector::new(w).unwrap());
            prop_assert!(h >= 0.0);
            prop_assert!(h <= (n as f64).ln() + 1e-12);
            let uniform = intent_entropy(&IntentVector::uniform(n));
            prop_assert!(h <= uniform + 1e-12);
        });
    }
}
