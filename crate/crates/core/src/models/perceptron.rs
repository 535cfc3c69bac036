//! Single-layer perceptron for binary classification.

use super::features::{FeatureError, FeatureVector, LabeledSample};

/// Linear classifier updated only on misclassified samples.
#[derive(Debug, Clone, PartialEq)]
pub struct PerceptronModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub learning_rate: f64,
}

impl PerceptronModel {
    pub fn new(dim: usize, learning_rate: f64) -> Result<Self, FeatureError> {
        if dim == 0 {
            return Err(FeatureError::ZeroDimension);
        }
        Ok(PerceptronModel {
            weights: vec![0.0; dim],
            bias: 0.0,
            learning_rate,
        })
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    fn score(&self, x: &FeatureVector) -> f64 {
        let mut s = self.bias;
        for (i, v) in x.iter_nonzero() {
            s += self.weights[i] * v as f64;
        }
        s
    }

    /// Score strictly above zero maps to class 1; a score of exactly zero
    /// ties toward class 0.
    pub fn predict(&self, x: &FeatureVector) -> Result<u8, FeatureError> {
        x.check_dim(self.dim())?;
        Ok(if self.score(x) > 0.0 { 1 } else { 0 })
    }

    /// No-op when the current prediction already matches the label.
    pub fn update(&mut self, sample: &LabeledSample) -> Result<(), FeatureError> {
        let predicted = self.predict(&sample.features)?;
        if predicted == sample.label {
            return Ok(());
        }
        let sign = if sample.label == 1 { 1.0 } else { -1.0 };
        for (i, v) in sample.features.iter_nonzero() {
            self.weights[i] += sign * self.learning_rate * v as f64;
        }
        self.bias += sign * self.learning_rate;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense(v: Vec<u64>) -> FeatureVector {
        FeatureVector::dense(v).unwrap()
    }

    #[test]
    fn predict_sign_rule() {
        let m = PerceptronModel {
            weights: vec![1.0, -1.0],
            bias: 0.0,
            learning_rate: 1.0,
        };
        assert_eq!(m.predict(&dense(vec![2, 1])).unwrap(), 1);
        // exact zero score ties to class 0
        assert_eq!(m.predict(&dense(vec![1, 1])).unwrap(), 0);
    }

    #[test]
    fn no_update_when_correct() {
        let mut m = PerceptronModel::new(2, 1.0).unwrap();
        let before = m.clone();
        let s = LabeledSample::new(dense(vec![1, 1]), 0).unwrap();
        m.update(&s).unwrap();
        assert_eq!(m, before);
    }

    #[test]
    fn update_moves_toward_label() {
        let mut m = PerceptronModel::new(2, 1.0).unwrap();
        let s = LabeledSample::new(dense(vec![2, 3]), 1).unwrap();
        m.update(&s).unwrap();
        assert_eq!(m.weights, vec![2.0, 3.0]);
        assert_eq!(m.bias, 1.0);
        assert_eq!(m.predict(&dense(vec![2, 3])).unwrap(), 1);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let m = PerceptronModel::new(2, 1.0).unwrap();
        assert!(m.predict(&dense(vec![1, 2, 3])).is_err());
    }
}
