//! Multinomial naive Bayes over integer feature counts.

use num_bigint::BigUint;

use super::features::{FeatureError, FeatureVector, LabeledSample};

/// Count-based classifier: prediction uses log priors plus per-feature
/// log likelihoods with Laplace smoothing.
#[derive(Debug, Clone, PartialEq)]
pub struct NaiveBayesModel {
    pub dim: usize,
    pub class_counts: [u64; 2],
    pub feature_counts: [Vec<u64>; 2],
    pub total_feature_counts: [u64; 2],
    pub smoothing: f64,
}

impl NaiveBayesModel {
    pub fn new(dim: usize, smoothing: f64) -> Result<Self, FeatureError> {
        if dim == 0 {
            return Err(FeatureError::ZeroDimension);
        }
        Ok(NaiveBayesModel {
            dim,
            class_counts: [0, 0],
            feature_counts: [vec![0; dim], vec![0; dim]],
            total_feature_counts: [0, 0],
            smoothing,
        })
    }

    fn log_posterior(&self, class: usize, x: &FeatureVector) -> f64 {
        let total_samples = self.class_counts[0] + self.class_counts[1];
        // smoothed prior so an untrained class stays finite
        let prior = (self.class_counts[class] as f64 + self.smoothing)
            / (total_samples as f64 + 2.0 * self.smoothing);
        let denom = self.total_feature_counts[class] as f64 + self.smoothing * self.dim as f64;
        let mut lp = prior.ln();
        for (i, v) in x.iter_nonzero() {
            let likelihood = (self.feature_counts[class][i] as f64 + self.smoothing) / denom;
            lp += v as f64 * likelihood.ln();
        }
        lp
    }

    /// Exact posterior comparison, valid for integer smoothing = 1.
    /// Returns Ordering of P(class 0 | x) against P(class 1 | x).
    fn exact_compare(&self, x: &FeatureVector) -> std::cmp::Ordering {
        let d0 = BigUint::from(self.total_feature_counts[0] + self.dim as u64);
        let d1 = BigUint::from(self.total_feature_counts[1] + self.dim as u64);
        let total_v: u64 = x.iter_nonzero().map(|(_, v)| v).sum();
        let mut lhs = BigUint::from(self.class_counts[0] + 1) * d1.pow(total_v as u32);
        let mut rhs = BigUint::from(self.class_counts[1] + 1) * d0.pow(total_v as u32);
        for (i, v) in x.iter_nonzero() {
            lhs *= BigUint::from(self.feature_counts[0][i] + 1).pow(v as u32);
            rhs *= BigUint::from(self.feature_counts[1][i] + 1).pow(v as u32);
        }
        lhs.cmp(&rhs)
    }

    /// Argmax of the two class posteriors, ties toward class 0.
    ///
    /// Uses log-space scores, falling back to exact integer arithmetic when
    /// the scores are too close for floating point to order reliably.
    pub fn predict(&self, x: &FeatureVector) -> Result<u8, FeatureError> {
        x.check_dim(self.dim)?;
        let lp0 = self.log_posterior(0, x);
        let lp1 = self.log_posterior(1, x);
        let scale = lp0.abs().max(lp1.abs()).max(1.0);
        if (lp1 - lp0).abs() > 1e-9 * scale {
            return Ok(if lp1 > lp0 { 1 } else { 0 });
        }
        if self.smoothing == 1.0 {
            return Ok(match self.exact_compare(x) {
                std::cmp::Ordering::Less => 1,
                _ => 0,
            });
        }
        Ok(if lp1 > lp0 { 1 } else { 0 })
    }

    pub fn update(&mut self, sample: &LabeledSample) -> Result<(), FeatureError> {
        sample.features.check_dim(self.dim)?;
        let c = sample.label as usize;
        self.class_counts[c] += 1;
        for (i, v) in sample.features.iter_nonzero() {
            self.feature_counts[c][i] += v;
            self.total_feature_counts[c] += v;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense(v: Vec<u64>) -> FeatureVector {
        FeatureVector::dense(v).unwrap()
    }

    /// Exact rational posterior comparison in plain integer arithmetic,
    /// independent of the log-space implementation path.
    fn oracle_predict(m: &NaiveBayesModel, x: &FeatureVector) -> u8 {
        assert_eq!(m.smoothing, 1.0);
        let d0 = (m.total_feature_counts[0] + m.dim as u64) as u128;
        let d1 = (m.total_feature_counts[1] + m.dim as u64) as u128;
        let mut lhs = (m.class_counts[0] + 1) as u128;
        let mut rhs = (m.class_counts[1] + 1) as u128;
        for (i, v) in x.iter_nonzero() {
            for _ in 0..v {
                lhs *= (m.feature_counts[0][i] + 1) as u128;
                rhs *= (m.feature_counts[1][i] + 1) as u128;
                lhs *= d1;
                rhs *= d0;
            }
        }
        if rhs > lhs {
            1
        } else {
            0
        }
    }

    #[test]
    fn counts_accumulate() {
        let mut m = NaiveBayesModel::new(2, 1.0).unwrap();
        let s = LabeledSample::new(dense(vec![2, 0]), 0).unwrap();
        m.update(&s).unwrap();
        m.update(&s).unwrap();
        assert_eq!(m.class_counts, [2, 0]);
        assert_eq!(m.feature_counts[0], vec![4, 0]);
        assert_eq!(m.total_feature_counts[0], 4);
    }

    #[test]
    fn two_sample_prediction_matches_oracle() {
        let mut m = NaiveBayesModel::new(2, 1.0).unwrap();
        m.update(&LabeledSample::new(dense(vec![2, 0]), 0).unwrap())
            .unwrap();
        m.update(&LabeledSample::new(dense(vec![0, 2]), 1).unwrap())
            .unwrap();
        let x = dense(vec![1, 0]);
        assert_eq!(m.predict(&x).unwrap(), 0);
        assert_eq!(oracle_predict(&m, &x), 0);
    }

    #[test]
    fn symmetric_counts_tie_to_class_zero() {
        let mut m = NaiveBayesModel::new(2, 1.0).unwrap();
        m.update(&LabeledSample::new(dense(vec![1, 1]), 0).unwrap())
            .unwrap();
        m.update(&LabeledSample::new(dense(vec![1, 1]), 1).unwrap())
            .unwrap();
        assert_eq!(m.predict(&dense(vec![3, 3])).unwrap(), 0);
    }

    #[test]
    fn exhaustive_small_instance_oracle_agreement() {
        for c0 in 0..3u64 {
            for c1 in 0..3u64 {
                for f00 in 0..4u64 {
                    for f01 in 0..4u64 {
                        for f10 in 0..4u64 {
                            for f11 in 0..4u64 {
                                let m = NaiveBayesModel {
                                    dim: 2,
                                    class_counts: [c0, c1],
                                    feature_counts: [vec![f00, f01], vec![f10, f11]],
                                    total_feature_counts: [f00 + f01, f10 + f11],
                                    smoothing: 1.0,
                                };
                                for x0 in 0..3u64 {
                                    for x1 in 0..3u64 {
                                        let x = dense(vec![x0, x1]);
                                        assert_eq!(
                                            m.predict(&x).unwrap(),
                                            oracle_predict(&m, &x),
                                            "counts [{c0},{c1}] f0 [{f00},{f01}] f1 [{f10},{f11}] x [{x0},{x1}]"
                                        );
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}
