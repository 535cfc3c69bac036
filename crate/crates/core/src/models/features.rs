//! Sample representations shared by all model variants.

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum FeatureError {
    #[error("dimensionality mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("sparse index {index} out of range for dimensionality {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("sparse indices must be strictly increasing (saw {index} after {prev})")]
    UnsortedIndices { prev: usize, index: usize },
    #[error("sparse values must be positive (index {index})")]
    ZeroValue { index: usize },
    #[error("label must be 0 or 1, got {0}")]
    BadLabel(u8),
    #[error("dimensionality must be positive")]
    ZeroDimension,
}

/// Non-negative integer feature vector, dense or sparse.
///
/// Sparse vectors store `(index, value)` pairs with strictly increasing
/// indices and strictly positive values; omitted indices are zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FeatureVector {
    Dense(Vec<u64>),
    Sparse { dim: usize, pairs: Vec<(usize, u64)> },
}

impl FeatureVector {
    pub fn dense(values: Vec<u64>) -> Result<Self, FeatureError> {
        if values.is_empty() {
            return Err(FeatureError::ZeroDimension);
        }
        Ok(FeatureVector::Dense(values))
    }

    pub fn sparse(dim: usize, pairs: Vec<(usize, u64)>) -> Result<Self, FeatureError> {
        if dim == 0 {
            return Err(FeatureError::ZeroDimension);
        }
        let mut prev: Option<usize> = None;
        for &(index, value) in &pairs {
            if let Some(p) = prev {
                if index <= p {
                    return Err(FeatureError::UnsortedIndices { prev: p, index });
                }
            }
            if index >= dim {
                return Err(FeatureError::IndexOutOfRange { index, dim });
            }
            if value == 0 {
                return Err(FeatureError::ZeroValue { index });
            }
            prev = Some(index);
        }
        Ok(FeatureVector::Sparse { dim, pairs })
    }

    pub fn dim(&self) -> usize {
        match self {
            FeatureVector::Dense(v) => v.len(),
            FeatureVector::Sparse { dim, .. } => *dim,
        }
    }

    /// Number of non-zero entries.
    pub fn active_count(&self) -> usize {
        match self {
            FeatureVector::Dense(v) => v.iter().filter(|&&x| x > 0).count(),
            FeatureVector::Sparse { pairs, .. } => pairs.len(),
        }
    }

    /// Iterate the non-zero `(index, value)` entries in index order.
    pub fn iter_nonzero(&self) -> Box<dyn Iterator<Item = (usize, u64)> + '_> {
        match self {
            FeatureVector::Dense(v) => Box::new(
                v.iter()
                    .enumerate()
                    .filter(|(_, &x)| x > 0)
                    .map(|(i, &x)| (i, x)),
            ),
            FeatureVector::Sparse { pairs, .. } => Box::new(pairs.iter().copied()),
        }
    }

    pub fn get(&self, index: usize) -> u64 {
        match self {
            FeatureVector::Dense(v) => v.get(index).copied().unwrap_or(0),
            FeatureVector::Sparse { pairs, .. } => pairs
                .binary_search_by_key(&index, |&(i, _)| i)
                .map(|p| pairs[p].1)
                .unwrap_or(0),
        }
    }

    pub fn check_dim(&self, expected: usize) -> Result<(), FeatureError> {
        if self.dim() != expected {
            return Err(FeatureError::DimensionMismatch {
                expected,
                got: self.dim(),
            });
        }
        Ok(())
    }
}

/// A feature vector with its binary class label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledSample {
    pub features: FeatureVector,
    pub label: u8,
}

impl LabeledSample {
    pub fn new(features: FeatureVector, label: u8) -> Result<Self, FeatureError> {
        if label > 1 {
            return Err(FeatureError::BadLabel(label));
        }
        Ok(LabeledSample { features, label })
    }

    /// The label with its classes swapped.
    pub fn flipped(&self) -> LabeledSample {
        LabeledSample {
            features: self.features.clone(),
            label: 1 - self.label,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sparse_rejects_unsorted_and_zero() {
        assert!(matches!(
            FeatureVector::sparse(5, vec![(2, 1), (1, 1)]),
            Err(FeatureError::UnsortedIndices { .. })
        ));
        assert!(matches!(
            FeatureVector::sparse(5, vec![(1, 0)]),
            Err(FeatureError::ZeroValue { .. })
        ));
        assert!(matches!(
            FeatureVector::sparse(5, vec![(5, 1)]),
            Err(FeatureError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn get_and_iter_agree_across_representations() {
        let d = FeatureVector::dense(vec![0, 3, 0, 7]).unwrap();
        let s = FeatureVector::sparse(4, vec![(1, 3), (3, 7)]).unwrap();
        for i in 0..4 {
            assert_eq!(d.get(i), s.get(i));
        }
        assert_eq!(
            d.iter_nonzero().collect::<Vec<_>>(),
            s.iter_nonzero().collect::<Vec<_>>()
        );
        assert_eq!(d.active_count(), 2);
    }

    #[test]
    fn label_validation() {
        let f = FeatureVector::dense(vec![1]).unwrap();
        assert!(LabeledSample::new(f.clone(), 2).is_err());
        let s = LabeledSample::new(f, 1).unwrap();
        assert_eq!(s.flipped().label, 0);
    }
}
