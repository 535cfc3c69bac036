//! Incremental binary classifiers with single-sample update, batch
//! warm start, evaluation, and binary snapshot/restore.

mod checkpoint;
mod features;
mod naive_bayes;
mod nearest_centroid;
mod perceptron;

pub use checkpoint::{CheckpointError, ModelCheckpoint};
pub use features::{FeatureError, FeatureVector, LabeledSample};
pub use naive_bayes::NaiveBayesModel;
pub use nearest_centroid::{DenseNearestCentroid, LazyEntry, SparseNearestCentroid};
pub use perceptron::PerceptronModel;

use thiserror::Error;

pub const DEFAULT_LEARNING_RATE: f64 = 1.0;
pub const DEFAULT_SMOOTHING: f64 = 1.0;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error("empty sample set")]
    EmptySamples,
    #[error("class {0} absent from warm-start samples")]
    MissingClass(u8),
}

/// Which classifier variant a model or checkpoint holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Perceptron,
    NaiveBayes,
    NearestCentroidDense,
    NearestCentroidSparse,
}

impl ModelKind {
    pub fn tag(self) -> u8 {
        match self {
            ModelKind::Perceptron => 0,
            ModelKind::NaiveBayes => 1,
            ModelKind::NearestCentroidDense => 2,
            ModelKind::NearestCentroidSparse => 3,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(ModelKind::Perceptron),
            1 => Some(ModelKind::NaiveBayes),
            2 => Some(ModelKind::NearestCentroidDense),
            3 => Some(ModelKind::NearestCentroidSparse),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Perceptron => "perceptron",
            ModelKind::NaiveBayes => "naive-bayes",
            ModelKind::NearestCentroidDense => "nearest-centroid-dense",
            ModelKind::NearestCentroidSparse => "nearest-centroid-sparse",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Perceptron(PerceptronModel),
    NaiveBayes(NaiveBayesModel),
    NearestCentroidDense(DenseNearestCentroid),
    NearestCentroidSparse(SparseNearestCentroid),
}

impl Model {
    pub fn new(kind: ModelKind, dim: usize) -> Result<Self, ModelError> {
        Ok(match kind {
            ModelKind::Perceptron => {
                Model::Perceptron(PerceptronModel::new(dim, DEFAULT_LEARNING_RATE)?)
            }
            ModelKind::NaiveBayes => {
                Model::NaiveBayes(NaiveBayesModel::new(dim, DEFAULT_SMOOTHING)?)
            }
            ModelKind::NearestCentroidDense => {
                Model::NearestCentroidDense(DenseNearestCentroid::new(dim)?)
            }
            ModelKind::NearestCentroidSparse => {
                Model::NearestCentroidSparse(SparseNearestCentroid::new(dim)?)
            }
        })
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Perceptron(_) => ModelKind::Perceptron,
            Model::NaiveBayes(_) => ModelKind::NaiveBayes,
            Model::NearestCentroidDense(_) => ModelKind::NearestCentroidDense,
            Model::NearestCentroidSparse(_) => ModelKind::NearestCentroidSparse,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Model::Perceptron(m) => m.dim(),
            Model::NaiveBayes(m) => m.dim,
            Model::NearestCentroidDense(m) => m.dim(),
            Model::NearestCentroidSparse(m) => m.dim,
        }
    }

    pub fn predict(&self, x: &FeatureVector) -> Result<u8, FeatureError> {
        match self {
            Model::Perceptron(m) => m.predict(x),
            Model::NaiveBayes(m) => m.predict(x),
            Model::NearestCentroidDense(m) => m.predict(x),
            Model::NearestCentroidSparse(m) => m.predict(x),
        }
    }

    pub fn update(&mut self, sample: &LabeledSample) -> Result<(), FeatureError> {
        match self {
            Model::Perceptron(m) => m.update(sample),
            Model::NaiveBayes(m) => m.update(sample),
            Model::NearestCentroidDense(m) => m.update(sample),
            Model::NearestCentroidSparse(m) => m.update(sample),
        }
    }

    /// Fresh model trained by applying `update` to each sample in order.
    ///
    /// Nearest-centroid variants require both classes in the samples, since
    /// a class with no samples has no meaningful centroid.
    pub fn warm_start(kind: ModelKind, samples: &[LabeledSample]) -> Result<Self, ModelError> {
        let first = samples.first().ok_or(ModelError::EmptySamples)?;
        if matches!(
            kind,
            ModelKind::NearestCentroidDense | ModelKind::NearestCentroidSparse
        ) {
            for class in 0..2u8 {
                if !samples.iter().any(|s| s.label == class) {
                    return Err(ModelError::MissingClass(class));
                }
            }
        }
        let mut model = Model::new(kind, first.features.dim())?;
        for s in samples {
            model.update(s)?;
        }
        Ok(model)
    }

    /// Fraction of test samples predicted correctly.
    pub fn evaluate(&self, test: &[LabeledSample]) -> Result<f64, ModelError> {
        if test.is_empty() {
            return Err(ModelError::EmptySamples);
        }
        let mut correct = 0usize;
        for s in test {
            if self.predict(&s.features)? == s.label {
                correct += 1;
            }
        }
        Ok(correct as f64 / test.len() as f64)
    }

    pub fn snapshot(&self) -> ModelCheckpoint {
        checkpoint::snapshot(self)
    }

    pub fn restore(bytes: &[u8]) -> Result<Model, CheckpointError> {
        checkpoint::restore(bytes)
    }

    /// Human-readable dump of the full model state.
    pub fn to_text(&self) -> String {
        checkpoint::to_text(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense(v: Vec<u64>) -> FeatureVector {
        FeatureVector::dense(v).unwrap()
    }

    fn sample(v: Vec<u64>, y: u8) -> LabeledSample {
        LabeledSample::new(dense(v), y).unwrap()
    }

    #[test]
    fn warm_start_ncc_counts_and_centroids() {
        let samples = vec![sample(vec![0, 0], 0), sample(vec![2, 2], 1)];
        let m = Model::warm_start(ModelKind::NearestCentroidDense, &samples).unwrap();
        match m {
            Model::NearestCentroidDense(ncc) => {
                assert_eq!(ncc.centroids[0], vec![0.0, 0.0]);
                assert_eq!(ncc.centroids[1], vec![2.0, 2.0]);
                assert_eq!(ncc.class_sample_counts, [1, 1]);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn warm_start_ncc_rejects_missing_class() {
        let samples = vec![sample(vec![1, 1], 1)];
        assert!(matches!(
            Model::warm_start(ModelKind::NearestCentroidSparse, &samples),
            Err(ModelError::MissingClass(0))
        ));
    }

    #[test]
    fn warm_start_nb_class_count_invariant() {
        let samples: Vec<_> = (0..10).map(|i| sample(vec![i, 10 - i], (i % 2) as u8)).collect();
        let m = Model::warm_start(ModelKind::NaiveBayes, &samples).unwrap();
        match m {
            Model::NaiveBayes(nb) => {
                assert_eq!(nb.class_counts[0] + nb.class_counts[1], 10);
                for c in 0..2 {
                    assert_eq!(
                        nb.total_feature_counts[c],
                        nb.feature_counts[c].iter().sum::<u64>()
                    );
                }
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn evaluate_counts_matches() {
        let m = Model::new(ModelKind::Perceptron, 2).unwrap();
        // zero perceptron predicts everything as class 0
        let test = vec![
            sample(vec![1, 1], 0),
            sample(vec![2, 2], 1),
            sample(vec![3, 3], 0),
            sample(vec![4, 4], 1),
        ];
        assert_eq!(m.evaluate(&test).unwrap(), 0.5);
        assert_eq!(m.evaluate(&test[..1].to_vec()).unwrap(), 1.0);
        assert!(m.evaluate(&[]).is_err());
    }
}
