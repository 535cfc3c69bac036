//! Nearest centroid classifiers maintained by cumulative moving average.
//!
//! Two variants: a dense one that walks every dimension on update, and a
//! sparse one that touches only the features present in a sample, keeping a
//! cached squared magnitude per centroid and a per-feature denominator so
//! untouched entries can be rescaled lazily at read time.

use std::collections::BTreeMap;

use super::features::{FeatureError, FeatureVector, LabeledSample};

#[derive(Debug, Clone, PartialEq)]
pub struct DenseNearestCentroid {
    pub centroids: [Vec<f64>; 2],
    pub class_sample_counts: [u64; 2],
}

impl DenseNearestCentroid {
    pub fn new(dim: usize) -> Result<Self, FeatureError> {
        if dim == 0 {
            return Err(FeatureError::ZeroDimension);
        }
        Ok(DenseNearestCentroid {
            centroids: [vec![0.0; dim], vec![0.0; dim]],
            class_sample_counts: [0, 0],
        })
    }

    pub fn dim(&self) -> usize {
        self.centroids[0].len()
    }

    fn squared_distance(&self, class: usize, x: &FeatureVector) -> f64 {
        let c = &self.centroids[class];
        let mut d = 0.0;
        let mut it = x.iter_nonzero().peekable();
        for (i, ci) in c.iter().enumerate() {
            let xi = match it.peek() {
                Some(&(j, v)) if j == i => {
                    it.next();
                    v as f64
                }
                _ => 0.0,
            };
            let diff = xi - ci;
            d += diff * diff;
        }
        d
    }

    /// Class of the Euclidean-nearest centroid, ties toward class 0.
    pub fn predict(&self, x: &FeatureVector) -> Result<u8, FeatureError> {
        x.check_dim(self.dim())?;
        let d0 = self.squared_distance(0, x);
        let d1 = self.squared_distance(1, x);
        Ok(if d1 < d0 { 1 } else { 0 })
    }

    pub fn update(&mut self, sample: &LabeledSample) -> Result<(), FeatureError> {
        sample.features.check_dim(self.dim())?;
        let c = sample.label as usize;
        let n = self.class_sample_counts[c];
        let step = 1.0 / (n as f64 + 1.0);
        let mut it = sample.features.iter_nonzero().peekable();
        for (i, ci) in self.centroids[c].iter_mut().enumerate() {
            let xi = match it.peek() {
                Some(&(j, v)) if j == i => {
                    it.next();
                    v as f64
                }
                _ => 0.0,
            };
            *ci += (xi - *ci) * step;
        }
        self.class_sample_counts[c] = n + 1;
        Ok(())
    }
}

/// Stored centroid entry: the value as of the last write, plus the class
/// sample count at that write. The effective value at read time is
/// `value * denominator / current_count`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LazyEntry {
    pub value: f64,
    pub denominator: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseNearestCentroid {
    pub dim: usize,
    pub entries: [BTreeMap<usize, LazyEntry>; 2],
    pub class_sample_counts: [u64; 2],
    pub squared_magnitudes: [f64; 2],
}

impl SparseNearestCentroid {
    pub fn new(dim: usize) -> Result<Self, FeatureError> {
        if dim == 0 {
            return Err(FeatureError::ZeroDimension);
        }
        Ok(SparseNearestCentroid {
            dim,
            entries: [BTreeMap::new(), BTreeMap::new()],
            class_sample_counts: [0, 0],
            squared_magnitudes: [0.0, 0.0],
        })
    }

    /// Effective centroid value for one feature after reconciling the lazy
    /// denominator against the current class count.
    pub fn effective(&self, class: usize, index: usize) -> f64 {
        let count = self.class_sample_counts[class];
        if count == 0 {
            return 0.0;
        }
        match self.entries[class].get(&index) {
            Some(e) => e.value * e.denominator as f64 / count as f64,
            None => 0.0,
        }
    }

    /// Fully reconciled centroid, mainly for tests and text export.
    pub fn effective_centroid(&self, class: usize) -> Vec<f64> {
        (0..self.dim).map(|i| self.effective(class, i)).collect()
    }

    fn squared_distance(&self, class: usize, x: &FeatureVector) -> f64 {
        // ||x - c||^2 = ||c||^2 - 2 <x, c> + sum over active x_i^2,
        // so only the active features of x are visited.
        let mut d = self.squared_magnitudes[class];
        for (i, v) in x.iter_nonzero() {
            let xi = v as f64;
            d += xi * xi - 2.0 * xi * self.effective(class, i);
        }
        d
    }

    pub fn predict(&self, x: &FeatureVector) -> Result<u8, FeatureError> {
        x.check_dim(self.dim)?;
        let d0 = self.squared_distance(0, x);
        let d1 = self.squared_distance(1, x);
        Ok(if d1 < d0 { 1 } else { 0 })
    }

    pub fn update(&mut self, sample: &LabeledSample) -> Result<(), FeatureError> {
        sample.features.check_dim(self.dim)?;
        let c = sample.label as usize;
        let n = self.class_sample_counts[c];
        let scale = n as f64 / (n as f64 + 1.0);
        // every untouched entry implicitly shrinks by n/(n+1)
        let mut sq = self.squared_magnitudes[c] * scale * scale;
        for (i, v) in sample.features.iter_nonzero() {
            let xi = v as f64;
            let old_eff = if n == 0 {
                0.0
            } else {
                match self.entries[c].get(&i) {
                    Some(e) => e.value * e.denominator as f64 / n as f64,
                    None => 0.0,
                }
            };
            let new_val = old_eff + (xi - old_eff) / (n as f64 + 1.0);
            let scaled_old = old_eff * scale;
            sq += new_val * new_val - scaled_old * scaled_old;
            self.entries[c].insert(
                i,
                LazyEntry {
                    value: new_val,
                    denominator: n + 1,
                },
            );
        }
        self.squared_magnitudes[c] = sq;
        self.class_sample_counts[c] = n + 1;
        Ok(())
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
    fn predicts_nearer_centroid() {
        let m = DenseNearestCentroid {
            centroids: [vec![0.0, 0.0], vec![10.0, 10.0]],
            class_sample_counts: [1, 1],
        };
        assert_eq!(m.predict(&dense(vec![1, 1])).unwrap(), 0);
        assert_eq!(m.predict(&dense(vec![9, 9])).unwrap(), 1);
        // equidistant ties to class 0
        assert_eq!(m.predict(&dense(vec![5, 5])).unwrap(), 0);
    }

    #[test]
    fn cma_step() {
        let mut m = DenseNearestCentroid::new(2).unwrap();
        m.update(&sample(vec![2, 2], 1)).unwrap();
        m.update(&sample(vec![4, 4], 1)).unwrap();
        assert_eq!(m.centroids[1], vec![3.0, 3.0]);
        assert_eq!(m.class_sample_counts[1], 2);
        assert_eq!(m.centroids[0], vec![0.0, 0.0]);
    }

    #[test]
    fn centroid_equals_batch_mean() {
        let samples = [vec![1u64, 5, 0], vec![3, 1, 2], vec![2, 0, 7], vec![6, 2, 1]];
        let mut m = DenseNearestCentroid::new(3).unwrap();
        let mut s = SparseNearestCentroid::new(3).unwrap();
        for v in &samples {
            m.update(&sample(v.clone(), 1)).unwrap();
            s.update(&sample(v.clone(), 1)).unwrap();
        }
        let n = samples.len() as f64;
        for j in 0..3 {
            let mean = samples.iter().map(|v| v[j] as f64).sum::<f64>() / n;
            assert!((m.centroids[1][j] - mean).abs() <= 1e-9 * mean.abs().max(1.0));
            assert!((s.effective(1, j) - mean).abs() <= 1e-9 * mean.abs().max(1.0));
        }
    }

    #[test]
    fn sparse_magnitude_cache_matches_reconciled_centroid() {
        let mut s = SparseNearestCentroid::new(4).unwrap();
        let seq = [
            (vec![(0usize, 3u64), (2, 1)], 0u8),
            (vec![(1, 2)], 1),
            (vec![(0, 1), (3, 5)], 0),
            (vec![(2, 4)], 0),
            (vec![(1, 1), (3, 1)], 1),
        ];
        for (pairs, y) in seq {
            let fv = FeatureVector::sparse(4, pairs).unwrap();
            s.update(&LabeledSample::new(fv, y).unwrap()).unwrap();
        }
        for c in 0..2 {
            let sq: f64 = s.effective_centroid(c).iter().map(|v| v * v).sum();
            assert!(
                (s.squared_magnitudes[c] - sq).abs() <= 1e-9 * sq.max(1.0),
                "class {c}: cached {} recomputed {sq}",
                s.squared_magnitudes[c]
            );
        }
    }

    #[test]
    fn sparse_update_touches_only_active_entries() {
        let mut s = SparseNearestCentroid::new(100).unwrap();
        let fv = FeatureVector::sparse(100, vec![(7, 2), (42, 5)]).unwrap();
        s.update(&LabeledSample::new(fv, 1).unwrap()).unwrap();
        assert_eq!(s.entries[1].len(), 2);
        assert_eq!(s.entries[0].len(), 0);
        assert_eq!(s.effective(1, 7), 2.0);
        assert_eq!(s.effective(1, 42), 5.0);
    }
}
