//! Versioned binary snapshot format for model state.
//!
//! Layout: magic "DCAI", format version (u16 LE), model kind (u8), payload
//! length (u64 LE), payload. All integers little-endian; f64 as LE bit
//! patterns so restore is bit-exact.

use thiserror::Error;

use super::nearest_centroid::LazyEntry;
use super::{
    DenseNearestCentroid, Model, ModelKind, NaiveBayesModel, PerceptronModel,
    SparseNearestCentroid,
};

pub const MAGIC: &[u8; 4] = b"DCAI";
pub const FORMAT_VERSION: u16 = 1;

/// Serialized model state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelCheckpoint(pub Vec<u8>);

impl ModelCheckpoint {
    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn kind(&self) -> Option<ModelKind> {
        self.0.get(6).copied().and_then(ModelKind::from_tag)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CheckpointError {
    #[error("checkpoint too short ({0} bytes)")]
    Truncated(usize),
    #[error("bad magic")]
    BadMagic,
    #[error("unsupported format version {0}")]
    BadVersion(u16),
    #[error("unknown model kind tag {0}")]
    BadKind(u8),
    #[error("payload length mismatch: header says {expected}, have {got}")]
    LengthMismatch { expected: u64, got: usize },
    #[error("corrupted payload at offset {0}")]
    Corrupted(usize),
}

struct Writer(Vec<u8>);

impl Writer {
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64_seq(&mut self, vs: &[f64]) {
        self.u64(vs.len() as u64);
        for &v in vs {
            self.f64(v);
        }
    }
    fn u64_seq(&mut self, vs: &[u64]) {
        self.u64(vs.len() as u64);
        for &v in vs {
            self.u64(v);
        }
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CheckpointError> {
        if self.pos + n > self.bytes.len() {
            return Err(CheckpointError::Corrupted(self.pos));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u64(&mut self) -> Result<u64, CheckpointError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64, CheckpointError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn len(&mut self) -> Result<usize, CheckpointError> {
        let n = self.u64()?;
        // cheap sanity bound: a sequence cannot be longer than the remaining bytes
        if n > (self.bytes.len() - self.pos) as u64 {
            return Err(CheckpointError::Corrupted(self.pos));
        }
        Ok(n as usize)
    }
    fn f64_seq(&mut self) -> Result<Vec<f64>, CheckpointError> {
        let n = self.len()?;
        (0..n).map(|_| self.f64()).collect()
    }
    fn u64_seq(&mut self) -> Result<Vec<u64>, CheckpointError> {
        let n = self.len()?;
        (0..n).map(|_| self.u64()).collect()
    }
    fn done(&self) -> Result<(), CheckpointError> {
        if self.pos != self.bytes.len() {
            return Err(CheckpointError::Corrupted(self.pos));
        }
        Ok(())
    }
}

pub fn snapshot(model: &Model) -> ModelCheckpoint {
    let mut w = Writer(Vec::new());
    match model {
        Model::Perceptron(m) => {
            w.f64_seq(&m.weights);
            w.f64(m.bias);
            w.f64(m.learning_rate);
        }
        Model::NaiveBayes(m) => {
            w.u64(m.dim as u64);
            w.u64(m.class_counts[0]);
            w.u64(m.class_counts[1]);
            w.u64_seq(&m.feature_counts[0]);
            w.u64_seq(&m.feature_counts[1]);
            w.u64(m.total_feature_counts[0]);
            w.u64(m.total_feature_counts[1]);
            w.f64(m.smoothing);
        }
        Model::NearestCentroidDense(m) => {
            w.f64_seq(&m.centroids[0]);
            w.f64_seq(&m.centroids[1]);
            w.u64(m.class_sample_counts[0]);
            w.u64(m.class_sample_counts[1]);
        }
        Model::NearestCentroidSparse(m) => {
            w.u64(m.dim as u64);
            for c in 0..2 {
                w.u64(m.entries[c].len() as u64);
                for (&i, e) in &m.entries[c] {
                    w.u64(i as u64);
                    w.f64(e.value);
                    w.u64(e.denominator);
                }
            }
            w.u64(m.class_sample_counts[0]);
            w.u64(m.class_sample_counts[1]);
            w.f64(m.squared_magnitudes[0]);
            w.f64(m.squared_magnitudes[1]);
        }
    }
    let payload = w.0;
    let mut out = Vec::with_capacity(payload.len() + 15);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.push(model.kind().tag());
    out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
    out.extend_from_slice(&payload);
    ModelCheckpoint(out)
}

pub fn restore(bytes: &[u8]) -> Result<Model, CheckpointError> {
    if bytes.len() < 15 {
        return Err(CheckpointError::Truncated(bytes.len()));
    }
    if &bytes[0..4] != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let version = u16::from_le_bytes(bytes[4..6].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(CheckpointError::BadVersion(version));
    }
    let kind = ModelKind::from_tag(bytes[6]).ok_or(CheckpointError::BadKind(bytes[6]))?;
    let expected = u64::from_le_bytes(bytes[7..15].try_into().unwrap());
    let payload = &bytes[15..];
    if expected != payload.len() as u64 {
        return Err(CheckpointError::LengthMismatch {
            expected,
            got: payload.len(),
        });
    }
    let mut r = Reader {
        bytes: payload,
        pos: 0,
    };
    let model = match kind {
        ModelKind::Perceptron => {
            let weights = r.f64_seq()?;
            let bias = r.f64()?;
            let learning_rate = r.f64()?;
            Model::Perceptron(PerceptronModel {
                weights,
                bias,
                learning_rate,
            })
        }
        ModelKind::NaiveBayes => {
            let dim = r.u64()? as usize;
            let class_counts = [r.u64()?, r.u64()?];
            let fc0 = r.u64_seq()?;
            let fc1 = r.u64_seq()?;
            let totals = [r.u64()?, r.u64()?];
            let smoothing = r.f64()?;
            if fc0.len() != dim || fc1.len() != dim {
                return Err(CheckpointError::Corrupted(r.pos));
            }
            Model::NaiveBayes(NaiveBayesModel {
                dim,
                class_counts,
                feature_counts: [fc0, fc1],
                total_feature_counts: totals,
                smoothing,
            })
        }
        ModelKind::NearestCentroidDense => {
            let c0 = r.f64_seq()?;
            let c1 = r.f64_seq()?;
            let counts = [r.u64()?, r.u64()?];
            if c0.len() != c1.len() || c0.is_empty() {
                return Err(CheckpointError::Corrupted(r.pos));
            }
            Model::NearestCentroidDense(DenseNearestCentroid {
                centroids: [c0, c1],
                class_sample_counts: counts,
            })
        }
        ModelKind::NearestCentroidSparse => {
            let dim = r.u64()? as usize;
            let mut entries = [std::collections::BTreeMap::new(), std::collections::BTreeMap::new()];
            for class_entries in entries.iter_mut() {
                let n = r.len()?;
                for _ in 0..n {
                    let i = r.u64()? as usize;
                    let value = r.f64()?;
                    let denominator = r.u64()?;
                    if i >= dim {
                        return Err(CheckpointError::Corrupted(r.pos));
                    }
                    class_entries.insert(i, LazyEntry { value, denominator });
                }
            }
            let counts = [r.u64()?, r.u64()?];
            let mags = [r.f64()?, r.f64()?];
            Model::NearestCentroidSparse(SparseNearestCentroid {
                dim,
                entries,
                class_sample_counts: counts,
                squared_magnitudes: mags,
            })
        }
    };
    r.done()?;
    Ok(model)
}

pub fn to_text(model: &Model) -> String {
    use std::fmt::Write;
    let mut s = String::new();
    writeln!(s, "kind: {}", model.kind().name()).unwrap();
    writeln!(s, "dim: {}", model.dim()).unwrap();
    match model {
        Model::Perceptron(m) => {
            writeln!(s, "bias: {}", m.bias).unwrap();
            writeln!(s, "learning_rate: {}", m.learning_rate).unwrap();
            writeln!(s, "weights: {:?}", m.weights).unwrap();
        }
        Model::NaiveBayes(m) => {
            writeln!(s, "class_counts: {:?}", m.class_counts).unwrap();
            writeln!(s, "total_feature_counts: {:?}", m.total_feature_counts).unwrap();
            writeln!(s, "smoothing: {}", m.smoothing).unwrap();
            writeln!(s, "feature_counts[0]: {:?}", m.feature_counts[0]).unwrap();
            writeln!(s, "feature_counts[1]: {:?}", m.feature_counts[1]).unwrap();
        }
        Model::NearestCentroidDense(m) => {
            writeln!(s, "class_sample_counts: {:?}", m.class_sample_counts).unwrap();
            writeln!(s, "centroid[0]: {:?}", m.centroids[0]).unwrap();
            writeln!(s, "centroid[1]: {:?}", m.centroids[1]).unwrap();
        }
        Model::NearestCentroidSparse(m) => {
            writeln!(s, "class_sample_counts: {:?}", m.class_sample_counts).unwrap();
            writeln!(s, "squared_magnitudes: {:?}", m.squared_magnitudes).unwrap();
            for c in 0..2 {
                write!(s, "centroid[{c}]:").unwrap();
                for (i, e) in &m.entries[c] {
                    write!(s, " {i}={}/{}", e.value, e.denominator).unwrap();
                }
                writeln!(s).unwrap();
            }
        }
    }
    s
}
