//! Featurization pipelines and synthetic corpus generators.
//!
//! Text featurizers are fit on the training split only and are immutable
//! afterwards. Tokenization is lowercase with splits on non-alphanumeric
//! runs. Vocabulary ties are broken lexicographically so the mapping is
//! canonical for a given training set.

use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal, Poisson};
use thiserror::Error;

use crate::models::{FeatureError, FeatureVector, LabeledSample};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("empty training texts")]
    EmptyTrainingSet,
    #[error("invalid corpus size: need n >= 20 and dimensionality >= 2")]
    InvalidSize,
    #[error("vocabulary size k must be positive")]
    ZeroVocab,
    #[error("missing field: {0}")]
    MissingField(String),
    #[error("heart rate divisor is zero")]
    ZeroHeartRate,
    #[error("field {0} must be non-negative")]
    NegativeField(String),
    #[error("label must be 0 or 1, got {0:?}")]
    BadLabel(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad csv header: expected `text,label` or `f1,...,f9,label`")]
    BadHeader,
    #[error(transparent)]
    Feature(#[from] FeatureError),
}

/// A featurized dataset with a train/test partition.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub train: Vec<LabeledSample>,
    pub test: Vec<LabeledSample>,
}

impl Corpus {
    pub fn dim(&self) -> usize {
        self.train
            .first()
            .or_else(|| self.test.first())
            .map(|s| s.features.dim())
            .unwrap_or(0)
    }
}

/// Ordered token-to-index mapping, built from a training split.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    fn from_tokens(tokens: Vec<String>) -> Self {
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Vocabulary { tokens, index }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    /// One token per line, index order.
    pub fn export_text(&self) -> String {
        let mut s = self.tokens.join("\n");
        s.push('\n');
        s
    }
}

pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

fn bigrams(tokens: &[String]) -> Vec<String> {
    tokens.windows(2).map(|w| format!("{} {}", w[0], w[1])).collect()
}

/// Top-k tokens by frequency, ties broken lexicographically.
fn top_k_by_frequency(counts: HashMap<String, u64>, k: usize) -> Vec<String> {
    let mut entries: Vec<(String, u64)> = counts.into_iter().collect();
    entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    entries.truncate(k);
    entries.into_iter().map(|(t, _)| t).collect()
}

/// Term-frequency featurizer over the top-k training-set bigrams.
#[derive(Debug, Clone, PartialEq)]
pub struct BigramTfFeaturizer {
    pub vocab: Vocabulary,
}

impl BigramTfFeaturizer {
    pub fn fit(train_texts: &[String], k: usize) -> Result<Self, DataError> {
        if train_texts.is_empty() {
            return Err(DataError::EmptyTrainingSet);
        }
        if k == 0 {
            return Err(DataError::ZeroVocab);
        }
        let mut counts: HashMap<String, u64> = HashMap::new();
        for text in train_texts {
            for b in bigrams(&tokenize(text)) {
                *counts.entry(b).or_insert(0) += 1;
            }
        }
        Ok(BigramTfFeaturizer {
            vocab: Vocabulary::from_tokens(top_k_by_frequency(counts, k)),
        })
    }

    /// Sparse term frequencies of in-vocabulary bigrams. Unknown bigrams are
    /// dropped; a text with none yields an empty sparse vector.
    pub fn apply(&self, text: &str) -> FeatureVector {
        let mut counts: std::collections::BTreeMap<usize, u64> = Default::default();
        for b in bigrams(&tokenize(text)) {
            if let Some(i) = self.vocab.index_of(&b) {
                *counts.entry(i).or_insert(0) += 1;
            }
        }
        FeatureVector::sparse(self.vocab.len(), counts.into_iter().collect())
            .expect("sorted positive counts")
    }
}

/// Binary word-presence featurizer over the top-k training-set words.
#[derive(Debug, Clone, PartialEq)]
pub struct WordPresenceFeaturizer {
    pub vocab: Vocabulary,
}

impl WordPresenceFeaturizer {
    pub fn fit(train_texts: &[String], k: usize) -> Result<Self, DataError> {
        if train_texts.is_empty() {
            return Err(DataError::EmptyTrainingSet);
        }
        if k == 0 {
            return Err(DataError::ZeroVocab);
        }
        let mut counts: HashMap<String, u64> = HashMap::new();
        for text in train_texts {
            for t in tokenize(text) {
                *counts.entry(t).or_insert(0) += 1;
            }
        }
        Ok(WordPresenceFeaturizer {
            vocab: Vocabulary::from_tokens(top_k_by_frequency(counts, k)),
        })
    }

    /// Value 1 per vocabulary word present in the text.
    pub fn apply(&self, text: &str) -> FeatureVector {
        let mut present: std::collections::BTreeSet<usize> = Default::default();
        for t in tokenize(text) {
            if let Some(i) = self.vocab.index_of(&t) {
                present.insert(i);
            }
        }
        FeatureVector::sparse(self.vocab.len(), present.into_iter().map(|i| (i, 1)).collect())
            .expect("sorted positive presence")
    }
}

/// Raw fields of one fitness-tracker activity record.
#[derive(Debug, Clone, PartialEq)]
pub struct FitnessRecord {
    pub avg_heart_rate: f64,
    pub min_heart_rate: f64,
    pub max_heart_rate: f64,
    pub max_speed: f64,
    pub min_speed: f64,
    pub avg_speed: f64,
    pub median_speed: f64,
    /// 0 or 1.
    pub gender: u8,
}

/// Ratio and speed features are scaled to integers by this fixed factor.
pub const FITNESS_SCALE: f64 = 1000.0;

pub const FITNESS_DIM: usize = 9;

/// Nine engineered integer features: heart rates, scaled speeds, gender,
/// and two heart-rate ratios.
pub fn fitness_features(r: &FitnessRecord) -> Result<FeatureVector, DataError> {
    let fields = [
        ("avg_heart_rate", r.avg_heart_rate),
        ("min_heart_rate", r.min_heart_rate),
        ("max_heart_rate", r.max_heart_rate),
        ("max_speed", r.max_speed),
        ("min_speed", r.min_speed),
        ("avg_speed", r.avg_speed),
        ("median_speed", r.median_speed),
    ];
    for (name, v) in fields {
        if !v.is_finite() || v < 0.0 {
            return Err(DataError::NegativeField(name.to_string()));
        }
    }
    if r.min_heart_rate == 0.0 || r.avg_heart_rate == 0.0 {
        return Err(DataError::ZeroHeartRate);
    }
    let values = vec![
        r.avg_heart_rate.round() as u64,
        r.max_heart_rate.round() as u64,
        (r.max_speed * FITNESS_SCALE).round() as u64,
        (r.min_speed * FITNESS_SCALE).round() as u64,
        (r.avg_speed * FITNESS_SCALE).round() as u64,
        (r.median_speed * FITNESS_SCALE).round() as u64,
        r.gender.min(1) as u64,
        (r.avg_heart_rate / r.min_heart_rate * FITNESS_SCALE).round() as u64,
        (r.max_heart_rate / r.avg_heart_rate * FITNESS_SCALE).round() as u64,
    ];
    Ok(FeatureVector::dense(values)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthKind {
    /// Two Gaussian clusters separated by 2 sigma per informative dimension.
    Separable,
    /// Separable plus 10% label noise.
    Noisy,
    /// Sparse integer count vectors from two skewed token distributions.
    TextLike,
}

impl SynthKind {
    pub fn name(self) -> &'static str {
        match self {
            SynthKind::Separable => "separable",
            SynthKind::Noisy => "noisy",
            SynthKind::TextLike => "text-like",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "separable" => Some(SynthKind::Separable),
            "noisy" => Some(SynthKind::Noisy),
            "text-like" | "textlike" => Some(SynthKind::TextLike),
            _ => None,
        }
    }
}

const CLUSTER_SIGMA: f64 = 5.0;
const CLUSTER_BASE_MEAN: f64 = 25.0;
/// Class means differ by 2 sigma in each informative dimension.
const CLUSTER_SHIFT: f64 = 2.0 * CLUSTER_SIGMA;
/// Number of leading dimensions that carry class signal.
const INFORMATIVE_DIMS: usize = 4;
const NOISE_RATE: f64 = 0.10;

/// Deterministic synthetic corpus with an 80/20 train/test split.
pub fn synth_generate(
    kind: SynthKind,
    n: usize,
    dim: usize,
    seed: u64,
) -> Result<Corpus, DataError> {
    if n < 20 || dim < 2 {
        return Err(DataError::InvalidSize);
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    // separate stream for label noise so noisy and clean corpora from the
    // same seed share their base samples
    let mut noise_rng = ChaCha12Rng::seed_from_u64(seed ^ 0x9E37_79B9_7F4A_7C15);
    let mut samples = Vec::with_capacity(n);
    match kind {
        SynthKind::Separable | SynthKind::Noisy => {
            let normal = Normal::new(0.0, CLUSTER_SIGMA).unwrap();
            let informative = INFORMATIVE_DIMS.min(dim);
            for _ in 0..n {
                let label = rng.gen_bool(0.5) as u8;
                let mut values = Vec::with_capacity(dim);
                for j in 0..dim {
                    let mut mean = CLUSTER_BASE_MEAN;
                    if j < informative {
                        mean += if label == 1 {
                            CLUSTER_SHIFT / 2.0
                        } else {
                            -CLUSTER_SHIFT / 2.0
                        };
                    }
                    let v = (mean + normal.sample(&mut rng)).round().max(0.0) as u64;
                    values.push(v);
                }
                let mut s = LabeledSample::new(FeatureVector::dense(values)?, label)?;
                if kind == SynthKind::Noisy && noise_rng.gen_bool(NOISE_RATE) {
                    s = s.flipped();
                }
                samples.push(s);
            }
        }
        SynthKind::TextLike => {
            let length = Poisson::new(20.0).unwrap();
            for _ in 0..n {
                let label = rng.gen_bool(0.5) as u8;
                let tokens = length.sample(&mut rng) as usize + 1;
                let mut counts: std::collections::BTreeMap<usize, u64> = Default::default();
                for _ in 0..tokens {
                    // geometric-ish preference over indices, mirrored per class
                    let r: f64 = rng.gen();
                    let idx = ((-r.ln() / 0.35) as usize).min(dim - 1);
                    let idx = if label == 1 { dim - 1 - idx } else { idx };
                    *counts.entry(idx).or_insert(0) += 1;
                }
                let fv = FeatureVector::sparse(dim, counts.into_iter().collect())?;
                samples.push(LabeledSample::new(fv, label)?);
            }
        }
    }
    let split = n * 4 / 5;
    let test = samples.split_off(split);
    Ok(Corpus {
        train: samples,
        test,
    })
}

/// Load a corpus from CSV. Header `text,label` featurizes the text column
/// with the supplied featurizer builder; header `f1,...,f9,label` takes the
/// nine integer features directly. 80/20 train/test split in file order.
pub fn load_csv_corpus<R: Read>(
    reader: R,
    text_featurizer: impl FnOnce(&[String]) -> Result<Box<dyn Fn(&str) -> FeatureVector>, DataError>,
) -> Result<Corpus, DataError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let cols: Vec<&str> = headers.iter().collect();
    let mut samples: Vec<LabeledSample> = Vec::new();
    if cols == ["text", "label"] {
        let mut rows: Vec<(String, u8)> = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let text = rec.get(0).ok_or_else(|| DataError::MissingField("text".into()))?;
            let label = parse_label(rec.get(1).unwrap_or(""))?;
            rows.push((text.to_string(), label));
        }
        let split = rows.len() * 4 / 5;
        let train_texts: Vec<String> = rows[..split].iter().map(|(t, _)| t.clone()).collect();
        let apply = text_featurizer(&train_texts)?;
        for (text, label) in rows {
            samples.push(LabeledSample::new(apply(&text), label)?);
        }
    } else if cols.len() == 10 && cols[9] == "label" {
        for rec in rdr.records() {
            let rec = rec?;
            let mut values = Vec::with_capacity(9);
            for i in 0..9 {
                let raw = rec
                    .get(i)
                    .ok_or_else(|| DataError::MissingField(cols[i].to_string()))?;
                values.push(
                    raw.trim()
                        .parse::<u64>()
                        .map_err(|_| DataError::NegativeField(cols[i].to_string()))?,
                );
            }
            let label = parse_label(rec.get(9).unwrap_or(""))?;
            samples.push(LabeledSample::new(FeatureVector::dense(values)?, label)?);
        }
    } else {
        return Err(DataError::BadHeader);
    }
    let split = samples.len() * 4 / 5;
    let test = samples.split_off(split);
    Ok(Corpus {
        train: samples,
        test,
    })
}

pub fn load_csv_corpus_path(
    path: &Path,
    text_featurizer: impl FnOnce(&[String]) -> Result<Box<dyn Fn(&str) -> FeatureVector>, DataError>,
) -> Result<Corpus, DataError> {
    let file = std::fs::File::open(path)?;
    load_csv_corpus(file, text_featurizer)
}

fn parse_label(s: &str) -> Result<u8, DataError> {
    match s.trim() {
        "0" => Ok(0),
        "1" => Ok(1),
        other => Err(DataError::BadLabel(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bigram_tf_hand_countable() {
        let f = BigramTfFeaturizer::fit(&["a b a b".to_string()], 2).unwrap();
        assert_eq!(f.vocab.tokens(), &["a b".to_string(), "b a".to_string()]);
        let v = f.apply("a b a b");
        assert_eq!(v, FeatureVector::sparse(2, vec![(0, 2), (1, 1)]).unwrap());
    }

    #[test]
    fn unknown_bigrams_yield_empty_vector() {
        let f = BigramTfFeaturizer::fit(&["a b a b".to_string()], 2).unwrap();
        let v = f.apply("x y z");
        assert_eq!(v.active_count(), 0);
        assert_eq!(v.dim(), 2);
        assert_eq!(f.apply("").active_count(), 0);
    }

    #[test]
    fn top_k_order_matches_brute_force_sort() {
        let texts = vec![
            "c a c a b b".to_string(),
            "a c b c a a".to_string(),
            "b a a c".to_string(),
        ];
        let f = BigramTfFeaturizer::fit(&texts, 3).unwrap();
        // independent recount and sort
        let mut counts: HashMap<String, u64> = HashMap::new();
        for t in &texts {
            for b in bigrams(&tokenize(t)) {
                *counts.entry(b).or_insert(0) += 1;
            }
        }
        let mut all: Vec<(String, u64)> = counts.into_iter().collect();
        all.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let expected: Vec<String> = all.into_iter().take(3).map(|(t, _)| t).collect();
        assert_eq!(f.vocab.tokens(), expected.as_slice());
        assert_eq!(f.vocab.len(), 3);
    }

    #[test]
    fn word_presence_not_count() {
        let f =
            WordPresenceFeaturizer::fit(&["good movie".to_string(), "good plot".to_string()], 10)
                .unwrap();
        let gi = f.vocab.index_of("good").unwrap();
        let mi = f.vocab.index_of("movie").unwrap();
        let v = f.apply("good good movie");
        assert_eq!(v.get(gi), 1);
        assert_eq!(v.get(mi), 1);
        assert_eq!(v.active_count(), 2);
        assert_eq!(f.apply("").active_count(), 0);
    }

    #[test]
    fn fitness_ratio_and_dimension() {
        let r = FitnessRecord {
            avg_heart_rate: 120.0,
            min_heart_rate: 60.0,
            max_heart_rate: 150.0,
            max_speed: 8.2,
            min_speed: 1.1,
            avg_speed: 4.5,
            median_speed: 4.4,
            gender: 1,
        };
        let v = fitness_features(&r).unwrap();
        assert_eq!(v.dim(), FITNESS_DIM);
        assert_eq!(v.get(7), 2000); // 120/60 * 1000
        let zero_hr = FitnessRecord {
            min_heart_rate: 0.0,
            ..r
        };
        assert!(matches!(
            fitness_features(&zero_hr),
            Err(DataError::ZeroHeartRate)
        ));
    }

    #[test]
    fn synth_deterministic_and_split() {
        let a = synth_generate(SynthKind::Separable, 100, 9, 7).unwrap();
        let b = synth_generate(SynthKind::Separable, 100, 9, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.train.len(), 80);
        assert_eq!(a.test.len(), 20);
        let c = synth_generate(SynthKind::Separable, 100, 9, 8).unwrap();
        assert_ne!(a, c);
        assert!(synth_generate(SynthKind::Separable, 10, 9, 7).is_err());
        assert!(synth_generate(SynthKind::Separable, 100, 1, 7).is_err());
    }

    #[test]
    fn noisy_flip_rate_near_ten_percent() {
        let clean = synth_generate(SynthKind::Separable, 10_000, 5, 42).unwrap();
        let noisy = synth_generate(SynthKind::Noisy, 10_000, 5, 42).unwrap();
        let flips: usize = clean
            .train
            .iter()
            .chain(clean.test.iter())
            .zip(noisy.train.iter().chain(noisy.test.iter()))
            .filter(|(a, b)| a.label != b.label)
            .count();
        let rate = flips as f64 / 10_000.0;
        assert!((rate - NOISE_RATE).abs() <= 0.02, "rate {rate}");
    }

    #[test]
    fn text_like_is_sparse_and_valid() {
        let c = synth_generate(SynthKind::TextLike, 200, 50, 3).unwrap();
        for s in c.train.iter().chain(c.test.iter()) {
            assert!(matches!(s.features, FeatureVector::Sparse { .. }));
            assert!(s.features.active_count() > 0);
            assert_eq!(s.features.dim(), 50);
        }
    }

    #[test]
    fn csv_text_corpus_loads() {
        let csv = "text,label\ngood movie,1\nbad movie,0\nfine plot,1\nawful plot,0\nnice one,1\n";
        let corpus = load_csv_corpus(csv.as_bytes(), |train| {
            let f = WordPresenceFeaturizer::fit(train, 100)?;
            Ok(Box::new(move |t: &str| f.apply(t)))
        })
        .unwrap();
        assert_eq!(corpus.train.len(), 4);
        assert_eq!(corpus.test.len(), 1);
    }

    #[test]
    fn csv_dense_corpus_loads() {
        let mut csv = String::from("f1,f2,f3,f4,f5,f6,f7,f8,f9,label\n");
        for i in 0..10 {
            csv.push_str(&format!("{i},1,2,3,4,5,6,7,8,{}\n", i % 2));
        }
        let corpus = load_csv_corpus(csv.as_bytes(), |_| unreachable!("dense path")).unwrap();
        assert_eq!(corpus.dim(), 9);
        assert_eq!(corpus.train.len(), 8);
    }

    #[test]
    fn csv_bad_header_rejected() {
        let csv = "foo,bar\n1,2\n";
        assert!(matches!(
            load_csv_corpus(csv.as_bytes(), |_| unreachable!()),
            Err(DataError::BadHeader)
        ));
    }

    #[test]
    fn vocabulary_immutable_after_fit() {
        let f = WordPresenceFeaturizer::fit(&["alpha beta".to_string()], 10).unwrap();
        let before = f.vocab.clone();
        let _ = f.apply("gamma delta epsilon");
        assert_eq!(f.vocab, before);
        assert_eq!(f.vocab.export_text(), "alpha\nbeta\n");
    }
}
