//! Single-target transformation: one binary "used / not" dataset per method.
//!
//! Every dataset shares one column-major [`FeatureMatrix`]; only the label
//! bits are stored per method.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::bitset::BitSet;
use crate::corpus::{Corpus, FeatureVector};

/// Column-major bit storage of the feature vectors of a corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureMatrix {
    rows: usize,
    columns: Vec<BitSet>,
}

impl FeatureMatrix {
    pub fn from_vectors<'a>(
        feature_count: usize,
        vectors: impl ExactSizeIterator<Item = &'a FeatureVector>,
    ) -> Self {
        let rows = vectors.len();
        let mut columns = vec![BitSet::new(rows); feature_count];
        for (r, v) in vectors.enumerate() {
            assert_eq!(v.len(), feature_count, "row {r} has the wrong width");
            for (j, &bit) in v.bits().iter().enumerate() {
                if bit {
                    columns[j].insert(r);
                }
            }
        }
        FeatureMatrix { rows, columns }
    }

    pub fn from_corpus(corpus: &Corpus) -> Self {
        Self::from_vectors(
            corpus.feature_count(),
            corpus.points().iter().map(|p| &p.features),
        )
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn feature_count(&self) -> usize {
        self.columns.len()
    }

    pub fn get(&self, row: usize, feature: usize) -> bool {
        self.columns[feature].contains(row)
    }

    /// Reassembles one row.
    pub fn row(&self, row: usize) -> FeatureVector {
        FeatureVector::new(self.columns.iter().map(|c| c.contains(row)).collect())
    }

    pub(crate) fn column(&self, feature: usize) -> &BitSet {
        &self.columns[feature]
    }
}

/// One method's view of the corpus: every point labeled 1.0 (used) or 0.0 (not).
#[derive(Debug, Clone)]
pub struct BinaryDataset {
    method: String,
    labels: BitSet,
    positives: usize,
    matrix: Arc<FeatureMatrix>,
}

impl BinaryDataset {
    /// Builds a dataset from explicit `(label, vector)` pairs.
    pub fn from_labeled(method: impl Into<String>, points: &[(bool, FeatureVector)]) -> Self {
        let width = points.first().map_or(0, |(_, v)| v.len());
        let matrix = FeatureMatrix::from_vectors(width, points.iter().map(|(_, v)| v));
        let mut labels = BitSet::new(points.len());
        for (i, (label, _)) in points.iter().enumerate() {
            if *label {
                labels.insert(i);
            }
        }
        Self::with_labels(method.into(), labels, Arc::new(matrix))
    }

    fn with_labels(method: String, labels: BitSet, matrix: Arc<FeatureMatrix>) -> Self {
        debug_assert_eq!(labels.len(), matrix.rows());
        BinaryDataset {
            method,
            positives: labels.count(),
            labels,
            matrix,
        }
    }

    pub fn method(&self) -> &str {
        &self.method
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn positives(&self) -> usize {
        self.positives
    }

    pub fn feature_count(&self) -> usize {
        self.matrix.feature_count()
    }

    /// The `used` value of point `i`: 1.0 or 0.0.
    pub fn label(&self, i: usize) -> f64 {
        if self.labels.contains(i) {
            1.0
        } else {
            0.0
        }
    }

    pub fn matrix(&self) -> &FeatureMatrix {
        &self.matrix
    }

    pub(crate) fn label_bits(&self) -> &BitSet {
        &self.labels
    }

    /// Renders the dataset in the `used, [..]` / `not, [..]` line format.
    pub fn to_debug_text(&self) -> String {
        let mut out = String::new();
        for i in 0..self.len() {
            out.push_str(if self.labels.contains(i) { "used, " } else { "not, " });
            out.push_str(&self.matrix.row(i).to_string());
            out.push('\n');
        }
        out
    }
}

/// Splits a corpus into one binary dataset per method that occurs in it.
///
/// For a raw point `(m, v)`, the dataset of `m` receives `(1.0, v)` and every
/// other dataset receives `(0.0, v)`. Datasets preserve corpus order.
pub fn single_target_split(corpus: &Corpus) -> BTreeMap<String, BinaryDataset> {
    let matrix = Arc::new(FeatureMatrix::from_corpus(corpus));
    let mut labels: BTreeMap<&str, BitSet> = corpus
        .methods()
        .keys()
        .map(|m| (m.as_str(), BitSet::new(corpus.len())))
        .collect();
    for (i, p) in corpus.points().iter().enumerate() {
        labels
            .get_mut(p.method.as_str())
            .expect("method table covers every point")
            .insert(i);
    }
    labels
        .into_iter()
        .map(|(m, bits)| {
            (
                m.to_string(),
                BinaryDataset::with_labels(m.to_string(), bits, Arc::clone(&matrix)),
            )
        })
        .collect()
}
