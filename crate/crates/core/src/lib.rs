//! Explainable proof-method recommendation.
//!
//! A corpus of `(method, boolean feature vector)` records is split into one
//! binary "used / not" dataset per method, and each dataset gets its own
//! depth-limited regression tree. Queries evaluate every tree on a vector to
//! rank methods, walk one tree to explain a recommendation, or report where a
//! given method ranks.

mod bitset;
pub mod corpus;
pub mod error;
pub mod evaluate;
pub mod preprocess;
pub mod recommend;
pub mod synth;
pub mod trees;

pub use corpus::{
    corpus_stats, parse_database, parse_feature_catalog, Corpus, DataPoint, FeatureCatalog,
    FeatureVector, UsageRow,
};
pub use error::{Error, ParseError, Result};
pub use evaluate::{run_evaluation, split_corpus, EvaluationReport, MethodRow, SplitSpec};
pub use preprocess::{single_target_split, BinaryDataset, FeatureMatrix};
pub use recommend::{
    evaluate_tree, rank_method, which_method, why_method, Explanation, ExplanationStep,
    Recommendation,
};
pub use synth::{generate, parse_planted_model, zipf_imbalance, Distribution, PlantedModel, Rule};
pub use trees::{
    best_split, build_tree, load_model, rss, save_model, train, used_features, ModelSet, Region,
    Split, TrainConfig, TreeNode,
};
