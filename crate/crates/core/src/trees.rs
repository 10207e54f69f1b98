//! Depth-limited regression trees grown by recursive binary splitting.
//!
//! Each node chooses the feature whose true/false partition minimizes the
//! summed residual sum of squares of the two halves. Labels are 0/1, so the
//! RSS of a region with `n` points of which `p` are positive is exactly
//! `p * (n - p) / n`; split scores are compared as exact fractions.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use rayon::prelude::*;

use crate::bitset::BitSet;
use crate::corpus::{is_valid_method_name, Corpus, FeatureCatalog};
use crate::error::{Error, ParseError, Result};
use crate::preprocess::{single_target_split, BinaryDataset};

pub const DEFAULT_MAX_DEPTH: usize = 5;
pub const DEFAULT_MIN_POINTS_TO_SPLIT: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrainConfig {
    pub max_depth: usize,
    pub min_points_to_split: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            max_depth: DEFAULT_MAX_DEPTH,
            min_points_to_split: DEFAULT_MIN_POINTS_TO_SPLIT,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_depth == 0 {
            return Err(Error::config("max_depth must be at least 1"));
        }
        if self.min_points_to_split == 0 {
            return Err(Error::config("min_points_to_split must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Leaf {
        /// Mean label of the region that reaches this leaf.
        expectation: f64,
        count: usize,
    },
    Internal {
        feature: usize,
        when_false: Box<TreeNode>,
        when_true: Box<TreeNode>,
    },
}

impl TreeNode {
    pub fn leaf(expectation: f64, count: usize) -> Self {
        TreeNode::Leaf { expectation, count }
    }

    pub fn internal(feature: usize, when_false: TreeNode, when_true: TreeNode) -> Self {
        TreeNode::Internal {
            feature,
            when_false: Box::new(when_false),
            when_true: Box::new(when_true),
        }
    }

    /// Depth of the deepest node; a single leaf has depth 0.
    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Internal {
                when_false,
                when_true,
                ..
            } => 1 + when_false.depth().max(when_true.depth()),
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Internal {
                when_false,
                when_true,
                ..
            } => 1 + when_false.node_count() + when_true.node_count(),
        }
    }

    /// `(expectation, count)` of every leaf, false branch first.
    pub fn leaves(&self) -> Vec<(f64, usize)> {
        let mut out = Vec::new();
        self.visit(&mut |n| {
            if let TreeNode::Leaf { expectation, count } = n {
                out.push((*expectation, *count));
            }
        });
        out
    }

    fn visit<'a>(&'a self, f: &mut impl FnMut(&'a TreeNode)) {
        f(self);
        if let TreeNode::Internal {
            when_false,
            when_true,
            ..
        } = self
        {
            when_false.visit(f);
            when_true.visit(f);
        }
    }

    fn collect_features(&self, into: &mut BTreeSet<usize>) {
        self.visit(&mut |n| {
            if let TreeNode::Internal { feature, .. } = n {
                into.insert(*feature);
            }
        });
    }
}

/// Writes the model-file tree grammar: `L(<e>,<n>)` or `N(<j>,<false>,<true>)`.
impl fmt::Display for TreeNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TreeNode::Leaf { expectation, count } => write!(f, "L({expectation},{count})"),
            TreeNode::Internal {
                feature,
                when_false,
                when_true,
            } => write!(f, "N({feature},{when_false},{when_true})"),
        }
    }
}

/// RSS of a set of 0/1 labels around their mean. Empty input gives 0.
pub fn rss(labels: &[f64]) -> f64 {
    debug_assert!(labels.iter().all(|&l| l == 0.0 || l == 1.0));
    let positives = labels.iter().filter(|&&l| l == 1.0).count();
    rss_from_counts(labels.len(), positives)
}

/// RSS of a region with `n` binary labels of which `positives` are 1.
pub fn rss_from_counts(n: usize, positives: usize) -> f64 {
    Fraction::rss(n as u128, positives as u128).to_f64()
}

/// Nonnegative rational used to compare RSS values without rounding.
#[derive(Debug, Clone, Copy)]
struct Fraction {
    num: u128,
    den: u128,
}

impl Fraction {
    fn rss(n: u128, p: u128) -> Self {
        if n == 0 {
            return Fraction { num: 0, den: 1 };
        }
        Fraction {
            num: p * (n - p),
            den: n,
        }
    }

    fn add(self, other: Fraction) -> Fraction {
        Fraction {
            num: self.num * other.den + other.num * self.den,
            den: self.den * other.den,
        }
        .reduced()
    }

    fn reduced(self) -> Fraction {
        let g = gcd(self.num, self.den);
        if g <= 1 {
            self
        } else {
            Fraction {
                num: self.num / g,
                den: self.den / g,
            }
        }
    }

    fn to_f64(self) -> f64 {
        let r = self.reduced();
        r.num as f64 / r.den as f64
    }
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl PartialEq for Fraction {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Fraction {}

impl PartialOrd for Fraction {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Fraction {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.num * other.den).cmp(&(other.num * self.den))
    }
}

/// Subset of a dataset's points, by index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Region(BitSet);

impl Region {
    pub fn all(ds: &BinaryDataset) -> Self {
        Region(BitSet::full(ds.len()))
    }

    pub fn from_indices(ds: &BinaryDataset, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut bits = BitSet::new(ds.len());
        for i in indices {
            bits.insert(i);
        }
        Region(bits)
    }

    pub fn len(&self) -> usize {
        self.0.count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.ones()
    }
}

/// The chosen split of a region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub feature: usize,
    /// `rss(R_true) + rss(R_false)` after splitting on `feature`.
    pub rss: f64,
}

struct Candidate {
    feature: usize,
    score: Fraction,
}

fn best_split_counts(
    ds: &BinaryDataset,
    region: &BitSet,
    candidates: impl IntoIterator<Item = usize>,
) -> Option<Candidate> {
    let n = region.count() as u128;
    if n == 0 {
        return None;
    }
    let positive_region = region.and(ds.label_bits());
    let p = positive_region.count() as u128;
    let parent = Fraction::rss(n, p);
    let mut best: Option<Candidate> = None;
    for j in candidates {
        let column = ds.matrix().column(j);
        let n_true = region.and_count(column) as u128;
        if n_true == 0 || n_true == n {
            continue;
        }
        let p_true = positive_region.and_count(column) as u128;
        let score = Fraction::rss(n_true, p_true).add(Fraction::rss(n - n_true, p - p_true));
        if score >= parent {
            continue;
        }
        let better = match &best {
            None => true,
            Some(b) => score < b.score || (score == b.score && j < b.feature),
        };
        if better {
            best = Some(Candidate { feature: j, score });
        }
    }
    best
}

/// Chooses the candidate feature whose split minimizes the summed RSS of the
/// two halves, with ties going to the lowest feature index.
///
/// Returns `None` when no candidate strictly reduces the region's RSS. A
/// feature that leaves one side empty never qualifies.
pub fn best_split(ds: &BinaryDataset, region: &Region, candidates: &[usize]) -> Option<Split> {
    best_split_counts(ds, &region.0, candidates.iter().copied()).map(|c| Split {
        feature: c.feature,
        rss: c.score.to_f64(),
    })
}

/// Grows one tree for a binary dataset.
pub fn build_tree(ds: &BinaryDataset, cfg: &TrainConfig) -> Result<TreeNode> {
    cfg.validate()?;
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(grow(ds, cfg, BitSet::full(ds.len()), 0))
}

fn grow(ds: &BinaryDataset, cfg: &TrainConfig, region: BitSet, depth: usize) -> TreeNode {
    let n = region.count();
    let positives = region.and_count(ds.label_bits());
    let leaf = || TreeNode::leaf(positives as f64 / n as f64, n);
    if depth >= cfg.max_depth || n < cfg.min_points_to_split || positives == 0 || positives == n
    {
        return leaf();
    }
    match best_split_counts(ds, &region, 0..ds.feature_count()) {
        None => leaf(),
        Some(c) => {
            let column = ds.matrix().column(c.feature);
            let when_true = region.and(column);
            let when_false = region.and_not(column);
            TreeNode::internal(
                c.feature,
                grow(ds, cfg, when_false, depth + 1),
                grow(ds, cfg, when_true, depth + 1),
            )
        }
    }
}

/// Trained trees for every method plus the metadata needed to query them.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSet {
    pub feature_count: usize,
    pub max_depth: usize,
    pub trees: BTreeMap<String, TreeNode>,
    pub catalog: FeatureCatalog,
}

impl ModelSet {
    pub fn method_count(&self) -> usize {
        self.trees.len()
    }

    pub fn tree(&self, method: &str) -> Result<&TreeNode> {
        self.trees
            .get(method)
            .ok_or_else(|| Error::UnknownMethod(method.to_string()))
    }
}

/// Trains one tree per method occurring in the corpus.
///
/// Trees are grown in parallel on the current rayon pool; the result does
/// not depend on the number of threads.
pub fn train(corpus: &Corpus, cfg: &TrainConfig, catalog: FeatureCatalog) -> Result<ModelSet> {
    cfg.validate()?;
    catalog.check_width(corpus.feature_count())?;
    let datasets: Vec<BinaryDataset> = single_target_split(corpus).into_values().collect();
    let trees = datasets
        .par_iter()
        .map(|ds| build_tree(ds, cfg).map(|t| (ds.method().to_string(), t)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ModelSet {
        feature_count: corpus.feature_count(),
        max_depth: cfg.max_depth,
        trees: trees.into_iter().collect(),
        catalog,
    })
}

/// Features that branch at least one tree. Features outside this set never
/// influence any expectation.
pub fn used_features(model: &ModelSet) -> BTreeSet<usize> {
    let mut set = BTreeSet::new();
    for tree in model.trees.values() {
        tree.collect_features(&mut set);
    }
    set
}

const MODEL_MAGIC: &str = "pamper-model v1";

/// Serializes a model. Method lines come in name order; catalog entries
/// follow as `@<index>\t<description>` lines.
pub fn save_model(model: &ModelSet) -> String {
    let mut out = format!(
        "{MODEL_MAGIC} features={} depth={}\n",
        model.feature_count, model.max_depth
    );
    for (name, tree) in &model.trees {
        let _ = writeln!(out, "{name}\t{tree}");
    }
    for (i, desc) in model.catalog.iter() {
        let _ = writeln!(out, "@{i}\t{desc}");
    }
    out
}

/// Parses model text written by [`save_model`]. Accepts LF or CRLF.
pub fn load_model(text: &str) -> Result<ModelSet, ParseError> {
    let err = |line: usize, reason: String| ParseError::Model { line, reason };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r')));
    let (_, header) = lines.next().ok_or_else(|| err(1, "missing header".into()))?;
    let (feature_count, max_depth) =
        parse_header(header).ok_or_else(|| err(1, format!("bad header `{header}`")))?;
    if feature_count == 0 || max_depth == 0 {
        return Err(err(1, "features and depth must be positive".into()));
    }
    let mut trees = BTreeMap::new();
    let mut catalog = FeatureCatalog::new();
    for (line_no, line) in lines {
        if line.is_empty() {
            continue;
        }
        let (key, body) = line
            .split_once('\t')
            .ok_or_else(|| err(line_no, "expected `<name>\\t<tree>`".into()))?;
        if let Some(index) = key.strip_prefix('@') {
            let index: usize = index
                .parse()
                .map_err(|_| err(line_no, format!("bad catalog index `{index}`")))?;
            if index >= feature_count {
                return Err(err(line_no, format!("catalog index {index} out of range")));
            }
            if body.trim().is_empty() {
                return Err(err(line_no, "empty description".into()));
            }
            catalog
                .insert(index, body.trim())
                .map_err(|e| err(line_no, e.to_string()))?;
            continue;
        }
        if !is_valid_method_name(key) {
            return Err(err(line_no, format!("invalid method name `{key}`")));
        }
        let mut parser = TreeParser {
            src: body.as_bytes(),
            pos: 0,
            feature_count,
            max_depth,
        };
        let tree = parser.node(0).map_err(|r| err(line_no, r))?;
        if parser.pos != parser.src.len() {
            return Err(err(line_no, format!("trailing input at column {}", parser.pos + 1)));
        }
        if trees.insert(key.to_string(), tree).is_some() {
            return Err(err(line_no, format!("duplicate method `{key}`")));
        }
    }
    Ok(ModelSet {
        feature_count,
        max_depth,
        trees,
        catalog,
    })
}

fn parse_header(line: &str) -> Option<(usize, usize)> {
    let rest = line.strip_prefix(MODEL_MAGIC)?.strip_prefix(' ')?;
    let (features, depth) = rest.split_once(' ')?;
    let features = features.strip_prefix("features=")?.parse().ok()?;
    let depth = depth.strip_prefix("depth=")?.parse().ok()?;
    Some((features, depth))
}

struct TreeParser<'a> {
    src: &'a [u8],
    pos: usize,
    feature_count: usize,
    max_depth: usize,
}

impl TreeParser<'_> {
    fn expect(&mut self, byte: u8) -> std::result::Result<(), String> {
        match self.src.get(self.pos) {
            Some(&b) if b == byte => {
                self.pos += 1;
                Ok(())
            }
            Some(&b) => Err(format!(
                "expected `{}` at column {}, found `{}`",
                byte as char,
                self.pos + 1,
                b as char
            )),
            None => Err(format!("expected `{}`, found end of line", byte as char)),
        }
    }

    fn token(&mut self) -> &str {
        let start = self.pos;
        while self
            .src
            .get(self.pos)
            .is_some_and(|b| !matches!(b, b',' | b')' | b'('))
        {
            self.pos += 1;
        }
        std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("")
    }

    fn node(&mut self, depth: usize) -> std::result::Result<TreeNode, String> {
        match self.src.get(self.pos) {
            Some(b'L') => {
                self.pos += 1;
                self.expect(b'(')?;
                let text = self.token().to_string();
                let expectation: f64 = text
                    .parse()
                    .map_err(|_| format!("bad expectation `{text}`"))?;
                if !(0.0..=1.0).contains(&expectation) {
                    return Err(format!("expectation {expectation} outside [0,1]"));
                }
                self.expect(b',')?;
                let text = self.token().to_string();
                let count: usize = text.parse().map_err(|_| format!("bad count `{text}`"))?;
                self.expect(b')')?;
                Ok(TreeNode::leaf(expectation, count))
            }
            Some(b'N') => {
                if depth >= self.max_depth {
                    return Err(format!("tree deeper than declared depth {}", self.max_depth));
                }
                self.pos += 1;
                self.expect(b'(')?;
                let text = self.token().to_string();
                let feature: usize = text.parse().map_err(|_| format!("bad feature `{text}`"))?;
                if feature >= self.feature_count {
                    return Err(format!("feature {feature} out of range"));
                }
                self.expect(b',')?;
                let when_false = self.node(depth + 1)?;
                self.expect(b',')?;
                let when_true = self.node(depth + 1)?;
                self.expect(b')')?;
                Ok(TreeNode::internal(feature, when_false, when_true))
            }
            Some(&b) => Err(format!(
                "expected `L` or `N` at column {}, found `{}`",
                self.pos + 1,
                b as char
            )),
            None => Err("unexpected end of line".into()),
        }
    }
}
