//! Reading, validating and summarizing databases of `(method, feature vector)` records.
//!
//! A database is line oriented. Every data line has the shape
//!
//! ```text
//! induct, [1,0,0,1,0]
//! ```
//!
//! with arbitrary spaces around the comma and brackets. Blank lines and lines
//! starting with `#` are skipped. The width of the first vector fixes the
//! feature count for the whole file.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, ParseError, Result};

/// Returns true when `name` matches `[A-Za-z0-9_'.-]+`.
pub fn is_valid_method_name(name: &str) -> bool {
    !name.is_empty()
        && name
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || matches!(b, b'_' | b'\'' | b'.' | b'-'))
}

/// Fixed-width boolean feature vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct FeatureVector(Vec<bool>);

impl FeatureVector {
    pub fn new(bits: Vec<bool>) -> Self {
        FeatureVector(bits)
    }

    pub fn zeros(width: usize) -> Self {
        FeatureVector(vec![false; width])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Panics when `index` is out of range.
    pub fn get(&self, index: usize) -> bool {
        self.0[index]
    }

    pub fn set(&mut self, index: usize, value: bool) {
        self.0[index] = value;
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    /// Parses the bracket literal used by the database format, e.g. `[1, 0, 1]`.
    pub fn parse_literal(text: &str) -> std::result::Result<Self, String> {
        let inner = text
            .trim()
            .strip_prefix('[')
            .and_then(|s| s.strip_suffix(']'))
            .ok_or_else(|| "expected a bracketed vector `[..]`".to_string())?;
        if inner.trim().is_empty() {
            return Err("empty feature vector".into());
        }
        inner
            .split(',')
            .map(|bit| match bit.trim() {
                "0" => Ok(false),
                "1" => Ok(true),
                other => Err(format!("expected 0 or 1, found `{other}`")),
            })
            .collect::<std::result::Result<Vec<_>, _>>()
            .map(FeatureVector)
    }
}

impl From<Vec<bool>> for FeatureVector {
    fn from(bits: Vec<bool>) -> Self {
        FeatureVector(bits)
    }
}

impl fmt::Display for FeatureVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, &b) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            f.write_str(if b { "1" } else { "0" })?;
        }
        f.write_str("]")
    }
}

/// One recorded proof-method invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataPoint {
    pub method: String,
    pub features: FeatureVector,
}

impl DataPoint {
    pub fn new(method: impl Into<String>, features: impl Into<FeatureVector>) -> Self {
        DataPoint {
            method: method.into(),
            features: features.into(),
        }
    }
}

/// A validated collection of data points sharing one feature width.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    points: Vec<DataPoint>,
    feature_count: usize,
    methods: BTreeMap<String, usize>,
}

impl Corpus {
    /// Builds a corpus from points that are already in memory.
    ///
    /// The first point fixes the feature width.
    pub fn from_points(points: Vec<DataPoint>) -> Result<Self> {
        let first = points.first().ok_or(ParseError::EmptyDatabase)?;
        let feature_count = first.features.len();
        if feature_count == 0 {
            return Err(ParseError::MalformedLine {
                line: 1,
                reason: "empty feature vector".into(),
            }
            .into());
        }
        let mut methods = BTreeMap::new();
        for (i, p) in points.iter().enumerate() {
            if !is_valid_method_name(&p.method) {
                return Err(ParseError::MalformedLine {
                    line: i + 1,
                    reason: format!("invalid method name `{}`", p.method),
                }
                .into());
            }
            if p.features.len() != feature_count {
                return Err(ParseError::InconsistentWidth {
                    line: i + 1,
                    got: p.features.len(),
                    want: feature_count,
                }
                .into());
            }
            *methods.entry(p.method.clone()).or_insert(0) += 1;
        }
        Ok(Corpus {
            points,
            feature_count,
            methods,
        })
    }

    pub fn points(&self) -> &[DataPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn feature_count(&self) -> usize {
        self.feature_count
    }

    /// Distinct method names with their occurrence counts, keyed by name.
    pub fn methods(&self) -> &BTreeMap<String, usize> {
        &self.methods
    }

    /// Renders the corpus back into database text, one point per line.
    pub fn to_database_text(&self) -> String {
        let mut out = String::with_capacity(self.points.len() * (self.feature_count * 2 + 16));
        for p in &self.points {
            out.push_str(&p.method);
            out.push_str(", ");
            out.push_str(&p.features.to_string());
            out.push('\n');
        }
        out
    }
}

/// Parses database text into a [`Corpus`].
pub fn parse_database(text: &str) -> Result<Corpus, ParseError> {
    let mut points = Vec::new();
    let mut width = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let malformed = |reason: String| ParseError::MalformedLine {
            line: line_no,
            reason,
        };
        let (method, vector) = line
            .split_once(',')
            .ok_or_else(|| malformed("expected `<method>, [<bits>]`".into()))?;
        let method = method.trim();
        if !is_valid_method_name(method) {
            return Err(malformed(format!("invalid method name `{method}`")));
        }
        let features = FeatureVector::parse_literal(vector).map_err(malformed)?;
        match width {
            None => width = Some(features.len()),
            Some(want) if want != features.len() => {
                return Err(ParseError::InconsistentWidth {
                    line: line_no,
                    got: features.len(),
                    want,
                })
            }
            Some(_) => {}
        }
        points.push(DataPoint::new(method, features));
    }
    if points.is_empty() {
        return Err(ParseError::EmptyDatabase);
    }
    let feature_count = width.unwrap_or_default();
    let mut methods = BTreeMap::new();
    for p in &points {
        *methods.entry(p.method.clone()).or_insert(0) += 1;
    }
    Ok(Corpus {
        points,
        feature_count,
        methods,
    })
}

/// One row of the usage table.
#[derive(Debug, Clone, PartialEq)]
pub struct UsageRow {
    pub method: String,
    pub count: usize,
    pub percent: f64,
}

/// Method usage sorted by count descending, ties by ascending name.
pub fn corpus_stats(corpus: &Corpus) -> Vec<UsageRow> {
    usage_table(corpus.methods(), corpus.len())
}

pub(crate) fn usage_table(methods: &BTreeMap<String, usize>, total: usize) -> Vec<UsageRow> {
    let mut rows: Vec<UsageRow> = methods
        .iter()
        .map(|(method, &count)| UsageRow {
            method: method.clone(),
            count,
            percent: 100.0 * count as f64 / total as f64,
        })
        .collect();
    // BTreeMap iteration is already name-ordered, so a stable sort keeps the tie-break.
    rows.sort_by_key(|r| std::cmp::Reverse(r.count));
    rows
}

/// Renders the usage table as `method count percent` lines, percent to one decimal.
pub fn render_usage(rows: &[UsageRow]) -> String {
    let width = rows
        .iter()
        .map(|r| r.method.len())
        .max()
        .unwrap_or(0)
        .max("method".len());
    let mut out = format!("{:<width$}  {:>8}  {:>6}\n", "method", "count", "%");
    for r in rows {
        out.push_str(&format!(
            "{:<width$}  {:>8}  {:>6.1}\n",
            r.method, r.count, r.percent
        ));
    }
    out
}

/// Human-readable descriptions of feature indices.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FeatureCatalog {
    descriptions: BTreeMap<usize, String>,
}

impl FeatureCatalog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, index: usize, description: impl Into<String>) -> Result<(), ParseError> {
        let description = description.into();
        if self.descriptions.contains_key(&index) {
            return Err(ParseError::DuplicateIndex(index));
        }
        self.descriptions.insert(index, description);
        Ok(())
    }

    pub fn get(&self, index: usize) -> Option<&str> {
        self.descriptions.get(&index).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.descriptions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.descriptions.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &str)> {
        self.descriptions.iter().map(|(&i, d)| (i, d.as_str()))
    }

    /// Checks every index against the feature width.
    pub fn check_width(&self, feature_count: usize) -> Result<()> {
        match self.descriptions.keys().find(|&&i| i >= feature_count) {
            Some(i) => Err(Error::config(format!(
                "catalog index {i} is outside 0..{feature_count}"
            ))),
            None => Ok(()),
        }
    }
}

/// Parses `<index>\t<description>` lines. Blank lines are skipped.
pub fn parse_feature_catalog(text: &str) -> Result<FeatureCatalog, ParseError> {
    let mut catalog = FeatureCatalog::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            continue;
        }
        let (index, description) = line.split_once('\t').ok_or(ParseError::BadIndex(line_no))?;
        let index: usize = index.trim().parse().map_err(|_| ParseError::BadIndex(line_no))?;
        let description = description.trim();
        if description.is_empty() {
            return Err(ParseError::MalformedLine {
                line: line_no,
                reason: "empty description".into(),
            });
        }
        catalog.insert(index, description)?;
    }
    Ok(catalog)
}
