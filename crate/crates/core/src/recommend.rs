//! The three query commands: which method, why this method, and how a method ranks.

use std::cmp::Ordering;
use std::fmt::Write as _;

use crate::corpus::FeatureVector;
use crate::error::{Error, Result};
use crate::trees::{ModelSet, TreeNode};

pub const DEFAULT_TOP_K: usize = 15;

pub const WHICH_HEADER: &str = "Promising methods for this proof goal are:";

/// Methods ordered by expectation descending, ties by ascending name.
#[derive(Debug, Clone, PartialEq)]
pub struct Recommendation {
    pub ranked: Vec<(String, f64)>,
    pub total_methods: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExplanationStep {
    pub feature: usize,
    pub value: bool,
    pub description: String,
}

/// The branches taken in one method's tree for one vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Explanation {
    pub method: String,
    pub steps: Vec<ExplanationStep>,
    pub expectation: f64,
}

fn check_width(model: &ModelSet, v: &FeatureVector) -> Result<()> {
    if v.len() != model.feature_count {
        return Err(Error::VectorWidthMismatch {
            got: v.len(),
            want: model.feature_count,
        });
    }
    Ok(())
}

fn descend<'a>(tree: &'a TreeNode, v: &FeatureVector, mut on_branch: impl FnMut(usize, bool)) -> (f64, &'a TreeNode) {
    let mut node = tree;
    loop {
        match node {
            TreeNode::Leaf { expectation, .. } => return (*expectation, node),
            TreeNode::Internal {
                feature,
                when_false,
                when_true,
            } => {
                let value = v.get(*feature);
                on_branch(*feature, value);
                node = if value { when_true } else { when_false };
            }
        }
    }
}

/// Expectation of the leaf that `v` reaches.
///
/// Panics if `v` is shorter than a feature index in the tree; use
/// [`which_method`] and friends for width-checked queries.
pub fn evaluate_tree(tree: &TreeNode, v: &FeatureVector) -> f64 {
    descend(tree, v, |_, _| {}).0
}

/// Ordering key shared by `which_method` and `rank_method`.
fn ranking_order(a: &(&str, f64), b: &(&str, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0))
}

fn full_ranking<'m>(model: &'m ModelSet, v: &FeatureVector) -> Vec<(&'m str, f64)> {
    let mut ranked: Vec<(&str, f64)> = model
        .trees
        .iter()
        .map(|(name, tree)| (name.as_str(), evaluate_tree(tree, v)))
        .collect();
    ranked.sort_by(ranking_order);
    ranked
}

/// Evaluates every tree and returns the `k` most promising methods.
pub fn which_method(model: &ModelSet, v: &FeatureVector, k: usize) -> Result<Recommendation> {
    check_width(model, v)?;
    let ranked = full_ranking(model, v)
        .into_iter()
        .take(k)
        .map(|(name, e)| (name.to_string(), e))
        .collect();
    Ok(Recommendation {
        ranked,
        total_methods: model.method_count(),
    })
}

/// 1-based position of `method` in the full ranking, and the number of methods.
pub fn rank_method(model: &ModelSet, v: &FeatureVector, method: &str) -> Result<(usize, usize)> {
    let tree = model.tree(method)?;
    check_width(model, v)?;
    let own = (method, evaluate_tree(tree, v));
    // Position is the number of methods that sort strictly before this one.
    let ahead = model
        .trees
        .iter()
        .filter(|(name, _)| name.as_str() != method)
        .filter(|(name, tree)| {
            ranking_order(&(name.as_str(), evaluate_tree(tree, v)), &own) == Ordering::Less
        })
        .count();
    Ok((ahead + 1, model.method_count()))
}

/// Walks `method`'s tree and records each branch taken.
pub fn why_method(model: &ModelSet, v: &FeatureVector, method: &str) -> Result<Explanation> {
    let tree = model.tree(method)?;
    check_width(model, v)?;
    let mut steps = Vec::new();
    let (expectation, _) = descend(tree, v, |feature, value| {
        let description = match model.catalog.get(feature) {
            Some(d) => d.to_string(),
            None => format!("feature #{feature} holds"),
        };
        steps.push(ExplanationStep {
            feature,
            value,
            description,
        });
    });
    Ok(Explanation {
        method: method.to_string(),
        steps,
        expectation,
    })
}

/// Formats an expectation with four significant digits, e.g. `0.4119`, `0.06137`.
pub fn format_expectation(e: f64) -> String {
    if e == 0.0 || !e.is_finite() {
        return format!("{e:.3}");
    }
    // `{:e}` rounds the mantissa first, so the exponent already accounts for carries.
    let sci = format!("{e:.3e}");
    let exponent: i32 = sci
        .split_once('e')
        .and_then(|(_, x)| x.parse().ok())
        .unwrap_or(0);
    let decimals = (3 - exponent).max(0) as usize;
    format!("{e:.decimals$}")
}

pub fn render_which(rec: &Recommendation) -> String {
    let mut out = String::from(WHICH_HEADER);
    out.push('\n');
    for (method, e) in &rec.ranked {
        let _ = writeln!(out, "  {method} with expectation of {}", format_expectation(*e));
    }
    out
}

pub fn render_rank(method: &str, rank: usize, total: usize) -> String {
    format!("{method} {rank} out of {total}")
}

pub fn render_why(ex: &Explanation) -> String {
    if ex.steps.is_empty() {
        return format!(
            "No branching features; baseline expectation {}.\n",
            format_expectation(ex.expectation)
        );
    }
    let mut out = String::new();
    for step in &ex.steps {
        if step.value {
            let _ = writeln!(out, "Because {}.", step.description);
        } else {
            let _ = writeln!(out, "Because it is not true that {}.", step.description);
        }
    }
    out
}
