//! Hold-out evaluation: seeded split, top-n coincidence rates per method,
//! usage-by-rank data and the coincidence-threshold summary.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::corpus::{usage_table, Corpus, DataPoint, FeatureCatalog};
use crate::error::{Error, Result};
use crate::recommend::rank_method;
use crate::trees::{train, ModelSet, TrainConfig};

pub const DEFAULT_EVAL_FRACTION: f64 = 0.10;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_TOP_N: usize = 15;

/// Coincidence thresholds summarized per recommendation size.
pub const THRESHOLDS: [f64; 4] = [25.0, 50.0, 75.0, 90.0];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub eval_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            eval_fraction: DEFAULT_EVAL_FRACTION,
            seed: DEFAULT_SEED,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.eval_fraction > 0.0 && self.eval_fraction < 1.0) {
            return Err(Error::config(format!(
                "eval fraction {} is not in (0, 1)",
                self.eval_fraction
            )));
        }
        Ok(())
    }
}

/// Per-point evaluation membership: `true` means the point goes to evaluation.
///
/// Each point is an independent Bernoulli draw from a ChaCha8 stream seeded
/// with `spec.seed`, consumed in corpus order.
pub fn split_mask(len: usize, spec: &SplitSpec) -> Result<Vec<bool>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    Ok((0..len).map(|_| rng.gen_bool(spec.eval_fraction)).collect())
}

/// Partitions a corpus into `(train, eval)`.
pub fn split_corpus(corpus: &Corpus, spec: &SplitSpec) -> Result<(Corpus, Corpus)> {
    let mask = split_mask(corpus.len(), spec)?;
    let (eval, train): (Vec<(&DataPoint, bool)>, Vec<_>) = corpus
        .points()
        .iter()
        .zip(mask)
        .partition(|(_, to_eval)| *to_eval);
    if eval.is_empty() {
        return Err(Error::NoEvalPoints);
    }
    if train.is_empty() {
        return Err(Error::NoTrainPoints);
    }
    let collect = |part: Vec<(&DataPoint, bool)>| {
        Corpus::from_points(part.into_iter().map(|(p, _)| p.clone()).collect())
    };
    Ok((collect(train)?, collect(eval)?))
}

/// One row of the evaluation table.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodRow {
    pub method: String,
    pub training: usize,
    pub training_percent: f64,
    pub eval: usize,
    pub eval_percent: f64,
    /// False for methods that occur only in the evaluation data.
    pub learned: bool,
    /// `coincidence[n - 1]` is the percent of this method's evaluation points
    /// ranked within the top `n`. `None` when the method was not learned or
    /// has no evaluation points.
    pub coincidence: Option<Vec<f64>>,
}

/// Number of methods at or above each coincidence threshold when `k` methods are recommended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ThresholdCounts {
    pub k: usize,
    pub at_least: [usize; 4],
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub top_n: usize,
    pub learned_methods: usize,
    pub training_points: usize,
    pub eval_points: usize,
    /// Evaluation points whose method has no tree.
    pub unlearned_points: usize,
    pub rows: Vec<MethodRow>,
    /// `(rank, count)` of method usage in the training data.
    pub usage_by_rank: Vec<(usize, usize)>,
    /// One entry per `k` in `1..=learned_methods`.
    pub threshold_curve: Vec<ThresholdCounts>,
}

impl EvaluationReport {
    pub fn empty(top_n: usize) -> Self {
        EvaluationReport {
            top_n,
            learned_methods: 0,
            training_points: 0,
            eval_points: 0,
            unlearned_points: 0,
            rows: Vec::new(),
            usage_by_rank: Vec::new(),
            threshold_curve: Vec::new(),
        }
    }

    pub fn row(&self, method: &str) -> Option<&MethodRow> {
        self.rows.iter().find(|r| r.method == method)
    }
}

/// Trains on `train`, then ranks every evaluation point's true method.
pub fn run_evaluation(
    train_set: &Corpus,
    eval_set: &Corpus,
    cfg: &TrainConfig,
    top_n: usize,
) -> Result<EvaluationReport> {
    if train_set.feature_count() != eval_set.feature_count() {
        return Err(Error::FeatureWidthMismatch {
            train: train_set.feature_count(),
            eval: eval_set.feature_count(),
        });
    }
    if top_n == 0 {
        return Err(Error::config("top n must be at least 1"));
    }
    let model = train(train_set, cfg, FeatureCatalog::new())?;
    evaluate_model(&model, train_set, eval_set, top_n)
}

/// Scores an already trained model against an evaluation corpus.
pub fn evaluate_model(
    model: &ModelSet,
    train_set: &Corpus,
    eval_set: &Corpus,
    top_n: usize,
) -> Result<EvaluationReport> {
    if model.feature_count != eval_set.feature_count() {
        return Err(Error::FeatureWidthMismatch {
            train: model.feature_count,
            eval: eval_set.feature_count(),
        });
    }
    let total = model.method_count();
    let ranks: Vec<Option<usize>> = eval_set
        .points()
        .par_iter()
        .map(|p| match model.trees.contains_key(&p.method) {
            true => rank_method(model, &p.features, &p.method).map(|(rank, _)| Some(rank)),
            false => Ok(None),
        })
        .collect::<Result<_>>()?;

    // rank histograms, indexed by rank - 1
    let mut histograms: BTreeMap<&str, Vec<usize>> = model
        .trees
        .keys()
        .map(|m| (m.as_str(), vec![0; total]))
        .collect();
    let mut unlearned = 0;
    for (p, rank) in eval_set.points().iter().zip(&ranks) {
        match rank {
            Some(r) => histograms.get_mut(p.method.as_str()).expect("learned")[r - 1] += 1,
            None => unlearned += 1,
        }
    }

    // cumulative[k - 1] = points ranked within top k
    let cumulative: BTreeMap<&str, Vec<usize>> = histograms
        .iter()
        .map(|(&m, h)| {
            let mut acc = 0;
            (m, h.iter().map(|c| {
                acc += c;
                acc
            }).collect())
        })
        .collect();

    let train_counts = train_set.methods();
    let eval_counts = eval_set.methods();
    let percent = |count: usize, of: usize| 100.0 * count as f64 / of as f64;
    let mut rows: Vec<MethodRow> = Vec::new();
    for (method, cum) in &cumulative {
        let training = train_counts.get(*method).copied().unwrap_or(0);
        let eval = eval_counts.get(*method).copied().unwrap_or(0);
        let coincidence = (eval > 0).then(|| {
            (1..=top_n)
                .map(|n| percent(cum[n.min(total) - 1], eval))
                .collect()
        });
        rows.push(MethodRow {
            method: method.to_string(),
            training,
            training_percent: percent(training, train_set.len()),
            eval,
            eval_percent: percent(eval, eval_set.len()),
            learned: true,
            coincidence,
        });
    }
    for (method, &eval) in eval_counts {
        if !model.trees.contains_key(method) {
            rows.push(MethodRow {
                method: method.clone(),
                training: 0,
                training_percent: 0.0,
                eval,
                eval_percent: percent(eval, eval_set.len()),
                learned: false,
                coincidence: None,
            });
        }
    }
    rows.sort_by(|a, b| b.training.cmp(&a.training).then_with(|| a.method.cmp(&b.method)));

    let usage_by_rank = usage_table(train_counts, train_set.len())
        .into_iter()
        .enumerate()
        .map(|(i, r)| (i + 1, r.count))
        .collect();

    let evaluated: Vec<(&str, usize)> = cumulative
        .keys()
        .filter_map(|m| {
            let eval = eval_counts.get(*m).copied().unwrap_or(0);
            (eval > 0).then_some((*m, eval))
        })
        .collect();
    let threshold_curve = (1..=total)
        .map(|k| {
            let mut at_least = [0; 4];
            for (m, eval) in &evaluated {
                let rate = percent(cumulative[m][k - 1], *eval);
                for (slot, t) in at_least.iter_mut().zip(THRESHOLDS) {
                    if rate >= t {
                        *slot += 1;
                    }
                }
            }
            ThresholdCounts { k, at_least }
        })
        .collect();

    Ok(EvaluationReport {
        top_n,
        learned_methods: total,
        training_points: train_set.len(),
        eval_points: eval_set.len(),
        unlearned_points: unlearned,
        rows,
        usage_by_rank,
        threshold_curve,
    })
}

/// Rounds half away from zero to an integer.
pub fn round_percent(p: f64) -> i64 {
    p.round() as i64
}

/// Renders the evaluation table: method, training count and %, evaluation
/// count and %, then top-1..top-N coincidence percents.
pub fn render_table(r: &EvaluationReport) -> String {
    let name_w = r
        .rows
        .iter()
        .map(|row| row.method.len())
        .max()
        .unwrap_or(0)
        .max("proof method".len());
    let mut out = format!(
        "{:<name_w$}  {:>8}  {:>5}  {:>10}  {:>5}",
        "proof method", "training", "%", "evaluation", "%"
    );
    for n in 1..=r.top_n {
        let _ = write!(out, " {n:>3}");
    }
    out.push('\n');
    for row in &r.rows {
        let _ = write!(
            out,
            "{:<name_w$}  {:>8}  {:>5.1}  {:>10}  {:>5.1}",
            row.method, row.training, row.training_percent, row.eval, row.eval_percent
        );
        match &row.coincidence {
            Some(c) => {
                for p in c {
                    let _ = write!(out, " {:>3}", round_percent(*p));
                }
            }
            None => {
                for _ in 0..r.top_n {
                    out.push_str("   -");
                }
            }
        }
        out.push('\n');
    }
    out
}

/// The table as CSV with full-precision values; empty cells where a rate is undefined.
pub fn render_csv(r: &EvaluationReport) -> String {
    let mut out = String::from("method,training,training_pct,evaluation,evaluation_pct");
    for n in 1..=r.top_n {
        let _ = write!(out, ",top{n}");
    }
    out.push('\n');
    for row in &r.rows {
        let _ = write!(
            out,
            "{},{},{},{},{}",
            row.method, row.training, row.training_percent, row.eval, row.eval_percent
        );
        match &row.coincidence {
            Some(c) => c.iter().for_each(|p| {
                let _ = write!(out, ",{p}");
            }),
            None => (0..r.top_n).for_each(|_| out.push(',')),
        }
        out.push('\n');
    }
    out
}

/// `rank,count` rows of training usage.
pub fn render_usage_csv(r: &EvaluationReport) -> String {
    let mut out = String::from("rank,count\n");
    for (rank, count) in &r.usage_by_rank {
        let _ = writeln!(out, "{rank},{count}");
    }
    out
}

/// `k,ge25,ge50,ge75,ge90` rows.
pub fn render_threshold_csv(r: &EvaluationReport) -> String {
    let mut out = String::from("k,ge25,ge50,ge75,ge90\n");
    for t in &r.threshold_curve {
        let [a, b, c, d] = t.at_least;
        let _ = writeln!(out, "{},{a},{b},{c},{d}", t.k);
    }
    out
}
