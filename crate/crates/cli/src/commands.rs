use std::io::{self, BufWriter, Write};
use std::path::Path;

use pamper_core::corpus::{render_usage, FeatureVector};
use pamper_core::evaluate::{render_csv, render_table, render_threshold_csv, render_usage_csv};
use pamper_core::recommend::{render_rank, render_which, render_why};
use pamper_core::{
    corpus_stats, generate, load_model, parse_database, parse_feature_catalog, parse_planted_model,
    rank_method, run_evaluation, save_model, split_corpus, used_features, which_method,
    why_method, FeatureCatalog, ModelSet, SplitSpec, TrainConfig,
};
use serde::Serialize;

use crate::failure::{in_file, read, write, Failure};

fn stdout_failure(e: io::Error) -> Failure {
    Failure::internal(format!("stdout: {e}"))
}

fn load_catalog(path: Option<&Path>) -> Result<FeatureCatalog, Failure> {
    match path {
        Some(p) => in_file(p, parse_feature_catalog(&read(p)?)),
        None => Ok(FeatureCatalog::new()),
    }
}

fn load(path: &Path) -> Result<ModelSet, Failure> {
    in_file(path, load_model(&read(path)?))
}

/// A literal `[..]` argument yields one vector; anything else names a file
/// with one vector per line.
fn vectors(source: &str, width: usize) -> Result<Vec<FeatureVector>, Failure> {
    let check = |v: FeatureVector, at: &str| {
        if v.len() != width {
            Err(Failure::input(format!(
                "{at}vector has {} features, model expects {width}",
                v.len()
            )))
        } else {
            Ok(v)
        }
    };
    if source.trim_start().starts_with('[') {
        let v = FeatureVector::parse_literal(source).map_err(Failure::input)?;
        return Ok(vec![check(v, "")?]);
    }
    let path = Path::new(source);
    let text = read(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let at = format!("{}:{}: ", path.display(), i + 1);
        let v = FeatureVector::parse_literal(line).map_err(|e| Failure::input(format!("{at}{e}")))?;
        out.push(check(v, &at)?);
    }
    Ok(out)
}

pub fn train(db: &Path, out: &Path, catalog: Option<&Path>, cfg: &TrainConfig) -> Result<(), Failure> {
    let corpus = in_file(db, parse_database(&read(db)?))?;
    let catalog = load_catalog(catalog)?;
    let model = pamper_core::train(&corpus, cfg, catalog)?;
    write(out, &save_model(&model))?;
    let mut stdout = BufWriter::new(io::stdout().lock());
    writeln!(
        stdout,
        "trained {} methods on {} points ({} features, max depth {})",
        model.method_count(),
        corpus.len(),
        model.feature_count,
        model.max_depth
    )
    .map_err(stdout_failure)?;
    summarize(&mut stdout, &model).map_err(stdout_failure)
}

fn summarize(out: &mut impl Write, model: &ModelSet) -> io::Result<()> {
    for (name, tree) in &model.trees {
        writeln!(
            out,
            "{name}\tnodes={}\tleaves={}\tdepth={}",
            tree.node_count(),
            tree.leaves().len(),
            tree.depth()
        )?;
    }
    out.flush()
}

#[derive(Serialize)]
struct RankedJson<'a> {
    method: &'a str,
    expectation: f64,
}

#[derive(Serialize)]
struct WhichJson<'a> {
    ranked: Vec<RankedJson<'a>>,
    total_methods: usize,
}

pub fn which(model: &Path, source: &str, k: usize, json: bool) -> Result<(), Failure> {
    let model = load(model)?;
    let vectors = vectors(source, model.feature_count)?;
    let mut out = BufWriter::new(io::stdout().lock());
    for (i, v) in vectors.iter().enumerate() {
        let rec = which_method(&model, v, k)?;
        let written = if json {
            let line = WhichJson {
                ranked: rec
                    .ranked
                    .iter()
                    .map(|(m, e)| RankedJson {
                        method: m,
                        expectation: *e,
                    })
                    .collect(),
                total_methods: rec.total_methods,
            };
            serde_json::to_writer(&mut out, &line)
                .map_err(io::Error::from)
                .and_then(|_| writeln!(out))
        } else {
            let sep = if i > 0 { "\n" } else { "" };
            write!(out, "{sep}{}", render_which(&rec))
        };
        written.map_err(stdout_failure)?;
    }
    out.flush().map_err(stdout_failure)
}

#[derive(Serialize)]
struct StepJson<'a> {
    feature: usize,
    value: bool,
    description: &'a str,
}

#[derive(Serialize)]
struct WhyJson<'a> {
    method: &'a str,
    expectation: f64,
    steps: Vec<StepJson<'a>>,
}

pub fn why(
    model: &Path,
    source: &str,
    method: &str,
    catalog: Option<&Path>,
    json: bool,
) -> Result<(), Failure> {
    let mut model = load(model)?;
    if catalog.is_some() {
        let catalog = load_catalog(catalog)?;
        catalog.check_width(model.feature_count)?;
        model.catalog = catalog;
    }
    let vectors = vectors(source, model.feature_count)?;
    let mut out = BufWriter::new(io::stdout().lock());
    for (i, v) in vectors.iter().enumerate() {
        let ex = why_method(&model, v, method)?;
        let written = if json {
            let line = WhyJson {
                method: &ex.method,
                expectation: ex.expectation,
                steps: ex
                    .steps
                    .iter()
                    .map(|s| StepJson {
                        feature: s.feature,
                        value: s.value,
                        description: &s.description,
                    })
                    .collect(),
            };
            serde_json::to_writer(&mut out, &line)
                .map_err(io::Error::from)
                .and_then(|_| writeln!(out))
        } else {
            let sep = if i > 0 { "\n" } else { "" };
            write!(out, "{sep}{}", render_why(&ex))
        };
        written.map_err(stdout_failure)?;
    }
    out.flush().map_err(stdout_failure)
}

#[derive(Serialize)]
struct RankJson<'a> {
    method: &'a str,
    rank: usize,
    total: usize,
}

pub fn rank(model: &Path, source: &str, method: &str, json: bool) -> Result<(), Failure> {
    let model = load(model)?;
    // unknown methods are reported before any vector is read
    model.tree(method)?;
    let vectors = vectors(source, model.feature_count)?;
    let mut out = BufWriter::new(io::stdout().lock());
    for v in &vectors {
        let (rank, total) = rank_method(&model, v, method)?;
        let written = if json {
            serde_json::to_writer(&mut out, &RankJson { method, rank, total })
                .map_err(io::Error::from)
                .and_then(|_| writeln!(out))
        } else {
            writeln!(out, "{}", render_rank(method, rank, total))
        };
        written.map_err(stdout_failure)?;
    }
    out.flush().map_err(stdout_failure)
}

pub fn evaluate(
    db: &Path,
    spec: &SplitSpec,
    top: usize,
    out_dir: &Path,
    cfg: &TrainConfig,
) -> Result<(), Failure> {
    let corpus = in_file(db, parse_database(&read(db)?))?;
    let (train_set, eval_set) = split_corpus(&corpus, spec)?;
    let report = run_evaluation(&train_set, &eval_set, cfg, top)?;
    std::fs::create_dir_all(out_dir)
        .map_err(|e| Failure::internal(format!("{}: {e}", out_dir.display())))?;
    let table = render_table(&report);
    write(&out_dir.join("report.txt"), &table)?;
    write(&out_dir.join("report.csv"), &render_csv(&report))?;
    write(&out_dir.join("fig2.csv"), &render_usage_csv(&report))?;
    write(&out_dir.join("fig3.csv"), &render_threshold_csv(&report))?;
    let mut out = io::stdout().lock();
    writeln!(
        out,
        "{table}training points: {}, evaluation points: {}, learned methods: {}, unlearned evaluation points: {}",
        report.training_points, report.eval_points, report.learned_methods, report.unlearned_points
    )
    .map_err(stdout_failure)
}

pub fn prune(model: &Path, catalog: Option<&Path>) -> Result<(), Failure> {
    let mut model = load(model)?;
    if catalog.is_some() {
        model.catalog = load_catalog(catalog)?;
    }
    let mut out = BufWriter::new(io::stdout().lock());
    for i in used_features(&model) {
        match model.catalog.get(i) {
            Some(desc) => writeln!(out, "{i}\t{desc}"),
            None => writeln!(out, "{i}"),
        }
        .map_err(stdout_failure)?;
    }
    out.flush().map_err(stdout_failure)
}

pub fn gen(config: &Path, count: usize, seed: u64, out: Option<&Path>) -> Result<(), Failure> {
    let pm = in_file(config, parse_planted_model(&read(config)?))?;
    let corpus = generate(&pm, count, seed)?;
    let text = corpus.to_database_text();
    match out {
        Some(path) => write(path, &text),
        None => io::stdout().lock().write_all(text.as_bytes()).map_err(stdout_failure),
    }
}

pub fn stats(db: &Path) -> Result<(), Failure> {
    let corpus = in_file(db, parse_database(&read(db)?))?;
    let rows = corpus_stats(&corpus);
    write!(io::stdout().lock(), "{}", render_usage(&rows)).map_err(stdout_failure)
}

pub fn inspect(model: &Path) -> Result<(), Failure> {
    let model = load(model)?;
    let mut out = BufWriter::new(io::stdout().lock());
    writeln!(
        out,
        "features={} depth={} methods={}",
        model.feature_count,
        model.max_depth,
        model.method_count()
    )
    .map_err(stdout_failure)?;
    for (name, tree) in &model.trees {
        writeln!(
            out,
            "{name}\tnodes={}\tleaves={}\tdepth={}\t{tree}",
            tree.node_count(),
            tree.leaves().len(),
            tree.depth()
        )
        .map_err(stdout_failure)?;
    }
    out.flush().map_err(stdout_failure)
}
