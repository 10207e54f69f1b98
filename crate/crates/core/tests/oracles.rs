//! Independent oracles and invariants for the learner and the query layer.

use std::collections::BTreeMap;

use num_rational::Ratio;
use pamper_core::corpus::FeatureVector;
use pamper_core::recommend::render_which;
use pamper_core::{
    best_split, build_tree, evaluate_tree, load_model, parse_database, rank_method, save_model,
    single_target_split, train, used_features, which_method, why_method, BinaryDataset, Corpus,
    DataPoint, FeatureCatalog, ModelSet, Region, TrainConfig, TreeNode,
};
use proptest::prelude::*;

/// The split criterion evaluated directly: sum of squared deviations from each half's
/// mean, in exact rational arithmetic.
fn oracle_rss(labels: &[i64]) -> Ratio<i64> {
    if labels.is_empty() {
        return Ratio::from_integer(0);
    }
    let mean = Ratio::new(labels.iter().sum(), labels.len() as i64);
    labels
        .iter()
        .map(|&y| {
            let d = Ratio::from_integer(y) - mean;
            d * d
        })
        .sum()
}

fn oracle_best_split(labels: &[bool], vectors: &[Vec<bool>], f: usize) -> Option<(usize, Ratio<i64>)> {
    let ys: Vec<i64> = labels.iter().map(|&l| l as i64).collect();
    let parent = oracle_rss(&ys);
    let mut best: Option<(usize, Ratio<i64>)> = None;
    for j in 0..f {
        let (t, n): (Vec<_>, Vec<_>) = ys.iter().zip(vectors).partition(|(_, v)| v[j]);
        if t.is_empty() || n.is_empty() {
            continue;
        }
        let t: Vec<i64> = t.into_iter().map(|(y, _)| *y).collect();
        let n: Vec<i64> = n.into_iter().map(|(y, _)| *y).collect();
        let score = oracle_rss(&t) + oracle_rss(&n);
        if score >= parent {
            continue;
        }
        if best.as_ref().is_none_or(|(_, b)| score < *b) {
            best = Some((j, score));
        }
    }
    best
}

fn ratio_f64(r: Ratio<i64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

fn labeled(labels: &[bool], vectors: &[Vec<bool>]) -> BinaryDataset {
    let points: Vec<_> = labels
        .iter()
        .zip(vectors)
        .map(|(&l, v)| (l, FeatureVector::new(v.clone())))
        .collect();
    BinaryDataset::from_labeled("m", &points)
}

fn dataset_strategy() -> impl Strategy<Value = (Vec<bool>, Vec<Vec<bool>>, usize)> {
    (1usize..=8, 1usize..=64).prop_flat_map(|(f, n)| {
        (
            proptest::collection::vec(any::<bool>(), n),
            proptest::collection::vec(proptest::collection::vec(any::<bool>(), f), n),
            Just(f),
        )
    })
}

/// Collects `(expectation, positives, region size)` per leaf by replaying every point.
fn leaf_regions(tree: &TreeNode, labels: &[bool], vectors: &[Vec<bool>]) -> Vec<(f64, usize, usize)> {
    fn walk(
        node: &TreeNode,
        members: Vec<usize>,
        labels: &[bool],
        vectors: &[Vec<bool>],
        out: &mut Vec<(f64, usize, usize)>,
    ) {
        match node {
            TreeNode::Leaf { expectation, count } => {
                assert_eq!(*count, members.len());
                let pos = members.iter().filter(|&&i| labels[i]).count();
                out.push((*expectation, pos, members.len()));
            }
            TreeNode::Internal {
                feature,
                when_false,
                when_true,
            } => {
                let (t, f): (Vec<usize>, Vec<usize>) =
                    members.into_iter().partition(|&i| vectors[i][*feature]);
                walk(when_false, f, labels, vectors, out);
                walk(when_true, t, labels, vectors, out);
            }
        }
    }
    let mut out = Vec::new();
    walk(tree, (0..labels.len()).collect(), labels, vectors, &mut out);
    out
}

/// Checks monotone improvement at every internal node against the oracle RSS.
fn check_monotone(node: &TreeNode, members: &[usize], labels: &[bool], vectors: &[Vec<bool>]) {
    if let TreeNode::Internal {
        feature,
        when_false,
        when_true,
    } = node
    {
        let ys = |idx: &[usize]| idx.iter().map(|&i| labels[i] as i64).collect::<Vec<_>>();
        let (t, f): (Vec<usize>, Vec<usize>) = members.iter().partition(|&&i| vectors[i][*feature]);
        assert!(oracle_rss(&ys(&t)) + oracle_rss(&ys(&f)) < oracle_rss(&ys(members)));
        check_monotone(when_false, &f, labels, vectors);
        check_monotone(when_true, &t, labels, vectors);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn best_split_matches_exhaustive_oracle((labels, vectors, f) in dataset_strategy()) {
        let ds = labeled(&labels, &vectors);
        let candidates: Vec<usize> = (0..f).collect();
        let got = best_split(&ds, &Region::all(&ds), &candidates).map(|s| (s.feature, s.rss));
        let want = oracle_best_split(&labels, &vectors, f).map(|(j, r)| (j, ratio_f64(r)));
        prop_assert_eq!(got, want);
    }

    #[test]
    fn tree_leaves_hold_region_means(
        (labels, vectors, _f) in dataset_strategy(),
        max_depth in 1usize..=6,
        min_split in 1usize..=4,
    ) {
        let ds = labeled(&labels, &vectors);
        let cfg = TrainConfig { max_depth, min_points_to_split: min_split };
        let tree = build_tree(&ds, &cfg).unwrap();
        prop_assert!(tree.depth() <= max_depth);
        let mut mass = 0.0;
        for (e, pos, n) in leaf_regions(&tree, &labels, &vectors) {
            prop_assert!(n >= 1);
            prop_assert!((e - pos as f64 / n as f64).abs() <= 1e-12);
            mass += e * n as f64;
        }
        let positives = labels.iter().filter(|&&l| l).count() as f64;
        prop_assert!((mass - positives).abs() <= 1e-9);
        check_monotone(&tree, &(0..labels.len()).collect::<Vec<_>>(), &labels, &vectors);
    }

    #[test]
    fn corpus_text_round_trip(
        rows in proptest::collection::vec(
            ("[a-z_][a-z0-9_'.-]{0,6}", proptest::collection::vec(any::<bool>(), 5)),
            1..40,
        )
    ) {
        let points: Vec<_> = rows.into_iter().map(|(m, v)| DataPoint::new(m, v)).collect();
        let corpus = Corpus::from_points(points).unwrap();
        let text = corpus.to_database_text();
        let parsed = parse_database(&text).unwrap();
        prop_assert_eq!(&parsed, &corpus);
        prop_assert_eq!(parsed.methods().values().sum::<usize>(), parsed.len());
    }

    #[test]
    fn parser_never_panics(text in "[a-z01, \\[\\]#\n\r\t]{0,80}") {
        let _ = parse_database(&text);
        let _ = load_model(&text);
        let _ = pamper_core::parse_feature_catalog(&text);
    }

    #[test]
    fn single_target_conservation(
        rows in proptest::collection::vec((0usize..4, proptest::collection::vec(any::<bool>(), 3)), 1..30)
    ) {
        let points: Vec<_> = rows.iter().map(|(m, v)| DataPoint::new(format!("m{m}"), v.clone())).collect();
        let corpus = Corpus::from_points(points).unwrap();
        let sets = single_target_split(&corpus);
        prop_assert_eq!(sets.len(), corpus.methods().len());
        prop_assert_eq!(sets.values().map(|d| d.positives()).sum::<usize>(), corpus.len());
        for (m, ds) in &sets {
            prop_assert_eq!(ds.len(), corpus.len());
            for (i, p) in corpus.points().iter().enumerate() {
                prop_assert_eq!(ds.label(i), if &p.method == m { 1.0 } else { 0.0 });
                prop_assert_eq!(&ds.matrix().row(i), &p.features);
            }
        }
    }
}

fn random_tree(depth: usize, width: usize, rng: &mut impl FnMut() -> u64) -> TreeNode {
    if depth == 0 || rng().is_multiple_of(3) {
        // expectations on a coarse grid so ties actually happen
        return TreeNode::leaf((rng() % 9) as f64 / 8.0, 1 + (rng() % 50) as usize);
    }
    TreeNode::internal(
        (rng() % width as u64) as usize,
        random_tree(depth - 1, width, rng),
        random_tree(depth - 1, width, rng),
    )
}

fn random_model(seed: u64, width: usize) -> ModelSet {
    let mut state = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        state
    };
    let methods = 1 + (next() % 12) as usize;
    let trees: BTreeMap<String, TreeNode> = (0..methods)
        .map(|i| (format!("m{i}"), random_tree(4, width, &mut next)))
        .collect();
    ModelSet {
        feature_count: width,
        max_depth: 4,
        trees,
        catalog: FeatureCatalog::new(),
    }
}

/// Plain recursive walk, written independently of the library's loop.
fn oracle_eval(node: &TreeNode, v: &[bool]) -> f64 {
    match node {
        TreeNode::Leaf { expectation, .. } => *expectation,
        TreeNode::Internal {
            feature,
            when_false,
            when_true,
        } => oracle_eval(if v[*feature] { when_true } else { when_false }, v),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn queries_are_consistent(seed in any::<u64>(), bits in proptest::collection::vec(any::<bool>(), 10), flips in proptest::collection::vec(any::<bool>(), 10)) {
        let model = random_model(seed, 10);
        let v = FeatureVector::new(bits.clone());
        let total = model.method_count();
        let full = which_method(&model, &v, total).unwrap();
        prop_assert_eq!(full.ranked.len(), total);
        for (i, (name, e)) in full.ranked.iter().enumerate() {
            prop_assert_eq!(*e, oracle_eval(&model.trees[name], &bits));
            prop_assert_eq!(rank_method(&model, &v, name).unwrap(), (i + 1, total));
        }
        for w in full.ranked.windows(2) {
            prop_assert!(w[0].1 > w[1].1 || (w[0].1 == w[1].1 && w[0].0 < w[1].0));
        }
        for k in 1..=total {
            let part = which_method(&model, &v, k).unwrap();
            prop_assert_eq!(&part.ranked[..], &full.ranked[..k]);
        }

        // flip only features no tree looks at
        let used = used_features(&model);
        let mut w = bits.clone();
        for (j, flip) in flips.iter().enumerate() {
            if *flip && !used.contains(&j) {
                w[j] = !w[j];
            }
        }
        let w = FeatureVector::new(w);
        prop_assert_eq!(render_which(&which_method(&model, &w, total).unwrap()), render_which(&full));
        prop_assert_eq!(which_method(&model, &w, total).unwrap(), full);

        for name in model.trees.keys() {
            let ex = why_method(&model, &v, name).unwrap();
            prop_assert!(ex.steps.len() <= model.max_depth);
            let mut node = &model.trees[name];
            for step in &ex.steps {
                prop_assert_eq!(step.value, bits[step.feature]);
                match node {
                    TreeNode::Internal { feature, when_false, when_true } => {
                        prop_assert_eq!(*feature, step.feature);
                        node = if step.value { when_true } else { when_false };
                    }
                    TreeNode::Leaf { .. } => return Err(TestCaseError::fail("path longer than tree")),
                }
            }
            let at_leaf = matches!(node, TreeNode::Leaf { .. });
            prop_assert!(at_leaf);
            prop_assert_eq!(ex.expectation, evaluate_tree(&model.trees[name], &v));
        }
    }

    #[test]
    fn model_text_round_trip(seed in any::<u64>()) {
        let mut model = random_model(seed, 6);
        model.catalog.insert((seed % 6) as usize, "some property holds").unwrap();
        let text = save_model(&model);
        let loaded = load_model(&text).unwrap();
        prop_assert_eq!(&loaded, &model);
        prop_assert_eq!(save_model(&loaded), text);
    }
}

#[test]
fn trained_model_round_trips_with_irrational_leaves() {
    let mut text = String::new();
    for i in 0..300u32 {
        let bits: Vec<_> = (0..6).map(|j| ((i * 7 + j * 13) % 5 < 2) as u8).collect();
        let m = match i % 7 {
            0..=2 => "simp",
            3 | 4 => "auto",
            5 => "rule",
            _ => "induct",
        };
        let bits: Vec<String> = bits.iter().map(|b| b.to_string()).collect();
        text.push_str(&format!("{m}, [{}]\n", bits.join(",")));
    }
    let corpus = parse_database(&text).unwrap();
    let model = train(&corpus, &TrainConfig::default(), FeatureCatalog::new()).unwrap();
    let saved = save_model(&model);
    let loaded = load_model(&saved).unwrap();
    assert_eq!(loaded, model);
    assert_eq!(save_model(&loaded), saved);
}

#[test]
fn training_is_deterministic_across_pools() {
    let mut text = String::new();
    for i in 0..500u32 {
        let bits: Vec<String> = (0..8).map(|j| ((i ^ (j * 37)).wrapping_mul(2654435761u32) >> 31).to_string()).collect();
        text.push_str(&format!("m{}, [{}]\n", i % 9, bits.join(",")));
    }
    let corpus = parse_database(&text).unwrap();
    let cfg = TrainConfig::default();
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let many = rayon::ThreadPoolBuilder::new().num_threads(8).build().unwrap();
    let a = one.install(|| train(&corpus, &cfg, FeatureCatalog::new()).unwrap());
    let b = many.install(|| train(&corpus, &cfg, FeatureCatalog::new()).unwrap());
    assert_eq!(save_model(&a), save_model(&b));
}
