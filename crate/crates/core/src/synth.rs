//! Synthetic corpora with planted rules and skewed method usage.
//!
//! A planted model is a list of rules, each gating a method distribution on
//! a partial feature pattern, plus a fallback distribution. Every point first
//! draws which rule (if any) it belongs to by the rules' weights, gets that
//! rule's pattern bits, and fills every other bit with probability `noise`.
//! The method is then sampled from the first rule whose pattern matches the
//! finished vector, or from the fallback.
//!
//! Config text, one directive per line (`#` starts a comment):
//!
//! ```text
//! features = 8
//! noise = 0.0
//! rule 0.25 0=1 a:1
//! rule 0.001 5=1,6=1 rare:0.9,simp:0.1
//! fallback zipf(1.43):simp,auto,rule
//! ```

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{is_valid_method_name, Corpus, DataPoint, FeatureVector};
use crate::error::{Error, Result};

/// Exponent that puts about 59% of the mass on the top 3 of 169 methods.
pub const SKEWED_ZIPF_EXPONENT: f64 = 1.43;

const SUM_TOLERANCE: f64 = 1e-9;

/// Probability distribution over method names.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    entries: Vec<(String, f64)>,
}

impl Distribution {
    pub fn new(entries: Vec<(String, f64)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidDistribution("no methods".into()));
        }
        for (name, p) in &entries {
            if !is_valid_method_name(name) {
                return Err(Error::InvalidDistribution(format!("invalid method name `{name}`")));
            }
            if !(p.is_finite() && *p >= 0.0) {
                return Err(Error::InvalidDistribution(format!("bad probability {p} for `{name}`")));
            }
        }
        let sum: f64 = entries.iter().map(|(_, p)| p).sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidDistribution(format!("probabilities sum to {sum}")));
        }
        Ok(Distribution { entries })
    }

    pub fn entries(&self) -> &[(String, f64)] {
        &self.entries
    }

    pub fn probability(&self, method: &str) -> f64 {
        self.entries
            .iter()
            .filter(|(n, _)| n == method)
            .map(|(_, p)| p)
            .sum()
    }

    fn sample(&self, rng: &mut impl Rng) -> &str {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (name, p) in &self.entries {
            acc += p;
            if u < acc {
                return name;
            }
        }
        // rounding slack lands on the last entry with positive mass
        self.entries
            .iter()
            .rev()
            .find(|(_, p)| *p > 0.0)
            .map_or(&self.entries[0].0, |(n, _)| n)
    }
}

/// Probability of the rank-`r` method proportional to `r^-s`.
pub fn zipf_imbalance(methods: &[String], s: f64) -> Result<Distribution> {
    if methods.is_empty() {
        return Err(Error::InvalidDistribution("no methods".into()));
    }
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::InvalidDistribution(format!("zipf exponent {s} must be positive")));
    }
    let weights: Vec<f64> = (1..=methods.len()).map(|r| (r as f64).powf(-s)).collect();
    let total: f64 = weights.iter().sum();
    Distribution::new(
        methods
            .iter()
            .cloned()
            .zip(weights.into_iter().map(|w| w / total))
            .collect(),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    /// Probability that a point is drawn into this rule's pattern.
    pub weight: f64,
    pub pattern: BTreeMap<usize, bool>,
    pub methods: Distribution,
}

impl Rule {
    fn matches(&self, v: &FeatureVector) -> bool {
        self.pattern.iter().all(|(&i, &b)| v.get(i) == b)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedModel {
    pub feature_count: usize,
    pub noise: f64,
    pub rules: Vec<Rule>,
    pub fallback: Distribution,
}

impl PlantedModel {
    pub fn validate(&self) -> Result<()> {
        if self.feature_count == 0 {
            return Err(Error::config("feature count must be positive"));
        }
        if !(0.0..=1.0).contains(&self.noise) {
            return Err(Error::config(format!("noise {} outside [0,1]", self.noise)));
        }
        let mut total_weight = 0.0;
        for (i, rule) in self.rules.iter().enumerate() {
            if !(rule.weight.is_finite() && rule.weight >= 0.0) {
                return Err(Error::InvalidDistribution(format!("rule {} has bad weight", i + 1)));
            }
            total_weight += rule.weight;
            if let Some(&j) = rule.pattern.keys().find(|&&j| j >= self.feature_count) {
                return Err(Error::config(format!(
                    "rule {} uses feature {j} outside 0..{}",
                    i + 1,
                    self.feature_count
                )));
            }
        }
        if total_weight > 1.0 + SUM_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "rule weights sum to {total_weight}"
            )));
        }
        Ok(())
    }
}

/// Draws `n` points from a planted model. Output depends only on `(pm, n, seed)`.
pub fn generate(pm: &PlantedModel, n: usize, seed: u64) -> Result<Corpus> {
    pm.validate()?;
    if n == 0 {
        return Err(Error::config("point count must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let drawn = pm.rules.iter().find(|r| {
            acc += r.weight;
            u < acc
        });
        let mut v = FeatureVector::zeros(pm.feature_count);
        for j in 0..pm.feature_count {
            let bit = match drawn.and_then(|r| r.pattern.get(&j)) {
                Some(&b) => b,
                None => rng.gen_bool(pm.noise),
            };
            v.set(j, bit);
        }
        let dist = pm
            .rules
            .iter()
            .find(|r| r.matches(&v))
            .map_or(&pm.fallback, |r| &r.methods);
        points.push(DataPoint::new(dist.sample(&mut rng), v));
    }
    Corpus::from_points(points)
}

fn parse_distribution(text: &str) -> Result<Distribution> {
    if let Some(rest) = text.strip_prefix("zipf(") {
        let (s, names) = rest
            .split_once("):")
            .ok_or_else(|| Error::config(format!("expected `zipf(<s>):<names>` in `{text}`")))?;
        let s: f64 = s
            .parse()
            .map_err(|_| Error::config(format!("bad zipf exponent `{s}`")))?;
        let names: Vec<String> = names.split(',').map(|n| n.trim().to_string()).collect();
        return zipf_imbalance(&names, s);
    }
    let entries = text
        .split(',')
        .map(|entry| {
            let (name, p) = entry
                .split_once(':')
                .ok_or_else(|| Error::config(format!("expected `<method>:<p>` in `{entry}`")))?;
            let p: f64 = p
                .trim()
                .parse()
                .map_err(|_| Error::config(format!("bad probability `{p}`")))?;
            Ok((name.trim().to_string(), p))
        })
        .collect::<Result<Vec<_>>>()?;
    Distribution::new(entries)
}

fn parse_pattern(text: &str) -> Result<BTreeMap<usize, bool>> {
    let mut pattern = BTreeMap::new();
    for item in text.split(',') {
        let (index, bit) = item
            .split_once('=')
            .ok_or_else(|| Error::config(format!("expected `<index>=<0|1>` in `{item}`")))?;
        let index: usize = index
            .parse()
            .map_err(|_| Error::config(format!("bad feature index `{index}`")))?;
        let bit = match bit {
            "0" => false,
            "1" => true,
            _ => return Err(Error::config(format!("bad pattern bit `{bit}`"))),
        };
        if pattern.insert(index, bit).is_some() {
            return Err(Error::config(format!("feature {index} repeated in pattern")));
        }
    }
    Ok(pattern)
}

/// Parses the planted-model config text described in the module docs.
pub fn parse_planted_model(text: &str) -> Result<PlantedModel> {
    let mut feature_count = None;
    let mut noise = 0.0;
    let mut rules = Vec::new();
    let mut fallback = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let at = |e: Error| match e {
            Error::InvalidConfig(msg) => Error::config(format!("line {}: {msg}", idx + 1)),
            Error::InvalidDistribution(msg) => {
                Error::InvalidDistribution(format!("line {}: {msg}", idx + 1))
            }
            other => other,
        };
        if let Some((key, value)) = line.split_once('=') {
            let value = value.trim();
            match key.trim() {
                "features" => {
                    let count = value.parse::<usize>();
                    feature_count =
                        Some(count.map_err(|_| at(Error::config(format!("bad feature count `{value}`"))))?);
                    continue;
                }
                "noise" => {
                    let p = value.parse::<f64>();
                    noise = p.map_err(|_| at(Error::config(format!("bad noise `{value}`"))))?;
                    continue;
                }
                _ => {}
            }
        }
        let mut words = line.split_whitespace();
        match words.next() {
            Some("rule") => {
                let parts: Vec<&str> = words.collect();
                let [weight, pattern, dist] = parts[..] else {
                    return Err(at(Error::config(
                        "expected `rule <weight> <pattern> <distribution>`",
                    )));
                };
                let weight: f64 = weight
                    .parse()
                    .map_err(|_| at(Error::config(format!("bad weight `{weight}`"))))?;
                rules.push(Rule {
                    weight,
                    pattern: parse_pattern(pattern).map_err(at)?,
                    methods: parse_distribution(dist).map_err(at)?,
                });
            }
            Some("fallback") => {
                let dist: Vec<&str> = words.collect();
                let [dist] = dist[..] else {
                    return Err(at(Error::config("expected `fallback <distribution>`")));
                };
                fallback = Some(parse_distribution(dist).map_err(at)?);
            }
            _ => return Err(at(Error::config(format!("unrecognized line `{line}`")))),
        }
    }
    let pm = PlantedModel {
        feature_count: feature_count.ok_or_else(|| Error::config("missing `features = <F>`"))?,
        noise,
        rules,
        fallback: fallback.ok_or_else(|| Error::config("missing `fallback` line"))?,
    };
    pm.validate()?;
    Ok(pm)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(n: usize) -> Vec<String> {
        (1..=n).map(|i| format!("m{i:03}")).collect()
    }

    #[test]
    fn zipf_values() {
        let d = zipf_imbalance(&names(1), 1.0).unwrap();
        assert_eq!(d.entries()[0].1, 1.0);
        let d = zipf_imbalance(&names(2), 1.0).unwrap();
        assert!((d.entries()[0].1 - 2.0 / 3.0).abs() < 1e-15);
        assert!((d.entries()[1].1 - 1.0 / 3.0).abs() < 1e-15);
        assert!(zipf_imbalance(&[], 1.0).is_err());
        assert!(zipf_imbalance(&names(3), 0.0).is_err());
    }

    #[test]
    fn skewed_exponent_top_three_mass() {
        let d = zipf_imbalance(&names(169), SKEWED_ZIPF_EXPONENT).unwrap();
        let top3: f64 = d.entries()[..3].iter().map(|(_, p)| p).sum();
        assert!((top3 - 0.591).abs() < 0.005, "{top3}");
    }

    #[test]
    fn distribution_validation() {
        assert!(Distribution::new(vec![("a".into(), 0.5)]).is_err());
        assert!(Distribution::new(vec![("a".into(), 1.5), ("b".into(), -0.5)]).is_err());
        assert!(Distribution::new(vec![("a b".into(), 1.0)]).is_err());
        assert!(Distribution::new(vec![]).is_err());
    }

    #[test]
    fn deterministic_rule() {
        let pm = parse_planted_model("features = 4\nnoise = 0\nrule 0.5 0=1 a:1\nfallback b:1\n").unwrap();
        let c = generate(&pm, 500, 7).unwrap();
        assert!(c.points().iter().all(|p| p.features.get(0) == (p.method == "a")));
        assert!(c.points().iter().all(|p| !p.features.bits()[1..].iter().any(|&b| b)));
        assert_eq!(c, generate(&pm, 500, 7).unwrap());
        assert_ne!(c, generate(&pm, 500, 8).unwrap());
    }

    #[test]
    fn zipf_fallback_share() {
        let methods = names(20);
        let pm = PlantedModel {
            feature_count: 4,
            noise: 0.1,
            rules: vec![],
            fallback: zipf_imbalance(&methods, 1.0).unwrap(),
        };
        let c = generate(&pm, 10_000, 1).unwrap();
        let target = pm.fallback.probability("m001");
        let share = c.methods()["m001"] as f64 / c.len() as f64;
        assert!((share - target).abs() < 0.03, "{share} vs {target}");
    }

    #[test]
    fn config_parsing() {
        let text = "# planted\nfeatures = 8\nnoise = 0.05\nrule 0.001 5=1,6=0 rare:0.9,simp:0.1\nfallback zipf(1.43):simp,auto,rule\n";
        let pm = parse_planted_model(text).unwrap();
        assert_eq!(pm.feature_count, 8);
        assert_eq!(pm.noise, 0.05);
        assert_eq!(pm.rules[0].pattern, BTreeMap::from([(5, true), (6, false)]));
        assert_eq!(pm.rules[0].methods.probability("rare"), 0.9);
        assert_eq!(pm.fallback.entries().len(), 3);
    }

    #[test]
    fn config_errors() {
        for text in [
            "noise = 0\nfallback a:1",
            "features = 4\n",
            "features = 4\nfallback a:0.5",
            "features = 4\nrule 0.5 9=1 a:1\nfallback a:1",
            "features = 4\nrule 0.7 0=1 a:1\nrule 0.7 1=1 a:1\nfallback a:1",
            "features = 4\nrule x 0=1 a:1\nfallback a:1",
            "features = 4\nnoise = 2\nfallback a:1",
            "features = 4\nbogus\nfallback a:1",
        ] {
            assert!(parse_planted_model(text).is_err(), "{text}");
        }
    }
}
