//! Two-group comparisons of lexicon proportions, distribution summaries and
//! source rankings.
//!
//! Controversial (C3) and non-controversial (C0) topics are compared per
//! (source, feature) with a two-sided Mann-Whitney U test. Small tie-free
//! samples get the exact null distribution; everything else uses the normal
//! approximation with tie-corrected variance and a continuity correction.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, StudentsT};
use statrs::function::erf::erfc;
use thiserror::Error;

use crate::annotation::Klass;
use crate::scoring::{FeatureId, ProportionRecord};

pub const DEFAULT_ALPHA: f64 = 0.01;
/// Largest combined sample size for which the exact distribution is used.
pub const EXACT_MAX_N: usize = 12;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("empty sample")]
    EmptySample,
    #[error("sample contains a non-finite value")]
    NonFinite,
    #[error("no {group} topics with records for ({outlet}, {feature})")]
    GroupMissing {
        outlet: String,
        feature: String,
        group: &'static str,
    },
    #[error("no comparison for source {0:?}")]
    MissingComparison(String),
    #[error("Welch's t needs at least two observations per group")]
    TooFewForWelch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PMethod {
    Exact,
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MannWhitney {
    /// U of the first sample: pairs (a, b) with a > b, ties counting one half.
    pub u: f64,
    pub p_value: f64,
    pub method: PMethod,
}

fn check_sample(xs: &[f64]) -> Result<(), StatsError> {
    if xs.is_empty() {
        return Err(StatsError::EmptySample);
    }
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    Ok(())
}

/// Midranks of the pooled sample plus the sizes of every tie group.
fn pooled_ranks(a: &[f64], b: &[f64]) -> (f64, Vec<usize>) {
    let mut pooled: Vec<(f64, bool)> = a
        .iter()
        .map(|&x| (x, true))
        .chain(b.iter().map(|&x| (x, false)))
        .collect();
    pooled.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut rank_sum_a = 0.0;
    let mut ties = Vec::new();
    let mut i = 0;
    while i < pooled.len() {
        let mut j = i + 1;
        while j < pooled.len() && pooled[j].0 == pooled[i].0 {
            j += 1;
        }
        // Ranks i+1 ..= j share their average.
        let midrank = (i + 1 + j) as f64 / 2.0;
        rank_sum_a += midrank * pooled[i..j].iter().filter(|p| p.1).count() as f64;
        if j - i > 1 {
            ties.push(j - i);
        }
        i = j;
    }
    (rank_sum_a, ties)
}

/// Number of ways each U value arises when `m` of `m + n` distinct ranks go to
/// the first sample. Index u holds the count for U = u.
pub fn exact_u_counts(m: usize, n: usize) -> Vec<u64> {
    // counts[i][j] is the distribution for sizes (i, j); built up row by row.
    let max_u = m * n;
    let mut prev: Vec<Vec<u64>> = (0..=n).map(|_| vec![1]).collect();
    for i in 1..=m {
        let mut cur: Vec<Vec<u64>> = Vec::with_capacity(n + 1);
        cur.push(vec![1]);
        for j in 1..=n {
            // Largest rank either belongs to sample one (adds j to U) or two.
            let mut dist = vec![0u64; i * j + 1];
            for (u, c) in prev[j].iter().enumerate() {
                dist[u + j] += c;
            }
            for (u, c) in cur[j - 1].iter().enumerate() {
                dist[u] += c;
            }
            cur.push(dist);
        }
        prev = cur;
    }
    let mut out = prev.swap_remove(n);
    out.resize(max_u + 1, 0);
    out
}

fn standard_normal_upper(z: f64) -> f64 {
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}

/// Two-sided Mann-Whitney U test of `a` against `b`.
pub fn mann_whitney(a: &[f64], b: &[f64]) -> Result<MannWhitney, StatsError> {
    check_sample(a)?;
    check_sample(b)?;
    let (na, nb) = (a.len(), b.len());
    let (rank_sum_a, ties) = pooled_ranks(a, b);
    let u = rank_sum_a - (na * (na + 1)) as f64 / 2.0;

    if ties.is_empty() && na + nb <= EXACT_MAX_N {
        let counts = exact_u_counts(na, nb);
        let total: u64 = counts.iter().sum();
        let ui = u.round() as usize;
        let le: u64 = counts[..=ui].iter().sum();
        let ge: u64 = counts[ui..].iter().sum();
        let tail = (2 * le.min(ge)).min(total);
        return Ok(MannWhitney {
            u,
            p_value: tail as f64 / total as f64,
            method: PMethod::Exact,
        });
    }

    let (naf, nbf) = (na as f64, nb as f64);
    let n = naf + nbf;
    let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / (n * (n - 1.0));
    let variance = naf * nbf / 12.0 * ((n + 1.0) - tie_term);
    let mean = naf * nbf / 2.0;
    let p_value = if variance <= 0.0 {
        1.0
    } else {
        let z = ((u - mean).abs() - 0.5).max(0.0) / variance.sqrt();
        (2.0 * standard_normal_upper(z)).min(1.0)
    };
    Ok(MannWhitney {
        u,
        p_value,
        method: PMethod::Normal,
    })
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Welch's unequal-variance t test. Returns (t, two-sided p).
pub fn welch_t(a: &[f64], b: &[f64]) -> Result<(f64, f64), StatsError> {
    check_sample(a)?;
    check_sample(b)?;
    if a.len() < 2 || b.len() < 2 {
        return Err(StatsError::TooFewForWelch);
    }
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let (sa, sb) = (va / a.len() as f64, vb / b.len() as f64);
    let se2 = sa + sb;
    if se2 == 0.0 {
        return Ok(if ma == mb { (0.0, 1.0) } else { (f64::INFINITY.copysign(ma - mb), 0.0) });
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2 / (sa * sa / (a.len() as f64 - 1.0) + sb * sb / (b.len() as f64 - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    let p = (2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0);
    Ok((t, p))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TestKind {
    #[default]
    MannWhitney,
    Welch,
}

impl FromStr for TestKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mann-whitney" => Ok(TestKind::MannWhitney),
            "welch" => Ok(TestKind::Welch),
            other => Err(format!("unknown test {other:?} (mann-whitney, welch)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    HigherInControversial,
    HigherInNoncontroversial,
    Tie,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::HigherInControversial => "higher_in_controversial",
            Direction::HigherInNoncontroversial => "higher_in_noncontroversial",
            Direction::Tie => "tie",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Direction {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "higher_in_controversial" => Ok(Direction::HigherInControversial),
            "higher_in_noncontroversial" => Ok(Direction::HigherInNoncontroversial),
            "tie" => Ok(Direction::Tie),
            other => Err(format!("unknown direction {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupComparison {
    pub source: String,
    pub feature_id: FeatureId,
    pub n_controversial: usize,
    pub n_noncontroversial: usize,
    /// Mann-Whitney U of the controversial sample, whatever test produced `p_value`.
    pub u_statistic: f64,
    pub p_value: f64,
    pub direction: Direction,
    pub significant: bool,
    /// Median of controversial minus median of non-controversial proportions.
    pub median_difference: f64,
}

impl GroupComparison {
    /// Rank-biserial correlation, positive when controversial topics score higher.
    pub fn rank_biserial(&self) -> f64 {
        let pairs = (self.n_controversial * self.n_noncontroversial) as f64;
        let u_noncontroversial = pairs - self.u_statistic;
        1.0 - 2.0 * u_noncontroversial / pairs
    }
}

/// Median by linear interpolation; `sorted` must be ascending and non-empty.
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn median(values: &[f64]) -> Result<f64, StatsError> {
    check_sample(values)?;
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(quantile_sorted(&v, 0.5))
}

fn group_values(
    records: &[ProportionRecord],
    labels: &BTreeMap<String, Klass>,
    source: &str,
    feature: FeatureId,
    klass: Klass,
) -> Vec<f64> {
    records
        .iter()
        .filter(|r| r.source == source && r.feature_id == feature)
        .filter(|r| labels.get(&r.topic) == Some(&klass))
        .map(|r| r.proportion)
        .collect()
}

/// Compares C3 against C0 topics for one (source, feature).
pub fn compare_groups(
    records: &[ProportionRecord],
    labels: &BTreeMap<String, Klass>,
    source: &str,
    feature: FeatureId,
    alpha: f64,
    test: TestKind,
) -> Result<GroupComparison, StatsError> {
    let controversial = group_values(records, labels, source, feature, Klass::C3);
    let noncontroversial = group_values(records, labels, source, feature, Klass::C0);
    let missing = |group| StatsError::GroupMissing {
        outlet: source.to_string(),
        feature: feature.to_string(),
        group,
    };
    if controversial.is_empty() {
        return Err(missing("C3"));
    }
    if noncontroversial.is_empty() {
        return Err(missing("C0"));
    }
    let mw = mann_whitney(&controversial, &noncontroversial)?;
    let p_value = match test {
        TestKind::MannWhitney => mw.p_value,
        TestKind::Welch => welch_t(&controversial, &noncontroversial)?.1,
    };
    let median_difference = median(&controversial)? - median(&noncontroversial)?;
    let direction = if median_difference > 0.0 {
        Direction::HigherInControversial
    } else if median_difference < 0.0 {
        Direction::HigherInNoncontroversial
    } else {
        Direction::Tie
    };
    Ok(GroupComparison {
        source: source.to_string(),
        feature_id: feature,
        n_controversial: controversial.len(),
        n_noncontroversial: noncontroversial.len(),
        u_statistic: mw.u,
        p_value,
        direction,
        significant: p_value < alpha,
        median_difference,
    })
}

/// Comparisons for every (source, feature) present in `records`, ordered by
/// (source, feature id). Pairs lacking a group become warnings.
pub fn compare_all(
    records: &[ProportionRecord],
    labels: &BTreeMap<String, Klass>,
    alpha: f64,
    test: TestKind,
) -> (Vec<GroupComparison>, Vec<String>) {
    let mut by_pair: BTreeMap<(String, FeatureId), Vec<ProportionRecord>> = BTreeMap::new();
    for r in records {
        by_pair
            .entry((r.source.clone(), r.feature_id))
            .or_default()
            .push(r.clone());
    }
    let results: Vec<Result<GroupComparison, StatsError>> = by_pair
        .par_iter()
        .map(|((source, feature), recs)| compare_groups(recs, labels, source, *feature, alpha, test))
        .collect();
    let mut comparisons = Vec::new();
    let mut warnings = Vec::new();
    for r in results {
        match r {
            Ok(c) => comparisons.push(c),
            Err(e) => warnings.push(e.to_string()),
        }
    }
    (comparisons, warnings)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RankMetric {
    #[default]
    RankBiserial,
    MedianDifference,
}

impl FromStr for RankMetric {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rank-biserial" => Ok(RankMetric::RankBiserial),
            "median-difference" => Ok(RankMetric::MedianDifference),
            other => Err(format!("unknown metric {other:?} (rank-biserial, median-difference)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedSource {
    pub source: String,
    pub effect: f64,
}

/// Orders the registry's sources by descending effect for `feature`, ties by name.
pub fn rank_sources(
    comparisons: &[GroupComparison],
    feature: FeatureId,
    registry: &[String],
    metric: RankMetric,
) -> Result<Vec<RankedSource>, StatsError> {
    let registry: BTreeSet<&String> = registry.iter().collect();
    let mut out = Vec::with_capacity(registry.len());
    for source in registry {
        let c = comparisons
            .iter()
            .find(|c| &c.source == source && c.feature_id == feature)
            .ok_or_else(|| StatsError::MissingComparison(source.clone()))?;
        let effect = match metric {
            RankMetric::RankBiserial => c.rank_biserial(),
            RankMetric::MedianDifference => c.median_difference,
        };
        out.push(RankedSource {
            source: source.clone(),
            effect,
        });
    }
    out.sort_by(|a, b| b.effect.total_cmp(&a.effect).then_with(|| a.source.cmp(&b.source)));
    Ok(out)
}

/// Box-plot summary. `min` and `max` are the whisker ends: the most extreme
/// values within 1.5 IQR of the quartiles.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionSummary {
    pub n: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub outliers: Vec<f64>,
}

pub fn summarize_distribution(values: &[f64]) -> Result<DistributionSummary, StatsError> {
    check_sample(values)?;
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let q1 = quantile_sorted(&v, 0.25);
    let median = quantile_sorted(&v, 0.5);
    let q3 = quantile_sorted(&v, 0.75);
    let iqr = q3 - q1;
    let (lo_fence, hi_fence) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
    let inside: Vec<f64> = v.iter().copied().filter(|x| *x >= lo_fence && *x <= hi_fence).collect();
    let outliers: Vec<f64> = v.iter().copied().filter(|x| *x < lo_fence || *x > hi_fence).collect();
    let min = inside.first().copied().unwrap_or(q1).min(q1);
    let max = inside.last().copied().unwrap_or(q3).max(q3);
    Ok(DistributionSummary {
        n: v.len(),
        min,
        q1,
        median,
        q3,
        max,
        outliers,
    })
}

/// Topic groups shown side by side: controversial, somewhat, non-controversial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Group {
    Controversial,
    Somewhat,
    Noncontroversial,
}

impl Group {
    pub fn of(klass: Klass) -> Option<Group> {
        match klass {
            Klass::C3 => Some(Group::Controversial),
            Klass::C2 => Some(Group::Somewhat),
            Klass::C0 => Some(Group::Noncontroversial),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Group::Controversial => "C",
            Group::Somewhat => "W",
            Group::Noncontroversial => "N",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupSummary {
    pub source: String,
    pub group: Group,
    pub feature_id: FeatureId,
    pub summary: DistributionSummary,
}

/// Summaries for every (source, group, feature) cell with at least one value.
pub fn summarize_groups(records: &[ProportionRecord], labels: &BTreeMap<String, Klass>) -> Vec<GroupSummary> {
    let mut cells: BTreeMap<(String, Group, FeatureId), Vec<f64>> = BTreeMap::new();
    for r in records {
        if let Some(group) = labels.get(&r.topic).copied().and_then(Group::of) {
            cells
                .entry((r.source.clone(), group, r.feature_id))
                .or_default()
                .push(r.proportion);
        }
    }
    cells
        .into_iter()
        .map(|((source, group, feature_id), values)| GroupSummary {
            source,
            group,
            feature_id,
            summary: summarize_distribution(&values).expect("non-empty cell"),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexicons::{Category, LexiconName};
    use proptest::prelude::*;

    /// Exhaustive oracle: every way to hand the pooled ranks to sample `a`.
    fn enumerate_p(a: &[f64], b: &[f64]) -> f64 {
        let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
        let n = pooled.len();
        let u_of = |mask: u32| -> f64 {
            let (xs, ys): (Vec<f64>, Vec<f64>) = (0..n).fold((vec![], vec![]), |(mut x, mut y), i| {
                if mask & (1 << i) != 0 { x.push(pooled[i]) } else { y.push(pooled[i]) }
                (x, y)
            });
            let mut u = 0.0;
            for x in &xs {
                for y in &ys {
                    u += if x > y { 1.0 } else if x == y { 0.5 } else { 0.0 };
                }
            }
            u
        };
        let observed = u_of((1u32 << a.len()) - 1);
        let all: Vec<f64> = (0u32..1 << n).filter(|m| m.count_ones() as usize == a.len()).map(u_of).collect();
        let total = all.len() as f64;
        let le = all.iter().filter(|u| **u <= observed).count() as f64;
        let ge = all.iter().filter(|u| **u >= observed).count() as f64;
        (2.0 * le.min(ge) / total).min(1.0)
    }

    #[test]
    fn separated_three_vs_three() {
        let r = mann_whitney(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
        assert_eq!(r.u, 0.0);
        assert_eq!(r.p_value, 0.1);
        assert_eq!(r.method, PMethod::Exact);
        assert_eq!(enumerate_p(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]), 0.1);
    }

    #[test]
    fn identical_samples() {
        let r = mann_whitney(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(r.u, 4.5);
        assert!(r.p_value > 0.99);
    }

    #[test]
    fn swapping_arguments() {
        let a = [0.3, 0.1, 0.7, 0.2];
        let b = [0.5, 0.6, 0.05];
        let ab = mann_whitney(&a, &b).unwrap();
        let ba = mann_whitney(&b, &a).unwrap();
        assert_eq!(ab.u + ba.u, 12.0);
        assert_eq!(ab.p_value, ba.p_value);
    }

    #[test]
    fn empty_and_nan() {
        assert_eq!(mann_whitney(&[], &[1.0]), Err(StatsError::EmptySample));
        assert_eq!(mann_whitney(&[1.0], &[f64::NAN]), Err(StatsError::NonFinite));
        assert_eq!(summarize_distribution(&[]), Err(StatsError::EmptySample));
    }

    #[test]
    fn exact_counts_are_binomial() {
        for (m, n) in [(1, 1), (3, 3), (4, 8), (6, 6), (2, 9)] {
            let counts = exact_u_counts(m, n);
            assert_eq!(counts.len(), m * n + 1);
            let total: u64 = counts.iter().sum();
            let binom = (0..m).fold(1u64, |acc, i| acc * (m + n - i) as u64 / (i + 1) as u64);
            assert_eq!(total, binom);
            // Symmetric about mn/2.
            assert!(counts.iter().eq(counts.iter().rev()));
        }
    }

    #[test]
    fn normal_path_matches_reference_value() {
        // Fully separated 7 vs 7; asymptotic two-sided p with continuity correction.
        let a: Vec<f64> = (1..=7).map(f64::from).collect();
        let b: Vec<f64> = (8..=14).map(f64::from).collect();
        let r = mann_whitney(&a, &b).unwrap();
        assert_eq!(r.method, PMethod::Normal);
        // mu = 24.5, sigma^2 = 49 * 15 / 12 = 61.25, z = (24.5 - 0.5) / sqrt(61.25)
        let z: f64 = 24.0 / 61.25f64.sqrt();
        let expected = 2.0 * standard_normal_upper(z);
        assert!((r.p_value - expected).abs() < 1e-15);
        assert!((r.p_value - 0.002_165_029).abs() < 1e-8, "{}", r.p_value);
    }

    #[test]
    fn ties_use_corrected_variance() {
        let r = mann_whitney(&[1.0, 1.0, 1.0], &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(r.p_value, 1.0);
        let r = mann_whitney(&[1.0, 2.0, 2.0, 3.0], &[2.0, 3.0, 3.0, 4.0]).unwrap();
        assert_eq!(r.method, PMethod::Normal);
        assert!(r.p_value > 0.0 && r.p_value <= 1.0);
    }

    #[test]
    fn welch_reference() {
        // Hand computation: means 2 and 5, variances 1 and 2.5, n = 3 and 4.
        let (t, p) = welch_t(&[1.0, 2.0, 3.0], &[3.0, 4.0, 6.0, 7.0]).unwrap();
        let se = (1.0 / 3.0 + 3.333_333_333_333_333_5 / 4.0f64).sqrt();
        assert!((t - (-3.0 / se)).abs() < 1e-12);
        assert!(p > 0.0 && p < 0.1);
        assert_eq!(welch_t(&[1.0], &[2.0, 3.0]), Err(StatsError::TooFewForWelch));
    }

    fn feature() -> FeatureId {
        FeatureId::new(LexiconName::Anew, Category::Negative)
    }

    fn records(source: &str, values: &[(&str, f64)]) -> Vec<ProportionRecord> {
        values
            .iter()
            .map(|(t, p)| ProportionRecord {
                source: source.into(),
                topic: t.to_string(),
                feature_id: feature(),
                proportion: *p,
                total_tokens: 100,
            })
            .collect()
    }

    fn labels(pairs: &[(&str, Klass)]) -> BTreeMap<String, Klass> {
        pairs.iter().map(|(t, k)| (t.to_string(), *k)).collect()
    }

    #[test]
    fn equal_groups_tie() {
        let recs = records("S", &[("a", 0.1), ("b", 0.1), ("c", 0.1), ("d", 0.1)]);
        let lab = labels(&[("a", Klass::C3), ("b", Klass::C3), ("c", Klass::C0), ("d", Klass::C0)]);
        let c = compare_groups(&recs, &lab, "S", feature(), 0.01, TestKind::MannWhitney).unwrap();
        assert_eq!(c.direction, Direction::Tie);
        assert!(!c.significant);
    }

    #[test]
    fn three_vs_three_matches_enumeration() {
        let recs = records("S", &[("a", 0.3), ("b", 0.5), ("c", 0.6), ("d", 0.1), ("e", 0.4), ("f", 0.2), ("g", 0.9)]);
        let lab = labels(&[
            ("a", Klass::C3), ("b", Klass::C3), ("c", Klass::C3),
            ("d", Klass::C0), ("e", Klass::C0), ("f", Klass::C0), ("g", Klass::C2),
        ]);
        let c = compare_groups(&recs, &lab, "S", feature(), 0.01, TestKind::MannWhitney).unwrap();
        assert_eq!((c.n_controversial, c.n_noncontroversial), (3, 3));
        assert_eq!(c.u_statistic, 8.0);
        assert_eq!(c.p_value, enumerate_p(&[0.3, 0.5, 0.6], &[0.1, 0.4, 0.2]));
        assert_eq!(c.direction, Direction::HigherInControversial);
        assert!(!c.significant);
    }

    #[test]
    fn missing_group() {
        let recs = records("S", &[("a", 0.3)]);
        let lab = labels(&[("a", Klass::C3)]);
        assert!(matches!(
            compare_groups(&recs, &lab, "S", feature(), 0.01, TestKind::MannWhitney),
            Err(StatsError::GroupMissing { group: "C0", .. })
        ));
        let (cmp, warn) = compare_all(&recs, &lab, 0.01, TestKind::MannWhitney);
        assert!(cmp.is_empty());
        assert_eq!(warn.len(), 1);
    }

    fn comparison(source: &str, u: f64, na: usize, nb: usize) -> GroupComparison {
        GroupComparison {
            source: source.into(),
            feature_id: feature(),
            n_controversial: na,
            n_noncontroversial: nb,
            u_statistic: u,
            p_value: 0.5,
            direction: Direction::Tie,
            significant: false,
            median_difference: u / (na * nb) as f64,
        }
    }

    #[test]
    fn ranking() {
        let names = |r: &[RankedSource]| r.iter().map(|x| x.source.clone()).collect::<Vec<_>>();
        // Effects 0.9 and 0.2: U = (1 + r) / 2 * n_a n_b.
        let cmps = vec![comparison("B", 0.6 * 100.0, 10, 10), comparison("A", 0.95 * 100.0, 10, 10)];
        let reg = vec!["A".to_string(), "B".to_string()];
        let ranked = rank_sources(&cmps, feature(), &reg, RankMetric::RankBiserial).unwrap();
        assert_eq!(names(&ranked), vec!["A", "B"]);
        assert!((ranked[0].effect - 0.9).abs() < 1e-12);

        let equal = vec![comparison("Z", 50.0, 10, 10), comparison("M", 50.0, 10, 10), comparison("A", 50.0, 10, 10)];
        let reg3: Vec<String> = ["Z", "M", "A"].map(String::from).to_vec();
        assert_eq!(names(&rank_sources(&equal, feature(), &reg3, RankMetric::RankBiserial).unwrap()), vec!["A", "M", "Z"]);

        let reg_extra = vec!["A".to_string(), "Q".to_string()];
        assert_eq!(
            rank_sources(&cmps, feature(), &reg_extra, RankMetric::RankBiserial),
            Err(StatsError::MissingComparison("Q".into()))
        );
    }

    #[test]
    fn five_source_ranking_against_hand_effects() {
        // (source, U, n_c, n_n) -> effect 2U/(n_c n_n) - 1 by hand.
        let rows = [("CNN", 30.0, 6, 10), ("HUF", 55.0, 6, 10), ("REU", 12.0, 4, 5), ("NYT", 10.0, 4, 5), ("WAP", 36.0, 6, 12)];
        let hand = [("CNN", 0.0), ("HUF", 55.0 / 30.0 - 1.0), ("REU", 0.2), ("NYT", 0.0), ("WAP", 0.0)];
        let cmps: Vec<_> = rows.iter().map(|(s, u, a, b)| comparison(s, *u, *a, *b)).collect();
        let reg: Vec<String> = rows.iter().map(|r| r.0.to_string()).collect();
        let ranked = rank_sources(&cmps, feature(), &reg, RankMetric::RankBiserial).unwrap();
        let mut oracle = hand.to_vec();
        oracle.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(b.0)));
        let got: Vec<&str> = ranked.iter().map(|r| r.source.as_str()).collect();
        assert_eq!(got, oracle.iter().map(|o| o.0).collect::<Vec<_>>());
        for (r, o) in ranked.iter().zip(&oracle) {
            assert!((r.effect - o.1).abs() < 1e-12);
        }
    }

    #[test]
    fn five_number_summaries() {
        let s = summarize_distribution(&[3.0, 1.0, 5.0, 2.0, 4.0]).unwrap();
        assert_eq!((s.min, s.q1, s.median, s.q3, s.max), (1.0, 2.0, 3.0, 4.0, 5.0));
        assert!(s.outliers.is_empty());

        let s = summarize_distribution(&[0.25]).unwrap();
        assert_eq!((s.min, s.q1, s.median, s.q3, s.max), (0.25, 0.25, 0.25, 0.25, 0.25));

        // q1 = 2, q3 = 4, IQR = 2, upper fence 7: 100 is out, whisker stops at 4.
        let s = summarize_distribution(&[1.0, 2.0, 3.0, 4.0, 100.0]).unwrap();
        assert_eq!(s.outliers, vec![100.0]);
        assert_eq!(s.max, 4.0);
    }

    #[test]
    fn group_summaries_cover_three_groups() {
        let recs = records("S", &[("a", 0.3), ("b", 0.5), ("c", 0.6), ("x", 0.9)]);
        let lab = labels(&[("a", Klass::C3), ("b", Klass::C2), ("c", Klass::C0), ("x", Klass::C1)]);
        let out = summarize_groups(&recs, &lab);
        let groups: Vec<&str> = out.iter().map(|g| g.group.as_str()).collect();
        assert_eq!(groups, vec!["C", "W", "N"]);
    }

    fn distinct_pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        proptest::collection::btree_set(-1000i32..1000, 2..40).prop_flat_map(|set| {
            let v: Vec<f64> = set.into_iter().map(|x| x as f64 / 10.0).collect();
            let n = v.len();
            (Just(v), 1..n)
        }).prop_map(|(v, split)| {
            let mut v = v;
            // Interleave so both samples span the range.
            v.sort_by(|a, b| ((a * 7.3).sin()).total_cmp(&(b * 7.3).sin()));
            let b = v.split_off(split);
            (v, b)
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn u_complement_identity((a, b) in distinct_pair()) {
            let ab = mann_whitney(&a, &b).unwrap();
            let ba = mann_whitney(&b, &a).unwrap();
            prop_assert_eq!(ab.u + ba.u, (a.len() * b.len()) as f64);
            prop_assert_eq!(ab.p_value, ba.p_value);
            prop_assert!((0.0..=1.0).contains(&ab.p_value));
        }

        #[test]
        fn invariant_under_monotone_maps((a, b) in distinct_pair()) {
            let base = mann_whitney(&a, &b).unwrap();
            let f = |x: &f64| (x / 50.0).exp() * 3.0 + 1.0;
            let ta: Vec<f64> = a.iter().map(f).collect();
            let tb: Vec<f64> = b.iter().map(f).collect();
            prop_assert_eq!(mann_whitney(&ta, &tb).unwrap(), base);
            let neg_a: Vec<f64> = a.iter().map(|x| -x).collect();
            let neg_b: Vec<f64> = b.iter().map(|x| -x).collect();
            // A decreasing map mirrors U but keeps p.
            let mirrored = mann_whitney(&neg_a, &neg_b).unwrap();
            prop_assert_eq!(mirrored.p_value, base.p_value);
        }

        #[test]
        fn summary_is_ordered(v in proptest::collection::vec(-100.0f64..100.0, 1..50)) {
            let s = summarize_distribution(&v).unwrap();
            prop_assert!(s.min <= s.q1 && s.q1 <= s.median && s.median <= s.q3 && s.q3 <= s.max);
            prop_assert_eq!(s.n, v.len());
        }
    }
}
