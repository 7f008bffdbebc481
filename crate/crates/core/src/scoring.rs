//! Lexicon proportions of super-articles: the observation unit for every
//! downstream comparison and for the classifier's features.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::SuperArticle;
use crate::lexicons::{Category, Lexicon, LexiconError, LexiconName};

#[derive(Debug, Error)]
pub enum ScoringError {
    #[error("super-article ({outlet}, {topic}) has no tokens")]
    InsufficientText { outlet: String, topic: String },
    #[error("k must be at least 1")]
    ZeroK,
    #[error("bad feature id {0:?}")]
    BadFeature(String),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("proportions row {row}: {reason}")]
    BadRecord { row: usize, reason: String },
}

impl From<LexiconError> for ScoringError {
    fn from(e: LexiconError) -> Self {
        ScoringError::BadFeature(e.to_string())
    }
}

/// A lexicon category, written `lexicon:category` (e.g. `anew:negative`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FeatureId {
    pub lexicon: LexiconName,
    pub category: Category,
}

impl FeatureId {
    pub const fn new(lexicon: LexiconName, category: Category) -> Self {
        FeatureId { lexicon, category }
    }
}

impl fmt::Display for FeatureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.lexicon, self.category)
    }
}

impl FromStr for FeatureId {
    type Err = ScoringError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ScoringError::BadFeature(s.to_string());
        let (lex, cat) = s.split_once(':').ok_or_else(bad)?;
        let lexicon: LexiconName = lex.parse().map_err(|_| bad())?;
        let category: Category = cat.parse().map_err(|_| bad())?;
        if !lexicon.allowed_categories().contains(&category) {
            return Err(bad());
        }
        Ok(FeatureId { lexicon, category })
    }
}

impl Ord for FeatureId {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.to_string().cmp(&other.to_string())
    }
}

impl PartialOrd for FeatureId {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Serialize for FeatureId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for FeatureId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// The 13 per-source features used by default: bias, positive and negative for
/// the four sentiment lexicons, strong for ANEW, MicroWNOp and SentiWordNet,
/// and MicroWNOp neutral.
pub fn default_roster() -> Vec<FeatureId> {
    use Category::{Negative, Neutral, Positive, Strong};
    use LexiconName::{Anew, Geninq, Micrownop, Sentiwordnet};
    let mut roster = vec![FeatureId::new(LexiconName::Bias, Category::Bias)];
    for lex in [Anew, Geninq, Micrownop, Sentiwordnet] {
        roster.push(FeatureId::new(lex, Positive));
        roster.push(FeatureId::new(lex, Negative));
    }
    for lex in [Anew, Micrownop, Sentiwordnet] {
        roster.push(FeatureId::new(lex, Strong));
    }
    roster.push(FeatureId::new(Micrownop, Neutral));
    roster
}

/// Parses a comma-separated roster.
pub fn parse_roster(s: &str) -> Result<Vec<FeatureId>, ScoringError> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let f: FeatureId = part.parse()?;
        if seen.insert(f) {
            out.push(f);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProportionRecord {
    pub source: String,
    pub topic: String,
    pub feature_id: FeatureId,
    pub proportion: f64,
    pub total_tokens: u64,
}

/// Sum of the counts of `terms` in `sa`.
pub fn matched_tokens(sa: &SuperArticle, terms: &HashSet<String>) -> u64 {
    if terms.len() < sa.token_counts.len() {
        terms.iter().map(|t| sa.count(t)).sum()
    } else {
        sa.token_counts
            .iter()
            .filter(|(t, _)| terms.contains(t.as_str()))
            .map(|(_, c)| c)
            .sum()
    }
}

/// Fraction of the super-article's tokens that belong to `terms`.
pub fn lexicon_proportion(
    sa: &SuperArticle,
    terms: &HashSet<String>,
    feature_id: FeatureId,
) -> Result<ProportionRecord, ScoringError> {
    if sa.total_tokens == 0 {
        return Err(ScoringError::InsufficientText {
            outlet: sa.source.clone(),
            topic: sa.topic.clone(),
        });
    }
    let matched = matched_tokens(sa, terms);
    Ok(ProportionRecord {
        source: sa.source.clone(),
        topic: sa.topic.clone(),
        feature_id,
        proportion: matched as f64 / sa.total_tokens as f64,
        total_tokens: sa.total_tokens,
    })
}

#[derive(Debug, Clone, Default)]
pub struct ScoreOutput {
    pub records: Vec<ProportionRecord>,
    pub warnings: Vec<String>,
}

/// Scores every non-empty super-article against every usable roster feature.
/// Records are ordered by (source, topic, feature id).
pub fn score_corpus(
    super_articles: &[SuperArticle],
    lexicons: &BTreeMap<LexiconName, Lexicon>,
    roster: &[FeatureId],
) -> ScoreOutput {
    let mut warnings = Vec::new();
    let mut features: Vec<(FeatureId, HashSet<String>)> = Vec::new();
    for &f in roster {
        match lexicons.get(&f.lexicon) {
            None => warnings.push(format!("skipping {f}: lexicon {} not loaded", f.lexicon)),
            Some(lex) => {
                let terms: HashSet<String> = lex.category_terms(f.category).into_iter().collect();
                if terms.is_empty() {
                    warnings.push(format!("skipping {f}: lexicon has no {} terms", f.category));
                } else {
                    features.push((f, terms));
                }
            }
        }
    }
    features.sort_by_key(|f| f.0);

    let mut ordered: Vec<&SuperArticle> = super_articles.iter().collect();
    ordered.sort_by(|a, b| (&a.source, &a.topic).cmp(&(&b.source, &b.topic)));
    for sa in ordered.iter().filter(|sa| sa.total_tokens == 0) {
        warnings.push(format!("skipping empty super-article ({}, {})", sa.source, sa.topic));
    }

    let records: Vec<ProportionRecord> = ordered
        .par_iter()
        .filter(|sa| sa.total_tokens > 0)
        .flat_map_iter(|sa| {
            features
                .iter()
                .map(move |(f, terms)| lexicon_proportion(sa, terms, *f).expect("non-empty"))
        })
        .collect();
    ScoreOutput { records, warnings }
}

/// The `k` most frequent members of `terms` in `sa`, count-descending with
/// ties in lexicographic order.
pub fn top_terms(
    sa: &SuperArticle,
    terms: &HashSet<String>,
    k: usize,
) -> Result<Vec<(String, u64)>, ScoringError> {
    if k == 0 {
        return Err(ScoringError::ZeroK);
    }
    if sa.total_tokens == 0 {
        return Err(ScoringError::InsufficientText {
            outlet: sa.source.clone(),
            topic: sa.topic.clone(),
        });
    }
    let mut hits: Vec<(String, u64)> = sa
        .token_counts
        .iter()
        .filter(|(t, c)| **c > 0 && terms.contains(t.as_str()))
        .map(|(t, c)| (t.clone(), *c))
        .collect();
    hits.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    hits.truncate(k);
    Ok(hits)
}

pub const PROPORTIONS_HEADER: [&str; 5] = ["source", "topic", "feature_id", "proportion", "total_tokens"];

pub fn write_proportions_csv<W: Write>(w: W, records: &[ProportionRecord]) -> Result<(), ScoringError> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(PROPORTIONS_HEADER)?;
    for r in records {
        wtr.write_record([
            r.source.as_str(),
            r.topic.as_str(),
            &r.feature_id.to_string(),
            &r.proportion.to_string(),
            &r.total_tokens.to_string(),
        ])?;
    }
    wtr.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_proportions_csv<R: Read>(r: R) -> Result<Vec<ProportionRecord>, ScoringError> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut out = Vec::new();
    for (i, rec) in rdr.deserialize::<ProportionRecord>().enumerate() {
        let rec = rec?;
        if !(0.0..=1.0).contains(&rec.proportion) || rec.total_tokens == 0 {
            return Err(ScoringError::BadRecord {
                row: i + 2,
                reason: "proportion outside [0, 1] or zero tokens".into(),
            });
        }
        out.push(rec);
    }
    Ok(out)
}
