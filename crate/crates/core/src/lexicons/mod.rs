//! Loading of the five sentiment and bias lexicons into one normalized
//! term -> (category, strength) representation.
//!
//! Word lexicons (ANEW, General Inquirer, bias) are read from a normalized TSV of
//! `term<TAB>category<TAB>score` rows. Synset lexicons (MicroWNOp, SentiWordNet)
//! are read from `synset_id<TAB>lemma,lemma<TAB>pos<TAB>neg[<TAB>neutral]` rows
//! and flattened to lemmas by averaging over every synset a lemma belongs to.
//!
//! Scored lexicons (ANEW and the two synset lexicons) additionally get `strong`
//! entries: the polar terms whose distance from the lexicon's neutral midpoint
//! is in the top quartile.

pub mod convert;
mod synset;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

pub use synset::{flatten_synset_lexicon, parse_synset_lexicon, SynsetFormat};

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("i/o error reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("unknown lexicon format {0:?}")]
    UnknownFormat(String),
    #[error("unknown category {0:?}")]
    UnknownCategory(String),
    #[error("line {line}: duplicate entry for ({term}, {category})")]
    DuplicateEntry {
        line: usize,
        term: String,
        category: Category,
    },
    #[error("line {line}: non-numeric score {value:?}")]
    BadScore { line: usize, value: String },
    #[error("line {line}: score {value} outside [0, 1]")]
    ScoreOutOfRange { line: usize, value: f64 },
    #[error("line {line}: empty lemma list")]
    EmptyLemmas { line: usize },
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("lexicon {0} carries no scores")]
    NotScored(LexiconName),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LexiconName {
    Anew,
    Geninq,
    Micrownop,
    Sentiwordnet,
    Bias,
}

impl LexiconName {
    pub const ALL: [LexiconName; 5] = [
        LexiconName::Anew,
        LexiconName::Geninq,
        LexiconName::Micrownop,
        LexiconName::Sentiwordnet,
        LexiconName::Bias,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LexiconName::Anew => "anew",
            LexiconName::Geninq => "geninq",
            LexiconName::Micrownop => "micrownop",
            LexiconName::Sentiwordnet => "sentiwordnet",
            LexiconName::Bias => "bias",
        }
    }

    /// Categories this lexicon may carry.
    pub fn allowed_categories(self) -> &'static [Category] {
        use Category::*;
        match self {
            LexiconName::Anew => &[Positive, Negative, Neutral, Strong],
            LexiconName::Geninq => &[Positive, Negative, Strong],
            LexiconName::Micrownop | LexiconName::Sentiwordnet => &[Positive, Negative, Neutral, Strong],
            LexiconName::Bias => &[Bias],
        }
    }

    /// File name looked up inside a lexicon directory.
    pub fn file_name(self) -> String {
        format!("{}.tsv", self.as_str())
    }
}

impl fmt::Display for LexiconName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LexiconName {
    type Err = LexiconError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        LexiconName::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| LexiconError::UnknownFormat(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Category {
    Positive,
    Negative,
    Neutral,
    Bias,
    Strong,
}

impl Category {
    pub const ALL: [Category; 5] = [
        Category::Positive,
        Category::Negative,
        Category::Neutral,
        Category::Bias,
        Category::Strong,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Positive => "positive",
            Category::Negative => "negative",
            Category::Neutral => "neutral",
            Category::Bias => "bias",
            Category::Strong => "strong",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = LexiconError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Category::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| LexiconError::UnknownCategory(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LexiconEntry {
    pub term: String,
    pub category: Category,
    pub strength: f64,
}

/// A normalized lexicon. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Lexicon {
    pub name: LexiconName,
    /// Sorted by (term, category), unique on that pair.
    entries: Vec<LexiconEntry>,
    /// Signed polarity per term for scored lexicons (ANEW valence, or mean
    /// positive minus mean negative for synset lexicons).
    polarity: BTreeMap<String, f64>,
    pub neutral_midpoint: Option<f64>,
}

impl Lexicon {
    /// Builds an unscored lexicon; entries must already be unique on (term, category).
    fn unscored(name: LexiconName, mut entries: Vec<LexiconEntry>) -> Self {
        entries.sort_by(|a, b| (&a.term, a.category).cmp(&(&b.term, b.category)));
        Lexicon {
            name,
            entries,
            polarity: BTreeMap::new(),
            neutral_midpoint: None,
        }
    }

    /// Builds a scored lexicon and derives its `strong` entries.
    fn scored(
        name: LexiconName,
        entries: Vec<LexiconEntry>,
        polarity: BTreeMap<String, f64>,
        midpoint: f64,
    ) -> Self {
        let mut lex = Lexicon::unscored(name, entries);
        lex.polarity = polarity;
        lex.neutral_midpoint = Some(midpoint);
        let partition = strength_partition(&lex).expect("scored lexicon");
        let mut strong: Vec<LexiconEntry> = lex
            .entries
            .iter()
            .filter(|e| {
                matches!(e.category, Category::Positive | Category::Negative)
                    && partition.strong.contains(&e.term)
            })
            .map(|e| LexiconEntry {
                category: Category::Strong,
                ..e.clone()
            })
            .collect();
        lex.entries.append(&mut strong);
        lex.entries
            .sort_by(|a, b| (&a.term, a.category).cmp(&(&b.term, b.category)));
        lex
    }

    pub fn entries(&self) -> &[LexiconEntry] {
        &self.entries
    }

    pub fn is_scored(&self) -> bool {
        self.neutral_midpoint.is_some()
    }

    pub fn polarity(&self, term: &str) -> Option<f64> {
        self.polarity.get(term).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn terms(&self) -> BTreeSet<String> {
        self.entries.iter().map(|e| e.term.clone()).collect()
    }

    pub fn categories(&self) -> BTreeSet<Category> {
        self.entries.iter().map(|e| e.category).collect()
    }

    /// Exactly the terms carrying `category`.
    pub fn category_terms(&self, category: Category) -> BTreeSet<String> {
        self.entries
            .iter()
            .filter(|e| e.category == category)
            .map(|e| e.term.clone())
            .collect()
    }
}

/// Free-function form of [`Lexicon::category_terms`].
pub fn category_terms(lexicon: &Lexicon, category: Category) -> BTreeSet<String> {
    lexicon.category_terms(category)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StrengthPartition {
    pub strong: BTreeSet<String>,
    pub weak: BTreeSet<String>,
}

/// Nearest-rank 75th percentile threshold over ascending deviations.
pub fn upper_quartile_threshold(sorted_deviations: &[f64]) -> Option<f64> {
    if sorted_deviations.is_empty() {
        return None;
    }
    let n = sorted_deviations.len();
    let rank = (3 * n).div_ceil(4);
    Some(sorted_deviations[rank - 1])
}

/// Splits the polar (positive or negative) terms of a scored lexicon into strong
/// and weak by distance from the neutral midpoint. Terms at or above the
/// upper-quartile distance are strong.
pub fn strength_partition(lexicon: &Lexicon) -> Result<StrengthPartition, LexiconError> {
    let midpoint = lexicon
        .neutral_midpoint
        .ok_or(LexiconError::NotScored(lexicon.name))?;
    let polar: BTreeSet<&str> = lexicon
        .entries
        .iter()
        .filter(|e| matches!(e.category, Category::Positive | Category::Negative))
        .map(|e| e.term.as_str())
        .collect();
    let deviations: Vec<(&str, f64)> = polar
        .iter()
        .map(|t| (*t, (lexicon.polarity[*t] - midpoint).abs()))
        .collect();
    let mut sorted: Vec<f64> = deviations.iter().map(|d| d.1).collect();
    sorted.sort_by(f64::total_cmp);
    let mut out = StrengthPartition::default();
    if let Some(threshold) = upper_quartile_threshold(&sorted) {
        for (term, dev) in deviations {
            if dev >= threshold {
                out.strong.insert(term.to_string());
            } else {
                out.weak.insert(term.to_string());
            }
        }
    }
    Ok(out)
}

/// Formats of the normalized word-lexicon TSV.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WordFormat {
    Anew,
    Geninq,
    Bias,
}

impl FromStr for WordFormat {
    type Err = LexiconError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "anew" => Ok(WordFormat::Anew),
            "geninq" => Ok(WordFormat::Geninq),
            "bias" => Ok(WordFormat::Bias),
            other => Err(LexiconError::UnknownFormat(other.to_string())),
        }
    }
}

fn parse_score(line: usize, value: &str) -> Result<f64, LexiconError> {
    match value.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(LexiconError::BadScore {
            line,
            value: value.to_string(),
        }),
    }
}

fn clean_term(line: usize, raw: &str) -> Result<String, LexiconError> {
    let term = raw.trim().to_lowercase();
    if term.is_empty() || term.chars().any(char::is_whitespace) {
        return Err(LexiconError::Malformed {
            line,
            reason: format!("bad term {raw:?}"),
        });
    }
    Ok(term)
}

/// Non-empty, non-comment lines with 1-based line numbers.
pub(crate) fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
}

fn geninq_category(tag: &str) -> Result<Category, LexiconError> {
    match tag {
        "Positiv" | "positive" => Ok(Category::Positive),
        "Negativ" | "negative" => Ok(Category::Negative),
        "Strong" | "strong" => Ok(Category::Strong),
        other => Err(LexiconError::UnknownCategory(other.to_string())),
    }
}

/// Parses a normalized word-lexicon TSV.
///
/// * ANEW rows are `term<TAB>valence<TAB>rating` (or `term<TAB>rating`); a term is
///   positive above the mean rating of the file, negative below it, neutral at it.
/// * General Inquirer rows are `term<TAB>Positiv|Negativ|Strong[<TAB>score]`.
/// * Bias rows are `term[<TAB>bias[<TAB>score]]`.
pub fn parse_word_lexicon(text: &str, format: WordFormat) -> Result<Lexicon, LexiconError> {
    let mut seen: BTreeSet<(String, Category)> = BTreeSet::new();
    let mut check_dup = |line: usize, term: &str, category: Category| {
        if seen.insert((term.to_string(), category)) {
            Ok(())
        } else {
            Err(LexiconError::DuplicateEntry {
                line,
                term: term.to_string(),
                category,
            })
        }
    };

    match format {
        WordFormat::Anew => {
            let mut ratings: Vec<(String, f64)> = Vec::new();
            let mut terms = BTreeSet::new();
            for (line, row) in data_lines(text) {
                let cols: Vec<&str> = row.split('\t').collect();
                let (term, score) = match cols.as_slice() {
                    [t, s] => (*t, *s),
                    [t, "valence", s] => (*t, *s),
                    [_, tag, _] => return Err(LexiconError::UnknownCategory(tag.to_string())),
                    _ => {
                        return Err(LexiconError::Malformed {
                            line,
                            reason: "expected term, [valence,] rating".into(),
                        })
                    }
                };
                let term = clean_term(line, term)?;
                let score = parse_score(line, score)?;
                if !terms.insert(term.clone()) {
                    return Err(LexiconError::DuplicateEntry {
                        line,
                        term,
                        category: Category::Neutral,
                    });
                }
                ratings.push((term, score));
            }
            Ok(anew_from_ratings(ratings))
        }
        WordFormat::Geninq => {
            let mut entries = Vec::new();
            for (line, row) in data_lines(text) {
                let cols: Vec<&str> = row.split('\t').collect();
                let (term, tag) = match cols.as_slice() {
                    [t, c] | [t, c, _] => (*t, *c),
                    _ => {
                        return Err(LexiconError::Malformed {
                            line,
                            reason: "expected term, category[, score]".into(),
                        })
                    }
                };
                if let [_, _, s] = cols.as_slice() {
                    parse_score(line, s)?;
                }
                let term = clean_term(line, term)?;
                let category = geninq_category(tag.trim())?;
                check_dup(line, &term, category)?;
                entries.push(LexiconEntry {
                    term,
                    category,
                    strength: 1.0,
                });
            }
            Ok(Lexicon::unscored(LexiconName::Geninq, entries))
        }
        WordFormat::Bias => {
            let mut entries = Vec::new();
            for (line, row) in data_lines(text) {
                let cols: Vec<&str> = row.split('\t').collect();
                match cols.as_slice() {
                    [_] | [_, "bias"] => {}
                    [_, "bias", s] => {
                        parse_score(line, s)?;
                    }
                    [_, tag] | [_, tag, _] => {
                        return Err(LexiconError::UnknownCategory(tag.to_string()))
                    }
                    _ => {
                        return Err(LexiconError::Malformed {
                            line,
                            reason: "expected term[, bias[, score]]".into(),
                        })
                    }
                }
                let term = clean_term(line, cols[0])?;
                check_dup(line, &term, Category::Bias)?;
                entries.push(LexiconEntry {
                    term,
                    category: Category::Bias,
                    strength: 1.0,
                });
            }
            Ok(Lexicon::unscored(LexiconName::Bias, entries))
        }
    }
}

fn anew_from_ratings(ratings: Vec<(String, f64)>) -> Lexicon {
    let mean = if ratings.is_empty() {
        0.0
    } else {
        // Summation order fixed by term so the mean does not depend on row order.
        let mut sorted: Vec<f64> = {
            let mut r = ratings.clone();
            r.sort_by(|a, b| a.0.cmp(&b.0));
            r.into_iter().map(|(_, v)| v).collect()
        };
        let n = sorted.len() as f64;
        sorted.iter_mut().map(|v| *v / n).sum::<f64>()
    };
    let max_dev = ratings
        .iter()
        .map(|(_, v)| (v - mean).abs())
        .fold(0.0, f64::max);
    let mut entries = Vec::new();
    let mut polarity = BTreeMap::new();
    for (term, v) in ratings {
        let category = if v > mean {
            Category::Positive
        } else if v < mean {
            Category::Negative
        } else {
            Category::Neutral
        };
        let strength = if max_dev > 0.0 { (v - mean).abs() / max_dev } else { 0.0 };
        polarity.insert(term.clone(), v);
        entries.push(LexiconEntry {
            term,
            category,
            strength,
        });
    }
    Lexicon::scored(LexiconName::Anew, entries, polarity, mean)
}

fn read(path: &Path) -> Result<String, LexiconError> {
    std::fs::read_to_string(path).map_err(|source| LexiconError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_word_lexicon(path: &Path, format: WordFormat) -> Result<Lexicon, LexiconError> {
    parse_word_lexicon(&read(path)?, format)
}

/// Polarity margins used when flattening synset lexicons.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Margins {
    pub micrownop: f64,
    pub sentiwordnet: f64,
}

impl Default for Margins {
    fn default() -> Self {
        Margins {
            micrownop: SynsetFormat::Micrownop.default_margin(),
            sentiwordnet: SynsetFormat::Sentiwordnet.default_margin(),
        }
    }
}

/// Loads `<name>.tsv` for each lexicon found in `dir`. Missing files are
/// reported by name rather than failing.
pub fn load_lexicon_dir(
    dir: &Path,
    margins: Margins,
) -> Result<(BTreeMap<LexiconName, Lexicon>, Vec<LexiconName>), LexiconError> {
    let mut loaded = BTreeMap::new();
    let mut missing = Vec::new();
    for name in LexiconName::ALL {
        let path = dir.join(name.file_name());
        if !path.exists() {
            missing.push(name);
            continue;
        }
        let text = read(&path)?;
        let lex = match name {
            LexiconName::Anew => parse_word_lexicon(&text, WordFormat::Anew)?,
            LexiconName::Geninq => parse_word_lexicon(&text, WordFormat::Geninq)?,
            LexiconName::Bias => parse_word_lexicon(&text, WordFormat::Bias)?,
            LexiconName::Micrownop => {
                parse_synset_lexicon(&text, SynsetFormat::Micrownop, margins.micrownop)?
            }
            LexiconName::Sentiwordnet => {
                parse_synset_lexicon(&text, SynsetFormat::Sentiwordnet, margins.sentiwordnet)?
            }
        };
        loaded.insert(name, lex);
    }
    Ok((loaded, missing))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn entry(lex: &Lexicon, term: &str, cat: Category) -> Option<f64> {
        lex.entries()
            .iter()
            .find(|e| e.term == term && e.category == cat)
            .map(|e| e.strength)
    }

    #[test]
    fn anew_polarity_from_mean() {
        let lex = parse_word_lexicon("love\tvalence\t8.7\nfuneral\tvalence\t1.4\npaper\t5.2\n", WordFormat::Anew).unwrap();
        let mean = lex.neutral_midpoint.unwrap();
        assert!((mean - 5.1).abs() < 1e-12);
        assert_eq!(lex.category_terms(Category::Positive), BTreeSet::from(["love".into(), "paper".into()]));
        assert_eq!(lex.category_terms(Category::Negative), BTreeSet::from(["funeral".into()]));
    }

    #[test]
    fn geninq_direct_mapping() {
        let lex = parse_word_lexicon("abandon\tNegativ\nABLE\tPositiv\t1\nable\tStrong\n", WordFormat::Geninq).unwrap();
        assert_eq!(entry(&lex, "abandon", Category::Negative), Some(1.0));
        assert_eq!(lex.category_terms(Category::Strong), BTreeSet::from(["able".into()]));
        assert!(matches!(strength_partition(&lex), Err(LexiconError::NotScored(LexiconName::Geninq))));
    }

    #[test]
    fn bias_lexicon_of_654_lemmas() {
        let text: String = (0..654).map(|i| format!("lemma{i}\n")).collect();
        let lex = parse_word_lexicon(&text, WordFormat::Bias).unwrap();
        assert_eq!(lex.len(), 654);
        assert_eq!(lex.categories(), BTreeSet::from([Category::Bias]));
        assert!(lex.category_terms(Category::Positive).is_empty());
        assert!(lex.entries().iter().all(|e| e.strength == 1.0));
    }

    #[test]
    fn word_lexicon_errors() {
        assert!(matches!("vader".parse::<WordFormat>(), Err(LexiconError::UnknownFormat(_))));
        assert!(matches!(
            parse_word_lexicon("a\tNegativ\nA\tNegativ\n", WordFormat::Geninq),
            Err(LexiconError::DuplicateEntry { line: 2, .. })
        ));
        assert!(matches!(
            parse_word_lexicon("love\tvalence\thigh\n", WordFormat::Anew),
            Err(LexiconError::BadScore { line: 1, .. })
        ));
        assert!(matches!(
            parse_word_lexicon("love\t5\nlove\t6\n", WordFormat::Anew),
            Err(LexiconError::DuplicateEntry { .. })
        ));
        assert!(matches!(
            parse_word_lexicon("abandon\tHostile\n", WordFormat::Geninq),
            Err(LexiconError::UnknownCategory(_))
        ));
    }

    #[test]
    fn percentile_rule_on_four_deviations() {
        // Deviations 1..4 around midpoint 5: nearest rank ceil(0.75*4) = 3 -> value 3.
        let sorted = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(upper_quartile_threshold(&sorted), Some(3.0));
        let brute: Vec<f64> = sorted.iter().copied().filter(|d| {
            let at_or_below = sorted.iter().filter(|x| *x <= d).count() as f64;
            at_or_below / sorted.len() as f64 >= 0.75
        }).collect();
        assert_eq!(brute, vec![3.0, 4.0]);

        let lex = parse_word_lexicon("a\t6\nb\t7\nc\t8\nd\t9\ne\t4\nf\t3\ng\t2\nh\t1\n", WordFormat::Anew).unwrap();
        let p = strength_partition(&lex).unwrap();
        assert_eq!(p.strong, BTreeSet::from(["c".into(), "d".into(), "g".into(), "h".into()]));
        assert_eq!(lex.category_terms(Category::Strong), p.strong);
    }

    #[test]
    fn equidistant_terms_are_all_strong() {
        let lex = parse_word_lexicon("a\t1\nb\t9\nc\t1\nd\t9\n", WordFormat::Anew).unwrap();
        let p = strength_partition(&lex).unwrap();
        assert_eq!(p.strong.len(), 4);
        assert!(p.weak.is_empty());
    }

    #[test]
    fn union_of_categories_is_all_terms() {
        let lex = parse_word_lexicon("a\t6\nb\t7\nc\t5.5\nd\t1\n", WordFormat::Anew).unwrap();
        let union: BTreeSet<String> = lex.categories().into_iter().flat_map(|c| lex.category_terms(c)).collect();
        assert_eq!(union, lex.terms());
        for c in lex.categories() {
            assert!(LexiconName::Anew.allowed_categories().contains(&c));
        }
    }

    proptest! {
        #[test]
        fn anew_rule_and_partition(vals in proptest::collection::btree_map("[a-z]{2,6}", 1.0f64..9.0, 1..40)) {
            let text: String = vals.iter().map(|(t, v)| format!("{t}\tvalence\t{v}\n")).collect();
            let lex = parse_word_lexicon(&text, WordFormat::Anew).unwrap();
            let mean = lex.neutral_midpoint.unwrap();
            for (t, v) in &vals {
                if lex.category_terms(Category::Positive).contains(t) { prop_assert!(*v > mean); }
                if lex.category_terms(Category::Negative).contains(t) { prop_assert!(*v < mean); }
            }
            let p = strength_partition(&lex).unwrap();
            let polar: BTreeSet<String> = lex.category_terms(Category::Positive)
                .union(&lex.category_terms(Category::Negative)).cloned().collect();
            prop_assert!(p.strong.is_disjoint(&p.weak));
            let union: BTreeSet<String> = p.strong.union(&p.weak).cloned().collect();
            prop_assert_eq!(union, polar);
        }
    }
}
