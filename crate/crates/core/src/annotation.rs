//! Topic-word classes, crowdsourced label aggregation and the bundled
//! reference word list.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of trusted judgments used per word.
pub const JUDGMENTS_PER_WORD: usize = 7;
/// A class is kept only when its share of the judgments is strictly above this.
pub const MAJORITY_THRESHOLD: f64 = 0.6;
pub const DEFAULT_MIN_AGREEMENT: f64 = 0.7;

const REFERENCE_WORDS: &str = include_str!("../data/reference_words.tsv");
const REFERENCE_COUNTS: [(Klass, usize); 3] = [(Klass::C3, 145), (Klass::C2, 45), (Klass::C0, 272)];

#[derive(Debug, Error)]
pub enum AnnotationError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("reference list has {found} {klass} terms, expected {expected}")]
    CountMismatch {
        klass: Klass,
        expected: usize,
        found: usize,
    },
}

/// Controversy class on the four-point scale, C3 being strongly controversial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Klass {
    C0,
    C1,
    C2,
    C3,
    #[serde(rename = "unlabeled")]
    Unlabeled,
}

impl Klass {
    pub fn as_str(self) -> &'static str {
        match self {
            Klass::C0 => "C0",
            Klass::C1 => "C1",
            Klass::C2 => "C2",
            Klass::C3 => "C3",
            Klass::Unlabeled => "unlabeled",
        }
    }

    /// C2 and C3 count as controversial when checking gold answers.
    pub fn is_controversial(self) -> bool {
        matches!(self, Klass::C2 | Klass::C3)
    }

    /// Training target: C3 -> 1, C0 -> 0, anything else is not trained on.
    pub fn training_label(self) -> Option<bool> {
        match self {
            Klass::C3 => Some(true),
            Klass::C0 => Some(false),
            _ => None,
        }
    }
}

impl fmt::Display for Klass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Klass {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "C0" => Ok(Klass::C0),
            "C1" => Ok(Klass::C1),
            "C2" => Ok(Klass::C2),
            "C3" => Ok(Klass::C3),
            "unlabeled" | "" => Ok(Klass::Unlabeled),
            other => Err(format!("unknown class {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopicWord {
    pub term: String,
    pub klass: Klass,
    /// Share of annotators behind the class. Unknown for lists published
    /// without it.
    pub user_score: Option<f64>,
}

/// Parses `term<TAB>klass<TAB>user_score` rows; `#` lines are comments.
pub fn parse_words(text: &str) -> Result<Vec<TopicWord>, AnnotationError> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let row = raw.trim_end_matches('\r');
        if row.trim().is_empty() || row.starts_with('#') {
            continue;
        }
        let bad = |reason: String| AnnotationError::Malformed { line, reason };
        let cols: Vec<&str> = row.split('\t').collect();
        if !(2..=3).contains(&cols.len()) {
            return Err(bad(format!("expected 2 or 3 columns, found {}", cols.len())));
        }
        let term = cols[0].trim().to_lowercase();
        if term.is_empty() || term.chars().any(char::is_whitespace) {
            return Err(bad(format!("bad term {:?}", cols[0])));
        }
        let klass: Klass = cols[1].trim().parse().map_err(bad)?;
        let user_score = match cols.get(2).map(|s| s.trim()).filter(|s| !s.is_empty()) {
            None => None,
            Some(s) => match s.parse::<f64>() {
                Ok(v) if (0.0..=1.0).contains(&v) => Some(v),
                _ => return Err(bad(format!("bad user score {s:?}"))),
            },
        };
        if klass == Klass::Unlabeled && user_score.is_some() {
            return Err(bad("unlabeled term with a user score".into()));
        }
        if !seen.insert(term.clone()) {
            return Err(bad(format!("repeated term {term:?}")));
        }
        out.push(TopicWord {
            term,
            klass,
            user_score,
        });
    }
    Ok(out)
}

pub fn load_words(path: &Path) -> Result<Vec<TopicWord>, AnnotationError> {
    parse_words(&std::fs::read_to_string(path)?)
}

pub fn write_words<W: Write>(mut w: W, words: &[TopicWord]) -> Result<(), AnnotationError> {
    for word in words {
        let score = word.user_score.map(|s| s.to_string()).unwrap_or_default();
        writeln!(w, "{}\t{}\t{}", word.term, word.klass, score)?;
    }
    Ok(())
}

/// The bundled 462-term list, with its class counts checked.
pub fn load_reference_words() -> Result<Vec<TopicWord>, AnnotationError> {
    let words = parse_words(REFERENCE_WORDS)?;
    check_reference_counts(&words)?;
    Ok(words)
}

pub fn check_reference_counts(words: &[TopicWord]) -> Result<(), AnnotationError> {
    for (klass, expected) in REFERENCE_COUNTS {
        let found = words.iter().filter(|w| w.klass == klass).count();
        if found != expected {
            return Err(AnnotationError::CountMismatch {
                klass,
                expected,
                found,
            });
        }
    }
    let other = words
        .iter()
        .filter(|w| !REFERENCE_COUNTS.iter().any(|(k, _)| *k == w.klass))
        .count();
    if other > 0 {
        return Err(AnnotationError::CountMismatch {
            klass: Klass::Unlabeled,
            expected: 0,
            found: other,
        });
    }
    Ok(())
}

/// Term -> class lookup.
pub fn label_map(words: &[TopicWord]) -> BTreeMap<String, Klass> {
    words.iter().map(|w| (w.term.clone(), w.klass)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawLabel {
    pub annotator_id: String,
    pub term: String,
    pub label: Klass,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldItem {
    pub term: String,
    pub controversial: bool,
}

pub fn read_raw_labels<R: Read>(r: R) -> Result<Vec<RawLabel>, AnnotationError> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut out = Vec::new();
    for (i, rec) in rdr.deserialize::<RawLabel>().enumerate() {
        let mut rec = rec?;
        if rec.label == Klass::Unlabeled {
            return Err(AnnotationError::Malformed {
                line: i + 2,
                reason: "label must be one of C0..C3".into(),
            });
        }
        rec.term = rec.term.trim().to_lowercase();
        out.push(rec);
    }
    Ok(out)
}

pub fn read_gold<R: Read>(r: R) -> Result<Vec<GoldItem>, AnnotationError> {
    #[derive(Deserialize)]
    struct Row {
        term: String,
        binary: String,
    }
    let mut rdr = csv::Reader::from_reader(r);
    let mut out = Vec::new();
    for (i, rec) in rdr.deserialize::<Row>().enumerate() {
        let rec = rec?;
        let controversial = match rec.binary.trim() {
            "controversial" => true,
            "non-controversial" => false,
            other => {
                return Err(AnnotationError::Malformed {
                    line: i + 2,
                    reason: format!("unknown gold value {other:?}"),
                })
            }
        };
        out.push(GoldItem {
            term: rec.term.trim().to_lowercase(),
            controversial,
        });
    }
    Ok(out)
}

/// One label per (annotator, term). Conflicting repeats resolve to the lowest
/// class so the result does not depend on row order.
fn distinct_labels(raw: &[RawLabel]) -> (BTreeMap<(&str, &str), Klass>, usize) {
    let mut out: BTreeMap<(&str, &str), Klass> = BTreeMap::new();
    let mut conflicts = 0;
    for r in raw {
        let key = (r.annotator_id.as_str(), r.term.as_str());
        match out.get_mut(&key) {
            None => {
                out.insert(key, r.label);
            }
            Some(existing) if *existing != r.label => {
                conflicts += 1;
                *existing = (*existing).min(r.label);
            }
            Some(_) => {}
        }
    }
    (out, conflicts)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GateOutcome {
    pub trusted: BTreeSet<String>,
    /// (agreeing gold answers, gold answers) per annotator with gold exposure.
    pub agreement: BTreeMap<String, (usize, usize)>,
    pub warnings: Vec<String>,
}

/// Trusts annotators whose binary agreement with the gold answers is at least
/// `min_agreement`. Annotators who saw no gold item are excluded.
pub fn gate_annotators(raw: &[RawLabel], gold: &[GoldItem], min_agreement: f64) -> GateOutcome {
    let gold_map: BTreeMap<&str, bool> = gold.iter().map(|g| (g.term.as_str(), g.controversial)).collect();
    let (labels, conflicts) = distinct_labels(raw);
    let mut out = GateOutcome::default();
    if conflicts > 0 {
        out.warnings.push(format!("{conflicts} conflicting repeated labels resolved to the lower class"));
    }
    let annotators: BTreeSet<&str> = labels.keys().map(|k| k.0).collect();
    for (&(annotator, term), label) in &labels {
        if let Some(&expected) = gold_map.get(term) {
            let entry = out.agreement.entry(annotator.to_string()).or_insert((0, 0));
            entry.1 += 1;
            if label.is_controversial() == expected {
                entry.0 += 1;
            }
        }
    }
    for annotator in annotators {
        match out.agreement.get(annotator) {
            None => out
                .warnings
                .push(format!("annotator {annotator:?} labeled no gold items; excluded")),
            Some(&(agree, total)) => {
                if agree as f64 / total as f64 >= min_agreement {
                    out.trusted.insert(annotator.to_string());
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregatedWord {
    pub term: String,
    pub klass: Klass,
    /// Share of the used judgments that chose `klass`.
    pub confidence: f64,
    pub n_labels: usize,
    /// C1 words are reported but left out of every analysis.
    pub excluded: bool,
}

impl AggregatedWord {
    pub fn to_topic_word(&self) -> TopicWord {
        TopicWord {
            term: self.term.clone(),
            klass: self.klass,
            user_score: Some(self.confidence),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Aggregation {
    pub words: Vec<AggregatedWord>,
    pub warnings: Vec<String>,
}

/// Majority vote over the first seven trusted judgments (by annotator id) of
/// each word. A word is emitted only when its modal class holds strictly more
/// than 60% of them.
pub fn aggregate(raw: &[RawLabel], trusted: &BTreeSet<String>) -> Aggregation {
    let (labels, _) = distinct_labels(raw);
    let mut per_term: BTreeMap<&str, Vec<Klass>> = BTreeMap::new();
    // BTreeMap keys are (annotator, term): iterating yields annotators in order.
    for (&(annotator, term), &label) in &labels {
        if trusted.contains(annotator) {
            per_term.entry(term).or_default().push(label);
        }
    }
    let mut out = Aggregation::default();
    for (term, mut votes) in per_term {
        if votes.len() < JUDGMENTS_PER_WORD {
            out.warnings.push(format!(
                "{term:?}: only {} trusted labels, need {JUDGMENTS_PER_WORD}",
                votes.len()
            ));
            continue;
        }
        votes.truncate(JUDGMENTS_PER_WORD);
        let mut counts: BTreeMap<Klass, usize> = BTreeMap::new();
        for v in &votes {
            *counts.entry(*v).or_insert(0) += 1;
        }
        let (&klass, &count) = counts.iter().max_by_key(|(_, c)| **c).expect("non-empty");
        let confidence = count as f64 / votes.len() as f64;
        if confidence > MAJORITY_THRESHOLD {
            out.words.push(AggregatedWord {
                term: term.to_string(),
                klass,
                confidence,
                n_labels: votes.len(),
                excluded: klass == Klass::C1,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn labels(term: &str, classes: &[Klass]) -> Vec<RawLabel> {
        classes
            .iter()
            .enumerate()
            .map(|(i, k)| RawLabel {
                annotator_id: format!("a{i:02}"),
                term: term.into(),
                label: *k,
            })
            .collect()
    }

    fn everyone(raw: &[RawLabel]) -> BTreeSet<String> {
        raw.iter().map(|r| r.annotator_id.clone()).collect()
    }

    #[test]
    fn reference_list() {
        let words = load_reference_words().unwrap();
        assert_eq!(words.len(), 462);
        let map = label_map(&words);
        assert_eq!(map["gun"], Klass::C3);
        assert_eq!(map["february"], Klass::C2);
        assert_eq!(map["weekend"], Klass::C0);
        assert!(words.iter().all(|w| w.user_score.is_none()));
    }

    #[test]
    fn count_mismatch_detected() {
        let mut words = load_reference_words().unwrap();
        words.pop();
        assert!(matches!(check_reference_counts(&words), Err(AnnotationError::CountMismatch { .. })));
    }

    #[test]
    fn words_tsv() {
        let words = parse_words("# c\ngun\tC3\t0.857\nday\tC0\t\nzzz\tunlabeled\n").unwrap();
        assert_eq!(words[0].user_score, Some(0.857));
        assert_eq!(words[1].user_score, None);
        assert_eq!(words[2].klass, Klass::Unlabeled);
        let mut buf = Vec::new();
        write_words(&mut buf, &words).unwrap();
        assert_eq!(parse_words(std::str::from_utf8(&buf).unwrap()).unwrap(), words);

        assert!(parse_words("gun\tC5\t0.5\n").is_err());
        assert!(parse_words("gun\tC3\t1.5\n").is_err());
        assert!(parse_words("gun\tunlabeled\t0.5\n").is_err());
        assert!(parse_words("gun\tC3\ngun\tC0\n").is_err());
        assert!(parse_words("gun control\tC3\n").is_err());
    }

    #[test]
    fn majority_rule() {
        use Klass::*;
        let five_two = labels("gun", &[C3, C3, C0, C3, C3, C0, C3]);
        let agg = aggregate(&five_two, &everyone(&five_two));
        assert_eq!(agg.words.len(), 1);
        assert_eq!(agg.words[0].klass, C3);
        assert_eq!(agg.words[0].confidence, 5.0 / 7.0);

        let four_three = labels("gun", &[C3, C3, C0, C3, C3, C0, C0]);
        assert!(aggregate(&four_three, &everyone(&four_three)).words.is_empty());

        let three_three_one = labels("gun", &[C3, C3, C0, C3, C2, C0, C0]);
        assert!(aggregate(&three_three_one, &everyone(&three_three_one)).words.is_empty());
    }

    #[test]
    fn too_few_labels_and_c1() {
        use Klass::*;
        let six = labels("gun", &[C3; 6]);
        let agg = aggregate(&six, &everyone(&six));
        assert!(agg.words.is_empty());
        assert_eq!(agg.warnings.len(), 1);

        let c1 = labels("thing", &[C1; 7]);
        let agg = aggregate(&c1, &everyone(&c1));
        assert!(agg.words[0].excluded);
    }

    #[test]
    fn only_first_seven_trusted_are_used() {
        use Klass::*;
        // Annotators a00..a06 say C3 five times; a07..a09 would tip it.
        let raw = labels("gun", &[C3, C3, C3, C3, C3, C0, C0, C0, C0, C0]);
        let agg = aggregate(&raw, &everyone(&raw));
        assert_eq!(agg.words[0].n_labels, 7);
        assert_eq!(agg.words[0].klass, C3);

        let mut trusted = everyone(&raw);
        trusted.remove("a00");
        trusted.remove("a01");
        // Now a02..a08: three C3, four C0 -> no majority.
        assert!(aggregate(&raw, &trusted).words.is_empty());
    }

    #[test]
    fn gating() {
        use Klass::*;
        let gold: Vec<GoldItem> = (0..10)
            .map(|i| GoldItem { term: format!("g{i}"), controversial: i % 2 == 0 })
            .collect();
        let answer = |who: &str, correct: usize| -> Vec<RawLabel> {
            (0..10)
                .map(|i| {
                    let truth = i % 2 == 0;
                    let says = if i < correct { truth } else { !truth };
                    RawLabel {
                        annotator_id: who.into(),
                        term: format!("g{i}"),
                        label: if says { if i % 4 == 0 { C3 } else { C2 } } else if i % 3 == 0 { C1 } else { C0 },
                    }
                })
                .collect()
        };
        let mut raw = answer("good", 10);
        raw.extend(answer("bad", 3));
        raw.push(RawLabel { annotator_id: "ghost".into(), term: "gun".into(), label: C3 });
        let out = gate_annotators(&raw, &gold, 0.7);
        assert_eq!(out.trusted, BTreeSet::from(["good".to_string()]));
        assert_eq!(out.agreement["good"], (10, 10));
        assert_eq!(out.agreement["bad"], (3, 10));
        assert_eq!(out.warnings.len(), 1);

        let everyone_exposed = gate_annotators(&raw, &gold, 0.0);
        assert_eq!(everyone_exposed.trusted.len(), 2);
    }

    #[test]
    fn csv_inputs() {
        let raw = read_raw_labels("annotator_id,term,label\nw1,Gun,C3\nw2,gun,C0\n".as_bytes()).unwrap();
        assert_eq!(raw[0].term, "gun");
        assert!(read_raw_labels("annotator_id,term,label\nw1,gun,C9\n".as_bytes()).is_err());
        let gold = read_gold("term,binary\nwar,controversial\nday,non-controversial\n".as_bytes()).unwrap();
        assert_eq!(gold[1], GoldItem { term: "day".into(), controversial: false });
        assert!(read_gold("term,binary\nwar,maybe\n".as_bytes()).is_err());
    }

    fn klass() -> impl Strategy<Value = Klass> {
        prop_oneof![Just(Klass::C0), Just(Klass::C1), Just(Klass::C2), Just(Klass::C3)]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn aggregation_invariants(
            votes in proptest::collection::vec((0u8..12, 0u8..5, klass()), 0..120),
            rotate in 0usize..120,
        ) {
            let raw: Vec<RawLabel> = votes.iter().map(|(a, t, k)| RawLabel {
                annotator_id: format!("a{a:02}"), term: format!("t{t}"), label: *k,
            }).collect();
            let trusted = everyone(&raw);
            let agg = aggregate(&raw, &trusted);
            for w in &agg.words {
                prop_assert!(w.confidence > MAJORITY_THRESHOLD);
                prop_assert!(w.n_labels >= JUDGMENTS_PER_WORD);
                prop_assert_eq!(w.excluded, w.klass == Klass::C1);
            }
            let mut reordered = raw.clone();
            reordered.reverse();
            if !reordered.is_empty() {
                let n = reordered.len();
                reordered.rotate_left(rotate % n);
            }
            prop_assert_eq!(aggregate(&reordered, &trusted), agg);
        }

        #[test]
        fn majority_rule_on_seven(counts in proptest::collection::vec(0usize..=7, 4)) {
            // Distribute exactly seven votes over the four classes.
            let mut remaining = 7usize;
            let mut classes = Vec::new();
            for (k, c) in [Klass::C0, Klass::C1, Klass::C2, Klass::C3].into_iter().zip(&counts) {
                let take = (*c).min(remaining);
                classes.extend(std::iter::repeat_n(k, take));
                remaining -= take;
            }
            classes.extend(std::iter::repeat_n(Klass::C3, remaining));
            let raw = labels("w", &classes);
            let agg = aggregate(&raw, &everyone(&raw));
            let top = [Klass::C0, Klass::C1, Klass::C2, Klass::C3]
                .into_iter()
                .map(|k| (classes.iter().filter(|c| **c == k).count(), k))
                .max()
                .unwrap();
            if top.0 >= 5 {
                prop_assert_eq!(agg.words.len(), 1);
                prop_assert_eq!(agg.words[0].klass, top.1);
            } else {
                prop_assert!(agg.words.is_empty());
            }
        }
    }
}
