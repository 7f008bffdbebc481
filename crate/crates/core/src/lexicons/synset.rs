use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::str::FromStr;

use super::{clean_term, data_lines, parse_score, read, Category, Lexicon, LexiconEntry, LexiconError, LexiconName};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynsetFormat {
    Micrownop,
    Sentiwordnet,
}

impl SynsetFormat {
    /// Minimum |mean_pos - mean_neg| for a lemma to count as polar.
    pub fn default_margin(self) -> f64 {
        match self {
            SynsetFormat::Micrownop => 0.0,
            SynsetFormat::Sentiwordnet => 0.25,
        }
    }

    pub fn lexicon_name(self) -> LexiconName {
        match self {
            SynsetFormat::Micrownop => LexiconName::Micrownop,
            SynsetFormat::Sentiwordnet => LexiconName::Sentiwordnet,
        }
    }
}

impl FromStr for SynsetFormat {
    type Err = LexiconError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "micrownop" => Ok(SynsetFormat::Micrownop),
            "sentiwordnet" => Ok(SynsetFormat::Sentiwordnet),
            other => Err(LexiconError::UnknownFormat(other.to_string())),
        }
    }
}

fn unit_score(line: usize, raw: &str) -> Result<f64, LexiconError> {
    let v = parse_score(line, raw)?;
    if !(0.0..=1.0).contains(&v) {
        return Err(LexiconError::ScoreOutOfRange { line, value: v });
    }
    Ok(v)
}

fn mean_sorted(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len() as f64;
    values.iter().sum::<f64>() / n
}

/// Parses synset rows and flattens them to per-lemma entries.
///
/// Each lemma's positive, negative and neutral strengths are the uniform means
/// over all synsets listing it. When a row has no neutral column the neutral
/// score is `1 - pos - neg` (floored at zero).
pub fn parse_synset_lexicon(
    text: &str,
    format: SynsetFormat,
    polarity_margin: f64,
) -> Result<Lexicon, LexiconError> {
    let mut per_lemma: BTreeMap<String, Vec<(f64, f64, f64)>> = BTreeMap::new();
    let mut synset_ids = BTreeSet::new();
    for (line, row) in data_lines(text) {
        let cols: Vec<&str> = row.split('\t').collect();
        if !(cols.len() == 4 || cols.len() == 5) {
            return Err(LexiconError::Malformed {
                line,
                reason: format!("expected 4 or 5 tab-separated columns, found {}", cols.len()),
            });
        }
        if !synset_ids.insert(cols[0].trim().to_string()) {
            return Err(LexiconError::Malformed {
                line,
                reason: format!("repeated synset id {:?}", cols[0]),
            });
        }
        let pos = unit_score(line, cols[2])?;
        let neg = unit_score(line, cols[3])?;
        let neu = match cols.get(4) {
            Some(raw) => unit_score(line, raw)?,
            None => (1.0 - pos - neg).max(0.0),
        };
        let lemmas: BTreeSet<String> = cols[1]
            .split(',')
            .filter(|l| !l.trim().is_empty())
            .map(|l| clean_term(line, l))
            .collect::<Result<_, _>>()?;
        if lemmas.is_empty() {
            return Err(LexiconError::EmptyLemmas { line });
        }
        for lemma in lemmas {
            per_lemma.entry(lemma).or_default().push((pos, neg, neu));
        }
    }

    let mut entries = Vec::new();
    let mut polarity = BTreeMap::new();
    for (term, scores) in per_lemma {
        let mean_pos = mean_sorted(scores.iter().map(|s| s.0).collect());
        let mean_neg = mean_sorted(scores.iter().map(|s| s.1).collect());
        let mean_neu = mean_sorted(scores.iter().map(|s| s.2).collect());
        let diff = mean_pos - mean_neg;
        let (category, strength) = if diff > polarity_margin {
            (Category::Positive, mean_pos)
        } else if -diff > polarity_margin {
            (Category::Negative, mean_neg)
        } else {
            (Category::Neutral, mean_neu)
        };
        polarity.insert(term.clone(), diff);
        entries.push(LexiconEntry {
            term,
            category,
            strength,
        });
    }
    Ok(Lexicon::scored(format.lexicon_name(), entries, polarity, 0.0))
}

pub fn flatten_synset_lexicon(
    path: &Path,
    format: SynsetFormat,
    polarity_margin: f64,
) -> Result<Lexicon, LexiconError> {
    parse_synset_lexicon(&read(path)?, format, polarity_margin)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn find(lex: &Lexicon, term: &str) -> Vec<(Category, f64)> {
        lex.entries()
            .iter()
            .filter(|e| e.term == term)
            .map(|e| (e.category, e.strength))
            .collect()
    }

    #[test]
    fn single_synset_lemma() {
        let lex = parse_synset_lexicon("a#1\tgood\t0.75\t0.0\n", SynsetFormat::Sentiwordnet, 0.25).unwrap();
        assert_eq!(find(&lex, "good")[0], (Category::Positive, 0.75));
    }

    #[test]
    fn symmetric_synsets_are_neutral() {
        let lex = parse_synset_lexicon(
            "s1\tfair\t0.5\t0.0\ns2\tfair\t0.0\t0.5\n",
            SynsetFormat::Sentiwordnet,
            0.25,
        )
        .unwrap();
        assert_eq!(find(&lex, "fair")[0].0, Category::Neutral);
        assert_eq!(lex.polarity("fair"), Some(0.0));
    }

    #[test]
    fn three_synset_fixture() {
        let text = "\
n1\tcold,bleak\t0.0\t0.625\t0.375
n2\tcold\t0.125\t0.25\t0.625
a3\tcold,warm,bleak\t0.5\t0.0\t0.5
";
        let lex = parse_synset_lexicon(text, SynsetFormat::Micrownop, 0.0).unwrap();
        // Hand-averaged:
        //   cold:  pos (0 + .125 + .5)/3 = .208333, neg (.625 + .25 + 0)/3 = .291667 -> negative
        //   bleak: pos (0 + .5)/2 = .25, neg (.625 + 0)/2 = .3125 -> negative
        //   warm:  pos .5, neg 0 -> positive
        let cold = find(&lex, "cold");
        assert_eq!(cold[0].0, Category::Negative);
        assert!((cold[0].1 - 0.875 / 3.0).abs() < 1e-12);
        let bleak = find(&lex, "bleak");
        assert_eq!(bleak[0], (Category::Negative, 0.3125));
        assert_eq!(find(&lex, "warm")[0], (Category::Positive, 0.5));
        assert!((lex.polarity("cold").unwrap() - (0.625 - 0.875) / 3.0).abs() < 1e-12);
        // One polar deviation out of three sits at the nearest-rank upper quartile.
        let p = super::super::strength_partition(&lex).unwrap();
        assert_eq!(p.strong, BTreeSet::from(["warm".to_string()]));
    }

    #[test]
    fn errors() {
        assert!(matches!(
            parse_synset_lexicon("s1\tgood\t1.5\t0\n", SynsetFormat::Sentiwordnet, 0.25),
            Err(LexiconError::ScoreOutOfRange { line: 1, .. })
        ));
        assert!(matches!(
            parse_synset_lexicon("s1\t , \t0.5\t0\n", SynsetFormat::Sentiwordnet, 0.25),
            Err(LexiconError::EmptyLemmas { line: 1 })
        ));
        assert!(matches!(
            parse_synset_lexicon("s1\tgood\tx\t0\n", SynsetFormat::Sentiwordnet, 0.25),
            Err(LexiconError::BadScore { .. })
        ));
        assert!(matches!(
            parse_synset_lexicon("s1\tgood\t0.1\n", SynsetFormat::Sentiwordnet, 0.25),
            Err(LexiconError::Malformed { .. })
        ));
    }

    fn rows() -> impl Strategy<Value = Vec<(Vec<u8>, u8, u8)>> {
        proptest::collection::vec((proptest::collection::vec(0u8..6, 1..4), 0u8..=8, 0u8..=8), 1..15)
    }

    proptest! {
        #[test]
        fn row_order_does_not_matter(rows in rows(), seed in any::<u64>()) {
            let render = |rows: &[(usize, &(Vec<u8>, u8, u8))]| -> String {
                rows.iter().map(|(i, (lemmas, p, n))| {
                    let l: Vec<String> = lemmas.iter().map(|x| format!("w{x}")).collect();
                    format!("s{i}\t{}\t{}\t{}\n", l.join(","), *p as f64 / 10.0, *n as f64 / 10.0)
                }).collect()
            };
            let indexed: Vec<(usize, &(Vec<u8>, u8, u8))> = rows.iter().enumerate().collect();
            let mut shuffled = indexed.clone();
            // Deterministic shuffle driven by the generated seed.
            let mut state = seed | 1;
            for i in (1..shuffled.len()).rev() {
                state ^= state << 13; state ^= state >> 7; state ^= state << 17;
                shuffled.swap(i, (state % (i as u64 + 1)) as usize);
            }
            let a = parse_synset_lexicon(&render(&indexed), SynsetFormat::Sentiwordnet, 0.25).unwrap();
            let b = parse_synset_lexicon(&render(&shuffled), SynsetFormat::Sentiwordnet, 0.25).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
