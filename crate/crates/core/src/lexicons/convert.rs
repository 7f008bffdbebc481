//! Converters from the upstream distribution formats to the normalized TSVs.
//!
//! | format                | input                                                               |
//! |-----------------------|---------------------------------------------------------------------|
//! | `anew-native`         | CSV or TSV with a `Description`/`Word` column and a `Valence Mean`/`Valence` column |
//! | `geninq-native`       | CSV or TSV spreadsheet export with `Entry`, `Positiv`, `Negativ`, `Strong` columns; senses like `ABOUT#2` collapse to `about` |
//! | `bias-native`         | one lemma per line                                                  |
//! | `sentiwordnet-native` | `POS ID PosScore NegScore SynsetTerms Gloss`, tab separated, `#` comments |
//! | `micrownop-native`    | whitespace separated `pos neg synset_id lemma [lemma ...]`, `#` comments |
//!
//! Multi-word lemmas (joined by `_` or `-`) are dropped since they can never
//! match a single token.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::str::FromStr;

use super::{data_lines, LexiconError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NativeFormat {
    Anew,
    Geninq,
    Bias,
    Sentiwordnet,
    Micrownop,
}

impl FromStr for NativeFormat {
    type Err = LexiconError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "anew-native" => Ok(NativeFormat::Anew),
            "geninq-native" => Ok(NativeFormat::Geninq),
            "bias-native" => Ok(NativeFormat::Bias),
            "sentiwordnet-native" => Ok(NativeFormat::Sentiwordnet),
            "micrownop-native" => Ok(NativeFormat::Micrownop),
            other => Err(LexiconError::UnknownFormat(other.to_string())),
        }
    }
}

/// Converts `text` in `format` to the matching normalized TSV.
pub fn convert_native(text: &str, format: NativeFormat) -> Result<String, LexiconError> {
    match format {
        NativeFormat::Anew => anew(text),
        NativeFormat::Geninq => geninq(text),
        NativeFormat::Bias => bias(text),
        NativeFormat::Sentiwordnet => sentiwordnet(text),
        NativeFormat::Micrownop => micrownop(text),
    }
}

fn single_word(raw: &str) -> Option<String> {
    let w = raw.trim().to_lowercase();
    let w = match w.split_once('#') {
        Some((head, _)) => head.to_string(),
        None => w,
    };
    if w.is_empty() || w.contains(['_', '-', ' ']) {
        None
    } else {
        Some(w)
    }
}

fn sheet(text: &str) -> Result<(Vec<String>, Vec<csv::StringRecord>), LexiconError> {
    let header_line = text.lines().next().unwrap_or_default();
    let delimiter = if header_line.contains('\t') { b'\t' } else { b',' };
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .flexible(true)
        .from_reader(text.as_bytes());
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| LexiconError::Malformed { line: 1, reason: e.to_string() })?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let rows = reader
        .records()
        .enumerate()
        .map(|(i, r)| r.map_err(|e| LexiconError::Malformed { line: i + 2, reason: e.to_string() }))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((headers, rows))
}

fn column(headers: &[String], names: &[&str]) -> Result<usize, LexiconError> {
    headers
        .iter()
        .position(|h| names.iter().any(|n| h.eq_ignore_ascii_case(n)))
        .ok_or_else(|| LexiconError::Malformed {
            line: 1,
            reason: format!("missing column {}", names.join("/")),
        })
}

fn anew(text: &str) -> Result<String, LexiconError> {
    let (headers, rows) = sheet(text)?;
    let word = column(&headers, &["Description", "Word"])?;
    let valence = column(&headers, &["Valence Mean", "Valence", "ValMn"])?;
    let mut out = String::new();
    let mut seen = BTreeSet::new();
    for (i, row) in rows.iter().enumerate() {
        let (Some(w), Some(v)) = (row.get(word), row.get(valence)) else {
            continue;
        };
        let score: f64 = v.trim().parse().map_err(|_| LexiconError::BadScore {
            line: i + 2,
            value: v.to_string(),
        })?;
        if let Some(w) = single_word(w) {
            if seen.insert(w.clone()) {
                writeln!(out, "{w}\tvalence\t{score}").unwrap();
            }
        }
    }
    Ok(out)
}

fn geninq(text: &str) -> Result<String, LexiconError> {
    let (headers, rows) = sheet(text)?;
    let entry = column(&headers, &["Entry"])?;
    let tags = [
        (column(&headers, &["Positiv"])?, "Positiv"),
        (column(&headers, &["Negativ"])?, "Negativ"),
        (column(&headers, &["Strong"])?, "Strong"),
    ];
    let mut pairs = BTreeSet::new();
    for row in &rows {
        let Some(term) = row.get(entry).and_then(single_word) else {
            continue;
        };
        for (col, tag) in tags {
            if row.get(col).is_some_and(|v| !v.trim().is_empty()) {
                pairs.insert((term.clone(), tag));
            }
        }
    }
    Ok(pairs.into_iter().map(|(t, c)| format!("{t}\t{c}\n")).collect())
}

fn bias(text: &str) -> Result<String, LexiconError> {
    let terms: BTreeSet<String> = data_lines(text).filter_map(|(_, l)| single_word(l)).collect();
    Ok(terms.into_iter().map(|t| format!("{t}\tbias\t1\n")).collect())
}

fn synset_row(out: &mut String, id: &str, lemmas: &BTreeSet<String>, pos: f64, neg: f64) {
    let joined: Vec<&str> = lemmas.iter().map(String::as_str).collect();
    writeln!(out, "{id}\t{}\t{pos}\t{neg}", joined.join(",")).unwrap();
}

fn sentiwordnet(text: &str) -> Result<String, LexiconError> {
    let mut out = String::new();
    for (line, row) in data_lines(text) {
        let cols: Vec<&str> = row.split('\t').collect();
        if cols.len() < 5 {
            return Err(LexiconError::Malformed {
                line,
                reason: "expected POS, ID, PosScore, NegScore, SynsetTerms".into(),
            });
        }
        let score = |raw: &str| {
            raw.trim().parse::<f64>().map_err(|_| LexiconError::BadScore {
                line,
                value: raw.to_string(),
            })
        };
        let (pos, neg) = (score(cols[2])?, score(cols[3])?);
        let lemmas: BTreeSet<String> = cols[4].split_whitespace().filter_map(single_word).collect();
        if !lemmas.is_empty() {
            synset_row(&mut out, &format!("{}{}", cols[0].trim(), cols[1].trim()), &lemmas, pos, neg);
        }
    }
    Ok(out)
}

fn micrownop(text: &str) -> Result<String, LexiconError> {
    let mut out = String::new();
    for (line, row) in data_lines(text) {
        let cols: Vec<&str> = row.split_whitespace().collect();
        if cols.len() < 4 {
            return Err(LexiconError::Malformed {
                line,
                reason: "expected pos, neg, synset id, lemmas".into(),
            });
        }
        let score = |raw: &str| {
            raw.parse::<f64>().map_err(|_| LexiconError::BadScore {
                line,
                value: raw.to_string(),
            })
        };
        let (pos, neg) = (score(cols[0])?, score(cols[1])?);
        let lemmas: BTreeSet<String> = cols[3..].iter().copied().filter_map(single_word).collect();
        if !lemmas.is_empty() {
            synset_row(&mut out, cols[2], &lemmas, pos, neg);
        }
    }
    Ok(out)
}
