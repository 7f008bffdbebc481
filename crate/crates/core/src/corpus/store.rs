//! On-disk corpus store: `<dir>/<source>/<topic>.tsv` count files with a
//! `<topic>.meta.tsv` sidecar each.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{validate_source_name, CorpusError, SuperArticle};

pub const META_SUFFIX: &str = ".meta.tsv";

fn malformed(path: &Path, reason: impl Into<String>) -> CorpusError {
    CorpusError::MalformedStore {
        path: path.display().to_string(),
        reason: reason.into(),
    }
}

pub fn write_store(dir: &Path, super_articles: &[SuperArticle]) -> Result<(), CorpusError> {
    fs::create_dir_all(dir)?;
    for sa in super_articles {
        validate_source_name(&sa.source)?;
        let source_dir = dir.join(&sa.source);
        fs::create_dir_all(&source_dir)?;

        let mut w = BufWriter::new(fs::File::create(source_dir.join(format!("{}.tsv", sa.topic)))?);
        for (token, count) in &sa.token_counts {
            writeln!(w, "{token}\t{count}")?;
        }
        w.flush()?;

        let mut m = BufWriter::new(fs::File::create(
            source_dir.join(format!("{}{META_SUFFIX}", sa.topic)),
        )?);
        writeln!(m, "article_count\t{}", sa.article_count)?;
        writeln!(m, "total_tokens\t{}", sa.total_tokens)?;
        m.flush()?;
    }
    Ok(())
}

fn read_meta(path: &Path) -> Result<(u64, u64), CorpusError> {
    let text = fs::read_to_string(path)?;
    let mut fields = BTreeMap::new();
    for line in text.lines().filter(|l| !l.is_empty()) {
        let (k, v) = line
            .split_once('\t')
            .ok_or_else(|| malformed(path, format!("bad line {line:?}")))?;
        let v: u64 = v
            .parse()
            .map_err(|_| malformed(path, format!("bad count {v:?}")))?;
        fields.insert(k.to_string(), v);
    }
    let get = |k: &str| {
        fields
            .get(k)
            .copied()
            .ok_or_else(|| malformed(path, format!("missing {k}")))
    };
    Ok((get("article_count")?, get("total_tokens")?))
}

fn read_counts(path: &Path) -> Result<BTreeMap<String, u64>, CorpusError> {
    let text = fs::read_to_string(path)?;
    let mut counts = BTreeMap::new();
    for line in text.lines().filter(|l| !l.is_empty()) {
        let (token, count) = line
            .split_once('\t')
            .ok_or_else(|| malformed(path, format!("bad line {line:?}")))?;
        let count: u64 = count
            .parse()
            .map_err(|_| malformed(path, format!("bad count {count:?}")))?;
        if counts.insert(token.to_string(), count).is_some() {
            return Err(malformed(path, format!("repeated token {token:?}")));
        }
    }
    Ok(counts)
}

/// Loads every super-article in the store, ordered by (source, topic).
pub fn read_store(dir: &Path) -> Result<Vec<SuperArticle>, CorpusError> {
    let mut out = Vec::new();
    let mut sources: Vec<_> = fs::read_dir(dir)?
        .filter_map(Result::ok)
        .filter(|e| e.path().is_dir())
        .collect();
    sources.sort_by_key(|e| e.file_name());
    for source_entry in sources {
        let source = source_entry.file_name().to_string_lossy().into_owned();
        let mut files: Vec<_> = fs::read_dir(source_entry.path())?
            .filter_map(Result::ok)
            .map(|e| e.path())
            .collect();
        files.sort();
        for path in files {
            let name = match path.file_name().and_then(|n| n.to_str()) {
                Some(n) => n.to_string(),
                None => continue,
            };
            if name.ends_with(META_SUFFIX) {
                continue;
            }
            let Some(topic) = name.strip_suffix(".tsv") else {
                continue;
            };
            let token_counts = read_counts(&path)?;
            let meta_path = path.with_file_name(format!("{topic}{META_SUFFIX}"));
            let (article_count, total_tokens) = read_meta(&meta_path)?;
            if token_counts.values().sum::<u64>() != total_tokens {
                return Err(malformed(&path, "total_tokens does not match counts"));
            }
            out.push(SuperArticle {
                source: source.clone(),
                topic: topic.to_string(),
                token_counts,
                total_tokens,
                article_count,
            });
        }
    }
    out.sort_by(|a, b| (&a.source, &a.topic).cmp(&(&b.source, &b.topic)));
    Ok(out)
}
