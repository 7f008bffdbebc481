//! Article ingestion, near-duplicate removal and per-(source, topic) super-articles.

mod dedup;
mod ingest;
mod store;

use std::collections::{BTreeMap, HashSet};
use std::io::BufRead;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::{strip_tags, Tokenizer};

pub use dedup::{deduplicate, deduplicate_tokenized, shingle_jaccard, shingles, SHINGLE_SIZE};
pub use ingest::{build_corpus, BucketReport, IngestOptions, IngestReport};
pub use store::{read_store, write_store, META_SUFFIX};

/// Default Jaccard threshold above which two articles count as near-duplicates.
pub const DEFAULT_DEDUP_THRESHOLD: f64 = 0.85;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("no articles for source {outlet:?}, topic {topic:?}")]
    NoArticles { outlet: String, topic: String },
    #[error("article {id:?} belongs to source {found:?}, expected {expected:?}")]
    SourceMismatch {
        id: String,
        expected: String,
        found: String,
    },
    #[error("article {id:?} does not mention topic {topic:?}")]
    TopicAbsent { id: String, topic: String },
    #[error("dedup threshold must be in (0, 1], got {0}")]
    BadThreshold(f64),
    #[error("invalid source name {0:?}")]
    BadSourceName(String),
    #[error("malformed corpus store file {path}: {reason}")]
    MalformedStore { path: String, reason: String },
}

/// One news item as delivered in the JSON-lines input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Article {
    pub id: String,
    pub source: String,
    pub published_at: DateTime<Utc>,
    pub title: String,
    pub body: String,
}

impl Article {
    /// Body tokens after tag removal.
    pub fn body_tokens(&self, tokenizer: &Tokenizer) -> Vec<String> {
        tokenizer.tokenize(&strip_tags(&self.body))
    }
}

/// Result of reading a JSON-lines stream.
#[derive(Debug, Default, Clone)]
pub struct ParsedArticles {
    pub articles: Vec<Article>,
    /// Lines that failed to parse, had an empty id or repeated an earlier id.
    pub skipped: usize,
    /// 1-based line numbers of the skipped lines.
    pub skipped_lines: Vec<usize>,
}

/// Reads one article per line. Blank lines are ignored; malformed lines are counted.
pub fn parse_articles<R: BufRead>(reader: R) -> Result<ParsedArticles, CorpusError> {
    let mut out = ParsedArticles::default();
    let mut seen = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<Article>(&line) {
            Ok(article) if !article.id.is_empty() && seen.insert(article.id.clone()) => {
                out.articles.push(article)
            }
            _ => {
                out.skipped += 1;
                out.skipped_lines.push(idx + 1);
            }
        }
    }
    Ok(out)
}

/// Source names become directory names in the corpus store.
pub fn validate_source_name(source: &str) -> Result<(), CorpusError> {
    let bad = source.is_empty()
        || source == "."
        || source == ".."
        || source.contains(['/', '\\', '\0', '\t', '\n']);
    if bad {
        Err(CorpusError::BadSourceName(source.to_string()))
    } else {
        Ok(())
    }
}

/// Token-count aggregate of all deduplicated articles of one source mentioning one topic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuperArticle {
    pub source: String,
    pub topic: String,
    pub token_counts: BTreeMap<String, u64>,
    pub total_tokens: u64,
    pub article_count: u64,
}

impl SuperArticle {
    /// Starts an aggregate with no articles; only meaningful once articles are added.
    pub(crate) fn empty(source: &str, topic: &str) -> Self {
        SuperArticle {
            source: source.to_string(),
            topic: topic.to_string(),
            token_counts: BTreeMap::new(),
            total_tokens: 0,
            article_count: 0,
        }
    }

    pub(crate) fn add_tokens<S: AsRef<str>>(&mut self, tokens: &[S]) {
        for t in tokens {
            *self.token_counts.entry(t.as_ref().to_string()).or_insert(0) += 1;
        }
        self.total_tokens += tokens.len() as u64;
        self.article_count += 1;
    }

    pub fn count(&self, token: &str) -> u64 {
        self.token_counts.get(token).copied().unwrap_or(0)
    }

    /// Pointwise sum of counts. Source and topic are taken from `self`.
    pub fn merge(&mut self, other: &SuperArticle) {
        for (t, c) in &other.token_counts {
            *self.token_counts.entry(t.clone()).or_insert(0) += c;
        }
        self.total_tokens += other.total_tokens;
        self.article_count += other.article_count;
    }
}

/// Aggregates the normalized bodies of `articles` into one super-article.
pub fn build_super_article(
    source: &str,
    topic: &str,
    articles: &[Article],
    tokenizer: &Tokenizer,
) -> Result<SuperArticle, CorpusError> {
    if articles.is_empty() {
        return Err(CorpusError::NoArticles {
            outlet: source.to_string(),
            topic: topic.to_string(),
        });
    }
    let mut sa = SuperArticle::empty(source, topic);
    for a in articles {
        if a.source != source {
            return Err(CorpusError::SourceMismatch {
                id: a.id.clone(),
                expected: source.to_string(),
                found: a.source.clone(),
            });
        }
        let tokens = a.body_tokens(tokenizer);
        if !tokens.iter().any(|t| t == topic) {
            return Err(CorpusError::TopicAbsent {
                id: a.id.clone(),
                topic: topic.to_string(),
            });
        }
        sa.add_tokens(&tokens);
    }
    Ok(sa)
}
