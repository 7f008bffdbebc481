use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use rayon::prelude::*;

use super::{deduplicate_tokenized, validate_source_name, Article, CorpusError, SuperArticle};
use crate::text::{strip_tags, Tokenizer};

#[derive(Debug, Clone)]
pub struct IngestOptions {
    pub dedup_threshold: f64,
    pub tokenizer: Tokenizer,
    /// When set, articles from other sources are dropped.
    pub source_registry: Option<BTreeSet<String>>,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            dedup_threshold: super::DEFAULT_DEDUP_THRESHOLD,
            tokenizer: Tokenizer::new(false, true),
            source_registry: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BucketReport {
    pub source: String,
    pub topic: String,
    /// Articles mentioning the topic before deduplication.
    pub matched: usize,
    pub duplicates_removed: usize,
    pub article_count: u64,
    pub total_tokens: u64,
}

#[derive(Debug, Clone, Default)]
pub struct IngestReport {
    pub super_articles: Vec<SuperArticle>,
    pub buckets: Vec<BucketReport>,
    pub empty_bodies: usize,
    pub unregistered_source: usize,
    pub invalid_source: usize,
    pub no_topic: usize,
}

#[derive(Default)]
struct Vocab {
    ids: HashMap<String, u32>,
    words: Vec<String>,
}

impl Vocab {
    fn intern(&mut self, token: String) -> u32 {
        if let Some(&id) = self.ids.get(&token) {
            return id;
        }
        let id = self.words.len() as u32;
        self.words.push(token.clone());
        self.ids.insert(token, id);
        id
    }
}

/// Groups articles into (source, topic) buckets, removes near-duplicates within
/// each bucket and aggregates the survivors. Output is ordered by (source, topic).
pub fn build_corpus(
    articles: &[Article],
    topics: &[String],
    options: &IngestOptions,
) -> Result<IngestReport, CorpusError> {
    if !(options.dedup_threshold > 0.0 && options.dedup_threshold <= 1.0) {
        return Err(CorpusError::BadThreshold(options.dedup_threshold));
    }
    let mut report = IngestReport::default();
    let plain = Tokenizer::plain();
    let mut vocab = Vocab::default();
    let topic_set: HashSet<&str> = topics.iter().map(String::as_str).collect();

    // Plain tokens drive shingling; counted tokens additionally drop stopwords.
    let mut docs: Vec<Vec<u32>> = Vec::with_capacity(articles.len());
    let mut buckets: BTreeMap<(&str, &str), Vec<usize>> = BTreeMap::new();
    for article in articles {
        let idx = docs.len();
        let tokens = plain.tokenize(&strip_tags(&article.body));
        if tokens.is_empty() {
            report.empty_bodies += 1;
            docs.push(Vec::new());
            continue;
        }
        if validate_source_name(&article.source).is_err() {
            report.invalid_source += 1;
            docs.push(Vec::new());
            continue;
        }
        if let Some(reg) = &options.source_registry {
            if !reg.contains(&article.source) {
                report.unregistered_source += 1;
                docs.push(Vec::new());
                continue;
            }
        }
        let mut mentioned: BTreeSet<&str> = BTreeSet::new();
        for t in &tokens {
            if !options.tokenizer.is_stopword(t) {
                if let Some(topic) = topic_set.get(t.as_str()) {
                    mentioned.insert(topic);
                }
            }
        }
        if mentioned.is_empty() {
            report.no_topic += 1;
        }
        for topic in mentioned {
            buckets.entry((article.source.as_str(), topic)).or_default().push(idx);
        }
        docs.push(tokens.into_iter().map(|t| vocab.intern(t)).collect());
    }

    let stop: Vec<bool> = vocab
        .words
        .iter()
        .map(|w| options.tokenizer.is_stopword(w))
        .collect();

    let built: Vec<Result<(SuperArticle, BucketReport), CorpusError>> = buckets
        .into_par_iter()
        .map(|((source, topic), members)| {
            let keys: Vec<_> = members
                .iter()
                .map(|&i| (articles[i].published_at, articles[i].id.as_str()))
                .collect();
            let bucket_docs: Vec<Vec<u32>> = members.iter().map(|&i| docs[i].clone()).collect();
            let kept = deduplicate_tokenized(&keys, &bucket_docs, options.dedup_threshold)?;

            let mut counts: BTreeMap<u32, u64> = BTreeMap::new();
            let mut total = 0u64;
            for &k in &kept {
                for &id in &bucket_docs[k] {
                    if !stop[id as usize] {
                        *counts.entry(id).or_insert(0) += 1;
                        total += 1;
                    }
                }
            }
            let token_counts: BTreeMap<String, u64> = counts
                .into_iter()
                .map(|(id, c)| (vocab.words[id as usize].clone(), c))
                .collect();
            let sa = SuperArticle {
                source: source.to_string(),
                topic: topic.to_string(),
                token_counts,
                total_tokens: total,
                article_count: kept.len() as u64,
            };
            let rep = BucketReport {
                source: source.to_string(),
                topic: topic.to_string(),
                matched: members.len(),
                duplicates_removed: members.len() - kept.len(),
                article_count: sa.article_count,
                total_tokens: sa.total_tokens,
            };
            Ok((sa, rep))
        })
        .collect();

    for item in built {
        let (sa, rep) = item?;
        report.super_articles.push(sa);
        report.buckets.push(rep);
    }
    Ok(report)
}
