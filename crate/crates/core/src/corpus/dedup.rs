//! Near-duplicate removal by exact Jaccard similarity of token 5-gram shingles.
//!
//! Candidate pairs come from an inverted index over the shingles of already
//! retained articles, so the intersection sizes are exact and only articles
//! sharing at least one shingle are ever compared.

use std::collections::{HashMap, HashSet};
use std::hash::Hash;

use super::{Article, CorpusError};
use crate::text::Tokenizer;

pub const SHINGLE_SIZE: usize = 5;

/// Token n-gram shingles. Texts shorter than the window form a single shingle.
pub fn shingles<S: AsRef<str>>(tokens: &[S]) -> HashSet<String> {
    let join = |w: &[S]| w.iter().map(AsRef::as_ref).collect::<Vec<_>>().join(" ");
    if tokens.is_empty() {
        HashSet::new()
    } else if tokens.len() < SHINGLE_SIZE {
        HashSet::from([join(tokens)])
    } else {
        tokens.windows(SHINGLE_SIZE).map(join).collect()
    }
}

fn token_windows<T: Clone>(tokens: &[T]) -> Vec<Vec<T>> {
    if tokens.is_empty() {
        Vec::new()
    } else if tokens.len() < SHINGLE_SIZE {
        vec![tokens.to_vec()]
    } else {
        tokens.windows(SHINGLE_SIZE).map(<[T]>::to_vec).collect()
    }
}

/// Jaccard similarity of two token sequences' shingle sets. Two empty texts are identical.
pub fn shingle_jaccard<S: AsRef<str>>(a: &[S], b: &[S]) -> f64 {
    let sa = shingles(a);
    let sb = shingles(b);
    if sa.is_empty() && sb.is_empty() {
        return 1.0;
    }
    let inter = sa.intersection(&sb).count();
    inter as f64 / (sa.len() + sb.len() - inter) as f64
}

/// Returns the indices (ascending) of the documents to keep.
///
/// Documents are visited in ascending `keys` order; a document is dropped when
/// some already kept document has similarity `>= threshold` with it.
pub fn deduplicate_tokenized<K: Ord, T: Hash + Eq + Clone>(
    keys: &[K],
    docs: &[Vec<T>],
    threshold: f64,
) -> Result<Vec<usize>, CorpusError> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(CorpusError::BadThreshold(threshold));
    }
    assert_eq!(keys.len(), docs.len(), "one key per document");

    let mut order: Vec<usize> = (0..docs.len()).collect();
    order.sort_by(|&a, &b| keys[a].cmp(&keys[b]).then(a.cmp(&b)));

    let mut interner: HashMap<Vec<T>, u32> = HashMap::new();
    let mut index: HashMap<u32, Vec<usize>> = HashMap::new();
    let mut kept_sizes: HashMap<usize, usize> = HashMap::new();
    let mut kept_empty = false;
    let mut kept = Vec::new();

    for doc in order {
        let set: Vec<u32> = {
            let mut ids: Vec<u32> = token_windows(&docs[doc])
                .into_iter()
                .map(|s| {
                    let next = interner.len() as u32;
                    *interner.entry(s).or_insert(next)
                })
                .collect();
            ids.sort_unstable();
            ids.dedup();
            ids
        };

        if set.is_empty() {
            if !kept_empty {
                kept_empty = true;
                kept.push(doc);
            }
            continue;
        }

        let mut overlap: HashMap<usize, usize> = HashMap::new();
        for id in &set {
            if let Some(holders) = index.get(id) {
                for &h in holders {
                    *overlap.entry(h).or_insert(0) += 1;
                }
            }
        }
        let duplicate = overlap.iter().any(|(h, &inter)| {
            let union = set.len() + kept_sizes[h] - inter;
            inter as f64 / union as f64 >= threshold
        });
        if duplicate {
            continue;
        }
        for id in &set {
            index.entry(*id).or_default().push(doc);
        }
        kept_sizes.insert(doc, set.len());
        kept.push(doc);
    }
    kept.sort_unstable();
    Ok(kept)
}

/// Drops near-duplicate articles, keeping the earliest published copy (then the
/// smallest id). Retained articles stay in input order.
pub fn deduplicate(articles: &[Article], threshold: f64) -> Result<Vec<Article>, CorpusError> {
    let tok = Tokenizer::plain();
    let docs: Vec<Vec<String>> = articles.iter().map(|a| a.body_tokens(&tok)).collect();
    let keys: Vec<_> = articles.iter().map(|a| (a.published_at, a.id.as_str())).collect();
    let kept = deduplicate_tokenized(&keys, &docs, threshold)?;
    Ok(kept.into_iter().map(|i| articles[i].clone()).collect())
}
