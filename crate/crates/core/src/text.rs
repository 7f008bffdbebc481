//! Tokenization and stopword handling shared by ingestion and scoring.

use std::collections::HashSet;
use std::sync::OnceLock;

/// Generic English stopwords (the common NLTK-style list).
pub const ENGLISH_STOPWORDS: &[&str] = &[
    "a", "about", "above", "after", "again", "against", "all", "am", "an", "and", "any", "are",
    "as", "at", "be", "because", "been", "before", "being", "below", "between", "both", "but",
    "by", "can", "could", "did", "do", "does", "doing", "down", "during", "each", "few", "for",
    "from", "further", "had", "has", "have", "having", "he", "her", "here", "hers", "herself",
    "him", "himself", "his", "how", "i", "if", "in", "into", "is", "it", "its", "itself", "just",
    "me", "more", "most", "my", "myself", "no", "nor", "not", "now", "of", "off", "on", "once",
    "only", "or", "other", "our", "ours", "ourselves", "out", "over", "own", "same", "she",
    "should", "so", "some", "such", "than", "that", "the", "their", "theirs", "them",
    "themselves", "then", "there", "these", "they", "this", "those", "through", "to", "too",
    "under", "until", "up", "very", "was", "we", "were", "what", "when", "where", "which",
    "while", "who", "whom", "why", "will", "with", "would", "you", "your", "yours", "yourself",
    "yourselves",
];

/// Boilerplate terms that show up in syndicated wire copy.
pub const NEWS_STOPWORDS: &[&str] = &[
    "ap",
    "broadcast",
    "press",
    "published",
    "rewritten",
    "redistributed",
    "rights",
    "copyright",
    "reserved",
];

fn english_set() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| ENGLISH_STOPWORDS.iter().copied().collect())
}

fn news_set() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| NEWS_STOPWORDS.iter().copied().collect())
}

/// Splits text into lowercase alphanumeric tokens of at least two characters,
/// optionally dropping stopwords.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Tokenizer {
    pub drop_english_stopwords: bool,
    pub drop_news_stopwords: bool,
}

impl Tokenizer {
    /// Keeps every token.
    pub const fn plain() -> Self {
        Tokenizer {
            drop_english_stopwords: false,
            drop_news_stopwords: false,
        }
    }

    pub const fn new(drop_english_stopwords: bool, drop_news_stopwords: bool) -> Self {
        Tokenizer {
            drop_english_stopwords,
            drop_news_stopwords,
        }
    }

    pub fn is_stopword(&self, token: &str) -> bool {
        (self.drop_english_stopwords && english_set().contains(token))
            || (self.drop_news_stopwords && news_set().contains(token))
    }

    pub fn tokenize(&self, text: &str) -> Vec<String> {
        let mut out = Vec::new();
        for raw in text.split(|c: char| !c.is_alphanumeric()) {
            if raw.is_empty() {
                continue;
            }
            // Some uppercase letters (e.g. mathematical capitals) have no lowercase form.
            let token: String = raw
                .chars()
                .flat_map(char::to_lowercase)
                .filter(|c| !c.is_uppercase())
                .collect();
            if token.chars().count() < 2 || self.is_stopword(&token) {
                continue;
            }
            out.push(token);
        }
        out
    }
}

/// Lowercases and splits `text`, honoring the stopword flags of `tokenizer`.
pub fn normalize_tokens(text: &str, tokenizer: &Tokenizer) -> Vec<String> {
    tokenizer.tokenize(text)
}

/// Removes anything between `<` and the next `>`, replacing each tag with a space.
pub fn strip_tags(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut in_tag = false;
    for c in text.chars() {
        match (in_tag, c) {
            (false, '<') => in_tag = true,
            (false, _) => out.push(c),
            (true, '>') => {
                in_tag = false;
                out.push(' ');
            }
            (true, _) => {}
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn lowercases_and_splits() {
        assert_eq!(
            normalize_tokens("Gun CONTROL debate!", &Tokenizer::plain()),
            vec!["gun", "control", "debate"]
        );
    }

    #[test]
    fn empty_text_gives_no_tokens() {
        assert!(normalize_tokens("", &Tokenizer::plain()).is_empty());
    }

    #[test]
    fn news_stopwords_removed_on_request() {
        let tok = Tokenizer::new(false, true);
        assert_eq!(normalize_tokens("copyright reserved gun", &tok), vec!["gun"]);
        assert_eq!(
            normalize_tokens("copyright reserved gun", &Tokenizer::plain()),
            vec!["copyright", "reserved", "gun"]
        );
    }

    #[test]
    fn short_tokens_dropped() {
        assert_eq!(
            normalize_tokens("a b cd U.S. 9 60s", &Tokenizer::plain()),
            vec!["cd", "60s"]
        );
    }

    #[test]
    fn english_stopwords() {
        let tok = Tokenizer::new(true, false);
        assert_eq!(normalize_tokens("The law of the land", &tok), vec!["law", "land"]);
    }

    #[test]
    fn tags_are_stripped() {
        assert_eq!(strip_tags("<p>gun<br/>law</p>"), " gun law ");
        assert_eq!(strip_tags("no tags"), "no tags");
    }

    proptest! {
        #[test]
        fn output_is_lowercase_and_stopword_free(text in "\\PC{0,80}", eng: bool, news: bool) {
            let tok = Tokenizer::new(eng, news);
            for t in normalize_tokens(&text, &tok) {
                prop_assert!(!t.chars().any(char::is_uppercase), "{t}");
                prop_assert!(!tok.is_stopword(&t));
                prop_assert!(t.chars().count() >= 2);
            }
        }
    }
}
