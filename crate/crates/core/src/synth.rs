//! Seeded synthetic corpus with a planted controversy signal.
//!
//! Every article mentions one topic word once and otherwise draws tokens from
//! pseudo-word pools: filler, neutral, positive and negative (each split into
//! weak and strong) and bias. Topics labeled C3 get more negative-weak and
//! bias vocabulary and less positive and strong vocabulary; C2 topics get half
//! the shift. The five lexicons written alongside the articles describe the
//! same pools, so each scored lexicon's upper-quartile strong set is exactly
//! the planted strong pool.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::annotation::{self, Klass, TopicWord};
use crate::corpus::Article;
use crate::lexicons::{upper_quartile_threshold, LexiconName};
use crate::text::{ENGLISH_STOPWORDS, NEWS_STOPWORDS};

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_SOURCES: [&str; 3] = ["alpha-daily", "beta-times", "gamma-post"];

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    /// Multiplier on the planted class shifts; 0 gives a null corpus.
    pub effect: f64,
    pub sources: Vec<String>,
    pub words: Vec<TopicWord>,
    pub articles_per_topic: usize,
    pub tokens_per_article: usize,
    /// Chance that an article is a near-copy of an earlier one in its bucket.
    pub duplicate_rate: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: DEFAULT_SEED,
            effect: 1.0,
            sources: DEFAULT_SOURCES.iter().map(|s| s.to_string()).collect(),
            words: annotation::load_reference_words().expect("embedded reference list"),
            articles_per_topic: 100,
            tokens_per_article: 60,
            duplicate_rate: 0.05,
        }
    }
}

/// Token categories with a planted rate. Filler fills the remainder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Pool {
    NegativeWeak,
    NegativeStrong,
    PositiveWeak,
    PositiveStrong,
    Bias,
    Neutral,
}

impl Pool {
    pub const ALL: [Pool; 6] = [
        Pool::NegativeWeak,
        Pool::NegativeStrong,
        Pool::PositiveWeak,
        Pool::PositiveStrong,
        Pool::Bias,
        Pool::Neutral,
    ];

    /// Rate in non-controversial topics.
    pub fn base_rate(self) -> f64 {
        match self {
            Pool::NegativeWeak => 0.030,
            Pool::NegativeStrong => 0.015,
            Pool::PositiveWeak => 0.040,
            Pool::PositiveStrong => 0.020,
            Pool::Bias => 0.015,
            Pool::Neutral => 0.050,
        }
    }

    /// Rate change in C3 topics at effect 1.
    pub fn c3_shift(self) -> f64 {
        match self {
            Pool::NegativeWeak => 0.025,
            Pool::NegativeStrong => -0.007,
            Pool::PositiveWeak => -0.012,
            Pool::PositiveStrong => -0.010,
            Pool::Bias => 0.015,
            Pool::Neutral => 0.0,
        }
    }

    fn size(self) -> usize {
        match self {
            Pool::NegativeWeak | Pool::PositiveWeak => 91,
            Pool::NegativeStrong | Pool::PositiveStrong => 31,
            Pool::Bias => 60,
            Pool::Neutral => 80,
        }
    }
}

const FILLER_SIZE: usize = 2000;

/// Share of the full class shift a topic receives.
fn class_weight(klass: Klass) -> f64 {
    match klass {
        Klass::C3 => 1.0,
        Klass::C2 => 0.5,
        _ => 0.0,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    pub filler: Vec<String>,
    pub pools: BTreeMap<Pool, Vec<String>>,
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub articles: Vec<Article>,
    pub words: Vec<TopicWord>,
    pub vocabulary: Vocabulary,
    /// Normalized lexicon TSVs keyed by lexicon.
    pub lexicons: BTreeMap<LexiconName, String>,
    pub planted_duplicates: usize,
}

fn pseudo_word(rng: &mut ChaCha8Rng) -> String {
    const ONSETS: [&str; 16] = ["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "tr"];
    const VOWELS: [&str; 5] = ["a", "e", "i", "o", "u"];
    let syllables = rng.gen_range(2..=3);
    let mut w = String::new();
    for _ in 0..syllables {
        w.push_str(ONSETS[rng.gen_range(0..ONSETS.len())]);
        w.push_str(VOWELS[rng.gen_range(0..VOWELS.len())]);
    }
    if rng.gen_bool(0.3) {
        w.push(['n', 'r', 's', 'x'][rng.gen_range(0..4)]);
    }
    w
}

fn build_vocabulary(rng: &mut ChaCha8Rng, topics: &HashSet<&str>) -> Vocabulary {
    let mut used: HashSet<String> = ENGLISH_STOPWORDS
        .iter()
        .chain(NEWS_STOPWORDS)
        .map(|s| s.to_string())
        .chain(topics.iter().map(|s| s.to_string()))
        .collect();
    let mut fresh = |n: usize| {
        let mut out = Vec::with_capacity(n);
        while out.len() < n {
            let w = pseudo_word(rng);
            if used.insert(w.clone()) {
                out.push(w);
            }
        }
        out
    };
    let pools = Pool::ALL.iter().map(|&p| (p, fresh(p.size()))).collect();
    Vocabulary {
        filler: fresh(FILLER_SIZE),
        pools,
    }
}

/// Distances from neutral for `n` words, evenly spread over `[lo, hi]`.
fn spread(n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n)
        .map(|i| if n == 1 { (lo + hi) / 2.0 } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
        .collect()
}

/// Writes the five lexicons over `vocab`. Scores are rounded to three decimals
/// so the files stay readable.
fn lexicon_texts(vocab: &Vocabulary) -> BTreeMap<LexiconName, String> {
    let round = |x: f64| (x * 1000.0).round() / 1000.0;
    let pool = |p: Pool| &vocab.pools[&p];
    // (term, signed distance) for every polar word.
    let mut polar: Vec<(&str, f64, bool)> = Vec::new();
    for (p, sign, lo, hi, strong) in [
        (Pool::PositiveWeak, 1.0, 0.30, 0.60, false),
        (Pool::NegativeWeak, -1.0, 0.30, 0.60, false),
        (Pool::PositiveStrong, 1.0, 0.75, 0.95, true),
        (Pool::NegativeStrong, -1.0, 0.75, 0.95, true),
    ] {
        for (w, d) in pool(p).iter().zip(spread(pool(p).len(), lo, hi)) {
            polar.push((w, sign * round(d), strong));
        }
    }
    polar.sort_by(|a, b| a.0.cmp(b.0));

    let mut anew = String::new();
    let mut swn = String::new();
    let mut mwn = String::new();
    let mut gi = String::new();
    for (i, (w, d, strong)) in polar.iter().enumerate() {
        // ANEW ratings on the 1-9 scale around 5.
        writeln!(anew, "{w}\tvalence\t{}", round(5.0 + 4.0 * d)).unwrap();
        let (pos, neg) = if *d > 0.0 { (*d, 0.0) } else { (0.0, -d) };
        writeln!(swn, "a{i:06}\t{w}\t{pos}\t{neg}").unwrap();
        writeln!(mwn, "m{i:06}\t{w}\t{pos}\t{neg}").unwrap();
        writeln!(gi, "{w}\t{}", if *d > 0.0 { "Positiv" } else { "Negativ" }).unwrap();
        if *strong {
            writeln!(gi, "{w}\tStrong").unwrap();
        }
    }
    for (i, w) in pool(Pool::Neutral).iter().enumerate() {
        writeln!(swn, "n{i:06}\t{w}\t0\t0").unwrap();
        writeln!(mwn, "o{i:06}\t{w}\t0\t0").unwrap();
    }
    let bias: String = pool(Pool::Bias).iter().map(|w| format!("{w}\tbias\t1\n")).collect();
    BTreeMap::from([
        (LexiconName::Anew, anew),
        (LexiconName::Geninq, gi),
        (LexiconName::Micrownop, mwn),
        (LexiconName::Sentiwordnet, swn),
        (LexiconName::Bias, bias),
    ])
}

/// Pool sizes are chosen so the nearest-rank upper quartile of the polar
/// distances lands exactly on the planted strong words.
fn strong_split_is_exact() -> bool {
    let weak = Pool::PositiveWeak.size() + Pool::NegativeWeak.size();
    let strong = Pool::PositiveStrong.size() + Pool::NegativeStrong.size();
    let mut d: Vec<f64> = (0..weak).map(|i| i as f64).chain((0..strong).map(|i| 1e6 + i as f64)).collect();
    d.sort_by(f64::total_cmp);
    let t = upper_quartile_threshold(&d).unwrap();
    d.iter().filter(|&&x| x >= t).count() == strong
}

fn start_time() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2013, 1, 1, 0, 0, 0).unwrap()
}

pub fn generate(config: &SynthConfig) -> SynthCorpus {
    debug_assert!(strong_split_is_exact());
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let topic_set: HashSet<&str> = config.words.iter().map(|w| w.term.as_str()).collect();
    let vocab = build_vocabulary(&mut rng, &topic_set);

    // Source style and per-topic variation, both independent of the class.
    let source_style: Vec<Vec<f64>> = config
        .sources
        .iter()
        .map(|_| Pool::ALL.iter().map(|_| rng.gen_range(0.9..1.1)).collect())
        .collect();
    let topic_jitter: Vec<Vec<f64>> = config
        .words
        .iter()
        .map(|_| Pool::ALL.iter().map(|_| rng.gen_range(0.75..1.25)).collect())
        .collect();

    let mut articles = Vec::with_capacity(config.sources.len() * config.words.len() * config.articles_per_topic);
    let mut planted_duplicates = 0;
    let mut clock = 0i64;
    let len_lo = config.tokens_per_article.saturating_sub(10).max(2);
    let len_hi = config.tokens_per_article + 10;
    for (s, source) in config.sources.iter().enumerate() {
        for (t, word) in config.words.iter().enumerate() {
            let shift = config.effect * class_weight(word.klass);
            let rates: Vec<f64> = Pool::ALL
                .iter()
                .enumerate()
                .map(|(p, pool)| {
                    ((pool.base_rate() + shift * pool.c3_shift()) * source_style[s][p] * topic_jitter[t][p]).max(0.0)
                })
                .collect();
            let mut bodies: Vec<Vec<&str>> = Vec::with_capacity(config.articles_per_topic);
            for a in 0..config.articles_per_topic {
                let tokens = if !bodies.is_empty() && rng.gen_bool(config.duplicate_rate) {
                    planted_duplicates += 1;
                    let mut copy = bodies[rng.gen_range(0..bodies.len())].clone();
                    let last = copy.len() - 1;
                    copy[last] = vocab.filler.choose(&mut rng).unwrap();
                    copy
                } else {
                    let n = rng.gen_range(len_lo..=len_hi);
                    let topic_at = rng.gen_range(0..n - 1);
                    (0..n)
                        .map(|i| {
                            if i == topic_at {
                                return word.term.as_str();
                            }
                            let mut u: f64 = rng.gen();
                            for (p, pool) in Pool::ALL.iter().enumerate() {
                                if u < rates[p] {
                                    return vocab.pools[pool].choose(&mut rng).unwrap().as_str();
                                }
                                u -= rates[p];
                            }
                            vocab.filler.choose(&mut rng).unwrap().as_str()
                        })
                        .collect()
                };
                articles.push(Article {
                    id: format!("{source}-{t:04}-{a:04}"),
                    source: source.clone(),
                    published_at: start_time() + Duration::minutes(clock),
                    title: format!("{} report {a}", word.term),
                    body: render_body(&tokens),
                });
                clock += 1;
                bodies.push(tokens);
            }
        }
    }
    SynthCorpus {
        articles,
        words: config.words.clone(),
        lexicons: lexicon_texts(&vocab),
        vocabulary: vocab,
        planted_duplicates,
    }
}

/// Sentences of twelve tokens, first word capitalized.
fn render_body(tokens: &[&str]) -> String {
    let mut body = String::with_capacity(tokens.len() * 8);
    for (i, chunk) in tokens.chunks(12).enumerate() {
        if i > 0 {
            body.push(' ');
        }
        for (j, tok) in chunk.iter().enumerate() {
            if j == 0 {
                let mut cs = tok.chars();
                if let Some(c) = cs.next() {
                    body.extend(c.to_uppercase());
                    body.push_str(cs.as_str());
                }
            } else {
                body.push(' ');
                body.push_str(tok);
            }
        }
        body.push('.');
    }
    body
}

/// Writes `articles.jsonl`, `words.tsv` and `lexicons/<name>.tsv` under `dir`.
pub fn write_corpus(dir: &Path, corpus: &SynthCorpus) -> std::io::Result<()> {
    std::fs::create_dir_all(dir.join("lexicons"))?;
    let mut w = std::io::BufWriter::new(std::fs::File::create(dir.join("articles.jsonl"))?);
    for a in &corpus.articles {
        serde_json::to_writer(&mut w, a)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    let mut words = Vec::new();
    annotation::write_words(&mut words, &corpus.words).map_err(std::io::Error::other)?;
    std::fs::write(dir.join("words.tsv"), words)?;
    for (name, text) in &corpus.lexicons {
        std::fs::write(dir.join("lexicons").join(name.file_name()), text)?;
    }
    Ok(())
}

/// Terms of the planted pools, for checks against loaded lexicons.
pub fn pool_terms(vocab: &Vocabulary, pools: &[Pool]) -> BTreeSet<String> {
    pools.iter().flat_map(|p| vocab.pools[p].iter().cloned()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexicons::{parse_synset_lexicon, parse_word_lexicon, Category, SynsetFormat, WordFormat};

    fn small(seed: u64, effect: f64) -> SynthConfig {
        let words = annotation::load_reference_words().unwrap();
        let pick = |k: Klass, n: usize| words.iter().filter(move |w| w.klass == k).take(n).cloned();
        SynthConfig {
            seed,
            effect,
            words: pick(Klass::C3, 6).chain(pick(Klass::C2, 2)).chain(pick(Klass::C0, 8)).collect(),
            articles_per_topic: 10,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn split_arithmetic() {
        assert!(strong_split_is_exact());
    }

    #[test]
    fn same_seed_same_corpus() {
        let a = generate(&small(1, 1.0));
        let b = generate(&small(1, 1.0));
        assert_eq!(a.articles, b.articles);
        assert_eq!(a.lexicons, b.lexicons);
        assert_ne!(generate(&small(2, 1.0)).articles, a.articles);
    }

    #[test]
    fn lexicons_describe_the_pools() {
        let c = generate(&small(3, 1.0));
        let v = &c.vocabulary;
        let strong = pool_terms(v, &[Pool::PositiveStrong, Pool::NegativeStrong]);
        let negative = pool_terms(v, &[Pool::NegativeWeak, Pool::NegativeStrong]);
        let positive = pool_terms(v, &[Pool::PositiveWeak, Pool::PositiveStrong]);
        let anew = parse_word_lexicon(&c.lexicons[&LexiconName::Anew], WordFormat::Anew).unwrap();
        let gi = parse_word_lexicon(&c.lexicons[&LexiconName::Geninq], WordFormat::Geninq).unwrap();
        let swn =
            parse_synset_lexicon(&c.lexicons[&LexiconName::Sentiwordnet], SynsetFormat::Sentiwordnet, 0.25).unwrap();
        let mwn = parse_synset_lexicon(&c.lexicons[&LexiconName::Micrownop], SynsetFormat::Micrownop, 0.0).unwrap();
        for lex in [&anew, &gi, &swn, &mwn] {
            assert_eq!(lex.category_terms(Category::Strong), strong, "{}", lex.name);
            assert_eq!(lex.category_terms(Category::Negative), negative, "{}", lex.name);
            assert_eq!(lex.category_terms(Category::Positive), positive, "{}", lex.name);
        }
        assert_eq!(mwn.category_terms(Category::Neutral), pool_terms(v, &[Pool::Neutral]));
        let bias = parse_word_lexicon(&c.lexicons[&LexiconName::Bias], WordFormat::Bias).unwrap();
        assert_eq!(bias.category_terms(Category::Bias), pool_terms(v, &[Pool::Bias]));
    }

    #[test]
    fn every_article_mentions_its_topic_once() {
        let c = generate(&small(4, 1.0));
        let tok = crate::text::Tokenizer::plain();
        let topics: HashSet<&str> = c.words.iter().map(|w| w.term.as_str()).collect();
        for a in &c.articles {
            let hits: Vec<String> = a.body_tokens(&tok).into_iter().filter(|t| topics.contains(t.as_str())).collect();
            assert_eq!(hits.len(), 1, "{}", a.body);
            assert!(a.title.starts_with(&hits[0]));
        }
        assert_eq!(c.articles.len(), 3 * 16 * 10);
        assert!(c.planted_duplicates > 0);
    }

    #[test]
    fn planted_duplicates_are_removed_by_ingest() {
        let c = generate(&small(5, 0.0));
        let topics: Vec<String> = c.words.iter().map(|w| w.term.clone()).collect();
        let report = crate::corpus::build_corpus(&c.articles, &topics, &Default::default()).unwrap();
        let removed: usize = report.buckets.iter().map(|b| b.duplicates_removed).sum();
        assert_eq!(removed, c.planted_duplicates);
        assert_eq!(report.super_articles.len(), 3 * 16);
    }
}
