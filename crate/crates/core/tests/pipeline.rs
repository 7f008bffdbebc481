//! In-memory pipeline over synthetic corpora: ingest, score, compare, classify.

use std::collections::{BTreeMap, BTreeSet};

use newsframe::annotation::{label_map, Klass};
use newsframe::classifier::{
    build_feature_matrix, default_columns, error_report, score_topics, select_features, train_logistic,
    training_accuracy, SolverOptions,
};
use newsframe::corpus::{build_corpus, IngestOptions};
use newsframe::lexicons::{parse_synset_lexicon, parse_word_lexicon, LexiconName, SynsetFormat, WordFormat};
use newsframe::scoring::{default_roster, score_corpus, FeatureId};
use newsframe::stats::{compare_all, Direction, GroupComparison, TestKind, DEFAULT_ALPHA};
use newsframe::synth::{generate, SynthConfig};

fn run(config: &SynthConfig) -> (Vec<GroupComparison>, newsframe::synth::SynthCorpus, Vec<newsframe::scoring::ProportionRecord>) {
    let corpus = generate(config);
    let topics: Vec<String> = corpus.words.iter().map(|w| w.term.clone()).collect();
    let report = build_corpus(&corpus.articles, &topics, &IngestOptions::default()).unwrap();
    let lex = &corpus.lexicons;
    let lexicons = BTreeMap::from([
        (LexiconName::Anew, parse_word_lexicon(&lex[&LexiconName::Anew], WordFormat::Anew).unwrap()),
        (LexiconName::Geninq, parse_word_lexicon(&lex[&LexiconName::Geninq], WordFormat::Geninq).unwrap()),
        (LexiconName::Bias, parse_word_lexicon(&lex[&LexiconName::Bias], WordFormat::Bias).unwrap()),
        (
            LexiconName::Micrownop,
            parse_synset_lexicon(&lex[&LexiconName::Micrownop], SynsetFormat::Micrownop, 0.0).unwrap(),
        ),
        (
            LexiconName::Sentiwordnet,
            parse_synset_lexicon(&lex[&LexiconName::Sentiwordnet], SynsetFormat::Sentiwordnet, 0.25).unwrap(),
        ),
    ]);
    let scored = score_corpus(&report.super_articles, &lexicons, &default_roster());
    assert!(scored.warnings.is_empty(), "{:?}", scored.warnings);
    let labels = label_map(&corpus.words);
    let (cmp, warnings) = compare_all(&scored.records, &labels, DEFAULT_ALPHA, TestKind::MannWhitney);
    assert!(warnings.is_empty(), "{warnings:?}");
    (cmp, corpus, scored.records)
}

#[test]
fn planted_directions_and_classifier_separation() {
    let config = SynthConfig {
        articles_per_topic: 40,
        ..SynthConfig::default()
    };
    let (cmp, corpus, records) = run(&config);
    let expect = |feature: &str, dir: Direction| {
        let f: FeatureId = feature.parse().unwrap();
        let rows: Vec<&GroupComparison> = cmp.iter().filter(|c| c.feature_id == f).collect();
        assert_eq!(rows.len(), 3);
        for c in rows {
            assert!(c.significant && c.direction == dir, "{feature} in {}: {c:?}", c.source);
        }
    };
    for f in ["anew:negative", "geninq:negative", "micrownop:negative", "sentiwordnet:negative", "bias:bias"] {
        expect(f, Direction::HigherInControversial);
    }
    for f in ["anew:strong", "micrownop:strong", "sentiwordnet:strong"] {
        expect(f, Direction::HigherInNoncontroversial);
    }

    let topics: Vec<String> = corpus.words.iter().map(|w| w.term.clone()).collect();
    let sources: BTreeSet<String> = config.sources.iter().cloned().collect();
    let (matrix, _) = build_feature_matrix(&records, &topics, &default_columns(&sources, &default_roster())).unwrap();
    assert_eq!(matrix.columns.len(), 39);
    let labels = label_map(&corpus.words);
    let opts = SolverOptions::default();
    let selected = select_features(&matrix, &labels, 5, &opts).unwrap();
    let (model, _) = train_logistic(&matrix, &selected, &labels, &opts).unwrap();
    let report = error_report(&score_topics(&model, &matrix).unwrap(), &corpus.words);
    let mean = |k: Klass| {
        let v: Vec<f64> = report.iter().filter(|r| r.klass == k).map(|r| r.classifier_score).collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    assert!(mean(Klass::C3) - mean(Klass::C0) >= 0.3);
    assert!(training_accuracy(&report).unwrap() >= 0.9);
}

#[test]
fn null_corpus_rarely_rejects() {
    let mut significant = 0;
    let mut total = 0;
    for seed in 0..5 {
        let config = SynthConfig {
            seed,
            effect: 0.0,
            articles_per_topic: 8,
            ..SynthConfig::default()
        };
        let (cmp, _, _) = run(&config);
        total += cmp.len();
        significant += cmp.iter().filter(|c| c.significant).count();
    }
    assert_eq!(total, 5 * 39);
    // About two expected at alpha 0.01.
    assert!(significant <= 8, "{significant} of {total}");
}
