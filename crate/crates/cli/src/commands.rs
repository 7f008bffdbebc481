//! One function per subcommand. Each reads its inputs, runs the library
//! code, writes outputs plus a run manifest, and prints warnings to stderr.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use newsframe::annotation::{self, label_map, Klass, TopicWord};
use newsframe::classifier::{self, SolverOptions, DEFAULT_K};
use newsframe::corpus::{self, build_corpus, read_store, write_store, IngestOptions, DEFAULT_DEDUP_THRESHOLD};
use newsframe::lexicons::{convert::convert_native, convert::NativeFormat, load_lexicon_dir, Lexicon, LexiconName, Margins};
use newsframe::scoring::{
    default_roster, parse_roster, read_proportions_csv, score_corpus, top_terms as top_terms_of, write_proportions_csv,
    FeatureId, ProportionRecord,
};
use newsframe::stats::{
    compare_all, rank_sources, summarize_groups, Direction, GroupComparison, RankMetric, TestKind, DEFAULT_ALPHA,
};
use newsframe::synth::{self, SynthConfig};
use newsframe::text::Tokenizer;

use crate::config::{check_alpha, existing, required, FileConfig};
use crate::manifest::Manifest;
use crate::{AggregateArgs, AnalyzeArgs, ClassifyArgs, ConvertArgs, IngestArgs, LexiconArgs, RankArgs, ScoreArgs, SynthArgs, TopTermsArgs};

pub const COMPARISONS_FILE: &str = "comparisons.csv";
pub const SUMMARIES_FILE: &str = "summaries.csv";
pub const MODEL_FILE: &str = "model.txt";
pub const SCORES_FILE: &str = "scores.csv";

fn warn(msg: impl AsRef<str>) {
    eprintln!("warning: {}", msg.as_ref());
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?))
}

/// Non-comment, non-blank lines; only the first tab-separated column is kept.
fn read_list(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut seen = HashSet::new();
    Ok(text
        .lines()
        .map(|l| l.split('\t').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .filter(|l| seen.insert(l.to_string()))
        .map(str::to_string)
        .collect())
}

fn load_words(flag: &Option<PathBuf>, file: &FileConfig) -> Result<(PathBuf, Vec<TopicWord>)> {
    let path = existing(required(flag, &file.words, "words file (--words)")?, "words file")?;
    let words = annotation::load_words(&path).with_context(|| format!("loading {}", path.display()))?;
    Ok((path, words))
}

fn load_proportions(path: &Path) -> Result<Vec<ProportionRecord>> {
    read_proportions_csv(open(path)?).with_context(|| format!("reading {}", path.display()))
}

fn roster(flag: &Option<String>, file: &FileConfig) -> Result<Vec<FeatureId>> {
    match flag.as_ref().or(file.roster.as_ref()) {
        None => Ok(default_roster()),
        Some(s) => {
            let r = parse_roster(s)?;
            if r.is_empty() {
                bail!("feature roster is empty");
            }
            Ok(r)
        }
    }
}

#[derive(Serialize)]
struct LexiconSettings {
    micrownop_margin: f64,
    sentiwordnet_margin: f64,
}

fn load_lexicons(args: &LexiconArgs, file: &FileConfig) -> Result<(PathBuf, BTreeMap<LexiconName, Lexicon>, LexiconSettings)> {
    let dir = existing(required(&args.lexicons, &file.lexicons, "lexicon directory (--lexicons)")?, "lexicon directory")?;
    let defaults = Margins::default();
    let margins = Margins {
        micrownop: args.micrownop_margin.or(file.micrownop_margin).unwrap_or(defaults.micrownop),
        sentiwordnet: args.sentiwordnet_margin.or(file.sentiwordnet_margin).unwrap_or(defaults.sentiwordnet),
    };
    let (lexicons, missing) = load_lexicon_dir(&dir, margins).with_context(|| format!("loading lexicons from {}", dir.display()))?;
    for name in missing {
        warn(format!("lexicon {} not found in {}", name.file_name(), dir.display()));
    }
    let settings = LexiconSettings {
        micrownop_margin: margins.micrownop,
        sentiwordnet_margin: margins.sentiwordnet,
    };
    Ok((dir, lexicons, settings))
}

#[derive(Serialize)]
struct IngestSettings {
    dedup_threshold: f64,
    drop_english_stopwords: bool,
    drop_news_stopwords: bool,
    source_registry: Option<Vec<String>>,
}

pub fn ingest(args: &IngestArgs, file: &FileConfig) -> Result<()> {
    let articles_path = existing(args.articles.clone(), "articles file")?;
    let topics_path = existing(required(&args.topics, &file.words, "topic list (--topics)")?, "topic list")?;
    let out = required(&args.out, &file.corpus, "output corpus directory (--out)")?;
    if out.exists() && fs::read_dir(&out)?.next().is_some() {
        bail!("output directory {} is not empty", out.display());
    }
    let threshold = args.dedup_threshold.or(file.dedup_threshold).unwrap_or(DEFAULT_DEDUP_THRESHOLD);
    let registry = match &args.sources {
        Some(p) => Some(read_list(&existing(p.clone(), "source list")?)?),
        None => None,
    };

    let parsed = corpus::parse_articles(open(&articles_path)?)?;
    if parsed.skipped > 0 {
        warn(format!(
            "skipped {} malformed or repeated article lines (first at line {})",
            parsed.skipped, parsed.skipped_lines[0]
        ));
    }
    let topics = read_list(&topics_path)?;
    let options = IngestOptions {
        dedup_threshold: threshold,
        tokenizer: Tokenizer::new(args.drop_english_stopwords, true),
        source_registry: registry.as_ref().map(|r| r.iter().cloned().collect()),
    };
    let report = build_corpus(&parsed.articles, &topics, &options)?;
    for (what, n) in [
        ("had an empty body", report.empty_bodies),
        ("came from unregistered sources", report.unregistered_source),
        ("had unusable source names", report.invalid_source),
        ("mentioned no topic", report.no_topic),
    ] {
        if n > 0 {
            warn(format!("{n} articles {what}"));
        }
    }
    if report.super_articles.is_empty() {
        warn("no super-articles were built; the store is empty");
    }
    write_store(&out, &report.super_articles)?;

    let mut stdout = io::stdout().lock();
    writeln!(stdout, "source\ttopic\tmatched\tduplicates_removed\tarticles\ttokens")?;
    for b in &report.buckets {
        writeln!(
            stdout,
            "{}\t{}\t{}\t{}\t{}\t{}",
            b.source, b.topic, b.matched, b.duplicates_removed, b.article_count, b.total_tokens
        )?;
    }
    let settings = IngestSettings {
        dedup_threshold: threshold,
        drop_english_stopwords: options.tokenizer.drop_english_stopwords,
        drop_news_stopwords: options.tokenizer.drop_news_stopwords,
        source_registry: registry,
    };
    Manifest::new("ingest", &[&articles_path, &topics_path], &settings)?.write_for(&out, &[&out])?;
    Ok(())
}

pub fn convert_lexicon(args: &ConvertArgs) -> Result<()> {
    let format: NativeFormat = args.format.parse()?;
    let input = existing(args.input.clone(), "input lexicon")?;
    let text = fs::read_to_string(&input).with_context(|| format!("reading {}", input.display()))?;
    let converted = convert_native(&text, format).with_context(|| format!("converting {}", input.display()))?;
    let mut w = create(&args.output)?;
    w.write_all(converted.as_bytes())?;
    w.flush()?;
    #[derive(Serialize)]
    struct Settings<'a> {
        format: &'a str,
    }
    Manifest::new("convert-lexicon", &[&input], &Settings { format: &args.format })?.write_for(&args.output, &[&args.output])?;
    Ok(())
}

pub fn score(args: &ScoreArgs, file: &FileConfig) -> Result<()> {
    let corpus_dir = existing(required(&args.corpus, &file.corpus, "corpus directory (--corpus)")?, "corpus directory")?;
    let (lex_dir, lexicons, lex_settings) = load_lexicons(&args.lexicon, file)?;
    let roster = roster(&args.roster, file)?;
    let super_articles = read_store(&corpus_dir).with_context(|| format!("reading {}", corpus_dir.display()))?;
    let out = score_corpus(&super_articles, &lexicons, &roster);
    for w in &out.warnings {
        warn(w);
    }
    let mut w = create(&args.out)?;
    write_proportions_csv(&mut w, &out.records)?;
    w.flush()?;
    #[derive(Serialize)]
    struct Settings {
        roster: Vec<String>,
        lexicons: LexiconSettings,
    }
    let settings = Settings {
        roster: roster.iter().map(|f| f.to_string()).collect(),
        lexicons: lex_settings,
    };
    Manifest::new("score", &[&corpus_dir, &lex_dir], &settings)?.write_for(&args.out, &[&args.out])?;
    Ok(())
}

/// One row of comparisons.csv.
#[derive(Debug, Serialize, Deserialize)]
struct ComparisonRow {
    source: String,
    feature_id: FeatureId,
    n_c: usize,
    n_n: usize,
    u: f64,
    p: f64,
    direction: String,
    significant: bool,
}

pub fn analyze(args: &AnalyzeArgs, file: &FileConfig) -> Result<()> {
    let proportions = existing(args.proportions.clone(), "proportions file")?;
    let (words_path, words) = load_words(&args.words, file)?;
    let alpha = check_alpha(args.alpha.or(file.alpha).unwrap_or(DEFAULT_ALPHA))?;
    let test: TestKind = args.test.parse().map_err(anyhow::Error::msg)?;
    let records = load_proportions(&proportions)?;
    let labels = label_map(&words);

    let (comparisons, warnings) = compare_all(&records, &labels, alpha, test);
    for w in &warnings {
        warn(w);
    }
    fs::create_dir_all(&args.out_dir)?;
    let cmp_path = args.out_dir.join(COMPARISONS_FILE);
    let mut wtr = csv::Writer::from_writer(create(&cmp_path)?);
    for c in &comparisons {
        wtr.serialize(ComparisonRow {
            source: c.source.clone(),
            feature_id: c.feature_id,
            n_c: c.n_controversial,
            n_n: c.n_noncontroversial,
            u: c.u_statistic,
            p: c.p_value,
            direction: c.direction.as_str().to_string(),
            significant: c.significant,
        })?;
    }
    if comparisons.is_empty() {
        wtr.write_record(["source", "feature_id", "n_c", "n_n", "u", "p", "direction", "significant"])?;
    }
    wtr.flush()?;

    let sum_path = args.out_dir.join(SUMMARIES_FILE);
    let mut wtr = csv::Writer::from_writer(create(&sum_path)?);
    wtr.write_record(["source", "group", "feature_id", "n", "min", "q1", "median", "q3", "max", "outliers"])?;
    for g in summarize_groups(&records, &labels) {
        let s = &g.summary;
        let outliers: Vec<String> = s.outliers.iter().map(|x| x.to_string()).collect();
        wtr.write_record([
            g.source.clone(),
            g.group.as_str().to_string(),
            g.feature_id.to_string(),
            s.n.to_string(),
            s.min.to_string(),
            s.q1.to_string(),
            s.median.to_string(),
            s.q3.to_string(),
            s.max.to_string(),
            outliers.join(";"),
        ])?;
    }
    wtr.flush()?;

    let significant = comparisons.iter().filter(|c| c.significant).count();
    println!("{significant} of {} comparisons significant at alpha {alpha}", comparisons.len());
    #[derive(Serialize)]
    struct Settings<'a> {
        alpha: f64,
        test: &'a str,
    }
    Manifest::new("analyze", &[&proportions, &words_path], &Settings { alpha, test: &args.test })?
        .write_for(&args.out_dir, &[&cmp_path, &sum_path])?;
    Ok(())
}

fn read_comparisons(path: &Path) -> Result<Vec<GroupComparison>> {
    let mut rdr = csv::Reader::from_reader(open(path)?);
    let mut out = Vec::new();
    for row in rdr.deserialize::<ComparisonRow>() {
        let r = row.with_context(|| format!("reading {}", path.display()))?;
        out.push(GroupComparison {
            source: r.source,
            feature_id: r.feature_id,
            n_controversial: r.n_c,
            n_noncontroversial: r.n_n,
            u_statistic: r.u,
            p_value: r.p,
            direction: r.direction.parse::<Direction>().map_err(anyhow::Error::msg)?,
            significant: r.significant,
            median_difference: f64::NAN,
        });
    }
    Ok(out)
}

pub fn rank(args: &RankArgs, file: &FileConfig) -> Result<()> {
    let feature: FeatureId = args.feature.parse()?;
    let metric: RankMetric = args.metric.parse().map_err(anyhow::Error::msg)?;
    let mut inputs: Vec<PathBuf> = Vec::new();
    let comparisons = match (&args.comparisons, &args.proportions) {
        (Some(path), None) => {
            if metric != RankMetric::RankBiserial {
                bail!("comparisons.csv carries no medians; use --proportions with --words for {}", args.metric);
            }
            inputs.push(existing(path.clone(), "comparisons file")?);
            read_comparisons(path)?
        }
        (None, Some(path)) => {
            let proportions = existing(path.clone(), "proportions file")?;
            let (words_path, words) = load_words(&args.words, file)?;
            let alpha = check_alpha(file.alpha.unwrap_or(DEFAULT_ALPHA))?;
            let (cmp, warnings) = compare_all(&load_proportions(&proportions)?, &label_map(&words), alpha, TestKind::MannWhitney);
            for w in warnings {
                warn(w);
            }
            inputs.push(proportions);
            inputs.push(words_path);
            cmp
        }
        _ => bail!("pass exactly one of --comparisons or --proportions"),
    };
    let registry: Vec<String> = match &args.sources {
        Some(p) => {
            inputs.push(existing(p.clone(), "source list")?);
            read_list(p)?
        }
        None => comparisons
            .iter()
            .filter(|c| c.feature_id == feature)
            .map(|c| c.source.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect(),
    };
    if registry.is_empty() {
        bail!("no comparisons for feature {feature}");
    }
    let ranked = rank_sources(&comparisons, feature, &registry, metric)?;
    let mut wtr = csv::Writer::from_writer(create(&args.out)?);
    wtr.write_record(["rank", "source", "effect"])?;
    for (i, r) in ranked.iter().enumerate() {
        wtr.write_record([(i + 1).to_string(), r.source.clone(), r.effect.to_string()])?;
    }
    wtr.flush()?;
    #[derive(Serialize)]
    struct Settings<'a> {
        feature: String,
        metric: &'a str,
        sources: &'a [String],
    }
    let input_refs: Vec<&Path> = inputs.iter().map(PathBuf::as_path).collect();
    let settings = Settings {
        feature: feature.to_string(),
        metric: &args.metric,
        sources: &registry,
    };
    Manifest::new("rank", &input_refs, &settings)?.write_for(&args.out, &[&args.out])?;
    Ok(())
}

pub fn classify(args: &ClassifyArgs, file: &FileConfig) -> Result<()> {
    let proportions = existing(args.proportions.clone(), "proportions file")?;
    let (words_path, words) = load_words(&args.words, file)?;
    let k = args.k.or(file.k).unwrap_or(DEFAULT_K);
    if k == 0 {
        bail!("k must be at least 1");
    }
    let defaults = SolverOptions::default();
    let opts = SolverOptions {
        lambda: args.lambda.or(file.lambda).unwrap_or(defaults.lambda),
        tolerance: args.tolerance.or(file.tolerance).unwrap_or(defaults.tolerance),
        max_iterations: args.max_iterations.or(file.max_iterations).unwrap_or(defaults.max_iterations),
    };
    let roster = roster(&args.roster, file)?;
    let records = load_proportions(&proportions)?;

    let with_records: HashSet<&str> = records.iter().map(|r| r.topic.as_str()).collect();
    let topics: Vec<String> = words
        .iter()
        .filter(|w| with_records.contains(w.term.as_str()))
        .map(|w| w.term.clone())
        .collect();
    if topics.len() < words.len() {
        warn(format!("{} topics have no proportions and are not scored", words.len() - topics.len()));
    }
    let sources: BTreeSet<String> = records.iter().map(|r| r.source.clone()).collect();
    let columns = classifier::default_columns(&sources, &roster);
    let (matrix, warnings) = classifier::build_feature_matrix(&records, &topics, &columns)?;
    for w in warnings {
        warn(w);
    }
    let labels: BTreeMap<String, Klass> = label_map(&words);
    let selected = classifier::select_features(&matrix, &labels, k, &opts)?;
    let (model, _) = classifier::train_logistic(&matrix, &selected, &labels, &opts)?;
    if !model.meta.converged {
        warn(format!(
            "training stopped after {} iterations without reaching gradient tolerance {}",
            model.meta.iterations, opts.tolerance
        ));
    }
    let scores = classifier::score_topics(&model, &matrix)?;
    let report = classifier::error_report(&scores, &words);

    fs::create_dir_all(&args.out_dir)?;
    let model_path = args.out_dir.join(MODEL_FILE);
    let mut w = create(&model_path)?;
    model.write(&mut w)?;
    w.flush()?;
    let scores_path = args.out_dir.join(SCORES_FILE);
    let mut w = create(&scores_path)?;
    classifier::write_scores_csv(&mut w, &report)?;
    w.flush()?;

    let selected_names: Vec<String> = model.columns.iter().map(|c| c.to_string()).collect();
    println!("selected: {}", selected_names.join(", "));
    if let Some(acc) = classifier::training_accuracy(&report) {
        println!("training accuracy: {acc:.4}");
    }
    #[derive(Serialize)]
    struct Settings {
        k: usize,
        lambda: f64,
        tolerance: f64,
        max_iterations: usize,
        roster: Vec<String>,
    }
    let settings = Settings {
        k,
        lambda: opts.lambda,
        tolerance: opts.tolerance,
        max_iterations: opts.max_iterations,
        roster: roster.iter().map(|f| f.to_string()).collect(),
    };
    Manifest::new("classify", &[&proportions, &words_path], &settings)?
        .write_for(&args.out_dir, &[&model_path, &scores_path])?;
    Ok(())
}

pub fn top_terms(args: &TopTermsArgs, file: &FileConfig) -> Result<()> {
    let corpus_dir = existing(required(&args.corpus, &file.corpus, "corpus directory (--corpus)")?, "corpus directory")?;
    let (_, lexicons, _) = load_lexicons(&args.lexicon, file)?;
    let feature: FeatureId = args.feature.parse()?;
    let lex = lexicons
        .get(&feature.lexicon)
        .with_context(|| format!("lexicon {} is not loaded", feature.lexicon))?;
    let terms: HashSet<String> = lex.category_terms(feature.category).into_iter().collect();
    let sa = read_store(&corpus_dir)?
        .into_iter()
        .find(|sa| sa.source == args.source && sa.topic == args.topic)
        .with_context(|| format!("no super-article for ({}, {})", args.source, args.topic))?;
    let hits = top_terms_of(&sa, &terms, args.k)?;
    let mut text = String::from("term\tcount\n");
    for (t, c) in hits {
        text.push_str(&format!("{t}\t{c}\n"));
    }
    match &args.out {
        Some(p) => {
            let mut w = create(p)?;
            w.write_all(text.as_bytes())?;
            w.flush()?;
        }
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

pub fn aggregate_labels(args: &AggregateArgs, file: &FileConfig) -> Result<()> {
    let raw_path = existing(args.raw.clone(), "raw labels file")?;
    let gold_path = existing(args.gold.clone(), "gold file")?;
    let min_agreement = args
        .min_agreement
        .or(file.min_agreement)
        .unwrap_or(annotation::DEFAULT_MIN_AGREEMENT);
    let raw = annotation::read_raw_labels(open(&raw_path)?)?;
    let gold = annotation::read_gold(open(&gold_path)?)?;
    let gate = annotation::gate_annotators(&raw, &gold, min_agreement);
    for w in &gate.warnings {
        warn(w);
    }
    let agg = annotation::aggregate(&raw, &gate.trusted);
    for w in &agg.warnings {
        warn(w);
    }
    let words: Vec<TopicWord> = agg.words.iter().map(|w| w.to_topic_word()).collect();
    let mut w = create(&args.out)?;
    annotation::write_words(&mut w, &words)?;
    w.flush()?;
    println!(
        "{} trusted annotators, {} words kept ({} C1 excluded from analysis)",
        gate.trusted.len(),
        words.len(),
        agg.words.iter().filter(|w| w.excluded).count()
    );
    #[derive(Serialize)]
    struct Settings {
        min_agreement: f64,
    }
    Manifest::new("aggregate-labels", &[&raw_path, &gold_path], &Settings { min_agreement })?
        .write_for(&args.out, &[&args.out])?;
    Ok(())
}

pub fn synth(args: &SynthArgs, file: &FileConfig) -> Result<()> {
    let seed = args.seed.or(file.seed).unwrap_or(synth::DEFAULT_SEED);
    let mut inputs = Vec::new();
    let words = match args.words.as_ref() {
        Some(p) => {
            let p = existing(p.clone(), "words file")?;
            let w = annotation::load_words(&p)?;
            inputs.push(p);
            w
        }
        None => annotation::load_reference_words()?,
    };
    let sources: Vec<String> = match &args.sources {
        Some(s) => s.split(',').map(str::trim).filter(|s| !s.is_empty()).map(str::to_string).collect(),
        None => synth::DEFAULT_SOURCES.iter().map(|s| s.to_string()).collect(),
    };
    for s in &sources {
        corpus::validate_source_name(s)?;
    }
    if !(0.0..=1.0).contains(&args.duplicate_rate) {
        bail!("duplicate rate must lie in [0, 1]");
    }
    if !args.effect.is_finite() || args.effect < 0.0 {
        bail!("effect must be a non-negative number");
    }
    let config = SynthConfig {
        seed,
        effect: args.effect,
        sources,
        words,
        articles_per_topic: args.articles_per_topic,
        tokens_per_article: args.tokens_per_article,
        duplicate_rate: args.duplicate_rate,
    };
    let corpus = synth::generate(&config);
    synth::write_corpus(&args.out_dir, &corpus).with_context(|| format!("writing {}", args.out_dir.display()))?;
    println!(
        "{} articles ({} planted near-duplicates) for {} topics",
        corpus.articles.len(),
        corpus.planted_duplicates,
        corpus.words.len()
    );
    #[derive(Serialize)]
    struct Settings<'a> {
        seed: u64,
        effect: f64,
        sources: &'a [String],
        articles_per_topic: usize,
        tokens_per_article: usize,
        duplicate_rate: f64,
    }
    let settings = Settings {
        seed,
        effect: config.effect,
        sources: &config.sources,
        articles_per_topic: config.articles_per_topic,
        tokens_per_article: config.tokens_per_article,
        duplicate_rate: config.duplicate_rate,
    };
    let input_refs: Vec<&Path> = inputs.iter().map(PathBuf::as_path).collect();
    Manifest::new("synth", &input_refs, &settings)?.write_for(&args.out_dir, &[&args.out_dir])?;
    Ok(())
}
