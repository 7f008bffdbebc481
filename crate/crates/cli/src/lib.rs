//! Command-line front end for the newsframe pipeline:
//! ingest, score, analyze, rank, classify, plus lexicon conversion, label
//! aggregation and synthetic corpora.

pub mod commands;
pub mod config;
pub mod manifest;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "newsframe", version, about = "Measure emotional and biased vocabulary around controversial news topics")]
pub struct Cli {
    /// TOML file supplying defaults for any flag below; flags win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Deduplicate articles and build per-(source, topic) super-articles.
    Ingest(IngestArgs),
    /// Convert an upstream lexicon distribution to the normalized TSV.
    ConvertLexicon(ConvertArgs),
    /// Compute lexicon proportions for every super-article.
    Score(ScoreArgs),
    /// Compare controversial and non-controversial topics per source and feature.
    Analyze(AnalyzeArgs),
    /// Order sources by effect size for one feature.
    Rank(RankArgs),
    /// Select features, train the logistic model and score topics.
    Classify(ClassifyArgs),
    /// Most frequent lexicon terms in one super-article.
    TopTerms(TopTermsArgs),
    /// Aggregate crowdsourced labels into a words file.
    AggregateLabels(AggregateArgs),
    /// Generate a synthetic corpus with a planted signal.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// JSON-lines articles: id, source, published_at, title, body.
    #[arg(long)]
    pub articles: PathBuf,
    /// Topic list: a words TSV or one term per line. Defaults to `words` from the config.
    #[arg(long)]
    pub topics: Option<PathBuf>,
    /// Output corpus directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Shingle Jaccard similarity at or above which an article is a near-duplicate.
    #[arg(long)]
    pub dedup_threshold: Option<f64>,
    /// Only keep sources listed in this file (one per line).
    #[arg(long)]
    pub sources: Option<PathBuf>,
    /// Also drop common English stopwords from token counts.
    #[arg(long)]
    pub drop_english_stopwords: bool,
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    /// anew-native, geninq-native, bias-native, sentiwordnet-native or micrownop-native.
    #[arg(long)]
    pub format: String,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct LexiconArgs {
    /// Directory holding anew.tsv, geninq.tsv, micrownop.tsv, sentiwordnet.tsv, bias.tsv.
    #[arg(long)]
    pub lexicons: Option<PathBuf>,
    /// Minimum |pos - neg| for a MicroWNOp lemma to be polar.
    #[arg(long)]
    pub micrownop_margin: Option<f64>,
    /// Minimum |pos - neg| for a SentiWordNet lemma to be polar.
    #[arg(long)]
    pub sentiwordnet_margin: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Corpus directory written by `ingest`.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[command(flatten)]
    pub lexicon: LexiconArgs,
    /// Comma-separated `lexicon:category` features; defaults to the 13-feature roster.
    #[arg(long)]
    pub roster: Option<String>,
    /// Output proportions CSV.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub proportions: PathBuf,
    /// Words TSV with topic classes.
    #[arg(long)]
    pub words: Option<PathBuf>,
    /// Significance level.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// mann-whitney or welch.
    #[arg(long, default_value = "mann-whitney")]
    pub test: String,
    /// Directory for comparisons.csv and summaries.csv.
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct RankArgs {
    /// Feature to rank by, e.g. `bias:bias`.
    #[arg(long)]
    pub feature: String,
    /// comparisons.csv from `analyze` (rank-biserial only).
    #[arg(long, conflicts_with = "proportions")]
    pub comparisons: Option<PathBuf>,
    /// Proportions CSV; needs `--words`.
    #[arg(long)]
    pub proportions: Option<PathBuf>,
    #[arg(long)]
    pub words: Option<PathBuf>,
    /// rank-biserial or median-difference.
    #[arg(long, default_value = "rank-biserial")]
    pub metric: String,
    /// Sources to rank (one per line); defaults to every source with a comparison.
    #[arg(long)]
    pub sources: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub proportions: PathBuf,
    #[arg(long)]
    pub words: Option<PathBuf>,
    /// Number of features to select.
    #[arg(long)]
    pub k: Option<usize>,
    /// Comma-separated features used to build columns; defaults to the 13-feature roster.
    #[arg(long)]
    pub roster: Option<String>,
    /// L2 penalty on the weights.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Gradient infinity-norm stopping tolerance.
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long)]
    pub max_iterations: Option<usize>,
    /// Directory for model.txt and scores.csv.
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct TopTermsArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[command(flatten)]
    pub lexicon: LexiconArgs,
    #[arg(long)]
    pub source: String,
    #[arg(long)]
    pub topic: String,
    /// Feature whose terms are counted, e.g. `anew:negative`.
    #[arg(long)]
    pub feature: String,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// Write a TSV here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AggregateArgs {
    /// CSV with columns annotator_id,term,label.
    #[arg(long)]
    pub raw: PathBuf,
    /// CSV with columns term,binary.
    #[arg(long)]
    pub gold: PathBuf,
    /// Minimum binary agreement with the gold answers for a trusted annotator.
    #[arg(long)]
    pub min_agreement: Option<f64>,
    /// Output words TSV.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Multiplier on the planted effect; 0 gives a null corpus.
    #[arg(long, default_value_t = 1.0)]
    pub effect: f64,
    #[arg(long, default_value_t = 100)]
    pub articles_per_topic: usize,
    #[arg(long, default_value_t = 60)]
    pub tokens_per_article: usize,
    #[arg(long, default_value_t = 0.05)]
    pub duplicate_rate: f64,
    /// Comma-separated source names.
    #[arg(long)]
    pub sources: Option<String>,
    /// Topic words TSV; defaults to the bundled reference list.
    #[arg(long)]
    pub words: Option<PathBuf>,
}

/// Runs one parsed command line. Warnings go to standard error.
pub fn run(cli: Cli) -> anyhow::Result<()> {
    let file = match &cli.config {
        Some(p) => config::FileConfig::load(p)?,
        None => config::FileConfig::default(),
    };
    match cli.command {
        Command::Ingest(a) => commands::ingest(&a, &file),
        Command::ConvertLexicon(a) => commands::convert_lexicon(&a),
        Command::Score(a) => commands::score(&a, &file),
        Command::Analyze(a) => commands::analyze(&a, &file),
        Command::Rank(a) => commands::rank(&a, &file),
        Command::Classify(a) => commands::classify(&a, &file),
        Command::TopTerms(a) => commands::top_terms(&a, &file),
        Command::AggregateLabels(a) => commands::aggregate_labels(&a, &file),
        Command::Synth(a) => commands::synth(&a, &file),
    }
}
