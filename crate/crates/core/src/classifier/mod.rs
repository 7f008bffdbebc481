//! Topic controversy scores from per-source lexicon proportions: a topic by
//! (source, feature) matrix, greedy forward feature selection, and a logistic
//! regression trained on the C3 and C0 topics.

mod logistic;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::{self, Write as _};
use std::io::Write;

use rayon::prelude::*;
use thiserror::Error;

use crate::annotation::{Klass, TopicWord};
use crate::scoring::{FeatureId, ProportionRecord};

pub use logistic::{gradient_descent, newton, sigmoid, Fit, Objective, SolverOptions, LINEAR_CLAMP};

pub const DEFAULT_K: usize = 5;
pub const CV_FOLDS: usize = 5;
const MODEL_FORMAT: &str = "newsframe-logistic-1";

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("no usable feature columns")]
    EmptyMatrix,
    #[error("training labels contain a single class")]
    DegenerateLabels,
    #[error("k must be at least 1")]
    ZeroK,
    #[error("need at least 2 examples of each class, found {positives} C3 and {negatives} C0")]
    TooFewExamples { positives: usize, negatives: usize },
    #[error("non-finite value in column {0}")]
    NumericalInput(String),
    #[error("column {0} is not in the matrix")]
    ColumnMissing(String),
    #[error("column index {0} out of range")]
    BadIndex(usize),
    #[error("model file line {line}: {reason}")]
    BadModel { line: usize, reason: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

/// One matrix column: a feature measured in one source.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Column {
    pub source: String,
    pub feature: FeatureId,
}

impl fmt::Display for Column {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.source, self.feature)
    }
}

impl std::str::FromStr for Column {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (source, feature) = s.split_once('/').ok_or_else(|| format!("bad column {s:?}"))?;
        let feature = feature.parse().map_err(|e| format!("{e}"))?;
        Ok(Column {
            source: source.to_string(),
            feature,
        })
    }
}

/// Every (source, feature) pair, sources outermost.
pub fn default_columns(sources: &BTreeSet<String>, roster: &[FeatureId]) -> Vec<Column> {
    sources
        .iter()
        .flat_map(|s| {
            roster.iter().map(move |&feature| Column {
                source: s.clone(),
                feature,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub topics: Vec<String>,
    pub columns: Vec<Column>,
    /// Row-major, one row per topic; missing cells hold the column mean.
    pub values: Vec<Vec<f64>>,
    /// True where no record existed and the value was imputed.
    pub missing: Vec<Vec<bool>>,
}

impl FeatureMatrix {
    pub fn column_index(&self, column: &Column) -> Option<usize> {
        self.columns.iter().position(|c| c == column)
    }

    fn column_values(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().map(move |row| row[j])
    }
}

/// Pivots proportion records into a topic by column grid.
pub fn build_feature_matrix(
    records: &[ProportionRecord],
    topics: &[String],
    columns: &[Column],
) -> Result<(FeatureMatrix, Vec<String>), ClassifierError> {
    let topic_idx: HashMap<&str, usize> = topics.iter().enumerate().map(|(i, t)| (t.as_str(), i)).collect();
    let col_idx: HashMap<(&str, FeatureId), usize> = columns
        .iter()
        .enumerate()
        .map(|(j, c)| ((c.source.as_str(), c.feature), j))
        .collect();
    let mut cells: Vec<Vec<Option<f64>>> = vec![vec![None; columns.len()]; topics.len()];
    for r in records {
        if let (Some(&i), Some(&j)) = (
            topic_idx.get(r.topic.as_str()),
            col_idx.get(&(r.source.as_str(), r.feature_id)),
        ) {
            cells[i][j].get_or_insert(r.proportion);
        }
    }

    let mut warnings = Vec::new();
    let mut kept = Vec::new();
    let mut means = Vec::new();
    for (j, col) in columns.iter().enumerate() {
        let observed: Vec<f64> = cells.iter().filter_map(|row| row[j]).collect();
        if observed.is_empty() {
            warnings.push(format!("dropping column {col}: no observations"));
            continue;
        }
        kept.push(j);
        means.push(observed.iter().sum::<f64>() / observed.len() as f64);
    }
    if kept.is_empty() {
        return Err(ClassifierError::EmptyMatrix);
    }
    let values = cells
        .iter()
        .map(|row| kept.iter().zip(&means).map(|(&j, m)| row[j].unwrap_or(*m)).collect())
        .collect();
    let missing = cells
        .iter()
        .map(|row| kept.iter().map(|&j| row[j].is_none()).collect())
        .collect();
    Ok((
        FeatureMatrix {
            topics: topics.to_vec(),
            columns: kept.iter().map(|&j| columns[j].clone()).collect(),
            values,
            missing,
        },
        warnings,
    ))
}

/// Rows with a training label (C3 -> 1, C0 -> 0), in topic order.
fn training_rows(matrix: &FeatureMatrix, labels: &BTreeMap<String, Klass>) -> (Vec<usize>, Vec<f64>) {
    matrix
        .topics
        .iter()
        .enumerate()
        .filter_map(|(i, t)| {
            let y = labels.get(t)?.training_label()?;
            Some((i, if y { 1.0 } else { 0.0 }))
        })
        .unzip()
}

/// Mean and population standard deviation; a constant column gets scale 1.
fn standardizer(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let sd = var.sqrt();
    // Treat spreads at rounding-noise level as constant.
    let scale = if sd > 1e-12 * mean.abs().max(1e-300) && sd > 0.0 { sd } else { 1.0 };
    (mean, scale)
}

fn standardized_rows(matrix: &FeatureMatrix, rows: &[usize], cols: &[usize], stats: &[(f64, f64)]) -> Vec<Vec<f64>> {
    rows.iter()
        .map(|&i| cols.iter().zip(stats).map(|(&j, (m, s))| (matrix.values[i][j] - m) / s).collect())
        .collect()
}

/// Pooled cross-validated accuracy (number of correct predictions) of a
/// logistic model on `cols`. Folds stride through the training rows.
fn cv_correct(
    matrix: &FeatureMatrix,
    rows: &[usize],
    targets: &[f64],
    cols: &[usize],
    opts: &SolverOptions,
) -> usize {
    let mut correct = 0;
    for fold in 0..CV_FOLDS {
        let (mut train, mut train_y, mut test, mut test_y) = (vec![], vec![], vec![], vec![]);
        for (pos, (&r, &y)) in rows.iter().zip(targets).enumerate() {
            if pos % CV_FOLDS == fold {
                test.push(r);
                test_y.push(y);
            } else {
                train.push(r);
                train_y.push(y);
            }
        }
        if test.is_empty() || train.is_empty() {
            continue;
        }
        let positives = train_y.iter().filter(|&&y| y == 1.0).count();
        if positives == 0 || positives == train_y.len() {
            let only = train_y[0];
            correct += test_y.iter().filter(|&&y| y == only).count();
            continue;
        }
        let stats: Vec<(f64, f64)> = cols
            .iter()
            .map(|&j| standardizer(train.iter().map(|&i| matrix.values[i][j])))
            .collect();
        let x = standardized_rows(matrix, &train, cols, &stats);
        let fit = newton(&Objective::new(&x, &train_y, opts.lambda), opts);
        let tx = standardized_rows(matrix, &test, cols, &stats);
        for (row, y) in tx.iter().zip(&test_y) {
            let z = fit.params[0] + row.iter().zip(&fit.params[1..]).map(|(a, b)| a * b).sum::<f64>();
            let p = sigmoid(z);
            if (p > 0.5 && *y == 1.0) || (p < 0.5 && *y == 0.0) {
                correct += 1;
            }
        }
    }
    correct
}

fn check_finite(matrix: &FeatureMatrix, cols: &[usize]) -> Result<(), ClassifierError> {
    for &j in cols {
        if matrix.column_values(j).any(|v| !v.is_finite()) {
            return Err(ClassifierError::NumericalInput(matrix.columns[j].to_string()));
        }
    }
    Ok(())
}

/// Greedy forward selection: each step adds the column with the best 5-fold
/// cross-validated accuracy, ties going to the lower index. Returns
/// `min(k, columns)` distinct indices in selection order.
pub fn select_features(
    matrix: &FeatureMatrix,
    labels: &BTreeMap<String, Klass>,
    k: usize,
    opts: &SolverOptions,
) -> Result<Vec<usize>, ClassifierError> {
    if k == 0 {
        return Err(ClassifierError::ZeroK);
    }
    if matrix.columns.is_empty() {
        return Err(ClassifierError::EmptyMatrix);
    }
    let (rows, targets) = training_rows(matrix, labels);
    let positives = targets.iter().filter(|&&y| y == 1.0).count();
    if positives == 0 || positives == targets.len() {
        return Err(ClassifierError::DegenerateLabels);
    }
    let all: Vec<usize> = (0..matrix.columns.len()).collect();
    check_finite(matrix, &all)?;

    let mut selected: Vec<usize> = Vec::new();
    while selected.len() < k.min(matrix.columns.len()) {
        let candidates: Vec<usize> = all.iter().copied().filter(|j| !selected.contains(j)).collect();
        let scores: Vec<usize> = candidates
            .par_iter()
            .map(|&j| {
                let mut cols = selected.clone();
                cols.push(j);
                cv_correct(matrix, &rows, &targets, &cols, opts)
            })
            .collect();
        let mut best = 0;
        for (pos, &s) in scores.iter().enumerate() {
            if s > scores[best] {
                best = pos;
            }
        }
        selected.push(candidates[best]);
    }
    Ok(selected)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingMeta {
    pub iterations: usize,
    pub final_loss: f64,
    /// False when the iteration cap was hit before the gradient tolerance.
    pub converged: bool,
    pub lambda: f64,
    pub n_positive: usize,
    pub n_negative: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControversyModel {
    /// Selected columns, in selection order.
    pub columns: Vec<Column>,
    /// Their indices in the training matrix.
    pub selected: Vec<usize>,
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub meta: TrainingMeta,
}

/// Trains the logistic model on the selected columns of the C3 and C0 rows.
pub fn train_logistic(
    matrix: &FeatureMatrix,
    selected: &[usize],
    labels: &BTreeMap<String, Klass>,
    opts: &SolverOptions,
) -> Result<(ControversyModel, Fit), ClassifierError> {
    let mut seen = BTreeSet::new();
    for &j in selected {
        if j >= matrix.columns.len() || !seen.insert(j) {
            return Err(ClassifierError::BadIndex(j));
        }
    }
    check_finite(matrix, selected)?;
    let (rows, targets) = training_rows(matrix, labels);
    let positives = targets.iter().filter(|&&y| y == 1.0).count();
    let negatives = targets.len() - positives;
    if positives < 2 || negatives < 2 {
        return Err(ClassifierError::TooFewExamples { positives, negatives });
    }
    let stats: Vec<(f64, f64)> = selected
        .iter()
        .map(|&j| standardizer(rows.iter().map(|&i| matrix.values[i][j])))
        .collect();
    let x = standardized_rows(matrix, &rows, selected, &stats);
    let fit = gradient_descent(&Objective::new(&x, &targets, opts.lambda), opts);
    let model = ControversyModel {
        columns: selected.iter().map(|&j| matrix.columns[j].clone()).collect(),
        selected: selected.to_vec(),
        means: stats.iter().map(|s| s.0).collect(),
        scales: stats.iter().map(|s| s.1).collect(),
        weights: fit.params[1..].to_vec(),
        intercept: fit.params[0],
        meta: TrainingMeta {
            iterations: fit.iterations,
            final_loss: fit.final_loss(),
            converged: fit.converged,
            lambda: opts.lambda,
            n_positive: positives,
            n_negative: negatives,
        },
    };
    Ok((model, fit))
}

impl ControversyModel {
    pub fn linear_score(&self, features: &[f64]) -> f64 {
        self.intercept
            + features
                .iter()
                .zip(&self.means)
                .zip(&self.scales)
                .zip(&self.weights)
                .map(|(((x, m), s), w)| w * (x - m) / s)
                .sum::<f64>()
    }

    /// Writes `key<TAB>value` lines. Floats use the shortest round-trip form.
    pub fn write<W: Write>(&self, mut w: W) -> Result<(), ClassifierError> {
        let mut out = String::new();
        writeln!(out, "format\t{MODEL_FORMAT}").unwrap();
        writeln!(out, "k\t{}", self.columns.len()).unwrap();
        for (i, c) in self.columns.iter().enumerate() {
            writeln!(out, "column.{i}\t{c}").unwrap();
            writeln!(out, "mean.{i}\t{}", self.means[i]).unwrap();
            writeln!(out, "scale.{i}\t{}", self.scales[i]).unwrap();
            writeln!(out, "weight.{i}\t{}", self.weights[i]).unwrap();
        }
        writeln!(out, "intercept\t{}", self.intercept).unwrap();
        let m = &self.meta;
        writeln!(out, "lambda\t{}", m.lambda).unwrap();
        writeln!(out, "iterations\t{}", m.iterations).unwrap();
        writeln!(out, "final_loss\t{}", m.final_loss).unwrap();
        writeln!(out, "converged\t{}", m.converged).unwrap();
        writeln!(out, "n_positive\t{}", m.n_positive).unwrap();
        writeln!(out, "n_negative\t{}", m.n_negative).unwrap();
        w.write_all(out.as_bytes())?;
        Ok(())
    }

    /// Parses a model file. `selected` is left empty: indices only make sense
    /// against a matrix, and scoring looks columns up by name.
    pub fn parse(text: &str) -> Result<Self, ClassifierError> {
        let mut kv: BTreeMap<&str, (usize, &str)> = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (k, v) = line.split_once('\t').ok_or_else(|| ClassifierError::BadModel {
                line: i + 1,
                reason: "expected key<TAB>value".into(),
            })?;
            if kv.insert(k, (i + 1, v)).is_some() {
                return Err(ClassifierError::BadModel {
                    line: i + 1,
                    reason: format!("repeated key {k:?}"),
                });
            }
        }
        let get = |key: &str| {
            kv.get(key).copied().ok_or_else(|| ClassifierError::BadModel {
                line: 0,
                reason: format!("missing key {key:?}"),
            })
        };
        fn num<T: std::str::FromStr>((line, v): (usize, &str)) -> Result<T, ClassifierError> {
            v.trim().parse().map_err(|_| ClassifierError::BadModel {
                line,
                reason: format!("bad value {v:?}"),
            })
        }
        if get("format")?.1 != MODEL_FORMAT {
            return Err(ClassifierError::BadModel {
                line: get("format")?.0,
                reason: "unknown model format".into(),
            });
        }
        let k: usize = num(get("k")?)?;
        let mut model = ControversyModel {
            columns: Vec::with_capacity(k),
            selected: Vec::new(),
            means: Vec::with_capacity(k),
            scales: Vec::with_capacity(k),
            weights: Vec::with_capacity(k),
            intercept: num(get("intercept")?)?,
            meta: TrainingMeta {
                iterations: num(get("iterations")?)?,
                final_loss: num(get("final_loss")?)?,
                converged: num(get("converged")?)?,
                lambda: num(get("lambda")?)?,
                n_positive: num(get("n_positive")?)?,
                n_negative: num(get("n_negative")?)?,
            },
        };
        for i in 0..k {
            let (line, c) = get(&format!("column.{i}"))?;
            model
                .columns
                .push(c.parse().map_err(|reason| ClassifierError::BadModel { line, reason })?);
            model.means.push(num(get(&format!("mean.{i}"))?)?);
            model.scales.push(num(get(&format!("scale.{i}"))?)?);
            model.weights.push(num(get(&format!("weight.{i}"))?)?);
        }
        Ok(model)
    }
}

/// Scores every topic of `matrix`. Each score lies in the open interval (0, 1).
pub fn score_topics(model: &ControversyModel, matrix: &FeatureMatrix) -> Result<Vec<(String, f64)>, ClassifierError> {
    let idx: Vec<usize> = model
        .columns
        .iter()
        .map(|c| matrix.column_index(c).ok_or_else(|| ClassifierError::ColumnMissing(c.to_string())))
        .collect::<Result<_, _>>()?;
    Ok(matrix
        .topics
        .iter()
        .zip(&matrix.values)
        .map(|(t, row)| {
            let x: Vec<f64> = idx.iter().map(|&j| row[j]).collect();
            (t.clone(), sigmoid(model.linear_score(&x)))
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRow {
    pub topic: String,
    pub klass: Klass,
    pub user_score: Option<f64>,
    pub classifier_score: f64,
    /// Set only for C3 and C0 topics. 0.5 exactly is wrong for both.
    pub misclassified: Option<bool>,
}

pub fn error_report(scores: &[(String, f64)], words: &[TopicWord]) -> Vec<ErrorRow> {
    let by_term: HashMap<&str, &TopicWord> = words.iter().map(|w| (w.term.as_str(), w)).collect();
    scores
        .iter()
        .map(|(topic, score)| {
            let word = by_term.get(topic.as_str());
            let klass = word.map_or(Klass::Unlabeled, |w| w.klass);
            let misclassified = match klass {
                Klass::C3 => Some(*score <= 0.5),
                Klass::C0 => Some(*score >= 0.5),
                _ => None,
            };
            ErrorRow {
                topic: topic.clone(),
                klass,
                user_score: word.and_then(|w| w.user_score),
                classifier_score: *score,
                misclassified,
            }
        })
        .collect()
}

/// Share of C3/C0 rows classified correctly; `None` without such rows.
pub fn training_accuracy(report: &[ErrorRow]) -> Option<f64> {
    let judged: Vec<bool> = report.iter().filter_map(|r| r.misclassified).collect();
    if judged.is_empty() {
        return None;
    }
    Some(judged.iter().filter(|&&m| !m).count() as f64 / judged.len() as f64)
}

pub const SCORES_HEADER: [&str; 5] = ["topic", "klass", "user_score", "classifier_score", "misclassified"];

pub fn write_scores_csv<W: Write>(w: W, rows: &[ErrorRow]) -> Result<(), ClassifierError> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(SCORES_HEADER)?;
    for r in rows {
        wtr.write_record([
            r.topic.clone(),
            r.klass.to_string(),
            r.user_score.map(|s| s.to_string()).unwrap_or_default(),
            r.classifier_score.to_string(),
            r.misclassified.map(|m| m.to_string()).unwrap_or_default(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}
