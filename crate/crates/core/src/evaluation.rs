//! Stratified cross-validation, confusion-matrix metrics and report layouts.
//!
//! `ad` is the positive class. A metric whose denominator is zero is `None`
//! and renders as `NA`.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{format_value, overlapping_ids, Label, MISSING};
use crate::error::{Error, Result};
use crate::learners::Classifier;
use crate::pipeline::{FittedPipeline, LabeledInput, ModelId, PipelineConfig, Preprocessor, RfeMode};

/// Headline metric names in report order.
pub const METRICS: [&str; 5] = ["accuracy", "precision", "recall", "specificity", "f1"];

/// Split row indices into `k` folds with per-class counts differing by at most one.
///
/// Each class is shuffled with one seeded stream (`ad` first) and dealt
/// round-robin; the second class starts where the first stopped, so total fold
/// sizes are balanced as well. Fold index lists are ascending.
pub fn stratified_kfold(labels: &[Label], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("k must be at least 2, got {k}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![Vec::new(); k];
    let mut offset = 0;
    for class in Label::ALL {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if idx.len() < k {
            return Err(Error::InvalidArgument(format!(
                "class {class} has {} rows, fewer than k = {k}",
                idx.len()
            )));
        }
        idx.shuffle(&mut rng);
        for (j, i) in idx.iter().enumerate() {
            folds[(offset + j) % k].push(*i);
        }
        offset = (offset + idx.len()) % k;
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// The same counts with `cn` as the positive class.
    pub fn swapped(&self) -> ConfusionMatrix {
        ConfusionMatrix {
            tp: self.tn,
            fp: self.fn_,
            tn: self.tp,
            fn_: self.fp,
        }
    }

    pub fn add(&mut self, other: &ConfusionMatrix) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.tn += other.tn;
        self.fn_ += other.fn_;
    }
}

pub fn confusion(truth: &[Label], predicted: &[Label]) -> Result<ConfusionMatrix> {
    if truth.len() != predicted.len() {
        return Err(Error::InvalidArgument(format!(
            "{} true labels but {} predictions",
            truth.len(),
            predicted.len()
        )));
    }
    let mut cm = ConfusionMatrix::default();
    for (t, p) in truth.iter().zip(predicted) {
        match (t, p) {
            (Label::Ad, Label::Ad) => cm.tp += 1,
            (Label::Cn, Label::Ad) => cm.fp += 1,
            (Label::Cn, Label::Cn) => cm.tn += 1,
            (Label::Ad, Label::Cn) => cm.fn_ += 1,
        }
    }
    Ok(cm)
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Precision, recall and F1 with one class taken as positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassMetrics {
    pub class: Label,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
}

impl ClassMetrics {
    fn of(class: Label, cm: &ConfusionMatrix) -> Self {
        let precision = ratio(cm.tp, cm.tp + cm.fp);
        let recall = ratio(cm.tp, cm.tp + cm.fn_);
        let f1 = match (precision, recall) {
            (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
            (Some(_), Some(_)) => Some(0.0),
            _ => None,
        };
        Self { class, precision, recall, f1 }
    }

    /// `non-AD` / `AD`.
    pub fn class_name(&self) -> &'static str {
        match self.class {
            Label::Ad => "AD",
            Label::Cn => "non-AD",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport {
    pub confusion: ConfusionMatrix,
    pub accuracy: f64,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub specificity: Option<f64>,
    pub f1: Option<f64>,
    /// `non-AD` row first, then `AD`.
    pub per_class: [ClassMetrics; 2],
}

impl MetricsReport {
    /// Values in [`METRICS`] order.
    pub fn headline(&self) -> [Option<f64>; 5] {
        [Some(self.accuracy), self.precision, self.recall, self.specificity, self.f1]
    }

    pub fn class(&self, label: Label) -> &ClassMetrics {
        match label {
            Label::Cn => &self.per_class[0],
            Label::Ad => &self.per_class[1],
        }
    }
}

pub fn metrics(cm: &ConfusionMatrix) -> Result<MetricsReport> {
    if cm.total() == 0 {
        return Err(Error::InvalidArgument("no predictions to score".into()));
    }
    let ad = ClassMetrics::of(Label::Ad, cm);
    let cn = ClassMetrics::of(Label::Cn, &cm.swapped());
    Ok(MetricsReport {
        confusion: *cm,
        accuracy: (cm.tp + cm.tn) as f64 / cm.total() as f64,
        precision: ad.precision,
        recall: ad.recall,
        specificity: ratio(cm.tn, cm.tn + cm.fp),
        f1: ad.f1,
        per_class: [cn, ad],
    })
}

/// Mean and sample standard deviation of the defined values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: Option<f64>,
    pub std: Option<f64>,
    /// Folds where the metric was defined.
    pub n: usize,
}

fn summarize(values: impl Iterator<Item = Option<f64>>) -> Summary {
    let xs: Vec<f64> = values.flatten().collect();
    let n = xs.len();
    if n == 0 {
        return Summary { mean: None, std: None, n };
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let std = (n > 1).then(|| (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt());
    Summary { mean: Some(mean), std, n }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldResult {
    /// 1-based.
    pub fold: usize,
    pub test_ids: Vec<String>,
    pub report: MetricsReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvReport {
    pub k: usize,
    pub seed: u64,
    pub description: String,
    pub classifier: Classifier,
    pub folds: Vec<FoldResult>,
    /// Per metric in [`METRICS`] order, over folds.
    pub summary: [Summary; 5],
    /// Metrics of the summed fold confusion matrices.
    pub pooled: MetricsReport,
}

impl CvReport {
    pub fn mean(&self, metric: &str) -> Option<f64> {
        METRICS.iter().position(|m| *m == metric).and_then(|i| self.summary[i].mean)
    }
}

/// Fit the pipeline on the rows in `train_idx`.
pub fn fit_fold(cfg: &PipelineConfig, data: &LabeledInput, train_idx: &[usize]) -> Result<FittedPipeline> {
    FittedPipeline::fit(cfg, &data.subset(train_idx))
}

fn complement(n: usize, fold: &[usize]) -> Vec<usize> {
    (0..n).filter(|i| fold.binary_search(i).is_err()).collect()
}

/// Stratified k-fold CV. Every fitted step sees the training folds only,
/// except RFE in [`RfeMode::Global`].
pub fn cross_validate(cfg: &PipelineConfig, data: &LabeledInput, k: usize, seed: u64) -> Result<CvReport> {
    let folds = stratified_kfold(&data.labels, k, seed)?;
    let description = cfg.describe();
    let global;
    let cfg = if cfg.rfe_mode == RfeMode::Global && cfg.rfe.is_some() && cfg.mask.is_none() {
        global = PipelineConfig { mask: Some(Preprocessor::global_mask(cfg, data)?), ..cfg.clone() };
        &global
    } else {
        cfg
    };
    let results = cfg.exec.try_map_range(k, |f| {
        let run = || -> Result<FoldResult> {
            let test = &folds[f];
            let fitted = fit_fold(cfg, data, &complement(data.len(), test))?;
            let held = data.subset(test);
            let pred = fitted.predict(&held.input, cfg.exec)?;
            Ok(FoldResult {
                fold: f + 1,
                test_ids: held.ids().to_vec(),
                report: metrics(&confusion(&held.labels, &pred)?)?,
            })
        };
        run().map_err(|e| Error::Fold { fold: f + 1, source: Box::new(e) })
    })?;
    let summary = std::array::from_fn(|m| summarize(results.iter().map(|r| r.report.headline()[m])));
    let mut pooled = ConfusionMatrix::default();
    for r in &results {
        pooled.add(&r.report.confusion);
    }
    Ok(CvReport {
        k,
        seed,
        description,
        classifier: cfg.classifier(),
        folds: results,
        summary,
        pooled: metrics(&pooled)?,
    })
}

/// Fit on `train`, score `test`; refuses to run if any id is in both.
pub fn train_test_evaluate(cfg: &PipelineConfig, train: &LabeledInput, test: &LabeledInput) -> Result<MetricsReport> {
    let shared = overlapping_ids(train.ids(), test.ids());
    if !shared.is_empty() {
        return Err(Error::Leakage(format!(
            "{} ids appear in both train and test: {}",
            shared.len(),
            shared.join(",")
        )));
    }
    let fitted = FittedPipeline::fit(cfg, train)?;
    let pred = fitted.predict(&test.input, cfg.exec)?;
    let report = metrics(&confusion(&test.labels, &pred)?)?;
    for c in &report.per_class {
        if c.recall.is_none() {
            log::warn!("test set has no {} rows; its recall is undefined", c.class_name());
        }
    }
    Ok(report)
}

fn fixed(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| MISSING.to_string(), |x| format!("{x:.digits$}"))
}

fn exact(v: Option<f64>) -> String {
    v.map_or_else(|| MISSING.to_string(), format_value)
}

/// Whitespace-aligned text table.
fn align(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|j| rows.iter().filter_map(|r| r.get(j)).map(|c| c.chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for r in rows {
        let line: Vec<String> = r
            .iter()
            .enumerate()
            .map(|(j, c)| format!("{c:<w$}", w = widths[j]))
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

fn csv_line(cells: &[String]) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(vec![]);
    w.write_record(cells).expect("in-memory write");
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

fn to_csv(rows: &[Vec<String>]) -> String {
    rows.iter().map(|r| csv_line(r)).collect()
}

impl CvReport {
    /// Header, per-fold lines, fold mean/std and the pooled row.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "cross-validation: {}", self.description).unwrap();
        writeln!(s, "k={} seed={}", self.k, self.seed).unwrap();
        let mut rows = vec![["fold", "n", "tp", "fp", "tn", "fn"]
            .iter()
            .map(|h| h.to_string())
            .chain(METRICS.iter().map(|m| m.to_string()))
            .collect::<Vec<_>>()];
        for f in &self.folds {
            rows.push(self.row(&f.fold.to_string(), &f.report));
        }
        rows.push(self.summary_row("mean", |s| s.mean));
        rows.push(self.summary_row("std", |s| s.std));
        rows.push(self.row("pooled", &self.pooled));
        s.push_str(&align(&rows));
        s
    }

    fn row(&self, name: &str, r: &MetricsReport) -> Vec<String> {
        let c = r.confusion;
        let mut row = vec![name.to_string(), c.total().to_string()];
        row.extend([c.tp, c.fp, c.tn, c.fn_].iter().map(|v| v.to_string()));
        row.extend(r.headline().iter().map(|v| fixed(*v, 4)));
        row
    }

    fn summary_row(&self, name: &str, pick: impl Fn(&Summary) -> Option<f64>) -> Vec<String> {
        let mut row = vec![name.to_string()];
        row.extend(std::iter::repeat_n(String::new(), 5));
        row.extend(self.summary.iter().map(|s| fixed(pick(s), 4)));
        row
    }

    /// Machine-readable form with full-precision values.
    pub fn to_csv(&self) -> String {
        let mut rows = vec![["row", "n", "tp", "fp", "tn", "fn"]
            .iter()
            .map(|h| h.to_string())
            .chain(METRICS.iter().map(|m| m.to_string()))
            .collect::<Vec<_>>()];
        let full = |name: String, r: &MetricsReport| {
            let c = r.confusion;
            let mut row = vec![name, c.total().to_string()];
            row.extend([c.tp, c.fp, c.tn, c.fn_].iter().map(|v| v.to_string()));
            row.extend(r.headline().iter().map(|v| exact(*v)));
            row
        };
        for f in &self.folds {
            rows.push(full(format!("fold{}", f.fold), &f.report));
        }
        for (name, pick) in [("mean", 0), ("std", 1)] {
            let mut row = vec![name.to_string()];
            row.extend(std::iter::repeat_n(String::new(), 5));
            row.extend(self.summary.iter().map(|s| exact(if pick == 0 { s.mean } else { s.std })));
            rows.push(row);
        }
        rows.push(full("pooled".into(), &self.pooled));
        to_csv(&rows)
    }
}

/// Column heads of the cross-validation comparison table.
pub const TABLE2_HEADER: [&str; 6] = ["Class", "CV Accuracy", "Precision", "Recall", "Specificity", "F1 Score"];
/// Column heads of the per-class test table.
pub const TABLE3_HEADER: [&str; 6] = ["Model", "Class", "Accuracy", "Recall", "Precision", "F1"];

fn table2_rows(groups: &[(ModelId, Vec<&CvReport>)]) -> Vec<Vec<String>> {
    let mut rows = vec![TABLE2_HEADER.iter().map(|s| s.to_string()).collect()];
    for (model, reports) in groups {
        rows.push(vec![model.title().to_string()]);
        for r in reports {
            let mut row = vec![r.classifier.short_name().to_string()];
            row.extend(r.summary.iter().map(|s| fixed(s.mean, 3)));
            rows.push(row);
        }
    }
    rows
}

/// Fold-mean comparison grouped by model: a `Model N` line, then one
/// `LR` / `RF` / `SVM` row each, three decimals.
pub fn table2_text(groups: &[(ModelId, Vec<&CvReport>)]) -> String {
    align(&table2_rows(groups))
}

pub fn table2_csv(groups: &[(ModelId, Vec<&CvReport>)]) -> String {
    let mut rows = vec![["Model"].iter().chain(TABLE2_HEADER.iter()).map(|s| s.to_string()).collect::<Vec<_>>()];
    for (model, reports) in groups {
        for r in reports {
            let mut row = vec![model.title().to_string(), r.classifier.short_name().to_string()];
            row.extend(r.summary.iter().map(|s| fixed(s.mean, 3)));
            rows.push(row);
        }
    }
    to_csv(&rows)
}

fn table3_rows(rows_in: &[(ModelId, &MetricsReport)]) -> Vec<Vec<String>> {
    let mut rows = vec![TABLE3_HEADER.iter().map(|s| s.to_string()).collect()];
    for (model, r) in rows_in {
        for (i, c) in r.per_class.iter().enumerate() {
            rows.push(vec![
                if i == 0 { model.title().to_string() } else { String::new() },
                c.class_name().to_string(),
                if i == 0 { fixed(Some(r.accuracy), 4) } else { String::new() },
                fixed(c.recall, 4),
                fixed(c.precision, 4),
                fixed(c.f1, 4),
            ]);
        }
    }
    rows
}

/// Per-class test report: two rows (`non-AD`, `AD`) per model, four decimals.
pub fn table3_text(rows: &[(ModelId, &MetricsReport)]) -> String {
    align(&table3_rows(rows))
}

pub fn table3_csv(rows_in: &[(ModelId, &MetricsReport)]) -> String {
    let mut rows = vec![TABLE3_HEADER.iter().map(|s| s.to_string()).collect::<Vec<_>>()];
    for (model, r) in rows_in {
        for c in &r.per_class {
            rows.push(vec![
                model.title().to_string(),
                c.class_name().to_string(),
                fixed(Some(r.accuracy), 4),
                fixed(c.recall, 4),
                fixed(c.precision, 4),
                fixed(c.f1, 4),
            ]);
        }
    }
    to_csv(&rows)
}
