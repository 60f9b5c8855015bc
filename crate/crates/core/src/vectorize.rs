//! TF-IDF weighting, feature-block fusion, imputation and standardization.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::FeatureTable;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::text::TokenSequence;

/// Columns whose standard deviation is below this are treated as constant.
pub const SIGMA_FLOOR: f64 = 1e-12;

/// Fitted TF-IDF vocabulary.
///
/// Weights are `tf * ln(n_docs / df)` with raw-count `tf` and no smoothing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TfIdfModel {
    /// Terms in column order (lexicographic).
    terms: Vec<String>,
    /// Document frequency per term, aligned with `terms`.
    doc_freq: Vec<usize>,
    corpus_size: usize,
    #[serde(skip)]
    index: BTreeMap<String, usize>,
}

impl TfIdfModel {
    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn doc_freq(&self) -> &[usize] {
        &self.doc_freq
    }

    pub fn corpus_size(&self) -> usize {
        self.corpus_size
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn column(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn df(&self, term: &str) -> Option<usize> {
        self.column(term).map(|i| self.doc_freq[i])
    }

    pub fn idf(&self, column: usize) -> f64 {
        (self.corpus_size as f64 / self.doc_freq[column] as f64).ln()
    }

    /// Manifest JSON recording vocabulary order and document frequencies.
    pub fn manifest_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("tfidf manifest serializes")
    }

    pub fn from_manifest_json(s: &str) -> Result<Self> {
        let mut m: TfIdfModel =
            serde_json::from_str(s).map_err(|e| Error::Schema(format!("tfidf manifest: {e}")))?;
        if m.terms.len() != m.doc_freq.len() {
            return Err(Error::Schema("tfidf manifest: terms/df length mismatch".into()));
        }
        m.index = m.terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Ok(m)
    }
}

/// Fit the vocabulary. Terms appearing in fewer than `min_df` documents are dropped.
pub fn fit_tfidf(corpus: &[TokenSequence], min_df: usize) -> Result<TfIdfModel> {
    if corpus.iter().all(TokenSequence::is_empty) {
        return Err(Error::InvalidArgument(
            "cannot fit TF-IDF on a corpus with no tokens".into(),
        ));
    }
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in corpus {
        let mut terms: Vec<&str> = doc.iter().collect();
        terms.sort_unstable();
        terms.dedup();
        for t in terms {
            *df.entry(t).or_insert(0) += 1;
        }
    }
    let kept: Vec<(&str, usize)> = df.into_iter().filter(|&(_, n)| n >= min_df.max(1)).collect();
    let terms: Vec<String> = kept.iter().map(|(t, _)| t.to_string()).collect();
    Ok(TfIdfModel {
        index: terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect(),
        doc_freq: kept.iter().map(|&(_, n)| n).collect(),
        corpus_size: corpus.len(),
        terms,
    })
}

/// Sparse `(column, weight)` pairs in ascending column order; zero weights omitted.
pub fn transform_tfidf(model: &TfIdfModel, doc: &TokenSequence) -> Vec<(usize, f64)> {
    let mut tf: BTreeMap<usize, usize> = BTreeMap::new();
    for t in doc.iter() {
        if let Some(col) = model.column(t) {
            *tf.entry(col).or_insert(0) += 1;
        }
    }
    tf.into_iter()
        .map(|(col, n)| (col, n as f64 * model.idf(col)))
        .filter(|&(_, w)| w != 0.0)
        .collect()
}

/// Dense TF-IDF table with one column per vocabulary term (bare term names).
pub fn tfidf_table(
    model: &TfIdfModel,
    ids: &[String],
    docs: &[TokenSequence],
    exec: Exec,
) -> Result<FeatureTable> {
    if ids.len() != docs.len() {
        return Err(Error::Schema(format!("{} ids for {} documents", ids.len(), docs.len())));
    }
    let p = model.len();
    let rows = exec.map(docs, |d| {
        let mut row = vec![0.0; p];
        for (col, w) in transform_tfidf(model, d) {
            row[col] = w;
        }
        row
    });
    FeatureTable::from_rows(ids.to_vec(), model.terms.clone(), rows)
}

/// One named input to [`concat_features`].
#[derive(Debug, Clone, Copy)]
pub struct FeatureBlock<'a> {
    /// Column prefix: columns become `<name>_<column>`.
    pub name: &'a str,
    pub table: &'a FeatureTable,
    /// Required width, if the block has a fixed schema.
    pub width: Option<usize>,
}

/// Column-wise concatenation of blocks that share the same row ids.
pub fn concat_features(blocks: &[FeatureBlock<'_>]) -> Result<FeatureTable> {
    let first = blocks
        .first()
        .ok_or_else(|| Error::InvalidArgument("no feature blocks to concatenate".into()))?;
    for b in blocks {
        if let Some(w) = b.width {
            if b.table.n_cols() != w {
                return Err(Error::Schema(format!(
                    "block {} has width {}, expected {w}",
                    b.name,
                    b.table.n_cols()
                )));
            }
        }
        if b.table.ids() != first.table.ids() {
            return Err(Error::Schema(format!(
                "block {} rows do not match block {}",
                b.name, first.name
            )));
        }
    }
    let columns = blocks
        .iter()
        .flat_map(|b| b.table.columns().iter().map(move |c| format!("{}_{c}", b.name)))
        .collect();
    let n = first.table.n_rows();
    let width: usize = blocks.iter().map(|b| b.table.n_cols()).sum();
    let mut values = Vec::with_capacity(n * width);
    for i in 0..n {
        for b in blocks {
            values.extend_from_slice(b.table.row(i));
        }
    }
    FeatureTable::new(first.table.ids().to_vec(), columns, values)
}

fn check_width(expected: usize, table: &FeatureTable) -> Result<()> {
    if table.n_cols() != expected {
        return Err(Error::Schema(format!(
            "table has {} columns, transform was fitted on {expected}",
            table.n_cols()
        )));
    }
    Ok(())
}

/// Per-column z-scoring fitted on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl Standardizer {
    pub fn fit(train: &FeatureTable) -> Result<Self> {
        if train.n_rows() < 2 {
            return Err(Error::InvalidArgument(format!(
                "standardizer needs at least 2 rows, got {}",
                train.n_rows()
            )));
        }
        let n = train.n_rows() as f64;
        let p = train.n_cols();
        let mut means = vec![0.0; p];
        for row in train.rows() {
            for (m, v) in means.iter_mut().zip(row) {
                *m += v;
            }
        }
        means.iter_mut().for_each(|m| *m /= n);
        let mut vars = vec![0.0; p];
        for row in train.rows() {
            for ((s, v), m) in vars.iter_mut().zip(row).zip(&means) {
                *s += (v - m) * (v - m);
            }
        }
        let stds = vars
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd < SIGMA_FLOOR {
                    1.0
                } else {
                    sd
                }
            })
            .collect();
        Ok(Self { means, stds })
    }

    pub fn apply(&self, table: &FeatureTable) -> Result<FeatureTable> {
        check_width(self.means.len(), table)?;
        Ok(table.map_values(|j, v| (v - self.means[j]) / self.stds[j]))
    }

    pub fn apply_row(&self, row: &mut [f64]) {
        for ((v, m), s) in row.iter_mut().zip(&self.means).zip(&self.stds) {
            *v = (*v - m) / s;
        }
    }
}

pub fn fit_standardizer(train: &FeatureTable) -> Result<Standardizer> {
    Standardizer::fit(train)
}

pub fn apply_standardizer(s: &Standardizer, table: &FeatureTable) -> Result<FeatureTable> {
    s.apply(table)
}

/// Replaces missing cells with training-column means (0 for all-missing columns).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanImputer {
    pub fill: Vec<f64>,
}

impl MeanImputer {
    pub fn fit(train: &FeatureTable) -> Self {
        let fill = (0..train.n_cols())
            .map(|j| {
                let (sum, n) = train
                    .rows()
                    .map(|r| r[j])
                    .filter(|v| !v.is_nan())
                    .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
                if n == 0 {
                    0.0
                } else {
                    sum / n as f64
                }
            })
            .collect();
        Self { fill }
    }

    pub fn apply(&self, table: &FeatureTable) -> Result<FeatureTable> {
        check_width(self.fill.len(), table)?;
        Ok(table.map_values(|j, v| if v.is_nan() { self.fill[j] } else { v }))
    }
}
