//! Binary classifiers written from scratch: L2 logistic regression, a Gini
//! random forest and a C-SVM with a polynomial kernel.
//!
//! All learners take a row-major [`Matrix`] and class labels, and expose a
//! real-valued score per row. `ad` is predicted only when the score is strictly
//! on the positive side of the decision threshold; exact ties go to `cn`.

mod forest;
mod logreg;
pub(crate) mod persist;
mod svm;

pub use forest::{best_split, gini, train_forest, ForestConfig, ForestModel, Node, Split, Tree};
pub use logreg::{loss_and_gradient, train_logreg, train_logreg_traced, train_logreg_warm, LogRegConfig, LogRegModel, LogRegTrace};
pub use persist::{read_model, write_model};
pub use svm::{kernel_poly, train_svm, Kernel, SvmConfig, SvmModel, SvmReport};

use serde::{Deserialize, Serialize};

use crate::corpus::{Dataset, FeatureTable, Label};
use crate::error::{Error, Result};
use crate::exec::Exec;

/// Dense row-major matrix borrowed or owned by the learners.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    data: Vec<f64>,
    rows: usize,
    cols: usize,
}

impl Matrix {
    pub fn new(data: Vec<f64>, rows: usize, cols: usize) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Schema(format!(
                "matrix data length {} != {rows} x {cols}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Schema("matrix contains missing or non-finite values".into()));
        }
        Ok(Self { data, rows, cols })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Schema("ragged rows".into()));
        }
        Self::new(rows.concat(), rows.len(), cols)
    }

    pub fn from_table(t: &FeatureTable) -> Result<Self> {
        Self::new(t.values().to_vec(), t.n_rows(), t.n_cols())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols.max(1)).take(self.rows)
    }

    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            data,
            rows: idx.len(),
            cols: self.cols,
        }
    }

    pub fn select_cols(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(idx.len() * self.rows);
        for r in self.iter_rows() {
            data.extend(idx.iter().map(|&j| r[j]));
        }
        Matrix {
            data,
            rows: self.rows,
            cols: idx.len(),
        }
    }
}

pub(crate) fn check_training_set(x: &Matrix, y: &[Label]) -> Result<()> {
    if x.rows() != y.len() {
        return Err(Error::Schema(format!("{} rows but {} labels", x.rows(), y.len())));
    }
    crate::corpus::require_both_classes(y)
}

/// Which learner to train.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Classifier {
    #[serde(rename = "logreg")]
    LogReg,
    #[serde(rename = "rf")]
    Forest,
    Svm,
}

impl Classifier {
    pub const ALL: [Classifier; 3] = [Classifier::LogReg, Classifier::Forest, Classifier::Svm];

    pub fn as_str(self) -> &'static str {
        match self {
            Classifier::LogReg => "logreg",
            Classifier::Forest => "rf",
            Classifier::Svm => "svm",
        }
    }

    /// Row label used in comparison tables.
    pub fn short_name(self) -> &'static str {
        match self {
            Classifier::LogReg => "LR",
            Classifier::Forest => "RF",
            Classifier::Svm => "SVM",
        }
    }
}

impl std::str::FromStr for Classifier {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "logreg" | "lr" => Ok(Classifier::LogReg),
            "rf" | "forest" => Ok(Classifier::Forest),
            "svm" => Ok(Classifier::Svm),
            other => Err(Error::InvalidArgument(format!(
                "unknown classifier {other:?} (expected logreg, rf or svm)"
            ))),
        }
    }
}

impl std::fmt::Display for Classifier {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Hyperparameters for any learner.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelConfig {
    LogReg(LogRegConfig),
    Forest(ForestConfig),
    Svm(SvmConfig),
}

impl ModelConfig {
    pub fn default_for(c: Classifier, seed: u64) -> Self {
        match c {
            Classifier::LogReg => ModelConfig::LogReg(LogRegConfig {
                seed,
                ..Default::default()
            }),
            Classifier::Forest => ModelConfig::Forest(ForestConfig {
                seed,
                ..Default::default()
            }),
            Classifier::Svm => ModelConfig::Svm(SvmConfig::default()),
        }
    }

    pub fn classifier(&self) -> Classifier {
        match self {
            ModelConfig::LogReg(_) => Classifier::LogReg,
            ModelConfig::Forest(_) => Classifier::Forest,
            ModelConfig::Svm(_) => Classifier::Svm,
        }
    }
}

/// A fitted model of any kind.
#[derive(Debug, Clone, PartialEq)]
pub enum TrainedModel {
    LogReg(LogRegModel),
    Forest(ForestModel),
    Svm(SvmModel),
}

impl TrainedModel {
    pub fn train(cfg: &ModelConfig, x: &Matrix, y: &[Label], exec: Exec) -> Result<Self> {
        Ok(match cfg {
            ModelConfig::LogReg(c) => TrainedModel::LogReg(train_logreg(x, y, c)?),
            ModelConfig::Forest(c) => TrainedModel::Forest(train_forest(x, y, c, exec)?),
            ModelConfig::Svm(c) => TrainedModel::Svm(train_svm(x, y, c, exec)?),
        })
    }

    pub fn train_dataset(cfg: &ModelConfig, d: &Dataset, exec: Exec) -> Result<Self> {
        Self::train(cfg, &Matrix::from_table(&d.table)?, &d.labels, exec)
    }

    pub fn classifier(&self) -> Classifier {
        match self {
            TrainedModel::LogReg(_) => Classifier::LogReg,
            TrainedModel::Forest(_) => Classifier::Forest,
            TrainedModel::Svm(_) => Classifier::Svm,
        }
    }

    pub fn n_features(&self) -> usize {
        match self {
            TrainedModel::LogReg(m) => m.weights.len(),
            TrainedModel::Forest(m) => m.n_features,
            TrainedModel::Svm(m) => m.n_features(),
        }
    }

    /// Score above which a row is labelled `ad`.
    pub fn threshold(&self) -> f64 {
        match self {
            TrainedModel::LogReg(_) | TrainedModel::Forest(_) => 0.5,
            TrainedModel::Svm(_) => 0.0,
        }
    }

    /// Probability of `ad` for logistic regression, fraction of `ad` votes for
    /// the forest, decision value for the SVM.
    pub fn score_row(&self, row: &[f64]) -> f64 {
        match self {
            TrainedModel::LogReg(m) => m.predict_proba(row),
            TrainedModel::Forest(m) => m.vote_fraction(row),
            TrainedModel::Svm(m) => m.decision(row),
        }
    }

    pub fn predict_scores(&self, x: &Matrix, exec: Exec) -> Result<Vec<f64>> {
        if x.cols() != self.n_features() {
            return Err(Error::Schema(format!(
                "model expects {} features, got {}",
                self.n_features(),
                x.cols()
            )));
        }
        Ok(exec.map_range(x.rows(), |i| self.score_row(x.row(i))))
    }

    pub fn predict(&self, x: &Matrix, exec: Exec) -> Result<Vec<Label>> {
        let t = self.threshold();
        Ok(self
            .predict_scores(x, exec)?
            .into_iter()
            .map(|s| label_for(s, t))
            .collect())
    }
}

/// `ad` iff `score > threshold`.
pub fn label_for(score: f64, threshold: f64) -> Label {
    if score > threshold {
        Label::Ad
    } else {
        Label::Cn
    }
}
