use crate::corpus::Label;
use crate::error::{Error, Result};

use super::{check_training_set, Matrix};

#[derive(Debug, Clone, PartialEq)]
pub struct LogRegConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    /// L2 penalty `lambda / 2 * |w|^2` (bias not penalized).
    pub l2: f64,
    /// Stop when the gradient's max-norm falls below this.
    pub tol: f64,
    /// Recorded for provenance; full-batch descent from zero is deterministic.
    pub seed: u64,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            epochs: 2000,
            l2: 1e-3,
            tol: 1e-6,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogRegModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub config: LogRegConfig,
}

/// Per-epoch losses and the number of epochs actually run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LogRegTrace {
    pub losses: Vec<f64>,
    pub converged: bool,
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl LogRegModel {
    pub fn zeros(n_features: usize, config: LogRegConfig) -> Self {
        Self {
            weights: vec![0.0; n_features],
            bias: 0.0,
            config,
        }
    }

    pub fn predict_proba(&self, row: &[f64]) -> f64 {
        sigmoid(linear(&self.weights, self.bias, row))
    }
}

fn linear(w: &[f64], b: f64, row: &[f64]) -> f64 {
    b + dot(w, row)
}

/// Dot product with four running sums, which lets the compiler vectorize.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

fn targets(y: &[Label]) -> Vec<f64> {
    y.iter().map(|l| if l.is_positive() { 1.0 } else { 0.0 }).collect()
}

/// Regularized mean negative log-likelihood and its gradient `(dw, db)`.
pub fn loss_and_gradient(
    x: &Matrix,
    y: &[Label],
    weights: &[f64],
    bias: f64,
    l2: f64,
) -> (f64, Vec<f64>, f64) {
    let t = targets(y);
    let (loss, gw, gb) = objective(x, &t, weights, bias, l2, true);
    (loss.unwrap_or(f64::NAN), gw, gb)
}

/// Gradient, plus the loss when `with_loss` (it costs a logarithm per row).
fn objective(x: &Matrix, t: &[f64], w: &[f64], b: f64, l2: f64, with_loss: bool) -> (Option<f64>, Vec<f64>, f64) {
    let n = x.rows() as f64;
    let mut gw = vec![0.0; w.len()];
    let mut gb = 0.0;
    let mut loss = 0.0;
    for (row, &ti) in x.iter_rows().zip(t) {
        let z = linear(w, b, row);
        let p = if with_loss {
            // -log-likelihood as softplus(z) - t z, sharing exp(-|z|) with the sigmoid
            let e = (-z.abs()).exp();
            loss += e.ln_1p() + z.max(0.0) - ti * z;
            if z >= 0.0 { 1.0 / (1.0 + e) } else { e / (1.0 + e) }
        } else {
            // branch-free; exp overflow gives the correct limit 0
            1.0 / (1.0 + (-z).exp())
        };
        let r = p - ti;
        gb += r;
        for (g, xv) in gw.iter_mut().zip(row) {
            *g += r * xv;
        }
    }
    for (g, wv) in gw.iter_mut().zip(w) {
        *g = *g / n + l2 * wv;
    }
    let loss = with_loss.then(|| loss / n + w.iter().map(|v| v * v).sum::<f64>() * l2 / 2.0);
    (loss, gw, gb / n)
}

/// Full-batch gradient descent from zero weights.
pub fn train_logreg(x: &Matrix, y: &[Label], cfg: &LogRegConfig) -> Result<LogRegModel> {
    descend(x, y, cfg, None, false).map(|(m, _)| m)
}

/// Gradient descent from `init` (or zeros) without recording losses.
pub fn train_logreg_warm(x: &Matrix, y: &[Label], cfg: &LogRegConfig, init: Option<(&[f64], f64)>) -> Result<LogRegModel> {
    descend(x, y, cfg, init, false).map(|(m, _)| m)
}

/// Gradient descent from `init` (or zeros), returning the loss trace.
pub fn train_logreg_traced(
    x: &Matrix,
    y: &[Label],
    cfg: &LogRegConfig,
    init: Option<(&[f64], f64)>,
) -> Result<(LogRegModel, LogRegTrace)> {
    descend(x, y, cfg, init, true)
}

fn diverged(cfg: &LogRegConfig, loss: Option<f64>) -> Error {
    let at = loss.map(|l| format!(" (loss {l})")).unwrap_or_default();
    Error::Numerical(format!(
        "logistic regression diverged{at}; try a smaller learning rate than {}",
        cfg.learning_rate
    ))
}

fn descend(
    x: &Matrix,
    y: &[Label],
    cfg: &LogRegConfig,
    init: Option<(&[f64], f64)>,
    record: bool,
) -> Result<(LogRegModel, LogRegTrace)> {
    check_training_set(x, y)?;
    let mut model = LogRegModel::zeros(x.cols(), cfg.clone());
    if let Some((w, b)) = init {
        if w.len() != x.cols() {
            return Err(Error::Schema("initial weight count does not match features".into()));
        }
        model.weights.copy_from_slice(w);
        model.bias = b;
    }
    let t = targets(y);
    let mut trace = LogRegTrace::default();
    for _ in 0..cfg.epochs {
        let (loss, gw, gb) = objective(x, &t, &model.weights, model.bias, cfg.l2, record);
        if loss.is_some_and(|l| !l.is_finite()) || !gb.is_finite() || gw.iter().any(|g| !g.is_finite()) {
            return Err(diverged(cfg, loss));
        }
        trace.losses.extend(loss);
        let gmax = gw.iter().fold(gb.abs(), |m, g| m.max(g.abs()));
        if gmax < cfg.tol {
            trace.converged = true;
            break;
        }
        for (w, g) in model.weights.iter_mut().zip(&gw) {
            *w -= cfg.learning_rate * g;
        }
        model.bias -= cfg.learning_rate * gb;
    }
    if model.weights.iter().any(|w| !w.is_finite()) || !model.bias.is_finite() {
        return Err(Error::Numerical(
            "logistic regression produced non-finite weights; try a smaller learning rate".into(),
        ));
    }
    Ok((model, trace))
}
