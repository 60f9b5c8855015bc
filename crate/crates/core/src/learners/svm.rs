use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::exec::Exec;

use super::{check_training_set, Matrix};

/// Polynomial kernel `(gamma <x, y> + coef0)^degree`.
pub fn kernel_poly(x: &[f64], y: &[f64], gamma: f64, coef0: f64, degree: u32) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Schema(format!(
            "kernel arguments have dimensions {} and {}",
            x.len(),
            y.len()
        )));
    }
    Ok(poly(x, y, gamma, coef0, degree))
}

fn poly(x: &[f64], y: &[f64], gamma: f64, coef0: f64, degree: u32) -> f64 {
    let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    (gamma * dot + coef0).powi(degree as i32)
}

/// Resolved polynomial kernel parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kernel {
    pub degree: u32,
    pub gamma: f64,
    pub coef0: f64,
}

impl Kernel {
    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        poly(x, y, self.gamma, self.coef0, self.degree)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmConfig {
    pub c: f64,
    pub degree: u32,
    /// `None` means `1 / n_features`.
    pub gamma: Option<f64>,
    pub coef0: f64,
    /// Stop when the maximal KKT violation falls below this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            degree: 4,
            gamma: None,
            coef0: 1.0,
            tol: 1e-3,
            max_iter: 200_000,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SvmReport {
    pub iterations: usize,
    pub converged: bool,
    /// Final maximal KKT violation.
    pub violation: f64,
    /// Bias came from the bounded-multiplier midpoint rule (no free support vectors).
    pub bias_from_bounds: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub support_vectors: Vec<Vec<f64>>,
    /// `alpha_i * y_i` per support vector.
    pub dual_coef: Vec<f64>,
    pub bias: f64,
    pub kernel: Kernel,
    pub c: f64,
    pub report: SvmReport,
}

impl SvmModel {
    pub fn n_features(&self) -> usize {
        self.support_vectors.first().map_or(0, Vec::len)
    }

    pub fn decision(&self, row: &[f64]) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.dual_coef)
            .map(|(sv, a)| a * self.kernel.eval(sv, row))
            .sum::<f64>()
            + self.bias
    }

    pub fn alphas(&self) -> impl Iterator<Item = f64> + '_ {
        self.dual_coef.iter().map(|a| a.abs())
    }

    /// `|sum alpha_i y_i|`.
    pub fn equality_residual(&self) -> f64 {
        self.dual_coef.iter().sum::<f64>().abs()
    }
}

const TAU: f64 = 1e-12;

/// C-SVM dual solved by SMO with maximal-violating-pair selection.
pub fn train_svm(x: &Matrix, labels: &[Label], cfg: &SvmConfig, exec: Exec) -> Result<SvmModel> {
    check_training_set(x, labels)?;
    if cfg.c.is_nan() || cfg.c <= 0.0 {
        return Err(Error::InvalidArgument(format!("SVM C must be positive, got {}", cfg.c)));
    }
    let n = x.rows();
    let kernel = Kernel {
        degree: cfg.degree,
        gamma: cfg.gamma.unwrap_or(1.0 / x.cols().max(1) as f64),
        coef0: cfg.coef0,
    };
    let y: Vec<f64> = labels.iter().map(|l| l.sign()).collect();
    let gram: Vec<Vec<f64>> = exec.map_range(n, |i| {
        (0..n).map(|j| kernel.eval(x.row(i), x.row(j))).collect()
    });
    if gram.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Numerical(
            "kernel matrix overflowed; standardize features or lower gamma".into(),
        ));
    }
    let q = |i: usize, j: usize| y[i] * y[j] * gram[i][j];
    let c = cfg.c;

    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let mut report = SvmReport::default();
    let upper = |a: f64| a >= c;
    let lower = |a: f64| a <= 0.0;

    loop {
        // i: maximal -y G over I_up; j: minimal -y G over I_low
        let mut gmax = f64::NEG_INFINITY;
        let mut gmax2 = f64::NEG_INFINITY;
        let mut i_sel = None;
        let mut j_sel = None;
        for t in 0..n {
            if y[t] > 0.0 {
                if !upper(alpha[t]) && -grad[t] > gmax {
                    gmax = -grad[t];
                    i_sel = Some(t);
                }
                if !lower(alpha[t]) && grad[t] > gmax2 {
                    gmax2 = grad[t];
                    j_sel = Some(t);
                }
            } else {
                if !lower(alpha[t]) && grad[t] > gmax {
                    gmax = grad[t];
                    i_sel = Some(t);
                }
                if !upper(alpha[t]) && -grad[t] > gmax2 {
                    gmax2 = -grad[t];
                    j_sel = Some(t);
                }
            }
        }
        report.violation = gmax + gmax2;
        let (Some(i), Some(j)) = (i_sel, j_sel) else {
            report.converged = true;
            break;
        };
        if report.violation < cfg.tol {
            report.converged = true;
            break;
        }
        if report.iterations >= cfg.max_iter {
            log::warn!(
                "SMO stopped after {} iterations with KKT violation {:.3e}",
                report.iterations,
                report.violation
            );
            break;
        }
        report.iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let quad = {
                let v = q(i, i) + q(j, j) + 2.0 * q(i, j);
                if v <= 0.0 {
                    TAU
                } else {
                    v
                }
            };
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = {
                let v = q(i, i) + q(j, j) - 2.0 * q(i, j);
                if v <= 0.0 {
                    TAU
                } else {
                    v
                }
            };
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for (k, g) in grad.iter_mut().enumerate() {
            *g += q(i, k) * di + q(j, k) * dj;
        }
    }

    // bias: mean of y G over free multipliers, else midpoint of the feasible interval
    let mut free_sum = 0.0;
    let mut n_free = 0usize;
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    for t in 0..n {
        let yg = y[t] * grad[t];
        if upper(alpha[t]) {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if lower(alpha[t]) {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            free_sum += yg;
        }
    }
    let rho = if n_free > 0 {
        free_sum / n_free as f64
    } else {
        report.bias_from_bounds = true;
        (ub + lb) / 2.0
    };

    let mut support_vectors = Vec::new();
    let mut dual_coef = Vec::new();
    for t in 0..n {
        if alpha[t] > 0.0 {
            support_vectors.push(x.row(t).to_vec());
            dual_coef.push(alpha[t] * y[t]);
        }
    }
    Ok(SvmModel {
        support_vectors,
        dual_coef,
        bias: -rho,
        kernel,
        c,
        report,
    })
}
