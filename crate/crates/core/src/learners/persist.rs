//! Plain-text model files.
//!
//! ```text
//! adscreen-model 1
//! kind logreg
//! config learning_rate=1e-1 epochs=2000 l2=1e-3 tol=1e-6 seed=42
//! weights 2 1.25e0 -3.5e-1
//! bias 1e-1
//! end
//! ```
//!
//! Floats are written in shortest round-trip exponent form, so loading a saved
//! model reproduces every parameter bit for bit. Forests add one `tree <n>`
//! block per tree with `L <prob_ad>` / `S <feature> <threshold> <left> <right>`
//! node lines; SVMs add `sv <n> <p>` followed by `coef x_1 .. x_p` lines.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};

use super::{
    ForestConfig, ForestModel, Kernel, LogRegConfig, LogRegModel, Node, SvmModel, SvmReport,
    TrainedModel, Tree,
};

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "adscreen-model";

pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:e}")
}

fn join(vs: &[f64]) -> String {
    vs.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(" ")
}

pub fn write_model(model: &TrainedModel) -> String {
    let mut s = String::new();
    writeln!(s, "{MAGIC} {FORMAT_VERSION}").unwrap();
    writeln!(s, "kind {}", model.classifier()).unwrap();
    match model {
        TrainedModel::LogReg(m) => {
            let c = &m.config;
            writeln!(
                s,
                "config learning_rate={} epochs={} l2={} tol={} seed={}",
                fmt_f64(c.learning_rate),
                c.epochs,
                fmt_f64(c.l2),
                fmt_f64(c.tol),
                c.seed
            )
            .unwrap();
            writeln!(s, "weights {} {}", m.weights.len(), join(&m.weights)).unwrap();
            writeln!(s, "bias {}", fmt_f64(m.bias)).unwrap();
        }
        TrainedModel::Forest(m) => {
            let c = &m.config;
            let mf = c.max_features.map_or("auto".to_string(), |v| v.to_string());
            writeln!(
                s,
                "config n_trees={} max_depth={} min_samples_leaf={} max_features={mf} seed={}",
                c.n_trees, c.max_depth, c.min_samples_leaf, c.seed
            )
            .unwrap();
            writeln!(s, "n_features {}", m.n_features).unwrap();
            writeln!(s, "importances {} {}", m.importances.len(), join(&m.importances)).unwrap();
            for t in &m.trees {
                writeln!(s, "tree {}", t.nodes.len()).unwrap();
                for node in &t.nodes {
                    match node {
                        Node::Leaf { prob_ad } => writeln!(s, "L {}", fmt_f64(*prob_ad)),
                        Node::Internal {
                            feature,
                            threshold,
                            left,
                            right,
                        } => writeln!(s, "S {feature} {} {left} {right}", fmt_f64(*threshold)),
                    }
                    .unwrap();
                }
            }
        }
        TrainedModel::Svm(m) => {
            let k = &m.kernel;
            writeln!(
                s,
                "config c={} degree={} gamma={} coef0={}",
                fmt_f64(m.c),
                k.degree,
                fmt_f64(k.gamma),
                fmt_f64(k.coef0)
            )
            .unwrap();
            let r = &m.report;
            writeln!(
                s,
                "report iterations={} converged={} violation={} bias_from_bounds={}",
                r.iterations,
                r.converged,
                fmt_f64(r.violation),
                r.bias_from_bounds
            )
            .unwrap();
            writeln!(s, "bias {}", fmt_f64(m.bias)).unwrap();
            writeln!(s, "sv {} {}", m.support_vectors.len(), m.n_features()).unwrap();
            for (sv, a) in m.support_vectors.iter().zip(&m.dual_coef) {
                writeln!(s, "{} {}", fmt_f64(*a), join(sv)).unwrap();
            }
        }
    }
    s.push_str("end\n");
    s
}

/// Line cursor shared by the model and pipeline readers.
pub(crate) struct Lines<'a> {
    lines: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
}

fn bad(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Schema(format!("model file line {}: {msg}", line + 1))
}

pub(crate) fn parse_f64(line: usize, s: &str) -> Result<f64> {
    s.parse::<f64>().map_err(|_| bad(line, format!("bad number {s:?}")))
}

fn parse_usize(line: usize, s: &str) -> Result<usize> {
    s.parse::<usize>().map_err(|_| bad(line, format!("bad count {s:?}")))
}

impl<'a> Lines<'a> {
    pub(crate) fn new(text: &'a str) -> Self {
        Self {
            lines: text.lines().enumerate().peekable(),
        }
    }

    pub(crate) fn next_line(&mut self) -> Result<(usize, &'a str)> {
        self.lines
            .next()
            .ok_or_else(|| Error::Schema("model file ends unexpectedly".into()))
    }

    /// Next line, which must start with `key`; returns the remaining tokens.
    pub(crate) fn expect(&mut self, key: &str) -> Result<(usize, Vec<&'a str>)> {
        let (n, line) = self.next_line()?;
        let mut toks = line.split(' ');
        match toks.next() {
            Some(k) if k == key => Ok((n, toks.collect())),
            _ => Err(bad(n, format!("expected `{key}`, found {line:?}"))),
        }
    }

    /// `key n v1 .. vn`
    pub(crate) fn expect_vec(&mut self, key: &str) -> Result<Vec<f64>> {
        let (n, toks) = self.expect(key)?;
        let count = parse_usize(n, toks.first().copied().unwrap_or(""))?;
        if toks.len() != count + 1 {
            return Err(bad(n, format!("`{key}` declares {count} values, has {}", toks.len() - 1)));
        }
        toks[1..].iter().map(|t| parse_f64(n, t)).collect()
    }

    pub(crate) fn expect_f64(&mut self, key: &str) -> Result<f64> {
        let (n, toks) = self.expect(key)?;
        parse_f64(n, toks.first().copied().unwrap_or(""))
    }

    fn expect_kv(&mut self, key: &str) -> Result<(usize, BTreeMap<&'a str, &'a str>)> {
        let (n, toks) = self.expect(key)?;
        let mut map = BTreeMap::new();
        for t in toks {
            let (k, v) = t.split_once('=').ok_or_else(|| bad(n, format!("expected key=value, got {t:?}")))?;
            map.insert(k, v);
        }
        Ok((n, map))
    }
}

fn field<'a>(n: usize, map: &BTreeMap<&str, &'a str>, key: &str) -> Result<&'a str> {
    map.get(key).copied().ok_or_else(|| bad(n, format!("missing `{key}`")))
}

fn parse_bool(n: usize, s: &str) -> Result<bool> {
    s.parse::<bool>().map_err(|_| bad(n, format!("bad flag {s:?}")))
}

pub fn read_model(text: &str) -> Result<TrainedModel> {
    let mut lines = Lines::new(text);
    let m = read_model_from(&mut lines)?;
    Ok(m)
}

pub(crate) fn read_model_from(lines: &mut Lines<'_>) -> Result<TrainedModel> {
    let (n, toks) = lines.expect(MAGIC)?;
    if toks != [FORMAT_VERSION.to_string().as_str()] {
        return Err(bad(n, format!("unsupported format version {toks:?}")));
    }
    let (n, kind) = lines.expect("kind")?;
    let model = match kind.first().copied() {
        Some("logreg") => {
            let (n, c) = lines.expect_kv("config")?;
            let config = LogRegConfig {
                learning_rate: parse_f64(n, field(n, &c, "learning_rate")?)?,
                epochs: parse_usize(n, field(n, &c, "epochs")?)?,
                l2: parse_f64(n, field(n, &c, "l2")?)?,
                tol: parse_f64(n, field(n, &c, "tol")?)?,
                seed: field(n, &c, "seed")?.parse().map_err(|_| bad(n, "bad seed"))?,
            };
            TrainedModel::LogReg(LogRegModel {
                weights: lines.expect_vec("weights")?,
                bias: lines.expect_f64("bias")?,
                config,
            })
        }
        Some("rf") => {
            let (n, c) = lines.expect_kv("config")?;
            let mf = field(n, &c, "max_features")?;
            let config = ForestConfig {
                n_trees: parse_usize(n, field(n, &c, "n_trees")?)?,
                max_depth: parse_usize(n, field(n, &c, "max_depth")?)?,
                min_samples_leaf: parse_usize(n, field(n, &c, "min_samples_leaf")?)?,
                max_features: if mf == "auto" { None } else { Some(parse_usize(n, mf)?) },
                seed: field(n, &c, "seed")?.parse().map_err(|_| bad(n, "bad seed"))?,
            };
            let (n, nf) = lines.expect("n_features")?;
            let n_features = parse_usize(n, nf.first().copied().unwrap_or(""))?;
            let importances = lines.expect_vec("importances")?;
            let mut trees = Vec::with_capacity(config.n_trees);
            for _ in 0..config.n_trees {
                let (n, t) = lines.expect("tree")?;
                let count = parse_usize(n, t.first().copied().unwrap_or(""))?;
                let mut nodes = Vec::with_capacity(count);
                for _ in 0..count {
                    let (n, line) = lines.next_line()?;
                    let toks: Vec<&str> = line.split(' ').collect();
                    let node = match toks.as_slice() {
                        ["L", p] => Node::Leaf { prob_ad: parse_f64(n, p)? },
                        ["S", f, t, l, r] => Node::Internal {
                            feature: parse_usize(n, f)?,
                            threshold: parse_f64(n, t)?,
                            left: parse_usize(n, l)?,
                            right: parse_usize(n, r)?,
                        },
                        _ => return Err(bad(n, format!("bad tree node {line:?}"))),
                    };
                    nodes.push(node);
                }
                validate_tree(n, &nodes, n_features)?;
                trees.push(Tree { nodes });
            }
            TrainedModel::Forest(ForestModel {
                trees,
                n_features,
                importances,
                config,
            })
        }
        Some("svm") => {
            let (n, c) = lines.expect_kv("config")?;
            let cval = parse_f64(n, field(n, &c, "c")?)?;
            let kernel = Kernel {
                degree: field(n, &c, "degree")?.parse().map_err(|_| bad(n, "bad degree"))?,
                gamma: parse_f64(n, field(n, &c, "gamma")?)?,
                coef0: parse_f64(n, field(n, &c, "coef0")?)?,
            };
            let (n, r) = lines.expect_kv("report")?;
            let report = SvmReport {
                iterations: parse_usize(n, field(n, &r, "iterations")?)?,
                converged: parse_bool(n, field(n, &r, "converged")?)?,
                violation: parse_f64(n, field(n, &r, "violation")?)?,
                bias_from_bounds: parse_bool(n, field(n, &r, "bias_from_bounds")?)?,
            };
            let bias = lines.expect_f64("bias")?;
            let (n, dims) = lines.expect("sv")?;
            let (count, p) = match dims.as_slice() {
                [a, b] => (parse_usize(n, a)?, parse_usize(n, b)?),
                _ => return Err(bad(n, "expected `sv <count> <dim>`")),
            };
            let mut support_vectors = Vec::with_capacity(count);
            let mut dual_coef = Vec::with_capacity(count);
            for _ in 0..count {
                let (n, line) = lines.next_line()?;
                let vals: Vec<f64> = line.split(' ').map(|t| parse_f64(n, t)).collect::<Result<_>>()?;
                if vals.len() != p + 1 {
                    return Err(bad(n, format!("support vector has {} values, expected {}", vals.len(), p + 1)));
                }
                dual_coef.push(vals[0]);
                support_vectors.push(vals[1..].to_vec());
            }
            TrainedModel::Svm(SvmModel {
                support_vectors,
                dual_coef,
                bias,
                kernel,
                c: cval,
                report,
            })
        }
        _ => return Err(bad(n, format!("unknown model kind {kind:?}"))),
    };
    lines.expect("end")?;
    Ok(model)
}

fn validate_tree(line: usize, nodes: &[Node], n_features: usize) -> Result<()> {
    if nodes.is_empty() {
        return Err(bad(line, "empty tree"));
    }
    for node in nodes {
        if let Node::Internal { feature, left, right, .. } = *node {
            if feature >= n_features || left >= nodes.len() || right >= nodes.len() {
                return Err(bad(line, "tree node index out of range"));
            }
        }
    }
    Ok(())
}
