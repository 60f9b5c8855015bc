//! Recursive feature elimination.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{Dataset, FeatureTable};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::learners::{train_forest, train_logreg_warm, ForestConfig, LogRegConfig, Matrix};
use crate::vectorize::Standardizer;

/// Model whose weights rank features.
#[derive(Debug, Clone, PartialEq)]
pub enum RfeScorer {
    /// `|coefficient|` of L2 logistic regression on standardized columns.
    LogReg(LogRegConfig),
    /// Gini importance of a random forest.
    ForestImportance(ForestConfig),
}

impl Default for RfeScorer {
    fn default() -> Self {
        RfeScorer::LogReg(LogRegConfig::default())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RfeConfig {
    pub target: usize,
    pub step: usize,
    pub scorer: RfeScorer,
}

impl RfeConfig {
    pub fn new(target: usize) -> Self {
        Self {
            target,
            step: 1,
            scorer: RfeScorer::default(),
        }
    }
}

/// Selected columns plus the elimination ranking of every original column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureMask {
    /// Surviving columns in original order.
    pub kept: Vec<String>,
    /// 0 for kept columns; otherwise larger means eliminated earlier.
    pub ranking: BTreeMap<String, usize>,
    /// Number of estimator fits performed.
    pub refits: usize,
}

impl FeatureMask {
    /// Mask keeping every column of `columns`.
    pub fn identity(columns: &[String]) -> Self {
        Self {
            kept: columns.to_vec(),
            ranking: columns.iter().map(|c| (c.clone(), 0)).collect(),
            refits: 0,
        }
    }

    /// `feature,rank` CSV: kept columns first (rank 0, mask order), then the
    /// eliminated ones by increasing rank.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let err = |e: csv::Error| Error::Schema(e.to_string());
        w.write_record(["feature", "rank"]).map_err(err)?;
        for k in &self.kept {
            w.write_record([k.as_str(), "0"]).map_err(err)?;
        }
        let mut dropped: Vec<(&String, &usize)> = self.ranking.iter().filter(|(_, &r)| r > 0).collect();
        dropped.sort_by(|a, b| a.1.cmp(b.1).then_with(|| a.0.cmp(b.0)));
        for (name, rank) in dropped {
            w.write_record([name.as_str(), &rank.to_string()]).map_err(err)?;
        }
        w.flush().map_err(|e| Error::io("<mask output>", e))?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(f))
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(f);
        let header = rdr.headers().map_err(|e| Error::load(path, e.to_string()))?;
        if header.iter().collect::<Vec<_>>() != ["feature", "rank"] {
            return Err(Error::load(path, "missing header `feature,rank`"));
        }
        let mut kept = Vec::new();
        let mut ranking = BTreeMap::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::load(path, e.to_string()))?;
            let rank: usize = rec[1]
                .parse()
                .map_err(|_| Error::load(path, format!("bad rank {:?} for {}", &rec[1], &rec[0])))?;
            if ranking.insert(rec[0].to_string(), rank).is_some() {
                return Err(Error::load(path, format!("duplicate feature {}", &rec[0])));
            }
            if rank == 0 {
                kept.push(rec[0].to_string());
            }
        }
        Ok(Self {
            kept,
            ranking,
            refits: 0,
        })
    }
}

fn score_features(x: &Matrix, train: &Dataset, scorer: &RfeScorer, warm: Option<(&[f64], f64)>) -> Result<(Vec<f64>, f64)> {
    match scorer {
        RfeScorer::LogReg(cfg) => {
            let m = train_logreg_warm(x, &train.labels, cfg, warm)?;
            Ok((m.weights, m.bias))
        }
        RfeScorer::ForestImportance(cfg) => {
            let m = train_forest(x, &train.labels, cfg, Exec::Serial)?;
            Ok((m.importances, 0.0))
        }
    }
}

/// Drop the `step` lowest-weighted columns per round until `target` remain.
///
/// Columns are re-standardized on the survivors every round. Logistic-regression
/// refits start from the previous round's weights for the surviving columns.
pub fn rfe(train: &Dataset, cfg: &RfeConfig) -> Result<FeatureMask> {
    let p = train.n_features();
    if cfg.target == 0 || cfg.target > p {
        return Err(Error::InvalidArgument(format!(
            "RFE target {} must be between 1 and the feature count {p}",
            cfg.target
        )));
    }
    if cfg.step == 0 {
        return Err(Error::InvalidArgument("RFE step must be positive".into()));
    }
    train.require_both_classes()?;

    let mut surviving: Vec<usize> = (0..p).collect();
    let mut eliminated_round: Vec<Option<usize>> = vec![None; p];
    let mut warm: Option<(Vec<f64>, f64)> = None;
    let mut round = 0;
    while surviving.len() > cfg.target {
        round += 1;
        let sub = train.table.select_columns(&surviving);
        let z = Standardizer::fit(&sub)?.apply(&sub)?;
        let x = Matrix::from_table(&z)?;
        let (weights, bias) = score_features(
            &x,
            train,
            &cfg.scorer,
            warm.as_ref().map(|(w, b)| (w.as_slice(), *b)),
        )?;
        let mut order: Vec<usize> = (0..surviving.len()).collect();
        // lowest |w| first; among equal weights the higher column index goes first
        order.sort_by(|&a, &b| {
            weights[a]
                .abs()
                .total_cmp(&weights[b].abs())
                .then_with(|| surviving[b].cmp(&surviving[a]))
        });
        let n_drop = cfg.step.min(surviving.len() - cfg.target);
        let mut drop: Vec<usize> = order[..n_drop].to_vec();
        drop.sort_unstable();
        for &k in &drop {
            eliminated_round[surviving[k]] = Some(round);
        }
        let keep_local: Vec<usize> = (0..surviving.len()).filter(|k| drop.binary_search(k).is_err()).collect();
        warm = match cfg.scorer {
            RfeScorer::LogReg(_) => Some((keep_local.iter().map(|&k| weights[k]).collect(), bias)),
            RfeScorer::ForestImportance(_) => None,
        };
        surviving = keep_local.iter().map(|&k| surviving[k]).collect();
    }

    let columns = train.table.columns();
    let ranking = (0..p)
        .map(|j| {
            let rank = eliminated_round[j].map_or(0, |r| round - r + 1);
            (columns[j].clone(), rank)
        })
        .collect();
    Ok(FeatureMask {
        kept: surviving.iter().map(|&j| columns[j].clone()).collect(),
        ranking,
        refits: round,
    })
}

/// Project `table` onto the mask's columns, in mask order.
pub fn apply_mask(mask: &FeatureMask, table: &FeatureTable) -> Result<FeatureTable> {
    let idx = mask
        .kept
        .iter()
        .map(|name| {
            table
                .column_index(name)
                .ok_or_else(|| Error::Schema(format!("masked column {name} not in table")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(table.select_columns(&idx))
}
