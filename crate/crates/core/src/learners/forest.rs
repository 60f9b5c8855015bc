use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::exec::Exec;

use super::{check_training_set, Matrix};

/// Gini impurity `1 - sum p_i^2` of a class distribution.
pub fn gini(class_probs: &[f64]) -> Result<f64> {
    let sum: f64 = class_probs.iter().sum();
    if class_probs.iter().any(|&p| p.is_nan() || p < 0.0) || (sum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "not a probability distribution: {class_probs:?}"
        )));
    }
    Ok(1.0 - class_probs.iter().map(|p| p * p).sum::<f64>())
}

fn gini_counts(ad: usize, cn: usize) -> f64 {
    let n = (ad + cn) as f64;
    if n == 0.0 {
        return 0.0;
    }
    let (pa, pc) = (ad as f64 / n, cn as f64 / n);
    1.0 - pa * pa - pc * pc
}

/// Axis-aligned split: rows with `x[feature] <= threshold` go left.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    /// Child-size-weighted Gini impurity after the split.
    pub impurity: f64,
}

/// `sum of squared class counts / size` for both children, kept as an exact
/// fraction `num / den` so candidate comparisons are tie-exact.
#[derive(Clone, Copy)]
struct Purity {
    num: u128,
    den: u128,
}

impl Purity {
    fn children(la: usize, lc: usize, ra: usize, rc: usize) -> Self {
        let (la, lc, ra, rc) = (la as u128, lc as u128, ra as u128, rc as u128);
        let (nl, nr) = (la + lc, ra + rc);
        Purity {
            num: (la * la + lc * lc) * nr + (ra * ra + rc * rc) * nl,
            den: nl * nr,
        }
    }

    fn parent(a: usize, c: usize) -> Self {
        let (a, c) = (a as u128, c as u128);
        Purity {
            num: a * a + c * c,
            den: a + c,
        }
    }

    fn beats(self, other: Purity) -> bool {
        self.num * other.den > other.num * self.den
    }
}

/// Best Gini split over `features`, evaluated on the rows in `rows`.
///
/// Thresholds are midpoints between consecutive distinct values. Ties go to
/// the lower feature index, then the lower threshold. `None` when no split
/// lowers the impurity.
pub fn best_split(x: &Matrix, y: &[Label], rows: &[usize], features: &[usize]) -> Option<Split> {
    best_split_min_leaf(x, y, rows, features, 1)
}

pub(crate) fn best_split_min_leaf(
    x: &Matrix,
    y: &[Label],
    rows: &[usize],
    features: &[usize],
    min_leaf: usize,
) -> Option<Split> {
    if rows.len() < 2 {
        return None;
    }
    let total_ad = rows.iter().filter(|&&i| y[i].is_positive()).count();
    let total_cn = rows.len() - total_ad;
    let mut best_purity = Purity::parent(total_ad, total_cn);
    let mut best: Option<(usize, f64)> = None;

    let mut feats = features.to_vec();
    feats.sort_unstable();
    feats.dedup();
    let mut order: Vec<(f64, bool)> = Vec::with_capacity(rows.len());
    for f in feats {
        order.clear();
        order.extend(rows.iter().map(|&i| (x.get(i, f), y[i].is_positive())));
        order.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (mut la, mut lc) = (0usize, 0usize);
        for k in 0..order.len() - 1 {
            if order[k].1 {
                la += 1;
            } else {
                lc += 1;
            }
            let (v, next) = (order[k].0, order[k + 1].0);
            if v == next {
                continue;
            }
            let nl = k + 1;
            if nl < min_leaf || order.len() - nl < min_leaf {
                continue;
            }
            let p = Purity::children(la, lc, total_ad - la, total_cn - lc);
            if p.beats(best_purity) {
                best_purity = p;
                best = Some((f, v + (next - v) / 2.0));
            }
        }
    }
    best.map(|(feature, threshold)| Split {
        feature,
        threshold,
        impurity: 1.0 - best_purity.num as f64 / (best_purity.den as f64 * rows.len() as f64),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Leaf {
        /// Fraction of `ad` rows reaching this leaf; `cn` is `1 - prob_ad`.
        prob_ad: f64,
    },
    Internal {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Decision tree stored as a node arena; node 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn prob_ad(&self, row: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { prob_ad } => return prob_ad,
                Node::Internal {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if row[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn votes_ad(&self, row: &[f64]) -> bool {
        self.prob_ad(row) > 0.5
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Internal { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// Candidate features per split; `None` means `ceil(sqrt(p))`.
    pub max_features: Option<usize>,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: 12,
            min_samples_leaf: 2,
            max_features: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    pub trees: Vec<Tree>,
    pub n_features: usize,
    /// Total weighted Gini decrease per feature, normalized to sum to 1.
    pub importances: Vec<f64>,
    pub config: ForestConfig,
}

impl ForestModel {
    /// Fraction of trees voting `ad`.
    pub fn vote_fraction(&self, row: &[f64]) -> f64 {
        let votes = self.trees.iter().filter(|t| t.votes_ad(row)).count();
        votes as f64 / self.trees.len() as f64
    }
}

struct Builder<'a> {
    x: &'a Matrix,
    y: &'a [Label],
    cfg: &'a ForestConfig,
    mtry: usize,
    nodes: Vec<Node>,
    importance: Vec<f64>,
}

impl Builder<'_> {
    fn grow(&mut self, rows: &[usize], depth: usize, rng: &mut ChaCha8Rng) -> usize {
        let ad = rows.iter().filter(|&&i| self.y[i].is_positive()).count();
        let cn = rows.len() - ad;
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf {
            prob_ad: ad as f64 / rows.len() as f64,
        });
        if depth >= self.cfg.max_depth
            || ad == 0
            || cn == 0
            || rows.len() < 2 * self.cfg.min_samples_leaf.max(1)
        {
            return id;
        }
        let p = self.x.cols();
        let features = sample(rng, p, self.mtry.min(p)).into_vec();
        let Some(split) =
            best_split_min_leaf(self.x, self.y, rows, &features, self.cfg.min_samples_leaf.max(1))
        else {
            return id;
        };
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
            .iter()
            .partition(|&&i| self.x.get(i, split.feature) <= split.threshold);
        let n = rows.len() as f64;
        self.importance[split.feature] += n * (gini_counts(ad, cn) - split.impurity);
        let left = self.grow(&left_rows, depth + 1, rng);
        let right = self.grow(&right_rows, depth + 1, rng);
        self.nodes[id] = Node::Internal {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        id
    }
}

fn grow_tree(x: &Matrix, y: &[Label], cfg: &ForestConfig, mtry: usize, index: usize) -> (Tree, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(index as u64));
    let n = x.rows();
    let boot: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
    let mut b = Builder {
        x,
        y,
        cfg,
        mtry,
        nodes: Vec::new(),
        importance: vec![0.0; x.cols()],
    };
    b.grow(&boot, 0, &mut rng);
    (Tree { nodes: b.nodes }, b.importance)
}

/// Bagged Gini trees. Tree `i` draws from its own RNG seeded with `seed + i`,
/// so serial and parallel training give identical forests.
pub fn train_forest(x: &Matrix, y: &[Label], cfg: &ForestConfig, exec: Exec) -> Result<ForestModel> {
    check_training_set(x, y)?;
    if cfg.n_trees == 0 {
        return Err(Error::InvalidArgument("forest needs at least one tree".into()));
    }
    let p = x.cols();
    let mtry = cfg
        .max_features
        .unwrap_or_else(|| (p as f64).sqrt().ceil() as usize)
        .clamp(1, p.max(1));
    let grown = exec.map_range(cfg.n_trees, |i| grow_tree(x, y, cfg, mtry, i));
    let mut importances = vec![0.0; p];
    let mut trees = Vec::with_capacity(grown.len());
    for (tree, imp) in grown {
        for (a, b) in importances.iter_mut().zip(imp) {
            *a += b;
        }
        trees.push(tree);
    }
    let total: f64 = importances.iter().sum();
    if total > 0.0 {
        importances.iter_mut().for_each(|v| *v /= total);
    }
    Ok(ForestModel {
        trees,
        n_features: p,
        importances,
        config: cfg.clone(),
    })
}
