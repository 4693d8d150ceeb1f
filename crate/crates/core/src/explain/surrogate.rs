//! Regression surrogates trained on (row, rank position) pairs.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Ranking};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SurrogateKind {
    RidgeLinear,
    RegressionTree,
}

impl std::str::FromStr for SurrogateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ridge-linear" | "linear" => Ok(SurrogateKind::RidgeLinear),
            "regression-tree" | "tree" => Ok(SurrogateKind::RegressionTree),
            other => Err(Error::Parameter(format!("unknown surrogate kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    /// Ridge damping on the one-hot weights.
    pub lambda: f64,
    pub max_depth: usize,
    /// Smallest number of rows either side of a split may keep.
    pub min_leaf: usize,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            lambda: 1e-6,
            max_depth: 6,
            min_leaf: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    Leaf {
        value: f64,
    },
    /// Rows with `attribute == code` go to `yes`, the rest to `no`.
    Split {
        attribute: usize,
        code: u32,
        yes: usize,
        no: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ModelParams {
    /// `intercept + sum_a weights[a][x_a]`.
    Linear { intercept: f64, weights: Vec<Vec<f64>> },
    /// Node 0 is the root.
    Tree { nodes: Vec<TreeNode> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateModel {
    pub kind: SurrogateKind,
    pub params: ModelParams,
    pub train_mse: f64,
    /// Set when the training rows carry no signal and a constant model was returned.
    pub degenerate: bool,
}

impl SurrogateModel {
    pub fn linear(intercept: f64, weights: Vec<Vec<f64>>) -> Self {
        SurrogateModel {
            kind: SurrogateKind::RidgeLinear,
            params: ModelParams::Linear { intercept, weights },
            train_mse: f64::NAN,
            degenerate: false,
        }
    }

    pub fn tree(nodes: Vec<TreeNode>) -> Self {
        SurrogateModel {
            kind: SurrogateKind::RegressionTree,
            params: ModelParams::Tree { nodes },
            train_mse: f64::NAN,
            degenerate: false,
        }
    }

    /// Predicted rank position of `row`.
    pub fn predict(&self, row: &[u32]) -> f64 {
        match &self.params {
            ModelParams::Linear { intercept, weights } => {
                let mut y = *intercept;
                for (w, &c) in weights.iter().zip(row) {
                    y += w[c as usize];
                }
                y
            }
            ModelParams::Tree { nodes } => {
                let mut i = 0;
                loop {
                    match nodes[i] {
                        TreeNode::Leaf { value } => return value,
                        TreeNode::Split {
                            attribute,
                            code,
                            yes,
                            no,
                        } => i = if row[attribute] == code { yes } else { no },
                    }
                }
            }
        }
    }

    pub fn leaf_count(&self) -> usize {
        match &self.params {
            ModelParams::Linear { .. } => 1,
            ModelParams::Tree { nodes } => nodes.iter().filter(|n| matches!(n, TreeNode::Leaf { .. })).count(),
        }
    }

    /// Longest root-to-leaf path, in splits.
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], i: usize) -> usize {
            match nodes[i] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { yes, no, .. } => 1 + walk(nodes, yes).max(walk(nodes, no)),
            }
        }
        match &self.params {
            ModelParams::Linear { .. } => 0,
            ModelParams::Tree { nodes } => walk(nodes, 0),
        }
    }
}

/// Rank position (1 = best) of every row, in row order.
pub fn rank_targets(ranking: &Ranking) -> Vec<f64> {
    ranking.positions().iter().map(|&p| p as f64).collect()
}

/// Fits a surrogate mapping each row to its rank position.
pub fn fit_surrogate(data: &Dataset, ranking: &Ranking, kind: SurrogateKind, hp: &Hyperparams) -> Result<SurrogateModel> {
    if data.n_rows() < 2 {
        return Err(Error::Parameter("a surrogate needs at least two rows".into()));
    }
    if ranking.len() != data.n_rows() {
        return Err(Error::MalformedRanking("ranking and dataset differ in length".into()));
    }
    let y = rank_targets(ranking);
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let first = data.row(0);
    let degenerate = data.rows().all(|r| r == first);
    let mut model = if degenerate {
        let weights = data.schema().domain_sizes().iter().map(|&d| vec![0.0; d]).collect();
        let mut m = SurrogateModel::linear(mean, weights);
        m.kind = kind;
        m.degenerate = true;
        m
    } else {
        match kind {
            SurrogateKind::RidgeLinear => fit_linear(data, &y, mean, hp.lambda),
            SurrogateKind::RegressionTree => fit_tree(data, &y, hp),
        }
    };
    model.train_mse = data
        .rows()
        .zip(&y)
        .map(|(r, t)| (model.predict(r) - t).powi(2))
        .sum::<f64>()
        / y.len() as f64;
    Ok(model)
}

fn fit_linear(data: &Dataset, y: &[f64], y_mean: f64, lambda: f64) -> SurrogateModel {
    let sizes = data.schema().domain_sizes();
    let offsets: Vec<usize> = sizes
        .iter()
        .scan(0, |acc, &d| {
            let o = *acc;
            *acc += d;
            Some(o)
        })
        .collect();
    let p: usize = sizes.iter().sum();
    let n = data.n_rows();

    // centred one-hot design; the intercept stays unpenalized
    let mut freq = vec![0.0; p];
    for row in data.rows() {
        for (a, &c) in row.iter().enumerate() {
            freq[offsets[a] + c as usize] += 1.0;
        }
    }
    for f in &mut freq {
        *f /= n as f64;
    }
    let x = DMatrix::from_fn(n, p, |i, j| {
        let row = data.row(i);
        let a = offsets.partition_point(|&o| o <= j) - 1;
        let hot = if offsets[a] + row[a] as usize == j { 1.0 } else { 0.0 };
        hot - freq[j]
    });
    let yc = DVector::from_iterator(n, y.iter().map(|v| v - y_mean));
    let gram = x.transpose() * &x + DMatrix::identity(p, p) * lambda;
    let rhs = x.transpose() * yc;
    let w = match gram.clone().cholesky() {
        Some(ch) => ch.solve(&rhs),
        None => gram.lu().solve(&rhs).unwrap_or_else(|| DVector::zeros(p)),
    };

    let intercept = y_mean - (0..p).map(|j| w[j] * freq[j]).sum::<f64>();
    let weights = sizes
        .iter()
        .enumerate()
        .map(|(a, &d)| (0..d).map(|c| w[offsets[a] + c]).collect())
        .collect();
    SurrogateModel::linear(intercept, weights)
}

fn fit_tree(data: &Dataset, y: &[f64], hp: &Hyperparams) -> SurrogateModel {
    let mut nodes = Vec::new();
    let rows: Vec<usize> = (0..data.n_rows()).collect();
    grow(data, y, hp, &rows, 0, &mut nodes);
    SurrogateModel::tree(nodes)
}

fn grow(data: &Dataset, y: &[f64], hp: &Hyperparams, rows: &[usize], depth: usize, nodes: &mut Vec<TreeNode>) -> usize {
    let id = nodes.len();
    let n = rows.len() as f64;
    let total: f64 = rows.iter().map(|&r| y[r]).sum();
    nodes.push(TreeNode::Leaf { value: total / n });
    if depth >= hp.max_depth || rows.len() < 2 * hp.min_leaf.max(1) {
        return id;
    }

    // gain of splitting S into L, R: sum_L^2/|L| + sum_R^2/|R| - sum_S^2/|S|
    let base = total * total / n;
    let mut best: Option<(f64, usize, u32)> = None;
    for (a, attr) in data.schema().attributes().iter().enumerate() {
        let mut sums = vec![0.0; attr.domain_size()];
        let mut counts = vec![0usize; attr.domain_size()];
        for &r in rows {
            let c = data.row(r)[a] as usize;
            sums[c] += y[r];
            counts[c] += 1;
        }
        for c in 0..attr.domain_size() {
            let (ny, nn) = (counts[c], rows.len() - counts[c]);
            if ny < hp.min_leaf.max(1) || nn < hp.min_leaf.max(1) {
                continue;
            }
            let gain = sums[c] * sums[c] / ny as f64 + (total - sums[c]).powi(2) / nn as f64 - base;
            if gain > 1e-9 * base.abs().max(1.0) && best.map_or(true, |(g, _, _)| gain > g) {
                best = Some((gain, a, c as u32));
            }
        }
    }
    let Some((_, attribute, code)) = best else {
        return id;
    };
    let (yes_rows, no_rows): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&r| data.row(r)[attribute] == code);
    let yes = grow(data, y, hp, &yes_rows, depth + 1, nodes);
    let no = grow(data, y, hp, &no_rows, depth + 1, nodes);
    nodes[id] = TreeNode::Split {
        attribute,
        code,
        yes,
        no,
    };
    id
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::students;
    use crate::generators::random_dataset;
    use crate::data::{Ranking, RankingSource};

    fn ranked_by_first_attribute(data: &Dataset) -> Ranking {
        let mut order: Vec<usize> = (0..data.n_rows()).collect();
        order.sort_by_key(|&i| (data.row(i)[0], i));
        Ranking::from_order(order, RankingSource::ScoreDerived).unwrap()
    }

    #[test]
    fn linear_beats_intercept_only() {
        let data = random_dataset(5, 200, &[4, 3, 2]).unwrap();
        let ranking = ranked_by_first_attribute(&data);
        let model = fit_surrogate(&data, &ranking, SurrogateKind::RidgeLinear, &Hyperparams::default()).unwrap();
        let y = rank_targets(&ranking);
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / y.len() as f64;
        assert!(model.train_mse < var);
        assert!(!model.degenerate);
    }

    #[test]
    fn predictions_correlate_with_ranks() {
        let data = random_dataset(6, 150, &[3, 3, 3]).unwrap();
        let ranking = ranked_by_first_attribute(&data);
        for kind in [SurrogateKind::RidgeLinear, SurrogateKind::RegressionTree] {
            let model = fit_surrogate(&data, &ranking, kind, &Hyperparams::default()).unwrap();
            let y = rank_targets(&ranking);
            let pred: Vec<f64> = data.rows().map(|r| model.predict(r)).collect();
            let (my, mp) = (
                y.iter().sum::<f64>() / y.len() as f64,
                pred.iter().sum::<f64>() / pred.len() as f64,
            );
            let cov: f64 = y.iter().zip(&pred).map(|(a, b)| (a - my) * (b - mp)).sum();
            assert!(cov > 0.0, "{kind:?}");
        }
    }

    #[test]
    fn tree_depth_bounds_leaves() {
        let (data, ranking) = students();
        let hp = Hyperparams {
            max_depth: 3,
            ..Hyperparams::default()
        };
        let model = fit_surrogate(&data, &ranking, SurrogateKind::RegressionTree, &hp).unwrap();
        assert!(model.leaf_count() <= 8);
        assert!(model.depth() <= 3);
    }

    #[test]
    fn identical_rows_give_a_constant_model() {
        let data = Dataset::from_labels(&["A", "B"], &[vec!["x", "y"], vec!["x", "y"], vec!["x", "y"]]).unwrap();
        let ranking = Ranking::from_order(vec![2, 0, 1], RankingSource::ScoreDerived).unwrap();
        let model = fit_surrogate(&data, &ranking, SurrogateKind::RegressionTree, &Hyperparams::default()).unwrap();
        assert!(model.degenerate);
        assert_eq!(model.predict(data.row(0)), 2.0);
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("tree".parse::<SurrogateKind>().unwrap(), SurrogateKind::RegressionTree);
        assert!("forest".parse::<SurrogateKind>().is_err());
    }
}
