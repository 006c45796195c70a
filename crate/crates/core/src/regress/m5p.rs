//! M5 model tree regression.
//!
//! Construction:
//! 1. Grow a binary tree choosing, at each node, the (feature, threshold)
//!    split with maximum standard-deviation reduction
//!    `SDR = sd(T) - Σ (|T_i|/|T|) * sd(T_i)`; candidate thresholds are
//!    midpoints between consecutive distinct sorted values. Growth stops
//!    when a node has fewer than `2 * min_leaf` rows, its target standard
//!    deviation falls below 5% of the root's, or no candidate achieves
//!    SDR > 0.
//! 2. Fit a least-squares linear model at every node over the features
//!    tested in its subtree (a plain mean when the subtree tests nothing or
//!    the system is singular).
//! 3. Prune bottom-up: a subtree is replaced by its node model when the
//!    model's complexity-adjusted mean absolute error — MAE scaled by
//!    `(n + p) / (n - p)`, p counting coefficients plus intercept — is no
//!    worse than the subtree's MAE on the node's rows.
//!
//! No smoothing pass is applied; predictions come straight from the leaf
//! model reached by descending the pruned tree.

use serde::{Deserialize, Serialize};

use super::linear::ols;
use super::{mean, Dataset, RegressError};

const SD_STOP_FRACTION: f64 = 0.05;

/// Linear model attached to a leaf: `intercept + Σ coefficients[i] *
/// features[feature_indices[i]]`. An empty index list is a plain mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeafModel {
    feature_indices: Vec<usize>,
    intercept: f64,
    coefficients: Vec<f64>,
}

impl LeafModel {
    fn constant(value: f64) -> Self {
        Self {
            feature_indices: Vec::new(),
            intercept: value,
            coefficients: Vec::new(),
        }
    }

    fn evaluate(&self, features: &[f64]) -> f64 {
        self.intercept
            + self
                .feature_indices
                .iter()
                .zip(&self.coefficients)
                .map(|(&f, c)| c * features[f])
                .sum::<f64>()
    }

    /// Parameter count for the pruning penalty: coefficients + intercept.
    fn param_count(&self) -> usize {
        self.coefficients.len() + 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Node {
    Leaf(LeafModel),
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

impl Node {
    fn evaluate(&self, features: &[f64]) -> f64 {
        match self {
            Node::Leaf(model) => model.evaluate(features),
            Node::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                if features[*feature] < *threshold {
                    left.evaluate(features)
                } else {
                    right.evaluate(features)
                }
            }
        }
    }

    fn leaf_count(&self) -> usize {
        match self {
            Node::Leaf(_) => 1,
            Node::Split { left, right, .. } => left.leaf_count() + right.leaf_count(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct M5pModel {
    root: Node,
    arity: usize,
    min_leaf: usize,
}

impl M5pModel {
    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn min_leaf(&self) -> usize {
        self.min_leaf
    }

    /// Number of leaves in the pruned tree.
    pub fn leaf_count(&self) -> usize {
        self.root.leaf_count()
    }

    pub(crate) fn predict_unchecked(&self, features: &[f64]) -> f64 {
        self.root.evaluate(features)
    }
}

fn population_sd(targets: &[f64], rows: &[usize]) -> f64 {
    let n = rows.len() as f64;
    let m = rows.iter().map(|&i| targets[i]).sum::<f64>() / n;
    let var = rows.iter().map(|&i| (targets[i] - m).powi(2)).sum::<f64>() / n;
    var.max(0.0).sqrt()
}

struct SplitChoice {
    feature: usize,
    threshold: f64,
    sdr: f64,
    left: Vec<usize>,
    right: Vec<usize>,
}

fn best_split(dataset: &Dataset, rows: &[usize]) -> Option<SplitChoice> {
    let n = rows.len();
    let sd_here = population_sd(dataset.targets(), rows);
    let mut best: Option<SplitChoice> = None;

    for feature in 0..dataset.arity() {
        let mut order = rows.to_vec();
        order.sort_by(|&a, &b| dataset.row(a)[feature].total_cmp(&dataset.row(b)[feature]));

        let mut prefix_y = vec![0.0; n + 1];
        let mut prefix_y2 = vec![0.0; n + 1];
        for (pos, &idx) in order.iter().enumerate() {
            let y = dataset.target(idx);
            prefix_y[pos + 1] = prefix_y[pos] + y;
            prefix_y2[pos + 1] = prefix_y2[pos] + y * y;
        }
        let total_y = prefix_y[n];
        let total_y2 = prefix_y2[n];

        for boundary in 1..n {
            let prev = dataset.row(order[boundary - 1])[feature];
            let next = dataset.row(order[boundary])[feature];
            if prev == next {
                continue;
            }
            let threshold = (prev + next) / 2.0;
            let nl = boundary as f64;
            let nr = (n - boundary) as f64;
            let sum_l = prefix_y[boundary];
            let sum_r = total_y - sum_l;
            let var_l = (prefix_y2[boundary] / nl - (sum_l / nl).powi(2)).max(0.0);
            let var_r = ((total_y2 - prefix_y2[boundary]) / nr - (sum_r / nr).powi(2)).max(0.0);
            let sdr = sd_here - (nl / n as f64) * var_l.sqrt() - (nr / n as f64) * var_r.sqrt();
            if sdr > 0.0 && best.as_ref().is_none_or(|b| sdr > b.sdr) {
                best = Some(SplitChoice {
                    feature,
                    threshold,
                    sdr,
                    left: order[..boundary].to_vec(),
                    right: order[boundary..].to_vec(),
                });
            }
        }
    }
    best
}

/// Unpruned tree skeleton carrying the row sets needed for model fitting.
enum BuildNode {
    Leaf {
        rows: Vec<usize>,
    },
    Split {
        feature: usize,
        threshold: f64,
        rows: Vec<usize>,
        left: Box<BuildNode>,
        right: Box<BuildNode>,
    },
}

fn grow(dataset: &Dataset, rows: Vec<usize>, min_leaf: usize, sd_root: f64) -> BuildNode {
    if rows.len() < 2 * min_leaf
        || population_sd(dataset.targets(), &rows) < SD_STOP_FRACTION * sd_root
    {
        return BuildNode::Leaf { rows };
    }
    match best_split(dataset, &rows) {
        Some(choice) => BuildNode::Split {
            feature: choice.feature,
            threshold: choice.threshold,
            rows,
            left: Box::new(grow(dataset, choice.left, min_leaf, sd_root)),
            right: Box::new(grow(dataset, choice.right, min_leaf, sd_root)),
        },
        None => BuildNode::Leaf { rows },
    }
}

/// Features tested anywhere in this subtree.
fn subtree_features(node: &BuildNode, out: &mut Vec<usize>) {
    if let BuildNode::Split {
        feature,
        left,
        right,
        ..
    } = node
    {
        if !out.contains(feature) {
            out.push(*feature);
        }
        subtree_features(left, out);
        subtree_features(right, out);
    }
}

fn fit_node_model(dataset: &Dataset, rows: &[usize], mut features: Vec<usize>) -> LeafModel {
    features.sort_unstable();
    let row_slices: Vec<&[f64]> = rows.iter().map(|&i| dataset.row(i)).collect();
    let targets: Vec<f64> = rows.iter().map(|&i| dataset.target(i)).collect();
    match ols(&row_slices, &targets, &features, false) {
        Some((intercept, coefficients)) => LeafModel {
            feature_indices: features,
            intercept,
            coefficients,
        },
        None => LeafModel::constant(mean(&targets)),
    }
}

fn mae_of_model(dataset: &Dataset, rows: &[usize], model: &LeafModel) -> f64 {
    rows.iter()
        .map(|&i| (model.evaluate(dataset.row(i)) - dataset.target(i)).abs())
        .sum::<f64>()
        / rows.len() as f64
}

fn mae_of_tree(dataset: &Dataset, rows: &[usize], node: &Node) -> f64 {
    rows.iter()
        .map(|&i| (node.evaluate(dataset.row(i)) - dataset.target(i)).abs())
        .sum::<f64>()
        / rows.len() as f64
}

/// Prune bottom-up, replacing subtrees whose node model is no worse than
/// the subtree once the model error is adjusted for complexity.
fn prune(dataset: &Dataset, build: BuildNode) -> Node {
    match build {
        BuildNode::Leaf { rows } => {
            let model = fit_node_model(dataset, &rows, Vec::new());
            Node::Leaf(model)
        }
        BuildNode::Split {
            feature,
            threshold,
            rows,
            left,
            right,
        } => {
            let mut features = Vec::new();
            subtree_features_of_split(&feature, &left, &right, &mut features);
            let model = fit_node_model(dataset, &rows, features);

            let pruned_left = prune(dataset, *left);
            let pruned_right = prune(dataset, *right);
            let subtree = Node::Split {
                feature,
                threshold,
                left: Box::new(pruned_left),
                right: Box::new(pruned_right),
            };

            let n = rows.len();
            let p = model.param_count();
            let model_mae = mae_of_model(dataset, &rows, &model);
            let adjusted = if n > p {
                model_mae * (n + p) as f64 / (n - p) as f64
            } else {
                f64::INFINITY
            };
            let subtree_mae = mae_of_tree(dataset, &rows, &subtree);
            if adjusted <= subtree_mae {
                Node::Leaf(model)
            } else {
                subtree
            }
        }
    }
}

fn subtree_features_of_split(
    feature: &usize,
    left: &BuildNode,
    right: &BuildNode,
    out: &mut Vec<usize>,
) {
    out.push(*feature);
    subtree_features(left, out);
    subtree_features(right, out);
    out.sort_unstable();
    out.dedup();
}

pub(super) fn fit(dataset: &Dataset, min_leaf: usize) -> Result<M5pModel, RegressError> {
    if dataset.is_empty() {
        return Err(RegressError::EmptyDataset);
    }
    let min_leaf = min_leaf.max(1);
    let rows: Vec<usize> = (0..dataset.len()).collect();
    let sd_root = population_sd(dataset.targets(), &rows);
    let build = grow(dataset, rows, min_leaf, sd_root);
    let root = prune(dataset, build);
    Ok(M5pModel {
        root,
        arity: dataset.arity(),
        min_leaf,
    })
}
