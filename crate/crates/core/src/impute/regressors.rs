//! Regressors behind round-robin iterative imputation: a Bayesian ridge with
//! evidence-maximized hyperparameters, a CART regressor with
//! variance-reduction splits, and an extra-trees ensemble with random
//! thresholds on random feature subsets.

use ndarray::{Array1, Array2, ArrayView2};
use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::seed;

/// Cholesky factorization of an SPD matrix; returns the lower factor.
fn cholesky(a: &Array2<f64>) -> Option<Array2<f64>> {
    let n = a.nrows();
    let mut l = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[[i, j]];
            for k in 0..j {
                sum -= l[[i, k]] * l[[j, k]];
            }
            if i == j {
                if sum <= 0.0 {
                    return None;
                }
                l[[i, j]] = sum.sqrt();
            } else {
                l[[i, j]] = sum / l[[j, j]];
            }
        }
    }
    Some(l)
}

fn cholesky_solve(l: &Array2<f64>, b: &[f64]) -> Vec<f64> {
    let n = l.nrows();
    let mut z = vec![0.0; n];
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[[i, k]] * z[k];
        }
        z[i] = sum / l[[i, i]];
    }
    let mut w = vec![0.0; n];
    for i in (0..n).rev() {
        let mut sum = z[i];
        for k in (i + 1)..n {
            sum -= l[[k, i]] * w[k];
        }
        w[i] = sum / l[[i, i]];
    }
    w
}

/// Linear model with an L2 prior. Hyperparameters (noise precision `alpha`,
/// weight precision `lambda`) are either updated by evidence iteration or
/// held fixed.
#[derive(Debug, Clone)]
pub struct BayesianRidge {
    pub max_update_rounds: usize,
    /// `Some((alpha, lambda))` skips the evidence updates.
    pub fixed: Option<(f64, f64)>,
}

impl Default for BayesianRidge {
    fn default() -> Self {
        BayesianRidge {
            max_update_rounds: 50,
            fixed: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FittedRidge {
    weights: Vec<f64>,
    x_mean: Vec<f64>,
    y_mean: f64,
    pub alpha: f64,
    pub lambda: f64,
}

impl BayesianRidge {
    pub fn fit(&self, x: ArrayView2<'_, f64>, y: &[f64]) -> FittedRidge {
        let (n, p) = x.dim();
        assert_eq!(n, y.len());
        assert!(n > 0);

        let x_mean: Vec<f64> = (0..p).map(|j| x.column(j).sum() / n as f64).collect();
        let y_mean = y.iter().sum::<f64>() / n as f64;
        let mut xc = x.to_owned();
        for j in 0..p {
            xc.column_mut(j).mapv_inplace(|v| v - x_mean[j]);
        }
        let yc: Array1<f64> = Array1::from_iter(y.iter().map(|&v| v - y_mean));

        let xtx = xc.t().dot(&xc);
        let xty = xc.t().dot(&yc);

        let y_var = yc.iter().map(|v| v * v).sum::<f64>() / n as f64;
        let (mut alpha, mut lambda) = self
            .fixed
            .unwrap_or((if y_var > 0.0 { 1.0 / y_var } else { 1.0 }, 1.0));

        const EPS: f64 = 1e-6; // flat gamma prior hyperparameters
        let mut weights = vec![0.0; p];
        let rounds = if self.fixed.is_some() {
            1
        } else {
            self.max_update_rounds.max(1)
        };
        for _ in 0..rounds {
            let mut system = xtx.mapv(|v| alpha * v);
            for j in 0..p {
                system[[j, j]] += lambda;
            }
            let Some(l) = cholesky(&system) else { break };
            let rhs: Vec<f64> = xty.iter().map(|&v| alpha * v).collect();
            let w = cholesky_solve(&l, &rhs);
            if w.iter().any(|v| !v.is_finite()) {
                break;
            }
            let converged = weights
                .iter()
                .zip(&w)
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>()
                < 1e-9;
            weights = w;
            if self.fixed.is_some() || converged {
                break;
            }

            // Evidence updates: effective parameter count via tr(posterior cov).
            let mut trace = 0.0;
            let mut unit = vec![0.0; p];
            for j in 0..p {
                unit[j] = 1.0;
                trace += cholesky_solve(&l, &unit)[j];
                unit[j] = 0.0;
            }
            let gamma = (p as f64 - lambda * trace).clamp(0.0, p as f64);
            let wtw: f64 = weights.iter().map(|v| v * v).sum();
            let mut rss = 0.0;
            for i in 0..n {
                let pred: f64 = (0..p).map(|j| xc[[i, j]] * weights[j]).sum();
                rss += (yc[i] - pred) * (yc[i] - pred);
            }
            let new_lambda = (gamma + 2.0 * EPS) / (wtw + 2.0 * EPS);
            let new_alpha = (n as f64 - gamma + 2.0 * EPS) / (rss + 2.0 * EPS);
            if !new_lambda.is_finite() || !new_alpha.is_finite() {
                break;
            }
            lambda = new_lambda;
            alpha = new_alpha;
        }

        FittedRidge {
            weights,
            x_mean,
            y_mean,
            alpha,
            lambda,
        }
    }
}

impl FittedRidge {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.y_mean
            + self
                .weights
                .iter()
                .zip(row.iter().zip(&self.x_mean))
                .map(|(w, (x, m))| w * (x - m))
                .sum::<f64>()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// CART regression tree: exhaustive variance-reduction splits, midpoint
/// thresholds, deterministic tie-breaking by lowest feature index then lowest
/// threshold.
#[derive(Debug, Clone)]
pub struct DecisionTreeRegressor {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
}

impl Default for DecisionTreeRegressor {
    fn default() -> Self {
        DecisionTreeRegressor {
            max_depth: 12,
            min_samples_leaf: 3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FittedTree {
    nodes: Vec<Node>,
}

struct SseScan {
    sum: f64,
    sumsq: f64,
}

impl SseScan {
    fn sse(&self, n: usize) -> f64 {
        (self.sumsq - self.sum * self.sum / n as f64).max(0.0)
    }
}

impl DecisionTreeRegressor {
    pub fn fit(&self, x: ArrayView2<'_, f64>, y: &[f64]) -> FittedTree {
        let mut nodes = Vec::new();
        let idx: Vec<usize> = (0..y.len()).collect();
        build_cart(
            &mut nodes,
            &x,
            y,
            idx,
            0,
            self.max_depth,
            self.min_samples_leaf,
        );
        FittedTree { nodes }
    }
}

fn node_mean(y: &[f64], idx: &[usize]) -> f64 {
    idx.iter().map(|&i| y[i]).sum::<f64>() / idx.len() as f64
}

fn build_cart(
    nodes: &mut Vec<Node>,
    x: &ArrayView2<'_, f64>,
    y: &[f64],
    idx: Vec<usize>,
    depth: usize,
    max_depth: usize,
    min_leaf: usize,
) -> usize {
    let n = idx.len();
    let mean = node_mean(y, &idx);
    let node_sse: f64 = idx.iter().map(|&i| (y[i] - mean) * (y[i] - mean)).sum();
    if depth >= max_depth || n < 2 * min_leaf || node_sse <= 1e-24 {
        nodes.push(Node::Leaf { value: mean });
        return nodes.len() - 1;
    }

    let p = x.ncols();
    let mut best: Option<(f64, usize, f64)> = None; // (sse, feature, threshold)
    let mut scratch: Vec<(f64, f64)> = Vec::with_capacity(n);
    for feature in 0..p {
        scratch.clear();
        scratch.extend(idx.iter().map(|&i| (x[[i, feature]], y[i])));
        scratch.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let total_sum: f64 = scratch.iter().map(|&(_, v)| v).sum();
        let total_sumsq: f64 = scratch.iter().map(|&(_, v)| v * v).sum();
        let mut left = SseScan { sum: 0.0, sumsq: 0.0 };
        for i in 0..n - 1 {
            left.sum += scratch[i].1;
            left.sumsq += scratch[i].1 * scratch[i].1;
            let n_left = i + 1;
            let n_right = n - n_left;
            if scratch[i].0 == scratch[i + 1].0 {
                continue;
            }
            if n_left < min_leaf || n_right < min_leaf {
                continue;
            }
            let right = SseScan {
                sum: total_sum - left.sum,
                sumsq: total_sumsq - left.sumsq,
            };
            let sse = left.sse(n_left) + right.sse(n_right);
            let threshold = 0.5 * (scratch[i].0 + scratch[i + 1].0);
            let improves = match best {
                None => sse < node_sse - 1e-24,
                Some((best_sse, _, _)) => sse < best_sse,
            };
            if improves {
                best = Some((sse, feature, threshold));
            }
        }
    }

    match best {
        None => {
            nodes.push(Node::Leaf { value: mean });
            nodes.len() - 1
        }
        Some((_, feature, threshold)) => {
            let (left_idx, right_idx): (Vec<usize>, Vec<usize>) =
                idx.into_iter().partition(|&i| x[[i, feature]] <= threshold);
            let slot = nodes.len();
            nodes.push(Node::Leaf { value: mean }); // placeholder
            let left = build_cart(nodes, x, y, left_idx, depth + 1, max_depth, min_leaf);
            let right = build_cart(nodes, x, y, right_idx, depth + 1, max_depth, min_leaf);
            nodes[slot] = Node::Split {
                feature,
                threshold,
                left,
                right,
            };
            slot
        }
    }
}

impl FittedTree {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if row[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }
}

/// Extra-trees ensemble: each tree draws random thresholds on a random
/// feature subset per node; prediction is the mean over trees. Per-tree seeds
/// derive from the ensemble seed, so fitting is parallelism-invariant.
#[derive(Debug, Clone)]
pub struct ExtraTreesRegressor {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub seed: u64,
}

impl Default for ExtraTreesRegressor {
    fn default() -> Self {
        ExtraTreesRegressor {
            n_trees: 10,
            max_depth: 12,
            min_samples_leaf: 1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FittedForest {
    trees: Vec<FittedTree>,
}

impl ExtraTreesRegressor {
    pub fn fit(&self, x: ArrayView2<'_, f64>, y: &[f64]) -> FittedForest {
        let trees: Vec<FittedTree> = (0..self.n_trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = seed::rng(self.seed, "extra-tree", t as u64);
                let mut nodes = Vec::new();
                let idx: Vec<usize> = (0..y.len()).collect();
                build_extra(
                    &mut nodes,
                    &x,
                    y,
                    idx,
                    0,
                    self.max_depth,
                    self.min_samples_leaf,
                    &mut rng,
                );
                FittedTree { nodes }
            })
            .collect();
        FittedForest { trees }
    }
}

#[allow(clippy::too_many_arguments)]
fn build_extra(
    nodes: &mut Vec<Node>,
    x: &ArrayView2<'_, f64>,
    y: &[f64],
    idx: Vec<usize>,
    depth: usize,
    max_depth: usize,
    min_leaf: usize,
    rng: &mut ChaCha8Rng,
) -> usize {
    let n = idx.len();
    let mean = node_mean(y, &idx);
    let node_sse: f64 = idx.iter().map(|&i| (y[i] - mean) * (y[i] - mean)).sum();
    if depth >= max_depth || n < 2 * min_leaf || n < 2 || node_sse <= 1e-24 {
        nodes.push(Node::Leaf { value: mean });
        return nodes.len() - 1;
    }

    // Features with spread at this node.
    let p = x.ncols();
    let mut usable: Vec<(usize, f64, f64)> = Vec::new();
    for feature in 0..p {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &i in &idx {
            lo = lo.min(x[[i, feature]]);
            hi = hi.max(x[[i, feature]]);
        }
        if hi > lo {
            usable.push((feature, lo, hi));
        }
    }
    if usable.is_empty() {
        nodes.push(Node::Leaf { value: mean });
        return nodes.len() - 1;
    }

    let n_candidates = ((p as f64).sqrt().ceil() as usize).clamp(1, usable.len());
    let mut chosen = sample(rng, usable.len(), n_candidates).into_vec();
    chosen.sort_unstable();

    let mut best: Option<(f64, usize, f64)> = None;
    for slot in chosen {
        let (feature, lo, hi) = usable[slot];
        let threshold = rng.gen_range(lo..hi);
        let mut left = SseScan { sum: 0.0, sumsq: 0.0 };
        let mut n_left = 0;
        for &i in &idx {
            if x[[i, feature]] <= threshold {
                left.sum += y[i];
                left.sumsq += y[i] * y[i];
                n_left += 1;
            }
        }
        let n_right = n - n_left;
        if n_left < min_leaf || n_right < min_leaf {
            continue;
        }
        let total_sum: f64 = idx.iter().map(|&i| y[i]).sum();
        let total_sumsq: f64 = idx.iter().map(|&i| y[i] * y[i]).sum();
        let right = SseScan {
            sum: total_sum - left.sum,
            sumsq: total_sumsq - left.sumsq,
        };
        let sse = left.sse(n_left) + right.sse(n_right);
        if best.is_none_or(|(b, _, _)| sse < b) {
            best = Some((sse, feature, threshold));
        }
    }

    match best {
        None => {
            nodes.push(Node::Leaf { value: mean });
            nodes.len() - 1
        }
        Some((_, feature, threshold)) => {
            let (left_idx, right_idx): (Vec<usize>, Vec<usize>) =
                idx.into_iter().partition(|&i| x[[i, feature]] <= threshold);
            let slot = nodes.len();
            nodes.push(Node::Leaf { value: mean });
            let left = build_extra(nodes, x, y, left_idx, depth + 1, max_depth, min_leaf, rng);
            let right = build_extra(nodes, x, y, right_idx, depth + 1, max_depth, min_leaf, rng);
            nodes[slot] = Node::Split {
                feature,
                threshold,
                left,
                right,
            };
            slot
        }
    }
}

impl FittedForest {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict_row(row)).sum::<f64>() / self.trees.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn linear_data(n: usize) -> (Array2<f64>, Vec<f64>) {
        // y = 2x + 1 on a grid
        let x = Array2::from_shape_fn((n, 1), |(i, _)| i as f64 / n as f64 * 10.0);
        let y: Vec<f64> = (0..n).map(|i| 2.0 * x[[i, 0]] + 1.0).collect();
        (x, y)
    }

    #[test]
    fn ridge_recovers_exact_linear_relation() {
        let (x, y) = linear_data(50);
        let fitted = BayesianRidge::default().fit(x.view(), &y);
        let pred = fitted.predict_row(&[4.321]);
        assert!(
            (pred - (2.0 * 4.321 + 1.0)).abs() < 1e-6,
            "got {pred}"
        );
    }

    // Independent normal-equations oracle: Gauss-Jordan on the (p+?)x(p)
    // centered system with fixed hyperparameters.
    fn ridge_oracle(x: &Array2<f64>, y: &[f64], alpha: f64, lambda: f64, probe: &[f64]) -> f64 {
        let (n, p) = x.dim();
        let x_mean: Vec<f64> = (0..p).map(|j| x.column(j).sum() / n as f64).collect();
        let y_mean = y.iter().sum::<f64>() / n as f64;
        // A = alpha * Xc^T Xc + lambda I, b = alpha * Xc^T yc
        let mut a = vec![vec![0.0; p]; p];
        let mut b = vec![0.0; p];
        for j in 0..p {
            for k in 0..p {
                let mut s = 0.0;
                for i in 0..n {
                    s += (x[[i, j]] - x_mean[j]) * (x[[i, k]] - x_mean[k]);
                }
                a[j][k] = alpha * s;
            }
            a[j][j] += lambda;
            let mut s = 0.0;
            for i in 0..n {
                s += (x[[i, j]] - x_mean[j]) * (y[i] - y_mean);
            }
            b[j] = alpha * s;
        }
        // Gauss-Jordan with partial pivoting
        for col in 0..p {
            let piv = (col..p)
                .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
                .unwrap();
            a.swap(col, piv);
            b.swap(col, piv);
            let d = a[col][col];
            for k in 0..p {
                a[col][k] /= d;
            }
            b[col] /= d;
            for r in 0..p {
                if r != col {
                    let f = a[r][col];
                    for k in 0..p {
                        a[r][k] -= f * a[col][k];
                    }
                    b[r] -= f * b[col];
                }
            }
        }
        y_mean
            + (0..p)
                .map(|j| b[j] * (probe[j] - x_mean[j]))
                .sum::<f64>()
    }

    #[test]
    fn ridge_fixed_hyperparams_matches_normal_equations_oracle() {
        let x = Array2::from_shape_fn((12, 2), |(i, j)| (i as f64 * 1.3 + j as f64 * 0.7).sin());
        let y: Vec<f64> = (0..12)
            .map(|i| 3.0 * x[[i, 0]] - 1.5 * x[[i, 1]] + 0.2)
            .collect();
        let (alpha, lambda) = (2.5, 0.8);
        let model = BayesianRidge {
            fixed: Some((alpha, lambda)),
            ..BayesianRidge::default()
        }
        .fit(x.view(), &y);
        let probe = [0.3, -0.4];
        let expect = ridge_oracle(&x, &y, alpha, lambda, &probe);
        assert!((model.predict_row(&probe) - expect).abs() < 1e-9);
    }

    #[test]
    fn cart_recovers_step_function_exactly() {
        let x = Array2::from_shape_fn((20, 1), |(i, _)| i as f64);
        let y: Vec<f64> = (0..20).map(|i| if i < 10 { 1.0 } else { 5.0 }).collect();
        let tree = DecisionTreeRegressor {
            max_depth: 3,
            min_samples_leaf: 2,
        }
        .fit(x.view(), &y);
        assert_eq!(tree.predict_row(&[3.0]), 1.0);
        assert_eq!(tree.predict_row(&[15.0]), 5.0);
    }

    #[test]
    fn cart_linear_within_leaf_granularity() {
        let (x, y) = linear_data(120);
        let tree = DecisionTreeRegressor::default().fit(x.view(), &y);
        // leaf spans ~3 grid points of width 10/120 so error < 2*slope*span
        for probe in [1.0, 3.7, 8.2] {
            let pred = tree.predict_row(&[probe]);
            assert!((pred - (2.0 * probe + 1.0)).abs() < 0.5, "probe {probe}: {pred}");
        }
    }

    #[test]
    fn extra_trees_deterministic_and_close_on_linear_data() {
        let (x, y) = linear_data(120);
        let spec = ExtraTreesRegressor {
            n_trees: 10,
            seed: 3,
            ..ExtraTreesRegressor::default()
        };
        let f1 = spec.fit(x.view(), &y);
        let f2 = spec.fit(x.view(), &y);
        for probe in [0.5, 2.0, 5.5, 9.0] {
            let p1 = f1.predict_row(&[probe]);
            let p2 = f2.predict_row(&[probe]);
            assert_eq!(p1, p2, "same seed must give identical forests");
            assert!((p1 - (2.0 * probe + 1.0)).abs() < 0.6, "probe {probe}: {p1}");
        }
    }
}
