//! Multinomial softmax regression with L2 penalty, trained by full-batch
//! gradient descent with Armijo backtracking to a gradient-norm tolerance.

use ndarray::{Array1, Array2, ArrayView2};
use serde::{Deserialize, Serialize};

const MAX_ITER: usize = 500;
const GRAD_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LogisticParams {
    /// p x k weight matrix.
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

fn softmax_rows(logits: &mut Array2<f64>) {
    for mut row in logits.rows_mut() {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
}

fn loss_and_grad(
    x: &ArrayView2<'_, f64>,
    y: &[usize],
    w: &Array2<f64>,
    b: &Array1<f64>,
    l2: f64,
) -> (f64, Array2<f64>, Array1<f64>) {
    let n = x.nrows() as f64;
    let mut probs = x.dot(w) + b;
    // log-loss with the max trick folded into softmax
    let mut loss = 0.0;
    for (i, &yi) in y.iter().enumerate() {
        let row = probs.row(i);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let logsum = row.iter().map(|v| (v - max).exp()).sum::<f64>().ln() + max;
        loss -= row[yi] - logsum;
    }
    loss /= n;
    loss += 0.5 * l2 * w.iter().map(|v| v * v).sum::<f64>();

    softmax_rows(&mut probs);
    for (i, &yi) in y.iter().enumerate() {
        probs[[i, yi]] -= 1.0;
    }
    let grad_w = x.t().dot(&probs) / n + &(w * l2);
    let grad_b = probs.sum_axis(ndarray::Axis(0)) / n;
    (loss, grad_w, grad_b)
}

pub fn fit(x: ArrayView2<'_, f64>, y: &[usize], n_classes: usize, l2: f64) -> (LogisticParams, bool) {
    let p = x.ncols();
    let mut w = Array2::zeros((p, n_classes));
    let mut b = Array1::zeros(n_classes);
    let mut converged = false;
    let mut step = 1.0f64;

    for _ in 0..MAX_ITER {
        let (loss, gw, gb) = loss_and_grad(&x, y, &w, &b, l2);
        let gnorm2: f64 =
            gw.iter().map(|v| v * v).sum::<f64>() + gb.iter().map(|v| v * v).sum::<f64>();
        if gnorm2.sqrt() < GRAD_TOL {
            converged = true;
            break;
        }
        // Armijo backtracking on the full-batch loss.
        step = (step * 2.0).min(1e3);
        let mut accepted = false;
        while step > 1e-14 {
            let w_try = &w - &(&gw * step);
            let b_try = &b - &(&gb * step);
            let (loss_try, _, _) = loss_and_grad(&x, y, &w_try, &b_try, l2);
            if loss_try <= loss - 1e-4 * step * gnorm2 {
                w = w_try;
                b = b_try;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            // No descent step exists at working precision.
            converged = true;
            break;
        }
    }
    (LogisticParams { weights: w, bias: b }, converged)
}

pub fn predict(params: &LogisticParams, x: ArrayView2<'_, f64>) -> Vec<usize> {
    let scores = x.dot(&params.weights) + &params.bias;
    scores
        .rows()
        .into_iter()
        .map(|row| argmax_lowest_tie(row.iter().cloned()))
        .collect()
}

/// Index of the maximum value; ties resolve to the lowest index.
pub(crate) fn argmax_lowest_tie(values: impl Iterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_value = f64::NEG_INFINITY;
    for (i, v) in values.enumerate() {
        if v > best_value {
            best_value = v;
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn zero_weight_model_predicts_bias_order() {
        // All-zero scores: documented tie rule picks the lowest class index.
        let params = LogisticParams {
            weights: Array2::zeros((2, 3)),
            bias: Array1::zeros(3),
        };
        let x = array![[1.0, 2.0], [-3.0, 0.5]];
        assert_eq!(predict(&params, x.view()), vec![0, 0]);
        // A bias ordering favours its argmax instead.
        let params = LogisticParams {
            weights: Array2::zeros((2, 3)),
            bias: array![0.0, 0.7, 0.1],
        };
        assert_eq!(predict(&params, x.view()), vec![1, 1]);
    }

    #[test]
    fn separates_two_simple_classes() {
        let x = array![
            [0.0, 0.0],
            [0.2, 0.1],
            [0.1, 0.3],
            [5.0, 5.0],
            [5.2, 4.9],
            [4.8, 5.1]
        ];
        let y = vec![0, 0, 0, 1, 1, 1];
        let (params, _) = fit(x.view(), &y, 2, 1e-4);
        assert_eq!(predict(&params, x.view()), y);
    }

    #[test]
    fn gradient_matches_finite_difference() {
        let x = array![[0.5, -1.0], [1.5, 2.0], [-0.7, 0.3], [0.1, 0.9]];
        let y = vec![0, 1, 2, 1];
        let w = array![[0.1, -0.2, 0.3], [0.4, 0.0, -0.1]];
        let b = array![0.05, -0.02, 0.0];
        let l2 = 0.01;
        let (_, gw, gb) = loss_and_grad(&x.view(), &y, &w, &b, l2);
        let h = 1e-6;
        for i in 0..2 {
            for j in 0..3 {
                let mut wp = w.clone();
                wp[[i, j]] += h;
                let (lp, _, _) = loss_and_grad(&x.view(), &y, &wp, &b, l2);
                let mut wm = w.clone();
                wm[[i, j]] -= h;
                let (lm, _, _) = loss_and_grad(&x.view(), &y, &wm, &b, l2);
                let fd = (lp - lm) / (2.0 * h);
                assert!((fd - gw[[i, j]]).abs() < 1e-6, "w[{i},{j}]");
            }
        }
        for j in 0..3 {
            let mut bp = b.clone();
            bp[j] += h;
            let (lp, _, _) = loss_and_grad(&x.view(), &y, &w, &bp, l2);
            let mut bm = b.clone();
            bm[j] -= h;
            let (lm, _, _) = loss_and_grad(&x.view(), &y, &w, &bm, l2);
            let fd = (lp - lm) / (2.0 * h);
            assert!((fd - gb[j]).abs() < 1e-6, "b[{j}]");
        }
    }
}
