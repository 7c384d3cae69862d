//! One-vs-rest linear SVM: L2-regularized hinge loss minimized by
//! deterministic full-batch subgradient descent.

use ndarray::{Array1, Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use super::logistic::argmax_lowest_tie;

const ITERATIONS: usize = 2000;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinearSvmParams {
    /// k x p one-vs-rest weight rows.
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

pub fn fit(x: ArrayView2<'_, f64>, y: &[usize], n_classes: usize, c: f64) -> LinearSvmParams {
    let (n, p) = x.dim();
    let lambda = 1.0 / (c * n as f64);
    let mut weights = Array2::zeros((n_classes, p));
    let mut bias = Array1::zeros(n_classes);

    for class in 0..n_classes {
        let targets: Vec<f64> = y
            .iter()
            .map(|&yi| if yi == class { 1.0 } else { -1.0 })
            .collect();
        let mut w = vec![0.0f64; p];
        let mut b = 0.0f64;
        for t in 0..ITERATIONS {
            // hinge subgradient over the full batch
            let mut gw = vec![0.0f64; p];
            let mut gb = 0.0f64;
            for i in 0..n {
                let margin: f64 =
                    targets[i] * (x.row(i).iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() + b);
                if margin < 1.0 {
                    for j in 0..p {
                        gw[j] -= targets[i] * x[[i, j]];
                    }
                    gb -= targets[i];
                }
            }
            let inv_n = 1.0 / n as f64;
            let step = 1.0 / (lambda * (t as f64 + 10.0));
            for j in 0..p {
                w[j] -= step * (lambda * w[j] + gw[j] * inv_n);
            }
            b -= step * gb * inv_n;
        }
        for j in 0..p {
            weights[[class, j]] = w[j];
        }
        bias[class] = b;
    }
    LinearSvmParams { weights, bias }
}

pub fn predict(params: &LinearSvmParams, x: ArrayView2<'_, f64>) -> Vec<usize> {
    let scores = x.dot(&params.weights.t()) + &params.bias;
    scores
        .rows()
        .into_iter()
        .map(|row| argmax_lowest_tie(row.iter().cloned()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;
    use ndarray::array;

    #[test]
    fn separates_two_far_clusters() {
        let x = array![
            [0.0, 0.0],
            [0.3, 0.1],
            [0.1, 0.4],
            [8.0, 8.0],
            [8.3, 7.9],
            [7.8, 8.2]
        ];
        let y = vec![0, 0, 0, 1, 1, 1];
        let params = fit(x.view(), &y, 2, 1.0);
        assert_eq!(predict(&params, x.view()), y);
    }

    #[test]
    fn three_class_separable_accuracy() {
        let train = synth::separable_three_class(120, 10, 21);
        let test = synth::separable_three_class(60, 10, 22);
        let y: Vec<usize> = train.labels().iter().map(|l| l.index()).collect();
        let params = fit(train.features().values(), &y, 3, 1.0);
        let preds = predict(&params, test.features().values());
        let truth: Vec<usize> = test.labels().iter().map(|l| l.index()).collect();
        let acc = preds.iter().zip(&truth).filter(|(a, b)| a == b).count() as f64
            / truth.len() as f64;
        assert!(acc >= 0.95, "accuracy {acc}");
    }

    #[test]
    fn deterministic() {
        let train = synth::separable_three_class(30, 4, 3);
        let y: Vec<usize> = train.labels().iter().map(|l| l.index()).collect();
        let a = fit(train.features().values(), &y, 3, 1.0);
        let b = fit(train.features().values(), &y, 3, 1.0);
        assert_eq!(a.weights, b.weights);
        assert_eq!(a.bias, b.bias);
    }
}
