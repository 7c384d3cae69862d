//! Gaussian naive Bayes: per-class feature means and variances with variance
//! smoothing, independent-feature log-likelihood scoring.

use ndarray::{Array1, Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use super::logistic::argmax_lowest_tie;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NbParams {
    /// k x p per-class feature means.
    pub means: Array2<f64>,
    /// k x p smoothed per-class feature variances.
    pub vars: Array2<f64>,
    pub log_priors: Array1<f64>,
}

pub fn fit(x: ArrayView2<'_, f64>, y: &[usize], n_classes: usize) -> NbParams {
    let (n, p) = x.dim();
    let mut means = Array2::zeros((n_classes, p));
    let mut vars = Array2::zeros((n_classes, p));
    let mut counts = vec![0usize; n_classes];
    for (i, &yi) in y.iter().enumerate() {
        counts[yi] += 1;
        for j in 0..p {
            means[[yi, j]] += x[[i, j]];
        }
    }
    for c in 0..n_classes {
        for j in 0..p {
            means[[c, j]] /= counts[c].max(1) as f64;
        }
    }
    for (i, &yi) in y.iter().enumerate() {
        for j in 0..p {
            let d = x[[i, j]] - means[[yi, j]];
            vars[[yi, j]] += d * d;
        }
    }
    for c in 0..n_classes {
        for j in 0..p {
            vars[[c, j]] /= counts[c].max(1) as f64;
        }
    }

    // Smoothing: 1e-9 times the largest overall feature variance.
    let mut max_var = 0.0f64;
    for j in 0..p {
        let col = x.column(j);
        let mean = col.sum() / n as f64;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        max_var = max_var.max(var);
    }
    let eps = 1e-9 * max_var.max(1e-300);
    vars.mapv_inplace(|v| v + eps);

    let log_priors = Array1::from_iter(
        counts
            .iter()
            .map(|&c| ((c as f64).max(f64::MIN_POSITIVE) / n as f64).ln()),
    );
    NbParams {
        means,
        vars,
        log_priors,
    }
}

pub fn predict(params: &NbParams, x: ArrayView2<'_, f64>) -> Vec<usize> {
    let k = params.log_priors.len();
    let p = params.means.ncols();
    let ln_2pi = (2.0 * std::f64::consts::PI).ln();
    x.rows()
        .into_iter()
        .map(|row| {
            let scores = (0..k).map(|c| {
                let mut s = params.log_priors[c];
                for j in 0..p {
                    let var = params.vars[[c, j]];
                    let d = row[j] - params.means[[c, j]];
                    s -= 0.5 * (ln_2pi + var.ln() + d * d / var);
                }
                s
            });
            argmax_lowest_tie(scores)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;

    #[test]
    fn class_statistics_are_exact_on_constructed_data() {
        let x = ndarray::array![[0.0, 2.0], [2.0, 4.0], [10.0, 0.0], [14.0, 4.0]];
        let y = vec![0, 0, 1, 1];
        let params = fit(x.view(), &y, 2);
        assert_eq!(params.means[[0, 0]], 1.0);
        assert_eq!(params.means[[1, 0]], 12.0);
        assert!((params.vars[[0, 0]] - 1.0).abs() < 1e-6);
        assert!((params.vars[[1, 0]] - 4.0).abs() < 1e-6);
    }

    #[test]
    fn well_separated_gaussians_classify_nearly_perfectly() {
        // 6-sigma separation: Bayes error is negligible, demand >= 0.99.
        let train = synth::gaussian_blobs_two_class(100, 5, 6.0, 11);
        let test = synth::gaussian_blobs_two_class(100, 5, 6.0, 12);
        let y: Vec<usize> = train.labels().iter().map(|l| l.index()).collect();
        let params = fit(train.features().values(), &y, 2);
        let preds = predict(&params, test.features().values());
        let truth: Vec<usize> = test.labels().iter().map(|l| l.index()).collect();
        let correct = preds.iter().zip(&truth).filter(|(a, b)| a == b).count();
        assert!(correct as f64 / truth.len() as f64 >= 0.99);
    }
}
