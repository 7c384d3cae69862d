//! Round-robin iterative imputation with a pluggable regressor.
//!
//! Missing cells start at their column means. Each round visits the columns
//! with missing entries in descending missing-count order, fits the regressor
//! on the rows where that column is observed (features = all other columns at
//! their current values), and re-predicts the missing entries. Rounds stop
//! when the largest per-cell change, measured on the standardized scale of
//! each column, drops below the tolerance.

use ndarray::Array2;

use crate::data::DataMatrix;
use crate::seed;

use super::regressors::{BayesianRidge, DecisionTreeRegressor, ExtraTreesRegressor};
use super::{column_means, EstimatorKind, ImputationOutcome, ImputeError, ImputerSpec};

enum Fitted {
    Ridge(super::regressors::FittedRidge),
    Tree(super::regressors::FittedTree),
    Forest(super::regressors::FittedForest),
}

impl Fitted {
    fn predict_row(&self, row: &[f64]) -> f64 {
        match self {
            Fitted::Ridge(m) => m.predict_row(row),
            Fitted::Tree(m) => m.predict_row(row),
            Fitted::Forest(m) => m.predict_row(row),
        }
    }
}

fn fit_estimator(spec: &ImputerSpec, round: usize, col: usize, x: &Array2<f64>, y: &[f64]) -> Fitted {
    match spec.estimator {
        EstimatorKind::BayesianRidge => {
            Fitted::Ridge(BayesianRidge::default().fit(x.view(), y))
        }
        EstimatorKind::DecisionTree => {
            Fitted::Tree(DecisionTreeRegressor::default().fit(x.view(), y))
        }
        EstimatorKind::ExtraTrees => Fitted::Forest(
            ExtraTreesRegressor {
                n_trees: spec.n_trees,
                seed: seed::derive(spec.seed, "iter-impute", (round * 100_000 + col) as u64),
                ..ExtraTreesRegressor::default()
            }
            .fit(x.view(), y),
        ),
    }
}

pub fn impute_iterative_impl(
    data: &DataMatrix,
    spec: &ImputerSpec,
) -> Result<ImputationOutcome, ImputeError> {
    let (n, p) = (data.n_rows(), data.n_cols());
    if p < 2 {
        return Err(ImputeError::TooFewColumns(p));
    }
    let means = column_means(data)?;
    if data.is_complete() {
        return Ok(ImputationOutcome {
            data: data.clone(),
            converged: true,
            rounds: 0,
        });
    }

    let mask = data.mask();
    let mut current = data.values().to_owned();
    for r in 0..n {
        for c in 0..p {
            if !mask[[r, c]] {
                current[[r, c]] = means[c];
            }
        }
    }

    // Standardized-change scale: observed std per column, 1 for degenerate.
    let scales: Vec<f64> = (0..p)
        .map(|c| {
            let observed = data.observed_in_col(c);
            let mean = observed.iter().sum::<f64>() / observed.len() as f64;
            let var = observed.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
                / observed.len() as f64;
            if var > 0.0 {
                var.sqrt()
            } else {
                1.0
            }
        })
        .collect();

    // Visit order: descending missing count, ties by column index.
    let mut order: Vec<(usize, usize)> = (0..p)
        .map(|c| {
            let missing = (0..n).filter(|&r| !mask[[r, c]]).count();
            (missing, c)
        })
        .filter(|&(missing, _)| missing > 0)
        .collect();
    order.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));

    let mut converged = false;
    let mut rounds = 0;
    for round in 0..spec.max_rounds {
        rounds = round + 1;
        let mut max_change = 0.0f64;
        for &(_, col) in &order {
            let obs_rows: Vec<usize> = (0..n).filter(|&r| mask[[r, col]]).collect();
            let mis_rows: Vec<usize> = (0..n).filter(|&r| !mask[[r, col]]).collect();
            let other_cols: Vec<usize> = (0..p).filter(|&c| c != col).collect();

            let mut x_train = Array2::zeros((obs_rows.len(), other_cols.len()));
            let mut y_train = Vec::with_capacity(obs_rows.len());
            for (i, &r) in obs_rows.iter().enumerate() {
                for (j, &c) in other_cols.iter().enumerate() {
                    x_train[[i, j]] = current[[r, c]];
                }
                y_train.push(data.values()[[r, col]]);
            }

            let model = fit_estimator(spec, round, col, &x_train, &y_train);
            let mut probe = vec![0.0; other_cols.len()];
            for &r in &mis_rows {
                for (j, &c) in other_cols.iter().enumerate() {
                    probe[j] = current[[r, c]];
                }
                let new = model.predict_row(&probe);
                let change = (new - current[[r, col]]).abs() / scales[col];
                max_change = max_change.max(change);
                current[[r, col]] = new;
            }
        }
        if max_change < spec.tolerance {
            converged = true;
            break;
        }
    }

    Ok(ImputationOutcome {
        data: data.with_complete_values(current),
        converged,
        rounds,
    })
}
