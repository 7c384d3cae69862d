//! Missing-data imputation: simple column means, kNN under a mask-aware
//! distance, iterative truncated-SVD completion, and round-robin iterative
//! imputation with pluggable regressors.
//!
//! Every imputer preserves observed cells bitwise, fills every masked cell
//! (output mask all-true), and is deterministic for a fixed spec and seed.

mod iterative;
mod knn;
pub mod regressors;
pub mod svd;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::DataMatrix;

#[derive(Debug, Error)]
pub enum ImputeError {
    #[error("column {name:?} (index {col}) has no observed values")]
    AllMissingColumn { col: usize, name: String },
    #[error("k = {k} is out of range for {n_rows} rows (need 1 <= k <= rows - 1)")]
    KTooLarge { k: usize, n_rows: usize },
    #[error("rank {rank} exceeds min(rows, cols) = {max}")]
    RankTooLarge { rank: usize, max: usize },
    #[error("iterative imputation needs at least 2 columns, got {0}")]
    TooFewColumns(usize),
    #[error("invalid imputer spec: {0}")]
    InvalidSpec(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ImputeMethod {
    Mean,
    Knn,
    Svd,
    Iterative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorKind {
    BayesianRidge,
    DecisionTree,
    ExtraTrees,
}

/// Configuration shared by all imputation methods.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ImputerSpec {
    pub method: ImputeMethod,
    /// Neighbour count for kNN imputation.
    pub k: usize,
    /// Target rank for SVD completion; `None` picks the smallest rank holding
    /// 90% of the squared singular-value mass of the mean-initialized matrix.
    pub rank: Option<usize>,
    /// Regressor for iterative imputation.
    pub estimator: EstimatorKind,
    /// Tree count for the extra-trees estimator.
    pub n_trees: usize,
    pub max_rounds: usize,
    /// Convergence threshold on the standardized scale.
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for ImputerSpec {
    fn default() -> Self {
        ImputerSpec {
            method: ImputeMethod::Iterative,
            k: 5,
            rank: None,
            estimator: EstimatorKind::ExtraTrees,
            n_trees: 10,
            max_rounds: 10,
            tolerance: 1e-3,
            seed: 0,
        }
    }
}

impl ImputerSpec {
    pub fn validate(&self) -> Result<(), ImputeError> {
        if self.k == 0 {
            return Err(ImputeError::InvalidSpec("k must be >= 1".into()));
        }
        if self.rank == Some(0) {
            return Err(ImputeError::InvalidSpec("rank must be >= 1".into()));
        }
        if self.n_trees == 0 {
            return Err(ImputeError::InvalidSpec("n_trees must be >= 1".into()));
        }
        if self.max_rounds == 0 {
            return Err(ImputeError::InvalidSpec("max_rounds must be >= 1".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(ImputeError::InvalidSpec("tolerance must be > 0".into()));
        }
        Ok(())
    }

    /// Short human-readable tag used in benchmark reports.
    pub fn describe(&self) -> String {
        match self.method {
            ImputeMethod::Mean => "mean".to_string(),
            ImputeMethod::Knn => format!("knn(k={})", self.k),
            ImputeMethod::Svd => match self.rank {
                Some(r) => format!("svd(rank={r})"),
                None => "svd(rank=auto)".to_string(),
            },
            ImputeMethod::Iterative => {
                let estimator = match self.estimator {
                    EstimatorKind::BayesianRidge => "bayesian-ridge".to_string(),
                    EstimatorKind::DecisionTree => "decision-tree".to_string(),
                    EstimatorKind::ExtraTrees => format!("extra-trees(n={})", self.n_trees),
                };
                format!("iterative[{estimator}]")
            }
        }
    }
}

/// Completed matrix plus convergence information for iterative methods.
#[derive(Debug, Clone)]
pub struct ImputationOutcome {
    pub data: DataMatrix,
    /// False when the method hit `max_rounds` before meeting its tolerance;
    /// the best iterate is still returned.
    pub converged: bool,
    pub rounds: usize,
}

/// Observed mean of every column; errors on a column with no observations.
pub(crate) fn column_means(data: &DataMatrix) -> Result<Vec<f64>, ImputeError> {
    (0..data.n_cols())
        .map(|c| {
            let observed = data.observed_in_col(c);
            if observed.is_empty() {
                Err(ImputeError::AllMissingColumn {
                    col: c,
                    name: data.col_names()[c].clone(),
                })
            } else {
                Ok(observed.iter().sum::<f64>() / observed.len() as f64)
            }
        })
        .collect()
}

/// Run the spec's method and report convergence detail.
pub fn impute(data: &DataMatrix, spec: &ImputerSpec) -> Result<ImputationOutcome, ImputeError> {
    spec.validate()?;
    match spec.method {
        ImputeMethod::Mean => Ok(ImputationOutcome {
            data: impute_mean(data)?,
            converged: true,
            rounds: 0,
        }),
        ImputeMethod::Knn => Ok(ImputationOutcome {
            data: knn::impute_knn_impl(data, spec.k)?,
            converged: true,
            rounds: 0,
        }),
        ImputeMethod::Svd => svd_iterate(data, spec),
        ImputeMethod::Iterative => iterative::impute_iterative_impl(data, spec),
    }
}

/// Fill each masked cell with its column's observed mean.
pub fn impute_mean(data: &DataMatrix) -> Result<DataMatrix, ImputeError> {
    let means = column_means(data)?;
    if data.is_complete() {
        return Ok(data.clone());
    }
    let mask = data.mask();
    let mut values = data.values().to_owned();
    for r in 0..data.n_rows() {
        for c in 0..data.n_cols() {
            if !mask[[r, c]] {
                values[[r, c]] = means[c];
            }
        }
    }
    Ok(data.with_complete_values(values))
}

/// kNN imputation under the mask-aware Euclidean distance.
pub fn impute_knn(data: &DataMatrix, spec: &ImputerSpec) -> Result<DataMatrix, ImputeError> {
    spec.validate()?;
    knn::impute_knn_impl(data, spec.k)
}

/// Iterative truncated-SVD completion.
pub fn impute_svd(data: &DataMatrix, spec: &ImputerSpec) -> Result<DataMatrix, ImputeError> {
    spec.validate()?;
    Ok(svd_iterate(data, spec)?.data)
}

/// Round-robin iterative imputation with the spec's regressor.
pub fn impute_iterative(data: &DataMatrix, spec: &ImputerSpec) -> Result<DataMatrix, ImputeError> {
    spec.validate()?;
    Ok(iterative::impute_iterative_impl(data, spec)?.data)
}

fn svd_iterate(data: &DataMatrix, spec: &ImputerSpec) -> Result<ImputationOutcome, ImputeError> {
    let (m, n) = (data.n_rows(), data.n_cols());
    let max_rank = m.min(n);
    if let Some(rank) = spec.rank {
        if rank > max_rank {
            return Err(ImputeError::RankTooLarge {
                rank,
                max: max_rank,
            });
        }
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
    let mut missing = Vec::new();
    for r in 0..m {
        for c in 0..n {
            if !mask[[r, c]] {
                current[[r, c]] = means[c];
                missing.push((r, c));
            }
        }
    }

    let rank = spec
        .rank
        .unwrap_or_else(|| svd::rank_for_energy(&current.view(), 0.9));

    let mut converged = false;
    let mut rounds = 0;
    for round in 0..spec.max_rounds {
        rounds = round + 1;
        let approx = svd_reconstruction(&current, rank);
        let mut change_sq = 0.0;
        for &(r, c) in &missing {
            let delta = approx[[r, c]] - current[[r, c]];
            change_sq += delta * delta;
            current[[r, c]] = approx[[r, c]];
        }
        let rms = (change_sq / missing.len() as f64).sqrt();
        if rms < spec.tolerance {
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

fn svd_reconstruction(current: &Array2<f64>, rank: usize) -> Array2<f64> {
    svd::truncated_approx(&current.view(), rank)
}
