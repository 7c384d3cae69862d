//! Experiment harnesses: the masking/SMAPE imputation benchmark, the model
//! comparison table, and the network tuning sweep.

mod compare;
mod tuning;

pub use compare::{run_model_comparison, ComparisonProtocol, ModelComparisonReport, ModelReportRow};
pub use tuning::{run_dnn_tuning, TuningCurve, TuningGrid, TuningReport};

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::DataMatrix;
use crate::eval::smape;
use crate::impute::{impute, ImputerSpec};
use crate::seed;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("masking requires a fully observed matrix")]
    MaskingNeedsComplete,
    #[error("rate {rate} hides {hidden} of {cells} cells; no column could keep an observation")]
    RateTooHigh {
        rate: f64,
        hidden: usize,
        cells: usize,
    },
    #[error("rate {0} hides no cells")]
    RateTooLow(f64),
    #[error("masking rate {0} must lie in (0, 1)")]
    InvalidRate(f64),
    #[error("protocol needs at least one rate and one repeat")]
    EmptyProtocol,
    #[error("benchmark ground truth must be fully observed")]
    GroundTruthIncomplete,
    #[error("{0}")]
    Pipeline(String),
}

/// MCAR masking grid: rates, repeats per rate, base seed.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct MaskingProtocol {
    pub rates: Vec<f64>,
    pub repeats: usize,
    pub seed: u64,
}

impl Default for MaskingProtocol {
    fn default() -> Self {
        MaskingProtocol {
            rates: (0..7).map(|i| 0.35 + 0.05 * i as f64).collect(),
            repeats: 10,
            seed: 0,
        }
    }
}

impl MaskingProtocol {
    pub fn validate(&self) -> Result<(), BenchError> {
        if self.rates.is_empty() || self.repeats == 0 {
            return Err(BenchError::EmptyProtocol);
        }
        for &rate in &self.rates {
            if !(rate > 0.0 && rate < 1.0) {
                return Err(BenchError::InvalidRate(rate));
            }
        }
        Ok(())
    }
}

/// A hidden cell with its ground-truth value.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenCell {
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

/// Hide `floor(rate * cells)` uniformly chosen cells of a complete matrix,
/// never emptying a column (draws violating that are resampled). Returns the
/// masked matrix and the ground-truth list; deterministic per seed.
pub fn mask_cells(
    complete: &DataMatrix,
    rate: f64,
    seed_value: u64,
) -> Result<(DataMatrix, Vec<HiddenCell>), BenchError> {
    if !complete.is_complete() {
        return Err(BenchError::MaskingNeedsComplete);
    }
    if !(rate > 0.0 && rate < 1.0) {
        return Err(BenchError::InvalidRate(rate));
    }
    let (rows, cols) = (complete.n_rows(), complete.n_cols());
    let cells = rows * cols;
    let n_hidden = (rate * cells as f64).floor() as usize;
    if n_hidden == 0 {
        return Err(BenchError::RateTooLow(rate));
    }
    if n_hidden > cells - cols {
        // keeping one observation per column is impossible
        return Err(BenchError::RateTooHigh {
            rate,
            hidden: n_hidden,
            cells,
        });
    }

    for attempt in 0..1000u64 {
        let mut rng = seed::rng(seed_value, "mask", attempt);
        let chosen = sample(&mut rng, cells, n_hidden);
        let mut col_hidden = vec![0usize; cols];
        for idx in chosen.iter() {
            col_hidden[idx % cols] += 1;
        }
        if col_hidden.iter().any(|&h| h >= rows) {
            continue;
        }
        let mut mask = complete.mask().to_owned();
        let mut hidden: Vec<HiddenCell> = chosen
            .iter()
            .map(|idx| {
                let (row, col) = (idx / cols, idx % cols);
                mask[[row, col]] = false;
                HiddenCell {
                    row,
                    col,
                    value: complete.values()[[row, col]],
                }
            })
            .collect();
        hidden.sort_by_key(|h| (h.row, h.col));
        let masked = complete.with_values_and_mask(complete.values().to_owned(), mask);
        return Ok((masked, hidden));
    }
    Err(BenchError::RateTooHigh {
        rate,
        hidden: n_hidden,
        cells,
    })
}

/// SMAPE computed over hidden cells only.
pub fn smape_on_hidden(hidden: &[HiddenCell], imputed: &DataMatrix) -> f64 {
    let actual: Vec<f64> = hidden.iter().map(|h| h.value).collect();
    let predicted: Vec<f64> = hidden
        .iter()
        .map(|h| imputed.values()[[h.row, h.col]])
        .collect();
    smape(&actual, &predicted).expect("hidden set is non-empty")
}

/// Outcome of one (method, rate) grid cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum CellOutcome {
    Ok {
        mean: f64,
        std: f64,
        /// repeats whose imputer hit its round cap without converging
        non_converged: usize,
    },
    Failed {
        error: String,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ImputationBenchmarkReport {
    pub methods: Vec<String>,
    pub rates: Vec<f64>,
    /// cells[method][rate]
    pub cells: Vec<Vec<CellOutcome>>,
    /// Simple (mean) imputation at the 0.5 reference rate, same repeats.
    pub baseline_smape: f64,
    pub repeats: usize,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() > 1 {
        (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, std)
}

/// Mask, impute and score every (method, rate, repeat) triple; masks are
/// shared across methods at the same (rate, repeat) so methods face identical
/// missingness. Failed cells are marked, not fatal.
pub fn run_imputation_benchmark(
    complete: &DataMatrix,
    methods: &[ImputerSpec],
    protocol: &MaskingProtocol,
) -> Result<ImputationBenchmarkReport, BenchError> {
    protocol.validate()?;
    if !complete.is_complete() {
        return Err(BenchError::GroundTruthIncomplete);
    }

    let mask_seed = |rate_idx: usize, repeat: usize| {
        seed::derive(
            protocol.seed,
            "bench-mask",
            (rate_idx * 100_000 + repeat) as u64,
        )
    };

    let grid: Vec<(usize, usize)> = (0..methods.len())
        .flat_map(|m| (0..protocol.rates.len()).map(move |r| (m, r)))
        .collect();

    let cells_flat: Vec<CellOutcome> = grid
        .par_iter()
        .map(|&(m, r)| {
            let spec = &methods[m];
            let mut smapes = Vec::with_capacity(protocol.repeats);
            let mut non_converged = 0;
            for repeat in 0..protocol.repeats {
                let (masked, hidden) =
                    match mask_cells(complete, protocol.rates[r], mask_seed(r, repeat)) {
                        Ok(pair) => pair,
                        Err(e) => return CellOutcome::Failed { error: e.to_string() },
                    };
                let run_spec = ImputerSpec {
                    seed: seed::derive(spec.seed, "bench-impute", repeat as u64),
                    ..spec.clone()
                };
                match impute(&masked, &run_spec) {
                    Ok(outcome) => {
                        if !outcome.converged {
                            non_converged += 1;
                        }
                        smapes.push(smape_on_hidden(&hidden, &outcome.data));
                    }
                    Err(e) => return CellOutcome::Failed { error: e.to_string() },
                }
            }
            let (mean, std) = mean_std(&smapes);
            CellOutcome::Ok {
                mean,
                std,
                non_converged,
            }
        })
        .collect();

    let mut cells: Vec<Vec<CellOutcome>> = Vec::with_capacity(methods.len());
    let mut it = cells_flat.into_iter();
    for _ in 0..methods.len() {
        cells.push((&mut it).take(protocol.rates.len()).collect());
    }

    // Reference baseline: simple imputation at rate 0.5 under the same
    // repeat seeds.
    let baseline_spec = ImputerSpec {
        method: crate::impute::ImputeMethod::Mean,
        ..ImputerSpec::default()
    };
    let mut baseline_smapes = Vec::with_capacity(protocol.repeats);
    for repeat in 0..protocol.repeats {
        let s = seed::derive(protocol.seed, "bench-baseline", repeat as u64);
        let (masked, hidden) = mask_cells(complete, 0.5, s)?;
        let out = impute(&masked, &baseline_spec).map_err(|e| BenchError::Pipeline(e.to_string()))?;
        baseline_smapes.push(smape_on_hidden(&hidden, &out.data));
    }
    let (baseline_smape, _) = mean_std(&baseline_smapes);

    Ok(ImputationBenchmarkReport {
        methods: methods.iter().map(|m| m.describe()).collect(),
        rates: protocol.rates.clone(),
        cells,
        baseline_smape,
        repeats: protocol.repeats,
    })
}

impl ImputationBenchmarkReport {
    pub fn cell(&self, method: usize, rate: usize) -> &CellOutcome {
        &self.cells[method][rate]
    }

    pub fn mean_at(&self, method: usize, rate: usize) -> Option<f64> {
        match self.cells[method][rate] {
            CellOutcome::Ok { mean, .. } => Some(mean),
            CellOutcome::Failed { .. } => None,
        }
    }

    /// Method rows by rate columns, cells formatted `mean±std`.
    pub fn to_table_csv(&self) -> String {
        let mut out = String::from("method");
        for rate in &self.rates {
            out.push_str(&format!(",{rate}"));
        }
        out.push('\n');
        for (m, method) in self.methods.iter().enumerate() {
            out.push_str(method);
            for r in 0..self.rates.len() {
                match &self.cells[m][r] {
                    CellOutcome::Ok { mean, std, .. } => {
                        out.push_str(&format!(",{mean:.2}±{std:.2}"));
                    }
                    CellOutcome::Failed { .. } => out.push_str(",failed"),
                }
            }
            out.push('\n');
        }
        out
    }

    /// Long-form full-precision rows.
    pub fn to_long_csv(&self) -> String {
        let mut out = String::from("method,rate,smape_mean,smape_std,non_converged,error\n");
        for (m, method) in self.methods.iter().enumerate() {
            for (r, rate) in self.rates.iter().enumerate() {
                match &self.cells[m][r] {
                    CellOutcome::Ok {
                        mean,
                        std,
                        non_converged,
                    } => out.push_str(&format!("{method},{rate},{mean},{std},{non_converged},\n")),
                    CellOutcome::Failed { error } => {
                        out.push_str(&format!("{method},{rate},,,,{:?}\n", error))
                    }
                }
            }
        }
        out
    }

    /// Baseline-relative summary at the rate closest to 0.5: positive delta
    /// means the method beats simple imputation at the reference rate.
    pub fn baseline_summary_csv(&self) -> String {
        let ref_idx = self
            .rates
            .iter()
            .enumerate()
            .min_by(|a, b| {
                (a.1 - 0.5)
                    .abs()
                    .partial_cmp(&(b.1 - 0.5).abs())
                    .unwrap()
                    .then(a.0.cmp(&b.0))
            })
            .map(|(i, _)| i)
            .unwrap();
        let mut out = format!(
            "method,smape_at_{},baseline,delta_vs_baseline\n",
            self.rates[ref_idx]
        );
        for (m, method) in self.methods.iter().enumerate() {
            match self.mean_at(m, ref_idx) {
                Some(mean) => out.push_str(&format!(
                    "{method},{mean},{},{}\n",
                    self.baseline_smape,
                    self.baseline_smape - mean
                )),
                None => out.push_str(&format!("{method},,{},\n", self.baseline_smape)),
            }
        }
        out
    }
}
