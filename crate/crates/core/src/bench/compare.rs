//! Model comparison harness: per spec, repeat {stratified split, fit scaler
//! on train, scale both partitions, SMOTE the training fold only, fit,
//! evaluate on test}; report mean ± std accuracy and macro metrics.

use serde::{Deserialize, Serialize};

use crate::data::{train_test_split, LabeledDataset, SplitSpec};
use crate::eval::classification_report;
use crate::models::{self, ClassifierSpec};
use crate::preprocess::{apply_scaler, fit_scaler, smote, ScalerMode, SmoteSpec};
use crate::seed;

use super::BenchError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ComparisonProtocol {
    pub repeats: usize,
    /// When false, every repeat reuses the protocol seeds verbatim, so
    /// deterministic models reproduce identical metrics (std 0).
    pub derive_seeds: bool,
    pub scaler: ScalerMode,
}

impl Default for ComparisonProtocol {
    fn default() -> Self {
        ComparisonProtocol {
            repeats: 5,
            derive_seeds: true,
            scaler: ScalerMode::ZScore,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelReportRow {
    pub model: String,
    pub accuracy_mean: f64,
    pub accuracy_std: f64,
    pub macro_precision_mean: f64,
    pub macro_recall_mean: f64,
    pub macro_f1_mean: f64,
    pub completed_repeats: usize,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelComparisonReport {
    pub rows: Vec<ModelReportRow>,
    pub repeats: usize,
}

impl ModelComparisonReport {
    /// Accuracy / macro precision / macro recall / macro F1 table, one model
    /// per row; accuracy carries its std over repeats.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "model,accuracy,accuracy_std,macro_precision,macro_recall,macro_f1,completed_repeats,failures\n",
        );
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{:?}\n",
                row.model,
                row.accuracy_mean,
                row.accuracy_std,
                row.macro_precision_mean,
                row.macro_recall_mean,
                row.macro_f1_mean,
                row.completed_repeats,
                row.failures.join("; "),
            ));
        }
        out
    }

    /// Fixed-width text table in the accuracy / macro-average layout.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{:<22} {:>16} {:>11} {:>11} {:>11}\n",
            "Model", "Accuracy", "MacroPrec", "MacroRecall", "MacroF1"
        );
        for row in &self.rows {
            let acc = if self.repeats > 1 {
                format!("{:.3}±{:.3}", row.accuracy_mean, row.accuracy_std)
            } else {
                format!("{:.3}", row.accuracy_mean)
            };
            out.push_str(&format!(
                "{:<22} {:>16} {:>11.3} {:>11.3} {:>11.3}\n",
                row.model, acc, row.macro_precision_mean, row.macro_recall_mean, row.macro_f1_mean
            ));
        }
        out
    }
}

struct PreparedSplit {
    train: LabeledDataset,
    test: LabeledDataset,
}

/// Shared pipeline stage: split, scale (train statistics only), oversample
/// the training fold.
pub(crate) fn prepare_split(
    dataset: &LabeledDataset,
    split: &SplitSpec,
    smote_spec: &SmoteSpec,
    scaler_mode: ScalerMode,
) -> Result<(LabeledDataset, LabeledDataset), BenchError> {
    let wrap = |e: String| BenchError::Pipeline(e);
    let (train, test) = train_test_split(dataset, split).map_err(|e| wrap(e.to_string()))?;
    let params = fit_scaler(train.features(), scaler_mode).map_err(|e| wrap(e.to_string()))?;
    let train_scaled = apply_scaler(train.features(), &params).map_err(|e| wrap(e.to_string()))?;
    let test_scaled = apply_scaler(test.features(), &params).map_err(|e| wrap(e.to_string()))?;
    let train = LabeledDataset::new(train_scaled, train.labels().to_vec())
        .map_err(|e| wrap(e.to_string()))?;
    let test =
        LabeledDataset::new(test_scaled, test.labels().to_vec()).map_err(|e| wrap(e.to_string()))?;
    let train = smote(&train, smote_spec).map_err(|e| wrap(e.to_string()))?;
    Ok((train, test))
}

/// Run every spec through the split/scale/SMOTE/fit/evaluate pipeline
/// `repeats` times; per-model failures are recorded without aborting the
/// table.
pub fn run_model_comparison(
    dataset: &LabeledDataset,
    specs: &[ClassifierSpec],
    split: &SplitSpec,
    smote_spec: &SmoteSpec,
    protocol: &ComparisonProtocol,
) -> Result<ModelComparisonReport, BenchError> {
    if protocol.repeats == 0 {
        return Err(BenchError::EmptyProtocol);
    }

    let mut splits: Vec<Result<PreparedSplit, String>> = Vec::with_capacity(protocol.repeats);
    for repeat in 0..protocol.repeats {
        let (split_seed, smote_seed) = if protocol.derive_seeds {
            (
                seed::derive(split.seed, "compare-split", repeat as u64),
                seed::derive(smote_spec.seed, "compare-smote", repeat as u64),
            )
        } else {
            (split.seed, smote_spec.seed)
        };
        let split_r = SplitSpec {
            seed: split_seed,
            ..split.clone()
        };
        let smote_r = SmoteSpec {
            seed: smote_seed,
            ..smote_spec.clone()
        };
        splits.push(
            prepare_split(dataset, &split_r, &smote_r, protocol.scaler)
                .map(|(train, test)| PreparedSplit { train, test })
                .map_err(|e| e.to_string()),
        );
    }

    let mut rows = Vec::with_capacity(specs.len());
    for spec in specs {
        let mut accuracies = Vec::new();
        let mut precisions = Vec::new();
        let mut recalls = Vec::new();
        let mut f1s = Vec::new();
        let mut failures = Vec::new();
        for (repeat, prepared) in splits.iter().enumerate() {
            let prepared = match prepared {
                Ok(p) => p,
                Err(e) => {
                    failures.push(format!("repeat {repeat}: {e}"));
                    continue;
                }
            };
            let model_seed = if protocol.derive_seeds {
                seed::derive(spec.seed, "compare-model", repeat as u64)
            } else {
                spec.seed
            };
            let run_spec = ClassifierSpec {
                seed: model_seed,
                ..spec.clone()
            };
            let outcome = models::fit(&run_spec, &prepared.train)
                .and_then(|model| models::predict(&model, prepared.test.features()));
            match outcome {
                Ok(preds) => {
                    let report = classification_report(prepared.test.labels(), &preds)
                        .expect("test set is non-empty");
                    accuracies.push(report.accuracy);
                    precisions.push(report.macro_precision);
                    recalls.push(report.macro_recall);
                    f1s.push(report.macro_f1);
                }
                Err(e) => failures.push(format!("repeat {repeat}: {e}")),
            }
        }

        let mean = |v: &[f64]| {
            if v.is_empty() {
                f64::NAN
            } else {
                v.iter().sum::<f64>() / v.len() as f64
            }
        };
        let accuracy_mean = mean(&accuracies);
        let accuracy_std = if accuracies.len() > 1 {
            let m = accuracy_mean;
            (accuracies.iter().map(|a| (a - m) * (a - m)).sum::<f64>()
                / (accuracies.len() - 1) as f64)
                .sqrt()
        } else {
            0.0
        };
        rows.push(ModelReportRow {
            model: spec.display_name(),
            accuracy_mean,
            accuracy_std,
            macro_precision_mean: mean(&precisions),
            macro_recall_mean: mean(&recalls),
            macro_f1_mean: mean(&f1s),
            completed_repeats: accuracies.len(),
            failures,
        });
    }

    Ok(ModelComparisonReport {
        rows,
        repeats: protocol.repeats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ClassifierKind;
    use crate::synth;

    fn dataset() -> LabeledDataset {
        synth::separable_three_class(120, 8, 31)
    }

    #[test]
    fn deterministic_model_without_seed_derivation_has_zero_std() {
        let specs = vec![ClassifierSpec::of_kind(ClassifierKind::GaussianNb)];
        let protocol = ComparisonProtocol {
            repeats: 3,
            derive_seeds: false,
            ..ComparisonProtocol::default()
        };
        let report = run_model_comparison(
            &dataset(),
            &specs,
            &SplitSpec::default(),
            &SmoteSpec::default(),
            &protocol,
        )
        .unwrap();
        assert_eq!(report.rows[0].completed_repeats, 3);
        assert_eq!(report.rows[0].accuracy_std, 0.0);
    }

    #[test]
    fn linear_models_ace_separable_data() {
        let specs = vec![
            ClassifierSpec::of_kind(ClassifierKind::Logistic),
            ClassifierSpec::of_kind(ClassifierKind::LinearSvm),
        ];
        let protocol = ComparisonProtocol {
            repeats: 2,
            ..ComparisonProtocol::default()
        };
        let report = run_model_comparison(
            &dataset(),
            &specs,
            &SplitSpec::default(),
            &SmoteSpec::default(),
            &protocol,
        )
        .unwrap();
        for row in &report.rows {
            assert!(
                row.accuracy_mean >= 0.95,
                "{}: accuracy {}",
                row.model,
                row.accuracy_mean
            );
        }
    }

    #[test]
    fn failing_model_is_recorded_not_fatal() {
        // kNN with k far larger than the training fold
        let specs = vec![
            ClassifierSpec {
                k: 10_000,
                ..ClassifierSpec::of_kind(ClassifierKind::Knn)
            },
            ClassifierSpec::of_kind(ClassifierKind::GaussianNb),
        ];
        let protocol = ComparisonProtocol {
            repeats: 2,
            ..ComparisonProtocol::default()
        };
        let report = run_model_comparison(
            &dataset(),
            &specs,
            &SplitSpec::default(),
            &SmoteSpec::default(),
            &protocol,
        )
        .unwrap();
        assert_eq!(report.rows[0].completed_repeats, 0);
        assert!(!report.rows[0].failures.is_empty());
        assert_eq!(report.rows[1].completed_repeats, 2);
    }
}
