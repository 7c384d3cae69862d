//! Network tuning harness. Stages mirror the usual sweep order: hidden-layer
//! count, then neuron configuration, then dropout rate, then batch
//! normalization, then dropout and batch normalization jointly. Every grid
//! point trains one network and records per-epoch train/test accuracy;
//! per-point failures are recorded and the sweep continues.

use serde::{Deserialize, Serialize};

use crate::data::{LabeledDataset, SplitSpec};
use crate::models::mlp::{self, NetworkArchitecture};
use crate::models::{Activation, OptimizerKind};
use crate::preprocess::SmoteSpec;
use crate::seed;

use super::compare::prepare_split;
use super::BenchError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct TuningGrid {
    /// Stage 1: hidden-layer counts, each layer `stage1_width` wide.
    pub hidden_layer_counts: Vec<usize>,
    pub stage1_width: usize,
    /// Stage 2: full neuron stacks including input and output sizes.
    pub neuron_configs: Vec<Vec<usize>>,
    /// Stage 3 dropout rates; stage 4 toggles batch norm; stage 5 combines.
    pub dropout_rates: Vec<f64>,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub optimizer: OptimizerKind,
    pub activation: Activation,
}

impl Default for TuningGrid {
    fn default() -> Self {
        TuningGrid {
            hidden_layer_counts: vec![2, 3, 4, 5, 6],
            stage1_width: 100,
            neuron_configs: vec![
                vec![25, 100, 200, 150, 50, 25, 3],
                vec![25, 200, 400, 300, 100, 50, 3],
                vec![25, 500, 1000, 750, 250, 50, 3],
                vec![25, 1000, 2000, 1500, 500, 250, 3],
            ],
            dropout_rates: vec![0.1, 0.2, 0.3, 0.4],
            epochs: 60,
            batch_size: 32,
            learning_rate: 1e-3,
            optimizer: OptimizerKind::Adam,
            activation: Activation::Relu,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TuningCurve {
    pub stage: String,
    pub label: String,
    pub layer_sizes: Vec<usize>,
    pub dropout: f64,
    pub batch_norm: bool,
    pub train_accuracy: Vec<f64>,
    pub test_accuracy: Vec<f64>,
    pub error: Option<String>,
}

impl TuningCurve {
    pub fn final_test_accuracy(&self) -> Option<f64> {
        if self.error.is_some() {
            None
        } else {
            self.test_accuracy.last().copied()
        }
    }

    /// epoch, train_acc, test_acc rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_accuracy,test_accuracy\n");
        for (e, (tr, te)) in self
            .train_accuracy
            .iter()
            .zip(&self.test_accuracy)
            .enumerate()
        {
            out.push_str(&format!("{},{},{}\n", e + 1, tr, te));
        }
        out
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TuningReport {
    pub curves: Vec<TuningCurve>,
    /// (stage, chosen label) in stage order.
    pub best_per_stage: Vec<(String, String)>,
}

impl TuningReport {
    pub fn summary_csv(&self) -> String {
        let mut out = String::from("stage,label,final_train_accuracy,final_test_accuracy,error\n");
        for c in &self.curves {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                c.stage,
                c.label,
                c.train_accuracy.last().map_or(String::new(), |v| v.to_string()),
                c.test_accuracy.last().map_or(String::new(), |v| v.to_string()),
                c.error.clone().unwrap_or_default()
            ));
        }
        out.push('\n');
        out.push_str("chosen_stage,chosen_label\n");
        for (stage, label) in &self.best_per_stage {
            out.push_str(&format!("{stage},{label}\n"));
        }
        out
    }
}

struct Trainer {
    train_x: ndarray::Array2<f64>,
    train_y: Vec<usize>,
    test_x: ndarray::Array2<f64>,
    test_y: Vec<usize>,
    seed: u64,
}

impl Trainer {
    fn run(&self, stage: &str, label: &str, arch: &NetworkArchitecture, point: u64) -> TuningCurve {
        if arch.layer_sizes.first() != Some(&self.train_x.ncols()) {
            return self.failed(
                stage,
                label,
                arch,
                format!(
                    "input size {} does not match {} features",
                    arch.layer_sizes.first().copied().unwrap_or(0),
                    self.train_x.ncols()
                ),
            );
        }
        let n_classes = self.train_y.iter().max().map_or(0, |&m| m + 1);
        if arch.layer_sizes.last() != Some(&n_classes) {
            return self.failed(
                stage,
                label,
                arch,
                format!(
                    "output size {} does not match {} classes",
                    arch.layer_sizes.last().copied().unwrap_or(0),
                    n_classes
                ),
            );
        }
        let (_, history) = mlp::train(
            arch,
            self.train_x.view(),
            &self.train_y,
            Some((self.test_x.view(), &self.test_y)),
            seed::derive(self.seed, "tuning-point", point),
        );
        TuningCurve {
            stage: stage.to_string(),
            label: label.to_string(),
            layer_sizes: arch.layer_sizes.clone(),
            dropout: arch.dropout_rate,
            batch_norm: arch.batch_norm,
            train_accuracy: history.train_accuracy,
            test_accuracy: history.test_accuracy,
            error: None,
        }
    }

    fn failed(
        &self,
        stage: &str,
        label: &str,
        arch: &NetworkArchitecture,
        error: String,
    ) -> TuningCurve {
        TuningCurve {
            stage: stage.to_string(),
            label: label.to_string(),
            layer_sizes: arch.layer_sizes.clone(),
            dropout: arch.dropout_rate,
            batch_norm: arch.batch_norm,
            train_accuracy: Vec::new(),
            test_accuracy: Vec::new(),
            error: Some(error),
        }
    }
}

fn best_curve<'a>(curves: &'a [TuningCurve]) -> Option<&'a TuningCurve> {
    curves
        .iter()
        .filter(|c| c.final_test_accuracy().is_some())
        .max_by(|a, b| {
            a.final_test_accuracy()
                .unwrap()
                .partial_cmp(&b.final_test_accuracy().unwrap())
                .unwrap()
        })
}

/// Sweep the grid in five stages, carrying each stage's winner forward.
pub fn run_dnn_tuning(
    dataset: &LabeledDataset,
    grid: &TuningGrid,
    split: &SplitSpec,
    smote_spec: &SmoteSpec,
    seed_value: u64,
) -> Result<TuningReport, BenchError> {
    let (train, test) = prepare_split(dataset, split, smote_spec, crate::preprocess::ScalerMode::ZScore)?;
    let classes = train.classes_present();
    let to_idx = |ds: &LabeledDataset| -> Vec<usize> {
        ds.labels()
            .iter()
            .map(|l| classes.iter().position(|c| c == l).unwrap_or(usize::MAX))
            .collect()
    };
    let trainer = Trainer {
        train_y: to_idx(&train),
        test_y: to_idx(&test),
        train_x: train.features().values().to_owned(),
        test_x: test.features().values().to_owned(),
        seed: seed_value,
    };
    let n_features = train.n_features();
    let n_classes = classes.len();

    let base_arch = |layer_sizes: Vec<usize>| NetworkArchitecture {
        layer_sizes,
        activation: grid.activation,
        dropout_rate: 0.0,
        batch_norm: false,
        optimizer: grid.optimizer,
        learning_rate: grid.learning_rate,
        epochs: grid.epochs,
        batch_size: grid.batch_size,
    };

    let mut curves = Vec::new();
    let mut best_per_stage = Vec::new();
    let mut point = 0u64;

    // Stage 1: hidden layer count at fixed width.
    let mut stage_curves = Vec::new();
    for &layers in &grid.hidden_layer_counts {
        let mut sizes = vec![n_features];
        sizes.extend(std::iter::repeat(grid.stage1_width).take(layers));
        sizes.push(n_classes);
        let arch = base_arch(sizes);
        stage_curves.push(trainer.run("layers", &format!("layers={layers}"), &arch, point));
        point += 1;
    }
    let best_stack = best_curve(&stage_curves)
        .map(|c| c.layer_sizes.clone())
        .unwrap_or_else(|| {
            let mut sizes = vec![n_features];
            sizes.extend(std::iter::repeat(grid.stage1_width).take(2));
            sizes.push(n_classes);
            sizes
        });
    if let Some(best) = best_curve(&stage_curves) {
        best_per_stage.push(("layers".to_string(), best.label.clone()));
    }
    curves.extend(stage_curves);

    // Stage 2: neuron configurations.
    let mut stage_curves = Vec::new();
    for config in &grid.neuron_configs {
        let arch = base_arch(config.clone());
        let label = format!(
            "neurons=({})",
            config
                .iter()
                .map(|s| s.to_string())
                .collect::<Vec<_>>()
                .join(",")
        );
        stage_curves.push(trainer.run("neurons", &label, &arch, point));
        point += 1;
    }
    let best_stack = best_curve(&stage_curves)
        .map(|c| c.layer_sizes.clone())
        .unwrap_or(best_stack);
    if let Some(best) = best_curve(&stage_curves) {
        best_per_stage.push(("neurons".to_string(), best.label.clone()));
    }
    curves.extend(stage_curves);

    // Stage 3: dropout on the chosen stack.
    let mut stage_curves = Vec::new();
    for &rate in &grid.dropout_rates {
        let arch = NetworkArchitecture {
            dropout_rate: rate,
            ..base_arch(best_stack.clone())
        };
        stage_curves.push(trainer.run("dropout", &format!("dropout={rate}"), &arch, point));
        point += 1;
    }
    let best_dropout = best_curve(&stage_curves).map_or(0.0, |c| c.dropout);
    if let Some(best) = best_curve(&stage_curves) {
        best_per_stage.push(("dropout".to_string(), best.label.clone()));
    }
    curves.extend(stage_curves);

    // Stage 4: batch normalization toggle (no dropout).
    let mut stage_curves = Vec::new();
    for flag in [false, true] {
        let arch = NetworkArchitecture {
            batch_norm: flag,
            ..base_arch(best_stack.clone())
        };
        stage_curves.push(trainer.run("batch-norm", &format!("batch_norm={flag}"), &arch, point));
        point += 1;
    }
    if let Some(best) = best_curve(&stage_curves) {
        best_per_stage.push(("batch-norm".to_string(), best.label.clone()));
    }
    curves.extend(stage_curves);

    // Stage 5: best dropout and batch normalization together.
    let arch = NetworkArchitecture {
        dropout_rate: best_dropout,
        batch_norm: true,
        ..base_arch(best_stack.clone())
    };
    let label = format!("dropout={best_dropout}+batch_norm=true");
    let curve = trainer.run("dropout+batch-norm", &label, &arch, point);
    if curve.error.is_none() {
        best_per_stage.push(("dropout+batch-norm".to_string(), curve.label.clone()));
    }
    curves.push(curve);

    Ok(TuningReport {
        curves,
        best_per_stage,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;

    fn tiny_grid() -> TuningGrid {
        TuningGrid {
            hidden_layer_counts: vec![1, 2],
            stage1_width: 8,
            neuron_configs: vec![vec![6, 12, 6, 3], vec![99, 4, 3]],
            dropout_rates: vec![0.2],
            epochs: 3,
            batch_size: 16,
            ..TuningGrid::default()
        }
    }

    #[test]
    fn sweep_covers_every_stage_and_tolerates_bad_configs() {
        let ds = synth::overlapping_three_class(90, 6, 41);
        let report = run_dnn_tuning(
            &ds,
            &tiny_grid(),
            &SplitSpec::default(),
            &SmoteSpec::default(),
            7,
        )
        .unwrap();
        // 2 layer points + 2 neuron points + 1 dropout + 2 bn + 1 joint
        assert_eq!(report.curves.len(), 8);
        let failed: Vec<_> = report.curves.iter().filter(|c| c.error.is_some()).collect();
        assert_eq!(failed.len(), 1, "the 99-input config must fail");
        for c in report.curves.iter().filter(|c| c.error.is_none()) {
            assert_eq!(c.train_accuracy.len(), 3);
            assert_eq!(c.test_accuracy.len(), 3);
        }
        assert!(report.best_per_stage.len() >= 4);
    }

    #[test]
    fn degenerate_single_point_grid() {
        let ds = synth::overlapping_three_class(60, 6, 43);
        let grid = TuningGrid {
            hidden_layer_counts: vec![1],
            stage1_width: 6,
            neuron_configs: vec![vec![6, 6, 3]],
            dropout_rates: vec![0.1],
            epochs: 1,
            batch_size: 16,
            ..TuningGrid::default()
        };
        let report = run_dnn_tuning(
            &ds,
            &grid,
            &SplitSpec::default(),
            &SmoteSpec::default(),
            1,
        )
        .unwrap();
        let first = &report.curves[0];
        assert_eq!(first.train_accuracy.len(), 1);
    }

    #[test]
    fn tuning_is_deterministic() {
        let ds = synth::overlapping_three_class(60, 6, 47);
        let grid = TuningGrid {
            hidden_layer_counts: vec![1],
            stage1_width: 6,
            neuron_configs: vec![vec![6, 6, 3]],
            dropout_rates: vec![0.3],
            epochs: 2,
            batch_size: 8,
            ..TuningGrid::default()
        };
        let a = run_dnn_tuning(&ds, &grid, &SplitSpec::default(), &SmoteSpec::default(), 3).unwrap();
        let b = run_dnn_tuning(&ds, &grid, &SplitSpec::default(), &SmoteSpec::default(), 3).unwrap();
        assert_eq!(a.summary_csv(), b.summary_csv());
    }
}
