//! Feature scaling and SMOTE oversampling.
//!
//! Scalers are fitted on training data only; `apply_scaler` reuses the fitted
//! statistics on test data. SMOTE appends synthetic minority samples by
//! interpolating between a class member and one of its K nearest same-class
//! neighbours; original rows are never modified.

use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{ClassLabel, DataMatrix, LabeledDataset};
use crate::seed;

#[derive(Debug, Error)]
pub enum PreprocessError {
    #[error("operation requires fully observed data")]
    IncompleteData,
    #[error("scaler was fitted on {fitted} columns, input has {input}")]
    ColumnMismatch { fitted: usize, input: usize },
    #[error("class {0} has a single member and cannot be oversampled")]
    SingletonClass(ClassLabel),
    #[error("class {0} has no members and cannot be oversampled")]
    EmptyClass(ClassLabel),
    #[error("target count {target} for class {class} is below its current count {current}")]
    TargetBelowCurrent {
        class: ClassLabel,
        target: usize,
        current: usize,
    },
    #[error("k_neighbors must be >= 1")]
    ZeroNeighbors,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScalerMode {
    /// Per-column zero mean, unit standard deviation.
    ZScore,
    /// Per-column range [0, 1].
    MinMax,
    /// Per-column zero mean only.
    Center,
}

/// Fitted per-column statistics. Constant columns under z-score map to zero
/// rather than dividing by zero.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalerParams {
    pub mode: ScalerMode,
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    pub mins: Vec<f64>,
    pub maxes: Vec<f64>,
}

pub fn fit_scaler(data: &DataMatrix, mode: ScalerMode) -> Result<ScalerParams, PreprocessError> {
    if !data.is_complete() {
        return Err(PreprocessError::IncompleteData);
    }
    let n = data.n_rows() as f64;
    let values = data.values();
    let mut means = Vec::with_capacity(data.n_cols());
    let mut stds = Vec::with_capacity(data.n_cols());
    let mut mins = Vec::with_capacity(data.n_cols());
    let mut maxes = Vec::with_capacity(data.n_cols());
    for c in 0..data.n_cols() {
        let col = values.column(c);
        let mean = col.sum() / n;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let std = var.sqrt();
        if std == 0.0 && mode == ScalerMode::ZScore {
            log::warn!(
                "column {:?} is constant; z-score maps it to zeros",
                data.col_names()[c]
            );
        }
        means.push(mean);
        stds.push(std);
        mins.push(col.iter().cloned().fold(f64::INFINITY, f64::min));
        maxes.push(col.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
    }
    Ok(ScalerParams {
        mode,
        means,
        stds,
        mins,
        maxes,
    })
}

pub fn apply_scaler(data: &DataMatrix, params: &ScalerParams) -> Result<DataMatrix, PreprocessError> {
    if !data.is_complete() {
        return Err(PreprocessError::IncompleteData);
    }
    if data.n_cols() != params.means.len() {
        return Err(PreprocessError::ColumnMismatch {
            fitted: params.means.len(),
            input: data.n_cols(),
        });
    }
    let mut values = data.values().to_owned();
    for c in 0..data.n_cols() {
        let mut col = values.column_mut(c);
        match params.mode {
            ScalerMode::ZScore => {
                let (mean, std) = (params.means[c], params.stds[c]);
                col.mapv_inplace(|v| if std == 0.0 { 0.0 } else { (v - mean) / std });
            }
            ScalerMode::MinMax => {
                let (min, max) = (params.mins[c], params.maxes[c]);
                let range = max - min;
                col.mapv_inplace(|v| if range == 0.0 { 0.0 } else { (v - min) / range });
            }
            ScalerMode::Center => {
                let mean = params.means[c];
                col.mapv_inplace(|v| v - mean);
            }
        }
    }
    Ok(data.with_complete_values(values))
}

/// Undo a scaler application; the affine inverse of `apply_scaler`.
pub fn invert_scaler(data: &DataMatrix, params: &ScalerParams) -> Result<DataMatrix, PreprocessError> {
    if !data.is_complete() {
        return Err(PreprocessError::IncompleteData);
    }
    if data.n_cols() != params.means.len() {
        return Err(PreprocessError::ColumnMismatch {
            fitted: params.means.len(),
            input: data.n_cols(),
        });
    }
    let mut values = data.values().to_owned();
    for c in 0..data.n_cols() {
        let mut col = values.column_mut(c);
        match params.mode {
            ScalerMode::ZScore => {
                let (mean, std) = (params.means[c], params.stds[c]);
                col.mapv_inplace(|v| if std == 0.0 { mean } else { v * std + mean });
            }
            ScalerMode::MinMax => {
                let (min, max) = (params.mins[c], params.maxes[c]);
                let range = max - min;
                col.mapv_inplace(|v| if range == 0.0 { min } else { v * range + min });
            }
            ScalerMode::Center => {
                let mean = params.means[c];
                col.mapv_inplace(|v| v + mean);
            }
        }
    }
    Ok(data.with_complete_values(values))
}

/// Per-class oversampling targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SmoteTarget {
    /// Raise every present class to the majority class count.
    BalanceToMajority,
    /// Explicit per-class counts in alphabet order [A, B, C]. Must be at
    /// least the current counts; classes absent from the data must stay 0.
    Counts([usize; 3]),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SmoteSpec {
    pub k_neighbors: usize,
    pub target: SmoteTarget,
    pub seed: u64,
    /// One gap value `u` per synthetic sample by default; per-coordinate
    /// gaps as an alternative.
    pub per_coordinate_gap: bool,
}

impl Default for SmoteSpec {
    fn default() -> Self {
        SmoteSpec {
            k_neighbors: 5,
            target: SmoteTarget::BalanceToMajority,
            seed: 0,
            per_coordinate_gap: false,
        }
    }
}

/// Append synthetic rows until each class reaches its target count.
///
/// Each synthetic sample is `x + u * (x_nn - x)` for a seed point `x` (class
/// members are cycled in order), a uniformly chosen neighbour among the K
/// nearest same-class rows, and `u` uniform in [0, 1]. Deterministic for a
/// fixed seed.
pub fn smote(dataset: &LabeledDataset, spec: &SmoteSpec) -> Result<LabeledDataset, PreprocessError> {
    if spec.k_neighbors == 0 {
        return Err(PreprocessError::ZeroNeighbors);
    }
    let counts = dataset.class_counts();
    let targets: [usize; 3] = match spec.target {
        SmoteTarget::BalanceToMajority => {
            let majority = *counts.iter().max().unwrap();
            let mut t = [0usize; 3];
            for class in ClassLabel::ALL {
                t[class.index()] = if counts[class.index()] > 0 { majority } else { 0 };
            }
            t
        }
        SmoteTarget::Counts(t) => t,
    };
    for class in ClassLabel::ALL {
        let (current, target) = (counts[class.index()], targets[class.index()]);
        if target < current {
            return Err(PreprocessError::TargetBelowCurrent {
                class,
                target,
                current,
            });
        }
        if target > current && current == 0 {
            return Err(PreprocessError::EmptyClass(class));
        }
        if target > current && current == 1 {
            return Err(PreprocessError::SingletonClass(class));
        }
    }

    let features = dataset.features();
    let p = features.n_cols();
    let values = features.values();

    let mut new_rows: Vec<Vec<f64>> = Vec::new();
    let mut new_labels: Vec<ClassLabel> = Vec::new();
    for class in ClassLabel::ALL {
        let need = targets[class.index()].saturating_sub(counts[class.index()]);
        if need == 0 {
            continue;
        }
        let members: Vec<usize> = dataset
            .labels()
            .iter()
            .enumerate()
            .filter(|&(_, &l)| l == class)
            .map(|(i, _)| i)
            .collect();
        let k = spec.k_neighbors.min(members.len() - 1);
        if k < spec.k_neighbors {
            log::warn!(
                "class {class}: k_neighbors clamped to {k} (class size {})",
                members.len()
            );
        }

        // K nearest same-class neighbours per member, ties by lower index.
        let neighbours: Vec<Vec<usize>> = members
            .iter()
            .map(|&i| {
                let mut dists: Vec<(f64, usize)> = members
                    .iter()
                    .filter(|&&j| j != i)
                    .map(|&j| {
                        let d = (0..p)
                            .map(|c| values[[i, c]] - values[[j, c]])
                            .map(|d| d * d)
                            .sum::<f64>();
                        (d, j)
                    })
                    .collect();
                dists.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
                dists.truncate(k);
                dists.into_iter().map(|(_, j)| j).collect()
            })
            .collect();

        let mut rng = seed::rng(spec.seed, "smote", class.index() as u64);
        for i in 0..need {
            let member_slot = i % members.len();
            let x = members[member_slot];
            let nn = neighbours[member_slot][rng.gen_range(0..k)];
            let mut row = Vec::with_capacity(p);
            if spec.per_coordinate_gap {
                for c in 0..p {
                    let u: f64 = rng.gen();
                    row.push(values[[x, c]] + u * (values[[nn, c]] - values[[x, c]]));
                }
            } else {
                let u: f64 = rng.gen();
                for c in 0..p {
                    row.push(values[[x, c]] + u * (values[[nn, c]] - values[[x, c]]));
                }
            }
            new_rows.push(row);
            new_labels.push(class);
        }
    }

    let n_out = dataset.n_rows() + new_rows.len();
    let mut out = Array2::zeros((n_out, p));
    for r in 0..dataset.n_rows() {
        out.row_mut(r).assign(&values.row(r));
    }
    let mut row_ids: Vec<String> = features.row_ids().to_vec();
    for (i, row) in new_rows.iter().enumerate() {
        let r = dataset.n_rows() + i;
        for c in 0..p {
            out[[r, c]] = row[c];
        }
        row_ids.push(format!("syn_{}_{}", new_labels[i], i));
    }
    let mask = Array2::from_elem((n_out, p), true);
    let matrix = DataMatrix::new(out, mask, features.col_names().to_vec(), row_ids)
        .expect("smote output shares validated names");
    let mut labels = dataset.labels().to_vec();
    labels.extend(new_labels);
    Ok(LabeledDataset::new(matrix, labels).expect("smote output is complete"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn ds(rows: Vec<Vec<f64>>, labels: Vec<ClassLabel>) -> LabeledDataset {
        let p = rows[0].len();
        let values = Array2::from_shape_fn((rows.len(), p), |(r, c)| rows[r][c]);
        LabeledDataset::new(DataMatrix::from_values(values), labels).unwrap()
    }

    #[test]
    fn zscore_definition_holds() {
        let m = DataMatrix::from_values(array![[1.0], [2.0], [3.0]]);
        let params = fit_scaler(&m, ScalerMode::ZScore).unwrap();
        let out = apply_scaler(&m, &params).unwrap();
        let col: Vec<f64> = (0..3).map(|r| out.get(r, 0).unwrap()).collect();
        let mean = col.iter().sum::<f64>() / 3.0;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 3.0;
        assert!(mean.abs() < 1e-12);
        assert!((var.sqrt() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn scale_then_invert_recovers_input() {
        let m = DataMatrix::from_values(array![
            [1.0, 100.0, -3.0],
            [2.0, 150.0, 4.5],
            [3.5, 120.0, 0.0]
        ]);
        for mode in [ScalerMode::ZScore, ScalerMode::MinMax, ScalerMode::Center] {
            let params = fit_scaler(&m, mode).unwrap();
            let scaled = apply_scaler(&m, &params).unwrap();
            let back = invert_scaler(&scaled, &params).unwrap();
            for r in 0..3 {
                for c in 0..3 {
                    assert!(
                        (back.get(r, c).unwrap() - m.get(r, c).unwrap()).abs() < 1e-10,
                        "{mode:?} at ({r},{c})"
                    );
                }
            }
        }
    }

    #[test]
    fn minmax_maps_2_4_6_to_unit_steps() {
        let m = DataMatrix::from_values(array![[2.0], [4.0], [6.0]]);
        let params = fit_scaler(&m, ScalerMode::MinMax).unwrap();
        let out = apply_scaler(&m, &params).unwrap();
        assert_eq!(out.get(0, 0), Some(0.0));
        assert_eq!(out.get(1, 0), Some(0.5));
        assert_eq!(out.get(2, 0), Some(1.0));
    }

    #[test]
    fn constant_column_under_zscore_becomes_zeros() {
        let m = DataMatrix::from_values(array![[7.0, 1.0], [7.0, 2.0], [7.0, 3.0]]);
        let params = fit_scaler(&m, ScalerMode::ZScore).unwrap();
        let out = apply_scaler(&m, &params).unwrap();
        for r in 0..3 {
            assert_eq!(out.get(r, 0), Some(0.0));
        }
    }

    #[test]
    fn zscore_refit_is_idempotent() {
        let m = DataMatrix::from_values(array![[1.0, 5.0], [4.0, -2.0], [9.0, 3.0], [2.0, 0.5]]);
        let once = apply_scaler(&m, &fit_scaler(&m, ScalerMode::ZScore).unwrap()).unwrap();
        let twice = apply_scaler(&once, &fit_scaler(&once, ScalerMode::ZScore).unwrap()).unwrap();
        for r in 0..4 {
            for c in 0..2 {
                assert!((once.get(r, c).unwrap() - twice.get(r, c).unwrap()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn coincident_minority_points_synthesize_themselves() {
        let dataset = ds(
            vec![
                vec![5.0, 5.0],
                vec![5.0, 5.0],
                vec![0.0, 0.0],
                vec![1.0, 0.0],
                vec![0.0, 1.0],
                vec![1.0, 1.0],
            ],
            vec![
                ClassLabel::C,
                ClassLabel::C,
                ClassLabel::A,
                ClassLabel::A,
                ClassLabel::A,
                ClassLabel::A,
            ],
        );
        let out = smote(&dataset, &SmoteSpec::default()).unwrap();
        assert_eq!(out.class_counts(), [4, 0, 4]);
        for (r, &label) in out.labels().iter().enumerate().skip(6) {
            assert_eq!(label, ClassLabel::C);
            assert_eq!(out.features().get(r, 0), Some(5.0));
            assert_eq!(out.features().get(r, 1), Some(5.0));
        }
    }

    #[test]
    fn synthetic_points_lie_on_segment() {
        let dataset = ds(
            vec![
                vec![0.0, 0.0],
                vec![1.0, 1.0],
                vec![9.0, 9.0],
                vec![9.5, 9.0],
                vec![9.0, 9.5],
                vec![9.5, 9.5],
                vec![10.0, 9.5],
            ],
            vec![
                ClassLabel::A,
                ClassLabel::A,
                ClassLabel::B,
                ClassLabel::B,
                ClassLabel::B,
                ClassLabel::B,
                ClassLabel::B,
            ],
        );
        let spec = SmoteSpec {
            k_neighbors: 1,
            ..SmoteSpec::default()
        };
        let out = smote(&dataset, &spec).unwrap();
        assert_eq!(out.class_counts(), [5, 5, 0]);
        // Synthetic A points interpolate (0,0) and (1,1): coordinates equal.
        for r in 7..out.n_rows() {
            if out.labels()[r] == ClassLabel::A {
                let x = out.features().get(r, 0).unwrap();
                let y = out.features().get(r, 1).unwrap();
                assert!((x - y).abs() < 1e-12);
                assert!((0.0..=1.0).contains(&x));
            }
        }
    }

    #[test]
    fn paper_proportions_balance_to_majority() {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        let mut push = |n: usize, label: ClassLabel, offset: f64| {
            for i in 0..n {
                rows.push(vec![offset + i as f64 * 0.01, offset - i as f64 * 0.02]);
                labels.push(label);
            }
        };
        push(43, ClassLabel::A, 0.0);
        push(51, ClassLabel::B, 10.0);
        push(6, ClassLabel::C, 20.0);
        let dataset = ds(rows, labels);
        let out = smote(&dataset, &SmoteSpec::default()).unwrap();
        assert_eq!(out.class_counts(), [51, 51, 51]);
        // Originals unchanged, in place.
        for r in 0..dataset.n_rows() {
            assert_eq!(out.labels()[r], dataset.labels()[r]);
            for c in 0..2 {
                assert_eq!(
                    out.features().get(r, c).unwrap().to_bits(),
                    dataset.features().get(r, c).unwrap().to_bits()
                );
            }
        }
    }

    #[test]
    fn betweenness_holds_componentwise() {
        let mut rows = vec![vec![3.0, -1.0, 0.5], vec![5.0, 2.0, -0.5], vec![4.0, 0.0, 2.0]];
        let mut labels = vec![ClassLabel::C; 3];
        for i in 0..20 {
            rows.push(vec![i as f64, 2.0 * i as f64, -(i as f64)]);
            labels.push(ClassLabel::B);
        }
        let dataset = ds(rows.clone(), labels);
        let out = smote(&dataset, &SmoteSpec { seed: 11, ..SmoteSpec::default() }).unwrap();
        // Each synthetic C row must lie componentwise between some pair of
        // original C rows (its seed point and neighbour).
        for r in 23..out.n_rows() {
            assert_eq!(out.labels()[r], ClassLabel::C);
            let synth: Vec<f64> = (0..3).map(|c| out.features().get(r, c).unwrap()).collect();
            let ok = (0..3).any(|a| {
                (0..3).any(|b| {
                    a != b
                        && (0..3).all(|c| {
                            let lo = rows[a][c].min(rows[b][c]) - 1e-12;
                            let hi = rows[a][c].max(rows[b][c]) + 1e-12;
                            synth[c] >= lo && synth[c] <= hi
                        })
                })
            });
            assert!(ok, "synthetic row {r} is outside every seed/neighbour segment");
        }
    }

    #[test]
    fn singleton_class_is_an_error() {
        let dataset = ds(
            vec![vec![0.0], vec![1.0], vec![2.0], vec![9.0]],
            vec![ClassLabel::A, ClassLabel::A, ClassLabel::A, ClassLabel::C],
        );
        assert!(matches!(
            smote(&dataset, &SmoteSpec::default()),
            Err(PreprocessError::SingletonClass(ClassLabel::C))
        ));
    }

    #[test]
    fn smote_is_deterministic() {
        let dataset = ds(
            vec![
                vec![0.0, 0.0],
                vec![1.0, 0.5],
                vec![0.5, 1.0],
                vec![5.0, 5.0],
                vec![6.0, 5.0],
                vec![5.0, 6.0],
                vec![6.0, 6.0],
                vec![5.5, 5.5],
            ],
            vec![
                ClassLabel::A,
                ClassLabel::A,
                ClassLabel::A,
                ClassLabel::B,
                ClassLabel::B,
                ClassLabel::B,
                ClassLabel::B,
                ClassLabel::B,
            ],
        );
        let spec = SmoteSpec { seed: 42, ..SmoteSpec::default() };
        let a = smote(&dataset, &spec).unwrap();
        let b = smote(&dataset, &spec).unwrap();
        assert_eq!(a, b);
    }
}
