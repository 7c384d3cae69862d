//! Evaluation metrics: SMAPE for imputation quality, accuracy and per-class
//! precision/recall/F1 for classification.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::ClassLabel;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("input is empty")]
    EmptyInput,
}

/// Symmetric mean absolute percentage error, 0-200 variant:
/// `(100/n) * sum 2|p - a| / (|a| + |p|)`, a term being 0 when both values
/// are 0.
pub fn smape(actual: &[f64], predicted: &[f64]) -> Result<f64, EvalError> {
    if actual.len() != predicted.len() {
        return Err(EvalError::LengthMismatch(actual.len(), predicted.len()));
    }
    if actual.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let sum: f64 = actual
        .iter()
        .zip(predicted)
        .map(|(&a, &p)| {
            let denom = a.abs() + p.abs();
            if denom == 0.0 {
                0.0
            } else {
                2.0 * (p - a).abs() / denom
            }
        })
        .sum();
    Ok(100.0 * sum / actual.len() as f64)
}

/// Per-class and macro-averaged classification metrics.
///
/// Confusion matrix rows are true classes, columns predicted, both in the
/// fixed alphabet order [A, B, C]. A class with no true and no predicted
/// samples scores 0 on precision/recall/F1; macro averages run over classes
/// present in the true labels.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub accuracy: f64,
    pub per_class: Vec<ClassMetrics>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub confusion: [[usize; 3]; 3],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: ClassLabel,
    pub support: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

pub fn classification_report(
    true_labels: &[ClassLabel],
    predicted_labels: &[ClassLabel],
) -> Result<ClassificationReport, EvalError> {
    if true_labels.len() != predicted_labels.len() {
        return Err(EvalError::LengthMismatch(
            true_labels.len(),
            predicted_labels.len(),
        ));
    }
    if true_labels.is_empty() {
        return Err(EvalError::EmptyInput);
    }

    let mut confusion = [[0usize; 3]; 3];
    for (&t, &p) in true_labels.iter().zip(predicted_labels) {
        confusion[t.index()][p.index()] += 1;
    }

    let n = true_labels.len();
    let correct: usize = (0..3).map(|i| confusion[i][i]).sum();
    let accuracy = correct as f64 / n as f64;

    let mut per_class = Vec::new();
    for class in ClassLabel::ALL {
        let i = class.index();
        let tp = confusion[i][i];
        let fp: usize = (0..3).filter(|&r| r != i).map(|r| confusion[r][i]).sum();
        let fn_: usize = (0..3).filter(|&c| c != i).map(|c| confusion[i][c]).sum();
        let support = tp + fn_;
        let precision = ratio_or_zero(tp, tp + fp);
        let recall = ratio_or_zero(tp, tp + fn_);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        per_class.push(ClassMetrics {
            class,
            support,
            precision,
            recall,
            f1,
        });
    }

    // Macro averages over classes present in the true labels.
    let present: Vec<&ClassMetrics> = per_class.iter().filter(|m| m.support > 0).collect();
    let k = present.len() as f64;
    let macro_precision = present.iter().map(|m| m.precision).sum::<f64>() / k;
    let macro_recall = present.iter().map(|m| m.recall).sum::<f64>() / k;
    let macro_f1 = present.iter().map(|m| m.f1).sum::<f64>() / k;

    Ok(ClassificationReport {
        accuracy,
        per_class,
        macro_precision,
        macro_recall,
        macro_f1,
        confusion,
    })
}

fn ratio_or_zero(num: usize, denom: usize) -> f64 {
    if denom == 0 {
        0.0
    } else {
        num as f64 / denom as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ClassLabel::{A, B, C};

    #[test]
    fn smape_zero_on_identity() {
        assert_eq!(smape(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
    }

    #[test]
    fn smape_hand_values() {
        // 100 * 2*|3-1|/(1+3) = 100; upper saturation at 200.
        assert!((smape(&[1.0], &[3.0]).unwrap() - 100.0).abs() < 1e-12);
        assert!((smape(&[1.0], &[0.0]).unwrap() - 200.0).abs() < 1e-12);
        // both zero -> term is 0
        assert_eq!(smape(&[0.0], &[0.0]).unwrap(), 0.0);
    }

    #[test]
    fn smape_symmetry_and_scale_invariance() {
        let a = [1.0, 5.0, 0.25, 9.0];
        let p = [2.0, 4.5, 0.5, 10.0];
        let ap = smape(&a, &p).unwrap();
        let pa = smape(&p, &a).unwrap();
        assert!((ap - pa).abs() < 1e-12);
        let a3: Vec<f64> = a.iter().map(|x| 3.0 * x).collect();
        let p3: Vec<f64> = p.iter().map(|x| 3.0 * x).collect();
        assert!((smape(&a3, &p3).unwrap() - ap).abs() < 1e-12);
    }

    #[test]
    fn smape_errors() {
        assert!(matches!(
            smape(&[1.0], &[1.0, 2.0]),
            Err(EvalError::LengthMismatch(1, 2))
        ));
        assert!(matches!(smape(&[], &[]), Err(EvalError::EmptyInput)));
    }

    #[test]
    fn report_perfect_predictions() {
        let labels = [A, B, C, A, B, C];
        let report = classification_report(&labels, &labels).unwrap();
        assert_eq!(report.accuracy, 1.0);
        assert_eq!(report.macro_f1, 1.0);
    }

    #[test]
    fn report_hand_confusion_example() {
        // true [A,A,B,B], pred [A,B,B,B]:
        // accuracy 3/4; A: precision 1, recall 1/2, f1 2/3;
        // B: precision 2/3, recall 1, f1 4/5; macro f1 (2/3 + 4/5)/2.
        let report = classification_report(&[A, A, B, B], &[A, B, B, B]).unwrap();
        assert!((report.accuracy - 0.75).abs() < 1e-12);
        let a = &report.per_class[0];
        assert!((a.precision - 1.0).abs() < 1e-12);
        assert!((a.recall - 0.5).abs() < 1e-12);
        let b = &report.per_class[1];
        assert!((b.precision - 2.0 / 3.0).abs() < 1e-12);
        assert!((b.recall - 1.0).abs() < 1e-12);
        let expected_macro_f1 = (2.0 / 3.0 + 4.0 / 5.0) / 2.0;
        assert!((report.macro_f1 - expected_macro_f1).abs() < 1e-12);
    }

    #[test]
    fn report_degenerate_single_class_predictor() {
        // balanced 2-class data, all predictions A: accuracy 0.5;
        // A: p=0.5, r=1, f1=2/3; B: 0 -> macro f1 = 1/3.
        let report = classification_report(&[A, A, B, B], &[A, A, A, A]).unwrap();
        assert!((report.accuracy - 0.5).abs() < 1e-12);
        assert!((report.macro_f1 - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn confusion_totals_equal_sample_count() {
        let t = [A, B, C, C, B, A, A];
        let p = [B, B, C, A, B, A, C];
        let report = classification_report(&t, &p).unwrap();
        let total: usize = report.confusion.iter().flatten().sum();
        assert_eq!(total, t.len());
    }

    #[test]
    fn f1_between_min_and_max_of_p_and_r() {
        let t = [A, A, A, B, B, C, C, C, C];
        let p = [A, B, A, B, C, C, C, A, B];
        let report = classification_report(&t, &p).unwrap();
        for m in &report.per_class {
            let lo = m.precision.min(m.recall);
            let hi = m.precision.max(m.recall);
            assert!(m.f1 >= lo - 1e-12 && m.f1 <= hi + 1e-12);
            if (m.precision - m.recall).abs() < 1e-12 {
                assert!((m.f1 - m.precision).abs() < 1e-12);
            }
        }
    }
}
