//! Pollution indicators and class labelling.
//!
//! Four indicators are computed per sample: the geoaccumulation index (Igeo)
//! and enrichment factor (EF) per element, and the pollution load index (PLI)
//! and potential ecological risk index (PER) over all elements. Each indicator
//! is mapped through a piecewise merger-score function onto a common [0, 25]
//! scale; the four merged scores are combined and thresholded into the class
//! alphabet {A, B, C}.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::ClassLabel;

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("background concentration must be strictly positive, got {0}")]
    NonPositiveBackground(f64),
    #[error("enrichment factor inputs must be strictly positive, got {0}")]
    NonPositiveInput(f64),
    #[error("contamination factor list is empty")]
    EmptyFactorList,
    #[error("contamination factors must be strictly positive, got {0}")]
    NonPositiveFactor(f64),
    #[error("no toxic-response factor for element {0:?}")]
    MissingToxicResponse(String),
    #[error("merger-score input must be finite, got {0}")]
    NonFiniteInput(f64),
    #[error("sample has no element with both a concentration and a background value")]
    InsufficientElements,
    #[error("reference element {0:?} is not observed in the sample")]
    ReferenceNotObserved(String),
    #[error("reference element {0:?} has no background entry")]
    ReferenceBackgroundMissing(String),
    #[error("background table is empty")]
    EmptyBackground,
    #[error("toxic-response factor for {element:?} must be strictly positive, got {value}")]
    NonPositiveToxicResponse { element: String, value: f64 },
}

/// Per-element geochemical background, EF reference element and Hakanson
/// toxic-response factors. Values are configuration, not constants: they ship
/// as an editable file with documented literature defaults.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BackgroundProfile {
    /// Element -> background concentration (mg/kg).
    pub background: BTreeMap<String, f64>,
    /// Element used to normalize enrichment factors.
    pub reference_element: String,
    /// Element -> dimensionless toxic-response factor.
    pub toxic_response: BTreeMap<String, f64>,
}

impl BackgroundProfile {
    pub fn validate(&self) -> Result<(), IndexError> {
        if self.background.is_empty() {
            return Err(IndexError::EmptyBackground);
        }
        for (_, &b) in &self.background {
            if !(b > 0.0) {
                return Err(IndexError::NonPositiveBackground(b));
            }
        }
        if !self.background.contains_key(&self.reference_element) {
            return Err(IndexError::ReferenceBackgroundMissing(
                self.reference_element.clone(),
            ));
        }
        for (element, &t) in &self.toxic_response {
            if !(t > 0.0) {
                return Err(IndexError::NonPositiveToxicResponse {
                    element: element.clone(),
                    value: t,
                });
            }
        }
        Ok(())
    }
}

/// How per-element merged scores collapse into one per-sample score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScoreAggregation {
    /// Arithmetic mean across elements (default).
    Mean,
    /// Maximum across elements; the conservative alternative.
    Max,
}

/// Thresholds mapping the combined [0, 25] score to {A, B, C}.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ClassThresholds {
    /// combined < a_below  => A
    pub a_below: f64,
    /// a_below <= combined < b_below => B, else C
    pub b_below: f64,
}

impl Default for ClassThresholds {
    fn default() -> Self {
        ClassThresholds {
            a_below: 5.0,
            b_below: 15.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabellingConfig {
    pub aggregation: ScoreAggregation,
    pub thresholds: ClassThresholds,
}

impl Default for LabellingConfig {
    fn default() -> Self {
        LabellingConfig {
            aggregation: ScoreAggregation::Mean,
            thresholds: ClassThresholds::default(),
        }
    }
}

/// Per-sample indicator values, merged scores and the synthesized label.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IndicatorScores {
    /// Element -> geoaccumulation index.
    pub igeo: BTreeMap<String, f64>,
    /// Element -> enrichment factor.
    pub ef: BTreeMap<String, f64>,
    pub pli: f64,
    pub per: f64,
    /// Merged scores in [0, 25], in indicator order [Igeo, EF, PLI, PER].
    pub merged_scores: [f64; 4],
    /// Mean of the four merged scores, in [0, 25].
    pub combined: f64,
    pub label: ClassLabel,
}

/// Geoaccumulation index: log2(concentration / (1.5 * background)).
pub fn igeo(concentration: f64, background: f64) -> Result<f64, IndexError> {
    if !(background > 0.0) {
        return Err(IndexError::NonPositiveBackground(background));
    }
    Ok((concentration / (1.5 * background)).log2())
}

/// Enrichment factor: (c_x / c_ref) / (b_x / b_ref).
pub fn enrichment_factor(c_x: f64, c_ref: f64, b_x: f64, b_ref: f64) -> Result<f64, IndexError> {
    for v in [c_x, c_ref, b_x, b_ref] {
        if !(v > 0.0) {
            return Err(IndexError::NonPositiveInput(v));
        }
    }
    Ok((c_x / c_ref) / (b_x / b_ref))
}

/// Pollution load index: geometric mean of contamination factors.
pub fn pollution_load_index(contamination_factors: &[f64]) -> Result<f64, IndexError> {
    if contamination_factors.is_empty() {
        return Err(IndexError::EmptyFactorList);
    }
    let mut log_sum = 0.0;
    for &cf in contamination_factors {
        if !(cf > 0.0) {
            return Err(IndexError::NonPositiveFactor(cf));
        }
        log_sum += cf.ln();
    }
    Ok((log_sum / contamination_factors.len() as f64).exp())
}

/// Potential ecological risk index: sum of toxic-response-weighted
/// contamination factors.
pub fn potential_ecological_risk(
    contamination_factors: &BTreeMap<String, f64>,
    toxic_response: &BTreeMap<String, f64>,
) -> Result<f64, IndexError> {
    let mut sum = 0.0;
    for (element, &cf) in contamination_factors {
        let tr = toxic_response
            .get(element)
            .ok_or_else(|| IndexError::MissingToxicResponse(element.clone()))?;
        sum += tr * cf;
    }
    Ok(sum)
}

fn check_finite(x: f64) -> Result<(), IndexError> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(IndexError::NonFiniteInput(x))
    }
}

/// Merger score for Igeo: 0 below 0, 5x on [0, 5], saturates at 25.
pub fn score_igeo(x: f64) -> Result<f64, IndexError> {
    check_finite(x)?;
    Ok(if x < 0.0 {
        0.0
    } else if x <= 5.0 {
        5.0 * x
    } else {
        25.0
    })
}

/// Merger score for EF: 0 below 2, 25(x-2)/38 on [2, 40], saturates at 25.
pub fn score_ef(x: f64) -> Result<f64, IndexError> {
    check_finite(x)?;
    Ok(if x < 2.0 {
        0.0
    } else if x <= 40.0 {
        25.0 * (x - 2.0) / 38.0
    } else {
        25.0
    })
}

/// Merger score for PLI: 0 below 1, 25(x-1)/4 on [1, 5], saturates at 25.
pub fn score_pli(x: f64) -> Result<f64, IndexError> {
    check_finite(x)?;
    Ok(if x < 1.0 {
        0.0
    } else if x <= 5.0 {
        25.0 * (x - 1.0) / 4.0
    } else {
        25.0
    })
}

/// Merger score for PER: 0 below 40, 25(x-40)/280 on [40, 320], saturates at 25.
pub fn score_per(x: f64) -> Result<f64, IndexError> {
    check_finite(x)?;
    Ok(if x < 40.0 {
        0.0
    } else if x <= 320.0 {
        25.0 * (x - 40.0) / 280.0
    } else {
        25.0
    })
}

fn aggregate(scores: &[f64], mode: ScoreAggregation) -> f64 {
    match mode {
        ScoreAggregation::Mean => scores.iter().sum::<f64>() / scores.len() as f64,
        ScoreAggregation::Max => scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    }
}

/// Label one sample from its observed element concentrations.
///
/// Elements without a background entry are excluded from the indicators rather
/// than failing the sample; PER additionally uses only elements carrying a
/// toxic-response factor. Per-element Igeo/EF scores aggregate by the
/// configured mode, the four merged scores average into `combined`, and the
/// class thresholds produce the label.
pub fn label_sample(
    concentrations: &BTreeMap<String, f64>,
    profile: &BackgroundProfile,
    config: &LabellingConfig,
) -> Result<IndicatorScores, IndexError> {
    profile.validate()?;

    // Elements usable for indicators: observed concentration + background.
    let usable: Vec<(&String, f64, f64)> = concentrations
        .iter()
        .filter_map(|(el, &c)| profile.background.get(el).map(|&b| (el, c, b)))
        .collect();
    if usable.is_empty() {
        return Err(IndexError::InsufficientElements);
    }

    let c_ref = *concentrations
        .get(&profile.reference_element)
        .ok_or_else(|| IndexError::ReferenceNotObserved(profile.reference_element.clone()))?;
    let b_ref = profile.background[&profile.reference_element];

    let mut igeo_values = BTreeMap::new();
    let mut igeo_scores = Vec::new();
    let mut ef_values = BTreeMap::new();
    let mut ef_scores = Vec::new();
    let mut cf_list = Vec::new();
    let mut cf_by_element = BTreeMap::new();
    for &(el, c, b) in &usable {
        let x_igeo = igeo(c, b)?;
        igeo_scores.push(score_igeo(x_igeo)?);
        igeo_values.insert(el.clone(), x_igeo);

        let x_ef = enrichment_factor(c, c_ref, b, b_ref)?;
        ef_scores.push(score_ef(x_ef)?);
        ef_values.insert(el.clone(), x_ef);

        if !(c > 0.0) {
            return Err(IndexError::NonPositiveFactor(c / b));
        }
        cf_list.push(c / b);
        if profile.toxic_response.contains_key(el) {
            cf_by_element.insert(el.clone(), c / b);
        }
    }

    let pli = pollution_load_index(&cf_list)?;
    let per = if cf_by_element.is_empty() {
        // None of the observed elements carries a toxic-response factor; PER
        // contributes no risk mass rather than failing the sample.
        0.0
    } else {
        potential_ecological_risk(&cf_by_element, &profile.toxic_response)?
    };

    let merged_scores = [
        aggregate(&igeo_scores, config.aggregation),
        aggregate(&ef_scores, config.aggregation),
        score_pli(pli)?,
        score_per(per)?,
    ];
    let combined = merged_scores.iter().sum::<f64>() / 4.0;
    let label = if combined < config.thresholds.a_below {
        ClassLabel::A
    } else if combined < config.thresholds.b_below {
        ClassLabel::B
    } else {
        ClassLabel::C
    };

    Ok(IndicatorScores {
        igeo: igeo_values,
        ef: ef_values,
        pli,
        per,
        merged_scores,
        combined,
        label,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profile() -> BackgroundProfile {
        let mut background = BTreeMap::new();
        background.insert("Fe".into(), 1000.0);
        background.insert("Cu".into(), 10.0);
        background.insert("Pb".into(), 20.0);
        background.insert("Cd".into(), 0.1);
        let mut toxic_response = BTreeMap::new();
        toxic_response.insert("Cu".into(), 5.0);
        toxic_response.insert("Pb".into(), 5.0);
        toxic_response.insert("Cd".into(), 30.0);
        BackgroundProfile {
            background,
            reference_element: "Fe".into(),
            toxic_response,
        }
    }

    #[test]
    fn igeo_known_points() {
        // concentration = 1.5 b -> log2(1) = 0; 3 b -> log2(2) = 1;
        // 48 b -> 48/1.5 = 32, log2(32) = 5 by direct arithmetic.
        assert_eq!(igeo(15.0, 10.0).unwrap(), 0.0);
        assert_eq!(igeo(30.0, 10.0).unwrap(), 1.0);
        assert_eq!(igeo(480.0, 10.0).unwrap(), 5.0);
        assert!(matches!(
            igeo(1.0, 0.0),
            Err(IndexError::NonPositiveBackground(_))
        ));
    }

    #[test]
    fn igeo_scale_covariance() {
        let base = igeo(42.0, 7.0).unwrap();
        for scale in [0.5, 3.0, 1e6] {
            let scaled = igeo(42.0 * scale, 7.0 * scale).unwrap();
            assert!((scaled - base).abs() < 1e-12);
        }
    }

    #[test]
    fn enrichment_factor_known_points() {
        // identity, linearity in c_x, and 10/2 / (1/1) = 5 by direct arithmetic.
        assert_eq!(enrichment_factor(5.0, 10.0, 1.0, 2.0).unwrap(), 1.0);
        assert_eq!(enrichment_factor(10.0, 10.0, 1.0, 2.0).unwrap(), 2.0);
        assert_eq!(enrichment_factor(10.0, 2.0, 1.0, 1.0).unwrap(), 5.0);
        assert!(matches!(
            enrichment_factor(0.0, 1.0, 1.0, 1.0),
            Err(IndexError::NonPositiveInput(_))
        ));
    }

    #[test]
    fn pli_known_points() {
        // all ones -> 1; sqrt(4) = 2; cbrt(8) = 2.
        assert!((pollution_load_index(&[1.0, 1.0, 1.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((pollution_load_index(&[4.0, 1.0]).unwrap() - 2.0).abs() < 1e-12);
        assert!((pollution_load_index(&[8.0, 1.0, 1.0]).unwrap() - 2.0).abs() < 1e-12);
        assert!(matches!(
            pollution_load_index(&[]),
            Err(IndexError::EmptyFactorList)
        ));
        assert!(matches!(
            pollution_load_index(&[1.0, -2.0]),
            Err(IndexError::NonPositiveFactor(_))
        ));
    }

    #[test]
    fn pli_permutation_invariance() {
        let a = pollution_load_index(&[0.5, 2.0, 8.0, 1.25]).unwrap();
        let b = pollution_load_index(&[8.0, 1.25, 0.5, 2.0]).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn per_known_points() {
        let tr: BTreeMap<String, f64> = [("Cd".to_string(), 30.0)].into();
        let cf: BTreeMap<String, f64> = [("Cd".to_string(), 2.0)].into();
        assert_eq!(potential_ecological_risk(&cf, &tr).unwrap(), 60.0);

        let cf0: BTreeMap<String, f64> = [("Cd".to_string(), 0.0)].into();
        assert_eq!(potential_ecological_risk(&cf0, &tr).unwrap(), 0.0);

        let tr2: BTreeMap<String, f64> =
            [("Cu".to_string(), 5.0), ("Pb".to_string(), 5.0)].into();
        let cf2: BTreeMap<String, f64> =
            [("Cu".to_string(), 1.0), ("Pb".to_string(), 1.0)].into();
        assert_eq!(potential_ecological_risk(&cf2, &tr2).unwrap(), 10.0);

        let cf3: BTreeMap<String, f64> = [("Zn".to_string(), 1.0)].into();
        assert!(matches!(
            potential_ecological_risk(&cf3, &tr),
            Err(IndexError::MissingToxicResponse(_))
        ));
    }

    #[test]
    fn score_functions_at_branch_points() {
        assert_eq!(score_igeo(-1.0).unwrap(), 0.0);
        assert_eq!(score_igeo(2.0).unwrap(), 10.0);
        assert_eq!(score_igeo(7.0).unwrap(), 25.0);

        assert_eq!(score_ef(1.0).unwrap(), 0.0);
        assert_eq!(score_ef(40.0).unwrap(), 25.0);
        assert!((score_ef(21.0).unwrap() - 12.5).abs() < 1e-12); // 25*19/38

        assert_eq!(score_pli(0.5).unwrap(), 0.0);
        assert_eq!(score_pli(5.0).unwrap(), 25.0);
        assert!((score_pli(3.0).unwrap() - 12.5).abs() < 1e-12); // 25*2/4

        assert_eq!(score_per(30.0).unwrap(), 0.0);
        assert_eq!(score_per(320.0).unwrap(), 25.0);
        assert!((score_per(180.0).unwrap() - 12.5).abs() < 1e-12); // 25*140/280
    }

    #[test]
    fn score_functions_reject_non_finite() {
        for f in [score_igeo, score_ef, score_pli, score_per] {
            assert!(matches!(f(f64::NAN), Err(IndexError::NonFiniteInput(_))));
            assert!(matches!(
                f(f64::INFINITY),
                Err(IndexError::NonFiniteInput(_))
            ));
        }
    }

    #[test]
    fn continuity_at_breakpoints() {
        let eps = 1e-9;
        let cases: [(fn(f64) -> Result<f64, IndexError>, &[f64]); 4] = [
            (score_igeo, &[0.0, 5.0]),
            (score_ef, &[2.0, 40.0]),
            (score_pli, &[1.0, 5.0]),
            (score_per, &[40.0, 320.0]),
        ];
        for (f, points) in cases {
            for &x in points {
                let left = f(x - eps).unwrap();
                let right = f(x + eps).unwrap();
                let at = f(x).unwrap();
                assert!((left - at).abs() < 1e-6, "left limit at {x}");
                assert!((right - at).abs() < 1e-6, "right limit at {x}");
            }
        }
    }

    #[test]
    fn label_all_background_level_is_a() {
        // Concentrations at exactly 1.5x background: Igeo scores 0; EF = 1.5/1.5 = 1
        // so EF score 0; PLI = 1.5 -> score 3.125; PER small. Use exactly
        // background-level CFs instead: c = b gives CF 1, PLI 1, score 0.
        let mut row = BTreeMap::new();
        row.insert("Fe".to_string(), 1000.0);
        row.insert("Cu".to_string(), 10.0);
        row.insert("Pb".to_string(), 20.0);
        let scores = label_sample(&row, &profile(), &LabellingConfig::default()).unwrap();
        // Igeo = log2(1/1.5) < 0 -> 0; EF = 1 -> 0; PLI = 1 -> 0; PER = 10 < 40 -> 0.
        assert_eq!(scores.merged_scores, [0.0, 0.0, 0.0, 0.0]);
        assert_eq!(scores.combined, 0.0);
        assert_eq!(scores.label, ClassLabel::A);
    }

    #[test]
    fn label_saturated_sample_is_c() {
        // Very high contamination pushes all four scores to saturation.
        let mut row = BTreeMap::new();
        row.insert("Fe".to_string(), 1000.0);
        row.insert("Cu".to_string(), 10.0 * 100.0);
        row.insert("Pb".to_string(), 20.0 * 100.0);
        row.insert("Cd".to_string(), 0.1 * 100.0);
        let scores = label_sample(&row, &profile(), &LabellingConfig::default()).unwrap();
        // Cu/Pb/Cd saturate Igeo (log2(100/1.5) > 5) and EF (100 > 40); Fe itself
        // scores 0 on both, so aggregate by max to saturate all four.
        let config = LabellingConfig {
            aggregation: ScoreAggregation::Max,
            ..LabellingConfig::default()
        };
        let scores_max = label_sample(&row, &profile(), &config).unwrap();
        assert_eq!(scores_max.merged_scores, [25.0, 25.0, 25.0, 25.0]);
        assert_eq!(scores_max.combined, 25.0);
        assert_eq!(scores_max.label, ClassLabel::C);
        // Mean aggregation still lands in C here.
        assert_eq!(scores.label, ClassLabel::C);
    }

    #[test]
    fn label_mid_range_matches_scalar_oracles() {
        // Single non-reference element so aggregation is the identity; compose
        // the scalar oracles by hand.
        let mut row = BTreeMap::new();
        row.insert("Fe".to_string(), 1000.0);
        row.insert("Cd".to_string(), 0.1 * 12.0); // CF = 12 for Cd
        let scores = label_sample(&row, &profile(), &LabellingConfig::default()).unwrap();

        // Oracle, element by element:
        let igeo_fe = score_igeo(igeo(1000.0, 1000.0).unwrap()).unwrap();
        let igeo_cd = score_igeo(igeo(1.2, 0.1).unwrap()).unwrap();
        let ef_fe = score_ef(1.0).unwrap();
        let ef_cd = score_ef(enrichment_factor(1.2, 1000.0, 0.1, 1000.0).unwrap()).unwrap();
        let pli = score_pli(pollution_load_index(&[1.0, 12.0]).unwrap()).unwrap();
        let per = score_per(30.0 * 12.0).unwrap();
        let expected = [
            (igeo_fe + igeo_cd) / 2.0,
            (ef_fe + ef_cd) / 2.0,
            pli,
            per,
        ];
        for (got, want) in scores.merged_scores.iter().zip(expected) {
            assert!((got - want).abs() < 1e-12);
        }
        let combined = expected.iter().sum::<f64>() / 4.0;
        assert!((scores.combined - combined).abs() < 1e-12);
    }

    #[test]
    fn label_requires_reference_element() {
        let mut row = BTreeMap::new();
        row.insert("Cu".to_string(), 10.0);
        let err = label_sample(&row, &profile(), &LabellingConfig::default()).unwrap_err();
        assert!(matches!(err, IndexError::ReferenceNotObserved(_)));
    }

    #[test]
    fn label_excludes_elements_without_background() {
        let mut row = BTreeMap::new();
        row.insert("Fe".to_string(), 1000.0);
        row.insert("Zr".to_string(), 5.0); // no background entry
        let scores = label_sample(&row, &profile(), &LabellingConfig::default()).unwrap();
        assert!(!scores.igeo.contains_key("Zr"));
    }

    #[test]
    fn label_insufficient_elements() {
        let mut row = BTreeMap::new();
        row.insert("Zr".to_string(), 5.0);
        let err = label_sample(&row, &profile(), &LabellingConfig::default()).unwrap_err();
        assert!(matches!(err, IndexError::InsufficientElements));
    }

    #[test]
    fn label_monotone_in_concentration() {
        let config = LabellingConfig::default();
        let p = profile();
        let base: BTreeMap<String, f64> = [
            ("Fe".to_string(), 1000.0),
            ("Cu".to_string(), 30.0),
            ("Cd".to_string(), 0.4),
        ]
        .into();
        let mut last_combined = -1.0;
        for scale in [1.0, 2.0, 4.0, 8.0, 16.0] {
            let row: BTreeMap<String, f64> = base
                .iter()
                .map(|(k, v)| {
                    // keep the reference fixed so EF grows with the others
                    if k == "Fe" {
                        (k.clone(), *v)
                    } else {
                        (k.clone(), v * scale)
                    }
                })
                .collect();
            let scores = label_sample(&row, &p, &config).unwrap();
            assert!(
                scores.combined >= last_combined - 1e-12,
                "combined must not decrease as concentrations grow"
            );
            last_combined = scores.combined;
        }
    }
}
