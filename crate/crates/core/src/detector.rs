//! End-to-end consistency-guided outlier detection.
//!
//! Pipeline for a dataset with labeled outliers `U+`:
//!
//! 1. pick candidate inliers `U-` by smallest average distance;
//! 2. fit a fuzzy radius for every numeric attribute;
//! 3. weigh every attribute by the classification consistency `ξ` of the
//!    decision system restricted to `U+ ∪ U-`;
//! 4. score each object by the `ξ`-weighted mean of its per-attribute
//!    outlier factors `OF = 1 - |[x]| / n` over the full universe;
//! 5. threshold at the lowest score among the labeled outliers.
//!
//! Every per-attribute stage runs in parallel; results are gathered in
//! attribute order so the report does not depend on scheduling.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::consistency::{build_decision_system, classification_consistency, fuzzy_dependency};
use crate::dataset::{AttributeKind, Column, Dataset};
use crate::error::{CodError, Result};
use crate::fuzzy::SimilarityRelation;
use crate::relation::{
    optimize_fuzzy_radius, select_candidate_negatives, AttributeRelation, DecisionContext,
};

pub const DEFAULT_N_NEG: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ThresholdMode {
    /// Lowest score among labeled outliers.
    FromLabels,
    /// `(1 - fraction)`-quantile of all scores. Works without labels.
    ContaminationQuantile { fraction: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodConfig {
    /// Requested number of candidate inliers.
    pub n_neg: usize,
    pub threshold: ThresholdMode,
    /// Radius overrides keyed by attribute name; skips the radius search.
    #[serde(default)]
    pub fixed_radii: BTreeMap<String, f64>,
}

impl Default for CodConfig {
    fn default() -> Self {
        Self {
            n_neg: DEFAULT_N_NEG,
            threshold: ThresholdMode::FromLabels,
            fixed_radii: BTreeMap::new(),
        }
    }
}

impl CodConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_neg == 0 {
            return Err(CodError::ConfigInvalid("n_neg must be >= 1".into()));
        }
        if let ThresholdMode::ContaminationQuantile { fraction } = self.threshold {
            if !(fraction > 0.0 && fraction < 1.0) {
                return Err(CodError::ConfigInvalid(format!(
                    "contamination {fraction} must lie in (0, 1)"
                )));
            }
        }
        for (name, &r) in &self.fixed_radii {
            if !(0.0..=1.0).contains(&r) {
                return Err(CodError::ConfigInvalid(format!(
                    "fixed radius {r} for `{name}` outside [0, 1]"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeDiagnostics {
    pub name: String,
    pub kind: AttributeKind,
    /// Fuzzy radius; `None` for nominal attributes.
    pub radius: Option<f64>,
    /// Radius objective reached by the search; `None` when fixed or nominal.
    pub radius_objective: Option<f64>,
    pub radius_fixed: bool,
    /// Fuzzy dependency `γ`; `None` without labeled outliers.
    pub dependency: Option<f64>,
    /// Classification consistency `ξ` used as the attribute weight.
    pub consistency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierReport {
    pub scores: Vec<f64>,
    pub threshold: f64,
    pub flags: Vec<bool>,
    pub positives: Vec<usize>,
    pub candidate_negatives: Vec<usize>,
    pub attributes: Vec<AttributeDiagnostics>,
    /// `outlier_factors[k][i]` is the factor of object `i` on attribute `k`.
    pub outlier_factors: Vec<Vec<f64>>,
}

impl OutlierReport {
    pub fn n(&self) -> usize {
        self.scores.len()
    }

    pub fn flagged_count(&self) -> usize {
        self.flags.iter().filter(|f| **f).count()
    }

    /// `row_id,score,flag` with six-decimal scores; `row_id` is the 0-based
    /// data row.
    pub fn scores_csv(&self) -> String {
        let mut out = String::from("row_id,score,flag\n");
        for (i, (s, f)) in self.scores.iter().zip(&self.flags).enumerate() {
            let _ = writeln!(out, "{i},{s:.6},{}", u8::from(*f));
        }
        out
    }

    /// `attribute,kind,lambda,gamma,xi`; empty cells where undefined.
    pub fn attributes_csv(&self) -> String {
        let cell = |v: Option<f64>| v.map(|v| format!("{v:.6}")).unwrap_or_default();
        let mut out = String::from("attribute,kind,lambda,gamma,xi\n");
        for a in &self.attributes {
            let kind = match a.kind {
                AttributeKind::Nominal => "nominal",
                AttributeKind::Numeric => "numeric",
                AttributeKind::Ignore => "ignore",
            };
            let _ = writeln!(
                out,
                "{},{kind},{},{},{:.6}",
                a.name,
                cell(a.radius),
                cell(a.dependency),
                a.consistency
            );
        }
        out
    }
}

/// `1 - |[x_i]| / n` over the full universe.
pub fn outlier_factor<R: SimilarityRelation + ?Sized>(relation: &R, i: usize) -> Result<f64> {
    let n = relation.dim();
    if i >= n {
        return Err(CodError::IndexOutOfRange { index: i, n });
    }
    Ok(1.0 - relation.row_sum(i) / n as f64)
}

/// Mean of per-attribute outlier factors weighted by consistency.
pub fn cod_score(outlier_factors: &[f64], consistency: &[f64]) -> Result<f64> {
    if outlier_factors.len() != consistency.len() {
        return Err(CodError::LengthMismatch {
            left: outlier_factors.len(),
            right: consistency.len(),
        });
    }
    if outlier_factors.is_empty() {
        return Err(CodError::NoAttributes);
    }
    let sum: f64 = outlier_factors
        .iter()
        .zip(consistency)
        .map(|(o, x)| o * x)
        .sum();
    Ok(sum / outlier_factors.len() as f64)
}

/// Lowest score among the labeled outliers.
pub fn threshold_from_labels(scores: &[f64], positives: &[usize]) -> Result<f64> {
    if positives.is_empty() {
        return Err(CodError::NoLabeledOutliers);
    }
    positives.iter().try_fold(f64::INFINITY, |acc, &i| {
        scores
            .get(i)
            .map(|s| acc.min(*s))
            .ok_or(CodError::IndexOutOfRange {
                index: i,
                n: scores.len(),
            })
    })
}

/// `(1 - fraction)`-quantile of `scores` with linear interpolation between
/// order statistics.
pub fn threshold_from_quantile(scores: &[f64], fraction: f64) -> Result<f64> {
    if scores.is_empty() {
        return Err(CodError::EmptyDataset);
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(CodError::ConfigInvalid(format!(
            "contamination {fraction} must lie in (0, 1)"
        )));
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pos = (1.0 - fraction) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    Ok(sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64))
}

/// Flags objects scoring strictly above `threshold`; labeled outliers are
/// always flagged.
pub fn flag_outliers(scores: &[f64], threshold: f64, positives: &[usize]) -> Vec<bool> {
    let mut flags: Vec<bool> = scores.iter().map(|&s| s > threshold).collect();
    for &p in positives {
        if let Some(f) = flags.get_mut(p) {
            *f = true;
        }
    }
    flags
}

/// Runs detection using the dataset's own labels.
pub fn detect(dataset: &Dataset, config: &CodConfig) -> Result<OutlierReport> {
    detect_with_positives(dataset, &dataset.positives(), config)
}

/// Runs detection treating `positives` as the labeled outliers.
///
/// Without labeled outliers (only allowed in quantile mode) every numeric
/// radius defaults to 1 and every attribute weight to 1.
pub fn detect_with_positives(
    dataset: &Dataset,
    positives: &[usize],
    config: &CodConfig,
) -> Result<OutlierReport> {
    config.validate()?;
    let attrs = dataset.attributes();
    if attrs.is_empty() {
        return Err(CodError::NoAttributes);
    }
    for name in config.fixed_radii.keys() {
        match attrs.iter().find(|a| &a.name == name) {
            None => {
                return Err(CodError::ConfigInvalid(format!(
                    "fixed radius given for unknown attribute `{name}`"
                )))
            }
            Some(a) if a.column.kind() == AttributeKind::Nominal => {
                return Err(CodError::UnexpectedRadius)
            }
            Some(_) => {}
        }
    }
    let mut positives = positives.to_vec();
    positives.sort_unstable();
    positives.dedup();
    let supervised = !positives.is_empty();
    if !supervised && config.threshold == ThresholdMode::FromLabels {
        return Err(CodError::NoLabeledOutliers);
    }

    let ctx = if supervised {
        select_candidate_negatives(dataset, config.n_neg, &positives)?
    } else {
        DecisionContext::new(Vec::new(), Vec::new(), config.n_neg)?
    };

    // radii
    let radii: Vec<(Option<f64>, Option<f64>, bool)> = attrs
        .par_iter()
        .map(|a| match &a.column {
            Column::Nominal(_) => Ok((None, None, false)),
            Column::Numeric(c) => {
                if let Some(&r) = config.fixed_radii.get(&a.name) {
                    Ok((Some(r), None, true))
                } else if supervised {
                    let r = optimize_fuzzy_radius(c, &ctx)?;
                    Ok((Some(r.value), Some(r.objective), false))
                } else {
                    Ok((Some(1.0), None, false))
                }
            }
        })
        .collect::<Result<_>>()?;
    let radius_values: Vec<Option<f64>> = radii.iter().map(|r| r.0).collect();

    // attribute weights on the restricted decision system
    let weights: Vec<(Option<f64>, f64)> = if supervised {
        let system = build_decision_system(dataset, &ctx, &radius_values)?;
        (0..attrs.len())
            .into_par_iter()
            .map(|k| {
                Ok((
                    Some(fuzzy_dependency(&system, &[k])?),
                    classification_consistency(&system, &[k])?,
                ))
            })
            .collect::<Result<_>>()?
    } else {
        vec![(None, 1.0); attrs.len()]
    };

    // outlier factors over the full universe
    let nf = dataset.n() as f64;
    let outlier_factors: Vec<Vec<f64>> = attrs
        .par_iter()
        .zip(radius_values.par_iter())
        .map(|(a, r)| {
            let rel = AttributeRelation::new(&a.column, *r)?;
            Ok((0..dataset.n())
                .into_par_iter()
                .map(|i| 1.0 - rel.row_sum(i) / nf)
                .collect())
        })
        .collect::<Result<_>>()?;

    let xi: Vec<f64> = weights.iter().map(|w| w.1).collect();
    let m = attrs.len() as f64;
    let scores: Vec<f64> = (0..dataset.n())
        .map(|i| {
            outlier_factors
                .iter()
                .zip(&xi)
                .map(|(of, x)| of[i] * x)
                .sum::<f64>()
                / m
        })
        .collect();

    let threshold = match config.threshold {
        ThresholdMode::FromLabels => threshold_from_labels(&scores, &positives)?,
        ThresholdMode::ContaminationQuantile { fraction } => {
            threshold_from_quantile(&scores, fraction)?
        }
    };
    let flags = flag_outliers(&scores, threshold, &positives);

    let attributes = attrs
        .iter()
        .zip(&radii)
        .zip(&weights)
        .map(|((a, r), w)| AttributeDiagnostics {
            name: a.name.clone(),
            kind: a.column.kind(),
            radius: r.0,
            radius_objective: r.1,
            radius_fixed: r.2,
            dependency: w.0,
            consistency: w.1,
        })
        .collect();

    log::debug!(
        "scored {} objects on {} attributes, threshold {threshold:.6}",
        dataset.n(),
        attrs.len()
    );
    Ok(OutlierReport {
        scores,
        threshold,
        flags,
        positives,
        candidate_negatives: ctx.negatives().to_vec(),
        attributes,
        outlier_factors,
    })
}
