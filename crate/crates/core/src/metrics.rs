//! Ranking metrics and the repeated-trial evaluation harness.
//!
//! A trial samples `labeled_count` true outliers as the labeled set, runs the
//! detector transductively, and scores the ranking on every object that was
//! *not* sampled. Sampling uses ChaCha8 seeded with the trial spec's seed and
//! the trial index as stream id, followed by a partial Fisher-Yates shuffle
//! of the ascending list of true-outlier indices, so trial `t` is independent
//! of how many trials run and of thread scheduling.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::detector::{detect_with_positives, CodConfig, ThresholdMode};
use crate::error::{CodError, Result};

fn class_counts(truth: &[bool]) -> (usize, usize) {
    let p = truth.iter().filter(|t| **t).count();
    (p, truth.len() - p)
}

/// Area under the ROC curve as the Mann-Whitney statistic with midranks:
/// `P(s+ > s-) + P(s+ = s-) / 2`.
pub fn auc_roc(scores: &[f64], truth: &[bool]) -> Result<f64> {
    if scores.len() != truth.len() {
        return Err(CodError::LengthMismatch {
            left: scores.len(),
            right: truth.len(),
        });
    }
    let (p, q) = class_counts(truth);
    if p == 0 || q == 0 {
        return Err(CodError::DegenerateTruth);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        // ranks start..end (0-based) share their mean, 1-based
        let midrank = (start + end + 1) as f64 / 2.0;
        let positives = order[start..end].iter().filter(|&&i| truth[i]).count();
        rank_sum += midrank * positives as f64;
        start = end;
    }
    let (pf, qf) = (p as f64, q as f64);
    Ok((rank_sum - pf * (pf + 1.0) / 2.0) / (pf * qf))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AveragePrecision {
    pub value: f64,
    /// Some group of equal scores holds both classes, so the value depends
    /// on the (stable, original-order) tie-break.
    pub ties_cross_classes: bool,
}

/// Average precision over the descending-score ranking; equal scores keep
/// their original order.
pub fn average_precision(scores: &[f64], truth: &[bool]) -> Result<AveragePrecision> {
    if scores.len() != truth.len() {
        return Err(CodError::LengthMismatch {
            left: scores.len(),
            right: truth.len(),
        });
    }
    let (p, _) = class_counts(truth);
    if p == 0 {
        return Err(CodError::DegenerateTruth);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut hits = 0usize;
    let mut sum = 0.0;
    for (rank, &i) in order.iter().enumerate() {
        if truth[i] {
            hits += 1;
            sum += hits as f64 / (rank + 1) as f64;
        }
    }
    let ties_cross_classes = order
        .chunk_by(|&a, &b| scores[a] == scores[b])
        .any(|group| {
            let pos = group.iter().filter(|&&i| truth[i]).count();
            pos > 0 && pos < group.len()
        });
    Ok(AveragePrecision {
        value: sum / p as f64,
        ties_cross_classes,
    })
}

pub fn auc_pr(scores: &[f64], truth: &[bool]) -> Result<f64> {
    Ok(average_precision(scores, truth)?.value)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialSpec {
    pub labeled_count: usize,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_n_neg")]
    pub n_neg: usize,
}

fn default_repetitions() -> usize {
    10
}

fn default_n_neg() -> usize {
    crate::detector::DEFAULT_N_NEG
}

impl TrialSpec {
    pub fn new(labeled_count: usize, repetitions: usize, seed: u64, n_neg: usize) -> Self {
        Self {
            labeled_count,
            repetitions,
            seed,
            n_neg,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialMetrics {
    pub trial: usize,
    pub auc_roc: f64,
    pub auc_pr: f64,
    pub pr_ties_cross_classes: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricResult {
    pub spec: TrialSpec,
    pub trials: Vec<TrialMetrics>,
    pub mean_auc_roc: f64,
    pub mean_auc_pr: f64,
    /// Sample standard deviations (0 for a single trial).
    pub std_auc_roc: f64,
    pub std_auc_pr: f64,
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.clone().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

/// Draws `k` indices from `pool` without replacement for trial `trial`.
pub fn sample_labeled(pool: &[usize], k: usize, seed: u64, trial: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    let mut pool = pool.to_vec();
    let k = k.min(pool.len());
    for i in 0..k {
        let j = rng.random_range(i..pool.len());
        pool.swap(i, j);
    }
    pool.truncate(k);
    pool.sort_unstable();
    pool
}

fn run_one(
    dataset: &Dataset,
    truth_idx: &[usize],
    spec: &TrialSpec,
    config: &CodConfig,
    trial: usize,
) -> Result<TrialMetrics> {
    let labeled = sample_labeled(truth_idx, spec.labeled_count, spec.seed, trial);
    let report = detect_with_positives(dataset, &labeled, config)?;
    let mut is_truth = vec![false; dataset.n()];
    for &i in truth_idx {
        is_truth[i] = true;
    }
    let mut is_train = vec![false; dataset.n()];
    for &i in &labeled {
        is_train[i] = true;
    }
    let eval: Vec<usize> = (0..dataset.n()).filter(|&i| !is_train[i]).collect();
    assert!(
        eval.iter().all(|&i| labeled.binary_search(&i).is_err()),
        "training positive leaked into the evaluation set"
    );
    let scores: Vec<f64> = eval.iter().map(|&i| report.scores[i]).collect();
    let truth: Vec<bool> = eval.iter().map(|&i| is_truth[i]).collect();
    let ap = average_precision(&scores, &truth)?;
    Ok(TrialMetrics {
        trial,
        auc_roc: auc_roc(&scores, &truth)?,
        auc_pr: ap.value,
        pr_ties_cross_classes: ap.ties_cross_classes,
    })
}

/// Repeated trials against the dataset's labels taken as ground truth.
/// `base` supplies everything except `n_neg` and the threshold mode.
pub fn run_trials(dataset: &Dataset, spec: &TrialSpec, base: &CodConfig) -> Result<MetricResult> {
    if spec.labeled_count == 0 {
        return Err(CodError::ConfigInvalid("labeled_count must be >= 1".into()));
    }
    if spec.repetitions == 0 {
        return Err(CodError::ConfigInvalid("repetitions must be >= 1".into()));
    }
    let truth_idx = dataset.positives();
    if spec.labeled_count > truth_idx.len() {
        return Err(CodError::InsufficientOutliers {
            requested: spec.labeled_count,
            available: truth_idx.len(),
        });
    }
    let config = CodConfig {
        n_neg: spec.n_neg,
        threshold: ThresholdMode::FromLabels,
        ..base.clone()
    };
    let trials: Vec<TrialMetrics> = (0..spec.repetitions)
        .into_par_iter()
        .map(|t| run_one(dataset, &truth_idx, spec, &config, t))
        .collect::<Result<_>>()?;
    let (mean_auc_roc, std_auc_roc) = mean_std(trials.iter().map(|t| t.auc_roc));
    let (mean_auc_pr, std_auc_pr) = mean_std(trials.iter().map(|t| t.auc_pr));
    Ok(MetricResult {
        spec: *spec,
        trials,
        mean_auc_roc,
        mean_auc_pr,
        std_auc_roc,
        std_auc_pr,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub dataset: String,
    pub result: MetricResult,
}

/// Runs every grid cell in order.
pub fn sweep(
    name: &str,
    dataset: &Dataset,
    grid: &[TrialSpec],
    base: &CodConfig,
) -> Result<Vec<SweepRow>> {
    grid.iter()
        .map(|spec| {
            Ok(SweepRow {
                dataset: name.to_string(),
                result: run_trials(dataset, spec, base)?,
            })
        })
        .collect()
}

/// Long format: `dataset,labeled_count,n_neg,trial,auc_roc,auc_pr`.
pub fn results_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("dataset,labeled_count,n_neg,trial,auc_roc,auc_pr\n");
    for row in rows {
        let spec = row.result.spec;
        for t in &row.result.trials {
            let _ = writeln!(
                out,
                "{},{},{},{},{:.6},{:.6}",
                row.dataset, spec.labeled_count, spec.n_neg, t.trial, t.auc_roc, t.auc_pr
            );
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub dataset: String,
    pub labeled_count: usize,
    pub n_neg: usize,
    pub repetitions: usize,
    pub seed: u64,
    pub mean_auc_roc: f64,
    pub std_auc_roc: f64,
    pub mean_auc_pr: f64,
    pub std_auc_pr: f64,
    pub trials_with_pr_ties: usize,
}

pub fn summarize(rows: &[SweepRow]) -> Vec<SummaryRow> {
    rows.iter()
        .map(|r| SummaryRow {
            dataset: r.dataset.clone(),
            labeled_count: r.result.spec.labeled_count,
            n_neg: r.result.spec.n_neg,
            repetitions: r.result.spec.repetitions,
            seed: r.result.spec.seed,
            mean_auc_roc: r.result.mean_auc_roc,
            std_auc_roc: r.result.std_auc_roc,
            mean_auc_pr: r.result.mean_auc_pr,
            std_auc_pr: r.result.std_auc_pr,
            trials_with_pr_ties: r
                .result
                .trials
                .iter()
                .filter(|t| t.pr_ties_cross_classes)
                .count(),
        })
        .collect()
}
