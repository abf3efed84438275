//! Threshold-free and best-threshold metrics, and the multi-trial harness.
//!
//! Outliers are the positive class and a low score means "outlier" for
//! every method.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{generate_synthetic, GenConfig, Label};
use crate::detector::{DetectionContext, DetectorRegistry, MethodParams};
use crate::error::{Error, EvalError, Result};

fn class_counts(scores: &[f64], labels: &[Label]) -> Result<(usize, usize), EvalError> {
    if scores.len() != labels.len() {
        return Err(EvalError::LengthMismatch {
            scores: scores.len(),
            labels: labels.len(),
        });
    }
    let n_out = labels.iter().filter(|l| l.is_outlier()).count();
    let n_in = labels.len() - n_out;
    if n_out == 0 || n_in == 0 {
        return Err(EvalError::DegenerateLabels);
    }
    Ok((n_in, n_out))
}

/// Indices sorted by ascending score, grouped into runs of equal score.
fn tie_groups(scores: &[f64]) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in order {
        match groups.last_mut() {
            Some(g) if scores[g[0]] == scores[i] => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    groups
}

/// Probability that a random (outlier, inlier) pair is ordered correctly,
/// i.e. the outlier scores lower; ties count one half.
pub fn auc(scores: &[f64], labels: &[Label]) -> Result<f64, EvalError> {
    let (n_in, n_out) = class_counts(scores, labels)?;
    // Twice the Mann-Whitney count, kept integral.
    let mut twice_u: u64 = 0;
    let mut outliers_below: u64 = 0;
    for group in tie_groups(scores) {
        let outs = group.iter().filter(|&&i| labels[i].is_outlier()).count() as u64;
        let ins = group.len() as u64 - outs;
        twice_u += 2 * ins * outliers_below + ins * outs;
        outliers_below += outs;
    }
    Ok(twice_u as f64 / (2 * n_in * n_out) as f64)
}

/// F1 of the rule "outlier iff score ≤ threshold", outlier positive.
pub fn f1_at(scores: &[f64], labels: &[Label], threshold: f64) -> f64 {
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut fn_ = 0usize;
    for (&s, l) in scores.iter().zip(labels) {
        match (s <= threshold, l.is_outlier()) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    f1_from_counts(tp, fp, fn_)
}

fn f1_from_counts(tp: usize, fp: usize, fn_: usize) -> f64 {
    if tp == 0 {
        0.0
    } else {
        (2 * tp) as f64 / (2 * tp + fp + fn_) as f64
    }
}

/// Largest F1 over thresholds at every distinct score; ties go to the
/// smaller threshold.
pub fn best_f1(scores: &[f64], labels: &[Label]) -> Result<(f64, f64), EvalError> {
    let (_, n_out) = class_counts(scores, labels)?;
    let mut best = (f64::NEG_INFINITY, f64::NAN);
    let mut tp = 0;
    let mut fp = 0;
    for group in tie_groups(scores) {
        let outs = group.iter().filter(|&&i| labels[i].is_outlier()).count();
        tp += outs;
        fp += group.len() - outs;
        let f1 = f1_from_counts(tp, fp, n_out - tp);
        if f1 > best.0 {
            best = (f1, scores[group[0]]);
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub auc: f64,
    pub best_f1: f64,
    pub best_f1_threshold: f64,
    pub n_inliers: usize,
    pub n_outliers: usize,
}

pub fn evaluate(scores: &[f64], labels: &[Label]) -> Result<MetricReport, EvalError> {
    let (n_inliers, n_outliers) = class_counts(scores, labels)?;
    let (best_f1, best_f1_threshold) = best_f1(scores, labels)?;
    Ok(MetricReport {
        auc: auc(scores, labels)?,
        best_f1,
        best_f1_threshold,
        n_inliers,
        n_outliers,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// The generator seed is replaced by `base_seed + t` in trial `t`.
    pub generator: GenConfig,
    pub params: MethodParams,
    pub methods: Vec<String>,
    pub trials: usize,
    pub base_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub auc_mean: f64,
    pub auc_std: f64,
    pub f1_mean: f64,
    pub f1_std: f64,
    pub auc: Vec<f64>,
    pub f1: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialsSummary {
    pub config: ExperimentConfig,
    pub seeds: Vec<u64>,
    /// With one trial the standard deviations are reported as zero.
    pub single_trial: bool,
    pub methods: BTreeMap<String, MethodSummary>,
}

/// Mean and sample standard deviation (zero for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

fn run_trial(
    config: &ExperimentConfig,
    registry: &DetectorRegistry,
    seed: u64,
) -> Result<Vec<MetricReport>> {
    let ds = generate_synthetic(&GenConfig {
        seed,
        ..config.generator.clone()
    })?;
    let ctx = DetectionContext::new(&ds.data, config.params);
    config
        .methods
        .iter()
        .map(|name| {
            let detector = registry
                .get(name)
                .ok_or_else(|| EvalError::UnknownMethod(name.clone()))?;
            let det = detector.detect(&ctx)?;
            Ok(evaluate(&det.scores, &ds.labels)?)
        })
        .collect()
}

/// Runs every method on `trials` generated datasets. Deterministic in the
/// config; any failing trial aborts the whole run.
pub fn run_trials(config: &ExperimentConfig, registry: &DetectorRegistry) -> Result<TrialsSummary> {
    if let Some(m) = config.methods.iter().find(|m| !registry.contains(m)) {
        return Err(EvalError::UnknownMethod(m.clone()).into());
    }
    let seeds: Vec<u64> = (0..config.trials as u64)
        .map(|t| config.base_seed.wrapping_add(t))
        .collect();
    let results: Vec<Result<Vec<MetricReport>>> = seeds
        .par_iter()
        .map(|&seed| run_trial(config, registry, seed))
        .collect();

    let mut per_trial = Vec::with_capacity(results.len());
    for (trial, res) in results.into_iter().enumerate() {
        match res {
            Ok(m) => per_trial.push(m),
            Err(e) => {
                return Err(Error::Eval(EvalError::Trial {
                    trial,
                    source: Box::new(e),
                }))
            }
        }
    }

    let methods = config
        .methods
        .iter()
        .enumerate()
        .map(|(k, name)| {
            let auc: Vec<f64> = per_trial.iter().map(|m| m[k].auc).collect();
            let f1: Vec<f64> = per_trial.iter().map(|m| m[k].best_f1).collect();
            let (auc_mean, auc_std) = mean_std(&auc);
            let (f1_mean, f1_std) = mean_std(&f1);
            (
                name.clone(),
                MethodSummary {
                    auc_mean,
                    auc_std,
                    f1_mean,
                    f1_std,
                    auc,
                    f1,
                },
            )
        })
        .collect();

    Ok(TrialsSummary {
        config: config.clone(),
        single_trial: config.trials == 1,
        seeds,
        methods,
    })
}
