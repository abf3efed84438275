//! Cesàro-averaged random walk on a transition matrix and the thresholding
//! step that turns the averaged distribution into outlier labels.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::WalkError;
use crate::graph::TransitionMatrix;

pub const DEFAULT_STEPS: usize = 1000;

const RENORMALIZE_EVERY: usize = 10_000;
const EARLY_STOP_TOL: f64 = 1e-12;

/// The `T`-step Cesàro mean `(1/T) Σ_{t=1..T} π⁽⁰⁾Pᵗ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateDistribution {
    pub probs: Vec<f64>,
    /// Number of steps actually averaged.
    pub steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CesaroOptions {
    pub steps: usize,
    /// Stop once consecutive averages differ by less than 1e-12 in ℓ1.
    pub early_stop: bool,
}

impl CesaroOptions {
    pub fn new(steps: usize) -> Self {
        Self {
            steps,
            early_stop: false,
        }
    }
}

impl Default for CesaroOptions {
    fn default() -> Self {
        Self::new(DEFAULT_STEPS)
    }
}

pub(crate) fn check_distribution(pi: &[f64], n: usize) -> Result<(), WalkError> {
    if pi.len() != n {
        return Err(WalkError::InvalidDistribution(format!(
            "length {} for {n} states",
            pi.len()
        )));
    }
    if let Some(v) = pi.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
        return Err(WalkError::InvalidDistribution(format!("entry {v}")));
    }
    let sum: f64 = pi.iter().sum();
    if (sum - 1.0).abs() > 1e-12 {
        return Err(WalkError::InvalidDistribution(format!("sums to {sum}")));
    }
    Ok(())
}

/// Cesàro mean over `steps` steps from `pi0` (uniform when `None`).
pub fn cesaro_scores(
    p: &TransitionMatrix,
    steps: usize,
    pi0: Option<&[f64]>,
) -> Result<StateDistribution, WalkError> {
    cesaro_scores_with(p, CesaroOptions::new(steps), pi0)
}

pub fn cesaro_scores_with(
    p: &TransitionMatrix,
    opts: CesaroOptions,
    pi0: Option<&[f64]>,
) -> Result<StateDistribution, WalkError> {
    if opts.steps == 0 {
        return Err(WalkError::ZeroSteps);
    }
    let n = p.n();
    let mut pi = match pi0 {
        Some(v) => {
            check_distribution(v, n)?;
            v.to_vec()
        }
        None => vec![1.0 / n as f64; n],
    };
    let mut next = vec![0.0; n];
    // Neumaier-compensated running sum.
    let mut sum = vec![0.0; n];
    let mut comp = vec![0.0; n];
    let mut steps = 0;

    for t in 1..=opts.steps {
        p.left_mul(&pi, &mut next);
        std::mem::swap(&mut pi, &mut next);
        if t % RENORMALIZE_EVERY == 0 {
            let total: f64 = pi.iter().sum();
            if total > 0.0 {
                pi.iter_mut().for_each(|v| *v /= total);
            }
        }

        let mut change = 0.0;
        for k in 0..n {
            if opts.early_stop && t > 1 {
                let prev_mean = (sum[k] + comp[k]) / (t - 1) as f64;
                change += (pi[k] - prev_mean).abs() / t as f64;
            }
            let s = sum[k] + pi[k];
            if sum[k].abs() >= pi[k].abs() {
                comp[k] += (sum[k] - s) + pi[k];
            } else {
                comp[k] += (pi[k] - s) + sum[k];
            }
            sum[k] = s;
        }
        steps = t;
        if opts.early_stop && t > 1 && change < EARLY_STOP_TOL {
            break;
        }
    }

    let probs = sum
        .iter()
        .zip(&comp)
        .map(|(s, c)| (s + c) / steps as f64)
        .collect();
    Ok(StateDistribution { probs, steps })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Prediction {
    Inlier,
    Outlier,
}

impl Prediction {
    pub fn is_outlier(self) -> bool {
        self == Prediction::Outlier
    }
}

impl fmt::Display for Prediction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Prediction::Inlier => "inlier",
            Prediction::Outlier => "outlier",
        })
    }
}

/// Point `j` is an outlier iff `score_j ≤ epsilon`.
pub fn threshold_outliers(scores: &[f64], epsilon: f64) -> Vec<Prediction> {
    scores
        .iter()
        .map(|&s| {
            if s <= epsilon {
                Prediction::Outlier
            } else {
                Prediction::Inlier
            }
        })
        .collect()
}

/// Picks the cut at the largest relative gap between consecutive sorted
/// scores and returns the score just below that gap, so every score at or
/// below it is labelled an outlier. Returns `None` when all scores coincide.
///
/// Scores are shifted to start at zero and the gap between `a < b` is the
/// ratio `(b + δ) / (a + δ)` with `δ = 1e-3 · mean`, which keeps exact zeros
/// from dominating the comparison.
pub fn auto_epsilon(scores: &[f64]) -> Option<f64> {
    let mut sorted: Vec<f64> = scores.iter().copied().filter(|v| v.is_finite()).collect();
    sorted.sort_by(f64::total_cmp);
    let lo = *sorted.first()?;
    let mean = sorted.iter().map(|v| v - lo).sum::<f64>() / sorted.len() as f64;
    if mean <= 0.0 {
        return None;
    }
    let floor = 1e-3 * mean;
    let mut best: Option<(f64, f64)> = None;
    for w in sorted.windows(2) {
        let gap = (w[1] - lo + floor) / (w[0] - lo + floor);
        if best.is_none_or(|(g, _)| gap > g) {
            best = Some((gap, w[0]));
        }
    }
    best.map(|(_, cut)| cut)
}
