//! Reference detectors. Scores follow the same convention as the
//! random-walk scores: higher means more inlier-like.

use serde::{Deserialize, Serialize};

use crate::dataset::DataMatrix;
use crate::elasticnet::RepresentationMatrix;
use crate::error::BaselineError;
use crate::graph::DanglingPolicy;

pub const DEFAULT_DAMPING: f64 = 0.85;

const POWER_TOL: f64 = 1e-12;
const POWER_MAX_ITERS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineMethod {
    L1Thresholding,
    Outrank,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineScores {
    pub method: BaselineMethod,
    pub scores: Vec<f64>,
}

/// `−‖r_j‖₁`: points that need large coefficients rank as outliers.
pub fn l1_thresholding_scores(r: &RepresentationMatrix) -> BaselineScores {
    BaselineScores {
        method: BaselineMethod::L1Thresholding,
        scores: (0..r.n()).map(|j| -r.column_l1(j)).collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutRank {
    pub scores: BaselineScores,
    /// Points with zero similarity to all others; their rows were made uniform.
    pub substituted_rows: Vec<usize>,
    pub iterations: usize,
    /// `‖π⁽ᵏ⁺¹⁾ − π⁽ᵏ⁾‖₁` after each power-iteration step.
    pub residuals: Vec<f64>,
}

/// Stationary vector of a damped random walk on the absolute-cosine
/// similarity graph.
pub fn outrank_scores(
    x: &DataMatrix,
    damping: f64,
    policy: DanglingPolicy,
) -> Result<OutRank, BaselineError> {
    if !(0.0..1.0).contains(&damping) {
        return Err(BaselineError::InvalidDamping(damping));
    }
    let n = x.n_points();
    let mut w = x.gram().abs();
    w.fill_diagonal(0.0);

    let mut substituted_rows = Vec::new();
    for i in 0..n {
        let sum = w.row(i).sum();
        if sum > 0.0 {
            w.row_mut(i).scale_mut(1.0 / sum);
        } else {
            if policy == DanglingPolicy::Error {
                return Err(BaselineError::ZeroSimilarityRow(i));
            }
            substituted_rows.push(i);
            let p = if n > 1 { 1.0 / (n - 1) as f64 } else { 1.0 };
            w.row_mut(i).fill(p);
            if n > 1 {
                w[(i, i)] = 0.0;
            }
        }
    }

    let teleport = (1.0 - damping) / n as f64;
    let mut pi = nalgebra::RowDVector::from_element(n, 1.0 / n as f64);
    let mut residuals = Vec::new();
    loop {
        let next = (&pi * &w) * damping + nalgebra::RowDVector::from_element(n, teleport);
        let residual = (&next - &pi).lp_norm(1);
        pi = next;
        residuals.push(residual);
        if residual <= POWER_TOL || residuals.len() >= POWER_MAX_ITERS {
            break;
        }
    }

    Ok(OutRank {
        scores: BaselineScores {
            method: BaselineMethod::Outrank,
            scores: pi.iter().copied().collect(),
        },
        substituted_rows,
        iterations: residuals.len(),
        residuals,
    })
}
