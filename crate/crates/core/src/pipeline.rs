//! End-to-end detection: normalize, score with each selected method, label
//! by threshold, and evaluate when ground truth is available.

use serde::{Deserialize, Serialize};

use crate::dataset::{normalize_columns, DataMatrix, Label};
use crate::detector::{DetectionContext, DetectorRegistry, MethodParams};
use crate::elasticnet::RepresentationMatrix;
use crate::error::{DatasetError, EvalError, Result};
use crate::eval::{evaluate, MetricReport};
use crate::graph::TransitionMatrix;
use crate::walk::{auto_epsilon, threshold_outliers, Prediction};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule", content = "value")]
pub enum EpsilonRule {
    Fixed(f64),
    /// Cut at the largest relative gap in the sorted scores.
    AutoGap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineOptions {
    pub params: MethodParams,
    /// The first method is the primary one.
    pub methods: Vec<String>,
    pub epsilon: EpsilonRule,
    pub normalize: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub method: String,
    /// `None` when the automatic rule finds no gap (all scores equal).
    pub epsilon: Option<f64>,
    pub scores: Vec<f64>,
    pub predictions: Vec<Prediction>,
    pub n_predicted_outliers: usize,
    pub dangling: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<MetricReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub n_points: usize,
    pub ambient_dim: usize,
    pub normalized: bool,
    pub options: PipelineOptions,
    /// Per-column `γ_j`, present when a representation was computed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub representation_nnz: Option<usize>,
    pub methods: Vec<MethodReport>,
}

/// Intermediate matrices kept for optional export.
#[derive(Debug, Clone, Default)]
pub struct PipelineArtifacts {
    pub representation: Option<RepresentationMatrix>,
    pub transition: Option<TransitionMatrix>,
}

pub fn run_pipeline(
    data: DataMatrix,
    labels: Option<&[Label]>,
    options: &PipelineOptions,
    registry: &DetectorRegistry,
) -> Result<(ScoreReport, PipelineArtifacts)> {
    if let Some(labels) = labels {
        if labels.len() != data.n_points() {
            return Err(DatasetError::Labels(format!(
                "{} labels for {} points",
                labels.len(),
                data.n_points()
            ))
            .into());
        }
    }
    if let Some(m) = options.methods.iter().find(|m| !registry.contains(m)) {
        return Err(EvalError::UnknownMethod(m.clone()).into());
    }
    let data = if options.normalize {
        normalize_columns(&data)?
    } else {
        if let Some(j) = data.find_zero_column() {
            return Err(DatasetError::ZeroColumn(j).into());
        }
        data
    };
    // Metrics need both classes; unlabeled-looking label sets are skipped.
    let labels =
        labels.filter(|l| l.iter().any(|x| x.is_outlier()) && l.iter().any(|x| !x.is_outlier()));

    let ctx = DetectionContext::new(&data, options.params);
    let mut artifacts = PipelineArtifacts::default();
    let mut methods = Vec::with_capacity(options.methods.len());
    for name in &options.methods {
        let det = registry.get(name).expect("checked above").detect(&ctx)?;
        let epsilon = match options.epsilon {
            EpsilonRule::Fixed(e) => Some(e),
            EpsilonRule::AutoGap => auto_epsilon(&det.scores),
        };
        let predictions = match epsilon {
            Some(e) => threshold_outliers(&det.scores, e),
            None => vec![Prediction::Inlier; det.scores.len()],
        };
        let metrics = labels.map(|l| evaluate(&det.scores, l)).transpose()?;
        if artifacts.transition.is_none() {
            artifacts.transition = det.transition;
        }
        methods.push(MethodReport {
            method: det.method,
            epsilon,
            n_predicted_outliers: predictions.iter().filter(|p| p.is_outlier()).count(),
            predictions,
            scores: det.scores,
            dangling: det.dangling,
            metrics,
        });
    }
    artifacts.representation = ctx.cached_representation().cloned();

    let report = ScoreReport {
        n_points: data.n_points(),
        ambient_dim: data.ambient_dim(),
        normalized: data.is_unit_normalized(),
        options: options.clone(),
        gamma: artifacts
            .representation
            .as_ref()
            .map(|r| r.gamma_used().to_vec()),
        representation_nnz: artifacts
            .representation
            .as_ref()
            .map(RepresentationMatrix::nnz),
        methods,
    };
    Ok((report, artifacts))
}
