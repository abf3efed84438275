//! Detection methods behind a common trait, looked up by name.
//!
//! A [`DetectionContext`] owns the inputs and caches the self-representation
//! matrix so that several methods evaluated on one dataset share one solve.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::baselines::{self, DEFAULT_DAMPING};
use crate::dataset::DataMatrix;
use crate::elasticnet::{RepresentationMatrix, SelfRepresentation, SolverParams};
use crate::error::Result;
use crate::graph::{transition_matrix, DanglingPolicy, TransitionMatrix};
use crate::walk::{cesaro_scores_with, CesaroOptions, DEFAULT_STEPS};

/// Everything a method may need besides the data itself.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MethodParams {
    pub solver: SolverParams,
    pub dangling: DanglingPolicy,
    pub steps: usize,
    pub early_stop: bool,
    pub damping: f64,
}

impl MethodParams {
    pub fn new(solver: SolverParams) -> Self {
        Self {
            solver,
            dangling: DanglingPolicy::Uniform,
            steps: DEFAULT_STEPS,
            early_stop: false,
            damping: DEFAULT_DAMPING,
        }
    }
}

pub struct DetectionContext<'a> {
    data: &'a DataMatrix,
    params: MethodParams,
    representation: OnceLock<RepresentationMatrix>,
}

impl<'a> DetectionContext<'a> {
    pub fn new(data: &'a DataMatrix, params: MethodParams) -> Self {
        Self {
            data,
            params,
            representation: OnceLock::new(),
        }
    }

    pub fn data(&self) -> &DataMatrix {
        self.data
    }

    pub fn params(&self) -> &MethodParams {
        &self.params
    }

    /// Solves for `R` on first use.
    pub fn representation(&self) -> Result<&RepresentationMatrix> {
        if let Some(r) = self.representation.get() {
            return Ok(r);
        }
        let r = SelfRepresentation::new(self.data, self.params.solver)?.solve_all()?;
        Ok(self.representation.get_or_init(|| r))
    }

    pub fn cached_representation(&self) -> Option<&RepresentationMatrix> {
        self.representation.get()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub method: String,
    /// Higher means more inlier-like.
    pub scores: Vec<f64>,
    /// States whose transition row had to be substituted.
    pub dangling: Vec<usize>,
    pub transition: Option<TransitionMatrix>,
}

pub trait Detector: Send + Sync {
    fn name(&self) -> &'static str;

    fn description(&self) -> &'static str;

    fn detect(&self, ctx: &DetectionContext<'_>) -> Result<Detection>;
}

/// Cesàro-mean random walk on the representation graph.
#[derive(Debug, Default, Clone, Copy)]
pub struct RGraph;

impl Detector for RGraph {
    fn name(&self) -> &'static str {
        "rgraph"
    }

    fn description(&self) -> &'static str {
        "random walk on the elastic-net representation graph"
    }

    fn detect(&self, ctx: &DetectionContext<'_>) -> Result<Detection> {
        let params = ctx.params();
        let p = transition_matrix(ctx.representation()?, params.dangling)?;
        let opts = CesaroOptions {
            steps: params.steps,
            early_stop: params.early_stop,
        };
        let dist = cesaro_scores_with(&p, opts, None)?;
        Ok(Detection {
            method: self.name().into(),
            scores: dist.probs,
            dangling: p.dangling().to_vec(),
            transition: Some(p),
        })
    }
}

/// Negated ℓ1 norm of each representation vector.
#[derive(Debug, Default, Clone, Copy)]
pub struct L1Thresholding;

impl Detector for L1Thresholding {
    fn name(&self) -> &'static str {
        "l1t"
    }

    fn description(&self) -> &'static str {
        "l1 norm of the representation vector"
    }

    fn detect(&self, ctx: &DetectionContext<'_>) -> Result<Detection> {
        let s = baselines::l1_thresholding_scores(ctx.representation()?);
        Ok(Detection {
            method: self.name().into(),
            scores: s.scores,
            dangling: Vec::new(),
            transition: None,
        })
    }
}

/// Damped random walk on the cosine-similarity graph.
#[derive(Debug, Default, Clone, Copy)]
pub struct OutRank;

impl Detector for OutRank {
    fn name(&self) -> &'static str {
        "outrank"
    }

    fn description(&self) -> &'static str {
        "PageRank on the absolute cosine similarity graph"
    }

    fn detect(&self, ctx: &DetectionContext<'_>) -> Result<Detection> {
        let params = ctx.params();
        let o = baselines::outrank_scores(ctx.data(), params.damping, params.dangling)?;
        Ok(Detection {
            method: self.name().into(),
            scores: o.scores.scores,
            dangling: o.substituted_rows,
            transition: None,
        })
    }
}

/// Detectors keyed by name.
pub struct DetectorRegistry {
    detectors: BTreeMap<&'static str, Box<dyn Detector>>,
}

impl DetectorRegistry {
    pub fn empty() -> Self {
        Self {
            detectors: BTreeMap::new(),
        }
    }

    /// `rgraph`, `l1t` and `outrank`.
    pub fn builtin() -> Self {
        let mut reg = Self::empty();
        reg.register(Box::new(RGraph));
        reg.register(Box::new(L1Thresholding));
        reg.register(Box::new(OutRank));
        reg
    }

    /// Adds a detector, replacing any previous one with the same name.
    pub fn register(&mut self, detector: Box<dyn Detector>) -> Option<Box<dyn Detector>> {
        self.detectors.insert(detector.name(), detector)
    }

    pub fn get(&self, name: &str) -> Option<&dyn Detector> {
        self.detectors.get(name).map(|d| d.as_ref())
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.detectors.keys().copied()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.detectors.contains_key(name)
    }
}

impl Default for DetectorRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

impl std::fmt::Debug for DetectorRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.detectors.keys()).finish()
    }
}
