//! Outlier detection in a union of subspaces.
//!
//! Each point is written as an elastic-net combination of the other points
//! ([`elasticnet`]), the coefficients define a directed graph and a random
//! walk on it ([`graph`]), and the Cesàro mean of that walk scores each
//! point ([`walk`]): points the walk keeps returning to are inliers, points
//! it drains away from are outliers.
//!
//! [`markov`] computes the exact limit of the walk and serves as an oracle
//! for it; [`theory`] evaluates the conditions under which inliers and
//! outliers separate exactly. Methods are selected by name through
//! [`detector::DetectorRegistry`].
//!
//! ```
//! use rgraph_core::dataset::{generate_synthetic, normalize_columns, GenConfig};
//! use rgraph_core::detector::{DetectionContext, DetectorRegistry, MethodParams};
//! use rgraph_core::SolverParams;
//!
//! let ds = generate_synthetic(&GenConfig {
//!     ambient_dim: 30,
//!     subspace_dims: vec![3, 3],
//!     points_per_subspace: vec![20, 20],
//!     outlier_count: 5,
//!     seed: 1,
//! })?;
//! let x = normalize_columns(&ds.data)?;
//! let ctx = DetectionContext::new(&x, MethodParams::new(SolverParams::new(0.95, 10.0)));
//! let detection = DetectorRegistry::default().get("rgraph").unwrap().detect(&ctx)?;
//! assert_eq!(detection.scores.len(), 45);
//! # Ok::<(), rgraph_core::Error>(())
//! ```

pub mod baselines;
pub mod dataset;
pub mod detector;
pub mod elasticnet;
pub mod error;
pub mod eval;
pub mod graph;
pub mod markov;
pub mod pipeline;
pub mod scc;
pub mod theory;
pub mod walk;

pub use dataset::{DataMatrix, GenConfig, Label, LabeledDataset, Orientation};
pub use detector::{Detection, DetectionContext, Detector, DetectorRegistry, MethodParams};
pub use elasticnet::{RepresentationMatrix, SolverParams};
pub use error::{Error, Result};
pub use graph::{DanglingPolicy, TransitionMatrix};
pub use walk::{Prediction, StateDistribution};
