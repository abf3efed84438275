use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use rgraph_core::dataset::{GenConfig, Orientation};
use rgraph_core::detector::MethodParams;
use rgraph_core::elasticnet::SolverParams;
use rgraph_core::graph::DanglingPolicy;
use rgraph_core::pipeline::EpsilonRule;

use crate::CliError;

/// Options shared by every pipeline subcommand. Each one can also come from
/// a flat JSON config file (`--config`); flags win over file values.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    /// Flat JSON file with default values for these options.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// Data CSV (comma separated, no header unless --header).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Ground-truth labels, one `in:<k>` or `out` token per line.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Treat each CSV row as a point (default: each column is a point).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub points_as_rows: Option<bool>,
    /// Skip the first CSV line.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub header: Option<bool>,
    /// Do not rescale points to unit norm.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub no_normalize: Option<bool>,

    /// Ambient dimension of generated data.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Comma-separated subspace dimensions of generated data.
    #[arg(long, value_delimiter = ',')]
    pub subspace_dims: Option<Vec<usize>>,
    /// Comma-separated point counts per subspace.
    #[arg(long, value_delimiter = ',')]
    pub points: Option<Vec<usize>>,
    /// Number of generated outliers.
    #[arg(long)]
    pub outliers: Option<usize>,
    /// Random seed for generated data (default 0)
    #[arg(long)]
    pub seed: Option<u64>,

    /// Weight of the l1 term in the elastic net, in [0, 1] (default 0.95)
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Scale of gamma relative to the smallest value that gives a nonzero representation
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Fixed gamma for every column; replaces the alpha rule.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Solver stopping tolerance on the optimality residual (default 1e-8)
    #[arg(long)]
    pub tol: Option<f64>,
    /// Maximum coordinate-descent passes per column (default 10000)
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Coefficients with smaller magnitude are dropped (default 1e-10)
    #[arg(long)]
    pub zero_threshold: Option<f64>,

    /// Number of random-walk steps.
    #[arg(long = "T", id = "steps")]
    #[serde(rename = "T")]
    pub steps: Option<usize>,
    /// Stop the walk early once the average stops changing.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub early_stop: Option<bool>,
    /// Outlier threshold on the scores.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Pick the threshold at the largest relative score gap (default).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub epsilon_auto: Option<bool>,
    /// Points with an empty representation: `uniform` (default) or `error`
    #[arg(long)]
    pub dangling: Option<DanglingPolicy>,
    /// Comma-separated methods; the first one drives the labels in scores.csv.
    #[arg(long, value_delimiter = ',')]
    pub method: Option<Vec<String>>,
    /// OutRank damping factor.
    #[arg(long)]
    pub damping: Option<f64>,

    /// Number of trials (`eval`).
    #[arg(long)]
    pub trials: Option<usize>,
    /// Also write R.coo and P.coo.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub write_matrices: Option<bool>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

// Boolean flags are accepted bare (`--header`) as well as `--header=false`.
impl Settings {
    pub fn load(mut self) -> Result<Self, CliError> {
        let Some(path) = self.config.take() else {
            return Ok(self);
        };
        let text = std::fs::read_to_string(&path)
            .map_err(|e| CliError::new(format!("reading config {}: {e}", path.display())))?;
        let file: Settings = serde_json::from_str(&text)
            .map_err(|e| CliError::new(format!("parsing config {}: {e}", path.display())))?;
        Ok(self.or(file))
    }

    fn or(self, other: Settings) -> Settings {
        macro_rules! merge {
            ($($f:ident),*) => {
                Settings { config: None, $($f: self.$f.or(other.$f)),* }
            };
        }
        merge!(
            input,
            labels,
            points_as_rows,
            header,
            no_normalize,
            dim,
            subspace_dims,
            points,
            outliers,
            seed,
            lambda,
            alpha,
            gamma,
            tol,
            max_iters,
            zero_threshold,
            steps,
            early_stop,
            epsilon,
            epsilon_auto,
            dangling,
            method,
            damping,
            trials,
            write_matrices,
            out
        )
    }

    pub fn orientation(&self) -> Orientation {
        if self.points_as_rows.unwrap_or(false) {
            Orientation::PointsAsRows
        } else {
            Orientation::PointsAsColumns
        }
    }

    pub fn out_dir(&self) -> Result<&Path, CliError> {
        self.out
            .as_deref()
            .ok_or_else(|| CliError::new("--out <dir> is required"))
    }

    pub fn has_generator(&self) -> bool {
        self.dim.is_some()
            || self.subspace_dims.is_some()
            || self.points.is_some()
            || self.outliers.is_some()
    }

    pub fn generator(&self) -> Result<GenConfig, CliError> {
        let need = |name: &str| CliError::new(format!("generated input needs --{name}"));
        Ok(GenConfig {
            ambient_dim: self.dim.ok_or_else(|| need("dim"))?,
            subspace_dims: self
                .subspace_dims
                .clone()
                .ok_or_else(|| need("subspace-dims"))?,
            points_per_subspace: self.points.clone().ok_or_else(|| need("points"))?,
            outlier_count: self.outliers.unwrap_or(0),
            seed: self.seed.unwrap_or(0),
        })
    }

    pub fn solver(&self) -> Result<SolverParams, CliError> {
        let lambda = self.lambda.unwrap_or(SolverParams::DEFAULT_LAMBDA);
        let mut params = match (self.alpha, self.gamma) {
            (_, Some(g)) => SolverParams::new(lambda, self.alpha.unwrap_or(f64::NAN)).with_gamma(g),
            (Some(a), None) => SolverParams::new(lambda, a),
            (None, None) => return Err(CliError::new("either --alpha or --gamma is required")),
        };
        if let Some(t) = self.tol {
            params.tol = t;
        }
        if let Some(m) = self.max_iters {
            params.max_iters = m;
        }
        if let Some(z) = self.zero_threshold {
            params.zero_threshold = z;
        }
        params
            .validate()
            .map_err(|e| CliError::from_core(e.into()))?;
        Ok(params)
    }

    pub fn method_params(&self) -> Result<MethodParams, CliError> {
        let mut p = MethodParams::new(self.solver()?);
        if let Some(d) = self.dangling {
            p.dangling = d;
        }
        if let Some(t) = self.steps {
            if t == 0 {
                return Err(CliError::new("--T must be positive"));
            }
            p.steps = t;
        }
        p.early_stop = self.early_stop.unwrap_or(false);
        if let Some(d) = self.damping {
            p.damping = d;
        }
        Ok(p)
    }

    pub fn methods(&self) -> Vec<String> {
        self.method.clone().unwrap_or_else(|| vec!["rgraph".into()])
    }

    pub fn epsilon_rule(&self) -> EpsilonRule {
        match (self.epsilon, self.epsilon_auto) {
            (Some(e), _) => EpsilonRule::Fixed(e),
            _ => EpsilonRule::AutoGap,
        }
    }
}
