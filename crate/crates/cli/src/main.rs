//! `rgraph`: outlier detection in a union of subspaces from the command line.

mod config;

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use serde::Serialize;

use rgraph_core::dataset::{self, DataMatrix, GenManifest, Label};
use rgraph_core::elasticnet::{self_representation, RepresentationSidecar};
use rgraph_core::error;
use rgraph_core::eval::{run_trials, ExperimentConfig};
use rgraph_core::graph::{transition_matrix, TransitionMatrix};
use rgraph_core::markov::{analytic_cesaro_limit, AnalyticLimit};
use rgraph_core::pipeline::{run_pipeline, PipelineOptions, ScoreReport};
use rgraph_core::theory::{
    check_all_inliers, check_assumptions, AssumptionReport, ConditionReport,
};
use rgraph_core::walk::{cesaro_scores_with, CesaroOptions};
use rgraph_core::{DetectorRegistry, Error};

use config::Settings;

#[derive(Parser)]
#[command(
    name = "rgraph",
    version,
    about = "Outlier detection with a self-representation graph"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic union-of-subspaces dataset with outliers.
    Gen(Settings),
    /// Score points and label outliers.
    Detect(Settings),
    /// Check the exact-recovery conditions on a labeled dataset.
    Verify(Settings),
    /// Average metrics over repeated generated datasets.
    Eval(Settings),
    /// Decompose a stored transition matrix and compute its walk limit.
    Markov(Settings),
}

/// Failure with the module it came from, printed as JSON on stderr.
#[derive(Debug, Serialize)]
pub struct CliError {
    module: &'static str,
    message: String,
}

impl CliError {
    pub fn new(message: impl Into<String>) -> Self {
        Self {
            module: "cli",
            message: message.into(),
        }
    }

    pub fn from_core(e: Error) -> Self {
        Self {
            module: e.module(),
            message: e.to_string(),
        }
    }
}

macro_rules! from_core_error {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                Self::from_core(e.into())
            }
        }
    )*};
}

from_core_error!(
    Error,
    error::DatasetError,
    error::SolverError,
    error::GraphError,
    error::WalkError,
    error::MarkovError,
    error::EvalError
);

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| CliError::new(format!("{}: {e}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::new(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

fn prepare_out(settings: &Settings) -> Result<&Path, CliError> {
    let out = settings.out_dir()?;
    fs::create_dir_all(out).map_err(io_err(out))?;
    Ok(out)
}

fn timestamp() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Where the data came from; echoed into reports.
#[derive(Debug, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
enum InputSource {
    Csv {
        path: String,
        orientation: dataset::Orientation,
        header: bool,
        labels: Option<String>,
    },
    Generated(GenManifest),
}

struct Input {
    source: InputSource,
    data: DataMatrix,
    labels: Option<Vec<Label>>,
}

fn load_input(s: &Settings) -> Result<Input, CliError> {
    match (&s.input, s.has_generator()) {
        (Some(_), true) => Err(CliError::new(
            "give either --input or generator options, not both",
        )),
        (None, false) => Err(CliError::new(
            "no input: give --input <csv> or --dim/--subspace-dims/--points",
        )),
        (None, true) => {
            let cfg = s.generator()?;
            let ds = dataset::generate_synthetic(&cfg)?;
            Ok(Input {
                source: InputSource::Generated(GenManifest::from(&cfg)),
                data: ds.data,
                labels: Some(ds.labels),
            })
        }
        (Some(path), false) => {
            let header = s.header.unwrap_or(false);
            let data = dataset::load_csv(path, s.orientation(), header)?;
            let labels = s.labels.as_ref().map(dataset::read_labels).transpose()?;
            Ok(Input {
                source: InputSource::Csv {
                    path: path.display().to_string(),
                    orientation: s.orientation(),
                    header,
                    labels: s.labels.as_ref().map(|p| p.display().to_string()),
                },
                data,
                labels,
            })
        }
    }
}

fn cmd_gen(s: &Settings) -> Result<(), CliError> {
    let cfg = s.generator()?;
    let ds = dataset::generate_synthetic(&cfg)?;
    let out = prepare_out(s)?;
    dataset::write_csv(&ds.data, out.join("data.csv"), s.orientation())?;
    dataset::write_labels(&ds.labels, out.join("labels.txt"))?;
    write_json(&out.join("manifest.json"), &GenManifest::from(&cfg))?;
    eprintln!(
        "gen: {} points in R^{} ({} outliers) -> {}",
        cfg.n_points(),
        cfg.ambient_dim,
        cfg.outlier_count,
        out.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct DetectReport {
    /// Seconds since the Unix epoch; the only field that varies between
    /// identical runs.
    generated_at: u64,
    input: InputSource,
    labels_supplied: bool,
    #[serde(flatten)]
    report: ScoreReport,
}

fn cmd_detect(s: &Settings) -> Result<(), CliError> {
    let input = load_input(s)?;
    let options = PipelineOptions {
        params: s.method_params()?,
        methods: s.methods(),
        epsilon: s.epsilon_rule(),
        normalize: !s.no_normalize.unwrap_or(false),
    };
    let out = prepare_out(s)?;
    eprintln!(
        "detect: {} points, methods {}",
        input.data.n_points(),
        options.methods.join(",")
    );
    let registry = DetectorRegistry::builtin();
    let (report, artifacts) =
        run_pipeline(input.data, input.labels.as_deref(), &options, &registry)?;

    for (k, m) in report.methods.iter().enumerate() {
        let name = if k == 0 {
            "scores.csv".to_string()
        } else {
            format!("scores_{}.csv", m.method)
        };
        let mut text = String::from("index,score,label\n");
        for (i, (score, pred)) in m.scores.iter().zip(&m.predictions).enumerate() {
            let _ = writeln!(text, "{i},{score},{pred}");
        }
        let path = out.join(name);
        fs::write(&path, text).map_err(io_err(&path))?;
    }
    if s.write_matrices.unwrap_or(false) {
        if let Some(r) = &artifacts.representation {
            let path = out.join("R.coo");
            r.write_coo(&path).map_err(io_err(&path))?;
            write_json(
                &out.join("R.json"),
                &RepresentationSidecar::new(r, &options.params.solver),
            )?;
        }
        if let Some(p) = &artifacts.transition {
            let path = out.join("P.coo");
            p.write_coo(&path).map_err(io_err(&path))?;
        }
    }
    for m in &report.methods {
        match &m.metrics {
            Some(mr) => eprintln!(
                "detect: {}: {} predicted outliers, auc {:.4}, best f1 {:.4}",
                m.method, m.n_predicted_outliers, mr.auc, mr.best_f1
            ),
            None => eprintln!(
                "detect: {}: {} predicted outliers",
                m.method, m.n_predicted_outliers
            ),
        }
    }
    write_json(
        &out.join("report.json"),
        &DetectReport {
            generated_at: timestamp(),
            input: input.source,
            labels_supplied: input.labels.is_some(),
            report,
        },
    )
}

#[derive(Serialize)]
struct CheckRow {
    check: &'static str,
    pass: bool,
    detail: String,
}

#[derive(Serialize)]
struct VerifyReport {
    generated_at: u64,
    input: InputSource,
    params: rgraph_core::SolverParams,
    checks: Vec<CheckRow>,
    all_pass: bool,
    conditions: ConditionReport,
    assumptions: AssumptionReport,
    essential_states: Vec<usize>,
    inliers: Vec<usize>,
}

fn cmd_verify(s: &Settings) -> Result<(), CliError> {
    let input = load_input(s)?;
    let labels = input
        .labels
        .ok_or_else(|| CliError::new("verify needs labels (--labels, or generated input)"))?;
    if labels.len() != input.data.n_points() {
        return Err(error::DatasetError::Labels(format!(
            "{} labels for {} points",
            labels.len(),
            input.data.n_points()
        ))
        .into());
    }
    let params = s.method_params()?;
    let out = prepare_out(s)?;
    let data = dataset::normalize_columns(&input.data)?;

    eprintln!(
        "verify: solving {} oracle problems",
        labels.iter().filter(|l| !l.is_outlier()).count()
    );
    let conditions = check_all_inliers(&data, &labels, &params.solver)?;
    eprintln!("verify: solving the full representation");
    let r = self_representation(&data, &params.solver)?;
    let assumptions = check_assumptions(&r, &labels);
    let p: TransitionMatrix = transition_matrix(&r, params.dangling)?;
    let essential_states = rgraph_core::markov::decompose(&p).essential_states();
    let inliers: Vec<usize> = (0..labels.len())
        .filter(|&j| !labels[j].is_outlier())
        .collect();

    let n_in = conditions.records.len();
    let count = |f: fn(&rgraph_core::theory::ConditionRecord) -> bool| {
        conditions.records.iter().filter(|r| f(r)).count()
    };
    let eq6 = count(|r| r.eq6_holds);
    let a1 = count(|r| r.lemma_a1_holds);
    let kb = count(|r| r.kappa_bound_ok);
    let implication = conditions.implication_violations();
    let sp = &assumptions.subspace_preserving;
    let checks = vec![
        CheckRow {
            check: "margin condition (every inlier)",
            pass: eq6 == n_in,
            detail: format!("{eq6}/{n_in} inliers"),
        },
        CheckRow {
            check: "outlier-correlation bound (every inlier)",
            pass: a1 == n_in,
            detail: format!("{a1}/{n_in} inliers"),
        },
        CheckRow {
            check: "margin condition implies correlation bound",
            pass: implication.is_empty(),
            detail: format!("{} violations", implication.len()),
        },
        CheckRow {
            check: "oracle residual norm bound",
            pass: kb == n_in,
            detail: format!("{kb}/{n_in} inliers"),
        },
        CheckRow {
            check: "representation is subspace preserving",
            pass: sp.holds,
            detail: format!("{} cross-subspace entries", sp.violations.len()),
        },
        CheckRow {
            check: "each subspace strongly connected",
            pass: assumptions.inliers_connected,
            detail: format!(
                "{}/{} subspaces",
                assumptions
                    .subspaces
                    .iter()
                    .filter(|c| c.strongly_connected && c.dangling.is_empty())
                    .count(),
                assumptions.subspaces.len()
            ),
        },
        CheckRow {
            check: "no closed set of outliers",
            pass: assumptions.outliers_escape,
            detail: format!(
                "{} closed outlier sets",
                assumptions.outlier_witnesses.len()
            ),
        },
        CheckRow {
            check: "essential states equal inliers",
            pass: essential_states == inliers,
            detail: format!(
                "{} essential, {} inliers",
                essential_states.len(),
                inliers.len()
            ),
        },
    ];
    let all_pass = checks.iter().all(|c| c.pass);

    let width = checks.iter().map(|c| c.check.len()).max().unwrap_or(0);
    for c in &checks {
        println!(
            "{:<width$}  {}  {}",
            c.check,
            if c.pass { "PASS" } else { "FAIL" },
            c.detail
        );
    }
    write_json(
        &out.join("verify.json"),
        &VerifyReport {
            generated_at: timestamp(),
            input: input.source,
            params: params.solver,
            checks,
            all_pass,
            conditions,
            assumptions,
            essential_states,
            inliers,
        },
    )
}

fn cmd_eval(s: &Settings) -> Result<(), CliError> {
    let config = ExperimentConfig {
        generator: s.generator()?,
        params: s.method_params()?,
        methods: s.methods(),
        trials: s.trials.unwrap_or(1),
        base_seed: s.seed.unwrap_or(0),
    };
    if config.trials == 0 {
        return Err(CliError::new("--trials must be positive"));
    }
    let out = prepare_out(s)?;
    eprintln!(
        "eval: {} trials, methods {}",
        config.trials,
        config.methods.join(",")
    );
    let summary = run_trials(&config, &DetectorRegistry::builtin())?;
    for (name, m) in &summary.methods {
        println!(
            "{name:<10} auc {:.4} ± {:.4}   f1 {:.4} ± {:.4}",
            m.auc_mean, m.auc_std, m.f1_mean, m.f1_std
        );
    }
    write_json(&out.join("summary.json"), &summary)
}

#[derive(Serialize)]
struct MarkovReport {
    generated_at: u64,
    input: String,
    n_states: usize,
    max_row_defect: f64,
    #[serde(flatten)]
    limit: AnalyticLimit,
    /// Present when `--T` is given: the simulated walk and its ℓ1 distance
    /// to the limit.
    #[serde(skip_serializing_if = "Option::is_none")]
    walk: Option<WalkComparison>,
}

#[derive(Serialize)]
struct WalkComparison {
    steps: usize,
    scores: Vec<f64>,
    l1_error: f64,
}

fn cmd_markov(s: &Settings) -> Result<(), CliError> {
    let path = s
        .input
        .as_ref()
        .ok_or_else(|| CliError::new("markov needs --input <P.coo>"))?;
    let p = TransitionMatrix::read_coo(path)?;
    let defect = p.max_row_defect();
    if defect > 1e-9 {
        return Err(CliError::new(format!(
            "{} is not row-stochastic (max row-sum defect {defect:e})",
            path.display()
        )));
    }
    let out = prepare_out(s)?;
    let limit = analytic_cesaro_limit(&p, None)?;
    let walk = match s.steps {
        Some(steps) => {
            let opts = CesaroOptions {
                early_stop: s.early_stop.unwrap_or(false),
                ..CesaroOptions::new(steps)
            };
            let dist = cesaro_scores_with(&p, opts, None)?;
            let l1_error = dist
                .probs
                .iter()
                .zip(&limit.pi_star)
                .map(|(a, b)| (a - b).abs())
                .sum();
            Some(WalkComparison {
                steps: dist.steps,
                scores: dist.probs,
                l1_error,
            })
        }
        None => None,
    };
    let d = &limit.decomposition;
    println!(
        "{} states: {} closed classes, {} inessential",
        p.n(),
        d.closed_classes.len(),
        d.inessential.len()
    );
    if let Some(w) = &walk {
        println!("walk T={}: l1 distance to limit {:e}", w.steps, w.l1_error);
    }
    write_json(
        &out.join("markov.json"),
        &MarkovReport {
            generated_at: timestamp(),
            input: path.display().to_string(),
            n_states: p.n(),
            max_row_defect: defect,
            limit,
            walk,
        },
    )
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Gen(s) => cmd_gen(&s.load()?),
        Command::Detect(s) => cmd_detect(&s.load()?),
        Command::Verify(s) => cmd_verify(&s.load()?),
        Command::Eval(s) => cmd_eval(&s.load()?),
        Command::Markov(s) => cmd_markov(&s.load()?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let json = serde_json::json!({ "error": e });
            eprintln!("{json}");
            ExitCode::FAILURE
        }
    }
}
