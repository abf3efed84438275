//! Elastic-net self-representation.
//!
//! For each point `x_j` the solver minimizes
//!
//! ```text
//! λ‖r‖₁ + (1−λ)/2 ‖r‖₂² + γ/2 ‖x_j − X r‖₂²    s.t. r_j = 0
//! ```
//!
//! by cyclic coordinate descent inside an active-set loop: coordinate
//! descent runs on the current support, then a full sweep looks for KKT
//! violations among the zero coordinates, and the two alternate until the
//! full KKT residual drops below `tol`. After each round of coordinate
//! descent the support's sign pattern is tried directly: on a fixed support
//! and signs the objective is a strictly convex quadratic whose minimizer
//! solves one small linear system, which finishes ill-conditioned problems
//! that coordinate descent alone approaches only slowly. Everything is
//! expressed through the Gram matrix, so one Gram computation serves all
//! `N` subproblems.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{DataMatrix, Label};
use crate::error::{GraphError, SolverError};

/// Supports larger than this are left to coordinate descent alone.
const POLISH_MAX_SUPPORT: usize = 400;
/// Coordinate-descent passes between two exact solves on the support.
const PASSES_PER_POLISH: usize = 25;

/// Coefficient vector stored as `(row, value)` pairs sorted by row.
pub type SparseVec = Vec<(usize, f64)>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverParams {
    /// Trade-off between the ℓ1 and ℓ2 penalties, in `[0, 1]`.
    pub lambda: f64,
    /// Multiplier applied to `λ / max_{i≠j} |⟨x_j, x_i⟩|` to get `γ_j`.
    pub alpha: f64,
    /// Fixed `γ` used for every column instead of the coherence rule.
    pub gamma_override: Option<f64>,
    pub tol: f64,
    pub max_iters: usize,
    /// Coefficients with smaller magnitude are stored as structural zeros.
    pub zero_threshold: f64,
}

impl SolverParams {
    pub const DEFAULT_LAMBDA: f64 = 0.95;

    /// Default tolerances with the given `λ` and `α`.
    pub fn new(lambda: f64, alpha: f64) -> Self {
        Self {
            lambda,
            alpha,
            gamma_override: None,
            tol: 1e-8,
            max_iters: 10_000,
            zero_threshold: 1e-10,
        }
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma_override = Some(gamma);
        self
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |m: String| Err(SolverError::InvalidParams(m));
        if !(0.0..=1.0).contains(&self.lambda) {
            return bad(format!("lambda {} outside [0, 1]", self.lambda));
        }
        if !(self.tol > 0.0) {
            return bad(format!("tol must be positive, got {}", self.tol));
        }
        if self.max_iters == 0 {
            return bad("max_iters must be positive".into());
        }
        if !(self.zero_threshold >= 0.0) {
            return bad("zero_threshold must be nonnegative".into());
        }
        match self.gamma_override {
            Some(g) if !(g > 0.0 && g.is_finite()) => {
                bad(format!("gamma must be positive, got {g}"))
            }
            Some(_) => Ok(()),
            None if !(self.alpha > 0.0 && self.alpha.is_finite()) => {
                bad(format!("alpha must be positive, got {}", self.alpha))
            }
            None => Ok(()),
        }
    }
}

fn gamma_from_coherence(
    j: usize,
    coherence: f64,
    params: &SolverParams,
) -> Result<f64, SolverError> {
    if let Some(g) = params.gamma_override {
        return Ok(g);
    }
    if coherence < 1e-14 {
        return Err(SolverError::DegenerateCoherence(j));
    }
    Ok(params.alpha * params.lambda / coherence)
}

/// `γ_j = α λ / max_{i≠j} |⟨x_j, x_i⟩|`, or the override when one is set.
pub fn compute_gamma(x: &DataMatrix, j: usize, params: &SolverParams) -> Result<f64, SolverError> {
    if let Some(g) = params.gamma_override {
        return Ok(g);
    }
    if x.n_points() < 2 {
        return Err(SolverError::TooFewPoints);
    }
    let xj = x.column(j);
    let coherence = (0..x.n_points())
        .filter(|&i| i != j)
        .map(|i| x.column(i).dot(&xj).abs())
        .fold(0.0, f64::max);
    gamma_from_coherence(j, coherence, params)
}

fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// One elastic-net subproblem in Gram form: atoms `a_i` with Gram matrix
/// `G`, target correlations `corr_i = ⟨a_i, y⟩`, and an optional atom
/// pinned to zero.
#[derive(Debug, Clone)]
pub struct ElasticNetProblem<'a> {
    pub gram: &'a DMatrix<f64>,
    pub corr: Vec<f64>,
    pub excluded: Option<usize>,
    pub lambda: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone)]
pub struct DenseSolution {
    pub coeffs: Vec<f64>,
    pub kkt_residual: f64,
    /// Coordinate-descent passes performed.
    pub passes: usize,
}

impl ElasticNetProblem<'_> {
    pub fn len(&self) -> usize {
        self.corr.len()
    }

    pub fn is_empty(&self) -> bool {
        self.corr.is_empty()
    }

    /// `γ ⟨a_i, y − A r⟩` given `g = G r`.
    #[inline]
    fn correlation(&self, i: usize, g: &[f64]) -> f64 {
        self.gamma * (self.corr[i] - g[i])
    }

    fn violation(&self, r: f64, h: f64) -> f64 {
        if r != 0.0 {
            (h - self.lambda * r.signum() - (1.0 - self.lambda) * r).abs()
        } else {
            (h.abs() - self.lambda).max(0.0)
        }
    }

    fn gram_times(&self, r: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.len()];
        for (k, &rk) in r.iter().enumerate() {
            if rk != 0.0 {
                for (gi, &gik) in g.iter_mut().zip(self.gram.column(k).iter()) {
                    *gi += rk * gik;
                }
            }
        }
        g
    }

    /// Largest violation of the stationarity conditions at `r`.
    pub fn kkt_residual(&self, r: &[f64]) -> f64 {
        let g = self.gram_times(r);
        (0..self.len())
            .filter(|&i| Some(i) != self.excluded)
            .map(|i| self.violation(r[i], self.correlation(i, &g)))
            .fold(0.0, f64::max)
    }

    /// Objective value minus the constant `γ/2 ‖y‖²`.
    pub fn objective_shifted(&self, r: &[f64]) -> f64 {
        let g = self.gram_times(r);
        let l1: f64 = r.iter().map(|v| v.abs()).sum();
        let l2: f64 = r.iter().map(|v| v * v).sum();
        let quad: f64 = r.iter().zip(&g).map(|(a, b)| a * b).sum();
        let lin: f64 = r.iter().zip(&self.corr).map(|(a, b)| a * b).sum();
        self.lambda * l1 + 0.5 * (1.0 - self.lambda) * l2 + 0.5 * self.gamma * (quad - 2.0 * lin)
    }

    /// Updates coordinate `i` to its exact minimizer; returns the change.
    #[inline]
    fn update(&self, i: usize, r: &mut [f64], g: &mut [f64]) -> f64 {
        let gii = self.gram[(i, i)];
        let denom = (1.0 - self.lambda) + self.gamma * gii;
        if denom <= 0.0 {
            return 0.0;
        }
        let c = self.correlation(i, g) + self.gamma * gii * r[i];
        let new = soft_threshold(c, self.lambda) / denom;
        let delta = new - r[i];
        if delta != 0.0 {
            r[i] = new;
            for (gk, &gik) in g.iter_mut().zip(self.gram.column(i).iter()) {
                *gk += delta * gik;
            }
        }
        delta
    }

    /// Moves `r` towards the exact minimizer over its current support and
    /// sign pattern. On that face the objective is a strictly convex
    /// quadratic, so it decreases along the segment to the face minimizer;
    /// when a coordinate would change sign the step stops where it reaches
    /// zero, the coordinate leaves the support, and the face shrinks. Each
    /// round lowers the objective, and the process ends on a face whose
    /// minimizer keeps its signs.
    fn polish(&self, r: &mut [f64], g: &mut Vec<f64>) {
        let mu = 1.0 - self.lambda;
        loop {
            let support: Vec<usize> = (0..r.len()).filter(|&i| r[i] != 0.0).collect();
            let m = support.len();
            if m == 0 || m > POLISH_MAX_SUPPORT {
                return;
            }
            let a = DMatrix::from_fn(m, m, |p, q| {
                self.gamma * self.gram[(support[p], support[q])] + if p == q { mu } else { 0.0 }
            });
            let b = DVector::from_fn(m, |p, _| {
                let i = support[p];
                self.gamma * self.corr[i] - self.lambda * r[i].signum()
            });
            let Some(chol) = a.cholesky() else {
                return;
            };
            let target = chol.solve(&b);
            // First point on the segment where a coordinate hits zero.
            let (mut step, mut leaving) = (1.0f64, None);
            for (p, &i) in support.iter().enumerate() {
                if target[p] == 0.0 || target[p].signum() != r[i].signum() {
                    let t = r[i] / (r[i] - target[p]);
                    if t < step {
                        step = t;
                        leaving = Some(i);
                    }
                }
            }
            for (p, &i) in support.iter().enumerate() {
                r[i] += step * (target[p] - r[i]);
            }
            match leaving {
                Some(i) => r[i] = 0.0,
                None => {
                    *g = self.gram_times(r);
                    return;
                }
            }
        }
    }

    /// Solves from `init` (zero when `None`).
    pub fn solve(
        &self,
        tol: f64,
        max_iters: usize,
        init: Option<&[f64]>,
    ) -> Result<DenseSolution, SolverError> {
        let n = self.len();
        let mut r = init.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
        if let Some(e) = self.excluded {
            r[e] = 0.0;
        }
        let mut g = self.gram_times(&r);
        let mut passes = 0;
        let mut best = (r.clone(), f64::INFINITY);

        loop {
            let mut kkt = 0.0f64;
            let mut active = Vec::new();
            for i in 0..n {
                if Some(i) == self.excluded {
                    continue;
                }
                let h = self.correlation(i, &g);
                let v = self.violation(r[i], h);
                kkt = kkt.max(v);
                if r[i] != 0.0 || v > 0.0 {
                    active.push(i);
                }
            }
            if kkt < best.1 {
                best = (r.clone(), kkt);
            }
            if kkt <= tol {
                return Ok(DenseSolution {
                    coeffs: r,
                    kkt_residual: kkt,
                    passes,
                });
            }
            if passes >= max_iters {
                return Err(SolverError::NotConverged {
                    max_iters,
                    best: best.0,
                    kkt_residual: best.1,
                });
            }

            let mut inner = 0;
            loop {
                let mut max_delta = 0.0f64;
                for &i in &active {
                    max_delta = max_delta.max(self.update(i, &mut r, &mut g).abs());
                }
                passes += 1;
                let active_kkt = active
                    .iter()
                    .map(|&i| self.violation(r[i], self.correlation(i, &g)))
                    .fold(0.0, f64::max);
                inner += 1;
                if active_kkt <= 0.1 * tol
                    || max_delta == 0.0
                    || passes >= max_iters
                    || inner >= PASSES_PER_POLISH
                {
                    break;
                }
            }
            self.polish(&mut r, &mut g);
        }
    }
}

/// Column-sparse `N x N` coefficient matrix with zero diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepresentationMatrix {
    n: usize,
    columns: Vec<SparseVec>,
    gamma_used: Vec<f64>,
}

impl RepresentationMatrix {
    /// Builds from sparse columns, dropping explicit zeros and sorting rows.
    ///
    /// Panics if a column stores its own diagonal entry or an out-of-range row.
    pub fn from_columns(columns: Vec<SparseVec>, gamma_used: Vec<f64>) -> Self {
        let n = columns.len();
        assert_eq!(gamma_used.len(), n, "one gamma per column");
        let columns = columns
            .into_iter()
            .enumerate()
            .map(|(j, mut col)| {
                col.retain(|&(_, v)| v != 0.0);
                col.sort_by_key(|&(i, _)| i);
                for &(i, _) in &col {
                    assert!(i < n, "row {i} out of range in column {j}");
                    assert_ne!(i, j, "diagonal entry stored in column {j}");
                }
                col
            })
            .collect();
        Self {
            n,
            columns,
            gamma_used,
        }
    }

    /// Dense input `r[(i, j)]`; the diagonal must be zero.
    pub fn from_dense(r: &DMatrix<f64>) -> Self {
        let n = r.ncols();
        let columns = (0..n)
            .map(|j| {
                (0..n)
                    .filter(|&i| r[(i, j)] != 0.0)
                    .map(|i| (i, r[(i, j)]))
                    .collect()
            })
            .collect();
        Self::from_columns(columns, vec![f64::NAN; n])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn column(&self, j: usize) -> &[(usize, f64)] {
        &self.columns[j]
    }

    pub fn columns(&self) -> &[SparseVec] {
        &self.columns
    }

    pub fn gamma_used(&self) -> &[f64] {
        &self.gamma_used
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.columns[j]
            .binary_search_by_key(&i, |&(row, _)| row)
            .map_or(0.0, |k| self.columns[j][k].1)
    }

    pub fn nnz(&self) -> usize {
        self.columns.iter().map(Vec::len).sum()
    }

    pub fn column_l1(&self, j: usize) -> f64 {
        self.columns[j].iter().map(|(_, v)| v.abs()).sum()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for (j, col) in self.columns.iter().enumerate() {
            for &(i, v) in col {
                m[(i, j)] = v;
            }
        }
        m
    }

    /// Multiplies column `j` by `scale`.
    pub fn scale_column(&mut self, j: usize, scale: f64) {
        for (_, v) in &mut self.columns[j] {
            *v *= scale;
        }
    }

    /// Writes `j,i,value` lines (column, row, coefficient).
    pub fn write_coo(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        for (j, col) in self.columns.iter().enumerate() {
            for &(i, v) in col {
                writeln!(w, "{j},{i},{v}")?;
            }
        }
        w.flush()
    }

    pub fn read_coo(path: impl AsRef<Path>, n: usize) -> Result<Self, GraphError> {
        let reader = BufReader::new(File::open(path)?);
        let mut columns = vec![SparseVec::new(); n];
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let err = || GraphError::Format(format!("line {}: expected `j,i,value`", lineno + 1));
            if fields.len() != 3 {
                return Err(err());
            }
            let j: usize = fields[0].parse().map_err(|_| err())?;
            let i: usize = fields[1].parse().map_err(|_| err())?;
            let v: f64 = fields[2].parse().map_err(|_| err())?;
            if i >= n || j >= n || i == j {
                return Err(GraphError::Format(format!(
                    "line {}: entry ({i}, {j}) invalid for N = {n}",
                    lineno + 1
                )));
            }
            columns[j].push((i, v));
        }
        Ok(Self::from_columns(columns, vec![f64::NAN; n]))
    }
}

/// JSON sidecar for a serialized representation matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RepresentationSidecar {
    pub n: usize,
    pub nnz: usize,
    pub params: SolverParams,
    pub gamma: Vec<f64>,
}

impl RepresentationSidecar {
    pub fn new(r: &RepresentationMatrix, params: &SolverParams) -> Self {
        Self {
            n: r.n(),
            nnz: r.nnz(),
            params: *params,
            gamma: r.gamma_used().to_vec(),
        }
    }
}

/// A single column's solution before it is stored in `R`.
#[derive(Debug, Clone)]
pub struct ColumnSolution {
    pub coeffs: SparseVec,
    pub gamma: f64,
    pub kkt_residual: f64,
}

/// Shares one Gram matrix across all column subproblems of a dataset.
#[derive(Debug, Clone)]
pub struct SelfRepresentation<'a> {
    data: &'a DataMatrix,
    gram: DMatrix<f64>,
    params: SolverParams,
}

impl<'a> SelfRepresentation<'a> {
    pub fn new(data: &'a DataMatrix, params: SolverParams) -> Result<Self, SolverError> {
        params.validate()?;
        if data.n_points() < 2 {
            return Err(SolverError::TooFewPoints);
        }
        Ok(Self {
            data,
            gram: data.gram(),
            params,
        })
    }

    pub fn data(&self) -> &DataMatrix {
        self.data
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn gamma(&self, j: usize) -> Result<f64, SolverError> {
        let coherence = (0..self.gram.ncols())
            .filter(|&i| i != j)
            .map(|i| self.gram[(i, j)].abs())
            .fold(0.0, f64::max);
        gamma_from_coherence(j, coherence, &self.params)
    }

    pub fn problem(&self, j: usize) -> Result<ElasticNetProblem<'_>, SolverError> {
        Ok(ElasticNetProblem {
            gram: &self.gram,
            corr: self.gram.column(j).iter().copied().collect(),
            excluded: Some(j),
            lambda: self.params.lambda,
            gamma: self.gamma(j)?,
        })
    }

    pub fn solve_column(&self, j: usize) -> Result<ColumnSolution, SolverError> {
        self.solve_column_from(j, None)
    }

    /// Solves column `j` starting from `init` instead of zero.
    pub fn solve_column_from(
        &self,
        j: usize,
        init: Option<&[f64]>,
    ) -> Result<ColumnSolution, SolverError> {
        let problem = self.problem(j)?;
        let sol = problem.solve(self.params.tol, self.params.max_iters, init)?;
        let coeffs = sol
            .coeffs
            .iter()
            .enumerate()
            .filter(|&(_, v)| v.abs() >= self.params.zero_threshold && *v != 0.0)
            .map(|(i, &v)| (i, v))
            .collect();
        Ok(ColumnSolution {
            coeffs,
            gamma: problem.gamma,
            kkt_residual: sol.kkt_residual,
        })
    }

    /// Solves every column. Columns are independent and solved in parallel;
    /// the result does not depend on scheduling.
    pub fn solve_all(&self) -> Result<RepresentationMatrix, SolverError> {
        let results: Vec<_> = (0..self.data.n_points())
            .into_par_iter()
            .map(|j| self.solve_column(j))
            .collect();
        let mut columns = Vec::with_capacity(results.len());
        let mut gammas = Vec::with_capacity(results.len());
        let mut failures = Vec::new();
        for (j, res) in results.into_iter().enumerate() {
            match res {
                Ok(sol) => {
                    columns.push(sol.coeffs);
                    gammas.push(sol.gamma);
                }
                Err(e) => failures.push((j, e)),
            }
        }
        if !failures.is_empty() {
            return Err(SolverError::Columns(failures));
        }
        Ok(RepresentationMatrix::from_columns(columns, gammas))
    }
}

/// Solves the subproblem for column `j` of `x`.
pub fn solve_column(
    x: &DataMatrix,
    j: usize,
    params: &SolverParams,
) -> Result<SparseVec, SolverError> {
    Ok(SelfRepresentation::new(x, *params)?.solve_column(j)?.coeffs)
}

/// Solves all columns of `x`, giving `R = [r_1, …, r_N]`.
pub fn self_representation(
    x: &DataMatrix,
    params: &SolverParams,
) -> Result<RepresentationMatrix, SolverError> {
    SelfRepresentation::new(x, *params)?.solve_all()
}

/// Solution of the subproblem restricted to the other points of `x_j`'s own
/// subspace, and the scaled residual it leaves.
#[derive(Debug, Clone)]
pub struct OracleSolution {
    pub j: usize,
    /// Indices (into `X`) of the restricted dictionary, ascending.
    pub members: Vec<usize>,
    /// Coefficients aligned with `members`.
    pub r_oracle: Vec<f64>,
    pub gamma: f64,
    /// `γ (x_j − X_members r_oracle)`.
    pub delta: DVector<f64>,
    pub delta_unit: DVector<f64>,
    /// `max_k |⟨x_k, δ̄_j⟩|` over the members.
    pub kappa: f64,
    pub kkt_residual: f64,
}

impl OracleSolution {
    /// Upper bound `(λκ + 1 − λ) / κ²` on `‖δ_j‖`.
    pub fn delta_norm_bound(&self, lambda: f64) -> f64 {
        if self.kappa == 0.0 {
            f64::INFINITY
        } else {
            (lambda * self.kappa + 1.0 - lambda) / (self.kappa * self.kappa)
        }
    }

    pub fn delta_norm_bound_holds(&self, lambda: f64) -> bool {
        let bound = self.delta_norm_bound(lambda);
        self.delta.norm() <= bound * (1.0 + 1e-9) + 1e-12
    }
}

pub fn solve_oracle(
    x: &DataMatrix,
    labels: &[Label],
    j: usize,
    params: &SolverParams,
) -> Result<OracleSolution, SolverError> {
    params.validate()?;
    let ell = labels[j].subspace().ok_or(SolverError::NotAnInlier(j))?;
    let members: Vec<usize> = labels
        .iter()
        .enumerate()
        .filter(|&(k, l)| k != j && *l == Label::Inlier(ell))
        .map(|(k, _)| k)
        .collect();
    if members.is_empty() {
        return Err(SolverError::SingletonSubspace(ell));
    }
    let gamma = compute_gamma(x, j, params)?;

    let dict = x.select_columns(&members);
    let gram = dict.gram();
    let xj = x.column(j).into_owned();
    let corr: Vec<f64> = dict.values().tr_mul(&xj).iter().copied().collect();
    let problem = ElasticNetProblem {
        gram: &gram,
        corr,
        excluded: None,
        lambda: params.lambda,
        gamma,
    };
    let sol = problem.solve(params.tol, params.max_iters, None)?;

    let fit = dict.values() * DVector::from_column_slice(&sol.coeffs);
    let delta = (&xj - fit) * gamma;
    let delta_unit = delta.normalize();
    let kappa = dict
        .values()
        .tr_mul(&delta_unit)
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));

    let out = OracleSolution {
        j,
        members,
        r_oracle: sol.coeffs,
        gamma,
        delta,
        delta_unit,
        kappa,
        kkt_residual: sol.kkt_residual,
    };
    debug_assert!(
        out.delta_norm_bound_holds(params.lambda),
        "oracle point norm {} exceeds its coherence bound {}",
        out.delta.norm(),
        out.delta_norm_bound(params.lambda)
    );
    Ok(out)
}
