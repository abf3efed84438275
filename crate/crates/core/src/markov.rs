//! Exact analysis of a finite Markov chain: decomposition into closed
//! communicating classes and inessential states, per-class stationary
//! distributions, absorption (hitting) probabilities, and the limit of the
//! Cesàro mean. All linear systems are solved by dense LU with partial
//! pivoting.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::MarkovError;
use crate::graph::TransitionMatrix;
use crate::scc::tarjan_scc;
use crate::walk;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateClass {
    /// Member of the closed class with this index.
    Closed(usize),
    Inessential,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarkovDecomposition {
    /// Disjoint closed classes, each sorted, ordered by smallest state.
    pub closed_classes: Vec<Vec<usize>>,
    /// Inessential states, sorted.
    pub inessential: Vec<usize>,
    pub class_of: Vec<StateClass>,
}

impl MarkovDecomposition {
    pub fn is_essential(&self, state: usize) -> bool {
        matches!(self.class_of[state], StateClass::Closed(_))
    }

    pub fn essential_states(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.closed_classes.iter().flatten().copied().collect();
        v.sort_unstable();
        v
    }
}

/// Splits the states into closed classes (strongly connected components
/// with no outgoing positive-probability edge) and inessential states.
pub fn decompose(p: &TransitionMatrix) -> MarkovDecomposition {
    let adj = p.adjacency();
    let comps = tarjan_scc(&adj);
    let mut closed_classes = Vec::new();
    let mut class_of = vec![StateClass::Inessential; p.n()];
    for c in 0..comps.len() {
        if comps.is_sink(c, &adj) {
            for &v in &comps.components[c] {
                class_of[v] = StateClass::Closed(closed_classes.len());
            }
            closed_classes.push(comps.components[c].clone());
        }
    }
    let inessential = (0..p.n())
        .filter(|&v| class_of[v] == StateClass::Inessential)
        .collect();
    MarkovDecomposition {
        closed_classes,
        inessential,
        class_of,
    }
}

fn restrict(p: &TransitionMatrix, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    let mut local = vec![usize::MAX; p.n()];
    for (k, &c) in cols.iter().enumerate() {
        local[c] = k;
    }
    let mut m = DMatrix::zeros(rows.len(), cols.len());
    for (r, &i) in rows.iter().enumerate() {
        for &(j, v) in p.row(i) {
            if local[j] != usize::MAX {
                m[(r, local[j])] = v;
            }
        }
    }
    m
}

/// Solves `A x = b` by LU with one round of iterative refinement.
fn lu_solve(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    what: &'static str,
) -> Result<DMatrix<f64>, MarkovError> {
    let lu = a.clone().lu();
    let mut x = lu.solve(b).ok_or(MarkovError::SingularSystem(what))?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(MarkovError::SingularSystem(what));
    }
    let residual = b - a * &x;
    if let Some(dx) = lu.solve(&residual) {
        x += dx;
    }
    Ok(x)
}

/// Unique stationary distribution of `p` restricted to a closed class.
pub fn stationary_distribution(
    p: &TransitionMatrix,
    class: &[usize],
) -> Result<Vec<f64>, MarkovError> {
    let q = restrict(p, class, class);
    for (r, &state) in class.iter().enumerate() {
        let sum = q.row(r).sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(MarkovError::NotClosedClass { row: state, sum });
        }
    }
    let n = class.len();
    // (Qᵀ − I) π = 0 with the last equation replaced by Σπ = 1.
    let mut a = q.transpose() - DMatrix::identity(n, n);
    a.row_mut(n - 1).fill(1.0);
    let mut b = DMatrix::zeros(n, 1);
    b[(n - 1, 0)] = 1.0;
    let pi = lu_solve(&a, &b, "stationary distribution")?;
    Ok(pi.column(0).iter().copied().collect())
}

/// Absorption probabilities `f[i][l]` from each inessential state (in the
/// order of `decomp.inessential`) into each closed class.
pub fn hitting_probabilities(
    p: &TransitionMatrix,
    decomp: &MarkovDecomposition,
) -> Result<Vec<Vec<f64>>, MarkovError> {
    let ines = &decomp.inessential;
    let m = ines.len();
    let n_classes = decomp.closed_classes.len();
    if m == 0 {
        return Ok(Vec::new());
    }
    let a = DMatrix::identity(m, m) - restrict(p, ines, ines);
    let mut b = DMatrix::zeros(m, n_classes);
    for (r, &i) in ines.iter().enumerate() {
        for &(j, v) in p.row(i) {
            if let StateClass::Closed(l) = decomp.class_of[j] {
                b[(r, l)] += v;
            }
        }
    }
    let f = lu_solve(&a, &b, "hitting probabilities")?;
    Ok((0..m).map(|r| f.row(r).iter().copied().collect()).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticLimit {
    pub decomposition: MarkovDecomposition,
    /// `lim_T (1/T) Σ_{t=1..T} π⁽⁰⁾Pᵗ`.
    pub pi_star: Vec<f64>,
    /// Stationary distribution of each closed class, aligned with its states.
    pub class_stationaries: Vec<Vec<f64>>,
    /// Rows follow `decomposition.inessential`, columns the closed classes.
    pub hitting: Vec<Vec<f64>>,
}

impl AnalyticLimit {
    /// Mass that `pi0` eventually sends into each closed class.
    pub fn class_masses(&self, pi0: &[f64]) -> Vec<f64> {
        let d = &self.decomposition;
        let mut mass: Vec<f64> = d
            .closed_classes
            .iter()
            .map(|c| c.iter().map(|&s| pi0[s]).sum())
            .collect();
        for (r, &i) in d.inessential.iter().enumerate() {
            for (l, m) in mass.iter_mut().enumerate() {
                *m += pi0[i] * self.hitting[r][l];
            }
        }
        mass
    }
}

/// Limit of the Cesàro mean started from `pi0` (uniform when `None`).
pub fn analytic_cesaro_limit(
    p: &TransitionMatrix,
    pi0: Option<&[f64]>,
) -> Result<AnalyticLimit, MarkovError> {
    let n = p.n();
    let uniform;
    let pi0 = match pi0 {
        Some(v) => {
            walk::check_distribution(v, n)?;
            v
        }
        None => {
            uniform = vec![1.0 / n as f64; n];
            &uniform
        }
    };
    let decomposition = decompose(p);
    let class_stationaries = decomposition
        .closed_classes
        .iter()
        .map(|c| stationary_distribution(p, c))
        .collect::<Result<Vec<_>, _>>()?;
    let hitting = hitting_probabilities(p, &decomposition)?;

    let mut limit = AnalyticLimit {
        decomposition,
        pi_star: vec![0.0; n],
        class_stationaries,
        hitting,
    };
    let masses = limit.class_masses(pi0);
    for (l, class) in limit.decomposition.closed_classes.iter().enumerate() {
        for (k, &s) in class.iter().enumerate() {
            limit.pi_star[s] = masses[l] * limit.class_stationaries[l][k];
        }
    }
    Ok(limit)
}

/// The matrix `lim_T (1/T) Σ_{t=1..T} Pᵗ`.
pub fn cesaro_limit_matrix(p: &TransitionMatrix) -> Result<DMatrix<f64>, MarkovError> {
    let limit = analytic_cesaro_limit(p, None)?;
    let d = &limit.decomposition;
    let n = p.n();
    let mut stationary_rows: Vec<DVector<f64>> = Vec::with_capacity(d.closed_classes.len());
    for (class, pi) in d.closed_classes.iter().zip(&limit.class_stationaries) {
        let mut row = DVector::zeros(n);
        for (&s, &v) in class.iter().zip(pi) {
            row[s] = v;
        }
        stationary_rows.push(row);
    }
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        let row = match d.class_of[i] {
            StateClass::Closed(l) => stationary_rows[l].clone(),
            StateClass::Inessential => {
                let r = d
                    .inessential
                    .binary_search(&i)
                    .expect("inessential state listed");
                stationary_rows
                    .iter()
                    .zip(&limit.hitting[r])
                    .fold(DVector::zeros(n), |acc, (row, f)| acc + row * *f)
            }
        };
        m.set_row(i, &row.transpose());
    }
    Ok(m)
}
