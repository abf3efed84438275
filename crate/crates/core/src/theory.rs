//! Checks of the sufficient conditions for correct detection on a concrete
//! instance: subspace preservation of `R`, the oracle-point margin condition
//! for each inlier, and the two connectivity assumptions on the
//! representation graph.
//!
//! The inradius-based form of the margin condition is not evaluated; the
//! report records the coherence `κ_j`, which is never smaller than the
//! inradius.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{DataMatrix, Label};
use crate::elasticnet::{solve_oracle, RepresentationMatrix, SolverParams};
use crate::error::SolverError;
use crate::scc::{induced_subgraph, tarjan_scc};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubspacePreservation {
    pub holds: bool,
    /// `(i, j)` pairs where inlier `j` uses a point `i` outside its subspace.
    pub violations: Vec<(usize, usize)>,
}

/// Every inlier column of `R` may only use points of its own subspace.
/// Outlier columns are unconstrained.
pub fn check_subspace_preserving(
    r: &RepresentationMatrix,
    labels: &[Label],
) -> SubspacePreservation {
    let mut violations = Vec::new();
    for (j, label) in labels.iter().enumerate() {
        if let Label::Inlier(_) = label {
            for &(i, v) in r.column(j) {
                if v != 0.0 && labels[i] != *label {
                    violations.push((i, j));
                }
            }
        }
    }
    SubspacePreservation {
        holds: violations.is_empty(),
        violations,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionRecord {
    pub j: usize,
    pub subspace: usize,
    /// `max_{k≠j, x_k∈S_l} |⟨x_k, δ̄_j⟩|`, also called `κ_j`.
    pub inlier_term: f64,
    /// `max_{x_k∉S_l} |⟨x_k, δ̄_j⟩|`; zero when every point is in `S_l`.
    pub outlier_term: f64,
    pub margin: f64,
    /// `(1 − λ) / λ`.
    pub threshold: f64,
    pub eq6_holds: bool,
    /// `max_{x_k∉S_l} |⟨x_k, δ_j⟩|` with the unnormalized oracle point.
    pub lemma_a1_value: f64,
    /// `lemma_a1_value < λ`.
    pub lemma_a1_holds: bool,
    pub delta_norm: f64,
    /// `(λκ_j + 1 − λ) / κ_j²`.
    pub kappa_bound: f64,
    pub kappa_bound_ok: bool,
}

/// Evaluates the oracle-point margin condition for inlier `j`.
pub fn check_theorem1_condition(
    x: &DataMatrix,
    labels: &[Label],
    params: &SolverParams,
    j: usize,
) -> Result<ConditionRecord, SolverError> {
    let oracle = solve_oracle(x, labels, j, params)?;
    let subspace = labels[j].subspace().ok_or(SolverError::NotAnInlier(j))?;
    let lambda = params.lambda;

    let others: Vec<usize> = (0..x.n_points())
        .filter(|&k| labels[k] != Label::Inlier(subspace))
        .collect();
    let outlier_term = others
        .iter()
        .map(|&k| x.column(k).dot(&oracle.delta_unit).abs())
        .fold(0.0, f64::max);
    let delta_norm = oracle.delta.norm();
    let lemma_a1_value = outlier_term * delta_norm;

    let inlier_term = oracle.kappa;
    let margin = inlier_term - outlier_term;
    let threshold = (1.0 - lambda) / lambda;
    let kappa_bound = oracle.delta_norm_bound(lambda);

    Ok(ConditionRecord {
        j,
        subspace,
        inlier_term,
        outlier_term,
        margin,
        threshold,
        eq6_holds: margin > threshold,
        lemma_a1_value,
        lemma_a1_holds: lemma_a1_value < lambda,
        delta_norm,
        kappa_bound,
        kappa_bound_ok: oracle.delta_norm_bound_holds(lambda),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub records: Vec<ConditionRecord>,
    /// Fraction of inliers for which the margin condition holds.
    pub fraction_passing: f64,
    pub all_pass: bool,
}

impl ConditionReport {
    /// The margin condition should imply the Lemma A.1 inequality.
    pub fn implication_violations(&self) -> Vec<usize> {
        self.records
            .iter()
            .filter(|r| r.eq6_holds && !r.lemma_a1_holds)
            .map(|r| r.j)
            .collect()
    }
}

/// Runs [`check_theorem1_condition`] for every inlier.
pub fn check_all_inliers(
    x: &DataMatrix,
    labels: &[Label],
    params: &SolverParams,
) -> Result<ConditionReport, SolverError> {
    let inliers: Vec<usize> = (0..labels.len())
        .filter(|&j| !labels[j].is_outlier())
        .collect();
    let records = inliers
        .par_iter()
        .map(|&j| check_theorem1_condition(x, labels, params, j))
        .collect::<Result<Vec<_>, _>>()?;
    let passing = records.iter().filter(|r| r.eq6_holds).count();
    let fraction_passing = if records.is_empty() {
        1.0
    } else {
        passing as f64 / records.len() as f64
    };
    Ok(ConditionReport {
        all_pass: passing == records.len(),
        fraction_passing,
        records,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubspaceConnectivity {
    pub subspace: usize,
    pub n_points: usize,
    pub strongly_connected: bool,
    /// Members whose representation column is entirely zero.
    pub dangling: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub subspaces: Vec<SubspaceConnectivity>,
    /// Every subspace is strongly connected and has no dangling member.
    pub inliers_connected: bool,
    /// No set of outliers is closed under outgoing edges.
    pub outliers_escape: bool,
    /// Closed sets made only of outliers (sink components of the graph).
    pub outlier_witnesses: Vec<Vec<usize>>,
    pub subspace_preserving: SubspacePreservation,
}

impl AssumptionReport {
    pub fn all_hold(&self) -> bool {
        self.inliers_connected && self.outliers_escape && self.subspace_preserving.holds
    }
}

/// Representation graph adjacency: `j → i` whenever `r_ij ≠ 0`.
pub fn representation_graph(r: &RepresentationMatrix) -> Vec<Vec<usize>> {
    r.columns()
        .iter()
        .map(|col| {
            col.iter()
                .filter(|&&(_, v)| v != 0.0)
                .map(|&(i, _)| i)
                .collect()
        })
        .collect()
}

pub fn check_assumptions(r: &RepresentationMatrix, labels: &[Label]) -> AssumptionReport {
    let adj = representation_graph(r);

    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (j, l) in labels.iter().enumerate() {
        if let Label::Inlier(s) = l {
            groups.entry(*s).or_default().push(j);
        }
    }
    let subspaces: Vec<SubspaceConnectivity> = groups
        .into_iter()
        .map(|(subspace, members)| {
            let sub = induced_subgraph(&adj, &members);
            let dangling: Vec<usize> = members
                .iter()
                .copied()
                .filter(|&v| adj[v].is_empty())
                .collect();
            SubspaceConnectivity {
                subspace,
                n_points: members.len(),
                strongly_connected: tarjan_scc(&sub).len() == 1 && dangling.is_empty(),
                dangling,
            }
        })
        .collect();

    let comps = tarjan_scc(&adj);
    let outlier_witnesses: Vec<Vec<usize>> = (0..comps.len())
        .filter(|&c| {
            comps.components[c].iter().all(|&v| labels[v].is_outlier()) && comps.is_sink(c, &adj)
        })
        .map(|c| comps.components[c].clone())
        .collect();

    AssumptionReport {
        inliers_connected: subspaces.iter().all(|s| s.strongly_connected),
        subspaces,
        outliers_escape: outlier_witnesses.is_empty(),
        outlier_witnesses,
        subspace_preserving: check_subspace_preserving(r, labels),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::normalize_columns;
    use nalgebra::DMatrix;

    const IN1: Label = Label::Inlier(1);
    const OUT: Label = Label::Outlier;

    fn rmat(n: usize, entries: &[(usize, usize, f64)]) -> RepresentationMatrix {
        let mut d = DMatrix::zeros(n, n);
        for &(i, j, v) in entries {
            d[(i, j)] = v;
        }
        RepresentationMatrix::from_dense(&d)
    }

    #[test]
    fn preserving_with_outlier_column_exempt() {
        // r_1 = [0, .4, 0], r_2 = [.3, 0, 0], r_3 = [.2, .1, 0]
        let r = rmat(3, &[(1, 0, 0.4), (0, 1, 0.3), (0, 2, 0.2), (1, 2, 0.1)]);
        let labels = [IN1, IN1, OUT];
        assert!(check_subspace_preserving(&r, &labels).holds);

        let r = rmat(
            3,
            &[
                (1, 0, 0.4),
                (2, 0, 0.05),
                (0, 1, 0.3),
                (0, 2, 0.2),
                (1, 2, 0.1),
            ],
        );
        let sp = check_subspace_preserving(&r, &labels);
        assert!(!sp.holds);
        assert_eq!(sp.violations, vec![(2, 0)]);

        assert!(check_subspace_preserving(&rmat(3, &[]), &labels).holds);
    }

    #[test]
    fn theorem1_single_atom() {
        let x = normalize_columns(
            &DataMatrix::from_columns(&[vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0]]).unwrap(),
        )
        .unwrap();
        let labels = [IN1, IN1, OUT];
        let params = SolverParams::new(0.95, 5.0).with_gamma(10.0);
        let rec = check_theorem1_condition(&x, &labels, &params, 0).unwrap();
        assert!((rec.inlier_term - 1.0).abs() < 1e-12);
        assert!(rec.outlier_term.abs() < 1e-12);
        assert!((rec.threshold - 0.05 / 0.95).abs() < 1e-15);
        assert!(rec.eq6_holds && rec.lemma_a1_holds && rec.kappa_bound_ok);
    }

    #[test]
    fn theorem1_tilted_outlier() {
        let s = 0.5f64.sqrt();
        let x = normalize_columns(
            &DataMatrix::from_columns(&[vec![1.0, 0.0], vec![-1.0, 0.0], vec![s, s]]).unwrap(),
        )
        .unwrap();
        let labels = [IN1, IN1, OUT];
        let params = SolverParams::new(0.95, 5.0).with_gamma(10.0);
        let rec = check_theorem1_condition(&x, &labels, &params, 0).unwrap();
        assert!((rec.outlier_term - s).abs() < 1e-12);
        assert!((rec.margin - (1.0 - s)).abs() < 1e-12);
        assert!(rec.eq6_holds);
    }

    #[test]
    fn threshold_vanishes_as_lambda_tends_to_one() {
        let s = 0.5f64.sqrt();
        let x = normalize_columns(
            &DataMatrix::from_columns(&[vec![1.0, 0.0], vec![-1.0, 0.0], vec![s, s]]).unwrap(),
        )
        .unwrap();
        let labels = [IN1, IN1, OUT];
        let rec = check_theorem1_condition(
            &x,
            &labels,
            &SolverParams::new(1.0, 5.0).with_gamma(10.0),
            0,
        )
        .unwrap();
        assert_eq!(rec.threshold, 0.0);
        assert!(rec.eq6_holds);
    }

    #[test]
    fn assumption_one() {
        let labels = [IN1, IN1];
        let both = check_assumptions(&rmat(2, &[(1, 0, 0.5), (0, 1, 0.5)]), &labels);
        assert!(both.inliers_connected);
        // Only the edge 0 -> 1.
        let one = check_assumptions(&rmat(2, &[(1, 0, 0.5)]), &labels);
        assert!(!one.inliers_connected);
        assert_eq!(one.subspaces[0].subspace, 1);
        assert!(!one.subspaces[0].strongly_connected);
    }

    #[test]
    fn assumption_two_witness() {
        let labels = [IN1, IN1, OUT, OUT];
        let r = rmat(4, &[(1, 0, 0.5), (0, 1, 0.5), (3, 2, 0.5), (2, 3, 0.5)]);
        let rep = check_assumptions(&r, &labels);
        assert!(!rep.outliers_escape);
        assert_eq!(rep.outlier_witnesses, vec![vec![2, 3]]);

        let r = rmat(
            4,
            &[
                (1, 0, 0.5),
                (0, 1, 0.5),
                (3, 2, 0.5),
                (2, 3, 0.5),
                (0, 3, 0.1),
            ],
        );
        let rep = check_assumptions(&r, &labels);
        assert!(rep.outliers_escape);
        assert!(rep.all_hold());
    }
}
