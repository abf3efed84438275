mod common;

use proptest::prelude::*;
use rand::Rng;

use rgraph_core::dataset::{generate_synthetic, GenConfig};
use rgraph_core::elasticnet::{self_representation, SelfRepresentation, SolverParams};
use rgraph_core::graph::{transition_matrix, DanglingPolicy};
use rgraph_core::markov::decompose;
use rgraph_core::theory::{
    check_all_inliers, check_assumptions, check_subspace_preserving, check_theorem1_condition,
};

fn inliers(labels: &[rgraph_core::Label]) -> Vec<usize> {
    (0..labels.len())
        .filter(|&j| !labels[j].is_outlier())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    /// Whenever the structural assumptions hold, the essential states are
    /// exactly the inliers.
    #[test]
    fn soundness_on_constructed_representations(
        seed in any::<u64>(),
        groups in proptest::collection::vec(2usize..8, 1..4),
        outliers in 0usize..6,
        escape in 0.0..=1.0f64,
    ) {
        let (r, labels) = common::random_subspace_preserving_r(&mut common::rng(seed), &groups, outliers, escape);
        prop_assert!(check_subspace_preserving(&r, &labels).holds);
        let report = check_assumptions(&r, &labels);
        let p = transition_matrix(&r, DanglingPolicy::Uniform).unwrap();
        let essential = decompose(&p).essential_states();
        if report.all_hold() {
            prop_assert_eq!(essential, inliers(&labels));
        } else {
            // Assumption 1 holds by construction, so only a closed set of
            // outliers can break it, and such a set is essential.
            prop_assert!(!report.outliers_escape);
            prop_assert!(essential.iter().any(|&j| labels[j].is_outlier()));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn soundness_on_solved_representations(seed in any::<u64>(), outliers in 1usize..6, alpha in 2.0..20.0f64) {
        let ds = generate_synthetic(&GenConfig {
            ambient_dim: 30,
            subspace_dims: vec![3, 3],
            points_per_subspace: vec![12, 12],
            outlier_count: outliers,
            seed,
        })
        .unwrap();
        let r = self_representation(&ds.data, &SolverParams::new(0.95, alpha)).unwrap();
        let report = check_assumptions(&r, &ds.labels);
        if report.all_hold() {
            let p = transition_matrix(&r, DanglingPolicy::Uniform).unwrap();
            prop_assert_eq!(decompose(&p).essential_states(), inliers(&ds.labels));
        }
    }

    /// The margin condition implies the correlation bound on every record.
    #[test]
    fn margin_condition_implies_correlation_bound(seed in any::<u64>(), lambda in 0.6..0.99f64, alpha in 1.5..30.0f64) {
        let ds = generate_synthetic(&GenConfig {
            ambient_dim: 15,
            subspace_dims: vec![2, 3],
            points_per_subspace: vec![8, 10],
            outlier_count: 4,
            seed,
        })
        .unwrap();
        let report = check_all_inliers(&ds.data, &ds.labels, &SolverParams::new(lambda, alpha)).unwrap();
        prop_assert!(report.implication_violations().is_empty());
        prop_assert!(report.records.iter().all(|r| r.kappa_bound_ok));
    }
}

/// Whenever the correlation bound holds for inlier `j`, the solved column
/// `r_j` uses only points of `j`'s subspace. 1000 random trials.
#[test]
fn correlation_bound_implies_subspace_preserving_column() {
    let mut rng = common::rng(1);
    let (mut trials, mut held) = (0, 0);
    while trials < 1000 {
        let d = rng.random_range(6..20);
        let dims = vec![rng.random_range(1..4), rng.random_range(1..4)];
        let cfg = GenConfig {
            ambient_dim: d,
            points_per_subspace: dims.iter().map(|&k| k + rng.random_range(1..6)).collect(),
            subspace_dims: dims,
            outlier_count: rng.random_range(0..5),
            seed: rng.random(),
        };
        let ds = generate_synthetic(&cfg).unwrap();
        let params = SolverParams::new(rng.random_range(0.5..0.99), rng.random_range(1.2..40.0));
        let candidates = inliers(&ds.labels);
        let j = candidates[rng.random_range(0..candidates.len())];
        let record = match check_theorem1_condition(&ds.data, &ds.labels, &params, j) {
            Ok(r) => r,
            // Orthogonal points have no coherence to scale gamma by.
            Err(_) => continue,
        };
        trials += 1;
        if record.lemma_a1_holds {
            held += 1;
            let col = SelfRepresentation::new(&ds.data, params)
                .unwrap()
                .solve_column(j)
                .unwrap();
            for &(i, v) in &col.coeffs {
                assert_eq!(
                    ds.labels[i], ds.labels[j],
                    "trial {trials}: r[{i},{j}] = {v:e} crosses subspaces (bound value {} < {})",
                    record.lemma_a1_value, params.lambda
                );
            }
        }
    }
    assert!(held >= 100, "only {held} trials satisfied the bound");
}
