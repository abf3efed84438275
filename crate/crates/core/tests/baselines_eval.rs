mod common;

use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use rgraph_core::baselines::{l1_thresholding_scores, outrank_scores};
use rgraph_core::dataset::{normalize_columns, DataMatrix};
use rgraph_core::elasticnet::RepresentationMatrix;
use rgraph_core::eval::{auc, best_f1};
use rgraph_core::graph::DanglingPolicy;

fn permutation(rng: &mut impl Rng, n: usize) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    perm
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn outrank_is_a_contracting_distribution(seed in any::<u64>(), d in 2usize..10, n in 2usize..40, damping in 0.0..0.99f64) {
        let mut rng = common::rng(seed);
        let x = normalize_columns(&DataMatrix::new(DMatrix::from_fn(d, n, |_, _| rng.sample::<f64, _>(StandardNormal)))).unwrap();
        let out = outrank_scores(&x, damping, DanglingPolicy::Uniform).unwrap();
        let s = &out.scores.scores;
        prop_assert!(s.iter().all(|&v| v >= 0.0));
        prop_assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for w in out.residuals.windows(2) {
            prop_assert!(w[1] <= damping * w[0] * (1.0 + 1e-9) + 1e-15, "{} then {}", w[0], w[1]);
        }
    }

    #[test]
    fn baselines_are_permutation_equivariant(seed in any::<u64>(), d in 2usize..8, n in 2usize..30) {
        let mut rng = common::rng(seed);
        let x = DMatrix::from_fn(d, n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let perm = permutation(&mut rng, n);
        // Column perm[j] of the permuted data is column j of the original.
        let mut xp = DMatrix::zeros(d, n);
        for j in 0..n {
            xp.set_column(perm[j], &x.column(j));
        }
        let a = outrank_scores(&normalize_columns(&DataMatrix::new(x)).unwrap(), 0.85, DanglingPolicy::Uniform).unwrap();
        let b = outrank_scores(&normalize_columns(&DataMatrix::new(xp)).unwrap(), 0.85, DanglingPolicy::Uniform).unwrap();
        for j in 0..n {
            prop_assert!((a.scores.scores[j] - b.scores.scores[perm[j]]).abs() < 1e-12);
        }

        let r = DMatrix::from_fn(n, n, |i, j| if i != j && rng.random_bool(0.3) { rng.random_range(-2.0..2.0) } else { 0.0 });
        let mut rp = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                rp[(perm[i], perm[j])] = r[(i, j)];
            }
        }
        let a = l1_thresholding_scores(&RepresentationMatrix::from_dense(&r)).scores;
        let b = l1_thresholding_scores(&RepresentationMatrix::from_dense(&rp)).scores;
        // Same entries, summed in a different order.
        for j in 0..n {
            prop_assert!((a[j] - b[perm[j]]).abs() <= 1e-14 * a[j].abs().max(1.0));
        }
    }

    #[test]
    fn metrics_match_exhaustive_oracles(seed in any::<u64>()) {
        let (scores, labels) = common::random_metric_instance(&mut common::rng(seed), 12);
        prop_assert_eq!(auc(&scores, &labels).unwrap(), common::auc_pairwise(&scores, &labels));
        prop_assert_eq!(best_f1(&scores, &labels).unwrap().0, common::best_f1_exhaustive(&scores, &labels));
    }

    #[test]
    fn negating_untied_scores_complements_auc(seed in any::<u64>(), n in 2usize..40) {
        let mut rng = common::rng(seed);
        let (_, labels) = common::random_metric_instance(&mut rng, n);
        let scores: Vec<f64> = (0..labels.len()).map(|_| rng.random::<f64>()).collect();
        let neg: Vec<f64> = scores.iter().map(|v| -v).collect();
        let a = auc(&scores, &labels).unwrap();
        let b = auc(&neg, &labels).unwrap();
        prop_assert!((a + b - 1.0).abs() < 1e-15);
    }
}

#[test]
fn best_f1_threshold_reproduces_its_score() {
    let mut rng = common::rng(9);
    for _ in 0..200 {
        let (scores, labels) = common::random_metric_instance(&mut rng, 20);
        let (f1, threshold) = best_f1(&scores, &labels).unwrap();
        assert_eq!(rgraph_core::eval::f1_at(&scores, &labels, threshold), f1);
    }
}
