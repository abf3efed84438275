//! Generators and brute-force oracles shared by the integration tests and
//! the acceptance harness.
#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rgraph_core::dataset::Label;
use rgraph_core::elasticnet::RepresentationMatrix;
use rgraph_core::graph::TransitionMatrix;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Normalizes weighted edges into a stochastic row.
fn row_from_weights(mut edges: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
    edges.sort_by_key(|&(j, _)| j);
    edges.dedup_by(|a, b| {
        if a.0 == b.0 {
            b.1 += a.1;
            true
        } else {
            false
        }
    });
    let total: f64 = edges.iter().map(|&(_, w)| w).sum();
    edges.into_iter().map(|(j, w)| (j, w / total)).collect()
}

/// Random chain with `n` states made of closed classes plus at least one
/// inessential state, with states shuffled. Each closed class is a cycle
/// with extra internal edges (so it is strongly connected); every
/// inessential state has an edge towards the closed classes or towards an
/// inessential state closer to them, plus optional edges back among the
/// inessential states.
pub fn random_chain_with_inessential(
    rng: &mut impl Rng,
    n: usize,
    max_out: usize,
) -> TransitionMatrix {
    assert!(n >= 2);
    let n_in = rng.random_range(1..=(n / 2).max(1));
    let n_closed = n - n_in;
    let n_classes = rng.random_range(1..=n_closed.min(4));
    // Class sizes: split n_closed into n_classes nonempty parts.
    let mut cuts: Vec<usize> = (1..n_closed).collect();
    cuts.shuffle(rng);
    let mut cuts: Vec<usize> = cuts.into_iter().take(n_classes - 1).collect();
    cuts.sort_unstable();
    let mut bounds = vec![0];
    bounds.extend(cuts);
    bounds.push(n_closed);

    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let mut rows = vec![Vec::new(); n];
    let weight = |rng: &mut dyn rand::RngCore| rng.random_range(0.1..1.0);

    for w in bounds.windows(2) {
        let (a, b) = (w[0], w[1]);
        let size = b - a;
        for k in a..b {
            let mut edges = vec![(perm[a + (k - a + 1) % size], weight(rng))];
            for _ in 0..rng.random_range(0..max_out) {
                edges.push((perm[rng.random_range(a..b)], weight(rng)));
            }
            rows[perm[k]] = row_from_weights(edges);
        }
    }
    for k in n_closed..n {
        // Exit edge: to a closed state or an earlier inessential state.
        let exit = rng.random_range(0..k);
        let mut edges = vec![(perm[exit], weight(rng))];
        for _ in 0..rng.random_range(0..max_out) {
            edges.push((perm[rng.random_range(0..n)], weight(rng)));
        }
        rows[perm[k]] = row_from_weights(edges);
    }
    TransitionMatrix::from_rows(rows)
}

/// Random chain on `n` states where each entry is positive with
/// probability `density`; empty rows get a self-loop.
pub fn random_sparse_chain(rng: &mut impl Rng, n: usize, density: f64) -> TransitionMatrix {
    let rows = (0..n)
        .map(|i| {
            let mut edges: Vec<(usize, f64)> = Vec::new();
            for j in 0..n {
                if rng.random_bool(density) {
                    edges.push((j, rng.random_range(0.05..1.0)));
                }
            }
            if edges.is_empty() {
                edges.push((i, 1.0));
            }
            row_from_weights(edges)
        })
        .collect();
    TransitionMatrix::from_rows(rows)
}

/// Strongly connected chain on `n` states (a cycle plus random chords).
pub fn random_irreducible_chain(rng: &mut impl Rng, n: usize, extra: usize) -> TransitionMatrix {
    let rows = (0..n)
        .map(|i| {
            let mut edges = vec![((i + 1) % n, rng.random_range(0.1..1.0))];
            for _ in 0..extra {
                edges.push((rng.random_range(0..n), rng.random_range(0.1..1.0)));
            }
            row_from_weights(edges)
        })
        .collect();
    TransitionMatrix::from_rows(rows)
}

/// `reach[i][j]`: `j` is reachable from `i` in zero or more steps.
pub fn reachability(p: &TransitionMatrix) -> Vec<Vec<bool>> {
    let n = p.n();
    let mut reach = vec![vec![false; n]; n];
    for (i, row) in reach.iter_mut().enumerate() {
        row[i] = true;
        for &(j, w) in p.row(i) {
            if w > 0.0 {
                row[j] = true;
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            if reach[i][k] {
                for j in 0..n {
                    if reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    reach
}

/// Brute-force classification: `i` is essential iff every state reachable
/// from `i` can reach `i` back. Returns the essential flags and the closed
/// classes (mutual-reachability classes of essential states), each sorted,
/// ordered by smallest member.
pub fn brute_force_classes(p: &TransitionMatrix) -> (Vec<bool>, Vec<Vec<usize>>) {
    let reach = reachability(p);
    let n = p.n();
    let essential: Vec<bool> = (0..n)
        .map(|i| (0..n).all(|j| !reach[i][j] || reach[j][i]))
        .collect();
    let mut classes: Vec<Vec<usize>> = Vec::new();
    let mut assigned = vec![false; n];
    for i in 0..n {
        if essential[i] && !assigned[i] {
            let class: Vec<usize> = (i..n).filter(|&j| reach[i][j] && reach[j][i]).collect();
            for &j in &class {
                assigned[j] = true;
            }
            classes.push(class);
        }
    }
    (essential, classes)
}

/// Samples the next state of a walk.
pub fn step(p: &TransitionMatrix, i: usize, rng: &mut impl Rng) -> usize {
    let row = p.row(i);
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for &(j, w) in row {
        acc += w;
        if u < acc {
            return j;
        }
    }
    row.last().expect("nonempty row").0
}

/// Labels for `groups` subspaces of the given sizes followed by `outliers`
/// outliers.
pub fn block_labels(groups: &[usize], outliers: usize) -> Vec<Label> {
    let mut labels = Vec::new();
    for (g, &size) in groups.iter().enumerate() {
        labels.extend(std::iter::repeat_n(Label::Inlier(g + 1), size));
    }
    labels.extend(std::iter::repeat_n(Label::Outlier, outliers));
    labels
}

/// Representation matrix that is subspace preserving by construction:
/// each inlier uses the next member of its group (a cycle, so every group
/// is strongly connected) plus random members of the same group; each
/// outlier uses random points of any kind. Labels are shuffled together
/// with the points.
pub fn random_subspace_preserving_r(
    rng: &mut impl Rng,
    groups: &[usize],
    outliers: usize,
    outlier_to_inlier_prob: f64,
) -> (RepresentationMatrix, Vec<Label>) {
    let base = block_labels(groups, outliers);
    let n = base.len();
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let mut labels = vec![Label::Outlier; n];
    for (old, &new) in perm.iter().enumerate() {
        labels[new] = base[old];
    }
    let members: Vec<Vec<usize>> = (1..=groups.len())
        .map(|g| (0..n).filter(|&j| labels[j] == Label::Inlier(g)).collect())
        .collect();
    let outlier_idx: Vec<usize> = (0..n).filter(|&j| labels[j].is_outlier()).collect();
    let inlier_idx: Vec<usize> = (0..n).filter(|&j| !labels[j].is_outlier()).collect();

    let coef = |rng: &mut dyn rand::RngCore| {
        let v: f64 = rng.random_range(0.05..1.0);
        if rng.random_bool(0.5) {
            v
        } else {
            -v
        }
    };
    let mut r = DMatrix::zeros(n, n);
    for m in &members {
        for (k, &j) in m.iter().enumerate() {
            if m.len() < 2 {
                continue;
            }
            r[(m[(k + 1) % m.len()], j)] = coef(rng);
            for _ in 0..rng.random_range(0..3) {
                let i = m[rng.random_range(0..m.len())];
                if i != j {
                    r[(i, j)] = coef(rng);
                }
            }
        }
    }
    for &j in &outlier_idx {
        let mut used = 0;
        if rng.random_bool(outlier_to_inlier_prob) {
            r[(inlier_idx[rng.random_range(0..inlier_idx.len())], j)] = coef(rng);
            used += 1;
        }
        for _ in 0..rng.random_range(0..3) {
            let i = rng.random_range(0..n);
            if i != j {
                r[(i, j)] = coef(rng);
                used += 1;
            }
        }
        if used == 0 {
            let others: Vec<usize> = (0..n).filter(|&i| i != j).collect();
            r[(others[rng.random_range(0..others.len())], j)] = coef(rng);
        }
    }
    (RepresentationMatrix::from_dense(&r), labels)
}

pub fn l1_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// AUC by counting every (outlier, inlier) pair: 2 for a correctly ordered
/// pair (outlier lower), 1 for a tie.
pub fn auc_pairwise(scores: &[f64], labels: &[Label]) -> f64 {
    let mut twice = 0u64;
    let mut pairs = 0u64;
    for (o, lo) in labels.iter().enumerate() {
        if !lo.is_outlier() {
            continue;
        }
        for (i, li) in labels.iter().enumerate() {
            if li.is_outlier() {
                continue;
            }
            pairs += 1;
            if scores[o] < scores[i] {
                twice += 2;
            } else if scores[o] == scores[i] {
                twice += 1;
            }
        }
    }
    twice as f64 / (2 * pairs) as f64
}

/// Best F1 over the N+1 thresholds {−∞} ∪ {scores}, computing each F1 from
/// scratch.
pub fn best_f1_exhaustive(scores: &[f64], labels: &[Label]) -> f64 {
    std::iter::once(f64::NEG_INFINITY)
        .chain(scores.iter().copied())
        .map(|t| {
            let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
            for (&s, l) in scores.iter().zip(labels) {
                match (s <= t, l.is_outlier()) {
                    (true, true) => tp += 1,
                    (true, false) => fp += 1,
                    (false, true) => fn_ += 1,
                    _ => {}
                }
            }
            if tp == 0 {
                0.0
            } else {
                (2 * tp) as f64 / (2 * tp + fp + fn_) as f64
            }
        })
        .fold(0.0, f64::max)
}

/// Random labels with both classes and scores drawn from a few levels, so
/// that ties are common.
pub fn random_metric_instance(rng: &mut impl Rng, max_n: usize) -> (Vec<f64>, Vec<Label>) {
    let n = rng.random_range(2..=max_n);
    let n_out = rng.random_range(1..n);
    let mut labels: Vec<Label> = (0..n)
        .map(|k| {
            if k < n_out {
                Label::Outlier
            } else {
                Label::Inlier(1)
            }
        })
        .collect();
    labels.shuffle(rng);
    let levels = rng.random_range(1..=n + 2);
    let scores = (0..n)
        .map(|_| rng.random_range(0..levels) as f64 / levels as f64)
        .collect();
    (scores, labels)
}

/// Simulates `walks` walks from every inessential state of `chains` random
/// chains with `n` states and compares absorption frequencies with the
/// analytic hitting probabilities at three standard errors. Returns the
/// number of (state, class) comparisons made.
pub fn monte_carlo_hitting(
    seed: u64,
    chains: usize,
    n: usize,
    walks: usize,
) -> Result<usize, String> {
    use rgraph_core::markov::{analytic_cesaro_limit, StateClass};
    let mut rng = rng(seed);
    let mut checked = 0;
    for chain in 0..chains {
        let p = random_chain_with_inessential(&mut rng, n, 3);
        let limit = analytic_cesaro_limit(&p, None).map_err(|e| e.to_string())?;
        let d = &limit.decomposition;
        for (r, &start) in d.inessential.iter().enumerate() {
            let mut counts = vec![0usize; d.closed_classes.len()];
            for _ in 0..walks {
                let mut s = start;
                while !d.is_essential(s) {
                    s = step(&p, s, &mut rng);
                }
                if let StateClass::Closed(c) = d.class_of[s] {
                    counts[c] += 1;
                }
            }
            for (c, &count) in counts.iter().enumerate() {
                let f = limit.hitting[r][c];
                let freq = count as f64 / walks as f64;
                let fc = f.clamp(0.0, 1.0);
                let se = (fc * (1.0 - fc) / walks as f64).sqrt();
                if (freq - f).abs() > 3.0 * se + 1e-12 {
                    return Err(format!(
                        "chain {chain}, start {start}, class {c}: frequency {freq} vs {f} (se {se:e})"
                    ));
                }
                checked += 1;
            }
        }
    }
    Ok(checked)
}

/// For irreducible random chains of each size, compares the simulated mean
/// return time of every state (over `returns` returns) with `1/π_j` at
/// three standard errors. Returns the number of states checked.
pub fn monte_carlo_return_times(
    seed: u64,
    sizes: &[usize],
    returns: usize,
) -> Result<usize, String> {
    use rgraph_core::markov::analytic_cesaro_limit;
    let mut rng = rng(seed);
    let mut checked = 0;
    for &n in sizes {
        let p = random_irreducible_chain(&mut rng, n, 2);
        let pi = analytic_cesaro_limit(&p, None)
            .map_err(|e| e.to_string())?
            .pi_star;
        for (j, &pj) in pi.iter().enumerate() {
            let (mut sum, mut sum_sq) = (0.0f64, 0.0f64);
            for _ in 0..returns {
                let mut s = step(&p, j, &mut rng);
                let mut t = 1.0;
                while s != j {
                    s = step(&p, s, &mut rng);
                    t += 1.0;
                }
                sum += t;
                sum_sq += t * t;
            }
            let k = returns as f64;
            let mean = sum / k;
            let var = (sum_sq / k - mean * mean) * k / (k - 1.0);
            let se = (var / k).sqrt();
            if (mean - 1.0 / pj).abs() > 3.0 * se + 1e-12 {
                return Err(format!(
                    "n={n}, state {j}: mean return time {mean} vs {} (se {se})",
                    1.0 / pj
                ));
            }
            checked += 1;
        }
    }
    Ok(checked)
}
