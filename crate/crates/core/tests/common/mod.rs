#![allow(dead_code)]

use crsp::graph::{connected_components, ViewAffinity};
use crsp::RspInputs;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random recursive spanning tree plus extra edges with probability `extra`.
/// Weights are 1 when `weighted` is false, else uniform in [0.2, 5).
pub fn random_connected_view(rng: &mut ChaCha8Rng, n: usize, extra: f64, weighted: bool) -> ViewAffinity {
    let mut a = DMatrix::zeros(n, n);
    let weight = |rng: &mut ChaCha8Rng| if weighted { rng.random_range(0.2..5.0) } else { 1.0 };
    for i in 1..n {
        let j = rng.random_range(0..i);
        let w = weight(rng);
        a[(i, j)] = w;
        a[(j, i)] = w;
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if a[(i, j)] == 0.0 && rng.random::<f64>() < extra {
                let w = weight(rng);
                a[(i, j)] = w;
                a[(j, i)] = w;
            }
        }
    }
    let view = ViewAffinity::from_matrix(a);
    assert_eq!(connected_components(view.weights()).1, 1);
    view
}

/// Random connected view on a random node count in `lo..=hi`.
pub fn random_graph(rng: &mut ChaCha8Rng, lo: usize, hi: usize, weighted: bool) -> ViewAffinity {
    let n = rng.random_range(lo..=hi);
    let extra = rng.random_range(0.0..0.3);
    random_connected_view(rng, n, extra, weighted)
}

pub fn max_relative_difference(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| {
            let scale = x.abs().max(y.abs());
            if scale == 0.0 {
                0.0
            } else {
                (x - y).abs() / scale
            }
        })
        .fold(0.0, f64::max)
}

pub fn max_abs_difference(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).abs().max()
}

/// Expected cost of absorbing walks s → t under the Gibbs weights
/// `W = P ∘ exp(-β C)`, by explicit depth-first enumeration of walks that
/// reach `t` only at their last step.
///
/// A branch is cut once its weight drops below `cutoff`; everything below
/// it is bounded with the max row sum `q` of `W`, so the returned `bound`
/// certifies `|exact - estimate|` for every pair.
pub struct EnumeratedCosts {
    pub expected: DMatrix<f64>,
    pub bound: f64,
    pub min_depth_reached: usize,
}

pub fn enumerate_expected_costs(inputs: &RspInputs, beta: f64, cutoff: f64, min_depth: usize) -> EnumeratedCosts {
    let n = inputs.n();
    let p = inputs.transition();
    let c = inputs.cost().dense();
    let w = DMatrix::from_fn(n, n, |i, j| if p[(i, j)] > 0.0 { p[(i, j)] * (-beta * c[(i, j)]).exp() } else { 0.0 });
    let q = w.row_iter().map(|r| r.sum()).fold(0.0, f64::max);
    assert!(q < 1.0);
    let c_max = c.max();
    let mut expected = DMatrix::zeros(n, n);
    let mut bound: f64 = 0.0;
    let mut min_depth_reached = usize::MAX;

    struct Acc {
        weight: f64,
        weighted_cost: f64,
        cut_weight: f64,
        cut_weighted_cost: f64,
        shallowest_cut: usize,
    }

    #[allow(clippy::too_many_arguments)]
    fn walk(
        w: &DMatrix<f64>,
        c: &DMatrix<f64>,
        node: usize,
        target: usize,
        weight: f64,
        cost: f64,
        depth: usize,
        q: f64,
        c_max: f64,
        cutoff: f64,
        min_depth: usize,
        acc: &mut Acc,
    ) {
        for next in 0..w.ncols() {
            let step = w[(node, next)];
            if step == 0.0 {
                continue;
            }
            let nw = weight * step;
            let nc = cost + c[(node, next)];
            if next == target {
                acc.weight += nw;
                acc.weighted_cost += nw * nc;
                continue;
            }
            if nw < cutoff && depth + 1 >= min_depth {
                // every continuation from `next` has total weight ≤ nw Σ q^k
                // and adds at most k·c_max to the cost
                acc.cut_weight += nw / (1.0 - q);
                acc.cut_weighted_cost += nw * (nc / (1.0 - q) + c_max * q / ((1.0 - q) * (1.0 - q)));
                acc.shallowest_cut = acc.shallowest_cut.min(depth + 1);
                continue;
            }
            walk(w, c, next, target, nw, nc, depth + 1, q, c_max, cutoff, min_depth, acc);
        }
    }

    for s in 0..n {
        for t in 0..n {
            if s == t {
                continue;
            }
            let mut acc = Acc {
                weight: 0.0,
                weighted_cost: 0.0,
                cut_weight: 0.0,
                cut_weighted_cost: 0.0,
                shallowest_cut: usize::MAX,
            };
            walk(&w, c, s, t, 1.0, 0.0, 0, q, c_max, cutoff, min_depth, &mut acc);
            let estimate = acc.weighted_cost / acc.weight;
            // true value is (A + a) / (B + b) with 0 ≤ a ≤ cut_weighted_cost, 0 ≤ b ≤ cut_weight
            let err = (acc.cut_weighted_cost / acc.weight).max(estimate * acc.cut_weight / acc.weight);
            bound = bound.max(err);
            min_depth_reached = min_depth_reached.min(acc.shallowest_cut);
            expected[(s, t)] = estimate;
        }
    }
    EnumeratedCosts {
        expected,
        bound,
        min_depth_reached,
    }
}
