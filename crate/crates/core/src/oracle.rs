//! Reference distances for the two limits of the RSP dissimilarity, computed
//! along routes independent of the fundamental-matrix formula.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::graph::{transition_matrix, CostMatrix, RspInputs, ViewAffinity};

#[derive(Debug, Clone, Copy, PartialEq)]
struct Candidate {
    cost: f64,
    node: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on cost
        other.cost.total_cmp(&self.cost).then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// All-pairs minimal path costs, Dijkstra from every source over the edges
/// where a cost is defined. Unreachable pairs are `+inf`.
pub fn shortest_path_oracle(inputs: &RspInputs) -> DMatrix<f64> {
    shortest_paths(inputs.cost())
}

pub fn shortest_paths(cost: &CostMatrix) -> DMatrix<f64> {
    let n = cost.n();
    let mut out = DMatrix::from_element(n, n, f64::INFINITY);
    for source in 0..n {
        let mut dist = vec![f64::INFINITY; n];
        let mut heap = BinaryHeap::new();
        dist[source] = 0.0;
        heap.push(Candidate { cost: 0.0, node: source });
        while let Some(Candidate { cost: d, node: u }) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            for v in 0..n {
                if let Some(c) = cost.get(u, v) {
                    let next = d + c;
                    if next < dist[v] {
                        dist[v] = next;
                        heap.push(Candidate { cost: next, node: v });
                    }
                }
            }
        }
        for (t, d) in dist.into_iter().enumerate() {
            out[(source, t)] = d;
        }
    }
    out
}

/// Expected cost of the unbiased walk `P` from `s` until it first reaches
/// `t`, for every ordered pair (zero diagonal, not symmetrized).
///
/// Per target `t` this solves the first-step equations
/// `h = r + Q h`, with `Q` the transition matrix with row and column `t`
/// removed and `r_i = Σ_j P_ij c_ij` the expected one-step cost.
pub fn hitting_costs(inputs: &RspInputs) -> Result<DMatrix<f64>> {
    let n = inputs.n();
    let p = inputs.transition();
    let c = inputs.cost().dense();
    let step: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| p[(i, j)] * c[(i, j)]).sum())
        .collect();
    let mut out = DMatrix::zeros(n, n);
    for t in 0..n {
        let keep: Vec<usize> = (0..n).filter(|&i| i != t).collect();
        let k = keep.len();
        let system = DMatrix::from_fn(k, k, |a, b| {
            let identity = if a == b { 1.0 } else { 0.0 };
            identity - p[(keep[a], keep[b])]
        });
        let rhs = DVector::from_iterator(k, keep.iter().map(|&i| step[i]));
        let h = system.lu().solve(&rhs).ok_or_else(|| Error::Numeric {
            stage: "hitting-cost oracle",
            detail: format!("first-step system for target {t} is singular"),
        })?;
        for (a, &s) in keep.iter().enumerate() {
            out[(s, t)] = h[a];
        }
    }
    Ok(out)
}

/// Symmetrized hitting costs `(h[s,t] + h[t,s]) / 2`, the small-β reference.
pub fn expected_cost_oracle(inputs: &RspInputs) -> Result<DMatrix<f64>> {
    let h = hitting_costs(inputs)?;
    Ok((&h + h.transpose()) * 0.5)
}

/// Symmetrized expected step counts of the unbiased walk on `view`, i.e.
/// half the commute time.
pub fn commute_time_oracle(view: &ViewAffinity) -> Result<DMatrix<f64>> {
    let p = transition_matrix(view)?;
    let cost = CostMatrix::unit_on_support(&p);
    expected_cost_oracle(&RspInputs::new(p, cost)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_inputs(view: &ViewAffinity) -> RspInputs {
        RspInputs::from_view(view).unwrap()
    }

    #[test]
    fn shortest_paths_on_small_graphs() {
        let tri = ViewAffinity::from_edges(3, &[(0, 1), (1, 2), (0, 2)]);
        let d = shortest_path_oracle(&unit_inputs(&tri));
        assert_eq!(d, DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0]));

        let path = ViewAffinity::from_edges(3, &[(0, 1), (1, 2)]);
        assert_eq!(shortest_path_oracle(&unit_inputs(&path))[(0, 2)], 2.0);

        // costs 0.5, 0.5, 2 from affinities 2, 2, 0.5
        let weighted = ViewAffinity::from_weighted_edges(3, [(0, 1, 2.0), (1, 2, 2.0), (0, 2, 0.5)]);
        assert_eq!(shortest_path_oracle(&unit_inputs(&weighted))[(0, 2)], 1.0);
    }

    #[test]
    fn commute_time_on_paths() {
        let two = ViewAffinity::from_edges(2, &[(0, 1)]);
        assert!((commute_time_oracle(&two).unwrap()[(0, 1)] - 1.0).abs() < 1e-12);

        let three = ViewAffinity::from_edges(3, &[(0, 1), (1, 2)]);
        let d = commute_time_oracle(&three).unwrap();
        assert!((d[(0, 1)] - 2.0).abs() < 1e-12);
        assert!((d[(0, 2)] - 4.0).abs() < 1e-12);
        let h = hitting_costs(&unit_inputs(&three)).unwrap();
        assert!((h[(0, 1)] - 1.0).abs() < 1e-12);
        assert!((h[(1, 0)] - 3.0).abs() < 1e-12);
    }
}
