//! Common RSP over several views: fuse the per-view transition matrices by
//! an elementwise geometric mean, add up the per-view costs, and run the
//! single-view RSP computation on the fused pair.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{connected_components, cost_matrix, transition_matrix, CostMatrix, MultiViewGraph, RspInputs};
use crate::rsp::{rsp_dissimilarity, DissimilarityMatrix, RspParams};

/// How an edge missing from some views is treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FusionMode {
    /// An edge survives only if every view has it; the root is over all `m`
    /// views.
    Intersection,
    /// An edge survives if any view has it; the root and the cost sum run
    /// over the views that have it.
    #[default]
    Union,
}

impl fmt::Display for FusionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FusionMode::Intersection => "intersection",
            FusionMode::Union => "union",
        })
    }
}

impl FromStr for FusionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "intersection" => Ok(FusionMode::Intersection),
            "union" => Ok(FusionMode::Union),
            other => Err(Error::InvalidParameter(format!("unknown fusion mode {other:?}"))),
        }
    }
}

fn check_dims(sizes: impl Iterator<Item = (usize, usize)>) -> Result<usize> {
    let mut n = None;
    for (view, (rows, cols)) in sizes.enumerate() {
        let expected = *n.get_or_insert(rows);
        if rows != expected || cols != expected {
            return Err(Error::ViewSizeMismatch {
                view,
                expected,
                found: rows.max(cols),
            });
        }
    }
    n.ok_or_else(|| Error::InvalidInput("fusion needs at least one view".into()))
}

/// Elementwise geometric mean of the transition matrices, row-normalized.
pub fn combine_probabilities(views: &[DMatrix<f64>], mode: FusionMode) -> Result<DMatrix<f64>> {
    let n = check_dims(views.iter().map(|v| v.shape()))?;
    if views.len() == 1 {
        let only = &views[0];
        if let Some(node) = (0..n).find(|&i| only.row(i).iter().all(|&p| p == 0.0)) {
            return Err(Error::FusedIsolatedNode { node });
        }
        return Ok(only.clone());
    }
    let m = views.len();
    let mut fused = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut product = 1.0;
            let mut support = 0usize;
            for view in views {
                let p = view[(i, j)];
                if p > 0.0 {
                    product *= p;
                    support += 1;
                }
            }
            let keep = match mode {
                FusionMode::Intersection => support == m,
                FusionMode::Union => support > 0,
            };
            if keep {
                fused[(i, j)] = product.powf(1.0 / support as f64);
            }
        }
    }
    for (i, mut row) in fused.row_iter_mut().enumerate() {
        let sum: f64 = row.sum();
        if !(sum > 0.0) {
            return Err(Error::FusedIsolatedNode { node: i });
        }
        row /= sum;
    }
    Ok(fused)
}

/// Sum of the per-view costs on the fused support.
pub fn combine_costs(views: &[CostMatrix], mode: FusionMode) -> Result<CostMatrix> {
    let n = check_dims(views.iter().map(|v| v.dense().shape()))?;
    let m = views.len();
    let mut fused = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut sum = 0.0;
            let mut support = 0usize;
            for view in views {
                if let Some(c) = view.get(i, j) {
                    sum += c;
                    support += 1;
                }
            }
            let keep = match mode {
                FusionMode::Intersection => support == m,
                FusionMode::Union => support > 0,
            };
            if keep {
                fused[(i, j)] = sum;
            }
        }
    }
    CostMatrix::from_dense(fused)
}

/// Fused transition/cost pair for a multi-view graph.
pub fn fused_inputs(graph: &MultiViewGraph, mode: FusionMode) -> Result<RspInputs> {
    let mut transitions = Vec::with_capacity(graph.m());
    let mut costs = Vec::with_capacity(graph.m());
    for view in graph.views() {
        transitions.push(transition_matrix(view)?);
        costs.push(cost_matrix(view));
    }
    let p = combine_probabilities(&transitions, mode)?;
    let (_, components) = connected_components(&p);
    if components > 1 {
        return Err(Error::FusedDisconnected { components });
    }
    let c = combine_costs(&costs, mode)?;
    RspInputs::new(p, c)
}

/// C-RSP dissimilarity of a multi-view graph. Every view must be connected.
pub fn crsp_dissimilarity(graph: &MultiViewGraph, params: &RspParams, mode: FusionMode) -> Result<DissimilarityMatrix> {
    graph.ensure_valid()?;
    let inputs = fused_inputs(graph, mode)?;
    rsp_dissimilarity(&inputs, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::ViewAffinity;

    fn row(values: &[f64]) -> DMatrix<f64> {
        // embed a single row as row 0 of a 3x3 stochastic matrix
        let mut m = DMatrix::from_row_slice(3, 3, &[0.0, 0.5, 0.5, 0.5, 0.0, 0.5, 0.5, 0.5, 0.0]);
        m.row_mut(0).copy_from_slice(values);
        m
    }

    #[test]
    fn single_view_is_returned_unchanged() {
        let p = row(&[0.0, 0.3, 0.7]);
        for mode in [FusionMode::Union, FusionMode::Intersection] {
            assert_eq!(combine_probabilities(std::slice::from_ref(&p), mode).unwrap(), p);
        }
    }

    #[test]
    fn identical_views_fuse_to_themselves() {
        let p = row(&[0.0, 0.3, 0.7]);
        let fused = combine_probabilities(&[p.clone(), p.clone()], FusionMode::Intersection).unwrap();
        assert!((fused - p).abs().max() < 1e-15);
    }

    #[test]
    fn geometric_mean_then_normalize() {
        // sqrt(0.40) : sqrt(0.10) = 2 : 1
        let fused = combine_probabilities(&[row(&[0.0, 0.5, 0.5]), row(&[0.0, 0.8, 0.2])], FusionMode::Union).unwrap();
        assert!((fused[(0, 1)] - 2.0 / 3.0).abs() < 1e-15);
        assert!((fused[(0, 2)] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(fused[(0, 0)], 0.0);
    }

    #[test]
    fn union_and_intersection_supports() {
        let a = row(&[0.0, 1.0, 0.0]);
        let b = row(&[0.0, 0.5, 0.5]);
        let union = combine_probabilities(&[a.clone(), b.clone()], FusionMode::Union).unwrap();
        // union: sqrt(1 * 0.5) vs 0.5 alone
        let s = 0.5f64.sqrt();
        assert!((union[(0, 1)] - s / (s + 0.5)).abs() < 1e-15);
        let inter = combine_probabilities(&[a, b], FusionMode::Intersection).unwrap();
        assert_eq!(inter[(0, 2)], 0.0);
        assert!((inter[(0, 1)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn isolated_fused_row_is_an_error() {
        let a = row(&[0.0, 1.0, 0.0]);
        let b = row(&[0.0, 0.0, 1.0]);
        assert!(matches!(
            combine_probabilities(&[a, b], FusionMode::Intersection),
            Err(Error::FusedIsolatedNode { node: 0 })
        ));
    }

    #[test]
    fn cost_sums() {
        let c1 = CostMatrix::from_dense(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])).unwrap();
        let c2 = CostMatrix::from_dense(DMatrix::from_row_slice(2, 2, &[0.0, 0.25, 0.25, 0.0])).unwrap();
        let fused = combine_costs(&[c1.clone(), c2], FusionMode::Intersection).unwrap();
        assert_eq!(fused.get(0, 1), Some(1.25));
        assert_eq!(combine_costs(std::slice::from_ref(&c1), FusionMode::Union).unwrap(), c1);

        let absent = CostMatrix::from_dense(DMatrix::zeros(2, 2)).unwrap();
        let present = CostMatrix::from_dense(DMatrix::from_row_slice(2, 2, &[0.0, 3.0, 3.0, 0.0])).unwrap();
        let union = combine_costs(&[absent.clone(), present.clone()], FusionMode::Union).unwrap();
        assert_eq!(union.get(0, 1), Some(3.0));
        let inter = combine_costs(&[absent, present], FusionMode::Intersection).unwrap();
        assert_eq!(inter.get(0, 1), None);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let err = combine_probabilities(&[DMatrix::identity(2, 2), DMatrix::identity(3, 3)], FusionMode::Union);
        assert!(matches!(err, Err(Error::ViewSizeMismatch { view: 1, .. })));
    }

    #[test]
    fn fused_disconnection_is_reported() {
        // each view is connected but the intersection splits into two pairs
        let v1 = ViewAffinity::from_edges(4, &[(0, 1), (1, 2), (2, 3), (0, 3)]);
        let v2 = ViewAffinity::from_edges(4, &[(0, 1), (1, 3), (2, 3), (0, 2)]);
        let g = MultiViewGraph::new(vec![v1, v2]).unwrap();
        let err = crsp_dissimilarity(&g, &RspParams::default(), FusionMode::Intersection).unwrap_err();
        assert!(matches!(err, Error::FusedDisconnected { components: 2 }), "{err}");
        assert!(crsp_dissimilarity(&g, &RspParams::default(), FusionMode::Union).is_ok());
    }

    #[test]
    fn disconnected_view_is_rejected() {
        let v1 = ViewAffinity::from_edges(3, &[(0, 1), (1, 2)]);
        let v2 = ViewAffinity::from_edges(3, &[(0, 1)]);
        let g = MultiViewGraph::new(vec![v1, v2]).unwrap();
        assert!(crsp_dissimilarity(&g, &RspParams::default(), FusionMode::Union).is_err());
    }

    #[test]
    fn mode_parses() {
        assert_eq!("union".parse::<FusionMode>().unwrap(), FusionMode::Union);
        assert_eq!("intersection".parse::<FusionMode>().unwrap(), FusionMode::Intersection);
        assert!("both".parse::<FusionMode>().is_err());
    }
}
