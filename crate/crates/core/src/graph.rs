//! Graph data model: per-view affinities, multi-view graphs, and the
//! transition/cost matrices derived from an affinity.

use std::collections::VecDeque;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Row sums of a transition matrix must hit 1 within this tolerance.
pub const ROW_SUM_TOLERANCE: f64 = 1e-12;

/// Affinity matrix of one view. Larger weights mean more similar nodes and
/// zero means no edge.
///
/// Construction strips the diagonal of square inputs and performs no other
/// checks; use [`ViewAffinity::validate`] to diagnose a matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewAffinity {
    weights: DMatrix<f64>,
}

impl ViewAffinity {
    pub fn from_matrix(mut weights: DMatrix<f64>) -> Self {
        if weights.is_square() {
            weights.fill_diagonal(0.0);
        }
        Self { weights }
    }

    /// Unit-weight undirected graph from a 0-based edge list.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        Self::from_weighted_edges(n, edges.iter().map(|&(i, j)| (i, j, 1.0)))
    }

    pub fn from_weighted_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Self {
        let mut weights = DMatrix::zeros(n, n);
        for (i, j, w) in edges {
            weights[(i, j)] = w;
            weights[(j, i)] = w;
        }
        Self::from_matrix(weights)
    }

    pub fn n(&self) -> usize {
        self.weights.nrows()
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.weights
    }

    pub fn degrees(&self) -> Vec<f64> {
        self.weights.row_iter().map(|row| row.sum()).collect()
    }

    pub fn validate(&self) -> ValidationReport {
        validate_view(self)
    }

    /// Restrict to the given node indices, in the given order.
    pub fn select(&self, nodes: &[usize]) -> Self {
        let k = nodes.len();
        let weights = DMatrix::from_fn(k, k, |r, c| self.weights[(nodes[r], nodes[c])]);
        Self { weights }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ValidationIssue {
    NonSquare { rows: usize, cols: usize },
    NegativeEntry { row: usize, col: usize, value: f64 },
    NonFiniteEntry { row: usize, col: usize },
    Asymmetric { row: usize, col: usize, difference: f64 },
    Disconnected { components: usize },
    ZeroDegree { nodes: Vec<usize> },
}

impl ValidationIssue {
    /// Asymmetry is reported but does not stop RSP from running.
    pub fn is_fatal(&self) -> bool {
        !matches!(self, ValidationIssue::Asymmetric { .. })
    }
}

impl std::fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ValidationIssue::NonSquare { rows, cols } => write!(f, "non-square matrix {rows}x{cols}"),
            ValidationIssue::NegativeEntry { row, col, value } => {
                write!(f, "negative entry {value} at ({row}, {col})")
            }
            ValidationIssue::NonFiniteEntry { row, col } => write!(f, "non-finite entry at ({row}, {col})"),
            ValidationIssue::Asymmetric { row, col, difference } => {
                write!(f, "asymmetric: |a[{row},{col}] - a[{col},{row}]| = {difference}")
            }
            ValidationIssue::Disconnected { components } => write!(f, "disconnected: {components} components"),
            ValidationIssue::ZeroDegree { nodes } => write!(f, "zero-degree nodes {nodes:?}"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub issues: Vec<ValidationIssue>,
}

impl ValidationReport {
    /// True when every check is clear.
    pub fn passed(&self) -> bool {
        self.issues.is_empty()
    }

    /// True when the only findings are non-fatal (asymmetry).
    pub fn usable(&self) -> bool {
        self.issues.iter().all(|issue| !issue.is_fatal())
    }

    pub fn is_disconnected(&self) -> bool {
        self.issues
            .iter()
            .any(|issue| matches!(issue, ValidationIssue::Disconnected { .. }))
    }

    pub fn has_negative(&self) -> bool {
        self.issues
            .iter()
            .any(|issue| matches!(issue, ValidationIssue::NegativeEntry { .. }))
    }

    pub fn summary(&self) -> String {
        if self.issues.is_empty() {
            return "ok".to_string();
        }
        self.issues.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
    }
}

/// Diagnose an affinity matrix. Never fails; the caller decides what to do
/// with the findings.
pub fn validate_view(view: &ViewAffinity) -> ValidationReport {
    let a = &view.weights;
    let mut issues = Vec::new();
    if !a.is_square() {
        issues.push(ValidationIssue::NonSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
        return ValidationReport { issues };
    }
    let n = a.nrows();

    let mut entries_ok = true;
    'scan: for i in 0..n {
        for j in 0..n {
            let v = a[(i, j)];
            if !v.is_finite() {
                issues.push(ValidationIssue::NonFiniteEntry { row: i, col: j });
                entries_ok = false;
                break 'scan;
            }
            if v < 0.0 {
                issues.push(ValidationIssue::NegativeEntry { row: i, col: j, value: v });
                entries_ok = false;
                break 'scan;
            }
        }
    }
    if !entries_ok {
        return ValidationReport { issues };
    }

    let mut worst: Option<(usize, usize, f64)> = None;
    for i in 0..n {
        for j in (i + 1)..n {
            let d = (a[(i, j)] - a[(j, i)]).abs();
            if d > 0.0 && worst.is_none_or(|(_, _, w)| d > w) {
                worst = Some((i, j, d));
            }
        }
    }
    if let Some((row, col, difference)) = worst {
        issues.push(ValidationIssue::Asymmetric { row, col, difference });
    }

    let zero: Vec<usize> = (0..n).filter(|&i| a.row(i).iter().all(|&v| v == 0.0)).collect();
    let components = connected_components(a).1;
    if components > 1 {
        issues.push(ValidationIssue::Disconnected { components });
    }
    if !zero.is_empty() {
        issues.push(ValidationIssue::ZeroDegree { nodes: zero });
    }
    ValidationReport { issues }
}

/// Component labels over the undirected support of nonzero entries.
/// Returns `(label per node, component count)`; labels are assigned in order
/// of each component's smallest node.
pub fn connected_components(matrix: &DMatrix<f64>) -> (Vec<usize>, usize) {
    let n = matrix.nrows();
    let mut label = vec![usize::MAX; n];
    let mut count = 0;
    let mut queue = VecDeque::new();
    for start in 0..n {
        if label[start] != usize::MAX {
            continue;
        }
        label[start] = count;
        queue.push_back(start);
        while let Some(u) = queue.pop_front() {
            for v in 0..n {
                if label[v] == usize::MAX && (matrix[(u, v)] != 0.0 || matrix[(v, u)] != 0.0) {
                    label[v] = count;
                    queue.push_back(v);
                }
            }
        }
        count += 1;
    }
    (label, count)
}

/// Rows are points, columns are feature dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    data: DMatrix<f64>,
}

impl FeatureMatrix {
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("feature matrix has non-finite entries".into()));
        }
        Ok(Self { data })
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn dim(&self) -> usize {
        self.data.ncols()
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    fn squared_distance(&self, i: usize, j: usize) -> f64 {
        self.data
            .row(i)
            .iter()
            .zip(self.data.row(j).iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bandwidth {
    /// Median of all pairwise Euclidean distances.
    Median,
    Fixed(f64),
}

/// Gaussian-kernel affinity `exp(-|x_i - x_j|^2 / (2 sigma^2))` with a zero
/// diagonal.
pub fn gaussian_affinity(features: &FeatureMatrix, bandwidth: Bandwidth) -> Result<ViewAffinity> {
    let n = features.n();
    if n < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 points, got {n}")));
    }
    let mut sq = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let d = features.squared_distance(i, j);
            sq[(i, j)] = d;
            sq[(j, i)] = d;
        }
    }
    let sigma = match bandwidth {
        Bandwidth::Fixed(s) => {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::InvalidParameter(format!("bandwidth must be positive, got {s}")));
            }
            s
        }
        Bandwidth::Median => {
            let mut dists: Vec<f64> = Vec::with_capacity(n * (n - 1) / 2);
            for i in 0..n {
                for j in (i + 1)..n {
                    dists.push(sq[(i, j)].sqrt());
                }
            }
            let s = median(&mut dists);
            if s <= 0.0 {
                return Err(Error::DegenerateBandwidth);
            }
            s
        }
    };
    let denom = 2.0 * sigma * sigma;
    let weights = DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { (-sq[(i, j)] / denom).exp() });
    Ok(ViewAffinity { weights })
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let len = values.len();
    if len % 2 == 1 {
        values[len / 2]
    } else {
        0.5 * (values[len / 2 - 1] + values[len / 2])
    }
}

/// Reference transition matrix `D^{-1} A`.
pub fn transition_matrix(view: &ViewAffinity) -> Result<DMatrix<f64>> {
    let mut p = view.weights.clone();
    for (i, mut row) in p.row_iter_mut().enumerate() {
        let degree: f64 = row.sum();
        if !(degree > 0.0) {
            return Err(Error::IsolatedNode { node: i });
        }
        row /= degree;
    }
    Ok(p)
}

/// Edge costs stored on the edge support only. A stored zero means "no
/// edge" (an infinite cost that is never multiplied into a transition).
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    values: DMatrix<f64>,
}

impl CostMatrix {
    /// `values` must be nonnegative; zeros mark absent edges.
    pub fn from_dense(values: DMatrix<f64>) -> Result<Self> {
        if values.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
            return Err(Error::InvalidInput("costs must be finite and nonnegative".into()));
        }
        Ok(Self { values })
    }

    /// Unit costs on every nonzero position of `support`.
    pub fn unit_on_support(support: &DMatrix<f64>) -> Self {
        Self {
            values: support.map(|v| if v != 0.0 { 1.0 } else { 0.0 }),
        }
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        let v = self.values[(i, j)];
        (v > 0.0).then_some(v)
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.values[(i, j)] > 0.0
    }

    /// Dense view with zeros in place of absent edges.
    pub fn dense(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_dense(self) -> DMatrix<f64> {
        self.values
    }

    pub fn min_cost(&self) -> Option<f64> {
        self.values.iter().copied().filter(|&v| v > 0.0).reduce(f64::min)
    }
}

/// Costs `1 / a_ij` on edges.
pub fn cost_matrix(view: &ViewAffinity) -> CostMatrix {
    CostMatrix {
        values: view.weights.map(|a| if a > 0.0 { 1.0 / a } else { 0.0 }),
    }
}

/// A transition matrix and a cost matrix sharing one edge support.
#[derive(Debug, Clone)]
pub struct RspInputs {
    transition: DMatrix<f64>,
    cost: CostMatrix,
}

impl RspInputs {
    pub fn new(transition: DMatrix<f64>, cost: CostMatrix) -> Result<Self> {
        let n = transition.nrows();
        if !transition.is_square() || cost.n() != n || cost.values.ncols() != n {
            return Err(Error::InvalidInput("transition and cost must be square and of equal size".into()));
        }
        for (i, row) in transition.row_iter().enumerate() {
            if row.iter().any(|&p| !(p >= 0.0 && p.is_finite())) {
                return Err(Error::InvalidInput(format!("row {i} of the transition matrix is not a distribution")));
            }
            let sum: f64 = row.sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(Error::InvalidInput(format!("row {i} of the transition matrix sums to {sum}")));
            }
        }
        for i in 0..n {
            for j in 0..n {
                if (transition[(i, j)] > 0.0) != cost.has_edge(i, j) {
                    return Err(Error::InvalidInput(format!(
                        "transition and cost supports differ at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self { transition, cost })
    }

    pub fn from_view(view: &ViewAffinity) -> Result<Self> {
        Self::new(transition_matrix(view)?, cost_matrix(view))
    }

    pub fn n(&self) -> usize {
        self.transition.nrows()
    }

    pub fn transition(&self) -> &DMatrix<f64> {
        &self.transition
    }

    pub fn cost(&self) -> &CostMatrix {
        &self.cost
    }
}

/// Views over one node set.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiViewGraph {
    views: Vec<ViewAffinity>,
    node_ids: Vec<String>,
}

impl MultiViewGraph {
    /// Node ids default to 1-based indices.
    pub fn new(views: Vec<ViewAffinity>) -> Result<Self> {
        let n = views.first().map_or(0, ViewAffinity::n);
        let node_ids = (1..=n).map(|i| i.to_string()).collect();
        Self::with_node_ids(views, node_ids)
    }

    pub fn with_node_ids(views: Vec<ViewAffinity>, node_ids: Vec<String>) -> Result<Self> {
        let Some(first) = views.first() else {
            return Err(Error::InvalidInput("a multi-view graph needs at least one view".into()));
        };
        let n = first.n();
        for (idx, view) in views.iter().enumerate() {
            if !view.weights.is_square() || view.n() != n {
                return Err(Error::ViewSizeMismatch {
                    view: idx,
                    expected: n,
                    found: view.n(),
                });
            }
        }
        if node_ids.len() != n {
            return Err(Error::LengthMismatch {
                left: node_ids.len(),
                right: n,
            });
        }
        Ok(Self { views, node_ids })
    }

    pub fn n(&self) -> usize {
        self.node_ids.len()
    }

    pub fn m(&self) -> usize {
        self.views.len()
    }

    pub fn views(&self) -> &[ViewAffinity] {
        &self.views
    }

    pub fn node_ids(&self) -> &[String] {
        &self.node_ids
    }

    /// Check every view; the first fatal finding becomes an error.
    pub fn ensure_valid(&self) -> Result<()> {
        for (idx, view) in self.views.iter().enumerate() {
            let report = view.validate();
            if report.usable() {
                continue;
            }
            if let Some(ValidationIssue::Disconnected { components }) = report
                .issues
                .iter()
                .find(|issue| matches!(issue, ValidationIssue::Disconnected { .. }))
            {
                return Err(Error::Disconnected {
                    components: *components,
                });
            }
            return Err(Error::InvalidInput(format!("view {idx}: {}", report.summary())));
        }
        Ok(())
    }

    pub fn select(&self, nodes: &[usize]) -> Self {
        Self {
            views: self.views.iter().map(|v| v.select(nodes)).collect(),
            node_ids: nodes.iter().map(|&i| self.node_ids[i].clone()).collect(),
        }
    }
}

/// Surviving node indices (ascending, into the input graph) after repeatedly
/// intersecting every view's largest connected component until all views
/// are connected on the survivors.
pub fn cull_survivors(graph: &MultiViewGraph) -> Vec<usize> {
    let mut alive: Vec<usize> = (0..graph.n()).collect();
    loop {
        let mut keep = vec![true; alive.len()];
        for view in graph.views() {
            let sub = view.select(&alive);
            let (labels, count) = connected_components(&sub.weights);
            if count <= 1 {
                continue;
            }
            let mut sizes = vec![0usize; count];
            for &l in &labels {
                sizes[l] += 1;
            }
            // labels are ordered by smallest member, so max_by_key's last-wins
            // tie rule is flipped with rev() to prefer the earliest component
            let largest = (0..count).rev().max_by_key(|&c| sizes[c]).unwrap_or(0);
            for (slot, &l) in keep.iter_mut().zip(&labels) {
                if l != largest {
                    *slot = false;
                }
            }
        }
        if keep.iter().all(|&k| k) {
            return alive;
        }
        alive = alive.into_iter().zip(keep).filter_map(|(node, k)| k.then_some(node)).collect();
    }
}

/// Remove nodes until every view is connected on the surviving node set.
pub fn cull_disconnected(graph: &MultiViewGraph) -> Result<MultiViewGraph> {
    cull_disconnected_indexed(graph).map(|(g, _)| g)
}

/// Like [`cull_disconnected`], also returning the surviving input indices.
pub fn cull_disconnected_indexed(graph: &MultiViewGraph) -> Result<(MultiViewGraph, Vec<usize>)> {
    let survivors = cull_survivors(graph);
    if survivors.len() < 2 {
        return Err(Error::GraphCollapsed {
            survivors: survivors.len(),
        });
    }
    if survivors.len() == graph.n() {
        return Ok((graph.clone(), survivors));
    }
    Ok((graph.select(&survivors), survivors))
}
