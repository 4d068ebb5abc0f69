//! Spectral clustering on the reciprocal of a dissimilarity matrix.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::rsp::DissimilarityMatrix;

pub const KMEANS_RESTARTS: usize = 10;
pub const KMEANS_MAX_ITERATIONS: usize = 300;
pub const KMEANS_RELATIVE_TOLERANCE: f64 = 1e-8;

/// A partition of `n` nodes into labels `0..k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterLabels {
    labels: Vec<usize>,
    k: usize,
}

impl ClusterLabels {
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
            return Err(Error::InvalidInput(format!("label {bad} is not below k = {k}")));
        }
        Ok(Self { labels, k })
    }

    /// Compact arbitrary integer labels to `0..k`, in ascending order of the
    /// raw values.
    pub fn from_raw(raw: &[i64]) -> Self {
        let mut index = BTreeMap::new();
        for &r in raw {
            index.entry(r).or_insert(0usize);
        }
        for (slot, value) in index.values_mut().enumerate() {
            *value = slot;
        }
        Self {
            labels: raw.iter().map(|r| index[r]).collect(),
            k: index.len(),
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.labels
    }

    /// Labels of the given nodes, compacted again.
    pub fn select(&self, nodes: &[usize]) -> Self {
        let raw: Vec<i64> = nodes.iter().map(|&i| self.labels[i] as i64).collect();
        Self::from_raw(&raw)
    }

    /// Relabel by order of first appearance.
    fn canonical(labels: &[usize], k: usize) -> Self {
        let mut map = vec![usize::MAX; k];
        let mut next = 0;
        let labels = labels
            .iter()
            .map(|&l| {
                if map[l] == usize::MAX {
                    map[l] = next;
                    next += 1;
                }
                map[l]
            })
            .collect();
        Self { labels, k }
    }
}

/// Elementwise reciprocal off the diagonal, zero on it.
pub fn affinity_from_dissimilarity(delta: &DissimilarityMatrix) -> Result<DMatrix<f64>> {
    let n = delta.n();
    let mut affinity = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let v = delta.get(i, j);
            if !(v > 0.0) {
                return Err(Error::DegenerateDissimilarity { row: i, col: j, value: v });
            }
            affinity[(i, j)] = 1.0 / v;
        }
    }
    Ok(affinity)
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub labels: ClusterLabels,
    pub centroids: DMatrix<f64>,
    pub inertia: f64,
}

fn squared_distance(points: &DMatrix<f64>, i: usize, centroids: &DMatrix<f64>, c: usize) -> f64 {
    points
        .row(i)
        .iter()
        .zip(centroids.row(c).iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum()
}

fn plus_plus_init(points: &DMatrix<f64>, k: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let n = points.nrows();
    let mut centroids = DMatrix::zeros(k, points.ncols());
    let first = rng.random_range(0..n);
    centroids.set_row(0, &points.row(first));
    let mut nearest: Vec<f64> = (0..n).map(|i| squared_distance(points, i, &centroids, 0)).collect();
    for c in 1..k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = n - 1;
            for (i, &d) in nearest.iter().enumerate() {
                acc += d;
                if acc > target {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centroids.set_row(c, &points.row(pick));
        for (i, slot) in nearest.iter_mut().enumerate() {
            *slot = slot.min(squared_distance(points, i, &centroids, c));
        }
    }
    centroids
}

/// Nearest centroid per point (ties to the lower index) and the inertia.
fn assign(points: &DMatrix<f64>, centroids: &DMatrix<f64>, labels: &mut [usize]) -> f64 {
    let mut inertia = 0.0;
    for (i, label) in labels.iter_mut().enumerate() {
        let mut best = (0, f64::INFINITY);
        for c in 0..centroids.nrows() {
            let d = squared_distance(points, i, centroids, c);
            if d < best.1 {
                best = (c, d);
            }
        }
        *label = best.0;
        inertia += best.1;
    }
    inertia
}

fn lloyd(points: &DMatrix<f64>, mut centroids: DMatrix<f64>) -> (Vec<usize>, DMatrix<f64>, f64) {
    let n = points.nrows();
    let k = centroids.nrows();
    let mut labels = vec![0usize; n];
    let mut inertia = assign(points, &centroids, &mut labels);
    for _ in 0..KMEANS_MAX_ITERATIONS {
        let mut sums = DMatrix::zeros(k, points.ncols());
        let mut counts = vec![0usize; k];
        for (i, &l) in labels.iter().enumerate() {
            counts[l] += 1;
            let mut row = sums.row_mut(l);
            row += points.row(i);
        }
        for c in 0..k {
            if counts[c] > 0 {
                let mean = sums.row(c) / counts[c] as f64;
                centroids.set_row(c, &mean);
            } else {
                // reseed at the point farthest from its current centroid
                let far = (0..n)
                    .map(|i| (i, squared_distance(points, i, &centroids, labels[i])))
                    .fold((0, -1.0), |best, cand| if cand.1 > best.1 { cand } else { best })
                    .0;
                centroids.set_row(c, &points.row(far));
            }
        }
        let previous = inertia;
        inertia = assign(points, &centroids, &mut labels);
        if (previous - inertia).abs() <= KMEANS_RELATIVE_TOLERANCE * previous {
            break;
        }
    }
    (labels, centroids, inertia)
}

/// k-means++ seeding and Lloyd iterations, best of [`KMEANS_RESTARTS`] runs
/// by inertia. Deterministic for a given seed.
pub fn kmeans(points: &DMatrix<f64>, k: usize, seed: u64) -> Result<KMeansResult> {
    let n = points.nrows();
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!("k must lie in 1..={n}, got {k}")));
    }
    if points.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("k-means points must be finite".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(Vec<usize>, DMatrix<f64>, f64)> = None;
    for _ in 0..KMEANS_RESTARTS {
        let init = plus_plus_init(points, k, &mut rng);
        let run = lloyd(points, init);
        if best.as_ref().is_none_or(|b| run.2 < b.2) {
            best = Some(run);
        }
    }
    let (labels, centroids, inertia) = best.expect("at least one restart");
    Ok(KMeansResult {
        labels: ClusterLabels::canonical(&labels, k),
        centroids,
        inertia,
    })
}

/// Rows of the bottom-`k` eigenvectors of `L = I - D^{-1/2} A D^{-1/2}`,
/// each scaled to unit length.
pub fn spectral_embedding(affinity: &DMatrix<f64>, k: usize) -> Result<DMatrix<f64>> {
    let n = affinity.nrows();
    if !affinity.is_square() {
        return Err(Error::InvalidInput("affinity must be square".into()));
    }
    if k < 1 || k > n {
        return Err(Error::InvalidParameter(format!("k must lie in 1..={n}, got {k}")));
    }
    for i in 0..n {
        for j in 0..n {
            let a = affinity[(i, j)];
            if !(a.is_finite() && a >= 0.0) {
                return Err(Error::InvalidInput(format!("affinity entry ({i}, {j}) is {a}")));
            }
            let b = affinity[(j, i)];
            if (a - b).abs() > 1e-12 * a.max(b) {
                return Err(Error::InvalidInput(format!("affinity is asymmetric at ({i}, {j})")));
            }
        }
    }
    let mut inv_sqrt_degree = Vec::with_capacity(n);
    for (i, row) in affinity.row_iter().enumerate() {
        let degree = row.sum() - affinity[(i, i)];
        if !(degree > 0.0) {
            return Err(Error::IsolatedNode { node: i });
        }
        inv_sqrt_degree.push(1.0 / degree.sqrt());
    }
    let laplacian = DMatrix::from_fn(n, n, |i, j| {
        let identity = if i == j { 1.0 } else { 0.0 };
        let a = if i == j { 0.0 } else { affinity[(i, j)] };
        identity - inv_sqrt_degree[i] * a * inv_sqrt_degree[j]
    });
    let laplacian = (&laplacian + laplacian.transpose()) * 0.5;
    let eigen = laplacian.symmetric_eigen();
    if eigen.eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(Error::Eigen("non-finite eigenvalue in the normalized Laplacian".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eigen.eigenvalues[a].total_cmp(&eigen.eigenvalues[b]));
    let mut rows = DMatrix::zeros(n, k);
    for (col, &idx) in order.iter().take(k).enumerate() {
        rows.set_column(col, &eigen.eigenvectors.column(idx));
    }
    for mut row in rows.row_iter_mut() {
        let norm = row.norm();
        if norm > 0.0 {
            row /= norm;
        }
    }
    Ok(rows)
}

/// Symmetric-normalized spectral clustering.
pub fn spectral_clustering(affinity: &DMatrix<f64>, k: usize, seed: u64) -> Result<ClusterLabels> {
    let n = affinity.nrows();
    if k < 2 || k > n {
        return Err(Error::InvalidParameter(format!("k must lie in 2..={n}, got {k}")));
    }
    let rows = spectral_embedding(affinity, k)?;
    Ok(kmeans(&rows, k, seed)?.labels)
}

/// Cluster a dissimilarity matrix through its reciprocal affinity.
pub fn cluster_dissimilarity(delta: &DissimilarityMatrix, k: usize, seed: u64) -> Result<ClusterLabels> {
    spectral_clustering(&affinity_from_dissimilarity(delta)?, k, seed)
}
