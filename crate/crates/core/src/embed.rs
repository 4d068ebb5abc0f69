//! Classical multidimensional scaling.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::rsp::DissimilarityMatrix;

/// Eigenvalues at or below this fraction of the largest magnitude are
/// treated as zero.
const EIGEN_RELATIVE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingCoordinates {
    /// `n x d`, one row per node.
    pub coords: DMatrix<f64>,
    /// Top-`d` eigenvalues of the centered Gram matrix, descending, before
    /// clamping.
    pub eigenvalues: Vec<f64>,
    /// Count of negative eigenvalues in the whole spectrum (non-Euclidean
    /// part of the input).
    pub negative_eigenvalues: usize,
    /// Columns filled with zeros because too few positive eigenvalues exist.
    pub padded_columns: usize,
}

impl EmbeddingCoordinates {
    pub fn n(&self) -> usize {
        self.coords.nrows()
    }

    pub fn dim(&self) -> usize {
        self.coords.ncols()
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        (self.coords.row(i) - self.coords.row(j)).norm()
    }
}

/// Double-centered Gram matrix `B = -½ J (Δ∘Δ) J`.
pub fn centered_gram(delta: &DMatrix<f64>) -> DMatrix<f64> {
    let n = delta.nrows();
    let squared = delta.component_mul(delta);
    let row_means: Vec<f64> = squared.row_iter().map(|r| r.mean()).collect();
    let col_means: Vec<f64> = squared.column_iter().map(|c| c.mean()).collect();
    let grand = squared.mean();
    DMatrix::from_fn(n, n, |i, j| -0.5 * (squared[(i, j)] - row_means[i] - col_means[j] + grand))
}

pub fn classical_mds(delta: &DissimilarityMatrix, d: usize) -> Result<EmbeddingCoordinates> {
    let n = delta.n();
    if d == 0 || d >= n {
        return Err(Error::InvalidParameter(format!(
            "embedding dimension must lie in 1..={}, got {d}",
            n.saturating_sub(1)
        )));
    }
    let gram = centered_gram(delta.as_matrix());
    let gram = (&gram + gram.transpose()) * 0.5;
    let eigen = gram.symmetric_eigen();
    if eigen.eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(Error::Eigen("non-finite eigenvalue in MDS".into()));
    }

    let mut order: Vec<usize> = (0..n).collect();
    // stable: ties keep index order
    order.sort_by(|&a, &b| eigen.eigenvalues[b].total_cmp(&eigen.eigenvalues[a]));
    let scale = eigen.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = EIGEN_RELATIVE_FLOOR * scale;
    let negative_eigenvalues = eigen.eigenvalues.iter().filter(|&&v| v < -floor).count();

    let mut coords = DMatrix::zeros(n, d);
    let mut eigenvalues = Vec::with_capacity(d);
    let mut padded_columns = 0;
    for (col, &idx) in order.iter().take(d).enumerate() {
        let lambda = eigen.eigenvalues[idx];
        eigenvalues.push(lambda);
        if lambda <= floor {
            padded_columns += 1;
            continue;
        }
        let mut v = eigen.eigenvectors.column(idx).into_owned();
        // sign convention: largest-magnitude component positive
        let pivot = v.iamax();
        if v[pivot] < 0.0 {
            v.neg_mut();
        }
        coords.set_column(col, &(v * lambda.sqrt()));
    }
    for mut column in coords.column_iter_mut() {
        let mean = column.mean();
        column.add_scalar_mut(-mean);
    }
    Ok(EmbeddingCoordinates {
        coords,
        eigenvalues,
        negative_eigenvalues,
        padded_columns,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn delta(n: usize, values: &[f64]) -> DissimilarityMatrix {
        DissimilarityMatrix::new(DMatrix::from_row_slice(n, n, values)).unwrap()
    }

    #[test]
    fn two_points_split_symmetrically() {
        let e = classical_mds(&delta(2, &[0.0, 1.0, 1.0, 0.0]), 1).unwrap();
        let mut xs = [e.coords[(0, 0)], e.coords[(1, 0)]];
        xs.sort_by(f64::total_cmp);
        assert!((xs[0] + 0.5).abs() < 1e-12 && (xs[1] - 0.5).abs() < 1e-12, "{xs:?}");
    }

    #[test]
    fn equilateral_triangle_distances() {
        let e = classical_mds(&delta(3, &[0.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0]), 2).unwrap();
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            assert!((e.distance(i, j) - 1.0).abs() < 1e-8);
        }
        assert_eq!(e.padded_columns, 0);
    }

    #[test]
    fn collinear_gaps() {
        let e = classical_mds(&delta(3, &[0.0, 1.0, 2.0, 1.0, 0.0, 1.0, 2.0, 1.0, 0.0]), 1).unwrap();
        assert!((e.distance(0, 1) - 1.0).abs() < 1e-8);
        assert!((e.distance(1, 2) - 1.0).abs() < 1e-8);
        assert!((e.distance(0, 2) - 2.0).abs() < 1e-8);
    }

    #[test]
    fn deficient_rank_is_padded_and_flagged() {
        // collinear input asked for two dimensions
        let e = classical_mds(&delta(3, &[0.0, 1.0, 2.0, 1.0, 0.0, 1.0, 2.0, 1.0, 0.0]), 2).unwrap();
        assert_eq!(e.padded_columns, 1);
        assert!(e.coords.column(1).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn non_euclidean_input_reports_negative_eigenvalues() {
        // violates the triangle inequality
        let e = classical_mds(&delta(3, &[0.0, 1.0, 5.0, 1.0, 0.0, 1.0, 5.0, 1.0, 0.0]), 1).unwrap();
        assert!(e.negative_eigenvalues > 0);
    }

    #[test]
    fn dimension_range() {
        let d = delta(2, &[0.0, 1.0, 1.0, 0.0]);
        assert!(classical_mds(&d, 0).is_err());
        assert!(classical_mds(&d, 2).is_err());
    }
}
