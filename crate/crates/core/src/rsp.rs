//! Randomized shortest path dissimilarity on a single transition/cost pair.
//!
//! With `W = P ∘ exp(-β C)` on the edge support and the fundamental matrix
//! `Z = (I - W)^{-1}`, the expected cost of absorbing walks from `s` to `t`
//! under the Gibbs path distribution is
//!
//! ```text
//! S = (Z (C ∘ W) Z) ÷ Z        (elementwise division)
//! C̄[s,t] = S[s,t] - S[t,t]
//! ```
//!
//! and the dissimilarity is the symmetric part `(C̄ + C̄ᵀ) / 2`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::RspInputs;

pub const DEFAULT_BETA: f64 = 0.02;
pub const DEFAULT_RADIUS_TOLERANCE: f64 = 1e-6;

/// Fundamental-matrix entries below this are treated as underflow.
pub const MIN_FUNDAMENTAL_ENTRY: f64 = 1e-300;

const RADIUS_ACCURACY: f64 = 1e-10;
const RADIUS_MAX_ITERATIONS: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RspParams {
    beta: f64,
    radius_tolerance: f64,
}

impl RspParams {
    pub fn new(beta: f64) -> Result<Self> {
        Self::with_radius_tolerance(beta, DEFAULT_RADIUS_TOLERANCE)
    }

    /// `radius_tolerance` is the margin below 1 that the spectral radius of
    /// `W` must clear.
    pub fn with_radius_tolerance(beta: f64, radius_tolerance: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidParameter(format!("beta must be positive and finite, got {beta}")));
        }
        if !(0.0..=0.1).contains(&radius_tolerance) {
            return Err(Error::InvalidParameter(format!(
                "radius tolerance must lie in [0, 0.1], got {radius_tolerance}"
            )));
        }
        Ok(Self { beta, radius_tolerance })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn radius_tolerance(&self) -> f64 {
        self.radius_tolerance
    }
}

impl Default for RspParams {
    fn default() -> Self {
        Self {
            beta: DEFAULT_BETA,
            radius_tolerance: DEFAULT_RADIUS_TOLERANCE,
        }
    }
}

/// Symmetric, finite, zero-diagonal dissimilarities.
#[derive(Debug, Clone, PartialEq)]
pub struct DissimilarityMatrix {
    values: DMatrix<f64>,
}

impl DissimilarityMatrix {
    /// Checks the invariants: square, finite, nonnegative, zero diagonal,
    /// symmetric within 1e-9 relative.
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if !values.is_square() {
            return Err(Error::InvalidInput(format!(
                "dissimilarity matrix must be square, got {}x{}",
                values.nrows(),
                values.ncols()
            )));
        }
        let n = values.nrows();
        for i in 0..n {
            if values[(i, i)] != 0.0 {
                return Err(Error::InvalidInput(format!("diagonal entry {i} is {}", values[(i, i)])));
            }
            for j in 0..n {
                let v = values[(i, j)];
                if !(v.is_finite() && v >= 0.0) {
                    return Err(Error::InvalidInput(format!("entry ({i}, {j}) is {v}")));
                }
                let w = values[(j, i)];
                if (v - w).abs() > 1e-9 * v.abs().max(w.abs()) {
                    return Err(Error::InvalidInput(format!("asymmetric at ({i}, {j}): {v} vs {w}")));
                }
            }
        }
        Ok(Self { values })
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.values
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            values: &self.values * factor,
        }
    }
}

/// `W = P ∘ exp(-β C)`, zero off the edge support.
pub fn gibbs_weights(inputs: &RspInputs, beta: f64) -> DMatrix<f64> {
    let p = inputs.transition();
    let c = inputs.cost().dense();
    DMatrix::from_fn(inputs.n(), inputs.n(), |i, j| {
        let pij = p[(i, j)];
        if pij > 0.0 {
            pij * (-beta * c[(i, j)]).exp()
        } else {
            0.0
        }
    })
}

/// Estimate the spectral radius of a nonnegative matrix.
///
/// Power iteration on `W + σI` keeps the iterate strictly positive, so the
/// Collatz–Wielandt ratios `min_i (Wx)_i / x_i` and `max_i (Wx)_i / x_i`
/// bracket the radius at every step. The estimate is returned once the
/// bracket or the Rayleigh-type quotient settles to within `tol`.
pub fn spectral_radius_bound(w: &DMatrix<f64>, tol: f64) -> Result<f64> {
    if !w.is_square() {
        return Err(Error::InvalidInput("spectral radius needs a square matrix".into()));
    }
    if w.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
        return Err(Error::InvalidInput("spectral radius needs a finite nonnegative matrix".into()));
    }
    let n = w.nrows();
    if n == 0 {
        return Ok(0.0);
    }
    let tol = tol.max(f64::EPSILON);
    let max_row_sum = w.row_iter().map(|r| r.sum()).fold(0.0, f64::max);
    if max_row_sum == 0.0 {
        return Ok(0.0);
    }
    // the shift moves the Perron root by exactly `shift` and pulls the
    // other eigenvalues of a periodic matrix away from the circle
    let shift = 0.5 * max_row_sum;
    let mut x = nalgebra::DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut previous = f64::INFINITY;
    let mut settled = 0;
    for _ in 0..RADIUS_MAX_ITERATIONS {
        let mut y = w * &x;
        y.axpy(shift, &x, 1.0);
        let (mut lower, mut upper) = (f64::INFINITY, 0.0f64);
        for (yi, xi) in y.iter().zip(x.iter()) {
            let ratio = yi / xi;
            lower = lower.min(ratio);
            upper = upper.max(ratio);
        }
        if upper - lower <= tol {
            return Ok((0.5 * (lower + upper) - shift).max(0.0));
        }
        let norm = y.norm();
        if norm == 0.0 || !norm.is_finite() {
            break;
        }
        // ‖(W + σI) x‖ with ‖x‖ = 1
        let estimate = norm;
        if (estimate - previous).abs() <= 1e-3 * tol {
            settled += 1;
            if settled >= 10 {
                return Ok((estimate.min(upper) - shift).max(0.0));
            }
        } else {
            settled = 0;
        }
        previous = estimate;
        x = y / norm;
        // keep strictly positive despite underflow
        x.apply(|v| *v = v.max(f64::MIN_POSITIVE));
    }
    Err(Error::RadiusNotConverged {
        iterations: RADIUS_MAX_ITERATIONS,
    })
}

/// Fail when `ρ(W) ≥ 1 - margin`. The max row sum is checked first; the
/// power iteration only runs when that bound is inconclusive.
pub fn check_convergence(w: &DMatrix<f64>, margin: f64) -> Result<()> {
    let limit = 1.0 - margin;
    let max_row_sum = w.row_iter().map(|r| r.sum()).fold(0.0, f64::max);
    if max_row_sum < limit {
        return Ok(());
    }
    match spectral_radius_bound(w, RADIUS_ACCURACY) {
        Ok(radius) if radius + RADIUS_ACCURACY < limit => Ok(()),
        Ok(radius) => Err(Error::WillNotConverge { radius, limit }),
        Err(Error::RadiusNotConverged { .. }) => Err(Error::WillNotConverge {
            radius: max_row_sum,
            limit,
        }),
        Err(e) => Err(e),
    }
}

/// `Z = (I - W)^{-1}` by one LU factorization with `n` right-hand sides.
pub fn fundamental_matrix(w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = w.nrows();
    let system = DMatrix::identity(n, n) - w;
    let lu = system.lu();
    let pivots = lu.u().diagonal();
    let (min_pivot, max_pivot) = pivots
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &p| (lo.min(p.abs()), hi.max(p.abs())));
    let pivot_ratio = if max_pivot > 0.0 { min_pivot / max_pivot } else { 0.0 };
    if !(pivot_ratio > f64::EPSILON) {
        return Err(Error::Singular { pivot_ratio });
    }
    let z = lu
        .solve(&DMatrix::identity(n, n))
        .ok_or(Error::Singular { pivot_ratio })?;
    if let Some((idx, v)) = z.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(Error::Numeric {
            stage: "fundamental matrix",
            detail: format!("entry {} is {v} (pivot ratio {pivot_ratio:e})", idx),
        });
    }
    Ok(z)
}

/// Expected costs of absorbing walks, `C̄[s,t] = S[s,t] - S[t,t]`, before
/// symmetrization. Shared by the single- and multi-view entry points.
pub fn expected_costs(inputs: &RspInputs, params: &RspParams) -> Result<DMatrix<f64>> {
    let n = inputs.n();
    let w = gibbs_weights(inputs, params.beta());
    check_convergence(&w, params.radius_tolerance())?;
    let z = fundamental_matrix(&w)?;
    for i in 0..n {
        for j in 0..n {
            let v = z[(i, j)];
            if !(v >= MIN_FUNDAMENTAL_ENTRY) {
                return Err(Error::Numeric {
                    stage: "fundamental matrix",
                    detail: format!(
                        "Z[{i},{j}] = {v:e} is below {MIN_FUNDAMENTAL_ENTRY:e}; beta too large or graph disconnected"
                    ),
                });
            }
        }
    }
    let cost_weighted = inputs.cost().dense().component_mul(&w);
    let mut s = &z * cost_weighted * &z;
    s.component_div_assign(&z);
    if s.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric {
            stage: "expected cost",
            detail: "non-finite entry in S".into(),
        });
    }
    let diag = s.diagonal();
    for (t, mut col) in s.column_iter_mut().enumerate() {
        col.add_scalar_mut(-diag[t]);
    }
    Ok(s)
}

/// `(C̄ + C̄ᵀ) / 2` with an exact zero diagonal.
pub fn symmetrize(expected: &DMatrix<f64>) -> Result<DissimilarityMatrix> {
    let n = expected.nrows();
    let mut delta = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (expected[(i, j)] + expected[(j, i)]);
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Numeric {
                    stage: "symmetrization",
                    detail: format!("dissimilarity ({i}, {j}) = {v}"),
                });
            }
            delta[(i, j)] = v;
            delta[(j, i)] = v;
        }
    }
    Ok(DissimilarityMatrix { values: delta })
}

/// RSP dissimilarity of a connected graph given as a transition/cost pair.
pub fn rsp_dissimilarity(inputs: &RspInputs, params: &RspParams) -> Result<DissimilarityMatrix> {
    symmetrize(&expected_costs(inputs, params)?)
}
