//! Synthetic data: a multi-view stochastic block model and a Swiss roll
//! with holes, seen through several planar projections.

use std::f64::consts::PI;

use nalgebra::{DMatrix, Rotation3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cluster::ClusterLabels;
use crate::error::{Error, Result};
use crate::graph::{cull_disconnected_indexed, FeatureMatrix, MultiViewGraph, ViewAffinity};

/// Independent RNG stream for view `view` (0-based) of a seeded generator.
fn view_rng(seed: u64, view: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(view as u64 + 1);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SbmParams {
    pub n: usize,
    pub k: usize,
    /// Edge-density scale: intra-cluster edges appear with probability `c / n`.
    pub c: f64,
    /// Separation: inter-cluster edges appear with probability `c (1 - λ) / n`.
    pub lambda: f64,
    pub m: usize,
    pub seed: u64,
}

impl SbmParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.k < 2 || self.n < self.k {
            return bad(format!("need n >= k >= 2, got n = {}, k = {}", self.n, self.k));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return bad(format!("c must be positive, got {}", self.c));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return bad(format!("lambda must lie in [0, 1], got {}", self.lambda));
        }
        if self.m == 0 {
            return bad("need at least one view".into());
        }
        if self.intra_probability() > 1.0 {
            return bad(format!("c / n = {} exceeds 1", self.intra_probability()));
        }
        Ok(())
    }

    pub fn intra_probability(&self) -> f64 {
        self.c / self.n as f64
    }

    pub fn inter_probability(&self) -> f64 {
        self.c * (1.0 - self.lambda) / self.n as f64
    }

    /// Expected degree implied by the two probabilities (not `c` itself).
    pub fn expected_degree(&self) -> f64 {
        let k = self.k as f64;
        self.c * (1.0 / k + (1.0 - self.lambda) * (k - 1.0) / k)
    }
}

/// Equal-sized contiguous blocks; the first `n mod k` blocks get one extra node.
pub fn block_assignment(n: usize, k: usize) -> Vec<usize> {
    let base = n / k;
    let extra = n % k;
    (0..k)
        .flat_map(|b| std::iter::repeat_n(b, base + usize::from(b < extra)))
        .collect()
}

/// The raw views and planted labels, before culling.
pub fn sbm_views(params: &SbmParams) -> Result<(Vec<ViewAffinity>, ClusterLabels)> {
    params.validate()?;
    let n = params.n;
    let blocks = block_assignment(n, params.k);
    let (p_in, p_out) = (params.intra_probability(), params.inter_probability());
    let views = (0..params.m)
        .map(|v| {
            let mut rng = view_rng(params.seed, v);
            let mut weights = DMatrix::zeros(n, n);
            for i in 0..n {
                for j in (i + 1)..n {
                    let p = if blocks[i] == blocks[j] { p_in } else { p_out };
                    if rng.random::<f64>() < p {
                        weights[(i, j)] = 1.0;
                        weights[(j, i)] = 1.0;
                    }
                }
            }
            ViewAffinity::from_matrix(weights)
        })
        .collect();
    let labels = ClusterLabels::new(blocks, params.k)?;
    Ok((views, labels))
}

#[derive(Debug, Clone)]
pub struct SbmSample {
    pub graph: MultiViewGraph,
    pub labels: ClusterLabels,
    /// Indices of the surviving nodes in the uncut model.
    pub kept: Vec<usize>,
}

/// Multi-view SBM, culled so every view is connected.
pub fn generate_sbm(params: &SbmParams) -> Result<SbmSample> {
    let (views, labels) = sbm_views(params)?;
    let graph = MultiViewGraph::new(views)?;
    let (graph, kept) = cull_disconnected_indexed(&graph)?;
    let labels = labels.select(&kept);
    Ok(SbmSample { graph, labels, kept })
}

pub const SWISS_ROLL_T_RANGE: (f64, f64) = (1.5 * PI, 4.5 * PI);
pub const SWISS_ROLL_H_RANGE: (f64, f64) = (0.0, 21.0);

/// A disc removed from the `(t, h)` parameter rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hole {
    pub t: f64,
    pub h: f64,
    pub radius: f64,
}

impl Hole {
    pub fn contains(&self, t: f64, h: f64) -> bool {
        (t - self.t).powi(2) + (h - self.h).powi(2) < self.radius * self.radius
    }
}

/// Two holes, one early and one late along the roll.
pub fn default_holes() -> Vec<Hole> {
    vec![
        Hole {
            t: 2.5 * PI,
            h: 7.0,
            radius: 2.5,
        },
        Hole {
            t: 3.5 * PI,
            h: 14.0,
            radius: 2.5,
        },
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud3D {
    /// `n x 3`.
    pub points: DMatrix<f64>,
    /// Roll parameter `t` per point.
    pub node_params: Vec<f64>,
}

impl PointCloud3D {
    pub fn n(&self) -> usize {
        self.points.nrows()
    }
}

const MAX_REJECTIONS_PER_POINT: usize = 10_000;

/// Rejection-sample `(t, h)` outside the holes and roll it up as
/// `(t cos t, h, t sin t)`.
pub fn generate_swiss_roll(n: usize, holes: &[Hole], seed: u64) -> Result<PointCloud3D> {
    if n < 10 {
        return Err(Error::InvalidParameter(format!("need at least 10 points, got {n}")));
    }
    let (t0, t1) = SWISS_ROLL_T_RANGE;
    let (h0, h1) = SWISS_ROLL_H_RANGE;
    let covered = |t: f64, h: f64| holes.iter().any(|hole| hole.contains(t, h));
    let grid = 200;
    let any_free = (0..=grid).any(|a| {
        (0..=grid).any(|b| {
            let t = t0 + (t1 - t0) * a as f64 / grid as f64;
            let h = h0 + (h1 - h0) * b as f64 / grid as f64;
            !covered(t, h)
        })
    });
    if !any_free {
        return Err(Error::InvalidParameter("holes cover the whole parameter rectangle".into()));
    }

    let mut rng = view_rng(seed, 0);
    let mut points = DMatrix::zeros(n, 3);
    let mut node_params = Vec::with_capacity(n);
    let mut attempts = 0usize;
    while node_params.len() < n {
        attempts += 1;
        if attempts > MAX_REJECTIONS_PER_POINT * n {
            return Err(Error::InvalidParameter("holes leave too little of the parameter rectangle".into()));
        }
        let t = rng.random_range(t0..t1);
        let h = rng.random_range(h0..h1);
        if covered(t, h) {
            continue;
        }
        let row = node_params.len();
        points[(row, 0)] = t * t.cos();
        points[(row, 1)] = h;
        points[(row, 2)] = t * t.sin();
        node_params.push(t);
    }
    Ok(PointCloud3D { points, node_params })
}

/// Rotation about the vertical (`y`) axis.
pub fn rotation_about_y(degrees: f64) -> Rotation3<f64> {
    Rotation3::from_axis_angle(&Vector3::y_axis(), degrees.to_radians())
}

pub const DEFAULT_PROJECTION_ANGLES: [f64; 4] = [0.0, 45.0, 90.0, 135.0];

/// Rotate the cloud and drop the depth (`z`) coordinate, once per rotation.
pub fn project_views(cloud: &PointCloud3D, rotations: &[Rotation3<f64>]) -> Result<Vec<FeatureMatrix>> {
    if rotations.is_empty() {
        return Err(Error::InvalidParameter("need at least one projection".into()));
    }
    rotations
        .iter()
        .map(|rot| {
            let n = cloud.n();
            let mut out = DMatrix::zeros(n, 2);
            for i in 0..n {
                let p = Vector3::new(cloud.points[(i, 0)], cloud.points[(i, 1)], cloud.points[(i, 2)]);
                let q = rot * p;
                out[(i, 0)] = q.x;
                out[(i, 1)] = q.y;
            }
            FeatureMatrix::new(out)
        })
        .collect()
}
