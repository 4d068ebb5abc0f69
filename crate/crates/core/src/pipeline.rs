//! End-to-end runs: input → dissimilarity → embedding → clustering →
//! evaluation, with every artifact written to one output directory.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::cluster::{cluster_dissimilarity, ClusterLabels};
use crate::datasets::{self, Hole, SbmParams, DEFAULT_PROJECTION_ANGLES};
use crate::embed::classical_mds;
use crate::error::{Error, Result};
use crate::eval::{evaluate, NmiNormalization};
use crate::fusion::{crsp_dissimilarity, FusionMode};
use crate::graph::{cull_disconnected_indexed, gaussian_affinity, Bandwidth, MultiViewGraph};
use crate::io::{self, format_matrix_csv};
use crate::rsp::{RspParams, DEFAULT_BETA, DEFAULT_RADIUS_TOLERANCE};

pub const PARTIAL_MARKER: &str = "PARTIAL";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum InputSpec {
    Manifest {
        path: PathBuf,
    },
    /// Seeded from the config's `seed`.
    Sbm {
        n: usize,
        k: usize,
        c: f64,
        lambda: f64,
        m: usize,
    },
    /// Gaussian-kernel views of rotated planar projections of a Swiss roll.
    Swissroll {
        n: usize,
        #[serde(default = "datasets::default_holes")]
        holes: Vec<Hole>,
        #[serde(default = "default_angles")]
        angles: Vec<f64>,
    },
}

fn default_angles() -> Vec<f64> {
    DEFAULT_PROJECTION_ANGLES.to_vec()
}

fn default_beta() -> f64 {
    DEFAULT_BETA
}

fn default_radius_tolerance() -> f64 {
    DEFAULT_RADIUS_TOLERANCE
}

fn default_dims() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub input: InputSpec,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_radius_tolerance")]
    pub radius_tolerance: f64,
    #[serde(default)]
    pub fusion: FusionMode,
    #[serde(default = "default_dims")]
    pub dims: usize,
    /// Defaults to the number of ground-truth clusters when labels exist.
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    /// Cull a manifest graph until every view is connected instead of
    /// rejecting it. Generated SBM graphs are always culled.
    #[serde(default)]
    pub cull: bool,
    #[serde(default)]
    pub nmi: NmiNormalization,
    pub output_dir: PathBuf,
}

impl PipelineConfig {
    pub fn new(input: InputSpec, output_dir: impl Into<PathBuf>) -> Self {
        Self {
            input,
            beta: DEFAULT_BETA,
            radius_tolerance: DEFAULT_RADIUS_TOLERANCE,
            fusion: FusionMode::default(),
            dims: default_dims(),
            k: None,
            seed: 0,
            cull: false,
            nmi: NmiNormalization::default(),
            output_dir: output_dir.into(),
        }
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn rsp_params(&self) -> Result<RspParams> {
        RspParams::with_radius_tolerance(self.beta, self.radius_tolerance)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineMetrics {
    pub ccr: Option<f64>,
    pub nmi: Option<f64>,
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub negative_eigenvalues: usize,
    pub timings: Vec<StageTiming>,
}

#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub metrics: PipelineMetrics,
    pub labels: ClusterLabels,
    pub node_ids: Vec<String>,
    pub artifacts: Vec<PathBuf>,
}

#[derive(Debug)]
pub struct PipelineFailure {
    pub stage: &'static str,
    pub error: Error,
}

impl std::fmt::Display for PipelineFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "stage `{}` failed: {}", self.stage, self.error)
    }
}

impl std::error::Error for PipelineFailure {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

impl PipelineFailure {
    pub fn exit_code(&self) -> i32 {
        self.error.exit_code()
    }
}

struct Timer {
    timings: Vec<StageTiming>,
}

impl Timer {
    fn stage<T>(&mut self, stage: &'static str, f: impl FnOnce() -> Result<T>) -> Result<T, PipelineFailure> {
        let start = Instant::now();
        let out = f().map_err(|error| PipelineFailure { stage, error });
        let seconds = start.elapsed().as_secs_f64();
        log::info!("{stage}: {seconds:.3}s");
        self.timings.push(StageTiming {
            stage: stage.to_string(),
            seconds,
        });
        out
    }
}

/// Graph and optional ground truth for a pipeline input.
pub fn build_input(config: &PipelineConfig) -> Result<(MultiViewGraph, Option<ClusterLabels>)> {
    match &config.input {
        InputSpec::Manifest { path } => {
            let dataset = io::load_dataset(path)?;
            if !config.cull {
                return Ok((dataset.graph, dataset.labels));
            }
            let (graph, kept) = cull_disconnected_indexed(&dataset.graph)?;
            Ok((graph, dataset.labels.map(|l| l.select(&kept))))
        }
        InputSpec::Sbm { n, k, c, lambda, m } => {
            let sample = datasets::generate_sbm(&SbmParams {
                n: *n,
                k: *k,
                c: *c,
                lambda: *lambda,
                m: *m,
                seed: config.seed,
            })?;
            Ok((sample.graph, Some(sample.labels)))
        }
        InputSpec::Swissroll { n, holes, angles } => {
            let cloud = datasets::generate_swiss_roll(*n, holes, config.seed)?;
            let rotations: Vec<_> = angles.iter().map(|&a| datasets::rotation_about_y(a)).collect();
            let views = datasets::project_views(&cloud, &rotations)?
                .iter()
                .map(|f| gaussian_affinity(f, Bandwidth::Median))
                .collect::<Result<Vec<_>>>()?;
            Ok((MultiViewGraph::new(views)?, None))
        }
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

fn write_partial_marker(dir: &Path, failure: &PipelineFailure) {
    let marker = dir.join(PARTIAL_MARKER);
    let _ = fs::write(marker, format!("{failure}\n"));
}

/// Run every stage and write `delta.csv`, `coords.csv`, `labels.csv`,
/// `node_ids.csv`, `metrics.json`, `timing.json` and `config.json`. On
/// failure a `PARTIAL` marker naming the failed stage is left behind.
pub fn run_pipeline(config: &PipelineConfig) -> Result<PipelineOutcome, PipelineFailure> {
    let dir = config.output_dir.clone();
    fs::create_dir_all(&dir).map_err(|e| PipelineFailure {
        stage: "output",
        error: Error::io(&dir, e),
    })?;
    let _ = fs::remove_file(dir.join(PARTIAL_MARKER));
    let result = run_stages(config, &dir);
    if let Err(failure) = &result {
        write_partial_marker(&dir, failure);
    }
    result
}

fn run_stages(config: &PipelineConfig, dir: &Path) -> Result<PipelineOutcome, PipelineFailure> {
    let mut timer = Timer { timings: Vec::new() };
    let params = timer.stage("config", || config.rsp_params())?;

    let (graph, truth) = timer.stage("input", || build_input(config))?;
    timer.stage("validate", || graph.ensure_valid())?;
    let k = timer.stage("config", || {
        let k = config.k.or(truth.as_ref().map(ClusterLabels::k)).ok_or_else(|| {
            Error::InvalidParameter("k is required when the input has no ground-truth labels".into())
        })?;
        if k < 2 || k > graph.n() {
            return Err(Error::InvalidParameter(format!("k must lie in 2..={}, got {k}", graph.n())));
        }
        if config.dims == 0 || config.dims >= graph.n() {
            return Err(Error::InvalidParameter(format!(
                "dims must lie in 1..={}, got {}",
                graph.n() - 1,
                config.dims
            )));
        }
        Ok(k)
    })?;

    let delta = timer.stage("dissimilarity", || crsp_dissimilarity(&graph, &params, config.fusion))?;
    let embedding = timer.stage("embed", || classical_mds(&delta, config.dims))?;
    let labels = timer.stage("cluster", || cluster_dissimilarity(&delta, k, config.seed))?;
    let report = match &truth {
        Some(t) => Some(timer.stage("evaluate", || evaluate(&labels, t, config.nmi))?),
        None => None,
    };

    let mut resolved = config.clone();
    resolved.k = Some(k);
    let mut artifacts = Vec::new();
    timer.stage("write", || {
        let mut emit = |name: &str, body: String| -> Result<()> {
            let path = dir.join(name);
            fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
            artifacts.push(path);
            Ok(())
        };
        emit("delta.csv", format_matrix_csv(delta.as_matrix()))?;
        emit("coords.csv", format_matrix_csv(&embedding.coords))?;
        let labels_text: String = labels.as_slice().iter().map(|l| format!("{l}\n")).collect();
        emit("labels.csv", labels_text)?;
        let ids: String = graph.node_ids().iter().map(|id| format!("{id}\n")).collect();
        emit("node_ids.csv", ids)?;
        let path = dir.join("config.json");
        write_json(&path, &resolved)?;
        artifacts.push(path);
        Ok(())
    })?;

    let total: f64 = timer.timings.iter().map(|t| t.seconds).sum();
    let metrics = PipelineMetrics {
        ccr: report.as_ref().map(|r| r.ccr_percent),
        nmi: report.as_ref().map(|r| r.nmi),
        n: graph.n(),
        m: graph.m(),
        k,
        negative_eigenvalues: embedding.negative_eigenvalues,
        timings: timer.timings.clone(),
    };
    let finish = || -> Result<Vec<PathBuf>> {
        let metrics_path = dir.join("metrics.json");
        write_json(&metrics_path, &metrics)?;
        let timing_path = dir.join("timing.json");
        write_json(
            &timing_path,
            &serde_json::json!({ "stages": &metrics.timings, "total_seconds": total }),
        )?;
        Ok(vec![metrics_path, timing_path])
    };
    let written = finish().map_err(|error| PipelineFailure { stage: "write", error })?;
    artifacts.extend(written);

    Ok(PipelineOutcome {
        metrics,
        labels,
        node_ids: graph.node_ids().to_vec(),
        artifacts,
    })
}
