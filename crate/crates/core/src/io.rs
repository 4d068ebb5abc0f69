//! File formats: JSON manifests, dense CSV and coordinate-triplet views,
//! and one-label-per-line CSV label files.
//!
//! Reals are written with Rust's shortest round-trip formatting, so a
//! load/save/load cycle reproduces every value bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::cluster::ClusterLabels;
use crate::error::{Error, Result};
use crate::graph::{MultiViewGraph, ViewAffinity};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub n: usize,
    pub views: Vec<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ViewFormat {
    #[default]
    DenseCsv,
    /// `i j value` per line, 1-based, `%` comments.
    Triplets,
}

impl ViewFormat {
    fn extension(self) -> &'static str {
        match self {
            ViewFormat::DenseCsv => "csv",
            ViewFormat::Triplets => "txt",
        }
    }
}

/// A multi-view graph with optional ground-truth labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub graph: MultiViewGraph,
    pub labels: Option<ClusterLabels>,
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_manifest(path: &Path, manifest: &Manifest) -> Result<()> {
    let text = serde_json::to_string_pretty(manifest).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    write_text(path, &(text + "\n"))
}

/// Parse a dense comma-separated real matrix. Blank lines are skipped.
pub fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>> {
    let text = read_text(path)?;
    parse_matrix_csv(path, &text)
}

fn parse_matrix_csv(path: &Path, text: &str) -> Result<DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<f64>()
                    .map_err(|e| parse_error(path, idx + 1, format!("{tok:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(parse_error(
                    path,
                    idx + 1,
                    format!("expected {} columns, found {}", first.len(), row.len()),
                ));
            }
        }
        rows.push(row);
    }
    let ncols = rows.first().map_or(0, Vec::len);
    Ok(DMatrix::from_row_iterator(rows.len(), ncols, rows.into_iter().flatten()))
}

pub fn write_matrix_csv(path: &Path, matrix: &DMatrix<f64>) -> Result<()> {
    write_text(path, &format_matrix_csv(matrix))
}

pub fn format_matrix_csv(matrix: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for row in matrix.row_iter() {
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    out
}

/// Parse coordinate triplets into an `n x n` matrix.
pub fn read_triplets(path: &Path, n: usize) -> Result<DMatrix<f64>> {
    let text = read_text(path)?;
    let mut matrix = DMatrix::zeros(n, n);
    let mut seen = DMatrix::from_element(n, n, false);
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(parse_error(path, idx + 1, format!("expected `i j value`, got {line:?}")));
        }
        let index = |tok: &str| -> Result<usize> {
            let i: usize = tok
                .parse()
                .map_err(|e| parse_error(path, idx + 1, format!("bad index {tok:?}: {e}")))?;
            if i == 0 || i > n {
                return Err(parse_error(path, idx + 1, format!("index {i} outside 1..={n}")));
            }
            Ok(i - 1)
        };
        let (i, j) = (index(toks[0])?, index(toks[1])?);
        let value: f64 = toks[2]
            .parse()
            .map_err(|e| parse_error(path, idx + 1, format!("bad value {:?}: {e}", toks[2])))?;
        if seen[(i, j)] {
            return Err(parse_error(path, idx + 1, format!("duplicate entry ({}, {})", i + 1, j + 1)));
        }
        seen[(i, j)] = true;
        matrix[(i, j)] = value;
    }
    Ok(matrix)
}

/// Write every nonzero entry, both triangles, row-major.
pub fn write_triplets(path: &Path, matrix: &DMatrix<f64>) -> Result<()> {
    let mut out = format!("% {} x {} coordinate triplets, 1-based\n", matrix.nrows(), matrix.ncols());
    for i in 0..matrix.nrows() {
        for j in 0..matrix.ncols() {
            let v = matrix[(i, j)];
            if v != 0.0 {
                let _ = writeln!(out, "{} {} {v}", i + 1, j + 1);
            }
        }
    }
    write_text(path, &out)
}

/// Sniff the format: a first data line containing a comma is dense CSV.
pub fn detect_view_format(path: &Path) -> Result<ViewFormat> {
    let text = read_text(path)?;
    let first = text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('%'));
    Ok(match first {
        Some(line) if line.contains(',') => ViewFormat::DenseCsv,
        Some(_) => ViewFormat::Triplets,
        None => ViewFormat::DenseCsv,
    })
}

/// Read one view, stripping self-loops.
pub fn read_view(path: &Path, n: usize) -> Result<ViewAffinity> {
    let matrix = match detect_view_format(path)? {
        ViewFormat::DenseCsv => read_matrix_csv(path)?,
        ViewFormat::Triplets => read_triplets(path, n)?,
    };
    Ok(ViewAffinity::from_matrix(matrix))
}

pub fn read_labels(path: &Path) -> Result<ClusterLabels> {
    let text = read_text(path)?;
    let raw = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(idx, l)| {
            l.trim()
                .parse::<i64>()
                .map_err(|e| parse_error(path, idx + 1, format!("bad label {l:?}: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ClusterLabels::from_raw(&raw))
}

pub fn write_labels(path: &Path, labels: &ClusterLabels) -> Result<()> {
    let mut out = String::with_capacity(labels.len() * 2);
    for l in labels.as_slice() {
        let _ = writeln!(out, "{l}");
    }
    write_text(path, &out)
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Load a manifest and its views (in manifest order) plus optional labels.
/// Relative paths resolve against the manifest's directory.
pub fn load_dataset(manifest_path: &Path) -> Result<Dataset> {
    let manifest = read_manifest(manifest_path)?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let mut views = Vec::with_capacity(manifest.views.len());
    for (idx, rel) in manifest.views.iter().enumerate() {
        let view = read_view(&resolve(base, rel), manifest.n)?;
        if !view.weights().is_square() || view.n() != manifest.n {
            return Err(Error::ViewSizeMismatch {
                view: idx,
                expected: manifest.n,
                found: view.n(),
            });
        }
        views.push(view);
    }
    let graph = MultiViewGraph::new(views)?;
    let labels = match &manifest.labels {
        Some(rel) => {
            let labels = read_labels(&resolve(base, rel))?;
            if labels.len() != graph.n() {
                return Err(Error::LengthMismatch {
                    left: labels.len(),
                    right: graph.n(),
                });
            }
            Some(labels)
        }
        None => None,
    };
    Ok(Dataset { graph, labels })
}

pub fn load_multiview_graph(manifest_path: &Path) -> Result<MultiViewGraph> {
    load_dataset(manifest_path).map(|d| d.graph)
}

/// Write `manifest.json`, `view_<k>.{csv,txt}` and `labels.csv` into `dir`.
/// Returns the manifest path.
pub fn save_dataset(dir: &Path, dataset: &Dataset, format: ViewFormat) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut views = Vec::new();
    for (k, view) in dataset.graph.views().iter().enumerate() {
        let name = PathBuf::from(format!("view_{}.{}", k + 1, format.extension()));
        let path = dir.join(&name);
        match format {
            ViewFormat::DenseCsv => write_matrix_csv(&path, view.weights())?,
            ViewFormat::Triplets => write_triplets(&path, view.weights())?,
        }
        views.push(name);
    }
    let labels = match &dataset.labels {
        Some(l) => {
            let name = PathBuf::from("labels.csv");
            write_labels(&dir.join(&name), l)?;
            Some(name)
        }
        None => None,
    };
    let manifest = Manifest {
        n: dataset.graph.n(),
        views,
        labels,
    };
    let path = dir.join("manifest.json");
    write_manifest(&path, &manifest)?;
    Ok(path)
}
