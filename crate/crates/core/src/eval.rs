//! Clustering quality against a reference partition.

use nalgebra::DMatrix;
use pathfinding::kuhn_munkres::kuhn_munkres;
use pathfinding::matrix::Matrix;
use serde::{Deserialize, Serialize};

use crate::cluster::ClusterLabels;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NmiNormalization {
    /// `I / sqrt(H_pred * H_true)`
    #[default]
    Geometric,
    /// `2 I / (H_pred + H_true)`
    Arithmetic,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    #[serde(rename = "ccr")]
    pub ccr_percent: f64,
    pub nmi: f64,
    #[serde(skip)]
    pub contingency: DMatrix<usize>,
}

/// Counts with predicted labels on rows and true labels on columns.
pub fn contingency(pred: &ClusterLabels, truth: &ClusterLabels) -> Result<DMatrix<usize>> {
    if pred.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: pred.len(),
            right: truth.len(),
        });
    }
    let mut table = DMatrix::zeros(pred.k(), truth.k());
    for (&p, &t) in pred.as_slice().iter().zip(truth.as_slice()) {
        table[(p, t)] += 1;
    }
    Ok(table)
}

/// Correct classification rate in percent under the best one-to-one
/// matching of predicted to true labels.
pub fn ccr(pred: &ClusterLabels, truth: &ClusterLabels) -> Result<f64> {
    let table = contingency(pred, truth)?;
    Ok(ccr_from_table(&table, pred.len()))
}

fn ccr_from_table(table: &DMatrix<usize>, n: usize) -> f64 {
    if n == 0 {
        return 100.0;
    }
    // kuhn_munkres needs rows <= columns
    let (rows, cols) = table.shape();
    let weights = if rows <= cols {
        Matrix::from_fn(rows, cols, |(i, j)| table[(i, j)] as i64)
    } else {
        Matrix::from_fn(cols, rows, |(i, j)| table[(j, i)] as i64)
    };
    let (matched, _) = kuhn_munkres(&weights);
    100.0 * matched as f64 / n as f64
}

fn entropy(counts: impl Iterator<Item = usize>, n: f64) -> f64 {
    counts
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

fn nmi_from_table(table: &DMatrix<usize>, n: usize, normalization: NmiNormalization) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let total = n as f64;
    let row_sums: Vec<usize> = table.row_iter().map(|r| r.iter().sum()).collect();
    let col_sums: Vec<usize> = table.column_iter().map(|c| c.iter().sum()).collect();
    let h_pred = entropy(row_sums.iter().copied(), total);
    let h_true = entropy(col_sums.iter().copied(), total);
    if h_pred == 0.0 && h_true == 0.0 {
        return 1.0;
    }
    if h_pred == 0.0 || h_true == 0.0 {
        return 0.0;
    }
    let mut mutual = 0.0;
    for i in 0..table.nrows() {
        for j in 0..table.ncols() {
            let c = table[(i, j)];
            if c == 0 {
                continue;
            }
            let joint = c as f64 / total;
            mutual += joint * (c as f64 * total / (row_sums[i] as f64 * col_sums[j] as f64)).ln();
        }
    }
    let denom = match normalization {
        NmiNormalization::Geometric => (h_pred * h_true).sqrt(),
        NmiNormalization::Arithmetic => 0.5 * (h_pred + h_true),
    };
    (mutual / denom).clamp(0.0, 1.0)
}

/// Normalized mutual information, natural logarithms.
pub fn nmi(pred: &ClusterLabels, truth: &ClusterLabels) -> Result<f64> {
    nmi_with(pred, truth, NmiNormalization::Geometric)
}

pub fn nmi_with(pred: &ClusterLabels, truth: &ClusterLabels, normalization: NmiNormalization) -> Result<f64> {
    let table = contingency(pred, truth)?;
    Ok(nmi_from_table(&table, pred.len(), normalization))
}

pub fn evaluate(pred: &ClusterLabels, truth: &ClusterLabels, normalization: NmiNormalization) -> Result<MetricReport> {
    let table = contingency(pred, truth)?;
    Ok(MetricReport {
        ccr_percent: ccr_from_table(&table, pred.len()),
        nmi: nmi_from_table(&table, pred.len(), normalization),
        contingency: table,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(raw: &[i64]) -> ClusterLabels {
        ClusterLabels::from_raw(raw)
    }

    #[test]
    fn ccr_examples() {
        assert_eq!(ccr(&labels(&[1, 1, 2, 2]), &labels(&[2, 2, 1, 1])).unwrap(), 100.0);
        assert_eq!(ccr(&labels(&[1, 1, 1, 2]), &labels(&[1, 1, 2, 2])).unwrap(), 75.0);
        assert_eq!(ccr(&labels(&[1, 1, 1, 1]), &labels(&[1, 1, 2, 2])).unwrap(), 50.0);
    }

    #[test]
    fn ccr_handles_more_predicted_than_true_clusters() {
        assert_eq!(ccr(&labels(&[0, 1, 2, 3]), &labels(&[0, 0, 1, 1])).unwrap(), 50.0);
    }

    #[test]
    fn nmi_examples() {
        assert!((nmi(&labels(&[0, 0, 1, 1]), &labels(&[5, 5, 3, 3])).unwrap() - 1.0).abs() < 1e-15);
        assert!(nmi(&labels(&[0, 0, 1, 1]), &labels(&[0, 1, 0, 1])).unwrap().abs() < 1e-15);
        assert_eq!(nmi(&labels(&[0, 0, 0]), &labels(&[1, 1, 1])).unwrap(), 1.0);
        assert_eq!(nmi(&labels(&[0, 0, 0, 0]), &labels(&[0, 0, 1, 1])).unwrap(), 0.0);
    }

    #[test]
    fn nmi_direct_formula_value() {
        // pred {0,0,1,1}, truth {0,0,0,1}: contingency [[2,0],[1,1]]
        // I = 1/2 ln(4/3) + 1/4 ln(2/3) + 1/4 ln 2
        // H_pred = ln 2, H_true = -(3/4) ln(3/4) - (1/4) ln(1/4)
        let mutual = 0.5 * (4.0f64 / 3.0).ln() + 0.25 * (2.0f64 / 3.0).ln() + 0.25 * 2.0f64.ln();
        let h_pred = 2.0f64.ln();
        let h_true = -0.75 * 0.75f64.ln() - 0.25 * 0.25f64.ln();
        let expected = mutual / (h_pred * h_true).sqrt();
        let got = nmi(&labels(&[0, 0, 1, 1]), &labels(&[0, 0, 0, 1])).unwrap();
        assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");
        let arith = nmi_with(&labels(&[0, 0, 1, 1]), &labels(&[0, 0, 0, 1]), NmiNormalization::Arithmetic).unwrap();
        assert!((arith - 2.0 * mutual / (h_pred + h_true)).abs() < 1e-12);
    }

    #[test]
    fn length_mismatch() {
        assert!(matches!(
            ccr(&labels(&[0, 1]), &labels(&[0])),
            Err(Error::LengthMismatch { left: 2, right: 1 })
        ));
        assert!(nmi(&labels(&[0, 1]), &labels(&[0])).is_err());
    }

    #[test]
    fn report_serializes_as_ccr_and_nmi() {
        let r = evaluate(&labels(&[0, 0, 1, 1]), &labels(&[0, 0, 1, 1]), NmiNormalization::Geometric).unwrap();
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        assert_eq!(v["ccr"], 100.0);
        assert_eq!(v["nmi"], 1.0);
        assert_eq!(r.contingency.iter().sum::<usize>(), 4);
    }
}
