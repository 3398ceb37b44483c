//! Cosine nearest-neighbor voting.
//!
//! Neighbors are the training points with the *largest* cosine similarity
//! to the query. Selection ties go to the lower training index; vote ties go
//! to the larger summed similarity over the class's voters, then to the
//! lower class id.

use std::cmp::Ordering;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::data::LabeledEmbeddings;
use crate::error::{Error, Result};
use crate::metrics::EvalReport;

/// Vectors with a smaller norm are treated as degenerate.
pub const MIN_NORM: f64 = 1e-12;

/// Cosine similarity, or `None` when either vector is degenerate.
pub fn cosine_similarity_checked(a: &[f64], b: &[f64]) -> Option<f64> {
    let na = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nb = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if na < MIN_NORM || nb < MIN_NORM {
        return None;
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    Some((dot / (na * nb)).clamp(-1.0, 1.0))
}

/// Cosine similarity in `[-1, 1]`; 0 when either vector is degenerate.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> f64 {
    cosine_similarity_checked(a, b).unwrap_or(0.0)
}

fn unit_rows(m: &DMatrix<f64>) -> (Vec<Vec<f64>>, Vec<bool>) {
    m.row_iter()
        .map(|r| {
            let norm = r.norm();
            if norm < MIN_NORM {
                (vec![0.0; r.len()], true)
            } else {
                (r.iter().map(|v| v / norm).collect(), false)
            }
        })
        .unzip()
}

/// `e`-nearest-neighbor vote of each query row among the training rows.
pub fn knn_predict(
    train: &DMatrix<f64>,
    train_labels: &[u32],
    n_classes: usize,
    queries: &DMatrix<f64>,
    e: usize,
) -> Result<EvalReport> {
    let n = train.nrows();
    if train_labels.len() != n {
        return Err(Error::LengthMismatch {
            left: n,
            right: train_labels.len(),
        });
    }
    if queries.ncols() != train.ncols() {
        return Err(Error::DimensionMismatch {
            expected: train.ncols(),
            found: queries.ncols(),
        });
    }
    if e == 0 {
        return Err(Error::InvalidConfig("e must be at least 1".into()));
    }
    if e > n {
        return Err(Error::TooFewTrainPoints {
            requested: e,
            available: n,
        });
    }
    if let Some(row) = train_labels.iter().position(|&l| l as usize >= n_classes) {
        return Err(Error::LabelOutOfRange {
            row,
            label: train_labels[row],
            n_classes,
        });
    }

    let (train_units, train_degenerate) = unit_rows(train);
    let (query_units, query_degenerate) = unit_rows(queries);
    let votes: Vec<(u32, Vec<f64>)> = query_units
        .par_iter()
        .map(|q| {
            let mut scored: Vec<(f64, usize)> = train_units
                .iter()
                .map(|t| q.iter().zip(t).map(|(a, b)| a * b).sum::<f64>())
                .zip(0..n)
                .collect();
            // Numeric comparison, so that -0.0 and 0.0 tie (a float sum starts at -0.0).
            let order = |a: &(f64, usize), b: &(f64, usize)| b.0.partial_cmp(&a.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1));
            if e < n {
                scored.select_nth_unstable_by(e - 1, order);
                scored.truncate(e);
            }
            let mut counts = vec![0usize; n_classes];
            let mut sums = vec![0.0f64; n_classes];
            for &(s, j) in &scored {
                let l = train_labels[j] as usize;
                counts[l] += 1;
                sums[l] += s;
            }
            let best = (0..n_classes)
                .max_by(|&a, &b| {
                    counts[a]
                        .cmp(&counts[b])
                        .then(sums[a].partial_cmp(&sums[b]).unwrap_or(Ordering::Equal))
                        .then(b.cmp(&a))
                })
                .unwrap_or(0);
            let shares = counts.iter().map(|&c| c as f64 / e as f64).collect();
            (best as u32, shares)
        })
        .collect();

    let mut degenerate_queries: Vec<usize> = query_degenerate
        .iter()
        .enumerate()
        .filter_map(|(i, &d)| d.then_some(i))
        .collect();
    if train_degenerate.iter().any(|&d| d) && !queries.is_empty() {
        // Every query is affected by a degenerate training vector.
        degenerate_queries = (0..queries.nrows()).collect();
    }
    let (predictions, vote_shares) = votes.into_iter().unzip();
    Ok(EvalReport {
        predictions,
        vote_shares,
        accuracy: None,
        macro_f1: None,
        degenerate_queries,
    })
}

/// Cosine kNN directly on the original vectors, with no re-embedding.
pub fn baseline_no_reembed(train: &LabeledEmbeddings, test: &DMatrix<f64>, e: usize) -> Result<EvalReport> {
    knn_predict(&train.to_matrix(), train.labels(), train.n_classes(), test, e)
}
