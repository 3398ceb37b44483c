//! Sum-to-one local reconstruction weights.
//!
//! For a point `h` with neighbors `h_1..h_c`, the weights minimize
//! `|h - sum_m w_m h_m|^2` subject to `sum_m w_m = 1`. With the local Gram
//! `G_ab = (h_a - h).(h_b - h)` the minimizer is `G^-1 1 / (1' G^-1 1)`.
//! `G` is rank-deficient whenever `c > d` or the neighbors are affinely
//! dependent, so it is regularized as `G + lambda * trace(G)/c * I`
//! (`G + lambda * I` when the trace vanishes).

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::neighbors::NeighborGraph;

/// Unregularized systems with a larger condition estimate are rejected.
pub const MAX_CONDITION: f64 = 1e14;

/// Which linear solve produced a row of weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolvePath {
    /// Closed form through a Cholesky factor of the (regularized) Gram.
    Cholesky,
    /// The `(c+1) x (c+1)` bordered KKT system, used when Cholesky fails.
    BorderedKkt,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    /// Row `i` pairs each neighbor index of point `i` with its weight.
    pub rows: Vec<Vec<(usize, f64)>>,
    /// Rows that needed the bordered-KKT fallback.
    pub fallback_rows: Vec<usize>,
}

impl WeightMatrix {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.iter().map(|&(_, w)| w).sum()).collect()
    }

    /// Verifies finiteness, graph alignment and the sum-to-one constraint.
    pub fn check(&self, graph: &NeighborGraph, tol: f64) -> Result<()> {
        if self.rows.len() != graph.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} weight rows for {} graph rows",
                self.rows.len(),
                graph.len()
            )));
        }
        for (i, (row, nbrs)) in self.rows.iter().zip(&graph.neighbor_indices).enumerate() {
            if row.len() != nbrs.len() || row.iter().zip(nbrs).any(|(&(j, _), &k)| j != k) {
                return Err(Error::ShapeMismatch(format!("row {i} does not follow the graph")));
            }
            if row.iter().any(|&(_, w)| !w.is_finite()) {
                return Err(Error::ShapeMismatch(format!("row {i} has a non-finite weight")));
            }
            let sum: f64 = row.iter().map(|&(_, w)| w).sum();
            if (sum - 1.0).abs() > tol {
                return Err(Error::ShapeMismatch(format!("row {i} sums to {sum}")));
            }
        }
        Ok(())
    }
}

fn local_gram(point: &[f64], neighbors: &[&[f64]]) -> DMatrix<f64> {
    let c = neighbors.len();
    let diffs: Vec<Vec<f64>> = neighbors
        .iter()
        .map(|nb| nb.iter().zip(point).map(|(a, b)| a - b).collect())
        .collect();
    let mut gram = DMatrix::zeros(c, c);
    for a in 0..c {
        for b in a..c {
            let v: f64 = diffs[a].iter().zip(&diffs[b]).map(|(x, y)| x * y).sum();
            gram[(a, b)] = v;
            gram[(b, a)] = v;
        }
    }
    gram
}

fn regularize(gram: &mut DMatrix<f64>, regularization: f64) {
    if regularization <= 0.0 {
        return;
    }
    let c = gram.nrows();
    let trace = gram.trace();
    let shift = if trace > 0.0 {
        regularization * trace / c as f64
    } else {
        regularization
    };
    for a in 0..c {
        gram[(a, a)] += shift;
    }
}

fn normalized(x: DVector<f64>) -> Option<DVector<f64>> {
    let sum = x.sum();
    (sum.is_finite() && sum != 0.0 && x.iter().all(|v| v.is_finite())).then(|| x / sum)
}

fn solve_gram(gram: DMatrix<f64>, regularization: f64) -> Result<(DVector<f64>, SolvePath)> {
    let c = gram.nrows();
    let ones = DVector::from_element(c, 1.0);
    if let Some(chol) = gram.clone().cholesky() {
        // (max l_ii / min l_ii)^2 is a cheap lower bound on cond(G).
        let diag = chol.l_dirty().diagonal();
        let (lo, hi) = diag.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        let condition = (hi / lo).powi(2);
        if regularization > 0.0 || condition <= MAX_CONDITION {
            if let Some(w) = normalized(chol.solve(&ones)) {
                return Ok((w, SolvePath::Cholesky));
            }
        }
    }

    let mut kkt = DMatrix::zeros(c + 1, c + 1);
    kkt.view_mut((0, 0), (c, c)).copy_from(&gram);
    for a in 0..c {
        kkt[(a, c)] = 1.0;
        kkt[(c, a)] = 1.0;
    }
    let mut rhs = DVector::zeros(c + 1);
    rhs[c] = 1.0;
    let solution = if regularization > 0.0 {
        kkt.lu().solve(&rhs)
    } else {
        let svd = kkt.svd(true, true);
        let max = svd.singular_values.max();
        let min = svd.singular_values.min();
        if !(min > 0.0 && max / min <= MAX_CONDITION) {
            return Err(Error::SingularSystem { row: None });
        }
        svd.solve(&rhs, 0.0).ok()
    };
    solution
        .and_then(|s| normalized(s.rows(0, c).into_owned()))
        .map(|w| (w, SolvePath::BorderedKkt))
        .ok_or(Error::SingularSystem { row: None })
}

fn solve_slices(point: &[f64], neighbors: &[&[f64]], regularization: f64) -> Result<(DVector<f64>, SolvePath)> {
    if neighbors.is_empty() {
        return Err(Error::InvalidConfig("at least one neighbor is required".into()));
    }
    if let Some(bad) = neighbors.iter().find(|nb| nb.len() != point.len()) {
        return Err(Error::DimensionMismatch {
            expected: point.len(),
            found: bad.len(),
        });
    }
    if neighbors.len() == 1 {
        return Ok((DVector::from_element(1, 1.0), SolvePath::Cholesky));
    }
    let mut gram = local_gram(point, neighbors);
    regularize(&mut gram, regularization);
    solve_gram(gram, regularization)
}

/// Weights reconstructing `point` from the rows of `neighbors` (`c x d`).
pub fn solve_local_weights(point: &[f64], neighbors: &DMatrix<f64>, regularization: f64) -> Result<DVector<f64>> {
    solve_local_weights_traced(point, neighbors, regularization).map(|(w, _)| w)
}

/// [`solve_local_weights`], also reporting which solve path was taken.
pub fn solve_local_weights_traced(
    point: &[f64],
    neighbors: &DMatrix<f64>,
    regularization: f64,
) -> Result<(DVector<f64>, SolvePath)> {
    if !(regularization >= 0.0 && regularization.is_finite()) {
        return Err(Error::InvalidConfig(format!("bad regularization {regularization}")));
    }
    let rows: Vec<Vec<f64>> = neighbors.row_iter().map(|r| r.iter().copied().collect()).collect();
    let slices: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
    solve_slices(point, &slices, regularization)
}

/// Weights for every row of `query` over its neighbors among the rows of
/// `base`. With `query == base` this is the fit-time weight matrix.
pub fn solve_rows(
    query: &DMatrix<f64>,
    base: &DMatrix<f64>,
    graph: &NeighborGraph,
    regularization: f64,
) -> Result<WeightMatrix> {
    if graph.len() != query.nrows() || graph.source_n != base.nrows() {
        return Err(Error::ShapeMismatch(format!(
            "graph of {} rows over {} points vs {} queries over {} points",
            graph.len(),
            graph.source_n,
            query.nrows(),
            base.nrows()
        )));
    }
    if query.ncols() != base.ncols() {
        return Err(Error::DimensionMismatch {
            expected: base.ncols(),
            found: query.ncols(),
        });
    }
    if !(regularization >= 0.0 && regularization.is_finite()) {
        return Err(Error::InvalidConfig(format!("bad regularization {regularization}")));
    }
    let base_cols = base.transpose();
    let query_cols = query.transpose();
    let solved: Vec<(Vec<(usize, f64)>, SolvePath)> = graph
        .neighbor_indices
        .par_iter()
        .enumerate()
        .map(|(i, nbrs)| {
            let d = base_cols.nrows();
            let slices: Vec<&[f64]> = nbrs.iter().map(|&j| &base_cols.as_slice()[j * d..(j + 1) * d]).collect();
            let (w, path) = solve_slices(&query_cols.as_slice()[i * d..(i + 1) * d], &slices, regularization).map_err(|e| match e {
                Error::SingularSystem { .. } => Error::SingularSystem { row: Some(i) },
                other => other,
            })?;
            Ok((nbrs.iter().copied().zip(w.iter().copied()).collect(), path))
        })
        .collect::<Result<_>>()?;
    let fallback_rows = solved
        .iter()
        .enumerate()
        .filter(|(_, (_, p))| *p == SolvePath::BorderedKkt)
        .map(|(i, _)| i)
        .collect();
    Ok(WeightMatrix {
        rows: solved.into_iter().map(|(r, _)| r).collect(),
        fallback_rows,
    })
}

/// Fit-time reconstruction weights of an `n x d` point matrix.
pub fn reconstruction_weights(points: &DMatrix<f64>, graph: &NeighborGraph, regularization: f64) -> Result<WeightMatrix> {
    solve_rows(points, points, graph, regularization)
}

/// Summed squared residual `sum_i |q_i - sum_m w_im b_m|^2` of `query` rows
/// reconstructed from `base` rows.
pub fn cross_reconstruction_error(query: &DMatrix<f64>, base: &DMatrix<f64>, weights: &WeightMatrix) -> Result<f64> {
    if weights.len() != query.nrows() || query.ncols() != base.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "{} weight rows for a {}x{} query against width {}",
            weights.len(),
            query.nrows(),
            query.ncols(),
            base.ncols()
        )));
    }
    let mut total = 0.0;
    for (i, row) in weights.rows.iter().enumerate() {
        let mut residual: DVector<f64> = query.row(i).transpose();
        for &(j, w) in row {
            if j >= base.nrows() {
                return Err(Error::ShapeMismatch(format!("neighbor {j} out of range")));
            }
            residual -= base.row(j).transpose() * w;
        }
        total += residual.norm_squared();
    }
    Ok(total)
}

/// Summed squared residual of each point reconstructed from its neighbors;
/// works on original or re-embedded coordinates alike.
pub fn reconstruction_error(points: &DMatrix<f64>, weights: &WeightMatrix) -> Result<f64> {
    cross_reconstruction_error(points, points, weights)
}
