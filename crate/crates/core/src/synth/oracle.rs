//! Brute-force reference implementations for tests.
//!
//! Nothing here calls into the production pipeline: inputs are plain
//! nested vectors, linear systems go through a hand-written Gaussian
//! elimination and eigenproblems through cyclic Jacobi rotations. Slow but
//! transparent; sized for fixtures of a few hundred points.

use crate::error::{Error, Result};

pub type Rows = [Vec<f64>];

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
/// Returns `None` when a pivot is zero relative to the matrix scale.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return None;
    }
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() <= 1e-14 * scale {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    Some(x)
}

/// Local Gram of difference vectors with the trace-scaled ridge.
fn regularized_gram(point: &[f64], neighbors: &Rows, regularization: f64) -> Vec<Vec<f64>> {
    let c = neighbors.len();
    let mut g = vec![vec![0.0; c]; c];
    for a in 0..c {
        for b in 0..c {
            g[a][b] = (0..point.len())
                .map(|k| (neighbors[a][k] - point[k]) * (neighbors[b][k] - point[k]))
                .sum();
        }
    }
    if regularization > 0.0 {
        let trace: f64 = (0..c).map(|a| g[a][a]).sum();
        let ridge = if trace > 0.0 { regularization * trace / c as f64 } else { regularization };
        for (a, row) in g.iter_mut().enumerate() {
            row[a] += ridge;
        }
    }
    g
}

/// Equality-constrained least squares through the bordered system
/// `[G 1; 1' 0] [w; mu] = [0; 1]`.
pub fn oracle_constrained_ls(point: &[f64], neighbors: &Rows, regularization: f64) -> Result<Vec<f64>> {
    let c = neighbors.len();
    if c == 0 {
        return Err(Error::EmptyInput);
    }
    let g = regularized_gram(point, neighbors, regularization);
    let mut kkt = vec![vec![0.0; c + 1]; c + 1];
    for a in 0..c {
        kkt[a][..c].copy_from_slice(&g[a]);
        kkt[a][c] = 1.0;
        kkt[c][a] = 1.0;
    }
    let mut rhs = vec![0.0; c + 1];
    rhs[c] = 1.0;
    let mut sol = gauss_solve(kkt, rhs).ok_or(Error::SingularSystem { row: None })?;
    sol.truncate(c);
    Ok(sol)
}

/// Neighbor lists by sorting every candidate by (distance, index).
///
/// With `labels`, candidates are restricted to the anchor's class. Query
/// `i` never lists base point `i` when `exclude_self` is set.
pub fn oracle_neighbors(
    queries: &Rows,
    base: &Rows,
    labels: Option<(&[u32], &[u32])>,
    c: usize,
    exclude_self: bool,
) -> Vec<Vec<usize>> {
    queries
        .iter()
        .enumerate()
        .map(|(i, q)| {
            let mut all: Vec<(f64, usize)> = base
                .iter()
                .enumerate()
                .filter(|&(j, _)| !(exclude_self && i == j))
                .filter(|&(j, _)| labels.is_none_or(|(ql, bl)| ql[i] == bl[j]))
                .map(|(j, b)| (sq_dist(q, b), j))
                .collect();
            all.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap().then(x.1.cmp(&y.1)));
            all.into_iter().take(c).map(|(_, j)| j).collect()
        })
        .collect()
}

/// Summed squared residual of `queries` reconstructed from `base`.
pub fn oracle_reconstruction_error(queries: &Rows, base: &Rows, neighbors: &[Vec<usize>], weights: &[Vec<f64>]) -> f64 {
    let mut total = 0.0;
    for (i, q) in queries.iter().enumerate() {
        let mut residual = q.clone();
        for (&j, &w) in neighbors[i].iter().zip(&weights[i]) {
            for (r, b) in residual.iter_mut().zip(&base[j]) {
                *r -= w * b;
            }
        }
        total += residual.iter().map(|v| v * v).sum::<f64>();
    }
    total
}

/// Neighbors, weights and total reconstruction error of a fit-time graph.
pub fn oracle_fit_weights(
    points: &Rows,
    labels: Option<&[u32]>,
    c: usize,
    regularization: f64,
) -> Result<(Vec<Vec<usize>>, Vec<Vec<f64>>, f64)> {
    let neighbors = oracle_neighbors(points, points, labels.map(|l| (l, l)), c, true);
    let weights = neighbors
        .iter()
        .enumerate()
        .map(|(i, nbrs)| {
            let rows: Vec<Vec<f64>> = nbrs.iter().map(|&j| points[j].clone()).collect();
            oracle_constrained_ls(&points[i], &rows, regularization)
        })
        .collect::<Result<Vec<_>>>()?;
    let error = oracle_reconstruction_error(points, points, &neighbors, &weights);
    Ok((neighbors, weights, error))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Cosine,
    Euclidean,
}

/// Full-sort nearest-neighbor vote with the production tie rules: closest
/// (most similar) first, then lower index; votes by count, then summed
/// similarity (negated distance for Euclidean), then lower class id.
pub fn oracle_knn(train: &Rows, labels: &[u32], queries: &Rows, e: usize, metric: Metric) -> Vec<u32> {
    let n_classes = labels.iter().max().map_or(0, |&m| m as usize + 1);
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    queries
        .iter()
        .map(|q| {
            let qn = norm(q);
            let mut scored: Vec<(f64, usize)> = train
                .iter()
                .enumerate()
                .map(|(j, t)| {
                    let s = match metric {
                        Metric::Cosine => {
                            let tn = norm(t);
                            if qn < 1e-12 || tn < 1e-12 {
                                0.0
                            } else {
                                let qu: Vec<f64> = q.iter().map(|v| v / qn).collect();
                                let tu: Vec<f64> = t.iter().map(|v| v / tn).collect();
                                qu.iter().zip(&tu).map(|(a, b)| a * b).sum()
                            }
                        }
                        Metric::Euclidean => -sq_dist(q, t).sqrt(),
                    };
                    (s, j)
                })
                .collect();
            scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
            let mut counts = vec![0usize; n_classes];
            let mut sums = vec![0.0; n_classes];
            for &(s, j) in scored.iter().take(e) {
                counts[labels[j] as usize] += 1;
                sums[labels[j] as usize] += s;
            }
            let mut best = 0;
            for k in 1..n_classes {
                if counts[k] > counts[best] || (counts[k] == counts[best] && sums[k] > sums[best]) {
                    best = k;
                }
            }
            best as u32
        })
        .collect()
}

/// Eigenvalues and eigenvectors (as columns of the returned rows) of a
/// symmetric matrix by cyclic Jacobi rotations, unsorted.
pub fn jacobi_eigen(matrix: &Rows) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = matrix.len();
    let mut a = matrix.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect();
    let total: f64 = a.iter().flatten().map(|x| x * x).sum();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|p| (0..n).filter(move |&q| q != p).map(move |q| (p, q))).map(|(p, q)| a[p][q] * a[p][q]).sum();
        if off <= 1e-30 * total || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for row in a.iter_mut() {
                    let (kp, kq) = (row[p], row[q]);
                    row[p] = c * kp - s * kq;
                    row[q] = s * kp + c * kq;
                }
                for k in 0..n {
                    let (pk, qk) = (a[p][k], a[q][k]);
                    a[p][k] = c * pk - s * qk;
                    a[q][k] = s * pk + c * qk;
                }
                for row in v.iter_mut() {
                    let (kp, kq) = (row[p], row[q]);
                    row[p] = c * kp - s * kq;
                    row[q] = s * kp + c * kq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i][i]).collect(), v)
}

/// Textbook locally linear embedding: class-blind `c`-nearest neighbors,
/// ridge-regularized weights normalized to sum to one, dense
/// `M = (I - W)'(I - W)` and the eigenvectors of the 2nd through
/// `(target_dim + 1)`-th smallest eigenvalues. Returns `n` rows of width
/// `target_dim` and the retained eigenvalues.
pub fn oracle_lle(points: &Rows, c: usize, regularization: f64, target_dim: usize) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let n = points.len();
    if target_dim + 1 >= n {
        return Err(Error::TargetDimTooLarge {
            requested: target_dim,
            max: n.saturating_sub(2),
        });
    }
    let neighbors = oracle_neighbors(points, points, None, c, true);
    let mut w = vec![vec![0.0; n]; n];
    for (i, nbrs) in neighbors.iter().enumerate() {
        let rows: Vec<Vec<f64>> = nbrs.iter().map(|&j| points[j].clone()).collect();
        let g = regularized_gram(&points[i], &rows, regularization);
        let x = gauss_solve(g, vec![1.0; nbrs.len()]).ok_or(Error::SingularSystem { row: Some(i) })?;
        let sum: f64 = x.iter().sum();
        for (&j, xv) in nbrs.iter().zip(&x) {
            w[i][j] = xv / sum;
        }
    }
    // A = I - W, M = A'A
    let a: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| f64::from(u8::from(i == j)) - w[i][j]).collect())
        .collect();
    let m: Vec<Vec<f64>> = (0..n)
        .map(|p| (0..n).map(|q| (0..n).map(|r| a[r][p] * a[r][q]).sum()).collect())
        .collect();
    let (values, vectors) = jacobi_eigen(&m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| values[x].partial_cmp(&values[y]).unwrap());
    let kept = &order[1..=target_dim];
    let coords = (0..n).map(|i| kept.iter().map(|&k| vectors[i][k]).collect()).collect();
    Ok((coords, kept.iter().map(|&k| values[k]).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kkt_trivial_cases() {
        assert_eq!(oracle_constrained_ls(&[0.0], &[vec![3.0]], 0.0).unwrap(), vec![1.0]);
        let w = oracle_constrained_ls(&[1.0, 1.0], &[vec![0.0, 0.0], vec![2.0, 2.0]], 0.0).unwrap();
        assert!((w[0] - 0.5).abs() < 1e-15 && (w[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn jacobi_on_known_spectrum() {
        let m = vec![vec![2.0, 1.0, 0.0], vec![1.0, 2.0, 0.0], vec![0.0, 0.0, 5.0]];
        let (mut values, _) = jacobi_eigen(&m);
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (got, want) in values.iter().zip([1.0, 3.0, 5.0]) {
            assert!((got - want).abs() < 1e-13);
        }
    }

    #[test]
    fn knn_self_query_and_empty() {
        let train = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert_eq!(oracle_knn(&train, &[0, 1], &[vec![0.0, 2.0]], 1, Metric::Cosine), vec![1]);
        assert!(oracle_knn(&train, &[0, 1], &[], 1, Metric::Euclidean).is_empty());
    }
}
