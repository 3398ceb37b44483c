//! Exact nearest-neighbor graphs in the original embedding space.
//!
//! Distances are squared Euclidean, summed in coordinate order. Equidistant
//! candidates are ordered by ascending index, so every graph is a pure
//! function of the input regardless of thread scheduling.

use std::cmp::Ordering;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::data::{LabeledEmbeddings, NeighborMode};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborGraph {
    /// `neighbor_indices[i]` lists the neighbors of point `i`, nearest first.
    pub neighbor_indices: Vec<Vec<usize>>,
    pub mode: NeighborMode,
    /// Number of base points the indices refer to.
    pub source_n: usize,
}

impl NeighborGraph {
    pub fn len(&self) -> usize {
        self.neighbor_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbor_indices.is_empty()
    }

    /// Checks index bounds and uniqueness, and for fit graphs (one row per
    /// base point, `labels` given) self-exclusion and the class constraint.
    pub fn check(&self, labels: Option<&[u32]>) -> Result<()> {
        for (i, row) in self.neighbor_indices.iter().enumerate() {
            let mut seen = row.clone();
            seen.sort_unstable();
            seen.dedup();
            if seen.len() != row.len() {
                return Err(Error::ShapeMismatch(format!("duplicate neighbor in row {i}")));
            }
            if let Some(&bad) = row.iter().find(|&&j| j >= self.source_n) {
                return Err(Error::ShapeMismatch(format!("neighbor {bad} of row {i} out of range")));
            }
            if let Some(labels) = labels {
                if row.contains(&i) {
                    return Err(Error::ShapeMismatch(format!("row {i} lists itself")));
                }
                if self.mode == NeighborMode::IntraClass && row.iter().any(|&j| labels[j] != labels[i]) {
                    return Err(Error::ShapeMismatch(format!("row {i} crosses a class boundary")));
                }
            }
        }
        Ok(())
    }

    /// Connected components of the graph with edges taken as undirected.
    /// Only meaningful for fit graphs, where rows and base points coincide.
    pub fn component_count(&self) -> usize {
        let n = self.source_n.max(self.len());
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        let mut components = n;
        for (i, row) in self.neighbor_indices.iter().enumerate() {
            for &j in row {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a] = b;
                    components -= 1;
                }
            }
        }
        components
    }
}

#[inline]
pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn by_distance_then_index(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

/// The `k` nearest of `candidates`, nearest first.
fn k_nearest(point: &[f64], base: &DMatrix<f64>, candidates: impl Iterator<Item = usize>, k: usize) -> Vec<usize> {
    let mut scored: Vec<(f64, usize)> = candidates
        .map(|j| (squared_distance(point, base.column(j).as_slice()), j))
        .collect();
    if k == 0 {
        return Vec::new();
    }
    if scored.len() > k {
        scored.select_nth_unstable_by(k - 1, by_distance_then_index);
        scored.truncate(k);
    }
    scored.sort_unstable_by(by_distance_then_index);
    scored.into_iter().map(|(_, j)| j).collect()
}

/// Intra-class graph over a labeled set.
pub fn intra_class_neighbors(data: &LabeledEmbeddings, c: usize, clamp: bool) -> Result<NeighborGraph> {
    intra_class_neighbors_matrix(&data.to_matrix(), data.labels(), c, clamp)
}

/// Intra-class graph over an `n x d` point matrix: every point gets its `c`
/// nearest same-label points, itself excluded.
///
/// With `clamp`, classes with `c` or fewer members contribute all of their
/// other members instead of failing.
pub fn intra_class_neighbors_matrix(
    points: &DMatrix<f64>,
    labels: &[u32],
    c: usize,
    clamp: bool,
) -> Result<NeighborGraph> {
    let n = points.nrows();
    if labels.len() != n {
        return Err(Error::LengthMismatch { left: n, right: labels.len() });
    }
    if c == 0 {
        return Err(Error::InvalidConfig("neighbor count must be at least 1".into()));
    }
    let n_classes = labels.iter().max().map_or(0, |&m| m as usize + 1);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, &l) in labels.iter().enumerate() {
        members[l as usize].push(i);
    }
    for (class, m) in members.iter().enumerate() {
        let too_small = if clamp { m.len() == 1 } else { !m.is_empty() && m.len() <= c };
        if too_small {
            return Err(Error::ClassTooSmall {
                class: class as u32,
                size: m.len(),
                c: if clamp { 1 } else { c },
            });
        }
    }

    let base = points.transpose();
    let neighbor_indices = (0..n)
        .into_par_iter()
        .map(|i| {
            let same = &members[labels[i] as usize];
            let k = c.min(same.len() - 1);
            k_nearest(base.column(i).as_slice(), &base, same.iter().copied().filter(|&j| j != i), k)
        })
        .collect();
    Ok(NeighborGraph {
        neighbor_indices,
        mode: NeighborMode::IntraClass,
        source_n: n,
    })
}

/// Class-blind graph: the `c` nearest base points of each query row.
///
/// `exclude_self_matches` is for in-sample use, where query row `i` is base
/// point `i`; that index is then never its own neighbor.
pub fn unconstrained_neighbors(
    query: &DMatrix<f64>,
    base: &DMatrix<f64>,
    c: usize,
    exclude_self_matches: bool,
) -> Result<NeighborGraph> {
    let n = base.nrows();
    if query.ncols() != base.ncols() {
        return Err(Error::DimensionMismatch {
            expected: base.ncols(),
            found: query.ncols(),
        });
    }
    if exclude_self_matches && query.nrows() != n {
        return Err(Error::ShapeMismatch(format!(
            "self exclusion needs the query to be the base set ({} vs {n} rows)",
            query.nrows()
        )));
    }
    if c == 0 {
        return Err(Error::InvalidConfig("neighbor count must be at least 1".into()));
    }
    let available = if exclude_self_matches { n.saturating_sub(1) } else { n };
    if c > available {
        return Err(Error::TooFewBasePoints { requested: c, available });
    }

    let base_cols = base.transpose();
    let query_cols = query.transpose();
    let neighbor_indices = (0..query.nrows())
        .into_par_iter()
        .map(|i| {
            let candidates = (0..n).filter(|&j| !(exclude_self_matches && j == i));
            k_nearest(query_cols.column(i).as_slice(), &base_cols, candidates, c)
        })
        .collect();
    Ok(NeighborGraph {
        neighbor_indices,
        mode: NeighborMode::Unconstrained,
        source_n: n,
    })
}

/// Fit-time graph for either mode over an `n x d` point matrix.
pub fn fit_graph(
    points: &DMatrix<f64>,
    labels: &[u32],
    mode: NeighborMode,
    c: usize,
    clamp: bool,
) -> Result<NeighborGraph> {
    match mode {
        NeighborMode::IntraClass => intra_class_neighbors_matrix(points, labels, c, clamp),
        NeighborMode::Unconstrained => {
            let available = points.nrows().saturating_sub(1);
            let c = if clamp { c.min(available) } else { c };
            unconstrained_neighbors(points, points, c, true)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn column(values: &[f64]) -> DMatrix<f64> {
        DMatrix::from_column_slice(values.len(), 1, values)
    }

    #[test]
    fn identical_twins_are_each_others_neighbors() {
        let points = DMatrix::from_row_slice(6, 2, &[1., 1., 1., 1., 1., 1., 5., 5., 5., 5., 5., 5.]);
        let g = intra_class_neighbors_matrix(&points, &[0, 0, 0, 1, 1, 1], 2, false).unwrap();
        assert_eq!(g.neighbor_indices, vec![vec![1, 2], vec![0, 2], vec![0, 1], vec![4, 5], vec![3, 5], vec![3, 4]]);
    }

    #[test]
    fn one_dimensional_bands() {
        // Brute force: |1-0| = |1-2| = 1, so point 1 takes index 0 by the tie rule.
        let points = column(&[0., 1., 2., 10., 11., 12.]);
        let g = intra_class_neighbors_matrix(&points, &[0, 0, 0, 1, 1, 1], 1, false).unwrap();
        assert_eq!(g.neighbor_indices, vec![vec![1], vec![0], vec![1], vec![4], vec![3], vec![4]]);
    }

    #[test]
    fn class_too_small_unless_clamped() {
        let points = column(&[0., 1., 2., 3., 4., 5.]);
        let labels = [0, 0, 1, 1, 1, 1];
        let err = intra_class_neighbors_matrix(&points, &labels, 4, false).unwrap_err();
        assert!(matches!(err, Error::ClassTooSmall { class: 0, size: 2, c: 4 }));
        let g = intra_class_neighbors_matrix(&points, &labels, 4, true).unwrap();
        assert_eq!(g.neighbor_indices[0], vec![1]);
        assert_eq!(g.neighbor_indices[2], vec![3, 4, 5]);
    }

    #[test]
    fn square_corners_tie_rule() {
        // All four corners are at squared distance 0.5 from the center.
        let base = DMatrix::from_row_slice(4, 2, &[0., 0., 1., 0., 0., 1., 1., 1.]);
        let query = DMatrix::from_row_slice(1, 2, &[0.5, 0.5]);
        let g = unconstrained_neighbors(&query, &base, 2, false).unwrap();
        assert_eq!(g.neighbor_indices, vec![vec![0, 1]]);
    }

    #[test]
    fn query_on_base_point_finds_itself() {
        let base = DMatrix::from_row_slice(3, 2, &[0., 0., 3., 0., 0., 4.]);
        let query = DMatrix::from_row_slice(1, 2, &[3., 0.]);
        let g = unconstrained_neighbors(&query, &base, 1, false).unwrap();
        assert_eq!(g.neighbor_indices, vec![vec![1]]);
    }

    #[test]
    fn too_few_base_points() {
        let base = DMatrix::from_row_slice(3, 1, &[0., 1., 2.]);
        assert!(matches!(
            unconstrained_neighbors(&base, &base, 4, false),
            Err(Error::TooFewBasePoints { requested: 4, available: 3 })
        ));
        assert!(matches!(
            unconstrained_neighbors(&base, &base, 3, true),
            Err(Error::TooFewBasePoints { requested: 3, available: 2 })
        ));
    }

    #[test]
    fn components_of_intra_class_graph() {
        let points = column(&[0., 1., 2., 10., 11., 12.]);
        let g = intra_class_neighbors_matrix(&points, &[0, 0, 0, 1, 1, 1], 1, false).unwrap();
        assert_eq!(g.component_count(), 2);
        g.check(Some(&[0, 0, 0, 1, 1, 1])).unwrap();
    }
}
