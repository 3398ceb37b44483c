mod common;

use common::{gaussian, to_rows};
use lleinc::neighbors::intra_class_neighbors_matrix;
use lleinc::synth::oracle::oracle_neighbors;
use lleinc::synth::PortableRng;
use lleinc::{unconstrained_neighbors, Error};
use nalgebra::DMatrix;
use proptest::prelude::*;

/// Points on a small integer grid, so exact distance ties are common.
fn grid_points(seed: u64, n: usize, d: usize) -> DMatrix<f64> {
    let mut rng = PortableRng::new(seed);
    DMatrix::from_fn(n, d, |_, _| rng.below(4) as f64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn unconstrained_matches_full_sort(seed in any::<u64>(), n in 2usize..120, d in 1usize..6, c in 1usize..8, tied in any::<bool>()) {
        let c = c.min(n - 1);
        let points = if tied { grid_points(seed, n, d) } else { gaussian(&mut PortableRng::new(seed), n, d) };
        let graph = unconstrained_neighbors(&points, &points, c, true).unwrap();
        let rows = to_rows(&points);
        prop_assert_eq!(graph.neighbor_indices, oracle_neighbors(&rows, &rows, None, c, true));
    }

    #[test]
    fn out_of_sample_matches_full_sort(seed in any::<u64>(), n in 1usize..80, m in 0usize..30, c in 1usize..6) {
        let c = c.min(n);
        let base = grid_points(seed, n, 3);
        let query = grid_points(seed ^ 1, m, 3);
        let graph = unconstrained_neighbors(&query, &base, c, false).unwrap();
        prop_assert_eq!(graph.neighbor_indices, oracle_neighbors(&to_rows(&query), &to_rows(&base), None, c, false));
    }

    #[test]
    fn intra_class_matches_full_sort_and_never_crosses(seed in any::<u64>(), n_classes in 1usize..5, per_class in 2usize..30, c in 1usize..6) {
        let mut rng = PortableRng::new(seed);
        let n = n_classes * per_class;
        let labels = common::balanced_labels(&mut rng, n, n_classes, per_class);
        let points = grid_points(seed, n, 2);
        let c = c.min(per_class - 1);
        let graph = intra_class_neighbors_matrix(&points, &labels, c, false).unwrap();
        graph.check(Some(&labels)).unwrap();
        for (i, row) in graph.neighbor_indices.iter().enumerate() {
            prop_assert_eq!(row.len(), c);
            prop_assert!(row.iter().all(|&j| labels[j] == labels[i] && j != i));
        }
        let rows = to_rows(&points);
        prop_assert_eq!(graph.neighbor_indices, oracle_neighbors(&rows, &rows, Some((&labels, &labels)), c, true));
    }

    #[test]
    fn permutation_equivariance(seed in any::<u64>(), n in 3usize..60, c in 1usize..5) {
        // Continuous coordinates: the lower-index tie rule is not permutation
        // invariant, so ties are avoided here.
        let mut rng = PortableRng::new(seed);
        let c = c.min(n - 1);
        let points = gaussian(&mut rng, n, 3);
        let labels: Vec<u32> = (0..n).map(|i| (i % 2) as u32).collect();
        let perm = rng.choose(n, n);
        let permuted = DMatrix::from_fn(n, 3, |i, j| points[(perm[i], j)]);
        let permuted_labels: Vec<u32> = perm.iter().map(|&p| labels[p]).collect();

        let a = unconstrained_neighbors(&points, &points, c, true).unwrap();
        let b = unconstrained_neighbors(&permuted, &permuted, c, true).unwrap();
        for (i, row) in b.neighbor_indices.iter().enumerate() {
            let mapped: Vec<usize> = row.iter().map(|&j| perm[j]).collect();
            prop_assert_eq!(&mapped, &a.neighbor_indices[perm[i]]);
        }

        // The smaller class has n / 2 members.
        if n / 2 >= 2 {
            let c_intra = c.min(n / 2 - 1);
            let a = intra_class_neighbors_matrix(&points, &labels, c_intra, false).unwrap();
            let b = intra_class_neighbors_matrix(&permuted, &permuted_labels, c_intra, false).unwrap();
            for (i, row) in b.neighbor_indices.iter().enumerate() {
                let mapped: Vec<usize> = row.iter().map(|&j| perm[j]).collect();
                prop_assert_eq!(&mapped, &a.neighbor_indices[perm[i]]);
            }
        }
    }
}

#[test]
fn small_class_needs_clamp() {
    let points = DMatrix::from_row_slice(5, 1, &[0., 1., 2., 10., 11.]);
    let labels = [0, 0, 0, 1, 1];
    let err = intra_class_neighbors_matrix(&points, &labels, 2, false).unwrap_err();
    assert!(matches!(err, Error::ClassTooSmall { class: 1, size: 2, c: 2 }));
    let graph = intra_class_neighbors_matrix(&points, &labels, 2, true).unwrap();
    assert_eq!(graph.neighbor_indices[3], vec![4]);
    assert_eq!(graph.neighbor_indices[0], vec![1, 2]);
}
