mod common;

use common::{gaussian, random_rotation, to_rows};
use lleinc::neighbors::intra_class_neighbors_matrix;
use lleinc::synth::oracle::{oracle_constrained_ls, oracle_fit_weights};
use lleinc::synth::PortableRng;
use lleinc::weights::reconstruction_error;
use lleinc::{reconstruction_weights, solve_local_weights, unconstrained_neighbors};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn residual(point: &DVector<f64>, neighbors: &DMatrix<f64>, w: &[f64]) -> f64 {
    let recon = neighbors.transpose() * DVector::from_column_slice(w);
    (point - recon).norm_squared()
}

fn instance(seed: u64, c: usize, d: usize) -> (DVector<f64>, DMatrix<f64>) {
    let mut rng = PortableRng::new(seed);
    let point = DVector::from_fn(d, |_, _| rng.normal());
    let neighbors = DMatrix::from_fn(c, d, |_, j| point[j] + rng.normal());
    (point, neighbors)
}

const REGS: [f64; 4] = [0.0, 1e-6, 1e-3, 0.1];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rows_sum_to_one(seed in any::<u64>(), c in 1usize..9, d in 2usize..65, reg_idx in 0usize..4) {
        let reg = REGS[reg_idx];
        let c = if reg == 0.0 { c.min(d) } else { c };
        let (p, nb) = instance(seed, c, d);
        let w = solve_local_weights(p.as_slice(), &nb, reg).unwrap();
        prop_assert!((w.sum() - 1.0).abs() <= 1e-10, "sum {}", w.sum());
    }

    #[test]
    fn matches_bordered_system(seed in any::<u64>(), c in 1usize..9, d in 2usize..65, reg_idx in 0usize..4) {
        let reg = REGS[reg_idx];
        let c = if reg == 0.0 { c.min(d) } else { c };
        let (p, nb) = instance(seed, c, d);
        let w = solve_local_weights(p.as_slice(), &nb, reg).unwrap();
        let oracle = oracle_constrained_ls(p.as_slice(), &to_rows(&nb), reg).unwrap();
        let diff = w.iter().zip(&oracle).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(diff <= 1e-8, "max abs diff {diff}");
    }

    #[test]
    fn invariant_under_translation_rotation_and_scale(
        seed in any::<u64>(),
        c in 1usize..9,
        d in 2usize..20,
        reg_idx in 0usize..4,
        scale in 0.01f64..100.0,
    ) {
        let reg = REGS[reg_idx];
        let c = if reg == 0.0 { c.min(d) } else { c };
        let (p, nb) = instance(seed, c, d);
        let base = solve_local_weights(p.as_slice(), &nb, reg).unwrap();
        let mut rng = PortableRng::new(seed ^ 0xabc);
        let shift = DVector::from_fn(d, |_, _| 10.0 * rng.normal());
        let q = random_rotation(&mut rng, d);

        let maps: [&dyn Fn(&DVector<f64>) -> DVector<f64>; 3] = [
            &|v| v + &shift,
            &|v| &q * v,
            &|v| v * scale,
        ];
        for map in maps {
            let p2 = map(&p);
            let nb2 = DMatrix::from_rows(&nb.row_iter().map(|r| map(&r.transpose()).transpose()).collect::<Vec<_>>());
            let w = solve_local_weights(p2.as_slice(), &nb2, reg).unwrap();
            let diff = (&w - &base).amax();
            prop_assert!(diff <= 1e-8, "weights moved by {diff}");
        }
    }

    #[test]
    fn no_random_feasible_vector_does_better(seed in any::<u64>(), c in 2usize..9, d in 8usize..33) {
        let (p, nb) = instance(seed, c, d);
        let w = solve_local_weights(p.as_slice(), &nb, 0.0).unwrap();
        let best = residual(&p, &nb, w.as_slice());
        let mut rng = PortableRng::new(seed.wrapping_add(1));
        for _ in 0..1000 {
            let mut v: Vec<f64> = (0..c).map(|_| rng.normal()).collect();
            let fix = (1.0 - v.iter().sum::<f64>()) / c as f64;
            v.iter_mut().for_each(|x| *x += fix);
            prop_assert!(residual(&p, &nb, &v) >= best - 1e-12 * best.max(1.0));
        }
    }
}

#[test]
fn fit_matrix_matches_oracle_and_its_error() {
    let mut rng = PortableRng::new(17);
    let points = gaussian(&mut rng, 60, 5);
    let labels: Vec<u32> = (0..60).map(|i| (i % 3) as u32).collect();
    for reg in [0.0, 1e-3] {
        let graph = intra_class_neighbors_matrix(&points, &labels, 4, false).unwrap();
        let weights = reconstruction_weights(&points, &graph, reg).unwrap();
        weights.check(&graph, 1e-10).unwrap();
        let (nbrs, oracle_w, oracle_err) = oracle_fit_weights(&to_rows(&points), Some(&labels), 4, reg).unwrap();
        assert_eq!(graph.neighbor_indices, nbrs);
        for (row, ow) in weights.rows.iter().zip(&oracle_w) {
            for (&(_, w), o) in row.iter().zip(ow) {
                assert!((w - o).abs() < 1e-8);
            }
        }
        let err = reconstruction_error(&points, &weights).unwrap();
        assert!((err - oracle_err).abs() < 1e-9 * oracle_err.max(1.0));
    }
}

#[test]
fn weights_survive_rigid_motion_of_the_whole_set() {
    let mut rng = PortableRng::new(5);
    let points = gaussian(&mut rng, 40, 4);
    let q = random_rotation(&mut rng, 4);
    let moved = &points * q.transpose() + DMatrix::from_fn(40, 4, |_, j| [3.0, -7.0, 1.5, 100.0][j]);
    let labels: Vec<u32> = (0..40).map(|i| (i % 2) as u32).collect();
    let g1 = intra_class_neighbors_matrix(&points, &labels, 5, false).unwrap();
    let g2 = intra_class_neighbors_matrix(&moved, &labels, 5, false).unwrap();
    assert_eq!(g1, g2);
    let u1 = unconstrained_neighbors(&points, &points, 5, true).unwrap();
    let u2 = unconstrained_neighbors(&moved, &moved, 5, true).unwrap();
    assert_eq!(u1, u2);
    let w1 = reconstruction_weights(&points, &g1, 1e-3).unwrap();
    let w2 = reconstruction_weights(&moved, &g2, 1e-3).unwrap();
    for (a, b) in w1.rows.iter().zip(&w2.rows) {
        for (x, y) in a.iter().zip(b) {
            assert_eq!(x.0, y.0);
            assert!((x.1 - y.1).abs() < 1e-8);
        }
    }
}
