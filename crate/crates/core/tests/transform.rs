mod common;

use common::{gaussian, labeled, max_abs_diff};
use lleinc::synth::{gen_blobs, PortableRng, SwissRoll};
use lleinc::weights::cross_reconstruction_error;
use lleinc::{fit, Error, NeighborMode, ReembedConfig, Reembedder};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn blobs_model(seed: u64, config: &ReembedConfig, mode: NeighborMode) -> Reembedder {
    let data = gen_blobs(12, 3, 4, 5.0, seed).unwrap();
    fit(&data, config, mode).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn training_points_map_back_onto_themselves(
        seed in any::<u64>(),
        d in 16usize..65,
        c in 2usize..11,
        reg_idx in 0usize..3,
        intra in any::<bool>(),
    ) {
        // Self takes weight close to 1 only while the other c - 1 neighbors
        // cannot reconstruct the point on their own, i.e. c <= d; the
        // deviation then grows linearly with the regularization.
        let reg = [0.0, 1e-9, 1e-7][reg_idx];
        let mode = if intra { NeighborMode::IntraClass } else { NeighborMode::Unconstrained };
        let data = gen_blobs(16, 3, d, 5.0, seed).unwrap();
        let config = ReembedConfig::new(c, 5).with_regularization(reg).with_c_test(c);
        let model = fit(&data, &config, mode).unwrap();
        let out = model.transform(&data.to_matrix()).unwrap();
        let dev = max_abs_diff(&out, model.train_embedded());
        prop_assert!(dev <= 1e-6, "in-sample deviation {dev}");
    }

    #[test]
    fn output_depends_only_on_selected_neighbors(seed in any::<u64>(), c_test in 1usize..6) {
        let config = ReembedConfig::new(4, 2).with_c_test(c_test);
        let model = blobs_model(seed, &config, NeighborMode::IntraClass);
        let mut rng = PortableRng::new(seed ^ 7);
        let test = gaussian(&mut rng, 5, 4) * 3.0;
        let traced = model.transform_traced(&test).unwrap();
        let used: Vec<usize> = traced.weights.rows.iter().flatten().map(|&(j, _)| j).collect();
        let mut coords = model.train_embedded().clone();
        for i in 0..coords.nrows() {
            if !used.contains(&i) {
                coords.row_mut(i).add_scalar_mut(1e3 * (i as f64 + 1.0));
            }
        }
        let perturbed = model.with_train_embedded(coords).unwrap();
        prop_assert_eq!(perturbed.transform(&test).unwrap(), traced.coords);
    }

    #[test]
    fn points_inside_the_neighbor_hull_are_reconstructed_exactly(seed in any::<u64>(), n_test in 1usize..10) {
        let mut rng = PortableRng::new(seed);
        // Training points span R^3 generically, so any 4 of them have R^3 as
        // their affine hull.
        let train = labeled(&gaussian(&mut rng, 30, 3), &(0..30).map(|i| (i % 2) as u32).collect::<Vec<_>>(), 2);
        let config = ReembedConfig::new(4, 2).with_regularization(0.0).with_c_test(4);
        let model = fit(&train, &config, NeighborMode::IntraClass).unwrap();
        let test = gaussian(&mut rng, n_test, 3);
        let traced = model.transform_traced(&test).unwrap();
        let err = cross_reconstruction_error(&test, &train.to_matrix(), &traced.weights).unwrap();
        prop_assert!(err <= 1e-18 * n_test as f64, "residual {err}");
    }
}

#[test]
fn planar_points_stay_in_the_plane() {
    let mut rng = PortableRng::new(99);
    let planar = DMatrix::from_fn(24, 3, |_, j| if j == 2 { 0.0 } else { rng.normal() });
    let labels: Vec<u32> = (0..24).map(|i| (i % 2) as u32).collect();
    let train = labeled(&planar, &labels, 2);
    let config = ReembedConfig::new(3, 2).with_regularization(0.0).with_c_test(3);
    let model = fit(&train, &config, NeighborMode::IntraClass).unwrap();
    let test = DMatrix::from_row_slice(2, 3, &[0.1, -0.3, 0.0, 1.2, 0.4, 0.0]);
    let traced = model.transform_traced(&test).unwrap();
    let err = cross_reconstruction_error(&test, &train.to_matrix(), &traced.weights).unwrap();
    assert!(err <= 1e-18, "residual {err}");
}

#[test]
fn exact_training_point_with_one_neighbor() {
    let data = SwissRoll::new(20, 3, 0.3, 5).generate().unwrap();
    let model = fit(&data, &ReembedConfig::new(5, 3).with_c_test(1), NeighborMode::IntraClass).unwrap();
    let points = data.to_matrix();
    let out = model.transform(&points).unwrap();
    assert_eq!(&out, model.train_embedded());
}

#[test]
fn intra_class_and_plain_fits_differ_on_interleaved_roll() {
    let data = SwissRoll::new(30, 3, 0.5, 11).interleaved(2).generate().unwrap();
    let config = ReembedConfig::new(6, 3);
    let intra = fit(&data, &config, NeighborMode::IntraClass).unwrap();
    let plain = fit(&data, &config, NeighborMode::Unconstrained).unwrap();
    assert_ne!(intra.to_bytes(), plain.to_bytes());
    assert!(max_abs_diff(intra.train_embedded(), plain.train_embedded()) > 1e-3);
    // No intra-class edge joins two classes, so each class adds a null vector.
    assert!(intra.diagnostics().null_multiplicity >= 3);
}

#[test]
fn target_dimension_is_bounded_by_the_training_size() {
    let data = gen_blobs(16, 2, 3, 5.0, 1).unwrap();
    let err = fit(&data, &ReembedConfig::new(4, 400), NeighborMode::IntraClass).unwrap_err();
    assert!(matches!(err, Error::TargetDimTooLarge { requested: 400, max: 30 }));
    assert!(fit(&data, &ReembedConfig::new(4, 30), NeighborMode::IntraClass).is_ok());
    let literal = ReembedConfig::new(4, 31).with_literal_bottom();
    assert!(fit(&data, &literal, NeighborMode::IntraClass).is_ok());
}

#[test]
fn wide_vectors_with_few_shots() {
    let data = gen_blobs(16, 2, 1024, 10.0, 8).unwrap();
    let model = fit(&data, &ReembedConfig::new(5, 10), NeighborMode::IntraClass).unwrap();
    assert_eq!(model.train_embedded().shape(), (32, 10));
    let test = gen_blobs(16, 2, 1024, 10.0, 8).unwrap().to_matrix();
    let out = model.transform(&test).unwrap();
    assert_eq!(out.shape(), (32, 10));
    assert!(out.iter().all(|v| v.is_finite()));
}

#[test]
fn fits_are_reproducible_and_survive_a_file_round_trip() {
    let data = SwissRoll::new(25, 3, 0.3, 2).interleaved(2).generate().unwrap();
    let config = ReembedConfig::new(5, 4);
    let a = fit(&data, &config, NeighborMode::IntraClass).unwrap();
    let b = fit(&data, &config, NeighborMode::IntraClass).unwrap();
    assert_eq!(a.to_bytes(), b.to_bytes());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.rmb");
    a.save(&path).unwrap();
    let loaded = Reembedder::load(&path).unwrap();
    let test = SwissRoll::new(10, 3, 0.3, 3).interleaved(2).generate().unwrap().to_matrix();
    assert_eq!(loaded.transform(&test).unwrap(), a.transform(&test).unwrap());
    assert_eq!(loaded.to_bytes(), a.to_bytes());
}
