mod common;

use common::{gaussian, labeled, sign_aligned_diff, to_rows};
use lleinc::spectral::trace_objective;
use lleinc::synth::oracle::{jacobi_eigen, oracle_lle};
use lleinc::synth::{gen_swiss_roll, PortableRng};
use lleinc::{NeighborMode, PreparedFit, ReembedConfig};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use proptest::prelude::*;

/// Random `n x k` matrix with orthonormal columns, optionally orthogonal to
/// the constant vector as well.
fn random_orthonormal(rng: &mut PortableRng, n: usize, k: usize, centered: bool) -> DMatrix<f64> {
    let mut g = gaussian(rng, n, k);
    if centered {
        for mut col in g.column_iter_mut() {
            let mean = col.mean();
            col.add_scalar_mut(-mean);
        }
    }
    g.qr().q().columns(0, k).into_owned()
}

fn check_fit(prepared: &PreparedFit, config: &ReembedConfig, rng: &mut PortableRng) -> Result<(), TestCaseError> {
    let m = prepared.m();
    let n = m.nrows();
    let ones = DVector::from_element(n, 1.0);
    prop_assert!((m * &ones).amax() < 1e-9, "|M 1| = {}", (m * &ones).amax());
    let min_eig = SymmetricEigen::new(m.clone()).eigenvalues.min();
    prop_assert!(min_eig >= -1e-10, "min eigenvalue {min_eig}");

    let model = prepared.reembedder(config.target_dim).unwrap();
    let h = model.train_embedded();
    let gram = h.transpose() * h;
    let dev = (gram - DMatrix::identity(config.target_dim, config.target_dim)).amax();
    prop_assert!(dev < 1e-8, "orthonormality off by {dev}");

    let objective = trace_objective(m, h);
    let retained: f64 = model.eigenvalues()[model.skipped()..].iter().sum();
    prop_assert!((objective - retained).abs() < 1e-8, "{objective} vs {retained}");
    for _ in 0..100 {
        let v = random_orthonormal(rng, n, config.target_dim, config.drop_constant_eigvec);
        prop_assert!(objective <= trace_objective(m, &v) + 1e-10);
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn every_fit_is_a_valid_spectral_cut(
        seed in any::<u64>(),
        n_classes in 1usize..4,
        per_class in 6usize..30,
        d in 2usize..8,
        c in 1usize..6,
        dim in 1usize..5,
        intra in any::<bool>(),
        literal in any::<bool>(),
        reg_idx in 0usize..3,
    ) {
        let mut rng = PortableRng::new(seed);
        let n = n_classes * per_class;
        let labels = common::balanced_labels(&mut rng, n, n_classes, per_class);
        let data = labeled(&gaussian(&mut rng, n, d), &labels, n_classes);
        let mut config = ReembedConfig::new(c.min(d), dim).with_regularization([1e-3, 1e-6, 0.1][reg_idx]);
        if literal {
            config = config.with_literal_bottom();
        }
        let mode = if intra { NeighborMode::IntraClass } else { NeighborMode::Unconstrained };
        let prepared = PreparedFit::new(&data, &config, mode).unwrap();
        check_fit(&prepared, &config, &mut rng)?;
    }
}

#[test]
fn plain_mode_matches_textbook_lle_on_the_roll() {
    let data = gen_swiss_roll(40, 3, 0.2, 7).unwrap();
    let points = data.to_matrix();
    for (c, dim) in [(10, 2), (8, 3)] {
        let config = ReembedConfig::new(c, dim);
        let ours = PreparedFit::new(&data, &config, NeighborMode::Unconstrained)
            .unwrap()
            .reembedder(dim)
            .unwrap();
        let (coords, values) = oracle_lle(&to_rows(&points), c, config.regularization, dim).unwrap();
        let theirs = DMatrix::from_fn(points.nrows(), dim, |i, j| coords[i][j]);
        let residual = sign_aligned_diff(ours.train_embedded(), &theirs);
        assert!(residual < 1e-6, "c={c} dim={dim}: residual {residual}");
        for (a, b) in ours.eigenvalues()[ours.skipped()..].iter().zip(&values) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}

#[test]
fn literal_bottom_keeps_the_constant_vector() {
    let data = gen_swiss_roll(20, 1, 0.1, 3).unwrap();
    let config = ReembedConfig::new(6, 2).with_literal_bottom();
    let model = lleinc::fit(&data, &config, NeighborMode::Unconstrained).unwrap();
    assert_eq!(model.skipped(), 0);
    let first = model.train_embedded().column(0);
    let expected = 1.0 / (20f64).sqrt();
    assert!(first.iter().all(|v| (v - expected).abs() < 1e-8));
    assert!(model.eigenvalues()[0].abs() < 1e-10);
}

#[test]
fn disconnected_classes_give_a_null_space_per_class() {
    let data = gen_swiss_roll(15, 3, 0.1, 4).unwrap();
    let prepared = PreparedFit::new(&data, &ReembedConfig::new(5, 2), NeighborMode::IntraClass).unwrap();
    let model = prepared.reembedder(2).unwrap();
    let (values, _) = jacobi_eigen(&to_rows(prepared.m()));
    let zeros = values.iter().filter(|v| v.abs() < 1e-9).count();
    assert!(zeros >= 3);
    assert_eq!(model.diagnostics().null_multiplicity, zeros);
    assert!(!model.diagnostics().warnings().is_empty());
    // The retained coordinates lie in the null space: constant per component.
    for j in 0..2 {
        let col = model.train_embedded().column(j);
        let m_col = prepared.m() * col;
        assert!(m_col.amax() < 1e-8);
    }
}
