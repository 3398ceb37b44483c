#![allow(dead_code)]

use lleinc::synth::PortableRng;
use lleinc::LabeledEmbeddings;
use nalgebra::DMatrix;

pub fn gaussian(rng: &mut PortableRng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.normal())
}

pub fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Labels with every class holding at least `min_size` members.
pub fn balanced_labels(rng: &mut PortableRng, n: usize, n_classes: usize, min_size: usize) -> Vec<u32> {
    assert!(n >= n_classes * min_size);
    let mut labels: Vec<u32> = (0..n).map(|i| (i % n_classes) as u32).collect();
    for i in (1..n).rev() {
        let j = rng.below(i as u64 + 1) as usize;
        labels.swap(i, j);
    }
    labels
}

/// Exactly representable labeled set (values go through f32).
pub fn labeled(points: &DMatrix<f64>, labels: &[u32], n_classes: usize) -> LabeledEmbeddings {
    let vectors: Vec<f32> = points.transpose().iter().map(|&v| v as f32).collect();
    LabeledEmbeddings::new(vectors, points.ncols(), labels.to_vec(), n_classes).unwrap()
}

/// Random orthogonal `d x d` matrix from the QR factor of a Gaussian matrix.
pub fn random_rotation(rng: &mut PortableRng, d: usize) -> DMatrix<f64> {
    gaussian(rng, d, d).qr().q()
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Flips the columns of `b` to best match `a`, then returns the largest
/// absolute difference.
pub fn sign_aligned_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let mut b = b.clone();
    for j in 0..a.ncols() {
        if a.column(j).dot(&b.column(j)) < 0.0 {
            b.column_mut(j).neg_mut();
        }
    }
    max_abs_diff(a, &b)
}
