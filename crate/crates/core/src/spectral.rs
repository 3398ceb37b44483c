//! Re-embedded coordinates from the bottom of the spectrum of
//! `M = (I - W)'(I - W)`.
//!
//! Minimizing `tr(Y' M Y)` over `n x d'` matrices with orthonormal columns
//! is solved by the eigenvectors of the `d'` smallest eigenvalues of `M`.
//! Because every row of `W` sums to one, `M 1 = 0` and the constant vector
//! is always a bottom eigenvector. Dropping it is done by shifting the
//! constant direction above the rest of the spectrum (`M + s 11'/n` with
//! `s > lambda_max`), which leaves every eigenpair orthogonal to `1` intact
//! and stays well defined when the null space has several dimensions.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::data::ReembedConfig;
use crate::error::{Error, Result};
use crate::weights::WeightMatrix;

/// Eigenvalues below `NULL_TOLERANCE * max(1, lambda_max)` count as zero.
pub const NULL_TOLERANCE: f64 = 1e-9;

/// Dense `M = (I - W)'(I - W)` for `n` points.
pub fn build_m(weights: &WeightMatrix, n: usize) -> Result<DMatrix<f64>> {
    if weights.len() != n {
        return Err(Error::ShapeMismatch(format!("{} weight rows for {n} points", weights.len())));
    }
    let mut m = DMatrix::zeros(n, n);
    let mut row: Vec<(usize, f64)> = Vec::new();
    for (r, entries) in weights.rows.iter().enumerate() {
        // Sparse row r of (I - W), duplicates merged.
        row.clear();
        row.push((r, 1.0));
        for &(j, w) in entries {
            if j >= n {
                return Err(Error::ShapeMismatch(format!("neighbor {j} of row {r} out of range")));
            }
            match row.iter_mut().find(|(k, _)| *k == j) {
                Some(slot) => slot.1 -= w,
                None => row.push((j, -w)),
            }
        }
        for &(p, vp) in &row {
            for &(q, vq) in &row {
                m[(p, q)] += vp * vq;
            }
        }
    }
    Ok(m)
}

/// `tr(Y' M Y)` for an `n x d'` coordinate matrix `Y`.
pub fn trace_objective(m: &DMatrix<f64>, coords: &DMatrix<f64>) -> f64 {
    (coords.transpose() * m * coords).trace()
}

/// Sorted eigenpairs of `M`, ready to be cut at any target dimension.
#[derive(Debug, Clone)]
pub struct Spectrum {
    /// Ascending eigenvalues of the usable eigenvectors.
    values: Vec<f64>,
    /// Matching unit eigenvectors as columns, sign-normalized.
    vectors: DMatrix<f64>,
    /// Rayleigh quotient of the constant vector when it was dropped.
    dropped_constant: Option<f64>,
    null_multiplicity: usize,
}

/// Bottom coordinates of a fit.
#[derive(Debug, Clone)]
pub struct Embedding {
    /// `n x d'`; row `i` is the re-embedded point `i`.
    pub coords: DMatrix<f64>,
    /// Skipped then retained eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    /// Leading entries of `eigenvalues` that were skipped.
    pub skipped: usize,
    /// Dimension of the numerical null space of `M`.
    pub null_multiplicity: usize,
}

/// Flips `v` so that its largest-magnitude entry (first on ties) is positive.
fn fix_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

impl Spectrum {
    pub fn of(m: &DMatrix<f64>, drop_constant: bool) -> Result<Self> {
        let n = m.nrows();
        if n != m.ncols() || n == 0 {
            return Err(Error::ShapeMismatch(format!("M must be square, got {}x{}", n, m.ncols())));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::EigSolverFailure("M has non-finite entries".into()));
        }
        let mut work = m.clone();
        let mut dropped_constant = None;
        if drop_constant {
            let shift = m.trace().abs() + 1.0;
            work.add_scalar_mut(shift / n as f64);
            dropped_constant = Some(m.sum() / n as f64);
        }
        let eig = SymmetricEigen::try_new(work, f64::EPSILON, 1000 * n.max(32))
            .ok_or_else(|| Error::EigSolverFailure(format!("no convergence on a {n}x{n} matrix")))?;

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
        if drop_constant {
            // The shifted constant direction sits at the top.
            order.pop();
        }
        let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let mut vectors = DMatrix::zeros(n, order.len());
        for (col, &k) in order.iter().enumerate() {
            let mut v: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
            fix_sign(&mut v);
            vectors.column_mut(col).copy_from_slice(&v);
        }

        let top = values.last().copied().unwrap_or(0.0).max(0.0);
        let tol = NULL_TOLERANCE * top.max(1.0);
        let null_multiplicity =
            values.iter().filter(|v| v.abs() <= tol).count() + usize::from(dropped_constant.is_some());
        Ok(Self {
            values,
            vectors,
            dropped_constant,
            null_multiplicity,
        })
    }

    pub fn n(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn null_multiplicity(&self) -> usize {
        self.null_multiplicity
    }

    /// Largest admissible target dimension.
    pub fn max_dim(&self) -> usize {
        let skipped = if self.dropped_constant.is_some() { 2 } else { 1 };
        self.n().saturating_sub(skipped)
    }

    pub fn embedding(&self, target_dim: usize) -> Result<Embedding> {
        if target_dim == 0 {
            return Err(Error::InvalidConfig("target_dim must be at least 1".into()));
        }
        if target_dim > self.max_dim() {
            return Err(Error::TargetDimTooLarge {
                requested: target_dim,
                max: self.max_dim(),
            });
        }
        let coords = self.vectors.columns(0, target_dim).into_owned();
        let mut eigenvalues: Vec<f64> = self.dropped_constant.into_iter().collect();
        let skipped = eigenvalues.len();
        eigenvalues.extend_from_slice(&self.values[..target_dim]);
        Ok(Embedding {
            coords,
            eigenvalues,
            skipped,
            null_multiplicity: self.null_multiplicity,
        })
    }
}

/// Builds `M` from `weights` and returns its bottom `config.target_dim`
/// eigenvectors.
pub fn embed(weights: &WeightMatrix, config: &ReembedConfig) -> Result<Embedding> {
    let n = weights.len();
    let max = config.max_target_dim(n);
    if config.target_dim > max {
        return Err(Error::TargetDimTooLarge {
            requested: config.target_dim,
            max,
        });
    }
    let m = build_m(weights, n)?;
    Spectrum::of(&m, config.drop_constant_eigvec)?.embedding(config.target_dim)
}
