//! Validated domain types shared by every stage of the pipeline.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A labeled set of `n` embedding vectors of width `d`.
///
/// Vectors are stored as `f32` (the on-disk precision of model hidden
/// states); every computation converts to `f64` through [`Self::to_matrix`].
/// Labels are dense class ids in `0..n_classes` and every class is populated.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledEmbeddings {
    n: usize,
    d: usize,
    n_classes: usize,
    vectors: Vec<f32>,
    labels: Vec<u32>,
    label_names: Option<Vec<String>>,
    ids: Option<Vec<String>>,
    source: Option<String>,
}

impl LabeledEmbeddings {
    /// Builds a set from row-major `vectors` (`n * d` entries) and labels.
    pub fn new(vectors: Vec<f32>, d: usize, labels: Vec<u32>, n_classes: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidShape("embedding width must be at least 1".into()));
        }
        if vectors.len() % d != 0 {
            return Err(Error::InvalidShape(format!(
                "{} values do not form rows of width {d}",
                vectors.len()
            )));
        }
        let n = vectors.len() / d;
        if n < 2 {
            return Err(Error::InvalidShape(format!("need at least 2 points, got {n}")));
        }
        if labels.len() != n {
            return Err(Error::LengthMismatch {
                left: n,
                right: labels.len(),
            });
        }
        if let Some(pos) = vectors.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue {
                row: pos / d,
                col: pos % d,
            });
        }
        if let Some(row) = labels.iter().position(|&l| l as usize >= n_classes) {
            return Err(Error::LabelOutOfRange {
                row,
                label: labels[row],
                n_classes,
            });
        }
        if n_classes == 0 {
            return Err(Error::InvalidShape("at least one class is required".into()));
        }
        if n_classes > n {
            return Err(Error::EmptyClass(n as u32));
        }
        let mut counts = vec![0usize; n_classes];
        for &label in &labels {
            counts[label as usize] += 1;
        }
        if let Some(empty) = counts.iter().position(|&c| c == 0) {
            return Err(Error::EmptyClass(empty as u32));
        }
        Ok(Self {
            n,
            d,
            n_classes,
            vectors,
            labels,
            label_names: None,
            ids: None,
            source: None,
        })
    }

    /// Rounds an `f64` matrix (rows are points) to storage precision.
    pub fn from_matrix(points: &DMatrix<f64>, labels: Vec<u32>, n_classes: usize) -> Result<Self> {
        let (n, d) = points.shape();
        let mut vectors = Vec::with_capacity(n * d);
        for i in 0..n {
            vectors.extend(points.row(i).iter().map(|&v| v as f32));
        }
        Self::new(vectors, d, labels, n_classes)
    }

    pub fn with_label_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.n_classes {
            return Err(Error::LengthMismatch {
                left: self.n_classes,
                right: names.len(),
            });
        }
        self.label_names = Some(names);
        Ok(self)
    }

    pub fn with_ids(mut self, ids: Vec<String>) -> Result<Self> {
        if ids.len() != self.n {
            return Err(Error::LengthMismatch {
                left: self.n,
                right: ids.len(),
            });
        }
        self.ids = Some(ids);
        Ok(self)
    }

    pub fn with_source(mut self, source: impl Into<String>) -> Self {
        self.source = Some(source.into());
        self
    }

    pub fn len(&self) -> usize {
        self.n
    }

    /// Always false: a valid set holds at least two points.
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn vectors(&self) -> &[f32] {
        &self.vectors
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.vectors[i * self.d..(i + 1) * self.d]
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn label_names(&self) -> Option<&[String]> {
        self.label_names.as_deref()
    }

    pub fn ids(&self) -> Option<&[String]> {
        self.ids.as_deref()
    }

    pub fn source(&self) -> Option<&str> {
        self.source.as_deref()
    }

    /// Members per class, indexed by class id.
    pub fn class_sizes(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for &l in &self.labels {
            counts[l as usize] += 1;
        }
        counts
    }

    /// `n x d` matrix in computation precision; row `i` is point `i`.
    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_iterator(self.n, self.d, self.vectors.iter().map(|&v| v as f64))
    }

    /// New set holding the given rows in the given order.
    ///
    /// Class ids and the name table are kept as-is, so every class must still
    /// be represented among the selected rows.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let mut vectors = Vec::with_capacity(indices.len() * self.d);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            if i >= self.n {
                return Err(Error::ShapeMismatch(format!("row {i} out of range for {} rows", self.n)));
            }
            vectors.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        let mut out = Self::new(vectors, self.d, labels, self.n_classes)?;
        out.label_names = self.label_names.clone();
        out.ids = self
            .ids
            .as_ref()
            .map(|ids| indices.iter().map(|&i| ids[i].clone()).collect());
        out.source = self.source.clone();
        Ok(out)
    }
}

/// Which candidates may serve as reconstruction neighbors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NeighborMode {
    /// Only points sharing the anchor's label (LLE-INC).
    IntraClass,
    /// Any point (plain LLE).
    Unconstrained,
}

/// Hyper-parameters of a re-embedding fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReembedConfig {
    /// Reconstruction neighbors per training point.
    pub c_neighbors: usize,
    /// Width of the re-embedded space.
    pub target_dim: usize,
    /// Tikhonov factor on the local Gram, scaled by `trace(G) / c`.
    pub regularization: f64,
    /// Skip the constant bottom eigenvector of `M`.
    pub drop_constant_eigvec: bool,
    /// Neighbors used for out-of-sample points; `None` reuses `c_neighbors`.
    pub c_test: Option<usize>,
    /// Shrink the neighbor count of small classes instead of failing.
    pub clamp_neighbors: bool,
}

impl ReembedConfig {
    pub const DEFAULT_REGULARIZATION: f64 = 1e-3;

    pub fn new(c_neighbors: usize, target_dim: usize) -> Self {
        Self {
            c_neighbors,
            target_dim,
            regularization: Self::DEFAULT_REGULARIZATION,
            drop_constant_eigvec: true,
            c_test: None,
            clamp_neighbors: false,
        }
    }

    pub fn with_regularization(mut self, regularization: f64) -> Self {
        self.regularization = regularization;
        self
    }

    pub fn with_c_test(mut self, c_test: usize) -> Self {
        self.c_test = Some(c_test);
        self
    }

    pub fn with_literal_bottom(mut self) -> Self {
        self.drop_constant_eigvec = false;
        self
    }

    pub fn with_clamp(mut self, clamp: bool) -> Self {
        self.clamp_neighbors = clamp;
        self
    }

    pub fn effective_c_test(&self) -> usize {
        self.c_test.unwrap_or(self.c_neighbors)
    }

    /// Largest admissible `target_dim` for `n` training points.
    pub fn max_target_dim(&self, n: usize) -> usize {
        let skipped = if self.drop_constant_eigvec { 2 } else { 1 };
        n.saturating_sub(skipped)
    }

    /// Checks the data-independent constraints and the `target_dim` bound.
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.c_neighbors == 0 {
            return Err(Error::InvalidConfig("c_neighbors must be at least 1".into()));
        }
        if self.c_test == Some(0) {
            return Err(Error::InvalidConfig("c_test must be at least 1".into()));
        }
        if self.target_dim == 0 {
            return Err(Error::InvalidConfig("target_dim must be at least 1".into()));
        }
        if !(self.regularization >= 0.0 && self.regularization.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "regularization must be a finite nonnegative number, got {}",
                self.regularization
            )));
        }
        let max = self.max_target_dim(n);
        if self.target_dim > max {
            return Err(Error::TargetDimTooLarge {
                requested: self.target_dim,
                max,
            });
        }
        Ok(())
    }
}
