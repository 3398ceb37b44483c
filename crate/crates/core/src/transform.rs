//! Fitting a re-embedding and mapping unseen points into it.
//!
//! A fit runs neighbor search, weight solving and the spectral cut over a
//! labeled training set. New points are placed by solving their weights over
//! their nearest training points in the original space (no class
//! constraint, since their labels are unknown) and applying those weights to
//! the neighbors' re-embedded coordinates.
//!
//! Models serialize to `RMB1`:
//!
//! ```text
//! b"RMB1" | u32 version | u64 len, JSON header | u64 len, EMB1 training set
//!         | u64 len, coordinate block (u64 rows, u64 cols, f64 LE row-major)
//! ```

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::data::{LabeledEmbeddings, NeighborMode, ReembedConfig};
use crate::error::{Error, Result};
use crate::io::{decode_emb1, encode_emb1, Reader};
use crate::neighbors::{fit_graph, unconstrained_neighbors, NeighborGraph};
use crate::spectral::{build_m, Spectrum};
use crate::weights::{solve_rows, WeightMatrix};

pub const RMB1_MAGIC: &[u8; 4] = b"RMB1";
pub const RMB1_VERSION: u32 = 1;

/// Numerical side notes of a fit, surfaced as warnings by front-ends.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    /// Training rows whose weights needed the bordered-KKT fallback.
    pub fallback_rows: Vec<usize>,
    /// Dimension of the numerical null space of `M`.
    pub null_multiplicity: usize,
    /// Connected components of the neighbor graph (edges undirected).
    pub graph_components: usize,
}

impl FitDiagnostics {
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.fallback_rows.is_empty() {
            out.push(format!(
                "{} training rows fell back to the bordered KKT solve (first: {})",
                self.fallback_rows.len(),
                self.fallback_rows[0]
            ));
        }
        if self.null_multiplicity > 1 {
            out.push(format!(
                "eigenvalue 0 of M has multiplicity {} ({} graph components); coordinates inside the null space are an arbitrary basis",
                self.null_multiplicity, self.graph_components
            ));
        }
        out
    }
}

/// A fitted re-embedding.
#[derive(Debug, Clone)]
pub struct Reembedder {
    train_original: LabeledEmbeddings,
    train_points: DMatrix<f64>,
    train_embedded: DMatrix<f64>,
    config: ReembedConfig,
    mode: NeighborMode,
    eigenvalues: Vec<f64>,
    skipped: usize,
    diagnostics: FitDiagnostics,
}

/// Everything of a fit that does not depend on the target dimension.
#[derive(Debug, Clone)]
pub struct PreparedFit {
    data: LabeledEmbeddings,
    points: DMatrix<f64>,
    config: ReembedConfig,
    mode: NeighborMode,
    graph: NeighborGraph,
    weights: WeightMatrix,
    m: DMatrix<f64>,
    spectrum: Spectrum,
}

impl PreparedFit {
    /// Runs neighbor search, weight solving and the eigendecomposition.
    /// `config.target_dim` is ignored until [`Self::reembedder`].
    pub fn new(data: &LabeledEmbeddings, config: &ReembedConfig, mode: NeighborMode) -> Result<Self> {
        let probe = ReembedConfig {
            target_dim: 1,
            ..config.clone()
        };
        probe.validate(data.len())?;
        let points = data.to_matrix();
        let graph = fit_graph(&points, data.labels(), mode, config.c_neighbors, config.clamp_neighbors)?;
        let weights = solve_rows(&points, &points, &graph, config.regularization)?;
        let m = build_m(&weights, data.len())?;
        let spectrum = Spectrum::of(&m, config.drop_constant_eigvec)?;
        Ok(Self {
            data: data.clone(),
            points,
            config: config.clone(),
            mode,
            graph,
            weights,
            m,
            spectrum,
        })
    }

    pub fn graph(&self) -> &NeighborGraph {
        &self.graph
    }

    pub fn weights(&self) -> &WeightMatrix {
        &self.weights
    }

    pub fn m(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn max_dim(&self) -> usize {
        self.spectrum.max_dim()
    }

    pub fn reembedder(&self, target_dim: usize) -> Result<Reembedder> {
        let embedding = self.spectrum.embedding(target_dim)?;
        Ok(Reembedder {
            train_original: self.data.clone(),
            train_points: self.points.clone(),
            train_embedded: embedding.coords,
            config: ReembedConfig {
                target_dim,
                ..self.config.clone()
            },
            mode: self.mode,
            eigenvalues: embedding.eigenvalues,
            skipped: embedding.skipped,
            diagnostics: FitDiagnostics {
                fallback_rows: self.weights.fallback_rows.clone(),
                null_multiplicity: embedding.null_multiplicity,
                graph_components: self.graph.component_count(),
            },
        })
    }
}

/// Fits a re-embedding of `data`. `IntraClass` mode is LLE-INC, while
/// `Unconstrained` is plain LLE over class-blind neighbors.
pub fn fit(data: &LabeledEmbeddings, config: &ReembedConfig, mode: NeighborMode) -> Result<Reembedder> {
    config.validate(data.len())?;
    PreparedFit::new(data, config, mode)?.reembedder(config.target_dim)
}

/// Row-wise out-of-sample weights and the resulting coordinates.
#[derive(Debug, Clone)]
pub struct Transformed {
    pub coords: DMatrix<f64>,
    pub weights: WeightMatrix,
}

impl Reembedder {
    pub fn train_original(&self) -> &LabeledEmbeddings {
        &self.train_original
    }

    /// `n x d'`; row `i` is the re-embedded training point `i`.
    pub fn train_embedded(&self) -> &DMatrix<f64> {
        &self.train_embedded
    }

    pub fn config(&self) -> &ReembedConfig {
        &self.config
    }

    pub fn mode(&self) -> NeighborMode {
        self.mode
    }

    /// Skipped then retained eigenvalues of `M`, ascending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// How many leading entries of [`Self::eigenvalues`] were skipped.
    pub fn skipped(&self) -> usize {
        self.skipped
    }

    pub fn diagnostics(&self) -> &FitDiagnostics {
        &self.diagnostics
    }

    pub fn target_dim(&self) -> usize {
        self.train_embedded.ncols()
    }

    /// Re-embedded coordinates (`m x d'`) of the rows of `test` (`m x d`).
    pub fn transform(&self, test: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.transform_traced(test).map(|t| t.coords)
    }

    pub fn transform_traced(&self, test: &DMatrix<f64>) -> Result<Transformed> {
        let d = self.train_points.ncols();
        if test.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: test.ncols(),
            });
        }
        let graph = unconstrained_neighbors(test, &self.train_points, self.config.effective_c_test(), false)?;
        let weights = solve_rows(test, &self.train_points, &graph, self.config.regularization)?;
        let mut coords = DMatrix::zeros(test.nrows(), self.target_dim());
        for (i, row) in weights.rows.iter().enumerate() {
            for &(j, w) in row {
                let mut out = coords.row_mut(i);
                out += self.train_embedded.row(j) * w;
            }
        }
        Ok(Transformed { coords, weights })
    }

    /// Copy with the re-embedded coordinates replaced; shapes must match.
    pub fn with_train_embedded(&self, coords: DMatrix<f64>) -> Result<Self> {
        if coords.shape() != self.train_embedded.shape() {
            return Err(Error::ShapeMismatch(format!(
                "expected {:?} coordinates, got {:?}",
                self.train_embedded.shape(),
                coords.shape()
            )));
        }
        Ok(Self {
            train_embedded: coords,
            ..self.clone()
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let header = ModelHeader {
            config: self.config.clone(),
            mode: self.mode,
            eigenvalues: self.eigenvalues.clone(),
            skipped: self.skipped,
            n: self.train_original.len(),
            d: self.train_original.dim(),
            target_dim: self.target_dim(),
            diagnostics: self.diagnostics.clone(),
        };
        let header = serde_json::to_vec(&header).expect("model header is always serializable");
        let original = encode_emb1(&self.train_original);
        let (rows, cols) = self.train_embedded.shape();
        let mut coords = Vec::with_capacity(16 + 8 * rows * cols);
        coords.extend_from_slice(&(rows as u64).to_le_bytes());
        coords.extend_from_slice(&(cols as u64).to_le_bytes());
        for i in 0..rows {
            for v in self.train_embedded.row(i).iter() {
                coords.extend_from_slice(&v.to_le_bytes());
            }
        }

        let mut out = Vec::with_capacity(8 + 24 + header.len() + original.len() + coords.len());
        out.extend_from_slice(RMB1_MAGIC);
        out.extend_from_slice(&RMB1_VERSION.to_le_bytes());
        for section in [&header, &original, &coords] {
            out.extend_from_slice(&(section.len() as u64).to_le_bytes());
            out.extend_from_slice(section);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        if r.take(4, "magic")? != RMB1_MAGIC {
            return Err(Error::MalformedFile("bad magic, expected RMB1".into()));
        }
        let version = r.u32("version")?;
        if version != RMB1_VERSION {
            return Err(Error::MalformedFile(format!("unsupported RMB1 version {version}")));
        }
        let len = r.count(1, "header length")?;
        let header: ModelHeader = serde_json::from_slice(r.take(len, "header")?)
            .map_err(|e| Error::MalformedFile(format!("model header: {e}")))?;
        let len = r.count(1, "training set length")?;
        let train_original = decode_emb1(r.take(len, "training set")?)?;
        let len = r.count(1, "coordinate block length")?;
        let mut block = Reader::new(r.take(len, "coordinate block")?);
        if r.remaining() != 0 {
            return Err(Error::MalformedFile(format!("{} trailing bytes", r.remaining())));
        }
        let rows = block.count(0, "coordinate rows")?;
        let cols = block.count(0, "coordinate columns")?;
        if rows.checked_mul(cols).and_then(|v| v.checked_mul(8)) != Some(block.remaining()) {
            return Err(Error::MalformedFile("coordinate block size disagrees with its shape".into()));
        }
        let values: Vec<f64> = block
            .take(rows * cols * 8, "coordinates")?
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::MalformedFile("non-finite coordinate".into()));
        }
        let consistent = rows == header.n
            && cols == header.target_dim
            && header.config.target_dim == cols
            && train_original.len() == header.n
            && train_original.dim() == header.d
            && header.eigenvalues.len() == header.skipped + cols;
        if !consistent {
            return Err(Error::MalformedFile("model header disagrees with its data sections".into()));
        }
        Ok(Self {
            train_points: train_original.to_matrix(),
            train_original,
            train_embedded: DMatrix::from_row_slice(rows, cols, &values),
            config: header.config,
            mode: header.mode,
            eigenvalues: header.eigenvalues,
            skipped: header.skipped,
            diagnostics: header.diagnostics,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }
}

#[derive(Serialize, Deserialize)]
struct ModelHeader {
    config: ReembedConfig,
    mode: NeighborMode,
    eigenvalues: Vec<f64>,
    skipped: usize,
    n: usize,
    d: usize,
    target_dim: usize,
    diagnostics: FitDiagnostics,
}
