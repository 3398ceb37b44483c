//! Synthetic labeled manifolds, few-shot sampling and brute-force oracles.
//!
//! Every generator is a pure function of its parameters and seed.

pub mod oracle;
mod rng;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

pub use rng::PortableRng;

use crate::data::LabeledEmbeddings;
use crate::error::{Error, Result};

/// Swiss roll whose classes are bands of the latent roll parameter `t`.
///
/// The roll maps `(t, y)` to `(t cos t, y, t sin t)`. The `t` range is cut
/// into `n_classes * bands_per_class` equal bands assigned to classes
/// round-robin, so with `bands_per_class > 1` classes interleave along the
/// roll. Points are emitted class by class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwissRoll {
    pub n_per_class: usize,
    pub n_classes: usize,
    pub noise_sigma: f64,
    pub seed: u64,
    pub bands_per_class: usize,
    pub t_min: f64,
    pub t_max: f64,
    pub height: f64,
}

impl SwissRoll {
    pub fn new(n_per_class: usize, n_classes: usize, noise_sigma: f64, seed: u64) -> Self {
        Self {
            n_per_class,
            n_classes,
            noise_sigma,
            seed,
            bands_per_class: 1,
            t_min: 1.5 * PI,
            t_max: 4.5 * PI,
            height: 21.0,
        }
    }

    pub fn interleaved(mut self, bands_per_class: usize) -> Self {
        self.bands_per_class = bands_per_class;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.n_per_class < 2 {
            return Err(Error::BadParams(format!("need at least 2 points per class, got {}", self.n_per_class)));
        }
        if self.n_classes == 0 || self.bands_per_class == 0 {
            return Err(Error::BadParams("need at least one class and one band per class".into()));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::BadParams(format!("bad noise level {}", self.noise_sigma)));
        }
        if !(self.t_max > self.t_min && self.t_min.is_finite() && self.t_max.is_finite()) {
            return Err(Error::BadParams("empty t range".into()));
        }
        if !(self.height >= 0.0 && self.height.is_finite()) {
            return Err(Error::BadParams(format!("bad height {}", self.height)));
        }
        Ok(())
    }

    /// Points with their latent `(t, y)` coordinates.
    pub fn generate_with_latent(&self) -> Result<(LabeledEmbeddings, Vec<(f64, f64)>)> {
        self.validate()?;
        let mut rng = PortableRng::new(self.seed);
        let n_bands = self.n_classes * self.bands_per_class;
        let width = (self.t_max - self.t_min) / n_bands as f64;
        let n = self.n_per_class * self.n_classes;
        let mut vectors = Vec::with_capacity(3 * n);
        let mut labels = Vec::with_capacity(n);
        let mut latent = Vec::with_capacity(n);
        for class in 0..self.n_classes {
            for _ in 0..self.n_per_class {
                let band = class + self.n_classes * rng.below(self.bands_per_class as u64) as usize;
                let t = self.t_min + (band as f64 + rng.uniform()) * width;
                let y = self.height * rng.uniform();
                let point = [t * t.cos(), y, t * t.sin()];
                for v in point {
                    vectors.push((v + self.noise_sigma * rng.normal()) as f32);
                }
                labels.push(class as u32);
                latent.push((t, y));
            }
        }
        let data = LabeledEmbeddings::new(vectors, 3, labels, self.n_classes)?.with_source(format!(
            "swiss-roll seed={} classes={} per_class={} noise={} bands={}",
            self.seed, self.n_classes, self.n_per_class, self.noise_sigma, self.bands_per_class
        ));
        Ok((data, latent))
    }

    pub fn generate(&self) -> Result<LabeledEmbeddings> {
        self.generate_with_latent().map(|(data, _)| data)
    }
}

pub fn gen_swiss_roll(n_per_class: usize, n_classes: usize, noise_sigma: f64, seed: u64) -> Result<LabeledEmbeddings> {
    SwissRoll::new(n_per_class, n_classes, noise_sigma, seed).generate()
}

/// Isotropic unit-variance Gaussian clusters whose centers are pairwise at
/// least `separation` apart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Blobs {
    pub n_per_class: usize,
    pub n_classes: usize,
    pub d: usize,
    pub separation: f64,
    pub seed: u64,
}

impl Blobs {
    const MAX_CENTER_TRIES: usize = 10_000;

    /// Points with the cluster centers.
    pub fn generate_with_centers(&self) -> Result<(LabeledEmbeddings, Vec<Vec<f64>>)> {
        if self.n_per_class < 2 || self.n_classes == 0 || self.d == 0 {
            return Err(Error::BadParams(format!(
                "need >= 2 points per class, >= 1 class and width >= 1 (got {}, {}, {})",
                self.n_per_class, self.n_classes, self.d
            )));
        }
        if !(self.separation >= 0.0 && self.separation.is_finite()) {
            return Err(Error::BadParams(format!("bad separation {}", self.separation)));
        }
        let mut rng = PortableRng::new(self.seed);
        // A cube this wide always leaves room for the requested packing.
        let half = self.separation * self.n_classes as f64 + 1.0;
        let mut centers: Vec<Vec<f64>> = Vec::with_capacity(self.n_classes);
        while centers.len() < self.n_classes {
            let mut placed = false;
            for _ in 0..Self::MAX_CENTER_TRIES {
                let cand: Vec<f64> = (0..self.d).map(|_| (2.0 * rng.uniform() - 1.0) * half).collect();
                let clear = centers.iter().all(|c| {
                    c.iter().zip(&cand).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt() >= self.separation
                });
                if clear {
                    centers.push(cand);
                    placed = true;
                    break;
                }
            }
            if !placed {
                return Err(Error::BadParams(format!(
                    "could not place {} centers {} apart in {} dimensions",
                    self.n_classes, self.separation, self.d
                )));
            }
        }
        let mut vectors = Vec::with_capacity(self.n_per_class * self.n_classes * self.d);
        let mut labels = Vec::with_capacity(self.n_per_class * self.n_classes);
        for (class, center) in centers.iter().enumerate() {
            for _ in 0..self.n_per_class {
                vectors.extend(center.iter().map(|&c| (c + rng.normal()) as f32));
                labels.push(class as u32);
            }
        }
        let data = LabeledEmbeddings::new(vectors, self.d, labels, self.n_classes)?.with_source(format!(
            "blobs seed={} classes={} per_class={} d={} separation={}",
            self.seed, self.n_classes, self.n_per_class, self.d, self.separation
        ));
        Ok((data, centers))
    }

    pub fn generate(&self) -> Result<LabeledEmbeddings> {
        self.generate_with_centers().map(|(data, _)| data)
    }
}

pub fn gen_blobs(n_per_class: usize, n_classes: usize, d: usize, separation: f64, seed: u64) -> Result<LabeledEmbeddings> {
    Blobs {
        n_per_class,
        n_classes,
        d,
        separation,
        seed,
    }
    .generate()
}

/// Few-shot episode: `shots` members drawn without replacement from every
/// class of `pool`, returned as ascending row indices.
pub fn few_shot_indices(pool: &LabeledEmbeddings, shots: usize, seed: u64) -> Result<Vec<usize>> {
    if shots == 0 {
        return Err(Error::BadParams("shots must be at least 1".into()));
    }
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); pool.n_classes()];
    for (i, &l) in pool.labels().iter().enumerate() {
        members[l as usize].push(i);
    }
    let mut rng = PortableRng::new(seed);
    let mut picked = Vec::with_capacity(shots * members.len());
    for (class, m) in members.iter().enumerate() {
        if m.len() < shots {
            return Err(Error::ClassTooSmall {
                class: class as u32,
                size: m.len(),
                c: shots.saturating_sub(1),
            });
        }
        picked.extend(rng.choose(m.len(), shots).into_iter().map(|k| m[k]));
    }
    picked.sort_unstable();
    Ok(picked)
}
