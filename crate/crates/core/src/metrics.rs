//! Classification scores, seed aggregation and the contrastive diagnostic.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Predictions with their vote proportions, optionally scored against gold
/// labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub predictions: Vec<u32>,
    /// `m x N`; row `i` holds the share of voters per class for query `i`.
    pub vote_shares: Vec<Vec<f64>>,
    pub accuracy: Option<f64>,
    pub macro_f1: Option<f64>,
    /// Queries (or training points) with a near-zero norm, whose cosine
    /// similarities were taken as 0.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub degenerate_queries: Vec<usize>,
}

impl EvalReport {
    pub fn n_classes(&self) -> usize {
        self.vote_shares.first().map_or(0, Vec::len)
    }

    /// Fills `accuracy` and `macro_f1` against `gold`.
    pub fn score(mut self, gold: &[u32]) -> Result<Self> {
        let n_classes = self.n_classes().max(gold.iter().max().map_or(0, |&m| m as usize + 1));
        self.accuracy = Some(accuracy(&self.predictions, gold)?);
        self.macro_f1 = Some(macro_f1(&self.predictions, gold, n_classes)?);
        Ok(self)
    }
}

fn check_lengths(pred: &[u32], gold: &[u32]) -> Result<()> {
    if pred.len() != gold.len() {
        return Err(Error::LengthMismatch {
            left: pred.len(),
            right: gold.len(),
        });
    }
    if pred.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(())
}

pub fn accuracy(pred: &[u32], gold: &[u32]) -> Result<f64> {
    check_lengths(pred, gold)?;
    let hits = pred.iter().zip(gold).filter(|(p, g)| p == g).count();
    Ok(hits as f64 / pred.len() as f64)
}

/// Unweighted mean of per-class F1 over all `n_classes` classes.
///
/// A class with no true positives (including one absent from both `pred`
/// and `gold`) contributes 0.
pub fn macro_f1(pred: &[u32], gold: &[u32], n_classes: usize) -> Result<f64> {
    check_lengths(pred, gold)?;
    if n_classes == 0 {
        return Err(Error::EmptyInput);
    }
    if let Some(&bad) = pred.iter().chain(gold).find(|&&l| l as usize >= n_classes) {
        return Err(Error::LabelOutOfRange {
            row: 0,
            label: bad,
            n_classes,
        });
    }
    let mut tp = vec![0usize; n_classes];
    let mut fp = vec![0usize; n_classes];
    let mut fn_ = vec![0usize; n_classes];
    for (&p, &g) in pred.iter().zip(gold) {
        if p == g {
            tp[p as usize] += 1;
        } else {
            fp[p as usize] += 1;
            fn_[g as usize] += 1;
        }
    }
    let total: f64 = (0..n_classes)
        .map(|k| {
            if tp[k] == 0 {
                return 0.0;
            }
            // 2PR / (P + R) = 2TP / (2TP + FP + FN)
            2.0 * tp[k] as f64 / (2 * tp[k] + fp[k] + fn_[k]) as f64
        })
        .sum();
    Ok(total / n_classes as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeedRun {
    pub seed: Option<u64>,
    pub accuracy: f64,
    pub macro_f1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput);
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Ok(Self { mean, std: var.sqrt() })
    }

    /// Percent with one decimal, e.g. `80.0 (1.2)`.
    pub fn as_percent(&self) -> String {
        format!("{:.1} ({:.1})", 100.0 * self.mean, 100.0 * self.std)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeedAggregate {
    pub accuracy: MeanStd,
    pub macro_f1: MeanStd,
}

pub fn aggregate_seeds(runs: &[SeedRun]) -> Result<SeedAggregate> {
    let acc: Vec<f64> = runs.iter().map(|r| r.accuracy).collect();
    let f1: Vec<f64> = runs.iter().map(|r| r.macro_f1).collect();
    Ok(SeedAggregate {
        accuracy: MeanStd::of(&acc)?,
        macro_f1: MeanStd::of(&f1)?,
    })
}

/// Placement of the positive term in the contrastive loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InfoNceVariant {
    /// Denominator holds only other-class terms.
    #[default]
    Literal,
    /// Denominator also holds the positive pair's own term.
    Standard,
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Contrastive loss of a labeled point set under cosine similarity.
///
/// For each anchor `a`, each same-class partner `p` gives the term
/// `log(exp(s_ap/t) / sum_{b in other classes} exp(s_ab/t))`; terms are
/// averaged over partners, then over anchors, and negated.
/// [`InfoNceVariant::Standard`] adds `exp(s_ap/t)` to the denominator.
///
/// This is an evaluation aid only. Under the literal variant the value is
/// unbounded below.
pub fn info_nce_loss(points: &DMatrix<f64>, labels: &[u32], temperature: f64, variant: InfoNceVariant) -> Result<f64> {
    let n = points.nrows();
    let norms: Vec<f64> = points.row_iter().map(|r| r.norm()).collect();
    let sim = DMatrix::from_fn(n, n, |i, j| {
        let denom = norms[i] * norms[j];
        if denom < 1e-24 {
            0.0
        } else {
            points.row(i).dot(&points.row(j)) / denom
        }
    });
    info_nce_from_similarity(&sim, labels, temperature, variant)
}

/// [`info_nce_loss`] over a precomputed similarity matrix.
pub fn info_nce_from_similarity(
    sim: &DMatrix<f64>,
    labels: &[u32],
    temperature: f64,
    variant: InfoNceVariant,
) -> Result<f64> {
    if !(temperature > 0.0) {
        return Err(Error::NonPositiveTemperature(temperature));
    }
    let n = labels.len();
    if sim.shape() != (n, n) {
        return Err(Error::ShapeMismatch(format!("{:?} similarities for {n} points", sim.shape())));
    }
    let n_classes = labels.iter().max().map_or(0, |&m| m as usize + 1);
    let mut sizes = vec![0usize; n_classes];
    labels.iter().for_each(|&l| sizes[l as usize] += 1);
    if let Some((class, &size)) = sizes.iter().enumerate().find(|(_, &s)| s == 1) {
        return Err(Error::ClassTooSmall {
            class: class as u32,
            size,
            c: 1,
        });
    }
    if sizes.iter().filter(|&&s| s > 0).count() < 2 {
        return Err(Error::InvalidShape("the contrastive loss needs at least two classes".into()));
    }

    let mut total = 0.0;
    for a in 0..n {
        let negatives = (0..n).filter(|&b| labels[b] != labels[a]).map(|b| sim[(a, b)] / temperature);
        let neg_lse = log_sum_exp(negatives);
        let positives: Vec<f64> = (0..n)
            .filter(|&p| p != a && labels[p] == labels[a])
            .map(|p| sim[(a, p)] / temperature)
            .collect();
        let anchor: f64 = positives
            .iter()
            .map(|&pos| match variant {
                InfoNceVariant::Literal => pos - neg_lse,
                InfoNceVariant::Standard => pos - log_sum_exp([pos, neg_lse].into_iter()),
            })
            .sum::<f64>()
            / positives.len() as f64;
        total += anchor;
    }
    Ok(-total / n as f64)
}
