//! End-to-end evaluation of re-embedding strategies on a train/test split.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classify::{baseline_no_reembed, knn_predict};
use crate::data::{LabeledEmbeddings, NeighborMode, ReembedConfig};
use crate::error::{Error, Result};
use crate::metrics::EvalReport;
use crate::transform::{PreparedFit, Reembedder};

/// How training and test vectors are mapped before the cosine vote.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Strategy {
    /// Re-embedding over intra-class neighbors.
    #[serde(rename = "lle-inc")]
    LleInc,
    /// Re-embedding over class-blind neighbors.
    #[serde(rename = "lle")]
    Lle,
    /// Vote directly on the original vectors.
    #[serde(rename = "none")]
    None,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::LleInc, Strategy::Lle, Strategy::None];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::LleInc => "lle-inc",
            Strategy::Lle => "lle",
            Strategy::None => "none",
        }
    }

    pub fn mode(self) -> Option<NeighborMode> {
        match self {
            Strategy::LleInc => Some(NeighborMode::IntraClass),
            Strategy::Lle => Some(NeighborMode::Unconstrained),
            Strategy::None => None,
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown strategy {s:?} (expected lle-inc, lle or none)")))
    }
}

fn check_split(train: &LabeledEmbeddings, test: &LabeledEmbeddings) -> Result<()> {
    if train.dim() != test.dim() {
        return Err(Error::DimensionMismatch {
            expected: train.dim(),
            found: test.dim(),
        });
    }
    Ok(())
}

/// Transforms `test`, votes among the re-embedded training points and scores
/// against the test labels.
pub fn evaluate_reembedder(model: &Reembedder, test: &LabeledEmbeddings, e: usize) -> Result<EvalReport> {
    let train = model.train_original();
    check_split(train, test)?;
    let coords = model.transform(&test.to_matrix())?;
    let n_classes = train.n_classes().max(test.n_classes());
    knn_predict(model.train_embedded(), train.labels(), n_classes, &coords, e)?.score(test.labels())
}

/// Runs one strategy end to end. `config` is ignored for [`Strategy::None`].
pub fn evaluate_strategy(
    train: &LabeledEmbeddings,
    test: &LabeledEmbeddings,
    strategy: Strategy,
    config: &ReembedConfig,
    e: usize,
) -> Result<EvalReport> {
    check_split(train, test)?;
    match strategy.mode() {
        None => baseline_no_reembed(train, &test.to_matrix(), e)?.score(test.labels()),
        Some(mode) => {
            config.validate(train.len())?;
            let model = PreparedFit::new(train, config, mode)?.reembedder(config.target_dim)?;
            evaluate_reembedder(&model, test, e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::gen_blobs;

    #[test]
    fn names_round_trip() {
        for s in Strategy::ALL {
            assert_eq!(s.name().parse::<Strategy>().unwrap(), s);
            assert_eq!(serde_json::to_string(&s).unwrap(), format!("\"{s}\""));
        }
        assert!("pca".parse::<Strategy>().is_err());
    }

    #[test]
    fn separated_blobs_are_classified_perfectly() {
        let train = gen_blobs(10, 3, 5, 30.0, 4).unwrap();
        let test = gen_blobs(10, 3, 5, 30.0, 4).unwrap();
        for s in Strategy::ALL {
            let r = evaluate_strategy(&train, &test, s, &ReembedConfig::new(4, 3), 1).unwrap();
            assert_eq!(r.accuracy, Some(1.0), "{s}");
        }
    }
}
