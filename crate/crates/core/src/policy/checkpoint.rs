//! JSON policy checkpoints.
//!
//! Field order is fixed: `version`, `layer_widths`, `phi` (flat parameter
//! array in network layout order), `train_state` (`baseline`, `decay`,
//! `step`, `learning_rate`, `rng_seed`, plus the advantage-scaling fields),
//! then an optional free-form `metadata` record. Floats are written in
//! shortest round-trip form, so `phi` reloads bit-exactly.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::network::{BetaPolicy, LAYER_WIDTHS};
use super::train::TrainState;
use crate::error::{Error, Result};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub layer_widths: Vec<usize>,
    pub phi: Vec<f64>,
    pub train_state: TrainState,
    /// Whatever the writer wants to keep alongside, e.g. the run config.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<serde_json::Value>,
}

impl Checkpoint {
    pub fn new(policy: &BetaPolicy, state: &TrainState) -> Self {
        Self {
            version: CHECKPOINT_VERSION,
            layer_widths: LAYER_WIDTHS.to_vec(),
            phi: policy.params().to_vec(),
            train_state: state.clone(),
            metadata: None,
        }
    }

    pub fn with_metadata(mut self, metadata: serde_json::Value) -> Self {
        self.metadata = Some(metadata);
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("checkpoint serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ckpt: Checkpoint =
            serde_json::from_str(text).map_err(|e| Error::Checkpoint(e.to_string()))?;
        if ckpt.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported version {}",
                ckpt.version
            )));
        }
        if ckpt.layer_widths != LAYER_WIDTHS {
            return Err(Error::Checkpoint(format!(
                "layer widths {:?} do not match {:?}",
                ckpt.layer_widths, LAYER_WIDTHS
            )));
        }
        Ok(ckpt)
    }

    pub fn policy(&self) -> Result<BetaPolicy> {
        BetaPolicy::from_params(self.phi.clone()).map_err(|e| Error::Checkpoint(e.to_string()))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json() + "\n").map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn field_order() {
        let text = Checkpoint::new(&BetaPolicy::zeros(), &TrainState::new(0.02, 1)).to_json();
        let pos = |k: &str| text.find(k).unwrap();
        assert!(pos("\"version\"") < pos("\"layer_widths\""));
        assert!(pos("\"layer_widths\"") < pos("\"phi\""));
        assert!(pos("\"phi\"") < pos("\"train_state\""));
    }

    #[test]
    fn rejects_wrong_shape() {
        let mut c = Checkpoint::new(&BetaPolicy::zeros(), &TrainState::new(0.02, 1));
        c.layer_widths[1] = 16;
        assert!(Checkpoint::from_json(&c.to_json()).is_err());
        let mut c = Checkpoint::new(&BetaPolicy::zeros(), &TrainState::new(0.02, 1));
        c.version = 9;
        assert!(Checkpoint::from_json(&c.to_json()).is_err());
        assert!(Checkpoint::from_json("{").is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn roundtrip_is_bit_exact(seed in any::<u64>(), baseline in -10.0f64..10.0) {
            let policy = BetaPolicy::init(&mut ChaCha8Rng::seed_from_u64(seed));
            let mut state = TrainState::new(0.02, seed);
            state.baseline = baseline;
            state.step = seed % 1000;
            let back = Checkpoint::from_json(&Checkpoint::new(&policy, &state).to_json()).unwrap();
            let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
            prop_assert_eq!(bits(&back.phi), bits(policy.params()));
            prop_assert_eq!(back.train_state, state);
        }
    }
}
