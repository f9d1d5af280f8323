use std::path::Path;

use serde::{Deserialize, Serialize};

use super::report::Num17;
use crate::error::{Error, Result};
use crate::model::ModelConfig;
use crate::weights::MIN_RESOLUTION;

/// Pass/fail thresholds applied by the commands.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub grid_oracle: Num17,
    pub intertwining: Num17,
    pub identities: Num17,
    pub counterexample: Num17,
    pub halving: Num17,
    /// Kernel margins must exceed this.
    pub kernel_margin: Num17,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            grid_oracle: Num17(1e-10),
            intertwining: Num17(1e-10),
            identities: Num17(1e-12),
            counterexample: Num17(1e-12),
            halving: Num17(1e-12),
            kernel_margin: Num17(0.0),
        }
    }
}

/// Contents of `--config`. Model keys sit at the top level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    #[serde(rename = "N")]
    pub n: usize,
    pub s: i64,
    pub phi: Vec<u8>,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub safe_margin: usize,
    /// Half-width for the `coeffs` command.
    #[serde(rename = "K_weights")]
    pub k_weights: usize,
    /// Samples of `f` per unit interval for the Fourier coefficients.
    pub resolution: usize,
    /// Geometric-weight half-widths for the `counterexample` command.
    pub counterexample_k: Vec<usize>,
    /// Random trials for the Markov positivity probe.
    pub markov_trials: usize,
    pub tolerances: Tolerances,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let model = ModelConfig::default();
        Self {
            n: model.n,
            s: model.s,
            phi: model.phi,
            m: model.m,
            k: model.k,
            safe_margin: model.safe_margin,
            k_weights: 256,
            resolution: MIN_RESOLUTION,
            counterexample_k: vec![6, 8, 10],
            markov_trials: 100,
            tolerances: Tolerances::default(),
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn model(&self) -> ModelConfig {
        ModelConfig {
            n: self.n,
            s: self.s,
            phi: self.phi.clone(),
            m: self.m,
            k: self.k,
            safe_margin: self.safe_margin,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model().validate()?;
        if !self.resolution.is_power_of_two() || self.resolution < MIN_RESOLUTION {
            return Err(Error::Config(format!(
                "resolution must be a power of two ≥ {MIN_RESOLUTION}, got {}",
                self.resolution
            )));
        }
        if 4 * self.k_weights.max(self.k) >= self.resolution {
            return Err(Error::Config(format!(
                "resolution {} too coarse for K_weights",
                self.resolution
            )));
        }
        let t = &self.tolerances;
        let all = [
            t.grid_oracle,
            t.intertwining,
            t.identities,
            t.counterexample,
            t.halving,
            t.kernel_margin,
        ];
        if all.iter().any(|v| !v.0.is_finite() || v.0 < 0.0) {
            return Err(Error::Config(
                "tolerances must be finite and nonnegative".into(),
            ));
        }
        Ok(())
    }
}
