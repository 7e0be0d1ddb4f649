//! Engine-wide settings shared by the simulator and the session service.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::click_model::{DEFAULT_BIN_COUNT, DEFAULT_LAMBDA, DEFAULT_N_DELAY};
use crate::error::{Error, Result};
use crate::selector::{ClockId, Period, DEFAULT_ALPHA};

/// Clicks after which a round is abandoned.
pub const DEFAULT_MAX_CLICKS: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    /// Index `j` of the rotation period `2.0 * 0.9^j` seconds.
    pub period_index: i32,
    /// Winner threshold on the ratio of the top two posteriors.
    pub alpha: f64,
    /// Optional per-clock thresholds that replace `alpha` when that clock leads.
    pub alpha_overrides: BTreeMap<ClockId, f64>,
    pub lambda: f64,
    pub bin_count: usize,
    pub n_delay: usize,
    pub max_clicks: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            period_index: 0,
            alpha: DEFAULT_ALPHA,
            alpha_overrides: BTreeMap::new(),
            lambda: DEFAULT_LAMBDA,
            bin_count: DEFAULT_BIN_COUNT,
            n_delay: DEFAULT_N_DELAY,
            max_clicks: DEFAULT_MAX_CLICKS,
        }
    }
}

impl EngineConfig {
    pub fn period(&self) -> Result<Period> {
        Period::from_index(self.period_index)
    }

    pub fn validate(&self) -> Result<()> {
        self.period()?;
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::Config(format!("alpha must be positive, got {}", self.alpha)));
        }
        if let Some((id, a)) = self
            .alpha_overrides
            .iter()
            .find(|(_, a)| !(a.is_finite() && **a > 0.0))
        {
            return Err(Error::Config(format!("alpha override for clock {} is {a}", id.0)));
        }
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return Err(Error::Config(format!("lambda must lie in (0, 1), got {}", self.lambda)));
        }
        if self.bin_count < crate::click_model::MIN_BIN_COUNT {
            return Err(Error::Config(format!("bin_count {} is too small", self.bin_count)));
        }
        if self.max_clicks == 0 {
            return Err(Error::Config("max_clicks must be at least 1".into()));
        }
        Ok(())
    }
}
