//! One selection round.
//!
//! Each clock carries a prior mass and a phase: the time within the shared
//! period at which its hand passes noon. Every click adds the log-likelihood
//! of the click's offset from each clock's noon to that clock's unnormalised
//! log posterior. A clock wins once its posterior exceeds `alpha` times the
//! runner-up's.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::click_model::{wrap_offset, ClickDensity};
use crate::error::{Error, Result};

pub const DEFAULT_ALPHA: f64 = 99.0;
pub const PERIOD_INDEX_MIN: i32 = -4;
pub const PERIOD_INDEX_MAX: i32 = 18;
/// Central mass whose width sets the number of phase slots.
pub const SLOT_COVERAGE: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClockId(pub u32);

impl fmt::Display for ClockId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Clock rotation period `2.0 * 0.9^j` seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Period {
    index: i32,
    seconds: f64,
}

impl Period {
    pub fn from_index(j: i32) -> Result<Self> {
        if !(PERIOD_INDEX_MIN..=PERIOD_INDEX_MAX).contains(&j) {
            return Err(Error::Config(format!(
                "period index {j} outside [{PERIOD_INDEX_MIN}, {PERIOD_INDEX_MAX}]"
            )));
        }
        Ok(Self {
            index: j,
            seconds: 2.0 * 0.9f64.powi(j),
        })
    }

    pub fn index(&self) -> i32 {
        self.index
    }

    pub fn seconds(&self) -> f64 {
        self.seconds
    }
}

impl Default for Period {
    fn default() -> Self {
        Self::from_index(0).expect("j = 0 is in range")
    }
}

/// Offset of a click from a clock's noon, in periods, on `[-1/2, 1/2)`.
pub fn click_offset(click_time: f64, phase: f64, period: f64) -> f64 {
    wrap_offset((click_time - phase) / period)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clock {
    pub id: ClockId,
    pub label: String,
    pub prior: f64,
}

/// The clocks competing in a round. Ids are unique and priors positive.
#[derive(Debug, Clone, PartialEq)]
pub struct ClockSet {
    clocks: Vec<Clock>,
}

impl ClockSet {
    pub fn new(clocks: Vec<Clock>) -> Result<Self> {
        if clocks.is_empty() {
            return Err(Error::Config("a round needs at least one clock".into()));
        }
        let mut seen = HashSet::with_capacity(clocks.len());
        for c in &clocks {
            if !seen.insert(c.id) {
                return Err(Error::Config(format!("duplicate clock id {}", c.id)));
            }
            if !(c.prior.is_finite() && c.prior > 0.0) {
                return Err(Error::Config(format!("clock {} has prior {}", c.id, c.prior)));
            }
        }
        Ok(Self { clocks })
    }

    /// `count` clocks with ids `0..count` and equal priors.
    pub fn uniform(count: usize) -> Result<Self> {
        Self::from_priors(&vec![1.0 / count.max(1) as f64; count])
    }

    /// Clocks with ids `0..priors.len()` and the given priors.
    pub fn from_priors(priors: &[f64]) -> Result<Self> {
        Self::new(
            priors
                .iter()
                .enumerate()
                .map(|(i, &prior)| Clock {
                    id: ClockId(i as u32),
                    label: i.to_string(),
                    prior,
                })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.clocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clocks.is_empty()
    }

    pub fn clocks(&self) -> &[Clock] {
        &self.clocks
    }

    pub fn position(&self, id: ClockId) -> Option<usize> {
        self.clocks.iter().position(|c| c.id == id)
    }

    pub fn get(&self, id: ClockId) -> Option<&Clock> {
        self.clocks.iter().find(|c| c.id == id)
    }
}

/// Places clock hands for the next click.
pub trait PhaseHeuristic: Send + Sync + fmt::Debug {
    /// Phases in seconds within `[0, period)`, one per entry of `posterior`.
    fn assign(&self, posterior: &[(ClockId, f64)], density: &ClickDensity, period: f64) -> Vec<f64>;
}

/// Slot layout: the period is split into `m = max(2, floor(1 / w))` slots,
/// where `w` is the width of the central 90% of the click density. Clocks
/// ranked by posterior take slot `k mod m`, shifted by `floor(k / m)` sub-slots
/// of width `period / m^2`.
#[derive(Debug, Clone, Copy, Default)]
pub struct SlotPhases;

impl SlotPhases {
    pub fn slot_count(density: &ClickDensity) -> usize {
        let w = density.central_width(SLOT_COVERAGE);
        ((1.0 / w).floor() as usize).max(2)
    }
}

/// Ranking used for phase layout and tie-breaks: higher value first, then
/// ascending id.
fn ranked(values: &[(ClockId, f64)]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        values[b]
            .1
            .total_cmp(&values[a].1)
            .then(values[a].0.cmp(&values[b].0))
    });
    order
}

impl PhaseHeuristic for SlotPhases {
    fn assign(&self, posterior: &[(ClockId, f64)], density: &ClickDensity, period: f64) -> Vec<f64> {
        let m = Self::slot_count(density);
        let slot = period / m as f64;
        let sub = slot / m as f64;
        let mut phases = vec![0.0; posterior.len()];
        for (k, idx) in ranked(posterior).into_iter().enumerate() {
            let raw = (k % m) as f64 * slot + (k / m) as f64 * sub;
            phases[idx] = raw.rem_euclid(period);
        }
        phases
    }
}

/// Per-round winner threshold with optional per-clock overrides.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Threshold {
    pub alpha: f64,
    pub overrides: BTreeMap<ClockId, f64>,
}

impl Threshold {
    pub fn global(alpha: f64) -> Self {
        Self {
            alpha,
            overrides: BTreeMap::new(),
        }
    }

    pub fn for_clock(&self, id: ClockId) -> f64 {
        self.overrides.get(&id).copied().unwrap_or(self.alpha)
    }
}

/// Leader and runner-up over unnormalised log posteriors. Returns the winner
/// when `ln p_top - ln p_second > ln alpha`; a lone clock wins at once.
pub fn check_winner(log_posterior: &[(ClockId, f64)], threshold: &Threshold) -> Option<ClockId> {
    let order = ranked(log_posterior);
    let top = log_posterior[*order.first()?];
    let Some(&second) = order.get(1) else {
        return Some(top.0);
    };
    let margin = top.1 - log_posterior[second].1;
    (margin > threshold.for_clock(top.0).ln()).then_some(top.0)
}

/// Normalises log posteriors into probabilities.
pub fn normalize_log(values: &[f64]) -> Vec<f64> {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = values.iter().map(|v| (v - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

/// Mutable state of one round: clocks, phases, accumulated log posteriors and
/// each clock's click offsets.
#[derive(Debug, Clone)]
pub struct Round {
    clocks: ClockSet,
    phases: Vec<f64>,
    log_posterior: Vec<f64>,
    offsets: Vec<Vec<f64>>,
    clicks: usize,
    period: Period,
    threshold: Threshold,
    heuristic: Arc<dyn PhaseHeuristic>,
}

impl Round {
    /// Starts a round with phases laid out on the prior.
    pub fn start(
        clocks: ClockSet,
        period: Period,
        threshold: Threshold,
        density: &ClickDensity,
        heuristic: Arc<dyn PhaseHeuristic>,
    ) -> Self {
        let log_posterior = clocks.clocks().iter().map(|c| c.prior.ln()).collect();
        let n = clocks.len();
        let mut round = Self {
            clocks,
            phases: vec![0.0; n],
            log_posterior,
            offsets: vec![Vec::new(); n],
            clicks: 0,
            period,
            threshold,
            heuristic,
        };
        round.reassign(density);
        round
    }

    /// [`Round::start`] with the slot heuristic.
    pub fn with_slots(clocks: ClockSet, period: Period, threshold: Threshold, density: &ClickDensity) -> Self {
        Self::start(clocks, period, threshold, density, Arc::new(SlotPhases))
    }

    fn reassign(&mut self, density: &ClickDensity) {
        let posterior = self.posterior();
        self.phases = self.heuristic.assign(&posterior, density, self.period.seconds());
    }

    pub fn clocks(&self) -> &ClockSet {
        &self.clocks
    }

    pub fn period(&self) -> Period {
        self.period
    }

    pub fn threshold(&self) -> &Threshold {
        &self.threshold
    }

    /// Switches period; phases are laid out again for the new period.
    pub fn set_period(&mut self, j: i32, density: &ClickDensity) -> Result<f64> {
        self.period = Period::from_index(j)?;
        self.reassign(density);
        Ok(self.period.seconds())
    }

    pub fn clicks(&self) -> usize {
        self.clicks
    }

    pub fn phases(&self) -> impl Iterator<Item = (ClockId, f64)> + '_ {
        self.clocks.clocks().iter().map(|c| c.id).zip(self.phases.iter().copied())
    }

    pub fn phase(&self, id: ClockId) -> Option<f64> {
        self.clocks.position(id).map(|i| self.phases[i])
    }

    pub fn log_posterior(&self) -> Vec<(ClockId, f64)> {
        self.clocks
            .clocks()
            .iter()
            .map(|c| c.id)
            .zip(self.log_posterior.iter().copied())
            .collect()
    }

    /// Normalised posterior, in clock order.
    pub fn posterior(&self) -> Vec<(ClockId, f64)> {
        self.clocks
            .clocks()
            .iter()
            .map(|c| c.id)
            .zip(normalize_log(&self.log_posterior))
            .collect()
    }

    /// Offsets of every click so far relative to `id`'s noon.
    pub fn offsets(&self, id: ClockId) -> Option<&[f64]> {
        self.clocks.position(id).map(|i| self.offsets[i].as_slice())
    }

    /// Folds one click into every clock's posterior, then re-lays the phases.
    pub fn register_click(&mut self, click_time: f64, density: &ClickDensity) {
        let period = self.period.seconds();
        for i in 0..self.clocks.len() {
            let offset = click_offset(click_time, self.phases[i], period);
            self.log_posterior[i] += density.log_likelihood(offset);
            self.offsets[i].push(offset);
        }
        self.clicks += 1;
        self.reassign(density);
    }

    pub fn check_winner(&self) -> Option<ClockId> {
        check_winner(&self.log_posterior(), &self.threshold)
    }

    /// Time of the first noon of `id` at or after `t`.
    pub fn next_noon(&self, id: ClockId, t: f64) -> Option<f64> {
        let phase = self.phase(id)?;
        let period = self.period.seconds();
        Some(phase + ((t - phase) / period).ceil() * period)
    }
}
