//! Synthetic users driving the engine.
//!
//! A simulated user clicks once per pass of the target clock's noon, with an
//! offset drawn from a normal distribution in units of the period. Everything
//! is seeded; a trial is a pure function of its inputs.

pub mod data;
pub mod experiment;
pub mod metrics;
pub mod scanning;
pub mod typing;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::click_model::{wrap_offset, ClickDensity};
use crate::config::EngineConfig;
use crate::error::{Error, Result};
use crate::selector::{ClockId, ClockSet, Round, Threshold};

pub use metrics::{click_load, error_rate, levenshtein, words_per_minute};

/// Selections used to pre-train a density before measuring.
pub const DEFAULT_PRETRAIN_SELECTIONS: usize = 50;
/// Clicks contributed by each pre-training selection.
pub const PRETRAIN_CLICKS: usize = 2;
/// After a click the user needs this many periods before the next one.
pub const READY_GAP_PERIODS: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserProfile {
    /// Mean click offset from noon, in periods.
    pub offset_mean: f64,
    /// Spread of the click offset, in periods.
    pub offset_sd: f64,
    /// Chance of letting one noon pass without clicking.
    #[serde(default)]
    pub lapse_prob: f64,
}

impl UserProfile {
    pub fn new(offset_mean: f64, offset_sd: f64, lapse_prob: f64) -> Result<Self> {
        let p = Self {
            offset_mean,
            offset_sd,
            lapse_prob,
        };
        p.validate()?;
        Ok(p)
    }

    /// A user with mean offset 0.05 and no lapses.
    pub fn with_sd(offset_sd: f64) -> Self {
        Self {
            offset_mean: 0.05,
            offset_sd,
            lapse_prob: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.offset_sd.is_finite() && self.offset_sd > 0.0) {
            return Err(Error::Config(format!("offset_sd must be positive, got {}", self.offset_sd)));
        }
        if !(0.0..=0.5).contains(&self.lapse_prob) {
            return Err(Error::Config(format!("lapse_prob must lie in [0, 0.5], got {}", self.lapse_prob)));
        }
        if !self.offset_mean.is_finite() {
            return Err(Error::Config("offset_mean must be finite".into()));
        }
        Ok(())
    }

    fn offsets(&self) -> Normal<f64> {
        Normal::new(self.offset_mean, self.offset_sd).expect("validated profile")
    }
}

/// Shannon entropy in bits, with `0 log 0 = 0`.
pub fn entropy_bits(posterior: &[f64]) -> f64 {
    -posterior
        .iter()
        .filter(|p| **p > 0.0)
        .map(|p| p * p.log2())
        .sum::<f64>()
}

fn round_entropy(round: &Round) -> f64 {
    let p: Vec<f64> = round.posterior().into_iter().map(|(_, p)| p).collect();
    entropy_bits(&p).max(0.0)
}

/// A density trained on `selections` synthetic selections from `profile`.
pub fn pretrained_density(profile: &UserProfile, config: &EngineConfig, selections: usize, seed: u64) -> Result<ClickDensity> {
    profile.validate()?;
    let period = config.period()?;
    let mut density = ClickDensity::new(period.seconds(), config.bin_count, config.lambda)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dist = profile.offsets();
    for _ in 0..selections {
        let offsets: Vec<f64> = (0..PRETRAIN_CLICKS).map(|_| wrap_offset(dist.sample(&mut rng))).collect();
        density.commit_offsets(&offsets);
    }
    Ok(density)
}

/// One simulated selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub target: ClockId,
    pub winner: Option<ClockId>,
    pub clicks: usize,
    pub correct: bool,
    /// No winner within the click budget.
    pub aborted: bool,
    pub seconds: f64,
    /// Posterior entropy before the first click and after each click.
    pub entropy_trace: Vec<f64>,
}

/// How a driven round ended.
#[derive(Debug, Clone)]
pub(crate) struct RoundOutcome {
    pub winner: Option<ClockId>,
    pub clicks: usize,
    pub end_time: f64,
    pub entropy_trace: Vec<f64>,
}

/// Clicks on `target` until the round declares a winner or the budget runs
/// out. Time is absolute; `start` is when the round's clocks appear.
pub(crate) fn drive_round(
    round: &mut Round,
    target: ClockId,
    profile: &UserProfile,
    density: &ClickDensity,
    rng: &mut impl Rng,
    start: f64,
    max_clicks: usize,
) -> RoundOutcome {
    let period = round.period().seconds();
    let dist = profile.offsets();
    let mut trace = vec![round_entropy(round)];
    let mut ready = start + READY_GAP_PERIODS * period;
    let mut last = start;
    let mut winner = round.check_winner();
    while winner.is_none() && round.clicks() < max_clicks {
        let mut noon = round.next_noon(target, ready).expect("target is in the round");
        while profile.lapse_prob > 0.0 && rng.random::<f64>() < profile.lapse_prob {
            noon += period;
        }
        let click = noon + dist.sample(rng) * period;
        round.register_click(click, density);
        trace.push(round_entropy(round));
        last = last.max(click);
        ready = click + READY_GAP_PERIODS * period;
        winner = round.check_winner();
    }
    RoundOutcome {
        winner,
        clicks: round.clicks(),
        end_time: last,
        entropy_trace: trace,
    }
}

/// Simulates one selection of `target` among `clocks` with a fixed density.
pub fn simulate_selection(
    clocks: &ClockSet,
    target: ClockId,
    profile: &UserProfile,
    config: &EngineConfig,
    density: &ClickDensity,
    seed: u64,
) -> Result<TrialRecord> {
    profile.validate()?;
    if clocks.get(target).is_none() {
        return Err(Error::Config(format!("target clock {target} is not in the set")));
    }
    let threshold = Threshold {
        alpha: config.alpha,
        overrides: config.alpha_overrides.clone(),
    };
    let mut round = Round::with_slots(clocks.clone(), config.period()?, threshold, density);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let out = drive_round(&mut round, target, profile, density, &mut rng, 0.0, config.max_clicks);
    Ok(TrialRecord {
        target,
        winner: out.winner,
        clicks: out.clicks,
        correct: out.winner == Some(target),
        aborted: out.winner.is_none(),
        seconds: out.end_time,
        entropy_trace: out.entropy_trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn entropy_examples() {
        assert_abs_diff_eq!(entropy_bits(&vec![1.0 / 30.0; 30]), 30f64.log2(), epsilon = 1e-12);
        assert_abs_diff_eq!(entropy_bits(&vec![1.0 / 30.0; 30]), 4.9069, epsilon = 1e-4);
        let diff = entropy_bits(&vec![1.0 / 401.0; 401]) - entropy_bits(&vec![1.0 / 30.0; 30]);
        assert_abs_diff_eq!(entropy_bits(&vec![1.0 / 401.0; 401]), 8.6474, epsilon = 1e-4);
        assert_abs_diff_eq!(diff, 3.74, epsilon = 0.01);
        assert_eq!(entropy_bits(&[0.0, 1.0, 0.0]), 0.0);
    }

    #[test]
    fn profile_validation() {
        assert!(UserProfile::new(0.0, 0.0, 0.0).is_err());
        assert!(UserProfile::new(0.0, 0.02, 0.6).is_err());
        assert!(UserProfile::new(0.0, 0.02, 0.5).is_ok());
    }

    #[test]
    fn selection_is_seed_deterministic() {
        let cfg = EngineConfig::default();
        let profile = UserProfile::with_sd(0.03);
        let d = pretrained_density(&profile, &cfg, 50, 1).unwrap();
        let clocks = ClockSet::uniform(30).unwrap();
        let a = simulate_selection(&clocks, ClockId(7), &profile, &cfg, &d, 99).unwrap();
        let b = simulate_selection(&clocks, ClockId(7), &profile, &cfg, &d, 99).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.entropy_trace.len(), a.clicks + 1);
        assert!(a.entropy_trace.iter().all(|h| *h >= 0.0));
    }

    #[test]
    fn missing_target_is_an_error() {
        let cfg = EngineConfig::default();
        let d = ClickDensity::new(2.0, 80, 0.9).unwrap();
        let clocks = ClockSet::uniform(3).unwrap();
        assert!(simulate_selection(&clocks, ClockId(9), &UserProfile::with_sd(0.02), &cfg, &d, 0).is_err());
    }

    #[test]
    fn hopeless_round_aborts_at_budget() {
        let cfg = EngineConfig {
            max_clicks: 5,
            ..EngineConfig::default()
        };
        // Two clocks on a flat density can never separate.
        let d = ClickDensity::with_initial(2.0, 80, 0.9, 0.0, 5.0).unwrap();
        let clocks = ClockSet::uniform(2).unwrap();
        let r = simulate_selection(&clocks, ClockId(0), &UserProfile::with_sd(0.02), &cfg, &d, 3).unwrap();
        assert!(r.aborted);
        assert!(!r.correct);
        assert_eq!(r.clicks, 5);
    }

    #[test]
    fn lapses_only_cost_time() {
        let cfg = EngineConfig::default();
        let sharp = UserProfile::with_sd(0.02);
        let lapsing = UserProfile {
            lapse_prob: 0.4,
            ..sharp
        };
        let d = pretrained_density(&sharp, &cfg, 50, 5).unwrap();
        let clocks = ClockSet::uniform(8).unwrap();
        let mut slow = 0.0;
        let mut fast = 0.0;
        for seed in 0..200 {
            fast += simulate_selection(&clocks, ClockId(3), &sharp, &cfg, &d, seed).unwrap().seconds;
            slow += simulate_selection(&clocks, ClockId(3), &lapsing, &cfg, &d, seed).unwrap().seconds;
        }
        assert!(slow > fast);
    }
}
