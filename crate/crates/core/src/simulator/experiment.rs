//! Batched trials and their summaries.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::data::{desk_corpus, phrases};
use super::scanning::{scanning_delay, simulate_scanning, ScanResult, ScanningGrid};
use super::typing::{simulate_typing, TypingOptions, TypingRecord};
use super::{pretrained_density, simulate_selection, TrialRecord, UserProfile, DEFAULT_PRETRAIN_SELECTIONS};
use crate::click_model::ClickDensity;
use crate::config::EngineConfig;
use crate::error::{Error, Result};
use crate::keyboard::Keyboard;
use crate::language_prior::{CorpusIndex, PriorConfig};
use crate::par;
use crate::selector::{ClockId, ClockSet};

const TARGET_STREAM: u64 = 0x7A46_E7C0_FFEE_0001;
const PRETRAIN_STREAM: u64 = 0x51A7_0000_0000_0002;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorKind {
    Uniform,
    /// The 30 keyboard keys at the start of a word, without completions.
    Keyboard,
}

/// Priors of the 26 letters and 4 special keys at an empty context.
pub fn keyboard_key_priors(index: &CorpusIndex, config: &PriorConfig) -> Vec<f64> {
    let bare = PriorConfig {
        max_completions_per_letter: 0,
        ..config.clone()
    };
    Keyboard::new()
        .layout(index, &bare)
        .options()
        .iter()
        .map(|o| o.prior)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectionScenario {
    pub clocks: usize,
    pub prior: PriorKind,
    pub profile: UserProfile,
    pub engine: EngineConfig,
    pub trials: usize,
    pub seed: u64,
    /// Zero means a cold start from the default density.
    pub pretrain_selections: usize,
}

impl Default for SelectionScenario {
    fn default() -> Self {
        Self {
            clocks: 30,
            prior: PriorKind::Uniform,
            profile: UserProfile::with_sd(0.02),
            engine: EngineConfig::default(),
            trials: 1000,
            seed: 1,
            pretrain_selections: DEFAULT_PRETRAIN_SELECTIONS,
        }
    }
}

impl SelectionScenario {
    pub fn clock_set(&self) -> Result<ClockSet> {
        match self.prior {
            PriorKind::Uniform => ClockSet::uniform(self.clocks),
            PriorKind::Keyboard => {
                let priors = keyboard_key_priors(desk_corpus(), &PriorConfig::default());
                if self.clocks != priors.len() {
                    return Err(Error::Config(format!("the keyboard prior has {} clocks", priors.len())));
                }
                ClockSet::from_priors(&priors)
            }
        }
    }

    pub fn density(&self) -> Result<ClickDensity> {
        if self.pretrain_selections == 0 {
            let period = self.engine.period()?;
            ClickDensity::new(period.seconds(), self.engine.bin_count, self.engine.lambda)
        } else {
            pretrained_density(&self.profile, &self.engine, self.pretrain_selections, self.seed ^ PRETRAIN_STREAM)
        }
    }
}

/// Draws a clock in proportion to its prior.
pub fn sample_target(clocks: &ClockSet, rng: &mut impl Rng) -> ClockId {
    let total: f64 = clocks.clocks().iter().map(|c| c.prior).sum();
    let mut u = rng.random::<f64>() * total;
    for c in clocks.clocks() {
        if u < c.prior {
            return c.id;
        }
        u -= c.prior;
    }
    clocks.clocks().last().expect("non-empty").id
}

fn selection_trial(clocks: &ClockSet, density: &ClickDensity, s: &SelectionScenario, seed: u64) -> Result<TrialRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ TARGET_STREAM);
    let target = sample_target(clocks, &mut rng);
    simulate_selection(clocks, target, &s.profile, &s.engine, density, seed)
}

/// Runs the scenario with the default fan-out.
pub fn run_selection_trials(s: &SelectionScenario) -> Result<Vec<TrialRecord>> {
    s.engine.validate()?;
    let clocks = s.clock_set()?;
    let density = s.density()?;
    par::map_trials(s.trials, s.seed, |seed| selection_trial(&clocks, &density, s, seed))
        .into_iter()
        .collect()
}

/// Runs the scenario on the calling thread only.
pub fn run_selection_trials_sequential(s: &SelectionScenario) -> Result<Vec<TrialRecord>> {
    s.engine.validate()?;
    let clocks = s.clock_set()?;
    let density = s.density()?;
    par::map_trials_sequential(s.trials, s.seed, |seed| selection_trial(&clocks, &density, s, seed))
        .into_iter()
        .collect()
}

fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn mean_and_ci(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, 1.96 * (var / n).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionSummary {
    pub trials: usize,
    pub errors: usize,
    pub aborted: usize,
    pub error_fraction: f64,
    pub median_clicks: f64,
    pub mean_clicks: f64,
    /// Half-width of the normal 95% interval for `mean_clicks`.
    pub ci95_clicks: f64,
    pub mean_seconds: f64,
    /// Mean entropy after `k` clicks; finished trials hold their final value.
    pub mean_entropy_by_click: Vec<f64>,
    /// Trials still undecided after `k` clicks.
    pub active_by_click: Vec<usize>,
}

pub fn summarize_selections(records: &[TrialRecord]) -> SelectionSummary {
    let errors = records.iter().filter(|r| !r.correct).count();
    let aborted = records.iter().filter(|r| r.aborted).count();
    let mut clicks: Vec<f64> = records.iter().map(|r| r.clicks as f64).collect();
    let (mean_clicks, ci95_clicks) = mean_and_ci(&clicks);
    let seconds: Vec<f64> = records.iter().map(|r| r.seconds).collect();
    let longest = records.iter().map(|r| r.entropy_trace.len()).max().unwrap_or(0);
    let mut entropy = vec![0.0; longest];
    let mut active = vec![0; longest];
    for r in records {
        let last = *r.entropy_trace.last().unwrap_or(&0.0);
        for (k, slot) in entropy.iter_mut().enumerate() {
            *slot += r.entropy_trace.get(k).copied().unwrap_or(last);
        }
        for slot in active.iter_mut().take(r.entropy_trace.len()) {
            *slot += 1;
        }
    }
    let n = records.len().max(1) as f64;
    entropy.iter_mut().for_each(|h| *h /= n);
    SelectionSummary {
        trials: records.len(),
        errors,
        aborted,
        error_fraction: errors as f64 / n,
        median_clicks: median(&mut clicks),
        mean_clicks,
        ci95_clicks,
        mean_seconds: mean_and_ci(&seconds).0,
        mean_entropy_by_click: entropy,
        active_by_click: active,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TypingScenario {
    /// Phrases to type; the bundled set when empty.
    pub phrases: Vec<String>,
    pub profile: UserProfile,
    pub engine: EngineConfig,
    pub prior: PriorConfig,
    pub seed: u64,
    pub options: TypingOptions,
}

impl Default for TypingScenario {
    fn default() -> Self {
        Self {
            phrases: Vec::new(),
            profile: UserProfile::with_sd(0.02),
            engine: EngineConfig::default(),
            prior: PriorConfig::default(),
            seed: 1,
            options: TypingOptions::default(),
        }
    }
}

impl TypingScenario {
    pub fn phrase_list(&self) -> Vec<String> {
        if self.phrases.is_empty() {
            phrases().into_iter().map(String::from).collect()
        } else {
            self.phrases.clone()
        }
    }
}

/// Types every phrase independently; phrase `i` uses trial seed `i`.
pub fn run_typing(s: &TypingScenario, index: &CorpusIndex) -> Result<Vec<TypingRecord>> {
    let list: Vec<(u64, String)> = s
        .phrase_list()
        .into_iter()
        .enumerate()
        .map(|(i, p)| (par::trial_seed(s.seed, i as u64), p))
        .collect();
    par::map_items(&list, |(seed, phrase)| {
        simulate_typing(phrase, &s.profile, index, &s.prior, &s.engine, *seed, &s.options)
    })
    .into_iter()
    .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypingSummary {
    pub phrases: usize,
    pub aborted: usize,
    pub clicks: usize,
    pub chars: usize,
    pub click_load: f64,
    pub words_per_minute: f64,
    pub error_rate: f64,
    pub completions: usize,
    pub wrong_selections: usize,
}

pub fn summarize_typing(records: &[TypingRecord]) -> Result<TypingSummary> {
    let clicks = records.iter().map(|r| r.clicks).sum();
    let chars = records.iter().map(|r| r.chars).sum();
    let seconds: f64 = records.iter().map(|r| r.seconds).sum();
    let targets: Vec<&str> = records.iter().map(|r| r.phrase.as_str()).collect();
    let outputs: Vec<&str> = records.iter().map(|r| r.output.as_str()).collect();
    Ok(TypingSummary {
        phrases: records.len(),
        aborted: records.iter().filter(|r| r.aborted).count(),
        clicks,
        chars,
        click_load: super::click_load(clicks, chars),
        words_per_minute: super::words_per_minute(chars, seconds),
        error_rate: super::error_rate(&targets, &outputs)?,
        completions: records.iter().map(|r| r.completions).sum(),
        wrong_selections: records.iter().map(|r| r.wrong_selections).sum(),
    })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScanningScenario {
    pub phrases: Vec<String>,
    pub delay_index: i32,
    pub completion_count: usize,
}

pub fn run_scanning(s: &ScanningScenario, index: &CorpusIndex) -> Result<Vec<ScanResult>> {
    let delay = scanning_delay(s.delay_index)?;
    let grid = ScanningGrid::standard();
    let list = if s.phrases.is_empty() {
        phrases().into_iter().map(String::from).collect()
    } else {
        s.phrases.clone()
    };
    list.iter()
        .map(|p| simulate_scanning(p, &grid, delay, s.completion_count, Some(index)))
        .collect()
}

/// A simulation request as read from a scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scenario {
    Selection(SelectionScenario),
    Typing(TypingScenario),
    Scanning(ScanningScenario),
}
