//! Scripted typing agent on the keyboard application.
//!
//! Each round the agent picks one target: the completion that exactly covers
//! the rest of the current word if one is on screen, otherwise the next
//! character. When the text stops being a prefix of the goal it selects Undo
//! (or Delete once nothing is left to undo). A phrase is finished by writing
//! a second period.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{drive_round, pretrained_density, UserProfile, DEFAULT_PRETRAIN_SELECTIONS};
use crate::click_model::{ClickDensity, ClickLearner};
use crate::config::EngineConfig;
use crate::error::Result;
use crate::keyboard::{Applied, KeyAction, Keyboard, Layout, DELETE_ID, PERIOD, UNDO_ID};
use crate::language_prior::{CorpusIndex, PriorConfig};
use crate::selector::{ClockId, Round, SlotPhases, Threshold};

/// Selections allowed per goal character before giving up.
pub const LIVELOCK_FACTOR: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypingOptions {
    /// Pre-train the density on this many selections; zero for a cold start.
    pub pretrain_selections: usize,
    /// Seed for pre-training, independent of the typing seed.
    pub pretrain_seed: u64,
}

impl Default for TypingOptions {
    fn default() -> Self {
        Self {
            pretrain_selections: DEFAULT_PRETRAIN_SELECTIONS,
            pretrain_seed: 0x5EED,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypingRecord {
    pub phrase: String,
    /// Text produced, without the terminating period.
    pub output: String,
    /// Characters written, terminator included.
    pub chars: usize,
    pub clicks: usize,
    pub selections: usize,
    pub wrong_selections: usize,
    pub deletes: usize,
    pub undos: usize,
    pub completions: usize,
    pub seconds: f64,
    pub aborted: bool,
}

impl TypingRecord {
    pub fn click_load(&self) -> f64 {
        super::click_load(self.clicks, self.chars)
    }

    pub fn words_per_minute(&self) -> f64 {
        super::words_per_minute(self.chars, self.seconds)
    }
}

/// The text the agent writes: the phrase followed by enough periods to end
/// in two.
pub fn terminated(phrase: &str) -> String {
    let mut goal = phrase.to_string();
    let need = if phrase.ends_with(PERIOD) { 1 } else { 2 };
    for _ in 0..need {
        goal.push(PERIOD);
    }
    goal
}

/// The clock the agent aims at given the current text and layout.
pub fn choose_target(keyboard: &Keyboard, layout: &Layout, goal: &str) -> Result<Option<ClockId>> {
    let text = keyboard.text();
    let Some(remaining) = goal.strip_prefix(text) else {
        let id = if keyboard.undo_depth() > 0 { UNDO_ID } else { DELETE_ID };
        return Ok(Some(id));
    };
    let Some(next) = remaining.chars().next() else {
        return Ok(None);
    };
    let word = layout
        .completions()
        .find(|(_, w)| remaining.starts_with(&keyboard.completion_text(w)));
    if let Some((id, _)) = word {
        return Ok(Some(id));
    }
    let action = KeyAction::for_char(next)?;
    Ok(layout.find(&action))
}

/// Session-like typing loop with a learning density.
pub fn simulate_typing(
    phrase: &str,
    profile: &UserProfile,
    index: &CorpusIndex,
    prior_config: &PriorConfig,
    config: &EngineConfig,
    seed: u64,
    options: &TypingOptions,
) -> Result<TypingRecord> {
    profile.validate()?;
    config.validate()?;
    prior_config.validate()?;
    let goal = terminated(phrase);
    for c in goal.chars() {
        KeyAction::for_char(c)?;
    }
    let period = config.period()?;
    let density = if options.pretrain_selections > 0 {
        pretrained_density(profile, config, options.pretrain_selections, options.pretrain_seed)?
    } else {
        ClickDensity::new(period.seconds(), config.bin_count, config.lambda)?
    };
    let mut learner = ClickLearner::new(density, config.n_delay);
    let threshold = Threshold {
        alpha: config.alpha,
        overrides: config.alpha_overrides.clone(),
    };
    let heuristic = Arc::new(SlotPhases);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keyboard = Keyboard::new();
    let mut record = TypingRecord {
        phrase: phrase.to_string(),
        output: String::new(),
        chars: goal.chars().count(),
        clicks: 0,
        selections: 0,
        wrong_selections: 0,
        deletes: 0,
        undos: 0,
        completions: 0,
        seconds: 0.0,
        aborted: false,
    };
    let budget = LIVELOCK_FACTOR * record.chars;
    let mut now = 0.0;

    loop {
        let layout = keyboard.layout(index, prior_config);
        let Some(target) = choose_target(&keyboard, &layout, &goal)? else {
            break;
        };
        if record.selections >= budget {
            record.aborted = true;
            break;
        }
        let mut round = Round::start(layout.clock_set(), period, threshold.clone(), learner.density(), heuristic.clone());
        let out = drive_round(&mut round, target, profile, learner.density(), &mut rng, now, config.max_clicks);
        record.clicks += out.clicks;
        now = out.end_time;
        record.selections += 1;
        let Some(winner) = out.winner else {
            record.wrong_selections += 1;
            continue;
        };
        if winner != target {
            record.wrong_selections += 1;
        }
        let action = layout.action(winner).expect("winner is on screen").clone();
        match keyboard.apply(&action) {
            Applied::Undone(reverted) => {
                record.undos += 1;
                if reverted {
                    learner.discard_last();
                }
            }
            applied => {
                if matches!(applied, Applied::Deleted(_)) {
                    record.deletes += 1;
                }
                if matches!(action, KeyAction::Word(_)) {
                    record.completions += 1;
                }
                let offsets = round.offsets(winner).expect("winner is in the round").to_vec();
                learner.stage_selection(winner, offsets);
            }
        }
    }

    record.seconds = now;
    let text = keyboard.text();
    record.output = if record.aborted {
        text.to_string()
    } else {
        text[..text.len() - (goal.len() - phrase.len())].to_string()
    };
    Ok(record)
}
