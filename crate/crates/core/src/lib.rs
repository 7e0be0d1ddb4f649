//! Single-switch selection engine.
//!
//! Every selectable option is shown as a clock whose hand turns with a shared
//! period. The user clicks when the hand of the desired clock passes noon; the
//! engine turns click times into a posterior over clocks and declares a winner
//! once the leading clock dominates its runner-up.
//!
//! - [`click_model`] learns the user's click-time distribution around noon.
//! - [`language_prior`] turns a word-frequency list into priors over keys and
//!   word completions.
//! - [`selector`] runs a selection round: phases, posterior, stopping rule.
//! - [`keyboard`] is the writing application built on top of those pieces.
//! - [`simulator`] drives the engine with synthetic users and computes the
//!   text-entry metrics, including a row-column scanning baseline.
//! - [`session`] exposes a live session over a framed JSON protocol.

pub mod click_model;
pub mod config;
pub mod error;
pub mod keyboard;
pub mod language_prior;
pub mod par;
pub mod selector;
pub mod session;
pub mod simulator;

pub use click_model::{ClickDensity, ClickLearner, PendingSelection};
pub use config::EngineConfig;
pub use error::{Error, Result};
pub use language_prior::{CorpusIndex, Prior, PriorConfig};
pub use selector::{ClockId, ClockSet, Period, Round};
