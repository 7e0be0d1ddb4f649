//! Error-free row-column scanning baseline.
//!
//! Rows light up one after another every `delay` seconds; the first click
//! picks the lit row, then columns of that row light up and the second click
//! picks the cell. Optional word completions occupy a left-hand column, most
//! frequent at the top.

use serde::{Deserialize, Serialize};

use super::typing::terminated;
use crate::error::{Error, Result};
use crate::keyboard::SPACE;
use crate::language_prior::{context_of, CorpusIndex};

/// Rows in the letter grid, which is also the number of completion slots.
pub const GRID_ROWS: usize = 6;
pub const GRID_COLUMNS: usize = 5;
pub const MAX_SCAN_DELAY_INDEX: i32 = 9;

/// Scanning delay `0.1 (10 - j)` seconds.
pub fn scanning_delay(j: i32) -> Result<f64> {
    if j > MAX_SCAN_DELAY_INDEX {
        return Err(Error::Config(format!("scanning delay index {j} exceeds {MAX_SCAN_DELAY_INDEX}")));
    }
    Ok(0.1 * f64::from(10 - j))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScanCell {
    Char(char),
    Delete,
    WordDelete,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScanningGrid {
    rows: Vec<Vec<ScanCell>>,
}

impl Default for ScanningGrid {
    fn default() -> Self {
        Self::standard()
    }
}

impl ScanningGrid {
    /// Letters alphabetically across then down, then underscore, period,
    /// character delete and word delete: six rows of five.
    pub fn standard() -> Self {
        let mut cells: Vec<ScanCell> = ('a'..='z').map(ScanCell::Char).collect();
        cells.extend([ScanCell::Char(SPACE), ScanCell::Char('.'), ScanCell::Delete, ScanCell::WordDelete]);
        Self {
            rows: cells.chunks(GRID_COLUMNS).map(<[ScanCell]>::to_vec).collect(),
        }
    }

    pub fn rows(&self) -> &[Vec<ScanCell>] {
        &self.rows
    }

    /// Row and column of `c` within the letter grid.
    pub fn position(&self, c: char) -> Option<(usize, usize)> {
        self.rows.iter().enumerate().find_map(|(r, row)| {
            row.iter()
                .position(|cell| *cell == ScanCell::Char(c))
                .map(|col| (r, col))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub chars: usize,
    pub clicks: usize,
    pub selections: usize,
    pub completions: usize,
    /// Highlight steps waited beyond the first row and first column.
    pub waiting_steps: usize,
    pub seconds: f64,
}

impl ScanResult {
    pub fn click_load(&self) -> f64 {
        super::click_load(self.clicks, self.chars)
    }
}

/// Completion slots for the current word prefix, top-down by frequency.
fn completion_slots(index: &CorpusIndex, context: &str, count: usize) -> Vec<String> {
    index
        .top_words(context, count, |w, _| w != context)
        .into_iter()
        .map(|(w, _)| w)
        .collect()
}

/// Scans `phrase` (terminated with a double period) without mistakes.
/// With `completion_count > 0` and an index, a completion column sits left of
/// the letters and is used whenever a slot holds the rest of the current word.
pub fn simulate_scanning(
    phrase: &str,
    grid: &ScanningGrid,
    delay: f64,
    completion_count: usize,
    completions: Option<&CorpusIndex>,
) -> Result<ScanResult> {
    if !(delay.is_finite() && delay > 0.0) {
        return Err(Error::Config(format!("scanning delay must be positive, got {delay}")));
    }
    if completion_count > grid.rows().len() {
        return Err(Error::Config(format!(
            "at most {} completion slots, asked for {completion_count}",
            grid.rows().len()
        )));
    }
    let index = completions.filter(|_| completion_count > 0);
    let column_shift = usize::from(index.is_some());
    let goal = terminated(phrase);
    let mut text = String::with_capacity(goal.len());
    let mut result = ScanResult {
        chars: goal.chars().count(),
        clicks: 0,
        selections: 0,
        completions: 0,
        waiting_steps: 0,
        seconds: 0.0,
    };
    let select = |row: usize, col: usize, result: &mut ScanResult| {
        result.clicks += 2;
        result.selections += 1;
        result.waiting_steps += row + col;
        result.seconds += (row + 1 + col + 1) as f64 * delay;
    };

    while text.len() < goal.len() {
        let remaining = &goal[text.len()..];
        if let Some(index) = index {
            let context = context_of(&text);
            let slot = completion_slots(index, context, completion_count)
                .into_iter()
                .enumerate()
                .find_map(|(row, word)| {
                    let insert = format!("{}{SPACE}", &word[context.len()..]);
                    remaining.starts_with(&insert).then_some((row, insert))
                });
            if let Some((row, insert)) = slot {
                select(row, 0, &mut result);
                result.completions += 1;
                text.push_str(&insert);
                continue;
            }
        }
        let c = remaining.chars().next().expect("goal not reached");
        let (row, col) = grid.position(c).ok_or(Error::UnknownCharacter(c))?;
        select(row, col + column_shift, &mut result);
        text.push(c);
    }
    Ok(result)
}
