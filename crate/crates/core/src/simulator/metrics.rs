//! Text-entry metrics.

use crate::error::{Error, Result};

/// Characters per word when converting to words per minute.
pub const CHARS_PER_WORD: f64 = 5.0;

/// Character-level edit distance (insert, delete, substitute).
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, ca) in a.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = (up + 1).min(row[j] + 1).min(diag + usize::from(ca != cb));
            diag = up;
        }
    }
    row[b.len()]
}

/// Summed edit distance over summed target length.
pub fn error_rate<S: AsRef<str>, T: AsRef<str>>(targets: &[S], outputs: &[T]) -> Result<f64> {
    if targets.len() != outputs.len() {
        return Err(Error::Config(format!(
            "{} targets but {} outputs",
            targets.len(),
            outputs.len()
        )));
    }
    let total: usize = targets.iter().map(|t| t.as_ref().chars().count()).sum();
    if total == 0 {
        return Err(Error::Undefined("error rate over empty targets"));
    }
    let dist: usize = targets
        .iter()
        .zip(outputs)
        .map(|(t, o)| levenshtein(t.as_ref(), o.as_ref()))
        .sum();
    Ok(dist as f64 / total as f64)
}

/// `(chars / 5) / minutes`.
pub fn words_per_minute(chars: usize, seconds: f64) -> f64 {
    (chars as f64 / CHARS_PER_WORD) / (seconds / 60.0)
}

/// Clicks per output character.
pub fn click_load(clicks: usize, chars: usize) -> f64 {
    clicks as f64 / chars as f64
}
