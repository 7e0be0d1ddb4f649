//! Independent reference implementations used by the integration and
//! acceptance tests. Nothing here calls into the engine's internals.

#![allow(dead_code)]

use std::collections::BTreeSet;

use nomon::language_prior::PriorConfig;
use statrs::distribution::{ContinuousCDF, Normal};

pub const G0_MEAN: f64 = 0.05;
pub const G0_SD: f64 = 0.14;
pub const FLOOR_SD: f64 = 0.005;
pub const EPS: f64 = 1e-10;

pub fn wrap(x: f64) -> f64 {
    if (-0.5..0.5).contains(&x) {
        return x;
    }
    let r = x.rem_euclid(1.0);
    if r >= 0.5 {
        r - 1.0
    } else {
        r
    }
}

/// Mass of N(mean, sd^2) on each grid cell of `[-1/2, 1/2)`, summed over the
/// images at -1, 0, +1 and scaled to total one.
pub fn cell_masses(mean: f64, sd: f64, bins: usize) -> Vec<f64> {
    let width = 1.0 / bins as f64;
    let images: Vec<Normal> = [-1.0, 0.0, 1.0]
        .iter()
        .map(|k| Normal::new(mean + k, sd).unwrap())
        .collect();
    let raw: Vec<f64> = (0..bins)
        .map(|i| {
            let lo = -0.5 + i as f64 * width;
            let hi = lo + width;
            images.iter().map(|n| n.cdf(hi) - n.cdf(lo)).sum()
        })
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|m| m / total).collect()
}

fn window(n_lambda: f64) -> usize {
    (n_lambda - 1e-9).ceil() as usize
}

/// Spread estimate feeding the kernel of a selection: ML sd of the last
/// `ceil(n_lambda)` offsets committed before it.
pub fn sigma_before(history: &[Vec<f64>], n_lambda: f64) -> f64 {
    let all: Vec<f64> = history.iter().flatten().map(|&x| wrap(x)).collect();
    let last = &all[all.len().saturating_sub(window(n_lambda))..];
    if last.len() < 2 {
        return G0_SD;
    }
    let n = last.len() as f64;
    let mean = last.iter().sum::<f64>() / n;
    let var = last.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    var.sqrt().max(FLOOR_SD)
}

/// Closed-form accumulator after committing `history` in order:
/// `lambda^s n_lambda g0 + sum_s' lambda^(s-s') sum_r kernel(t_s'r)`, stored
/// as density values (cell mass times bin count).
pub fn kde_closed_form(history: &[Vec<f64>], lambda: f64, bins: usize) -> Vec<f64> {
    let n_lambda = 1.0 / (1.0 - lambda);
    let s = history.len() as i32;
    let scale = bins as f64;
    let mut out: Vec<f64> = cell_masses(G0_MEAN, G0_SD, bins)
        .into_iter()
        .map(|m| lambda.powi(s) * n_lambda * m * scale)
        .collect();
    for (k, selection) in history.iter().enumerate() {
        let h = 1.06 * n_lambda.powf(-0.2) * sigma_before(&history[..k], n_lambda);
        let weight = lambda.powi(s - 1 - k as i32);
        for &t in selection {
            for (o, m) in out.iter_mut().zip(cell_masses(wrap(t), h, bins)) {
                *o += weight * m * scale;
            }
        }
    }
    out
}

/// Normalised likelihood read straight off an accumulator.
pub fn likelihood_from_bins(bins: &[f64], offset: f64) -> f64 {
    let n = bins.len();
    let idx = (((wrap(offset) + 0.5) * n as f64).floor() as usize).min(n - 1);
    let total: f64 = bins.iter().sum();
    (bins[idx] + EPS) / ((total + EPS * n as f64) / n as f64)
}

/// Direct Bayes: prior times the product of likelihoods, normalised.
pub fn direct_posterior(priors: &[f64], likelihoods: &[Vec<f64>]) -> Vec<f64> {
    let joint: Vec<f64> = priors
        .iter()
        .enumerate()
        .map(|(c, p)| likelihoods.iter().fold(*p, |acc, row| acc * row[c]))
        .collect();
    let z: f64 = joint.iter().sum();
    joint.into_iter().map(|j| j / z).collect()
}

/// Frequency of all listed words beginning with `prefix`.
pub fn scan_prefix(words: &[(String, u64)], prefix: &str) -> u64 {
    words.iter().filter(|(w, _)| w.starts_with(prefix)).map(|(_, f)| f).sum()
}

/// On-screen completions by scanning the list: per letter, the most frequent
/// words under `context + letter` whose share of `f(context)` exceeds the
/// threshold, ties alphabetical.
pub fn scan_completions(words: &[(String, u64)], config: &PriorConfig, context: &str) -> Vec<(char, String, u64)> {
    let fc = scan_prefix(words, context);
    if fc == 0 {
        return Vec::new();
    }
    let mut out = Vec::new();
    for letter in 'a'..='z' {
        let prefix = format!("{context}{letter}");
        let mut cands: Vec<&(String, u64)> = words
            .iter()
            .filter(|(w, f)| w.starts_with(&prefix) && *f as f64 / fc as f64 > config.completion_threshold)
            .collect();
        cands.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        out.extend(
            cands
                .into_iter()
                .take(config.max_completions_per_letter)
                .map(|(w, f)| (letter, w.clone(), *f)),
        );
    }
    out
}

/// Letter and completion masses by scanning the word list.
pub fn scan_prior(words: &[(String, u64)], config: &PriorConfig, context: &str) -> ([f64; 26], Vec<(String, f64)>) {
    let p_alpha = config.p_alpha();
    let onscreen = scan_completions(words, config, context);
    let fc = scan_prefix(words, context) as f64;
    let f_on: f64 = onscreen.iter().map(|(_, _, f)| *f as f64).sum();
    let c_on = (onscreen.len() + 26) as f64;
    let denom = if config.ideal_user { fc + c_on } else { fc + f_on + c_on };
    let mut letters = [0.0; 26];
    for (i, letter) in ('a'..='z').enumerate() {
        let mut count = scan_prefix(words, &format!("{context}{letter}")) as f64;
        if config.ideal_user {
            count -= onscreen
                .iter()
                .filter(|(l, _, _)| *l == letter)
                .map(|(_, _, f)| *f as f64)
                .sum::<f64>();
        }
        letters[i] = p_alpha * (count + 1.0) / denom;
    }
    let completions = onscreen
        .into_iter()
        .map(|(_, w, f)| (w, p_alpha * (f as f64 + 1.0) / denom))
        .collect();
    (letters, completions)
}

/// The filtering rules applied to a raw list: sum duplicates, keep counts
/// above five, drop single letters other than "a" and "i".
pub fn filter_words(raw: &[(String, u64)]) -> Vec<(String, u64)> {
    let keys: BTreeSet<&String> = raw.iter().map(|(w, _)| w).collect();
    keys.into_iter()
        .map(|k| (k.clone(), raw.iter().filter(|(w, _)| w == k).map(|(_, f)| f).sum()))
        .filter(|(w, f): &(String, u64)| *f > 5 && (w.len() > 1 || w == "a" || w == "i"))
        .collect()
}

/// Dynamic-programming edit distance.
pub fn edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, cell) in d[0].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let sub = d[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            d[i][j] = sub.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
        }
    }
    d[a.len()][b.len()]
}
