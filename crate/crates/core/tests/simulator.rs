mod common;

use nomon::config::EngineConfig;
use nomon::simulator::data::desk_corpus;
use nomon::simulator::experiment::{
    run_scanning, run_selection_trials, run_selection_trials_sequential, summarize_selections, PriorKind,
    ScanningScenario, Scenario, SelectionScenario,
};
use nomon::simulator::scanning::{simulate_scanning, ScanningGrid};
use nomon::simulator::{error_rate, levenshtein, words_per_minute, UserProfile};
use proptest::prelude::*;

fn scenario(clocks: usize, sd: f64, trials: usize) -> SelectionScenario {
    SelectionScenario {
        clocks,
        profile: UserProfile::with_sd(sd),
        trials,
        ..SelectionScenario::default()
    }
}

#[test]
fn mean_entropy_falls_with_every_click() {
    for sd in [0.015, 0.03] {
        let s = SelectionScenario {
            prior: PriorKind::Keyboard,
            ..scenario(30, sd, 1000)
        };
        let summary = summarize_selections(&run_selection_trials(&s).unwrap());
        let h = &summary.mean_entropy_by_click;
        assert!(h.len() >= 2);
        for k in 1..h.len() {
            assert!(h[k] < h[k - 1], "sd {sd}: H[{k}] = {} after {}", h[k], h[k - 1]);
        }
    }
}

#[test]
fn clicks_grow_logarithmically_with_clock_count() {
    let base = scenario(0, 0.02, 1000);
    let bits = base.density().unwrap().information_bits();
    let counts = [8usize, 30, 100, 401];
    let means: Vec<f64> = counts
        .iter()
        .map(|&c| {
            let s = SelectionScenario { clocks: c, ..base.clone() };
            summarize_selections(&run_selection_trials(&s).unwrap()).mean_clicks
        })
        .collect();
    let slope = |c: usize| (c as f64).log2() / bits;
    let intercept = counts.iter().zip(&means).map(|(&c, m)| m - slope(c)).sum::<f64>() / counts.len() as f64;
    for (&c, m) in counts.iter().zip(&means) {
        let residual = m - intercept - slope(c);
        assert!(residual.abs() < 0.5, "C = {c}: mean {m}, residual {residual}");
    }
}

#[test]
fn trials_are_reproducible_from_the_seed() {
    let s = scenario(30, 0.03, 200);
    let a = run_selection_trials(&s).unwrap();
    let b = run_selection_trials(&s).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    assert_eq!(a, run_selection_trials_sequential(&s).unwrap());
    let other = run_selection_trials(&SelectionScenario { seed: 2, ..s }).unwrap();
    assert_ne!(a, other);
}

#[test]
fn stricter_threshold_does_not_raise_errors() {
    // The second case is a cold start with a loose user, where errors are
    // frequent enough for the comparison to bite.
    let cases = [
        scenario(30, 0.03, 2000),
        SelectionScenario { pretrain_selections: 0, ..scenario(30, 0.06, 4000) },
    ];
    for base in cases {
        let error = |alpha| {
            let s = SelectionScenario {
                engine: EngineConfig { alpha, ..EngineConfig::default() },
                ..base.clone()
            };
            summarize_selections(&run_selection_trials(&s).unwrap()).error_fraction
        };
        let (e99, e999) = (error(99.0), error(999.0));
        let sd = base.profile.offset_sd;
        assert!(e99 <= 0.01, "sd {sd}: alpha 99 error {e99}");
        assert!(e999 <= e99, "sd {sd}: alpha 999 error {e999} > {e99}");
    }
}

#[test]
fn scenario_files_parse() {
    let s: Scenario = serde_json::from_str(r#"{"kind":"selection","clocks":401,"prior":"uniform","profile":{"offset_mean":0.05,"offset_sd":0.02,"lapse_prob":0.0}}"#).unwrap();
    let Scenario::Selection(sel) = s else { panic!("{s:?}") };
    assert_eq!(sel.clocks, 401);
    assert_eq!(sel.trials, SelectionScenario::default().trials);
    let s: Scenario = serde_json::from_str(r#"{"kind":"scanning","completion_count":6}"#).unwrap();
    assert!(matches!(s, Scenario::Scanning(ScanningScenario { completion_count: 6, .. })));
}

#[test]
fn bundled_phrases_scan_at_two_clicks_per_char() {
    let results = run_scanning(&ScanningScenario::default(), desk_corpus()).unwrap();
    assert!(results.iter().all(|r| r.clicks == 2 * r.chars));
}

proptest! {
    #[test]
    fn scanning_spends_two_clicks_per_selection(phrase in "[a-z_]{0,40}", completions in 0usize..=6, delay in 0.1f64..1.0) {
        let grid = ScanningGrid::standard();
        let r = simulate_scanning(&phrase, &grid, delay, completions, Some(desk_corpus())).unwrap();
        prop_assert_eq!(r.clicks, 2 * r.selections);
        prop_assert!(r.click_load() <= 2.0 + 1e-12);
    }

    #[test]
    fn levenshtein_matches_dynamic_programming(a in "[a-c_]{0,12}", b in "[a-c_]{0,12}") {
        prop_assert_eq!(levenshtein(&a, &b), common::edit_distance(&a, &b));
        prop_assert_eq!(levenshtein(&a, &b), levenshtein(&b, &a));
    }

    #[test]
    fn error_rate_is_total_distance_over_total_length(
        pairs in prop::collection::vec(("[a-c]{1,10}", "[a-c]{0,10}"), 1..8)
    ) {
        let targets: Vec<&str> = pairs.iter().map(|p| p.0.as_str()).collect();
        let outputs: Vec<&str> = pairs.iter().map(|p| p.1.as_str()).collect();
        let d: usize = pairs.iter().map(|(t, o)| common::edit_distance(t, o)).sum();
        let n: usize = targets.iter().map(|t| t.chars().count()).sum();
        let got = error_rate(&targets, &outputs).unwrap();
        prop_assert!((got - d as f64 / n as f64).abs() < 1e-12);
    }

    #[test]
    fn wpm_counts_five_character_words(chars in 1usize..10_000, seconds in 0.5f64..10_000.0) {
        let expected = chars as f64 / 5.0 / (seconds / 60.0);
        prop_assert!((words_per_minute(chars, seconds) - expected).abs() <= 1e-9 * expected);
    }
}
