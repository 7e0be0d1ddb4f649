mod common;

use std::collections::BTreeMap;

use nomon::click_model::ClickDensity;
use nomon::config::EngineConfig;
use nomon::selector::{check_winner, Clock, PhaseHeuristic, SlotPhases, Threshold};
use nomon::simulator::{simulate_selection, UserProfile};
use nomon::{ClockId, ClockSet, Period, Round};
use proptest::prelude::*;

fn density_from(history: &[Vec<f64>]) -> ClickDensity {
    let mut d = ClickDensity::new(2.0, 80, 0.9).unwrap();
    for sel in history {
        d.commit_offsets(sel);
    }
    d
}

fn learned_density() -> impl Strategy<Value = ClickDensity> {
    prop::collection::vec(prop::collection::vec(-0.1f64..0.15, 0..4), 0..20).prop_map(|h| density_from(&h))
}

fn weights(max: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.001f64..1.0, 1..=max)
}

fn circular_distance(a: f64, b: f64, period: f64) -> f64 {
    let d = (a - b).rem_euclid(period);
    d.min(period - d)
}

proptest! {
    #[test]
    fn shifting_log_posteriors_changes_nothing(
        logs in prop::collection::vec(-50.0f64..0.0, 1..40),
        shift in -1e3f64..1e3,
        alpha in 1.5f64..1e4,
    ) {
        let entries: Vec<(ClockId, f64)> = logs.iter().enumerate().map(|(i, l)| (ClockId(i as u32), *l)).collect();
        let shifted: Vec<(ClockId, f64)> = entries.iter().map(|(id, l)| (*id, l + shift)).collect();
        let t = Threshold::global(alpha);
        // A margin keeps the comparison away from float ties at the threshold.
        let mut sorted = logs.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        if sorted.len() > 1 {
            prop_assume!(((sorted[0] - sorted[1]) - alpha.ln()).abs() > 1e-9);
        }
        prop_assert_eq!(check_winner(&entries, &t), check_winner(&shifted, &t));
    }

    #[test]
    fn phases_are_deterministic_and_order_free(w in weights(40), d in learned_density(), perm_seed in any::<u64>()) {
        let posterior: Vec<(ClockId, f64)> = w.iter().enumerate().map(|(i, p)| (ClockId(i as u32 * 3 + 1), *p)).collect();
        let phases = SlotPhases.assign(&posterior, &d, 2.0);
        prop_assert_eq!(&phases, &SlotPhases.assign(&posterior, &d, 2.0));

        let mut order: Vec<usize> = (0..posterior.len()).collect();
        let mut s = perm_seed;
        for i in (1..order.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            order.swap(i, (s >> 33) as usize % (i + 1));
        }
        let permuted: Vec<(ClockId, f64)> = order.iter().map(|&i| posterior[i]).collect();
        let permuted_phases = SlotPhases.assign(&permuted, &d, 2.0);
        for (k, &i) in order.iter().enumerate() {
            prop_assert_eq!(permuted_phases[k], phases[i]);
        }
    }

    #[test]
    fn leading_clocks_are_a_slot_apart(w in weights(40), d in learned_density(), period in 0.3f64..3.0) {
        prop_assume!(w.len() >= 2);
        let posterior: Vec<(ClockId, f64)> = w.iter().enumerate().map(|(i, p)| (ClockId(i as u32), *p)).collect();
        let phases = SlotPhases.assign(&posterior, &d, period);
        let mut idx: Vec<usize> = (0..w.len()).collect();
        idx.sort_by(|&a, &b| w[b].total_cmp(&w[a]).then(a.cmp(&b)));
        let m = SlotPhases::slot_count(&d) as f64;
        let gap = circular_distance(phases[idx[0]], phases[idx[1]], period);
        prop_assert!(gap >= period / m - 1e-12, "gap {gap}, slot {}", period / m);
        prop_assert!(phases.iter().all(|p| (0.0..period).contains(p)));
    }

    /// The engine's log-space posterior equals the direct product of prior
    /// and likelihoods at the phases in force when each click arrived.
    #[test]
    fn posterior_matches_direct_bayes(
        w in weights(32),
        d in learned_density(),
        clicks in prop::collection::vec(0.0f64..20.0, 0..=6),
        j in -4i32..=18,
    ) {
        let priors: Vec<f64> = w.clone();
        let clocks = ClockSet::from_priors(&priors).unwrap();
        let period = Period::from_index(j).unwrap();
        let mut round = Round::with_slots(clocks, period, Threshold::global(99.0), &d);
        let mut rows = Vec::new();
        let mut times = clicks.clone();
        times.sort_by(f64::total_cmp);
        for t in times {
            let row: Vec<f64> = round
                .phases()
                .map(|(_, phi)| common::likelihood_from_bins(d.bins(), (t - phi) / period.seconds()))
                .collect();
            rows.push(row);
            round.register_click(t, &d);
        }
        let oracle = common::direct_posterior(&priors, &rows);
        for ((_, got), want) in round.posterior().iter().zip(&oracle) {
            prop_assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        }
    }

    #[test]
    fn raising_alpha_never_stops_earlier(seed in any::<u64>(), n in 2usize..60, sd in 0.01f64..0.08, a in 2.0f64..500.0, factor in 1.0f64..20.0) {
        let clocks = ClockSet::uniform(n).unwrap();
        let profile = UserProfile::with_sd(sd);
        let d = ClickDensity::with_initial(2.0, 80, 0.9, 0.05, sd).unwrap();
        let run = |alpha| {
            let cfg = EngineConfig { alpha, ..EngineConfig::default() };
            simulate_selection(&clocks, ClockId(0), &profile, &cfg, &d, seed).unwrap().clicks
        };
        prop_assert!(run(a * factor) >= run(a));
    }
}

#[test]
fn per_clock_override_delays_only_that_clock() {
    let clocks = ClockSet::uniform(2).unwrap();
    let mut overrides = BTreeMap::new();
    overrides.insert(ClockId(0), 1e6);
    let t = Threshold { alpha: 99.0, overrides };
    let strong = [(ClockId(0), 0.0), (ClockId(1), -(1000.0f64).ln())];
    assert_eq!(check_winner(&strong, &t), None);
    let flipped = [(ClockId(0), -(1000.0f64).ln()), (ClockId(1), 0.0)];
    assert_eq!(check_winner(&flipped, &t), Some(ClockId(1)));
    assert_eq!(clocks.len(), 2);
}

#[test]
fn clock_set_rejects_duplicates_and_bad_priors() {
    let c = |id, prior| Clock { id: ClockId(id), label: String::new(), prior };
    assert!(ClockSet::new(vec![c(1, 0.5), c(1, 0.5)]).is_err());
    assert!(ClockSet::new(vec![c(1, 0.0)]).is_err());
    assert!(ClockSet::new(Vec::new()).is_err());
}
