mod common;

use nomon::language_prior::{compute_prior, select_completions, CorpusIndex, PriorConfig};
use proptest::prelude::*;

/// Small corpora over a four-letter alphabet so that prefixes collide often.
fn corpus() -> impl Strategy<Value = Vec<(String, u64)>> {
    prop::collection::vec(("[abcd]{1,4}", 0u64..400), 1..50)
}

fn context() -> impl Strategy<Value = String> {
    "[abcd]{0,3}"
}

fn configs() -> impl Strategy<Value = PriorConfig> {
    (prop_oneof![Just(0.001), 0.0f64..0.3], 0usize..4, any::<bool>()).prop_map(|(t, k, ideal)| PriorConfig {
        completion_threshold: t,
        max_completions_per_letter: k,
        ideal_user: ideal,
        ..PriorConfig::default()
    })
}

fn to_index(words: &[(String, u64)]) -> Option<CorpusIndex> {
    CorpusIndex::build(words.iter().map(|(w, c)| (w.as_str(), *c))).ok()
}

proptest! {
    #[test]
    fn index_matches_filtered_scan(raw in corpus(), probe in context()) {
        let filtered = common::filter_words(&raw);
        let Some(idx) = to_index(&raw) else {
            prop_assert!(filtered.is_empty());
            return Ok(());
        };
        prop_assert_eq!(idx.words(), filtered.as_slice());
        prop_assert_eq!(idx.prefix_frequency(&probe), common::scan_prefix(&filtered, &probe));
        let exact = filtered.iter().find(|(w, _)| *w == probe).map_or(0, |(_, f)| *f);
        prop_assert_eq!(idx.word_frequency(&probe), exact);
    }

    #[test]
    fn prior_matches_brute_force_scan(raw in corpus(), ctx in context(), config in configs()) {
        let Some(idx) = to_index(&raw) else { return Ok(()) };
        let words = common::filter_words(&raw);
        let onscreen = select_completions(&idx, &config, &ctx);
        let expected_on = common::scan_completions(&words, &config, &ctx);
        let got_on: Vec<_> = onscreen.iter().map(|c| (c.letter, c.word.clone(), c.frequency)).collect();
        prop_assert_eq!(&got_on, &expected_on);

        let prior = compute_prior(&idx, &config, &ctx, &onscreen);
        let (letters, completions) = common::scan_prior(&words, &config, &ctx);
        prop_assert_eq!(prior.letters, letters);
        let got: Vec<_> = prior.words.iter().map(|(c, p)| (c.word.clone(), *p)).collect();
        prop_assert_eq!(got, completions);
        prop_assert_eq!(prior.specials, config.special_masses);
    }

    #[test]
    fn masses_are_positive_and_clamped(raw in corpus(), ctx in context(), config in configs()) {
        let Some(idx) = to_index(&raw) else { return Ok(()) };
        let onscreen = select_completions(&idx, &config, &ctx);
        let prior = compute_prior(&idx, &config, &ctx, &onscreen);
        prop_assert!(prior.letters.iter().all(|p| *p > 0.0));
        prop_assert!(prior.words.iter().all(|(_, p)| *p > 0.0));
        prop_assert!(prior.total() <= 1.0 + 1e-9, "total {}", prior.total());
    }

    #[test]
    fn more_frequent_continuations_get_more_mass(raw in corpus(), ctx in context()) {
        let Some(idx) = to_index(&raw) else { return Ok(()) };
        let config = PriorConfig::default();
        let onscreen = select_completions(&idx, &config, &ctx);
        let prior = compute_prior(&idx, &config, &ctx, &onscreen);
        for a in 'a'..='z' {
            for b in 'a'..='z' {
                let fa = idx.prefix_frequency(&format!("{ctx}{a}"));
                let fb = idx.prefix_frequency(&format!("{ctx}{b}"));
                if fa > fb {
                    prop_assert!(prior.letter(a).unwrap() > prior.letter(b).unwrap());
                }
            }
        }
    }

    #[test]
    fn prior_is_deterministic(raw in corpus(), ctx in context(), config in configs()) {
        let Some(idx) = to_index(&raw) else { return Ok(()) };
        let mut reversed = raw.clone();
        reversed.reverse();
        let idx2 = to_index(&reversed).unwrap();
        let run = |i: &CorpusIndex| {
            let on = select_completions(i, &config, &ctx);
            compute_prior(i, &config, &ctx, &on)
        };
        let (a, b) = (run(&idx), run(&idx2));
        prop_assert_eq!(a.letters.map(f64::to_bits), b.letters.map(f64::to_bits));
        prop_assert_eq!(a.words, b.words);
    }

    #[test]
    fn index_file_round_trip(raw in corpus()) {
        let Some(idx) = to_index(&raw) else { return Ok(()) };
        let back = CorpusIndex::from_file_format(idx.to_file_format()).unwrap();
        prop_assert_eq!(back.words(), idx.words());
        prop_assert_eq!(back.total_frequency(), idx.total_frequency());
    }
}

#[test]
fn gating_is_strict_at_the_threshold() {
    // f(context) = 12000 for context "t"; 12/12000 is exactly 0.001.
    let idx = CorpusIndex::build([("tab", 12u64), ("tac", 13), ("the", 11975)]).unwrap();
    let on = select_completions(&idx, &PriorConfig::default(), "t");
    let words: Vec<_> = on.iter().map(|c| c.word.as_str()).collect();
    assert_eq!(idx.prefix_frequency("t"), 12000);
    assert_eq!(words, ["tac", "the"]);
}

#[test]
fn desk_corpus_loads_from_tsv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("words.tsv");
    std::fs::write(&path, "# comment\nthe\t100\nThen\t50\nbad line\nb\t9\n\n").unwrap();
    let (idx, report) = CorpusIndex::from_tsv_file(&path).unwrap();
    assert_eq!(idx.words(), [("the".to_string(), 100), ("then".to_string(), 50)]);
    assert_eq!(report.malformed, 1);
    assert_eq!(report.filtered, 1);
    let json = dir.path().join("index.json");
    idx.save(&json).unwrap();
    assert_eq!(CorpusIndex::open(&json).unwrap().words(), idx.words());
    assert_eq!(CorpusIndex::open(&path).unwrap().words(), idx.words());
}
