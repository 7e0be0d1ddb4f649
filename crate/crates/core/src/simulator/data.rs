//! Desk-scale corpus and phrase set shipped with the crate.

use std::sync::OnceLock;

use crate::language_prior::CorpusIndex;

/// 10,000 English words with counts per 100 million words, `word<TAB>count`.
pub const DESK_CORPUS_TSV: &str = include_str!("../../data/desk_corpus.tsv");
/// Short phrases over `a-z`, underscore and period, one per line.
pub const PHRASES_TXT: &str = include_str!("../../data/phrases.txt");

pub fn desk_corpus() -> &'static CorpusIndex {
    static INDEX: OnceLock<CorpusIndex> = OnceLock::new();
    INDEX.get_or_init(|| {
        CorpusIndex::from_reader(DESK_CORPUS_TSV.as_bytes())
            .expect("bundled corpus parses")
            .0
    })
}

pub fn phrases() -> Vec<&'static str> {
    PHRASES_TXT.lines().map(str::trim).filter(|l| !l.is_empty()).collect()
}
