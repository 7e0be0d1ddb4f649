//! Word-frequency prefix index and the keyboard prior.
//!
//! Letters and word completions share the mass left over after the four
//! special keys, using add-one smoothed prefix counts. The context is the run
//! of letters at the end of the output text.

use std::collections::BTreeMap;
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const ALPHABET_LEN: usize = 26;
pub const DEFAULT_COMPLETION_THRESHOLD: f64 = 0.001;
pub const DEFAULT_MAX_COMPLETIONS: usize = 3;
/// Words must appear strictly more often than this to be indexed.
pub const MIN_WORD_FREQUENCY: u64 = 5;

const INDEX_FORMAT: &str = "nomon-corpus-index";
const INDEX_VERSION: u32 = 1;
const NO_CHILD: u32 = 0;

fn letter_index(c: u8) -> Option<usize> {
    c.is_ascii_lowercase().then(|| (c - b'a') as usize)
}

/// Lowercases and strips everything outside `a-z`.
pub fn normalize_word(raw: &str) -> String {
    raw.chars()
        .flat_map(char::to_lowercase)
        .filter(char::is_ascii_lowercase)
        .collect()
}

/// The trailing run of letters in `text`.
pub fn context_of(text: &str) -> &str {
    let start = text
        .bytes()
        .rposition(|b| !b.is_ascii_lowercase())
        .map_or(0, |p| p + 1);
    &text[start..]
}

#[derive(Debug, Clone, Default)]
struct Node {
    children: [u32; ALPHABET_LEN],
    prefix_freq: u64,
    word_freq: u64,
}

/// Prefix tree over a filtered word list. Immutable once built.
#[derive(Debug, Clone)]
pub struct CorpusIndex {
    nodes: Vec<Node>,
    words: Vec<(String, u64)>,
}

/// Result of ingesting a word-frequency file.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IngestReport {
    pub malformed: usize,
    pub filtered: usize,
}

impl CorpusIndex {
    /// Builds the index from `(word, count)` records. Counts for the same
    /// normalised word are summed before filtering, so record order does not
    /// matter.
    pub fn build<I, S>(records: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, u64)>,
        S: AsRef<str>,
    {
        Ok(Self::build_with_report(records)?.0)
    }

    pub fn build_with_report<I, S>(records: I) -> Result<(Self, IngestReport)>
    where
        I: IntoIterator<Item = (S, u64)>,
        S: AsRef<str>,
    {
        let mut report = IngestReport::default();
        let mut counts: BTreeMap<String, u64> = BTreeMap::new();
        for (raw, count) in records {
            let word = normalize_word(raw.as_ref());
            if word.is_empty() {
                report.malformed += 1;
                continue;
            }
            *counts.entry(word).or_default() += count;
        }
        let before = counts.len();
        counts.retain(|w, c| *c > MIN_WORD_FREQUENCY && (w.len() > 1 || w == "a" || w == "i"));
        report.filtered = before - counts.len();
        if counts.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        Ok((Self::from_filtered(counts.into_iter().collect()), report))
    }

    fn from_filtered(words: Vec<(String, u64)>) -> Self {
        let mut nodes = vec![Node::default()];
        for (word, freq) in &words {
            let mut at = 0usize;
            nodes[0].prefix_freq += freq;
            for b in word.bytes() {
                let li = letter_index(b).expect("normalised word");
                if nodes[at].children[li] == NO_CHILD {
                    nodes.push(Node::default());
                    let id = (nodes.len() - 1) as u32;
                    nodes[at].children[li] = id;
                }
                at = nodes[at].children[li] as usize;
                nodes[at].prefix_freq += freq;
            }
            nodes[at].word_freq += freq;
        }
        Self { nodes, words }
    }

    /// Parses `word<TAB>count` lines. Blank lines and `#` comments are
    /// ignored; other unparsable lines are counted as malformed.
    pub fn from_reader(reader: impl BufRead) -> Result<(Self, IngestReport)> {
        let mut malformed = 0;
        let mut records = Vec::new();
        for line in reader.lines() {
            let line = line?;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let parsed = line
                .split_once('\t')
                .and_then(|(w, c)| c.trim().parse::<u64>().ok().map(|c| (w.to_string(), c)));
            match parsed {
                Some(r) => records.push(r),
                None => malformed += 1,
            }
        }
        if malformed > 0 {
            log::warn!("skipped {malformed} malformed corpus lines");
        }
        let (index, mut report) = Self::build_with_report(records)?;
        report.malformed += malformed;
        Ok((index, report))
    }

    pub fn from_tsv_file(path: impl AsRef<Path>) -> Result<(Self, IngestReport)> {
        let file = std::fs::File::open(path)?;
        Self::from_reader(std::io::BufReader::new(file))
    }

    fn node(&self, prefix: &str) -> Option<&Node> {
        let mut at = 0usize;
        for b in prefix.bytes() {
            let child = self.nodes[at].children[letter_index(b)?];
            if child == NO_CHILD {
                return None;
            }
            at = child as usize;
        }
        Some(&self.nodes[at])
    }

    /// Summed frequency of all words that `prefix` prefixes (including the
    /// word equal to `prefix`). The empty prefix gives the corpus total.
    pub fn prefix_frequency(&self, prefix: &str) -> u64 {
        self.node(prefix).map_or(0, |n| n.prefix_freq)
    }

    /// Frequency of `word` itself, zero if absent.
    pub fn word_frequency(&self, word: &str) -> u64 {
        self.node(word).map_or(0, |n| n.word_freq)
    }

    pub fn total_frequency(&self) -> u64 {
        self.nodes[0].prefix_freq
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Indexed words with their frequencies, in lexicographic order.
    pub fn words(&self) -> &[(String, u64)] {
        &self.words
    }

    /// The `limit` most frequent words under `prefix` that pass `keep`,
    /// ordered by frequency then lexicographically.
    pub fn top_words(&self, prefix: &str, limit: usize, keep: impl Fn(&str, u64) -> bool) -> Vec<(String, u64)> {
        let Some(start) = self.node(prefix) else {
            return Vec::new();
        };
        let mut best: Vec<(String, u64)> = Vec::with_capacity(limit + 1);
        let mut stack: Vec<(&Node, String)> = vec![(start, prefix.to_string())];
        while let Some((node, word)) = stack.pop() {
            if node.word_freq > 0 && keep(&word, node.word_freq) {
                let better = |(w, f): &(String, u64)| f > &node.word_freq || (*f == node.word_freq && w < &word);
                let pos = best.iter().take_while(|e| better(e)).count();
                if pos < limit {
                    best.insert(pos, (word.clone(), node.word_freq));
                    best.truncate(limit);
                }
            }
            for (li, &child) in node.children.iter().enumerate().rev() {
                if child != NO_CHILD {
                    let mut next = word.clone();
                    next.push((b'a' + li as u8) as char);
                    stack.push((&self.nodes[child as usize], next));
                }
            }
        }
        best
    }

    pub fn to_file_format(&self) -> IndexFile {
        IndexFile {
            format: INDEX_FORMAT.to_string(),
            version: INDEX_VERSION,
            total_frequency: self.total_frequency(),
            words: self.words.clone(),
        }
    }

    pub fn from_file_format(file: IndexFile) -> Result<Self> {
        if file.format != INDEX_FORMAT {
            return Err(Error::Format(format!("index format {:?}", file.format)));
        }
        if file.version != INDEX_VERSION {
            return Err(Error::Version {
                format: INDEX_FORMAT,
                found: file.version,
                expected: INDEX_VERSION,
            });
        }
        let index = Self::build(file.words)?;
        if index.total_frequency() != file.total_frequency {
            return Err(Error::Format("index total does not match its words".into()));
        }
        Ok(index)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string(&self.to_file_format())?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_file_format(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    /// Loads either a serialised index or a `word<TAB>count` list.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        if text.trim_start().starts_with('{') {
            Self::from_file_format(serde_json::from_str(&text)?)
        } else {
            Ok(Self::from_reader(text.as_bytes())?.0)
        }
    }
}

/// Serialised index: a versioned header plus the filtered word list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexFile {
    pub format: String,
    pub version: u32,
    pub total_frequency: u64,
    pub words: Vec<(String, u64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpecialMasses {
    pub space: f64,
    pub period: f64,
    pub delete: f64,
    pub undo: f64,
}

impl Default for SpecialMasses {
    fn default() -> Self {
        Self {
            space: 0.17,
            period: 0.01,
            delete: 0.03,
            undo: 0.01,
        }
    }
}

impl SpecialMasses {
    pub fn total(&self) -> f64 {
        self.space + self.period + self.delete + self.undo
    }

    fn iter(&self) -> [f64; 4] {
        [self.space, self.period, self.delete, self.undo]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PriorConfig {
    pub special_masses: SpecialMasses,
    pub completion_threshold: f64,
    pub max_completions_per_letter: usize,
    /// Subtract on-screen completions from their letter and drop the
    /// completion counts from the denominator.
    pub ideal_user: bool,
}

impl Default for PriorConfig {
    fn default() -> Self {
        Self {
            special_masses: SpecialMasses::default(),
            completion_threshold: DEFAULT_COMPLETION_THRESHOLD,
            max_completions_per_letter: DEFAULT_MAX_COMPLETIONS,
            ideal_user: false,
        }
    }
}

impl PriorConfig {
    /// Mass shared by letters and completions.
    pub fn p_alpha(&self) -> f64 {
        1.0 - self.special_masses.total()
    }

    pub fn validate(&self) -> Result<()> {
        if self.special_masses.iter().iter().any(|m| !(*m > 0.0 && *m < 1.0)) {
            return Err(Error::Config("special masses must lie in (0, 1)".into()));
        }
        if self.p_alpha().is_nan() || self.p_alpha() <= 0.0 {
            return Err(Error::Config("special masses leave no mass for letters".into()));
        }
        if !(self.completion_threshold >= 0.0 && self.completion_threshold < 1.0) {
            return Err(Error::Config("completion threshold must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

/// A word offered next to the letter that follows the context.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Completion {
    pub letter: char,
    pub word: String,
    pub frequency: u64,
}

/// For each letter, the most frequent words extending `context` by that
/// letter whose share of the context frequency exceeds the threshold.
pub fn select_completions(index: &CorpusIndex, config: &PriorConfig, context: &str) -> Vec<Completion> {
    let context_freq = index.prefix_frequency(context);
    if context_freq == 0 {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut prefix = String::with_capacity(context.len() + 1);
    for li in 0..ALPHABET_LEN as u8 {
        let letter = (b'a' + li) as char;
        prefix.clear();
        prefix.push_str(context);
        prefix.push(letter);
        let words = index.top_words(&prefix, config.max_completions_per_letter, |_, f| {
            f as f64 / context_freq as f64 > config.completion_threshold
        });
        out.extend(words.into_iter().map(|(word, frequency)| Completion {
            letter,
            word,
            frequency,
        }));
    }
    out
}

/// Prior masses for the 26 letters, the on-screen completions and the four
/// special keys.
#[derive(Debug, Clone, PartialEq)]
pub struct Prior {
    pub letters: [f64; ALPHABET_LEN],
    pub words: Vec<(Completion, f64)>,
    pub specials: SpecialMasses,
}

impl Prior {
    pub fn total(&self) -> f64 {
        self.letters.iter().sum::<f64>() + self.words.iter().map(|(_, p)| p).sum::<f64>() + self.specials.total()
    }

    pub fn letter(&self, c: char) -> Option<f64> {
        letter_index(c as u8).map(|i| self.letters[i])
    }
}

pub fn compute_prior(index: &CorpusIndex, config: &PriorConfig, context: &str, onscreen: &[Completion]) -> Prior {
    let p_alpha = config.p_alpha();
    let context_freq = index.prefix_frequency(context) as f64;
    let onscreen_freq: f64 = onscreen.iter().map(|c| c.frequency as f64).sum();
    let c_on = (onscreen.len() + ALPHABET_LEN) as f64;
    let denom = if config.ideal_user {
        context_freq + c_on
    } else {
        context_freq + onscreen_freq + c_on
    };

    let mut prefix = String::with_capacity(context.len() + 1);
    let mut letters = [0.0; ALPHABET_LEN];
    for (li, slot) in letters.iter_mut().enumerate() {
        let letter = (b'a' + li as u8) as char;
        prefix.clear();
        prefix.push_str(context);
        prefix.push(letter);
        let mut count = index.prefix_frequency(&prefix) as f64;
        if config.ideal_user {
            count -= onscreen
                .iter()
                .filter(|c| c.letter == letter)
                .map(|c| c.frequency as f64)
                .sum::<f64>();
        }
        *slot = p_alpha * (count + 1.0) / denom;
    }
    let words = onscreen
        .iter()
        .map(|c| (c.clone(), p_alpha * (c.frequency as f64 + 1.0) / denom))
        .collect();
    Prior {
        letters,
        words,
        specials: config.special_masses,
    }
}
