//! The writing application: 26 letters, up to three completions per letter,
//! and the underscore, period, delete and undo keys.
//!
//! Clock ids are fixed for the keys (`a`..`z` are 0..25, then underscore,
//! period, delete, undo) and assigned from 30 upward to the completions shown
//! in a given round.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::language_prior::{compute_prior, context_of, select_completions, CorpusIndex, PriorConfig};
use crate::selector::{Clock, ClockId, ClockSet};

pub const SPACE_ID: ClockId = ClockId(26);
pub const PERIOD_ID: ClockId = ClockId(27);
pub const DELETE_ID: ClockId = ClockId(28);
pub const UNDO_ID: ClockId = ClockId(29);
pub const FIRST_WORD_ID: u32 = 30;

pub const SPACE: char = '_';
pub const PERIOD: char = '.';

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "snake_case")]
pub enum KeyAction {
    Letter(char),
    Word(String),
    Space,
    Period,
    Delete,
    Undo,
}

impl KeyAction {
    /// The key that types `c`.
    pub fn for_char(c: char) -> Result<Self> {
        match c {
            'a'..='z' => Ok(Self::Letter(c)),
            SPACE => Ok(Self::Space),
            PERIOD => Ok(Self::Period),
            other => Err(Error::UnknownCharacter(other)),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Self::Letter(c) => c.to_string(),
            Self::Word(w) => w.clone(),
            Self::Space => SPACE.to_string(),
            Self::Period => PERIOD.to_string(),
            Self::Delete => "DEL".into(),
            Self::Undo => "UNDO".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyOption {
    pub id: ClockId,
    pub label: String,
    pub action: KeyAction,
    pub prior: f64,
}

/// The options on screen for one round, in display order: letters
/// alphabetically (each followed by its completions), then the special keys.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    options: Vec<KeyOption>,
}

impl Layout {
    pub fn options(&self) -> &[KeyOption] {
        &self.options
    }

    pub fn clock_set(&self) -> ClockSet {
        ClockSet::new(
            self.options
                .iter()
                .map(|o| Clock {
                    id: o.id,
                    label: o.label.clone(),
                    prior: o.prior,
                })
                .collect(),
        )
        .expect("layout ids are unique and priors positive")
    }

    pub fn action(&self, id: ClockId) -> Option<&KeyAction> {
        self.options.iter().find(|o| o.id == id).map(|o| &o.action)
    }

    pub fn find(&self, action: &KeyAction) -> Option<ClockId> {
        self.options.iter().find(|o| &o.action == action).map(|o| o.id)
    }

    pub fn completions(&self) -> impl Iterator<Item = (ClockId, &str)> {
        self.options.iter().filter_map(|o| match &o.action {
            KeyAction::Word(w) => Some((o.id, w.as_str())),
            _ => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Edit {
    Insert(String),
    Delete(char),
    Nothing,
}

/// What applying a key did to the text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Applied {
    Inserted(String),
    Deleted(Option<char>),
    /// `true` when there was an edit to revert.
    Undone(bool),
}

/// Output text plus the undo history of edits.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Keyboard {
    text: String,
    history: Vec<Edit>,
}

impl Keyboard {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn context(&self) -> &str {
        context_of(&self.text)
    }

    /// Edits that an undo could still revert.
    pub fn undo_depth(&self) -> usize {
        self.history.len()
    }

    pub fn layout(&self, index: &CorpusIndex, config: &PriorConfig) -> Layout {
        let context = self.context();
        let onscreen = select_completions(index, config, context);
        let prior = compute_prior(index, config, context, &onscreen);
        let mut options = Vec::with_capacity(30 + onscreen.len());
        let mut next_word = FIRST_WORD_ID;
        let mut words = prior.words.iter().peekable();
        for (li, &p) in prior.letters.iter().enumerate() {
            let letter = (b'a' + li as u8) as char;
            options.push(KeyOption {
                id: ClockId(li as u32),
                label: letter.to_string(),
                action: KeyAction::Letter(letter),
                prior: p,
            });
            while let Some((completion, p)) = words.next_if(|(c, _)| c.letter == letter) {
                options.push(KeyOption {
                    id: ClockId(next_word),
                    label: completion.word.clone(),
                    action: KeyAction::Word(completion.word.clone()),
                    prior: *p,
                });
                next_word += 1;
            }
        }
        let s = prior.specials;
        for (id, action, p) in [
            (SPACE_ID, KeyAction::Space, s.space),
            (PERIOD_ID, KeyAction::Period, s.period),
            (DELETE_ID, KeyAction::Delete, s.delete),
            (UNDO_ID, KeyAction::Undo, s.undo),
        ] {
            options.push(KeyOption {
                id,
                label: action.label(),
                action,
                prior: p,
            });
        }
        Layout { options }
    }

    /// Text a completion appends: the rest of the word plus an underscore.
    pub fn completion_text(&self, word: &str) -> String {
        let context = self.context();
        let rest = word.strip_prefix(context).unwrap_or(word);
        format!("{rest}{SPACE}")
    }

    pub fn apply(&mut self, action: &KeyAction) -> Applied {
        match action {
            KeyAction::Letter(c) => self.insert(c.to_string()),
            KeyAction::Space => self.insert(SPACE.to_string()),
            KeyAction::Period => self.insert(PERIOD.to_string()),
            KeyAction::Word(w) => {
                let add = self.completion_text(w);
                self.insert(add)
            }
            KeyAction::Delete => {
                let removed = self.text.pop();
                self.history.push(removed.map_or(Edit::Nothing, Edit::Delete));
                Applied::Deleted(removed)
            }
            KeyAction::Undo => Applied::Undone(self.undo()),
        }
    }

    fn insert(&mut self, s: String) -> Applied {
        self.text.push_str(&s);
        self.history.push(Edit::Insert(s.clone()));
        Applied::Inserted(s)
    }

    fn undo(&mut self) -> bool {
        match self.history.pop() {
            Some(Edit::Insert(s)) => {
                let keep = self.text.len() - s.len();
                self.text.truncate(keep);
                true
            }
            Some(Edit::Delete(c)) => {
                self.text.push(c);
                true
            }
            Some(Edit::Nothing) => true,
            None => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn index() -> CorpusIndex {
        CorpusIndex::build([("the", 100u64), ("then", 50), ("they", 40), ("hello", 30), ("world", 20)]).unwrap()
    }

    #[test]
    fn layout_orders_letters_then_specials() {
        let kb = Keyboard::new();
        let layout = kb.layout(&index(), &PriorConfig::default());
        let labels: Vec<_> = layout.options().iter().map(|o| o.label.as_str()).collect();
        assert_eq!(labels[0], "a");
        let tail = &labels[labels.len() - 4..];
        assert_eq!(tail, ["_", ".", "DEL", "UNDO"]);
        let h = labels.iter().position(|l| *l == "h").unwrap();
        assert_eq!(labels[h + 1], "hello");
        assert_eq!(layout.clock_set().len(), 30 + layout.completions().count());
    }

    #[test]
    fn completion_appends_rest_and_space() {
        let mut kb = Keyboard::new();
        kb.apply(&KeyAction::Letter('t'));
        kb.apply(&KeyAction::Letter('h'));
        kb.apply(&KeyAction::Word("then".into()));
        assert_eq!(kb.text(), "then_");
        assert_eq!(kb.apply(&KeyAction::Undo), Applied::Undone(true));
        assert_eq!(kb.text(), "th");
    }

    #[test]
    fn undo_reverts_delete_and_insert() {
        let mut kb = Keyboard::new();
        for c in "ab".chars() {
            kb.apply(&KeyAction::for_char(c).unwrap());
        }
        kb.apply(&KeyAction::Delete);
        assert_eq!(kb.text(), "a");
        kb.apply(&KeyAction::Undo);
        assert_eq!(kb.text(), "ab");
        kb.apply(&KeyAction::Undo);
        kb.apply(&KeyAction::Undo);
        assert_eq!(kb.text(), "");
        assert_eq!(kb.apply(&KeyAction::Undo), Applied::Undone(false));
    }

    #[test]
    fn delete_on_empty_text_is_recorded() {
        let mut kb = Keyboard::new();
        kb.apply(&KeyAction::Letter('x'));
        assert_eq!(kb.apply(&KeyAction::Delete), Applied::Deleted(Some('x')));
        assert_eq!(kb.apply(&KeyAction::Delete), Applied::Deleted(None));
        assert_eq!(kb.undo_depth(), 3);
        kb.apply(&KeyAction::Undo);
        assert_eq!(kb.text(), "");
        kb.apply(&KeyAction::Undo);
        assert_eq!(kb.text(), "x");
    }

    #[test]
    fn unknown_characters_are_rejected() {
        assert!(KeyAction::for_char('A').is_err());
        assert_eq!(KeyAction::for_char('_').unwrap(), KeyAction::Space);
    }

    #[test]
    fn prior_mass_is_at_most_one() {
        let mut kb = Keyboard::new();
        for ctx in ["", "t", "th", "zz"] {
            kb = Keyboard::new();
            for c in ctx.chars() {
                kb.apply(&KeyAction::Letter(c));
            }
            let total: f64 = kb.layout(&index(), &PriorConfig::default()).options().iter().map(|o| o.prior).sum();
            assert!(total <= 1.0 + 1e-9, "{ctx}: {total}");
        }
        assert!(kb.text() == "zz");
    }
}
