//! Word lists consumed by the tagger and the feature extractor.
//!
//! Every list is a UTF-8 text file with one lowercase entry per line; blank
//! lines and lines starting with `#` are ignored. The bundled copies are
//! compiled into the binary, and a directory holding files with the same
//! names can replace any subset of them at runtime.

use std::collections::HashSet;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use thiserror::Error;

/// Environment variable naming a directory of lexicon overrides.
pub const LEXICON_DIR_ENV: &str = "SARCASM_LEXICON_DIR";

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("failed to read lexicon {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

/// Identifies one lexicon file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LexiconKind {
    Interjections,
    PersonalPronouns,
    PossessivePronouns,
    Determiners,
    Prepositions,
    Conjunctions,
    Invocations,
    Intensifiers,
    Positive,
    Negative,
    SecondPerson,
    FirstPersonPlural,
}

impl LexiconKind {
    pub const ALL: [LexiconKind; 12] = [
        LexiconKind::Interjections,
        LexiconKind::PersonalPronouns,
        LexiconKind::PossessivePronouns,
        LexiconKind::Determiners,
        LexiconKind::Prepositions,
        LexiconKind::Conjunctions,
        LexiconKind::Invocations,
        LexiconKind::Intensifiers,
        LexiconKind::Positive,
        LexiconKind::Negative,
        LexiconKind::SecondPerson,
        LexiconKind::FirstPersonPlural,
    ];

    pub fn file_name(self) -> &'static str {
        match self {
            LexiconKind::Interjections => "interjections.txt",
            LexiconKind::PersonalPronouns => "personal_pronouns.txt",
            LexiconKind::PossessivePronouns => "possessive_pronouns.txt",
            LexiconKind::Determiners => "determiners.txt",
            LexiconKind::Prepositions => "prepositions.txt",
            LexiconKind::Conjunctions => "conjunctions.txt",
            LexiconKind::Invocations => "invocations.txt",
            LexiconKind::Intensifiers => "intensifiers.txt",
            LexiconKind::Positive => "positive.txt",
            LexiconKind::Negative => "negative.txt",
            LexiconKind::SecondPerson => "second_person.txt",
            LexiconKind::FirstPersonPlural => "first_person_plural.txt",
        }
    }

    fn bundled(self) -> &'static str {
        match self {
            LexiconKind::Interjections => include_str!("../data/lexicons/interjections.txt"),
            LexiconKind::PersonalPronouns => {
                include_str!("../data/lexicons/personal_pronouns.txt")
            }
            LexiconKind::PossessivePronouns => {
                include_str!("../data/lexicons/possessive_pronouns.txt")
            }
            LexiconKind::Determiners => include_str!("../data/lexicons/determiners.txt"),
            LexiconKind::Prepositions => include_str!("../data/lexicons/prepositions.txt"),
            LexiconKind::Conjunctions => include_str!("../data/lexicons/conjunctions.txt"),
            LexiconKind::Invocations => include_str!("../data/lexicons/invocations.txt"),
            LexiconKind::Intensifiers => include_str!("../data/lexicons/intensifiers.txt"),
            LexiconKind::Positive => include_str!("../data/lexicons/positive.txt"),
            LexiconKind::Negative => include_str!("../data/lexicons/negative.txt"),
            LexiconKind::SecondPerson => include_str!("../data/lexicons/second_person.txt"),
            LexiconKind::FirstPersonPlural => {
                include_str!("../data/lexicons/first_person_plural.txt")
            }
        }
    }
}

/// A single word list.
#[derive(Debug, Clone, Default)]
pub struct WordList {
    words: HashSet<String>,
}

impl WordList {
    pub fn parse(source: &str) -> Self {
        let words = source
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_lowercase)
            .collect();
        WordList { words }
    }

    /// `word` must already be lowercased.
    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// The full set of word lists, plus a digest of the raw file contents they
/// were built from.
#[derive(Debug, Clone)]
pub struct Lexicons {
    lists: Vec<WordList>,
    digest: String,
}

impl Lexicons {
    /// The lists compiled into the crate.
    pub fn bundled() -> Self {
        Self::from_sources(
            LexiconKind::ALL
                .iter()
                .map(|k| (*k, k.bundled().to_owned())),
        )
    }

    /// Bundled lists, with any file present in `dir` taking precedence.
    pub fn from_dir(dir: &Path) -> Result<Self, LexiconError> {
        let mut sources = Vec::with_capacity(LexiconKind::ALL.len());
        for kind in LexiconKind::ALL {
            let path = dir.join(kind.file_name());
            let text = if path.exists() {
                fs::read_to_string(&path).map_err(|source| LexiconError::Io {
                    path: path.clone(),
                    source,
                })?
            } else {
                kind.bundled().to_owned()
            };
            sources.push((kind, text));
        }
        Ok(Self::from_sources(sources))
    }

    /// Honors [`LEXICON_DIR_ENV`] when set, otherwise the bundled lists.
    pub fn from_env() -> Result<Self, LexiconError> {
        match std::env::var_os(LEXICON_DIR_ENV) {
            Some(dir) if !dir.is_empty() => Self::from_dir(Path::new(&dir)),
            _ => Ok(Self::bundled()),
        }
    }

    fn from_sources(sources: impl IntoIterator<Item = (LexiconKind, String)>) -> Self {
        let mut hasher = Sha256::new();
        let mut lists = vec![WordList::default(); LexiconKind::ALL.len()];
        for (kind, text) in sources {
            hasher.update(kind.file_name().as_bytes());
            hasher.update([0u8]);
            hasher.update((text.len() as u64).to_le_bytes());
            hasher.update(text.as_bytes());
            lists[kind as usize] = WordList::parse(&text);
        }
        Lexicons {
            lists,
            digest: hex::encode(hasher.finalize()),
        }
    }

    pub fn get(&self, kind: LexiconKind) -> &WordList {
        &self.lists[kind as usize]
    }

    /// Hex SHA-256 over every list's name and raw contents.
    pub fn digest(&self) -> &str {
        &self.digest
    }

    /// Writes the bundled lists into `dir`, e.g. as a starting point for edits.
    pub fn write_bundled(dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        for kind in LexiconKind::ALL {
            fs::write(dir.join(kind.file_name()), kind.bundled())?;
        }
        Ok(())
    }
}

impl Default for Lexicons {
    fn default() -> Self {
        Self::bundled()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_skips_comments_and_blanks() {
        let list = WordList::parse("# header\n\nWow\n  lol  \n#not\n");
        assert_eq!(list.len(), 2);
        assert!(list.contains("wow"));
        assert!(list.contains("lol"));
        assert!(!list.contains("#not"));
    }

    #[test]
    fn bundled_lists_are_populated() {
        let lex = Lexicons::bundled();
        for kind in LexiconKind::ALL {
            assert!(!lex.get(kind).is_empty(), "{kind:?} is empty");
        }
        assert!(lex.get(LexiconKind::Positive).len() >= 180);
        assert!(lex.get(LexiconKind::Negative).len() >= 180);
        assert!(lex.get(LexiconKind::Invocations).contains("god"));
    }

    #[test]
    fn override_dir_changes_digest() {
        let dir = tempfile::tempdir().unwrap();
        let same = Lexicons::from_dir(dir.path()).unwrap();
        assert_eq!(same.digest(), Lexicons::bundled().digest());

        fs::write(dir.path().join("intensifiers.txt"), "so\nvery\n").unwrap();
        let changed = Lexicons::from_dir(dir.path()).unwrap();
        assert_ne!(changed.digest(), Lexicons::bundled().digest());
        assert!(changed.get(LexiconKind::Intensifiers).contains("very"));
        assert!(!changed.get(LexiconKind::Intensifiers).contains("totally"));
    }
}
