//! Prediction text normalization: first-sentence truncation, token
//! normalization with a frozen stopword list, and abstention detection.
//!
//! Generative answers are judged only on their first sentence. The order of
//! operations matters: abstention phrases are matched before stopword removal,
//! otherwise "not in background" would lose its "in" and stop matching.

use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Negation tokens that survive stopword removal unconditionally.
pub const NEGATIONS: [&str; 10] = [
    "not", "no", "never", "cannot", "n't", "none", "neither", "nor", "nothing", "nowhere",
];

/// Punctuation stripped from token edges. Interior apostrophes and hyphens
/// are kept so contractions and compounds stay whole.
const EDGE_PUNCT: &[char] = &['.', ',', ';', ':', '!', '?', '"', '(', ')', '[', ']', '{', '}'];

pub fn is_negation(token: &str) -> bool {
    NEGATIONS.contains(&token)
}

/// Frozen stopword list, loaded from the vendored resource file.
#[derive(Debug, Clone)]
pub struct Stopwords {
    words: HashSet<String>,
}

impl Stopwords {
    pub fn from_lines(text: &str) -> Self {
        let words = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(|l| l.to_lowercase())
            .collect();
        Stopwords { words }
    }

    pub fn contains(&self, token: &str) -> bool {
        self.words.contains(token)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Ordered abstention phrase dictionary. All phrases are lowercase and are
/// matched as whole-word contiguous substrings.
#[derive(Debug, Clone)]
pub struct AbstentionDictionary {
    phrases: Vec<String>,
}

/// Number of phrases the vendored dictionary must carry.
pub const ABSTENTION_PHRASE_COUNT: usize = 11;

impl AbstentionDictionary {
    pub fn from_lines(text: &str) -> Result<Self> {
        let phrases: Vec<String> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(str::to_string)
            .collect();
        if phrases.len() != ABSTENTION_PHRASE_COUNT {
            return Err(Error::Config(format!(
                "abstention dictionary must hold {} phrases, found {}",
                ABSTENTION_PHRASE_COUNT,
                phrases.len()
            )));
        }
        for p in &phrases {
            if p.chars().any(|c| c.is_uppercase()) {
                return Err(Error::Config(format!(
                    "abstention phrase must be lowercase: {p:?}"
                )));
            }
        }
        Ok(AbstentionDictionary { phrases })
    }

    pub fn phrases(&self) -> &[String] {
        &self.phrases
    }
}

/// A prediction after normalization. `tokens` is a set: EMO ignores token
/// order and multiplicity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizedText {
    pub first_sentence: String,
    pub tokens: BTreeSet<String>,
    pub abstained: bool,
}

/// Collapse whitespace runs to single spaces and trim the ends.
pub fn collapse_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Lowercased, whitespace-normalized prefix of `text` up to (excluding) the
/// first period or newline; the whole input when neither occurs.
pub fn first_sentence(text: &str) -> String {
    let cut = match text.find(['.', '\n']) {
        Some(i) => &text[..i],
        None => text,
    };
    collapse_ws(&cut.to_lowercase())
}

/// Distinct tokens of an already lowercased sentence: whitespace split, edge
/// punctuation stripped, stopwords removed unless they are negations.
pub fn normalize_tokens(sentence: &str, stopwords: &Stopwords) -> BTreeSet<String> {
    sentence
        .split_whitespace()
        .map(|t| t.trim_matches(EDGE_PUNCT))
        .filter(|t| !t.is_empty())
        .filter(|t| is_negation(t) || !stopwords.contains(t))
        .map(str::to_string)
        .collect()
}

/// Whether `phrase` occurs in `haystack` as a contiguous substring whose ends
/// fall on word boundaries. "unknowns" does not contain the word "unknown".
pub fn contains_phrase(haystack: &str, phrase: &str) -> bool {
    if phrase.is_empty() {
        return false;
    }
    let boundary = |c: char| !c.is_alphanumeric();
    let mut from = 0;
    while let Some(pos) = haystack[from..].find(phrase) {
        let begin = from + pos;
        let end = begin + phrase.len();
        let before_ok = haystack[..begin].chars().next_back().is_none_or(boundary);
        let after_ok = haystack[end..].chars().next().is_none_or(boundary);
        if before_ok && after_ok {
            return true;
        }
        // Step one full character so the next find starts on a boundary.
        let step = haystack[begin..].chars().next().map_or(1, char::len_utf8);
        from = begin + step;
    }
    false
}

/// True iff any dictionary phrase occurs in `sentence` on word boundaries.
/// Case and interior whitespace runs are folded here so the check holds for
/// raw and pre-normalized inputs alike.
pub fn detect_abstention(sentence: &str, dictionary: &AbstentionDictionary) -> bool {
    let folded = collapse_ws(&sentence.to_lowercase());
    dictionary
        .phrases()
        .iter()
        .any(|p| contains_phrase(&folded, p))
}

/// Stopword list and abstention dictionary bundled behind the two entry
/// points the rest of the crate uses.
#[derive(Debug, Clone)]
pub struct Normalizer {
    pub stopwords: Stopwords,
    pub dictionary: AbstentionDictionary,
}

impl Normalizer {
    /// Full prediction path: first sentence, abstention check, token set.
    pub fn normalize(&self, raw: &str) -> NormalizedText {
        let sentence = first_sentence(raw);
        let abstained = detect_abstention(&sentence, &self.dictionary);
        let tokens = normalize_tokens(&sentence, &self.stopwords);
        NormalizedText {
            first_sentence: sentence,
            tokens,
            abstained,
        }
    }

    /// Token set for a gold answer. Gold spans are short and may legitimately
    /// contain periods ("U.S."), so no sentence truncation happens here.
    pub fn answer_tokens(&self, answer: &str) -> BTreeSet<String> {
        normalize_tokens(&collapse_ws(&answer.to_lowercase()), &self.stopwords)
    }
}
