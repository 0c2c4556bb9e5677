//! Vendored resource files embedded at compile time: the stopword list, the
//! abstention phrase dictionary, and the numbered instruction table. Their
//! SHA-256 checksums are part of the tool's version surface so any edit to
//! the frozen lists is visible downstream.

use std::sync::OnceLock;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::prompting::InstructionSet;
use crate::textnorm::{AbstentionDictionary, Normalizer, Stopwords};

pub const STOPWORDS_TXT: &str = include_str!("../resources/stopwords.txt");
pub const ABSTENTION_PHRASES_TXT: &str = include_str!("../resources/abstention_phrases.txt");
pub const INSTRUCTIONS_TSV: &str = include_str!("../resources/instructions.tsv");

#[derive(Debug, Clone, Serialize)]
pub struct ResourceChecksums {
    pub stopwords: String,
    pub abstention_phrases: String,
    pub instructions: String,
}

#[derive(Debug)]
pub struct Resources {
    pub normalizer: Normalizer,
    pub instructions: InstructionSet,
    pub checksums: ResourceChecksums,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(digest.len() * 2);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

impl Resources {
    fn load_embedded() -> crate::error::Result<Self> {
        let stopwords = Stopwords::from_lines(STOPWORDS_TXT);
        let dictionary = AbstentionDictionary::from_lines(ABSTENTION_PHRASES_TXT)?;
        let instructions = InstructionSet::from_tsv(INSTRUCTIONS_TSV)?;
        Ok(Resources {
            normalizer: Normalizer {
                stopwords,
                dictionary,
            },
            instructions,
            checksums: ResourceChecksums {
                stopwords: sha256_hex(STOPWORDS_TXT.as_bytes()),
                abstention_phrases: sha256_hex(ABSTENTION_PHRASES_TXT.as_bytes()),
                instructions: sha256_hex(INSTRUCTIONS_TSV.as_bytes()),
            },
        })
    }
}

/// Process-wide handle to the embedded resources. The embedded files are
/// frozen, so a load failure is a build defect and panics.
pub fn resources() -> &'static Resources {
    static CELL: OnceLock<Resources> = OnceLock::new();
    CELL.get_or_init(|| {
        Resources::load_embedded().expect("embedded resource files must be valid")
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embedded_resources_load() {
        let r = resources();
        assert_eq!(r.normalizer.dictionary.phrases().len(), 11);
        assert_eq!(r.instructions.len(), 20);
        // The frozen stopword list holds roughly 150 entries.
        assert!(r.normalizer.stopwords.len() >= 140 && r.normalizer.stopwords.len() <= 160);
    }

    #[test]
    fn checksums_are_hex_sha256() {
        let c = &resources().checksums;
        for sum in [&c.stopwords, &c.abstention_phrases, &c.instructions] {
            assert_eq!(sum.len(), 64);
            assert!(sum.chars().all(|ch| ch.is_ascii_hexdigit()));
        }
    }
}
