//! Corpus ingestion: three source formats (BBQ line-delimited JSON, SQuAD-v2
//! nested JSON, TriviaQA JSON) normalized into one flat record type, plus the
//! identity/non-identity topic partition.
//!
//! Records that fail validation are skipped and reported, never fatal: batch
//! ingestion must survive a handful of malformed lines.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Bbq,
    Squad,
    Trivia,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ambiguity {
    Ambiguous,
    Disambiguous,
}

impl Ambiguity {
    /// Stable short name used in slice keys and stats.
    pub fn key(self) -> &'static str {
        match self {
            Ambiguity::Ambiguous => "ambig",
            Ambiguity::Disambiguous => "disambig",
        }
    }
}

/// The five bias dimensions the harness evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dimension {
    Age,
    Appearance,
    Disability,
    Gender,
    Nationality,
}

impl Dimension {
    pub fn name(self) -> &'static str {
        match self {
            Dimension::Age => "age",
            Dimension::Appearance => "appearance",
            Dimension::Disability => "disability",
            Dimension::Gender => "gender",
            Dimension::Nationality => "nationality",
        }
    }

    pub const ALL: [Dimension; 5] = [
        Dimension::Age,
        Dimension::Appearance,
        Dimension::Disability,
        Dimension::Gender,
        Dimension::Nationality,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Negative,
    Nonnegative,
}

/// One multiple-choice option with its identity-group annotation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerOption {
    pub text: String,
    pub identity: String,
}

impl AnswerOption {
    /// The "none of the groups" option carries the identity label "unknown".
    pub fn is_unknown_kind(&self) -> bool {
        self.identity.eq_ignore_ascii_case("unknown")
    }
}

/// Canonical QA record shared by every pipeline stage. One JSON object per
/// line in records.jsonl.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QARecord {
    pub id: String,
    pub source: Source,
    pub context: String,
    pub question: String,
    pub gold_answers: Vec<String>,
    pub ambiguity: Ambiguity,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimension: Option<Dimension>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polarity: Option<Polarity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer_options: Option<Vec<AnswerOption>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stereotyped_groups: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topic_title: Option<String>,
}

impl QARecord {
    /// Structural invariants every canonical record must satisfy.
    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.ambiguity == Ambiguity::Disambiguous && self.gold_answers.is_empty() {
            return Err("disambiguous record has no gold answers".into());
        }
        if self.ambiguity == Ambiguity::Ambiguous
            && self.source == Source::Squad
            && !self.gold_answers.is_empty()
        {
            return Err("ambiguous squad record must have empty gold answers".into());
        }
        if self.source == Source::Bbq {
            let options = self
                .answer_options
                .as_ref()
                .ok_or("bbq record lacks answer options")?;
            if options.len() != 3 {
                return Err(format!("bbq record must carry 3 options, found {}", options.len()));
            }
            if self.dimension.is_none() {
                return Err("bbq record lacks a dimension".into());
            }
            if self.ambiguity == Ambiguity::Ambiguous {
                let gold = self
                    .gold_answers
                    .first()
                    .ok_or("ambiguous bbq record has no gold answer")?;
                let gold_is_unknown = options
                    .iter()
                    .any(|o| o.is_unknown_kind() && &o.text == gold);
                if !gold_is_unknown {
                    return Err(
                        "ambiguous bbq record must have the unknown-kind option as gold".into(),
                    );
                }
            }
        }
        Ok(())
    }

    /// The unknown-kind option of a BBQ record, when present.
    pub fn unknown_option(&self) -> Option<&AnswerOption> {
        self.answer_options
            .as_ref()
            .and_then(|opts| opts.iter().find(|o| o.is_unknown_kind()))
    }
}

/// A skipped input element: line number when the format has lines, and a
/// human-readable reason.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Rejection {
    pub line: Option<usize>,
    pub reason: String,
}

/// Result of parsing one input file: accepted records in input order plus
/// the rejection report.
#[derive(Debug, Default)]
pub struct ParseOutcome {
    pub records: Vec<QARecord>,
    pub rejections: Vec<Rejection>,
}

impl ParseOutcome {
    pub fn counts(&self) -> (usize, usize, usize) {
        let ambig = self
            .records
            .iter()
            .filter(|r| r.ambiguity == Ambiguity::Ambiguous)
            .count();
        (self.records.len(), ambig, self.records.len() - ambig)
    }
}

// ---------------------------------------------------------------------------
// BBQ

#[derive(Deserialize)]
struct BbqLine {
    example_id: serde_json::Value,
    #[serde(default)]
    question_polarity: Option<String>,
    context_condition: String,
    category: String,
    answer_info: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    additional_metadata: Option<BbqMetadata>,
    context: String,
    question: String,
    ans0: String,
    ans1: String,
    ans2: String,
    label: i64,
}

#[derive(Deserialize)]
struct BbqMetadata {
    #[serde(default)]
    stereotyped_groups: Option<Vec<String>>,
}

fn bbq_dimension(category: &str) -> Option<Dimension> {
    match category.to_lowercase().as_str() {
        "nationality" => Some(Dimension::Nationality),
        "age" => Some(Dimension::Age),
        "gender_identity" | "gender" => Some(Dimension::Gender),
        "physical_appearance" | "appearance" => Some(Dimension::Appearance),
        "disability_status" | "disability" => Some(Dimension::Disability),
        _ => None,
    }
}

fn bbq_record(line: BbqLine) -> std::result::Result<QARecord, String> {
    let ambiguity = match line.context_condition.as_str() {
        "ambig" => Ambiguity::Ambiguous,
        "disambig" => Ambiguity::Disambiguous,
        other => return Err(format!("unknown context_condition {other:?}")),
    };
    let dimension = bbq_dimension(&line.category)
        .ok_or_else(|| format!("unsupported category {:?}", line.category))?;
    let polarity = match line.question_polarity.as_deref() {
        None => None,
        Some("neg") => Some(Polarity::Negative),
        Some("nonneg") => Some(Polarity::Nonnegative),
        Some(other) => return Err(format!("unknown question_polarity {other:?}")),
    };
    let texts = [&line.ans0, &line.ans1, &line.ans2];
    let mut options = Vec::with_capacity(3);
    for (i, text) in texts.iter().enumerate() {
        let key = format!("ans{i}");
        let info = line
            .answer_info
            .get(&key)
            .ok_or_else(|| format!("answer_info missing entry for {key}"))?;
        let identity = info
            .last()
            .ok_or_else(|| format!("answer_info entry for {key} is empty"))?
            .clone();
        options.push(AnswerOption {
            text: (*text).clone(),
            identity,
        });
    }
    if !(0..=2).contains(&line.label) {
        return Err(format!("label {} out of range", line.label));
    }
    let gold = options[line.label as usize].text.clone();
    let example_id = match &line.example_id {
        serde_json::Value::String(s) => s.clone(),
        other => other.to_string(),
    };
    let record = QARecord {
        id: format!("bbq-{}-{}", line.category.to_lowercase(), example_id),
        source: Source::Bbq,
        context: line.context,
        question: line.question,
        gold_answers: vec![gold],
        ambiguity,
        dimension: Some(dimension),
        polarity,
        answer_options: Some(options),
        stereotyped_groups: line
            .additional_metadata
            .and_then(|m| m.stereotyped_groups),
        topic_title: None,
    };
    record.validate()?;
    Ok(record)
}

/// Parse BBQ line-delimited JSON. Malformed or unsupported lines are
/// reported with their 1-based line number and skipped.
pub fn parse_bbq(bytes: &[u8]) -> Result<ParseOutcome> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| Error::Parse(format!("input is not valid UTF-8: {e}")))?;
    let mut outcome = ParseOutcome::default();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let parsed: std::result::Result<BbqLine, _> = serde_json::from_str(raw);
        match parsed {
            Ok(line) => match bbq_record(line) {
                Ok(record) => outcome.records.push(record),
                Err(reason) => outcome.rejections.push(Rejection {
                    line: Some(line_no),
                    reason,
                }),
            },
            Err(e) => outcome.rejections.push(Rejection {
                line: Some(line_no),
                reason: format!("malformed json: {e}"),
            }),
        }
    }
    Ok(outcome)
}

// ---------------------------------------------------------------------------
// SQuAD-v2

#[derive(Deserialize)]
struct SquadRoot {
    data: Vec<SquadArticle>,
}

#[derive(Deserialize)]
struct SquadArticle {
    title: String,
    paragraphs: Vec<SquadParagraph>,
}

#[derive(Deserialize)]
struct SquadParagraph {
    context: String,
    qas: Vec<SquadQa>,
}

#[derive(Deserialize)]
struct SquadQa {
    id: String,
    question: String,
    #[serde(default)]
    answers: Vec<SquadAnswer>,
    // Optional on purpose: a missing field must reject the record rather
    // than silently default to answerable.
    is_impossible: Option<bool>,
}

#[derive(Deserialize)]
struct SquadAnswer {
    text: String,
}

/// Parse SQuAD-v2 nested JSON. Unanswerable questions become ambiguous
/// records with no gold answers; answerable ones keep all distinct answer
/// variants. Iteration order (articles, paragraphs, questions) is preserved.
pub fn parse_squad(bytes: &[u8]) -> Result<ParseOutcome> {
    let root: SquadRoot = serde_json::from_slice(bytes)
        .map_err(|e| Error::Parse(format!("squad json: {e}")))?;
    let mut outcome = ParseOutcome::default();
    for article in root.data {
        for paragraph in article.paragraphs {
            for qa in paragraph.qas {
                let impossible = match qa.is_impossible {
                    Some(v) => v,
                    None => {
                        outcome.rejections.push(Rejection {
                            line: None,
                            reason: format!("question {}: missing is_impossible", qa.id),
                        });
                        continue;
                    }
                };
                let gold_answers = if impossible {
                    Vec::new()
                } else {
                    let mut seen = HashSet::new();
                    let variants: Vec<String> = qa
                        .answers
                        .iter()
                        .filter(|a| seen.insert(a.text.clone()))
                        .map(|a| a.text.clone())
                        .collect();
                    if variants.is_empty() {
                        outcome.rejections.push(Rejection {
                            line: None,
                            reason: format!("question {}: answerable but has no answers", qa.id),
                        });
                        continue;
                    }
                    variants
                };
                outcome.records.push(QARecord {
                    id: qa.id,
                    source: Source::Squad,
                    context: paragraph.context.clone(),
                    question: qa.question,
                    gold_answers,
                    ambiguity: if impossible {
                        Ambiguity::Ambiguous
                    } else {
                        Ambiguity::Disambiguous
                    },
                    dimension: None,
                    polarity: None,
                    answer_options: None,
                    stereotyped_groups: None,
                    topic_title: Some(article.title.clone()),
                });
            }
        }
    }
    Ok(outcome)
}

// ---------------------------------------------------------------------------
// TriviaQA

/// Evidence handling knobs for TriviaQA.
#[derive(Debug, Clone)]
pub struct TriviaOptions {
    /// Evidence text is cut to this many characters.
    pub max_evidence_chars: usize,
}

impl Default for TriviaOptions {
    fn default() -> Self {
        TriviaOptions {
            max_evidence_chars: 2000,
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum TriviaRoot {
    Wrapped {
        #[serde(rename = "Data")]
        data: Vec<TriviaItem>,
    },
    Bare(Vec<TriviaItem>),
}

#[derive(Deserialize)]
struct TriviaItem {
    #[serde(rename = "QuestionId", default)]
    question_id: Option<String>,
    #[serde(rename = "Question")]
    question: String,
    #[serde(rename = "Answer")]
    answer: TriviaAnswer,
    #[serde(rename = "EntityPages", default)]
    entity_pages: Vec<TriviaDoc>,
    #[serde(rename = "SearchResults", default)]
    search_results: Vec<TriviaDoc>,
}

#[derive(Deserialize)]
struct TriviaAnswer {
    #[serde(rename = "Value", default)]
    value: Option<String>,
    #[serde(rename = "Aliases", default)]
    aliases: Vec<String>,
}

#[derive(Deserialize)]
struct TriviaDoc {
    #[serde(rename = "WikiContext", default)]
    wiki_context: Option<String>,
    #[serde(rename = "SearchContext", default)]
    search_context: Option<String>,
}

/// Parse TriviaQA JSON with the default evidence budget.
pub fn parse_trivia(bytes: &[u8]) -> Result<ParseOutcome> {
    parse_trivia_with(bytes, &TriviaOptions::default())
}

/// Parse TriviaQA JSON. Every record is disambiguous; the context is the
/// first non-empty evidence document, wiki pages before search results,
/// truncated to the configured character budget.
pub fn parse_trivia_with(bytes: &[u8], options: &TriviaOptions) -> Result<ParseOutcome> {
    let root: TriviaRoot = serde_json::from_slice(bytes)
        .map_err(|e| Error::Parse(format!("trivia json: {e}")))?;
    let items = match root {
        TriviaRoot::Wrapped { data } => data,
        TriviaRoot::Bare(items) => items,
    };
    let mut outcome = ParseOutcome::default();
    for (idx, item) in items.into_iter().enumerate() {
        let id = item
            .question_id
            .clone()
            .unwrap_or_else(|| format!("trivia-{idx}"));
        let mut aliases: Vec<String> = item
            .answer
            .aliases
            .iter()
            .filter(|a| !a.trim().is_empty())
            .cloned()
            .collect();
        if aliases.is_empty() {
            if let Some(value) = item.answer.value.as_ref().filter(|v| !v.trim().is_empty()) {
                aliases.push(value.clone());
            }
        }
        if aliases.is_empty() {
            outcome.rejections.push(Rejection {
                line: None,
                reason: format!("question {id}: no answer aliases"),
            });
            continue;
        }
        let evidence = item
            .entity_pages
            .iter()
            .filter_map(|d| d.wiki_context.as_deref())
            .chain(
                item.search_results
                    .iter()
                    .filter_map(|d| d.search_context.as_deref()),
            )
            .find(|t| !t.trim().is_empty());
        let context = match evidence {
            Some(text) => text.chars().take(options.max_evidence_chars).collect(),
            None => {
                outcome.rejections.push(Rejection {
                    line: None,
                    reason: format!("question {id}: no evidence text"),
                });
                continue;
            }
        };
        outcome.records.push(QARecord {
            id,
            source: Source::Trivia,
            context,
            question: item.question,
            gold_answers: aliases,
            ambiguity: Ambiguity::Disambiguous,
            dimension: None,
            polarity: None,
            answer_options: None,
            stereotyped_groups: None,
            topic_title: None,
        });
    }
    Ok(outcome)
}

// ---------------------------------------------------------------------------
// Canonical JSONL and slices

/// Serialize records as canonical JSONL, one object per line.
pub fn records_to_jsonl(records: &[QARecord]) -> Result<String> {
    let mut out = String::new();
    for record in records {
        out.push_str(&serde_json::to_string(record)?);
        out.push('\n');
    }
    Ok(out)
}

/// Read canonical records JSONL back. Lines failing validation are rejected.
pub fn parse_records_jsonl(bytes: &[u8]) -> Result<ParseOutcome> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| Error::Parse(format!("input is not valid UTF-8: {e}")))?;
    let mut outcome = ParseOutcome::default();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<QARecord>(raw) {
            Ok(record) => match record.validate() {
                Ok(()) => outcome.records.push(record),
                Err(reason) => outcome.rejections.push(Rejection {
                    line: Some(line_no),
                    reason,
                }),
            },
            Err(e) => outcome.rejections.push(Rejection {
                line: Some(line_no),
                reason: format!("malformed json: {e}"),
            }),
        }
    }
    Ok(outcome)
}

/// A named group of record ids used for report aggregation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusSlice {
    pub name: String,
    pub record_ids: Vec<String>,
}

/// Article titles whose questions probe identity-sensitive topics. Used as
/// the default `--identity-titles` set; matching is exact after trimming.
pub const DEFAULT_IDENTITY_TITLES: [&str; 10] = [
    "Normans",
    "Southern California",
    "Victoria",
    "European Union law",
    "Fresno California",
    "Jacksonville Florida",
    "Yuan dynasty",
    "Scottish Parliament",
    "Warsaw",
    "French and Indian War",
];

/// Split records into an identity slice (topic title matches one of the
/// given titles exactly, after trimming whitespace) and its complement.
/// The two slices are disjoint and jointly cover the input.
pub fn partition_identity(
    records: &[QARecord],
    identity_titles: &[String],
) -> (CorpusSlice, CorpusSlice) {
    let wanted: HashSet<&str> = identity_titles.iter().map(|t| t.trim()).collect();
    let mut identity = Vec::new();
    let mut non_identity = Vec::new();
    for record in records {
        let matches = record
            .topic_title
            .as_deref()
            .map(str::trim)
            .is_some_and(|t| wanted.contains(t));
        if matches {
            identity.push(record.id.clone());
        } else {
            non_identity.push(record.id.clone());
        }
    }
    if identity.is_empty() {
        log::warn!("identity partition matched no records for {} titles", identity_titles.len());
    }
    (
        CorpusSlice {
            name: "identity".into(),
            record_ids: identity,
        },
        CorpusSlice {
            name: "non-identity".into(),
            record_ids: non_identity,
        },
    )
}
