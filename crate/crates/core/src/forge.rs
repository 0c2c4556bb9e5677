//! Instruction-tuning dataset construction: pass answerable records through,
//! synthesize unanswerable twins by deleting answer-bearing sentences, assign
//! instructions, balance the two classes 1:1, and split train/validation.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::corpus::{Ambiguity, QARecord, Source};
use crate::error::{Error, Result};
use crate::prompting::{pick_instruction, InstructionMode, InstructionSet, ABSTAIN_TARGET};
use crate::seeding::rng_for;
use crate::textnorm::{collapse_ws, contains_phrase};

/// One supervised row: instruction, inputs, and the answer to train toward.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TuningExample {
    pub instruction: String,
    pub context: String,
    pub question: String,
    #[serde(rename = "answer")]
    pub target: String,
    pub ambiguity: Ambiguity,
    /// Id of the corpus record this row came from.
    pub source_id: String,
    /// True when the context was rewritten to remove the answer.
    pub synthetic: bool,
}

/// Split a context into sentences on '.' and '\n', trimmed, empties dropped.
fn sentences(context: &str) -> Vec<String> {
    context
        .split(['.', '\n'])
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

fn sentence_mentions_answer(sentence: &str, golds: &[String]) -> bool {
    let folded = collapse_ws(&sentence.to_lowercase());
    golds.iter().any(|g| {
        let alias = collapse_ws(&g.to_lowercase());
        !alias.is_empty() && contains_phrase(&folded, &alias)
    })
}

/// Rewrite an answerable record into an unanswerable one by deleting every
/// sentence that mentions a gold answer. The instruction is left empty; the
/// forge fills it in when assembling rows.
pub fn ambiguate_context(record: &QARecord) -> Result<TuningExample> {
    let parts = sentences(&record.context);
    let mentioning = parts
        .iter()
        .filter(|s| sentence_mentions_answer(s, &record.gold_answers))
        .count();
    if mentioning == 0 {
        return Err(Error::Forge(format!(
            "record {}: no gold alias in context",
            record.id
        )));
    }
    if mentioning == parts.len() {
        return Err(Error::Forge(format!(
            "record {}: every sentence contains a gold alias",
            record.id
        )));
    }
    let kept: Vec<String> = parts
        .into_iter()
        .filter(|s| !sentence_mentions_answer(s, &record.gold_answers))
        .collect();
    let mut context = kept.join(". ");
    context.push('.');
    Ok(TuningExample {
        instruction: String::new(),
        context,
        question: record.question.clone(),
        target: ABSTAIN_TARGET.to_string(),
        ambiguity: Ambiguity::Ambiguous,
        source_id: record.id.clone(),
        synthetic: true,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ForgeOptions {
    pub mode: InstructionMode,
    /// Whether answerable trivia records also yield a synthetic
    /// unanswerable twin.
    pub synthetic_ambig: bool,
    pub seed: u64,
}

/// Row counts describing what the forge produced and dropped.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ForgeStats {
    pub rows_total: usize,
    pub by_ambiguity: BTreeMap<String, usize>,
    pub by_source: BTreeMap<String, usize>,
    pub by_instruction: BTreeMap<u8, usize>,
    pub synthetic_rows: usize,
    /// Trivia records that could not be ambiguated and were dropped.
    pub skipped_ineligible: usize,
    /// Rows removed from the larger class to reach a 1:1 balance.
    pub downsampled: usize,
}

#[derive(Debug, Default)]
pub struct ForgeOutput {
    pub rows: Vec<TuningExample>,
    /// Instruction id per row, parallel to `rows`.
    pub instruction_ids: Vec<u8>,
    pub stats: ForgeStats,
}

fn source_label(source: Source) -> &'static str {
    match source {
        Source::Bbq => "bbq",
        Source::Squad => "squad",
        Source::Trivia => "trivia",
    }
}

fn assign_instruction(
    row: &mut TuningExample,
    set: &InstructionSet,
    mode: InstructionMode,
    seed: u64,
) -> u8 {
    let synth_tag = if row.synthetic { "synthetic" } else { "original" };
    let mut rng = rng_for(
        seed,
        &["forge-instruction", &row.source_id, row.ambiguity.key(), synth_tag],
    );
    let instruction = pick_instruction(set, mode, row.ambiguity, &mut rng);
    row.instruction = instruction.text.clone();
    instruction.id
}

fn squad_row(record: &QARecord) -> Result<TuningExample> {
    let target = match record.ambiguity {
        Ambiguity::Ambiguous => ABSTAIN_TARGET.to_string(),
        Ambiguity::Disambiguous => record.gold_answers.first().cloned().ok_or_else(|| {
            Error::Forge(format!("record {}: answerable but no gold answer", record.id))
        })?,
    };
    Ok(TuningExample {
        instruction: String::new(),
        context: record.context.clone(),
        question: record.question.clone(),
        target,
        ambiguity: record.ambiguity,
        source_id: record.id.clone(),
        synthetic: false,
    })
}

/// Build the tuning set from answerable/unanswerable reading records plus
/// answerable trivia records. Same inputs and seed give identical output.
pub fn build_tuning_set(
    squad: &[QARecord],
    trivia: &[QARecord],
    opts: &ForgeOptions,
    set: &InstructionSet,
) -> Result<ForgeOutput> {
    let mut rows: Vec<TuningExample> = Vec::new();
    let mut skipped_ineligible = 0usize;
    let mut sources: Vec<&'static str> = Vec::new();

    for record in squad {
        rows.push(squad_row(record)?);
        sources.push(source_label(record.source));
    }
    for record in trivia {
        if record.ambiguity != Ambiguity::Disambiguous {
            return Err(Error::Forge(format!(
                "record {}: trivia input must be answerable",
                record.id
            )));
        }
        if opts.synthetic_ambig {
            match ambiguate_context(record) {
                Ok(synthetic) => {
                    rows.push(squad_row(record)?);
                    sources.push(source_label(record.source));
                    rows.push(synthetic);
                    sources.push(source_label(record.source));
                }
                Err(Error::Forge(reason)) => {
                    log::debug!("skipping record: {reason}");
                    skipped_ineligible += 1;
                }
                Err(other) => return Err(other),
            }
        } else {
            rows.push(squad_row(record)?);
            sources.push(source_label(record.source));
        }
    }

    let mut instruction_ids = Vec::with_capacity(rows.len());
    for row in &mut rows {
        instruction_ids.push(assign_instruction(row, set, opts.mode, opts.seed));
    }

    // Balance the classes 1:1 by downsampling the larger one, preserving
    // the original order of whatever survives.
    let ambig_idx: Vec<usize> = rows
        .iter()
        .enumerate()
        .filter(|(_, r)| r.ambiguity == Ambiguity::Ambiguous)
        .map(|(i, _)| i)
        .collect();
    let disambig_idx: Vec<usize> = rows
        .iter()
        .enumerate()
        .filter(|(_, r)| r.ambiguity == Ambiguity::Disambiguous)
        .map(|(i, _)| i)
        .collect();
    let keep = ambig_idx.len().min(disambig_idx.len());
    let mut downsampled = 0usize;
    let mut kept: Vec<usize> = Vec::with_capacity(keep * 2);
    for side in [&ambig_idx, &disambig_idx] {
        if side.len() == keep {
            kept.extend_from_slice(side);
        } else {
            let mut shuffled = side.clone();
            shuffled.shuffle(&mut rng_for(opts.seed, &["balance"]));
            downsampled += shuffled.len() - keep;
            kept.extend(shuffled.into_iter().take(keep));
        }
    }
    kept.sort_unstable();

    let mut out = ForgeOutput::default();
    out.stats.skipped_ineligible = skipped_ineligible;
    out.stats.downsampled = downsampled;
    for i in kept {
        let row = rows[i].clone();
        let id = instruction_ids[i];
        *out.stats
            .by_ambiguity
            .entry(row.ambiguity.key().to_string())
            .or_default() += 1;
        *out.stats.by_source.entry(sources[i].to_string()).or_default() += 1;
        *out.stats.by_instruction.entry(id).or_default() += 1;
        if row.synthetic {
            out.stats.synthetic_rows += 1;
        }
        out.rows.push(row);
        out.instruction_ids.push(id);
    }
    out.stats.rows_total = out.rows.len();
    Ok(out)
}

/// Split rows into train and validation, stratified on ambiguity so the 1:1
/// balance survives the split. Original row order is preserved inside each
/// half. `val_fraction` must lie strictly between 0 and 1.
pub fn split_train_val(
    rows: &[TuningExample],
    val_fraction: f64,
    seed: u64,
) -> Result<(Vec<TuningExample>, Vec<TuningExample>)> {
    if !(val_fraction > 0.0 && val_fraction < 1.0) {
        return Err(Error::Config(format!(
            "validation fraction must be in (0, 1), got {val_fraction}"
        )));
    }
    let mut quotas: BTreeMap<&str, usize> = BTreeMap::new();
    for row in rows {
        *quotas.entry(row.ambiguity.key()).or_default() += 1;
    }
    for quota in quotas.values_mut() {
        *quota = (*quota as f64 * val_fraction).round() as usize;
    }
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.shuffle(&mut rng_for(seed, &["split"]));
    let mut val_idx: Vec<usize> = Vec::new();
    for i in order {
        let quota = quotas
            .get_mut(rows[i].ambiguity.key())
            .expect("stratum was counted");
        if *quota > 0 {
            *quota -= 1;
            val_idx.push(i);
        }
    }
    val_idx.sort_unstable();
    let mut val_cursor = val_idx.iter().peekable();
    let mut train = Vec::with_capacity(rows.len() - val_idx.len());
    let mut val = Vec::with_capacity(val_idx.len());
    for (i, row) in rows.iter().enumerate() {
        if val_cursor.peek() == Some(&&i) {
            val_cursor.next();
            val.push(row.clone());
        } else {
            train.push(row.clone());
        }
    }
    Ok((train, val))
}

pub fn rows_to_jsonl(rows: &[TuningExample]) -> Result<String> {
    let mut out = String::new();
    for row in rows {
        out.push_str(&serde_json::to_string(row)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn rows_from_jsonl(bytes: &[u8]) -> Result<Vec<TuningExample>> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| Error::Parse(format!("rows are not valid UTF-8: {e}")))?;
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        rows.push(
            serde_json::from_str(line)
                .map_err(|e| Error::Parse(format!("row line {}: {e}", idx + 1)))?,
        );
    }
    Ok(rows)
}

/// Hyperparameters for a fine-tuning run, written alongside the dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingManifest {
    pub profile: String,
    pub epochs: u32,
    pub learning_rate: f64,
    pub optimizer: String,
    pub scheduler: String,
    pub warmup_ratio: f64,
    pub gradient_accumulation: u32,
    pub batch_size: u32,
}

/// Field-by-field overrides; the `custom` profile requires all of them.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ManifestOverrides {
    pub epochs: Option<u32>,
    pub learning_rate: Option<f64>,
    pub optimizer: Option<String>,
    pub scheduler: Option<String>,
    pub warmup_ratio: Option<f64>,
    pub gradient_accumulation: Option<u32>,
    pub batch_size: Option<u32>,
}

impl TrainingManifest {
    fn validate(self) -> Result<Self> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        if !(self.warmup_ratio > 0.0 && self.warmup_ratio < 1.0) {
            return Err(Error::Config("warmup ratio must be in (0, 1)".into()));
        }
        if self.gradient_accumulation == 0 {
            return Err(Error::Config("gradient accumulation must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        Ok(self)
    }
}

/// Produce the manifest for a known model profile, applying any overrides.
pub fn training_manifest(profile: &str, overrides: &ManifestOverrides) -> Result<TrainingManifest> {
    let (epochs, learning_rate) = match profile {
        "llama2-7b" => (15, 0.0002),
        "llama2-13b" | "phi-2" => (8, 0.0001),
        "custom" => {
            let require = |name: &str| Error::Config(format!("custom profile requires {name}"));
            let manifest = TrainingManifest {
                profile: profile.to_string(),
                epochs: overrides.epochs.ok_or_else(|| require("epochs"))?,
                learning_rate: overrides.learning_rate.ok_or_else(|| require("learning-rate"))?,
                optimizer: overrides.optimizer.clone().ok_or_else(|| require("optimizer"))?,
                scheduler: overrides.scheduler.clone().ok_or_else(|| require("scheduler"))?,
                warmup_ratio: overrides.warmup_ratio.ok_or_else(|| require("warmup-ratio"))?,
                gradient_accumulation: overrides
                    .gradient_accumulation
                    .ok_or_else(|| require("gradient-accumulation"))?,
                batch_size: overrides.batch_size.ok_or_else(|| require("batch-size"))?,
            };
            return manifest.validate();
        }
        other => {
            return Err(Error::Config(format!(
                "unknown training profile '{other}' (expected llama2-7b, llama2-13b, phi-2, or custom)"
            )))
        }
    };
    let manifest = TrainingManifest {
        profile: profile.to_string(),
        epochs: overrides.epochs.unwrap_or(epochs),
        learning_rate: overrides.learning_rate.unwrap_or(learning_rate),
        optimizer: overrides.optimizer.clone().unwrap_or_else(|| "adam".into()),
        scheduler: overrides.scheduler.clone().unwrap_or_else(|| "linear".into()),
        warmup_ratio: overrides.warmup_ratio.unwrap_or(0.01),
        gradient_accumulation: overrides.gradient_accumulation.unwrap_or(16),
        batch_size: overrides.batch_size.unwrap_or(1),
    };
    manifest.validate()
}
