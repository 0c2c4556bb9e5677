//! Model access: an OpenAI-compatible HTTP backend with an on-disk response
//! cache, plus deterministic stub backends for offline runs and tests.
//!
//! Wire shape, documented bit-exactly. Completions style POSTs
//! `{"model", "prompt", "max_tokens", "temperature"}` and reads
//! `choices[0].text`; chat style POSTs `{"model", "messages":
//! [{"role": "user", "content"}], "max_tokens", "temperature"}` and reads
//! `choices[0].message.content`. The cache key is the SHA-256 of
//! `model_name \0 full_text \0 max_new_tokens \0 temperature` with the
//! temperature printed by Rust's shortest-round-trip float formatting.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{Ambiguity, QARecord};
use crate::error::{Error, Result};
use crate::prompting::{
    self, RenderedPrompt, Strategy, ABSTAIN_TARGET,
};
use crate::resources::resources;
use crate::seeding::rng_for;
use crate::textnorm::NormalizedText;

/// Which request/response JSON shape the endpoint speaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ApiStyle {
    Completions,
    Chat,
}

/// Endpoint access configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClientConfig {
    pub endpoint_url: String,
    pub model_name: String,
    /// Name of the environment variable holding the bearer token; empty
    /// means the endpoint needs no auth.
    pub auth_env_var: String,
    pub max_new_tokens: u32,
    pub temperature: f64,
    pub request_timeout: Duration,
    pub max_retries: u32,
    /// Upper bound on concurrently in-flight requests.
    pub parallelism: usize,
    pub cache_dir: PathBuf,
    pub api_style: ApiStyle,
}

impl ClientConfig {
    pub fn validate(&self) -> Result<()> {
        if self.endpoint_url.trim().is_empty() {
            return Err(Error::Config("endpoint url is empty".into()));
        }
        if self.model_name.trim().is_empty() {
            return Err(Error::Config("model name is empty".into()));
        }
        if self.parallelism == 0 {
            return Err(Error::Config("parallelism must be at least 1".into()));
        }
        if self.max_new_tokens == 0 {
            return Err(Error::Config("max_new_tokens must be at least 1".into()));
        }
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return Err(Error::Config("temperature must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Endpoint,
    Cache,
    Stub,
}

/// One model answer, normalized at ingestion time so every consumer sees the
/// same view of the raw text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub record_id: String,
    pub raw_text: String,
    pub normalized: NormalizedText,
    pub provenance: Provenance,
}

/// Deterministic offline backends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StubBehavior {
    /// First gold variant; abstention target on ambiguous records.
    Oracle,
    /// Always the abstention target.
    Abstainer,
    /// The option whose identity matches a stereotyped group.
    Stereotype,
    /// The question text verbatim.
    Echo,
}

/// Compute the stub answer for one record.
pub fn stub_complete(record: &QARecord, behavior: StubBehavior) -> Result<String> {
    match behavior {
        StubBehavior::Oracle => match record.ambiguity {
            Ambiguity::Ambiguous => Ok(ABSTAIN_TARGET.to_string()),
            Ambiguity::Disambiguous => record.gold_answers.first().cloned().ok_or_else(|| {
                Error::Record(format!("record {}: no gold answer for oracle stub", record.id))
            }),
        },
        StubBehavior::Abstainer => Ok(ABSTAIN_TARGET.to_string()),
        StubBehavior::Stereotype => {
            let options = record.answer_options.as_ref().ok_or_else(|| {
                Error::Record(format!(
                    "record {}: stereotype stub needs answer options",
                    record.id
                ))
            })?;
            let groups = record.stereotyped_groups.as_deref().unwrap_or(&[]);
            let aligned = options.iter().find(|o| {
                groups
                    .iter()
                    .any(|g| g.trim().eq_ignore_ascii_case(o.identity.trim()))
            });
            let choice = aligned.or_else(|| options.first()).ok_or_else(|| {
                Error::Record(format!("record {}: empty answer options", record.id))
            })?;
            Ok(choice.text.clone())
        }
        StubBehavior::Echo => Ok(record.question.clone()),
    }
}

/// Hex SHA-256 cache key over the request-determining fields.
pub fn cache_key(model_name: &str, full_text: &str, max_new_tokens: u32, temperature: f64) -> String {
    let mut hasher = Sha256::new();
    hasher.update(model_name.as_bytes());
    hasher.update([0u8]);
    hasher.update(full_text.as_bytes());
    hasher.update([0u8]);
    hasher.update(max_new_tokens.to_string().as_bytes());
    hasher.update([0u8]);
    hasher.update(temperature.to_string().as_bytes());
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Serialize)]
struct CacheSidecar<'a> {
    model: &'a str,
    max_new_tokens: u32,
    temperature: f64,
    endpoint: &'a str,
    prompt_sha256: String,
}

#[derive(Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
}

#[derive(Deserialize)]
struct WireChoice {
    #[serde(default)]
    text: Option<String>,
    #[serde(default)]
    message: Option<WireMessage>,
}

#[derive(Deserialize)]
struct WireMessage {
    content: String,
}

/// Blocking HTTP client for one endpoint, with an on-disk cache and retry
/// with exponential backoff on transient failures.
pub struct EndpointClient {
    config: ClientConfig,
    http: reqwest::blocking::Client,
    requests: AtomicUsize,
    // Writers are serialized; readers never lock.
    write_lock: Mutex<()>,
}

impl EndpointClient {
    pub fn new(config: ClientConfig) -> Result<Self> {
        config.validate()?;
        let http = reqwest::blocking::Client::builder()
            .timeout(config.request_timeout)
            .build()
            .map_err(|e| Error::Transport(format!("building http client: {e}")))?;
        Ok(EndpointClient {
            config,
            http,
            requests: AtomicUsize::new(0),
            write_lock: Mutex::new(()),
        })
    }

    pub fn config(&self) -> &ClientConfig {
        &self.config
    }

    /// Number of HTTP requests actually sent (cache hits excluded).
    pub fn requests_made(&self) -> usize {
        self.requests.load(Ordering::SeqCst)
    }

    fn auth_token(&self) -> Result<Option<String>> {
        if self.config.auth_env_var.is_empty() {
            return Ok(None);
        }
        match std::env::var(&self.config.auth_env_var) {
            Ok(v) => Ok(Some(v)),
            Err(_) => Err(Error::Config(format!(
                "auth environment variable {} is not set",
                self.config.auth_env_var
            ))),
        }
    }

    fn cache_paths(&self, key: &str) -> (PathBuf, PathBuf) {
        (
            self.config.cache_dir.join(key),
            self.config.cache_dir.join(format!("{key}.json")),
        )
    }

    fn cache_read(&self, key: &str) -> Result<Option<String>> {
        let (body_path, _) = self.cache_paths(key);
        match std::fs::read(&body_path) {
            Ok(bytes) => {
                let text = String::from_utf8(bytes).map_err(|_| {
                    Error::Transport(format!("cache entry {key} is not valid UTF-8"))
                })?;
                Ok(Some(text))
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    fn cache_write(&self, key: &str, completion: &str, prompt: &str) -> Result<()> {
        let _guard = self.write_lock.lock().expect("cache write lock poisoned");
        std::fs::create_dir_all(&self.config.cache_dir)?;
        let (body_path, sidecar_path) = self.cache_paths(key);
        let sidecar = CacheSidecar {
            model: &self.config.model_name,
            max_new_tokens: self.config.max_new_tokens,
            temperature: self.config.temperature,
            endpoint: &self.config.endpoint_url,
            prompt_sha256: crate::resources::sha256_hex(prompt.as_bytes()),
        };
        write_atomic(&body_path, completion.as_bytes())?;
        write_atomic(&sidecar_path, &serde_json::to_vec_pretty(&sidecar)?)?;
        Ok(())
    }

    fn request_body(&self, full_text: &str) -> serde_json::Value {
        match self.config.api_style {
            ApiStyle::Completions => serde_json::json!({
                "model": self.config.model_name,
                "prompt": full_text,
                "max_tokens": self.config.max_new_tokens,
                "temperature": self.config.temperature,
            }),
            ApiStyle::Chat => serde_json::json!({
                "model": self.config.model_name,
                "messages": [{"role": "user", "content": full_text}],
                "max_tokens": self.config.max_new_tokens,
                "temperature": self.config.temperature,
            }),
        }
    }

    fn extract_text(&self, body: &[u8]) -> Result<String> {
        let parsed: WireResponse = serde_json::from_slice(body)
            .map_err(|e| Error::Transport(format!("malformed response json: {e}")))?;
        let choice = parsed
            .choices
            .into_iter()
            .next()
            .ok_or_else(|| Error::Transport("response has no choices".into()))?;
        match self.config.api_style {
            ApiStyle::Completions => choice
                .text
                .ok_or_else(|| Error::Transport("choice has no text field".into())),
            ApiStyle::Chat => choice
                .message
                .map(|m| m.content)
                .ok_or_else(|| Error::Transport("choice has no message field".into())),
        }
    }

    fn send_once(&self, full_text: &str, token: Option<&str>) -> Result<String> {
        self.requests.fetch_add(1, Ordering::SeqCst);
        let mut request = self
            .http
            .post(&self.config.endpoint_url)
            .json(&self.request_body(full_text));
        if let Some(token) = token {
            request = request.bearer_auth(token);
        }
        let response = request
            .send()
            .map_err(|e| Error::Transport(format!("request failed: {e}")))?;
        let status = response.status();
        let bytes = response
            .bytes()
            .map_err(|e| Error::Transport(format!("reading response body: {e}")))?;
        if status.is_success() {
            return self.extract_text(&bytes);
        }
        let body_excerpt: String = String::from_utf8_lossy(&bytes).chars().take(200).collect();
        if status.as_u16() == 429 || status.is_server_error() {
            Err(Error::Transport(format!(
                "retryable status {}: {}",
                status.as_u16(),
                body_excerpt
            )))
        } else {
            Err(Error::Request {
                status: status.as_u16(),
                body: body_excerpt,
            })
        }
    }

    /// Resolve one prompt to its completion text: cache first, then the
    /// endpoint with up to `max_retries` extra attempts on transient errors.
    pub fn complete(&self, full_text: &str) -> Result<(String, Provenance)> {
        let key = cache_key(
            &self.config.model_name,
            full_text,
            self.config.max_new_tokens,
            self.config.temperature,
        );
        if let Some(cached) = self.cache_read(&key)? {
            return Ok((cached, Provenance::Cache));
        }
        let token = self.auth_token()?;
        let mut last_err: Option<Error> = None;
        for attempt in 0..=self.config.max_retries {
            match self.send_once(full_text, token.as_deref()) {
                Ok(text) => {
                    self.cache_write(&key, &text, full_text)?;
                    return Ok((text, Provenance::Endpoint));
                }
                Err(Error::Transport(msg)) => {
                    last_err = Some(Error::Transport(msg));
                    if attempt < self.config.max_retries {
                        let delay = 100u64.saturating_mul(1 << attempt.min(5));
                        std::thread::sleep(Duration::from_millis(delay.min(2000)));
                    }
                }
                Err(other) => return Err(other),
            }
        }
        Err(last_err.unwrap_or_else(|| Error::Transport("no attempts made".into())))
    }
}

/// One-shot helper matching the endpoint contract without keeping a client.
pub fn complete(prompt: &RenderedPrompt, config: &ClientConfig) -> Result<(String, Provenance)> {
    EndpointClient::new(config.clone())?.complete(&prompt.full_text)
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Backend selection for batch runs.
pub enum Backend {
    Endpoint(EndpointClient),
    Stub(StubBehavior),
}

/// Prompting strategy with its parameters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum StrategyConfig {
    ZeroShot,
    NShot { n: usize },
    DebiasInstruct,
    Intervention,
}

impl StrategyConfig {
    pub fn strategy(&self) -> Strategy {
        match self {
            StrategyConfig::ZeroShot => Strategy::ZeroShot,
            StrategyConfig::NShot { .. } => Strategy::NShot,
            StrategyConfig::DebiasInstruct => Strategy::DebiasInstruct,
            StrategyConfig::Intervention => Strategy::Intervention,
        }
    }
}

/// Everything run_batch needs besides the records and the backend.
#[derive(Debug, Clone)]
pub struct EvalPlan {
    pub strategy: StrategyConfig,
    /// Instruction used by zero-shot and n-shot prompts.
    pub instruction: String,
    pub seed: u64,
}

/// A per-record failure that did not abort the batch.
#[derive(Debug, Clone, Serialize)]
pub struct BatchFailure {
    pub index: usize,
    pub record_id: String,
    pub reason: String,
}

/// Batch result: predictions for the records that succeeded, in input
/// order, plus per-record failures.
#[derive(Debug, Default)]
pub struct BatchOutcome {
    pub predictions: Vec<Prediction>,
    pub failures: Vec<BatchFailure>,
}

/// Render the prompt for one record under `plan`, drawing any demonstration
/// records from `pool` with a stream derived from the record id, so the
/// result does not depend on scheduling.
pub fn render_for(record: &QARecord, pool: &[QARecord], plan: &EvalPlan) -> Result<RenderedPrompt> {
    match &plan.strategy {
        StrategyConfig::ZeroShot => prompting::render_zero_shot(record, &plan.instruction, None),
        StrategyConfig::DebiasInstruct => prompting::render_debias_instruct(record),
        StrategyConfig::Intervention => {
            let mut rng = rng_for(plan.seed, &["demos", &record.id]);
            prompting::render_intervention(record, pool, &mut rng)
        }
        StrategyConfig::NShot { n } => {
            let mut rng = rng_for(plan.seed, &["demos", &record.id]);
            let candidates: Vec<&QARecord> =
                pool.iter().filter(|r| r.id != record.id).collect();
            if candidates.len() < *n {
                return Err(Error::Render(format!(
                    "record {}: demo pool holds {} records, need {}",
                    record.id,
                    candidates.len(),
                    n
                )));
            }
            use rand::seq::SliceRandom;
            let picked: Vec<&QARecord> = candidates
                .choose_multiple(&mut rng, *n)
                .copied()
                .collect();
            let mut demos = Vec::with_capacity(*n);
            for demo in picked {
                demos.push((demo, prompting::demo_answer(demo)?));
            }
            prompting::render_n_shot(record, &demos, *n, &plan.instruction)
        }
    }
}

fn process_one(
    index: usize,
    record: &QARecord,
    pool: &[QARecord],
    plan: &EvalPlan,
    backend: &Backend,
) -> std::result::Result<Prediction, BatchFailure> {
    let fail = |reason: String| BatchFailure {
        index,
        record_id: record.id.clone(),
        reason,
    };
    let prompt = render_for(record, pool, plan).map_err(|e| fail(e.to_string()))?;
    let (raw_text, provenance) = match backend {
        Backend::Stub(behavior) => {
            let text = stub_complete(record, *behavior).map_err(|e| fail(e.to_string()))?;
            (text, Provenance::Stub)
        }
        Backend::Endpoint(client) => client
            .complete(&prompt.full_text)
            .map_err(|e| fail(e.to_string()))?,
    };
    let normalized = resources().normalizer.normalize(&raw_text);
    Ok(Prediction {
        record_id: record.id.clone(),
        raw_text,
        normalized,
        provenance,
    })
}

/// Run the batch with at most `parallelism` records in flight. Output order
/// equals input order regardless of completion order; the run only fails as
/// a whole when every record failed.
pub fn run_batch(
    records: &[QARecord],
    plan: &EvalPlan,
    backend: &Backend,
    parallelism: usize,
) -> Result<BatchOutcome> {
    if parallelism == 0 {
        return Err(Error::Config("parallelism must be at least 1".into()));
    }
    let slots: Mutex<Vec<Option<std::result::Result<Prediction, BatchFailure>>>> =
        Mutex::new((0..records.len()).map(|_| None).collect());
    let cursor = AtomicUsize::new(0);
    let workers = parallelism.min(records.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = cursor.fetch_add(1, Ordering::SeqCst);
                if i >= records.len() {
                    break;
                }
                let outcome = process_one(i, &records[i], records, plan, backend);
                slots.lock().expect("result slot lock poisoned")[i] = Some(outcome);
            });
        }
    });
    let mut outcome = BatchOutcome::default();
    for slot in slots.into_inner().expect("result slot lock poisoned") {
        match slot.expect("every index was processed") {
            Ok(prediction) => outcome.predictions.push(prediction),
            Err(failure) => outcome.failures.push(failure),
        }
    }
    if !records.is_empty() && outcome.predictions.is_empty() {
        let first = outcome
            .failures
            .first()
            .map(|f| f.reason.clone())
            .unwrap_or_default();
        return Err(Error::Transport(format!(
            "every record failed; first failure: {first}"
        )));
    }
    Ok(outcome)
}

/// Serialize predictions as JSONL, one object per line, in the given order.
pub fn predictions_to_jsonl(predictions: &[Prediction]) -> Result<String> {
    let mut out = String::new();
    for p in predictions {
        out.push_str(&serde_json::to_string(p)?);
        out.push('\n');
    }
    Ok(out)
}

/// Read predictions back from JSONL. `raw_text` is re-normalized so scoring
/// never trusts a stale normalization.
pub fn predictions_from_jsonl(bytes: &[u8]) -> Result<Vec<Prediction>> {
    #[derive(Deserialize)]
    struct Line {
        record_id: String,
        raw_text: String,
        #[serde(default)]
        provenance: Option<Provenance>,
    }
    let text = std::str::from_utf8(bytes)
        .map_err(|e| Error::Parse(format!("predictions are not valid UTF-8: {e}")))?;
    let normalizer = &resources().normalizer;
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        let line: Line = serde_json::from_str(raw)
            .map_err(|e| Error::Parse(format!("predictions line {}: {e}", idx + 1)))?;
        out.push(Prediction {
            normalized: normalizer.normalize(&line.raw_text),
            record_id: line.record_id,
            raw_text: line.raw_text,
            provenance: line.provenance.unwrap_or(Provenance::Endpoint),
        });
    }
    Ok(out)
}

/// Token sets of every gold variant of a record, for scoring.
pub fn gold_token_variants(record: &QARecord) -> Vec<BTreeSet<String>> {
    let normalizer = &resources().normalizer;
    record
        .gold_answers
        .iter()
        .map(|g| normalizer.answer_tokens(g))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{AnswerOption, Dimension, Polarity, Source};

    fn record(id: &str, ambiguity: Ambiguity) -> QARecord {
        QARecord {
            id: id.into(),
            source: Source::Squad,
            context: format!("Context {id}."),
            question: format!("Question {id}?"),
            gold_answers: match ambiguity {
                Ambiguity::Ambiguous => Vec::new(),
                Ambiguity::Disambiguous => vec![format!("Gold {id}")],
            },
            ambiguity,
            dimension: None,
            polarity: None,
            answer_options: None,
            stereotyped_groups: None,
            topic_title: None,
        }
    }

    fn bbq(id: &str) -> QARecord {
        QARecord {
            id: id.into(),
            source: Source::Bbq,
            context: "At the market I met two friends.".into(),
            question: "Who was rude?".into(),
            gold_answers: vec!["Not enough info".into()],
            ambiguity: Ambiguity::Ambiguous,
            dimension: Some(Dimension::Nationality),
            polarity: Some(Polarity::Negative),
            answer_options: Some(vec![
                AnswerOption { text: "The British friend".into(), identity: "British".into() },
                AnswerOption { text: "The Japanese friend".into(), identity: "Japanese".into() },
                AnswerOption { text: "Not enough info".into(), identity: "unknown".into() },
            ]),
            stereotyped_groups: Some(vec!["British".into()]),
            topic_title: None,
        }
    }

    #[test]
    fn stubs_answer_by_contract() {
        let d = record("d", Ambiguity::Disambiguous);
        let a = record("a", Ambiguity::Ambiguous);
        assert_eq!(stub_complete(&d, StubBehavior::Oracle).unwrap(), "Gold d");
        assert_eq!(stub_complete(&a, StubBehavior::Oracle).unwrap(), "Not in background.");
        assert_eq!(stub_complete(&d, StubBehavior::Abstainer).unwrap(), "Not in background.");
        assert_eq!(stub_complete(&d, StubBehavior::Echo).unwrap(), "Question d?");
        assert_eq!(
            stub_complete(&bbq("b"), StubBehavior::Stereotype).unwrap(),
            "The British friend"
        );
    }

    #[test]
    fn stereotype_stub_needs_options() {
        let d = record("d", Ambiguity::Disambiguous);
        assert!(stub_complete(&d, StubBehavior::Stereotype).is_err());
    }

    #[test]
    fn stereotype_stub_falls_back_to_first_option() {
        let mut r = bbq("b");
        r.stereotyped_groups = Some(vec!["Martian".into()]);
        assert_eq!(
            stub_complete(&r, StubBehavior::Stereotype).unwrap(),
            "The British friend"
        );
    }

    #[test]
    fn cache_key_is_stable_and_sensitive() {
        let a = cache_key("m", "prompt", 64, 0.0);
        let b = cache_key("m", "prompt", 64, 0.0);
        assert_eq!(a, b);
        assert_eq!(a.len(), 64);
        assert_ne!(a, cache_key("m", "prompt", 65, 0.0));
        assert_ne!(a, cache_key("m", "prompt!", 64, 0.0));
        assert_ne!(a, cache_key("m2", "prompt", 64, 0.0));
        assert_ne!(a, cache_key("m", "prompt", 64, 0.5));
    }

    #[test]
    fn batch_keeps_input_order_and_collects_failures() {
        let mut records = vec![
            record("r0", Ambiguity::Disambiguous),
            record("r1", Ambiguity::Disambiguous),
            record("r2", Ambiguity::Disambiguous),
        ];
        records[1].question = " ".into(); // rendering fails for r1
        let plan = EvalPlan {
            strategy: StrategyConfig::ZeroShot,
            instruction: prompting::STANDARD_INSTRUCTION.into(),
            seed: 0,
        };
        let outcome = run_batch(&records, &plan, &Backend::Stub(StubBehavior::Oracle), 4).unwrap();
        assert_eq!(outcome.predictions.len(), 2);
        assert_eq!(outcome.predictions[0].record_id, "r0");
        assert_eq!(outcome.predictions[1].record_id, "r2");
        assert_eq!(outcome.failures.len(), 1);
        assert_eq!(outcome.failures[0].record_id, "r1");
        assert_eq!(outcome.failures[0].index, 1);
    }

    #[test]
    fn batch_fails_only_when_everything_fails() {
        let mut r = record("r0", Ambiguity::Disambiguous);
        r.question = "".into();
        let plan = EvalPlan {
            strategy: StrategyConfig::ZeroShot,
            instruction: prompting::STANDARD_INSTRUCTION.into(),
            seed: 0,
        };
        let err = run_batch(&[r], &plan, &Backend::Stub(StubBehavior::Oracle), 1);
        assert!(err.is_err());
    }

    #[test]
    fn batch_is_deterministic_across_parallelism() {
        let records: Vec<QARecord> = (0..40)
            .map(|i| {
                record(
                    &format!("r{i}"),
                    if i % 2 == 0 { Ambiguity::Ambiguous } else { Ambiguity::Disambiguous },
                )
            })
            .collect();
        let plan = EvalPlan {
            strategy: StrategyConfig::NShot { n: 2 },
            instruction: prompting::STANDARD_INSTRUCTION.into(),
            seed: 11,
        };
        let one = run_batch(&records, &plan, &Backend::Stub(StubBehavior::Oracle), 1).unwrap();
        let eight = run_batch(&records, &plan, &Backend::Stub(StubBehavior::Oracle), 8).unwrap();
        assert_eq!(
            predictions_to_jsonl(&one.predictions).unwrap(),
            predictions_to_jsonl(&eight.predictions).unwrap()
        );
    }

    #[test]
    fn predictions_round_trip_jsonl() {
        let records = vec![record("r0", Ambiguity::Disambiguous)];
        let plan = EvalPlan {
            strategy: StrategyConfig::ZeroShot,
            instruction: prompting::STANDARD_INSTRUCTION.into(),
            seed: 0,
        };
        let outcome = run_batch(&records, &plan, &Backend::Stub(StubBehavior::Oracle), 1).unwrap();
        let jsonl = predictions_to_jsonl(&outcome.predictions).unwrap();
        let back = predictions_from_jsonl(jsonl.as_bytes()).unwrap();
        assert_eq!(back, outcome.predictions);
    }
}
