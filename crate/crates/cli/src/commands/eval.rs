use std::path::PathBuf;
use std::time::{Duration, Instant};

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use serde_json::json;

use ambiq_core::corpus::{self, TriviaOptions};
use ambiq_core::error::Error;
use ambiq_core::modelclient::{
    predictions_to_jsonl, run_batch, ApiStyle, Backend, ClientConfig, EndpointClient, EvalPlan,
    StrategyConfig, StubBehavior,
};
use ambiq_core::prompting::STANDARD_INSTRUCTION;
use ambiq_core::resources::resources;

use super::ingest::InputFormat;
use super::DenominatorArg;
use crate::common;

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StubArg {
    /// Answer with the first gold variant, abstaining on ambiguous records.
    Oracle,
    /// Always abstain.
    Abstainer,
    /// Pick the stereotype-aligned option.
    Stereotype,
    /// Repeat the question.
    Echo,
}

impl From<StubArg> for StubBehavior {
    fn from(value: StubArg) -> Self {
        match value {
            StubArg::Oracle => StubBehavior::Oracle,
            StubArg::Abstainer => StubBehavior::Abstainer,
            StubArg::Stereotype => StubBehavior::Stereotype,
            StubArg::Echo => StubBehavior::Echo,
        }
    }
}

fn stub_name(value: StubArg) -> &'static str {
    match value {
        StubArg::Oracle => "stub:oracle",
        StubArg::Abstainer => "stub:abstainer",
        StubArg::Stereotype => "stub:stereotype",
        StubArg::Echo => "stub:echo",
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    ZeroShot,
    NShot,
    DebiasInstruct,
    Intervention,
}

fn strategy_name(value: StrategyArg) -> &'static str {
    match value {
        StrategyArg::ZeroShot => "zero-shot",
        StrategyArg::NShot => "n-shot",
        StrategyArg::DebiasInstruct => "debias-instruct",
        StrategyArg::Intervention => "intervention",
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ApiStyleArg {
    Completions,
    Chat,
}

impl From<ApiStyleArg> for ApiStyle {
    fn from(value: ApiStyleArg) -> Self {
        match value {
            ApiStyleArg::Completions => ApiStyle::Completions,
            ApiStyleArg::Chat => ApiStyle::Chat,
        }
    }
}

#[derive(Args)]
pub struct EvalArgs {
    /// Canonical records JSONL from `ingest`, or a raw dataset when
    /// --format is given.
    #[arg(long)]
    pub records: PathBuf,
    /// Parse --records as this raw format instead of canonical JSONL.
    #[arg(long, value_enum)]
    pub format: Option<InputFormat>,
    /// Character budget for trivia evidence (raw trivia input only).
    #[arg(long, default_value_t = 2000)]
    pub max_evidence_chars: usize,
    /// Offline backend; mutually exclusive with --endpoint.
    #[arg(long, value_enum)]
    pub stub: Option<StubArg>,
    /// OpenAI-compatible endpoint URL; requires --model.
    #[arg(long)]
    pub endpoint: Option<String>,
    #[arg(long)]
    pub model: Option<String>,
    /// Environment variable holding the bearer token; empty for no auth.
    #[arg(long, default_value = "")]
    pub auth_env: String,
    #[arg(long, value_enum, default_value = "zero-shot")]
    pub strategy: StrategyArg,
    /// Demonstrations per prompt for --strategy n-shot.
    #[arg(long, default_value_t = 2)]
    pub n_shots: usize,
    /// Fixed instruction from the shipped table (1-20); zero-shot and
    /// n-shot only. Defaults to the standard abstention instruction.
    #[arg(long)]
    pub instruction_id: Option<u8>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub parallelism: usize,
    #[arg(long, default_value_t = 64)]
    pub max_new_tokens: u32,
    #[arg(long, default_value_t = 0.0)]
    pub temperature: f64,
    #[arg(long, default_value_t = 30)]
    pub timeout_secs: u64,
    #[arg(long, default_value_t = 2)]
    pub max_retries: u32,
    #[arg(long, value_enum, default_value = "completions")]
    pub api_style: ApiStyleArg,
    /// Response cache directory (endpoint mode); defaults to OUT_DIR/cache.
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    /// Comma-separated topic titles for the identity slice; the single
    /// value "default" selects the built-in list.
    #[arg(long, value_delimiter = ',')]
    pub identity_titles: Option<Vec<String>>,
    #[arg(long, value_enum, default_value = "errors-only")]
    pub denominator: DenominatorArg,
    /// Report label; defaults to "<backend> <strategy>".
    #[arg(long)]
    pub label: Option<String>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

fn build_backend(args: &EvalArgs) -> Result<(Backend, String)> {
    match (&args.stub, &args.endpoint) {
        (Some(stub), None) => Ok((Backend::Stub((*stub).into()), stub_name(*stub).to_string())),
        (None, Some(endpoint)) => {
            let model = args.model.clone().ok_or_else(|| {
                Error::Config("--endpoint requires --model".into())
            })?;
            let config = ClientConfig {
                endpoint_url: endpoint.clone(),
                model_name: model.clone(),
                auth_env_var: args.auth_env.clone(),
                max_new_tokens: args.max_new_tokens,
                temperature: args.temperature,
                request_timeout: Duration::from_secs(args.timeout_secs),
                max_retries: args.max_retries,
                parallelism: args.parallelism,
                cache_dir: args
                    .cache_dir
                    .clone()
                    .unwrap_or_else(|| args.out_dir.join("cache")),
                api_style: args.api_style.into(),
            };
            Ok((Backend::Endpoint(EndpointClient::new(config)?), model))
        }
        (Some(_), Some(_)) => {
            Err(Error::Config("--stub and --endpoint are mutually exclusive".into()).into())
        }
        (None, None) => Err(Error::Config("pass either --stub or --endpoint".into()).into()),
    }
}

fn build_plan(args: &EvalArgs) -> Result<(EvalPlan, Option<u8>)> {
    let strategy = match args.strategy {
        StrategyArg::ZeroShot => StrategyConfig::ZeroShot,
        StrategyArg::NShot => {
            if args.n_shots == 0 {
                return Err(Error::Config(
                    "--n-shots must be at least 1; use --strategy zero-shot for none".into(),
                )
                .into());
            }
            StrategyConfig::NShot { n: args.n_shots }
        }
        StrategyArg::DebiasInstruct => StrategyConfig::DebiasInstruct,
        StrategyArg::Intervention => StrategyConfig::Intervention,
    };
    let fixed_instruction_allowed =
        matches!(args.strategy, StrategyArg::ZeroShot | StrategyArg::NShot);
    let instruction = match args.instruction_id {
        None => STANDARD_INSTRUCTION.to_string(),
        Some(_) if !fixed_instruction_allowed => {
            return Err(Error::Config(
                "--instruction-id applies to zero-shot and n-shot only".into(),
            )
            .into())
        }
        Some(id) => resources()
            .instructions
            .get(id)
            .ok_or_else(|| Error::Config(format!("instruction id {id} is not in 1-20")))?
            .text
            .clone(),
    };
    Ok((
        EvalPlan {
            strategy,
            instruction,
            seed: args.seed,
        },
        args.instruction_id,
    ))
}

fn load_input(args: &EvalArgs) -> Result<(Vec<ambiq_core::QARecord>, usize)> {
    let Some(format) = args.format else {
        return Ok((common::load_records(&args.records)?, 0));
    };
    let bytes = common::read_bytes(&args.records)?;
    let outcome = match format {
        InputFormat::Bbq => corpus::parse_bbq(&bytes),
        InputFormat::Squad => corpus::parse_squad(&bytes),
        InputFormat::Trivia => corpus::parse_trivia_with(
            &bytes,
            &TriviaOptions {
                max_evidence_chars: args.max_evidence_chars,
            },
        ),
    }
    .context("parsing the raw corpus")?;
    Ok((outcome.records, outcome.rejections.len()))
}

pub fn run(args: EvalArgs) -> Result<i32> {
    if args.parallelism == 0 {
        return Err(Error::Config("--parallelism must be at least 1".into()).into());
    }
    let started = Instant::now();
    let (records, parse_rejections) = load_input(&args)?;
    let (backend, backend_name) = build_backend(&args)?;
    let (plan, instruction_id) = build_plan(&args)?;
    let method = strategy_name(args.strategy);
    let label = args
        .label
        .clone()
        .unwrap_or_else(|| format!("{backend_name} {method}"));

    let predict_started = Instant::now();
    let outcome = run_batch(&records, &plan, &backend, args.parallelism)
        .context("running the prediction batch")?;
    let predict_ms = predict_started.elapsed().as_millis();
    common::write_bytes(
        &args.out_dir.join("predictions.jsonl"),
        predictions_to_jsonl(&outcome.predictions)?.as_bytes(),
    )?;

    let score_started = Instant::now();
    let artifacts = common::score_pipeline(
        &records,
        &outcome.predictions,
        args.identity_titles.as_deref(),
        args.denominator.into(),
        &label,
    );
    let score_ms = score_started.elapsed().as_millis();
    common::write_scoring_outputs(&args.out_dir, &artifacts)?;

    let endpoint_requests = match &backend {
        Backend::Endpoint(client) => Some(client.requests_made()),
        Backend::Stub(_) => None,
    };
    let metadata = json!({
        "command": "eval",
        "label": label,
        "model": backend_name,
        "method": method,
        "strategy": plan.strategy,
        "instruction_id": instruction_id,
        "instruction": plan.instruction,
        "seed": args.seed,
        "parallelism": args.parallelism,
        "denominator": match args.denominator {
            DenominatorArg::ErrorsOnly => "errors-only",
            DenominatorArg::AllPredictions => "all-predictions",
        },
        "identity_titles": args.identity_titles,
        "endpoint": args.endpoint,
        "api_style": match args.api_style {
            ApiStyleArg::Completions => "completions",
            ApiStyleArg::Chat => "chat",
        },
        "max_new_tokens": args.max_new_tokens,
        "temperature": args.temperature,
        "endpoint_requests": endpoint_requests,
        "counts": {
            "records": records.len(),
            "parse_rejections": parse_rejections,
            "predictions": outcome.predictions.len(),
            "failures": outcome.failures.len(),
            "score_issues": artifacts.issues.len(),
        },
        "timings_ms": {
            "predict": predict_ms,
            "score": score_ms,
            "total": started.elapsed().as_millis(),
        },
        "failures": outcome.failures,
        "score_issues": artifacts.issues,
        "resource_checksums": resources().checksums,
    });
    common::write_json_pretty(&args.out_dir.join("run-metadata.json"), &metadata)?;

    println!(
        "{} records, {} predictions, {} failures; {}",
        records.len(),
        outcome.predictions.len(),
        outcome.failures.len(),
        common::headline(&artifacts.report)
    );
    if !outcome.failures.is_empty() {
        eprintln!(
            "warning: {} records failed; see run-metadata.json",
            outcome.failures.len()
        );
        return Ok(3);
    }
    Ok(0)
}
