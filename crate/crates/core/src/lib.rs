//! Batch evaluation of question-answering models on ambiguous and
//! disambiguated contexts, separating stereotype-driven errors from plain
//! comprehension failures, plus construction of instruction-tuning datasets
//! that teach models to abstain when the context does not answer the
//! question.
//!
//! The pipeline runs in stages, one module each: [`corpus`] parses raw
//! datasets into one canonical record shape, [`prompting`] renders prompts
//! under several strategies, [`modelclient`] resolves prompts to completions
//! against an HTTP endpoint (with an on-disk cache) or an offline stub,
//! [`textnorm`] reduces free-form answers to comparable token sets,
//! [`metrics`] scores predictions and aggregates per-slice reports,
//! [`report`] renders them, and [`forge`] builds balanced tuning datasets
//! from answerable corpora. Every random choice derives from one base seed
//! ([`seeding`]), so equal inputs give byte-equal outputs at any
//! parallelism.

pub mod corpus;
pub mod error;
pub mod forge;
pub mod metrics;
pub mod modelclient;
pub mod prompting;
pub mod report;
pub mod resources;
pub mod seeding;
pub mod synth;
pub mod textnorm;

pub use corpus::{
    Ambiguity, AnswerOption, CorpusSlice, Dimension, ParseOutcome, Polarity, QARecord, Rejection,
    Source,
};
pub use error::{Error, Result};
pub use forge::{ForgeOptions, ForgeOutput, ForgeStats, TrainingManifest, TuningExample};
pub use metrics::{
    BiasReinforce, MetricReport, ReinforceDenominator, ScoredResult, SliceReport,
};
pub use modelclient::{
    ApiStyle, Backend, BatchFailure, BatchOutcome, ClientConfig, EndpointClient, EvalPlan,
    Prediction, Provenance, StrategyConfig, StubBehavior,
};
pub use prompting::{Instruction, InstructionMode, InstructionSet, RenderedPrompt, Strategy};
pub use report::{HeatmapContext, HeatmapGrid, ReportFormat};
pub use resources::{resources, ResourceChecksums, Resources};
pub use textnorm::NormalizedText;
