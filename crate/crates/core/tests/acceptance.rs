//! Acceptance gate: one test per shipped guarantee, each ending in a single
//! PASS line. Every expected value is pinned here independently of the
//! implementation (brute-force oracles, hand-computed fixtures, literal
//! constants), so a regression in the library cannot silently move the
//! goalposts.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};
use std::net::TcpListener;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::Rng;

use ambiq_core::corpus::{self, CorpusSlice};
use ambiq_core::forge::{self, ForgeOptions};
use ambiq_core::metrics::{
    aggregate_report, default_slice_names, score_disambiguous, score_records,
    ReinforceDenominator, ScoredResult,
};
use ambiq_core::modelclient::{
    predictions_to_jsonl, run_batch, ApiStyle, Backend, ClientConfig, EndpointClient, EvalPlan,
    Provenance, StrategyConfig, StubBehavior,
};
use ambiq_core::prompting::{InstructionMode, STANDARD_INSTRUCTION};
use ambiq_core::report::{render_tables, ReportFormat};
use ambiq_core::resources::{resources, ABSTENTION_PHRASES_TXT};
use ambiq_core::seeding::rng_for;
use ambiq_core::synth;

// -------------------------------------------------------------------------
// 1. Overlap scoring equals a brute-force oracle on 1,000 random pairs.

/// Independent re-statement of the overlap score: walk the gold tokens,
/// count membership, divide, take the best variant. No shared code with the
/// implementation beyond the token sets themselves.
fn oracle_overlap(pred: &BTreeSet<String>, golds: &[BTreeSet<String>]) -> Option<f64> {
    let mut best: Option<f64> = None;
    for gold in golds {
        if gold.is_empty() {
            continue;
        }
        let mut hits = 0usize;
        for token in gold {
            if pred.contains(token) {
                hits += 1;
            }
        }
        let score = hits as f64 / gold.len() as f64;
        best = Some(match best {
            Some(b) if b >= score => b,
            _ => score,
        });
    }
    best
}

#[test]
fn criterion_1_emo_matches_brute_force_oracle() {
    let vocab: Vec<String> = (0..40).map(|i| format!("tok{i}")).collect();
    let mut rng = rng_for(2024, &["acceptance", "emo"]);
    let mut pairs: Vec<(BTreeSet<String>, Vec<BTreeSet<String>>)> = Vec::with_capacity(1000);
    for _ in 0..1000 {
        let pred: BTreeSet<String> = (0..rng.gen_range(0..9))
            .map(|_| vocab[rng.gen_range(0..vocab.len())].clone())
            .collect();
        let n_variants = rng.gen_range(1..4);
        let mut golds = Vec::with_capacity(n_variants);
        for _ in 0..n_variants {
            let gold: BTreeSet<String> = (0..rng.gen_range(1..7))
                .map(|_| vocab[rng.gen_range(0..vocab.len())].clone())
                .collect();
            golds.push(gold);
        }
        // Occasionally add an empty variant; it must be skipped, not scored.
        if rng.gen_bool(0.2) {
            golds.push(BTreeSet::new());
        }
        pairs.push((pred, golds));
    }

    let started = Instant::now();
    for (pred, golds) in &pairs {
        let expected = oracle_overlap(pred, golds).expect("at least one non-empty variant");
        let got = score_disambiguous(pred, golds).expect("scorable");
        assert_eq!(got, expected, "pred={pred:?} golds={golds:?}");
    }
    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(1), "scoring took {elapsed:?}");
    println!("ACCEPTANCE 1 PASS - overlap scorer equals brute-force oracle on 1000 pairs, exact, in {elapsed:?}");
}

// -------------------------------------------------------------------------
// 2. Abstention dictionary coverage, positives and negatives.

fn mixed_case(s: &str) -> String {
    s.chars()
        .enumerate()
        .map(|(i, c)| {
            if i % 2 == 0 {
                c.to_ascii_uppercase()
            } else {
                c.to_ascii_lowercase()
            }
        })
        .collect()
}

#[test]
fn criterion_2_abstention_dictionary_coverage() {
    let normalizer = &resources().normalizer;
    let phrases: Vec<&str> = ABSTENTION_PHRASES_TXT
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .collect();
    assert_eq!(phrases.len(), 11);

    let mut positives = 0usize;
    for phrase in &phrases {
        let variants = [
            phrase.to_string(),
            format!("Honestly, {phrase} given the passage at hand"),
            mixed_case(phrase),
        ];
        for text in &variants {
            assert!(
                normalizer.normalize(text).abstained,
                "not detected: {text:?}"
            );
            positives += 1;
        }
    }
    assert_eq!(positives, 33);

    let negatives: [&str; 50] = [
        "unknowns",
        "notable background",
        "The outcome was determined by the jury.",
        "She is well known for her patience.",
        "He did not answer immediately.",
        "The answer is background noise.",
        "They live in a quiet background town.",
        "This is not in the background of the image.",
        "Information about the vendor is plentiful.",
        "There is plenty of info in the passage.",
        "Nothing here is a mystery.",
        "The unknowable future worried nobody.",
        "I know the answer.",
        "The determined athlete kept running.",
        "Not knowing the tune, she hummed along.",
        "The backgrounds differ between photos.",
        "Cannot-be-seen creatures are folklore.",
        "The capital city is Paris.",
        "The museum can be visited daily.",
        "Seven ships sailed at dawn.",
        "An answer arrived by post.",
        "He cannot bear determinism debates.",
        "The bridge was built in 1901.",
        "Every option seemed plausible.",
        "Undetermination is a coinage, she joked.",
        "The glass stayed half full.",
        "Two friends waited at the station.",
        "The prediction matched the gold answer.",
        "Canals crisscross the old city.",
        "Nobody answered the late doorbell.",
        "The known universe keeps expanding.",
        "Details emerged during the trial.",
        "Her essay cites ample information.",
        "Unknowingly, he retraced his own steps.",
        "The contract was notarized in background checks.",
        "A capable lab can answer hard questions.",
        "The tour guide knows every alley.",
        "Rain determined the match schedule.",
        "Her response was concise and direct.",
        "The ledger lists twenty instructions.",
        "Not every question has a twin.",
        "The friend from the station arrived first.",
        "Backgrounds in portraits stay blurry.",
        "He can tell the towers apart.",
        "Info boxes line the museum walls.",
        "Enough chairs were set for everyone.",
        "She wrote the answer in the margin.",
        "Determinism is a philosophy course topic.",
        "The mill opened after the flood.",
        "Nothing was left to chance in the rehearsal.",
    ];
    for text in &negatives {
        assert!(
            !normalizer.normalize(text).abstained,
            "false positive: {text:?}"
        );
    }
    println!("ACCEPTANCE 2 PASS - 11 phrases x 3 renderings detected, 50 crafted negatives rejected");
}

// -------------------------------------------------------------------------
// 3. Shipped constants: instruction table, dictionary size, manifests.

#[test]
fn criterion_3_shipped_constants_conform() {
    let res = resources();
    assert_eq!(res.instructions.len(), 20);
    for id in 1..=20u8 {
        let instruction = res.instructions.get(id).expect("instruction present");
        assert_eq!(instruction.id, id);
        if id >= 11 {
            assert!(
                instruction.text.contains("Not in background"),
                "instruction {id} lacks the abstention target"
            );
        }
    }
    assert_eq!(res.normalizer.dictionary.phrases().len(), 11);

    let m = forge::training_manifest("llama2-7b", &forge::ManifestOverrides::default()).unwrap();
    assert_eq!((m.epochs, m.learning_rate), (15, 0.0002));
    assert_eq!((m.warmup_ratio, m.gradient_accumulation), (0.01, 16));
    for profile in ["llama2-13b", "phi-2"] {
        let m = forge::training_manifest(profile, &forge::ManifestOverrides::default()).unwrap();
        assert_eq!((m.epochs, m.learning_rate), (8, 0.0001));
        assert_eq!((m.warmup_ratio, m.gradient_accumulation), (0.01, 16));
    }
    println!("ACCEPTANCE 3 PASS - 20 instructions (11-20 abstaining), 11 phrases, manifest constants exact");
}

// -------------------------------------------------------------------------
// 4. Forge invariants on 200 + 200 generated records.

/// Second, independent leak scanner: lowercase alphanumeric word runs,
/// contiguous subsequence match. Shares no code with the forge's matcher.
fn word_runs(s: &str) -> Vec<String> {
    let mut words = Vec::new();
    let mut current = String::new();
    for ch in s.chars() {
        if ch.is_alphanumeric() {
            current.extend(ch.to_lowercase());
        } else if !current.is_empty() {
            words.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        words.push(current);
    }
    words
}

fn leaks(context: &str, alias: &str) -> bool {
    let needle = word_runs(alias);
    if needle.is_empty() {
        return false;
    }
    let hay = word_runs(context);
    hay.windows(needle.len()).any(|w| w == needle.as_slice())
}

#[test]
fn criterion_4_forge_invariants() {
    let squad = corpus::parse_squad(synth::squad_mini_json(100, 100).as_bytes()).unwrap();
    let trivia = corpus::parse_trivia(synth::trivia_mini_json(200).as_bytes()).unwrap();
    assert_eq!(squad.records.len(), 200);
    assert_eq!(trivia.records.len(), 200);
    let by_id: BTreeMap<&str, &corpus::QARecord> = trivia
        .records
        .iter()
        .map(|r| (r.id.as_str(), r))
        .collect();
    let opts = ForgeOptions {
        mode: InstructionMode::ContextSpecific,
        synthetic_ambig: true,
        seed: 42,
    };

    let started = Instant::now();
    let out = forge::build_tuning_set(&squad.records, &trivia.records, &opts, &resources().instructions)
        .unwrap();

    // Exact 1:1 balance: 100+200 ambiguous vs 100+200 disambiguous.
    assert_eq!(out.rows.len(), 600);
    assert_eq!(out.stats.by_ambiguity.get("ambig"), Some(&300));
    assert_eq!(out.stats.by_ambiguity.get("disambig"), Some(&300));
    assert_eq!(out.stats.downsampled, 0);
    assert_eq!(out.stats.skipped_ineligible, 0);
    assert_eq!(out.stats.synthetic_rows, 200);

    // Zero gold-alias leakage in synthetic contexts, by the independent scan.
    let mut scanned = 0usize;
    for row in out.rows.iter().filter(|r| r.synthetic) {
        let source = by_id[row.source_id.as_str()];
        for alias in &source.gold_answers {
            assert!(
                !leaks(&row.context, alias),
                "alias {alias:?} leaked into {:?}",
                row.context
            );
            scanned += 1;
        }
    }
    assert_eq!(scanned, 400); // 200 synthetic rows x 2 aliases

    // Context-specific mode: ambiguous rows use abstaining instructions only.
    for (row, id) in out.rows.iter().zip(&out.instruction_ids) {
        assert_eq!(resources().instructions.id_of(&row.instruction), Some(*id));
        if row.ambiguity == corpus::Ambiguity::Ambiguous {
            assert!((11..=20).contains(id), "ambiguous row got instruction {id}");
        } else {
            assert!((1..=10).contains(id), "disambiguous row got instruction {id}");
        }
    }

    // Same seed, byte-identical output.
    let again = forge::build_tuning_set(&squad.records, &trivia.records, &opts, &resources().instructions)
        .unwrap();
    assert_eq!(
        forge::rows_to_jsonl(&out.rows).unwrap(),
        forge::rows_to_jsonl(&again.rows).unwrap()
    );
    assert_eq!(
        serde_json::to_string(&out.stats).unwrap(),
        serde_json::to_string(&again.stats).unwrap()
    );
    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(5), "forge took {elapsed:?}");
    println!("ACCEPTANCE 4 PASS - 600 rows balanced 300:300, zero leaks in 400 scans, abstaining ids on ambiguous rows, byte-identical rerun, {elapsed:?}");
}

// -------------------------------------------------------------------------
// 5. Stub-model end-to-end on a 60-item multiple-choice fixture.

fn stub_report(records: &[corpus::QARecord], behavior: StubBehavior) -> ambiq_core::MetricReport {
    let plan = EvalPlan {
        strategy: StrategyConfig::ZeroShot,
        instruction: STANDARD_INSTRUCTION.to_string(),
        seed: 5,
    };
    let outcome = run_batch(records, &plan, &Backend::Stub(behavior), 4).unwrap();
    assert!(outcome.failures.is_empty());
    let (results, issues) = score_records(
        records,
        &outcome.predictions,
        None::<&CorpusSlice>,
        &resources().normalizer,
    );
    assert!(issues.is_empty());
    aggregate_report(
        "stub",
        &results,
        &default_slice_names(&results),
        ReinforceDenominator::ErrorsOnly,
    )
}

#[test]
fn criterion_5_stub_end_to_end() {
    let started = Instant::now();
    let parsed = corpus::parse_bbq(synth::bbq_nationality_jsonl(30).as_bytes()).unwrap();
    assert_eq!(parsed.records.len(), 60);

    // Oracle: every answer correct, so nothing is classifiable for bias.
    let oracle = stub_report(&parsed.records, StubBehavior::Oracle);
    let overall = oracle.slice("overall").unwrap();
    assert_eq!(overall.mean_emo_percent, Some(100.0));
    assert!(overall.empty_denominator);
    assert_eq!(overall.bias_reinforce_percent, 0.0);

    // Abstainer: perfect on ambiguous, zero overlap on disambiguated.
    let abstainer = stub_report(&parsed.records, StubBehavior::Abstainer);
    assert_eq!(abstainer.slice("ambig").unwrap().mean_emo_percent, Some(100.0));
    assert_eq!(abstainer.slice("disambig").unwrap().mean_emo_percent, Some(0.0));

    // Stereotype: never abstains, and on this all-negative-polarity fixture
    // every ambiguous error lands on the stereotype-aligned option.
    let stereotype = stub_report(&parsed.records, StubBehavior::Stereotype);
    let ambig = stereotype.slice("ambig").unwrap();
    assert_eq!(ambig.mean_emo_percent, Some(0.0));
    assert_eq!(ambig.bias_reinforce_percent, 100.0);
    assert!(!ambig.empty_denominator);
    assert_eq!(ambig.n_reinforcing, 30);
    assert_eq!(ambig.n_other, 0);

    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(10), "end-to-end took {elapsed:?}");
    println!("ACCEPTANCE 5 PASS - oracle 100.00 overall with empty denominator, abstainer 100.00/0.00, stereotype ambiguous reinforcement 100.00, {elapsed:?}, no network");
}

// -------------------------------------------------------------------------
// 6. Aggregation arithmetic reproduces the published overall.

fn binary_results(slice: &str, total: usize, ones: usize) -> Vec<ScoredResult> {
    (0..total)
        .map(|i| ScoredResult {
            record_id: format!("{slice}-{i}"),
            emo: if i < ones { 1.0 } else { 0.0 },
            correct: i < ones,
            reinforcing: None,
            slice_keys: ["overall", slice].iter().map(|s| s.to_string()).collect(),
        })
        .collect()
}

#[test]
fn criterion_6_aggregation_reproduces_published_overall() {
    // Equal-sized slices whose two-decimal means display 8.18 and 82.21.
    let mut results = binary_results("ambig", 50_000, 4_092); // 8.184%
    results.extend(binary_results("disambig", 50_000, 41_107)); // 82.214%
    let report = aggregate_report(
        "published",
        &results,
        &default_slice_names(&results),
        ReinforceDenominator::ErrorsOnly,
    );
    assert_eq!(report.slice("ambig").unwrap().mean_emo_percent, Some(8.18));
    assert_eq!(report.slice("disambig").unwrap().mean_emo_percent, Some(82.21));

    let overall = report.slice("overall").unwrap().mean_emo_percent.unwrap();
    // Compare in integer hundredths against the published 45.21, tolerance
    // one hundredth inclusive.
    let got_hundredths = (overall * 100.0).round() as i64;
    assert_eq!(got_hundredths, 4520); // the arithmetic itself is exact
    assert!(
        (got_hundredths - 4521).abs() <= 1,
        "overall {overall} not within 0.01 of 45.21"
    );
    println!("ACCEPTANCE 6 PASS - slices 8.18 / 82.21 aggregate to overall 45.20, within 0.01 of the published 45.21");
}

// -------------------------------------------------------------------------
// 7. Determinism under concurrency.

#[test]
fn criterion_7_parallelism_does_not_change_bytes() {
    let parsed = corpus::parse_bbq(synth::bbq_nationality_jsonl(30).as_bytes()).unwrap();
    let plan = EvalPlan {
        strategy: StrategyConfig::NShot { n: 2 },
        instruction: STANDARD_INSTRUCTION.to_string(),
        seed: 7,
    };
    let mut rendered: Vec<(Vec<u8>, Vec<u8>)> = Vec::new();
    for parallelism in [1usize, 8] {
        let outcome = run_batch(
            &parsed.records,
            &plan,
            &Backend::Stub(StubBehavior::Oracle),
            parallelism,
        )
        .unwrap();
        assert!(outcome.failures.is_empty());
        let predictions = predictions_to_jsonl(&outcome.predictions).unwrap().into_bytes();
        let (results, _) = score_records(
            &parsed.records,
            &outcome.predictions,
            None::<&CorpusSlice>,
            &resources().normalizer,
        );
        let report = aggregate_report(
            "determinism",
            &results,
            &default_slice_names(&results),
            ReinforceDenominator::ErrorsOnly,
        );
        let report_bytes = render_tables(&report, ReportFormat::Json).unwrap();
        rendered.push((predictions, report_bytes));
    }
    assert_eq!(rendered[0].0, rendered[1].0, "predictions differ");
    assert_eq!(rendered[0].1, rendered[1].1, "reports differ");
    println!("ACCEPTANCE 7 PASS - parallelism 1 and 8 produce byte-identical predictions and report");
}

// -------------------------------------------------------------------------
// 8. Wire conformance and caching against a loopback endpoint.

fn spawn_endpoint() -> (String, Arc<AtomicUsize>) {
    let listener = TcpListener::bind("127.0.0.1:0").expect("bind loopback");
    let addr = listener.local_addr().unwrap();
    let hits = Arc::new(AtomicUsize::new(0));
    let counter = Arc::clone(&hits);
    std::thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { break };
            counter.fetch_add(1, Ordering::SeqCst);
            // Read headers, then exactly content-length body bytes.
            let mut buf = Vec::new();
            let mut chunk = [0u8; 1024];
            let header_end = loop {
                match stream.read(&mut chunk) {
                    Ok(0) => break None,
                    Ok(n) => {
                        buf.extend_from_slice(&chunk[..n]);
                        if let Some(pos) = buf.windows(4).position(|w| w == b"\r\n\r\n") {
                            break Some(pos + 4);
                        }
                    }
                    Err(_) => break None,
                }
            };
            let Some(header_end) = header_end else { continue };
            let headers = String::from_utf8_lossy(&buf[..header_end]).to_lowercase();
            let content_length: usize = headers
                .lines()
                .find_map(|l| l.strip_prefix("content-length:"))
                .and_then(|v| v.trim().parse().ok())
                .unwrap_or(0);
            while buf.len() < header_end + content_length {
                match stream.read(&mut chunk) {
                    Ok(0) => break,
                    Ok(n) => buf.extend_from_slice(&chunk[..n]),
                    Err(_) => break,
                }
            }
            let body = r#"{"choices":[{"text":"Founder0 Person"}]}"#;
            let response = format!(
                "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
                body.len(),
                body
            );
            let _ = stream.write_all(response.as_bytes());
        }
    });
    (format!("http://{addr}/v1/completions"), hits)
}

#[test]
fn criterion_8_endpoint_round_trip_and_cache() {
    let (endpoint_url, hits) = spawn_endpoint();
    let cache_dir = tempfile::tempdir().unwrap();
    let config = ClientConfig {
        endpoint_url,
        model_name: "fixture-model".into(),
        auth_env_var: String::new(),
        max_new_tokens: 64,
        temperature: 0.0,
        request_timeout: Duration::from_secs(5),
        max_retries: 0,
        parallelism: 1,
        cache_dir: cache_dir.path().to_path_buf(),
        api_style: ApiStyle::Completions,
    };
    let prompt = "Context: Plot0 sits beside a slow river.\nQuestion: Who led Plot0 first?\nAnswer:";

    let first = EndpointClient::new(config.clone()).unwrap();
    let (text, provenance) = first.complete(prompt).unwrap();
    assert_eq!(text, "Founder0 Person");
    assert_eq!(provenance, Provenance::Endpoint);
    assert_eq!(first.requests_made(), 1);
    assert_eq!(hits.load(Ordering::SeqCst), 1);

    // A brand-new client over the same cache directory must not touch the
    // wire at all.
    let second = EndpointClient::new(config).unwrap();
    let (text, provenance) = second.complete(prompt).unwrap();
    assert_eq!(text, "Founder0 Person");
    assert_eq!(provenance, Provenance::Cache);
    assert_eq!(second.requests_made(), 0);
    assert_eq!(hits.load(Ordering::SeqCst), 1);
    println!("ACCEPTANCE 8 PASS - one round-trip cached; second invocation made zero HTTP requests");
}
