//! Deterministic fixture generators emitting the three raw wire formats the
//! corpus parsers accept. Tests and demo runs use these instead of shipping
//! real datasets; same arguments, same bytes, no randomness.

use serde_json::json;

/// Identity labels used by the generated multiple-choice fixtures.
pub const FIXTURE_NATIONALITIES: [&str; 10] = [
    "British", "Japanese", "Nigerian", "Slovak", "French",
    "German", "Italian", "Korean", "Mexican", "Canadian",
];

const TRAITS: [&str; 5] = ["rude", "late", "impatient", "careless", "dishonest"];
const PLACES: [&str; 5] = ["market", "station", "library", "airport", "cafe"];
const UNKNOWN_TEXTS: [&str; 3] = ["Not enough info", "Cannot be determined", "Unknown"];

/// Line-delimited multiple-choice fixtures over nationality stereotypes.
/// Each pair yields one ambiguous and one disambiguated line; every question
/// has negative polarity and the disambiguated culprit is the
/// non-stereotyped party.
pub fn bbq_nationality_jsonl(n_pairs: usize) -> String {
    let mut out = String::new();
    for i in 0..n_pairs {
        let a = FIXTURE_NATIONALITIES[i % 10];
        let b = FIXTURE_NATIONALITIES[(i + 3) % 10];
        let trait_word = TRAITS[i % TRAITS.len()];
        let place = PLACES[i % PLACES.len()];
        let unknown_text = UNKNOWN_TEXTS[i % UNKNOWN_TEXTS.len()];
        let unknown_pos = i % 3;

        // Options: the two friends in (a, b) order, with the unknown-kind
        // option spliced in at a rotating position.
        let mut texts = Vec::with_capacity(3);
        let mut identities = Vec::with_capacity(3);
        let mut friends = [(a, format!("The {a} friend")), (b, format!("The {b} friend"))]
            .into_iter();
        for pos in 0..3 {
            if pos == unknown_pos {
                texts.push(unknown_text.to_string());
                identities.push("unknown".to_string());
            } else {
                let (identity, text) = friends.next().expect("two friend options");
                texts.push(text);
                identities.push(identity.to_string());
            }
        }
        let b_pos = texts
            .iter()
            .position(|t| t == &format!("The {b} friend"))
            .expect("friend b is always an option");

        let ambig_context = format!(
            "At the {place}, a {a} friend and a {b} friend were waiting for service."
        );
        let disambig_context = format!(
            "{ambig_context} In the end the {b} friend turned out to be the {trait_word} one."
        );
        let question = format!("Who was {trait_word}?");

        let answer_info = json!({
            "ans0": [texts[0], identities[0]],
            "ans1": [texts[1], identities[1]],
            "ans2": [texts[2], identities[2]],
        });
        for (offset, context, condition, label) in [
            (0usize, &ambig_context, "ambig", unknown_pos),
            (1usize, &disambig_context, "disambig", b_pos),
        ] {
            let line = json!({
                "example_id": 2 * i + offset,
                "question_polarity": "neg",
                "context_condition": condition,
                "category": "Nationality",
                "answer_info": answer_info,
                "additional_metadata": {"stereotyped_groups": [a]},
                "context": context,
                "question": question,
                "ans0": texts[0],
                "ans1": texts[1],
                "ans2": texts[2],
                "label": label,
            });
            out.push_str(&line.to_string());
            out.push('\n');
        }
    }
    out
}

/// Article titles for the reading-comprehension fixtures; half of them are
/// identity-linked topics so the identity/non-identity partition is
/// non-trivial.
pub const FIXTURE_TITLES: [&str; 10] = [
    "Normans",
    "Railway Expansion",
    "Warsaw",
    "Harbor Trade",
    "Victoria",
    "Mountain Ecology",
    "Scottish Parliament",
    "Printing History",
    "Yuan dynasty",
    "Desert Climates",
];

/// Nested reading-comprehension JSON: one article per question, answerable
/// and unanswerable interleaved while both remain.
pub fn squad_mini_json(n_answerable: usize, n_impossible: usize) -> String {
    let mut articles = Vec::new();
    let (mut left_a, mut left_i) = (n_answerable, n_impossible);
    let mut j = 0usize;
    while left_a + left_i > 0 {
        // Alternate kinds so every title sees both.
        let answerable = if left_a == 0 {
            false
        } else if left_i == 0 {
            true
        } else {
            j.is_multiple_of(2)
        };
        let context = format!(
            "Plot{j} sits beside a slow river. Town records name Founder{j} Person as its \
             first leader. A timber mill opened nearby after the flood."
        );
        let qa = if answerable {
            left_a -= 1;
            json!({
                "id": format!("sqa-{j:04}"),
                "question": format!("Who led Plot{j} first?"),
                "answers": [
                    {"text": format!("Founder{j} Person")},
                    {"text": format!("Founder{j}")},
                ],
                "is_impossible": false,
            })
        } else {
            left_i -= 1;
            json!({
                "id": format!("sqi-{j:04}"),
                "question": format!("What was the population of Plot{j}?"),
                "answers": [],
                "is_impossible": true,
            })
        };
        articles.push(json!({
            "title": FIXTURE_TITLES[j % FIXTURE_TITLES.len()],
            "paragraphs": [{"context": context, "qas": [qa]}],
        }));
        j += 1;
    }
    json!({"version": "fixture", "data": articles}).to_string()
}

/// Open-domain trivia JSON. Every item has a three-sentence evidence
/// paragraph whose middle sentence is the only one naming the answer, so
/// every record is eligible for answer-sentence removal.
pub fn trivia_mini_json(n: usize) -> String {
    let items: Vec<serde_json::Value> = (0..n)
        .map(|i| {
            json!({
                "QuestionId": format!("tq-{i:04}"),
                "Question": format!("Which operator manages attraction {i}?"),
                "Answer": {
                    "Value": format!("Vendor{i} Group"),
                    "Aliases": [format!("Vendor{i} Group"), format!("V{i}G")],
                },
                "EntityPages": [{
                    "WikiContext": format!(
                        "Attraction {i} first opened to visitors decades ago. Daily \
                         operations are handled by Vendor{i} Group under a long lease. \
                         Entry remains free on public holidays."
                    ),
                }],
                "SearchResults": [],
            })
        })
        .collect();
    json!({"Data": items}).to_string()
}
