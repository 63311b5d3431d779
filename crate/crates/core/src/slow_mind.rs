//! The slow, proficient model: one-shot intention reasoning per command and
//! a periodic chat-and-assessment loop.

use serde::{Deserialize, Serialize};

use crate::catalog::MacroAction;
use crate::env::StateText;
use crate::llm::{directive, Backend, GatewayError, PromptRequest};
use crate::prompts::{self, next_round};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HumanCommand {
    pub id: u64,
    pub text: String,
    pub received_game_s: f64,
    pub received_wall_ms: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Category {
    Useless,
    ShortTerm,
    Inferred,
    LongTerm,
    Question,
    OrdersQuery,
}

impl Category {
    /// Categories closed by a single chat turn.
    pub fn closes_after_chat(self) -> bool {
        matches!(self, Category::Useless | Category::Question | Category::OrdersQuery)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Intention {
    pub text: String,
    pub category: Category,
    pub source_command: u64,
    pub satisfied: bool,
    /// Set when reasoning failed and the raw command stands in.
    #[serde(default)]
    pub low_confidence: bool,
}

/// Run-length encoded macro history.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompressedHistory {
    pub entries: Vec<(MacroAction, u32)>,
}

impl CompressedHistory {
    pub fn compress(raw: &[MacroAction]) -> Self {
        let mut entries: Vec<(MacroAction, u32)> = Vec::new();
        for &m in raw {
            match entries.last_mut() {
                Some((last, n)) if *last == m => *n += 1,
                _ => entries.push((m, 1)),
            }
        }
        CompressedHistory { entries }
    }

    pub fn expand(&self) -> Vec<MacroAction> {
        self.entries
            .iter()
            .flat_map(|&(m, n)| std::iter::repeat_n(m, n as usize))
            .collect()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// "Chop Onion × 2, Cook Alice Soup", or "None".
    pub fn render(&self) -> String {
        if self.entries.is_empty() {
            return "None".into();
        }
        self.entries
            .iter()
            .map(|&(m, n)| if n == 1 { m.name() } else { format!("{} × {n}", m.name()) })
            .collect::<Vec<_>>()
            .join(", ")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssessmentResult {
    pub reasoning: String,
    pub chat_message: String,
    /// Present only in full mode (an intention was active).
    pub satisfied: Option<bool>,
}

/// A stage's output plus the gateway time it consumed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Staged<T> {
    pub value: T,
    pub latency_ms: f64,
    pub calls: u32,
}

fn is_none(text: &str) -> bool {
    let t = text.trim().trim_end_matches('.').trim();
    t.is_empty() || t.eq_ignore_ascii_case("none")
}

/// Category of an interpreted intention. `command` decides between a plain
/// short-term request and one that needed inference.
pub fn classify(intention: &str, command: &str) -> Category {
    let t = intention.trim();
    if is_none(t) {
        return Category::Useless;
    }
    if t.eq_ignore_ascii_case("What are the orders now?") {
        return Category::OrdersQuery;
    }
    if t.ends_with('?') {
        return Category::Question;
    }
    let parsed = directive::parse(t);
    if parsed.iter().any(|d| d.count == directive::FOREVER)
        || directive::clauses(t).iter().any(|c| c.long_term)
    {
        return Category::LongTerm;
    }
    let explicit = directive::parse(command);
    if !explicit.is_empty() && directive::render_all(&explicit) == directive::render_all(&parsed) {
        Category::ShortTerm
    } else {
        Category::Inferred
    }
}

/// Leading Yes/No token, case-insensitive; anything else reads as No.
pub fn parse_yes_no(reply: &str) -> bool {
    reply
        .split(|c: char| !c.is_ascii_alphabetic())
        .find(|w| !w.is_empty())
        .is_some_and(|w| w.eq_ignore_ascii_case("yes"))
}

fn prior_text(prior: Option<&Intention>) -> String {
    prior.map(|p| p.text.clone()).unwrap_or_else(|| "None".into())
}

pub fn intention_prompt(command: &str, prior: Option<&Intention>, text: &StateText) -> String {
    prompts::INTENTION.render(&[
        ("guide", &prompts::guide_slow()),
        ("orders", &text.orders_line()),
        ("prior", &prior_text(prior)),
        ("message", command),
    ])
}

fn request(text: String, deadline_ms: u64) -> PromptRequest {
    PromptRequest::new(text, deadline_ms)
}

/// Interprets a command once. On gateway failure the raw command stands in
/// as a low-confidence inferred intention; the returned error reports why.
pub fn infer_intention(
    command: &HumanCommand,
    prior: Option<&Intention>,
    text: &StateText,
    backend: &dyn Backend,
    deadline_ms: u64,
) -> (Staged<Intention>, Option<GatewayError>) {
    let prompt = intention_prompt(&command.text, prior, text);
    match backend.generate(&request(prompt, deadline_ms)) {
        Ok(g) => {
            let body = g.text.trim().trim_matches('"').to_string();
            let category = classify(&body, &command.text);
            (
                Staged {
                    value: Intention {
                        text: body,
                        category,
                        source_command: command.id,
                        satisfied: false,
                        low_confidence: false,
                    },
                    latency_ms: g.latency_ms,
                    calls: 1,
                },
                None,
            )
        }
        Err(e) => {
            let latency_ms = match e {
                GatewayError::Timeout { after_ms } => after_ms as f64,
                _ => 0.0,
            };
            (
                Staged {
                    value: Intention {
                        text: command.text.clone(),
                        category: Category::Inferred,
                        source_command: command.id,
                        satisfied: false,
                        low_confidence: true,
                    },
                    latency_ms,
                    calls: 1,
                },
                Some(e),
            )
        }
    }
}

fn full_prompt(intention: &str, text: &StateText, history: &CompressedHistory, extra_round: &str) -> String {
    prompts::ASSESS_FULL.render(&[
        ("guide", &prompts::guide_slow()),
        ("extra_round", extra_round),
        ("orders", &text.orders_with_time_line()),
        ("items", &text.items_block()),
        ("intention", intention),
        ("history", &history.render()),
    ])
}

pub fn casual_prompt(text: &StateText, recent: &CompressedHistory) -> String {
    prompts::ASSESS_CASUAL.render(&[
        ("guide", &prompts::guide_slow()),
        ("orders", &text.orders_with_time_line()),
        ("items", &text.items_block()),
        ("history", &recent.render()),
    ])
}

/// Runs rounds one to three of the full-mode conversation. Returns the
/// conversation so far for callers that append more rounds.
fn three_rounds(
    first: String,
    backend: &dyn Backend,
    deadline_ms: u64,
) -> Result<(AssessmentResult, String, f64), GatewayError> {
    let r1 = backend.generate(&request(first.clone(), deadline_ms))?;
    let second = next_round(&first, &r1.text, &prompts::ASSESS_ROUND2.render(&[]));
    let r2 = backend.generate(&request(second.clone(), deadline_ms))?;
    let third = next_round(&second, &r2.text, &prompts::ASSESS_ROUND3.render(&[]));
    let r3 = backend.generate(&request(third.clone(), deadline_ms))?;
    let convo = next_round(&third, &r3.text, "");
    Ok((
        AssessmentResult {
            reasoning: r1.text.trim().to_string(),
            chat_message: r2.text.trim().to_string(),
            satisfied: Some(parse_yes_no(&r3.text)),
        },
        convo,
        r1.latency_ms + r2.latency_ms + r3.latency_ms,
    ))
}

/// Category rules override the model: closing categories are satisfied
/// after their chat turn, long-term requests never are.
fn enforce(category: Category, satisfied: bool) -> bool {
    match category {
        c if c.closes_after_chat() => true,
        Category::LongTerm => false,
        _ => satisfied,
    }
}

/// Full mode with an active intention (three rounds), casual mode without
/// (one round, no verdict).
pub fn chat_and_assess(
    intention: Option<&Intention>,
    text: &StateText,
    history: &CompressedHistory,
    backend: &dyn Backend,
    deadline_ms: u64,
) -> Result<Staged<AssessmentResult>, GatewayError> {
    match intention {
        Some(intention) => {
            let first = full_prompt(&intention.text, text, history, "");
            let (mut result, _, latency_ms) = three_rounds(first, backend, deadline_ms)?;
            result.satisfied = result.satisfied.map(|s| enforce(intention.category, s));
            Ok(Staged {
                value: result,
                latency_ms,
                calls: 3,
            })
        }
        None => {
            let g = backend.generate(&request(casual_prompt(text, history), deadline_ms))?;
            Ok(Staged {
                value: AssessmentResult {
                    reasoning: String::new(),
                    chat_message: g.text.trim().to_string(),
                    satisfied: None,
                },
                latency_ms: g.latency_ms,
                calls: 1,
            })
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoaTurn {
    pub assessment: AssessmentResult,
    pub action: Option<MacroAction>,
    pub regenerated: bool,
    /// The value-argmax fallback picked the action.
    pub fallback: bool,
}

fn available_list(available: &[(MacroAction, f64)]) -> String {
    let names: Vec<String> = available.iter().map(|(m, _)| m.name()).collect();
    format!("[{}]", names.join(", "))
}

fn legal(reply: &str, available: &[(MacroAction, f64)]) -> Option<MacroAction> {
    let m = MacroAction::parse(reply.lines().next().unwrap_or(""))?;
    available.iter().any(|(a, _)| *a == m).then_some(m)
}

/// Slow-mind-only turn: the three assessment rounds plus a fourth choosing a
/// macro from `available`. An illegal pick is regenerated once, then the
/// highest-value action is taken.
pub fn smoa_turn(
    intention: Option<&Intention>,
    text: &StateText,
    history: &CompressedHistory,
    available: &[(MacroAction, f64)],
    backend: &dyn Backend,
    deadline_ms: u64,
) -> Result<Staged<SmoaTurn>, GatewayError> {
    let intention_text = intention.map(|i| i.text.clone()).unwrap_or_else(|| "None".into());
    let extra = "\nRound Four - Action Execution: You are to give your action to be carried out next.";
    let first = full_prompt(&intention_text, text, history, extra);
    let (mut assessment, convo, mut latency_ms) = three_rounds(first, backend, deadline_ms)?;
    let category = intention.map(|i| i.category).unwrap_or(Category::Useless);
    assessment.satisfied = assessment.satisfied.map(|s| enforce(category, s));
    let mut calls = 3;

    let convo = convo.trim_end_matches("\n\n").to_string();
    let fourth = format!(
        "{convo}\n\n{}",
        prompts::SMOA_ROUND4.render(&[("available", &available_list(available))])
    );
    let r4 = backend.generate(&request(fourth.clone(), deadline_ms))?;
    latency_ms += r4.latency_ms;
    calls += 1;
    let mut turn = SmoaTurn {
        assessment,
        action: legal(&r4.text, available),
        regenerated: false,
        fallback: false,
    };
    if turn.action.is_none() && !available.is_empty() {
        let retry = next_round(
            &fourth,
            &r4.text,
            &format!(
                "\"{}\" is not one of the available actions. {}",
                r4.text.trim(),
                prompts::SMOA_ROUND4.render(&[("available", &available_list(available))])
            ),
        );
        let r5 = backend.generate(&request(retry, deadline_ms))?;
        latency_ms += r5.latency_ms;
        calls += 1;
        turn.regenerated = true;
        turn.action = legal(&r5.text, available);
        if turn.action.is_none() {
            turn.fallback = true;
            turn.action = best_value(available);
        }
    }
    Ok(Staged {
        value: turn,
        latency_ms,
        calls,
    })
}

/// Highest value, earliest in catalog order on ties.
pub fn best_value(available: &[(MacroAction, f64)]) -> Option<MacroAction> {
    let mut best: Option<(MacroAction, f64)> = None;
    for &(m, v) in available {
        if best.is_none_or(|(bm, bv)| v > bv || (v == bv && m.index() < bm.index())) {
            best = Some((m, v));
        }
    }
    best.map(|(m, _)| m)
}

pub fn one_stage_prompt(
    command: &str,
    prior: Option<&Intention>,
    text: &StateText,
    history: &CompressedHistory,
) -> String {
    prompts::ONE_STAGE.render(&[
        ("guide", &prompts::guide_slow()),
        ("orders", &text.orders_with_time_line()),
        ("items", &text.items_block()),
        ("prior", &prior_text(prior)),
        ("message", command),
        ("history", &history.render()),
    ])
}

fn labeled<'a>(reply: &'a str, label: &str) -> Option<&'a str> {
    reply.lines().find_map(|l| {
        let l = l.trim();
        l.get(..label.len())
            .filter(|head| head.eq_ignore_ascii_case(label))
            .map(|_| l[label.len()..].trim())
    })
}

/// The one-stage ablation: intention, chat and verdict from a single call.
pub fn one_stage(
    command: &HumanCommand,
    prior: Option<&Intention>,
    text: &StateText,
    history: &CompressedHistory,
    backend: &dyn Backend,
    deadline_ms: u64,
) -> Result<Staged<(Intention, AssessmentResult)>, GatewayError> {
    let prompt = one_stage_prompt(&command.text, prior, text, history);
    let g = backend.generate(&request(prompt, deadline_ms))?;
    let intention_text = labeled(&g.text, "Intention:").unwrap_or(command.text.as_str()).to_string();
    let chat = labeled(&g.text, "Chat:").unwrap_or("").to_string();
    let category = classify(&intention_text, &command.text);
    let satisfied = enforce(category, labeled(&g.text, "Satisfied:").is_some_and(parse_yes_no));
    Ok(Staged {
        value: (
            Intention {
                text: intention_text,
                category,
                source_command: command.id,
                satisfied,
                low_confidence: false,
            },
            AssessmentResult {
                reasoning: String::new(),
                chat_message: chat,
                satisfied: Some(satisfied),
            },
        ),
        latency_ms: g.latency_ms,
        calls: 1,
    })
}
