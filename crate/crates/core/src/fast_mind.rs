//! The fast, lightweight model: scores available macro actions as prompt
//! continuations and fuses the scores with hand-coded values.

use serde::{Deserialize, Serialize};

use crate::catalog::{self, MacroAction};
use crate::env::{AtomicAction, GameState, PlayerId, StateText};
use crate::llm::{Backend, GatewayError, PromptRequest};
use crate::prompts;
use crate::slow_mind::CompressedHistory;

/// What the prompt is conditioned on. Exactly one is active at a time and
/// a command moves through them in declaration order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "text")]
pub enum ConditionInput {
    RawCommand(String),
    InferredIntention(String),
    SlowChat(String),
}

impl ConditionInput {
    pub fn rank(&self) -> u8 {
        match self {
            ConditionInput::RawCommand(_) => 0,
            ConditionInput::InferredIntention(_) => 1,
            ConditionInput::SlowChat(_) => 2,
        }
    }

    pub fn text(&self) -> &str {
        match self {
            ConditionInput::RawCommand(t)
            | ConditionInput::InferredIntention(t)
            | ConditionInput::SlowChat(t) => t,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            ConditionInput::RawCommand(_) => "RawCommand",
            ConditionInput::InferredIntention(_) => "InferredIntention",
            ConditionInput::SlowChat(_) => "SlowChat",
        }
    }

    pub fn block(&self) -> String {
        let text = if self.text().trim().is_empty() { "None" } else { self.text() };
        match self {
            ConditionInput::SlowChat(_) => format!("Your planning:\n{text}"),
            _ => format!("The human's demand is:\n{text}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterParams {
    pub alpha_unsatisfied: f64,
    pub alpha_satisfied: f64,
}

impl Default for FilterParams {
    fn default() -> Self {
        FilterParams {
            alpha_unsatisfied: 1.0,
            alpha_satisfied: 4.0,
        }
    }
}

impl FilterParams {
    pub fn alpha(&self, satisfied: bool) -> f64 {
        if satisfied {
            self.alpha_satisfied
        } else {
            self.alpha_unsatisfied
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.alpha_unsatisfied >= 0.0 && self.alpha_unsatisfied < self.alpha_satisfied) {
            return Err(format!(
                "need 0 <= alpha_unsatisfied < alpha_satisfied, got {} and {}",
                self.alpha_unsatisfied, self.alpha_satisfied
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore {
    pub action: MacroAction,
    pub log_p: f64,
    pub value: f64,
    pub fused: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionTrace {
    pub candidates: Vec<CandidateScore>,
    pub chosen: MacroAction,
    pub alpha_used: f64,
    /// Scoring failed and values alone decided.
    pub fallback: bool,
    pub latency_ms: f64,
}

/// "My actions are: " followed by the history, each entry trailed by ", ".
pub fn history_tail(history: &CompressedHistory) -> String {
    if history.is_empty() {
        String::new()
    } else {
        format!("{}, ", history.render())
    }
}

/// Prompt prefix whose continuation is the next macro action.
pub fn build_prompt(condition: &ConditionInput, history: &CompressedHistory) -> String {
    prompts::FAST_MIND.render(&[
        ("guide", &prompts::guide_fast(true)),
        ("condition", &condition.block()),
        ("history", &history_tail(history)),
    ])
}

/// log U = log P + alpha * V, elementwise.
pub fn fuse(log_p: &[f64], values: &[f64], alpha: f64) -> Vec<f64> {
    log_p.iter().zip(values).map(|(l, v)| l + alpha * v).collect()
}

/// Index of the first maximum; ties go to the earlier entry.
pub fn argmax(scores: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &s) in scores.iter().enumerate() {
        if best.is_none_or(|b| s > scores[b]) {
            best = Some(i);
        }
    }
    best
}

/// Scores `available` (catalog order) and picks greedily. Returns None when
/// nothing is available. On a gateway error every log-probability is taken
/// as zero and the error is handed back next to the trace.
pub fn select_from(
    available: &[MacroAction],
    state: &GameState,
    prefix: &str,
    alpha: f64,
    backend: &dyn Backend,
    deadline_ms: u64,
) -> Option<(SelectionTrace, Option<GatewayError>)> {
    if available.is_empty() {
        return None;
    }
    let names: Vec<String> = available.iter().map(|m| m.name()).collect();
    let values: Vec<f64> = available.iter().map(|m| catalog::value(*m, state)).collect();
    let (log_p, latency_ms, err) = match backend.score_candidates(prefix, &names, deadline_ms) {
        Ok(set) if set.log_probs.len() == names.len() => (set.log_probs, set.latency_ms, None),
        Ok(set) => (
            vec![0.0; names.len()],
            set.latency_ms,
            Some(GatewayError::Transport(format!(
                "{} scores for {} candidates",
                set.log_probs.len(),
                names.len()
            ))),
        ),
        Err(e) => {
            let waited = match e {
                GatewayError::Timeout { after_ms } => after_ms as f64,
                _ => 0.0,
            };
            (vec![0.0; names.len()], waited, Some(e))
        }
    };
    let fused = fuse(&log_p, &values, alpha);
    let best = argmax(&fused).expect("non-empty");
    let candidates = available
        .iter()
        .enumerate()
        .map(|(i, &action)| CandidateScore {
            action,
            log_p: log_p[i],
            value: values[i],
            fused: fused[i],
        })
        .collect();
    Some((
        SelectionTrace {
            candidates,
            chosen: available[best],
            alpha_used: alpha,
            fallback: err.is_some(),
            latency_ms,
        },
        err,
    ))
}

#[allow(clippy::too_many_arguments)]
pub fn select_macro(
    state: &GameState,
    agent: PlayerId,
    condition: &ConditionInput,
    history: &CompressedHistory,
    params: &FilterParams,
    satisfied: bool,
    backend: &dyn Backend,
    deadline_ms: u64,
) -> Option<(SelectionTrace, Option<GatewayError>)> {
    let available = catalog::enumerate_available(state, agent);
    let prefix = build_prompt(condition, history);
    select_from(&available, state, &prefix, params.alpha(satisfied), backend, deadline_ms)
}

/// Condition block of the fast-mind-only baseline: the current command plus
/// the one before it.
pub fn fmoa_condition(prior: Option<&str>, current: Option<&str>) -> String {
    let current = current.filter(|c| !c.trim().is_empty()).unwrap_or("None");
    match prior {
        Some(p) => format!(
            "The human player's demand in the last round (which has already been satisfied):\n{p}\nThe human's demand is:\n{current}"
        ),
        None => format!("The human's demand is:\n{current}"),
    }
}

pub fn fmoa_prompt(condition: &str, text: &StateText, history: &CompressedHistory) -> String {
    prompts::FMOA.render(&[
        ("guide", &prompts::guide_fast(true)),
        ("condition", condition),
        ("orders", &text.orders_with_time_line()),
        ("items", &text.items_block()),
        ("history", &history_tail(history)),
    ])
}

/// Chat request issued by the fast-mind-only baseline after each macro.
pub fn fmoa_chat_prompt(condition: &str, text: &StateText, history: &CompressedHistory, active: bool) -> String {
    let base = prompts::FMOA.render(&[
        ("guide", &prompts::guide_fast(true)),
        ("condition", condition),
        ("orders", &text.orders_with_time_line()),
        ("items", &text.items_block()),
        ("history", &history.render()),
    ]);
    let ask = if active {
        prompts::FMOA_CHAT_ACTIVE.render(&[])
    } else {
        prompts::FMOA_CHAT_IDLE.render(&[])
    };
    format!("{base}\n\n{ask}")
}

/// Prompt of the no-executor baseline; the continuation is a direction.
pub fn nea_prompt(condition: &ConditionInput, text: &StateText) -> String {
    prompts::NEA.render(&[
        ("guide", &prompts::guide_fast(false)),
        ("positions", &text.positions_block()),
        ("condition", &condition.block()),
    ])
}

pub fn parse_atomic(reply: &str) -> Option<AtomicAction> {
    AtomicAction::parse_token(reply)
}

/// Generates one direction for the no-executor baseline.
pub fn nea_decide(
    condition: &ConditionInput,
    text: &StateText,
    backend: &dyn Backend,
    deadline_ms: u64,
) -> Result<(Option<AtomicAction>, String, f64), GatewayError> {
    let mut req = PromptRequest::new(nea_prompt(condition, text), deadline_ms);
    req.max_tokens = 4;
    let g = backend.generate(&req)?;
    Ok((parse_atomic(&g.text), g.text, g.latency_ms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{snapshot_text, GameConfig, Ingredient, MapSpec, Recipe, AGENT};
    use crate::llm::{FnBackend, Persona, ScriptedMind};

    fn game(script: &[Recipe]) -> GameState {
        let mut cfg = GameConfig::for_map("quick");
        cfg.order_script = script.to_vec();
        GameState::new(cfg, MapSpec::builtin("quick").unwrap()).unwrap()
    }

    #[test]
    fn prefix_forms() {
        let raw = ConditionInput::RawCommand("Chop 3 tomatoes".into());
        let p = build_prompt(&raw, &CompressedHistory::default());
        assert!(p.ends_with("The human's demand is:\nChop 3 tomatoes\n\nMy actions are: "));
        let h = CompressedHistory::compress(&[MacroAction::Chop(Ingredient::Lettuce)]);
        let p2 = build_prompt(&raw, &h);
        assert!(p2.ends_with("My actions are: Chop Lettuce, "));
        assert_eq!(p2, build_prompt(&raw, &h));
        let chat = ConditionInput::SlowChat("Next I will work on Bob Soup.".into());
        assert!(build_prompt(&chat, &h).contains("Your planning:\nNext I will work on Bob Soup."));
    }

    #[test]
    fn hand_evaluated_fusion() {
        let fused = fuse(&[-1.0, -0.5], &[0.5, 0.0], 2.0);
        assert_eq!(fused, vec![0.0, -0.5]);
        assert_eq!(argmax(&fused), Some(0));
        assert_eq!(argmax(&fuse(&[-1.0, -0.5], &[0.5, 0.0], 0.0)), Some(1));
        assert_eq!(argmax(&[0.3, 0.3]), Some(0));
        assert_eq!(argmax(&[]), None);
    }

    #[test]
    fn follows_demand_over_values() {
        let s = game(&[Recipe::Bob, Recipe::Bob]);
        let cond = ConditionInput::InferredIntention("Chop Onion 2 times".into());
        let (t, err) = select_macro(
            &s,
            AGENT,
            &cond,
            &CompressedHistory::default(),
            &FilterParams::default(),
            false,
            &ScriptedMind::new(Persona::Oracle),
            1000,
        )
        .unwrap();
        assert!(err.is_none());
        assert_eq!(t.chosen, MacroAction::Chop(Ingredient::Onion));
        assert_eq!(t.alpha_used, 1.0);
        for c in &t.candidates {
            assert!((c.fused - (c.log_p + t.alpha_used * c.value)).abs() < 1e-12);
        }
    }

    #[test]
    fn satisfied_alpha_lets_values_win() {
        let s = game(&[Recipe::Bob, Recipe::Bob]);
        let cond = ConditionInput::SlowChat("Next I will work on Bob Soup.".into());
        let (t, _) = select_macro(
            &s,
            AGENT,
            &cond,
            &CompressedHistory::default(),
            &FilterParams::default(),
            true,
            &ScriptedMind::new(Persona::Oracle),
            1000,
        )
        .unwrap();
        assert_eq!(t.alpha_used, 4.0);
        assert!(catalog::value(t.chosen, &s) > 0.0);
    }

    #[test]
    fn scoring_error_falls_back_to_values() {
        let failing = FnBackend {
            generate_fn: |_: &PromptRequest| String::new(),
            score_fn: |_: &str, _: &[String]| vec![0.0],
        };
        let s = game(&[Recipe::Bob]);
        let cond = ConditionInput::RawCommand("Chop onions".into());
        let (t, err) = select_macro(
            &s,
            AGENT,
            &cond,
            &CompressedHistory::default(),
            &FilterParams::default(),
            false,
            &failing,
            1000,
        )
        .unwrap();
        assert!(err.is_some());
        assert!(t.fallback);
        let best = t.candidates.iter().map(|c| c.value).fold(f64::MIN, f64::max);
        assert_eq!(catalog::value(t.chosen, &s), best);
    }

    #[test]
    fn fmoa_prompts() {
        let s = game(&[Recipe::Alice]);
        let text = snapshot_text(&s);
        let cond = fmoa_condition(Some("Chop Onion"), Some("What are the orders?"));
        let p = fmoa_prompt(&cond, &text, &CompressedHistory::default());
        assert!(p.ends_with("My actions are: "));
        assert!(p.contains("already been satisfied):\nChop Onion\nThe human's demand is:\nWhat are the orders?"));
        let chat = fmoa_chat_prompt(&cond, &text, &CompressedHistory::default(), true);
        let reply = ScriptedMind::new(Persona::Oracle)
            .generate(&PromptRequest::new(chat, 1000))
            .unwrap();
        assert!(reply.text.contains("Alice Soup"));
    }

    #[test]
    fn nea_parses_directions() {
        let s = game(&[]);
        let text = snapshot_text(&s);
        let cond = ConditionInput::RawCommand("Chop onions".into());
        let (a, raw, _) = nea_decide(&cond, &text, &ScriptedMind::new(Persona::Oracle), 1000).unwrap();
        assert_eq!(a, parse_atomic(&raw));
        assert!(a.is_some());
        assert_eq!(parse_atomic("I go left now"), Some(AtomicAction::Left));
        assert_eq!(parse_atomic("banana"), None);
    }
}
