//! Rule-based stand-ins for language models. Every answer is a pure function
//! of (persona, prompt text), so runs are reproducible across processes.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::directive::{self, Clause, Directive, FOREVER};
use super::{slot, Backend, CandidateScoreSet, Generation, GatewayError, PromptRequest};
use crate::catalog::{MacroAction, Verb};
use crate::env::{Ingredient, Recipe};
use crate::prompts::ROUND_MARK;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Persona {
    /// Resolves references, hints and anaphora; judges progress honestly.
    Oracle,
    /// Takes messages at face value: no reference or anaphora resolution.
    Literal,
    /// Scores by verb keywords in the demand block only.
    FollowVerb,
    /// Uniform scores and empty replies.
    Silent,
}

impl Persona {
    pub fn parse(name: &str) -> Option<Persona> {
        Some(match name {
            "oracle" => Persona::Oracle,
            "literal" => Persona::Literal,
            "follow-verb" => Persona::FollowVerb,
            "silent" => Persona::Silent,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Persona::Oracle => "oracle",
            Persona::Literal => "literal",
            Persona::FollowVerb => "follow-verb",
            Persona::Silent => "silent",
        }
    }
}

#[derive(Clone, Debug)]
pub struct ScriptedMind {
    pub persona: Persona,
}

impl ScriptedMind {
    pub fn new(persona: Persona) -> Self {
        ScriptedMind { persona }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum PromptKind {
    Intention,
    OneStage,
    Round(u8),
    Casual,
    FmoaChat,
    Nea,
    Unknown,
}

fn prompt_kind(prompt: &str) -> PromptKind {
    let tail = match prompt.rfind(ROUND_MARK) {
        Some(i) => &prompt[i..],
        None => prompt,
    };
    let trimmed = prompt.trim_end();
    if trimmed.ends_with("My action is to move towards") {
        PromptKind::Nea
    } else if tail.contains("Reply with exactly three lines") {
        PromptKind::OneStage
    } else if tail.contains("The human player's message now:") {
        PromptKind::Intention
    } else if tail.contains("Give your action to be carried out next") {
        PromptKind::Round(4)
    } else if tail.contains("Judge whether the player's request") {
        PromptKind::Round(3)
    } else if tail.contains("Generate your chat message to be send") {
        if prompt.contains("Gameplay Rounds:") {
            PromptKind::Round(2)
        } else {
            PromptKind::FmoaChat
        }
    } else if tail.contains("Now give your chat message to be sent to the human.") {
        if prompt.contains("Actions you've done recently:") {
            PromptKind::Casual
        } else {
            PromptKind::FmoaChat
        }
    } else if tail.contains("summarize the actions you've done") {
        PromptKind::Round(1)
    } else {
        PromptKind::Unknown
    }
}

fn orders_in(prompt: &str) -> Vec<Recipe> {
    slot(prompt, "Current soup orders:")
        .map(|line| {
            line.split([',', '\n'])
                .filter_map(|o| o.split_whitespace().next().and_then(directive::recipe_of))
                .collect()
        })
        .unwrap_or_default()
}

fn is_none_text(text: &str) -> bool {
    let t = text.trim().trim_end_matches('.').trim();
    t.is_empty() || t.eq_ignore_ascii_case("none")
}

fn is_question(text: &str) -> bool {
    text.trim_end().ends_with('?')
}

const USELESS: [&str; 7] = [
    "free to do",
    "try your best",
    "never mind",
    "nevermind",
    "enough",
    "do anything",
    "no specific",
];

const WH_WORDS: [&str; 6] = ["what", "which", "how", "where", "when", "who"];

const ANAPHORA: [&str; 6] = ["again", "more", "it", "that", "same", "another"];

const ORDINALS: [(&str, usize); 9] = [
    ("first", 0),
    ("1st", 0),
    ("second", 1),
    ("2nd", 1),
    ("third", 2),
    ("3rd", 2),
    ("fourth", 3),
    ("4th", 3),
    ("last", usize::MAX),
];

/// Looser vegetable matching: prefixes ("toma") and everyday synonyms.
fn fuzzy_ingredient(token: &str) -> Option<Ingredient> {
    if let Some(k) = directive::ingredient_of(token) {
        return Some(k);
    }
    match token {
        "cabbage" | "salad" | "greens" => return Some(Ingredient::Lettuce),
        "shallot" | "shallots" => return Some(Ingredient::Onion),
        _ => {}
    }
    if token.len() >= 4 {
        for k in Ingredient::ALL {
            if k.name().to_lowercase().starts_with(token) {
                return Some(k);
            }
        }
    }
    None
}

fn mentioned_ingredients(tokens: &[String]) -> Vec<Ingredient> {
    let mut out = Vec::new();
    for t in tokens {
        if let Some(k) = fuzzy_ingredient(t) {
            if !out.contains(&k) {
                out.push(k);
            }
        }
    }
    out
}

/// Soups named outright or by initial ("D soup").
fn mentioned_recipes(tokens: &[String]) -> Vec<Recipe> {
    let mut out = Vec::new();
    for (i, t) in tokens.iter().enumerate() {
        let r = directive::recipe_of(t).or_else(|| {
            let next = tokens.get(i + 1).map(String::as_str);
            if t.len() == 1 && matches!(next, Some("soup") | Some("order")) {
                Recipe::ALL
                    .into_iter()
                    .find(|r| r.name()[..1].eq_ignore_ascii_case(t))
            } else {
                None
            }
        });
        if let Some(r) = r {
            if !out.contains(&r) {
                out.push(r);
            }
        }
    }
    out
}

fn order_reference(tokens: &[String], orders: &[Recipe]) -> Option<Recipe> {
    let names_order = tokens.iter().any(|t| {
        matches!(
            t.as_str(),
            "soup" | "soups" | "order" | "orders"
        )
    });
    if !names_order || orders.is_empty() {
        return None;
    }
    tokens.iter().find_map(|t| {
        ORDINALS.iter().find(|(w, _)| w == t).and_then(|&(_, i)| {
            if i == usize::MAX {
                orders.last().copied()
            } else {
                orders.get(i).copied()
            }
        })
    })
}

fn once(verb: Verb, ingredient: Option<Ingredient>, recipe: Option<Recipe>) -> Directive {
    Directive {
        verb,
        ingredient,
        recipe,
        count: 1,
    }
}

/// The oracle's reading of a human message: resolves order references,
/// anaphora against the prior intention, vegetable and soup hints, and
/// passes questions through verbatim.
pub fn oracle_interpret(message: &str, prior: Option<&str>, orders: &[Recipe]) -> String {
    let msg = message.trim();
    let lower = msg.to_lowercase();
    let toks = directive::tokens(msg);
    let clauses = directive::clauses(msg);
    let verb = clauses.iter().find_map(|c| c.verb);
    let any_object = clauses.iter().any(Clause::has_object);
    let count = clauses.iter().find_map(|c| c.count);
    let prior = prior.filter(|p| !is_none_text(p) && !is_question(p));

    if USELESS.iter().any(|u| lower.contains(u)) {
        return "None".into();
    }
    if toks.iter().any(|t| t == "orders")
        && (toks.first().is_some_and(|t| WH_WORDS.contains(&t.as_str()))
            || ["tell", "know", "telling", "list"]
                .iter()
                .any(|w| toks.iter().any(|t| t == w)))
        && order_reference(&toks, orders).is_none()
    {
        return "What are the orders now?".into();
    }
    if toks.first().is_some_and(|t| WH_WORDS.contains(&t.as_str())) {
        return msg.to_string();
    }

    // Anaphora: "Chop it again", "One more please", "Can you do it again?".
    if let Some(prior) = prior {
        let refers = toks.iter().any(|t| ANAPHORA.contains(&t.as_str()));
        if refers && !any_object && order_reference(&toks, orders).is_none() {
            let before = directive::parse(prior);
            if let Some(first) = before.first() {
                let verb = verb.unwrap_or(first.verb);
                let resolved: Vec<Directive> = if verb == first.verb {
                    before
                        .iter()
                        .map(|d| Directive {
                            count: count.unwrap_or(d.count),
                            ..*d
                        })
                        .collect()
                } else if verb == Verb::Chop {
                    // "Chop more" after a soup request: its vegetables.
                    first
                        .recipe
                        .map(|r| {
                            r.ingredients()
                                .iter()
                                .map(|&k| Directive {
                                    count: count.unwrap_or(1),
                                    ..once(Verb::Chop, Some(k), None)
                                })
                                .collect()
                        })
                        .unwrap_or_default()
                } else {
                    vec![Directive {
                        count: count.unwrap_or(1),
                        ..once(verb, None, first.recipe)
                    }]
                };
                if !resolved.is_empty() {
                    return directive::render_all(&resolved);
                }
            }
        }
    }

    if let Some(r) = order_reference(&toks, orders) {
        let verb = match verb {
            Some(Verb::Chop) | None => Verb::Cook,
            Some(v) => v,
        };
        return once(verb, None, Some(r)).render().trim_end_matches(" once").to_string();
    }

    // "Chop but except tomato and lettuce."
    if verb == Some(Verb::Chop)
        && ["except", "without", "besides"]
            .iter()
            .any(|w| toks.iter().any(|t| t == w))
    {
        let excluded = mentioned_ingredients(&toks);
        let rest: Vec<Directive> = Ingredient::ALL
            .into_iter()
            .filter(|k| !excluded.contains(k))
            .map(|k| Directive {
                count: count.unwrap_or(1),
                ..once(Verb::Chop, Some(k), None)
            })
            .collect();
        if !rest.is_empty() {
            return directive::render_all(&rest);
        }
    }

    let explicit = directive::parse(msg);
    if !explicit.is_empty() {
        return directive::render_all(&explicit);
    }

    if verb.is_none() {
        let ks = mentioned_ingredients(&toks);
        if !ks.is_empty() {
            let ds: Vec<_> = ks.into_iter().map(|k| once(Verb::Chop, Some(k), None)).collect();
            return directive::render_all(&ds);
        }
        let rs = mentioned_recipes(&toks);
        if !rs.is_empty() && !is_question(msg) {
            let ds: Vec<_> = rs.into_iter().map(|r| once(Verb::Cook, None, Some(r))).collect();
            return directive::render_all(&ds);
        }
    }

    if clauses.iter().any(|c| c.long_term) && !is_question(msg) {
        let body = msg.trim_end_matches(['.', '!']);
        let mut chars = body.chars();
        let body = match chars.next() {
            Some(c) => c.to_lowercase().chain(chars).collect::<String>(),
            None => String::new(),
        };
        return format!("Always {body}, and don't stop.");
    }
    if is_question(msg) {
        return msg.to_string();
    }
    "None".into()
}

/// Whether `history` (compressed text) fulfils `intention`.
fn judge(intention: &str, history: &str) -> bool {
    if is_none_text(intention) || is_question(intention) {
        return true;
    }
    let wanted = directive::parse(intention);
    if wanted.is_empty() || wanted.iter().any(|d| d.count == FOREVER) {
        return false;
    }
    let mut done: Vec<(MacroAction, u32)> = directive::parse_history(history);
    wanted.iter().all(|d| {
        let mut need = d.count;
        for (m, n) in done.iter_mut() {
            if d.matches(*m) {
                let take = need.min(*n);
                *n -= take;
                need -= take;
            }
        }
        need == 0
    })
}

fn recipe_text(r: Recipe) -> String {
    let parts: Vec<&str> = r.ingredients().iter().map(|k| k.name()).collect();
    format!("{r} Soup needs chopped {}.", parts.join(" and "))
}

fn answer_question(question: &str, orders_line: Option<&str>) -> String {
    let toks = directive::tokens(question);
    if toks.iter().any(|t| t == "orders" || t == "order") {
        return match orders_line {
            Some(line) if !line.is_empty() => format!("The orders are {line}."),
            _ => "There are no orders right now.".into(),
        };
    }
    if let Some(r) = mentioned_recipes(&toks).first() {
        return recipe_text(*r);
    }
    "Good question, I will keep cooking with you.".into()
}

fn progress_chat(intention: &str, done: bool) -> String {
    let what = intention.trim().trim_end_matches('.');
    if done {
        format!("Done! I finished {what}.")
    } else {
        format!("On it! I will {}.", what.to_lowercase())
    }
}

fn casual_chat(orders: &[Recipe]) -> String {
    match orders.first() {
        Some(r) => format!("Next I will work on {r} Soup."),
        None => "All orders are done for now.".into(),
    }
}

/// How many more chopped `k` the listed orders need, judging by the items
/// block: chopped or prepared stock and soups already in pots count as cover.
fn chop_deficit(k: Ingredient, orders: &[Recipe], items: &str) -> i64 {
    let mut covered: Vec<Recipe> = Vec::new();
    let mut stock = 0i64;
    for line in items.lines() {
        let line = line.trim();
        if let Some(rest) = line.split_once(": ").map(|(_, r)| r) {
            for entry in rest.split(", ") {
                let (name, n) = match entry.rsplit_once(" x") {
                    Some((name, n)) => (name, n.parse::<i64>().unwrap_or(1)),
                    None => (entry, 1),
                };
                let toks = directive::tokens(name);
                let cooking = toks.iter().any(|t| t == "cooking" || t == "cooked");
                let recipe = toks.iter().find_map(|t| directive::recipe_of(t));
                match recipe {
                    Some(r) if cooking => covered.push(r),
                    Some(r) if toks.iter().any(|t| t == "ingredients") && r.contains(k) => stock += n,
                    _ if toks.first().is_some_and(|t| t == "chopped")
                        && toks.iter().any(|t| directive::ingredient_of(t) == Some(k)) =>
                    {
                        stock += n
                    }
                    _ => {}
                }
            }
        }
    }
    let mut demand = 0i64;
    for r in orders {
        if let Some(i) = covered.iter().position(|c| c == r) {
            covered.remove(i);
        } else if r.contains(k) {
            demand += 1;
        }
    }
    demand - stock
}

/// Picks a SMOA action the way the instruction asks: serve, plate and cook
/// first, then prepare, then chop what the orders still lack.
fn pick_smoa(
    available: &[MacroAction],
    intention: &str,
    history: &str,
    orders: &[Recipe],
    items: &str,
) -> Option<MacroAction> {
    if !judge(intention, history) {
        let plan = ChainPlan::new(intention, &directive::parse_history(history));
        for want in plan.remaining.iter() {
            if let Some(m) = available.iter().find(|m| want.matches(**m)) {
                return Some(*m);
            }
        }
    }
    let rank = |m: &MacroAction| -> i32 {
        let ordered = m.recipe().is_some_and(|r| orders.contains(&r));
        match m {
            MacroAction::Putout | MacroAction::Drop => 0,
            MacroAction::Serve(_) if ordered => 1,
            MacroAction::Plate(_) if ordered => 2,
            MacroAction::Cook(_) if ordered => 3,
            MacroAction::Mix(_) if ordered => 4,
            MacroAction::Chop(k) if chop_deficit(*k, orders, items) > 0 => 5,
            _ => 9,
        }
    };
    let deficit = |m: &MacroAction| match m {
        MacroAction::Chop(k) => -chop_deficit(*k, orders, items),
        _ => 0,
    };
    available.iter().min_by_key(|m| (rank(m), deficit(m), m.index())).copied()
}

/// Steps toward a demand, minus what the history already covers.
struct ChainPlan {
    remaining: Vec<Directive>,
}

impl ChainPlan {
    fn unit(d: &Directive) -> Vec<Directive> {
        let single = Directive { count: 1, ..*d };
        let chops = |r: Recipe| -> Vec<Directive> {
            r.ingredients()
                .iter()
                .map(|&k| once(Verb::Chop, Some(k), None))
                .collect()
        };
        match (d.verb, d.recipe) {
            (Verb::Mix, Some(r)) => {
                let mut v = chops(r);
                v.push(single);
                v
            }
            (Verb::Cook, Some(r)) => {
                let mut v = chops(r);
                v.push(once(Verb::Mix, None, Some(r)));
                v.push(single);
                v
            }
            _ => vec![single],
        }
    }

    fn new(demand: &str, history: &[(MacroAction, u32)]) -> ChainPlan {
        let mut done: Vec<MacroAction> = history
            .iter()
            .flat_map(|&(m, n)| std::iter::repeat_n(m, n as usize))
            .collect();
        let mut remaining = Vec::new();
        for d in directive::parse(demand) {
            let unit = ChainPlan::unit(&d);
            let reps = if d.count == FOREVER {
                let final_step = *unit.last().expect("non-empty unit");
                done.iter().filter(|m| final_step.matches(**m)).count() as u32 + 1
            } else {
                d.count
            };
            for _ in 0..reps {
                for step in &unit {
                    match done.iter().position(|m| step.matches(*m)) {
                        Some(i) => {
                            done.remove(i);
                        }
                        None => remaining.push(*step),
                    }
                }
            }
        }
        ChainPlan { remaining }
    }
}

fn demand_of(prefix: &str) -> Option<&str> {
    slot(prefix, "The human's demand is:").or_else(|| slot(prefix, "Your planning:"))
}

fn history_of(prefix: &str) -> &str {
    match prefix.rfind("My actions are:") {
        Some(i) => prefix[i + "My actions are:".len()..].trim().trim_end_matches(','),
        None => "",
    }
}

fn directed_scores(prefix: &str, candidates: &[String]) -> Vec<f64> {
    let n = candidates.len().max(1) as f64;
    let uniform = vec![(1.0 / n).ln(); candidates.len()];
    let Some(demand) = demand_of(prefix) else {
        return uniform;
    };
    let plan = ChainPlan::new(demand, &directive::parse_history(history_of(prefix)));
    let Some(next) = plan.remaining.first() else {
        return uniform;
    };
    candidates
        .iter()
        .map(|c| match MacroAction::parse(c) {
            Some(m) if next.matches(m) => 0.7f64.ln(),
            Some(m) if plan.remaining.iter().any(|d| d.matches(m)) => 0.2f64.ln(),
            _ => 0.1f64.ln(),
        })
        .collect()
}

fn verb_scores(prefix: &str, candidates: &[String]) -> Vec<f64> {
    let n = candidates.len().max(1) as f64;
    let demand = demand_of(prefix).unwrap_or("");
    let verbs: Vec<Verb> = directive::tokens(demand)
        .iter()
        .filter_map(|t| directive::verb_of(t))
        .collect();
    let hits: Vec<bool> = candidates
        .iter()
        .map(|c| MacroAction::parse(c).is_some_and(|m| verbs.contains(&m.verb())))
        .collect();
    let k = hits.iter().filter(|h| **h).count();
    if k == 0 {
        return vec![(1.0 / n).ln(); candidates.len()];
    }
    hits.iter()
        .map(|&h| if h { (1.0 / k as f64).ln() } else { -1e9 })
        .collect()
}

fn nea_move(prompt: &str) -> &'static str {
    let d = Sha256::digest(prompt.as_bytes());
    ["left", "right", "up", "down"][(d[0] % 4) as usize]
}

impl ScriptedMind {
    fn reply(&self, prompt: &str) -> String {
        if self.persona == Persona::Silent {
            return String::new();
        }
        let literal = self.persona != Persona::Oracle;
        let orders = orders_in(prompt);
        match prompt_kind(prompt) {
            PromptKind::Intention | PromptKind::OneStage => {
                let message = slot(prompt, "The human player's message now:").unwrap_or("");
                let prior = slot(prompt, "The human player's intention in the last round (which has already been satisfied):");
                let intention = if literal {
                    message.to_string()
                } else {
                    oracle_interpret(message, prior, &orders)
                };
                if prompt_kind(prompt) == PromptKind::Intention {
                    return intention;
                }
                let history = slot(prompt, "Actions you've done since the human gave the message:").unwrap_or("");
                let done = judge(&intention, history);
                let chat = if is_question(&intention) {
                    answer_question(&intention, slot(prompt, "Current soup orders:"))
                } else if is_none_text(&intention) {
                    casual_chat(&orders)
                } else {
                    progress_chat(&intention, done)
                };
                format!(
                    "Intention: {intention}\nChat: {chat}\nSatisfied: {}",
                    if done { "Yes" } else { "No" }
                )
            }
            PromptKind::Round(round) => {
                let intention = slot(prompt, "The human player's incoming message:").unwrap_or("None");
                let history = slot(prompt, "Actions you've done since the human gave the message:").unwrap_or("None");
                let done = judge(intention, history);
                match round {
                    1 => {
                        if is_none_text(history) {
                            "I have not done anything for it yet.".into()
                        } else {
                            format!("I have done {history}.")
                        }
                    }
                    2 => {
                        if is_question(intention) {
                            answer_question(intention, slot(prompt, "Current soup orders:"))
                        } else if is_none_text(intention) {
                            casual_chat(&orders)
                        } else {
                            progress_chat(intention, done)
                        }
                    }
                    3 => if done { "Yes" } else { "No" }.into(),
                    _ => {
                        let listed = prompt
                            .rfind("Select it from [")
                            .and_then(|i| {
                                let rest = &prompt[i + "Select it from [".len()..];
                                rest.find(']').map(|j| &rest[..j])
                            })
                            .unwrap_or("");
                        let available: Vec<MacroAction> =
                            listed.split(',').filter_map(MacroAction::parse).collect();
                        pick_smoa(&available, intention, history, &orders, slot(prompt, "Items on the map:").unwrap_or(""))
                            .map(|m| m.name())
                            .unwrap_or_default()
                    }
                }
            }
            PromptKind::Casual => casual_chat(&orders),
            PromptKind::FmoaChat => {
                let demand = slot(prompt, "The human's demand is:").unwrap_or("None");
                if is_question(demand) {
                    answer_question(demand, slot(prompt, "Current soup orders:"))
                } else if is_none_text(demand) || !prompt.contains("The human's demand is:") {
                    casual_chat(&orders)
                } else {
                    format!("On it! Working on: {}", demand.trim_end_matches('.'))
                }
            }
            PromptKind::Nea => nea_move(prompt).into(),
            PromptKind::Unknown => String::new(),
        }
    }
}

impl Backend for ScriptedMind {
    fn describe(&self) -> String {
        format!("scripted:{}", self.persona.name())
    }

    fn generate(&self, request: &PromptRequest) -> Result<Generation, GatewayError> {
        Ok(Generation {
            text: self.reply(&request.text),
            latency_ms: 0.0,
        })
    }

    fn score_candidates(
        &self,
        prefix: &str,
        candidates: &[String],
        _deadline_ms: u64,
    ) -> Result<CandidateScoreSet, GatewayError> {
        let n = candidates.len().max(1) as f64;
        let log_probs = match self.persona {
            Persona::Oracle | Persona::Literal => directed_scores(prefix, candidates),
            Persona::FollowVerb => verb_scores(prefix, candidates),
            Persona::Silent => vec![(1.0 / n).ln(); candidates.len()],
        };
        Ok(CandidateScoreSet {
            prefix: prefix.to_string(),
            candidates: candidates.to_vec(),
            log_probs,
            latency_ms: 0.0,
        })
    }
}
