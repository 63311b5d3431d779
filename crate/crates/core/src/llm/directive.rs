//! Reading cooking directives ("Chop Onion 2 times") out of free text.
//!
//! The parser is deliberately literal: it knows verbs, vegetables, soups
//! and counts, nothing about context. Context-dependent reading lives in the
//! oracle persona.

use crate::catalog::{MacroAction, Verb};
use crate::env::{Ingredient, Recipe};

/// Count used for open-ended ("always", "keep") requests.
pub const FOREVER: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Directive {
    pub verb: Verb,
    pub ingredient: Option<Ingredient>,
    pub recipe: Option<Recipe>,
    pub count: u32,
}

impl Directive {
    /// The catalog entry this directive asks for, if it names one.
    pub fn macro_action(&self) -> Option<MacroAction> {
        Some(match self.verb {
            Verb::Chop => MacroAction::Chop(self.ingredient?),
            Verb::Mix => MacroAction::Mix(self.recipe?),
            Verb::Cook => MacroAction::Cook(self.recipe?),
            Verb::Plate => MacroAction::Plate(self.recipe?),
            Verb::Serve => MacroAction::Serve(self.recipe?),
            Verb::Putout => MacroAction::Putout,
            Verb::Drop => MacroAction::Drop,
        })
    }

    /// Whether `action` counts toward this directive.
    pub fn matches(&self, action: MacroAction) -> bool {
        if action.verb() != self.verb {
            return false;
        }
        match action {
            MacroAction::Chop(k) => self.ingredient.is_none_or(|i| i == k),
            MacroAction::Putout | MacroAction::Drop => true,
            other => self.recipe.is_none_or(|r| Some(r) == other.recipe()),
        }
    }

    fn object(&self) -> String {
        match self.verb {
            Verb::Chop => match self.ingredient {
                Some(k) => format!("Chop {k}"),
                None => "Chop".into(),
            },
            Verb::Mix => match self.recipe {
                Some(r) => format!("Prepare {r} Ingredients"),
                None => "Prepare Ingredients".into(),
            },
            Verb::Putout | Verb::Drop => self.verb.name().into(),
            v => match self.recipe {
                Some(r) => format!("{} {r} Soup", v.name()),
                None => format!("{} Soup", v.name()),
            },
        }
    }

    /// Canonical text: "Chop Onion 2 times", "Cook Alice Soup once".
    pub fn render(&self) -> String {
        match self.count {
            FOREVER => format!("Always {}, and don't stop", self.object()),
            1 => format!("{} once", self.object()),
            n => format!("{} {n} times", self.object()),
        }
    }
}

pub fn render_all(directives: &[Directive]) -> String {
    directives
        .iter()
        .map(Directive::render)
        .collect::<Vec<_>>()
        .join(" and ")
}

pub fn tokens(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

pub fn verb_of(token: &str) -> Option<Verb> {
    Some(match token {
        "chop" | "chops" | "chopping" | "chopped" | "cut" | "cuts" | "cutting" | "dice"
        | "slice" => Verb::Chop,
        "cook" | "cooks" | "cooking" | "cooked" | "make" => Verb::Cook,
        "prepare" | "prepares" | "preparing" | "mix" | "mixing" => Verb::Mix,
        "plate" | "plates" | "plating" => Verb::Plate,
        "serve" | "serves" | "serving" | "deliver" => Verb::Serve,
        "putout" | "extinguish" => Verb::Putout,
        "drop" | "discard" => Verb::Drop,
        _ => return None,
    })
}

pub fn ingredient_of(token: &str) -> Option<Ingredient> {
    Some(match token {
        "tomato" | "tomatoes" | "tomatos" => Ingredient::Tomato,
        "lettuce" | "lettuces" => Ingredient::Lettuce,
        "onion" | "onions" => Ingredient::Onion,
        _ => return None,
    })
}

pub fn recipe_of(token: &str) -> Option<Recipe> {
    Recipe::ALL
        .into_iter()
        .find(|r| r.name().eq_ignore_ascii_case(token))
}

pub fn number_of(token: &str) -> Option<u32> {
    const WORDS: [&str; 10] = [
        "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten",
    ];
    match token {
        "once" => return Some(1),
        "twice" => return Some(2),
        "thrice" => return Some(3),
        _ => {}
    }
    if let Some(i) = WORDS.iter().position(|w| *w == token) {
        return Some(i as u32 + 1);
    }
    token.parse().ok().filter(|n| (1..=99).contains(n))
}

const LONG_TERM: [&str; 5] = ["always", "keep", "continuously", "focus", "forever"];
const EXCEPT: [&str; 4] = ["except", "without", "besides", "not"];

/// One clause of a message, before any defaults are applied.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Clause {
    pub verb: Option<Verb>,
    pub ingredients: Vec<Ingredient>,
    pub recipes: Vec<Recipe>,
    pub count: Option<u32>,
    pub long_term: bool,
    /// Vegetables named after "except" and the like.
    pub excluded: Vec<Ingredient>,
    pub negated: bool,
}

impl Clause {
    pub fn has_object(&self) -> bool {
        !self.ingredients.is_empty() || !self.recipes.is_empty()
    }
}

fn split_clauses(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for piece in text.split([',', '.', ';', '!', '?', '\n']) {
        let mut current: Vec<&str> = Vec::new();
        for word in piece.split_whitespace() {
            let w = word.to_lowercase();
            if w == "and" || w == "then" {
                if !current.is_empty() {
                    out.push(current.join(" "));
                }
                current.clear();
            } else {
                current.push(word);
            }
        }
        if !current.is_empty() {
            out.push(current.join(" "));
        }
    }
    out
}

pub fn clause_of(text: &str) -> Clause {
    let toks = tokens(text);
    let mut clause = Clause::default();
    for (i, t) in toks.iter().enumerate() {
        if clause.verb.is_none() {
            clause.verb = verb_of(t);
        }
        if EXCEPT.contains(&t.as_str()) {
            clause.negated = true;
        }
        if let Some(k) = ingredient_of(t) {
            let list = if clause.negated {
                &mut clause.excluded
            } else {
                &mut clause.ingredients
            };
            if !list.contains(&k) {
                list.push(k);
            }
        }
        if let Some(r) = recipe_of(t) {
            if !clause.recipes.contains(&r) {
                clause.recipes.push(r);
            }
        }
        if clause.count.is_none() {
            clause.count = number_of(t);
        }
        if LONG_TERM.contains(&t.as_str())
            || (t == "don" && toks.get(i + 2).is_some_and(|n| n == "stop"))
        {
            clause.long_term = true;
        }
    }
    clause
}

pub fn clauses(text: &str) -> Vec<Clause> {
    split_clauses(text).iter().map(|c| clause_of(c)).collect()
}

/// Explicit directives only: a verb with its object, or a verb inherited from
/// the previous clause ("Chop Onion and Tomato"). Plate, Serve, Putout and
/// Drop may stand without an object. "Chop except Tomato" asks for every
/// other vegetable.
pub fn parse(text: &str) -> Vec<Directive> {
    let mut out = Vec::new();
    let mut last_verb = None;
    let mut long_term = false;
    let mut except: Option<(Directive, Vec<Ingredient>)> = None;
    let flush = |out: &mut Vec<Directive>, except: &mut Option<(Directive, Vec<Ingredient>)>| {
        if let Some((base, excluded)) = except.take() {
            out.extend(
                Ingredient::ALL
                    .into_iter()
                    .filter(|k| !excluded.contains(k))
                    .map(|k| Directive {
                        ingredient: Some(k),
                        ..base
                    }),
            );
        }
    };
    for clause in clauses(text) {
        if let Some((_, excluded)) = except.as_mut() {
            if clause.verb.is_none() {
                excluded.extend(clause.ingredients.iter().chain(&clause.excluded));
                continue;
            }
            flush(&mut out, &mut except);
        }
        long_term |= clause.long_term;
        let verb = match clause.verb.or(if clause.has_object() { last_verb } else { None }) {
            Some(v) => v,
            None => continue,
        };
        last_verb = Some(verb);
        let count = if long_term { FOREVER } else { clause.count.unwrap_or(1) };
        let base = Directive {
            verb,
            ingredient: None,
            recipe: None,
            count,
        };
        match verb {
            Verb::Chop if clause.negated && clause.ingredients.is_empty() => {
                except = Some((base, clause.excluded.clone()));
            }
            Verb::Chop => out.extend(clause.ingredients.iter().map(|&k| Directive {
                ingredient: Some(k),
                ..base
            })),
            Verb::Putout | Verb::Drop => out.push(base),
            _ if clause.recipes.is_empty() => {
                if matches!(verb, Verb::Plate | Verb::Serve) {
                    out.push(base);
                }
            }
            _ => out.extend(clause.recipes.iter().map(|&r| Directive {
                recipe: Some(r),
                ..base
            })),
        }
    }
    flush(&mut out, &mut except);
    out
}

/// Reads "Chop Onion × 2, Cook Alice Soup" back into (action, count) pairs.
pub fn parse_history(text: &str) -> Vec<(MacroAction, u32)> {
    text.split(',')
        .filter_map(|entry| {
            let entry = entry.trim();
            let (name, count) = match entry.split_once('×') {
                Some((n, c)) => (n.trim(), c.trim().parse().ok()?),
                None => (entry, 1),
            };
            MacroAction::parse(name).map(|m| (m, count))
        })
        .collect()
}
