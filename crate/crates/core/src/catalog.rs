//! The 21 macro actions, their availability and hand-coded utilities.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::env::{GameState, Ingredient, Item, OrderStatus, PlayerId, PotState, Recipe};
use crate::executor;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Verb {
    Chop,
    Mix,
    Cook,
    Plate,
    Serve,
    Putout,
    Drop,
}

impl Verb {
    pub fn name(self) -> &'static str {
        match self {
            Verb::Chop => "Chop",
            Verb::Mix => "Prepare",
            Verb::Cook => "Cook",
            Verb::Plate => "Plate",
            Verb::Serve => "Serve",
            Verb::Putout => "Putout",
            Verb::Drop => "Drop",
        }
    }

    /// Lower bound of the verb's non-zero utility.
    pub fn base_value(self) -> f64 {
        match self {
            Verb::Chop => 0.5,
            Verb::Mix => 0.52,
            Verb::Cook => 0.54,
            Verb::Plate => 0.56,
            Verb::Serve => 0.58,
            Verb::Putout | Verb::Drop => 0.6,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MacroAction {
    Chop(Ingredient),
    Mix(Recipe),
    Cook(Recipe),
    Plate(Recipe),
    Serve(Recipe),
    Putout,
    Drop,
}

/// Catalog order. Ties in selection resolve to the earlier entry.
pub const CATALOG: [MacroAction; 21] = {
    use Ingredient::*;
    use MacroAction::*;
    use Recipe::*;
    [
        Chop(Tomato),
        Chop(Lettuce),
        Chop(Onion),
        Mix(Alice),
        Mix(Bob),
        Mix(Cathy),
        Mix(David),
        Putout,
        Cook(Alice),
        Cook(Bob),
        Cook(Cathy),
        Cook(David),
        Plate(Alice),
        Plate(Bob),
        Plate(Cathy),
        Plate(David),
        Serve(Alice),
        Serve(Bob),
        Serve(Cathy),
        Serve(David),
        Drop,
    ]
};

impl MacroAction {
    pub fn verb(self) -> Verb {
        match self {
            MacroAction::Chop(_) => Verb::Chop,
            MacroAction::Mix(_) => Verb::Mix,
            MacroAction::Cook(_) => Verb::Cook,
            MacroAction::Plate(_) => Verb::Plate,
            MacroAction::Serve(_) => Verb::Serve,
            MacroAction::Putout => Verb::Putout,
            MacroAction::Drop => Verb::Drop,
        }
    }

    pub fn recipe(self) -> Option<Recipe> {
        match self {
            MacroAction::Mix(r) | MacroAction::Cook(r) | MacroAction::Plate(r) | MacroAction::Serve(r) => {
                Some(r)
            }
            _ => None,
        }
    }

    /// Surface form used in prompts and as the scoring candidate.
    pub fn name(self) -> String {
        match self {
            MacroAction::Chop(i) => format!("Chop {i}"),
            MacroAction::Mix(r) => format!("Prepare {r} Ingredients"),
            MacroAction::Cook(r) => format!("Cook {r} Soup"),
            MacroAction::Plate(r) => format!("Plate {r} Soup"),
            MacroAction::Serve(r) => format!("Serve {r} Soup"),
            MacroAction::Putout => "Putout".into(),
            MacroAction::Drop => "Drop".into(),
        }
    }

    pub fn index(self) -> usize {
        CATALOG.iter().position(|m| *m == self).expect("in catalog")
    }

    /// Exact (case and surrounding whitespace insensitive) name match.
    pub fn parse(text: &str) -> Option<MacroAction> {
        let t = text.trim().trim_end_matches('.').trim();
        CATALOG
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(t))
    }
}

impl fmt::Display for MacroAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UtilityAssessment {
    pub action: MacroAction,
    pub available: bool,
    pub value: f64,
}

/// Open orders of `recipe` not already covered by a soup in a pot or on a
/// plate.
pub fn uncovered_orders(state: &GameState, recipe: Recipe) -> usize {
    let open = state
        .orders
        .iter()
        .filter(|o| o.status == OrderStatus::Open && o.soup == recipe)
        .count();
    let in_pots = state
        .pots
        .values()
        .filter(|p| {
            matches!(p, PotState::Cooking { recipe: r, .. } | PotState::Cooked { recipe: r, .. } if *r == recipe)
        })
        .count();
    let plated = all_items(state)
        .filter(|i| *i == Item::PlatedSoup(recipe))
        .count();
    open.saturating_sub(in_pots + plated)
}

/// Every loose item: counters, boards and hands.
fn all_items(state: &GameState) -> impl Iterator<Item = Item> + '_ {
    state
        .items
        .values()
        .copied()
        .chain(state.boards.values().filter_map(|b| b.occupant))
        .chain(state.players.iter().filter_map(|p| p.held))
}

/// Chopped supply of `k` (alone or inside a mixed set) versus what uncooked
/// open orders still need.
pub fn needs_chop(state: &GameState, k: Ingredient) -> bool {
    let demand: usize = Recipe::ALL
        .into_iter()
        .filter(|r| r.contains(k))
        .map(|r| uncovered_orders(state, r))
        .sum();
    let supply = all_items(state)
        .filter(|i| matches!(i, Item::Chopped(_) | Item::Mixed(_)) && i.contains_ingredient(k))
        .count();
    supply < demand
}

fn needs_mix(state: &GameState, r: Recipe) -> bool {
    let mixed = all_items(state).filter(|i| *i == Item::Mixed(r)).count();
    mixed < uncovered_orders(state, r)
}

fn has_open_order(state: &GameState, r: Recipe) -> bool {
    state.open_orders().any(|o| o.soup == r)
}

/// Overcook ratio at which an unordered soup is still worth plating.
pub const PLATE_RISK_THRESHOLD: f64 = 0.5;

pub fn value(action: MacroAction, state: &GameState) -> f64 {
    match action {
        MacroAction::Chop(k) => {
            if needs_chop(state, k) {
                0.5
            } else {
                0.0
            }
        }
        MacroAction::Mix(r) => {
            if needs_mix(state, r) {
                0.52
            } else {
                0.0
            }
        }
        MacroAction::Cook(r) => {
            if uncovered_orders(state, r) > 0 {
                0.54
            } else {
                0.0
            }
        }
        MacroAction::Plate(r) => {
            let risk = state
                .pots
                .values()
                .filter_map(|p| match p {
                    PotState::Cooked { recipe, since_done } if *recipe == r => {
                        Some((since_done / state.config.overcook_time).clamp(0.0, 1.0))
                    }
                    _ => None,
                })
                .fold(0.0_f64, f64::max);
            if has_open_order(state, r) || risk >= PLATE_RISK_THRESHOLD {
                0.56 + 0.44 * risk
            } else {
                0.0
            }
        }
        MacroAction::Serve(r) => state
            .open_orders()
            .filter(|o| o.soup == r)
            .min_by(|a, b| a.issued_at.total_cmp(&b.issued_at).then(a.id.cmp(&b.id)))
            .map(|o| {
                let frac = (o.remaining(state.clock) / o.lifetime()).clamp(0.0, 1.0);
                0.58 + 0.42 * (1.0 - frac)
            })
            .unwrap_or(0.0),
        MacroAction::Putout | MacroAction::Drop => 0.6,
    }
}

/// Whether a completed macro helped, judged on the state at its defining
/// moment (ingredient onto the board, mix into the pot, soup delivered).
pub fn is_valuable(action: MacroAction, state: &GameState) -> bool {
    match action {
        MacroAction::Chop(k) => needs_chop(state, k),
        MacroAction::Mix(r) => needs_mix(state, r),
        MacroAction::Cook(r) => uncovered_orders(state, r) > 0,
        MacroAction::Plate(_) => value(action, state) > 0.0,
        MacroAction::Serve(r) => has_open_order(state, r),
        MacroAction::Putout | MacroAction::Drop => true,
    }
}

/// Actions the executor can start right now, in catalog order.
pub fn enumerate_available(state: &GameState, agent: PlayerId) -> Vec<MacroAction> {
    CATALOG
        .into_iter()
        .filter(|m| executor::ExecutionPlan::begin(*m, state, agent).is_running())
        .collect()
}

pub fn assess(state: &GameState, agent: PlayerId) -> Vec<UtilityAssessment> {
    let available = enumerate_available(state, agent);
    CATALOG
        .into_iter()
        .map(|action| UtilityAssessment {
            action,
            available: available.contains(&action),
            value: value(action, state),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{Cell, GameConfig, MapSpec, AGENT};

    fn game(script: &[Recipe]) -> GameState {
        let mut cfg = GameConfig::default();
        cfg.order_script = script.to_vec();
        GameState::new(cfg, MapSpec::builtin("ring").unwrap()).unwrap()
    }

    #[test]
    fn catalog_has_21_distinct_names() {
        let names: std::collections::BTreeSet<String> = CATALOG.iter().map(|m| m.name()).collect();
        assert_eq!(names.len(), 21);
        for m in CATALOG {
            assert_eq!(MacroAction::parse(&m.name()), Some(m));
        }
        assert_eq!(MacroAction::parse("Chop Potato"), None);
        assert_eq!(CATALOG[3].name(), "Prepare Alice Ingredients");
    }

    #[test]
    fn empty_kitchen_offers_chops_only_among_producers() {
        let s = game(&[Recipe::Alice, Recipe::Bob, Recipe::Cathy]);
        let avail = enumerate_available(&s, AGENT);
        for k in Ingredient::ALL {
            assert!(avail.contains(&MacroAction::Chop(k)));
        }
        assert!(avail.iter().all(|m| !matches!(m.verb(), Verb::Plate | Verb::Serve)));
    }

    #[test]
    fn cooked_pot_enables_plate() {
        let mut s = game(&[Recipe::Alice, Recipe::Bob, Recipe::Cathy]);
        s.pots.insert(
            Cell::new(1, 8),
            PotState::Cooked {
                recipe: Recipe::Alice,
                since_done: 0.0,
            },
        );
        assert!(enumerate_available(&s, AGENT).contains(&MacroAction::Plate(Recipe::Alice)));
        assert_eq!(value(MacroAction::Plate(Recipe::Alice), &s), 0.56);
    }

    #[test]
    fn fire_enables_putout() {
        let mut s = game(&[Recipe::Alice]);
        s.pots.insert(
            Cell::new(2, 8),
            PotState::OnFire {
                recipe: Recipe::Alice,
                extinguish_progress: 0.0,
            },
        );
        let avail = enumerate_available(&s, AGENT);
        assert!(avail.contains(&MacroAction::Putout));
        assert!(avail.contains(&MacroAction::Drop));
    }

    #[test]
    fn values_follow_the_scheme() {
        let s = game(&[Recipe::Alice, Recipe::Bob, Recipe::Cathy]);
        assert_eq!(value(MacroAction::Chop(Ingredient::Onion), &s), 0.5);
        assert_eq!(value(MacroAction::Mix(Recipe::Alice), &s), 0.52);
        assert_eq!(value(MacroAction::Mix(Recipe::David), &s), 0.0);
        assert_eq!(value(MacroAction::Cook(Recipe::Bob), &s), 0.54);
        assert_eq!(value(MacroAction::Serve(Recipe::Cathy), &s), 0.58);
        assert_eq!(value(MacroAction::Serve(Recipe::David), &s), 0.0);
        assert_eq!(value(MacroAction::Plate(Recipe::David), &s), 0.0);
        assert_eq!(value(MacroAction::Putout, &s), 0.6);
        assert_eq!(value(MacroAction::Drop, &s), 0.6);
    }

    #[test]
    fn unordered_plate_needs_overcook_risk() {
        let mut s = game(&[Recipe::Bob, Recipe::Bob, Recipe::Bob]);
        s.config.order_pool = vec![Recipe::Bob];
        let pot = Cell::new(1, 8);
        let cooked = |since_done| PotState::Cooked {
            recipe: Recipe::Alice,
            since_done,
        };
        s.pots.insert(pot, cooked(2.0));
        assert_eq!(value(MacroAction::Plate(Recipe::Alice), &s), 0.0);
        s.pots.insert(pot, cooked(20.0));
        let v = value(MacroAction::Plate(Recipe::Alice), &s);
        assert!((v - (0.56 + 0.44 * 0.8)).abs() < 1e-12);
    }

    #[test]
    fn chop_value_drops_once_supply_covers_demand() {
        let mut s = game(&[Recipe::Alice, Recipe::Bob, Recipe::Bob]);
        s.config.order_pool = vec![Recipe::Bob];
        assert!(needs_chop(&s, Ingredient::Onion));
        s.items.insert(Cell::new(2, 2), Item::Chopped(Ingredient::Onion));
        assert!(!needs_chop(&s, Ingredient::Onion));
        assert!(!is_valuable(MacroAction::Chop(Ingredient::Onion), &s));
        assert!(is_valuable(MacroAction::Chop(Ingredient::Tomato), &s));
    }
}
