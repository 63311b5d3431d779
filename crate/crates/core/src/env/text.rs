use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::state::{GameState, PotState, AGENT, HUMAN};
use super::types::{Cell, Item, TileKind};

/// Prompt-ready descriptions of a snapshot. Every list has a fixed order
/// (orders by issue, cells by row then column) so identical states render
/// identical text.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateText {
    /// "Alice Soup", oldest first.
    pub orders: Vec<String>,
    /// "Alice Soup with plenty of time", oldest first.
    pub orders_with_time: Vec<String>,
    /// Sources, pots, occupied boards, counter items and held items.
    pub items: Vec<String>,
    /// Item positions in (x, y) form for the no-executor prompt.
    pub item_positions: Vec<String>,
    pub player_positions: Vec<String>,
}

impl StateText {
    pub fn orders_line(&self) -> String {
        self.orders.join(", ")
    }

    pub fn orders_with_time_line(&self) -> String {
        self.orders_with_time.join(", ")
    }

    pub fn items_block(&self) -> String {
        self.items.join("\n")
    }

    pub fn positions_block(&self) -> String {
        let mut lines = self.item_positions.clone();
        lines.extend(self.player_positions.iter().cloned());
        lines.join("\n")
    }
}

pub fn time_phrase(remaining: f64) -> &'static str {
    if remaining >= 40.0 {
        "plenty of time"
    } else if remaining >= 20.0 {
        "some time"
    } else if remaining >= 10.0 {
        "little time"
    } else {
        "almost no time"
    }
}

fn xy(state: &GameState, cell: Cell) -> String {
    format!("({}, {})", cell.col, state.map.height - 1 - cell.row)
}

fn pot_line(state: &GameState, index: usize, pot: &PotState) -> String {
    let cfg = &state.config;
    let body = match *pot {
        PotState::Empty => "empty".to_string(),
        PotState::Cooking { recipe, elapsed } => format!(
            "cooking {recipe} Soup, {:.0} seconds left",
            (cfg.cook_time - elapsed).max(0.0).ceil()
        ),
        PotState::Cooked { recipe, since_done } => format!(
            "cooked {recipe} Soup, {:.0} seconds before it burns",
            (cfg.overcook_time - since_done).max(0.0).ceil()
        ),
        PotState::OnFire { .. } => "on fire".to_string(),
        PotState::CharredOccupied { .. } => "charred soup".to_string(),
    };
    format!("Pot {}: {body}", index + 1)
}

fn source_name(kind: TileKind) -> Option<&'static str> {
    Some(match kind {
        TileKind::TomatoSource => "Tomato source",
        TileKind::LettuceSource => "Lettuce source",
        TileKind::OnionSource => "Onion source",
        TileKind::PlateSource => "Plate source",
        TileKind::ExtinguisherStand => "Fire Extinguisher",
        TileKind::ChopBoard => "Chop board",
        TileKind::Delivery => "Serving area",
        TileKind::TrashBin => "Trash bin",
        _ => return None,
    })
}

pub fn snapshot_text(state: &GameState) -> StateText {
    let open: Vec<_> = state.open_orders().collect();
    let orders = open.iter().map(|o| format!("{} Soup", o.soup)).collect();
    let orders_with_time = open
        .iter()
        .map(|o| {
            format!(
                "{} Soup with {}",
                o.soup,
                time_phrase(o.remaining(state.clock))
            )
        })
        .collect();

    let mut items = Vec::new();
    let mut sources: Vec<&str> = Vec::new();
    for kind in [
        TileKind::TomatoSource,
        TileKind::LettuceSource,
        TileKind::OnionSource,
        TileKind::PlateSource,
        TileKind::ExtinguisherStand,
    ] {
        if !state.map.cells_of(kind).is_empty() {
            sources.push(source_name(kind).unwrap());
        }
    }
    items.push(format!("Sources: {}", sources.join(", ")));
    for (i, (_, pot)) in state.pots.iter().enumerate() {
        items.push(pot_line(state, i, pot));
    }
    for (i, (_, board)) in state.boards.iter().enumerate() {
        match board.occupant {
            Some(Item::Raw(k)) => items.push(format!(
                "Chop board {}: Fresh {k}, chopped {}/{}",
                i + 1,
                board.progress,
                state.config.chop_interactions
            )),
            Some(item) => items.push(format!("Chop board {}: {}", i + 1, item.label())),
            None => {}
        }
    }
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for item in state.items.values() {
        *counts.entry(item.label()).or_default() += 1;
    }
    if !counts.is_empty() {
        let listed: Vec<String> = counts.iter().map(|(k, n)| format!("{k} x{n}")).collect();
        items.push(format!("On counters: {}", listed.join(", ")));
    }
    if let Some(item) = state.players[AGENT].held {
        items.push(format!("You are holding: {}", item.label()));
    }
    if let Some(item) = state.players[HUMAN].held {
        items.push(format!("The human is holding: {}", item.label()));
    }

    let mut item_positions = Vec::new();
    for cell in state.map.cells() {
        let kind = state.tile(cell);
        if kind == TileKind::Pot {
            continue;
        }
        if let Some(name) = source_name(kind) {
            item_positions.push(format!("{name} at {}", xy(state, cell)));
        }
    }
    for (i, (cell, pot)) in state.pots.iter().enumerate() {
        let line = pot_line(state, i, pot);
        item_positions.push(format!("{line}, at {}", xy(state, *cell)));
    }
    for (cell, item) in &state.items {
        item_positions.push(format!("{} at {}", item.label(), xy(state, *cell)));
    }
    let describe = |who: &str, id: usize| {
        let p = &state.players[id];
        match p.held {
            Some(item) => format!("{who} at {}, holding {}", xy(state, p.position), item.label()),
            None => format!("{who} at {}, holding nothing", xy(state, p.position)),
        }
    };
    let player_positions = vec![describe("You are", AGENT), describe("The human is", HUMAN)];

    StateText {
        orders,
        orders_with_time,
        items,
        item_positions,
        player_positions,
    }
}
