use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::GameConfig;
use super::map::MapSpec;
use super::types::{AtomicAction, Cell, Ingredient, Item, Recipe, TileKind};
use super::EnvError;

/// Timer values are kept on a 1 ns grid so that sums like 14.6 + 0.4 land
/// exactly on thresholds.
pub(crate) fn snap(t: f64) -> f64 {
    (t * 1e9).round() / 1e9
}

const EPS: f64 = 1e-9;

pub type PlayerId = usize;
pub const HUMAN: PlayerId = 0;
pub const AGENT: PlayerId = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Player {
    pub position: Cell,
    pub held: Option<Item>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum PotState {
    Empty,
    Cooking { recipe: Recipe, elapsed: f64 },
    Cooked { recipe: Recipe, since_done: f64 },
    OnFire { recipe: Recipe, extinguish_progress: f64 },
    CharredOccupied { recipe: Recipe },
}

impl PotState {
    pub fn phase_rank(&self) -> u8 {
        match self {
            PotState::Empty => 0,
            PotState::Cooking { .. } => 1,
            PotState::Cooked { .. } => 2,
            PotState::OnFire { .. } => 3,
            PotState::CharredOccupied { .. } => 4,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ChopBoard {
    pub occupant: Option<Item>,
    pub progress: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OrderStatus {
    Open,
    Served,
    Expired,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Order {
    pub id: u64,
    pub soup: Recipe,
    pub issued_at: f64,
    pub deadline: f64,
    pub reward: i32,
    pub penalty: i32,
    pub status: OrderStatus,
}

impl Order {
    pub fn remaining(&self, clock: f64) -> f64 {
        (self.deadline - clock).max(0.0)
    }

    pub fn lifetime(&self) -> f64 {
        self.deadline - self.issued_at
    }
}

/// Every state-changing effect of a tick.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event")]
pub enum GameEvent {
    Moved { player: PlayerId, to: Cell },
    Dispensed { player: PlayerId, cell: Cell, item: Item },
    Returned { player: PlayerId, cell: Cell, item: Item },
    PickedUp { player: PlayerId, cell: Cell, item: Item },
    Placed { player: PlayerId, cell: Cell, item: Item },
    Combined { player: PlayerId, cell: Cell, result: Item },
    IngredientOnBoard { player: PlayerId, cell: Cell, ingredient: Ingredient },
    ChopProgress { player: PlayerId, cell: Cell, progress: u32 },
    ChopCompleted { player: PlayerId, cell: Cell, ingredient: Ingredient },
    CookStarted { player: PlayerId, cell: Cell, recipe: Recipe },
    SoupCooked { cell: Cell, recipe: Recipe },
    PotCaughtFire { cell: Cell, recipe: Recipe },
    ExtinguishProgress { player: PlayerId, cell: Cell, progress: f64 },
    FireExtinguished { player: PlayerId, cell: Cell },
    SoupPlated { player: PlayerId, cell: Cell, recipe: Recipe },
    CharredPlated { player: PlayerId, cell: Cell },
    SoupServed { player: PlayerId, order_id: u64, recipe: Recipe, reward: i32 },
    DeliveryRefused { player: PlayerId, recipe: Recipe },
    Trashed { player: PlayerId, item: Item },
    OrderIssued { order_id: u64, recipe: Recipe, deadline: f64 },
    OrderExpired { order_id: u64, recipe: Recipe, penalty: i32 },
}

impl GameEvent {
    pub fn player(&self) -> Option<PlayerId> {
        use GameEvent::*;
        match self {
            Moved { player, .. }
            | Dispensed { player, .. }
            | Returned { player, .. }
            | PickedUp { player, .. }
            | Placed { player, .. }
            | Combined { player, .. }
            | IngredientOnBoard { player, .. }
            | ChopProgress { player, .. }
            | ChopCompleted { player, .. }
            | CookStarted { player, .. }
            | ExtinguishProgress { player, .. }
            | FireExtinguished { player, .. }
            | SoupPlated { player, .. }
            | CharredPlated { player, .. }
            | SoupServed { player, .. }
            | DeliveryRefused { player, .. }
            | Trashed { player, .. } => Some(*player),
            SoupCooked { .. } | PotCaughtFire { .. } | OrderIssued { .. } | OrderExpired { .. } => {
                None
            }
        }
    }
}

mod cell_map {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::env::types::Cell;

    pub fn serialize<S: Serializer, V: Serialize>(
        map: &BTreeMap<Cell, V>,
        s: S,
    ) -> Result<S::Ok, S::Error> {
        s.collect_seq(map.iter())
    }

    pub fn deserialize<'de, D: Deserializer<'de>, V: Deserialize<'de>>(
        d: D,
    ) -> Result<BTreeMap<Cell, V>, D::Error> {
        let pairs: Vec<(Cell, V)> = Vec::deserialize(d)?;
        Ok(pairs.into_iter().collect())
    }
}

/// Full world snapshot. Exactly one owner mutates it; everyone else gets
/// clones.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameState {
    pub config: GameConfig,
    pub map: MapSpec,
    pub players: [Player; 2],
    /// Items resting on counter cells.
    #[serde(with = "cell_map")]
    pub items: BTreeMap<Cell, Item>,
    #[serde(with = "cell_map")]
    pub pots: BTreeMap<Cell, PotState>,
    #[serde(with = "cell_map")]
    pub boards: BTreeMap<Cell, ChopBoard>,
    /// Every order ever issued, oldest first.
    pub orders: Vec<Order>,
    pub clock: f64,
    pub tick: u64,
    pub score: i32,
    next_order_id: u64,
    script_cursor: usize,
    rng: ChaCha8Rng,
}

impl GameState {
    pub fn new(config: GameConfig, map: MapSpec) -> Result<GameState, EnvError> {
        config.validate()?;
        map.validate()?;
        let pots = map
            .cells_of(TileKind::Pot)
            .into_iter()
            .map(|c| (c, PotState::Empty))
            .collect();
        let boards = map
            .cells_of(TileKind::ChopBoard)
            .into_iter()
            .map(|c| (c, ChopBoard::default()))
            .collect();
        let players = [
            Player {
                position: map.spawns[0],
                held: None,
            },
            Player {
                position: map.spawns[1],
                held: None,
            },
        ];
        let rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
        let mut state = GameState {
            config,
            map,
            players,
            items: BTreeMap::new(),
            pots,
            boards,
            orders: Vec::new(),
            clock: 0.0,
            tick: 0,
            score: 0,
            next_order_id: 0,
            script_cursor: 0,
            rng,
        };
        let mut events = Vec::new();
        for _ in 0..state.config.concurrent_orders {
            state.spawn_order(&mut events);
        }
        Ok(state)
    }

    pub fn is_over(&self) -> bool {
        self.clock >= self.config.game_duration - EPS
    }

    pub fn open_orders(&self) -> impl Iterator<Item = &Order> {
        self.orders.iter().filter(|o| o.status == OrderStatus::Open)
    }

    pub fn tile(&self, cell: Cell) -> TileKind {
        self.map.tile(cell)
    }

    pub fn player_at(&self, cell: Cell) -> Option<PlayerId> {
        self.players.iter().position(|p| p.position == cell)
    }

    pub fn free_counters(&self) -> impl Iterator<Item = Cell> + '_ {
        self.map
            .cells()
            .filter(|c| self.tile(*c) == TileKind::Counter && !self.items.contains_key(c))
    }

    /// One tick: both players act (player 0 first), then timers advance by
    /// one tick length.
    pub fn step(&self, actions: [AtomicAction; 2]) -> Result<(GameState, Vec<GameEvent>), EnvError> {
        let mut next = self.clone();
        let events = next.step_mut(actions)?;
        Ok((next, events))
    }

    pub fn step_mut(&mut self, actions: [AtomicAction; 2]) -> Result<Vec<GameEvent>, EnvError> {
        if self.is_over() {
            return Err(EnvError::GameOver);
        }
        let mut events = Vec::new();
        let dt = self.config.tick_seconds();
        for (player, action) in actions.into_iter().enumerate() {
            self.apply_action(player, action, dt, &mut events);
        }
        self.advance_timers(dt, &mut events);
        self.tick += 1;
        Ok(events)
    }

    /// Advances timers as if both players idled for `dt` seconds, in
    /// tick-sized slices.
    pub fn advance_time_only(&self, dt: f64) -> GameState {
        let mut next = self.clone();
        next.advance_time_mut(dt);
        next
    }

    pub fn advance_time_mut(&mut self, dt: f64) -> Vec<GameEvent> {
        let mut events = Vec::new();
        let tick = self.config.tick_seconds();
        let mut remaining = snap(dt.max(0.0));
        while remaining > EPS {
            let slice = remaining.min(tick);
            self.advance_timers(slice, &mut events);
            remaining = snap(remaining - slice);
        }
        events
    }

    pub fn state_hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("state serializes");
        let digest = Sha256::digest(&bytes);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    fn apply_action(
        &mut self,
        player: PlayerId,
        action: AtomicAction,
        dt: f64,
        events: &mut Vec<GameEvent>,
    ) {
        if action == AtomicAction::Noop {
            return;
        }
        let from = self.players[player].position;
        let Some(target) = from.step(action).filter(|c| self.map.in_bounds(*c)) else {
            return;
        };
        if self.tile(target).is_walkable() {
            if self.player_at(target).is_none() {
                self.players[player].position = target;
                events.push(GameEvent::Moved { player, to: target });
            }
        } else {
            self.interact(player, target, dt, events);
        }
    }

    fn interact(&mut self, player: PlayerId, cell: Cell, dt: f64, events: &mut Vec<GameEvent>) {
        let held = self.players[player].held;
        match self.tile(cell) {
            TileKind::Floor => {}
            TileKind::Counter => match (held, self.items.get(&cell).copied()) {
                (Some(Item::CharredSoupPlated), None) => {}
                (Some(item), None) => {
                    self.items.insert(cell, item);
                    self.players[player].held = None;
                    events.push(GameEvent::Placed { player, cell, item });
                }
                (None, Some(item)) => {
                    self.items.remove(&cell);
                    self.players[player].held = Some(item);
                    events.push(GameEvent::PickedUp { player, cell, item });
                }
                (Some(h), Some(on)) => {
                    if let Some(result) = h.combine(on) {
                        self.items.insert(cell, result);
                        self.players[player].held = None;
                        events.push(GameEvent::Combined { player, cell, result });
                    }
                }
                (None, None) => {}
            },
            kind @ (TileKind::TomatoSource | TileKind::LettuceSource | TileKind::OnionSource) => {
                let ingredient = kind.source_of().expect("source tile");
                self.dispense_or_return(player, cell, Item::Raw(ingredient), events);
            }
            TileKind::PlateSource => self.dispense_or_return(player, cell, Item::Plate, events),
            TileKind::ExtinguisherStand => {
                self.dispense_or_return(player, cell, Item::FireExtinguisher, events)
            }
            TileKind::ChopBoard => {
                let chop_needed = self.config.chop_interactions;
                let board = self.boards.entry(cell).or_default();
                match (held, board.occupant) {
                    (Some(Item::Raw(ingredient)), None) => {
                        board.occupant = Some(Item::Raw(ingredient));
                        board.progress = 0;
                        self.players[player].held = None;
                        events.push(GameEvent::IngredientOnBoard { player, cell, ingredient });
                    }
                    (None, Some(Item::Raw(ingredient))) => {
                        board.progress += 1;
                        events.push(GameEvent::ChopProgress {
                            player,
                            cell,
                            progress: board.progress,
                        });
                        if board.progress >= chop_needed {
                            board.occupant = Some(Item::Chopped(ingredient));
                            events.push(GameEvent::ChopCompleted { player, cell, ingredient });
                        }
                    }
                    (None, Some(item @ Item::Chopped(_))) => {
                        board.occupant = None;
                        board.progress = 0;
                        self.players[player].held = Some(item);
                        events.push(GameEvent::PickedUp { player, cell, item });
                    }
                    _ => {}
                }
            }
            TileKind::Pot => {
                let putout = self.config.putout_time;
                let pot = self.pots.entry(cell).or_insert(PotState::Empty);
                match (*pot, held) {
                    (PotState::Empty, Some(Item::Mixed(recipe))) => {
                        *pot = PotState::Cooking { recipe, elapsed: 0.0 };
                        self.players[player].held = None;
                        events.push(GameEvent::CookStarted { player, cell, recipe });
                    }
                    (PotState::Cooked { recipe, .. }, Some(Item::Plate)) => {
                        *pot = PotState::Empty;
                        self.players[player].held = Some(Item::PlatedSoup(recipe));
                        events.push(GameEvent::SoupPlated { player, cell, recipe });
                    }
                    (
                        PotState::OnFire {
                            recipe,
                            extinguish_progress,
                        },
                        Some(Item::FireExtinguisher),
                    ) => {
                        let progress = snap(extinguish_progress + dt);
                        events.push(GameEvent::ExtinguishProgress { player, cell, progress });
                        if progress >= putout - EPS {
                            *pot = PotState::CharredOccupied { recipe };
                            events.push(GameEvent::FireExtinguished { player, cell });
                        } else {
                            *pot = PotState::OnFire {
                                recipe,
                                extinguish_progress: progress,
                            };
                        }
                    }
                    (PotState::CharredOccupied { .. }, Some(Item::Plate)) => {
                        *pot = PotState::Empty;
                        self.players[player].held = Some(Item::CharredSoupPlated);
                        events.push(GameEvent::CharredPlated { player, cell });
                    }
                    _ => {}
                }
            }
            TileKind::Delivery => {
                if let Some(Item::PlatedSoup(recipe)) = held {
                    let oldest = self
                        .orders
                        .iter_mut()
                        .filter(|o| o.status == OrderStatus::Open && o.soup == recipe)
                        .min_by(|a, b| a.issued_at.total_cmp(&b.issued_at).then(a.id.cmp(&b.id)));
                    match oldest {
                        Some(order) => {
                            order.status = OrderStatus::Served;
                            let (order_id, reward) = (order.id, order.reward);
                            self.score += reward;
                            self.players[player].held = None;
                            events.push(GameEvent::SoupServed {
                                player,
                                order_id,
                                recipe,
                                reward,
                            });
                            self.spawn_order(events);
                        }
                        None => events.push(GameEvent::DeliveryRefused { player, recipe }),
                    }
                }
            }
            TileKind::TrashBin => {
                if let Some(item) = held.filter(|i| *i != Item::FireExtinguisher) {
                    self.players[player].held = None;
                    events.push(GameEvent::Trashed { player, item });
                }
            }
        }
    }

    fn dispense_or_return(
        &mut self,
        player: PlayerId,
        cell: Cell,
        item: Item,
        events: &mut Vec<GameEvent>,
    ) {
        match self.players[player].held {
            None => {
                self.players[player].held = Some(item);
                events.push(GameEvent::Dispensed { player, cell, item });
            }
            Some(h) if h == item => {
                self.players[player].held = None;
                events.push(GameEvent::Returned { player, cell, item });
            }
            Some(_) => {}
        }
    }

    fn advance_timers(&mut self, dt: f64, events: &mut Vec<GameEvent>) {
        let cook_time = self.config.cook_time;
        let overcook_time = self.config.overcook_time;
        for (cell, pot) in self.pots.iter_mut() {
            if let PotState::Cooking { recipe, elapsed } = *pot {
                let elapsed = snap(elapsed + dt);
                if elapsed >= cook_time - EPS {
                    *pot = PotState::Cooked {
                        recipe,
                        since_done: snap((elapsed - cook_time).max(0.0)),
                    };
                    events.push(GameEvent::SoupCooked { cell: *cell, recipe });
                    // Overflow past completion has already been credited.
                    if let PotState::Cooked { since_done, .. } = *pot {
                        if since_done >= overcook_time - EPS {
                            *pot = PotState::OnFire {
                                recipe,
                                extinguish_progress: 0.0,
                            };
                            events.push(GameEvent::PotCaughtFire { cell: *cell, recipe });
                        }
                    }
                } else {
                    *pot = PotState::Cooking { recipe, elapsed };
                }
            } else if let PotState::Cooked { recipe, since_done } = *pot {
                let since_done = snap(since_done + dt);
                if since_done >= overcook_time - EPS {
                    *pot = PotState::OnFire {
                        recipe,
                        extinguish_progress: 0.0,
                    };
                    events.push(GameEvent::PotCaughtFire { cell: *cell, recipe });
                } else {
                    *pot = PotState::Cooked { recipe, since_done };
                }
            }
        }
        self.clock = snap(self.clock + dt);
        self.expire_orders(events);
    }

    fn expire_orders(&mut self, events: &mut Vec<GameEvent>) {
        let clock = self.clock;
        let due: Vec<usize> = self
            .orders
            .iter()
            .enumerate()
            .filter(|(_, o)| o.status == OrderStatus::Open && clock >= o.deadline - EPS)
            .map(|(i, _)| i)
            .collect();
        for idx in due {
            let order = &mut self.orders[idx];
            order.status = OrderStatus::Expired;
            let (order_id, recipe, penalty) = (order.id, order.soup, order.penalty);
            self.score -= penalty.abs();
            events.push(GameEvent::OrderExpired {
                order_id,
                recipe,
                penalty,
            });
            self.spawn_order(events);
        }
    }

    fn spawn_order(&mut self, events: &mut Vec<GameEvent>) {
        let recipe = if self.script_cursor < self.config.order_script.len() {
            self.script_cursor += 1;
            self.config.order_script[self.script_cursor - 1]
        } else {
            let pool = &self.config.order_pool;
            pool[self.rng.random_range(0..pool.len())]
        };
        let id = self.next_order_id;
        self.next_order_id += 1;
        let deadline = snap(self.clock + self.config.order_lifetimes.get(recipe));
        self.orders.push(Order {
            id,
            soup: recipe,
            issued_at: self.clock,
            deadline,
            reward: self.config.order_rewards.get(recipe),
            penalty: self.config.order_penalty,
            status: OrderStatus::Open,
        });
        events.push(GameEvent::OrderIssued {
            order_id: id,
            recipe,
            deadline,
        });
    }
}
