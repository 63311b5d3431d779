//! Grid kitchen simulation: tiles, items, timers and orders.

mod config;
mod map;
mod state;
mod text;
mod types;

pub use config::{GameConfig, PerRecipe};
pub use map::MapSpec;
pub use state::{
    ChopBoard, GameEvent, GameState, Order, OrderStatus, Player, PlayerId, PotState, AGENT, HUMAN,
};
pub use text::{snapshot_text, StateText};
pub use types::{AtomicAction, Cell, Ingredient, Item, Recipe, TileKind};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EnvError {
    #[error("invalid map: {0}")]
    InvalidMap(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("game is over")]
    GameOver,
}
