use std::path::Path;

use serde::{Deserialize, Serialize};

use super::types::Recipe;
use super::EnvError;

/// One value per soup.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerRecipe<T> {
    pub alice: T,
    pub bob: T,
    pub cathy: T,
    pub david: T,
}

impl<T: Copy> PerRecipe<T> {
    pub fn get(&self, recipe: Recipe) -> T {
        match recipe {
            Recipe::Alice => self.alice,
            Recipe::Bob => self.bob,
            Recipe::Cathy => self.cathy,
            Recipe::David => self.david,
        }
    }

    pub fn values(&self) -> [T; 4] {
        [self.alice, self.bob, self.cathy, self.david]
    }
}

/// Game rules and timing. Durations are in game seconds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GameConfig {
    pub game_duration: f64,
    /// Player action frequency in Hz; one tick lasts `1 / tick_rate` seconds.
    pub tick_rate: f64,
    pub concurrent_orders: usize,
    pub chop_interactions: u32,
    pub cook_time: f64,
    /// Measured from cook completion.
    pub overcook_time: f64,
    pub putout_time: f64,
    pub order_lifetimes: PerRecipe<f64>,
    pub order_rewards: PerRecipe<i32>,
    pub order_penalty: i32,
    pub rng_seed: u64,
    /// Recipes new orders are drawn from (uniformly).
    pub order_pool: Vec<Recipe>,
    /// Recipes issued before any random draw, in order.
    pub order_script: Vec<Recipe>,
    /// Whether order deadlines stop while the session is paused for chat.
    pub pause_freezes_orders: bool,
}

impl Default for GameConfig {
    fn default() -> Self {
        GameConfig {
            game_duration: 100.0,
            tick_rate: 2.5,
            concurrent_orders: 3,
            chop_interactions: 8,
            cook_time: 15.0,
            overcook_time: 25.0,
            putout_time: 5.0,
            order_lifetimes: PerRecipe {
                alice: 60.0,
                bob: 60.0,
                cathy: 60.0,
                david: 70.0,
            },
            order_rewards: PerRecipe {
                alice: 15,
                bob: 15,
                cathy: 15,
                david: 20,
            },
            order_penalty: -5,
            rng_seed: 0,
            order_pool: Recipe::ALL.to_vec(),
            order_script: Vec::new(),
            pause_freezes_orders: true,
        }
    }
}

impl GameConfig {
    /// Defaults adjusted for a shipped map: Quick runs 4 orders at 3.5 Hz.
    pub fn for_map(map_name: &str) -> Self {
        let mut cfg = GameConfig::default();
        if map_name.eq_ignore_ascii_case("quick") {
            cfg.tick_rate = 3.5;
            cfg.concurrent_orders = 4;
        }
        cfg
    }

    pub fn tick_seconds(&self) -> f64 {
        1.0 / self.tick_rate
    }

    /// Number of ticks in a full game, rounding up.
    pub fn total_ticks(&self) -> u64 {
        (self.game_duration * self.tick_rate - 1e-9).ceil() as u64
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        let positive = [
            ("game_duration", self.game_duration),
            ("tick_rate", self.tick_rate),
            ("cook_time", self.cook_time),
            ("overcook_time", self.overcook_time),
            ("putout_time", self.putout_time),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(EnvError::InvalidConfig(format!("{name} must be > 0")));
            }
        }
        if self.order_lifetimes.values().iter().any(|v| !(*v > 0.0)) {
            return Err(EnvError::InvalidConfig(
                "order lifetimes must be > 0".into(),
            ));
        }
        if self.concurrent_orders == 0 {
            return Err(EnvError::InvalidConfig(
                "concurrent_orders must be >= 1".into(),
            ));
        }
        if self.chop_interactions == 0 {
            return Err(EnvError::InvalidConfig(
                "chop_interactions must be >= 1".into(),
            ));
        }
        if self.order_pool.is_empty() {
            return Err(EnvError::InvalidConfig("order_pool is empty".into()));
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self, EnvError> {
        let cfg: GameConfig =
            toml::from_str(text).map_err(|e| EnvError::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, EnvError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| EnvError::InvalidConfig(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}
