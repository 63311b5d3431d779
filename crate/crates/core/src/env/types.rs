use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Ingredient {
    Tomato,
    Lettuce,
    Onion,
}

impl Ingredient {
    pub const ALL: [Ingredient; 3] = [Ingredient::Tomato, Ingredient::Lettuce, Ingredient::Onion];

    pub fn name(self) -> &'static str {
        match self {
            Ingredient::Tomato => "Tomato",
            Ingredient::Lettuce => "Lettuce",
            Ingredient::Onion => "Onion",
        }
    }

    fn bit(self) -> u8 {
        match self {
            Ingredient::Tomato => 1,
            Ingredient::Lettuce => 2,
            Ingredient::Onion => 4,
        }
    }
}

impl fmt::Display for Ingredient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The four soups on the menu.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Recipe {
    Alice,
    Bob,
    Cathy,
    David,
}

impl Recipe {
    pub const ALL: [Recipe; 4] = [Recipe::Alice, Recipe::Bob, Recipe::Cathy, Recipe::David];

    pub fn name(self) -> &'static str {
        match self {
            Recipe::Alice => "Alice",
            Recipe::Bob => "Bob",
            Recipe::Cathy => "Cathy",
            Recipe::David => "David",
        }
    }

    /// Fixed composition, listed in the order the menu names them.
    pub fn ingredients(self) -> &'static [Ingredient] {
        match self {
            Recipe::Alice => &[Ingredient::Lettuce, Ingredient::Onion],
            Recipe::Bob => &[Ingredient::Lettuce, Ingredient::Tomato],
            Recipe::Cathy => &[Ingredient::Onion, Ingredient::Tomato],
            Recipe::David => &[Ingredient::Lettuce, Ingredient::Onion, Ingredient::Tomato],
        }
    }

    pub fn contains(self, ingredient: Ingredient) -> bool {
        self.ingredients().contains(&ingredient)
    }

    fn mask(self) -> u8 {
        self.ingredients().iter().fold(0, |m, i| m | i.bit())
    }

    /// Every set of two or more distinct ingredients is exactly one recipe.
    pub fn from_mask(mask: u8) -> Option<Recipe> {
        Recipe::ALL.into_iter().find(|r| r.mask() == mask)
    }

    pub fn parse(s: &str) -> Option<Recipe> {
        let s = s.trim().to_ascii_lowercase();
        Recipe::ALL
            .into_iter()
            .find(|r| r.name().to_ascii_lowercase() == s)
    }
}

impl fmt::Display for Recipe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Item {
    Raw(Ingredient),
    Chopped(Ingredient),
    Mixed(Recipe),
    PlatedSoup(Recipe),
    CharredSoupPlated,
    Plate,
    FireExtinguisher,
}

impl Item {
    /// Ingredients carried by a chopped piece or a mixed set.
    pub fn mix_mask(self) -> Option<u8> {
        match self {
            Item::Chopped(i) => Some(i.bit()),
            Item::Mixed(r) => Some(r.mask()),
            _ => None,
        }
    }

    /// Result of putting `self` together with `other` on one counter cell.
    pub fn combine(self, other: Item) -> Option<Item> {
        let (a, b) = (self.mix_mask()?, other.mix_mask()?);
        if a & b != 0 {
            return None;
        }
        Recipe::from_mask(a | b).map(Item::Mixed)
    }

    pub fn contains_ingredient(self, ingredient: Ingredient) -> bool {
        self.mix_mask()
            .map(|m| m & ingredient.bit() != 0)
            .unwrap_or(false)
    }

    pub fn label(self) -> String {
        match self {
            Item::Raw(i) => format!("Fresh {i}"),
            Item::Chopped(i) => format!("Chopped {i}"),
            Item::Mixed(r) => format!("{r} Ingredients"),
            Item::PlatedSoup(r) => format!("{r} Soup"),
            Item::CharredSoupPlated => "Charred Soup".to_string(),
            Item::Plate => "Plate".to_string(),
            Item::FireExtinguisher => "Fire Extinguisher".to_string(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TileKind {
    Floor,
    Counter,
    TomatoSource,
    LettuceSource,
    OnionSource,
    ChopBoard,
    Pot,
    PlateSource,
    Delivery,
    TrashBin,
    ExtinguisherStand,
}

impl TileKind {
    pub fn is_walkable(self) -> bool {
        matches!(self, TileKind::Floor)
    }

    pub fn from_char(c: char) -> Option<TileKind> {
        Some(match c {
            '.' | '1' | '2' => TileKind::Floor,
            'X' => TileKind::Counter,
            'T' => TileKind::TomatoSource,
            'L' => TileKind::LettuceSource,
            'O' => TileKind::OnionSource,
            'C' => TileKind::ChopBoard,
            'P' => TileKind::Pot,
            'S' => TileKind::PlateSource,
            'D' => TileKind::Delivery,
            'B' => TileKind::TrashBin,
            'E' => TileKind::ExtinguisherStand,
            _ => return None,
        })
    }

    pub fn to_char(self) -> char {
        match self {
            TileKind::Floor => '.',
            TileKind::Counter => 'X',
            TileKind::TomatoSource => 'T',
            TileKind::LettuceSource => 'L',
            TileKind::OnionSource => 'O',
            TileKind::ChopBoard => 'C',
            TileKind::Pot => 'P',
            TileKind::PlateSource => 'S',
            TileKind::Delivery => 'D',
            TileKind::TrashBin => 'B',
            TileKind::ExtinguisherStand => 'E',
        }
    }

    pub fn source_of(self) -> Option<Ingredient> {
        match self {
            TileKind::TomatoSource => Some(Ingredient::Tomato),
            TileKind::LettuceSource => Some(Ingredient::Lettuce),
            TileKind::OnionSource => Some(Ingredient::Onion),
            _ => None,
        }
    }

    pub fn source_for(ingredient: Ingredient) -> TileKind {
        match ingredient {
            Ingredient::Tomato => TileKind::TomatoSource,
            Ingredient::Lettuce => TileKind::LettuceSource,
            Ingredient::Onion => TileKind::OnionSource,
        }
    }
}

/// Grid coordinate, row-major. Ordering is (row, col), which is the
/// tie-break order used throughout path planning.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

impl Cell {
    pub const fn new(row: usize, col: usize) -> Self {
        Cell { row, col }
    }

    pub fn step(self, dir: AtomicAction) -> Option<Cell> {
        let (dr, dc): (isize, isize) = match dir {
            AtomicAction::Up => (-1, 0),
            AtomicAction::Down => (1, 0),
            AtomicAction::Left => (0, -1),
            AtomicAction::Right => (0, 1),
            AtomicAction::Noop => return Some(self),
        };
        let row = self.row.checked_add_signed(dr)?;
        let col = self.col.checked_add_signed(dc)?;
        Some(Cell { row, col })
    }

    /// Neighbours in (row, col) order: up, left, right, down.
    pub fn neighbours(self) -> impl Iterator<Item = Cell> {
        [
            AtomicAction::Up,
            AtomicAction::Left,
            AtomicAction::Right,
            AtomicAction::Down,
        ]
        .into_iter()
        .filter_map(move |d| self.step(d))
    }

    pub fn is_adjacent(self, other: Cell) -> bool {
        self.row.abs_diff(other.row) + self.col.abs_diff(other.col) == 1
    }

    pub fn direction_to(self, other: Cell) -> Option<AtomicAction> {
        if !self.is_adjacent(other) {
            return None;
        }
        Some(if other.row < self.row {
            AtomicAction::Up
        } else if other.row > self.row {
            AtomicAction::Down
        } else if other.col < self.col {
            AtomicAction::Left
        } else {
            AtomicAction::Right
        })
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.row, self.col)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AtomicAction {
    Up,
    Down,
    Left,
    Right,
    #[default]
    Noop,
}

impl AtomicAction {
    pub const MOVES: [AtomicAction; 4] = [
        AtomicAction::Up,
        AtomicAction::Down,
        AtomicAction::Left,
        AtomicAction::Right,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AtomicAction::Up => "up",
            AtomicAction::Down => "down",
            AtomicAction::Left => "left",
            AtomicAction::Right => "right",
            AtomicAction::Noop => "noop",
        }
    }

    /// Reads the first direction word in free text ("left", "Up.", ...).
    pub fn parse_token(text: &str) -> Option<AtomicAction> {
        text.split(|c: char| !c.is_ascii_alphabetic())
            .filter(|w| !w.is_empty())
            .find_map(|w| match w.to_ascii_lowercase().as_str() {
                "up" => Some(AtomicAction::Up),
                "down" => Some(AtomicAction::Down),
                "left" => Some(AtomicAction::Left),
                "right" => Some(AtomicAction::Right),
                _ => None,
            })
    }
}
