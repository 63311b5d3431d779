use std::path::Path;

use serde::{Deserialize, Serialize};

use super::types::{Cell, TileKind};
use super::EnvError;

/// A parsed layout: one character per tile, `1`/`2` mark player spawns.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MapSpec {
    pub name: String,
    pub width: usize,
    pub height: usize,
    pub tiles: Vec<TileKind>,
    pub spawns: [Cell; 2],
}

const SHIPPED: [(&str, &str); 4] = [
    ("Ring", include_str!("../../maps/ring.txt")),
    ("Bottleneck", include_str!("../../maps/bottleneck.txt")),
    ("Partition", include_str!("../../maps/partition.txt")),
    ("Quick", include_str!("../../maps/quick.txt")),
];

const REQUIRED: [TileKind; 10] = [
    TileKind::Pot,
    TileKind::ChopBoard,
    TileKind::Delivery,
    TileKind::TrashBin,
    TileKind::TomatoSource,
    TileKind::LettuceSource,
    TileKind::OnionSource,
    TileKind::PlateSource,
    TileKind::ExtinguisherStand,
    TileKind::Counter,
];

impl MapSpec {
    pub fn parse(name: &str, text: &str) -> Result<MapSpec, EnvError> {
        let rows: Vec<&str> = text
            .lines()
            .map(str::trim_end)
            .filter(|l| !l.is_empty())
            .collect();
        if rows.is_empty() {
            return Err(EnvError::InvalidMap("empty map".into()));
        }
        let width = rows[0].chars().count();
        let mut tiles = Vec::with_capacity(width * rows.len());
        let mut spawns: [Option<Cell>; 2] = [None, None];
        for (r, line) in rows.iter().enumerate() {
            if line.chars().count() != width {
                return Err(EnvError::InvalidMap(format!("row {r} is not {width} wide")));
            }
            for (c, ch) in line.chars().enumerate() {
                let kind = TileKind::from_char(ch).ok_or_else(|| {
                    EnvError::InvalidMap(format!("unknown tile '{ch}' at ({r}, {c})"))
                })?;
                if let Some(idx) = ch.to_digit(10).map(|d| d as usize) {
                    let slot = &mut spawns[idx - 1];
                    if slot.is_some() {
                        return Err(EnvError::InvalidMap(format!("duplicate spawn '{ch}'")));
                    }
                    *slot = Some(Cell::new(r, c));
                }
                tiles.push(kind);
            }
        }
        let spawns = match spawns {
            [Some(a), Some(b)] => [a, b],
            _ => return Err(EnvError::InvalidMap("map needs spawns '1' and '2'".into())),
        };
        let map = MapSpec {
            name: name.to_string(),
            width,
            height: rows.len(),
            tiles,
            spawns,
        };
        map.validate()?;
        Ok(map)
    }

    pub fn load(path: &Path) -> Result<MapSpec, EnvError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| EnvError::InvalidMap(format!("{}: {e}", path.display())))?;
        let name = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("custom");
        MapSpec::parse(name, &text)
    }

    /// One of the four shipped layouts, matched case-insensitively.
    pub fn builtin(name: &str) -> Option<MapSpec> {
        SHIPPED
            .iter()
            .find(|(n, _)| n.eq_ignore_ascii_case(name))
            .map(|(n, text)| MapSpec::parse(n, text).expect("shipped maps are valid"))
    }

    pub fn builtin_names() -> Vec<&'static str> {
        SHIPPED.iter().map(|(n, _)| *n).collect()
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        for kind in REQUIRED {
            if !self.tiles.contains(&kind) {
                return Err(EnvError::InvalidMap(format!("missing {kind:?}")));
            }
        }
        for s in self.spawns {
            if self.tile(s) != TileKind::Floor {
                return Err(EnvError::InvalidMap(format!("spawn {s} is not floor")));
            }
        }
        Ok(())
    }

    pub fn tile(&self, cell: Cell) -> TileKind {
        self.tiles[cell.row * self.width + cell.col]
    }

    pub fn in_bounds(&self, cell: Cell) -> bool {
        cell.row < self.height && cell.col < self.width
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.height).flat_map(move |r| (0..self.width).map(move |c| Cell::new(r, c)))
    }

    pub fn cells_of(&self, kind: TileKind) -> Vec<Cell> {
        self.cells().filter(|c| self.tile(*c) == kind).collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity((self.width + 1) * self.height);
        for r in 0..self.height {
            for c in 0..self.width {
                let cell = Cell::new(r, c);
                let ch = if cell == self.spawns[0] {
                    '1'
                } else if cell == self.spawns[1] {
                    '2'
                } else {
                    self.tile(cell).to_char()
                };
                out.push(ch);
            }
            out.push('\n');
        }
        out
    }
}
