use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::env::{Cell, MapSpec};

/// A shortest-path request. Non-floor tiles are always blocked; `blocked`
/// adds extra cells such as the other player's position.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathQuery {
    pub origin: Cell,
    pub goals: Vec<Cell>,
    pub blocked: BTreeSet<Cell>,
}

fn open(map: &MapSpec, blocked: &BTreeSet<Cell>, c: Cell) -> bool {
    map.in_bounds(c) && map.tile(c).is_walkable() && !blocked.contains(&c)
}

/// Cells to walk through, origin excluded, ending next to one of the goals.
/// Empty when the origin already touches a goal; `None` when no route exists.
pub fn bfs(map: &MapSpec, query: &PathQuery) -> Option<Vec<Cell>> {
    let touches = |c: Cell| query.goals.iter().any(|g| g.is_adjacent(c));
    if touches(query.origin) {
        return Some(Vec::new());
    }
    let mut prev: Vec<Option<Cell>> = vec![None; map.width * map.height];
    let idx = |c: Cell| c.row * map.width + c.col;
    let mut seen = vec![false; map.width * map.height];
    let mut queue = VecDeque::new();
    if map.in_bounds(query.origin) {
        seen[idx(query.origin)] = true;
        queue.push_back(query.origin);
    }
    while let Some(cur) = queue.pop_front() {
        for next in cur.neighbours() {
            if !open(map, &query.blocked, next) || seen[idx(next)] {
                continue;
            }
            seen[idx(next)] = true;
            prev[idx(next)] = Some(cur);
            if touches(next) {
                let mut path = vec![next];
                let mut at = cur;
                while at != query.origin {
                    path.push(at);
                    at = prev[idx(at)].expect("chain leads back to origin");
                }
                path.reverse();
                return Some(path);
            }
            queue.push_back(next);
        }
    }
    None
}

/// Walking distance from `starts` to every open cell.
#[derive(Clone, Debug)]
pub struct DistanceField {
    width: usize,
    dist: Vec<Option<u32>>,
}

impl DistanceField {
    pub fn new(map: &MapSpec, starts: &[Cell], blocked: &BTreeSet<Cell>) -> DistanceField {
        let mut dist = vec![None; map.width * map.height];
        let mut queue = VecDeque::new();
        for &s in starts {
            if open(map, blocked, s) && dist[s.row * map.width + s.col].is_none() {
                dist[s.row * map.width + s.col] = Some(0);
                queue.push_back(s);
            }
        }
        while let Some(cur) = queue.pop_front() {
            let d = dist[cur.row * map.width + cur.col].unwrap();
            for next in cur.neighbours() {
                let i = next.row * map.width + next.col;
                if open(map, blocked, next) && dist[i].is_none() {
                    dist[i] = Some(d + 1);
                    queue.push_back(next);
                }
            }
        }
        DistanceField {
            width: map.width,
            dist,
        }
    }

    pub fn at(&self, c: Cell) -> Option<u32> {
        if c.col >= self.width {
            return None;
        }
        self.dist.get(c.row * self.width + c.col).copied().flatten()
    }

    /// Distance to the nearest open cell touching `tile`.
    pub fn to_tile(&self, tile: Cell) -> Option<u32> {
        tile.neighbours().filter_map(|n| self.at(n)).min()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::TileKind;

    fn grid(rows: &[&str]) -> MapSpec {
        let width = rows[0].len();
        let tiles = rows
            .iter()
            .flat_map(|r| r.chars())
            .map(|c| if c == '.' { TileKind::Floor } else { TileKind::Counter })
            .collect();
        MapSpec {
            name: "t".into(),
            width,
            height: rows.len(),
            tiles,
            spawns: [Cell::new(0, 0), Cell::new(0, 0)],
        }
    }

    #[test]
    fn straight_corridor() {
        let map = grid(&["XXXXXXXX", "X......X", "XXXXXXXX"]);
        let q = PathQuery {
            origin: Cell::new(1, 1),
            goals: vec![Cell::new(1, 7)],
            blocked: BTreeSet::new(),
        };
        let path = bfs(&map, &q).unwrap();
        assert_eq!(path.len(), 5);
        assert_eq!(*path.last().unwrap(), Cell::new(1, 6));
    }

    #[test]
    fn walled_goal_is_unreachable() {
        let map = grid(&["XXXXX", "X.X.X", "XXXXX"]);
        let q = PathQuery {
            origin: Cell::new(1, 1),
            goals: vec![Cell::new(1, 4)],
            blocked: BTreeSet::new(),
        };
        assert_eq!(bfs(&map, &q), None);
    }

    #[test]
    fn blocked_cell_forces_detour() {
        let map = grid(&["XXXXX", "X...X", "X...X", "XXXXX"]);
        let mut blocked = BTreeSet::new();
        blocked.insert(Cell::new(1, 2));
        let q = PathQuery {
            origin: Cell::new(1, 1),
            goals: vec![Cell::new(0, 3)],
            blocked,
        };
        let path = bfs(&map, &q).unwrap();
        assert_eq!(
            path,
            vec![Cell::new(2, 1), Cell::new(2, 2), Cell::new(2, 3), Cell::new(1, 3)]
        );
    }

    #[test]
    fn distance_field_matches_bfs() {
        let map = grid(&["XXXXXX", "X....X", "X.XX.X", "X....X", "XXXXXX"]);
        let field = DistanceField::new(&map, &[Cell::new(1, 1)], &BTreeSet::new());
        assert_eq!(field.at(Cell::new(3, 4)), Some(5));
        assert_eq!(field.at(Cell::new(2, 2)), None);
        assert_eq!(field.to_tile(Cell::new(2, 2)), Some(1));
    }
}
