use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::bfs::{bfs, DistanceField, PathQuery};
use crate::catalog::MacroAction;
use crate::env::{
    AtomicAction, Cell, GameState, Ingredient, Item, OrderStatus, PlayerId, PotState, Recipe,
    TileKind,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FailReason {
    PreconditionMissing,
    TargetInvalidated,
    NoSpace,
    Unreachable,
    Refused,
    Stuck,
    Blocked,
    Timeout,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PlanStatus {
    Running,
    Done,
    Failed(FailReason),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StepKind {
    /// Put the held item away: empty counter, matching source, stand or bin.
    Stow,
    Fetch(Item),
    /// Onto an empty counter or an empty board.
    Place,
    /// Onto a counter already holding a compatible piece.
    Combine,
    Chop(Ingredient),
    Cook(Recipe),
    Plate(Recipe),
    PlateCharred,
    Extinguish,
    Deliver(Recipe),
    Trash,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub kind: StepKind,
    pub target: Cell,
    #[serde(default)]
    bumps: u32,
}

impl Step {
    fn new(kind: StepKind, target: Cell) -> Step {
        Step {
            kind,
            target,
            bumps: 0,
        }
    }
}

/// Consecutive waiting ticks tolerated before giving up on a path.
const MAX_WAIT: u32 = 25;

/// A macro bound to concrete cells, advanced one atomic action per tick.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExecutionPlan {
    pub macro_action: MacroAction,
    pub agent: PlayerId,
    pub steps: Vec<Step>,
    pub phase: usize,
    pub status: PlanStatus,
    pub ticks: u32,
    pub tick_budget: u32,
    /// Non-Noop atomics emitted so far.
    pub atomics: u32,
    baseline: usize,
    path: Vec<Cell>,
    yielded: bool,
    waiting: u32,
}

struct Ctx<'a> {
    s: &'a GameState,
    agent: PlayerId,
    from_agent: DistanceField,
    reserved: Vec<Cell>,
}

impl<'a> Ctx<'a> {
    fn new(s: &'a GameState, agent: PlayerId) -> Self {
        let from_agent = DistanceField::new(
            &s.map,
            &[s.players[agent].position],
            &BTreeSet::new(),
        );
        Ctx {
            s,
            agent,
            from_agent,
            reserved: Vec::new(),
        }
    }

    fn held(&self) -> Option<Item> {
        self.s.players[self.agent].held
    }

    fn reachable(&self, tile: Cell) -> bool {
        self.from_agent.to_tile(tile).is_some()
    }

    /// Nearest reachable candidate, measured from `anchor`'s surroundings or
    /// the agent. Ties break by (row, col).
    fn nearest(&self, anchor: Option<Cell>, cands: impl IntoIterator<Item = Cell>) -> Option<Cell> {
        let field;
        let f = match anchor {
            Some(a) => {
                let starts: Vec<Cell> = a
                    .neighbours()
                    .filter(|n| self.from_agent.at(*n).is_some())
                    .collect();
                field = DistanceField::new(&self.s.map, &starts, &BTreeSet::new());
                &field
            }
            None => &self.from_agent,
        };
        cands
            .into_iter()
            .filter(|c| !self.reserved.contains(c))
            .filter_map(|c| f.to_tile(c).map(|d| (d, c)))
            .min()
            .map(|(_, c)| c)
    }

    fn tiles(&self, kind: TileKind) -> Vec<Cell> {
        self.s.map.cells_of(kind)
    }

    fn counters_with(&self, pred: impl Fn(Item) -> bool) -> Vec<Cell> {
        self.s
            .items
            .iter()
            .filter(|(_, i)| pred(**i))
            .map(|(c, _)| *c)
            .collect()
    }

    fn free_counters(&self) -> Vec<Cell> {
        self.s.free_counters().collect()
    }

    /// Cells that hand out `item` when bumped with empty hands.
    fn sources_of(&self, item: Item) -> Vec<Cell> {
        let mut out = match item {
            Item::Raw(k) => self.tiles(TileKind::source_for(k)),
            Item::Plate => self.tiles(TileKind::PlateSource),
            Item::FireExtinguisher => self.tiles(TileKind::ExtinguisherStand),
            _ => Vec::new(),
        };
        out.extend(self.counters_with(|i| i == item));
        if matches!(item, Item::Chopped(_)) {
            out.extend(
                self.s
                    .boards
                    .iter()
                    .filter(|(_, b)| b.occupant == Some(item))
                    .map(|(c, _)| *c),
            );
        }
        out
    }

    /// Where to put `item` down when hands must be empty.
    fn stow_step(&mut self, item: Item, anchor: Option<Cell>) -> Option<Step> {
        let (kind, cands) = match item {
            Item::FireExtinguisher => (StepKind::Stow, self.tiles(TileKind::ExtinguisherStand)),
            Item::CharredSoupPlated => (StepKind::Trash, self.tiles(TileKind::TrashBin)),
            Item::Raw(k) => (StepKind::Stow, self.tiles(TileKind::source_for(k))),
            Item::Plate => (StepKind::Stow, self.tiles(TileKind::PlateSource)),
            _ => (StepKind::Stow, self.free_counters()),
        };
        if let Some(c) = self.nearest(anchor, cands) {
            if self.s.tile(c) == TileKind::Counter {
                self.reserved.push(c);
            }
            return Some(Step::new(kind, c));
        }
        let bin = self.nearest(anchor, self.tiles(TileKind::TrashBin))?;
        (item != Item::FireExtinguisher).then(|| Step::new(StepKind::Trash, bin))
    }

    /// Empties the agent's hands unless the held item is wanted.
    fn free_hands(&mut self, keep: impl Fn(Item) -> bool) -> Result<Vec<Step>, FailReason> {
        match self.held() {
            Some(item) if !keep(item) => self
                .stow_step(item, None)
                .map(|s| vec![s])
                .ok_or(FailReason::NoSpace),
            _ => Ok(Vec::new()),
        }
    }
}

/// Whether an item is worth keeping for any open order.
pub fn order_relevant(state: &GameState, item: Item) -> bool {
    let open = || state.open_orders().map(|o| o.soup);
    match item {
        Item::Raw(k) | Item::Chopped(k) => open().any(|r| r.contains(k)),
        Item::Mixed(r) => open().any(|o| o == r || (o == Recipe::David && r != Recipe::David)),
        Item::PlatedSoup(r) => open().any(|o| o == r),
        Item::Plate | Item::CharredSoupPlated | Item::FireExtinguisher => false,
    }
}

/// Frees a counter by binning the nearest item no open order needs. `None`
/// when a counter is already free or nothing can go.
pub fn clear_cell(state: &GameState, agent: PlayerId) -> Option<(Cell, Vec<Step>)> {
    let mut ctx = Ctx::new(state, agent);
    if !ctx.free_counters().iter().all(|c| !ctx.reachable(*c)) {
        return None;
    }
    let removable = ctx.counters_with(|i| !order_relevant(state, i));
    let cell = ctx.nearest(None, removable)?;
    let item = state.items[&cell];
    ctx.reserved.push(cell);
    let mut steps = vec![Step::new(StepKind::Fetch(item), cell)];
    let away = match item {
        Item::FireExtinguisher => ctx
            .nearest(Some(cell), ctx.tiles(TileKind::ExtinguisherStand))
            .map(|c| Step::new(StepKind::Stow, c)),
        _ => ctx
            .nearest(Some(cell), ctx.tiles(TileKind::TrashBin))
            .map(|c| Step::new(StepKind::Trash, c)),
    }?;
    steps.push(away);
    Some((cell, steps))
}

fn count_chopped(s: &GameState, k: Ingredient) -> usize {
    let item = Item::Chopped(k);
    s.items.values().filter(|i| **i == item).count()
        + s.boards.values().filter(|b| b.occupant == Some(item)).count()
}

fn count_mixed(s: &GameState, r: Recipe) -> usize {
    s.items.values().filter(|i| **i == Item::Mixed(r)).count()
}

fn count_pots(s: &GameState, r: Recipe) -> usize {
    s.pots
        .values()
        .filter(|p| matches!(p, PotState::Cooking { recipe, .. } | PotState::Cooked { recipe, .. } if *recipe == r))
        .count()
}

fn count_served(s: &GameState, r: Recipe) -> usize {
    s.orders
        .iter()
        .filter(|o| o.status == OrderStatus::Served && o.soup == r)
        .count()
}

fn baseline(m: MacroAction, s: &GameState) -> usize {
    match m {
        MacroAction::Chop(k) => count_chopped(s, k),
        MacroAction::Mix(r) => count_mixed(s, r),
        MacroAction::Cook(r) => count_pots(s, r),
        MacroAction::Serve(r) => count_served(s, r),
        _ => 0,
    }
}

type Build = Result<Vec<Step>, FailReason>;

fn plan_chop(ctx: &mut Ctx, k: Ingredient) -> Build {
    let raw = Item::Raw(k);
    let resume = ctx.nearest(
        None,
        ctx.s
            .boards
            .iter()
            .filter(|(_, b)| b.occupant == Some(raw))
            .map(|(c, _)| *c),
    );
    let mut steps;
    let board = match resume {
        Some(board) => {
            steps = ctx.free_hands(|_| false)?;
            board
        }
        None => {
            let empty_board = ctx.nearest(
                None,
                ctx.s
                    .boards
                    .iter()
                    .filter(|(_, b)| b.occupant.is_none())
                    .map(|(c, _)| *c),
            );
            let mut clear = Vec::new();
            let board = match empty_board {
                Some(b) => b,
                None => {
                    // Move a finished piece off the nearest board.
                    let (b, item) = ctx
                        .s
                        .boards
                        .iter()
                        .filter_map(|(c, bd)| match bd.occupant {
                            Some(i @ Item::Chopped(_)) => Some((*c, i)),
                            _ => None,
                        })
                        .filter(|(c, _)| ctx.reachable(*c))
                        .min_by_key(|(c, _)| (ctx.from_agent.to_tile(*c), *c))
                        .ok_or(FailReason::NoSpace)?;
                    clear.push(Step::new(StepKind::Fetch(item), b));
                    let away = match ctx.nearest(Some(b), ctx.free_counters()) {
                        Some(c) => {
                            ctx.reserved.push(c);
                            Step::new(StepKind::Place, c)
                        }
                        None if !order_relevant(ctx.s, item) => {
                            let bin = ctx
                                .nearest(Some(b), ctx.tiles(TileKind::TrashBin))
                                .ok_or(FailReason::NoSpace)?;
                            Step::new(StepKind::Trash, bin)
                        }
                        None => return Err(FailReason::NoSpace),
                    };
                    clear.push(away);
                    b
                }
            };
            let holding_raw = ctx.held() == Some(raw) && clear.is_empty();
            steps = ctx.free_hands(|i| holding_raw && i == raw)?;
            steps.extend(clear);
            if !holding_raw {
                let src = ctx
                    .nearest(None, ctx.sources_of(raw))
                    .ok_or(FailReason::PreconditionMissing)?;
                steps.push(Step::new(StepKind::Fetch(raw), src));
            }
            steps.push(Step::new(StepKind::Place, board));
            board
        }
    };
    steps.push(Step::new(StepKind::Chop(k), board));
    if let Some(c) = ctx.nearest(Some(board), ctx.free_counters()) {
        ctx.reserved.push(c);
        steps.push(Step::new(StepKind::Fetch(Item::Chopped(k)), board));
        steps.push(Step::new(StepKind::Place, c));
    }
    Ok(steps)
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Loc {
    Hand,
    At(Cell),
}

fn cover(cands: &[(Loc, Item)], need: u8, have: u8, start: usize, out: &mut Vec<usize>) -> bool {
    if have == need {
        return true;
    }
    for i in start..cands.len() {
        let m = cands[i].1.mix_mask().unwrap();
        if m & have == 0 {
            out.push(i);
            if cover(cands, need, have | m, i + 1, out) {
                return true;
            }
            out.pop();
        }
    }
    false
}

fn plan_mix(ctx: &mut Ctx, r: Recipe) -> Build {
    let need = Item::Mixed(r).mix_mask().unwrap();
    let is_piece = |i: Item| {
        i.mix_mask()
            .is_some_and(|m| m & !need == 0 && m != need)
    };
    let mut cands: Vec<(u32, Loc, Item)> = Vec::new();
    if let Some(h) = ctx.held().filter(|h| is_piece(*h)) {
        cands.push((0, Loc::Hand, h));
    }
    for (c, i) in &ctx.s.items {
        if is_piece(*i) {
            if let Some(d) = ctx.from_agent.to_tile(*c) {
                cands.push((d + 1, Loc::At(*c), *i));
            }
        }
    }
    for (c, b) in &ctx.s.boards {
        if let Some(i @ Item::Chopped(_)) = b.occupant {
            if is_piece(i) {
                if let Some(d) = ctx.from_agent.to_tile(*c) {
                    cands.push((d + 1, Loc::At(*c), i));
                }
            }
        }
    }
    // Bigger pieces first, then nearer, then by cell.
    cands.sort_by_key(|(d, loc, i)| {
        let cell = match loc {
            Loc::Hand => None,
            Loc::At(c) => Some(*c),
        };
        (std::cmp::Reverse(i.mix_mask().unwrap().count_ones()), *d, cell)
    });
    let on_counter = |loc: &Loc| match loc {
        Loc::At(c) => ctx.s.tile(*c) == TileKind::Counter,
        Loc::Hand => false,
    };
    let flat: Vec<(Loc, Item)> = cands.iter().map(|(_, l, i)| (*l, *i)).collect();
    let mut chosen = Vec::new();
    if !cover(&flat, need, 0, 0, &mut chosen) {
        return Err(FailReason::PreconditionMissing);
    }
    let mut pieces: Vec<(Loc, Item)> = chosen.iter().map(|i| flat[*i]).collect();
    // With no free counter, a piece already lying on one has to be the base.
    if !pieces.iter().any(|(l, _)| on_counter(l)) && ctx.nearest(None, ctx.free_counters()).is_none() {
        let mut alt = flat.clone();
        alt.sort_by_key(|(l, _)| !on_counter(l));
        let mut again = Vec::new();
        if cover(&alt, need, 0, 0, &mut again) {
            pieces = again.iter().map(|i| alt[*i]).collect();
        }
    }
    let base_piece = pieces
        .iter()
        .position(|(l, i)| on_counter(l) && matches!(i, Item::Mixed(_)))
        .or_else(|| pieces.iter().position(|(l, _)| on_counter(l)));
    let hand_piece = pieces.iter().any(|(l, _)| *l == Loc::Hand);
    let mut clear = Vec::new();
    let (base, mut filled) = match base_piece {
        Some(p) => match pieces[p].0 {
            Loc::At(c) => (c, true),
            Loc::Hand => unreachable!(),
        },
        None => match ctx.nearest(None, ctx.free_counters()) {
            Some(c) => (c, false),
            None if !hand_piece => {
                let (c, sub) = clear_cell(ctx.s, ctx.agent).ok_or(FailReason::NoSpace)?;
                clear = sub;
                (c, false)
            }
            None => return Err(FailReason::NoSpace),
        },
    };
    ctx.reserved.push(base);
    let mut steps = ctx.free_hands(|_| hand_piece)?;
    steps.extend(clear);
    let put = |filled: bool| if filled { StepKind::Combine } else { StepKind::Place };
    if hand_piece {
        steps.push(Step::new(put(filled), base));
        filled = true;
    }
    for (loc, item) in &pieces {
        if let Loc::At(c) = loc {
            if *c == base {
                continue;
            }
            steps.push(Step::new(StepKind::Fetch(*item), *c));
            steps.push(Step::new(put(filled), base));
            filled = true;
        }
    }
    Ok(steps)
}

/// Fetch `item` unless already held, after clearing the hands.
fn fetch_into_hands(ctx: &mut Ctx, item: Item, anchor: Option<Cell>) -> Build {
    let mut steps = ctx.free_hands(|i| i == item)?;
    if ctx.held() != Some(item) {
        let src = ctx
            .nearest(anchor, ctx.sources_of(item))
            .ok_or(FailReason::PreconditionMissing)?;
        steps.push(Step::new(StepKind::Fetch(item), src));
    }
    Ok(steps)
}

fn pots_where(ctx: &Ctx, pred: impl Fn(&PotState) -> bool) -> Vec<Cell> {
    ctx.s
        .pots
        .iter()
        .filter(|(_, p)| pred(p))
        .map(|(c, _)| *c)
        .collect()
}

fn plan_cook(ctx: &mut Ctx, r: Recipe) -> Build {
    let pot = ctx
        .nearest(None, pots_where(ctx, |p| *p == PotState::Empty))
        .ok_or(FailReason::PreconditionMissing)?;
    let mut steps = fetch_into_hands(ctx, Item::Mixed(r), None)?;
    steps.push(Step::new(StepKind::Cook(r), pot));
    Ok(steps)
}

fn plan_plate(ctx: &mut Ctx, r: Recipe) -> Build {
    let pot = ctx
        .nearest(
            None,
            pots_where(ctx, |p| matches!(p, PotState::Cooked { recipe, .. } if *recipe == r)),
        )
        .ok_or(FailReason::PreconditionMissing)?;
    let mut steps = fetch_into_hands(ctx, Item::Plate, Some(pot))?;
    steps.push(Step::new(StepKind::Plate(r), pot));
    Ok(steps)
}

fn plan_serve(ctx: &mut Ctx, r: Recipe) -> Build {
    let soup = Item::PlatedSoup(r);
    if ctx.held() != Some(soup) && ctx.nearest(None, ctx.sources_of(soup)).is_none() {
        return Err(FailReason::PreconditionMissing);
    }
    let delivery = ctx
        .nearest(None, ctx.tiles(TileKind::Delivery))
        .ok_or(FailReason::Unreachable)?;
    let mut steps = fetch_into_hands(ctx, soup, None)?;
    steps.push(Step::new(StepKind::Deliver(r), delivery));
    Ok(steps)
}

fn plan_putout(ctx: &mut Ctx) -> Build {
    let pot = ctx
        .nearest(None, pots_where(ctx, |p| matches!(p, PotState::OnFire { .. })))
        .ok_or(FailReason::PreconditionMissing)?;
    let mut steps = fetch_into_hands(ctx, Item::FireExtinguisher, Some(pot))?;
    steps.push(Step::new(StepKind::Extinguish, pot));
    Ok(steps)
}

fn plan_drop(ctx: &mut Ctx) -> Build {
    let bin = ctx
        .nearest(None, ctx.tiles(TileKind::TrashBin))
        .ok_or(FailReason::Unreachable)?;
    let charred = ctx.nearest(
        None,
        pots_where(ctx, |p| matches!(p, PotState::CharredOccupied { .. })),
    );
    let mut steps;
    let pot = match charred {
        Some(pot) => {
            steps = fetch_into_hands(ctx, Item::Plate, Some(pot))?;
            pot
        }
        None => {
            let pot = ctx
                .nearest(None, pots_where(ctx, |p| matches!(p, PotState::OnFire { .. })))
                .ok_or(FailReason::PreconditionMissing)?;
            steps = fetch_into_hands(ctx, Item::FireExtinguisher, Some(pot))?;
            steps.push(Step::new(StepKind::Extinguish, pot));
            let stand = ctx
                .nearest(Some(pot), ctx.tiles(TileKind::ExtinguisherStand))
                .ok_or(FailReason::Unreachable)?;
            steps.push(Step::new(StepKind::Stow, stand));
            let plate = ctx
                .nearest(Some(stand), ctx.sources_of(Item::Plate))
                .ok_or(FailReason::PreconditionMissing)?;
            steps.push(Step::new(StepKind::Fetch(Item::Plate), plate));
            pot
        }
    };
    steps.push(Step::new(StepKind::PlateCharred, pot));
    steps.push(Step::new(StepKind::Trash, bin));
    Ok(steps)
}

impl ExecutionPlan {
    /// Binds the macro to cells on this snapshot. Missing prerequisites give
    /// a plan that is already Failed.
    pub fn begin(macro_action: MacroAction, state: &GameState, agent: PlayerId) -> ExecutionPlan {
        let mut ctx = Ctx::new(state, agent);
        let built = match macro_action {
            MacroAction::Chop(k) => plan_chop(&mut ctx, k),
            MacroAction::Mix(r) => plan_mix(&mut ctx, r),
            MacroAction::Cook(r) => plan_cook(&mut ctx, r),
            MacroAction::Plate(r) => plan_plate(&mut ctx, r),
            MacroAction::Serve(r) => plan_serve(&mut ctx, r),
            MacroAction::Putout => plan_putout(&mut ctx),
            MacroAction::Drop => plan_drop(&mut ctx),
        };
        let built = built.and_then(|steps| {
            if steps.iter().all(|s| ctx.reachable(s.target)) {
                Ok(steps)
            } else {
                Err(FailReason::Unreachable)
            }
        });
        let (steps, status) = match built {
            Ok(steps) => (steps, PlanStatus::Running),
            Err(reason) => (Vec::new(), PlanStatus::Failed(reason)),
        };
        let cells = (state.map.width * state.map.height) as u32;
        let tick_budget = cells * (steps.len() as u32).max(1) * state.config.chop_interactions;
        ExecutionPlan {
            macro_action,
            agent,
            steps,
            phase: 0,
            status,
            ticks: 0,
            tick_budget,
            atomics: 0,
            baseline: baseline(macro_action, state),
            path: Vec::new(),
            yielded: false,
            waiting: 0,
        }
    }

    pub fn is_running(&self) -> bool {
        self.status == PlanStatus::Running
    }

    pub fn current_step(&self) -> Option<&Step> {
        self.steps.get(self.phase)
    }

    fn fail(&mut self, reason: FailReason) -> AtomicAction {
        self.status = PlanStatus::Failed(reason);
        AtomicAction::Noop
    }

    /// Exactly one atomic action for the coming tick.
    pub fn next_atomic(&mut self, state: &GameState) -> AtomicAction {
        let action = self.advance(state);
        if action != AtomicAction::Noop {
            self.atomics += 1;
        }
        action
    }

    /// Functional form of [`ExecutionPlan::next_atomic`].
    pub fn stepped(&self, state: &GameState) -> (AtomicAction, ExecutionPlan) {
        let mut next = self.clone();
        let a = next.next_atomic(state);
        (a, next)
    }

    fn advance(&mut self, s: &GameState) -> AtomicAction {
        if self.status != PlanStatus::Running {
            return AtomicAction::Noop;
        }
        while self.phase < self.steps.len() && step_done(&self.steps[self.phase], s, self.agent) {
            self.phase += 1;
            self.path.clear();
            self.yielded = false;
        }
        if self.phase == self.steps.len() {
            if post_holds(self.macro_action, self.baseline, s, self.agent) {
                self.status = PlanStatus::Done;
                return AtomicAction::Noop;
            }
            return self.fail(FailReason::TargetInvalidated);
        }
        if self.ticks >= self.tick_budget {
            return self.fail(FailReason::Timeout);
        }
        self.ticks += 1;
        let agent = self.agent;
        if let StepKind::Stow = self.steps[self.phase].kind {
            if !stow_target_ok(s, self.steps[self.phase].target, agent) {
                let mut ctx = Ctx::new(s, agent);
                match s.players[agent].held.and_then(|i| ctx.stow_step(i, None)) {
                    Some(step) => {
                        self.steps[self.phase] = step;
                        self.path.clear();
                    }
                    None => return self.fail(FailReason::NoSpace),
                }
            }
        }
        let step = &self.steps[self.phase];
        if let Err(reason) = step_valid(step, s, agent) {
            return self.fail(reason);
        }
        if !self.steps[self.phase + 1..].iter().all(|st| binding_alive(st, s)) {
            return self.fail(FailReason::TargetInvalidated);
        }
        let pos = s.players[agent].position;
        if pos.is_adjacent(step.target) {
            let limit = bump_limit(step.kind, s);
            let step = &mut self.steps[self.phase];
            if step.bumps >= limit {
                let reason = match step.kind {
                    StepKind::Deliver(_) => FailReason::Refused,
                    _ => FailReason::Stuck,
                };
                return self.fail(reason);
            }
            step.bumps += 1;
            self.waiting = 0;
            return pos.direction_to(step.target).expect("adjacent");
        }
        let target = step.target;
        self.navigate(s, target)
    }

    fn navigate(&mut self, s: &GameState, target: Cell) -> AtomicAction {
        let pos = s.players[self.agent].position;
        let other = s.players[1 - self.agent].position;
        while self.path.first() == Some(&pos) {
            self.path.remove(0);
        }
        let stale = match (self.path.first(), self.path.last()) {
            (Some(first), Some(last)) => !first.is_adjacent(pos) || !last.is_adjacent(target),
            _ => true,
        };
        let query = |blocked: BTreeSet<Cell>| PathQuery {
            origin: pos,
            goals: vec![target],
            blocked,
        };
        let avoid: BTreeSet<Cell> = [other].into_iter().collect();
        if stale {
            self.yielded = false;
            self.path = match bfs(&s.map, &query(avoid.clone())) {
                Some(p) => p,
                None => match bfs(&s.map, &query(BTreeSet::new())) {
                    Some(p) => p,
                    None => return self.fail(FailReason::Unreachable),
                },
            };
        }
        let Some(&next) = self.path.first() else {
            return AtomicAction::Noop;
        };
        if next == other {
            if !self.yielded {
                self.yielded = true;
                return self.wait();
            }
            self.yielded = false;
            match bfs(&s.map, &query(avoid)) {
                Some(p) if !p.is_empty() => self.path = p,
                _ => return self.wait(),
            }
        }
        self.waiting = 0;
        pos.direction_to(self.path[0]).unwrap_or(AtomicAction::Noop)
    }

    fn wait(&mut self) -> AtomicAction {
        self.waiting += 1;
        if self.waiting > MAX_WAIT {
            return self.fail(FailReason::Blocked);
        }
        AtomicAction::Noop
    }
}

fn bump_limit(kind: StepKind, s: &GameState) -> u32 {
    match kind {
        StepKind::Chop(_) => s.config.chop_interactions + 2,
        StepKind::Extinguish => {
            (s.config.putout_time * s.config.tick_rate - 1e-9).ceil() as u32 + 2
        }
        StepKind::Deliver(_) => 1,
        _ => 2,
    }
}

fn stow_target_ok(s: &GameState, target: Cell, agent: PlayerId) -> bool {
    let Some(held) = s.players[agent].held else {
        return true;
    };
    match s.tile(target) {
        TileKind::Counter => !s.items.contains_key(&target) && held != Item::CharredSoupPlated,
        TileKind::TrashBin => held != Item::FireExtinguisher,
        TileKind::ExtinguisherStand => held == Item::FireExtinguisher,
        TileKind::PlateSource => held == Item::Plate,
        k => k.source_of().is_some_and(|i| held == Item::Raw(i)),
    }
}

fn step_done(step: &Step, s: &GameState, agent: PlayerId) -> bool {
    let held = s.players[agent].held;
    match step.kind {
        StepKind::Stow | StepKind::Place | StepKind::Combine | StepKind::Trash => held.is_none(),
        StepKind::Deliver(_) => held.is_none(),
        StepKind::Fetch(item) => held == Some(item),
        StepKind::Chop(k) => {
            s.boards.get(&step.target).and_then(|b| b.occupant) == Some(Item::Chopped(k))
        }
        StepKind::Cook(r) => {
            held.is_none()
                && matches!(s.pots.get(&step.target), Some(PotState::Cooking { recipe, .. } | PotState::Cooked { recipe, .. }) if *recipe == r)
        }
        StepKind::Plate(r) => held == Some(Item::PlatedSoup(r)),
        StepKind::PlateCharred => held == Some(Item::CharredSoupPlated),
        StepKind::Extinguish => !matches!(s.pots.get(&step.target), Some(PotState::OnFire { .. })),
    }
}

/// Pot targets of later steps must still be in the state they were bound in.
fn binding_alive(step: &Step, s: &GameState) -> bool {
    let pot = s.pots.get(&step.target);
    match step.kind {
        StepKind::Cook(_) => pot == Some(&PotState::Empty),
        StepKind::Plate(r) => {
            matches!(pot, Some(PotState::Cooked { recipe, .. }) if *recipe == r)
        }
        _ => true,
    }
}

fn step_valid(step: &Step, s: &GameState, agent: PlayerId) -> Result<(), FailReason> {
    use FailReason::TargetInvalidated as Bad;
    let held = s.players[agent].held;
    let t = step.target;
    let ok = match step.kind {
        StepKind::Stow => held.is_some(),
        StepKind::Trash => held.is_some_and(|i| i != Item::FireExtinguisher),
        StepKind::Fetch(item) => {
            held.is_none()
                && match s.tile(t) {
                    TileKind::Counter => s.items.get(&t) == Some(&item),
                    TileKind::ChopBoard => s.boards.get(&t).and_then(|b| b.occupant) == Some(item),
                    TileKind::PlateSource => item == Item::Plate,
                    TileKind::ExtinguisherStand => item == Item::FireExtinguisher,
                    k => k.source_of().is_some_and(|i| item == Item::Raw(i)),
                }
        }
        StepKind::Place => match (s.tile(t), held) {
            (TileKind::Counter, Some(_)) => !s.items.contains_key(&t),
            (TileKind::ChopBoard, Some(Item::Raw(_))) => {
                s.boards.get(&t).is_some_and(|b| b.occupant.is_none())
            }
            _ => false,
        },
        StepKind::Combine => match (held, s.items.get(&t)) {
            (Some(h), Some(on)) => h.combine(*on).is_some(),
            _ => false,
        },
        StepKind::Chop(k) => {
            held.is_none() && s.boards.get(&t).and_then(|b| b.occupant) == Some(Item::Raw(k))
        }
        StepKind::Cook(r) => {
            held == Some(Item::Mixed(r)) && s.pots.get(&t) == Some(&PotState::Empty)
        }
        StepKind::Plate(r) => {
            held == Some(Item::Plate)
                && matches!(s.pots.get(&t), Some(PotState::Cooked { recipe, .. }) if *recipe == r)
        }
        StepKind::PlateCharred => {
            held == Some(Item::Plate)
                && matches!(s.pots.get(&t), Some(PotState::CharredOccupied { .. }))
        }
        StepKind::Extinguish => {
            held == Some(Item::FireExtinguisher)
                && matches!(s.pots.get(&t), Some(PotState::OnFire { .. }))
        }
        StepKind::Deliver(r) => held == Some(Item::PlatedSoup(r)),
    };
    if ok {
        Ok(())
    } else {
        Err(Bad)
    }
}

fn post_holds(m: MacroAction, baseline: usize, s: &GameState, agent: PlayerId) -> bool {
    match m {
        MacroAction::Chop(k) => count_chopped(s, k) > baseline,
        MacroAction::Mix(r) => count_mixed(s, r) > baseline,
        MacroAction::Cook(r) => count_pots(s, r) > baseline,
        MacroAction::Plate(r) => s.players[agent].held == Some(Item::PlatedSoup(r)),
        MacroAction::Serve(r) => count_served(s, r) > baseline,
        MacroAction::Putout => true,
        MacroAction::Drop => s.players[agent].held.is_none(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{GameConfig, MapSpec, AGENT, HUMAN};

    fn game(map: &str, script: &[Recipe]) -> GameState {
        let mut cfg = GameConfig::for_map(map);
        cfg.order_script = script.to_vec();
        cfg.game_duration = 1000.0;
        GameState::new(cfg, MapSpec::builtin(map).unwrap()).unwrap()
    }

    fn run(state: &mut GameState, plan: &mut ExecutionPlan, max: usize) -> usize {
        for t in 0..max {
            let a = plan.next_atomic(state);
            if !plan.is_running() {
                return t;
            }
            state.step_mut([AtomicAction::Noop, a]).unwrap();
        }
        max
    }

    #[test]
    fn chop_tomato_walkthrough() {
        let mut s = game("ring", &[Recipe::Bob, Recipe::Cathy, Recipe::Bob]);
        let mut plan = ExecutionPlan::begin(MacroAction::Chop(Ingredient::Tomato), &s, AGENT);
        let kinds: Vec<StepKind> = plan.steps.iter().map(|s| s.kind).collect();
        assert_eq!(
            kinds,
            vec![
                StepKind::Fetch(Item::Raw(Ingredient::Tomato)),
                StepKind::Place,
                StepKind::Chop(Ingredient::Tomato),
                StepKind::Fetch(Item::Chopped(Ingredient::Tomato)),
                StepKind::Place,
            ]
        );
        run(&mut s, &mut plan, 400);
        assert_eq!(plan.status, PlanStatus::Done);
        assert_eq!(
            s.items.values().filter(|i| **i == Item::Chopped(Ingredient::Tomato)).count(),
            1
        );
    }

    #[test]
    fn plate_without_cooked_pot_fails() {
        let s = game("ring", &[]);
        let plan = ExecutionPlan::begin(MacroAction::Plate(Recipe::Alice), &s, AGENT);
        assert_eq!(plan.status, PlanStatus::Failed(FailReason::PreconditionMissing));
    }

    #[test]
    fn putout_with_extinguisher_close_by() {
        let mut s = game("ring", &[]);
        let pot = Cell::new(2, 8);
        s.pots.insert(
            pot,
            PotState::OnFire {
                recipe: Recipe::Alice,
                extinguish_progress: 0.0,
            },
        );
        s.players[AGENT].position = Cell::new(3, 7);
        let mut plan = ExecutionPlan::begin(MacroAction::Putout, &s, AGENT);
        let kinds: Vec<StepKind> = plan.steps.iter().map(|s| s.kind).collect();
        assert_eq!(
            kinds,
            vec![StepKind::Fetch(Item::FireExtinguisher), StepKind::Extinguish]
        );
        run(&mut s, &mut plan, 100);
        assert_eq!(plan.status, PlanStatus::Done);
        assert_eq!(s.pots[&pot], PotState::CharredOccupied { recipe: Recipe::Alice });
    }

    #[test]
    fn adjacent_target_emits_interaction() {
        let mut s = game("ring", &[]);
        s.players[AGENT].position = Cell::new(1, 7);
        s.pots.insert(
            Cell::new(1, 8),
            PotState::Cooked {
                recipe: Recipe::Bob,
                since_done: 0.0,
            },
        );
        s.players[AGENT].held = Some(Item::Plate);
        let mut plan = ExecutionPlan::begin(MacroAction::Plate(Recipe::Bob), &s, AGENT);
        assert_eq!(plan.next_atomic(&s), AtomicAction::Right);
    }

    #[test]
    fn yields_to_the_human_in_a_corridor() {
        let mut s = game("bottleneck", &[]);
        // Human parks in the one-lane passage the agent must cross.
        s.players[HUMAN].position = Cell::new(2, 5);
        s.players[AGENT].position = Cell::new(2, 6);
        let mut plan = ExecutionPlan::begin(MacroAction::Chop(Ingredient::Tomato), &s, AGENT);
        assert!(plan.is_running());
        assert_eq!(plan.next_atomic(&s), AtomicAction::Noop);
        assert_eq!(plan.next_atomic(&s), AtomicAction::Noop);
        assert!(plan.is_running());
        s.players[HUMAN].position = Cell::new(2, 2);
        assert_eq!(plan.next_atomic(&s), AtomicAction::Left);
    }

    #[test]
    fn fire_mid_plate_invalidates() {
        let mut s = game("ring", &[]);
        let pot = Cell::new(1, 8);
        s.pots.insert(
            pot,
            PotState::Cooked {
                recipe: Recipe::Alice,
                since_done: 0.0,
            },
        );
        let mut plan = ExecutionPlan::begin(MacroAction::Plate(Recipe::Alice), &s, AGENT);
        plan.next_atomic(&s);
        s.pots.insert(
            pot,
            PotState::OnFire {
                recipe: Recipe::Alice,
                extinguish_progress: 0.0,
            },
        );
        plan.next_atomic(&s);
        assert_eq!(plan.status, PlanStatus::Failed(FailReason::TargetInvalidated));
    }

    #[test]
    fn mix_then_cook_then_plate_then_serve() {
        let mut s = game("ring", &[Recipe::Alice, Recipe::Alice, Recipe::Alice]);
        s.items.insert(Cell::new(2, 2), Item::Chopped(Ingredient::Lettuce));
        s.boards.get_mut(&Cell::new(0, 5)).unwrap().occupant =
            Some(Item::Chopped(Ingredient::Onion));
        for m in [
            MacroAction::Mix(Recipe::Alice),
            MacroAction::Cook(Recipe::Alice),
        ] {
            let mut plan = ExecutionPlan::begin(m, &s, AGENT);
            run(&mut s, &mut plan, 400);
            assert_eq!(plan.status, PlanStatus::Done, "{m}");
        }
        s = s.advance_time_only(15.0);
        for m in [MacroAction::Plate(Recipe::Alice), MacroAction::Serve(Recipe::Alice)] {
            let mut plan = ExecutionPlan::begin(m, &s, AGENT);
            run(&mut s, &mut plan, 400);
            assert_eq!(plan.status, PlanStatus::Done, "{m}");
        }
        assert_eq!(s.score, 15);
    }

    #[test]
    fn david_from_a_pair_and_a_third() {
        let mut s = game("ring", &[Recipe::David]);
        s.items.insert(Cell::new(2, 3), Item::Mixed(Recipe::Bob));
        s.items.insert(Cell::new(2, 5), Item::Chopped(Ingredient::Onion));
        let mut plan = ExecutionPlan::begin(MacroAction::Mix(Recipe::David), &s, AGENT);
        run(&mut s, &mut plan, 400);
        assert_eq!(plan.status, PlanStatus::Done);
        assert_eq!(s.items.get(&Cell::new(2, 3)), Some(&Item::Mixed(Recipe::David)));
    }

    #[test]
    fn clear_cell_guards() {
        let mut s = game("ring", &[Recipe::Alice, Recipe::Alice, Recipe::Alice]);
        assert!(clear_cell(&s, AGENT).is_none());
        let counters = s.map.cells_of(TileKind::Counter);
        for c in &counters {
            s.items.insert(*c, Item::Chopped(Ingredient::Onion));
        }
        assert!(clear_cell(&s, AGENT).is_none());
        s.items.insert(Cell::new(2, 4), Item::Chopped(Ingredient::Tomato));
        let (cell, steps) = clear_cell(&s, AGENT).unwrap();
        assert_eq!(cell, Cell::new(2, 4));
        assert_eq!(steps.last().unwrap().kind, StepKind::Trash);
    }

    #[test]
    fn drop_burning_pot_end_to_end() {
        let mut s = game("ring", &[]);
        let pot = Cell::new(1, 8);
        s.pots.insert(
            pot,
            PotState::OnFire {
                recipe: Recipe::Cathy,
                extinguish_progress: 0.0,
            },
        );
        let mut plan = ExecutionPlan::begin(MacroAction::Drop, &s, AGENT);
        run(&mut s, &mut plan, 600);
        assert_eq!(plan.status, PlanStatus::Done);
        assert_eq!(s.pots[&pot], PotState::Empty);
        assert_eq!(s.players[AGENT].held, None);
    }
}
