//! Thirty commands in three challenge groups, each judged over five attempts
//! against a fixed order context on Quick.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::stats::{render_table, Summary};
use super::EvalError;
use crate::env::{GameEvent, Ingredient, Recipe, AGENT};
use crate::runtime::{
    run_simulated, AgentConfig, AgentKind, Director, HumanKind, MatchOutput, Minds, RunSpec, TimedGameEvent, View,
};

use Ingredient::{Lettuce, Onion, Tomato};
use Recipe::{Alice, Bob, Cathy, David};

/// Seconds a command has to take effect.
pub const TIME_LIMIT_S: f64 = 60.0;
/// Seconds allowed for the first command of a pair before the attempt is abandoned.
pub const SETUP_LIMIT_S: f64 = 120.0;
pub const ATTEMPTS: usize = 5;
pub const PASS_THRESHOLD: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Challenge {
    Quantity,
    Semantics,
    Ambiguity,
}

impl Challenge {
    pub const ALL: [Challenge; 3] = [Challenge::Quantity, Challenge::Semantics, Challenge::Ambiguity];
}

impl fmt::Display for Challenge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for Challenge {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Challenge::ALL
            .into_iter()
            .find(|c| c.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown challenge {s:?}"))
    }
}

/// Effect a command must produce, counted over the AI player's events.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Checker {
    /// `n` completed chops of `ingredient` before any chop of `avoid`.
    Chop {
        ingredient: Ingredient,
        n: usize,
        avoid: &'static [Ingredient],
    },
    /// `n` pots started with `recipe`.
    Cook { recipe: Recipe, n: usize },
}

impl Checker {
    const fn chop(ingredient: Ingredient, n: usize) -> Checker {
        Checker::Chop {
            ingredient,
            n,
            avoid: &[],
        }
    }

    const fn cook(recipe: Recipe, n: usize) -> Checker {
        Checker::Cook { recipe, n }
    }

    /// Game time at which the effect is complete, if it ever is.
    pub fn satisfied_at(&self, events: &[TimedGameEvent]) -> Option<f64> {
        let mut count = 0;
        for e in events {
            let hit = match (self, &e.event) {
                (
                    Checker::Chop { ingredient, avoid, .. },
                    GameEvent::ChopCompleted {
                        player: AGENT,
                        ingredient: k,
                        ..
                    },
                ) => {
                    if avoid.contains(k) {
                        return None;
                    }
                    k == ingredient
                }
                (Checker::Cook { recipe, .. }, GameEvent::CookStarted { player: AGENT, recipe: r, .. }) => r == recipe,
                _ => false,
            };
            if hit {
                count += 1;
                let n = match self {
                    Checker::Chop { n, .. } | Checker::Cook { n, .. } => *n,
                };
                if count >= n {
                    return Some(e.game_s);
                }
            }
        }
        None
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Step {
    pub text: &'static str,
    pub checker: Checker,
}

/// One command with its order context. Pairs carry a first command that
/// must take effect before the measured one is issued.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Fixture {
    pub id: &'static str,
    pub challenge: Challenge,
    pub setup: Option<Step>,
    pub step: Step,
    /// Initial orders; later orders are drawn from the same soups.
    pub orders: &'static [Recipe],
    /// Refers back to an earlier command.
    pub anaphora: bool,
}

impl Fixture {
    pub fn label(&self) -> String {
        match &self.setup {
            Some(s) => format!("{} -> {}", s.text, self.step.text),
            None => self.step.text.to_string(),
        }
    }

    pub fn spec(&self, agent: AgentKind, seed: u64) -> RunSpec {
        let mut spec = RunSpec::builtin("quick", AgentConfig::new(agent), HumanKind::Idle).expect("quick is built in");
        spec.config.rng_seed = seed;
        spec.config.game_duration = SETUP_LIMIT_S + TIME_LIMIT_S + 5.0;
        spec.config.order_script = self.orders.to_vec();
        spec.config.order_pool = Recipe::ALL.into_iter().filter(|r| self.orders.contains(r)).collect();
        spec
    }
}

// Order contexts in which the commanded item is not wanted by any order.
const NO_ONION: &[Recipe] = &[Bob, Bob, Bob, Bob];
const NO_TOMATO: &[Recipe] = &[Alice, Alice, Alice, Alice];
const NO_LETTUCE: &[Recipe] = &[Cathy, Cathy, Cathy, Cathy];
const NO_ALICE: &[Recipe] = &[Bob, Cathy, David, Bob];
const NO_BOB: &[Recipe] = &[Alice, Cathy, David, Alice];
const NO_CATHY: &[Recipe] = &[Alice, Bob, David, Alice];
const NO_DAVID: &[Recipe] = &[Alice, Bob, Cathy, Alice];
/// Context for commands that point at the order list.
const LISTED: &[Recipe] = &[Alice, Cathy, David, Bob];

const fn single(id: &'static str, challenge: Challenge, text: &'static str, checker: Checker, orders: &'static [Recipe]) -> Fixture {
    Fixture {
        id,
        challenge,
        setup: None,
        step: Step { text, checker },
        orders,
        anaphora: false,
    }
}

const fn pair(
    id: &'static str,
    first: (&'static str, Checker),
    then: (&'static str, Checker),
    orders: &'static [Recipe],
) -> Fixture {
    Fixture {
        id,
        challenge: Challenge::Ambiguity,
        setup: Some(Step {
            text: first.0,
            checker: first.1,
        }),
        step: Step {
            text: then.0,
            checker: then.1,
        },
        orders,
        anaphora: true,
    }
}

use Challenge::{Ambiguity, Quantity, Semantics};

pub const FIXTURES: [Fixture; 30] = [
    single("Q1", Quantity, "Chop 1 Onion.", Checker::chop(Onion, 1), NO_ONION),
    single("Q2", Quantity, "Chop two onions.", Checker::chop(Onion, 2), NO_ONION),
    single("Q3", Quantity, "Please chop 3 onions.", Checker::chop(Onion, 3), NO_ONION),
    single("Q4", Quantity, "Cut one Tomato.", Checker::chop(Tomato, 1), NO_TOMATO),
    single("Q5", Quantity, "Help me cut 2 tomatoes.", Checker::chop(Tomato, 2), NO_TOMATO),
    single("Q6", Quantity, "3 chopped tomatoes please.", Checker::chop(Tomato, 3), NO_TOMATO),
    single("Q7", Quantity, "Chop 1 Lettuce.", Checker::chop(Lettuce, 1), NO_LETTUCE),
    single("Q8", Quantity, "2 lettuces chop.", Checker::chop(Lettuce, 2), NO_LETTUCE),
    single("Q9", Quantity, "help me to chop 3 lettuces.", Checker::chop(Lettuce, 3), NO_LETTUCE),
    single("Q10", Quantity, "Cook Alice Soup once.", Checker::cook(Alice, 1), NO_ALICE),
    single("S1", Semantics, "I need more onions", Checker::chop(Onion, 1), NO_ONION),
    single(
        "S2",
        Semantics,
        "Chop but except tomato and lettuce.",
        Checker::Chop {
            ingredient: Onion,
            n: 1,
            avoid: &[Tomato, Lettuce],
        },
        NO_ONION,
    ),
    single("S3", Semantics, "Why are we always short of tomatoes?", Checker::chop(Tomato, 1), NO_TOMATO),
    single("S4", Semantics, "Just pass me toma and don't ask why.", Checker::chop(Tomato, 1), NO_TOMATO),
    single("S5", Semantics, "Can't you see the lettuce, uh?", Checker::chop(Lettuce, 1), NO_LETTUCE),
    single("S6", Semantics, "The green cabbage looks perfect!", Checker::chop(Lettuce, 1), NO_LETTUCE),
    single("S7", Semantics, "Bob Soup is about to timeout!", Checker::cook(Bob, 1), NO_BOB),
    single("S8", Semantics, "Oh god, I forget the alice soup order.", Checker::cook(Alice, 1), NO_ALICE),
    single("S9", Semantics, "Come on! There is a cathy order!", Checker::cook(Cathy, 1), NO_CATHY),
    single("S10", Semantics, "D soup!", Checker::cook(David, 1), NO_DAVID),
    pair(
        "A1",
        ("Chop 2 Onions", Checker::chop(Onion, 2)),
        ("Chop it again.", Checker::chop(Onion, 2)),
        NO_ONION,
    ),
    pair(
        "A2",
        ("Chop 3 Tomatoes", Checker::chop(Tomato, 3)),
        ("One more please.", Checker::chop(Tomato, 1)),
        NO_TOMATO,
    ),
    pair(
        "A3",
        ("Cut one lettuce", Checker::chop(Lettuce, 1)),
        ("Cut more!", Checker::chop(Lettuce, 1)),
        NO_LETTUCE,
    ),
    pair(
        "A4",
        ("Cook Bob Soup.", Checker::cook(Bob, 1)),
        ("Cook it again!", Checker::cook(Bob, 1)),
        NO_BOB,
    ),
    pair(
        "A5",
        ("Cook 2 cathy soup,", Checker::cook(Cathy, 2)),
        ("Can you do it again?", Checker::cook(Cathy, 2)),
        NO_CATHY,
    ),
    pair(
        "A6",
        ("Cook david soup once", Checker::cook(David, 1)),
        ("Help me with that again.", Checker::cook(David, 1)),
        NO_DAVID,
    ),
    single("A7", Ambiguity, "Cook the first soup in the orders", Checker::cook(Alice, 1), LISTED),
    single("A8", Ambiguity, "Cook the second order now!", Checker::cook(Cathy, 1), LISTED),
    single("A9", Ambiguity, "The third soup order should be cooked", Checker::cook(David, 1), LISTED),
    single("A10", Ambiguity, "Please help me cook the last soup order", Checker::cook(Bob, 1), LISTED),
];

pub fn fixture(id: &str) -> Option<&'static Fixture> {
    FIXTURES.iter().find(|f| f.id.eq_ignore_ascii_case(id))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Attempt {
    pub seed: u64,
    pub success: bool,
    /// Seconds from the measured command to its effect.
    pub time_s: Option<f64>,
    /// False when the first command of a pair never took effect.
    pub setup_ok: bool,
}

#[derive(Clone, Copy, Debug)]
enum Stage {
    Start,
    Setup { from: usize, at: f64 },
    Main { from: usize, at: f64 },
}

struct FixtureDirector<'a> {
    fixture: &'a Fixture,
    stage: Stage,
}

impl Director for FixtureDirector<'_> {
    fn poll(&mut self, view: &View<'_>) -> Vec<String> {
        let (from, at) = (view.game_events.len(), view.state.clock);
        match self.stage {
            Stage::Start => match &self.fixture.setup {
                Some(setup) => {
                    self.stage = Stage::Setup { from, at };
                    vec![setup.text.to_string()]
                }
                None => {
                    self.stage = Stage::Main { from, at };
                    vec![self.fixture.step.text.to_string()]
                }
            },
            Stage::Setup { from: f, .. } => {
                let setup = self.fixture.setup.as_ref().expect("setup stage");
                if setup.checker.satisfied_at(&view.game_events[f..]).is_some() {
                    self.stage = Stage::Main { from, at };
                    vec![self.fixture.step.text.to_string()]
                } else {
                    Vec::new()
                }
            }
            Stage::Main { .. } => Vec::new(),
        }
    }

    fn finished(&self, view: &View<'_>) -> bool {
        let clock = view.state.clock;
        match self.stage {
            Stage::Start => false,
            Stage::Setup { at, .. } => clock - at > SETUP_LIMIT_S,
            Stage::Main { from, at } => {
                clock - at > TIME_LIMIT_S || self.fixture.step.checker.satisfied_at(&view.game_events[from..]).is_some()
            }
        }
    }
}

/// Plays one attempt of a fixture.
pub fn run_attempt(fixture: &Fixture, agent: AgentKind, minds: &Minds, seed: u64) -> Result<(Attempt, MatchOutput), EvalError> {
    let spec = fixture.spec(agent, seed);
    let mut director = FixtureDirector {
        fixture,
        stage: Stage::Start,
    };
    let out = run_simulated(&spec, minds, &mut director)?;
    let attempt = match director.stage {
        Stage::Main { from, at } => {
            let time_s = fixture
                .step
                .checker
                .satisfied_at(&out.game_events[from..])
                .map(|t| t - at);
            Attempt {
                seed,
                success: time_s.is_some_and(|t| t <= TIME_LIMIT_S),
                time_s,
                setup_ok: true,
            }
        }
        _ => Attempt {
            seed,
            success: false,
            time_s: None,
            setup_ok: false,
        },
    };
    Ok((attempt, out))
}

/// Pass rule: at least three successes; time is their mean, else the limit.
pub fn judge(attempts: &[Attempt]) -> (bool, f64) {
    let times: Vec<f64> = attempts
        .iter()
        .filter(|a| a.success)
        .filter_map(|a| a.time_s)
        .filter(|t| *t <= TIME_LIMIT_S)
        .collect();
    if times.len() >= PASS_THRESHOLD {
        (true, times.iter().sum::<f64>() / times.len() as f64)
    } else {
        (false, TIME_LIMIT_S)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommandTrial {
    pub agent: AgentKind,
    pub id: String,
    pub command: String,
    pub challenge: Challenge,
    pub attempts: Vec<Attempt>,
    pub passed: bool,
    pub completion_time: f64,
}

pub fn run_trial(
    fixture: &Fixture,
    agent: AgentKind,
    minds: &Minds,
    attempts: usize,
    seed: u64,
) -> Result<CommandTrial, EvalError> {
    let mut runs = Vec::with_capacity(attempts);
    for i in 0..attempts as u64 {
        runs.push(run_attempt(fixture, agent, minds, seed + i)?.0);
    }
    let (passed, completion_time) = judge(&runs);
    Ok(CommandTrial {
        agent,
        id: fixture.id.to_string(),
        command: fixture.label(),
        challenge: fixture.challenge,
        attempts: runs,
        passed,
        completion_time,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChallengeSummary {
    pub challenge: Challenge,
    pub success_rate: f64,
    pub completion_time: Summary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexReport {
    pub agent: AgentKind,
    pub trials: Vec<CommandTrial>,
    pub challenges: Vec<ChallengeSummary>,
}

pub fn summarize(trials: &[CommandTrial]) -> Vec<ChallengeSummary> {
    Challenge::ALL
        .into_iter()
        .filter_map(|c| {
            let group: Vec<&CommandTrial> = trials.iter().filter(|t| t.challenge == c).collect();
            if group.is_empty() {
                return None;
            }
            let passed = group.iter().filter(|t| t.passed).count();
            let times: Vec<f64> = group.iter().map(|t| t.completion_time).collect();
            Some(ChallengeSummary {
                challenge: c,
                success_rate: passed as f64 / group.len() as f64,
                completion_time: Summary::of(&times),
            })
        })
        .collect()
}

/// Runs every fixture (or one challenge group) for one agent.
pub fn run_complex_suite(
    agent: AgentKind,
    minds: &Minds,
    only: Option<Challenge>,
    attempts: usize,
    seed: u64,
) -> Result<ComplexReport, EvalError> {
    let mut trials = Vec::new();
    for f in FIXTURES.iter().filter(|f| only.is_none_or(|c| f.challenge == c)) {
        trials.push(run_trial(f, agent, minds, attempts, seed)?);
    }
    Ok(ComplexReport {
        agent,
        challenges: summarize(&trials),
        trials,
    })
}

pub fn complex_table(reports: &[ComplexReport]) -> String {
    let mut rows = Vec::new();
    for r in reports {
        for c in &r.challenges {
            rows.push(vec![
                r.agent.to_string(),
                c.challenge.to_string(),
                format!("{:.2}", c.success_rate),
                c.completion_time.show(1),
            ]);
        }
    }
    let mut out = render_table(&["agent", "challenge", "success", "time (s)"], &rows);
    for r in reports {
        let rows: Vec<Vec<String>> = r
            .trials
            .iter()
            .map(|t| {
                let wins = t.attempts.iter().filter(|a| a.success).count();
                vec![
                    t.id.clone(),
                    t.command.clone(),
                    format!("{wins}/{}", t.attempts.len()),
                    if t.passed { "pass" } else { "fail" }.into(),
                    format!("{:.1}", t.completion_time),
                ]
            })
            .collect();
        out.push_str(&format!("\n{}\n", r.agent));
        out.push_str(&render_table(&["id", "command", "ok", "result", "time (s)"], &rows));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at(success: bool, t: f64) -> Attempt {
        Attempt {
            seed: 0,
            success,
            time_s: Some(t),
            setup_ok: true,
        }
    }

    #[test]
    fn three_of_five_passes() {
        let a = [at(true, 10.0), at(true, 20.0), at(true, 30.0), at(false, 60.0), at(false, 70.0)];
        assert_eq!(judge(&a), (true, 20.0));
        let b = [at(true, 10.0), at(true, 20.0), at(false, 30.0), at(false, 60.0), at(false, 70.0)];
        assert_eq!(judge(&b), (false, 60.0));
    }

    #[test]
    fn fixtures_respect_the_order_constraint() {
        assert_eq!(FIXTURES.iter().filter(|f| f.challenge == Challenge::Quantity).count(), 10);
        assert_eq!(FIXTURES.iter().filter(|f| f.challenge == Challenge::Semantics).count(), 10);
        assert_eq!(FIXTURES.iter().filter(|f| f.anaphora).count(), 6);
        for f in FIXTURES.iter().filter(|f| f.orders != LISTED) {
            match f.step.checker {
                Checker::Chop { ingredient, .. } => {
                    assert!(f.orders.iter().all(|r| !r.contains(ingredient)), "{}", f.id)
                }
                Checker::Cook { recipe, .. } => assert!(!f.orders.contains(&recipe), "{}", f.id),
            }
        }
    }

    #[test]
    fn avoided_chop_voids_the_check() {
        let ev = |k, s| TimedGameEvent {
            tick: 0,
            game_s: s,
            event: GameEvent::ChopCompleted {
                player: AGENT,
                cell: crate::env::Cell::new(0, 0),
                ingredient: k,
            },
        };
        let c = FIXTURES[11].step.checker;
        assert_eq!(c.satisfied_at(&[ev(Onion, 4.0)]), Some(4.0));
        assert_eq!(c.satisfied_at(&[ev(Tomato, 2.0), ev(Onion, 4.0)]), None);
    }
}
