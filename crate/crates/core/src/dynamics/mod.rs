//! Round-robin best-response walks and efficiency measurement.

mod adversarial;
mod optimum;
mod trajectory;

use serde::{Deserialize, Serialize};

pub use adversarial::{worst_case_over_schedules, worst_case_walk, worst_reachable_nash};
pub use optimum::{
    optimum, optimum_brute_force, optimum_elimination, optimum_with_budget, DEFAULT_ENUMERATION_BUDGET,
};
pub use trajectory::{Step, Trajectory};

use crate::error::{Error, Result};
use crate::model::{Game, JointAction};

/// Two utilities within this distance are treated as equal.
pub const BR_TOL: f64 = 1e-9;

/// Hard ceiling on steps for walks run until a fixed point.
pub const MAX_LIMIT_STEPS: usize = 1_000_000;

/// Default state cap for adversarial tie enumeration.
pub const DEFAULT_TIE_CAP: usize = 5_000_000;

/// How a mover picks among several best responses.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum TieBreak {
    /// Keep the current action if it is a best response, else the lowest index.
    IncumbentThenLex,
    /// Lowest action index among the best responses.
    Lexicographic,
    /// Explore every tie resolution and report the worst final welfare.
    AdversarialEnumerate { cap: usize },
    /// Take the action named in `target` when it is a best response, else
    /// behave like [`TieBreak::IncumbentThenLex`].
    Prefer { target: JointAction },
}

impl Default for TieBreak {
    fn default() -> Self {
        TieBreak::IncumbentThenLex
    }
}

impl TieBreak {
    pub fn adversarial() -> Self {
        TieBreak::AdversarialEnumerate { cap: DEFAULT_TIE_CAP }
    }

    fn pick(&self, player: usize, incumbent: usize, best: &[usize]) -> usize {
        match self {
            TieBreak::Lexicographic => best[0],
            TieBreak::Prefer { target } if best.contains(&target.get(player)) => target.get(player),
            _ => {
                if best.contains(&incumbent) {
                    incumbent
                } else {
                    best[0]
                }
            }
        }
    }
}

/// Order in which players move; one entry per step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Schedule(Vec<usize>);

impl Schedule {
    /// Players `0..n` repeated `k` times.
    pub fn round_robin(n_players: usize, rounds: usize) -> Self {
        Schedule((0..rounds).flat_map(|_| 0..n_players).collect())
    }

    pub fn new(order: Vec<usize>, n_players: usize) -> Result<Self> {
        if order.is_empty() {
            return Err(Error::InvalidParameter("schedule is empty".into()));
        }
        if let Some(&p) = order.iter().find(|&&p| p >= n_players) {
            return Err(Error::InvalidParameter(format!("schedule names player {p} of {n_players}")));
        }
        Ok(Schedule(order))
    }

    pub fn order(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Number of rounds for [`efficiency`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rounds {
    Finite(usize),
    Infinite,
}

/// Argmax set of `player`'s utility given everybody else in `a`.
pub fn best_responses(game: &Game, a: &JointAction, player: usize) -> Vec<usize> {
    let mut loads = game.loads(a);
    for &r in game.action(player, a.get(player)) {
        loads[r] -= 1;
    }
    let mut out = Vec::new();
    best_response_set(game, &loads, player, &mut out);
    out
}

/// Fills `out` with the best responses of `player` when `loads_without`
/// excludes that player's own selection.
pub(crate) fn best_response_set(game: &Game, loads_without: &[usize], player: usize, out: &mut Vec<usize>) {
    out.clear();
    let n_actions = game.actions(player).len();
    let mut utilities = Vec::with_capacity(n_actions);
    let mut best = f64::NEG_INFINITY;
    for k in 0..n_actions {
        let u = game.deviation_utility(loads_without, player, k);
        best = best.max(u);
        utilities.push(u);
    }
    out.extend((0..n_actions).filter(|&k| utilities[k] >= best - BR_TOL));
}

/// True when every player's action is one of its best responses.
pub fn is_nash(game: &Game, a: &JointAction) -> bool {
    let mut loads = game.loads(a);
    let mut best = Vec::new();
    (0..game.n_players()).all(|i| {
        let current = a.get(i);
        for &r in game.action(i, current) {
            loads[r] -= 1;
        }
        best_response_set(game, &loads, i, &mut best);
        for &r in game.action(i, current) {
            loads[r] += 1;
        }
        best.contains(&current)
    })
}

/// `Φ(a) = Σ_r v_r Σ_{j=1}^{|a|_r} f_r(j)`.
pub fn potential(game: &Game, a: &JointAction) -> f64 {
    potential_at_loads(game, &game.loads(a))
}

pub(crate) fn potential_at_loads(game: &Game, loads: &[usize]) -> f64 {
    game.resources()
        .iter()
        .zip(loads)
        .map(|(r, &l)| r.value * (1..=l).map(|j| r.utility.eval(j)).sum::<f64>())
        .sum()
}

/// Runs the walk for `rounds` rounds from the empty allocation.
///
/// `schedule` defaults to round robin and must contain `rounds * n` steps.
/// With [`TieBreak::AdversarialEnumerate`] the returned trajectory is one
/// that minimizes the final welfare over all tie resolutions.
pub fn k_round_walk(game: &Game, rounds: usize, tie_break: &TieBreak, schedule: Option<&Schedule>) -> Result<Trajectory> {
    if rounds == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let n = game.n_players();
    let default;
    let schedule = match schedule {
        Some(s) => {
            if s.len() != rounds * n {
                return Err(Error::InvalidParameter(format!(
                    "schedule has {} steps, expected k * n = {}",
                    s.len(),
                    rounds * n
                )));
            }
            Schedule::new(s.order().to_vec(), n)?;
            s
        }
        None => {
            default = Schedule::round_robin(n, rounds);
            &default
        }
    };
    match tie_break {
        TieBreak::AdversarialEnumerate { cap } => worst_case_walk(game, schedule, *cap),
        tb => Ok(deterministic_walk(game, schedule.order(), tb)),
    }
}

fn deterministic_walk(game: &Game, order: &[usize], tie_break: &TieBreak) -> Trajectory {
    let mut joint = game.empty_joint();
    let mut loads = vec![0usize; game.n_resources()];
    let mut best = Vec::new();
    let mut trajectory = Trajectory::new(joint.clone());
    for (t, &p) in order.iter().enumerate() {
        let current = joint.get(p);
        for &r in game.action(p, current) {
            loads[r] -= 1;
        }
        best_response_set(game, &loads, p, &mut best);
        let choice = tie_break.pick(p, current, &best);
        for &r in game.action(p, choice) {
            loads[r] += 1;
        }
        joint.set(p, choice);
        trajectory.push(Step {
            tau: t + 1,
            player: p,
            action: choice,
            welfare: game.welfare_at_loads(&loads),
            potential: potential_at_loads(game, &loads),
        });
    }
    trajectory
}

/// Round-robin walk continued until a full round changes nothing.
pub fn limit_walk(game: &Game, tie_break: &TieBreak) -> Result<Trajectory> {
    if matches!(tie_break, TieBreak::AdversarialEnumerate { .. }) {
        return Err(Error::InvalidParameter(
            "adversarial limits have no single trajectory; use worst_reachable_nash".into(),
        ));
    }
    let n = game.n_players();
    let mut trajectory = Trajectory::new(game.empty_joint());
    if n == 0 {
        return Ok(trajectory);
    }
    let mut joint = game.empty_joint();
    let mut loads = vec![0usize; game.n_resources()];
    let mut best = Vec::new();
    let mut unchanged = 0usize;
    let mut t = 0usize;
    while unchanged < n {
        if t >= MAX_LIMIT_STEPS {
            return Err(Error::NoFixedPoint(MAX_LIMIT_STEPS));
        }
        let p = t % n;
        let current = joint.get(p);
        for &r in game.action(p, current) {
            loads[r] -= 1;
        }
        best_response_set(game, &loads, p, &mut best);
        let choice = tie_break.pick(p, current, &best);
        for &r in game.action(p, choice) {
            loads[r] += 1;
        }
        if choice == current {
            unchanged += 1;
        } else {
            unchanged = 0;
        }
        joint.set(p, choice);
        t += 1;
        trajectory.push(Step {
            tau: t,
            player: p,
            action: choice,
            welfare: game.welfare_at_loads(&loads),
            potential: potential_at_loads(game, &loads),
        });
    }
    Ok(trajectory)
}

/// Welfare after the walk divided by the optimal welfare.
///
/// Adversarial tie breaking reports the minimum over tie resolutions; for
/// the infinite horizon that is the worst Nash equilibrium reachable from
/// the empty allocation.
pub fn efficiency(game: &Game, rounds: Rounds, tie_break: &TieBreak) -> Result<f64> {
    let (_, best) = optimum(game)?;
    let reached = match (rounds, tie_break) {
        (Rounds::Finite(k), tb) => k_round_walk(game, k, tb, None)?.final_welfare(),
        (Rounds::Infinite, TieBreak::AdversarialEnumerate { cap }) => worst_reachable_nash(game, *cap)?.1,
        (Rounds::Infinite, tb) => limit_walk(game, tb)?.final_welfare(),
    };
    Ok(ratio(reached, best))
}

pub(crate) fn ratio(reached: f64, best: f64) -> f64 {
    if best <= 0.0 {
        1.0
    } else {
        reached / best
    }
}
