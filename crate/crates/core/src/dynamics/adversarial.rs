//! Worst case over tie resolutions.
//!
//! The enumeration is a depth-first search over the tie tree. States are
//! memoized on the step index together with the part of the joint action
//! that can still influence the outcome: the current actions of players that
//! move again, and the loads of resources those players can touch. Resources
//! nobody touches after step `t` have final loads, so their welfare is banked
//! when they leave the frontier.

use std::collections::{HashMap, HashSet, VecDeque};

use super::{best_response_set, is_nash, potential_at_loads, Schedule, Step, Trajectory};
use crate::error::{Error, Result};
use crate::model::{Game, JointAction};

struct Enumerator<'g> {
    game: &'g Game,
    order: &'g [usize],
    /// Players that still move at or after step `t`.
    future_players: Vec<Vec<usize>>,
    /// Resources touchable by those players.
    frontier: Vec<Vec<usize>>,
    /// Resources whose load is final once step `t` is done.
    retiring: Vec<Vec<usize>>,
    memo: HashMap<(u32, Box<[u32]>), (f64, u32)>,
    joint: Vec<usize>,
    loads: Vec<usize>,
    cap: usize,
    best_found: Option<f64>,
}

impl<'g> Enumerator<'g> {
    fn new(game: &'g Game, order: &'g [usize], cap: usize) -> Self {
        let steps = order.len();
        let mut future_players = vec![Vec::new(); steps + 1];
        let mut frontier = vec![Vec::new(); steps + 1];
        let mut seen_players = vec![false; game.n_players()];
        let mut seen_res = vec![false; game.n_resources()];
        for t in (0..steps).rev() {
            let p = order[t];
            if !seen_players[p] {
                seen_players[p] = true;
                for action in game.actions(p) {
                    for &r in action {
                        seen_res[r] = true;
                    }
                }
            }
            future_players[t] = (0..game.n_players()).filter(|&i| seen_players[i]).collect();
            frontier[t] = (0..game.n_resources()).filter(|&r| seen_res[r]).collect();
        }
        let retiring = (0..steps)
            .map(|t| {
                frontier[t]
                    .iter()
                    .copied()
                    .filter(|r| frontier[t + 1].binary_search(r).is_err())
                    .collect()
            })
            .collect();
        Enumerator {
            game,
            order,
            future_players,
            frontier,
            retiring,
            memo: HashMap::new(),
            joint: vec![0; game.n_players()],
            loads: vec![0; game.n_resources()],
            cap,
            best_found: None,
        }
    }

    fn key(&self, t: usize) -> (u32, Box<[u32]>) {
        let key: Box<[u32]> = self.future_players[t]
            .iter()
            .map(|&p| self.joint[p] as u32)
            .chain(self.frontier[t].iter().map(|&r| self.loads[r] as u32))
            .collect();
        (t as u32, key)
    }

    fn banked(&self, resources: &[usize]) -> f64 {
        let res = self.game.resources();
        resources
            .iter()
            .filter(|&&r| self.loads[r] > 0)
            .map(|&r| res[r].value * res[r].welfare.eval(self.loads[r]))
            .sum()
    }

    fn cap_error(&self) -> Error {
        Error::EnumerationCap {
            cap: self.cap,
            explored: self.memo.len(),
            lower_bound: 0.0,
            best_found: self.best_found,
        }
    }

    /// Minimum welfare still to be banked from step `t` on; `acc` is what
    /// has been banked so far.
    fn solve(&mut self, t: usize, acc: f64) -> Result<f64> {
        if t == self.order.len() {
            self.best_found = Some(self.best_found.map_or(acc, |b| b.min(acc)));
            return Ok(0.0);
        }
        let key = self.key(t);
        if let Some(&(value, _)) = self.memo.get(&key) {
            let total = acc + value;
            self.best_found = Some(self.best_found.map_or(total, |b| b.min(total)));
            return Ok(value);
        }
        if self.memo.len() >= self.cap {
            return Err(self.cap_error());
        }
        let p = self.order[t];
        let current = self.joint[p];
        for &r in self.game.action(p, current) {
            self.loads[r] -= 1;
        }
        let mut options = Vec::new();
        best_response_set(self.game, &self.loads, p, &mut options);
        let mut best = (f64::INFINITY, options[0]);
        for &k in &options {
            for &r in self.game.action(p, k) {
                self.loads[r] += 1;
            }
            self.joint[p] = k;
            let retired = self.banked(&self.retiring[t]);
            let value = retired + self.solve(t + 1, acc + retired)?;
            for &r in self.game.action(p, k) {
                self.loads[r] -= 1;
            }
            if value < best.0 {
                best = (value, k);
            }
        }
        for &r in self.game.action(p, current) {
            self.loads[r] += 1;
        }
        self.joint[p] = current;
        self.memo.insert(key, (best.0, best.1 as u32));
        Ok(best.0)
    }
}

/// Trajectory minimizing the final welfare over every tie resolution.
///
/// Fails with [`Error::EnumerationCap`] once more than `cap` distinct states
/// have been expanded; the error carries the best welfare realized so far.
pub fn worst_case_walk(game: &Game, schedule: &Schedule, cap: usize) -> Result<Trajectory> {
    if cap == 0 {
        return Err(Error::InvalidParameter("enumeration cap must be at least 1".into()));
    }
    let order = schedule.order();
    let mut search = Enumerator::new(game, order, cap);
    let start = game.empty_joint();
    let untouched: Vec<usize> = (0..game.n_resources())
        .filter(|r| search.frontier[0].binary_search(r).is_err())
        .collect();
    let base = search.banked(&untouched);
    search.solve(0, base)?;

    let mut trajectory = Trajectory::new(start);
    for t in 0..order.len() {
        let (_, choice) = search.memo[&search.key(t)];
        let p = order[t];
        let choice = choice as usize;
        for &r in game.action(p, search.joint[p]) {
            search.loads[r] -= 1;
        }
        for &r in game.action(p, choice) {
            search.loads[r] += 1;
        }
        search.joint[p] = choice;
        trajectory.push(Step {
            tau: t + 1,
            player: p,
            action: choice,
            welfare: game.welfare_at_loads(&search.loads),
            potential: potential_at_loads(game, &search.loads),
        });
    }
    Ok(trajectory)
}

/// Worst final welfare over several schedules; returns the minimizing
/// schedule's index and trajectory.
pub fn worst_case_over_schedules(game: &Game, schedules: &[Schedule], cap: usize) -> Result<(usize, Trajectory)> {
    let mut worst: Option<(usize, Trajectory)> = None;
    for (idx, schedule) in schedules.iter().enumerate() {
        let traj = worst_case_walk(game, schedule, cap)?;
        if worst.as_ref().map_or(true, |(_, w)| traj.final_welfare() < w.final_welfare()) {
            worst = Some((idx, traj));
        }
    }
    worst.ok_or_else(|| Error::InvalidParameter("no schedules supplied".into()))
}

/// Lowest-welfare Nash equilibrium reachable from `∅` by round-robin best
/// responses under some tie resolution.
///
/// Every reachable equilibrium can be held forever (staying is a best
/// response), and every limit point is an equilibrium, so this is the worst
/// limit of the walk.
pub fn worst_reachable_nash(game: &Game, cap: usize) -> Result<(JointAction, f64)> {
    let n = game.n_players();
    let start = game.empty_joint();
    if n == 0 {
        return Ok((start, 0.0));
    }
    let mut seen: HashSet<(usize, JointAction)> = HashSet::new();
    let mut queue = VecDeque::new();
    seen.insert((0, start.clone()));
    queue.push_back((0usize, start));
    let mut worst: Option<(JointAction, f64)> = None;
    let mut options = Vec::new();
    let mut checked: HashSet<JointAction> = HashSet::new();
    while let Some((pos, joint)) = queue.pop_front() {
        if checked.insert(joint.clone()) && is_nash(game, &joint) {
            let w = game.welfare(&joint);
            if worst.as_ref().map_or(true, |(_, b)| w < *b) {
                worst = Some((joint.clone(), w));
            }
        }
        let mut loads = game.loads(&joint);
        for &r in game.action(pos, joint.get(pos)) {
            loads[r] -= 1;
        }
        best_response_set(game, &loads, pos, &mut options);
        for &k in &options {
            let mut next = joint.clone();
            next.set(pos, k);
            let state = ((pos + 1) % n, next);
            if !seen.contains(&state) {
                if seen.len() >= cap {
                    return Err(Error::EnumerationCap {
                        cap,
                        explored: seen.len(),
                        lower_bound: 0.0,
                        best_found: worst.map(|(_, w)| w),
                    });
                }
                seen.insert(state.clone());
                queue.push_back(state);
            }
        }
    }
    worst.ok_or(Error::NoFixedPoint(seen.len()))
}
