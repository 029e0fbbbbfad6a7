//! Exact welfare maximization.
//!
//! Small games are enumerated outright. Larger ones first go through max-sum
//! variable elimination on the resource factor graph: every resource is a
//! factor over the players able to select it, so sparse instances such as
//! chains stay cheap even with hundreds of players.

use crate::error::{Error, Result};
use crate::model::{Game, JointAction};

/// Largest number of joint actions (or factor table entries) examined.
pub const DEFAULT_ENUMERATION_BUDGET: usize = 100_000_000;

/// Welfare-maximizing joint action with the default budget.
pub fn optimum(game: &Game) -> Result<(JointAction, f64)> {
    optimum_with_budget(game, DEFAULT_ENUMERATION_BUDGET)
}

/// Games with at most this many joint actions are always enumerated.
const SMALL_GAME: f64 = 100_000.0;

/// Brute force for small games. Larger ones try variable elimination with
/// a table limit of `min(budget, 10^6)` first, which is instant on sparse
/// interaction graphs, and fall back to brute force when `Π|A_i| ≤ budget`.
pub fn optimum_with_budget(game: &Game, budget: usize) -> Result<(JointAction, f64)> {
    let count = game.joint_action_count();
    if count <= SMALL_GAME {
        return optimum_brute_force(game, budget);
    }
    match optimum_elimination(game, budget.min(1_000_000)) {
        Err(Error::BudgetExceeded { .. }) if count <= budget as f64 => optimum_brute_force(game, budget),
        Err(Error::BudgetExceeded { .. }) if budget > 1_000_000 => optimum_elimination(game, budget),
        other => other,
    }
}

/// Enumerates every joint action; the first maximizer in mixed-radix order
/// (player 0 fastest) wins.
pub fn optimum_brute_force(game: &Game, budget: usize) -> Result<(JointAction, f64)> {
    let count = game.joint_action_count();
    if count > budget as f64 {
        return Err(Error::BudgetExceeded {
            needed: count,
            budget: budget as f64,
        });
    }
    let n = game.n_players();
    let mut joint = vec![0usize; n];
    let mut loads = vec![0usize; game.n_resources()];
    let mut best = (joint.clone(), game.welfare_at_loads(&loads));
    loop {
        // odometer increment with incremental load bookkeeping
        let mut i = 0;
        loop {
            if i == n {
                return Ok((JointAction(best.0), best.1));
            }
            for &r in game.action(i, joint[i]) {
                loads[r] -= 1;
            }
            joint[i] += 1;
            if joint[i] < game.actions(i).len() {
                for &r in game.action(i, joint[i]) {
                    loads[r] += 1;
                }
                break;
            }
            joint[i] = 0;
            i += 1;
        }
        let w = game.welfare_at_loads(&loads);
        if w > best.1 {
            best = (joint.clone(), w);
        }
    }
}

#[derive(Debug, Clone)]
struct Factor {
    /// Players in increasing order.
    scope: Vec<usize>,
    /// Row-major strides, last player fastest.
    strides: Vec<usize>,
    table: Vec<f64>,
}

impl Factor {
    fn new(scope: Vec<usize>, dims: &[usize], table: Vec<f64>) -> Self {
        let mut strides = vec![1usize; scope.len()];
        for k in (0..scope.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * dims[scope[k + 1]];
        }
        Factor { scope, strides, table }
    }

    fn index(&self, assignment: &[usize]) -> usize {
        self.scope.iter().zip(&self.strides).map(|(&p, &s)| assignment[p] * s).sum()
    }
}

fn table_size(scope: &[usize], dims: &[usize], budget: usize) -> Option<usize> {
    scope.iter().try_fold(1usize, |acc, &p| acc.checked_mul(dims[p]).filter(|&s| s <= budget))
}

/// Steps an assignment of `scope` through every combination; returns false
/// after the last one.
fn advance(scope: &[usize], dims: &[usize], assignment: &mut [usize]) -> bool {
    for &p in scope.iter().rev() {
        assignment[p] += 1;
        if assignment[p] < dims[p] {
            return true;
        }
        assignment[p] = 0;
    }
    false
}

/// Exact max-sum variable elimination with a greedy smallest-table order.
///
/// Fails with [`Error::BudgetExceeded`] when an intermediate table would
/// exceed `budget` entries.
pub fn optimum_elimination(game: &Game, budget: usize) -> Result<(JointAction, f64)> {
    let n = game.n_players();
    let dims: Vec<usize> = (0..n).map(|i| game.actions(i).len()).collect();
    let mut users: Vec<Vec<usize>> = vec![Vec::new(); game.n_resources()];
    for i in 0..n {
        for action in game.actions(i) {
            for &r in action {
                if users[r].last() != Some(&i) {
                    users[r].push(i);
                }
            }
        }
    }

    let mut constant = 0.0;
    let mut factors: Vec<Option<Factor>> = Vec::new();
    let mut assignment = vec![0usize; n];
    for (r, scope) in users.into_iter().enumerate() {
        let res = &game.resources()[r];
        if scope.is_empty() {
            continue;
        }
        let size = table_size(&scope, &dims, budget).ok_or(Error::BudgetExceeded {
            needed: scope.iter().map(|&p| dims[p] as f64).product(),
            budget: budget as f64,
        })?;
        let mut table = Vec::with_capacity(size);
        loop {
            let load = scope
                .iter()
                .filter(|&&p| game.action(p, assignment[p]).contains(&r))
                .count();
            table.push(if load == 0 { 0.0 } else { res.value * res.welfare.eval(load) });
            if !advance(&scope, &dims, &mut assignment) {
                break;
            }
        }
        factors.push(Some(Factor::new(scope, &dims, table)));
    }

    // eliminated player, the factor holding its argmax over the rest
    let mut trail: Vec<(usize, Factor)> = Vec::new();
    let mut alive: Vec<bool> = vec![true; n];
    for _ in 0..n {
        // greedy choice: the player whose elimination yields the smallest table
        let mut pick: Option<(usize, Vec<usize>, usize)> = None;
        for p in (0..n).filter(|&p| alive[p]) {
            let mut merged: Vec<usize> = factors
                .iter()
                .flatten()
                .filter(|f| f.scope.contains(&p))
                .flat_map(|f| f.scope.iter().copied())
                .filter(|&q| q != p)
                .collect();
            merged.sort_unstable();
            merged.dedup();
            let size = merged.iter().fold(1f64, |acc, &q| acc * dims[q] as f64) * dims[p] as f64;
            let size = if size > usize::MAX as f64 { usize::MAX } else { size as usize };
            if pick.as_ref().map_or(true, |(_, _, s)| size < *s) {
                pick = Some((p, merged, size));
            }
        }
        let (p, rest, size) = pick.expect("an alive player remains");
        if size > budget {
            return Err(Error::BudgetExceeded {
                needed: size as f64,
                budget: budget as f64,
            });
        }
        alive[p] = false;
        let involved: Vec<Factor> = factors
            .iter_mut()
            .filter(|f| f.as_ref().is_some_and(|f| f.scope.contains(&p)))
            .map(|f| f.take().expect("filtered on presence"))
            .collect();

        let out_size = rest.iter().map(|&q| dims[q]).product::<usize>();
        let mut values = Vec::with_capacity(out_size);
        let mut argmax = Vec::with_capacity(out_size);
        for &q in &rest {
            assignment[q] = 0;
        }
        loop {
            let mut best = (f64::NEG_INFINITY, 0usize);
            for k in 0..dims[p] {
                assignment[p] = k;
                let v: f64 = involved.iter().map(|f| f.table[f.index(&assignment)]).sum();
                if v > best.0 {
                    best = (v, k);
                }
            }
            values.push(best.0);
            argmax.push(best.1 as f64);
            if !advance(&rest, &dims, &mut assignment) {
                break;
            }
        }
        assignment[p] = 0;
        if rest.is_empty() {
            constant += values[0];
        } else {
            factors.push(Some(Factor::new(rest.clone(), &dims, values)));
        }
        trail.push((p, Factor::new(rest, &dims, argmax)));
    }

    let mut joint = vec![0usize; n];
    for (p, choice) in trail.iter().rev() {
        joint[*p] = choice.table[choice.index(&joint)] as usize;
    }
    let joint = JointAction(joint);
    let welfare = game.welfare(&joint);
    debug_assert!((welfare - constant).abs() <= 1e-9 * constant.abs().max(1.0));
    Ok((joint, welfare))
}
