use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::rules::{UtilityRule, WelfareRule, RULE_TOL};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Resource {
    pub id: String,
    pub welfare: Arc<WelfareRule>,
    pub utility: Arc<UtilityRule>,
    /// Multiplies both the welfare and the utility generated here.
    pub value: f64,
}

impl Resource {
    pub fn new(id: impl Into<String>, welfare: Arc<WelfareRule>, utility: Arc<UtilityRule>, value: f64) -> Self {
        Resource {
            id: id.into(),
            welfare,
            utility,
            value,
        }
    }
}

/// Index of the chosen action for every player. Action 0 is always `∅`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct JointAction(pub Vec<usize>);

impl JointAction {
    pub fn empty(n_players: usize) -> Self {
        JointAction(vec![0; n_players])
    }

    pub fn get(&self, player: usize) -> usize {
        self.0[player]
    }

    pub fn set(&mut self, player: usize, action: usize) {
        self.0[player] = action;
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<Vec<usize>> for JointAction {
    fn from(v: Vec<usize>) -> Self {
        JointAction(v)
    }
}

/// A resource allocation game.
///
/// Every player's action list starts with the empty action at index 0; the
/// remaining actions are sorted, deduplicated lists of resource indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Game {
    resources: Vec<Resource>,
    actions: Vec<Vec<Vec<usize>>>,
    max_load: Vec<usize>,
}

impl Game {
    /// `action_lists[i]` holds player `i`'s non-empty actions; `∅` is
    /// prepended automatically and empty entries are dropped.
    pub fn new(resources: Vec<Resource>, action_lists: Vec<Vec<Vec<usize>>>) -> Result<Self> {
        let n_res = resources.len();
        let mut actions = Vec::with_capacity(action_lists.len());
        for (i, list) in action_lists.into_iter().enumerate() {
            let mut player_actions = vec![Vec::new()];
            for mut action in list {
                if action.is_empty() {
                    continue;
                }
                action.sort_unstable();
                action.dedup();
                if let Some(&bad) = action.iter().find(|&&r| r >= n_res) {
                    return Err(Error::InvalidGame(format!(
                        "player {i} references unknown resource index {bad}"
                    )));
                }
                player_actions.push(action);
            }
            actions.push(player_actions);
        }
        let mut max_load = vec![0usize; n_res];
        for player_actions in &actions {
            let mut touched: Vec<usize> = player_actions.iter().flatten().copied().collect();
            touched.sort_unstable();
            touched.dedup();
            for r in touched {
                max_load[r] += 1;
            }
        }
        let game = Game {
            resources,
            actions,
            max_load,
        };
        game.validate()?;
        Ok(game)
    }

    fn validate(&self) -> Result<()> {
        let mut seen = HashMap::new();
        for (idx, r) in self.resources.iter().enumerate() {
            if let Some(prev) = seen.insert(r.id.as_str(), idx) {
                return Err(Error::InvalidGame(format!(
                    "duplicate resource id {:?} (indices {prev} and {idx})",
                    r.id
                )));
            }
            if !(r.value.is_finite() && r.value >= 0.0) {
                return Err(Error::InvalidGame(format!("resource {:?} has value {}", r.id, r.value)));
            }
            let (w1, f1) = (r.welfare.eval(1), r.utility.eval(1));
            if (w1 - f1).abs() > RULE_TOL * w1.max(1.0) {
                return Err(Error::InvalidGame(format!(
                    "resource {:?}: f(1) = {f1} differs from w(1) = {w1}",
                    r.id
                )));
            }
            let load = self.max_load[idx];
            if load > r.welfare.j_max() || load > r.utility.j_max() {
                return Err(Error::InvalidGame(format!(
                    "resource {:?} can hold {load} agents but its rules are tabulated to {} / {}",
                    r.id,
                    r.welfare.j_max(),
                    r.utility.j_max()
                )));
            }
        }
        Ok(())
    }

    pub fn n_players(&self) -> usize {
        self.actions.len()
    }

    pub fn n_resources(&self) -> usize {
        self.resources.len()
    }

    pub fn resources(&self) -> &[Resource] {
        &self.resources
    }

    pub fn resource_index(&self, id: &str) -> Option<usize> {
        self.resources.iter().position(|r| r.id == id)
    }

    /// All actions of `player`, `∅` first.
    pub fn actions(&self, player: usize) -> &[Vec<usize>] {
        &self.actions[player]
    }

    pub fn action(&self, player: usize, index: usize) -> &[usize] {
        &self.actions[player][index]
    }

    /// Number of players that could select each resource.
    pub fn max_loads(&self) -> &[usize] {
        &self.max_load
    }

    pub fn empty_joint(&self) -> JointAction {
        JointAction::empty(self.n_players())
    }

    /// Number of joint actions, as a float to avoid overflow.
    pub fn joint_action_count(&self) -> f64 {
        self.actions.iter().map(|a| a.len() as f64).product()
    }

    pub fn check_joint(&self, a: &JointAction) -> Result<()> {
        if a.len() != self.n_players() {
            return Err(Error::InvalidJointAction(format!(
                "expected {} entries, got {}",
                self.n_players(),
                a.len()
            )));
        }
        for (i, &k) in a.0.iter().enumerate() {
            if k >= self.actions[i].len() {
                return Err(Error::InvalidJointAction(format!(
                    "player {i} has {} actions, index {k} given",
                    self.actions[i].len()
                )));
            }
        }
        Ok(())
    }

    /// `|a|_r` for every resource.
    pub fn loads(&self, a: &JointAction) -> Vec<usize> {
        let mut loads = vec![0usize; self.resources.len()];
        for (i, &k) in a.0.iter().enumerate() {
            for &r in &self.actions[i][k] {
                loads[r] += 1;
            }
        }
        loads
    }

    /// `W(a) = Σ_r v_r w_r(|a|_r)`.
    pub fn welfare(&self, a: &JointAction) -> f64 {
        self.welfare_at_loads(&self.loads(a))
    }

    pub fn welfare_at_loads(&self, loads: &[usize]) -> f64 {
        self.resources
            .iter()
            .zip(loads)
            .filter(|(_, &l)| l > 0)
            .map(|(r, &l)| r.value * r.welfare.eval(l))
            .sum()
    }

    /// Marginal-contribution utility `Σ_{r ∈ a_i} v_r f_r(|a|_r)`.
    pub fn utility_mc(&self, a: &JointAction, player: usize) -> f64 {
        let loads = self.loads(a);
        self.utility_at_loads(&loads, player, a.get(player))
    }

    /// Utility of `player` playing action `k` when `loads` already counts it.
    pub(crate) fn utility_at_loads(&self, loads: &[usize], player: usize, k: usize) -> f64 {
        self.actions[player][k]
            .iter()
            .map(|&r| {
                let res = &self.resources[r];
                res.value * res.utility.eval(loads[r])
            })
            .sum()
    }

    /// Utility of switching `player` to action `k`, where `loads_without`
    /// excludes the player's current action.
    #[inline]
    pub(crate) fn deviation_utility(&self, loads_without: &[usize], player: usize, k: usize) -> f64 {
        self.actions[player][k]
            .iter()
            .map(|&r| {
                let res = &self.resources[r];
                res.value * res.utility.eval(loads_without[r] + 1)
            })
            .sum()
    }

    /// Rescales every resource so that `w_r(1) = 1`, moving the old `w_r(1)`
    /// into the resource value. Welfare of every joint action is unchanged.
    pub fn normalize(&self) -> Game {
        let mut cache: HashMap<*const WelfareRule, (Arc<WelfareRule>, f64)> = HashMap::new();
        let mut ucache: HashMap<(*const UtilityRule, u64), Arc<UtilityRule>> = HashMap::new();
        let resources = self
            .resources
            .iter()
            .map(|r| {
                let scale = r.welfare.eval(1);
                if scale == 1.0 {
                    return r.clone();
                }
                let (welfare, _) = cache
                    .entry(Arc::as_ptr(&r.welfare))
                    .or_insert_with(|| (Arc::new(r.welfare.divided(scale)), scale))
                    .clone();
                let utility = ucache
                    .entry((Arc::as_ptr(&r.utility), scale.to_bits()))
                    .or_insert_with(|| Arc::new(r.utility.divided(scale)))
                    .clone();
                Resource {
                    id: r.id.clone(),
                    welfare,
                    utility,
                    value: r.value * scale,
                }
            })
            .collect();
        Game {
            resources,
            actions: self.actions.clone(),
            max_load: self.max_load.clone(),
        }
    }

    /// Replaces every resource's utility rule by `design(welfare)`.
    pub fn with_design<F>(&self, mut design: F) -> Result<Game>
    where
        F: FnMut(&WelfareRule) -> Result<UtilityRule>,
    {
        let mut cache: HashMap<*const WelfareRule, Arc<UtilityRule>> = HashMap::new();
        let mut resources = Vec::with_capacity(self.resources.len());
        for r in &self.resources {
            let key = Arc::as_ptr(&r.welfare);
            let utility = match cache.get(&key) {
                Some(u) => u.clone(),
                None => {
                    let u = Arc::new(design(&r.welfare)?);
                    cache.insert(key, u.clone());
                    u
                }
            };
            resources.push(Resource { utility, ..r.clone() });
        }
        let game = Game {
            resources,
            actions: self.actions.clone(),
            max_load: self.max_load.clone(),
        };
        game.validate()?;
        Ok(game)
    }

    /// Uses the same utility rule on every resource.
    pub fn with_utility(&self, f: UtilityRule) -> Result<Game> {
        let f = Arc::new(f);
        self.with_design(|_| Ok((*f).clone()))
    }
}
