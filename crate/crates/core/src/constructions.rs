//! Worst-case game families.
//!
//! Blocks of identical resources are represented by a single resource
//! whose value is the block size: a resource of value `k` contributes
//! exactly what `k` copies of a unit resource would, to both welfare and
//! utilities. [`Scaling::Exact`] keeps fractional sizes as they are;
//! [`Scaling::Rational`] rounds them to integers over a common denominator,
//! which is how the paper-style constructions are realized with unit
//! resources.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::analytics::{LpInstance, LpSolution};
use crate::designs::{design_common_interest, DesignSpec};
use crate::dynamics::TieBreak;
use crate::error::{Error, Result};
use crate::model::{make_welfare_rule, Game, JointAction, Resource, UtilityRule, WelfareFamily, WelfareRule};

/// How fractional block sizes are realized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Scaling {
    /// Sizes are resource values and may be any nonnegative real.
    Exact,
    /// Sizes are multiplied by the smallest common denominator
    /// `q ≤ max_denominator` that makes them integral (to 1e-9).
    Rational { max_denominator: u64 },
}

impl Default for Scaling {
    fn default() -> Self {
        Scaling::Exact
    }
}

/// Which family to build.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConstructionKind {
    Example3 { eps: f64 },
    Thm2TwoAgent { c: f64, f: UtilityRule },
    CiChain { n: usize, c: f64 },
    SetcovStackSpread { n: usize, f: UtilityRule, base_size: u64 },
    /// Solves the `n1`-agent LP for one welfare rule and design, then
    /// builds the `n2`-agent matching game from its solution.
    PoaMatching { welfare: WelfareFamily, design: DesignSpec, n1: usize, n2: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstructionSpec {
    #[serde(flatten)]
    pub kind: ConstructionKind,
    #[serde(default)]
    pub scaling: Scaling,
}

/// Sidecar describing a built game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstructionMeta {
    pub kind: String,
    /// Efficiency the construction is designed to realize, computed from
    /// the realized block sizes.
    pub target_ratio: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub case: Option<String>,
    /// Tie resolution under which the target is reached.
    pub tie_hint: TieBreak,
    /// Multiplier applied to the nominal block sizes.
    pub scale: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nash: Option<JointAction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimum: Option<JointAction>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Construction {
    pub game: Game,
    pub meta: ConstructionMeta,
}

impl ConstructionSpec {
    pub fn build(&self) -> Result<Construction> {
        match &self.kind {
            ConstructionKind::Example3 { eps } => build_example3(*eps),
            ConstructionKind::Thm2TwoAgent { c, f } => build_thm2_game(*c, f, self.scaling),
            ConstructionKind::CiChain { n, c } => build_ci_chain(*n, *c),
            ConstructionKind::SetcovStackSpread { n, f, base_size } => {
                build_setcov_stack_spread(*n, f, *base_size, self.scaling)
            }
            ConstructionKind::PoaMatching { welfare, design, n1, n2 } => {
                let w = make_welfare_rule(welfare, n1 + 1)?;
                let f = design.resolve(&w)?;
                let (ws, fs) = (vec![w], vec![f]);
                let lp = LpInstance::new(&ws, &fs, *n1)?;
                let solution = lp.solve()?;
                build_poa_matching(&lp, &solution, &ws, &fs, *n2, self.scaling)
            }
        }
    }
}

/// Best rational approximation `p/q` of `v` with `q ≤ bound`.
fn best_rational(v: f64, bound: u64) -> (u64, u64) {
    let (mut p0, mut q0, mut p1, mut q1) = (0u64, 1u64, 1u64, 0u64);
    let mut x = v;
    loop {
        let a = x.floor();
        if a > u64::MAX as f64 / 2.0 {
            break;
        }
        let a = a as u64;
        let q2 = a.saturating_mul(q1).saturating_add(q0);
        if q2 > bound {
            break;
        }
        let p2 = a.saturating_mul(p1).saturating_add(p0);
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        let frac = x - a as f64;
        if frac < 1e-12 || (p1 as f64 / q1 as f64 - v).abs() < 1e-15 * v.max(1.0) {
            break;
        }
        x = 1.0 / frac;
    }
    if q1 == 0 {
        (v.round() as u64, 1)
    } else {
        (p1, q1)
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Scales nonnegative `sizes` to integers. Returns the realized sizes and
/// the multiplier.
fn realize(sizes: &[f64], scaling: Scaling) -> Result<(Vec<f64>, f64)> {
    let bound = match scaling {
        Scaling::Exact => return Ok((sizes.to_vec(), 1.0)),
        Scaling::Rational { max_denominator } => max_denominator.max(1),
    };
    let mut q = 1u64;
    for &s in sizes {
        let (p, d) = best_rational(s, bound);
        if (p as f64 / d as f64 - s).abs() > 1e-9 * s.max(1.0) {
            return Err(Error::ScalingBound { bound });
        }
        q = q / gcd(q, d) * d;
        if q > bound {
            return Err(Error::ScalingBound { bound });
        }
    }
    let realized = sizes.iter().map(|s| (s * q as f64).round()).collect();
    Ok((realized, q as f64))
}

fn unit_rule(family: WelfareFamily, j_max: usize) -> Result<Arc<WelfareRule>> {
    Ok(Arc::new(make_welfare_rule(&family, j_max)?))
}

/// Two agents over three set covering resources worth 1, 1 + ε and ε;
/// utilities default to common interest.
pub fn build_example3(eps: f64) -> Result<Construction> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::InvalidParameter(format!("epsilon = {eps} must lie in [0, 1)")));
    }
    let w = unit_rule(WelfareFamily::SetCovering, 2)?;
    let f = Arc::new(design_common_interest(&w));
    let resources = vec![
        Resource::new("r1", w.clone(), f.clone(), 1.0),
        Resource::new("r2", w.clone(), f.clone(), 1.0 + eps),
        Resource::new("r3", w, f, eps),
    ];
    let game = Game::new(resources, vec![vec![vec![0], vec![1]], vec![vec![1], vec![2]]])?;
    Ok(Construction {
        game,
        meta: ConstructionMeta {
            kind: "example3".into(),
            target_ratio: (1.0 + 2.0 * eps) / (2.0 + eps),
            case: None,
            tie_hint: TieBreak::IncumbentThenLex,
            scale: 1.0,
            nash: Some(JointAction(vec![2, 2])),
            optimum: Some(JointAction(vec![1, 1])),
        },
    })
}

/// Two-agent game over blocks `R1, R2, R3` with bent(1, C) welfare,
/// `|R1| = |R2| = x` and `|R3| = f(2)·x`. The wiring follows the position of
/// `f(2)` relative to `1 - C` and `1`:
///
/// * (a) `f(2) ≤ 1 - C`: `A1 = {R1, R2}`, `A2 = {R3, R1}`; the walk ends at
///   `(R1, R3)` against the optimum `(R2, R1)`.
/// * (b) `1 - C < f(2) ≤ 1`: same action sets; the walk ends at `(R1, R1)`.
/// * (c) `f(2) > 1`: `A1 = {R1, R2}`, `A2 = {R1, R3}`; the walk ends at
///   `(R1, R1)` against the optimum `(R2, R3)`.
pub fn build_thm2_game(c: f64, f: &UtilityRule, scaling: Scaling) -> Result<Construction> {
    if !(0.0..=1.0).contains(&c) {
        return Err(Error::InvalidParameter(format!("curvature C = {c} must lie in [0, 1]")));
    }
    if (f.eval(1) - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter("the utility rule must have f(1) = 1".into()));
    }
    let f2 = f.eval(2);
    let case = if f2 <= 1.0 - c + 1e-12 {
        "a"
    } else if f2 <= 1.0 + 1e-12 {
        "b"
    } else {
        "c"
    };
    let (sizes, scale) = realize(&[1.0, 1.0, f2], scaling)?;
    let (x, r3) = (sizes[0], sizes[2]);
    let w = unit_rule(WelfareFamily::Bent { b: 1, c }, 2)?;
    let f = Arc::new(f.with_j_max(2));
    let resources = vec![
        Resource::new("R1", w.clone(), f.clone(), x),
        Resource::new("R2", w.clone(), f.clone(), x),
        Resource::new("R3", w.clone(), f, r3),
    ];
    let w2 = w.eval(2);
    let (actions, target, nash, optimum) = match case {
        "a" => (
            vec![vec![vec![0], vec![1]], vec![vec![2], vec![0]]],
            (x + r3) / (2.0 * x),
            vec![1, 1],
            vec![2, 2],
        ),
        "b" => (
            vec![vec![vec![0], vec![1]], vec![vec![2], vec![0]]],
            w2 * x / (2.0 * x),
            vec![1, 2],
            vec![2, 2],
        ),
        _ => (
            vec![vec![vec![0], vec![1]], vec![vec![0], vec![2]]],
            w2 * x / (x + r3),
            vec![1, 1],
            vec![2, 2],
        ),
    };
    let game = Game::new(resources, actions)?;
    Ok(Construction {
        game,
        meta: ConstructionMeta {
            kind: "thm2_two_agent".into(),
            target_ratio: target,
            case: Some(case.into()),
            tie_hint: TieBreak::adversarial(),
            scale,
            nash: Some(JointAction(nash)),
            optimum: Some(JointAction(optimum)),
        },
    })
}

/// Chain of `n` agents under common-interest utilities.
///
/// Resources: `R^opt_j` (j = 1..n) worth `C` each, `R^both_j`
/// (j = 1..n-1) and `r^n` worth 1, all with bent(1, C) welfare. Agent `j`
/// either grabs `R^both_j` (`r^n` for the last agent) or takes `R^opt_j`
/// together with `R^both_{j-1}`. The all-good profile has welfare
/// `(n-1)(1+C) + C` against `n` for the all-greedy Nash equilibrium.
pub fn build_ci_chain(n: usize, c: f64) -> Result<Construction> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("chain needs n >= 2 agents, got {n}")));
    }
    if !(0.0..=1.0).contains(&c) {
        return Err(Error::InvalidParameter(format!("curvature C = {c} must lie in [0, 1]")));
    }
    let w = unit_rule(WelfareFamily::Bent { b: 1, c }, n)?;
    let f = Arc::new(design_common_interest(&w));
    let mut resources = Vec::with_capacity(2 * n);
    for j in 1..=n {
        resources.push(Resource::new(format!("opt{j}"), w.clone(), f.clone(), c));
    }
    for j in 1..n {
        resources.push(Resource::new(format!("both{j}"), w.clone(), f.clone(), 1.0));
    }
    resources.push(Resource::new(format!("r{n}"), w, f, 1.0));
    let opt = |j: usize| j - 1;
    let both = |j: usize| n + j - 1;
    let actions = (1..=n)
        .map(|j| {
            let greedy = if j < n { vec![both(j)] } else { vec![2 * n - 1] };
            let mut good = vec![opt(j)];
            if j > 1 {
                good.push(both(j - 1));
            }
            vec![greedy, good]
        })
        .collect();
    let game = Game::new(resources, actions)?;
    // Everyone on the good action is optimal only for C >= 1/2; below that,
    // moving agent 1 to its greedy action gains 1 - 2C.
    let mut optimum = vec![2; n];
    if c < 0.5 {
        optimum[0] = 1;
    }
    let nash = JointAction(vec![1; n]);
    let optimum = JointAction(optimum);
    Ok(Construction {
        meta: ConstructionMeta {
            kind: "ci_chain".into(),
            target_ratio: game.welfare(&nash) / game.welfare(&optimum),
            case: None,
            tie_hint: TieBreak::adversarial(),
            scale: 1.0,
            nash: Some(nash),
            optimum: Some(optimum),
        },
        game,
    })
}

/// `n` agents that either stack on a shared set covering block `R0` of
/// `base_size` resources or spread to a private block `R_i` of
/// `f(i)·base_size` resources.
pub fn build_setcov_stack_spread(n: usize, f: &UtilityRule, base_size: u64, scaling: Scaling) -> Result<Construction> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    if base_size == 0 {
        return Err(Error::InvalidParameter("base_size must be positive".into()));
    }
    if (f.eval(1) - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter("the utility rule must have f(1) = 1".into()));
    }
    let base = base_size as f64;
    let nominal: Vec<f64> = std::iter::once(base).chain((1..=n).map(|i| f.eval(i) * base)).collect();
    let (sizes, scale) = realize(&nominal, scaling)?;
    let w = unit_rule(WelfareFamily::SetCovering, n)?;
    let f = Arc::new(f.with_j_max(n));
    let resources = sizes
        .iter()
        .enumerate()
        .map(|(i, &s)| Resource::new(format!("R{i}"), w.clone(), f.clone(), s))
        .collect();
    let actions = (1..=n).map(|i| vec![vec![0], vec![i]]).collect();
    let game = Game::new(resources, actions)?;
    let spread: f64 = sizes[1..].iter().sum();
    let (argmin, smallest) = sizes[1..]
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &s)| if s < acc.1 { (i, s) } else { acc });
    let mut optimum = vec![2; n];
    optimum[argmin] = 1;
    Ok(Construction {
        game,
        meta: ConstructionMeta {
            kind: "setcov_stack_spread".into(),
            target_ratio: sizes[0] / (sizes[0] + spread - smallest),
            case: None,
            tie_hint: TieBreak::adversarial(),
            scale,
            nash: Some(JointAction(vec![1; n])),
            optimum: Some(JointAction(optimum)),
        },
    })
}

/// Matching game realizing the LP solution `θ` with `n2` agents.
///
/// Every profile `(a, x, b, ℓ)` with `θ > 0` gets blocks `R_k`,
/// `1 ≤ k ≤ D`, each worth `θ/D` (times the scaling
/// multiplier). Agent `i` covers `R_k` for `i ≤ k ≤ a + x + i - 1` in its
/// Nash action and, when `a + b + x ≤ i`, `R_k` for
/// `i - b ≤ k ≤ x + i - 1` in its optimal action; windows are truncated to
/// `[1, D]`. `D = n2 + max(a + x) - 1` over the support is shared by all
/// profiles. The Nash and optimal joint actions are recorded in the
/// metadata, whose target ratio is `W(ne)/W(opt)` for the realized game.
pub fn build_poa_matching(
    lp: &LpInstance,
    theta: &LpSolution,
    ws: &[WelfareRule],
    fs: &[UtilityRule],
    n2: usize,
    scaling: Scaling,
) -> Result<Construction> {
    if n2 <= lp.n {
        return Err(Error::InvalidParameter(format!("N2 = {n2} must exceed N1 = {}", lp.n)));
    }
    if ws.len() != fs.len() || theta.theta.len() != lp.index.len() {
        return Err(Error::InvalidParameter("LP solution does not match the rule lists".into()));
    }
    let support: Vec<usize> = (0..lp.index.len()).filter(|&v| theta.theta[v] > 1e-12).collect();
    // one block count for every profile, so that each agent's deviation
    // gain is exactly the LP inequality scaled by 1/D
    let reach = support.iter().map(|&v| lp.index[v].0 + lp.index[v].1).max().unwrap_or(1);
    let d = n2 + reach - 1;
    let mut nominal = Vec::new();
    for &v in &support {
        nominal.extend(std::iter::repeat(theta.theta[v] / d as f64).take(d));
    }
    let (sizes, scale) = realize(&nominal, scaling)?;

    let mut resources = Vec::with_capacity(sizes.len());
    let mut ne: Vec<Vec<usize>> = vec![Vec::new(); n2];
    let mut opt: Vec<Vec<usize>> = vec![Vec::new(); n2];
    let mut offset = 0usize;
    for &v in &support {
        let (a, x, b, l) = lp.index[v];
        let w = Arc::new(ws[l].clone());
        let f = Arc::new(fs[l].with_j_max(n2.max(fs[l].j_max())));
        for k in 1..=d {
            resources.push(Resource::new(
                format!("R{k}_a{a}x{x}b{b}l{l}"),
                w.clone(),
                f.clone(),
                sizes[offset + k - 1],
            ));
        }
        let id = |k: usize| offset + k - 1;
        for i in 1..=n2 {
            for k in i..=(a + x + i - 1).min(d) {
                ne[i - 1].push(id(k));
            }
            if a + b + x <= i {
                let lo = i.saturating_sub(b).max(1);
                for k in lo..=(x + i - 1).min(d) {
                    opt[i - 1].push(id(k));
                }
            }
        }
        offset += d;
    }
    // welfare tables must cover every reachable load
    let resources = resources
        .into_iter()
        .map(|r| {
            if r.welfare.j_max() >= n2 {
                return Ok(r);
            }
            let extended = WelfareRule::new(
                (1..=n2).map(|j| r.welfare.eval(j)).collect(),
                r.welfare.tail_slope(),
                r.welfare.label().to_string(),
            )?;
            Ok(Resource::new(r.id, Arc::new(extended), r.utility, r.value))
        })
        .collect::<Result<Vec<_>>>()?;

    // action 1 is ne_i; action 2 is opt_i unless it is empty or equal to ne_i
    let mut nash = Vec::with_capacity(n2);
    let mut optimum = Vec::with_capacity(n2);
    let mut actions = Vec::with_capacity(n2);
    for i in 0..n2 {
        let mut list = Vec::new();
        let mut ne_i = ne[i].clone();
        ne_i.sort_unstable();
        let mut opt_i = opt[i].clone();
        opt_i.sort_unstable();
        let ne_idx = if ne_i.is_empty() {
            0
        } else {
            list.push(ne_i.clone());
            list.len()
        };
        let opt_idx = if opt_i.is_empty() {
            0
        } else if opt_i == ne_i {
            ne_idx
        } else {
            list.push(opt_i);
            list.len()
        };
        nash.push(ne_idx);
        optimum.push(opt_idx);
        actions.push(list);
    }
    let game = Game::new(resources, actions)?;
    let nash = JointAction(nash);
    let optimum = JointAction(optimum);
    let target = game.welfare(&nash) / game.welfare(&optimum);
    Ok(Construction {
        game,
        meta: ConstructionMeta {
            kind: "poa_matching".into(),
            target_ratio: target,
            case: None,
            tie_hint: TieBreak::Prefer { target: nash.clone() },
            scale,
            nash: Some(nash),
            optimum: Some(optimum),
        },
    })
}
