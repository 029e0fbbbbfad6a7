//! Efficiency guarantees from closed forms and linear programs.

mod lp;

use serde::{Deserialize, Serialize};

pub use lp::{DenseLp, DenseSolution, LpStatus, Sense};

use crate::designs::{chi_min, euler, q_to_chi};
use crate::error::{Error, Result};
use crate::model::{UtilityRule, WelfareRule};

/// Residual ceiling for an LP solution to count as optimal.
pub const LP_TOL: f64 = 1e-8;

/// A guarantee evaluated over a truncated index range. `at_boundary` is
/// set when the maximizing index sits on the truncation bound, i.e. a
/// larger bound might change the value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bound {
    pub value: f64,
    pub at_boundary: bool,
}

/// Welfare efficiency guaranteed after one round.
///
/// `1/β` with `β = max_{1≤y≤Y, 0≤z≤Y} (Σ_{i≤y} f(i) - z·min_{i≤y+1} f(i) + w(z)) / w(y)`.
/// Ties keep the first maximizer in `(y, z)` order.
pub fn one_round_eff_bound(w: &WelfareRule, f: &UtilityRule, y_max: usize) -> Bound {
    let y_max = y_max.max(1);
    let mut best = (f64::NEG_INFINITY, 0usize);
    let mut partial = 0.0;
    let mut lowest = f.eval(1);
    for y in 1..=y_max {
        partial += f.eval(y);
        lowest = lowest.min(f.eval(y + 1));
        let wy = w.eval(y);
        for z in 0..=y_max {
            let beta = (partial - z as f64 * lowest + w.eval(z)) / wy;
            if beta > best.0 + 1e-12 {
                best = (beta, y);
            }
        }
    }
    Bound {
        value: 1.0 / best.0,
        at_boundary: best.1 == y_max,
    }
}

/// `[Σ_{i≤J} f(i) - min_{i≤J} f(i) + 1]^{-1}`, the one-round guarantee for
/// set covering truncated at `J`. Nonincreasing in `J`.
pub fn one_round_eff_setcov(f: &UtilityRule, j_trunc: usize) -> f64 {
    let j_trunc = j_trunc.max(1);
    let mut sum = 0.0;
    let mut lowest = f64::INFINITY;
    for i in 1..=j_trunc {
        let v = f.eval(i);
        sum += v;
        lowest = lowest.min(v);
    }
    1.0 / (sum - lowest + 1.0)
}

/// Welfare class for [`poa_closed_form`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum PoaFamily {
    /// Set covering with `n` agents; exact, no truncation.
    SetCovering { n: usize },
    /// Bent rules, maximized over `1 ≤ l ≤ j ≤ j_trunc`.
    Bent { j_trunc: usize },
}

/// Price of anarchy from the closed forms for set covering and bent rules.
pub fn poa_closed_form(w: &WelfareRule, f: &UtilityRule, family: PoaFamily) -> Result<Bound> {
    if (f.eval(1) - 1.0).abs() > 1e-9 || !f.is_nonincreasing() {
        return Err(Error::InvalidParameter(
            "closed forms need a nonincreasing rule with f(1) = 1".into(),
        ));
    }
    match family {
        PoaFamily::SetCovering { n } => {
            if !w.is_set_covering() {
                return Err(Error::InvalidParameter(format!(
                    "set covering closed form applied to {:?}",
                    w.label()
                )));
            }
            if n == 0 {
                return Err(Error::InvalidParameter("n must be at least 1".into()));
            }
            let mut worst = (n as f64 - 1.0) * f.eval(n);
            for j in 1..n {
                worst = worst.max(j as f64 * f.eval(j) - f.eval(j + 1));
            }
            Ok(Bound {
                value: 1.0 / (1.0 + worst),
                at_boundary: false,
            })
        }
        PoaFamily::Bent { j_trunc } => {
            if w.as_bent().is_none() {
                return Err(Error::InvalidParameter(format!("{:?} is not a bent rule", w.label())));
            }
            let j_trunc = j_trunc.max(1);
            let mut best = (f64::NEG_INFINITY, 0usize);
            for j in 1..=j_trunc {
                let (wj, fj, fnext) = (w.eval(j), f.eval(j), f.eval(j + 1));
                for l in 1..=j {
                    let v = (w.eval(l) + j as f64 * fj - l as f64 * fnext) / wj;
                    if v > best.0 + 1e-12 {
                        best = (v, j);
                    }
                }
            }
            Ok(Bound {
                value: 1.0 / best.0,
                at_boundary: best.1 == j_trunc,
            })
        }
    }
}

/// Variables `θ(a, x, b, ℓ)` of the price-of-anarchy LP for `n` agents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpInstance {
    pub n: usize,
    /// `(a, x, b, ℓ)` per column.
    pub index: Vec<(usize, usize, usize, usize)>,
    /// `w_ℓ(b + x)`.
    pub objective: Vec<f64>,
    /// `a f_ℓ(a + x) - b f_ℓ(a + x + 1)`, constrained `≥ 0`.
    pub inequality: Vec<f64>,
    /// `w_ℓ(a + x)`, constrained `= 1`.
    pub equality: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Optimal value `Q`; the price of anarchy is `1/Q`.
    pub q: f64,
    pub theta: Vec<f64>,
    pub primal_residual: f64,
    pub dual_residual: f64,
}

impl LpSolution {
    pub fn poa(&self) -> f64 {
        1.0 / self.q
    }
}

impl LpInstance {
    pub fn new(ws: &[WelfareRule], fs: &[UtilityRule], n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("N must be at least 1".into()));
        }
        if ws.is_empty() || ws.len() != fs.len() {
            return Err(Error::InvalidParameter(format!(
                "{} welfare rules but {} utility rules",
                ws.len(),
                fs.len()
            )));
        }
        let mut inst = LpInstance {
            n,
            index: Vec::new(),
            objective: Vec::new(),
            inequality: Vec::new(),
            equality: Vec::new(),
        };
        for (l, (w, f)) in ws.iter().zip(fs).enumerate() {
            for a in 0..=n {
                for x in 0..=n - a {
                    for b in 0..=n - a - x {
                        if a + x + b == 0 {
                            continue;
                        }
                        inst.index.push((a, x, b, l));
                        inst.objective.push(w.eval(b + x));
                        inst.inequality
                            .push(a as f64 * f.eval(a + x) - b as f64 * f.eval(a + x + 1));
                        inst.equality.push(w.eval(a + x));
                    }
                }
            }
        }
        Ok(inst)
    }

    pub fn solve(&self) -> Result<LpSolution> {
        let lp = DenseLp {
            objective: self.objective.clone(),
            rows: vec![
                (self.inequality.clone(), Sense::Ge, 0.0),
                (self.equality.clone(), Sense::Eq, 1.0),
            ],
        };
        let s = lp.solve();
        if s.status != LpStatus::Optimal {
            return Err(Error::Lp {
                status: s.status.to_string(),
                detail: format!("primal residual {:e}", s.primal_residual),
            });
        }
        let residual = s.primal_residual.max(s.dual_residual);
        if residual > LP_TOL {
            return Err(Error::Lp {
                status: "inaccurate".into(),
                detail: format!(
                    "primal residual {:e}, dual residual {:e}",
                    s.primal_residual, s.dual_residual
                ),
            });
        }
        Ok(LpSolution {
            status: s.status,
            q: s.value,
            theta: s.x,
            primal_residual: s.primal_residual,
            dual_residual: s.dual_residual,
        })
    }
}

/// Price of anarchy for `n` agents from the LP over `(a, x, b)` profiles.
pub fn poa_lp(ws: &[WelfareRule], fs: &[UtilityRule], n: usize) -> Result<f64> {
    Ok(LpInstance::new(ws, fs, n)?.solve()?.poa())
}

/// A point on the set covering trade-off between asymptotic efficiency `Q`
/// and the one-round guarantee.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrontierPoint {
    pub q: f64,
    pub one_round: f64,
}

/// Best one-round guarantee among set covering designs whose asymptotic
/// efficiency is `Q ∈ [1/2, 1 - 1/e]`, truncated at `J`.
pub fn frontier_setcov(q: f64, j_trunc: usize) -> Result<FrontierPoint> {
    let q_max = 1.0 - 1.0 / euler();
    if !(0.5..=q_max + 1e-12).contains(&q) {
        return Err(Error::InvalidParameter(format!("Q = {q} outside [1/2, 1 - 1/e]")));
    }
    let chi = q_to_chi(q).max(chi_min());
    let f = crate::designs::design_pareto_setcov(chi, j_trunc.max(1))?;
    Ok(FrontierPoint {
        q,
        one_round: one_round_eff_setcov(&f, j_trunc),
    })
}

/// Horizon selector for [`theory_bounds`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "horizon", rename_all = "snake_case")]
pub enum Horizon {
    One,
    Finite { k: usize },
    Infinity,
}

/// Design selector for [`theory_bounds`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundDesign {
    /// The best design for the chosen horizon.
    Optimal,
    CommonInterest,
    /// The asymptotically optimal design evaluated after one round.
    AsymptoticDesignAtOneRound,
}

/// Guarantees for bent welfare with curvature `C`.
pub fn theory_bounds(c: f64, horizon: Horizon, design: BoundDesign) -> Result<f64> {
    if !(0.0..=1.0).contains(&c) {
        return Err(Error::InvalidParameter(format!("curvature C = {c} must lie in [0, 1]")));
    }
    let e = euler();
    Ok(match (design, horizon) {
        (BoundDesign::Optimal, Horizon::Infinity) => 1.0 - c / e,
        (BoundDesign::Optimal, _) => 1.0 - c / 2.0,
        (BoundDesign::CommonInterest, _) => 1.0 / (1.0 + c),
        (BoundDesign::AsymptoticDesignAtOneRound, Horizon::One) => 1.0 + (c - 3.0) * c / ((2.0 - c) * e + c),
        (BoundDesign::AsymptoticDesignAtOneRound, h) => {
            return Err(Error::InvalidParameter(format!(
                "the asymptotic design bound is stated for one round, not {h:?}"
            )))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::designs::{design_asymptotic, design_common_interest, design_one_round_bent};
    use crate::model::{make_welfare_rule, WelfareFamily};

    fn bent(c: f64, j: usize) -> WelfareRule {
        make_welfare_rule(&WelfareFamily::Bent { b: 1, c }, j).unwrap()
    }

    fn setcov(j: usize) -> WelfareRule {
        make_welfare_rule(&WelfareFamily::SetCovering, j).unwrap()
    }

    #[test]
    fn one_round_bound_examples() {
        let b = one_round_eff_bound(&bent(0.5, 60), &design_one_round_bent(0.5, 60).unwrap(), 50);
        assert!((b.value - 0.75).abs() < 1e-12);
        assert!(!b.at_boundary);
        let sc = setcov(60);
        let b = one_round_eff_bound(&sc, &design_common_interest(&sc), 50);
        assert!((b.value - 0.5).abs() < 1e-12);
        let lin = bent(0.0, 60);
        let b = one_round_eff_bound(&lin, &design_common_interest(&lin), 50);
        assert!((b.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn setcov_one_round() {
        let ci = design_common_interest(&setcov(4));
        assert!((one_round_eff_setcov(&ci, 10) - 0.5).abs() < 1e-15);
        let flat = UtilityRule::new(vec![1.0], 1.0).unwrap();
        assert!((one_round_eff_setcov(&flat, 100) - 0.01).abs() < 1e-15);
    }

    #[test]
    fn closed_forms() {
        let sc = setcov(60);
        let ci = design_common_interest(&sc);
        let b = poa_closed_form(&sc, &ci, PoaFamily::SetCovering { n: 50 }).unwrap();
        assert!((b.value - 0.5).abs() < 1e-12);
        let f = design_asymptotic(1, 1.0, 60).unwrap();
        let b = poa_closed_form(&sc, &f, PoaFamily::SetCovering { n: 50 }).unwrap();
        assert!((b.value - (1.0 - (-1.0f64).exp())).abs() < 1e-9);
        let w = bent(0.5, 60);
        let b = poa_closed_form(&w, &design_one_round_bent(0.5, 60).unwrap(), PoaFamily::Bent { j_trunc: 50 }).unwrap();
        assert!((b.value - 0.75).abs() < 1e-12);
        assert!(poa_closed_form(&w, &ci, PoaFamily::SetCovering { n: 5 }).is_err());
        assert!(poa_closed_form(&sc, &ci, PoaFamily::Bent { j_trunc: 5 }).is_ok());
    }

    #[test]
    fn lp_matches_closed_form() {
        let sc = setcov(20);
        let ci = design_common_interest(&sc);
        let poa = poa_lp(&[sc.clone()], &[ci.clone()], 8).unwrap();
        assert!((poa - 0.5).abs() < 1e-9);
        assert!((poa_lp(&[sc.clone()], &[ci], 1).unwrap() - 1.0).abs() < 1e-12);
        let w = bent(0.5, 20);
        let f = design_common_interest(&w);
        let lp = poa_lp(&[w.clone()], &[f.clone()], 8).unwrap();
        let cf = poa_closed_form(&w, &f, PoaFamily::Bent { j_trunc: 8 }).unwrap();
        assert!((lp - cf.value).abs() < 1e-6, "{lp} vs {}", cf.value);
    }

    #[test]
    fn frontier_endpoints() {
        assert_eq!(frontier_setcov(0.5, 1000).unwrap().one_round, 0.5);
        let top = 1.0 - 1.0 / std::f64::consts::E;
        let a = frontier_setcov(top, 1000).unwrap().one_round;
        let b = frontier_setcov(top, 10_000).unwrap().one_round;
        assert!(b < a);
        assert!(frontier_setcov(0.4, 10).is_err());
    }

    #[test]
    fn bound_formulas() {
        let e = std::f64::consts::E;
        assert_eq!(theory_bounds(1.0, Horizon::One, BoundDesign::Optimal).unwrap(), 0.5);
        assert!((theory_bounds(1.0, Horizon::Infinity, BoundDesign::Optimal).unwrap() - (1.0 - 1.0 / e)).abs() < 1e-15);
        let v = theory_bounds(1.0, Horizon::One, BoundDesign::AsymptoticDesignAtOneRound).unwrap();
        assert!((v - (1.0 - 2.0 / (e + 1.0))).abs() < 1e-15);
        assert_eq!(theory_bounds(0.5, Horizon::Finite { k: 3 }, BoundDesign::CommonInterest).unwrap(), 1.0 / 1.5);
        assert!(theory_bounds(1.0, Horizon::Infinity, BoundDesign::AsymptoticDesignAtOneRound).is_err());
    }
}
