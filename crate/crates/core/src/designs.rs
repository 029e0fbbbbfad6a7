//! Utility designs.
//!
//! Every constructor returns a rule in marginal form with `f(1) = 1`
//! (common interest keeps `f(1) = w(1)`). The asymptotic and Pareto rules
//! are defined by recursions of the form `f(t+1) = (t/β) f(t) - g(t)`,
//! which multiply rounding error by `t` each step. They are tabulated
//! instead from the bounded solution
//!
//! ```text
//! f(t) = Σ_{m≥0} g(t+m) Π_{i=0}^{m} β/(t+i)
//! ```
//!
//! whose terms decay factorially, so every entry is accurate to a few ulps
//! no matter how far out the table goes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{UtilityRule, WelfareRule};

/// Euler's number from its factorial series.
pub fn euler() -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..=20 {
        term /= k as f64;
        sum += term;
    }
    sum
}

/// `ρ = (1 - C/e)^{-1}`.
pub fn rho(c: f64) -> f64 {
    let e = euler();
    e / (e - c)
}

/// `ρ^b = (1 - b^b e^{-b} / b!)^{-1}`; equals `rho(1)` at `b = 1`.
pub fn rho_b(b: usize) -> f64 {
    let e = euler();
    let mut ratio = 1.0;
    for i in 1..=b {
        ratio *= b as f64 / i as f64 / e;
    }
    1.0 / (1.0 - ratio)
}

fn check_c(c: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&c) {
        return Err(Error::InvalidParameter(format!("curvature C = {c} must lie in [0, 1]")));
    }
    Ok(())
}

fn check_j_max(j_max: usize, min: usize) -> Result<()> {
    if j_max < min {
        return Err(Error::InvalidParameter(format!("J_max = {j_max} must be at least {min}")));
    }
    Ok(())
}

/// Marginal form of the identity design: `f(j) = w(j) - w(j-1)`.
pub fn design_common_interest(w: &WelfareRule) -> UtilityRule {
    let values = (1..=w.j_max()).map(|j| w.marginal(j).max(0.0)).collect();
    UtilityRule::new(values, w.tail_slope().max(0.0)).expect("marginals of a concave rule are nonincreasing")
}

/// `f(1) = 1`, `f(j) = (2 - 2C)/(2 - C)` for `j ≥ 2`.
pub fn design_one_round_bent(c: f64, j_max: usize) -> Result<UtilityRule> {
    check_c(c)?;
    check_j_max(j_max, 1)?;
    let rest = (2.0 - 2.0 * c) / (2.0 - c);
    let values = (1..=j_max).map(|j| if j == 1 { 1.0 } else { rest }).collect();
    UtilityRule::new(values, rest)
}

/// `Σ_{m≥0} g(t+m) Π_{i=0}^{m} β/(t+i)`, summed until the terms vanish.
fn tail_series(t: usize, beta: f64, g: impl Fn(f64) -> f64) -> f64 {
    let mut prod = 1.0;
    let mut sum = 0.0;
    let mut m = 0usize;
    loop {
        let tau = (t + m) as f64;
        prod *= beta / tau;
        let term = g(tau) * prod;
        sum += term;
        // past the peak of the product every later term is smaller still
        if tau > beta && (term.abs() <= f64::EPSILON * sum.abs() * 1e-2 || prod == 0.0) {
            return sum;
        }
        m += 1;
    }
}

/// Asymptotically optimal rule for bent welfare.
///
/// Supported on `b = 1` with any `C ∈ [0,1]`, and on any `b ≥ 1` with
/// `C = 1`. For `C < 1` the values decrease towards `ρ(1 - C)`, which is
/// also the tail value; for `C = 1` they decrease to zero.
pub fn design_asymptotic(b: usize, c: f64, j_max: usize) -> Result<UtilityRule> {
    check_c(c)?;
    check_j_max(j_max, 2)?;
    if b == 0 {
        return Err(Error::InvalidParameter("b must be at least 1".into()));
    }
    if b > 1 && c != 1.0 {
        return Err(Error::InvalidParameter(format!(
            "asymptotic design for b = {b} is only available at C = 1 (got C = {c})"
        )));
    }
    if c == 0.0 {
        return UtilityRule::new(vec![1.0; j_max], 1.0);
    }
    let (beta, g): (f64, Box<dyn Fn(f64) -> f64>) = if b == 1 {
        let rho = rho(c);
        (1.0, Box::new(move |tau: f64| rho * ((1.0 - c) * tau + c) - 1.0))
    } else {
        let rb = rho_b(b);
        let bf = b as f64;
        (bf, Box::new(move |tau: f64| rb / bf * tau.min(bf) - 1.0))
    };
    let mut values = Vec::with_capacity(j_max);
    values.push(1.0);
    for t in 2..=j_max {
        let v = tail_series(t, beta, &g).max(0.0);
        // the exact sequence is nonincreasing; keep rounding from breaking it
        values.push(v.min(values[t - 2]));
    }
    let tail = if c < 1.0 { rho(c) * (1.0 - c) } else { 0.0 };
    let last = values[j_max - 1];
    UtilityRule::new(values, tail.min(last))
}

/// Lower end of the Pareto family, `χ = 1/(e - 1)`.
pub fn chi_min() -> f64 {
    1.0 / (euler() - 1.0)
}

/// `Q = 1/(1 + χ)`.
pub fn chi_to_q(chi: f64) -> f64 {
    1.0 / (1.0 + chi)
}

/// `χ = (1 - Q)/Q`.
pub fn q_to_chi(q: f64) -> f64 {
    (1.0 - q) / q
}

/// `a + b`, reported as zero when the sum is below the rounding noise of
/// its operands.
fn cancel(a: f64, b: f64) -> f64 {
    let s = a + b;
    if s.abs() <= 8.0 * f64::EPSILON * (a.abs() + b.abs()) {
        0.0
    } else {
        s
    }
}

/// Values of the Pareto-optimal set covering rule
/// `f(1) = 1, f(j+1) = max{j f(j) - χ, 0}`, untruncated in length.
pub(crate) fn pareto_values(chi: f64, j_max: usize) -> Vec<f64> {
    let e = euler();
    let mut d = 1.0 - chi * (e - 1.0);
    if d.abs() <= 4.0 * f64::EPSILON {
        d = 0.0;
    }
    let mut values = Vec::with_capacity(j_max);
    values.push(1.0);
    // (j-1)! d, kept as a running product
    let mut head = d;
    for j in 2..=j_max {
        head *= (j - 1) as f64;
        let v = if d == 0.0 {
            chi * tail_series(j, 1.0, |_| 1.0)
        } else {
            cancel(head, chi * tail_series(j, 1.0, |_| 1.0))
        };
        if v <= 0.0 || !v.is_finite() {
            values.resize(j_max, 0.0);
            return values;
        }
        values.push(v.min(values[j - 2]));
    }
    values
}

/// Pareto-optimal rule for set covering, parametrized by `χ ≥ 1/(e-1)`.
pub fn design_pareto_setcov(chi: f64, j_max: usize) -> Result<UtilityRule> {
    check_j_max(j_max, 1)?;
    if !chi.is_finite() || chi < chi_min() - 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "chi = {chi} is below the achievable threshold 1/(e-1) = {}",
            chi_min()
        )));
    }
    UtilityRule::new(pareto_values(chi.max(chi_min()), j_max), 0.0)
}

/// Parameter of [`DesignFamily::ParetoSetcov`]; exactly one must be given.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParetoParam {
    Chi(f64),
    Q(f64),
}

impl ParetoParam {
    pub fn chi(self) -> f64 {
        match self {
            ParetoParam::Chi(chi) => chi,
            ParetoParam::Q(q) => q_to_chi(q),
        }
    }
}

/// Which design to apply. A missing `c` means "the curvature of the welfare
/// rule the design is resolved against".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum DesignFamily {
    CommonInterest,
    OneRoundBent {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        c: Option<f64>,
    },
    AsymptoticBent {
        #[serde(default = "one_usize")]
        b: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        c: Option<f64>,
    },
    ParetoSetcov {
        #[serde(flatten)]
        param: ParetoParam,
    },
}

fn one_usize() -> usize {
    1
}

impl DesignFamily {
    pub fn name(&self) -> &'static str {
        match self {
            DesignFamily::CommonInterest => "common_interest",
            DesignFamily::OneRoundBent { .. } => "one_round",
            DesignFamily::AsymptoticBent { .. } => "asymptotic",
            DesignFamily::ParetoSetcov { .. } => "pareto_setcov",
        }
    }
}

/// A design family together with the table length to produce.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignSpec {
    #[serde(flatten)]
    pub family: DesignFamily,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j_max: Option<usize>,
    /// Name used in reports; defaults to the family name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl DesignSpec {
    pub fn new(family: DesignFamily) -> Self {
        DesignSpec {
            family,
            j_max: None,
            label: None,
        }
    }

    pub fn name(&self) -> &str {
        self.label.as_deref().unwrap_or(self.family.name())
    }

    /// Tabulates the design for a welfare rule. The rule is normalized
    /// first and the result scaled back, so `f(1) = w(1)` always holds.
    pub fn resolve(&self, w: &WelfareRule) -> Result<UtilityRule> {
        let j_max = self.j_max.unwrap_or(w.j_max()).max(w.j_max());
        let scale = w.eval(1);
        let c_of = |c: Option<f64>| c.unwrap_or_else(|| w.curvature());
        let f = match &self.family {
            DesignFamily::CommonInterest => return Ok(design_common_interest(w).with_j_max(j_max)),
            DesignFamily::OneRoundBent { c } => design_one_round_bent(c_of(*c), j_max)?,
            DesignFamily::AsymptoticBent { b, c } => design_asymptotic(*b, c_of(*c), j_max.max(2))?,
            DesignFamily::ParetoSetcov { param } => design_pareto_setcov(param.chi(), j_max)?,
        };
        Ok(if scale == 1.0 { f } else { f.scaled(scale) })
    }
}
