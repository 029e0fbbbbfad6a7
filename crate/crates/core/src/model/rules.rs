//! Per-resource welfare and utility rules.
//!
//! Rules are tabulated on `1..=j_max`; the value at zero load is always zero
//! and is never stored. Welfare rules extrapolate linearly with `tail_slope`
//! past the table, utility rules hold `tail_value`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute slack used when checking monotonicity and concavity.
pub const RULE_TOL: f64 = 1e-9;

/// Parametric welfare rule families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum WelfareFamily {
    /// `w(j) = (1 - C) j + C min{j, b}`.
    Bent { b: usize, c: f64 },
    /// `w(j) = 1` for every `j >= 1`.
    SetCovering,
    /// Weapon-target assignment: `w(j) = 1 - (1 - p_d)^j`.
    Wta { p_d: f64 },
    /// `w(j) = sum_{i <= j} 1/i`.
    Harmonic,
    Explicit { values: Vec<f64>, tail_slope: f64 },
}

impl WelfareFamily {
    pub fn name(&self) -> &'static str {
        match self {
            WelfareFamily::Bent { .. } => "bent",
            WelfareFamily::SetCovering => "set_covering",
            WelfareFamily::Wta { .. } => "wta",
            WelfareFamily::Harmonic => "harmonic",
            WelfareFamily::Explicit { .. } => "explicit",
        }
    }
}

/// Nondecreasing concave welfare rule `w(1..=j_max)` with linear tail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WelfareRule {
    values: Vec<f64>,
    tail_slope: f64,
    label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    family: Option<WelfareFamily>,
}

impl WelfareRule {
    pub fn new(values: Vec<f64>, tail_slope: f64, label: impl Into<String>) -> Result<Self> {
        check_welfare(&values, tail_slope)?;
        Ok(WelfareRule {
            values,
            tail_slope,
            label: label.into(),
            family: None,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn tail_slope(&self) -> f64 {
        self.tail_slope
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// The parametric family this rule was built from, if any.
    pub fn family(&self) -> Option<&WelfareFamily> {
        self.family.as_ref()
    }

    pub fn j_max(&self) -> usize {
        self.values.len()
    }

    /// `w(j)`, with `w(0) = 0` and linear extrapolation past `j_max`.
    #[inline]
    pub fn eval(&self, j: usize) -> f64 {
        if j == 0 {
            0.0
        } else if j <= self.values.len() {
            self.values[j - 1]
        } else {
            let last = self.values[self.values.len() - 1];
            last + (j - self.values.len()) as f64 * self.tail_slope
        }
    }

    /// `w(j) - w(j - 1)` for `j >= 1`.
    pub fn marginal(&self, j: usize) -> f64 {
        assert!(j >= 1, "marginal is defined for j >= 1");
        if j > self.values.len() {
            self.tail_slope
        } else {
            self.eval(j) - self.eval(j - 1)
        }
    }

    /// `1 - tail_slope / w(1)`: the limiting relative marginal of the table.
    pub fn curvature(&self) -> f64 {
        (1.0 - self.tail_slope / self.values[0]).clamp(0.0, 1.0)
    }

    /// Same rule multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> WelfareRule {
        WelfareRule {
            values: self.values.iter().map(|v| v * factor).collect(),
            tail_slope: self.tail_slope * factor,
            label: self.label.clone(),
            family: self.family.clone().filter(|_| factor == 1.0),
        }
    }

    /// Same rule divided by `divisor > 0`; dividing by `w(1)` gives exactly 1.
    pub fn divided(&self, divisor: f64) -> WelfareRule {
        WelfareRule {
            values: self.values.iter().map(|v| v / divisor).collect(),
            tail_slope: self.tail_slope / divisor,
            label: self.label.clone(),
            family: self.family.clone().filter(|_| divisor == 1.0),
        }
    }

    /// Structural test for the set covering rule.
    pub fn is_set_covering(&self) -> bool {
        self.values.iter().all(|&v| (v - 1.0).abs() <= RULE_TOL) && self.tail_slope.abs() <= RULE_TOL
    }

    /// Recovers `(b, C)` when the table is a normalized bent rule.
    ///
    /// A linear rule (`C = 0`) is reported with `b = 1`.
    pub fn as_bent(&self) -> Option<(usize, f64)> {
        if (self.values[0] - 1.0).abs() > RULE_TOL {
            return None;
        }
        let slope = self.tail_slope;
        let c = 1.0 - slope;
        if !(-RULE_TOL..=1.0 + RULE_TOL).contains(&c) {
            return None;
        }
        let diffs: Vec<f64> = (1..=self.values.len()).map(|j| self.marginal(j)).collect();
        if c.abs() <= RULE_TOL {
            return diffs
                .iter()
                .all(|d| (d - 1.0).abs() <= RULE_TOL)
                .then_some((1, 0.0));
        }
        let b = diffs.iter().take_while(|d| (*d - 1.0).abs() <= RULE_TOL).count();
        if b == 0 {
            return None;
        }
        diffs[b..]
            .iter()
            .all(|d| (d - slope).abs() <= RULE_TOL)
            .then_some((b, c.clamp(0.0, 1.0)))
    }
}

fn check_welfare(values: &[f64], tail_slope: f64) -> Result<()> {
    if values.is_empty() {
        return Err(Error::InvalidRule("welfare table is empty".into()));
    }
    if values.iter().any(|v| !v.is_finite()) || !tail_slope.is_finite() {
        return Err(Error::InvalidRule("welfare values must be finite".into()));
    }
    if values[0] <= 0.0 {
        return Err(Error::InvalidRule(format!("w(1) = {} must be positive", values[0])));
    }
    if tail_slope < -RULE_TOL {
        return Err(Error::InvalidRule(format!("negative tail slope {tail_slope}")));
    }
    let mut prev_value = 0.0;
    let mut prev_diff = f64::INFINITY;
    for (idx, &v) in values.iter().enumerate() {
        let diff = v - prev_value;
        if diff < -RULE_TOL {
            return Err(Error::InvalidRule(format!("w is decreasing at j = {}", idx + 1)));
        }
        if diff > prev_diff + RULE_TOL {
            return Err(Error::InvalidRule(format!("w is not concave at j = {}", idx + 1)));
        }
        prev_value = v;
        prev_diff = diff;
    }
    if tail_slope > prev_diff + RULE_TOL {
        return Err(Error::InvalidRule(format!(
            "tail slope {tail_slope} exceeds the last tabulated increment {prev_diff}"
        )));
    }
    Ok(())
}

/// Tabulates a welfare rule from one of the parametric families.
pub fn make_welfare_rule(family: &WelfareFamily, j_max: usize) -> Result<WelfareRule> {
    if j_max == 0 {
        return Err(Error::InvalidParameter("j_max must be positive".into()));
    }
    let (values, tail_slope, label): (Vec<f64>, f64, String) = match *family {
        WelfareFamily::Bent { b, c } => {
            if b == 0 {
                return Err(Error::InvalidParameter("bent rule needs b >= 1".into()));
            }
            if !(0.0..=1.0).contains(&c) {
                return Err(Error::InvalidParameter(format!("curvature C = {c} outside [0, 1]")));
            }
            if j_max < b {
                return Err(Error::InvalidParameter(format!(
                    "j_max = {j_max} must be at least b = {b} to represent the bend"
                )));
            }
            let values = (1..=j_max)
                .map(|j| (1.0 - c) * j as f64 + c * j.min(b) as f64)
                .collect();
            (values, 1.0 - c, format!("bent(b={b},C={c})"))
        }
        WelfareFamily::SetCovering => (vec![1.0; j_max], 0.0, "set_covering".to_string()),
        WelfareFamily::Wta { p_d } => {
            if !(p_d > 0.0 && p_d <= 1.0) {
                return Err(Error::InvalidParameter(format!("p_d = {p_d} outside (0, 1]")));
            }
            let miss = 1.0 - p_d;
            let values = (1..=j_max).map(|j| 1.0 - miss.powi(j as i32)).collect();
            (values, p_d * miss.powi(j_max as i32), format!("wta(p_d={p_d})"))
        }
        WelfareFamily::Harmonic => {
            let mut acc = 0.0;
            let values = (1..=j_max)
                .map(|j| {
                    acc += 1.0 / j as f64;
                    acc
                })
                .collect();
            (values, 1.0 / (j_max + 1) as f64, "harmonic".to_string())
        }
        WelfareFamily::Explicit {
            ref values,
            tail_slope,
        } => {
            let mut values = values.clone();
            values.truncate(j_max.max(1));
            (values, tail_slope, "explicit".to_string())
        }
    };
    let mut rule = WelfareRule::new(values, tail_slope, label)?;
    if !matches!(family, WelfareFamily::Explicit { .. }) {
        rule.family = Some(family.clone());
    }
    Ok(rule)
}

/// `curvature(w)`; free-function form of [`WelfareRule::curvature`].
pub fn curvature(w: &WelfareRule) -> f64 {
    w.curvature()
}

/// Nonnegative per-agent utility rule `f(1..=j_max)` in marginal form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityRule {
    values: Vec<f64>,
    tail_value: f64,
    #[serde(default = "yes", skip_serializing_if = "is_true")]
    nonincreasing: bool,
}

fn yes() -> bool {
    true
}

fn is_true(b: &bool) -> bool {
    *b
}

impl UtilityRule {
    /// Builds a nonincreasing, nonnegative rule.
    pub fn new(values: Vec<f64>, tail_value: f64) -> Result<Self> {
        check_utility(&values, tail_value)?;
        let mut prev = f64::INFINITY;
        for (idx, &v) in values.iter().chain(std::iter::once(&tail_value)).enumerate() {
            if v > prev + RULE_TOL {
                return Err(Error::InvalidRule(if idx == values.len() {
                    format!("tail value {v} exceeds f(j_max) = {prev}")
                } else {
                    format!("f is increasing at j = {}", idx + 1)
                }));
            }
            prev = v;
        }
        Ok(UtilityRule {
            values,
            tail_value,
            nonincreasing: true,
        })
    }

    /// Builds a rule that only has to be nonnegative.
    ///
    /// Worst-case constructions probe utility rules with `f(2) > f(1)`.
    pub fn unrestricted(values: Vec<f64>, tail_value: f64) -> Result<Self> {
        check_utility(&values, tail_value)?;
        let nonincreasing = values
            .iter()
            .chain(std::iter::once(&tail_value))
            .zip(values.iter().skip(1).chain(std::iter::once(&tail_value)))
            .all(|(a, b)| *b <= *a + RULE_TOL);
        Ok(UtilityRule {
            values,
            tail_value,
            nonincreasing,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn tail_value(&self) -> f64 {
        self.tail_value
    }

    pub fn j_max(&self) -> usize {
        self.values.len()
    }

    pub fn is_nonincreasing(&self) -> bool {
        self.nonincreasing
    }

    #[inline]
    pub fn eval(&self, j: usize) -> f64 {
        if j == 0 {
            0.0
        } else if j <= self.values.len() {
            self.values[j - 1]
        } else {
            self.tail_value
        }
    }

    pub fn scaled(&self, factor: f64) -> UtilityRule {
        UtilityRule {
            values: self.values.iter().map(|v| v * factor).collect(),
            tail_value: self.tail_value * factor,
            nonincreasing: self.nonincreasing,
        }
    }

    pub fn divided(&self, divisor: f64) -> UtilityRule {
        UtilityRule {
            values: self.values.iter().map(|v| v / divisor).collect(),
            tail_value: self.tail_value / divisor,
            nonincreasing: self.nonincreasing,
        }
    }

    /// Extends or truncates the table to `j_max` entries using the tail.
    pub fn with_j_max(&self, j_max: usize) -> UtilityRule {
        let values = (1..=j_max.max(1)).map(|j| self.eval(j)).collect();
        UtilityRule {
            values,
            tail_value: self.tail_value,
            nonincreasing: self.nonincreasing,
        }
    }
}

fn check_utility(values: &[f64], tail_value: f64) -> Result<()> {
    if values.is_empty() {
        return Err(Error::InvalidRule("utility table is empty".into()));
    }
    if values.iter().chain(std::iter::once(&tail_value)).any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::InvalidRule("utility values must be finite and nonnegative".into()));
    }
    if values[0] <= 0.0 {
        return Err(Error::InvalidRule("f(1) must be positive".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvertDirection {
    /// Cumulative distribution rule to marginal utility rule.
    ToMarginal,
    /// Marginal utility rule to cumulative distribution rule.
    ToCumulative,
}

/// Converts between the cumulative form `w~(1..)` and marginal form `f(1..)`.
pub fn convert_rule(direction: ConvertDirection, rule: &[f64]) -> Result<Vec<f64>> {
    if rule.is_empty() {
        return Err(Error::InvalidRule("empty rule".into()));
    }
    if rule.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidRule("rule values must be finite".into()));
    }
    match direction {
        ConvertDirection::ToMarginal => {
            let mut prev = 0.0;
            let marginal: Vec<f64> = rule
                .iter()
                .map(|&v| {
                    let d = v - prev;
                    prev = v;
                    d
                })
                .collect();
            check_marginal(&marginal).map_err(|e| {
                Error::InvalidRule(format!("cumulative rule is not nondecreasing and concave: {e}"))
            })?;
            Ok(marginal)
        }
        ConvertDirection::ToCumulative => {
            check_marginal(rule).map_err(Error::InvalidRule)?;
            let mut acc = 0.0;
            Ok(rule
                .iter()
                .map(|&f| {
                    acc += f;
                    acc
                })
                .collect())
        }
    }
}

fn check_marginal(f: &[f64]) -> std::result::Result<(), String> {
    let mut prev = f64::INFINITY;
    for (idx, &v) in f.iter().enumerate() {
        if v < -RULE_TOL {
            return Err(format!("negative marginal at j = {}", idx + 1));
        }
        if v > prev + RULE_TOL {
            return Err(format!("marginal increases at j = {}", idx + 1));
        }
        prev = v;
    }
    Ok(())
}
