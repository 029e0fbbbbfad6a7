//! Independent oracles shared by the integration tests.
//!
//! The recursions behind the asymptotic and Pareto designs lose about
//! `log2(j!)` bits by step `j`, so they are replayed here in binary
//! fixed point with enough guard bits to stay exact to double precision.

#![allow(dead_code)]

use std::sync::Arc;

use brwalk::model::{make_welfare_rule, Game, Resource, UtilityRule, WelfareFamily, WelfareRule};
use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;

/// Fixed-point reals with `bits` fractional bits.
#[derive(Clone, Copy)]
pub struct Fixed {
    pub bits: u64,
}

impl Fixed {
    /// Precision adequate for replaying a recursion to step `j`.
    pub fn for_steps(j: u64) -> Self {
        let lost: f64 = (2..=j.max(2)).map(|k| (k as f64).log2()).sum();
        Fixed {
            bits: lost.ceil() as u64 + 256,
        }
    }

    pub fn one(&self) -> BigInt {
        BigInt::one() << self.bits
    }

    /// Exact conversion of a double.
    pub fn from_f64(&self, v: f64) -> BigInt {
        assert!(v.is_finite());
        if v == 0.0 {
            return BigInt::zero();
        }
        let bits = v.to_bits();
        let exp = ((bits >> 52) & 0x7ff) as i64;
        let mantissa = if exp == 0 { (bits & ((1 << 52) - 1)) << 1 } else { (bits & ((1 << 52) - 1)) | (1 << 52) };
        let shift = exp - 1075 + self.bits as i64;
        let m = BigInt::from(mantissa);
        let mag = if shift >= 0 { m << shift as u64 } else { m >> (-shift) as u64 };
        if v < 0.0 {
            -mag
        } else {
            mag
        }
    }

    pub fn to_f64(&self, x: &BigInt) -> f64 {
        if x.is_zero() {
            return 0.0;
        }
        let len = x.bits();
        if len <= 64 {
            return x.to_f64().unwrap() / 2f64.powi(self.bits as i32);
        }
        let drop = len - 64;
        let top = (x >> drop).to_f64().unwrap();
        top * 2f64.powi(drop as i32 - self.bits as i32)
    }

    pub fn mul(&self, a: &BigInt, b: &BigInt) -> BigInt {
        (a * b) >> self.bits
    }

    pub fn div(&self, a: &BigInt, b: &BigInt) -> BigInt {
        (a << self.bits) / b
    }

    /// `e = Σ 1/k!`, summed until the terms vanish at this precision.
    pub fn e(&self) -> BigInt {
        let mut term = self.one();
        let mut sum = term.clone();
        let mut k = 1u64;
        while !term.is_zero() {
            term /= k;
            sum += &term;
            k += 1;
        }
        sum
    }
}

/// `f(1..=j_max)` of the asymptotic bent(1, C) design from
/// `f(j+1) = j f(j) - ρ w(j) + 1`, `w(j) = (1-C) j + C`, `ρ = e/(e-C)`.
/// `c` is taken as the exact dyadic value of the double.
pub fn asymptotic_recursion(c: f64, j_max: u64) -> Vec<f64> {
    let fx = Fixed::for_steps(j_max);
    let one = fx.one();
    let e = fx.e();
    let c_fx = fx.from_f64(c);
    let rho = fx.div(&e, &(&e - &c_fx));
    // ρ w(j) = ρ(1-C)·j + ρC, so each step only multiplies by integers
    let slope = fx.mul(&rho, &(&one - &c_fx));
    let offset = fx.mul(&rho, &c_fx);
    let mut f = one.clone();
    let mut out = vec![1.0];
    for j in 1..j_max {
        let j = BigInt::from(j);
        f = &f * &j - &slope * &j - &offset + &one;
        out.push(fx.to_f64(&f));
    }
    out
}

/// `f(1..=j_max)` of the set covering rule `f(j+1) = max{j f(j) - χ, 0}`.
/// With `chi = None` the threshold `χ = 1/(e-1)` is used exactly.
pub fn pareto_recursion(chi: Option<f64>, j_max: u64) -> Vec<f64> {
    let fx = Fixed::for_steps(j_max);
    let one = fx.one();
    let chi = match chi {
        Some(v) => fx.from_f64(v),
        None => {
            let e = fx.e();
            fx.div(&one, &(&e - &one))
        }
    };
    let mut f = one;
    let mut out = vec![1.0];
    for j in 1..j_max {
        f = &f * BigInt::from(j) - &chi;
        if f.is_negative() {
            f = BigInt::zero();
        }
        out.push(fx.to_f64(&f));
    }
    out
}

/// The same recursion in plain doubles, for reporting how fast it drifts.
pub fn asymptotic_recursion_f64(c: f64, j_max: usize) -> Vec<f64> {
    let e = std::f64::consts::E;
    let rho = e / (e - c);
    let mut f = 1.0;
    let mut out = vec![1.0];
    for j in 1..j_max {
        f = j as f64 * f - rho * ((1.0 - c) * j as f64 + c) + 1.0;
        out.push(f);
    }
    out
}

/// A random game with at most `n_max` players, `a_max` actions per player
/// and `r_max` resources. Welfare is bent with random `(b, C)`; the utility
/// rule is the marginal of a random nondecreasing concave cumulative rule,
/// which is returned alongside as `w~(1..)`.
pub fn random_game<R: Rng>(rng: &mut R, n_max: usize, a_max: usize, r_max: usize) -> (Game, Vec<f64>) {
    let n = rng.gen_range(1..=n_max);
    let m = rng.gen_range(1..=r_max);
    let b = rng.gen_range(1..=n);
    let c: f64 = rng.gen();
    let w: Arc<WelfareRule> = Arc::new(make_welfare_rule(&WelfareFamily::Bent { b, c }, n).unwrap());
    let mut marginal = Vec::with_capacity(n);
    let mut prev = 1.0;
    for _ in 0..n {
        marginal.push(prev);
        prev *= rng.gen_range(0.0..1.0);
    }
    let cumulative: Vec<f64> = marginal
        .iter()
        .scan(0.0, |acc, v| {
            *acc += v;
            Some(*acc)
        })
        .collect();
    let f = Arc::new(UtilityRule::new(marginal.clone(), *marginal.last().unwrap()).unwrap());
    let resources = (0..m)
        .map(|r| Resource::new(format!("r{r}"), w.clone(), f.clone(), rng.gen_range(0.05..1.0)))
        .collect();
    let actions = (0..n)
        .map(|_| {
            let k = rng.gen_range(1..=a_max);
            (0..k)
                .map(|_| {
                    let mut set: Vec<usize> = (0..m).filter(|_| rng.gen_bool(0.4)).collect();
                    if set.is_empty() {
                        set.push(rng.gen_range(0..m));
                    }
                    set
                })
                .collect()
        })
        .collect();
    (Game::new(resources, actions).unwrap(), cumulative)
}
