//! Welfare rules, utility rules and resource allocation games.

mod game;
pub mod io;
mod rules;

pub use game::{Game, JointAction, Resource};
pub use rules::{
    convert_rule, curvature, make_welfare_rule, ConvertDirection, UtilityRule, WelfareFamily, WelfareRule,
    RULE_TOL,
};
