//! Seeded weapon-target-assignment studies.
//!
//! Instance `i` is drawn from `ChaCha8Rng::seed_from_u64(master_seed)` on
//! stream `i`, so instances are independent of each other and of the
//! thread schedule. Target values are drawn first, then each agent's action
//! windows in agent order.

use std::fs::File;
use std::path::{Path, PathBuf};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::designs::{DesignFamily, DesignSpec};
use crate::dynamics::{k_round_walk, optimum_brute_force, TieBreak, DEFAULT_ENUMERATION_BUDGET};
use crate::error::{Error, Result};
use crate::model::{make_welfare_rule, Game, JointAction, Resource, WelfareFamily};

/// Denominator of the normalized welfare column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalizer {
    /// Exact optimum by enumeration.
    #[default]
    Exact,
    /// Welfare of a greedy allocation polished by best-improvement moves.
    /// Approximate: it can undershoot the optimum, so normalized values
    /// may exceed 1.
    Greedy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n_agents: usize,
    pub n_targets: usize,
    pub p_d: f64,
    pub actions_per_agent: usize,
    /// Consecutive targets per action, wrapping around the target circle.
    pub action_width: usize,
    pub n_instances: usize,
    pub rounds: usize,
    pub designs: Vec<DesignSpec>,
    pub master_seed: u64,
    #[serde(default)]
    pub normalizer: Normalizer,
    #[serde(default = "default_budget")]
    pub enumeration_budget: usize,
}

fn default_budget() -> usize {
    DEFAULT_ENUMERATION_BUDGET
}

impl ExperimentConfig {
    /// Desk-scale setting: 10 agents, 15 targets, the three designs.
    pub fn desk(master_seed: u64) -> Self {
        ExperimentConfig {
            n_agents: 10,
            n_targets: 15,
            p_d: 0.5,
            actions_per_agent: 2,
            action_width: 2,
            n_instances: 100,
            rounds: 5,
            designs: vec![
                DesignSpec::new(DesignFamily::CommonInterest),
                DesignSpec::new(DesignFamily::OneRoundBent { c: None }),
                DesignSpec::new(DesignFamily::AsymptoticBent { b: 1, c: None }),
            ],
            master_seed,
            normalizer: Normalizer::Exact,
            enumeration_budget: DEFAULT_ENUMERATION_BUDGET,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.n_agents == 0 || self.n_targets == 0 {
            return bad("need at least one agent and one target".into());
        }
        if !(self.p_d > 0.0 && self.p_d <= 1.0) {
            return bad(format!("p_d = {} outside (0, 1]", self.p_d));
        }
        if self.action_width == 0 || self.action_width > self.n_targets {
            return bad(format!(
                "action_width = {} must lie in 1..={}",
                self.action_width, self.n_targets
            ));
        }
        if self.actions_per_agent == 0 || self.actions_per_agent > self.n_targets {
            return bad(format!(
                "actions_per_agent = {} must lie in 1..={} (one window per start target)",
                self.actions_per_agent, self.n_targets
            ));
        }
        if self.rounds == 0 {
            return bad("rounds must be at least 1".into());
        }
        if self.designs.is_empty() {
            return bad("no designs given".into());
        }
        if self.normalizer == Normalizer::Exact {
            let joints = (self.actions_per_agent as f64 + 1.0).powi(self.n_agents as i32);
            if joints > self.enumeration_budget as f64 {
                return Err(Error::BudgetExceeded {
                    needed: joints,
                    budget: self.enumeration_budget as f64,
                });
            }
        }
        Ok(())
    }
}

/// Draws instance `index` of the configuration, with common-interest
/// utilities.
pub fn gen_wta(cfg: &ExperimentConfig, index: u64) -> Result<Game> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.master_seed);
    rng.set_stream(index);
    let raw: Vec<f64> = (0..cfg.n_targets).map(|_| rng.gen::<f64>()).collect();
    let total: f64 = raw.iter().sum();
    let w = make_welfare_rule(&WelfareFamily::Wta { p_d: cfg.p_d }, cfg.n_agents)?;
    let w = std::sync::Arc::new(w);
    let f = std::sync::Arc::new(crate::designs::design_common_interest(&w));
    let resources = raw
        .iter()
        .enumerate()
        .map(|(t, v)| {
            let value = if total > 0.0 { v / total } else { 1.0 / cfg.n_targets as f64 };
            Resource::new(format!("t{t}"), w.clone(), f.clone(), value)
        })
        .collect();
    let actions = (0..cfg.n_agents)
        .map(|_| {
            sample(&mut rng, cfg.n_targets, cfg.actions_per_agent)
                .into_iter()
                .map(|start| (0..cfg.action_width).map(|o| (start + o) % cfg.n_targets).collect())
                .collect()
        })
        .collect();
    Game::new(resources, actions)
}

/// One `(instance, design, round)` measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WelfareRow {
    pub instance: u64,
    pub design: String,
    pub round: usize,
    pub welfare: f64,
    pub normalized_welfare: f64,
}

/// Spread of the normalized welfare across instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub design: String,
    pub round: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub rows: Vec<WelfareRow>,
    pub summary: Vec<SummaryRow>,
}

/// Linear-interpolation quantile of sorted data (`p ∈ [0, 1]`).
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Groups rows by `(design, round)` in first-appearance order.
pub fn summarize(rows: &[WelfareRow]) -> Vec<SummaryRow> {
    let mut keys: Vec<(String, usize)> = Vec::new();
    for r in rows {
        let key = (r.design.clone(), r.round);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(design, round)| {
            let mut xs: Vec<f64> = rows
                .iter()
                .filter(|r| r.design == design && r.round == round)
                .map(|r| r.normalized_welfare)
                .collect();
            xs.sort_by(f64::total_cmp);
            SummaryRow {
                design,
                round,
                min: xs[0],
                q1: quantile(&xs, 0.25),
                median: quantile(&xs, 0.5),
                q3: quantile(&xs, 0.75),
                max: xs[xs.len() - 1],
            }
        })
        .collect()
}

fn greedy_welfare(game: &Game) -> f64 {
    let n = game.n_players();
    let mut joint = game.empty_joint();
    for i in 0..n {
        let mut best = (game.welfare(&joint), joint.get(i));
        for k in 0..game.actions(i).len() {
            let mut trial = joint.clone();
            trial.set(i, k);
            let w = game.welfare(&trial);
            if w > best.0 {
                best = (w, k);
            }
        }
        joint.set(i, best.1);
    }
    let mut current = game.welfare(&joint);
    loop {
        let mut improved = false;
        for i in 0..n {
            for k in 0..game.actions(i).len() {
                let mut trial: JointAction = joint.clone();
                trial.set(i, k);
                let w = game.welfare(&trial);
                if w > current + 1e-12 {
                    joint = trial;
                    current = w;
                    improved = true;
                }
            }
        }
        if !improved {
            return current;
        }
    }
}

fn run_instance(cfg: &ExperimentConfig, index: u64) -> Result<Vec<WelfareRow>> {
    let game = gen_wta(cfg, index)?;
    let best = match cfg.normalizer {
        Normalizer::Exact => optimum_brute_force(&game, cfg.enumeration_budget)?.1,
        Normalizer::Greedy => greedy_welfare(&game),
    };
    let n = game.n_players();
    let mut rows = Vec::with_capacity(cfg.designs.len() * cfg.rounds);
    for design in &cfg.designs {
        let g = game.with_design(|w| design.resolve(w))?;
        let walk = k_round_walk(&g, cfg.rounds, &TieBreak::IncumbentThenLex, None)?;
        for round in 1..=cfg.rounds {
            let welfare = walk.steps()[round * n - 1].welfare;
            rows.push(WelfareRow {
                instance: index,
                design: design.name().to_string(),
                round,
                welfare,
                normalized_welfare: if best > 0.0 { welfare / best } else { 1.0 },
            });
        }
    }
    Ok(rows)
}

/// Runs every design on every instance. Instances run in parallel; the
/// result is ordered by instance, then design, then round.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let per_instance: Vec<Vec<WelfareRow>> = (0..cfg.n_instances as u64)
        .into_par_iter()
        .map(|i| run_instance(cfg, i))
        .collect::<Result<_>>()?;
    let rows: Vec<WelfareRow> = per_instance.into_iter().flatten().collect();
    let summary = if rows.is_empty() { Vec::new() } else { summarize(&rows) };
    Ok(ExperimentResult { rows, summary })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExportFormat {
    Csv,
    Json,
}

const ROW_HEADER: [&str; 5] = ["instance", "design", "round", "welfare", "normalized_welfare"];
const SUMMARY_HEADER: [&str; 7] = ["design", "round", "min", "q1", "median", "q3", "max"];

/// File names written by [`export`] for a format.
pub fn output_paths(dir: &Path, format: ExportFormat) -> (PathBuf, PathBuf) {
    let ext = match format {
        ExportFormat::Csv => "csv",
        ExportFormat::Json => "json",
    };
    (dir.join(format!("welfare.{ext}")), dir.join(format!("summary.{ext}")))
}

fn write_csv<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(file);
    out.write_record(header)?;
    for row in rows {
        out.serialize(row)?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    csv::Reader::from_reader(file)
        .deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(Error::from)
}

/// Writes the raw rows and the summary into `dir`.
pub fn export(result: &ExperimentResult, format: ExportFormat, dir: &Path) -> Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let (raw, summary) = output_paths(dir, format);
    match format {
        ExportFormat::Csv => {
            write_csv(&raw, &ROW_HEADER, &result.rows)?;
            write_csv(&summary, &SUMMARY_HEADER, &result.summary)?;
        }
        ExportFormat::Json => {
            let write = |path: &Path, text: String| std::fs::write(path, text).map_err(|e| Error::io(path, e));
            write(&raw, serde_json::to_string_pretty(&result.rows)?)?;
            write(&summary, serde_json::to_string_pretty(&result.summary)?)?;
        }
    }
    Ok((raw, summary))
}

/// Reads back what [`export`] wrote.
pub fn import(format: ExportFormat, dir: &Path) -> Result<ExperimentResult> {
    let (raw, summary) = output_paths(dir, format);
    match format {
        ExportFormat::Csv => Ok(ExperimentResult {
            rows: read_csv(&raw)?,
            summary: read_csv(&summary)?,
        }),
        ExportFormat::Json => {
            let read = |path: &Path| std::fs::read_to_string(path).map_err(|e| Error::io(path, e));
            Ok(ExperimentResult {
                rows: serde_json::from_str(&read(&raw)?)?,
                summary: serde_json::from_str(&read(&summary)?)?,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            n_agents: 4,
            n_targets: 6,
            n_instances: 6,
            rounds: 3,
            ..ExperimentConfig::desk(7)
        }
    }

    #[test]
    fn instances_are_deterministic_and_normalized() {
        let cfg = small();
        let a = gen_wta(&cfg, 3).unwrap();
        assert_eq!(a, gen_wta(&cfg, 3).unwrap());
        assert_ne!(a, gen_wta(&cfg, 4).unwrap());
        let total: f64 = a.resources().iter().map(|r| r.value).sum();
        assert!((total - 1.0).abs() < 1e-12);
        for i in 0..cfg.n_agents {
            assert_eq!(a.actions(i).len(), cfg.actions_per_agent + 1);
            assert!(a.actions(i)[1..].iter().all(|act| act.len() == cfg.action_width));
        }
    }

    #[test]
    fn quantiles_interpolate() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&xs, 0.0), 1.0);
        assert_eq!(quantile(&xs, 0.25), 1.75);
        assert_eq!(quantile(&xs, 0.5), 2.5);
        assert_eq!(quantile(&xs, 1.0), 4.0);
        assert_eq!(quantile(&[5.0], 0.75), 5.0);
    }

    #[test]
    fn run_shapes_and_bounds() {
        let cfg = small();
        let res = run_experiment(&cfg).unwrap();
        assert_eq!(res.rows.len(), cfg.n_instances * cfg.designs.len() * cfg.rounds);
        assert_eq!(res.summary.len(), cfg.designs.len() * cfg.rounds);
        assert!(res.rows.iter().all(|r| r.normalized_welfare <= 1.0 + 1e-12));
        assert_eq!(res.rows[0].instance, 0);
        assert_eq!(res.rows.last().unwrap().instance, cfg.n_instances as u64 - 1);
    }

    #[test]
    fn rejects_bad_configs() {
        let mut cfg = small();
        cfg.action_width = 9;
        assert!(cfg.validate().is_err());
        let mut cfg = small();
        cfg.n_agents = 40;
        assert!(matches!(cfg.validate(), Err(Error::BudgetExceeded { .. })));
        cfg.normalizer = Normalizer::Greedy;
        assert!(cfg.validate().is_ok());
    }
}
