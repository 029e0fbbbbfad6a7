use brwalk::dynamics::{is_nash, k_round_walk, optimum_brute_force, TieBreak};
use brwalk::experiments::{
    export, gen_wta, import, output_paths, run_experiment, summarize, ExperimentConfig, ExperimentResult, ExportFormat,
    Normalizer,
};
use brwalk::Error;

fn small(seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        n_agents: 6,
        n_targets: 9,
        n_instances: 12,
        rounds: 4,
        ..ExperimentConfig::desk(seed)
    }
}

/// Type-7 quantile written out independently of the library.
fn q7(mut xs: Vec<f64>, p: f64) -> f64 {
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let h = (xs.len() - 1) as f64 * p;
    let (lo, hi) = (h.floor() as usize, h.ceil() as usize);
    xs[lo] + (h - h.floor()) * (xs[hi] - xs[lo])
}

#[test]
fn instances_are_reproducible() {
    let cfg = ExperimentConfig::desk(1);
    for i in [0, 5, 99] {
        let g = gen_wta(&cfg, i).unwrap();
        assert_eq!(g, gen_wta(&cfg, i).unwrap());
        let total: f64 = g.resources().iter().map(|r| r.value).sum();
        assert!((total - 1.0).abs() <= 1e-12);
        assert_eq!(g.n_players(), 10);
        assert!((0..10).all(|p| g.actions(p).len() == 3 && g.actions(p)[1..].iter().all(|a| a.len() == 2)));
        assert!(optimum_brute_force(&g, 59_049).is_ok());
    }
}

#[test]
fn rows_are_consistent() {
    let cfg = small(3);
    let res = run_experiment(&cfg).unwrap();
    assert_eq!(res.rows.len(), cfg.n_instances * cfg.designs.len() * cfg.rounds);
    for row in &res.rows {
        assert!(row.normalized_welfare <= 1.0 + 1e-12 && row.normalized_welfare >= 0.0);
    }
    for inst in 0..cfg.n_instances as u64 {
        let ci: Vec<f64> = res
            .rows
            .iter()
            .filter(|r| r.instance == inst && r.design == "common_interest")
            .map(|r| r.welfare)
            .collect();
        assert!(ci.windows(2).all(|p| p[1] >= p[0] - 1e-12));
    }
    assert_eq!(res.summary, summarize(&res.rows));
}

#[test]
fn converged_instances_are_nash() {
    let cfg = small(4);
    for i in 0..cfg.n_instances as u64 {
        let game = gen_wta(&cfg, i).unwrap();
        for design in &cfg.designs {
            let g = game.with_design(|w| design.resolve(w)).unwrap();
            let n = g.n_players();
            let walk = k_round_walk(&g, cfg.rounds, &TieBreak::default(), None).unwrap();
            for r in 1..cfg.rounds {
                if walk.joint_at(r * n) == walk.joint_at((r + 1) * n) {
                    assert!(is_nash(&g, &walk.joint_at(r * n)));
                }
            }
        }
    }
}

#[test]
fn csv_round_trip_and_quartiles() {
    let res = run_experiment(&small(5)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let (raw, summary) = export(&res, ExportFormat::Csv, dir.path()).unwrap();
    let text = std::fs::read_to_string(&raw).unwrap();
    assert!(text.starts_with("instance,design,round,welfare,normalized_welfare\n"));
    assert!(std::fs::read_to_string(&summary).unwrap().starts_with("design,round,min,q1,median,q3,max\n"));
    assert_eq!(import(ExportFormat::Csv, dir.path()).unwrap(), res);

    // recompute the summary from the raw file alone
    let mut reader = csv::Reader::from_path(&raw).unwrap();
    let mut parsed: Vec<(String, usize, f64)> = Vec::new();
    for rec in reader.records() {
        let rec = rec.unwrap();
        parsed.push((rec[1].to_string(), rec[2].parse().unwrap(), rec[4].parse().unwrap()));
    }
    for s in &res.summary {
        let xs: Vec<f64> = parsed
            .iter()
            .filter(|(d, r, _)| *d == s.design && *r == s.round)
            .map(|p| p.2)
            .collect();
        for (p, v) in [(0.0, s.min), (0.25, s.q1), (0.5, s.median), (0.75, s.q3), (1.0, s.max)] {
            assert!((q7(xs.clone(), p) - v).abs() <= 1e-12);
        }
    }
}

#[test]
fn json_round_trip() {
    let res = run_experiment(&small(6)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    export(&res, ExportFormat::Json, dir.path()).unwrap();
    assert_eq!(import(ExportFormat::Json, dir.path()).unwrap(), res);
}

#[test]
fn empty_result_gives_header_only_files() {
    let dir = tempfile::tempdir().unwrap();
    let (raw, summary) = export(&ExperimentResult::default(), ExportFormat::Csv, dir.path()).unwrap();
    assert_eq!(std::fs::read_to_string(raw).unwrap(), "instance,design,round,welfare,normalized_welfare\n");
    assert_eq!(std::fs::read_to_string(summary).unwrap(), "design,round,min,q1,median,q3,max\n");
    let zero = ExperimentConfig { n_instances: 0, ..small(1) };
    let res = run_experiment(&zero).unwrap();
    assert!(res.rows.is_empty() && res.summary.is_empty());
}

#[test]
fn reruns_are_byte_identical() {
    let cfg = small(8);
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    export(&run_experiment(&cfg).unwrap(), ExportFormat::Csv, a.path()).unwrap();
    export(&run_experiment(&cfg).unwrap(), ExportFormat::Csv, b.path()).unwrap();
    let (ra, sa) = output_paths(a.path(), ExportFormat::Csv);
    let (rb, sb) = output_paths(b.path(), ExportFormat::Csv);
    assert_eq!(std::fs::read(ra).unwrap(), std::fs::read(rb).unwrap());
    assert_eq!(std::fs::read(sa).unwrap(), std::fs::read(sb).unwrap());
}

#[test]
fn validation_and_budget() {
    let bad = ExperimentConfig { action_width: 20, ..small(1) };
    assert!(matches!(run_experiment(&bad), Err(e) if e.is_validation()));
    let big = ExperimentConfig { n_agents: 20, n_targets: 30, ..ExperimentConfig::desk(1) };
    assert!(matches!(run_experiment(&big), Err(Error::BudgetExceeded { .. })));
    let greedy = ExperimentConfig { normalizer: Normalizer::Greedy, n_instances: 3, ..big };
    let res = run_experiment(&greedy).unwrap();
    assert_eq!(res.rows.len(), 3 * 3 * 5);
}

#[test]
fn config_json_defaults() {
    let text = r#"{"n_agents": 4, "n_targets": 6, "p_d": 0.5, "actions_per_agent": 2, "action_width": 2,
        "n_instances": 2, "rounds": 2, "master_seed": 9,
        "designs": [{"family": "common_interest"}, {"family": "one_round_bent", "c": null},
                    {"family": "asymptotic_bent", "b": 1}, {"family": "pareto_setcov", "q": 0.55, "label": "pareto"}]}"#;
    let cfg: ExperimentConfig = serde_json::from_str(text).unwrap();
    assert_eq!(cfg.normalizer, Normalizer::Exact);
    let res = run_experiment(&cfg).unwrap();
    let names: Vec<&str> = res.summary.iter().filter(|s| s.round == 1).map(|s| s.design.as_str()).collect();
    assert_eq!(names, ["common_interest", "one_round", "asymptotic", "pareto"]);
}
