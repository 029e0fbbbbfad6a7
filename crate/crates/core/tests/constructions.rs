use brwalk::analytics::LpInstance;
use brwalk::constructions::{
    build_ci_chain, build_example3, build_poa_matching, build_setcov_stack_spread, build_thm2_game, ConstructionKind,
    ConstructionSpec, Scaling,
};
use brwalk::designs::{design_asymptotic, design_common_interest, design_one_round_bent, design_pareto_setcov, DesignFamily, DesignSpec};
use brwalk::dynamics::{efficiency, is_nash, k_round_walk, optimum, Rounds, TieBreak};
use brwalk::model::{io, make_welfare_rule, UtilityRule, WelfareFamily};
use brwalk::Error;

const C_GRID: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

#[test]
fn thm2_reaches_one_minus_half_c() {
    for c in C_GRID {
        let f = design_one_round_bent(c, 4).unwrap();
        let built = build_thm2_game(c, &f, Scaling::Exact).unwrap();
        assert_eq!(built.game.normalize(), built.game);
        for k in 1..=3 {
            let eff = efficiency(&built.game, Rounds::Finite(k), &TieBreak::adversarial()).unwrap();
            assert!((eff - (1.0 - c / 2.0)).abs() <= 1e-9, "C={c} k={k}: {eff}");
            assert!((eff - built.meta.target_ratio).abs() <= 1e-9);
        }
    }
}

#[test]
fn thm2_cases_track_realized_target() {
    // one probe per case, with rational block sizes
    for (c, f2, case) in [(0.5, 0.25, "a"), (0.5, 0.75, "b"), (0.5, 1.5, "c")] {
        let f = UtilityRule::unrestricted(vec![1.0, f2], f2).unwrap();
        let built = build_thm2_game(c, &f, Scaling::Rational { max_denominator: 64 }).unwrap();
        assert_eq!(built.meta.case.as_deref(), Some(case));
        assert_eq!((built.meta.scale * f2).fract(), 0.0);
        let eff = efficiency(&built.game, Rounds::Finite(1), &TieBreak::adversarial()).unwrap();
        assert!((eff - built.meta.target_ratio).abs() <= 1e-9, "case {case}: {eff} vs {}", built.meta.target_ratio);
    }
}

#[test]
fn ci_chain_matches_metadata() {
    for n in [2, 5, 12, 16, 20] {
        for c in C_GRID {
            let built = build_ci_chain(n, c).unwrap();
            let (_, best) = optimum(&built.game).unwrap();
            let meta_opt = built.game.welfare(built.meta.optimum.as_ref().unwrap());
            assert!((best - meta_opt).abs() <= 1e-9, "n={n} C={c}");
            // at C = 0 every agent after the first is indifferent, so the
            // tie tree has 2^(n-1) leaves per round
            let k_max = if n >= 20 { 2 } else { 3 };
            for k in 1..=k_max {
                let eff = efficiency(&built.game, Rounds::Finite(k), &TieBreak::adversarial()).unwrap();
                assert!((eff - built.meta.target_ratio).abs() <= 1e-9, "n={n} C={c} k={k}");
            }
        }
    }
    assert!(build_ci_chain(1, 0.5).is_err());
}

#[test]
fn ci_chain_cap_reports_bounds() {
    let built = build_ci_chain(20, 0.0).unwrap();
    let err = k_round_walk(&built.game, 3, &TieBreak::AdversarialEnumerate { cap: 100_000 }, None).unwrap_err();
    match err {
        Error::EnumerationCap { cap, best_found, lower_bound, .. } => {
            assert_eq!(cap, 100_000);
            assert!(lower_bound <= 20.0);
            assert_eq!(best_found, Some(20.0));
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn ci_chain_two_agents_linear() {
    let built = build_ci_chain(2, 0.0).unwrap();
    let eff = efficiency(&built.game, Rounds::Finite(1), &TieBreak::adversarial()).unwrap();
    assert!((eff - 1.0).abs() <= 1e-12);
}

#[test]
fn stack_spread_target() {
    let sc = make_welfare_rule(&WelfareFamily::SetCovering, 8).unwrap();
    for f in [
        design_common_interest(&sc),
        design_asymptotic(1, 1.0, 8).unwrap(),
        design_pareto_setcov(0.7, 8).unwrap(),
    ] {
        for n in [2, 4, 6] {
            let built = build_setcov_stack_spread(n, &f, 100, Scaling::Exact).unwrap();
            let eff = efficiency(&built.game, Rounds::Finite(1), &TieBreak::adversarial()).unwrap();
            assert!((eff - built.meta.target_ratio).abs() <= 1e-9, "n={n}: {eff} vs {}", built.meta.target_ratio);
            let (_, best) = optimum(&built.game).unwrap();
            assert!((best - built.game.welfare(built.meta.optimum.as_ref().unwrap())).abs() <= 1e-9);
        }
    }
}

#[test]
fn rational_scaling_bound() {
    let f = design_asymptotic(1, 1.0, 4).unwrap();
    let err = build_setcov_stack_spread(3, &f, 1, Scaling::Rational { max_denominator: 1000 }).unwrap_err();
    assert!(matches!(err, Error::ScalingBound { bound: 1000 }));
    let half = UtilityRule::new(vec![1.0, 0.5, 0.25], 0.25).unwrap();
    let built = build_setcov_stack_spread(3, &half, 1, Scaling::Rational { max_denominator: 8 }).unwrap();
    assert_eq!(built.meta.scale, 4.0);
    assert!(built.game.resources().iter().all(|r| r.value.fract() == 0.0));
}

#[test]
fn matching_game_realizes_lp() {
    let (n1, n2) = (3, 30);
    let w = make_welfare_rule(&WelfareFamily::SetCovering, n1 + 1).unwrap();
    for f in [design_common_interest(&w), design_asymptotic(1, 1.0, n1 + 1).unwrap()] {
        let (ws, fs) = (vec![w.clone()], vec![f]);
        let lp = LpInstance::new(&ws, &fs, n1).unwrap();
        let sol = lp.solve().unwrap();
        let built = build_poa_matching(&lp, &sol, &ws, &fs, n2, Scaling::Exact).unwrap();
        let ne = built.meta.nash.clone().unwrap();
        assert!(is_nash(&built.game, &ne));
        let walk = k_round_walk(&built.game, 1, &built.meta.tie_hint, None).unwrap();
        assert_eq!(walk.final_joint(), ne);
        let width = (0..lp.index.len())
            .filter(|&v| sol.theta[v] > 1e-12)
            .map(|v| lp.index[v].0 + lp.index[v].1 + lp.index[v].2)
            .max()
            .unwrap();
        assert!((built.meta.target_ratio - sol.poa()).abs() <= 5.0 * width as f64 / n2 as f64);
    }
    let ws = vec![w.clone()];
    let fs = vec![design_common_interest(&w)];
    let lp = LpInstance::new(&ws, &fs, n1).unwrap();
    let sol = lp.solve().unwrap();
    assert!(build_poa_matching(&lp, &sol, &ws, &fs, n1, Scaling::Exact).is_err());
}

#[test]
fn specs_build_and_serialize() {
    let specs = [
        ConstructionSpec { kind: ConstructionKind::Example3 { eps: 0.1 }, scaling: Scaling::Exact },
        ConstructionSpec { kind: ConstructionKind::CiChain { n: 4, c: 0.5 }, scaling: Scaling::Exact },
        ConstructionSpec {
            kind: ConstructionKind::PoaMatching {
                welfare: WelfareFamily::SetCovering,
                design: DesignSpec::new(DesignFamily::CommonInterest),
                n1: 2,
                n2: 8,
            },
            scaling: Scaling::Exact,
        },
    ];
    for spec in specs {
        let text = serde_json::to_string(&spec).unwrap();
        let back: ConstructionSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, spec);
        let built = spec.build().unwrap();
        let json = io::game_to_json(&built.game).unwrap();
        let reread = io::game_from_json(&json).unwrap();
        let nash = built.meta.nash.clone().unwrap();
        assert!((reread.welfare(&nash) - built.game.welfare(&nash)).abs() <= 1e-12);
        let meta: serde_json::Value = serde_json::to_value(&built.meta).unwrap();
        assert!(meta.get("target_ratio").is_some());
    }
}

#[test]
fn example3_values() {
    let built = build_example3(0.1).unwrap();
    assert!((built.meta.target_ratio - 1.2 / 2.1).abs() <= 1e-12);
    let eff = efficiency(&built.game, Rounds::Infinite, &TieBreak::default()).unwrap();
    assert!((eff - 1.2 / 2.1).abs() <= 1e-12);
}
