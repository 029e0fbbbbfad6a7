use brwalk::analytics::{
    frontier_setcov, one_round_eff_bound, one_round_eff_setcov, poa_closed_form, poa_lp, theory_bounds, BoundDesign,
    Horizon, LpInstance, PoaFamily, LP_TOL,
};
use brwalk::designs::{chi_min, design_asymptotic, design_common_interest, design_one_round_bent, design_pareto_setcov, euler};
use brwalk::model::{make_welfare_rule, WelfareFamily, WelfareRule};

fn setcov(j: usize) -> WelfareRule {
    make_welfare_rule(&WelfareFamily::SetCovering, j).unwrap()
}

fn bent(c: f64, j: usize) -> WelfareRule {
    make_welfare_rule(&WelfareFamily::Bent { b: 1, c }, j).unwrap()
}

fn chi_grid() -> Vec<f64> {
    (0..=5).map(|t| chi_min() + t as f64 * (1.0 - chi_min()) / 5.0).collect()
}

#[test]
fn lp_matches_set_covering_closed_form() {
    for n in 2..=8 {
        let w = setcov(n + 1);
        let mut designs = vec![design_common_interest(&w), design_asymptotic(1, 1.0, n + 1).unwrap()];
        designs.extend(chi_grid().into_iter().map(|chi| design_pareto_setcov(chi, n + 1).unwrap()));
        for f in designs {
            let inst = LpInstance::new(&[w.clone()], &[f.clone()], n).unwrap();
            let sol = inst.solve().unwrap();
            assert!(sol.primal_residual <= LP_TOL && sol.dual_residual <= LP_TOL);
            let closed = poa_closed_form(&w, &f, PoaFamily::SetCovering { n }).unwrap();
            assert!((sol.poa() - closed.value).abs() <= 1e-6, "n={n}: {} vs {}", sol.poa(), closed.value);
            // deterministic
            assert_eq!(inst.solve().unwrap(), sol);
        }
    }
}

#[test]
fn lp_matches_bent_closed_form() {
    for c in [0.25, 0.5, 0.75] {
        let w = bent(c, 12);
        for f in [design_common_interest(&w), design_one_round_bent(c, 12).unwrap()] {
            let lp = poa_lp(&[w.clone()], &[f.clone()], 10).unwrap();
            let closed = poa_closed_form(&w, &f, PoaFamily::Bent { j_trunc: 9 }).unwrap().value;
            assert!((lp - closed).abs() <= 1e-6, "C={c}: {lp} vs {closed}");
        }
    }
}

#[test]
fn one_round_never_beats_poa() {
    for c in [0.0, 0.3, 0.6, 1.0] {
        let w = bent(c, 60);
        for f in [
            design_common_interest(&w),
            design_one_round_bent(c, 60).unwrap(),
            design_asymptotic(1, c, 60).unwrap(),
        ] {
            let one = one_round_eff_bound(&w, &f, 50).value;
            let poa = poa_closed_form(&w, &f, PoaFamily::Bent { j_trunc: 50 }).unwrap().value;
            assert!(one <= poa + 1e-9, "C={c}: one-round {one} above PoA {poa}");
        }
    }
    let w = setcov(60);
    for chi in chi_grid() {
        let f = design_pareto_setcov(chi, 60).unwrap();
        let one = one_round_eff_setcov(&f, 50);
        let poa = poa_closed_form(&w, &f, PoaFamily::SetCovering { n: 50 }).unwrap().value;
        assert!(one <= poa + 1e-9);
    }
}

#[test]
fn pareto_poa_is_one_over_one_plus_chi() {
    let w = setcov(400);
    for chi in chi_grid() {
        let f = design_pareto_setcov(chi, 400).unwrap();
        let poa = poa_closed_form(&w, &f, PoaFamily::SetCovering { n: 300 }).unwrap().value;
        assert!((poa - 1.0 / (1.0 + chi)).abs() <= 1e-6, "chi={chi}: {poa}");
    }
}

#[test]
fn frontier_nonincreasing_in_q() {
    let q_max = 1.0 - 1.0 / euler();
    let mut qs: Vec<f64> = (0..).map(|i| 0.5 + 0.01 * i as f64).take_while(|&q| q <= q_max).collect();
    qs.push(q_max);
    let vals: Vec<f64> = qs.iter().map(|&q| frontier_setcov(q, 2000).unwrap().one_round).collect();
    assert_eq!(vals[0], 0.5);
    for pair in vals.windows(2) {
        assert!(pair[1] <= pair[0] + 1e-12, "{vals:?}");
    }
    assert!(vals.iter().all(|v| (0.0..=0.5).contains(v)));
    assert!(frontier_setcov(0.49, 100).is_err());
    let f = design_pareto_setcov(1.0, 100).unwrap();
    assert_eq!(frontier_setcov(0.5, 100).unwrap().one_round, one_round_eff_setcov(&f, 100));
}

#[test]
fn theory_bound_values() {
    let e = euler();
    let t = |c, h, d| theory_bounds(c, h, d).unwrap();
    assert_eq!(t(0.5, Horizon::One, BoundDesign::Optimal), 0.75);
    assert_eq!(t(0.5, Horizon::Finite { k: 3 }, BoundDesign::Optimal), 0.75);
    assert!((t(1.0, Horizon::Infinity, BoundDesign::Optimal) - (1.0 - 1.0 / e)).abs() <= 1e-15);
    assert_eq!(t(1.0, Horizon::Finite { k: 7 }, BoundDesign::CommonInterest), 0.5);
    assert!((t(1.0, Horizon::One, BoundDesign::AsymptoticDesignAtOneRound) - (1.0 - 2.0 / (e + 1.0))).abs() <= 1e-12);
    assert!(theory_bounds(1.2, Horizon::One, BoundDesign::Optimal).is_err());
    assert!(theory_bounds(0.5, Horizon::Infinity, BoundDesign::AsymptoticDesignAtOneRound).is_err());
}

#[test]
fn one_round_truncation_flag() {
    let w = setcov(60);
    let flat = design_one_round_bent(0.0, 60).unwrap();
    assert!(one_round_eff_bound(&w, &flat, 50).at_boundary);
    let opt = design_one_round_bent(1.0, 60).unwrap();
    assert!(!one_round_eff_bound(&w, &opt, 50).at_boundary);
}
