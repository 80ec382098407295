//! Scenario → model → solve → power minimization → evaluation on generated presets.

use fmpower::coverage::{coverage_report, current_service_set, service_pairs, sinr, CoverageMode, PowerFactors};
use fmpower::evaluate::evaluate_solution;
use fmpower::maprender::{render_interference_map, render_service_map, ColorTable, GridSpec, MapFilter};
use fmpower::milp::{build_lp, build_milp, read_lp, split_blocks, write_lp, BigMPolicy};
use fmpower::scenario::{generate_synthetic, Scenario, SyntheticParams, DOMESTIC_ADMIN, FOREIGN_ADMIN};
use fmpower::solve::{
    parse_solution, power_minimization_by_blocks, solve_milp, solve_model, write_solution, SolveStatus, SolverParams,
};

fn assert_z_preserved(s: &Scenario, y: &PowerFactors) {
    let z = current_service_set(s);
    let theta = s.radio().theta;
    for a in service_pairs(s).iter().filter(|a| z.contains(&a.pair())) {
        let v = sinr(a, y, s.radio());
        assert!(v >= theta * (1.0 - 1e-6), "pair {} lost service: {v} < {theta}", a.pair());
    }
}

#[test]
fn lp_pipeline_on_small_preset() {
    let s = generate_synthetic(1, &SyntheticParams::small()).unwrap();
    let z = current_service_set(&s);
    let m = build_lp(&s, &z).unwrap();
    let p = SolverParams::default();
    let stage1 = solve_model(&m, &p).unwrap();
    assert_eq!(stage1.status, SolveStatus::Optimal);
    let stage2 = power_minimization_by_blocks(&s, &m, &stage1, &p).unwrap();
    let y = stage2.power_factors(&m, &s);
    assert_z_preserved(&s, &y);

    let e = evaluate_solution(&s, &y).unwrap();
    assert!(e.power_after_w <= e.power_before_w);
    assert!(e.fixed_server.delta_domestic() >= 0);
    assert!(e.shutdown_count <= e.optimizable_count);

    let before = coverage_report(&s, &PowerFactors::full(), CoverageMode::FixedServer);
    assert_eq!(before.served_where(|a| a == DOMESTIC_ADMIN), e.fixed_server.before.domestic);
}

#[test]
fn milp_pipeline_on_tiny_presets() {
    let p = SolverParams::exact();
    let mut solved = 0;
    for seed in 0..20 {
        let s = generate_synthetic(seed, &SyntheticParams::tiny()).unwrap();
        let z = current_service_set(&s);
        let Ok(m) = build_milp(&s, &z, BigMPolicy::PerRow) else { continue };
        let stage1 = solve_model(&m, &p).unwrap();
        assert_eq!(stage1.status, SolveStatus::Optimal, "seed {seed}");
        let stage2 = power_minimization_by_blocks(&s, &m, &stage1, &p).unwrap();
        let y = stage2.power_factors(&m, &s);
        assert_z_preserved(&s, &y);
        assert!(evaluate_solution(&s, &y).unwrap().fixed_server.delta_domestic() >= 0, "seed {seed}");
        solved += 1;
    }
    assert!(solved >= 10);
}

#[test]
fn blockwise_and_whole_solves_agree() {
    let p = SolverParams::exact();
    for seed in 0..20 {
        let s = generate_synthetic(seed, &SyntheticParams::tiny()).unwrap();
        let z = current_service_set(&s);
        let Ok(m) = build_milp(&s, &z, BigMPolicy::default()) else { continue };
        let whole = solve_milp(&m, &p).unwrap();
        let parts: f64 = split_blocks(&m).iter().map(|b| solve_milp(b, &p).unwrap().objective).sum();
        assert!((whole.objective - parts).abs() <= 1e-6, "seed {seed}: {} vs {parts}", whole.objective);
        assert!((solve_model(&m, &p).unwrap().objective - parts).abs() <= 1e-6);
    }
}

#[test]
fn exported_model_reads_back() {
    let s = generate_synthetic(2, &SyntheticParams::small()).unwrap();
    let z = current_service_set(&s);
    let m = build_milp(&s, &z, BigMPolicy::default()).unwrap();
    let lp = read_lp(&write_lp(&m)).unwrap();
    assert_eq!(lp.binaries.len(), m.binaries());
    let exported_rows = lp.rows.len();
    let constant_rows = m.rows.iter().filter(|r| r.terms.is_empty() && r.shortfall.is_none()).count();
    assert_eq!(exported_rows + constant_rows, m.rows.len());
    for (name, _) in &lp.objective {
        assert!(m.var_index(name).is_some(), "{name}");
    }
}

#[test]
fn solution_file_round_trip() {
    let s = generate_synthetic(3, &SyntheticParams::small()).unwrap();
    let z = current_service_set(&s);
    let m = build_lp(&s, &z).unwrap();
    let p = SolverParams::default();
    let sol = solve_model(&m, &p).unwrap();
    let back = parse_solution(&write_solution(&m, &sol), &m, &p).unwrap();
    assert_eq!(back.status, sol.status);
    assert_eq!(back.values, sol.values);
    // blockwise solves sum per-block objectives, the parser sums over the whole model
    assert!((back.objective - sol.objective).abs() <= 1e-12 * sol.objective.abs().max(1.0));
}

#[test]
fn maps_are_deterministic() {
    let s = generate_synthetic(4, &SyntheticParams::small()).unwrap();
    let g = GridSpec::covering(&s, 0.05).unwrap();
    let c = ColorTable::default();
    let y = PowerFactors::full();
    let filter = MapFilter::Admin(FOREIGN_ADMIN.into());
    let a = render_service_map(&s, &y, &filter, &g, &c).unwrap();
    let b = render_service_map(&s, &y, &filter, &g, &c).unwrap();
    assert_eq!(a.to_ppm(), b.to_ppm());
    assert_eq!(a.to_csv(), b.to_csv());
    let i = render_interference_map(&s, &y, DOMESTIC_ADMIN, &g, &c).unwrap();
    assert_eq!(i.to_ppm(), render_interference_map(&s, &y, DOMESTIC_ADMIN, &g, &c).unwrap().to_ppm());
    assert!(i.cells.iter().flatten().count() > 0);
}
