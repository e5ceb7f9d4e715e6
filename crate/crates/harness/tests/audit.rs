mod common;

use expdesign::{non_monotonicity_demo, run_mechanism, utility_at_report, Instance, MechanismConfig};
use expdesign_harness::audit::misreport_grid;
use expdesign_harness::{audit_truthfulness, CostModel};

fn config() -> MechanismConfig {
    MechanismConfig::new(0.01, 0.05)
}

#[test]
fn counterexample_instance_passes() {
    let inst = non_monotonicity_demo().instance;
    let report = audit_truthfulness(&inst, &config(), 26).unwrap();
    assert!(report.passed);
    assert!(report.max_gain <= report.tolerance);
    assert_eq!(report.tolerance, config().pay_tol_for(inst.budget()) + 2.0 * 0.01);
    assert_eq!(report.agents.len(), 4);
}

#[test]
fn agent_priced_at_the_budget_never_gains() {
    // item 2 carries the whole budget and little value
    let inst = Instance::from_rows(&[&[1.0, 0.0], &[0.0, 0.9], &[0.3, 0.3]], vec![0.4, 0.3, 1.0], 1.0).unwrap();
    let report = audit_truthfulness(&inst, &config(), 21).unwrap();
    let agent = &report.agents[2];
    assert_eq!(agent.truthful_utility, 0.0);
    assert!(agent.max_gain <= 0.0);
    for r in misreport_grid(1.0, 1.0, 0.05, 21) {
        assert!(utility_at_report(&inst, 2, r, &config()).unwrap() <= 0.0);
    }
}

#[test]
fn truthful_report_gains_nothing() {
    for seed in 0..10 {
        let inst = common::generated(6, 2, CostModel::Uniform, seed);
        let out = run_mechanism(&inst, &config()).unwrap();
        for i in 0..inst.n() {
            let truthful = if out.allocation.contains(i) { out.payments[i] - inst.cost(i) } else { 0.0 };
            assert_eq!(utility_at_report(&inst, i, inst.cost(i), &config()).unwrap(), truthful);
        }
    }
}

#[test]
fn grid_skips_the_band() {
    let grid = misreport_grid(1.0, 0.5, 0.05, 11);
    assert_eq!(grid.len(), 10);
    assert!(grid.iter().all(|r| (r - 0.5).abs() > 0.05));
    assert_eq!(grid.first(), Some(&0.0));
    assert_eq!(grid.last(), Some(&1.0));
    let inst = common::generated(3, 2, CostModel::Uniform, 0);
    assert!(audit_truthfulness(&inst, &config(), 1).is_err());
}

#[test]
fn greedy_regime_audit() {
    let inst = common::greedy_regime(3);
    let report = audit_truthfulness(&inst, &config(), 6).unwrap();
    assert!(report.passed, "max gain {}", report.max_gain);
}
