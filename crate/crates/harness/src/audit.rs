//! Empirical δ-truthfulness audit: utility of each agent over a grid of
//! misreports, against its truthful utility.

use expdesign::mechanism::utility_at_report;
use expdesign::{run_mechanism, Instance, MechanismConfig};
use rayon::prelude::*;
use serde::Serialize;

use crate::{HarnessError, Result};

#[derive(Debug, Clone, Serialize)]
pub struct AgentAudit {
    pub index: usize,
    pub cost: f64,
    pub truthful_utility: f64,
    /// Largest `u(report) − u(truthful)` over the grid; 0 when every grid
    /// point falls inside the band.
    pub max_gain: f64,
    pub worst_report: Option<f64>,
    pub reports_evaluated: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditReport {
    pub delta: f64,
    pub epsilon: f64,
    pub pay_tol: f64,
    pub grid_points: usize,
    pub agents: Vec<AgentAudit>,
    pub max_gain: f64,
    /// `pay_tol + 2ε`.
    pub tolerance: f64,
    pub passed: bool,
}

/// `grid_points` evenly spaced reports on `[0, B]` (both ends included)
/// with those within `δ` of `cost` removed.
pub fn misreport_grid(budget: f64, cost: f64, delta: f64, grid_points: usize) -> Vec<f64> {
    (0..grid_points)
        .map(|k| budget * k as f64 / (grid_points - 1) as f64)
        .filter(|r| (r - cost).abs() > delta)
        .collect()
}

pub fn audit_truthfulness(instance: &Instance, config: &MechanismConfig, grid_points: usize) -> Result<AuditReport> {
    if grid_points < 2 {
        return Err(HarnessError::Config("the audit grid needs at least 2 points".into()));
    }
    let delta = config.solver.delta;
    let truthful = run_mechanism(instance, config)?;
    let agents = (0..instance.n())
        .into_par_iter()
        .map(|i| {
            let cost = instance.cost(i);
            let truthful_utility = if truthful.allocation.contains(i) { truthful.payments[i] - cost } else { 0.0 };
            let grid = misreport_grid(instance.budget(), cost, delta, grid_points);
            let mut max_gain = 0.0;
            let mut worst_report = None;
            for &report in &grid {
                let gain = utility_at_report(instance, i, report, config)? - truthful_utility;
                if worst_report.is_none() || gain > max_gain {
                    max_gain = gain;
                    worst_report = Some(report);
                }
            }
            Ok(AgentAudit { index: i, cost, truthful_utility, max_gain, worst_report, reports_evaluated: grid.len() })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_gain = agents.iter().map(|a| a.max_gain).fold(0.0, f64::max);
    let pay_tol = config.pay_tol_for(instance.budget());
    let tolerance = pay_tol + 2.0 * config.solver.epsilon;
    Ok(AuditReport {
        delta,
        epsilon: config.solver.epsilon,
        pay_tol,
        grid_points,
        agents,
        max_gain,
        tolerance,
        passed: max_gain <= tolerance,
    })
}
