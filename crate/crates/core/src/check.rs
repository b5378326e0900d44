//! Self-consistency checks run by `vmsir check`.
//!
//! Every check runs against a caller-supplied [`AdaptiveSolver`], so a
//! solver with a damaged tableau can be pushed through the same suite.

use crate::campaign::{figure_presets, run_scenario_with, Scenario, Trajectory};
use crate::integrator::{
    rk4_reference, uniform_grid, AdaptiveSolver, IntegrationError, OdeProblem, StepControl,
};
use crate::sir::{self, equilibrium_residual, final_size, trajectory_invariant, CompartmentState};

/// Fraction of `N` allowed between simulated reach and the final-size root.
pub const FINAL_SIZE_TOL: f64 = 0.005;
/// A run counts as settled when the reach still to come is provably below
/// this fraction of `N`.
pub const SETTLED_FRACTION: f64 = 0.0025;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CheckReport {
    pub results: Vec<CheckResult>,
    /// Per-scenario residual lines for verbose output.
    pub residuals: Vec<String>,
}

impl CheckReport {
    pub fn all_passed(&self) -> bool {
        self.results.iter().all(|r| r.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.results.iter().filter(|r| !r.passed)
    }
}

/// Observed convergence order of the solver's propagated solution on
/// `y' = -y` over `[0, 1]`, from fixed steps `h` and `h / 2`.
pub fn observed_order(solver: &AdaptiveSolver, h: f64) -> Result<f64, IntegrationError> {
    let problem = OdeProblem::new(
        |_, y: &[f64], d: &mut [f64]| d[0] = -y[0],
        0.0,
        1.0,
        vec![1.0],
    )?;
    let exact = (-1.0f64).exp();
    let err = |step: f64| -> Result<f64, IntegrationError> {
        let sol = solver.solve_fixed(&problem, step, &[0.0, 1.0])?;
        Ok((sol.last_state()[0] - exact).abs())
    };
    let coarse = err(h)?;
    let fine = err(h / 2.0)?;
    Ok((coarse / fine).log2())
}

/// Outcome of comparing a run's final reach with the final-size root.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FinalSizeComparison {
    pub simulated: f64,
    pub oracle: f64,
    /// Whether the reach still to come after `t_end` is negligible.
    pub settled: bool,
    pub passed: bool,
}

/// Upper bound on `R(inf) - R(t)` given the state at `t`. Once
/// `beta * S / N < gamma`, sharers decay at least as fast as
/// `exp(-(gamma - beta * S / N) t)`, so the remaining recoveries total at
/// most `gamma * I / (gamma - beta * S / N)`.
pub fn remaining_reach_bound(traj: &Trajectory) -> f64 {
    let scn = &traj.scenario;
    let (beta, gamma) = (scn.params.beta(), scn.params.gamma());
    let last = traj.state(traj.len() - 1);
    if last.i == 0.0 {
        return 0.0;
    }
    let decay = gamma - beta * last.s / scn.pop.n();
    if decay > 0.0 {
        gamma * last.i / decay
    } else {
        f64::INFINITY
    }
}

/// Settled runs must match the final-size root within 0.5% of `N`; runs
/// still spreading at `t_end` must stay below it by the same margin.
pub fn compare_final_size(traj: &Trajectory) -> Option<FinalSizeComparison> {
    let scn = &traj.scenario;
    let n = scn.pop.n();
    let fs = final_size(
        scn.params,
        scn.initial.s,
        scn.initial.i,
        scn.initial.r,
        scn.pop,
    )
    .ok()?;
    let simulated = *traj.r.last()?;
    let settled = remaining_reach_bound(traj) <= SETTLED_FRACTION * n;
    let gap = simulated - fs.r_inf;
    let passed = if settled {
        gap.abs() <= FINAL_SIZE_TOL * n
    } else {
        gap <= FINAL_SIZE_TOL * n
    };
    Some(FinalSizeComparison {
        simulated,
        oracle: fs.r_inf,
        settled,
        passed,
    })
}

/// Largest `|V(t) - V(0)| / |V(0)|` over the samples of a trajectory.
pub fn invariant_drift(traj: &Trajectory) -> Option<f64> {
    let scn = &traj.scenario;
    let v0 = trajectory_invariant(traj.state(0), scn.params, scn.pop).ok()?;
    let mut worst = 0.0f64;
    for k in 0..traj.len() {
        let v = trajectory_invariant(traj.state(k), scn.params, scn.pop).ok()?;
        worst = worst.max((v - v0).abs() / v0.abs());
    }
    Some(worst)
}

/// Componentwise max difference between the adaptive solver at
/// `rtol = 1e-8` and fixed-step RK4 at `h = 1e-3` on `scn`.
pub fn oracle_gap(scn: &Scenario, solver: &AdaptiveSolver) -> Result<f64, IntegrationError> {
    let problem = sir::ode_problem(scn.params, scn.pop, scn.initial, scn.t_end)?;
    let grid = uniform_grid(0.0, scn.t_end, scn.n_samples);
    let tight = AdaptiveSolver::new(StepControl {
        rtol: 1e-8,
        ..*solver.control()
    })
    .with_tableau(*solver.tableau());
    let adaptive = tight.solve(&problem, &grid)?;
    let reference = rk4_reference(&problem, 1e-3, &grid)?;
    Ok(adaptive
        .states
        .iter()
        .zip(&reference.states)
        .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max))
}

pub fn run_checks(solver: &AdaptiveSolver) -> CheckReport {
    let mut report = CheckReport::default();

    match observed_order(solver, 0.1) {
        Ok(p) => report.results.push(CheckResult::new(
            "order",
            (4.0..=6.0).contains(&p),
            format!("observed order {p:.3} on y' = -y (expected 4..6)"),
        )),
        Err(e) => report
            .results
            .push(CheckResult::new("order", false, e.to_string())),
    }

    report.results.push(exactness(solver));

    let baseline = Scenario::baseline();
    let n = baseline.pop.n();
    let e1 = CompartmentState {
        s: n,
        i: 0.0,
        r: 0.0,
    };
    let e2 = CompartmentState {
        s: 0.0,
        i: 0.0,
        r: n,
    };
    let res = equilibrium_residual(e1, baseline.params, baseline.pop).max(equilibrium_residual(
        e2,
        baseline.params,
        baseline.pop,
    ));
    report.results.push(CheckResult::new(
        "equilibria",
        res == 0.0,
        format!("residual at (N,0,0) and (0,0,N): {res:e}"),
    ));

    match oracle_gap(&baseline, solver) {
        Ok(gap) => report.results.push(CheckResult::new(
            "oracle",
            gap <= 1e-3,
            format!("max |DP45 - RK4| on baseline: {gap:.3e} (limit 1e-3)"),
        )),
        Err(e) => report
            .results
            .push(CheckResult::new("oracle", false, e.to_string())),
    }

    match run_scenario_with(&baseline, solver) {
        Ok(traj) => {
            let drift = invariant_drift(&traj).unwrap_or(f64::INFINITY);
            report.results.push(CheckResult::new(
                "invariant",
                drift <= 1e-3,
                format!("max relative drift of V on baseline: {drift:.3e} (limit 1e-3)"),
            ));
        }
        Err(e) => report
            .results
            .push(CheckResult::new("invariant", false, e.to_string())),
    }

    for preset in figure_presets() {
        for (panel, &value) in preset.panel_names().into_iter().zip(&preset.spec.values) {
            let outcome = preset
                .spec
                .scenario_for(value)
                .and_then(|scn| run_scenario_with(&scn, solver));
            let traj = match outcome {
                Ok(t) => t,
                Err(e) => {
                    // run_scenario_with enforces conservation and monotonicity
                    report
                        .results
                        .push(CheckResult::new(panel, false, e.to_string()));
                    continue;
                }
            };
            let n = traj.scenario.pop.n();
            let drift = traj.max_conservation_error();
            let fs = compare_final_size(&traj);
            let fs_ok = fs.is_none_or(|c| c.passed);
            let conserved = drift <= 1e-6 * n;
            let mut detail = format!("conservation {drift:.3e}");
            if let Some(c) = fs {
                detail.push_str(&format!(
                    ", R(t_end) {:.3} vs final size {:.3} ({})",
                    c.simulated,
                    c.oracle,
                    if c.settled {
                        "settled"
                    } else {
                        "still spreading"
                    }
                ));
            }
            report.residuals.push(format!(
                "{panel}: conservation={drift:.3e} I(t_end)={:.3e} final_size_gap={}",
                traj.i.last().copied().unwrap_or(0.0),
                fs.map_or("n/a".to_string(), |c| format!(
                    "{:.3e}",
                    c.simulated - c.oracle
                )),
            ));
            report
                .results
                .push(CheckResult::new(panel, conserved && fs_ok, detail));
        }
    }

    report
}

fn exactness(solver: &AdaptiveSolver) -> CheckResult {
    let run = || -> Result<f64, IntegrationError> {
        let constant = OdeProblem::new(|_, _, d: &mut [f64]| d[0] = 3.0, 0.0, 2.0, vec![1.0])?;
        let linear = OdeProblem::new(|t, _, d: &mut [f64]| d[0] = t, 0.0, 2.0, vec![0.0])?;
        let grid = [0.0, 0.5, 1.0, 2.0];
        let mut worst = 0.0f64;
        for (k, &t) in grid.iter().enumerate() {
            let a = solver.solve(&constant, &grid)?.states[k][0];
            let b = solver.solve_fixed(&linear, 0.25, &grid)?.states[k][0];
            worst = worst
                .max(((a - (1.0 + 3.0 * t)) / (1.0 + 3.0 * t)).abs())
                .max((b - 0.5 * t * t).abs() / (0.5 * t * t).max(1.0));
        }
        Ok(worst)
    };
    match run() {
        Ok(w) => CheckResult::new(
            "exactness",
            w < 1e-12,
            format!("max relative error on y' = c and y' = t: {w:.3e}"),
        ),
        Err(e) => CheckResult::new("exactness", false, e.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_tableau_passes_every_check() {
        let report = run_checks(&AdaptiveSolver::default());
        let failed: Vec<_> = report.failures().collect();
        assert!(failed.is_empty(), "{failed:#?}");
        assert_eq!(report.residuals.len(), 12);
    }

    #[test]
    fn damaged_tableau_fails_order_check() {
        let mut tab = crate::integrator::Tableau::dormand_prince();
        tab.b[2] += 1e-3;
        let report = run_checks(&AdaptiveSolver::default().with_tableau(tab));
        assert!(!report.all_passed());
        assert!(report.failures().any(|r| r.name == "order"));
    }
}
