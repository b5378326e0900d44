//! Campaign scenarios, parameter sweeps and marketing metrics.

use rayon::prelude::*;
use thiserror::Error;

use crate::integrator::{uniform_grid, AdaptiveSolver, IntegrationError, StepControl};
use crate::sir::{
    self, basic_reproduction_number, classify_outbreak, final_size, CompartmentState, ModelError,
    ModelParams, OutbreakClass, Population,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CampaignError {
    #[error("scenario `{label}`: {source}")]
    Integration {
        label: String,
        #[source]
        source: IntegrationError,
    },
    #[error("scenario `{label}`: {detail}")]
    InvariantViolated { label: String, detail: String },
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("invalid sweep: {0}")]
    InvalidSweep(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

pub type Result<T> = std::result::Result<T, CampaignError>;

/// Horizon used by the figure presets, in dimensionless time.
pub const DEFAULT_T_END: f64 = 100.0;
pub const DEFAULT_SAMPLES: usize = 1001;

/// Fraction of `N` below which the audience counts as exhausted.
pub const DEPLETION_FRACTION: f64 = 0.01;

const CONSERVATION_TOL: f64 = 1e-6;
const MONOTONE_TOL: f64 = 1e-9;

/// Full description of one simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub params: ModelParams,
    pub initial: CompartmentState,
    pub pop: Population,
    pub t_end: f64,
    pub n_samples: usize,
    pub label: String,
}

impl Scenario {
    pub fn new(
        label: impl Into<String>,
        params: ModelParams,
        initial: CompartmentState,
        pop: Population,
        t_end: f64,
        n_samples: usize,
    ) -> Result<Self> {
        let n = pop.n();
        if (initial.total() - n).abs() > 1e-9 * n {
            return Err(CampaignError::InvalidScenario(format!(
                "initial compartments sum to {} but N = {n}",
                initial.total()
            )));
        }
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(CampaignError::InvalidScenario(format!(
                "t_end must be positive, got {t_end}"
            )));
        }
        if n_samples < 2 {
            return Err(CampaignError::InvalidScenario(format!(
                "n_samples must be at least 2, got {n_samples}"
            )));
        }
        Ok(Self {
            params,
            initial,
            pop,
            t_end,
            n_samples,
            label: label.into(),
        })
    }

    /// `N` is taken as the sum of the initial compartments.
    #[allow(clippy::too_many_arguments)]
    pub fn from_values(
        label: impl Into<String>,
        beta: f64,
        gamma: f64,
        s0: f64,
        i0: f64,
        r0: f64,
        t_end: f64,
        n_samples: usize,
    ) -> Result<Self> {
        let initial = CompartmentState::new(s0, i0, r0)?;
        Self::new(
            label,
            ModelParams::new(beta, gamma)?,
            initial,
            Population::new(initial.total())?,
            t_end,
            n_samples,
        )
    }

    /// beta = 0.25, gamma = 0.1, (S, I, R) = (900, 100, 0).
    pub fn baseline() -> Self {
        Self::from_values(
            "baseline",
            0.25,
            0.1,
            900.0,
            100.0,
            0.0,
            DEFAULT_T_END,
            DEFAULT_SAMPLES,
        )
        .expect("baseline scenario is valid")
    }

    pub fn with_params(&self, beta: f64, gamma: f64) -> Result<Self> {
        let mut out = self.clone();
        out.params = ModelParams::new(beta, gamma)?;
        Ok(out)
    }

    /// Replaces the seed: `I(0) = seed`, `S(0) = N - seed`, `R(0) = 0`.
    pub fn with_seed(&self, seed: f64) -> Result<Self> {
        let n = self.pop.n();
        if !(0.0..=n).contains(&seed) {
            return Err(CampaignError::InvalidScenario(format!(
                "seed {seed} outside [0, {n}]"
            )));
        }
        let mut out = self.clone();
        out.initial = CompartmentState::new(n - seed, seed, 0.0)?;
        Ok(out)
    }

    pub fn with_horizon(&self, t_end: f64, n_samples: usize) -> Result<Self> {
        Self::new(
            self.label.clone(),
            self.params,
            self.initial,
            self.pop,
            t_end,
            n_samples,
        )
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn sample_times(&self) -> Vec<f64> {
        uniform_grid(0.0, self.t_end, self.n_samples)
    }
}

/// Sampled time series of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub scenario: Scenario,
    pub times: Vec<f64>,
    pub s: Vec<f64>,
    pub i: Vec<f64>,
    pub r: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn state(&self, k: usize) -> CompartmentState {
        CompartmentState {
            s: self.s[k],
            i: self.i[k],
            r: self.r[k],
        }
    }

    /// Index of the sample closest to `t`.
    pub fn index_near(&self, t: f64) -> usize {
        let mut best = 0;
        for (k, &tk) in self.times.iter().enumerate() {
            if (tk - t).abs() < (self.times[best] - t).abs() {
                best = k;
            }
        }
        best
    }

    pub fn max_conservation_error(&self) -> f64 {
        let n = self.scenario.pop.n();
        (0..self.len())
            .map(|k| (self.s[k] + self.i[k] + self.r[k] - n).abs())
            .fold(0.0, f64::max)
    }
}

pub fn run_scenario(scn: &Scenario, control: &StepControl) -> Result<Trajectory> {
    run_scenario_with(scn, &AdaptiveSolver::new(*control))
}

/// Integrates the scenario and verifies conservation of `N` and the
/// monotonicity of `S` and `R` on the sample grid.
pub fn run_scenario_with(scn: &Scenario, solver: &AdaptiveSolver) -> Result<Trajectory> {
    let wrap = |source| CampaignError::Integration {
        label: scn.label.clone(),
        source,
    };
    let problem = sir::ode_problem(scn.params, scn.pop, scn.initial, scn.t_end).map_err(wrap)?;
    let series = solver
        .solve_projected(&problem, &scn.sample_times(), |_, y| sir::clamp_drift(y))
        .map_err(wrap)?;

    let traj = Trajectory {
        scenario: scn.clone(),
        s: series.component(0),
        i: series.component(1),
        r: series.component(2),
        times: series.times,
    };
    check_trajectory(&traj)?;
    Ok(traj)
}

fn check_trajectory(traj: &Trajectory) -> Result<()> {
    let n = traj.scenario.pop.n();
    let violated = |detail: String| {
        Err(CampaignError::InvariantViolated {
            label: traj.scenario.label.clone(),
            detail,
        })
    };
    let drift = traj.max_conservation_error();
    if drift > CONSERVATION_TOL * n {
        return violated(format!("population drifted by {drift:e}"));
    }
    for k in 1..traj.len() {
        if traj.s[k] > traj.s[k - 1] + MONOTONE_TOL * n {
            return violated(format!("S increased at t = {}", traj.times[k]));
        }
        if traj.r[k] < traj.r[k - 1] - MONOTONE_TOL * n {
            return violated(format!("R decreased at t = {}", traj.times[k]));
        }
    }
    Ok(())
}

/// Marketing summary of one trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct CampaignMetrics {
    pub peak_sharers: f64,
    pub t_peak: f64,
    pub cumulative_reach: f64,
    pub reach_fraction: f64,
    /// First sample time with `S < 1% N`.
    pub depletion_time: Option<f64>,
    /// First sample time with `R` at least half the analytic final reach.
    pub half_reach_time: Option<f64>,
    /// `None` when gamma = 0.
    pub r0: Option<f64>,
    pub classification: Option<OutbreakClass>,
}

pub fn metrics(traj: &Trajectory) -> CampaignMetrics {
    let scn = &traj.scenario;
    let n = scn.pop.n();

    let mut peak_k = 0;
    for k in 1..traj.len() {
        if traj.i[k] > traj.i[peak_k] {
            peak_k = k;
        }
    }
    let cumulative_reach = *traj.r.last().expect("trajectory has samples");

    let first_time =
        |pred: &dyn Fn(usize) -> bool| (0..traj.len()).find(|&k| pred(k)).map(|k| traj.times[k]);
    let depletion_time = first_time(&|k| traj.s[k] < DEPLETION_FRACTION * n);
    let half_reach_time = final_size(
        scn.params,
        scn.initial.s,
        scn.initial.i,
        scn.initial.r,
        scn.pop,
    )
    .ok()
    .and_then(|fs| first_time(&|k| traj.r[k] >= 0.5 * fs.r_inf));

    CampaignMetrics {
        peak_sharers: traj.i[peak_k],
        t_peak: traj.times[peak_k],
        cumulative_reach,
        reach_fraction: (cumulative_reach / n).clamp(0.0, 1.0),
        depletion_time,
        half_reach_time,
        r0: basic_reproduction_number(scn.params).ok(),
        classification: classify_outbreak(scn.params).ok(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepParameter {
    Beta,
    Gamma,
    /// Sets `I(0)`, with `S(0) = N - I(0)` and `R(0) = 0`.
    Seed,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::Beta => "beta",
            SweepParameter::Gamma => "gamma",
            SweepParameter::Seed => "seed",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "beta" => Some(SweepParameter::Beta),
            "gamma" => Some(SweepParameter::Gamma),
            "seed" | "i0" => Some(SweepParameter::Seed),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub base: Scenario,
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

impl SweepSpec {
    pub fn new(base: Scenario, parameter: SweepParameter, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(CampaignError::InvalidSweep("no sweep values".into()));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(CampaignError::InvalidSweep(format!("non-finite value {v}")));
        }
        if parameter == SweepParameter::Seed {
            let n = base.pop.n();
            if let Some(v) = values.iter().find(|v| !(0.0..=n).contains(*v)) {
                return Err(CampaignError::InvalidSweep(format!(
                    "seed {v} outside [0, {n}]"
                )));
            }
        }
        Ok(Self {
            base,
            parameter,
            values,
        })
    }

    /// Scenario for one sweep value; the label gets a `[param=value]` suffix.
    pub fn scenario_for(&self, value: f64) -> Result<Scenario> {
        let b = &self.base;
        let scn = match self.parameter {
            SweepParameter::Beta => b.with_params(value, b.params.gamma())?,
            SweepParameter::Gamma => b.with_params(b.params.beta(), value)?,
            SweepParameter::Seed => b.with_seed(value)?,
        };
        let label = format!("{}[{}={}]", b.label, self.parameter.name(), value);
        Ok(scn.with_label(label))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRun {
    pub value: f64,
    pub outcome: Result<(Trajectory, CampaignMetrics)>,
}

pub fn sweep(spec: &SweepSpec, control: &StepControl) -> Vec<SweepRun> {
    sweep_with(spec, &AdaptiveSolver::new(*control))
}

/// Runs every value independently in parallel; results keep the order of
/// `spec.values` and failures are reported per value.
pub fn sweep_with(spec: &SweepSpec, solver: &AdaptiveSolver) -> Vec<SweepRun> {
    spec.values
        .par_iter()
        .map(|&value| SweepRun {
            value,
            outcome: spec
                .scenario_for(value)
                .and_then(|scn| run_scenario_with(&scn, solver))
                .map(|traj| {
                    let m = metrics(&traj);
                    (traj, m)
                }),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedEfficiencyRow {
    pub seed: f64,
    pub reach_fraction: f64,
    pub t_peak: f64,
    /// Extra reach per extra seeded member relative to the previous row;
    /// absent for the first row.
    pub marginal_reach_per_seed: Option<f64>,
    pub cumulative_reach: f64,
}

pub fn seed_efficiency(spec: &SweepSpec, control: &StepControl) -> Result<Vec<SeedEfficiencyRow>> {
    if spec.parameter != SweepParameter::Seed {
        return Err(CampaignError::InvalidSweep(
            "seed efficiency needs a seed sweep".into(),
        ));
    }
    let mut rows: Vec<SeedEfficiencyRow> = sweep(spec, control)
        .into_iter()
        .filter_map(|run| {
            run.outcome.ok().map(|(_, m)| SeedEfficiencyRow {
                seed: run.value,
                reach_fraction: m.reach_fraction,
                t_peak: m.t_peak,
                marginal_reach_per_seed: None,
                cumulative_reach: m.cumulative_reach,
            })
        })
        .collect();
    if rows.len() < 2 {
        return Err(CampaignError::InvalidSweep(format!(
            "seed efficiency needs at least 2 successful runs, got {}",
            rows.len()
        )));
    }
    rows.sort_by(|a, b| a.seed.total_cmp(&b.seed));
    for k in 1..rows.len() {
        let dseed = rows[k].seed - rows[k - 1].seed;
        if dseed > 0.0 {
            rows[k].marginal_reach_per_seed =
                Some((rows[k].cumulative_reach - rows[k - 1].cumulative_reach) / dseed);
        }
    }
    Ok(rows)
}

/// A figure preset: a sweep whose values become panels `a`, `b`, ...
#[derive(Debug, Clone, PartialEq)]
pub struct FigurePreset {
    pub name: &'static str,
    pub spec: SweepSpec,
}

impl FigurePreset {
    /// Panel names such as `fig2a`, in sweep order.
    pub fn panel_names(&self) -> Vec<String> {
        (0..self.spec.values.len())
            .map(|k| format!("{}{}", self.name, (b'a' + k as u8) as char))
            .collect()
    }
}

/// The three published sweeps: infectivity, recovery rate and seed size.
pub fn figure_presets() -> Vec<FigurePreset> {
    let base = Scenario::baseline();
    let preset = |name: &'static str, title: &str, parameter, values: &[f64]| FigurePreset {
        name,
        spec: SweepSpec::new(base.clone().with_label(title), parameter, values.to_vec())
            .expect("preset sweep is valid"),
    };
    vec![
        preset("fig2", "fig2", SweepParameter::Beta, &[0.1, 0.25, 0.5, 0.7]),
        preset(
            "fig3",
            "fig3",
            SweepParameter::Gamma,
            &[0.01, 0.1, 0.2, 0.5],
        ),
        preset(
            "fig4",
            "fig4",
            SweepParameter::Seed,
            &[1.0, 10.0, 100.0, 200.0],
        ),
    ]
}
