//! SIR diffusion of a campaign message through a closed audience.
//!
//! Susceptible members have not yet received the message, infected members
//! are actively sharing it, and recovered members have stopped sharing:
//!
//! ```text
//! dS/dt = -beta * S * I / N
//! dI/dt =  beta * S * I / N - gamma * I
//! dR/dt =  gamma * I
//! ```
//!
//! Besides the vector field this module carries the threshold analysis
//! (reproduction number, outbreak class, equilibrium residual) and the closed
//! forms used to validate simulations: the conserved quantity along
//! trajectories, the final-size relation and the analytic epidemic peak.

use std::fmt;

use thiserror::Error;

use crate::integrator::{IntegrationError, OdeProblem};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("{name} must be finite and non-negative, got {value}")]
    NegativeOrNonFinite { name: &'static str, value: f64 },
    #[error("tau must lie in [0, 1], got {0}")]
    TauOutOfRange(f64),
    #[error("population size must be positive and finite, got {0}")]
    InvalidPopulation(f64),
    #[error("reproduction number is undefined when gamma = 0")]
    UndefinedR0,
    #[error("{0}")]
    Domain(String),
}

pub type Result<T> = std::result::Result<T, ModelError>;

fn non_negative(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(ModelError::NegativeOrNonFinite { name, value })
    }
}

/// Infectivity `beta` and recovery rate `gamma`, both per unit time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    beta: f64,
    gamma: f64,
}

impl ModelParams {
    pub fn new(beta: f64, gamma: f64) -> Result<Self> {
        Ok(Self {
            beta: non_negative("beta", beta)?,
            gamma: non_negative("gamma", gamma)?,
        })
    }

    pub fn from_factors(factors: InfectivityFactors, gamma: f64) -> Result<Self> {
        Self::new(compose_infectivity(factors), gamma)
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

/// Contact rate `delta` and per-contact transmission probability `tau`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InfectivityFactors {
    delta: f64,
    tau: f64,
}

impl InfectivityFactors {
    pub fn new(delta: f64, tau: f64) -> Result<Self> {
        let delta = non_negative("delta", delta)?;
        if !(0.0..=1.0).contains(&tau) {
            return Err(ModelError::TauOutOfRange(tau));
        }
        Ok(Self { delta, tau })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }
}

/// Infectivity as contact rate times transmission probability.
pub fn compose_infectivity(factors: InfectivityFactors) -> f64 {
    factors.delta * factors.tau
}

/// Head-counts in each compartment at one instant. Counts are real-valued.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompartmentState {
    pub s: f64,
    pub i: f64,
    pub r: f64,
}

impl CompartmentState {
    pub fn new(s: f64, i: f64, r: f64) -> Result<Self> {
        Ok(Self {
            s: non_negative("s", s)?,
            i: non_negative("i", i)?,
            r: non_negative("r", r)?,
        })
    }

    pub fn total(&self) -> f64 {
        self.s + self.i + self.r
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.s, self.i, self.r]
    }

    pub fn from_slice(y: &[f64]) -> Self {
        Self {
            s: y[0],
            i: y[1],
            r: y[2],
        }
    }
}

/// Total audience size `N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Population {
    n: f64,
}

impl Population {
    pub fn new(n: f64) -> Result<Self> {
        if n.is_finite() && n > 0.0 {
            Ok(Self { n })
        } else {
            Err(ModelError::InvalidPopulation(n))
        }
    }

    pub fn n(&self) -> f64 {
        self.n
    }
}

/// Time derivatives of the three compartments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rates {
    pub ds: f64,
    pub di: f64,
    pub dr: f64,
}

impl Rates {
    pub fn max_abs(&self) -> f64 {
        self.ds.abs().max(self.di.abs()).max(self.dr.abs())
    }
}

pub fn rhs(state: CompartmentState, params: ModelParams, pop: Population) -> Rates {
    let infections = params.beta * state.s * state.i / pop.n;
    let recoveries = params.gamma * state.i;
    Rates {
        ds: -infections,
        di: infections - recoveries,
        dr: recoveries,
    }
}

/// Builds the SIR initial value problem on `[0, t_end]`.
#[allow(clippy::type_complexity)]
pub fn ode_problem(
    params: ModelParams,
    pop: Population,
    initial: CompartmentState,
    t_end: f64,
) -> std::result::Result<OdeProblem<impl Fn(f64, &[f64], &mut [f64])>, IntegrationError> {
    OdeProblem::new(
        move |_t, y: &[f64], dydt: &mut [f64]| {
            let d = rhs(CompartmentState::from_slice(y), params, pop);
            dydt[0] = d.ds;
            dydt[1] = d.di;
            dydt[2] = d.dr;
        },
        0.0,
        t_end,
        initial.to_array().to_vec(),
    )
}

/// Largest negative excursion absorbed by [`clamp_drift`].
pub const DRIFT_TOLERANCE: f64 = 1e-9;

/// Zeroes compartments that drifted slightly below zero after a step and
/// rejects anything further below.
pub fn clamp_drift(y: &mut [f64]) -> std::result::Result<(), String> {
    for (name, v) in ["S", "I", "R"].iter().zip(y.iter_mut()) {
        if *v < -DRIFT_TOLERANCE {
            return Err(format!("{name} = {v} is negative"));
        }
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    Ok(())
}

pub fn basic_reproduction_number(params: ModelParams) -> Result<f64> {
    if params.gamma == 0.0 {
        return Err(ModelError::UndefinedR0);
    }
    Ok(params.beta / params.gamma)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OutbreakClass {
    /// R0 < 1: the message dies out.
    Subcritical,
    /// R0 = 1 within [`CRITICAL_BAND`]; reported as non-viral.
    Critical,
    /// R0 > 1: the message spreads through the audience.
    Supercritical,
}

impl OutbreakClass {
    pub fn is_viral(self) -> bool {
        self == OutbreakClass::Supercritical
    }

    pub fn as_str(self) -> &'static str {
        match self {
            OutbreakClass::Subcritical => "subcritical",
            OutbreakClass::Critical => "critical",
            OutbreakClass::Supercritical => "supercritical",
        }
    }
}

impl fmt::Display for OutbreakClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub const CRITICAL_BAND: f64 = 1e-12;

pub fn classify_outbreak(params: ModelParams) -> Result<OutbreakClass> {
    let r0 = basic_reproduction_number(params)?;
    Ok(if (r0 - 1.0).abs() <= CRITICAL_BAND {
        OutbreakClass::Critical
    } else if r0 < 1.0 {
        OutbreakClass::Subcritical
    } else {
        OutbreakClass::Supercritical
    })
}

/// Max-norm of the vector field at `state`. Every state with `i = 0` is a
/// rest point, not only the two named equilibria `(N, 0, 0)` and `(0, 0, N)`.
pub fn equilibrium_residual(state: CompartmentState, params: ModelParams, pop: Population) -> f64 {
    rhs(state, params, pop).max_abs()
}

pub fn is_equilibrium(state: CompartmentState, params: ModelParams, pop: Population) -> bool {
    equilibrium_residual(state, params, pop) <= 1e-12 * pop.n.max(1.0)
}

/// `V = i + s - (n / R0) ln s`, constant along every solution with `s > 0`.
pub fn trajectory_invariant(
    state: CompartmentState,
    params: ModelParams,
    pop: Population,
) -> Result<f64> {
    if !(state.s > 0.0) {
        return Err(ModelError::Domain(format!(
            "trajectory invariant needs s > 0, got {}",
            state.s
        )));
    }
    if params.beta == 0.0 || params.gamma == 0.0 {
        return Err(ModelError::Domain(
            "trajectory invariant needs beta > 0 and gamma > 0".into(),
        ));
    }
    let r0 = params.beta / params.gamma;
    Ok(state.i + state.s - (pop.n / r0) * state.s.ln())
}

/// Long-run susceptible remainder and total reach.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FinalSize {
    pub s_inf: f64,
    pub r_inf: f64,
}

const BISECTION_MAX_ITERS: usize = 200;

/// Solves `x = s0 * exp(-R0 * (n - x - r0) / n)` on `[0, s0]` by bisection
/// to an absolute tolerance of `1e-9 * n`.
///
/// For `i0 > 0` the residual is concave on the bracket, negative at 0 and
/// positive at `s0`, so the root is unique.
pub fn final_size(
    params: ModelParams,
    s0: f64,
    i0: f64,
    r0: f64,
    pop: Population,
) -> Result<FinalSize> {
    let r_repro = basic_reproduction_number(params)?;
    let n = pop.n;
    for (name, v) in [("s0", s0), ("i0", i0), ("r0", r0)] {
        non_negative(name, v)?;
    }
    if (s0 + i0 + r0 - n).abs() > 1e-6 * n {
        return Err(ModelError::Domain(format!(
            "s0 + i0 + r0 = {} does not match n = {n}",
            s0 + i0 + r0
        )));
    }
    if i0 == 0.0 {
        return Ok(FinalSize {
            s_inf: s0,
            r_inf: r0,
        });
    }
    if r_repro == 0.0 || s0 == 0.0 {
        return Ok(FinalSize {
            s_inf: s0,
            r_inf: n - s0,
        });
    }

    let residual = |x: f64| x - s0 * (-r_repro * (n - x - r0) / n).exp();
    let tol = 1e-9 * n;
    let (mut lo, mut hi) = (0.0, s0);
    for _ in 0..BISECTION_MAX_ITERS {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if residual(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let s_inf = 0.5 * (lo + hi);
    Ok(FinalSize {
        s_inf,
        r_inf: n - s_inf,
    })
}

/// Susceptible count at the peak of `I` and the peak value itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub s_at_peak: f64,
    pub i_peak: f64,
}

/// Peak of the sharing curve from the conserved quantity: `dI/dt = 0` at
/// `S* = n / R0`. When the effective reproduction number starts at or
/// below one, the peak is the initial state.
pub fn peak_infected_analytic(
    params: ModelParams,
    s0: f64,
    i0: f64,
    pop: Population,
) -> Result<Peak> {
    if params.beta == 0.0 || params.gamma == 0.0 {
        return Err(ModelError::Domain(
            "analytic peak needs beta > 0 and gamma > 0".into(),
        ));
    }
    if !(s0 > 0.0) {
        return Err(ModelError::Domain(format!(
            "analytic peak needs s0 > 0, got {s0}"
        )));
    }
    non_negative("i0", i0)?;
    let n = pop.n;
    let r0 = params.beta / params.gamma;
    if i0 == 0.0 || r0 * s0 / n <= 1.0 {
        return Ok(Peak {
            s_at_peak: s0,
            i_peak: i0,
        });
    }
    let s_star = n / r0;
    Ok(Peak {
        s_at_peak: s_star,
        i_peak: i0 + s0 - s_star + s_star * (s_star / s0).ln(),
    })
}
