//! Explicit Runge-Kutta integration for first-order ODE systems.
//!
//! The production path is an adaptive Dormand-Prince 5(4) pair with an RMS
//! error norm and step clamping onto requested sample times. A fixed-step
//! classical RK4 integrator is kept alongside it as an independent reference.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntegrationError {
    #[error("right-hand side produced a non-finite value at t = {t} (step h = {h})")]
    NonFinite { t: f64, h: f64 },
    #[error("step limit of {max_steps} exceeded at t = {t}")]
    MaxStepsExceeded { t: f64, max_steps: usize },
    #[error("step size underflow at t = {t} (h = {h})")]
    StepSizeUnderflow { t: f64, h: f64 },
    #[error("state rejected after step at t = {t}: {reason}")]
    StateRejected { t: f64, reason: String },
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("invalid step control: {0}")]
    InvalidControl(String),
    #[error("invalid sample times: {0}")]
    InvalidSamples(String),
}

pub type Result<T> = std::result::Result<T, IntegrationError>;

/// An initial value problem `y' = f(t, y)`, `y(t0) = y0` on `[t0, t_end]`.
///
/// The right-hand side writes its derivative into an output slice of the
/// same length as the state, so the dimension is fixed by `y0`.
pub struct OdeProblem<F> {
    rhs: F,
    t0: f64,
    t_end: f64,
    y0: Vec<f64>,
}

impl<F> OdeProblem<F>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    pub fn new(rhs: F, t0: f64, t_end: f64, y0: Vec<f64>) -> Result<Self> {
        if y0.is_empty() {
            return Err(IntegrationError::InvalidProblem(
                "state dimension must be positive".into(),
            ));
        }
        if !t0.is_finite() || !t_end.is_finite() || t_end <= t0 {
            return Err(IntegrationError::InvalidProblem(format!(
                "time span [{t0}, {t_end}] must be finite with t_end > t0"
            )));
        }
        if y0.iter().any(|v| !v.is_finite()) {
            return Err(IntegrationError::InvalidProblem(
                "initial state must be finite".into(),
            ));
        }
        Ok(Self { rhs, t0, t_end, y0 })
    }

    pub fn dimension(&self) -> usize {
        self.y0.len()
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn y0(&self) -> &[f64] {
        &self.y0
    }

    pub fn eval(&self, t: f64, y: &[f64], dydt: &mut [f64]) {
        (self.rhs)(t, y, dydt)
    }
}

/// Adaptive step-size controller settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    pub safety: f64,
    pub min_scale: f64,
    pub max_scale: f64,
    /// Initial step; `None` starts at one hundredth of the time span.
    pub h_init: Option<f64>,
    /// Cap on attempted steps (accepted plus rejected).
    pub max_steps: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            rtol: 1e-6,
            atol: 1e-9,
            safety: 0.9,
            min_scale: 0.2,
            max_scale: 5.0,
            h_init: None,
            max_steps: 100_000,
        }
    }
}

impl StepControl {
    pub fn with_tolerances(rtol: f64, atol: f64) -> Self {
        Self {
            rtol,
            atol,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(IntegrationError::InvalidControl(msg.to_string()));
        if !(self.rtol > 0.0 && self.rtol.is_finite()) {
            return bad("rtol must be positive and finite");
        }
        if !(self.atol >= 0.0 && self.atol.is_finite()) {
            return bad("atol must be non-negative and finite");
        }
        if !(self.safety > 0.0 && self.safety < 1.0) {
            return bad("safety must lie in (0, 1)");
        }
        if !(self.min_scale > 0.0 && self.min_scale < 1.0 && self.max_scale > 1.0)
            || !self.max_scale.is_finite()
        {
            return bad("scales must satisfy 0 < min_scale < 1 < max_scale");
        }
        if let Some(h) = self.h_init {
            if !(h > 0.0 && h.is_finite()) {
                return bad("h_init must be positive and finite");
            }
        }
        if self.max_steps == 0 {
            return bad("max_steps must be at least 1");
        }
        Ok(())
    }
}

/// States sampled at the requested times, plus step statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionSeries {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub steps_taken: usize,
    pub steps_rejected: usize,
}

impl SolutionSeries {
    pub fn last_state(&self) -> &[f64] {
        self.states.last().map(Vec::as_slice).unwrap_or(&[])
    }

    /// Values of one state component across all samples.
    pub fn component(&self, index: usize) -> Vec<f64> {
        self.states.iter().map(|y| y[index]).collect()
    }
}

/// A seven-stage explicit Runge-Kutta pair with an embedded lower-order
/// solution. `a` is strictly lower triangular.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tableau {
    pub c: [f64; 7],
    pub a: [[f64; 7]; 7],
    /// Weights of the propagated (5th order) solution.
    pub b: [f64; 7],
    /// Weights of the embedded (4th order) solution.
    pub b_hat: [f64; 7],
}

impl Tableau {
    /// Dormand & Prince (1980), "A family of embedded Runge-Kutta formulae",
    /// J. Comput. Appl. Math. 6(1), 19-26, Table 2 (RK5(4)7M).
    pub fn dormand_prince() -> Self {
        let mut a = [[0.0; 7]; 7];
        a[1][0] = 1.0 / 5.0;
        a[2][..2].copy_from_slice(&[3.0 / 40.0, 9.0 / 40.0]);
        a[3][..3].copy_from_slice(&[44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0]);
        a[4][..4].copy_from_slice(&[
            19372.0 / 6561.0,
            -25360.0 / 2187.0,
            64448.0 / 6561.0,
            -212.0 / 729.0,
        ]);
        a[5][..5].copy_from_slice(&[
            9017.0 / 3168.0,
            -355.0 / 33.0,
            46732.0 / 5247.0,
            49.0 / 176.0,
            -5103.0 / 18656.0,
        ]);
        let b = [
            35.0 / 384.0,
            0.0,
            500.0 / 1113.0,
            125.0 / 192.0,
            -2187.0 / 6784.0,
            11.0 / 84.0,
            0.0,
        ];
        // FSAL: the last stage is evaluated at the propagated solution.
        a[6][..6].copy_from_slice(&b[..6]);
        Self {
            c: [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0],
            a,
            b,
            b_hat: [
                5179.0 / 57600.0,
                0.0,
                7571.0 / 16695.0,
                393.0 / 640.0,
                -92097.0 / 339200.0,
                187.0 / 2100.0,
                1.0 / 40.0,
            ],
        }
    }

    /// Advances `y` by one step of size `h`, returning the propagated
    /// solution and the componentwise difference between the two embedded
    /// solutions. Evaluates the right-hand side exactly seven times.
    pub fn step<F>(&self, rhs: F, t: f64, y: &[f64], h: f64) -> Result<StepOutcome>
    where
        F: Fn(f64, &[f64], &mut [f64]),
    {
        let dim = y.len();
        let mut k = [(); 7].map(|_| vec![0.0; dim]);
        let mut stage = vec![0.0; dim];

        for s in 0..7 {
            stage.copy_from_slice(y);
            for (j, kj) in k.iter().enumerate().take(s) {
                let coef = self.a[s][j];
                if coef != 0.0 {
                    for (st, kv) in stage.iter_mut().zip(kj) {
                        *st += h * coef * kv;
                    }
                }
            }
            let ts = t + self.c[s] * h;
            rhs(ts, &stage, &mut k[s]);
            if k[s].iter().any(|v| !v.is_finite()) {
                return Err(IntegrationError::NonFinite { t, h });
            }
        }

        let mut y_next = y.to_vec();
        let mut error = vec![0.0; dim];
        for (s, ks) in k.iter().enumerate() {
            let w = self.b[s];
            let e = self.b[s] - self.b_hat[s];
            for i in 0..dim {
                y_next[i] += h * w * ks[i];
                error[i] += h * e * ks[i];
            }
        }
        if y_next.iter().any(|v| !v.is_finite()) {
            return Err(IntegrationError::NonFinite { t, h });
        }
        Ok(StepOutcome { y_next, error })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub y_next: Vec<f64>,
    pub error: Vec<f64>,
}

/// One Dormand-Prince 5(4) step with the standard coefficients.
pub fn dp45_step<F>(rhs: F, t: f64, y: &[f64], h: f64) -> Result<StepOutcome>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    if !(h > 0.0 && h.is_finite()) {
        return Err(IntegrationError::InvalidProblem(format!(
            "step size must be positive, got {h}"
        )));
    }
    Tableau::dormand_prince().step(rhs, t, y, h)
}

/// Scaled RMS norm of the local error estimate.
pub fn error_norm(error: &[f64], y: &[f64], y_next: &[f64], control: &StepControl) -> f64 {
    let sum: f64 = error
        .iter()
        .zip(y.iter().zip(y_next))
        .map(|(e, (a, b))| {
            let scale = control.atol + control.rtol * a.abs().max(b.abs());
            if *e == 0.0 {
                0.0
            } else if scale == 0.0 {
                f64::INFINITY
            } else {
                (e / scale).powi(2)
            }
        })
        .sum();
    (sum / error.len() as f64).sqrt()
}

/// Adaptive solver: a Runge-Kutta pair plus its step controller.
#[derive(Debug, Clone, Copy)]
pub struct AdaptiveSolver {
    tableau: Tableau,
    control: StepControl,
}

impl Default for AdaptiveSolver {
    fn default() -> Self {
        Self::new(StepControl::default())
    }
}

impl AdaptiveSolver {
    pub fn new(control: StepControl) -> Self {
        Self {
            tableau: Tableau::dormand_prince(),
            control,
        }
    }

    pub fn with_tableau(mut self, tableau: Tableau) -> Self {
        self.tableau = tableau;
        self
    }

    pub fn control(&self) -> &StepControl {
        &self.control
    }

    pub fn tableau(&self) -> &Tableau {
        &self.tableau
    }

    pub fn solve<F>(&self, problem: &OdeProblem<F>, sample_times: &[f64]) -> Result<SolutionSeries>
    where
        F: Fn(f64, &[f64], &mut [f64]),
    {
        self.solve_projected(problem, sample_times, |_, _| Ok(()))
    }

    /// Like [`solve`](Self::solve), but runs `project` on the state after
    /// every accepted step. The hook may adjust the state in place or
    /// reject it with a reason, which aborts the integration.
    pub fn solve_projected<F, P>(
        &self,
        problem: &OdeProblem<F>,
        sample_times: &[f64],
        mut project: P,
    ) -> Result<SolutionSeries>
    where
        F: Fn(f64, &[f64], &mut [f64]),
        P: FnMut(f64, &mut [f64]) -> std::result::Result<(), String>,
    {
        let control = &self.control;
        control.validate()?;
        validate_samples(sample_times, problem.t0, problem.t_end)?;

        let exponent = -1.0 / 5.0;
        let mut t = problem.t0;
        let mut y = problem.y0.clone();
        let mut h = control
            .h_init
            .unwrap_or((problem.t_end - problem.t0) / 100.0);
        let mut attempts = 0usize;
        let mut rejected = 0usize;
        let mut accepted = 0usize;

        let mut times = Vec::with_capacity(sample_times.len());
        let mut states = Vec::with_capacity(sample_times.len());
        times.push(sample_times[0]);
        states.push(y.clone());

        for &target in &sample_times[1..] {
            while t < target {
                if attempts >= control.max_steps {
                    return Err(IntegrationError::MaxStepsExceeded {
                        t,
                        max_steps: control.max_steps,
                    });
                }
                attempts += 1;

                // Land exactly on the sample time when the step would reach
                // it or leave a sliver shorter than rounding noise.
                let remaining = target - t;
                let lands = h >= remaining || remaining - h <= 1e-12 * target.abs().max(1.0);
                let h_try = if lands { remaining } else { h };
                if h_try <= f64::EPSILON * t.abs().max(1.0) * 4.0 && !lands {
                    return Err(IntegrationError::StepSizeUnderflow { t, h: h_try });
                }

                let outcome =
                    self.tableau
                        .step(|ts, ys, d| problem.eval(ts, ys, d), t, &y, h_try)?;
                let err = error_norm(&outcome.error, &y, &outcome.y_next, control);
                let factor = if err == 0.0 {
                    control.max_scale
                } else {
                    (control.safety * err.powf(exponent))
                        .clamp(control.min_scale, control.max_scale)
                };

                if err <= 1.0 {
                    t = if lands { target } else { t + h_try };
                    y = outcome.y_next;
                    project(t, &mut y)
                        .map_err(|reason| IntegrationError::StateRejected { t, reason })?;
                    accepted += 1;
                } else {
                    rejected += 1;
                    if h_try * factor <= f64::EPSILON * t.abs().max(1.0) {
                        return Err(IntegrationError::StepSizeUnderflow { t, h: h_try });
                    }
                }
                h = h_try * factor;
            }
            times.push(target);
            states.push(y.clone());
        }

        Ok(SolutionSeries {
            times,
            states,
            steps_taken: accepted,
            steps_rejected: rejected,
        })
    }

    /// Integrates with a constant step using only the propagated solution
    /// of the pair (no error control). Used to measure convergence order.
    pub fn solve_fixed<F>(
        &self,
        problem: &OdeProblem<F>,
        h: f64,
        sample_times: &[f64],
    ) -> Result<SolutionSeries>
    where
        F: Fn(f64, &[f64], &mut [f64]),
    {
        let tableau = self.tableau;
        fixed_step_drive(problem, h, sample_times, |t, y, h| {
            tableau
                .step(|ts, ys, d| problem.eval(ts, ys, d), t, y, h)
                .map(|o| o.y_next)
        })
    }
}

/// Adaptive Dormand-Prince integration with the given controller settings.
pub fn integrate<F>(
    problem: &OdeProblem<F>,
    control: &StepControl,
    sample_times: &[f64],
) -> Result<SolutionSeries>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    AdaptiveSolver::new(*control).solve(problem, sample_times)
}

/// Classical fourth-order Runge-Kutta with constant step `h`. The last
/// substep before each sample time is shortened to land on it exactly.
pub fn rk4_reference<F>(
    problem: &OdeProblem<F>,
    h: f64,
    sample_times: &[f64],
) -> Result<SolutionSeries>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    fixed_step_drive(problem, h, sample_times, |t, y, h| {
        let dim = y.len();
        let mut k1 = vec![0.0; dim];
        let mut k2 = vec![0.0; dim];
        let mut k3 = vec![0.0; dim];
        let mut k4 = vec![0.0; dim];
        let mut tmp = vec![0.0; dim];

        problem.eval(t, y, &mut k1);
        for i in 0..dim {
            tmp[i] = y[i] + 0.5 * h * k1[i];
        }
        problem.eval(t + 0.5 * h, &tmp, &mut k2);
        for i in 0..dim {
            tmp[i] = y[i] + 0.5 * h * k2[i];
        }
        problem.eval(t + 0.5 * h, &tmp, &mut k3);
        for i in 0..dim {
            tmp[i] = y[i] + h * k3[i];
        }
        problem.eval(t + h, &tmp, &mut k4);

        let next: Vec<f64> = (0..dim)
            .map(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
            .collect();
        if next.iter().any(|v| !v.is_finite()) {
            return Err(IntegrationError::NonFinite { t, h });
        }
        Ok(next)
    })
}

fn fixed_step_drive<F, S>(
    problem: &OdeProblem<F>,
    h: f64,
    sample_times: &[f64],
    mut step: S,
) -> Result<SolutionSeries>
where
    F: Fn(f64, &[f64], &mut [f64]),
    S: FnMut(f64, &[f64], f64) -> Result<Vec<f64>>,
{
    if !(h > 0.0 && h.is_finite()) {
        return Err(IntegrationError::InvalidProblem(format!(
            "step size must be positive, got {h}"
        )));
    }
    validate_samples(sample_times, problem.t0, problem.t_end)?;

    let mut t = problem.t0;
    let mut y = problem.y0.clone();
    let mut steps = 0usize;
    let mut times = vec![sample_times[0]];
    let mut states = vec![y.clone()];

    for &target in &sample_times[1..] {
        // Step count is fixed up front so the grid does not drift with
        // accumulated rounding in t.
        let gap = target - t;
        let n = ((gap / h) - 1e-9).ceil().max(1.0) as usize;
        let start = t;
        for k in 0..n {
            let t_next = if k + 1 == n {
                target
            } else {
                start + (k + 1) as f64 * h
            };
            y = step(t, &y, t_next - t)?;
            t = t_next;
            steps += 1;
        }
        times.push(target);
        states.push(y.clone());
    }

    Ok(SolutionSeries {
        times,
        states,
        steps_taken: steps,
        steps_rejected: 0,
    })
}

fn validate_samples(samples: &[f64], t0: f64, t_end: f64) -> Result<()> {
    if samples.len() < 2 {
        return Err(IntegrationError::InvalidSamples(
            "at least two sample times are required".into(),
        ));
    }
    if samples[0] != t0 || samples[samples.len() - 1] != t_end {
        return Err(IntegrationError::InvalidSamples(format!(
            "sample times must start at {t0} and end at {t_end}"
        )));
    }
    if samples.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(IntegrationError::InvalidSamples(
            "sample times must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Uniform grid of `n` points from `t0` to `t_end` inclusive, computed as
/// `t0 + k * span / (n - 1)` so that endpoints are exact.
pub fn uniform_grid(t0: f64, t_end: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2, "a grid needs at least two points");
    let span = t_end - t0;
    let last = (n - 1) as f64;
    (0..n)
        .map(|k| {
            if k + 1 == n {
                t_end
            } else {
                t0 + (k as f64 * span) / last
            }
        })
        .collect()
}
