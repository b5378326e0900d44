use proptest::prelude::*;
use vmsir_core::integrator::{
    integrate, rk4_reference, uniform_grid, AdaptiveSolver, OdeProblem, StepControl,
};

fn decay() -> OdeProblem<impl Fn(f64, &[f64], &mut [f64])> {
    OdeProblem::new(
        |_, y: &[f64], d: &mut [f64]| d[0] = -y[0],
        0.0,
        1.0,
        vec![1.0],
    )
    .unwrap()
}

fn fixed_error(h: f64) -> f64 {
    let sol = AdaptiveSolver::default()
        .solve_fixed(&decay(), h, &[0.0, 1.0])
        .unwrap();
    (sol.last_state()[0] - (-1.0f64).exp()).abs()
}

#[test]
fn halving_fixed_step_gains_fifth_order() {
    for h in [0.2, 0.1] {
        let ratio = fixed_error(h) / fixed_error(h / 2.0);
        assert!((16.0..=64.0).contains(&ratio), "h={h}: ratio {ratio}");
    }
}

#[test]
fn tighter_tolerance_never_hurts() {
    let exact = (-1.0f64).exp();
    let mut previous = f64::INFINITY;
    for rtol in [1e-3, 1e-5, 1e-7, 1e-9, 1e-11] {
        let sol = integrate(
            &decay(),
            &StepControl::with_tolerances(rtol, 1e-14),
            &[0.0, 1.0],
        )
        .unwrap();
        let err = (sol.last_state()[0] - exact).abs();
        assert!(err <= previous, "rtol={rtol}: {err} > {previous}");
        previous = err;
    }
}

#[test]
fn repeated_runs_are_bitwise_identical() {
    let grid = uniform_grid(0.0, 1.0, 17);
    let a = integrate(&decay(), &StepControl::default(), &grid).unwrap();
    let b = integrate(&decay(), &StepControl::default(), &grid).unwrap();
    assert_eq!(a, b);
    for (x, y) in a.states.iter().flatten().zip(b.states.iter().flatten()) {
        assert_eq!(x.to_bits(), y.to_bits());
    }
}

#[test]
fn two_dimensional_oscillator_tracks_closed_form() {
    // y'' = -y as a first-order system; exact solution (cos t, -sin t).
    let p = OdeProblem::new(
        |_, y: &[f64], d: &mut [f64]| {
            d[0] = y[1];
            d[1] = -y[0];
        },
        0.0,
        10.0,
        vec![1.0, 0.0],
    )
    .unwrap();
    let grid = uniform_grid(0.0, 10.0, 101);
    let sol = integrate(&p, &StepControl::with_tolerances(1e-10, 1e-12), &grid).unwrap();
    for (t, y) in sol.times.iter().zip(&sol.states) {
        assert!((y[0] - t.cos()).abs() < 1e-8);
        assert!((y[1] + t.sin()).abs() < 1e-8);
    }
}

proptest! {
    #[test]
    fn constant_and_linear_fields_are_exact(c in -50.0f64..50.0, y0 in -10.0f64..10.0, t_end in 0.5f64..20.0) {
        let constant = OdeProblem::new(move |_, _, d: &mut [f64]| d[0] = c, 0.0, t_end, vec![y0]).unwrap();
        let linear = OdeProblem::new(move |t, _, d: &mut [f64]| d[0] = c * t, 0.0, t_end, vec![y0]).unwrap();
        let grid = uniform_grid(0.0, t_end, 9);
        let adaptive_c = integrate(&constant, &StepControl::default(), &grid).unwrap();
        let adaptive_l = integrate(&linear, &StepControl::default(), &grid).unwrap();
        let rk4_l = rk4_reference(&linear, t_end / 7.0, &grid).unwrap();
        for (k, &t) in grid.iter().enumerate() {
            let want_c = y0 + c * t;
            let want_l = y0 + 0.5 * c * t * t;
            let scale_c = want_c.abs().max(1.0);
            let scale_l = want_l.abs().max(1.0);
            prop_assert!((adaptive_c.states[k][0] - want_c).abs() / scale_c < 1e-12);
            prop_assert!((adaptive_l.states[k][0] - want_l).abs() / scale_l < 1e-12);
            prop_assert!((rk4_l.states[k][0] - want_l).abs() / scale_l < 1e-12);
        }
    }

    #[test]
    fn samples_land_exactly_on_requested_times(n in 2usize..40, t_end in 0.1f64..50.0, rate in 0.01f64..3.0) {
        let p = OdeProblem::new(move |_, y: &[f64], d: &mut [f64]| d[0] = -rate * y[0], 0.0, t_end, vec![2.0]).unwrap();
        let grid = uniform_grid(0.0, t_end, n);
        let sol = integrate(&p, &StepControl::default(), &grid).unwrap();
        prop_assert_eq!(&sol.times, &grid);
        prop_assert_eq!(sol.states[0][0], 2.0);
        for (t, y) in sol.times.iter().zip(&sol.states) {
            let want = 2.0 * (-rate * t).exp();
            prop_assert!((y[0] - want).abs() <= 1e-5 * want + 1e-8);
        }
    }
}
