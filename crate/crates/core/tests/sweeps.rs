use vmsir_core::campaign::{
    figure_presets, seed_efficiency, sweep, Scenario, SweepParameter, SweepSpec,
};
use vmsir_core::check::compare_final_size;
use vmsir_core::integrator::StepControl;
use vmsir_core::sir::{final_size, ModelParams, OutbreakClass, Population};

fn reaches(parameter: SweepParameter, values: &[f64]) -> Vec<f64> {
    let spec = SweepSpec::new(Scenario::baseline(), parameter, values.to_vec()).unwrap();
    sweep(&spec, &StepControl::default())
        .into_iter()
        .map(|run| run.outcome.unwrap().1.cumulative_reach)
        .collect()
}

#[test]
fn reach_rises_with_infectivity() {
    let r = reaches(SweepParameter::Beta, &[0.1, 0.25, 0.5, 0.7]);
    assert!(r.windows(2).all(|w| w[1] > w[0]), "{r:?}");
}

#[test]
fn reach_falls_with_recovery_rate() {
    let r = reaches(SweepParameter::Gamma, &[0.01, 0.1, 0.2, 0.5]);
    // gamma = 0.01 is still spreading at t = 100, so compare its final size
    let fs = final_size(
        ModelParams::new(0.25, 0.01).unwrap(),
        900.0,
        100.0,
        0.0,
        Population::new(1000.0).unwrap(),
    )
    .unwrap();
    assert!(fs.r_inf > r[1]);
    assert!(r[1..].windows(2).all(|w| w[1] < w[0]), "{r:?}");
}

#[test]
fn larger_seeds_peak_sooner() {
    let spec = SweepSpec::new(
        Scenario::baseline(),
        SweepParameter::Seed,
        vec![1.0, 10.0, 100.0, 200.0],
    )
    .unwrap();
    let peaks: Vec<f64> = sweep(&spec, &StepControl::default())
        .into_iter()
        .map(|run| run.outcome.unwrap().1.t_peak)
        .collect();
    assert!(peaks.windows(2).all(|w| w[1] < w[0]), "{peaks:?}");
}

#[test]
fn final_size_never_shrinks_with_seed() {
    let pop = Population::new(1000.0).unwrap();
    let params = ModelParams::new(0.25, 0.1).unwrap();
    let sizes: Vec<f64> = [1.0, 10.0, 100.0, 200.0]
        .iter()
        .map(|&i0| final_size(params, 1000.0 - i0, i0, 0.0, pop).unwrap().r_inf)
        .collect();
    assert!(sizes.windows(2).all(|w| w[1] >= w[0]), "{sizes:?}");
}

#[test]
fn preset_runs_agree_with_final_size_where_settled() {
    for preset in figure_presets() {
        for run in sweep(&preset.spec, &StepControl::default()) {
            let (traj, m) = run.outcome.unwrap();
            let cmp = compare_final_size(&traj).unwrap();
            assert!(cmp.passed, "{}: {cmp:?}", traj.scenario.label);
            let slow = m.classification == Some(OutbreakClass::Critical)
                || traj.scenario.params.gamma() == 0.01;
            if slow {
                assert!(!cmp.settled, "{}", traj.scenario.label);
            }
        }
    }
}

#[test]
fn seed_efficiency_table() {
    let spec = SweepSpec::new(Scenario::baseline(), SweepParameter::Seed, vec![10.0, 1.0]).unwrap();
    let rows = seed_efficiency(&spec, &StepControl::default()).unwrap();
    assert_eq!(
        rows.iter().map(|r| r.seed).collect::<Vec<_>>(),
        vec![1.0, 10.0]
    );
    assert!(rows[1].marginal_reach_per_seed.unwrap() >= 0.0);
}

#[test]
fn high_infectivity_saturates_by_t60() {
    let spec = SweepSpec::new(Scenario::baseline(), SweepParameter::Beta, vec![0.5, 0.7]).unwrap();
    for run in sweep(&spec, &StepControl::default()) {
        let (traj, m) = run.outcome.unwrap();
        let k = traj.index_near(60.0);
        assert!(traj.r[k] / 1000.0 > 0.95);
        assert!(m.depletion_time.unwrap() <= 60.0);
        assert!(m.half_reach_time.unwrap() < m.depletion_time.unwrap());
    }
}

#[test]
fn sweeps_are_deterministic() {
    let preset = &figure_presets()[1];
    let a = sweep(&preset.spec, &StepControl::default());
    let b = sweep(&preset.spec, &StepControl::default());
    assert_eq!(a, b);
}

#[test]
fn recovery_sweep_ordering_holds_once_runs_settle() {
    let base = Scenario::baseline().with_horizon(2000.0, 2001).unwrap();
    let spec = SweepSpec::new(base, SweepParameter::Gamma, vec![0.01, 0.1, 0.2, 0.5]).unwrap();
    let r: Vec<f64> = sweep(&spec, &StepControl::default())
        .into_iter()
        .map(|run| run.outcome.unwrap().1.cumulative_reach)
        .collect();
    assert!(r.windows(2).all(|w| w[1] < w[0]), "{r:?}");
}
