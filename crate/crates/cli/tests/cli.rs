use std::fs;
use std::path::Path;

use vmsir::{cmd_check, cmd_figures, run, EXIT_FAILURE, EXIT_OK, EXIT_USAGE};
use vmsir_core::integrator::{AdaptiveSolver, Tableau};

fn invoke(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut full = vec!["vmsir"];
    full.extend_from_slice(args);
    let code = run(full, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn baseline_flags(csv: &Path) -> Vec<String> {
    [
        "simulate",
        "--beta",
        "0.25",
        "--gamma",
        "0.1",
        "--s0",
        "900",
        "--i0",
        "100",
        "--r0",
        "0",
        "--out-csv",
    ]
    .iter()
    .map(|s| s.to_string())
    .chain([csv.display().to_string()])
    .collect()
}

#[test]
fn simulate_matches_golden_summary() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("run.csv");
    let args = baseline_flags(&csv);
    let (code, out, _) = invoke(&args.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(code, EXIT_OK);
    let golden = include_str!("golden/simulate_baseline.txt");
    assert_eq!(out, golden);
    assert!(out.contains("R0=2.5000 class=supercritical"));
    let text = fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().nth(1), Some("0,900,100,0"));
    assert_eq!(text.lines().count(), 1002);
}

#[test]
fn simulate_reads_config_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    let csv = dir.path().join("out.csv");
    let svg = dir.path().join("out.svg");
    fs::write(
        &cfg,
        format!(
            "# baseline\nbeta = 0.1\ngamma = 0.1\ns0 = 900\ni0 = 100\nr0 = 0\nn_samples = 101\nout_csv = {}\n",
            csv.display()
        ),
    )
    .unwrap();
    let (code, out, err) = invoke(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--beta",
        "0.25",
        "--out-svg",
        svg.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert!(out.starts_with("R0=2.5000"));
    assert_eq!(fs::read_to_string(&csv).unwrap().lines().count(), 102);
    roxmltree::Document::parse(&fs::read_to_string(&svg).unwrap()).unwrap();
}

#[test]
fn simulate_without_arguments_prints_usage() {
    let (code, _, err) = invoke(&["simulate"]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("usage"));
}

#[test]
fn simulate_rejects_negative_beta() {
    let (code, _, err) = invoke(&[
        "simulate",
        "--beta",
        "-1",
        "--gamma",
        "0.1",
        "--s0",
        "900",
        "--i0",
        "100",
        "--r0",
        "0",
        "--out-csv",
        "x.csv",
    ]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("beta"), "{err}");
}

#[test]
fn unknown_flags_and_missing_subcommand_exit_2() {
    assert_eq!(invoke(&["simulate", "--delta", "3"]).0, EXIT_USAGE);
    assert_eq!(invoke(&[]).0, EXIT_USAGE);
    assert_eq!(invoke(&["--help"]).0, EXIT_OK);
}

#[test]
fn unwritable_output_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("missing").join("run.csv");
    let args = baseline_flags(&csv);
    let (code, _, err) = invoke(&args.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(code, EXIT_FAILURE);
    assert!(err.contains("cannot write"));
}

#[test]
fn figures_writes_every_panel() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = invoke(&["figures", dir.path().to_str().unwrap()]);
    assert_eq!(code, EXIT_OK, "{err}");
    let mut names: Vec<String> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    let mut expected = Vec::new();
    for fig in ["fig2", "fig3", "fig4"] {
        for panel in ["a", "b", "c", "d"] {
            expected.push(format!("{fig}{panel}.csv"));
            expected.push(format!("{fig}{panel}.svg"));
        }
    }
    expected.sort();
    assert_eq!(names, expected);

    for (panel, seed) in [
        ("fig4a", 1.0),
        ("fig4b", 10.0),
        ("fig4c", 100.0),
        ("fig4d", 200.0),
    ] {
        let csv = fs::read_to_string(dir.path().join(format!("{panel}.csv"))).unwrap();
        let first: Vec<f64> = csv
            .lines()
            .nth(1)
            .unwrap()
            .split(',')
            .map(|v| v.parse().unwrap())
            .collect();
        assert_eq!(first, vec![0.0, 1000.0 - seed, seed, 0.0]);
    }
}

#[test]
fn figures_into_a_file_path_fails() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("occupied");
    fs::write(&file, "x").unwrap();
    let mut out = Vec::new();
    let mut err = Vec::new();
    assert_eq!(
        cmd_figures(&file, &AdaptiveSolver::default(), &mut out, &mut err),
        EXIT_FAILURE
    );
}

#[test]
fn sweep_command_writes_metrics_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.cfg");
    let csv = dir.path().join("metrics.csv");
    let svg = dir.path().join("sweep.svg");
    fs::write(
        &cfg,
        format!(
            "beta = 0.25\ngamma = 0.1\ns0 = 900\ni0 = 100\nr0 = 0\nsweep_param = seed\nsweep_values = 1,10,100,200\nout_csv = {}\nout_svg = {}\n",
            csv.display(),
            svg.display()
        ),
    )
    .unwrap();
    let (code, out, err) = invoke(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert!(out.contains("seed=200 R0=2.5000"));
    assert!(out.contains("seed,reach_fraction,t_peak,marginal_reach_per_seed"));
    let table = fs::read_to_string(&csv).unwrap();
    assert!(table.starts_with("seed,r0,classification,"));
    assert_eq!(table.lines().count(), 5);
    let doc_text = fs::read_to_string(&svg).unwrap();
    let doc = roxmltree::Document::parse(&doc_text).unwrap();
    assert_eq!(
        doc.descendants()
            .filter(|n| n.has_tag_name("polyline"))
            .count(),
        4
    );
}

#[test]
fn sweep_without_sweep_keys_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("plain.cfg");
    fs::write(
        &cfg,
        "beta = 0.25\ngamma = 0.1\ns0 = 900\ni0 = 100\nr0 = 0\n",
    )
    .unwrap();
    assert_eq!(
        invoke(&["sweep", "--config", cfg.to_str().unwrap()]).0,
        EXIT_USAGE
    );
}

#[test]
fn check_passes_and_verbose_prints_residuals() {
    let (code, out, _) = invoke(&["check", "-v"]);
    assert_eq!(code, EXIT_OK, "{out}");
    assert!(out.contains("[PASS] order"));
    assert!(out.contains("fig3d: conservation="));
    assert!(out.contains("all 17 checks passed"));
}

#[test]
fn check_detects_damaged_tableau() {
    let mut tab = Tableau::dormand_prince();
    tab.b[3] -= 2e-3;
    let mut out = Vec::new();
    let code = cmd_check(
        false,
        &AdaptiveSolver::default().with_tableau(tab),
        &mut out,
    );
    let out = String::from_utf8(out).unwrap();
    assert_eq!(code, EXIT_FAILURE);
    assert!(out.contains("[FAIL] order"), "{out}");
    assert!(out.contains("failed checks:"));
}
