//! Command-line front end: `simulate`, `sweep`, `figures` and `check`.
//!
//! Exit codes: 0 on success, 1 when a run or a file write fails, 2 for
//! invalid arguments or configuration.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use vmsir_core::campaign::{
    figure_presets, metrics, run_scenario_with, seed_efficiency, sweep_with, CampaignMetrics,
    SweepParameter, DEFAULT_T_END,
};
use vmsir_core::check::run_checks;
use vmsir_core::integrator::{AdaptiveSolver, StepControl};
use vmsir_core::io::{
    trajectory_svg, write_csv, write_metrics_csv, write_svg_chart, PartialConfig, RunConfig, Series,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "vmsir",
    version,
    about = "SIR simulations of viral-marketing campaigns"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one scenario and write its trajectory.
    Simulate(Box<SimulateArgs>),
    /// Run a parameter sweep described by a config file.
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
    /// Reproduce the beta, gamma and seed sweeps as CSV and SVG panels.
    Figures { out_dir: PathBuf },
    /// Run the self-consistency suite.
    Check {
        #[arg(short, long)]
        verbose: bool,
    },
}

/// Each flag maps one-to-one onto a config key and overrides it.
#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub gamma: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub s0: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub i0: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub r0: Option<String>,
    #[arg(long = "t-end", allow_hyphen_values = true)]
    pub t_end: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub samples: Option<String>,
    #[arg(long = "out-csv")]
    pub out_csv: Option<String>,
    #[arg(long = "out-svg")]
    pub out_svg: Option<String>,
}

impl SimulateArgs {
    fn overrides(&self) -> Vec<(&'static str, &str)> {
        [
            ("beta", &self.beta),
            ("gamma", &self.gamma),
            ("s0", &self.s0),
            ("i0", &self.i0),
            ("r0", &self.r0),
            ("t_end", &self.t_end),
            ("n_samples", &self.samples),
            ("out_csv", &self.out_csv),
            ("out_svg", &self.out_svg),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.as_deref().map(|v| (k, v)))
        .collect()
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let rendered = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{rendered}");
                return EXIT_OK;
            }
            let _ = write!(err, "{rendered}");
            return EXIT_USAGE;
        }
    };
    run_command(cli.command, &AdaptiveSolver::default(), out, err)
}

pub fn run_command(
    cmd: Command,
    solver: &AdaptiveSolver,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    match cmd {
        Command::Simulate(args) => cmd_simulate(&args, solver, out, err),
        Command::Sweep { config } => cmd_sweep(&config, solver, out, err),
        Command::Figures { out_dir } => cmd_figures(&out_dir, solver, out, err),
        Command::Check { verbose } => cmd_check(verbose, solver, out),
    }
}

const SIMULATE_USAGE: &str = "usage: vmsir simulate (--config PATH | --beta B --gamma G --s0 S --i0 I --r0 R) [--t-end T] [--samples N] --out-csv PATH [--out-svg PATH]";

fn load_config(path: &Path) -> Result<PartialConfig, String> {
    let text =
        fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    PartialConfig::parse(&text).map_err(|e| format!("{}: {e}", path.display()))
}

/// One-line summary printed by `simulate`.
pub fn summary_line(m: &CampaignMetrics) -> String {
    format!(
        "R0={} class={} peak_sharers={:.2} t_peak={:.2} reach={:.2} reach_fraction={:.4}",
        m.r0.map_or("undefined".to_string(), |r| format!("{r:.4}")),
        m.classification.map_or("undefined", |c| c.as_str()),
        m.peak_sharers,
        m.t_peak,
        m.cumulative_reach,
        m.reach_fraction,
    )
}

fn write_file(path: &Path, contents: &str) -> Result<(), String> {
    fs::write(path, contents).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

pub fn cmd_simulate(
    args: &SimulateArgs,
    solver: &AdaptiveSolver,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let mut partial = match &args.config {
        Some(path) => match load_config(path) {
            Ok(p) => p,
            Err(e) => {
                let _ = writeln!(err, "error: {e}\n{SIMULATE_USAGE}");
                return EXIT_USAGE;
            }
        },
        None => PartialConfig::new(),
    };
    let overrides = args.overrides();
    if partial.is_empty() && overrides.is_empty() {
        let _ = writeln!(err, "{SIMULATE_USAGE}");
        return EXIT_USAGE;
    }
    for (key, value) in overrides {
        partial
            .set(key, value, None)
            .expect("flag keys are known config keys");
    }
    let config = match partial.validate() {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(err, "error: {e}\n{SIMULATE_USAGE}");
            return EXIT_USAGE;
        }
    };
    let Some(csv_path) = config.out_csv.clone() else {
        let _ = writeln!(
            err,
            "error: an output CSV path is required\n{SIMULATE_USAGE}"
        );
        return EXIT_USAGE;
    };
    let scenario = match config.scenario("simulate") {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(err, "error: {e}\n{SIMULATE_USAGE}");
            return EXIT_USAGE;
        }
    };

    let traj = match run_scenario_with(&scenario, solver) {
        Ok(t) => t,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_FAILURE;
        }
    };
    let m = metrics(&traj);
    let mut writes = vec![(csv_path, write_csv(&traj))];
    if let Some(svg_path) = &config.out_svg {
        let title = format!(
            "SIR beta={} gamma={} I(0)={}",
            config.beta, config.gamma, config.i0
        );
        writes.push((svg_path.clone(), trajectory_svg(&traj, &title)));
    }
    for (path, contents) in writes {
        if let Err(e) = write_file(&path, &contents) {
            let _ = writeln!(err, "error: {e}");
            return EXIT_FAILURE;
        }
    }
    let _ = writeln!(out, "{}", summary_line(&m));
    EXIT_OK
}

fn cmd_sweep(
    path: &Path,
    solver: &AdaptiveSolver,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let config: RunConfig =
        match load_config(path).and_then(|p| p.validate().map_err(|e| e.to_string())) {
            Ok(c) => c,
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                return EXIT_USAGE;
            }
        };
    let spec = match config.sweep_spec("sweep") {
        Some(Ok(spec)) => spec,
        Some(Err(e)) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_USAGE;
        }
        None => {
            let _ = writeln!(
                err,
                "error: sweep needs `sweep_param` and `sweep_values` in the config"
            );
            return EXIT_USAGE;
        }
    };

    let runs = sweep_with(&spec, solver);
    let mut failed = false;
    for run in &runs {
        match &run.outcome {
            Ok((_, m)) => {
                let _ = writeln!(
                    out,
                    "{}={} {}",
                    spec.parameter.name(),
                    run.value,
                    summary_line(m)
                );
            }
            Err(e) => {
                failed = true;
                let _ = writeln!(out, "{}={} error: {e}", spec.parameter.name(), run.value);
            }
        }
    }
    if spec.parameter == SweepParameter::Seed {
        if let Ok(rows) = seed_efficiency(&spec, solver.control()) {
            let _ = writeln!(out, "seed,reach_fraction,t_peak,marginal_reach_per_seed");
            for row in rows {
                let marginal = row
                    .marginal_reach_per_seed
                    .map_or(String::new(), |v| format!("{v:.4}"));
                let _ = writeln!(
                    out,
                    "{},{:.4},{:.2},{marginal}",
                    row.seed, row.reach_fraction, row.t_peak
                );
            }
        }
    }

    if let Some(csv_path) = &config.out_csv {
        if let Err(e) = write_file(csv_path, &write_metrics_csv(&runs, spec.parameter)) {
            let _ = writeln!(err, "error: {e}");
            return EXIT_FAILURE;
        }
    }
    if let Some(svg_path) = &config.out_svg {
        let ok: Vec<_> = runs
            .iter()
            .filter_map(|r| r.outcome.as_ref().ok().map(|(t, _)| (r.value, t)))
            .collect();
        let labels: Vec<String> = ok
            .iter()
            .map(|(v, _)| format!("I, {}={v}", spec.parameter.name()))
            .collect();
        let series: Vec<Series<'_>> = ok
            .iter()
            .zip(&labels)
            .map(|((_, t), label)| Series {
                label,
                times: &t.times,
                values: &t.i,
            })
            .collect();
        let title = format!("Sharers I(t) across {} values", spec.parameter.name());
        match write_svg_chart(&series, &title) {
            Ok(svg) => {
                if let Err(e) = write_file(svg_path, &svg) {
                    let _ = writeln!(err, "error: {e}");
                    return EXIT_FAILURE;
                }
            }
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                return EXIT_FAILURE;
            }
        }
    }
    if failed {
        EXIT_FAILURE
    } else {
        EXIT_OK
    }
}

/// Writes `figN{a..d}.csv` and `figN{a..d}.svg` for the three presets.
pub fn cmd_figures(
    out_dir: &Path,
    solver: &AdaptiveSolver,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    if let Err(e) = fs::create_dir_all(out_dir) {
        let _ = writeln!(err, "error: cannot create {}: {e}", out_dir.display());
        return EXIT_FAILURE;
    }
    for preset in figure_presets() {
        let runs = sweep_with(&preset.spec, solver);
        for (panel, run) in preset.panel_names().iter().zip(&runs) {
            let traj = match &run.outcome {
                Ok((t, _)) => t,
                Err(e) => {
                    let _ = writeln!(err, "error: {panel}: {e}");
                    return EXIT_FAILURE;
                }
            };
            let scn = &traj.scenario;
            let title = format!(
                "{panel}: beta={} gamma={} I(0)={} (t_end={DEFAULT_T_END})",
                scn.params.beta(),
                scn.params.gamma(),
                scn.initial.i
            );
            for (ext, contents) in [
                ("csv", write_csv(traj)),
                ("svg", trajectory_svg(traj, &title)),
            ] {
                let path = out_dir.join(format!("{panel}.{ext}"));
                if let Err(e) = write_file(&path, &contents) {
                    let _ = writeln!(err, "error: {e}");
                    return EXIT_FAILURE;
                }
            }
            let _ = writeln!(out, "{panel}: {}", summary_line(&metrics(traj)));
        }
    }
    EXIT_OK
}

pub fn cmd_check(verbose: bool, solver: &AdaptiveSolver, out: &mut dyn Write) -> i32 {
    let report = run_checks(solver);
    for r in &report.results {
        let status = if r.passed { "PASS" } else { "FAIL" };
        let _ = writeln!(out, "[{status}] {}: {}", r.name, r.detail);
    }
    if verbose {
        for line in &report.residuals {
            let _ = writeln!(out, "  {line}");
        }
    }
    if report.all_passed() {
        let _ = writeln!(out, "all {} checks passed", report.results.len());
        EXIT_OK
    } else {
        let names: Vec<&str> = report.failures().map(|r| r.name.as_str()).collect();
        let _ = writeln!(out, "failed checks: {}", names.join(", "));
        EXIT_FAILURE
    }
}

/// Solver used when none is injected; exposed for tests.
pub fn default_solver() -> AdaptiveSolver {
    AdaptiveSolver::new(StepControl::default())
}
