//! Run configuration, CSV export and SVG charts.
//!
//! # Config grammar
//!
//! One `key = value` pair per line; `#` starts a comment; blank lines are
//! ignored. Keys: `beta`, `gamma`, `s0`, `i0`, `r0` (required), `t_end`
//! (default 100), `n_samples` (default 1001), `sweep_param`
//! (`beta` | `gamma` | `seed`), `sweep_values` (comma-separated), `out_csv`,
//! `out_svg`. The population size is `s0 + i0 + r0`.
//!
//! # CSV
//!
//! Header `t,S,I,R`, one row per sample, LF endings. Numbers use the
//! shortest decimal form that parses back to the same `f64`.
//!
//! # SVG
//!
//! A standalone SVG 1.1 document built from `svg`, `g`, `rect`, `line`,
//! `polyline` and `text` only. Series colours follow a fixed palette whose
//! first three entries are the S, I and R colours.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::PathBuf;

use thiserror::Error;

use crate::campaign::{
    CampaignError, Scenario, SweepParameter, SweepRun, SweepSpec, Trajectory, DEFAULT_SAMPLES,
    DEFAULT_T_END,
};

/// A configuration problem, located by line and key where possible.
#[derive(Debug, Clone, PartialEq, Error)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub key: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(line) = self.line {
            write!(f, "line {line}: ")?;
        }
        if let Some(key) = &self.key {
            write!(f, "`{key}`: ")?;
        }
        f.write_str(&self.message)
    }
}

impl ConfigError {
    fn new(line: Option<usize>, key: Option<&str>, message: impl Into<String>) -> Self {
        Self {
            line,
            key: key.map(str::to_string),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IoError {
    #[error("chart needs at least one series")]
    EmptySeries,
    #[error("series `{0}` does not share the time axis of the first series")]
    MismatchedSeries(String),
    #[error("series `{0}` contains non-finite values")]
    NonFinite(String),
}

pub const REQUIRED_KEYS: [&str; 5] = ["beta", "gamma", "s0", "i0", "r0"];
pub const KNOWN_KEYS: [&str; 11] = [
    "beta",
    "gamma",
    "s0",
    "i0",
    "r0",
    "t_end",
    "n_samples",
    "sweep_param",
    "sweep_values",
    "out_csv",
    "out_svg",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

/// A validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub beta: f64,
    pub gamma: f64,
    pub s0: f64,
    pub i0: f64,
    pub r0: f64,
    pub t_end: f64,
    pub n_samples: usize,
    pub sweep: Option<SweepConfig>,
    pub out_csv: Option<PathBuf>,
    pub out_svg: Option<PathBuf>,
}

impl RunConfig {
    pub fn population(&self) -> f64 {
        self.s0 + self.i0 + self.r0
    }

    pub fn scenario(&self, label: &str) -> Result<Scenario, CampaignError> {
        Scenario::from_values(
            label,
            self.beta,
            self.gamma,
            self.s0,
            self.i0,
            self.r0,
            self.t_end,
            self.n_samples,
        )
    }

    pub fn sweep_spec(&self, label: &str) -> Option<Result<SweepSpec, CampaignError>> {
        let sweep = self.sweep.as_ref()?;
        Some(
            self.scenario(label)
                .and_then(|base| SweepSpec::new(base, sweep.parameter, sweep.values.clone())),
        )
    }

    /// Canonical text form; `parse_config` recovers the same value.
    pub fn to_config_text(&self) -> String {
        let mut out = String::new();
        for (key, value) in [
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("s0", self.s0),
            ("i0", self.i0),
            ("r0", self.r0),
            ("t_end", self.t_end),
        ] {
            let _ = writeln!(out, "{key} = {value}");
        }
        let _ = writeln!(out, "n_samples = {}", self.n_samples);
        if let Some(sweep) = &self.sweep {
            let _ = writeln!(out, "sweep_param = {}", sweep.parameter.name());
            let values: Vec<String> = sweep.values.iter().map(f64::to_string).collect();
            let _ = writeln!(out, "sweep_values = {}", values.join(","));
        }
        if let Some(p) = &self.out_csv {
            let _ = writeln!(out, "out_csv = {}", p.display());
        }
        if let Some(p) = &self.out_svg {
            let _ = writeln!(out, "out_svg = {}", p.display());
        }
        out
    }
}

/// Configuration assembled from one or more sources before validation.
/// Later [`set`](Self::set) calls override earlier ones, which is how
/// command-line flags take precedence over a config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PartialConfig {
    values: BTreeMap<&'static str, (String, Option<usize>)>,
}

impl PartialConfig {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, key: &str, value: &str, line: Option<usize>) -> Result<(), ConfigError> {
        let known = KNOWN_KEYS
            .iter()
            .find(|k| **k == key)
            .ok_or_else(|| ConfigError::new(line, Some(key), "unknown key"))?;
        self.values.insert(known, (value.to_string(), line));
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| ConfigError::new(Some(line_no), None, "expected `key = value`"))?;
            let key = key.trim();
            if cfg.values.contains_key(key) {
                return Err(ConfigError::new(Some(line_no), Some(key), "duplicate key"));
            }
            cfg.set(key, value.trim(), Some(line_no))?;
        }
        Ok(cfg)
    }

    /// Overlays every entry of `other` onto `self`.
    pub fn merge(&mut self, other: PartialConfig) {
        self.values.extend(other.values);
    }

    fn number(&self, key: &'static str) -> Result<Option<f64>, ConfigError> {
        let Some((raw, line)) = self.values.get(key) else {
            return Ok(None);
        };
        let v: f64 = raw.parse().map_err(|_| {
            ConfigError::new(
                *line,
                Some(key),
                format!("cannot parse `{raw}` as a number"),
            )
        })?;
        if !v.is_finite() {
            return Err(ConfigError::new(*line, Some(key), "value must be finite"));
        }
        Ok(Some(v))
    }

    fn line_of(&self, key: &str) -> Option<usize> {
        self.values.get(key).and_then(|(_, l)| *l)
    }

    fn path(&self, key: &'static str) -> Result<Option<PathBuf>, ConfigError> {
        match self.values.get(key) {
            None => Ok(None),
            Some((raw, line)) if raw.is_empty() => {
                Err(ConfigError::new(*line, Some(key), "path must not be empty"))
            }
            Some((raw, _)) => Ok(Some(PathBuf::from(raw))),
        }
    }

    pub fn validate(&self) -> Result<RunConfig, ConfigError> {
        let missing: Vec<&str> = REQUIRED_KEYS
            .iter()
            .copied()
            .filter(|k| !self.values.contains_key(k))
            .collect();
        if !missing.is_empty() {
            return Err(ConfigError::new(
                None,
                None,
                format!("missing required keys: {}", missing.join(", ")),
            ));
        }

        let non_negative = |key: &'static str| -> Result<f64, ConfigError> {
            let v = self.number(key)?.expect("required key present");
            if v < 0.0 {
                return Err(ConfigError::new(
                    self.line_of(key),
                    Some(key),
                    "must be non-negative",
                ));
            }
            Ok(v)
        };
        let beta = non_negative("beta")?;
        let gamma = non_negative("gamma")?;
        let s0 = non_negative("s0")?;
        let i0 = non_negative("i0")?;
        let r0 = non_negative("r0")?;
        let n = s0 + i0 + r0;
        if !(n > 0.0) {
            return Err(ConfigError::new(
                self.line_of("s0"),
                Some("s0"),
                "s0 + i0 + r0 must be positive",
            ));
        }

        let t_end = self.number("t_end")?.unwrap_or(DEFAULT_T_END);
        if !(t_end > 0.0) {
            return Err(ConfigError::new(
                self.line_of("t_end"),
                Some("t_end"),
                "must be positive",
            ));
        }
        let n_samples = match self.values.get("n_samples") {
            None => DEFAULT_SAMPLES,
            Some((raw, line)) => {
                let v: usize = raw.parse().map_err(|_| {
                    ConfigError::new(
                        *line,
                        Some("n_samples"),
                        format!("cannot parse `{raw}` as an integer"),
                    )
                })?;
                if v < 2 {
                    return Err(ConfigError::new(
                        *line,
                        Some("n_samples"),
                        "must be at least 2",
                    ));
                }
                v
            }
        };

        let sweep = match (
            self.values.get("sweep_param"),
            self.values.get("sweep_values"),
        ) {
            (None, None) => None,
            (Some(_), None) => {
                return Err(ConfigError::new(
                    self.line_of("sweep_param"),
                    Some("sweep_values"),
                    "sweep_param given without sweep_values",
                ))
            }
            (None, Some(_)) => {
                return Err(ConfigError::new(
                    self.line_of("sweep_values"),
                    Some("sweep_param"),
                    "sweep_values given without sweep_param",
                ))
            }
            (Some((name, pline)), Some((list, vline))) => {
                let parameter = SweepParameter::parse(name).ok_or_else(|| {
                    ConfigError::new(
                        *pline,
                        Some("sweep_param"),
                        format!("unknown sweep parameter `{name}`"),
                    )
                })?;
                let values = list
                    .split(',')
                    .map(|v| {
                        let v = v.trim();
                        v.parse::<f64>()
                            .ok()
                            .filter(|x| x.is_finite())
                            .ok_or_else(|| {
                                ConfigError::new(
                                    *vline,
                                    Some("sweep_values"),
                                    format!("cannot parse `{v}` as a number"),
                                )
                            })
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let bad = match parameter {
                    SweepParameter::Seed => values.iter().find(|v| !(0.0..=n).contains(*v)),
                    _ => values.iter().find(|v| **v < 0.0),
                };
                if let Some(v) = bad {
                    return Err(ConfigError::new(
                        *vline,
                        Some("sweep_values"),
                        format!("value {v} out of range for {}", parameter.name()),
                    ));
                }
                Some(SweepConfig { parameter, values })
            }
        };

        Ok(RunConfig {
            beta,
            gamma,
            s0,
            i0,
            r0,
            t_end,
            n_samples,
            sweep,
            out_csv: self.path("out_csv")?,
            out_svg: self.path("out_svg")?,
        })
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    PartialConfig::parse(text)?.validate()
}

pub fn write_csv(traj: &Trajectory) -> String {
    let mut out = String::with_capacity(traj.len() * 48);
    out.push_str("t,S,I,R\n");
    for k in 0..traj.len() {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            traj.times[k], traj.s[k], traj.i[k], traj.r[k]
        );
    }
    out
}

/// Per-value metrics of a sweep, one row per value in sweep order. Failed
/// runs keep their row with empty metric fields and the error message.
pub fn write_metrics_csv(runs: &[SweepRun], parameter: SweepParameter) -> String {
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut out = format!(
        "{},r0,classification,peak_sharers,t_peak,cumulative_reach,reach_fraction,depletion_time,half_reach_time,error\n",
        parameter.name()
    );
    for run in runs {
        match &run.outcome {
            Ok((_, m)) => {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},",
                    run.value,
                    opt(m.r0),
                    m.classification.map(|c| c.as_str()).unwrap_or(""),
                    m.peak_sharers,
                    m.t_peak,
                    m.cumulative_reach,
                    m.reach_fraction,
                    opt(m.depletion_time),
                    opt(m.half_reach_time),
                );
            }
            Err(e) => {
                let msg = e.to_string().replace([',', '\n'], ";");
                let _ = writeln!(out, "{},,,,,,,,,{msg}", run.value);
            }
        }
    }
    out
}

/// One labelled curve of a chart.
#[derive(Debug, Clone, Copy)]
pub struct Series<'a> {
    pub label: &'a str,
    pub times: &'a [f64],
    pub values: &'a [f64],
}

/// S, I, R, then extra colours for sweeps with more curves.
pub const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 140.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 52.0;

pub fn trajectory_series(traj: &Trajectory) -> [Series<'_>; 3] {
    [
        Series {
            label: "S",
            times: &traj.times,
            values: &traj.s,
        },
        Series {
            label: "I",
            times: &traj.times,
            values: &traj.i,
        },
        Series {
            label: "R",
            times: &traj.times,
            values: &traj.r,
        },
    ]
}

pub fn write_svg_chart(series: &[Series<'_>], title: &str) -> Result<String, IoError> {
    let first = series.first().ok_or(IoError::EmptySeries)?;
    for s in series {
        if s.times != first.times || s.values.len() != first.times.len() || s.times.is_empty() {
            return Err(IoError::MismatchedSeries(s.label.to_string()));
        }
        if s.values.iter().chain(s.times).any(|v| !v.is_finite()) {
            return Err(IoError::NonFinite(s.label.to_string()));
        }
    }

    let (mut x_lo, mut x_hi) = extent(first.times.iter().copied());
    if x_hi == x_lo {
        x_lo -= 0.5;
        x_hi += 0.5;
    }
    let (y_min, y_max) = extent(series.iter().flat_map(|s| s.values.iter().copied()));
    let span = y_max - y_min;
    let pad = if span > 0.0 {
        0.05 * span
    } else if y_max != 0.0 {
        0.05 * y_max.abs()
    } else {
        0.5
    };
    let (y_lo, y_hi) = (y_min - pad, y_max + pad);

    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let px = |x: f64| MARGIN_LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w;
    let py = |y: f64| MARGIN_TOP + (y_hi - y) / (y_hi - y_lo) * plot_h;
    let x_axis_y = MARGIN_TOP + plot_h;

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(
        svg,
        r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="24" font-family="sans-serif" font-size="15" text-anchor="middle">{}</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        escape(title)
    );

    svg.push_str("<g class=\"axes\" stroke=\"black\" stroke-width=\"1\" font-family=\"sans-serif\" font-size=\"11\">\n");
    let _ = writeln!(
        svg,
        r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}"/>"#,
        MARGIN_LEFT,
        x_axis_y,
        MARGIN_LEFT + plot_w,
        x_axis_y
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}"/>"#,
        MARGIN_LEFT, MARGIN_TOP, MARGIN_LEFT, x_axis_y
    );
    for (tick, label) in ticks(x_lo, x_hi) {
        let x = px(tick);
        let _ = writeln!(
            svg,
            r#"<line x1="{x:.2}" y1="{x_axis_y:.2}" x2="{x:.2}" y2="{:.2}"/>"#,
            x_axis_y + 5.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{x:.2}" y="{:.2}" stroke="none" text-anchor="middle">{label}</text>"#,
            x_axis_y + 18.0
        );
    }
    for (tick, label) in ticks(y_lo, y_hi) {
        let y = py(tick);
        let _ = writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{MARGIN_LEFT:.2}" y2="{y:.2}"/>"#,
            MARGIN_LEFT - 5.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" stroke="none" text-anchor="end">{label}</text>"#,
            MARGIN_LEFT - 8.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" stroke="none" text-anchor="middle">time (dimensionless)</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{:.2}" stroke="none" text-anchor="middle" transform="rotate(-90 16 {:.2})">individuals</text>"#,
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0
    );
    svg.push_str("</g>\n");

    svg.push_str("<g class=\"series\" fill=\"none\" stroke-width=\"2\">\n");
    for (k, s) in series.iter().enumerate() {
        let points: Vec<String> = s
            .times
            .iter()
            .zip(s.values)
            .map(|(&t, &v)| format!("{:.2},{:.2}", px(t), py(v)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline stroke="{}" points="{}"/>"#,
            PALETTE[k % PALETTE.len()],
            points.join(" ")
        );
    }
    svg.push_str("</g>\n");

    svg.push_str("<g class=\"legend\" font-family=\"sans-serif\" font-size=\"12\">\n");
    let legend_x = WIDTH - MARGIN_RIGHT + 16.0;
    for (k, s) in series.iter().enumerate() {
        let y = MARGIN_TOP + 12.0 + 20.0 * k as f64;
        let _ = writeln!(
            svg,
            r#"<g class="legend-entry"><line x1="{legend_x:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{}" stroke-width="3"/><text x="{:.2}" y="{:.2}">{}</text></g>"#,
            legend_x + 22.0,
            PALETTE[k % PALETTE.len()],
            legend_x + 28.0,
            y + 4.0,
            escape(s.label)
        );
    }
    svg.push_str("</g>\n</svg>\n");
    Ok(svg)
}

pub fn trajectory_svg(traj: &Trajectory, title: &str) -> String {
    write_svg_chart(&trajectory_series(traj), title).expect("trajectory series are well-formed")
}

fn extent(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    })
}

/// Ticks on a 1-2-5 ladder inside `[lo, hi]`, with labels.
fn ticks(lo: f64, hi: f64) -> Vec<(f64, String)> {
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last)
        .map(|k| {
            let v = k as f64 * step;
            // 0.0 + x turns -0 into 0 for labels
            (v, format!("{:.*}", decimals, v + 0.0))
        })
        .collect()
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            _ => out.push(c),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::campaign::run_scenario;
    use crate::integrator::StepControl;

    const BASELINE: &str = "beta = 0.25\ngamma = 0.1\ns0 = 900\ni0 = 100\nr0 = 0";

    #[test]
    fn parses_baseline() {
        let cfg = parse_config(BASELINE).unwrap();
        assert_eq!((cfg.beta, cfg.gamma), (0.25, 0.1));
        assert_eq!((cfg.s0, cfg.i0, cfg.r0), (900.0, 100.0, 0.0));
        assert_eq!((cfg.t_end, cfg.n_samples), (100.0, 1001));
        assert_eq!(cfg.sweep, None);
        assert_eq!(cfg.population(), 1000.0);
    }

    #[test]
    fn comments_and_blank_lines() {
        let text = "# campaign\n\nbeta = 0.5 # strong\ngamma=0.1\ns0 = 990\ni0 = 10\nr0 = 0\nsweep_param = seed\nsweep_values = 1, 10,100\n";
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.beta, 0.5);
        let sweep = cfg.sweep.unwrap();
        assert_eq!(sweep.parameter, SweepParameter::Seed);
        assert_eq!(sweep.values, vec![1.0, 10.0, 100.0]);
    }

    #[test]
    fn empty_text_lists_required_keys() {
        let err = parse_config("").unwrap_err();
        for key in REQUIRED_KEYS {
            assert!(err.message.contains(key), "{err}");
        }
    }

    #[test]
    fn negative_beta_names_key_and_line() {
        let err = parse_config("beta = -1\ngamma = 0.1\ns0 = 900\ni0 = 100\nr0 = 0").unwrap_err();
        assert_eq!(err.key.as_deref(), Some("beta"));
        assert_eq!(err.line, Some(1));
        assert!(err.to_string().contains("beta"));
    }

    #[test]
    fn unknown_and_malformed_lines() {
        let err = parse_config("beta = 0.2\ndelta = 3").unwrap_err();
        assert_eq!((err.line, err.key.as_deref()), (Some(2), Some("delta")));
        let err = parse_config("beta 0.2").unwrap_err();
        assert_eq!(err.line, Some(1));
        let err = parse_config("beta = abc\ngamma = 0.1\ns0 = 900\ni0 = 100\nr0 = 0").unwrap_err();
        assert!(err.message.contains("abc"));
        let err = parse_config(&format!("{BASELINE}\nbeta = 0.3")).unwrap_err();
        assert!(err.message.contains("duplicate"));
        let err = parse_config(&format!("{BASELINE}\nn_samples = 1")).unwrap_err();
        assert_eq!(err.key.as_deref(), Some("n_samples"));
        let err = parse_config(&format!(
            "{BASELINE}\nsweep_param = seed\nsweep_values = 5000"
        ))
        .unwrap_err();
        assert_eq!(err.key.as_deref(), Some("sweep_values"));
        let err = parse_config(&format!("{BASELINE}\nsweep_param = beta")).unwrap_err();
        assert_eq!(err.key.as_deref(), Some("sweep_values"));
    }

    #[test]
    fn later_sources_override_earlier() {
        let mut cfg = PartialConfig::parse(BASELINE).unwrap();
        let mut flags = PartialConfig::new();
        flags.set("beta", "0.7", None).unwrap();
        cfg.merge(flags);
        assert_eq!(cfg.validate().unwrap().beta, 0.7);
    }

    fn small_run(i0: f64) -> Trajectory {
        let scn = Scenario::from_values("t", 0.25, 0.1, 1000.0 - i0, i0, 0.0, 10.0, 11).unwrap();
        run_scenario(&scn, &StepControl::default()).unwrap()
    }

    #[test]
    fn csv_layout() {
        let csv = write_csv(&small_run(100.0));
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "t,S,I,R");
        assert_eq!(lines[1], "0,900,100,0");
        assert_eq!(lines.len(), 12);
        assert!(!csv.contains('\r'));
        let constant = write_csv(&small_run(0.0));
        for (k, line) in constant.lines().skip(1).enumerate() {
            assert_eq!(line, format!("{k},1000,0,0"));
        }
    }

    #[test]
    fn svg_rejects_bad_series() {
        assert_eq!(write_svg_chart(&[], "x"), Err(IoError::EmptySeries));
        let t = [0.0, 1.0];
        let bad = [0.0, f64::NAN];
        let s = [Series {
            label: "a",
            times: &t,
            values: &bad,
        }];
        assert!(matches!(
            write_svg_chart(&s, "x"),
            Err(IoError::NonFinite(_))
        ));
        let short = [0.0];
        let s = [
            Series {
                label: "a",
                times: &t,
                values: &t,
            },
            Series {
                label: "b",
                times: &t,
                values: &short,
            },
        ];
        assert!(matches!(
            write_svg_chart(&s, "x"),
            Err(IoError::MismatchedSeries(_))
        ));
    }

    #[test]
    fn ticks_follow_ladder() {
        let t = ticks(0.0, 100.0);
        assert_eq!(t.first().unwrap().1, "0");
        assert_eq!(t.last().unwrap().1, "100");
        assert_eq!(t.len(), 6);
        let t = ticks(-0.05, 1.05);
        assert_eq!(t[0].1, "0.0");
    }

    #[test]
    fn title_is_escaped() {
        let t = [0.0, 1.0];
        let svg = write_svg_chart(
            &[Series {
                label: "S<1>",
                times: &t,
                values: &t,
            }],
            "a & b",
        )
        .unwrap();
        assert!(svg.contains("a &amp; b"));
        assert!(svg.contains("S&lt;1&gt;"));
    }
}
