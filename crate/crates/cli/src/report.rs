//! Report envelope and file writers.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use topocorr::approx::{SweepPoint, BOUND_SLACK, RESIDUAL_FLOOR};
use topocorr::linalg::EIG_CUTOFF;
use topocorr::markov::QMS_TOL;
use topocorr::maxent::{ASSUMPTION_TOL, MARGINAL_MATCH_TOL};
use topocorr::secret::RATE_REL_TOL;

use crate::config::{ExperimentConfig, OutputSpec, Tolerances};
use crate::error::CliError;

pub const OUT_DIR_ENV: &str = "TOPOCORR_OUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Ok,
    AssumptionViolated,
}

/// Solver settings from the config plus the fixed thresholds of the library.
#[derive(Debug, Clone, Serialize)]
pub struct ToleranceSet {
    pub solver: Tolerances,
    pub assumption: f64,
    pub markov: f64,
    pub marginal_match: f64,
    pub eigenvalue_grouping: f64,
    pub bound_slack: f64,
    pub residual_floor: f64,
    pub eigenvalue_cutoff: f64,
}

impl ToleranceSet {
    pub fn new(solver: Tolerances) -> Self {
        Self {
            solver,
            assumption: ASSUMPTION_TOL,
            markov: QMS_TOL,
            marginal_match: MARGINAL_MATCH_TOL,
            eigenvalue_grouping: RATE_REL_TOL,
            bound_slack: BOUND_SLACK,
            residual_floor: RESIDUAL_FLOOR,
            eigenvalue_cutoff: EIG_CUTOFF,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config_hash: String,
    /// The config as run, without its output section.
    pub config: ExperimentConfig,
    pub tolerances: ToleranceSet,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    pub result: Value,
}

impl Report {
    pub fn new(cfg: &ExperimentConfig, status: Status, message: Option<String>, result: Value) -> Self {
        let mut config = cfg.clone();
        config.output = OutputSpec::default();
        Self {
            tool: "topocorr",
            version: env!("CARGO_PKG_VERSION"),
            command: cfg.command.name(),
            config_hash: cfg.hash(),
            config,
            tolerances: ToleranceSet::new(cfg.tolerances),
            status,
            message,
            result,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Tabular rows attached to a report.
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

pub fn out_dir(spec: &OutputSpec) -> PathBuf {
    spec.dir
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn write(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|source| CliError::Output { path: path.display().to_string(), source })
}

pub struct Writer {
    dir: PathBuf,
    stem: String,
    pub written: Vec<PathBuf>,
}

impl Writer {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self, CliError> {
        let dir = out_dir(&cfg.output);
        std::fs::create_dir_all(&dir).map_err(|source| CliError::Output { path: dir.display().to_string(), source })?;
        let stem = cfg.output.stem.clone().unwrap_or_else(|| cfg.command.name().to_string());
        Ok(Self { dir, stem, written: Vec::new() })
    }

    pub fn put(&mut self, suffix: &str, contents: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(format!("{}{suffix}", self.stem));
        write(&path, contents)?;
        self.written.push(path);
        Ok(())
    }

    pub fn table(&mut self, table: &Table) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| CliError::Output { path: format!("{}.csv", self.stem), source: e.into() };
        w.write_record(&table.header).map_err(io)?;
        for row in &table.rows {
            w.write_record(row).map_err(io)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| CliError::Output { path: format!("{}.csv", self.stem), source: e.into_error() })?;
        self.put(".csv", &bytes)
    }
}

pub fn sweep_table(points: &[SweepPoint]) -> Table {
    let header = [
        "p",
        "epsilon_bits",
        "delta",
        "delta_achieved",
        "f_delta",
        "c_hat",
        "cmi",
        "lower_margin",
        "upper_margin",
        "holds",
    ];
    let rows = points
        .iter()
        .map(|pt| {
            let r = &pt.report;
            let mut row: Vec<String> = [
                pt.p,
                r.params.epsilon,
                r.params.delta,
                r.delta_achieved.value,
                r.params.f_delta,
                r.c_hat,
                r.cmi,
                r.lower_margin,
                r.upper_margin,
            ]
            .iter()
            .map(|v| format!("{v:.12e}"))
            .collect();
            row.push((r.holds() && r.delta_achieved.holds).to_string());
            row
        })
        .collect();
    Table { header: header.iter().map(|s| s.to_string()).collect(), rows }
}

/// Line chart of the allowed and reached marginal distance against the
/// depolarizing strength. Points are evenly spaced and labelled by `p`.
pub fn sweep_svg(points: &[SweepPoint]) -> String {
    const W: f64 = 480.0;
    const H: f64 = 320.0;
    const PAD: f64 = 56.0;
    let series: [(&str, &str, Vec<f64>); 2] = [
        ("delta", "#1f77b4", points.iter().map(|p| p.report.params.delta).collect()),
        ("delta achieved", "#d62728", points.iter().map(|p| p.report.delta_achieved.value).collect()),
    ];
    let top = series.iter().flat_map(|s| s.2.iter().copied()).fold(0.0, f64::max);
    let top = if top > RESIDUAL_FLOOR { top * 1.1 } else { 1.0 };
    let n = points.len().max(2) - 1;
    let x = |i: usize| PAD + (W - 2.0 * PAD) * i as f64 / n as f64;
    let y = |v: f64| H - PAD - (H - 2.0 * PAD) * v / top;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<path d="M{PAD} {PAD} V{b} H{r}" fill="none" stroke="black"/>"#, b = H - PAD, r = W - PAD);
    for k in 0..=4 {
        let v = top * k as f64 / 4.0;
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{v:.2e}</text>"#, PAD - 4.0, y(v) + 4.0);
    }
    for (i, pt) in points.iter().enumerate() {
        let _ =
            writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{:e}</text>"#, x(i), H - PAD + 16.0, pt.p);
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">depolarizing strength p</text>"#,
        W / 2.0,
        H - 12.0
    );
    for (k, (name, colour, vals)) in series.iter().enumerate() {
        let path: Vec<String> = vals.iter().enumerate().map(|(i, &v)| format!("{:.2},{:.2}", x(i), y(v))).collect();
        let _ =
            writeln!(s, r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="2"/>"#, path.join(" "));
        let ly = PAD - 24.0 + 14.0 * k as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{a:.1}" y1="{ly:.1}" x2="{b:.1}" y2="{ly:.1}" stroke="{colour}" stroke-width="2"/>"#,
            a = W - PAD - 120.0,
            b = W - PAD - 100.0
        );
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}">{name}</text>"#, W - PAD - 94.0, ly + 4.0);
    }
    s.push_str("</svg>\n");
    s
}
