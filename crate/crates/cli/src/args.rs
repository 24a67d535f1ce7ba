use std::io::Read;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{Command, ExperimentConfig, ModelSpec, OutputSpec, RegionSpec, Tolerances};
use crate::error::CliError;

/// Topological entanglement entropy, irreducible correlations and Markov
/// merges for small quantum states.
#[derive(Debug, Parser)]
#[command(name = "topocorr", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Topological entanglement entropy of a tripartition.
    Tee(RunArgs),
    /// Irreducible three-party correlation and the TEE next to it.
    Irrcorr(RunArgs),
    /// Markov test and block decomposition of A-B-C.
    Markov(RunArgs),
    /// Maximum-entropy merge of the two-party marginals.
    Merge(RunArgs),
    /// Secret-sharing rate of the twirled state.
    SecretRate(RunArgs),
    /// Approximate-Markov bracket under increasing depolarizing noise.
    ApproxSweep(RunArgs),
    /// Run a JSON experiment config.
    Run {
        /// Config file, or `-` for stdin.
        #[arg(long)]
        config: String,
        /// Overrides the output directory of the config.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModelKind {
    Toric,
    File,
    #[value(alias = "ghz")]
    Ghz3,
    W,
    Bell,
    Product,
    RandomQms,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long, value_enum)]
    model: ModelKind,
    /// Torus width; defaults to the mask's.
    #[arg(long = "Lx")]
    lx: Option<usize>,
    /// Torus height; defaults to the mask's.
    #[arg(long = "Ly")]
    ly: Option<usize>,
    /// Mask file or bundled mask name (kp-disk, kp-annulus, lw-annulus, far-separated).
    #[arg(long)]
    mask: Option<String>,
    /// State file for `--model file`.
    #[arg(long)]
    path: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Region labels, comma separated. Toric regions take qubit indices.
    #[arg(long, value_delimiter = ',')]
    a: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    b: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    b1: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    b2: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    c: Vec<String>,
    /// Marginal trace-distance target of the iterative solver.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Floor for logarithms of singular marginals.
    #[arg(long)]
    eps: Option<f64>,
    /// Initial damping of the iterative solver.
    #[arg(long)]
    step: Option<f64>,
    /// Start the iterative solver from a seeded random point.
    #[arg(long)]
    random_start: bool,
    /// Depolarizing strengths for approx-sweep, comma separated.
    #[arg(long = "p", value_delimiter = ',')]
    sweep: Vec<f64>,
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory; falls back to TOPOCORR_OUT_DIR, then `.`.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Output file stem; the command name by default.
    #[arg(long)]
    stem: Option<String>,
    /// Also write a CSV table where the command has one.
    #[arg(long)]
    csv: bool,
    /// Also write an SVG plot where the command has one.
    #[arg(long)]
    svg: bool,
    /// Print the equivalent config and exit.
    #[arg(long)]
    print_config: bool,
}

fn required<T>(v: Option<T>, flag: &str, model: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Config(format!("--model {model} needs {flag}")))
}

impl RunArgs {
    pub fn print_config(&self) -> bool {
        self.print_config
    }

    pub fn into_config(self, command: Command) -> Result<ExperimentConfig, CliError> {
        let model = match self.model {
            ModelKind::Toric => {
                ModelSpec::Toric { lx: self.lx, ly: self.ly, mask: required(self.mask, "--mask", "toric")? }
            }
            ModelKind::File => ModelSpec::File { path: required(self.path, "--path", "file")? },
            ModelKind::Ghz3 => ModelSpec::Ghz3,
            ModelKind::W => ModelSpec::W,
            ModelKind::Bell => ModelSpec::Bell,
            ModelKind::Product => ModelSpec::Product,
            ModelKind::RandomQms => ModelSpec::RandomQms { shape: None },
        };
        if !matches!(self.model, ModelKind::Toric) && (self.lx.is_some() || self.ly.is_some()) {
            return Err(CliError::Config("--Lx and --Ly only apply to --model toric".into()));
        }
        let given = [&self.a, &self.b, &self.b1, &self.b2, &self.c].iter().any(|v| !v.is_empty());
        let regions = given.then_some(RegionSpec { a: self.a, b: self.b, b1: self.b1, b2: self.b2, c: self.c });
        let d = Tolerances::default();
        let tolerances = Tolerances {
            tol: self.tol.unwrap_or(d.tol),
            max_iter: self.max_iter.unwrap_or(d.max_iter),
            eps: self.eps.unwrap_or(d.eps),
            step: self.step.unwrap_or(d.step),
            random_start: self.random_start,
        };
        let cfg = ExperimentConfig {
            command,
            model,
            regions,
            seed: self.seed,
            tolerances,
            sweep: (!self.sweep.is_empty()).then_some(self.sweep),
            threads: self.threads,
            output: OutputSpec { dir: self.out_dir, stem: self.stem, csv: self.csv, svg: self.svg },
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Read a config from a file, or from stdin for `-`.
pub fn read_config(source: &str) -> Result<ExperimentConfig, CliError> {
    let text = if source == "-" {
        let mut s = String::new();
        std::io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| CliError::Config(format!("cannot read config from stdin: {e}")))?;
        s
    } else {
        std::fs::read_to_string(source).map_err(|e| CliError::Config(format!("cannot read config {source}: {e}")))?
    };
    ExperimentConfig::from_json(&text)
}
