use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use topocorr::maxent::SolverOptions;
use topocorr::models::ChainShape;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Tee,
    Irrcorr,
    Markov,
    Merge,
    SecretRate,
    ApproxSweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Tee => "tee",
            Command::Irrcorr => "irrcorr",
            Command::Markov => "markov",
            Command::Merge => "merge",
            Command::SecretRate => "secret-rate",
            Command::ApproxSweep => "approx-sweep",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelSpec {
    /// Reduced state of the toric-code ground state on the mask support.
    /// `Lx`, `Ly` default to the mask's lattice and must match it when given.
    Toric {
        #[serde(rename = "Lx", default, skip_serializing_if = "Option::is_none")]
        lx: Option<usize>,
        #[serde(rename = "Ly", default, skip_serializing_if = "Option::is_none")]
        ly: Option<usize>,
        /// A mask file, or the name of a bundled mask.
        mask: String,
    },
    /// Density matrix in the library's JSON format.
    File {
        path: PathBuf,
    },
    Ghz3,
    W,
    Bell,
    Product,
    RandomQms {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        shape: Option<ChainShape>,
    },
}

/// Explicit subsystem labels. Either `b` or the pair `b1`, `b2` is given.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSpec {
    pub a: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub b: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub b1: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub b2: Vec<String>,
    pub c: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub tol: f64,
    pub max_iter: usize,
    pub eps: f64,
    pub step: f64,
    /// Start the iterative solver from random local terms drawn from the seed.
    pub random_start: bool,
}

impl Default for Tolerances {
    fn default() -> Self {
        let d = SolverOptions::default();
        Self { tol: d.tol, max_iter: d.max_iter, eps: d.eps, step: d.step, random_start: false }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    /// Falls back to `TOPOCORR_OUT_DIR`, then to the working directory.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    /// File stem; the command name by default.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stem: Option<String>,
    pub csv: bool,
    pub svg: bool,
}

pub const DEFAULT_SWEEP: [f64; 4] = [0.0, 1e-4, 1e-3, 1e-2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    pub model: ModelSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regions: Option<RegionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Depolarizing strengths for `approx-sweep`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Vec<f64>>,
    /// Worker threads for sweeps; all cores by default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default)]
    pub output: OutputSpec,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reject configs that cannot run before any work is done.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.needs_seed() && self.seed.is_none() {
            return Err(CliError::Config(format!(
                "`{}` on this model draws random numbers; pass a seed",
                self.command.name()
            )));
        }
        let t = &self.tolerances;
        if !(t.tol > 0.0 && t.eps > 0.0 && t.step > 0.0 && t.step <= 1.0 && t.max_iter > 0) {
            return Err(CliError::Config("tolerances must be positive and step at most 1".into()));
        }
        if let Some(ps) = &self.sweep {
            if ps.is_empty() || ps.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(CliError::Config("sweep strengths must lie in [0, 1]".into()));
            }
            if self.command != Command::ApproxSweep {
                return Err(CliError::Config("`sweep` only applies to approx-sweep".into()));
            }
        }
        if self.threads == Some(0) {
            return Err(CliError::Config("threads must be positive".into()));
        }
        if let Some(r) = &self.regions {
            if r.a.is_empty() || r.c.is_empty() {
                return Err(CliError::Config("regions `a` and `c` must be nonempty".into()));
            }
            let split = !r.b1.is_empty() || !r.b2.is_empty();
            if split == !r.b.is_empty() || (split && (r.b1.is_empty() || r.b2.is_empty())) {
                return Err(CliError::Config("give either `b` or both `b1` and `b2`".into()));
            }
        }
        if let Some(stem) = &self.output.stem {
            if stem.is_empty() || stem.contains(['/', '\\', ',']) {
                return Err(CliError::Config(format!("invalid output stem `{stem}`")));
            }
        }
        Ok(())
    }

    /// Whether any step of this run consumes randomness. Ring splits also
    /// do; they are only known once the model is loaded.
    pub fn needs_seed(&self) -> bool {
        matches!(self.model, ModelSpec::RandomQms { .. })
            || matches!(self.command, Command::Markov | Command::SecretRate)
            || (self.tolerances.random_start && self.command != Command::Tee)
    }

    pub fn solver_options(&self) -> SolverOptions {
        let t = &self.tolerances;
        SolverOptions {
            tol: t.tol,
            max_iter: t.max_iter,
            eps: t.eps,
            step: t.step,
            seed: if t.random_start { self.seed } else { None },
        }
    }

    pub fn sweep_points(&self) -> Vec<f64> {
        self.sweep.clone().unwrap_or_else(|| DEFAULT_SWEEP.to_vec())
    }

    /// SHA-256 of the compact JSON form, with the output section removed so
    /// that moving the output does not change the hash.
    pub fn hash(&self) -> String {
        let mut copy = self.clone();
        copy.output = OutputSpec::default();
        let text = serde_json::to_string(&copy).expect("config serializes");
        Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}
