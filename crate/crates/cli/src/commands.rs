use std::collections::BTreeMap;
use std::f64::consts::LN_2;
use std::path::PathBuf;

use serde_json::{json, Value};
use topocorr::approx::depolarizing_sweep;
use topocorr::entropy::{entropy_of, von_neumann_entropy};
use topocorr::markov::{is_qms, markov_decompose, QMS_TOL};
use topocorr::maxent::{
    iterative_maxent, merge_annulus, merge_ring, tee_dense, MarginalConstraintSet, Regions, Residual,
};
use topocorr::secret::rate_report;
use topocorr::stabilizer::tee_bits;
use topocorr::{io, DensityMatrix, Error};

use crate::config::{Command, ExperimentConfig};
use crate::error::{CliError, EXIT_ASSUMPTION, EXIT_OK};
use crate::model::{self, Loaded};
use crate::report::{sweep_svg, sweep_table, Report, Status, Table, Writer};

/// What a command produced before anything is written.
struct Outcome {
    status: Status,
    message: Option<String>,
    result: Value,
    table: Option<Table>,
    svg: Option<String>,
    state: Option<DensityMatrix>,
}

impl Outcome {
    fn ok(result: Value) -> Self {
        Self { status: Status::Ok, message: None, result, table: None, svg: None, state: None }
    }

    fn violated(err: &Error, result: Value) -> Self {
        Self { status: Status::AssumptionViolated, message: Some(err.to_string()), ..Self::ok(result) }
    }
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("result serializes")
}

/// Run one experiment and write its report. Returns the exit code and the
/// files written.
pub fn run(cfg: &ExperimentConfig) -> Result<(i32, Vec<PathBuf>), CliError> {
    cfg.validate()?;
    if let Some(n) = cfg.threads {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let loaded = model::load(cfg, cfg.command != Command::Tee)?;
    log::info!("running {} (config {})", cfg.command.name(), &cfg.hash()[..12]);
    let out = match cfg.command {
        Command::Tee => tee(&loaded)?,
        Command::Irrcorr => irrcorr(cfg, &loaded)?,
        Command::Markov => markov(cfg, &loaded)?,
        Command::Merge => merge(cfg, &loaded)?,
        Command::SecretRate => secret_rate(cfg, &loaded)?,
        Command::ApproxSweep => approx_sweep(cfg, &loaded)?,
    };

    let mut w = Writer::new(cfg)?;
    let report = Report::new(cfg, out.status, out.message, out.result);
    w.put(".json", report.to_json().as_bytes())?;
    if cfg.output.csv {
        match &out.table {
            Some(t) => w.table(t)?,
            None => log::warn!("{} has no tabular output; skipping csv", cfg.command.name()),
        }
    }
    if cfg.output.svg {
        match &out.svg {
            Some(s) => w.put(".svg", s.as_bytes())?,
            None => log::warn!("{} has no plot; skipping svg", cfg.command.name()),
        }
    }
    if let Some(state) = &out.state {
        w.put(".state.json", io::to_json(state)?.as_bytes())?;
    }
    let code = match report.status {
        Status::Ok => EXIT_OK,
        Status::AssumptionViolated => EXIT_ASSUMPTION,
    };
    Ok((code, w.written))
}

fn seed(cfg: &ExperimentConfig) -> u64 {
    cfg.seed.unwrap_or(0)
}

/// The input restricted to the three regions.
fn restricted(loaded: &Loaded) -> Result<(DensityMatrix, [Vec<String>; 3]), CliError> {
    let abc = loaded.regions.abc();
    let all: Vec<String> = abc.iter().flatten().cloned().collect();
    Ok((loaded.dense()?.partial_trace(&all)?, abc))
}

fn qubit_index(label: &str) -> Result<usize, CliError> {
    label
        .strip_prefix('q')
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| CliError::Config(format!("`{label}` is not a toric qubit label")))
}

fn tee(loaded: &Loaded) -> Result<Outcome, CliError> {
    let [a, b, c] = loaded.regions.abc();
    let unions: [(&str, Vec<&[String]>); 7] = [
        ("A", vec![&a]),
        ("B", vec![&b]),
        ("C", vec![&c]),
        ("AB", vec![&a, &b]),
        ("BC", vec![&b, &c]),
        ("CA", vec![&c, &a]),
        ("ABC", vec![&a, &b, &c]),
    ];
    if let Some(t) = &loaded.toric {
        let idx = |v: &[String]| v.iter().map(|l| qubit_index(l)).collect::<Result<Vec<_>, _>>();
        let (qa, qb, qc) = (idx(&a)?, idx(&b)?, idx(&c)?);
        let bits = tee_bits(&t.tableau, &qa, &qb, &qc)?;
        let mut entropies = BTreeMap::new();
        for (name, parts) in &unions {
            let mut region = Vec::new();
            for p in parts {
                region.extend(idx(p)?);
            }
            entropies.insert(*name, t.tableau.region_entropy_bits(&region)?);
        }
        return Ok(Outcome::ok(json!({
            "method": "stabilizer",
            "geometry": t.mask.geometry,
            "lattice": t.mask.lattice,
            "regions": { "A": qa, "B": qb, "C": qc },
            "entropies_bits": entropies,
            "gamma_bits": bits,
            "gamma": bits as f64 * LN_2,
        })));
    }
    let rho = loaded.dense()?;
    let mut entropies = BTreeMap::new();
    for (name, parts) in &unions {
        let labels: Vec<String> = parts.iter().flat_map(|p| p.iter().cloned()).collect();
        entropies.insert(*name, entropy_of(rho, &labels)?);
    }
    let e = |k: &str| entropies[k];
    let gamma = e("AB") + e("BC") + e("CA") - e("A") - e("B") - e("C") - e("ABC");
    Ok(Outcome::ok(json!({ "method": "dense", "entropies": entropies, "gamma": gamma })))
}

fn irrcorr(cfg: &ExperimentConfig, loaded: &Loaded) -> Result<Outcome, CliError> {
    let report = tee_dense(loaded.dense()?, &loaded.regions, &cfg.solver_options(), seed(cfg))?;
    let header: Vec<String> = topocorr::maxent::CSV_HEADER.split(',').map(String::from).collect();
    let row = report.csv_row(cfg.output.stem.as_deref().unwrap_or(cfg.command.name()));
    let mut out = Outcome::ok(to_value(&report));
    if let Some(r) = report.assumptions.iter().find(|r| !r.holds()) {
        // the value is still computed, by the iterative solver
        out.status = Status::AssumptionViolated;
        out.message = Some(format!("{} = {:.3e} exceeds {:.1e}; used {}", r.name, r.value, r.tol, report.method));
    }
    out.table = Some(Table { header, rows: vec![row.split(',').map(String::from).collect()] });
    Ok(out)
}

fn markov(cfg: &ExperimentConfig, loaded: &Loaded) -> Result<Outcome, CliError> {
    let (rho, [a, b, c]) = restricted(loaded)?;
    let check = is_qms(&rho, &a, &b, &c, QMS_TOL)?;
    let test = json!({ "is_qms": check.is_qms, "cmi": check.cmi, "saturation_gap": check.saturation_gap });
    match markov_decompose(&rho, &a, &b, &c, seed(cfg)) {
        Ok(dec) => {
            let decomposition: Value = serde_json::from_str(&dec.to_json()?).expect("decomposition json");
            Ok(Outcome::ok(json!({
                "test": test,
                "block_dims": dec.block_dims(),
                "probabilities": dec.probabilities(),
                "decomposition": decomposition,
            })))
        }
        Err(e @ Error::NotMarkov { .. }) => Ok(Outcome::violated(&e, json!({ "test": test }))),
        Err(e) => Err(e.into()),
    }
}

fn assumptions(rho: &DensityMatrix, regions: &Regions) -> Result<Vec<Residual>, CliError> {
    Ok(match regions {
        Regions::Annulus(s) => s.residuals(rho)?,
        Regions::Ring(s) => s.residuals(rho)?,
        Regions::Plain { .. } => Vec::new(),
    })
}

fn merge(cfg: &ExperimentConfig, loaded: &Loaded) -> Result<Outcome, CliError> {
    let (rho, [a, b, c]) = restricted(loaded)?;
    let residuals = assumptions(&rho, &loaded.regions)?;
    let merged = match &loaded.regions {
        Regions::Annulus(s) => merge_annulus(&rho, s).map(|m| (m, "annulus-merge", None)),
        Regions::Ring(s) => merge_ring(&rho, s, seed(cfg)).map(|m| (m.state, "ring-merge", None)),
        Regions::Plain { .. } => {
            let set = MarginalConstraintSet::from_state(&rho, &vec![a.clone(), b.clone(), c.clone()], 2)?;
            iterative_maxent(&set, &cfg.solver_options()).map(|s| (s.state, "iterative", Some(s.iterations)))
        }
    };
    let (state, method, iterations) = match merged {
        Ok(m) => m,
        Err(e @ Error::AssumptionViolated { .. }) => {
            return Ok(Outcome::violated(&e, json!({ "assumptions": residuals })));
        }
        Err(e) => return Err(e.into()),
    };
    let set = MarginalConstraintSet::from_state(&rho, &vec![a, b, c], 2)?;
    let (s_in, s_out) = (von_neumann_entropy(&rho), von_neumann_entropy(&state));
    let mut out = Outcome::ok(json!({
        "method": method,
        "iterations": iterations,
        "assumptions": residuals,
        "marginal_residual": set.residual(&state)?,
        "entropy_input": s_in,
        "entropy_merged": s_out,
        "c3": s_out - s_in,
    }));
    out.state = Some(state);
    Ok(out)
}

fn secret_rate(cfg: &ExperimentConfig, loaded: &Loaded) -> Result<Outcome, CliError> {
    let (rho, _) = restricted(loaded)?;
    match rate_report(&rho, &loaded.regions, &cfg.solver_options(), seed(cfg)) {
        Ok(r) => Ok(Outcome::ok(to_value(&r))),
        Err(e @ Error::AssumptionViolated { .. }) => {
            let residuals = assumptions(&rho, &loaded.regions)?;
            Ok(Outcome::violated(&e, json!({ "assumptions": residuals })))
        }
        Err(e) => Err(e.into()),
    }
}

fn approx_sweep(cfg: &ExperimentConfig, loaded: &Loaded) -> Result<Outcome, CliError> {
    let Regions::Annulus(split) = &loaded.regions else {
        return Err(CliError::Config("approx-sweep needs an annulus split (`b1`, `b2`)".into()));
    };
    let (rho, _) = restricted(loaded)?;
    let points = depolarizing_sweep(&rho, split, &cfg.sweep_points())?;
    let failing: Vec<f64> =
        points.iter().filter(|p| !(p.report.holds() && p.report.delta_achieved.holds)).map(|p| p.p).collect();
    let mut out = Outcome::ok(json!({ "points": points }));
    if !failing.is_empty() {
        out.status = Status::AssumptionViolated;
        out.message = Some(format!("bracket or marginal bound fails at p = {failing:?}"));
    }
    out.table = Some(sweep_table(&points));
    out.svg = Some(sweep_svg(&points));
    Ok(out)
}
