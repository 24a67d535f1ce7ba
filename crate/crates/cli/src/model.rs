//! Turns a model spec into a dense state and a tripartition.

use std::path::Path;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use topocorr::maxent::{AnnulusSplit, Regions, RingSplit};
use topocorr::models::{bell, ghz, product, random_chain_qms, w_state, ChainShape};
use topocorr::stabilizer::{Geometry, RegionMask, StabilizerTableau, ToricCode};
use topocorr::{io, DensityMatrix, FactorLayout};

use crate::config::{Command, ExperimentConfig, ModelSpec, RegionSpec};
use crate::error::CliError;

const BUNDLED_MASKS: [(&str, &str); 4] = [
    ("kp-disk", include_str!("../../../masks/kp-disk.json")),
    ("kp-annulus", include_str!("../../../masks/kp-annulus.json")),
    ("lw-annulus", include_str!("../../../masks/lw-annulus.json")),
    ("far-separated", include_str!("../../../masks/far-separated.json")),
];

pub struct Toric {
    pub tableau: StabilizerTableau,
    pub mask: RegionMask,
}

pub struct Loaded {
    /// `None` when only stabilizer data is needed and the support is too
    /// large for a dense state.
    pub state: Option<DensityMatrix>,
    pub regions: Regions,
    pub toric: Option<Toric>,
}

impl Loaded {
    pub fn dense(&self) -> Result<&DensityMatrix, CliError> {
        self.state.as_ref().ok_or_else(|| {
            let n = self.toric.as_ref().map_or(0, |t| t.mask.support().len());
            CliError::Core(topocorr::Error::DenseLimitExceeded {
                qubits: n,
                limit: topocorr::stabilizer::DENSE_QUBIT_LIMIT,
            })
        })
    }
}

/// A mask file if `name` is a path that exists, otherwise a bundled mask.
pub fn load_mask(name: &str) -> Result<RegionMask, CliError> {
    let path = Path::new(name);
    if path.is_file() {
        return RegionMask::load(path).map_err(|source| CliError::Input { path: name.into(), source });
    }
    let key = name.strip_suffix(".json").unwrap_or(name);
    let key = Path::new(key).file_name().and_then(|s| s.to_str()).unwrap_or(key);
    match BUNDLED_MASKS.iter().find(|(k, _)| *k == key) {
        Some((_, text)) => Ok(RegionMask::from_json(text)?),
        None => {
            let known: Vec<&str> = BUNDLED_MASKS.iter().map(|(k, _)| *k).collect();
            Err(CliError::Config(format!(
                "no mask file `{name}` and no bundled mask of that name (bundled: {})",
                known.join(", ")
            )))
        }
    }
}

fn strings(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

fn qubit_labels(qs: &[usize]) -> Vec<String> {
    let mut qs = qs.to_vec();
    qs.sort_unstable();
    qs.iter().map(|q| format!("q{q}")).collect()
}

fn from_spec(r: &RegionSpec) -> Regions {
    if r.b.is_empty() {
        Regions::Annulus(AnnulusSplit { a: r.a.clone(), b1: r.b1.clone(), b2: r.b2.clone(), c: r.c.clone() })
    } else {
        Regions::Plain { a: r.a.clone(), b: r.b.clone(), c: r.c.clone() }
    }
}

fn plain(a: &str, b: &str, c: &str) -> Regions {
    Regions::Plain { a: strings(&[a]), b: strings(&[b]), c: strings(&[c]) }
}

fn mask_regions(mask: &RegionMask) -> Result<Regions, CliError> {
    let pieces = |names: &[&str]| -> Option<Vec<Vec<String>>> {
        names.iter().map(|n| mask.splits.get(*n).map(|qs| qubit_labels(qs))).collect()
    };
    Ok(match mask.geometry {
        Geometry::LwAnnulus => match pieces(&["B1", "B2"]) {
            Some(b) => Regions::Annulus(AnnulusSplit {
                a: qubit_labels(mask.a()),
                b1: b[0].clone(),
                b2: b[1].clone(),
                c: qubit_labels(mask.c()),
            }),
            None => return Err(CliError::Config("LW-annulus mask has no `B1`/`B2` split".into())),
        },
        Geometry::KpAnnulus => match pieces(&["X1", "X2", "X3", "X4", "X5", "X6"]) {
            Some(parts) => Regions::Ring(RingSplit::new(parts)?),
            None => Regions::Plain { a: qubit_labels(mask.a()), b: qubit_labels(mask.b()), c: qubit_labels(mask.c()) },
        },
        _ => Regions::Plain { a: qubit_labels(mask.a()), b: qubit_labels(mask.b()), c: qubit_labels(mask.c()) },
    })
}

fn file_regions(rho: &DensityMatrix) -> Result<Regions, CliError> {
    let l = rho.labels();
    match l.len() {
        3 => Ok(plain(&l[0], &l[1], &l[2])),
        4 => Ok(Regions::Annulus(AnnulusSplit {
            a: vec![l[0].clone()],
            b1: vec![l[1].clone()],
            b2: vec![l[2].clone()],
            c: vec![l[3].clone()],
        })),
        n => Err(CliError::Config(format!("state has {n} sites; give regions explicitly"))),
    }
}

pub fn load(cfg: &ExperimentConfig, need_dense: bool) -> Result<Loaded, CliError> {
    let seed = cfg.seed;
    let mut loaded = match &cfg.model {
        ModelSpec::Toric { lx, ly, mask } => {
            let mask = load_mask(mask)?;
            let lattice = mask.lattice;
            if lx.is_some_and(|x| x != lattice.lx) || ly.is_some_and(|y| y != lattice.ly) {
                return Err(CliError::Config(format!(
                    "mask is drawn on a {}x{} torus, not {}x{}",
                    lattice.lx,
                    lattice.ly,
                    lx.unwrap_or(lattice.lx),
                    ly.unwrap_or(lattice.ly)
                )));
            }
            let tableau = ToricCode::new(lattice.lx, lattice.ly)?.ground_state()?;
            let state = if need_dense { Some(tableau.rdm_dense(&mask.support())?) } else { None };
            let regions = mask_regions(&mask)?;
            Loaded { state, regions, toric: Some(Toric { tableau, mask }) }
        }
        ModelSpec::File { path } => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Input { path: path.display().to_string(), source: e.into() })?;
            let rho =
                io::from_json(&text).map_err(|source| CliError::Input { path: path.display().to_string(), source })?;
            let regions = match &cfg.regions {
                Some(r) => from_spec(r),
                None => file_regions(&rho)?,
            };
            Loaded { state: Some(rho), regions, toric: None }
        }
        ModelSpec::Ghz3 => Loaded { state: Some(ghz(&["a", "b", "c"])?), regions: plain("a", "b", "c"), toric: None },
        ModelSpec::W => Loaded { state: Some(w_state(&["a", "b", "c"])?), regions: plain("a", "b", "c"), toric: None },
        ModelSpec::Bell => {
            let zero = DensityMatrix::basis(FactorLayout::qubits(&["c"])?, 0)?;
            Loaded { state: Some(bell("a", "b")?.tensor(&zero)?), regions: plain("a", "b", "c"), toric: None }
        }
        ModelSpec::Product => {
            let h = std::f64::consts::FRAC_1_SQRT_2;
            let zero = DensityMatrix::basis(FactorLayout::qubits(&["a"])?, 0)?;
            let plus = DensityMatrix::pure(FactorLayout::qubits(&["b"])?, &[h.into(), h.into()])?;
            let mixed = DensityMatrix::maximally_mixed(FactorLayout::qubits(&["c"])?);
            Loaded { state: Some(product(&[zero, plus, mixed])?), regions: plain("a", "b", "c"), toric: None }
        }
        ModelSpec::RandomQms { shape } => {
            let seed = seed.ok_or_else(|| CliError::Config("random-qms needs a seed".into()))?;
            let shape = shape.clone().unwrap_or_else(ChainShape::default);
            let rho = random_chain_qms(&mut ChaCha8Rng::seed_from_u64(seed), &shape)?;
            let regions = Regions::Annulus(AnnulusSplit {
                a: strings(&["A"]),
                b1: strings(&["B1"]),
                b2: strings(&["B2"]),
                c: strings(&["C"]),
            });
            Loaded { state: Some(rho), regions, toric: None }
        }
    };
    if let Some(r) = &cfg.regions {
        loaded.regions = match &loaded.toric {
            // toric regions are given as qubit indices or `q`-labels
            Some(_) => from_spec(&relabel_qubits(r)),
            None => from_spec(r),
        };
    }
    if matches!(loaded.regions, Regions::Ring(_)) && seed.is_none() && cfg.command != Command::Tee {
        return Err(CliError::Config("ring splits use random probes; pass a seed".into()));
    }
    Ok(loaded)
}

fn relabel_qubits(r: &RegionSpec) -> RegionSpec {
    let fix = |v: &[String]| -> Vec<String> {
        v.iter().map(|s| if s.parse::<usize>().is_ok() { format!("q{s}") } else { s.clone() }).collect()
    };
    RegionSpec { a: fix(&r.a), b: fix(&r.b), b1: fix(&r.b1), b2: fix(&r.b2), c: fix(&r.c) }
}
