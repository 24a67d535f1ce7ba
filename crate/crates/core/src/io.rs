//! Serialization of density matrices.
//!
//! JSON: `{"layout": [{"label": "A", "dim": 2}, ...], "data": [[re, im], ...]}`
//! with `data` in row-major order.
//!
//! Binary (little endian): magic `QDM1`, `u32` site count, then per site a
//! `u32` label length, the UTF-8 label bytes and a `u32` dimension, followed
//! by `dim²` pairs of `f64` (re, im) in row-major order.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layout::{FactorLayout, Site};
use crate::linalg::{CMat, C64};
use crate::state::DensityMatrix;

const MAGIC: &[u8; 4] = b"QDM1";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StateJson {
    layout: FactorLayout,
    data: Vec<[f64; 2]>,
}

pub fn matrix_to_pairs(m: &CMat) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push([m[(i, j)].re, m[(i, j)].im]);
        }
    }
    out
}

pub fn pairs_to_matrix(rows: usize, cols: usize, pairs: &[[f64; 2]]) -> Result<CMat> {
    if pairs.len() != rows * cols {
        return Err(Error::Decode(format!("expected {} entries, found {}", rows * cols, pairs.len())));
    }
    Ok(CMat::from_row_iterator(rows, cols, pairs.iter().map(|p| C64::new(p[0], p[1]))))
}

pub fn to_json(rho: &DensityMatrix) -> Result<String> {
    let s = StateJson { layout: rho.layout().clone(), data: matrix_to_pairs(rho.data()) };
    Ok(serde_json::to_string(&s)?)
}

pub fn from_json(text: &str) -> Result<DensityMatrix> {
    let s: StateJson = serde_json::from_str(text)?;
    let n = s.layout.total_dim();
    DensityMatrix::new(s.layout, pairs_to_matrix(n, n, &s.data)?)
}

pub fn write_binary<W: Write>(rho: &DensityMatrix, mut w: W) -> Result<()> {
    w.write_all(MAGIC)?;
    let sites = rho.layout().sites();
    w.write_all(&(sites.len() as u32).to_le_bytes())?;
    for s in sites {
        w.write_all(&(s.label.len() as u32).to_le_bytes())?;
        w.write_all(s.label.as_bytes())?;
        w.write_all(&(s.dim as u32).to_le_bytes())?;
    }
    for z in matrix_to_pairs(rho.data()) {
        w.write_all(&z[0].to_le_bytes())?;
        w.write_all(&z[1].to_le_bytes())?;
    }
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(|e| Error::Decode(e.to_string()))?;
    Ok(u32::from_le_bytes(b))
}

pub fn read_binary<R: Read>(mut r: R) -> Result<DensityMatrix> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(|e| Error::Decode(e.to_string()))?;
    if &magic != MAGIC {
        return Err(Error::Decode("bad magic".into()));
    }
    let count = read_u32(&mut r)? as usize;
    let mut sites = Vec::with_capacity(count.min(64));
    for _ in 0..count {
        let len = read_u32(&mut r)? as usize;
        let mut buf = vec![0u8; len];
        r.read_exact(&mut buf).map_err(|e| Error::Decode(e.to_string()))?;
        let label = String::from_utf8(buf).map_err(|e| Error::Decode(e.to_string()))?;
        let dim = read_u32(&mut r)? as usize;
        sites.push(Site { label, dim });
    }
    let layout = FactorLayout::from_sites(sites)?;
    let n = layout.total_dim();
    let mut pairs = Vec::with_capacity(n * n);
    let mut b = [0u8; 16];
    for _ in 0..n * n {
        r.read_exact(&mut b).map_err(|e| Error::Decode(e.to_string()))?;
        let re = f64::from_le_bytes(b[..8].try_into().unwrap());
        let im = f64::from_le_bytes(b[8..].try_into().unwrap());
        pairs.push([re, im]);
    }
    DensityMatrix::new(layout, pairs_to_matrix(n, n, &pairs)?)
}
