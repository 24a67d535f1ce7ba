use std::sync::OnceLock;

use crate::entropy::trace_distance;
use crate::error::{Error, Result};
use crate::layout::FactorLayout;
use crate::linalg::{self, eigh, kron, CMat};
use crate::state::DensityMatrix;

/// Allowed trace distance between the supplied and the computed marginal.
pub const MARGINAL_TOL: f64 = 1e-9;

/// Channel from `input` to `output` given by Kraus operators. The output
/// layout is the input layout followed by the added sites.
#[derive(Debug)]
pub struct RecoveryMap {
    input: FactorLayout,
    output: FactorLayout,
    kraus: Vec<CMat>,
    choi: OnceLock<CMat>,
}

impl Clone for RecoveryMap {
    fn clone(&self) -> Self {
        Self {
            input: self.input.clone(),
            output: self.output.clone(),
            kraus: self.kraus.clone(),
            choi: OnceLock::new(),
        }
    }
}

impl RecoveryMap {
    pub fn from_kraus(input: FactorLayout, output: FactorLayout, kraus: Vec<CMat>) -> Result<Self> {
        let (di, dout) = (input.total_dim(), output.total_dim());
        if kraus.iter().any(|k| k.nrows() != dout || k.ncols() != di) {
            return Err(Error::LayoutMismatch("Kraus operator shape does not match layouts".into()));
        }
        Ok(Self { input, output, kraus, choi: OnceLock::new() })
    }

    pub fn input(&self) -> &FactorLayout {
        &self.input
    }

    pub fn output(&self) -> &FactorLayout {
        &self.output
    }

    pub fn kraus(&self) -> &[CMat] {
        &self.kraus
    }

    /// Largest entry of `Σ K†K − I`.
    pub fn trace_preservation_defect(&self) -> f64 {
        let d = self.input.total_dim();
        let mut acc = -CMat::identity(d, d);
        for k in &self.kraus {
            acc += k.adjoint() * k;
        }
        linalg::max_abs(&acc)
    }

    /// Choi matrix `Σ_ij |i⟩⟨j| ⊗ Λ(|i⟩⟨j|)`, built on first use.
    pub fn choi(&self) -> &CMat {
        self.choi.get_or_init(|| {
            let (di, dout) = (self.input.total_dim(), self.output.total_dim());
            let mut j = CMat::zeros(di * dout, di * dout);
            for k in &self.kraus {
                let v = CMat::from_fn(di * dout, 1, |r, _| k[(r % dout, r / dout)]);
                j += &v * v.adjoint();
            }
            j
        })
    }

    pub fn min_choi_eigenvalue(&self) -> f64 {
        eigh(self.choi()).values.last().copied().unwrap_or(0.0)
    }

    /// Apply to a bare matrix on the input layout.
    pub fn apply_matrix(&self, x: &CMat) -> CMat {
        let d = self.output.total_dim();
        let mut acc = CMat::zeros(d, d);
        for k in &self.kraus {
            acc += k * x * k.adjoint();
        }
        acc
    }

    /// Apply `id ⊗ Λ` to a state containing the input sites. The result keeps
    /// the state's site order and appends the added sites.
    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        let layout = rho.layout();
        let inputs = self.input.labels();
        for l in &inputs {
            let p = layout.position(l)?;
            if layout.sites()[p].dim != self.input.sites()[self.input.position(l)?].dim {
                return Err(Error::LayoutMismatch(format!("dimension of `{l}` differs")));
            }
        }
        let rest = layout.complement(&inputs)?;
        let mut work_order = rest.clone();
        work_order.extend(inputs.iter().cloned());
        let work = rho.reorder(&work_order)?;
        let drest = layout.dim_of(&rest)?;
        let id = CMat::identity(drest, drest);
        let dout = drest * self.output.total_dim();
        let mut acc = CMat::zeros(dout, dout);
        for k in &self.kraus {
            let big = kron(&id, k);
            acc += &big * work.data() * big.adjoint();
        }
        let out_layout = layout.restrict(&rest)?.concat(&self.output)?;
        let out = DensityMatrix::normalized(out_layout, acc)?;
        let added: Vec<String> = self.output.labels().into_iter().filter(|l| !inputs.contains(l)).collect();
        let mut order = layout.labels();
        order.extend(added);
        out.reorder(&order)
    }
}

/// Petz map `X ↦ ρ_BC^{1/2} (ρ_B^{-1/2} X ρ_B^{-1/2} ⊗ I) ρ_BC^{1/2}`, completed
/// to a trace-preserving map by `X ↦ P X P ⊗ ρ_C` on the kernel `P` of `ρ_B`.
pub fn petz_recovery(rho_bc: &DensityMatrix, rho_b: &DensityMatrix) -> Result<RecoveryMap> {
    let b_labels = rho_b.labels();
    let computed = rho_bc.partial_trace(&b_labels)?.reorder(&b_labels)?;
    if computed.layout() != rho_b.layout() {
        return Err(Error::LayoutMismatch("marginal dimensions differ".into()));
    }
    let distance = trace_distance(&computed, rho_b)?;
    if distance > MARGINAL_TOL {
        return Err(Error::InconsistentMarginal { distance });
    }
    let c_labels = rho_bc.layout().complement(&b_labels)?;
    if c_labels.is_empty() {
        return Err(Error::InvalidLayout("recovery needs at least one added site".into()));
    }
    let mut order = b_labels.clone();
    order.extend(c_labels.iter().cloned());
    let bc = rho_bc.reorder(&order)?;
    let db = rho_b.dim();
    let dc = bc.dim() / db;

    let eb = eigh(rho_b.data());
    let cut = eb.cutoff();
    let inv_sqrt = eb.map(|v| if v > cut { v.powf(-0.5) } else { 0.0 });
    let kernel = eb.kernel();
    let proj_ker = &kernel * kernel.adjoint();
    let sqrt_bc = linalg::psd_sqrt(bc.data());

    let mut kraus = Vec::with_capacity(2 * dc);
    for c in 0..dc {
        let ket = CMat::from_fn(dc, 1, |i, _| linalg::c(if i == c { 1.0 } else { 0.0 }));
        kraus.push(&sqrt_bc * kron(&inv_sqrt, &ket));
    }
    if kernel.ncols() > 0 {
        let rho_c = linalg::trace_first(bc.data(), db, dc);
        let ec = eigh(&rho_c);
        for (j, &nu) in ec.values.iter().enumerate() {
            if nu > ec.cutoff() {
                let ket = ec.vectors.columns(j, 1).into_owned();
                kraus.push(kron(&proj_ker, &ket).scale(nu.sqrt()));
            }
        }
    }
    RecoveryMap::from_kraus(rho_b.layout().clone(), bc.layout().clone(), kraus)
}

/// Apply the Petz map built from `rho_bc` to `rho`.
pub fn apply_recovery(map: &RecoveryMap, rho: &DensityMatrix) -> Result<DensityMatrix> {
    map.apply(rho)
}
