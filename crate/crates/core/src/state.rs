use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::layout::FactorLayout;
use crate::linalg::{self, c, hermitize, CMat, C64};

/// Hermiticity tolerance on the raw input (max |M − M†|).
pub const TOL_HERM: f64 = 1e-10;
/// Lowest admissible eigenvalue and allowed trace deviation.
pub const TOL_PSD: f64 = 1e-10;

/// Positive semidefinite, unit-trace operator on a labelled tensor product.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    layout: FactorLayout,
    data: CMat,
}

impl DensityMatrix {
    /// Validate and hermitize `data`.
    pub fn new(layout: FactorLayout, data: CMat) -> Result<Self> {
        let n = layout.total_dim();
        if data.nrows() != n || data.ncols() != n {
            return Err(Error::InvalidState(format!(
                "matrix is {}x{}, layout needs {n}x{n}",
                data.nrows(),
                data.ncols()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidState("non-finite entry".into()));
        }
        let defect = linalg::hermiticity_defect(&data);
        if defect > TOL_HERM {
            return Err(Error::InvalidState(format!("not Hermitian (defect {defect:.3e})")));
        }
        let data = hermitize(&data);
        let tr = linalg::trace(&data).re;
        if (tr - 1.0).abs() > TOL_PSD {
            return Err(Error::InvalidState(format!("trace is {tr}")));
        }
        let low = linalg::eigh(&data).values.last().copied().unwrap_or(0.0);
        if low < -TOL_PSD {
            return Err(Error::InvalidState(format!("negative eigenvalue {low:.3e}")));
        }
        Ok(Self { layout, data })
    }

    /// Hermitize and rescale to unit trace without the spectral check.
    /// Used for outputs of CPTP maps, where positivity holds by construction.
    pub fn normalized(layout: FactorLayout, data: CMat) -> Result<Self> {
        let data = hermitize(&data);
        let tr = linalg::trace(&data).re;
        if !(tr.is_finite() && tr > 0.0) {
            return Err(Error::InvalidState(format!("trace is {tr}")));
        }
        if data.nrows() != layout.total_dim() {
            return Err(Error::InvalidState("dimension does not match layout".into()));
        }
        Ok(Self { layout, data: data.unscale(tr) })
    }

    pub fn maximally_mixed(layout: FactorLayout) -> Self {
        let n = layout.total_dim();
        Self { data: CMat::identity(n, n).unscale(n as f64), layout }
    }

    /// `|ψ⟩⟨ψ|` for a (not necessarily normalized) vector.
    pub fn pure(layout: FactorLayout, psi: &[C64]) -> Result<Self> {
        if psi.len() != layout.total_dim() {
            return Err(Error::InvalidState("vector length does not match layout".into()));
        }
        let v = DVector::from_column_slice(psi);
        let norm = v.norm();
        if norm == 0.0 {
            return Err(Error::InvalidState("zero vector".into()));
        }
        let v = v.unscale(norm);
        Ok(Self { data: &v * v.adjoint(), layout })
    }

    /// Computational basis state `|i⟩⟨i|`.
    pub fn basis(layout: FactorLayout, index: usize) -> Result<Self> {
        let mut psi = vec![c(0.0); layout.total_dim()];
        *psi.get_mut(index).ok_or_else(|| Error::InvalidState("basis index out of range".into()))? = c(1.0);
        Self::pure(layout, &psi)
    }

    pub fn diagonal(layout: FactorLayout, probs: &[f64]) -> Result<Self> {
        if probs.len() != layout.total_dim() {
            return Err(Error::InvalidState("diagonal length does not match layout".into()));
        }
        let d = DVector::from_iterator(probs.len(), probs.iter().map(|&p| c(p)));
        Self::new(layout, CMat::from_diagonal(&d))
    }

    pub fn layout(&self) -> &FactorLayout {
        &self.layout
    }

    pub fn data(&self) -> &CMat {
        &self.data
    }

    pub fn into_data(self) -> CMat {
        self.data
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn labels(&self) -> Vec<String> {
        self.layout.labels()
    }

    pub fn tensor(&self, other: &DensityMatrix) -> Result<DensityMatrix> {
        let layout = self.layout.concat(&other.layout)?;
        Ok(Self { layout, data: linalg::kron(&self.data, &other.data) })
    }

    /// Reduced state on `keep`, with sites in layout order.
    pub fn partial_trace<S: AsRef<str>>(&self, keep: &[S]) -> Result<DensityMatrix> {
        if keep.is_empty() {
            return Err(Error::InvalidLayout("cannot keep an empty set of subsystems".into()));
        }
        let (layout, data) = self.layout.partial_trace(&self.data, keep)?;
        Ok(Self { layout, data: hermitize(&data) })
    }

    /// Reorder sites so that the layout reads `order`.
    pub fn reorder<S: AsRef<str>>(&self, order: &[S]) -> Result<DensityMatrix> {
        if order.len() != self.layout.len() {
            return Err(Error::LayoutMismatch("reorder must name every site".into()));
        }
        let mut perm = Vec::with_capacity(order.len());
        for l in order {
            let p = self.layout.position(l.as_ref())?;
            if perm.contains(&p) {
                return Err(Error::DuplicateLabel(l.as_ref().to_string()));
            }
            perm.push(p);
        }
        let (layout, data) = self.layout.permute(&self.data, &perm);
        Ok(Self { layout, data })
    }

    /// Apply `U ρ U†`.
    pub fn conjugate(&self, u: &CMat) -> Result<DensityMatrix> {
        Self::normalized(self.layout.clone(), u * &self.data * u.adjoint())
    }

    /// Same matrix, different labels and dims (total dimension must agree).
    pub fn relabel(&self, layout: FactorLayout) -> Result<DensityMatrix> {
        if layout.total_dim() != self.dim() {
            return Err(Error::LayoutMismatch("total dimension differs".into()));
        }
        Ok(Self { layout, data: self.data.clone() })
    }

    /// Convex mixture `Σ w_i ρ_i` of states on one layout.
    pub fn mixture(parts: &[(f64, &DensityMatrix)]) -> Result<DensityMatrix> {
        let first = parts.first().ok_or_else(|| Error::InvalidState("empty mixture".into()))?.1;
        let mut acc = CMat::zeros(first.dim(), first.dim());
        for (w, s) in parts {
            if s.layout != first.layout {
                return Err(Error::LayoutMismatch("mixture components differ in layout".into()));
            }
            acc += s.data.scale(*w);
        }
        Self::new(first.layout.clone(), acc)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::eigh(&self.data).values
    }

    pub fn purity(&self) -> f64 {
        (&self.data * &self.data).trace().re
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;

    fn qubits(n: usize) -> FactorLayout {
        let labels: Vec<String> = (0..n).map(|i| format!("q{i}")).collect();
        FactorLayout::qubits(&labels).unwrap()
    }

    #[test]
    fn mixed_tensor_mixed() {
        let a = DensityMatrix::maximally_mixed(FactorLayout::qubits(&["a"]).unwrap());
        let b = DensityMatrix::maximally_mixed(FactorLayout::qubits(&["b"]).unwrap());
        let ab = a.tensor(&b).unwrap();
        assert!(max_abs(&(ab.data() - CMat::identity(4, 4).scale(0.25))) < 1e-15);
    }

    #[test]
    fn pure_tensor_pure() {
        let zero = DensityMatrix::basis(FactorLayout::qubits(&["a"]).unwrap(), 0).unwrap();
        let one = DensityMatrix::basis(FactorLayout::qubits(&["b"]).unwrap(), 1).unwrap();
        let t = zero.tensor(&one).unwrap();
        let expect = DensityMatrix::basis(qubits(2), 1).unwrap();
        assert!(max_abs(&(t.data() - expect.data())) < 1e-15);
    }

    #[test]
    fn tensor_rejects_label_collision() {
        let a = DensityMatrix::maximally_mixed(FactorLayout::qubits(&["a"]).unwrap());
        assert!(matches!(a.tensor(&a), Err(Error::DuplicateLabel(_))));
    }

    #[test]
    fn partial_trace_unknown_label() {
        let a = DensityMatrix::maximally_mixed(qubits(2));
        assert!(matches!(a.partial_trace(&["zz"]), Err(Error::UnknownSubsystem(_))));
    }

    #[test]
    fn rejects_non_hermitian_and_bad_trace() {
        let l = qubits(1);
        let m = CMat::from_row_slice(2, 2, &[c(0.5), c(0.1), c(0.0), c(0.5)]);
        assert!(DensityMatrix::new(l.clone(), m).is_err());
        assert!(DensityMatrix::new(l.clone(), CMat::identity(2, 2)).is_err());
        let neg = CMat::from_diagonal(&DVector::from_vec(vec![c(1.5), c(-0.5)]));
        assert!(DensityMatrix::new(l, neg).is_err());
    }

    #[test]
    fn reorder_roundtrip() {
        let l = FactorLayout::new(&[("a", 2), ("b", 3)]).unwrap();
        let zero_one = DensityMatrix::basis(l, 1).unwrap();
        let r = zero_one.reorder(&["b", "a"]).unwrap();
        assert_eq!(r.data()[(2, 2)], c(1.0));
        assert_eq!(r.reorder(&["a", "b"]).unwrap(), zero_one);
    }
}
