//! Dense state representations.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::sparse::SparseOperator;
use crate::error::{domain, Result};

/// Norm tolerance enforced by [`StateVector::new`].
pub const NORM_TOL: f64 = 1e-10;
/// Hermiticity tolerance enforced by [`DensityMatrix::new`].
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Trace tolerance enforced by [`DensityMatrix::new`].
pub const TRACE_TOL: f64 = 1e-8;
/// Eigenvalues above `-POSITIVITY_TOL` count as non-negative.
pub const POSITIVITY_TOL: f64 = 1e-8;

/// Pure state amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: DVector<Complex64>,
    normalized: bool,
}

impl StateVector {
    /// Physical state; the norm must be within [`NORM_TOL`] of 1.
    pub fn new(amplitudes: DVector<Complex64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return domain("state vector must be non-empty");
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return domain(format!("state vector norm {norm} is not 1"));
        }
        Ok(Self {
            amplitudes,
            normalized: true,
        })
    }

    /// Arbitrary amplitudes, flagged as not necessarily normalized.
    pub fn unnormalized(amplitudes: DVector<Complex64>) -> Self {
        Self {
            amplitudes,
            normalized: false,
        }
    }

    /// Rescales arbitrary nonzero amplitudes to unit norm.
    pub fn normalize(amplitudes: DVector<Complex64>) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return domain("cannot normalize a zero or non-finite vector");
        }
        Self::new(amplitudes.unscale(norm))
    }

    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return domain(format!("basis index {index} out of range for dimension {dim}"));
        }
        let mut v = DVector::zeros(dim);
        v[index] = Complex64::new(1.0, 0.0);
        Self::new(v)
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> DVector<Complex64> {
        self.amplitudes
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        if self.dim() != other.dim() {
            return domain("state dimensions differ");
        }
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    pub fn expectation(&self, op: &SparseOperator) -> Result<Complex64> {
        let applied = op.apply(&self.amplitudes)?;
        Ok(self.amplitudes.dotc(&applied))
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn to_density(&self) -> DensityMatrix {
        let m = &self.amplitudes * self.amplitudes.adjoint();
        DensityMatrix { elements: m }
    }
}

/// Dense density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    elements: DMatrix<Complex64>,
}

impl DensityMatrix {
    /// Validated physical state: Hermitian, unit trace and positive within
    /// the module tolerances.
    pub fn new(elements: DMatrix<Complex64>) -> Result<Self> {
        let rho = Self::from_matrix_unchecked(elements)?;
        let herm = rho.hermitian_deviation();
        if herm > HERMITIAN_TOL {
            return domain(format!("density matrix not Hermitian (deviation {herm:.3e})"));
        }
        let tr = rho.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return domain(format!("density matrix trace {tr} is not 1"));
        }
        let min = rho.min_eigenvalue();
        if min < -POSITIVITY_TOL {
            return domain(format!("density matrix has negative eigenvalue {min:.3e}"));
        }
        Ok(rho)
    }

    /// Square matrix without physical validation (intermediate or mixed
    /// quantities during integration).
    pub fn from_matrix_unchecked(elements: DMatrix<Complex64>) -> Result<Self> {
        if elements.nrows() != elements.ncols() || elements.nrows() == 0 {
            return domain("density matrix must be square and non-empty");
        }
        Ok(Self { elements })
    }

    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        if dim == 0 {
            return domain("dimension must be positive");
        }
        Self::new(DMatrix::identity(dim, dim).unscale(dim as f64))
    }

    /// Convex mixture `Σ wᵢ |ψᵢ⟩⟨ψᵢ|`.
    pub fn mixture(components: &[(f64, &StateVector)]) -> Result<Self> {
        let Some((_, first)) = components.first() else {
            return domain("mixture needs at least one component");
        };
        let dim = first.dim();
        let mut m = DMatrix::zeros(dim, dim);
        for (w, psi) in components {
            if psi.dim() != dim {
                return domain("mixture components have different dimensions");
            }
            if *w < 0.0 {
                return domain("mixture weights must be non-negative");
            }
            m += psi.to_density().elements.scale(*w);
        }
        Self::new(m)
    }

    pub fn dim(&self) -> usize {
        self.elements.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.elements
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.elements
    }

    pub fn trace(&self) -> Complex64 {
        self.elements.trace()
    }

    /// `tr(ρ A)`.
    pub fn expectation(&self, op: &SparseOperator) -> Result<Complex64> {
        if op.dim() != self.dim() {
            return domain(format!(
                "observable dimension {} does not match state dimension {}",
                op.dim(),
                self.dim()
            ));
        }
        Ok(op.iter().map(|(r, c, v)| v * self.elements[(c, r)]).sum())
    }

    pub fn hermitian_deviation(&self) -> f64 {
        let n = self.dim();
        let mut dev: f64 = 0.0;
        for j in 0..n {
            for i in 0..=j {
                dev = dev.max((self.elements[(i, j)] - self.elements[(j, i)].conj()).norm());
            }
        }
        dev
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.elements)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.elements.norm()
    }

    /// `½‖ρ − σ‖₁`.
    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        if self.dim() != other.dim() {
            return domain("trace distance of states with different dimensions");
        }
        let diff = &self.elements - &other.elements;
        Ok(0.5 * hermitian_eigenvalues(&diff).iter().map(|l| l.abs()).sum::<f64>())
    }

    /// `⟨ψ|ρ|ψ⟩`.
    pub fn fidelity_with_pure(&self, psi: &StateVector) -> Result<f64> {
        if psi.dim() != self.dim() {
            return domain("fidelity of states with different dimensions");
        }
        let rp = &self.elements * psi.amplitudes();
        Ok(psi.amplitudes().dotc(&rp).re)
    }
}

/// Ascending eigenvalues of `(M + M†)/2`.
pub(crate) fn hermitian_eigenvalues(m: &DMatrix<Complex64>) -> Vec<f64> {
    let h = (m + m.adjoint()).scale(0.5);
    let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unnormalized_and_non_physical() {
        let v = DVector::from_vec(vec![Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)]);
        assert!(StateVector::new(v.clone()).is_err());
        assert!(!StateVector::unnormalized(v.clone()).is_normalized());
        assert!(StateVector::normalize(v).unwrap().is_normalized());

        let bad = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(1.5, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(-0.5, 0.0),
            ],
        );
        assert!(DensityMatrix::new(bad).is_err());
    }

    #[test]
    fn trace_distance_of_orthogonal_pure_states_is_one() {
        let a = StateVector::basis(3, 0).unwrap().to_density();
        let b = StateVector::basis(3, 2).unwrap().to_density();
        assert!((a.trace_distance(&b).unwrap() - 1.0).abs() < 1e-14);
        assert!(a.trace_distance(&a).unwrap() < 1e-14);
    }
}
