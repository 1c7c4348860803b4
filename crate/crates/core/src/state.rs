//! Bipartite density matrices.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{hermitian_eig, ComplexMatrix, DEFAULT_TOL};

const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-12;
/// Smallest eigenvalue accepted as rounding noise around zero.
pub const POSITIVITY_TOL: f64 = 1e-10;

/// Split of a Hilbert space into factors of dimension `da` and `db`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Bipartition {
    pub da: usize,
    pub db: usize,
}

impl Bipartition {
    pub fn new(da: usize, db: usize) -> Self {
        assert!(da >= 1 && db >= 1);
        Self { da, db }
    }

    pub fn symmetric(d: usize) -> Self {
        Self::new(d, d)
    }

    pub fn total(self) -> usize {
        self.da * self.db
    }
}

/// Hermitian, unit-trace, positive semidefinite matrix on a bipartite space.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    rho: ComplexMatrix,
    parts: Bipartition,
}

impl DensityMatrix {
    /// Validates Hermiticity, trace and positivity before accepting `rho`.
    pub fn new(rho: ComplexMatrix, parts: Bipartition) -> Result<Self> {
        if parts.total() != rho.dim() {
            return Err(Error::DimensionMismatch {
                expected: parts.total(),
                found: rho.dim(),
            });
        }
        if !rho.is_finite() {
            return Err(Error::InvalidDensity("non-finite entries"));
        }
        if rho.hermiticity_deviation() > HERMITIAN_TOL {
            return Err(Error::InvalidDensity("not Hermitian"));
        }
        if (rho.trace() - Complex64::new(1.0, 0.0)).norm() > TRACE_TOL {
            return Err(Error::InvalidDensity("trace differs from 1"));
        }
        let eig = hermitian_eig(&rho, DEFAULT_TOL)?;
        if eig.values.first().is_some_and(|&l| l < -POSITIVITY_TOL) {
            return Err(Error::InvalidDensity("negative eigenvalue"));
        }
        Ok(Self { rho, parts })
    }

    pub fn pure(psi: &[Complex64], parts: Bipartition) -> Result<Self> {
        Self::new(ComplexMatrix::outer(psi, psi), parts)
    }

    /// Caller guarantees the invariants (used on the stepping hot path, where
    /// the matrix is re-symmetrized and trace-normalized every step).
    pub(crate) fn from_parts_unchecked(rho: ComplexMatrix, parts: Bipartition) -> Self {
        Self { rho, parts }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.rho
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.rho
    }

    pub fn bipartition(&self) -> Bipartition {
        self.parts
    }

    pub fn dim(&self) -> usize {
        self.rho.dim()
    }

    /// `Tr(rho^2)`
    pub fn purity(&self) -> f64 {
        self.rho.as_slice().iter().map(|z| z.norm_sqr()).sum()
    }

    /// `Tr(rho O)`
    pub fn expectation(&self, op: &ComplexMatrix) -> Complex64 {
        (&self.rho * op).trace()
    }

    /// Re-checks every invariant; useful after long evolutions.
    pub fn validate(&self) -> Result<()> {
        Self::new(self.rho.clone(), self.parts).map(|_| ())
    }
}
