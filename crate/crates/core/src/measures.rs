//! State functionals: partial transpose, log-negativity, Uhlmann fidelity and
//! von Neumann entropy.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{hermitian_eig, inner, ComplexMatrix, LinalgError, DEFAULT_TOL};
use crate::state::{Bipartition, DensityMatrix, POSITIVITY_TOL};

/// Transposes the second tensor factor:
/// `rho[(a b), (a' b')] -> rho[(a b'), (a' b)]`.
pub fn partial_transpose_matrix(rho: &ComplexMatrix, parts: Bipartition) -> Result<ComplexMatrix> {
    if parts.total() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: parts.total(),
            found: rho.dim(),
        });
    }
    let db = parts.db;
    Ok(ComplexMatrix::from_fn(rho.dim(), |r, c| {
        let (a, b) = (r / db, r % db);
        let (a2, b2) = (c / db, c % db);
        rho[(a * db + b2, a2 * db + b)]
    }))
}

pub fn partial_transpose(rho: &DensityMatrix) -> Result<ComplexMatrix> {
    partial_transpose_matrix(rho.matrix(), rho.bipartition())
}

/// Sum of absolute eigenvalues of a Hermitian matrix.
pub fn trace_norm_hermitian(m: &ComplexMatrix) -> Result<f64> {
    let eig = hermitian_eig(m, DEFAULT_TOL)?;
    Ok(eig.values.iter().map(|l| libm::fabs(*l)).sum())
}

/// `log2 || rho^Gamma ||_1`, clamped at zero.
pub fn log_negativity(rho: &DensityMatrix) -> Result<f64> {
    let pt = partial_transpose(rho)?;
    let norm = trace_norm_hermitian(&pt)?;
    Ok(libm::log2(norm).max(0.0))
}

/// Eigenvalues of a density matrix at or below this are treated as outside
/// its support when evaluating the fidelity.
pub const SUPPORT_CUTOFF: f64 = 1e-13;

/// Uhlmann fidelity `[Tr sqrt(sqrt(rho1) rho2 sqrt(rho1))]^2`.
///
/// Evaluated in the support of `rho1`: with `rho1 = V L V†` restricted to
/// eigenvalues above [`SUPPORT_CUTOFF`], the inner operator is
/// `L^{1/2} (V† rho2 V) L^{1/2}`. Rounding noise in the null space of `rho1`
/// would otherwise be amplified by the square roots.
pub fn fidelity(rho1: &DensityMatrix, rho2: &DensityMatrix) -> Result<f64> {
    if rho1.dim() != rho2.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho1.dim(),
            found: rho2.dim(),
        });
    }
    let eig = hermitian_eig(rho1.matrix(), DEFAULT_TOL)?;
    if let Some(&l) = eig.values.first().filter(|&&l| l < -POSITIVITY_TOL) {
        return Err(LinalgError::DomainError { eigenvalue: l }.into());
    }
    let support: Vec<usize> = (0..eig.values.len()).filter(|&i| eig.values[i] > SUPPORT_CUTOFF).collect();
    if support.is_empty() {
        return Ok(0.0);
    }
    let roots: Vec<f64> = support.iter().map(|&i| libm::sqrt(eig.values[i])).collect();
    let columns: Vec<Vec<Complex64>> = support.iter().map(|&i| eig.vectors.column(i)).collect();
    let images: Vec<Vec<Complex64>> = columns.iter().map(|v| rho2.matrix().apply(v)).collect();
    let inner_op = ComplexMatrix::from_fn(support.len(), |r, c| {
        inner(&columns[r], &images[c]) * (roots[r] * roots[c])
    })
    .hermitian_part();
    let inner_eig = hermitian_eig(&inner_op, DEFAULT_TOL)?;
    let mut root_trace = 0.0;
    for &l in &inner_eig.values {
        if l < -POSITIVITY_TOL {
            return Err(LinalgError::DomainError { eigenvalue: l }.into());
        }
        root_trace += libm::sqrt(l.max(0.0));
    }
    Ok((root_trace * root_trace).min(1.0))
}

/// `-sum lambda log_base lambda` with `0 log 0 = 0`.
pub fn von_neumann_entropy(rho: &DensityMatrix, base: f64) -> Result<f64> {
    if !(base > 1.0) {
        return Err(Error::OutOfRange(base));
    }
    let eig = hermitian_eig(rho.matrix(), DEFAULT_TOL)?;
    let mut s = 0.0;
    for &l in &eig.values {
        if l < -POSITIVITY_TOL {
            return Err(Error::InvalidDensity("negative eigenvalue"));
        }
        if l > 0.0 {
            s -= l * libm::log(l);
        }
    }
    Ok((s / libm::log(base)).max(0.0))
}

fn x_ln_x(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * libm::log(x)
    }
}

/// Entropy gap between the equal mixture of two pure states and either pure
/// state, in bits:
///
/// `1 - [(1-x) ln(1-x) + (1+x) ln(1+x)] / ln 4`.
///
/// `x` is the modulus of the two-top overlap `|<psi+|psi->|`, which for the
/// product states used here equals the single-top `|<g1|g2>|^2`.
pub fn delta_entropy(overlap_sq: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&overlap_sq) {
        return Err(Error::OutOfRange(overlap_sq));
    }
    let x = overlap_sq;
    let value = 1.0 - (x_ln_x(1.0 - x) + x_ln_x(1.0 + x)) / libm::log(4.0);
    Ok(value.clamp(0.0, 1.0))
}

/// `Tr(rho O)` for a Hermitian observable, real part.
pub fn expectation_real(rho: &DensityMatrix, op: &ComplexMatrix) -> f64 {
    let z: Complex64 = rho.expectation(op);
    z.re
}
