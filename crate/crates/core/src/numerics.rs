//! Dense complex linear algebra for the small operators used throughout the
//! crate (dimension at most `(2j+1)^2`).
//!
//! Hermitian problems are solved with cyclic complex Jacobi rotations. Unitary
//! spectra are obtained from the commuting Hermitian pair `(U + U†)/2` and
//! `(U - U†)/2i`, so no general non-symmetric solver is needed.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;
use thiserror::Error;

/// Default absolute tolerance for Hermiticity and unitarity checks.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Eigenvalues closer than this are treated as one degenerate cluster.
pub const DEGENERACY_TOL: f64 = 1e-9;

const MAX_SWEEPS: usize = 100;
const OFF_DIAGONAL_THRESHOLD: f64 = 1e-14;
// Separation used when splitting the cosine spectrum of a unitary into
// clusters that still need the sine part to be resolved.
const PHASE_CLUSTER_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix is not Hermitian (max |M - M^dagger| = {deviation:e})")]
    NotHermitian { deviation: f64 },
    #[error("matrix is not unitary (max |U^dagger U - I| = {deviation:e})")]
    NotUnitary { deviation: f64 },
    #[error("Jacobi iteration did not converge within {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
    #[error("function undefined at eigenvalue {eigenvalue:e}")]
    DomainError { eigenvalue: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix entries must be finite")]
    NonFinite,
}

/// Dense square complex matrix stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "matrix dimension must be positive");
        Self {
            dim,
            data: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_diagonal(diag: &[Complex64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = Complex64::new(d, 0.0);
        }
        m
    }

    /// Builds a matrix from row-major entries, rejecting non-finite values.
    pub fn from_row_major(dim: usize, data: Vec<Complex64>) -> Result<Self, LinalgError> {
        if dim == 0 || data.len() != dim * dim {
            return Err(LinalgError::DimensionMismatch {
                expected: dim * dim,
                found: data.len(),
            });
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(LinalgError::NonFinite);
        }
        Ok(Self { dim, data })
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(dim);
        for r in 0..dim {
            for c in 0..dim {
                m[(r, c)] = f(r, c);
            }
        }
        m
    }

    /// `|a><b|`
    pub fn outer(a: &[Complex64], b: &[Complex64]) -> Self {
        assert_eq!(a.len(), b.len());
        Self::from_fn(a.len(), |r, c| a[r] * b[c].conj())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn column(&self, c: usize) -> Vec<Complex64> {
        (0..self.dim).map(|r| self[(r, c)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |r, c| self[(c, r)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.dim, |r, c| self[(c, r)])
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&z| z * factor).collect(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(self.data.iter().map(|z| z.norm_sqr()).sum())
    }

    /// Largest entry of `|M - M†|`.
    pub fn hermiticity_deviation(&self) -> f64 {
        let mut dev = 0.0_f64;
        for r in 0..self.dim {
            for c in r..self.dim {
                dev = dev.max((self[(r, c)] - self[(c, r)].conj()).norm());
            }
        }
        dev
    }

    /// Largest entry of `|U†U - I|`.
    pub fn unitarity_deviation(&self) -> f64 {
        (&self.adjoint() * self).max_abs_diff(&Self::identity(self.dim))
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_deviation() <= tol
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_deviation() <= tol
    }

    /// `(M + M†)/2`, exactly Hermitian.
    pub fn hermitian_part(&self) -> Self {
        let mut out = self.clone();
        for r in 0..self.dim {
            out[(r, r)] = Complex64::new(self[(r, r)].re, 0.0);
            for c in r + 1..self.dim {
                let z = (self[(r, c)] + self[(c, r)].conj()) * 0.5;
                out[(r, c)] = z;
                out[(c, r)] = z.conj();
            }
        }
        out
    }

    /// `A B - B A`
    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    /// `U M U†`
    pub fn conjugate_by(&self, u: &Self) -> Self {
        &(u * self) * &u.adjoint()
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.dim);
        (0..self.dim)
            .map(|r| {
                self.data[r * self.dim..(r + 1) * self.dim]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    /// `<a|M|b>`
    pub fn expectation(&self, a: &[Complex64], b: &[Complex64]) -> Complex64 {
        inner(a, &self.apply(b))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[r * self.dim + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[r * self.dim + c]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "matrix dimensions differ");
        let n = self.dim;
        let mut out = ComplexMatrix::zeros(n);
        for r in 0..n {
            let row = &self.data[r * n..(r + 1) * n];
            let out_row = &mut out.data[r * n..(r + 1) * n];
            for (k, a) in row.iter().enumerate() {
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let rhs_row = &rhs.data[k * n..(k + 1) * n];
                for (o, b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        out
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "matrix dimensions differ");
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "matrix dimensions differ");
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

/// `<a|b>`, antilinear in the first argument.
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn vector_norm(v: &[Complex64]) -> f64 {
    libm::sqrt(v.iter().map(|z| z.norm_sqr()).sum())
}

/// Tensor product of two state vectors, first factor major.
pub fn kron_vec(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    a.iter().flat_map(|&x| b.iter().map(move |&y| x * y)).collect()
}

/// Kronecker product: entry `(i*dB + k, j*dB + l)` is `A(i,j) * B(k,l)`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (da, db) = (a.dim(), b.dim());
    let mut out = ComplexMatrix::zeros(da * db);
    for i in 0..da {
        for j in 0..da {
            let aij = a[(i, j)];
            for k in 0..db {
                for l in 0..db {
                    out[(i * db + k, j * db + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Exchange operator on two factors of dimension `d`:
/// `|a>|b> -> |b>|a>`.
pub fn swap_matrix(d: usize) -> ComplexMatrix {
    let mut s = ComplexMatrix::zeros(d * d);
    for a in 0..d {
        for b in 0..d {
            s[(b * d + a, a * d + b)] = Complex64::new(1.0, 0.0);
        }
    }
    s
}

/// Spectral decomposition of a Hermitian matrix.
///
/// Eigenvalues are ascending; column `i` of `vectors` pairs with `values[i]`.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl EigenDecomposition {
    /// `V diag(f(lambda)) V†`
    pub fn reconstruct_with(&self, mut f: impl FnMut(f64) -> Complex64) -> ComplexMatrix {
        let n = self.vectors.dim();
        let weights: Vec<Complex64> = self.values.iter().map(|&l| f(l)).collect();
        let v = &self.vectors;
        ComplexMatrix::from_fn(n, |r, c| {
            (0..n).map(|k| v[(r, k)] * weights[k] * v[(c, k)].conj()).sum()
        })
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.reconstruct_with(|l| Complex64::new(l, 0.0))
    }
}

/// Eigenphases of a unitary matrix in `(-pi, pi]`, ascending, with
/// orthonormal eigenvectors as columns.
#[derive(Clone, Debug)]
pub struct UnitarySpectrum {
    pub phases: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl UnitarySpectrum {
    pub fn eigenvalues(&self) -> Vec<Complex64> {
        self.phases.iter().map(|&p| Complex64::from_polar(1.0, p)).collect()
    }
}

fn off_diagonal_norm(a: &ComplexMatrix) -> f64 {
    let n = a.dim();
    let mut s = 0.0;
    for r in 0..n {
        for c in 0..n {
            if r != c {
                s += a[(r, c)].norm_sqr();
            }
        }
    }
    libm::sqrt(s)
}

/// One complex Jacobi rotation zeroing `a[(p, q)]`, accumulated into `v`.
fn jacobi_rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let mag = apq.norm();
    if mag == 0.0 {
        return;
    }
    let phase = apq / mag;
    let tau = (a[(q, q)].re - a[(p, p)].re) / (2.0 * mag);
    let t = if tau == 0.0 {
        1.0
    } else {
        tau.signum() / (libm::fabs(tau) + libm::hypot(1.0, tau))
    };
    let c = 1.0 / libm::hypot(1.0, t);
    let s = t * c;
    // J = [[c, s], [-s e^{-ia}, c e^{-ia}]] on the (p, q) plane.
    let jqp = -phase.conj() * s;
    let jqq = phase.conj() * c;
    let n = a.dim();
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * c + akq * jqp;
        a[(k, q)] = akp * s + akq * jqq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = apk * c + aqk * jqp.conj();
        a[(q, k)] = apk * s + aqk * jqq.conj();
    }
    a[(p, q)] = Complex64::new(0.0, 0.0);
    a[(q, p)] = Complex64::new(0.0, 0.0);
    a[(p, p)].im = 0.0;
    a[(q, q)].im = 0.0;
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * c + vkq * jqp;
        v[(k, q)] = vkp * s + vkq * jqq;
    }
}

fn gram_schmidt_columns(v: &mut ComplexMatrix, cols: &[usize]) {
    let n = v.dim();
    for (i, &ci) in cols.iter().enumerate() {
        for &cj in &cols[..i] {
            let proj: Complex64 = (0..n).map(|r| v[(r, cj)].conj() * v[(r, ci)]).sum();
            for r in 0..n {
                let sub = proj * v[(r, cj)];
                v[(r, ci)] -= sub;
            }
        }
        let norm = libm::sqrt((0..n).map(|r| v[(r, ci)].norm_sqr()).sum());
        for r in 0..n {
            v[(r, ci)] /= norm;
        }
    }
}

/// Groups sorted values into runs whose consecutive gaps are below `tol`.
fn clusters(values: &[f64], tol: f64) -> Vec<core::ops::Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=values.len() {
        if i == values.len() || values[i] - values[i - 1] >= tol {
            out.push(start..i);
            start = i;
        }
    }
    out
}

fn sort_columns(values: &mut Vec<f64>, vectors: &mut ComplexMatrix) {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let sorted_vals: Vec<f64> = order.iter().map(|&i| values[i]).collect();
    let sorted_vecs = ComplexMatrix::from_fn(n, |r, c| vectors[(r, order[c])]);
    *values = sorted_vals;
    *vectors = sorted_vecs;
}

/// Eigendecomposition of a Hermitian matrix by cyclic Jacobi sweeps.
pub fn hermitian_eig(m: &ComplexMatrix, tol: f64) -> Result<EigenDecomposition, LinalgError> {
    if !m.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let deviation = m.hermiticity_deviation();
    if deviation > tol {
        return Err(LinalgError::NotHermitian { deviation });
    }
    let n = m.dim();
    let mut a = m.hermitian_part();
    let mut v = ComplexMatrix::identity(n);
    let threshold = OFF_DIAGONAL_THRESHOLD * a.frobenius_norm();

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm(&a) <= threshold {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                jacobi_rotate(&mut a, &mut v, p, q);
            }
        }
    }
    if !converged && off_diagonal_norm(&a) > threshold {
        return Err(LinalgError::NoConvergence { sweeps: MAX_SWEEPS });
    }

    let mut values: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    sort_columns(&mut values, &mut v);
    for cluster in clusters(&values, DEGENERACY_TOL) {
        if cluster.len() > 1 {
            let cols: Vec<usize> = cluster.collect();
            gram_schmidt_columns(&mut v, &cols);
        }
    }
    Ok(EigenDecomposition { values, vectors: v })
}

/// Diagonalizes `restricted = B† H B` and rotates the columns of `basis`
/// (listed in `cols`) into its eigenbasis. Returns the sub-eigenvalues.
fn refine_columns(
    vectors: &mut ComplexMatrix,
    cols: &[usize],
    h: &ComplexMatrix,
) -> Result<Vec<f64>, LinalgError> {
    let n = vectors.dim();
    let k = cols.len();
    let hb: Vec<Vec<Complex64>> = cols.iter().map(|&c| h.apply(&vectors.column(c))).collect();
    let restricted = ComplexMatrix::from_fn(k, |r, c| {
        (0..n).map(|i| vectors[(i, cols[r])].conj() * hb[c][i]).sum()
    });
    let sub = hermitian_eig(&restricted.hermitian_part(), f64::INFINITY)?;
    let old: Vec<Vec<Complex64>> = cols.iter().map(|&c| vectors.column(c)).collect();
    for (new_idx, &col) in cols.iter().enumerate() {
        for i in 0..n {
            vectors[(i, col)] = (0..k).map(|j| old[j][i] * sub.vectors[(j, new_idx)]).sum();
        }
    }
    Ok(sub.values)
}

/// Eigenphases and eigenvectors of a unitary matrix.
pub fn unitary_eigenphases(u: &ComplexMatrix, tol: f64) -> Result<UnitarySpectrum, LinalgError> {
    if !u.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let deviation = u.unitarity_deviation();
    if deviation > tol {
        return Err(LinalgError::NotUnitary { deviation });
    }
    let n = u.dim();
    let ud = u.adjoint();
    let cos_part = (u + &ud).scale(Complex64::new(0.5, 0.0)).hermitian_part();
    let sin_part = (u - &ud).scale(Complex64::new(0.0, -0.5)).hermitian_part();

    let first = hermitian_eig(&cos_part, f64::INFINITY)?;
    let mut vectors = first.vectors;
    for cluster in clusters(&first.values, PHASE_CLUSTER_TOL) {
        if cluster.len() < 2 {
            continue;
        }
        let cols: Vec<usize> = cluster.collect();
        let mut sin_vals = refine_columns(&mut vectors, &cols, &sin_part)?;
        // Pairs that agree in both cosine and sine to within the cluster
        // tolerance are separated again by the cosine part in their subspace.
        let mut order: Vec<usize> = (0..cols.len()).collect();
        order.sort_by(|&a, &b| sin_vals[a].total_cmp(&sin_vals[b]));
        let sorted: Vec<usize> = order.iter().map(|&i| cols[i]).collect();
        sin_vals.sort_by(f64::total_cmp);
        for sub in clusters(&sin_vals, PHASE_CLUSTER_TOL) {
            if sub.len() > 1 {
                let sub_cols: Vec<usize> = sorted[sub].to_vec();
                refine_columns(&mut vectors, &sub_cols, &cos_part)?;
            }
        }
    }

    let mut phases: Vec<f64> = (0..n)
        .map(|c| {
            let v = vectors.column(c);
            let z = u.expectation(&v, &v);
            libm::atan2(z.im, z.re)
        })
        .collect();
    sort_columns(&mut phases, &mut vectors);
    for cluster in clusters(&phases, DEGENERACY_TOL) {
        if cluster.len() > 1 {
            let cols: Vec<usize> = cluster.collect();
            gram_schmidt_columns(&mut vectors, &cols);
        }
    }
    Ok(UnitarySpectrum { phases, vectors })
}

/// `V diag(f(lambda)) V†` for Hermitian `m`. `f` returns `None` where it is
/// undefined, which surfaces as [`LinalgError::DomainError`].
pub fn matrix_function_hermitian(
    m: &ComplexMatrix,
    f: impl Fn(f64) -> Option<Complex64>,
) -> Result<ComplexMatrix, LinalgError> {
    let eig = hermitian_eig(m, DEFAULT_TOL)?;
    let mut weights = Vec::with_capacity(eig.values.len());
    for &l in &eig.values {
        weights.push(f(l).ok_or(LinalgError::DomainError { eigenvalue: l })?);
    }
    let mut idx = 0;
    Ok(eig.reconstruct_with(|_| {
        let w = weights[idx];
        idx += 1;
        w
    }))
}

/// `exp(-i theta M)` for Hermitian `M`.
pub fn exp_i_hermitian(m: &ComplexMatrix, theta: f64) -> Result<ComplexMatrix, LinalgError> {
    matrix_function_hermitian(m, |l| Some(Complex64::from_polar(1.0, -theta * l)))
}

/// Principal square root of a positive semidefinite matrix. Eigenvalues in
/// `[-clamp, 0)` are treated as zero; anything more negative is an error.
pub fn psd_sqrt(m: &ComplexMatrix, clamp: f64) -> Result<ComplexMatrix, LinalgError> {
    matrix_function_hermitian(m, |l| {
        if l >= 0.0 {
            Some(Complex64::new(libm::sqrt(l), 0.0))
        } else if l >= -clamp {
            Some(Complex64::new(0.0, 0.0))
        } else {
            None
        }
    })
}
