//! One-period propagator of the coupled kicked tops, density-matrix stepping
//! and the exchange-parity spectral decomposition.
//!
//! A period is a rotation `R = exp(-i pi/2 (Jy (x) 1 + 1 (x) Jy))` followed by
//! the kick `K`, which is diagonal in the product `Jz` basis:
//!
//! ```text
//! K(m1, m2) = exp(-i [ k/(2j) (m1^2 + m2^2) + (eps/j) m1 m2 ])
//! ```
//!
//! With `Im k > 0` the kick amplifies the `|m| = j` components and `U = K R` is
//! no longer unitary; stepping then renormalizes the trace after every kick.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{
    exp_i_hermitian, inner, kron, unitary_eigenphases, ComplexMatrix, DEFAULT_TOL,
};
use crate::spin::{Spin, SpinOperators};
use crate::state::DensityMatrix;

/// States whose trace falls below this cannot be renormalized.
pub const TRACE_FLOOR: f64 = 1e-300;

/// Parameters of two identical coupled tops.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TopParams {
    pub spin: Spin,
    /// Kick strength `Re k`.
    pub k_re: f64,
    /// Amplification `Im k`, never negative.
    pub k_im: f64,
    /// Coupling `eps`; the coupling term carries `eps / j`.
    pub epsilon: f64,
}

impl TopParams {
    pub fn new(spin: Spin, k_re: f64, k_im: f64, epsilon: f64) -> Result<Self> {
        let p = Self { spin, k_re, k_im, epsilon };
        p.validate()?;
        Ok(p)
    }

    /// Unitary tops (`Im k = 0`).
    pub fn hermitian(spin: Spin, k: f64, epsilon: f64) -> Result<Self> {
        Self::new(spin, k, 0.0, epsilon)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k_re.is_finite() && self.k_im.is_finite() && self.epsilon.is_finite()) {
            return Err(Error::InvalidParams("non-finite parameter"));
        }
        if self.k_im < 0.0 {
            return Err(Error::InvalidParams("Im k must be non-negative"));
        }
        Ok(())
    }

    pub fn is_unitary(&self) -> bool {
        self.k_im == 0.0
    }

    pub fn dim(&self) -> usize {
        self.spin.dim() * self.spin.dim()
    }
}

/// Diagonal of the kick in the product basis, index `a * d + b` for
/// `(m1, m2) = (m_a, m_b)`.
pub fn kick_diagonal(params: &TopParams) -> Vec<Complex64> {
    let j = params.spin.j();
    let m = params.spin.m_values();
    let mut diag = Vec::with_capacity(m.len() * m.len());
    for &m1 in &m {
        for &m2 in &m {
            let s = m1 * m1 + m2 * m2;
            // -i * (k_re + i k_im) s/(2j) contributes growth k_im s/(2j).
            let growth = params.k_im * s / (2.0 * j);
            let phase = -(params.k_re * s / (2.0 * j) + params.epsilon * m1 * m2 / j);
            diag.push(Complex64::from_polar(libm::exp(growth), phase));
        }
    }
    diag
}

/// Builds Floquet operators for one spin, reusing the k- and eps-independent
/// rotation across parameter sets.
#[derive(Clone, Debug)]
pub struct FloquetBuilder {
    spin: Spin,
    rotation: ComplexMatrix,
}

impl FloquetBuilder {
    pub fn new(spin: Spin) -> Result<Self> {
        let ops = SpinOperators::new(spin);
        let id = ComplexMatrix::identity(spin.dim());
        let jy_total = &kron(&ops.jy, &id) + &kron(&id, &ops.jy);
        let rotation = exp_i_hermitian(&jy_total, FRAC_PI_2)?;
        Ok(Self { spin, rotation })
    }

    pub fn spin(&self) -> Spin {
        self.spin
    }

    pub fn rotation(&self) -> &ComplexMatrix {
        &self.rotation
    }

    pub fn build(&self, params: TopParams) -> Result<FloquetOperator> {
        params.validate()?;
        if params.spin != self.spin {
            return Err(Error::DimensionMismatch {
                expected: self.spin.dim(),
                found: params.spin.dim(),
            });
        }
        let kick = kick_diagonal(&params);
        let n = self.rotation.dim();
        let u = ComplexMatrix::from_fn(n, |r, c| kick[r] * self.rotation[(r, c)]);
        Ok(FloquetOperator {
            u,
            params,
            is_unitary: params.is_unitary(),
        })
    }
}

/// One-period propagator `U = K R`.
#[derive(Clone, Debug)]
pub struct FloquetOperator {
    u: ComplexMatrix,
    params: TopParams,
    is_unitary: bool,
}

impl FloquetOperator {
    pub fn matrix(&self) -> &ComplexMatrix {
        &self.u
    }

    pub fn params(&self) -> &TopParams {
        &self.params
    }

    pub fn is_unitary(&self) -> bool {
        self.is_unitary
    }

    pub fn dim(&self) -> usize {
        self.u.dim()
    }
}

pub fn build_floquet(params: TopParams) -> Result<FloquetOperator> {
    FloquetBuilder::new(params.spin)?.build(params)
}

/// Floquet operator of one uncoupled top with unitary kick `k`.
pub fn single_top_floquet(spin: Spin, k: f64) -> Result<ComplexMatrix> {
    let ops = SpinOperators::new(spin);
    let rotation = exp_i_hermitian(&ops.jy, FRAC_PI_2)?;
    let j = spin.j();
    let m = spin.m_values();
    Ok(ComplexMatrix::from_fn(spin.dim(), |r, c| {
        Complex64::from_polar(1.0, -k * m[r] * m[r] / (2.0 * j)) * rotation[(r, c)]
    }))
}

/// `Jz^2 (x) 1 + 1 (x) Jz^2`
pub fn collective_jz_squared(spin: Spin) -> ComplexMatrix {
    let ops = SpinOperators::new(spin);
    let id = ComplexMatrix::identity(spin.dim());
    let jz2 = &ops.jz * &ops.jz;
    &kron(&jz2, &id) + &kron(&id, &jz2)
}

/// `Jz (x) Jz`
pub fn jz_jz(spin: Spin) -> ComplexMatrix {
    let ops = SpinOperators::new(spin);
    kron(&ops.jz, &ops.jz)
}

/// Stroboscopic stepping `rho -> U rho U†` (renormalized when requested).
///
/// Yields `rho(1), rho(2), ...`; never ends on its own.
#[derive(Clone, Debug)]
pub struct Evolution {
    u: ComplexMatrix,
    u_dag: ComplexMatrix,
    current: DensityMatrix,
    renormalize: bool,
    step: usize,
}

impl Evolution {
    pub fn new(rho: DensityMatrix, floquet: &FloquetOperator, renormalize: bool) -> Result<Self> {
        if rho.dim() != floquet.dim() {
            return Err(Error::DimensionMismatch {
                expected: floquet.dim(),
                found: rho.dim(),
            });
        }
        if !floquet.is_unitary() && !renormalize {
            return Err(Error::RenormalizationRequired);
        }
        let u = floquet.matrix().clone();
        let u_dag = u.adjoint();
        Ok(Self {
            u,
            u_dag,
            current: rho,
            renormalize,
            step: 0,
        })
    }

    pub fn current(&self) -> &DensityMatrix {
        &self.current
    }

    pub fn step_count(&self) -> usize {
        self.step
    }

    pub fn advance(&mut self) -> Result<&DensityMatrix> {
        let next = &(&self.u * self.current.matrix()) * &self.u_dag;
        let trace = next.trace().re;
        self.step += 1;
        let next = if self.renormalize {
            if !(trace >= TRACE_FLOOR) {
                return Err(Error::TraceCollapse { step: self.step, trace });
            }
            next.scale(Complex64::new(1.0 / trace, 0.0))
        } else {
            next
        };
        self.current = DensityMatrix::from_parts_unchecked(next.hermitian_part(), self.current.bipartition());
        Ok(&self.current)
    }
}

impl Iterator for Evolution {
    type Item = Result<DensityMatrix>;

    fn next(&mut self) -> Option<Self::Item> {
        Some(self.advance().cloned())
    }
}

/// `rho(0), rho(1), ..., rho(n_steps)`.
pub fn evolve(
    rho: DensityMatrix,
    floquet: &FloquetOperator,
    n_steps: usize,
    renormalize: bool,
) -> Result<Vec<DensityMatrix>> {
    let mut out = Vec::with_capacity(n_steps + 1);
    out.push(rho.clone());
    let mut evo = Evolution::new(rho, floquet, renormalize)?;
    for _ in 0..n_steps {
        out.push(evo.advance()?.clone());
    }
    Ok(out)
}

/// Orthonormal bases of the symmetric and antisymmetric subspaces of two
/// `d`-level factors, as column lists.
fn parity_bases(d: usize) -> (Vec<Vec<Complex64>>, Vec<Vec<Complex64>>) {
    let n = d * d;
    let mut even = Vec::with_capacity(d * (d + 1) / 2);
    let mut odd = Vec::with_capacity(d * (d - 1) / 2);
    for a in 0..d {
        for b in a..d {
            let mut e = alloc::vec![Complex64::new(0.0, 0.0); n];
            if a == b {
                e[a * d + a] = Complex64::new(1.0, 0.0);
                even.push(e);
            } else {
                let mut o = e.clone();
                e[a * d + b] = Complex64::new(FRAC_1_SQRT_2, 0.0);
                e[b * d + a] = Complex64::new(FRAC_1_SQRT_2, 0.0);
                o[a * d + b] = Complex64::new(FRAC_1_SQRT_2, 0.0);
                o[b * d + a] = Complex64::new(-FRAC_1_SQRT_2, 0.0);
                even.push(e);
                odd.push(o);
            }
        }
    }
    (even, odd)
}

/// Floquet eigenphases and eigenstates inside one parity sector.
#[derive(Clone, Debug)]
pub struct ParitySector {
    pub phases: Vec<f64>,
    pub states: Vec<Vec<Complex64>>,
}

fn diagonalize_sector(u: &ComplexMatrix, basis: &[Vec<Complex64>]) -> Result<ParitySector> {
    let k = basis.len();
    let images: Vec<Vec<Complex64>> = basis.iter().map(|b| u.apply(b)).collect();
    let restricted = ComplexMatrix::from_fn(k, |r, c| inner(&basis[r], &images[c]));
    let spectrum = unitary_eigenphases(&restricted, DEFAULT_TOL)?;
    let states = (0..k)
        .map(|i| {
            let w = spectrum.vectors.column(i);
            let mut v = alloc::vec![Complex64::new(0.0, 0.0); u.dim()];
            for (coef, b) in w.iter().zip(basis) {
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi += coef * bi;
                }
            }
            v
        })
        .collect();
    Ok(ParitySector {
        phases: spectrum.phases,
        states,
    })
}

/// Floquet spectrum split by exchange parity, with the expansion
/// coefficients of a product initial state.
///
/// For `|psi+> = |g1>|g2>` and `|psi-> = SWAP |psi+>`:
/// `|psi-> = sum a_i |e_i> + sum b_i |o_i>` and
/// `|psi+> = sum a_i |e_i> - sum b_i |o_i>`.
#[derive(Clone, Debug)]
pub struct ParityDecomposition {
    pub even: ParitySector,
    pub odd: ParitySector,
    /// `a_i = <e_i|psi->`
    pub even_coefficients: Vec<Complex64>,
    /// `b_i = <o_i|psi->`
    pub odd_coefficients: Vec<Complex64>,
}

impl ParityDecomposition {
    fn superpose(&self, n: u64, odd_sign: f64) -> Vec<Complex64> {
        let dim = self.even.states[0].len();
        let mut out = alloc::vec![Complex64::new(0.0, 0.0); dim];
        let mut add = |coef: Complex64, phase: f64, state: &[Complex64]| {
            let w = coef * Complex64::from_polar(1.0, n as f64 * phase);
            for (o, s) in out.iter_mut().zip(state) {
                *o += w * s;
            }
        };
        for ((a, &phi), e) in self.even_coefficients.iter().zip(&self.even.phases).zip(&self.even.states) {
            add(*a, phi, e);
        }
        for ((b, &phi), o) in self.odd_coefficients.iter().zip(&self.odd.phases).zip(&self.odd.states) {
            add(*b * odd_sign, phi, o);
        }
        out
    }

    /// `U^n |psi->` from the eigenphases.
    pub fn evolved_minus(&self, n: u64) -> Vec<Complex64> {
        self.superpose(n, 1.0)
    }

    /// `U^n |psi+>` from the eigenphases.
    pub fn evolved_plus(&self, n: u64) -> Vec<Complex64> {
        self.superpose(n, -1.0)
    }

    /// `p |psi+(n)><psi+(n)| + (1-p) |psi-(n)><psi-(n)|`.
    pub fn density_at(&self, n: u64, p: f64) -> ComplexMatrix {
        let plus = self.evolved_plus(n);
        let minus = self.evolved_minus(n);
        &ComplexMatrix::outer(&plus, &plus).scale(Complex64::new(p, 0.0))
            + &ComplexMatrix::outer(&minus, &minus).scale(Complex64::new(1.0 - p, 0.0))
    }

    /// The equal mixture written as two parity blocks with no cross terms:
    /// `sum a_i a_l* e^{in(phi_i - phi_l)} |e_i><e_l| + (same for odd)`.
    pub fn equal_mixture_at(&self, n: u64) -> ComplexMatrix {
        let block = |coefs: &[Complex64], sector: &ParitySector| {
            let amps: Vec<Complex64> = coefs
                .iter()
                .zip(&sector.phases)
                .map(|(c, &phi)| c * Complex64::from_polar(1.0, n as f64 * phi))
                .collect();
            let dim = sector.states.first().map_or(0, |s| s.len());
            let mut proj = alloc::vec![Complex64::new(0.0, 0.0); dim];
            for (a, s) in amps.iter().zip(&sector.states) {
                for (p, x) in proj.iter_mut().zip(s) {
                    *p += a * x;
                }
            }
            proj
        };
        let even = block(&self.even_coefficients, &self.even);
        let mut total = ComplexMatrix::outer(&even, &even);
        if !self.odd.states.is_empty() {
            let odd = block(&self.odd_coefficients, &self.odd);
            total = &total + &ComplexMatrix::outer(&odd, &odd);
        }
        total
    }

    pub fn norm_squared(&self) -> f64 {
        self.even_coefficients
            .iter()
            .chain(&self.odd_coefficients)
            .map(|c| c.norm_sqr())
            .sum()
    }
}

/// Splits a unitary Floquet operator by exchange parity and expands the
/// product state `psi_plus` and its swapped partner in the eigenstates.
pub fn parity_decompose(floquet: &FloquetOperator, psi_plus: &[Complex64]) -> Result<ParityDecomposition> {
    if !floquet.is_unitary() {
        return Err(Error::NotUnitary {
            k_im: floquet.params().k_im,
        });
    }
    let d = floquet.params().spin.dim();
    if psi_plus.len() != d * d {
        return Err(Error::DimensionMismatch {
            expected: d * d,
            found: psi_plus.len(),
        });
    }
    let (even_basis, odd_basis) = parity_bases(d);
    let u = floquet.matrix();
    let even = diagonalize_sector(u, &even_basis)?;
    let odd = diagonalize_sector(u, &odd_basis)?;

    let mut psi_minus = alloc::vec![Complex64::new(0.0, 0.0); d * d];
    for a in 0..d {
        for b in 0..d {
            psi_minus[b * d + a] = psi_plus[a * d + b];
        }
    }
    let even_coefficients = even.states.iter().map(|e| inner(e, &psi_minus)).collect();
    let odd_coefficients = odd.states.iter().map(|o| inner(o, &psi_minus)).collect();
    Ok(ParityDecomposition {
        even,
        odd,
        even_coefficients,
        odd_coefficients,
    })
}
