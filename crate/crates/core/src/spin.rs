//! Spin-j angular momentum operators and SU(2) coherent states.
//!
//! Basis ordering is `m` descending everywhere: index `i` holds `|j, j - i>`.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{kron_vec, ComplexMatrix};
use crate::state::{Bipartition, DensityMatrix};

/// Spin quantum number stored as `2j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Spin(u32);

impl Spin {
    pub const ONE: Spin = Spin(2);

    pub fn new(j: f64) -> Result<Self> {
        let doubled = 2.0 * j;
        if !doubled.is_finite() || doubled < 1.0 || libm::fabs(doubled - libm::round(doubled)) > 1e-12 {
            return Err(Error::InvalidSpin(j));
        }
        Ok(Spin(libm::round(doubled) as u32))
    }

    pub fn from_doubled(doubled: u32) -> Result<Self> {
        if doubled == 0 {
            return Err(Error::InvalidSpin(0.0));
        }
        Ok(Spin(doubled))
    }

    #[inline]
    pub fn doubled(self) -> u32 {
        self.0
    }

    #[inline]
    pub fn j(self) -> f64 {
        f64::from(self.0) / 2.0
    }

    /// `2j + 1`
    #[inline]
    pub fn dim(self) -> usize {
        self.0 as usize + 1
    }

    pub fn is_integer(self) -> bool {
        self.0.is_multiple_of(2)
    }

    /// `m` values in basis order: `j, j-1, ..., -j`.
    pub fn m_values(self) -> Vec<f64> {
        let j = self.j();
        (0..self.dim()).map(|i| j - i as f64).collect()
    }
}

impl Default for Spin {
    fn default() -> Self {
        Spin::ONE
    }
}

/// `Jx`, `Jy`, `Jz` for one spin.
#[derive(Clone, Debug)]
pub struct SpinOperators {
    pub spin: Spin,
    pub jx: ComplexMatrix,
    pub jy: ComplexMatrix,
    pub jz: ComplexMatrix,
}

impl SpinOperators {
    pub fn new(spin: Spin) -> Self {
        let j = spin.j();
        let m = spin.m_values();
        let n = spin.dim();
        let mut raise = ComplexMatrix::zeros(n);
        for i in 1..n {
            let mm = m[i];
            raise[(i - 1, i)] = Complex64::new(libm::sqrt(j * (j + 1.0) - mm * (mm + 1.0)), 0.0);
        }
        let lower = raise.adjoint();
        let jx = (&raise + &lower).scale(Complex64::new(0.5, 0.0));
        let jy = (&raise - &lower).scale(Complex64::new(0.0, -0.5));
        let jz = ComplexMatrix::from_real_diagonal(&m);
        Self { spin, jx, jy, jz }
    }

    pub fn dim(&self) -> usize {
        self.spin.dim()
    }

    /// `Jx^2 + Jy^2 + Jz^2`
    pub fn casimir(&self) -> ComplexMatrix {
        let sq = |a: &ComplexMatrix| a * a;
        &(&sq(&self.jx) + &sq(&self.jy)) + &sq(&self.jz)
    }
}

/// Spin operators for `j` given as a number (`0.5`, `1.0`, ...).
pub fn build_spin_operators(j: f64) -> Result<SpinOperators> {
    Ok(SpinOperators::new(Spin::new(j)?))
}

/// Coherent-state label `gamma = e^{i phi} tan(theta / 2)`.
///
/// `theta = pi` maps to the explicit `SouthPole` variant, the state `|j, -j>`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CoherentParam {
    Finite(Complex64),
    SouthPole,
}

impl CoherentParam {
    pub fn real(gamma: f64) -> Self {
        CoherentParam::Finite(Complex64::new(gamma, 0.0))
    }

    pub fn from_gamma(gamma: Complex64) -> Self {
        CoherentParam::Finite(gamma)
    }

    pub fn from_angles(theta: f64, phi: f64) -> Self {
        if theta == core::f64::consts::PI {
            CoherentParam::SouthPole
        } else {
            CoherentParam::Finite(Complex64::from_polar(libm::tan(theta / 2.0), phi))
        }
    }

    /// `(e^{i phi} sin(theta/2), cos(theta/2))`, the normalized pair the
    /// amplitudes are built from. Stable for large `|gamma|`.
    fn half_angle_pair(self) -> (Complex64, f64) {
        match self {
            CoherentParam::Finite(g) => {
                let h = libm::hypot(1.0, g.norm());
                (g / h, 1.0 / h)
            }
            CoherentParam::SouthPole => (Complex64::new(1.0, 0.0), 0.0),
        }
    }

    pub fn is_finite(self) -> bool {
        match self {
            CoherentParam::Finite(g) => g.re.is_finite() && g.im.is_finite(),
            CoherentParam::SouthPole => true,
        }
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}

/// Amplitudes of `|gamma>` on `|j, m>`, proportional to
/// `gamma^{j-m} sqrt(C(2j, j+m))` with normalization `(1 + |gamma|^2)^{-j}`.
pub fn coherent_state(spin: Spin, gamma: CoherentParam) -> Vec<Complex64> {
    let two_j = spin.doubled();
    let (u, w) = gamma.half_angle_pair();
    (0..=two_j)
        .map(|n| {
            // n = j - m
            let weight = libm::sqrt(binomial(two_j, n)) * libm::pow(w, f64::from(two_j - n));
            u.powu(n) * weight
        })
        .collect()
}

/// Closed-form `<gamma1|gamma2>`.
pub fn coherent_overlap(spin: Spin, gamma1: CoherentParam, gamma2: CoherentParam) -> Complex64 {
    let (u1, w1) = gamma1.half_angle_pair();
    let (u2, w2) = gamma2.half_angle_pair();
    // (1 + g1* g2)^{2j} / ((1+|g1|^2)^j (1+|g2|^2)^j) in half-angle form.
    (u1.conj() * u2 + w1 * w2).powu(spin.doubled())
}

/// `|gamma1> (x) |gamma2>`
pub fn product_state(spin: Spin, gamma1: CoherentParam, gamma2: CoherentParam) -> Vec<Complex64> {
    kron_vec(&coherent_state(spin, gamma1), &coherent_state(spin, gamma2))
}

/// `p |psi+><psi+| + (1-p) |psi-><psi-|` with `|psi+> = |g1>|g2>` and
/// `|psi-> = |g2>|g1>`.
pub fn initial_density(
    spin: Spin,
    gamma1: CoherentParam,
    gamma2: CoherentParam,
    p: f64,
) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidProbability(p));
    }
    let plus = product_state(spin, gamma1, gamma2);
    let minus = product_state(spin, gamma2, gamma1);
    let rho = &ComplexMatrix::outer(&plus, &plus).scale(Complex64::new(p, 0.0))
        + &ComplexMatrix::outer(&minus, &minus).scale(Complex64::new(1.0 - p, 0.0));
    DensityMatrix::new(rho, Bipartition::symmetric(spin.dim()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{inner, swap_matrix, vector_norm};

    #[test]
    fn rejects_bad_spin() {
        assert!(Spin::new(0.0).is_err());
        assert!(Spin::new(-1.0).is_err());
        assert!(Spin::new(0.75).is_err());
        assert_eq!(Spin::new(1.5).unwrap().dim(), 4);
    }

    #[test]
    fn spin_half_is_half_pauli() {
        let ops = build_spin_operators(0.5).unwrap();
        let h = Complex64::new(0.5, 0.0);
        assert_eq!(ops.jz, ComplexMatrix::from_real_diagonal(&[0.5, -0.5]));
        assert!((ops.jx[(0, 1)] - h).norm() < 1e-15 && (ops.jx[(1, 0)] - h).norm() < 1e-15);
        assert!((ops.jy[(0, 1)] - Complex64::new(0.0, -0.5)).norm() < 1e-15);
        assert!((ops.jy[(1, 0)] - Complex64::new(0.0, 0.5)).norm() < 1e-15);
    }

    #[test]
    fn spin_one_jz() {
        let ops = SpinOperators::new(Spin::ONE);
        assert_eq!(ops.jz, ComplexMatrix::from_real_diagonal(&[1.0, 0.0, -1.0]));
    }

    #[test]
    fn commutation_relations_hold() {
        let i = Complex64::new(0.0, 1.0);
        for doubled in 1..=8 {
            let ops = SpinOperators::new(Spin::from_doubled(doubled).unwrap());
            assert!(ops.jx.commutator(&ops.jy).max_abs_diff(&ops.jz.scale(i)) < 1e-12);
            assert!(ops.jy.commutator(&ops.jz).max_abs_diff(&ops.jx.scale(i)) < 1e-12);
            assert!(ops.jz.commutator(&ops.jx).max_abs_diff(&ops.jy.scale(i)) < 1e-12);
            let j = ops.spin.j();
            let expected = ComplexMatrix::identity(ops.dim()).scale(Complex64::new(j * (j + 1.0), 0.0));
            assert!(ops.casimir().max_abs_diff(&expected) < 1e-12);
        }
    }

    #[test]
    fn gamma_zero_is_top_state() {
        let v = coherent_state(Spin::ONE, CoherentParam::real(0.0));
        assert_eq!(v, alloc::vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)]);
    }

    #[test]
    fn south_pole_is_bottom_state() {
        let v = coherent_state(Spin::ONE, CoherentParam::from_angles(core::f64::consts::PI, 0.3));
        assert_eq!(v[2], Complex64::new(1.0, 0.0));
        assert_eq!(v[0].norm() + v[1].norm(), 0.0);
    }

    #[test]
    fn gamma_three_amplitudes() {
        let v = coherent_state(Spin::ONE, CoherentParam::real(3.0));
        let expected = [0.1, 0.3 * core::f64::consts::SQRT_2, 0.9];
        for (a, e) in v.iter().zip(expected) {
            assert!((a - Complex64::new(e, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn opposite_gamma_overlap() {
        let a = coherent_state(Spin::ONE, CoherentParam::real(-3.0));
        let b = coherent_state(Spin::ONE, CoherentParam::real(3.0));
        let direct = inner(&a, &b);
        assert!((direct - Complex64::new(0.64, 0.0)).norm() < 1e-15);
        let closed = coherent_overlap(Spin::ONE, CoherentParam::real(-3.0), CoherentParam::real(3.0));
        assert!((closed - direct).norm() < 1e-15);
    }

    #[test]
    fn pure_limit_has_unit_purity() {
        let rho = initial_density(Spin::ONE, CoherentParam::real(-3.0), CoherentParam::real(3.0), 0.0).unwrap();
        assert!((rho.purity() - 1.0).abs() < 1e-12);
        let minus = product_state(Spin::ONE, CoherentParam::real(3.0), CoherentParam::real(-3.0));
        assert!((rho.matrix().expectation(&minus, &minus).re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_mixture_purity_half() {
        let rho = initial_density(Spin::ONE, CoherentParam::real(1.0), CoherentParam::real(-1.0), 0.5).unwrap();
        assert!((rho.purity() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn overlapping_mixture_purity() {
        // Independent route: purity of an equal mixture of two pure states
        // with overlap c is (1 + |c|^2) / 2.
        let rho = initial_density(Spin::ONE, CoherentParam::real(-3.0), CoherentParam::real(3.0), 0.5).unwrap();
        let plus = product_state(Spin::ONE, CoherentParam::real(-3.0), CoherentParam::real(3.0));
        let minus = product_state(Spin::ONE, CoherentParam::real(3.0), CoherentParam::real(-3.0));
        let c = inner(&plus, &minus).norm();
        assert!((c - 0.4096).abs() < 1e-14);
        assert!((rho.purity() - 0.5 * (1.0 + c * c)).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_probability() {
        let g = CoherentParam::real(1.0);
        assert_eq!(initial_density(Spin::ONE, g, g, 1.5).unwrap_err(), Error::InvalidProbability(1.5));
        assert!(initial_density(Spin::ONE, g, g, -0.1).is_err());
    }

    #[test]
    fn equal_mixture_is_exchange_symmetric() {
        let rho = initial_density(Spin::ONE, CoherentParam::real(-3.0), CoherentParam::from_angles(0.89, 0.63), 0.5)
            .unwrap();
        let swap = swap_matrix(3);
        let swapped = rho.matrix().conjugate_by(&swap);
        assert_eq!(&swapped, rho.matrix());
    }

    #[test]
    fn large_gamma_stays_normalized() {
        let v = coherent_state(Spin::new(20.0).unwrap(), CoherentParam::real(1e200));
        assert!((vector_norm(&v) - 1.0).abs() < 1e-12);
    }
}
