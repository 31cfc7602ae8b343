//! Angular-momentum coupling algebra for the cesium ground state.
//!
//! Quantum numbers are carried as [`HalfInt`] (twice the value) and all
//! coupling coefficients are evaluated with exact rational arithmetic before
//! the final conversion to `f64`.

use std::fmt;
use std::ops::{Add, Neg, Range, Sub};

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

pub type C64 = Complex64;

/// Nuclear spin of 133Cs.
pub const NUCLEAR_SPIN: HalfInt = HalfInt::from_twice(7);
/// Electron spin of the valence electron.
pub const ELECTRON_SPIN: HalfInt = HalfInt::from_twice(1);
/// Total electronic angular momentum of both D1 levels (6S1/2 and 6P1/2).
pub const J_D1: HalfInt = HalfInt::from_twice(1);
/// The two ground-state hyperfine manifolds, in basis order.
pub const GROUND_MANIFOLDS: [HalfInt; 2] = [HalfInt::from_int(3), HalfInt::from_int(4)];
/// Excited 6P1/2 hyperfine manifolds reached on the D1 line.
pub const EXCITED_MANIFOLDS: [HalfInt; 2] = [HalfInt::from_int(3), HalfInt::from_int(4)];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AngularError {
    #[error("angular momentum must be non-negative, got {0}")]
    NegativeSpin(HalfInt),
    #[error("hyperfine manifold {0} is not one of f = 3, 4")]
    InvalidManifold(HalfInt),
}

/// An integer or half-integer quantum number stored as twice its value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct HalfInt(i32);

impl HalfInt {
    pub const fn from_twice(twice: i32) -> Self {
        HalfInt(twice)
    }

    pub const fn from_int(n: i32) -> Self {
        HalfInt(2 * n)
    }

    /// Parses a float that is an exact multiple of 1/2.
    pub fn from_f64(x: f64) -> Option<Self> {
        let twice = 2.0 * x;
        if twice.is_finite() && (twice - twice.round()).abs() < 1e-9 {
            Some(HalfInt(twice.round() as i32))
        } else {
            None
        }
    }

    pub const fn twice(self) -> i32 {
        self.0
    }

    pub fn value(self) -> f64 {
        f64::from(self.0) / 2.0
    }

    pub const fn is_integer(self) -> bool {
        self.0 % 2 == 0
    }

    /// Number of magnetic sublevels, 2j + 1.
    pub fn multiplicity(self) -> usize {
        debug_assert!(self.0 >= 0);
        (self.0 + 1) as usize
    }

    /// Magnetic quantum numbers j, j-1, ..., -j.
    pub fn projections_desc(self) -> impl Iterator<Item = HalfInt> {
        let j = self.0;
        (0..=j.max(-1))
            .take_while(move |_| j >= 0)
            .map(move |k| HalfInt(j - 2 * k))
    }

    /// Magnetic quantum numbers -j, ..., j.
    pub fn projections_asc(self) -> impl Iterator<Item = HalfInt> {
        let j = self.0;
        (0..=j.max(-1))
            .take_while(move |_| j >= 0)
            .map(move |k| HalfInt(-j + 2 * k))
    }

    /// j(j+1)
    pub fn casimir(self) -> f64 {
        let j = self.value();
        j * (j + 1.0)
    }

    /// True when `m` is an allowed projection of `self`.
    pub fn admits(self, m: HalfInt) -> bool {
        self.0 >= 0 && m.0.abs() <= self.0 && (self.0 - m.0) % 2 == 0
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

impl Add for HalfInt {
    type Output = HalfInt;
    fn add(self, rhs: HalfInt) -> HalfInt {
        HalfInt(self.0 + rhs.0)
    }
}

impl Sub for HalfInt {
    type Output = HalfInt;
    fn sub(self, rhs: HalfInt) -> HalfInt {
        HalfInt(self.0 - rhs.0)
    }
}

impl Neg for HalfInt {
    type Output = HalfInt;
    fn neg(self) -> HalfInt {
        HalfInt(-self.0)
    }
}

// ---------------------------------------------------------------------------
// exact arithmetic helpers

fn factorial(n: u32) -> BigInt {
    (2..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

/// `(sum of twice-values) / 2` as a non-negative integer, if it is one.
fn half_nonneg(twice: i32) -> Option<u32> {
    (twice >= 0 && twice % 2 == 0).then_some((twice / 2) as u32)
}

fn fact_of(twice: i32) -> Option<BigInt> {
    half_nonneg(twice).map(factorial)
}

fn triangle(a: HalfInt, b: HalfInt, c: HalfInt) -> bool {
    let (a, b, c) = (a.0, b.0, c.0);
    a >= 0 && b >= 0 && c >= 0 && c <= a + b && c >= (a - b).abs() && (a + b + c) % 2 == 0
}

/// Squared triangle coefficient (a+b-c)!(a-b+c)!(-a+b+c)!/(a+b+c+1)!.
fn triangle_coeff_sq(a: HalfInt, b: HalfInt, c: HalfInt) -> BigRational {
    let num = fact_of(a.0 + b.0 - c.0).unwrap()
        * fact_of(a.0 - b.0 + c.0).unwrap()
        * fact_of(-a.0 + b.0 + c.0).unwrap();
    let den = fact_of(a.0 + b.0 + c.0 + 2).unwrap();
    BigRational::new(num, den)
}

/// Converts `sign(s) * sqrt(radicand * s^2)` to f64 with a single rounding.
fn signed_sqrt_product(radicand: &BigRational, sum: &BigRational) -> f64 {
    if sum.is_zero() {
        return 0.0;
    }
    let mag = (radicand * sum * sum).to_f64().unwrap_or(f64::NAN).sqrt();
    if sum.is_negative() {
        -mag
    } else {
        mag
    }
}

fn parity_sign(twice_exponent: i32) -> f64 {
    debug_assert!(twice_exponent % 2 == 0);
    if (twice_exponent / 2).rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Clebsch–Gordan coefficient ⟨J M | j1 m1; j2 m2⟩ (Condon–Shortley phases).
///
/// Returns 0 for any violated selection rule: M ≠ m1 + m2, a failed triangle
/// condition, or a projection outside its multiplet.
pub fn clebsch_gordan(
    j1: HalfInt,
    m1: HalfInt,
    j2: HalfInt,
    m2: HalfInt,
    j: HalfInt,
    m: HalfInt,
) -> f64 {
    if !(j1.admits(m1) && j2.admits(m2) && j.admits(m)) {
        return 0.0;
    }
    if m1 + m2 != m || !triangle(j1, j2, j) {
        return 0.0;
    }
    let (j1, m1, j2, m2, j, m) = (j1.0, m1.0, j2.0, m2.0, j.0, m.0);
    let f = |t: i32| fact_of(t).unwrap();

    let radicand = BigRational::new(
        BigInt::from(j + 1)
            * f(j + j1 - j2)
            * f(j - j1 + j2)
            * f(j1 + j2 - j)
            * f(j + m)
            * f(j - m)
            * f(j1 - m1)
            * f(j1 + m1)
            * f(j2 - m2)
            * f(j2 + m2),
        f(j1 + j2 + j + 2),
    );

    // k runs (in twice units) over even values keeping every factorial argument non-negative
    let k_min = 0.max(j2 - j - m1).max(j1 + m2 - j);
    let k_max = (j1 + j2 - j).min(j1 - m1).min(j2 + m2);
    let mut sum = BigRational::zero();
    let mut k = k_min;
    while k <= k_max {
        let den = f(k) * f(j1 + j2 - j - k) * f(j1 - m1 - k) * f(j2 + m2 - k) * f(j - j2 + m1 + k) * f(j - j1 - m2 + k);
        let term = BigRational::new(BigInt::one(), den);
        if (k / 2) % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
        k += 2;
    }
    signed_sqrt_product(&radicand, &sum)
}

/// Wigner 3j symbol obtained from the Clebsch–Gordan coefficient.
pub fn wigner3j(
    j1: HalfInt,
    m1: HalfInt,
    j2: HalfInt,
    m2: HalfInt,
    j3: HalfInt,
    m3: HalfInt,
) -> f64 {
    let cg = clebsch_gordan(j1, m1, j2, m2, j3, -m3);
    if cg == 0.0 {
        return 0.0;
    }
    parity_sign(j1.0 - j2.0 - m3.0) * cg / f64::from(j3.0 + 1).sqrt()
}

/// Wigner 6j symbol {a b c; d e g} by the Racah sum.
pub fn wigner6j(a: HalfInt, b: HalfInt, c: HalfInt, d: HalfInt, e: HalfInt, g: HalfInt) -> f64 {
    if !(triangle(a, b, c) && triangle(a, e, g) && triangle(d, b, g) && triangle(d, e, c)) {
        return 0.0;
    }
    let radicand = triangle_coeff_sq(a, b, c)
        * triangle_coeff_sq(a, e, g)
        * triangle_coeff_sq(d, b, g)
        * triangle_coeff_sq(d, e, c);

    let (a, b, c, d, e, g) = (a.0, b.0, c.0, d.0, e.0, g.0);
    let f = |t: i32| fact_of(t).unwrap();
    let lower = [a + b + c, a + e + g, d + b + g, d + e + c];
    let upper = [a + b + d + e, a + c + d + g, b + c + e + g];
    let t_min = *lower.iter().max().unwrap();
    let t_max = *upper.iter().min().unwrap();

    let mut sum = BigRational::zero();
    let mut t = t_min;
    while t <= t_max {
        let mut den = BigInt::one();
        for &l in &lower {
            den *= f(t - l);
        }
        for &u in &upper {
            den *= f(u - t);
        }
        let term = BigRational::new(f(t + 2), den);
        if (t / 2) % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
        t += 2;
    }
    signed_sqrt_product(&radicand, &sum)
}

fn check_manifold(f: HalfInt) -> Result<(), AngularError> {
    if GROUND_MANIFOLDS.contains(&f) {
        Ok(())
    } else {
        Err(AngularError::InvalidManifold(f))
    }
}

/// Relative hyperfine dipole strength o_{jf}^{j'f'} for the Cs D1 line
/// (j = j' = 1/2, K = 7/2), with the last 6j argument taken as f'.
pub fn o_coeff(f: HalfInt, f_prime: HalfInt) -> Result<f64, AngularError> {
    check_manifold(f)?;
    check_manifold(f_prime)?;
    let (j, jp, k) = (J_D1, J_D1, NUCLEAR_SPIN);
    let phase = parity_sign(f_prime.0 + 2 + jp.0 + k.0);
    let norm = (f64::from((jp.0 + 1) * (f.0 + 1))).sqrt();
    Ok(phase * norm * wigner6j(f, k, jp, j, HalfInt::from_int(1), f_prime))
}

/// Purely geometric part of the rank-2 light-shift coefficient, i.e. C^(2)
/// without the |o|² factor.
pub fn c2_geometric(f_prime: HalfInt, f: HalfInt) -> Result<f64, AngularError> {
    check_manifold(f)?;
    check_manifold(f_prime)?;
    let fv = f.value();
    let phase = parity_sign(3 * f.0 - f_prime.0);
    let denom = (fv * (fv + 1.0) * (2.0 * fv + 1.0) * (2.0 * fv - 1.0) * (2.0 * fv + 3.0)).sqrt();
    let one = HalfInt::from_int(1);
    let sixj = wigner6j(f, one, f_prime, one, f, HalfInt::from_int(2));
    Ok(phase * 30f64.sqrt() * f64::from(f_prime.0 + 1) / denom * sixj)
}

/// Rank-2 (tensor) light-shift coefficient C^(2)_{j'f'f}.
pub fn c2_coeff(f_prime: HalfInt, f: HalfInt) -> Result<f64, AngularError> {
    let o = o_coeff(f, f_prime)?;
    Ok(c2_geometric(f_prime, f)? * o * o)
}

// ---------------------------------------------------------------------------
// spin operators

/// Dimensionless spin matrices of a single multiplet, basis m = f, f-1, ..., -f.
#[derive(Clone, Debug)]
pub struct SpinMatrices {
    pub f: HalfInt,
    pub fx: DMatrix<C64>,
    pub fy: DMatrix<C64>,
    pub fz: DMatrix<C64>,
    pub fsq: DMatrix<C64>,
}

impl SpinMatrices {
    pub fn dim(&self) -> usize {
        self.f.multiplicity()
    }

    pub fn components(&self) -> [&DMatrix<C64>; 3] {
        [&self.fx, &self.fy, &self.fz]
    }
}

/// Builds F_x, F_y, F_z from the ladder operators.
pub fn spin_matrices(f: HalfInt) -> Result<SpinMatrices, AngularError> {
    if f.twice() < 0 {
        return Err(AngularError::NegativeSpin(f));
    }
    let n = f.multiplicity();
    let ms: Vec<f64> = f.projections_desc().map(HalfInt::value).collect();
    let fv = f.value();
    let mut raise = DMatrix::<C64>::zeros(n, n);
    for i in 1..n {
        // |m_i⟩ -> |m_i + 1⟩ = |m_{i-1}⟩
        let m = ms[i];
        raise[(i - 1, i)] = C64::new((fv * (fv + 1.0) - m * (m + 1.0)).sqrt(), 0.0);
    }
    let lower = raise.adjoint();
    let fx = (&raise + &lower) * C64::new(0.5, 0.0);
    let fy = (&raise - &lower) * C64::new(0.0, -0.5);
    let fz = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        n,
        ms.iter().map(|&m| C64::new(m, 0.0)),
    ));
    let fsq = &fx * &fx + &fy * &fy + &fz * &fz;
    Ok(SpinMatrices { f, fx, fy, fz, fsq })
}

/// Kronecker product of two complex matrices.
pub fn kron(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    DMatrix::from_fn(ar * br, ac * bc, |r, c| a[(r / br, c / bc)] * b[(r % br, c % bc)])
}

fn chop(mut m: DMatrix<C64>, tol: f64) -> DMatrix<C64> {
    for z in m.iter_mut() {
        if z.re.abs() < tol {
            z.re = 0.0;
        }
        if z.im.abs() < tol {
            z.im = 0.0;
        }
    }
    m
}

/// The 16-dimensional 6S1/2 ground manifold of cesium in the coupled |f, m⟩
/// basis, ordered (f=3, m=-3..3) then (f=4, m=-4..4).
#[derive(Clone, Debug)]
pub struct CoupledSpace {
    pub nuclear: HalfInt,
    pub electron: HalfInt,
    pub dim: usize,
    pub basis: Vec<(HalfInt, HalfInt)>,
    /// Rows: coupled states; columns: product states |m_K⟩⊗|m_s⟩ with both
    /// projections descending.
    pub cg_matrix: DMatrix<f64>,
    pub k: [DMatrix<C64>; 3],
    pub s: [DMatrix<C64>; 3],
    pub f: [DMatrix<C64>; 3],
    /// K·S, diagonal in the coupled basis.
    pub k_dot_s: DMatrix<C64>,
}

impl CoupledSpace {
    /// Index range of the hyperfine manifold `f` within the coupled basis.
    pub fn block(&self, f: HalfInt) -> Range<usize> {
        let mut start = 0;
        for &g in &GROUND_MANIFOLDS {
            let len = g.multiplicity();
            if g == f {
                return start..start + len;
            }
            start += len;
        }
        panic!("no manifold {f} in the cesium ground state")
    }

    pub fn index_of(&self, f: HalfInt, m: HalfInt) -> Option<usize> {
        self.basis.iter().position(|&(g, mm)| g == f && mm == m)
    }

    /// Projector onto the manifold `f`.
    pub fn projector(&self, f: HalfInt) -> DMatrix<C64> {
        let r = self.block(f);
        DMatrix::from_fn(self.dim, self.dim, |i, j| {
            if i == j && r.contains(&i) {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    /// Expresses a product-basis operator in the coupled basis.
    pub fn to_coupled(&self, op: &DMatrix<C64>) -> DMatrix<C64> {
        let u = self.cg_matrix.map(|x| C64::new(x, 0.0));
        &u * op * u.transpose()
    }

    pub fn to_product(&self, op: &DMatrix<C64>) -> DMatrix<C64> {
        let u = self.cg_matrix.map(|x| C64::new(x, 0.0));
        u.transpose() * op * &u
    }
}

/// Builds the coupled cesium ground space and its spin operators.
pub fn coupled_space() -> CoupledSpace {
    let (kspin, sspin) = (NUCLEAR_SPIN, ELECTRON_SPIN);
    let km = spin_matrices(kspin).expect("K = 7/2");
    let sm = spin_matrices(sspin).expect("s = 1/2");
    let nk = kspin.multiplicity();
    let ns = sspin.multiplicity();
    let dim = nk * ns;
    let id_k = DMatrix::<C64>::identity(nk, nk);
    let id_s = DMatrix::<C64>::identity(ns, ns);

    let basis: Vec<(HalfInt, HalfInt)> = GROUND_MANIFOLDS
        .iter()
        .flat_map(|&f| f.projections_asc().map(move |m| (f, m)))
        .collect();
    assert_eq!(basis.len(), dim);

    let product: Vec<(HalfInt, HalfInt)> = kspin
        .projections_desc()
        .flat_map(|mk| sspin.projections_desc().map(move |ms| (mk, ms)))
        .collect();

    let cg_matrix = DMatrix::from_fn(dim, dim, |c, p| {
        let (f, m) = basis[c];
        let (mk, ms) = product[p];
        clebsch_gordan(kspin, mk, sspin, ms, f, m)
    });

    let u = cg_matrix.map(|x| C64::new(x, 0.0));
    let transform = |op: &DMatrix<C64>| chop(&u * op * u.transpose(), 1e-13);
    let k = [
        transform(&kron(&km.fx, &id_s)),
        transform(&kron(&km.fy, &id_s)),
        transform(&kron(&km.fz, &id_s)),
    ];
    let s = [
        transform(&kron(&id_k, &sm.fx)),
        transform(&kron(&id_k, &sm.fy)),
        transform(&kron(&id_k, &sm.fz)),
    ];
    let f = [&k[0] + &s[0], &k[1] + &s[1], &k[2] + &s[2]];

    let (kk, ss) = (kspin.casimir(), sspin.casimir());
    let k_dot_s = DMatrix::from_fn(dim, dim, |i, j| {
        if i == j {
            C64::new(0.5 * (basis[i].0.casimir() - kk - ss), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });

    CoupledSpace {
        nuclear: kspin,
        electron: sspin,
        dim,
        basis,
        cg_matrix,
        k,
        s,
        f,
        k_dot_s,
    }
}

/// Spherical unit vectors e_{-1}, e_0, e_{+1} in Cartesian components.
pub fn spherical_basis() -> [[C64; 3]; 3] {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    [
        [C64::new(r, 0.0), C64::new(0.0, -r), C64::new(0.0, 0.0)],
        [C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
        [C64::new(-r, 0.0), C64::new(0.0, -r), C64::new(0.0, 0.0)],
    ]
}

/// Spherical components q = -1, 0, +1 (array index q + 1) of the dipole
/// raising operator from ground manifold `f` to excited manifold `f_prime`.
///
/// Each matrix maps |f, m⟩ (columns, m = -f..f) to |f', m'⟩ (rows,
/// m' = -f'..f') with element o_{jf}^{j'f'} ⟨f' m' | f m; 1 q⟩.
pub fn dipole_raising(f: HalfInt, f_prime: HalfInt) -> Result<[DMatrix<f64>; 3], AngularError> {
    let o = o_coeff(f, f_prime)?;
    let one = HalfInt::from_int(1);
    let build = |q: i32| {
        let q = HalfInt::from_int(q);
        let rows: Vec<HalfInt> = f_prime.projections_asc().collect();
        let cols: Vec<HalfInt> = f.projections_asc().collect();
        DMatrix::from_fn(rows.len(), cols.len(), |r, c| {
            o * clebsch_gordan(f, cols[c], one, q, f_prime, rows[r])
        })
    };
    Ok([build(-1), build(0), build(1)])
}

/// ε·D† for a Cartesian polarization ε: Σ_q (ε·e_q*) D†_q.
pub fn contract_raising(polarization: &[C64; 3], components: &[DMatrix<f64>; 3]) -> DMatrix<C64> {
    let basis = spherical_basis();
    let (r, c) = components[0].shape();
    let mut out = DMatrix::<C64>::zeros(r, c);
    for (comp, eq) in components.iter().zip(basis.iter()) {
        let w: C64 = polarization.iter().zip(eq.iter()).map(|(p, e)| p * e.conj()).sum();
        if w != C64::new(0.0, 0.0) {
            out += comp.map(|x| C64::new(x, 0.0)) * w;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(twice: i32) -> HalfInt {
        HalfInt::from_twice(twice)
    }

    fn commutator(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
        a * b - b * a
    }

    #[test]
    fn spin_half_fz() {
        let s = spin_matrices(h(1)).unwrap();
        assert_eq!(s.fz[(0, 0)], C64::new(0.5, 0.0));
        assert_eq!(s.fz[(1, 1)], C64::new(-0.5, 0.0));
    }

    #[test]
    fn spin_algebra_all_small_spins() {
        for t in 0..=12 {
            let s = spin_matrices(h(t)).unwrap();
            let i = C64::new(0.0, 1.0);
            let c = commutator(&s.fx, &s.fy) - &s.fz * i;
            assert!(c.norm() < 1e-14, "f = {t}/2");
            let c = commutator(&s.fy, &s.fz) - &s.fx * i;
            assert!(c.norm() < 1e-13);
            let n = s.dim();
            let cas = &s.fsq - DMatrix::<C64>::identity(n, n) * C64::new(s.f.casimir(), 0.0);
            assert!(cas.norm() < 1e-12);
        }
    }

    #[test]
    fn spin_four_casimir_is_twenty() {
        let s = spin_matrices(HalfInt::from_int(4)).unwrap();
        let d = &s.fsq - DMatrix::<C64>::identity(9, 9) * C64::new(20.0, 0.0);
        assert!(d.norm() < 1e-12);
    }

    #[test]
    fn negative_spin_rejected() {
        assert!(matches!(spin_matrices(h(-1)), Err(AngularError::NegativeSpin(_))));
    }

    #[test]
    fn cg_known_values() {
        assert_eq!(clebsch_gordan(h(7), h(7), h(1), h(1), h(8), h(8)), 1.0);
        assert_eq!(clebsch_gordan(h(7), h(7), h(1), h(1), h(8), h(6)), 0.0);
        let v = clebsch_gordan(h(1), h(1), h(1), h(-1), h(2), h(0));
        assert!((v - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        let v = clebsch_gordan(h(1), h(1), h(1), h(-1), h(0), h(0));
        assert!((v - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        let v = clebsch_gordan(h(1), h(-1), h(1), h(1), h(0), h(0));
        assert!((v + std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn sixj_triangle_violation_is_zero() {
        assert_eq!(wigner6j(h(1), h(1), h(6), h(1), h(1), h(1)), 0.0);
    }

    #[test]
    fn sixj_with_zero_entry() {
        // {a b c; 0 c b} = (-1)^(a+b+c) / sqrt((2b+1)(2c+1))
        for a in 0..=6 {
            for b in 0..=6 {
                for c in 0..=6 {
                    let (a, b, c) = (h(a), h(b), h(c));
                    if !triangle(a, b, c) {
                        continue;
                    }
                    let expect = parity_sign(a.0 + b.0 + c.0)
                        / (f64::from((b.0 + 1) * (c.0 + 1))).sqrt();
                    let got = wigner6j(a, b, c, h(0), c, b);
                    assert!((got - expect).abs() < 1e-14, "{a} {b} {c}");
                }
            }
        }
    }

    #[test]
    fn o_squares_sum_to_one_over_ground_manifolds() {
        let (f3, f4) = (HalfInt::from_int(3), HalfInt::from_int(4));
        for fp in [f3, f4] {
            let s: f64 = [f3, f4].iter().map(|&f| o_coeff(f, fp).unwrap().powi(2)).sum();
            assert!((s - 1.0).abs() < 1e-13, "f' = {fp}: {s}");
        }
        // the other sum is not normalised: 5/6 and 7/6
        let row = |f| o_coeff(f, f3).unwrap().powi(2) + o_coeff(f, f4).unwrap().powi(2);
        assert!((row(f3) - 5.0 / 6.0).abs() < 1e-13);
        assert!((row(f4) - 7.0 / 6.0).abs() < 1e-13);
    }

    #[test]
    fn manifold_checks() {
        assert!(o_coeff(HalfInt::from_int(2), HalfInt::from_int(3)).is_err());
        assert!(c2_coeff(HalfInt::from_int(3), HalfInt::from_int(5)).is_err());
        assert!(dipole_raising(h(7), HalfInt::from_int(3)).is_err());
    }

    #[test]
    fn coupled_space_structure() {
        let cs = coupled_space();
        assert_eq!(cs.dim, 16);
        assert_eq!(cs.block(HalfInt::from_int(3)), 0..7);
        assert_eq!(cs.block(HalfInt::from_int(4)), 7..16);
        let id = DMatrix::<f64>::identity(16, 16);
        assert!((&cs.cg_matrix * cs.cg_matrix.transpose() - id).norm() < 1e-13);

        let s2: DMatrix<C64> = cs.s.iter().map(|m| m * m).fold(DMatrix::zeros(16, 16), |a, b| a + b);
        let d = s2 - DMatrix::<C64>::identity(16, 16) * C64::new(0.75, 0.0);
        assert!(d.norm() < 1e-13);

        let f2: DMatrix<C64> = cs.f.iter().map(|m| m * m).fold(DMatrix::zeros(16, 16), |a, b| a + b);
        let eig = f2.symmetric_eigenvalues();
        let mut ev: Vec<f64> = eig.iter().copied().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (i, v) in ev.iter().enumerate() {
            let want = if i < 7 { 12.0 } else { 20.0 };
            assert!((v - want).abs() < 1e-12);
        }
    }

    #[test]
    fn k_dot_s_matches_operator_sum() {
        let cs = coupled_space();
        let sum: DMatrix<C64> = (0..3).map(|i| &cs.k[i] * &cs.s[i]).fold(DMatrix::zeros(16, 16), |a, b| a + b);
        assert!((sum - &cs.k_dot_s).norm() < 1e-13);
        for fi in &cs.f {
            assert!(commutator(&cs.k_dot_s, fi).norm() < 1e-13);
        }
    }

    #[test]
    fn coupled_fz_is_diagonal_m() {
        let cs = coupled_space();
        for (i, &(_, m)) in cs.basis.iter().enumerate() {
            assert!((cs.f[2][(i, i)].re - m.value()).abs() < 1e-14);
        }
    }

    #[test]
    fn dipole_selection_rule_exact() {
        for &f in &GROUND_MANIFOLDS {
            for &fp in &EXCITED_MANIFOLDS {
                let d = dipole_raising(f, fp).unwrap();
                for (qi, comp) in d.iter().enumerate() {
                    let q = qi as i32 - 1;
                    for (r, mp) in fp.projections_asc().enumerate() {
                        for (c, m) in f.projections_asc().enumerate() {
                            if mp != m + HalfInt::from_int(q) {
                                assert_eq!(comp[(r, c)], 0.0);
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn halfint_display_and_projections() {
        assert_eq!(h(7).to_string(), "7/2");
        assert_eq!(HalfInt::from_int(3).to_string(), "3");
        let p: Vec<i32> = h(3).projections_desc().map(HalfInt::twice).collect();
        assert_eq!(p, vec![3, 1, -1, -3]);
        assert_eq!(HalfInt::from_f64(3.5), Some(h(7)));
        assert_eq!(HalfInt::from_f64(3.3), None);
    }
}
