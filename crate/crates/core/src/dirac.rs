//! Dirac matrices in the standard representation and the pointwise momentum
//! symbols of the free Dirac operator and of the positive spectral projector.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::real::Real;

/// Dense 4×4 complex matrix, row-major.
pub type Mat4<T> = [[Complex<T>; 4]; 4];
/// Four-component spinor.
pub type Spinor<T> = [Complex<T>; 4];

/// The matrices α₁, α₂, α₃ and β.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiracMatrices<T> {
    pub alpha: [Mat4<T>; 3],
    pub beta: Mat4<T>,
}

/// A momentum together with a 4×4 symbol evaluated at it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentumSymbol<T> {
    pub p: [T; 3],
    pub matrix: Mat4<T>,
}

pub fn mat_zero<T: Real>() -> Mat4<T> {
    [[Complex::new(T::zero(), T::zero()); 4]; 4]
}

pub fn mat_identity<T: Real>() -> Mat4<T> {
    let mut m = mat_zero();
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = Complex::new(T::one(), T::zero());
    }
    m
}

pub fn mat_mul<T: Real>(a: &Mat4<T>, b: &Mat4<T>) -> Mat4<T> {
    let mut c = mat_zero();
    for i in 0..4 {
        for j in 0..4 {
            let mut s = Complex::new(T::zero(), T::zero());
            for k in 0..4 {
                s = s + a[i][k] * b[k][j];
            }
            c[i][j] = s;
        }
    }
    c
}

pub fn mat_add<T: Real>(a: &Mat4<T>, b: &Mat4<T>) -> Mat4<T> {
    let mut c = *a;
    for i in 0..4 {
        for j in 0..4 {
            c[i][j] = c[i][j] + b[i][j];
        }
    }
    c
}

pub fn mat_sub<T: Real>(a: &Mat4<T>, b: &Mat4<T>) -> Mat4<T> {
    let mut c = *a;
    for i in 0..4 {
        for j in 0..4 {
            c[i][j] = c[i][j] - b[i][j];
        }
    }
    c
}

pub fn mat_scale<T: Real>(a: &Mat4<T>, s: Complex<T>) -> Mat4<T> {
    let mut c = *a;
    for row in c.iter_mut() {
        for v in row.iter_mut() {
            *v = *v * s;
        }
    }
    c
}

pub fn mat_adjoint<T: Real>(a: &Mat4<T>) -> Mat4<T> {
    let mut c = mat_zero();
    for i in 0..4 {
        for j in 0..4 {
            c[i][j] = a[j][i].conj();
        }
    }
    c
}

pub fn mat_trace<T: Real>(a: &Mat4<T>) -> Complex<T> {
    a[0][0] + a[1][1] + a[2][2] + a[3][3]
}

/// Largest entry modulus, used as the residual norm in the algebra checks.
pub fn mat_max_abs<T: Real>(a: &Mat4<T>) -> T {
    a.iter().flatten().fold(T::zero(), |m, v| m.max(v.norm()))
}

pub fn mat_vec<T: Real>(a: &Mat4<T>, v: &Spinor<T>) -> Spinor<T> {
    let mut out = [Complex::new(T::zero(), T::zero()); 4];
    for i in 0..4 {
        let mut s = Complex::new(T::zero(), T::zero());
        for k in 0..4 {
            s = s + a[i][k] * v[k];
        }
        out[i] = s;
    }
    out
}

pub fn spinor_norm<T: Real>(v: &Spinor<T>) -> T {
    v.iter().fold(T::zero(), |s, c| s + c.norm_sqr()).sqrt()
}

/// Returns α₁, α₂, α₃ (off-diagonal Pauli blocks) and β = diag(1, 1, −1, −1).
pub fn dirac_matrices<T: Real>() -> DiracMatrices<T> {
    let z = Complex::new(T::zero(), T::zero());
    let one = Complex::new(T::one(), T::zero());
    let i = Complex::new(T::zero(), T::one());
    let pauli = [[[z, one], [one, z]], [[z, -i], [i, z]], [[one, z], [z, -one]]];
    let mut alpha = [mat_zero(); 3];
    for (k, s) in pauli.iter().enumerate() {
        for r in 0..2 {
            for c in 0..2 {
                alpha[k][r][c + 2] = s[r][c];
                alpha[k][r + 2][c] = s[r][c];
            }
        }
    }
    let mut beta = mat_zero();
    beta[0][0] = one;
    beta[1][1] = one;
    beta[2][2] = -one;
    beta[3][3] = -one;
    DiracMatrices { alpha, beta }
}

/// α·p + β.
pub fn free_dirac_symbol<T: Real>(p: [T; 3]) -> MomentumSymbol<T> {
    let d = dirac_matrices::<T>();
    let mut m = d.beta;
    for (k, a) in d.alpha.iter().enumerate() {
        m = mat_add(&m, &mat_scale(a, Complex::new(p[k], T::zero())));
    }
    MomentumSymbol { p, matrix: m }
}

/// √(1 + |p|²).
#[inline]
pub fn free_energy<T: Real>(p: [T; 3]) -> T {
    (T::one() + p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt()
}

/// Λ₊(p) = ½ + (α·p + β) / (2√(|p|² + 1)).
pub fn lambda_symbol<T: Real>(p: [T; 3]) -> MomentumSymbol<T> {
    let half = T::lit(0.5);
    let d = free_dirac_symbol(p).matrix;
    let s = Complex::new(half / free_energy(p), T::zero());
    let mut m = mat_scale(&d, s);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = row[i] + Complex::new(half, T::zero());
    }
    MomentumSymbol { p, matrix: m }
}

/// Seeded unit vector in the range of Λ₊(p).
///
/// A random complex 4-vector drawn from `seed` is projected by Λ₊(p) and
/// normalized; draws are repeated until the projection is not tiny, so the
/// result is deterministic for a given `(p, seed)`.
pub fn positive_eigenvector<T: Real>(p: [T; 3], seed: u64) -> Spinor<T> {
    let lam = lambda_symbol(p).matrix;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let mut v = [Complex::new(T::zero(), T::zero()); 4];
        for c in v.iter_mut() {
            let re: f64 = rng.gen_range(-1.0..1.0);
            let im: f64 = rng.gen_range(-1.0..1.0);
            *c = Complex::new(T::lit(re), T::lit(im));
        }
        let u = mat_vec(&lam, &v);
        let n = spinor_norm(&u);
        if n > T::lit(0.25) * spinor_norm(&v) {
            let inv = T::one() / n;
            return u.map(|c| c * inv);
        }
    }
}

/// Orthonormal basis of Ran Λ₊(p): u_s = N(χ_s, σ·p χ_s/(E+1)), N = √((E+1)/2E).
///
/// Columns are returned as two spinors; used to store Λ₊-range states with two
/// components per momentum.
pub fn positive_range_basis<T: Real>(p: [T; 3]) -> [Spinor<T>; 2] {
    let e = free_energy(p);
    let n = ((e + T::one()) / (T::lit(2.0) * e)).sqrt();
    let a = n / (e + T::one());
    let c = |re: T, im: T| Complex::new(re, im);
    let z = T::zero();
    [
        [c(n, z), c(z, z), c(a * p[2], z), c(a * p[0], a * p[1])],
        [c(z, z), c(n, z), c(a * p[0], -a * p[1]), c(-a * p[2], z)],
    ]
}
