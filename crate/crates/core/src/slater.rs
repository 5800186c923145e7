//! Two-electron states of low rank and the Brown–Ravenhall energy form on them.
//!
//! A state is Σ_t c_t a_t ⊗ b_t. Antisymmetrization maps each term to
//! (a⊗b − b⊗a)/√2. All matrix elements reduce to one-particle overlaps,
//! one-particle form values and Coulomb integrals of pair densities, supplied
//! by a [`FactorAlgebra`].

use std::cell::RefCell;
use std::collections::HashMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, SpinorField};
use crate::hamiltonian::{inverse_radius, CouplingParams};
use crate::hartree::FreeSpaceConvolution;
use crate::projector::{dirac_mode, Projector};

/// Matrix elements between one-particle factors.
pub trait FactorAlgebra {
    type Factor: Copy + Eq + std::hash::Hash;

    /// ⟨a, b⟩.
    fn inner(&self, a: Self::Factor, b: Self::Factor) -> Complex64;

    /// ⟨a, (D − αZ/|x|) b⟩ for factors in the range of Λ₊.
    fn one_body(&self, a: Self::Factor, b: Self::Factor) -> Complex64;

    /// ∫∫ (a₁*·b₁)(x) (a₂*·b₂)(y) / |x − y| dx dy.
    fn coulomb(&self, a1: Self::Factor, b1: Self::Factor, a2: Self::Factor, b2: Self::Factor) -> Complex64;
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoParticleEnergy {
    pub norm_sqr: f64,
    /// ⟨Ψ, (h⊗1 + 1⊗h)Ψ⟩.
    pub one_body: f64,
    /// ⟨Ψ, |x₁−x₂|⁻¹ Ψ⟩ (without α).
    pub interaction: f64,
    pub alpha: f64,
}

impl TwoParticleEnergy {
    pub fn value(&self) -> f64 {
        (self.one_body + self.alpha * self.interaction) / self.norm_sqr
    }

    pub fn without_interaction(&self) -> f64 {
        self.one_body / self.norm_sqr
    }
}

/// Expands Σ c (a⊗b) into the product terms of its antisymmetrization.
pub fn antisymmetrized_terms<F: Copy>(terms: &[(Complex64, F, F)]) -> Vec<(Complex64, F, F)> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    terms.iter().flat_map(|&(c, a, b)| [(c * s, a, b), (-c * s, b, a)]).collect()
}

/// ‖Σ c_t a_t⊗b_t‖².
pub fn product_norm_sqr<A: FactorAlgebra>(alg: &A, terms: &[(Complex64, A::Factor, A::Factor)]) -> f64 {
    let mut n = Complex64::new(0.0, 0.0);
    for &(cs, a_s, b_s) in terms {
        for &(ct, a_t, b_t) in terms {
            n += cs.conj() * ct * alg.inner(a_s, a_t) * alg.inner(b_s, b_t);
        }
    }
    n.re
}

pub fn evaluate_two_particle<A: FactorAlgebra>(
    alg: &A,
    terms: &[(Complex64, A::Factor, A::Factor)],
    alpha: f64,
    include_interaction: bool,
) -> Result<TwoParticleEnergy> {
    let mut norm = Complex64::new(0.0, 0.0);
    let mut one = Complex64::new(0.0, 0.0);
    let mut ee = Complex64::new(0.0, 0.0);
    let mut scale = 0.0;
    for (s, &(cs, a_s, b_s)) in terms.iter().enumerate() {
        scale += cs.norm_sqr() * alg.inner(a_s, a_s).re * alg.inner(b_s, b_s).re;
        for (t, &(ct, a_t, b_t)) in terms.iter().enumerate() {
            let w = cs.conj() * ct;
            let (ia, ib) = (alg.inner(a_s, a_t), alg.inner(b_s, b_t));
            norm += w * ia * ib;
            one += w * (alg.one_body(a_s, a_t) * ib + ia * alg.one_body(b_s, b_t));
            if include_interaction && t >= s {
                let v = w * alg.coulomb(a_s, a_t, b_s, b_t);
                // the (t, s) term is the complex conjugate
                ee += if t == s { v } else { v + v.conj() };
            }
        }
    }
    if !(norm.re > 1e-12 * scale) {
        return Err(Error::Domain("two-particle state has zero norm".into()));
    }
    Ok(TwoParticleEnergy { norm_sqr: norm.re, one_body: one.re, interaction: ee.re, alpha })
}

/// One term c·(first ⊗ second) of a [`SlaterState`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlaterTerm {
    pub coef: Complex64,
    pub first: usize,
    pub second: usize,
}

/// Σ_t c_t f_{first} ⊗ f_{second} over a shared list of one-particle factors.
#[derive(Clone, Debug)]
pub struct SlaterState {
    pub factors: Vec<SpinorField<f64>>,
    pub terms: Vec<SlaterTerm>,
    pub antisymmetrize: bool,
}

impl SlaterState {
    pub fn product(a: SpinorField<f64>, b: SpinorField<f64>, antisymmetrize: bool) -> Self {
        Self { factors: vec![a, b], terms: vec![SlaterTerm { coef: Complex64::new(1.0, 0.0), first: 0, second: 1 }], antisymmetrize }
    }

    /// The same state with the two factors of every term exchanged.
    pub fn swapped(&self) -> Self {
        let mut out = self.clone();
        for t in out.terms.iter_mut() {
            std::mem::swap(&mut t.first, &mut t.second);
        }
        out
    }

    pub fn expanded_terms(&self) -> Vec<(Complex64, usize, usize)> {
        let raw: Vec<_> = self.terms.iter().map(|t| (t.coef, t.first, t.second)).collect();
        if self.antisymmetrize {
            antisymmetrized_terms(&raw)
        } else {
            raw
        }
    }
}

/// Grid factors: overlaps by quadrature, D in momentum space, Coulomb by
/// free-space convolution of pair densities.
pub struct GridAlgebra {
    factors: Vec<SpinorField<f64>>,
    h_factors: Vec<SpinorField<f64>>,
    conv: Option<FreeSpaceConvolution>,
    cache: RefCell<HashMap<(usize, usize), Vec<Complex64>>>,
}

impl GridAlgebra {
    /// Projects every factor onto the range of Λ₊ and precomputes h·f.
    pub fn new(factors: &[SpinorField<f64>], params: &CouplingParams, with_coulomb: bool) -> Result<Self> {
        let grid: Grid<f64> = factors.first().ok_or_else(|| Error::Precondition("no factors".into()))?.grid;
        if factors.iter().any(|f| f.grid != grid) {
            return Err(Error::Precondition("factors live on different grids".into()));
        }
        let proj = Projector::new(grid);
        let inv = inverse_radius(&grid);
        let az = params.alpha_z();
        let mut pf = Vec::with_capacity(factors.len());
        let mut hf = Vec::with_capacity(factors.len());
        for f in factors {
            let mut ff = proj.to_fourier(f);
            proj.project_fourier(&mut ff);
            let g = proj.to_spinor(&ff);
            let mut df = ff.clone();
            for (idx, p) in proj.momenta().iter().enumerate() {
                df.set(idx, dirac_mode(*p, &ff.at(idx)));
            }
            let mut h = proj.to_spinor(&df);
            for c in 0..4 {
                for ((v, &w), g0) in h.comps[c].iter_mut().zip(&inv).zip(&g.comps[c]) {
                    *v -= g0 * (az * w);
                }
            }
            pf.push(g);
            hf.push(h);
        }
        let conv = with_coulomb.then(|| FreeSpaceConvolution::new(grid, 1));
        Ok(Self { factors: pf, h_factors: hf, conv, cache: RefCell::new(HashMap::new()) })
    }

    pub fn factor(&self, i: usize) -> &SpinorField<f64> {
        &self.factors[i]
    }

    fn potential(&self, a: usize, b: usize) -> Vec<Complex64> {
        if let Some(v) = self.cache.borrow().get(&(a, b)) {
            return v.clone();
        }
        let conv = self.conv.as_ref().expect("Coulomb kernel not prepared");
        let v = conv.convolve_complex(&self.factors[a].pair_density(&self.factors[b]));
        self.cache.borrow_mut().insert((a, b), v.clone());
        v
    }
}

impl FactorAlgebra for GridAlgebra {
    type Factor = usize;

    fn inner(&self, a: usize, b: usize) -> Complex64 {
        self.factors[a].inner(&self.factors[b])
    }

    fn one_body(&self, a: usize, b: usize) -> Complex64 {
        self.factors[a].inner(&self.h_factors[b])
    }

    fn coulomb(&self, a1: usize, b1: usize, a2: usize, b2: usize) -> Complex64 {
        let w = self.potential(a2, b2);
        let rho = self.factors[a1].pair_density(&self.factors[b1]);
        rho.iter().zip(&w).fold(Complex64::new(0.0, 0.0), |s, (x, y)| s + x * y) * self.factors[a1].grid.cell_volume()
    }
}

/// ⟨H₂Ψ, Ψ⟩/‖Ψ‖² with every factor first projected onto the range of Λ₊.
pub fn two_particle_energy_form(state: &SlaterState, params: &CouplingParams) -> Result<f64> {
    Ok(two_particle_energy_terms(state, params, true)?.value())
}

pub fn two_particle_energy_terms(state: &SlaterState, params: &CouplingParams, include_interaction: bool) -> Result<TwoParticleEnergy> {
    let alg = GridAlgebra::new(&state.factors, params, include_interaction)?;
    evaluate_two_particle(&alg, &state.expanded_terms(), params.alpha, include_interaction)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blob(g: Grid<f64>, c: [f64; 3], s: f64, spin: usize) -> SpinorField<f64> {
        let mut f = SpinorField::from_fn(g, |x| {
            let r2 = (x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2) + (x[2] - c[2]).powi(2);
            let mut v = [Complex64::new(0.0, 0.0); 4];
            v[spin] = Complex64::new((-r2 / (2.0 * s * s)).exp(), 0.0);
            v
        });
        let n = f.norm();
        f.scale(Complex64::new(1.0 / n, 0.0));
        f
    }

    #[test]
    fn interaction_is_positive_and_swap_symmetric() {
        let g = Grid::new(12, 12.0).unwrap();
        let p = CouplingParams::with_z(4.0).unwrap();
        let a = blob(g, [1.0, 0.0, 0.0], 1.5, 0);
        let b = blob(g, [-1.0, 0.5, 0.0], 1.2, 1);
        let st = SlaterState::product(a, b, true);
        let full = two_particle_energy_terms(&st, &p, true).unwrap();
        assert!(full.interaction > 0.0);
        assert!(full.value() > full.without_interaction());
        let sw = two_particle_energy_form(&st.swapped(), &p).unwrap();
        assert!((sw - full.value()).abs() < 1e-12 * full.value().abs());
    }

    #[test]
    fn antisymmetrized_norm_is_smaller() {
        let g = Grid::new(10, 10.0).unwrap();
        let p = CouplingParams::with_z(1.0).unwrap();
        let a = blob(g, [0.5, 0.0, 0.0], 1.5, 0);
        let b = blob(g, [-0.5, 0.0, 0.0], 1.5, 0);
        let plain = SlaterState::product(a.clone(), b.clone(), false);
        let anti = SlaterState::product(a, b, true);
        let alg = GridAlgebra::new(&plain.factors, &p, false).unwrap();
        let n0 = product_norm_sqr(&alg, &plain.expanded_terms());
        let n1 = product_norm_sqr(&alg, &anti.expanded_terms());
        assert!(n1 <= n0 + 1e-14);
        let ov = alg.inner(0, 1).norm_sqr();
        assert!((n1 - (n0 - ov)).abs() < 1e-12);
    }

    #[test]
    fn zero_state_is_rejected() {
        let g = Grid::new(6, 6.0).unwrap();
        let p = CouplingParams::with_z(1.0).unwrap();
        let a = blob(g, [0.0; 3], 1.0, 0);
        let st = SlaterState::product(a.clone(), a, true);
        assert!(two_particle_energy_form(&st, &p).is_err());
    }
}
