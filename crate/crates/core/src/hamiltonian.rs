//! One-particle Brown–Ravenhall forms and the ground-state solver.
//!
//! Energies are in units of mc², lengths in reduced Compton wavelengths.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{FourierField, Grid, SpinorField};
use crate::lanczos::{lowest_eigenpair, LanczosOptions};
use crate::projector::Projector;

pub const DEFAULT_ALPHA: f64 = 1.0 / 137.036;

/// αZ_c = 2/(π/2 + 2/π).
pub fn critical_coupling() -> f64 {
    let pi = std::f64::consts::PI;
    2.0 / (pi / 2.0 + 2.0 / pi)
}

pub fn critical_charge(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::Domain(format!("alpha must be positive, got {alpha}")));
    }
    Ok(critical_coupling() / alpha)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingParams {
    pub alpha: f64,
    pub z: f64,
}

impl CouplingParams {
    pub fn new(alpha: f64, z: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::Domain(format!("alpha must be positive, got {alpha}")));
        }
        if !(z >= 0.0) || !z.is_finite() {
            return Err(Error::Domain(format!("nuclear charge must be non-negative, got {z}")));
        }
        let c = critical_coupling();
        if alpha * z >= c {
            return Err(Error::Domain(format!(
                "alpha*Z = {:.6} is not below the critical coupling alpha*Z_c = {c:.6}",
                alpha * z
            )));
        }
        Ok(Self { alpha, z })
    }

    pub fn with_z(z: f64) -> Result<Self> {
        Self::new(DEFAULT_ALPHA, z)
    }

    pub fn alpha_z(&self) -> f64 {
        self.alpha * self.z
    }

    pub fn alpha_z_c(&self) -> f64 {
        critical_coupling()
    }

    pub fn z_c(&self) -> f64 {
        critical_coupling() / self.alpha
    }

    /// Length unit 1/(αZ) used to size boxes.
    pub fn orbital_radius(&self) -> f64 {
        1.0 / self.alpha_z()
    }
}

/// 1/|x| at every node.
pub fn inverse_radius(grid: &Grid<f64>) -> Vec<f64> {
    (0..grid.len())
        .map(|i| {
            let x = grid.position(i);
            1.0 / (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
        })
        .collect()
}

/// ⟨(c/|x|)f, f⟩ by nodal quadrature.
pub fn coulomb_form(f: &SpinorField<f64>, center_charge: f64) -> f64 {
    if center_charge == 0.0 {
        return 0.0;
    }
    let inv = inverse_radius(&f.grid);
    let d = f.density();
    center_charge * d.data.iter().zip(&inv).map(|(a, b)| a * b).sum::<f64>() * f.grid.cell_volume()
}

/// ⟨|p| f̂, f̂⟩.
pub fn abs_momentum_form(f: &SpinorField<f64>) -> f64 {
    let p = Projector::new(f.grid);
    p.to_fourier(f).weighted_norm_sqr(|q| (q[0] * q[0] + q[1] * q[1] + q[2] * q[2]).sqrt())
}

/// Pieces of ⟨(D − αZ/|x|)Λ₊f, Λ₊f⟩.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OneParticleTerms {
    /// ⟨DΛ₊f, Λ₊f⟩ = Σ √(1+p²)|Λ₊f̂|².
    pub kinetic: f64,
    /// ⟨|x|⁻¹Λ₊f, Λ₊f⟩ (without the αZ factor).
    pub inverse_r: f64,
    /// ‖Λ₊f‖².
    pub norm_sqr: f64,
    pub alpha_z: f64,
}

impl OneParticleTerms {
    pub fn value(&self) -> f64 {
        self.kinetic - self.alpha_z * self.inverse_r
    }

    pub fn rayleigh(&self) -> f64 {
        self.value() / self.norm_sqr
    }
}

pub fn br_one_particle_terms_with(proj: &Projector<f64>, f: &SpinorField<f64>, params: &CouplingParams) -> OneParticleTerms {
    let mut ff = proj.to_fourier(f);
    proj.project_fourier(&mut ff);
    let kinetic = fourier_energy_form(proj, &ff);
    let g = proj.to_spinor(&ff);
    OneParticleTerms { kinetic, inverse_r: coulomb_form(&g, 1.0), norm_sqr: g.norm_sqr(), alpha_z: params.alpha_z() }
}

/// Σ √(1+p²)|f̂|² h³.
pub fn fourier_energy_form(proj: &Projector<f64>, ff: &FourierField<f64>) -> f64 {
    let e = proj.energies();
    let mut s = 0.0;
    for (idx, &ei) in e.iter().enumerate() {
        let m: f64 = ff.comps.iter().map(|c| c[idx].norm_sqr()).sum();
        s += ei * m;
    }
    s * ff.grid.cell_volume()
}

/// Λ₊(D − αZ/|x|)Λ₊f as a field; `inv_r` is [`inverse_radius`] of the grid.
pub fn apply_br_operator(proj: &Projector<f64>, inv_r: &[f64], f: &SpinorField<f64>, alpha_z: f64) -> SpinorField<f64> {
    let mut ff = proj.to_fourier(f);
    proj.project_fourier(&mut ff);
    let g = proj.to_spinor(&ff);
    let mut pot = proj.to_fourier(&g.multiply_scalar(inv_r));
    proj.project_fourier(&mut pot);
    let e = proj.energies();
    for (comp, pcomp) in ff.comps.iter_mut().zip(&pot.comps) {
        for ((v, &ei), pv) in comp.iter_mut().zip(e).zip(pcomp) {
            *v = *v * ei - pv * alpha_z;
        }
    }
    proj.to_spinor(&ff)
}

pub fn br_one_particle_terms(f: &SpinorField<f64>, params: &CouplingParams) -> OneParticleTerms {
    br_one_particle_terms_with(&Projector::new(f.grid), f, params)
}

/// The form value ⟨(D − αZ/|x|)Λ₊f, Λ₊f⟩ (not divided by the norm).
pub fn br_one_particle_form(f: &SpinorField<f64>, params: &CouplingParams) -> f64 {
    br_one_particle_terms(f, params).value()
}

/// Outcome of a ground-state solve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralResult {
    pub alpha: f64,
    pub z: f64,
    pub grid_n: usize,
    /// Box edge in Compton wavelengths.
    pub box_l: f64,
    /// Lowest eigenvalue in units of mc².
    pub e1: f64,
    /// ‖(H − E₁)ψ‖ for the unit eigenvector.
    pub residual: f64,
    /// Number of operator applications.
    pub iters: usize,
}

pub struct GroundState {
    pub result: SpectralResult,
    /// Normalized eigenvector, lying in the grid range of Λ₊.
    pub state: SpinorField<f64>,
}

/// H − 1 restricted to the grid range of Λ₊, in the basis
/// u_s(p) = N(χ_s, σ·p χ_s/(E+1)), N = √((E+1)/2E), two coefficients per mode.
pub struct RangeHamiltonian {
    proj: Projector<f64>,
    potential: Vec<f64>,
    excess: Vec<f64>,
    scale: Vec<f64>,
    q: Vec<[f64; 3]>,
}

#[inline]
fn sigma_dot(q: [f64; 3], a: Complex64, b: Complex64) -> (Complex64, Complex64) {
    let pz = Complex64::new(q[2], 0.0);
    let pm = Complex64::new(q[0], -q[1]);
    let pp = Complex64::new(q[0], q[1]);
    (pz * a + pm * b, pp * a - pz * b)
}

impl RangeHamiltonian {
    pub fn new(grid: Grid<f64>, params: &CouplingParams) -> Self {
        let proj = Projector::new(grid);
        let az = params.alpha_z();
        let potential = inverse_radius(&grid).into_iter().map(|v| -az * v).collect();
        let mut excess = Vec::with_capacity(grid.len());
        let mut scale = Vec::with_capacity(grid.len());
        let mut q = Vec::with_capacity(grid.len());
        for (p, &e) in proj.momenta().iter().zip(proj.energies()) {
            let p2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
            // E − 1 without cancellation
            excess.push(p2 / (e + 1.0));
            scale.push(((e + 1.0) / (2.0 * e)).sqrt());
            q.push(p.map(|c| c / (e + 1.0)));
        }
        Self { proj, potential, excess, scale, q }
    }

    pub fn grid(&self) -> &Grid<f64> {
        self.proj.grid()
    }

    pub fn dim(&self) -> usize {
        2 * self.grid().len()
    }

    /// Coefficients to the Fourier field Σ_s c_s u_s(p).
    pub fn to_fourier(&self, c: &[Complex64]) -> FourierField<f64> {
        let len = self.grid().len();
        let mut ff = FourierField::zeros(*self.grid());
        for m in 0..len {
            let (a, b) = (c[m], c[len + m]);
            let s = self.scale[m];
            let (l0, l1) = sigma_dot(self.q[m], a, b);
            ff.set(m, [a * s, b * s, l0 * s, l1 * s]);
        }
        ff
    }

    /// Orthogonal projection of a Fourier field onto the basis coefficients.
    pub fn from_fourier(&self, ff: &FourierField<f64>) -> Vec<Complex64> {
        let len = self.grid().len();
        let mut c = vec![Complex64::new(0.0, 0.0); 2 * len];
        for m in 0..len {
            let v = ff.at(m);
            let (l0, l1) = sigma_dot(self.q[m], v[2], v[3]);
            let s = self.scale[m];
            c[m] = (v[0] + l0) * s;
            c[len + m] = (v[1] + l1) * s;
        }
        c
    }

    /// Position-space field with the grid L₂ weight, so a unit coefficient
    /// vector gives a unit-norm field.
    pub fn to_field(&self, c: &[Complex64]) -> SpinorField<f64> {
        let mut f = self.proj.to_spinor(&self.to_fourier(c));
        f.scale(Complex64::new(self.grid().cell_volume().powf(-0.5), 0.0));
        f
    }

    pub fn from_field(&self, f: &SpinorField<f64>) -> Vec<Complex64> {
        let mut c = self.from_fourier(&self.proj.to_fourier(f));
        let s = self.grid().cell_volume().sqrt();
        c.iter_mut().for_each(|v| *v *= s);
        c
    }

    /// (H − 1)c.
    pub fn apply_shifted(&self, c: &[Complex64]) -> Vec<Complex64> {
        let len = self.grid().len();
        let mut f = self.proj.to_spinor(&self.to_fourier(c));
        for comp in f.comps.iter_mut() {
            for (v, &w) in comp.iter_mut().zip(&self.potential) {
                *v *= w;
            }
        }
        let mut out = self.from_fourier(&self.proj.to_fourier(&f));
        for m in 0..len {
            out[m] += c[m] * self.excess[m];
            out[len + m] += c[len + m] * self.excess[m];
        }
        out
    }
}

/// Lowest eigenvalue of Λ₊(D − αZ/|x|)Λ₊ on the grid range of Λ₊.
pub fn ground_state_one_particle(params: &CouplingParams, grid_n: usize, box_l: f64, tol: f64) -> Result<GroundState> {
    let opts = LanczosOptions { tol, ..LanczosOptions::default() };
    ground_state_with(params, grid_n, box_l, &opts, 42)
}

pub fn ground_state_with(params: &CouplingParams, grid_n: usize, box_l: f64, opts: &LanczosOptions, seed: u64) -> Result<GroundState> {
    if params.z <= 0.0 {
        return Err(Error::Precondition("a bound state needs Z > 0".into()));
    }
    let grid = Grid::new(grid_n, box_l)?;
    let ham = RangeHamiltonian::new(grid, params);
    let az = params.alpha_z();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let guess = SpinorField::from_fn(grid, |x| {
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        [Complex64::new((-az * r).exp(), 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)]
    });
    let mut start = ham.from_field(&guess);
    let n0 = start.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    for v in start.iter_mut() {
        *v += Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * (1e-3 * n0 / (ham.dim() as f64).sqrt());
    }
    let pair = lowest_eigenpair(|c| ham.apply_shifted(c), start, opts)?;
    let state = ham.to_field(&pair.vector);
    Ok(GroundState {
        result: SpectralResult {
            alpha: params.alpha,
            z: params.z,
            grid_n,
            box_l,
            e1: 1.0 + pair.value,
            residual: pair.residual,
            iters: pair.matvecs,
        },
        state,
    })
}

/// Kramers partner (−ψ₂*, ψ₁*, −ψ₄*, ψ₃*); orthogonal to ψ and degenerate with it
/// for any real potential.
pub fn kramers_partner(f: &SpinorField<f64>) -> SpinorField<f64> {
    let mut out = f.clone();
    for idx in 0..f.grid.len() {
        let v = f.at(idx);
        out.set(idx, [-v[1].conj(), v[0].conj(), -v[3].conj(), v[2].conj()]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn critical_values() {
        assert!((critical_coupling() - 0.906_036_700_900_580_4).abs() < 1e-15);
        assert!((critical_charge(DEFAULT_ALPHA).unwrap() - 124.159_645_344_611_94).abs() < 1e-10);
        assert!(CouplingParams::with_z(125.0).is_err());
        assert!(CouplingParams::with_z(124.0).is_ok());
    }

    #[test]
    fn operator_matches_form() {
        let g = Grid::new(12, 6.0f64).unwrap();
        let params = CouplingParams::with_z(40.0).unwrap();
        let f = SpinorField::from_fn(g, |x| {
            let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
            let e = (-r2 / 2.0).exp();
            [Complex64::new(e, 0.0), Complex64::new(0.0, x[0] * e), Complex64::new(0.2 * e, 0.0), Complex64::new(0.0, 0.0)]
        });
        let proj = Projector::new(g);
        let bf = apply_br_operator(&proj, &inverse_radius(&g), &f, params.alpha_z());
        let form = br_one_particle_form(&f, &params);
        let via_op = f.inner(&bf);
        assert!((via_op.re - form).abs() < 1e-10 * form.abs() && via_op.im.abs() < 1e-10);
    }

    #[test]
    fn range_basis_round_trip() {
        let g = Grid::new(8, 6.0).unwrap();
        let ham = RangeHamiltonian::new(g, &CouplingParams::with_z(10.0).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let c: Vec<Complex64> = (0..ham.dim()).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let back = ham.from_field(&ham.to_field(&c));
        let err: f64 = c.iter().zip(&back).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        assert!(err < 1e-12 * (ham.dim() as f64).sqrt());
        let f = ham.to_field(&c);
        let cn: f64 = c.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        assert!((f.norm() - cn).abs() < 1e-10 * cn);
        // the field lies in the range of Λ₊
        let pf = Projector::new(g).apply(&f);
        assert!(pf.sub(&f).norm() < 1e-12 * f.norm());
    }

    #[test]
    fn shifted_operator_is_hermitian() {
        let g = Grid::new(8, 10.0).unwrap();
        let ham = RangeHamiltonian::new(g, &CouplingParams::with_z(30.0).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut rv = || (0..ham.dim()).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect::<Vec<_>>();
        let (a, b) = (rv(), rv());
        let dot = |x: &[Complex64], y: &[Complex64]| x.iter().zip(y).fold(Complex64::new(0.0, 0.0), |s, (p, q)| s + p.conj() * q);
        let l = dot(&a, &ham.apply_shifted(&b));
        let r = dot(&ham.apply_shifted(&a), &b);
        assert!((l - r).norm() < 1e-10 * l.norm());
    }

    #[test]
    fn kramers_partner_is_orthogonal() {
        let g = Grid::new(6, 4.0).unwrap();
        let f = SpinorField::from_fn(g, |x| {
            [Complex64::new(x[0], x[1]), Complex64::new(1.0, x[2]), Complex64::new(0.2, -x[0]), Complex64::new(x[1] * x[2], 0.5)]
        });
        assert!(f.inner(&kramers_partner(&f)).norm() < 1e-12);
    }
}
