//! Partition of unity over electron coordinates and the localization error.
//!
//! χ̃_a(y) = c(|y_a|) with c the complement cutoff (0 on B(1), 1 outside B(2)),
//! χ̃₀ = Π_a(1 − χ̃_a), φ = Σ_a χ̃_a² and χ_a(x) = χ̃_a(x/R)/√φ(x/R).

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cutoff::CutoffProfile;
use crate::error::{Error, Result};
use crate::grid::{Grid, SpinorField};
use crate::hamiltonian::{apply_br_operator, inverse_radius, CouplingParams};
use crate::lab::band_limit;
use crate::lab::report::LemmaReport;
use crate::projector::Projector;

/// Constant of the localization bound, relative to ⟨Df,f⟩. Calibrated on
/// 48³, box 48, Z = 20, band ½, R ∈ {3, 6, 12} (largest ratio 0.0122 at R = 12)
/// and frozen with 25% headroom.
pub const LOCALIZATION_CONSTANT: f64 = 0.015;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PartitionOfUnity {
    pub n_particles: usize,
    pub scale_r: f64,
    /// sup |∇χ_a| over the sample set, a = 0..=N.
    pub sup_grad: Vec<f64>,
    /// sup max_{kl} |∂_k∂_l χ_a| over the sample set.
    pub sup_hess: Vec<f64>,
    /// Largest δ with δ ≤ φ ≤ 1/δ on the sample set.
    pub delta: f64,
    pub samples: usize,
}

fn profile() -> CutoffProfile {
    CutoffProfile::complement(1.0, 2.0, 1.0)
}

/// Values and scaled-coordinate gradients (length 3N each) of χ̃₀…χ̃_N.
fn tilde(y: &[[f64; 3]]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = y.len();
    let c = profile();
    let mut vals = vec![0.0; n + 1];
    let mut grads = vec![vec![0.0; 3 * n]; n + 1];
    let mut one_minus = vec![0.0; n];
    let mut dvec = vec![[0.0; 3]; n];
    for (a, ya) in y.iter().enumerate() {
        let r = (ya[0] * ya[0] + ya[1] * ya[1] + ya[2] * ya[2]).sqrt();
        let (v, d1, _) = c.profile(r);
        vals[a + 1] = v;
        one_minus[a] = 1.0 - v;
        if r > 0.0 {
            dvec[a] = ya.map(|t| d1 * t / r);
        }
        grads[a + 1][3 * a..3 * a + 3].copy_from_slice(&dvec[a]);
    }
    vals[0] = one_minus.iter().product();
    for a in 0..n {
        let others: f64 = one_minus.iter().enumerate().filter(|(b, _)| *b != a).map(|(_, v)| v).product();
        for k in 0..3 {
            grads[0][3 * a + k] = -dvec[a][k] * others;
        }
    }
    (vals, grads)
}

impl PartitionOfUnity {
    /// Builds the partition and measures its derivative sup-norms on `samples`
    /// seeded points whose particle radii cover [0, 2.5R].
    pub fn build(n_particles: usize, scale_r: f64, samples: usize, seed: u64) -> Result<Self> {
        if n_particles == 0 {
            return Err(Error::Precondition("need at least one particle".into()));
        }
        if !(scale_r > 0.0) || !scale_r.is_finite() {
            return Err(Error::Precondition(format!("partition scale must be positive, got {scale_r}")));
        }
        let mut out = Self {
            n_particles,
            scale_r,
            sup_grad: vec![0.0; n_particles + 1],
            sup_hess: vec![0.0; n_particles + 1],
            delta: 1.0,
            samples,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut phi_min, mut phi_max) = (f64::INFINITY, 0.0f64);
        for _ in 0..samples {
            let x = out.random_point(&mut rng);
            let p = out.phi(&x);
            phi_min = phi_min.min(p);
            phi_max = phi_max.max(p);
            let grads = out.gradients(&x);
            for (a, g) in grads.iter().enumerate() {
                let n = g.iter().map(|v| v * v).sum::<f64>().sqrt();
                out.sup_grad[a] = out.sup_grad[a].max(n);
            }
            let hess = out.hessian_max_entries(&x);
            for (a, h) in hess.iter().enumerate() {
                out.sup_hess[a] = out.sup_hess[a].max(*h);
            }
        }
        out.delta = phi_min.min(1.0 / phi_max);
        Ok(out)
    }

    pub fn new(n_particles: usize, scale_r: f64) -> Result<Self> {
        Self::build(n_particles, scale_r, 4000, 17)
    }

    /// A point with each particle at radius uniform in [0, 2.5R] and a uniform direction.
    pub fn random_point(&self, rng: &mut impl Rng) -> Vec<[f64; 3]> {
        (0..self.n_particles)
            .map(|_| {
                let r = 2.5 * self.scale_r * rng.gen::<f64>();
                let u = 2.0 * rng.gen::<f64>() - 1.0;
                let t = 2.0 * std::f64::consts::PI * rng.gen::<f64>();
                let s = (1.0 - u * u).sqrt();
                [r * s * t.cos(), r * s * t.sin(), r * u]
            })
            .collect()
    }

    fn scaled(&self, x: &[[f64; 3]]) -> Vec<[f64; 3]> {
        assert_eq!(x.len(), self.n_particles, "wrong particle count");
        x.iter().map(|p| p.map(|c| c / self.scale_r)).collect()
    }

    pub fn phi(&self, x: &[[f64; 3]]) -> f64 {
        tilde(&self.scaled(x)).0.iter().map(|v| v * v).sum()
    }

    /// χ₀(x)…χ_N(x).
    pub fn values(&self, x: &[[f64; 3]]) -> Vec<f64> {
        let (t, _) = tilde(&self.scaled(x));
        let s = t.iter().map(|v| v * v).sum::<f64>().sqrt();
        t.iter().map(|v| v / s).collect()
    }

    /// ∇χ_a in R^{3N} for every a.
    pub fn gradients(&self, x: &[[f64; 3]]) -> Vec<Vec<f64>> {
        let (t, tg) = tilde(&self.scaled(x));
        let phi: f64 = t.iter().map(|v| v * v).sum();
        let dim = 3 * self.n_particles;
        let mut dphi = vec![0.0; dim];
        for (v, g) in t.iter().zip(&tg) {
            for k in 0..dim {
                dphi[k] += 2.0 * v * g[k];
            }
        }
        let inv_r = 1.0 / self.scale_r;
        let sq = phi.sqrt();
        t.iter()
            .zip(&tg)
            .map(|(v, g)| (0..dim).map(|k| (g[k] / sq - 0.5 * v * dphi[k] / (phi * sq)) * inv_r).collect())
            .collect()
    }

    /// max_{k,l} |∂_k∂_l χ_a(x)| by central differences of the gradient.
    pub fn hessian_max_entries(&self, x: &[[f64; 3]]) -> Vec<f64> {
        let dim = 3 * self.n_particles;
        let step = 1e-5 * self.scale_r;
        let mut out = vec![0.0f64; self.n_particles + 1];
        let mut xp = x.to_vec();
        for l in 0..dim {
            let (pa, pc) = (l / 3, l % 3);
            xp[pa][pc] = x[pa][pc] + step;
            let gp = self.gradients(&xp);
            xp[pa][pc] = x[pa][pc] - step;
            let gm = self.gradients(&xp);
            xp[pa][pc] = x[pa][pc];
            for a in 0..=self.n_particles {
                for k in 0..dim {
                    out[a] = out[a].max(((gp[a][k] - gm[a][k]) / (2.0 * step)).abs());
                }
            }
        }
        out
    }

    /// Σ_a (‖∇χ_a‖ + ‖∂²χ_a‖)(1 + ‖∇χ_a‖)², the scale factor of the localization bound.
    pub fn bound_factor(&self) -> f64 {
        self.sup_grad.iter().zip(&self.sup_hess).map(|(g, h)| (g + h) * (1.0 + g) * (1.0 + g)).sum()
    }

    /// One-particle functions χ_a sampled on a grid (only for N = 1).
    pub fn sample_one_particle(&self, grid: &Grid<f64>) -> Result<Vec<Vec<f64>>> {
        if self.n_particles != 1 {
            return Err(Error::Precondition("grid sampling needs a one-particle partition".into()));
        }
        let mut out = vec![Vec::with_capacity(grid.len()); 2];
        for i in 0..grid.len() {
            let v = self.values(&[grid.position(i)]);
            out[0].push(v[0]);
            out[1].push(v[1]);
        }
        Ok(out)
    }
}

/// Checks Σχ_a² = 1 and χ_a ∈ [0, 1] at seeded random points.
pub fn partition_exactness_report(part: &PartitionOfUnity, points: usize, seed: u64) -> LemmaReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut in_range = true;
    for _ in 0..points {
        let x = part.random_point(&mut rng);
        let v = part.values(&x);
        worst = worst.max((v.iter().map(|c| c * c).sum::<f64>() - 1.0).abs());
        in_range &= v.iter().all(|c| (0.0..=1.0 + 1e-15).contains(c));
    }
    let r = LemmaReport::at_most("partition.exactness", worst, 1e-10, 0.0)
        .input("n_particles", part.n_particles)
        .input("r", part.scale_r)
        .input("points", points)
        .detail("delta", part.delta)
        .detail("bound_factor", part.bound_factor());
    if in_range {
        r
    } else {
        r.force_fail("some χ_a left [0, 1]")
    }
}

/// Σ_a ∇(χ_a²/2) at seeded random points; vanishes identically since Σχ_a² = 1.
pub fn first_order_cross_term(part: &PartitionOfUnity, points: usize, seed: u64) -> LemmaReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..points {
        let x = part.random_point(&mut rng);
        let v = part.values(&x);
        let g = part.gradients(&x);
        let mut s = vec![0.0; 3 * part.n_particles];
        for (va, ga) in v.iter().zip(&g) {
            for (sk, gk) in s.iter_mut().zip(ga) {
                *sk += va * gk;
            }
        }
        worst = worst.max(s.iter().map(|c| c.abs()).fold(0.0, f64::max) * part.scale_r);
    }
    LemmaReport::at_most("partition.first_order_commutation", worst, 1e-10, 0.0)
        .input("n_particles", part.n_particles)
        .input("r", part.scale_r)
}

/// Localization error of the one-particle form on the band-limited grid range of Λ₊.
pub struct LocalizationProblem {
    proj: Projector<f64>,
    inv_r: Vec<f64>,
    chis: Vec<Vec<f64>>,
    alpha_z: f64,
    band: f64,
}

impl LocalizationProblem {
    /// `chis` are the partition functions on the grid; `band` is the kept
    /// fraction of the Nyquist momentum.
    pub fn new(grid: Grid<f64>, chis: Vec<Vec<f64>>, params: &CouplingParams, band: f64) -> Self {
        Self { proj: Projector::new(grid), inv_r: inverse_radius(&grid), chis, alpha_z: params.alpha_z(), band }
    }

    pub fn for_partition(grid: Grid<f64>, part: &PartitionOfUnity, params: &CouplingParams, band: f64) -> Result<Self> {
        Ok(Self::new(grid, part.sample_one_particle(&grid)?, params, band))
    }

    pub fn grid(&self) -> &Grid<f64> {
        self.proj.grid()
    }

    fn restrict(&self, f: &SpinorField<f64>) -> SpinorField<f64> {
        self.proj.apply(&band_limit(&self.proj, f, self.band))
    }

    fn b(&self, f: &SpinorField<f64>) -> SpinorField<f64> {
        apply_br_operator(&self.proj, &self.inv_r, f, self.alpha_z)
    }

    /// E f = Bf − Σ_a χ_a B(χ_a f) with B = Λ₊(D − αZ/|x|)Λ₊.
    pub fn error_operator(&self, f: &SpinorField<f64>) -> SpinorField<f64> {
        let mut out = self.b(f);
        for chi in &self.chis {
            let t = self.b(&f.multiply_scalar(chi)).multiply_scalar(chi);
            out = out.sub(&t);
        }
        out
    }

    /// (⟨Bf,f⟩, Σ_a⟨Bχ_a f, χ_a f⟩) for f already in the restricted range.
    pub fn forms(&self, f: &SpinorField<f64>) -> (f64, f64) {
        let whole = f.inner(&self.b(f)).re;
        let parts = self.chis.iter().map(|chi| {
            let g = f.multiply_scalar(chi);
            g.inner(&self.b(&g)).re
        });
        (whole, parts.sum())
    }

    fn d_power(&self, f: &SpinorField<f64>, s: f64) -> SpinorField<f64> {
        let mut ff = self.proj.to_fourier(f);
        let e = self.proj.energies();
        for comp in ff.comps.iter_mut() {
            for (v, &ei) in comp.iter_mut().zip(e) {
                *v *= ei.powf(s);
            }
        }
        self.proj.to_spinor(&ff)
    }

    /// Power iteration for sup_f |⟨Ef,f⟩|/⟨Df,f⟩ over the restricted range,
    /// started from `start`. Returns the estimate and the maximizing field.
    pub fn relative_error_sup(&self, start: &SpinorField<f64>, steps: usize) -> (f64, SpinorField<f64>) {
        let op = |u: &SpinorField<f64>| {
            let v = self.restrict(&self.d_power(u, -0.5));
            self.d_power(&self.restrict(&self.error_operator(&v)), -0.5)
        };
        let mut u = self.restrict(start);
        let n = u.norm();
        u.scale(Complex64::new(1.0 / n, 0.0));
        let mut best = 0.0f64;
        let mut arg = u.clone();
        for _ in 0..steps {
            let w = op(&u);
            let ray = u.inner(&w).re.abs();
            if ray > best {
                best = ray;
                arg = u.clone();
            }
            let n = w.norm();
            if !(n > 0.0) {
                break;
            }
            u = w.scaled(Complex64::new(1.0 / n, 0.0));
        }
        let f = self.restrict(&self.d_power(&arg, -0.5));
        (best, f)
    }
}

/// Localization check for a one-particle partition: the worst relative error
/// over power iterations started from each ensemble field, against
/// `LOCALIZATION_CONSTANT · bound_factor`.
pub fn localization_check(
    fields: &[SpinorField<f64>],
    part: &PartitionOfUnity,
    params: &CouplingParams,
    band: f64,
    steps: usize,
) -> Result<LemmaReport> {
    let first = fields.first().ok_or_else(|| Error::Precondition("empty field ensemble".into()))?;
    let problem = LocalizationProblem::for_partition(first.grid, part, params, band)?;
    let mut worst = 0.0f64;
    let mut worst_form_ratio = 0.0f64;
    for f in fields {
        let (e, arg) = problem.relative_error_sup(f, steps);
        let (whole, parts) = problem.forms(&arg);
        worst_form_ratio = worst_form_ratio.max((whole - parts).abs() / whole);
        worst = worst.max(e);
    }
    let factor = part.bound_factor();
    Ok(LemmaReport::at_most("localization.error", worst, LOCALIZATION_CONSTANT * factor, 0.0)
        .input("r", part.scale_r)
        .input("z", params.z)
        .input("grid_n", first.grid.n())
        .input("box_l", first.grid.box_l())
        .input("fields", fields.len())
        .detail("bound_factor", factor)
        .detail("constant", LOCALIZATION_CONSTANT)
        .detail("error_over_form", worst_form_ratio)
        .note("error relative to ⟨Df,f⟩; ⟨Hf,f⟩ ≥ (1 − Z/Z_c)⟨Df,f⟩ converts it to the form of H"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn squares_sum_to_one() {
        for n in 1..=3 {
            let p = PartitionOfUnity::build(n, 3.0, 500, 1).unwrap();
            let r = partition_exactness_report(&p, 2000, 2);
            assert!(r.pass, "{r:?}");
            assert!(p.delta > 0.0 && p.delta <= 1.0);
        }
    }

    #[test]
    fn gradient_matches_finite_difference() {
        let p = PartitionOfUnity::new(2, 2.0).unwrap();
        let x = vec![[2.5, 0.4, -0.3], [0.7, 3.1, 0.2]];
        let g = p.gradients(&x);
        let h = 1e-6;
        for l in 0..6 {
            let mut xp = x.clone();
            xp[l / 3][l % 3] += h;
            let mut xm = x.clone();
            xm[l / 3][l % 3] -= h;
            let (vp, vm) = (p.values(&xp), p.values(&xm));
            for a in 0..3 {
                assert!(((vp[a] - vm[a]) / (2.0 * h) - g[a][l]).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn derivative_norms_scale_with_r() {
        let a = PartitionOfUnity::new(2, 4.0).unwrap();
        let b = PartitionOfUnity::new(2, 8.0).unwrap();
        for k in 0..3 {
            assert!((a.sup_grad[k] / b.sup_grad[k] - 2.0).abs() < 0.2 * 2.0);
            assert!((a.sup_hess[k] / b.sup_hess[k] - 4.0).abs() < 0.2 * 4.0);
        }
    }

    #[test]
    fn cross_term_vanishes() {
        let p = PartitionOfUnity::new(3, 5.0).unwrap();
        assert!(first_order_cross_term(&p, 1000, 3).pass);
    }

    #[test]
    fn trivial_partition_has_no_error() {
        let g = Grid::new(12, 8.0).unwrap();
        let params = CouplingParams::with_z(20.0).unwrap();
        let prob = LocalizationProblem::new(g, vec![vec![1.0; g.len()]], &params, 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let f = prob.restrict(&crate::projector::gaussian_field(g, &mut rng));
        let (whole, parts) = prob.forms(&f);
        assert!((whole - parts).abs() < 1e-12 * whole.abs());
    }

    #[test]
    fn rejects_bad_scale() {
        assert!(PartitionOfUnity::new(1, 0.0).is_err());
        assert!(PartitionOfUnity::new(0, 1.0).is_err());
    }
}
