//! Weyl sequence at E₁ + λ for two electrons: a shell ψ_j of radius ~R_j
//! carrying the plane wave e^{ik·y}u(k), paired with the one-particle ground
//! state φ. Every term of the residual estimate is measured next to its bound.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::report::LemmaReport;
use crate::besselk::g_decay_f64;
use crate::cutoff::CutoffProfile;
use crate::dirac::{dirac_matrices, mat_vec, positive_eigenvector, Spinor};
use crate::error::{Error, Result};
use crate::grid::{Grid, SpinorField};
use crate::hamiltonian::{ground_state_with, inverse_radius, CouplingParams};
use crate::hartree::FreeSpaceConvolution;
use crate::lanczos::LanczosOptions;
use crate::projector::{dirac_mode, Projector};
use crate::slater::{two_particle_energy_terms, SlaterState};

/// Shell profile: rises on [1, 1.3], falls on [1.7, 2].
pub fn weyl_profile(r_j: f64) -> CutoffProfile {
    CutoffProfile::shell(1.0, 1.3, 1.7, 2.0, r_j)
}

/// η_j: 1 on B(R_j/2), 0 outside B(3R_j/4).
pub fn near_cutoff(r_j: f64) -> CutoffProfile {
    CutoffProfile::ball(0.5, 0.75, r_j)
}

#[derive(Clone, Debug)]
pub struct WeylState {
    pub r_j: f64,
    pub lambda_target: f64,
    /// √(1 + |k|²) for the snapped k.
    pub lambda: f64,
    pub k: [f64; 3],
    pub u: Spinor<f64>,
    pub profile: CutoffProfile,
    /// Normalized R_j^{−3/2}χ(y/R_j)e^{ik·y}u on the grid.
    pub psi: SpinorField<f64>,
    /// Grid norm of the unnormalized envelope, used to scale ∇χ_j.
    envelope_norm: f64,
}

/// Builds ψ_j with |k| = √(λ² − 1) along a seeded direction, snapped to the
/// dual lattice so that e^{ik·y} is periodic on the grid.
pub fn build_weyl_state(grid: &Grid<f64>, lambda: f64, r_j: f64, seed: u64) -> Result<WeylState> {
    if !(lambda >= 1.0) {
        return Err(Error::Precondition(format!("λ must be at least 1, got {lambda}")));
    }
    let profile = weyl_profile(r_j);
    if profile.outer_radius() > grid.box_l() / 2.0 {
        return Err(Error::Precondition(format!("shell at R_j = {r_j} does not fit box {}", grid.box_l())));
    }
    if 0.3 * r_j < 2.0 * grid.spacing() {
        return Err(Error::Precondition(format!("shell at R_j = {r_j} is not resolved by spacing {}", grid.spacing())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dir = loop {
        let v: [f64; 3] = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 0.1 && n <= 1.0 {
            break v.map(|c| c / n);
        }
    };
    let kabs = (lambda * lambda - 1.0).sqrt();
    let k = grid.snap_momentum(dir.map(|c| c * kabs));
    let realized = (1.0 + k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt();
    let u = positive_eigenvector(k, seed);
    let chi = profile.sample(grid);
    let mut psi = SpinorField::zeros(*grid);
    for (idx, &c) in chi.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        let x = grid.position(idx);
        let phase = Complex64::from_polar(c, k[0] * x[0] + k[1] * x[1] + k[2] * x[2]);
        psi.set(idx, u.map(|ui| ui * phase));
    }
    let envelope_norm = psi.norm();
    if envelope_norm == 0.0 {
        return Err(Error::Precondition("shell has no grid nodes".into()));
    }
    psi.scale(Complex64::new(1.0 / envelope_norm, 0.0));
    Ok(WeylState { r_j, lambda_target: lambda, lambda: realized, k, u, profile, psi, envelope_norm })
}

/// Copies a field from a grid with the same spacing into the centre of a larger one.
pub fn embed_centered(f: &SpinorField<f64>, target: &Grid<f64>) -> Result<SpinorField<f64>> {
    let (n, m) = (f.grid.n(), target.n());
    if (f.grid.spacing() - target.spacing()).abs() > 1e-12 * target.spacing() || m < n || (m - n) % 2 != 0 {
        return Err(Error::Precondition("embedding needs equal spacing and an even size difference".into()));
    }
    let off = (m - n) / 2;
    let mut out = SpinorField::zeros(*target);
    for idx in 0..f.grid.len() {
        let (ix, iy, iz) = f.grid.unravel(idx);
        out.set(target.index(ix + off, iy + off, iz + off), f.at(idx));
    }
    Ok(out)
}

/// Shared data for all states on one grid: the ground state factor and the
/// 1/|x|² convolution used for the interaction pieces.
pub struct WeylContext {
    pub grid: Grid<f64>,
    pub params: CouplingParams,
    pub phi: SpinorField<f64>,
    /// E₁ of the factor.
    pub e_prev: f64,
    /// ‖(h − E₁)φ‖ from the eigensolver.
    pub phi_residual: f64,
    proj: Projector<f64>,
    inv_r: Vec<f64>,
    conv2: FreeSpaceConvolution,
}

impl WeylContext {
    pub fn new(grid: Grid<f64>, params: CouplingParams, phi: SpinorField<f64>, e_prev: f64, phi_residual: f64) -> Result<Self> {
        if phi.grid != grid {
            return Err(Error::Precondition("φ lives on a different grid".into()));
        }
        let n = phi.norm();
        if !(n > 0.0) {
            return Err(Error::Precondition("φ is zero".into()));
        }
        let phi = phi.scaled(Complex64::new(1.0 / n, 0.0));
        Ok(Self { grid, params, phi, e_prev, phi_residual, proj: Projector::new(grid), inv_r: inverse_radius(&grid), conv2: FreeSpaceConvolution::new(grid, 2) })
    }

    /// Solves for φ on a centred `inner_n`³ grid with the same spacing and embeds it.
    pub fn from_ground_state(grid: Grid<f64>, params: CouplingParams, inner_n: usize, opts: &LanczosOptions, seed: u64) -> Result<Self> {
        let inner_box = inner_n as f64 * grid.spacing();
        let gs = ground_state_with(&params, inner_n, inner_box, opts, seed)?;
        let phi = embed_centered(&gs.state, &grid)?;
        Self::new(grid, params, phi, gs.result.e1, gs.result.residual)
    }

    pub fn projector(&self) -> &Projector<f64> {
        &self.proj
    }

    fn gradient(&self, f: &SpinorField<f64>) -> [SpinorField<f64>; 3] {
        let ff = self.proj.to_fourier(f);
        std::array::from_fn(|a| {
            let mut d = ff.clone();
            for (idx, p) in self.proj.momenta().iter().enumerate() {
                let s = Complex64::new(0.0, p[a]);
                d.set(idx, ff.at(idx).map(|v| v * s));
            }
            self.proj.to_spinor(&d)
        })
    }

    fn masked_norm(&self, f: &SpinorField<f64>, mask: impl Fn(f64) -> f64) -> f64 {
        let mut s = 0.0;
        for idx in 0..self.grid.len() {
            let x = self.grid.position(idx);
            let w = mask((x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt());
            if w != 0.0 {
                s += w * w * f.at(idx).iter().map(|c| c.norm_sqr()).sum::<f64>();
            }
        }
        (s * self.grid.cell_volume()).sqrt()
    }

    /// ‖ρ(x₁)|x₁ − x₂|⁻¹g(x₂)‖ with ρ = |φ| restricted by `rho_mask` and g by `g_mask`.
    fn interaction_piece(&self, g: &SpinorField<f64>, rho_mask: impl Fn(f64) -> f64, g_mask: &[f64]) -> f64 {
        let len = self.grid.len();
        let mut n_rho = vec![Complex64::new(0.0, 0.0); len];
        let mut n_g = vec![Complex64::new(0.0, 0.0); len];
        let dphi = self.phi.density();
        let dg = g.density();
        for idx in 0..len {
            let x = self.grid.position(idx);
            let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
            n_rho[idx] = Complex64::new(rho_mask(r) * dphi.data[idx], 0.0);
            n_g[idx] = Complex64::new(g_mask[idx] * g_mask[idx] * dg.data[idx], 0.0);
        }
        self.conv2.pair_energy(&n_rho, &n_g).re.max(0.0).sqrt()
    }
}

/// Measured value and bound of one term.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeylTerm {
    pub name: &'static str,
    pub measured: f64,
    pub bound: f64,
}

/// Terms of the residual in a fixed order.
pub fn weyl_terms(ctx: &WeylContext, state: &WeylState) -> Vec<WeylTerm> {
    let proj = &ctx.proj;
    let params = &ctx.params;
    let az = params.alpha_z();
    let alpha = params.alpha;
    let r = state.r_j;
    let lpsi = proj.apply(&state.psi);
    let lnorm = lpsi.norm();

    // (D − λ)Λ₊ψ and ‖α·∇χ_j u‖ = ‖∇χ_j‖ for unit u
    let mut ff = proj.to_fourier(&lpsi);
    let mut grad_chi2 = 0.0;
    let chi_field = {
        let chi = state.profile.sample(&ctx.grid);
        let mut f = SpinorField::zeros(ctx.grid);
        for (idx, c) in chi.iter().enumerate() {
            f.comps[0][idx] = Complex64::new(c / state.envelope_norm, 0.0);
        }
        f
    };
    for g in ctx.gradient(&chi_field) {
        grad_chi2 += g.norm_sqr();
    }
    for (idx, p) in proj.momenta().iter().enumerate() {
        let v = ff.at(idx);
        let dv = dirac_mode(*p, &v);
        ff.set(idx, std::array::from_fn(|c| dv[c] - v[c] * state.lambda));
    }
    let kinetic = proj.to_spinor(&ff).norm();

    let eta = near_cutoff(r);
    let eta_s = eta.sample(&ctx.grid);
    let grad_eta = eta.sup_grad;
    let near = lpsi.multiply_scalar(&eta_s.iter().zip(&ctx.inv_r).map(|(e, w)| e * w).collect::<Vec<_>>()).norm();
    let far = lpsi.multiply_scalar(&eta_s.iter().zip(&ctx.inv_r).map(|(e, w)| (1.0 - e) * w).collect::<Vec<_>>()).norm();

    let grad_psi = ctx.gradient(&state.psi);
    let grad_psi_norm = grad_psi.iter().map(|g| g.norm_sqr()).sum::<f64>().sqrt();
    let inner_ball = 0.75 * r;
    let lgrad_near = grad_psi
        .iter()
        .map(|g| ctx.masked_norm(&proj.apply(g), |s| if s < inner_ball { 1.0 } else { 0.0 }).powi(2))
        .sum::<f64>()
        .sqrt();
    let vol = |rad: f64| 4.0 * PI / 3.0 * rad.powi(3);
    let decay_rhs = vol(inner_ball).sqrt() * g_decay_f64(r / 4.0) * vol(2.0 * r).sqrt() * grad_psi_norm;

    let quarter = 0.25 * r;
    let rho_out = ctx.masked_norm(&ctx.phi, |s| if s >= quarter { 1.0 } else { 0.0 });
    let ones = vec![1.0; ctx.grid.len()];
    let one_minus_eta: Vec<f64> = eta_s.iter().map(|e| 1.0 - e).collect();
    let ee_outer = alpha * ctx.interaction_piece(&lpsi, |s| if s >= quarter { 1.0 } else { 0.0 }, &ones);
    let ee_near = alpha * ctx.interaction_piece(&lpsi, |s| if s < quarter { 1.0 } else { 0.0 }, &eta_s);
    let ee_far = alpha * ctx.interaction_piece(&lpsi, |s| if s < quarter { 1.0 } else { 0.0 }, &one_minus_eta);

    vec![
        WeylTerm { name: "kinetic", measured: kinetic, bound: grad_chi2.sqrt() + 1e-8 },
        WeylTerm { name: "lambda_gap", measured: lpsi.sub(&state.psi).norm(), bound: 1.0 },

        WeylTerm { name: "nuclear_near", measured: az * near, bound: az * (2.0 * grad_eta * lnorm + 2.0 * lgrad_near) },
        WeylTerm { name: "gradient_near", measured: lgrad_near, bound: decay_rhs },
        WeylTerm { name: "nuclear_far", measured: az * far, bound: 2.0 * az / r * lnorm },
        WeylTerm { name: "interaction_outer", measured: ee_outer, bound: 2.0 * alpha * grad_psi_norm * rho_out },
        WeylTerm {
            name: "interaction_near",
            measured: ee_near,
            bound: 2.0 * alpha * grad_eta + 2.0 * alpha * decay_rhs,
        },
        WeylTerm { name: "interaction_far", measured: ee_far, bound: 4.0 * alpha / r },
    ]
}

/// Terms that enter the residual ‖(H₂ − E₁ − λ)Λ₊Ψ_j‖ proxy.
pub const RESIDUAL_TERMS: [&str; 6] = ["kinetic", "nuclear_near", "nuclear_far", "interaction_outer", "interaction_near", "interaction_far"];

/// Every measured term against its bound; the headline value is the residual
/// proxy (sum of the measured residual terms plus the eigensolver residual of φ).
pub fn weyl_residual_report(ctx: &WeylContext, state: &WeylState) -> LemmaReport {
    let terms = weyl_terms(ctx, state);
    let proxy: f64 = ctx.phi_residual + terms.iter().filter(|t| RESIDUAL_TERMS.contains(&t.name)).map(|t| t.measured).sum::<f64>();
    let bound: f64 = ctx.phi_residual + terms.iter().filter(|t| RESIDUAL_TERMS.contains(&t.name)).map(|t| t.bound).sum::<f64>();
    let mut report = LemmaReport::at_most("weyl.residual", proxy, bound, 1e-8)
        .input("r_j", state.r_j)
        .input("lambda", state.lambda_target)
        .input("z", ctx.params.z)
        .input("grid_n", ctx.grid.n())
        .input("box_l", ctx.grid.box_l())
        .detail("lambda_realized", state.lambda)
        .detail("k_abs", (state.k[0].powi(2) + state.k[1].powi(2) + state.k[2].powi(2)).sqrt())
        .detail("e_prev", ctx.e_prev)
        .detail("phi_residual", ctx.phi_residual);
    for t in &terms {
        report = report.detail(t.name, t.measured).detail(&format!("{}_bound", t.name), t.bound);
    }
    for t in &terms {
        if t.measured > t.bound + 1e-8 {
            report = report.force_fail(&format!("{} exceeds its bound", t.name));
        }
    }
    report
}

/// Monotone decrease over an increasing R_j sweep of every measured residual
/// term, of their sum and of the sum of their bounds.
pub fn weyl_trend_report(reports: &[LemmaReport]) -> LemmaReport {
    let mut names: Vec<&str> = RESIDUAL_TERMS.to_vec();
    names.extend(["lambda_gap", "total", "bound_total"]);
    let value = |r: &LemmaReport, n: &str| match n {
        "total" => r.measured,
        "bound_total" => r.bound,
        _ => r.details.get(n).copied().unwrap_or(f64::NAN),
    };
    let mut violations = 0usize;
    let mut out = LemmaReport::at_most("weyl.trend", 0.0, 0.0, 0.0);
    for n in &names {
        for w in reports.windows(2) {
            let (a, b) = (value(&w[0], n), value(&w[1], n));
            if !(b < a) {
                violations += 1;
                out = out.note(format!("{n} does not decrease: {a:.3e} -> {b:.3e}"));
            }
        }
        if let (Some(first), Some(last)) = (reports.first(), reports.last()) {
            out = out.detail(&format!("{n}_ratio"), value(last, n) / value(first, n));
        }
    }
    let mut rep = LemmaReport::at_most("weyl.trend", violations as f64, 0.0, 0.0);
    rep.details = out.details;
    rep.notes = out.notes;
    if let Some(first) = reports.first() {
        rep = rep.input("lambda", first.inputs.get("lambda").cloned().unwrap_or_default());
    }
    rep.input("r_values", reports.iter().map(|r| r.inputs.get("r_j").cloned().unwrap_or_default()).collect::<Vec<_>>())
}

/// ‖P_A(φ ⊗ Λ₊ψ_j)‖² = ‖φ‖²‖Λ₊ψ_j‖² − |⟨φ, Λ₊ψ_j⟩|² with the split of the
/// overlap at B(R_j/2); the pass threshold is `delta0`.
pub fn antisym_overlap_check(ctx: &WeylContext, state: &WeylState, delta0: f64) -> LemmaReport {
    let lpsi = ctx.proj.apply(&state.psi);
    let half = 0.5 * state.r_j;
    let mask_in: Vec<f64> = (0..ctx.grid.len())
        .map(|idx| {
            let x = ctx.grid.position(idx);
            if (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt() < half {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    let mask_out: Vec<f64> = mask_in.iter().map(|m| 1.0 - m).collect();
    let overlap = ctx.phi.inner(&lpsi);
    let norm_sqr = ctx.phi.norm_sqr() * lpsi.norm_sqr() - overlap.norm_sqr();
    let phi_out = ctx.phi.multiply_scalar(&mask_out);
    let lpsi_in = lpsi.multiply_scalar(&mask_in);
    let t1 = phi_out.inner(&lpsi).norm() * overlap.norm();
    let t2 = ctx.phi.inner(&lpsi_in).norm() * overlap.norm();
    let mut rep = LemmaReport::at_least("weyl.antisymmetrized_norm", norm_sqr, delta0, 0.0)
        .input("r_j", state.r_j)
        .input("lambda", state.lambda_target)
        .input("z", ctx.params.z)
        .detail("overlap_sqr", overlap.norm_sqr())
        .detail("split_outer", t1)
        .detail("split_inner", t2)
        .detail("phi_outside_half", phi_out.norm())
        .detail("lambda_psi_inside_half", lpsi_in.norm())
        .detail("lower_bound", 1.0 - 0.5 * overlap.norm_sqr());
    if overlap.norm_sqr() > t1 + t2 + 1e-15 {
        rep = rep.force_fail("indicator split does not bound the overlap");
    }
    rep
}

/// Two-particle Rayleigh value on P_A(φ ⊗ ψ_j) against E₁ + λ (realized λ).
pub fn weyl_energy_report(ctx: &WeylContext, state: &WeylState, tolerance: f64) -> Result<LemmaReport> {
    let st = SlaterState::product(ctx.phi.clone(), state.psi.clone(), true);
    let e = two_particle_energy_terms(&st, &ctx.params, true)?;
    let target = ctx.e_prev + state.lambda;
    let rel = (e.value() - target).abs() / target;
    Ok(LemmaReport::at_most("weyl.rayleigh", rel, tolerance, 0.0)
        .input("r_j", state.r_j)
        .input("lambda", state.lambda_target)
        .input("z", ctx.params.z)
        .detail("rayleigh", e.value())
        .detail("target", target)
        .detail("without_interaction", e.without_interaction())
        .detail("interaction", e.alpha * e.interaction / e.norm_sqr)
        .detail("norm_sqr", e.norm_sqr))
}

/// Checks D u = λu for the state's spinor; used by tests and the CLI self-check.
pub fn eigen_defect(state: &WeylState) -> f64 {
    let m = dirac_matrices::<f64>();
    let mut du = mat_vec(&m.beta, &state.u);
    for (a, al) in m.alpha.iter().enumerate() {
        let v = mat_vec(al, &state.u);
        for c in 0..4 {
            du[c] += v[c] * state.k[a];
        }
    }
    (0..4).map(|c| (du[c] - state.u[c] * state.lambda).norm_sqr()).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid<f64> {
        Grid::new(32, 32.0).unwrap()
    }

    #[test]
    fn threshold_state_has_zero_momentum() {
        let s = build_weyl_state(&grid(), 1.0, 8.0, 3).unwrap();
        assert_eq!(s.k, [0.0; 3]);
        assert_eq!(s.lambda, 1.0);
        assert!(eigen_defect(&s) < 1e-14);
        assert!((s.psi.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn snapped_state_is_an_eigenvector_at_realized_lambda() {
        let g = grid();
        let s = build_weyl_state(&g, 1.2, 8.0, 9).unwrap();
        assert!((s.lambda - 1.2).abs() < 0.1);
        assert!(eigen_defect(&s) < 1e-13);
        for c in s.k {
            let m = c / g.dual_spacing();
            assert!((m - m.round()).abs() < 1e-12);
        }
    }

    #[test]
    fn doubled_shells_are_orthogonal() {
        let g = Grid::new(64, 64.0).unwrap();
        let a = build_weyl_state(&g, 1.2, 8.0, 1).unwrap();
        let b = build_weyl_state(&g, 1.2, 16.0, 1).unwrap();
        assert!(a.psi.inner(&b.psi).norm() < 1e-10);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(build_weyl_state(&grid(), 0.9, 8.0, 1).is_err());
        assert!(build_weyl_state(&grid(), 1.1, 20.0, 1).is_err());
        assert!(build_weyl_state(&grid(), 1.1, 1.0, 1).is_err());
    }

    #[test]
    fn embedding_keeps_positions() {
        let small = Grid::new(8, 12.0).unwrap();
        let big = Grid::new(16, 24.0).unwrap();
        let f = SpinorField::from_fn(small, |x| [Complex64::new(x[0] + 2.0 * x[1] - x[2], 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)]);
        let e = embed_centered(&f, &big).unwrap();
        for idx in 0..big.len() {
            let x = big.position(idx);
            let v = e.comps[0][idx].re;
            if x.iter().all(|c| c.abs() < 6.0) {
                assert!((v - (x[0] + 2.0 * x[1] - x[2])).abs() < 1e-12);
            } else {
                assert_eq!(v, 0.0);
            }
        }
        assert!(embed_centered(&f, &Grid::new(15, 22.5).unwrap()).is_err());
    }

    #[test]
    fn disjoint_factor_has_unit_antisymmetrized_norm() {
        // φ confined near the origin, far from the shell, without Λ₊ tails
        let g = Grid::new(32, 48.0).unwrap();
        let params = CouplingParams::with_z(20.0).unwrap();
        let phi = SpinorField::from_fn(g, |x: [f64; 3]| {
            let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
            let v = if r < 2.0 { (1.0 - (r / 2.0).powi(2)).powi(3) } else { 0.0 };
            [Complex64::new(v, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)]
        });
        let ctx = WeylContext::new(g, params, phi, 0.99, 0.0).unwrap();
        let s = build_weyl_state(&g, 1.0, 10.0, 2).unwrap();
        assert!(ctx.phi.inner(&s.psi).norm() == 0.0);
        let rep = antisym_overlap_check(&ctx, &s, 0.9);
        // only the Λ₊ loss of the shell remains
        let lpsi = ctx.projector().apply(&s.psi);
        let expected = ctx.phi.norm_sqr() * lpsi.norm_sqr();
        assert!(rep.pass && (rep.measured - expected).abs() < 1e-10, "{rep:?}");
    }
}
