//! Constants of the lower bound away from threshold and the chain of
//! inequalities that turns the form of a localized state into Fourier mass
//! outside the cube {|p_i| ≤ M}.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::band_limit;
use super::commutator::CommutatorProbe;
use super::fourier_mass::{mode_bound, mode_cutoff};
use super::report::LemmaReport;
use crate::cutoff::CutoffProfile;
use crate::error::{Error, Result};
use crate::grid::{Grid, SpinorField};
use crate::hamiltonian::{br_one_particle_terms_with, CouplingParams};
use crate::projector::{gaussian_field, Projector};

/// M = √((8Z_c(E + 1)/(Z_c − Z))² − 1) for the previous-level bottom E.
pub fn momentum_cutoff(params: &CouplingParams, e_prev: f64) -> Result<f64> {
    let zc = params.z_c();
    if params.z >= zc {
        return Err(Error::Domain(format!("Z = {} is not below Z_c = {zc}", params.z)));
    }
    let s = 8.0 * zc * (e_prev + 1.0) / (zc - params.z);
    Ok((s * s - 1.0).sqrt())
}

/// Grid and sampling choices for the chain check (one electron, χ₀ = ball
/// cutoff of radius 2R). The default grid resolves M up to Z ≈ 60 at E = 0.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HardPartSetup {
    pub grid_n: usize,
    pub box_l: f64,
    pub scale_r: f64,
    pub band: f64,
    pub samples: usize,
    pub power_steps: usize,
    pub seed: u64,
}

impl Default for HardPartSetup {
    fn default() -> Self {
        Self { grid_n: 48, box_l: 4.0, scale_r: 0.75, band: 0.5, samples: 6, power_steps: 20, seed: 7 }
    }
}

/// ‖I f‖² with I the indicator of {some |p_i| > M}.
fn outside_mass(proj: &Projector<f64>, f: &SpinorField<f64>, m: f64) -> f64 {
    proj.to_fourier(f).weighted_norm_sqr(|p| if p.iter().any(|c| c.abs() > m) { 1.0 } else { 0.0 })
}

/// M, L and the step-by-step chain
///
/// ⟨B g, g⟩ ≥ c⟨Dg, g⟩ ≥ c√(M²+1)‖Ig‖² ≥ c√(M²+1)(½‖Iχ₀ψ‖² − ‖I[Λ₊,χ₀]ψ‖²)
///         ≥ 4(E+1)‖Iχ₀ψ‖² − 8(E+1)‖[Λ₊,χ₀]‖²‖ψ‖²
///
/// with g = Λ₊χ₀ψ, c = (Z_c − Z)/Z_c and B = D − αZ/|x|, on band-limited
/// Λ₊-range samples ψ. The reported measurement is the worst relative gap of
/// the full chain; every link is kept in the details.
pub fn hard_part_constants(params: &CouplingParams, e_prev: f64, setup: &HardPartSetup) -> Result<LemmaReport> {
    let m = momentum_cutoff(params, e_prev)?;
    let r = setup.scale_r;
    let l_real = mode_bound(3, r, m);
    let l = mode_cutoff(3, r, m);
    let first_requirement = 4.0 * 2f64.sqrt() * m * r / std::f64::consts::PI;
    let chi0 = CutoffProfile::ball(1.0, 2.0, r);
    if chi0.outer_radius() > setup.box_l / 2.0 {
        return Err(Error::Precondition(format!("χ₀ at R = {r} does not fit box {}", setup.box_l)));
    }
    let grid = Grid::new(setup.grid_n, setup.box_l)?;
    let proj = Projector::new(grid);
    let probe = CommutatorProbe::new(grid, setup.band);
    let comm_norm = probe.norm(&chi0, 0.0, setup.power_steps, setup.seed);
    let chi = chi0.sample(&grid);
    let inner = CutoffProfile::ball(0.5, 1.0, r).sample(&grid);
    let c = (params.z_c() - params.z) / params.z_c();
    let root = (m * m + 1.0).sqrt();
    let resolved = grid.nyquist() * setup.band;

    let mut rng = ChaCha8Rng::seed_from_u64(setup.seed);
    let mut worst = f64::INFINITY;
    let mut link_worst = [f64::INFINITY; 4];
    let mut comm_ratio_max = 0.0f64;
    let mut outside_max = 0.0f64;
    for s in 0..setup.samples {
        // alternate band widths so that some samples have little mass beyond M
        let frac = setup.band * [1.0, 0.7, 0.5][s % 3];
        // noise concentrated where χ₀ = 1, so that the penalty term does not dominate
        let noise = gaussian_field(grid, &mut rng).multiply_scalar(&inner);
        let psi = proj.apply(&band_limit(&proj, &noise, frac));
        let psi = psi.scaled(Complex64::new(1.0 / psi.norm(), 0.0));
        let loc = band_limit(&proj, &psi.multiply_scalar(&chi), setup.band);
        let g = proj.apply(&loc);
        let comm = g.sub(&loc);
        let terms = br_one_particle_terms_with(&proj, &g, params);
        let form = terms.value();
        let kin = terms.kinetic;
        let ig = outside_mass(&proj, &g, m);
        let iloc = outside_mass(&proj, &loc, m);
        let icomm = outside_mass(&proj, &comm, m);
        let chain = [
            form,
            c * kin,
            c * root * ig,
            c * root * (0.5 * iloc - icomm),
            4.0 * (e_prev + 1.0) * iloc - 8.0 * (e_prev + 1.0) * comm_norm * comm_norm,
        ];
        let scale = kin.max(1e-300);
        for k in 0..4 {
            link_worst[k] = link_worst[k].min((chain[k] - chain[k + 1]) / scale);
        }
        worst = worst.min((chain[0] - chain[4]) / scale);
        comm_ratio_max = comm_ratio_max.max(comm.norm() / comm_norm.max(1e-300));
        outside_max = outside_max.max(iloc);
    }
    let mut report = LemmaReport::at_least("hard_part.step2_chain", worst, 0.0, 0.05)
        .input("z", params.z)
        .input("alpha", params.alpha)
        .input("e_prev", e_prev)
        .input("grid_n", setup.grid_n)
        .input("box_l", setup.box_l)
        .input("r", r)
        .input("band", setup.band)
        .input("samples", setup.samples)
        .input("seed", setup.seed)
        .detail("m", m)
        .detail("l", l as f64)
        .detail("l_formula", l_real)
        .detail("first_requirement_rhs", first_requirement)
        .detail("commutator_norm", comm_norm)
        .detail("commutator_sample_over_norm_max", comm_ratio_max)
        .detail("resolved_momentum", resolved)
        .detail("outside_mass_max", outside_max)
        .detail("link_kato", link_worst[0])
        .detail("link_kinetic_outside", link_worst[1])
        .detail("link_split", link_worst[2])
        .detail("link_commutator", link_worst[3]);
    if l as f64 <= first_requirement {
        report = report.force_fail("first requirement L > 4√2·M·R/π violated");
    }
    if resolved <= m {
        report = report.note("M exceeds the resolved band; outside masses vanish and the chain is trivial");
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weak_coupling_limit() {
        let p = CouplingParams::with_z(1e-9).unwrap();
        let m = momentum_cutoff(&p, 0.0).unwrap();
        assert!((m - 63f64.sqrt()).abs() < 1e-8);
        let e = 0.7;
        let m = momentum_cutoff(&p, e).unwrap();
        assert!((m - ((8.0 * (e + 1.0)) * (8.0 * (e + 1.0)) - 1.0f64).sqrt()).abs() < 1e-8);
    }

    #[test]
    fn first_requirement_holds_for_all_couplings() {
        for z in [1.0, 20.0, 60.0, 100.0, 120.0] {
            let p = CouplingParams::with_z(z).unwrap();
            for r in [0.5, 1.0, 4.0] {
                let m = momentum_cutoff(&p, 0.0).unwrap();
                assert!(mode_cutoff(3, r, m) as f64 > 4.0 * 2f64.sqrt() * m * r / std::f64::consts::PI);
            }
        }
    }

    #[test]
    fn cutoff_grows_towards_critical_charge() {
        let m20 = momentum_cutoff(&CouplingParams::with_z(20.0).unwrap(), 0.0).unwrap();
        let m100 = momentum_cutoff(&CouplingParams::with_z(100.0).unwrap(), 0.0).unwrap();
        assert!(m100 > m20);
    }
}
