//! Invariant suites for the one-particle building blocks: the Λ₊ symbol, the
//! Bessel functions, the two representations of Λ₊, the decay envelope,
//! semiboundedness and Kato's inequality.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::report::LemmaReport;
use crate::besselk::k0k1_f64;
use crate::dirac::{free_dirac_symbol, lambda_symbol, mat_adjoint, mat_max_abs, mat_mul, mat_sub, mat_trace};
use crate::error::Result;
use crate::grid::{Grid, SpinorField};
use crate::hamiltonian::{abs_momentum_form, br_one_particle_terms_with, coulomb_form, CouplingParams};
use crate::projector::{exterior_sample, richardson, KernelQuadrature, Projector};
use crate::quad::gauss_legendre;

fn random_direction(rng: &mut ChaCha8Rng) -> [f64; 3] {
    loop {
        let v: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 1e-3 && n <= 1.0 {
            return v.map(|x| x / n);
        }
    }
}

/// Idempotency, Hermiticity, trace 2 and [Λ₊(p), α·p + β] = 0 at random
/// momenta with log-uniform |p| ∈ [1e−3, 1e3]. The commutator residual is
/// divided by 1 + |p|, the size of the entries of α·p + β.
pub fn projector_algebra_report(samples: usize, seed: u64) -> LemmaReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut idem, mut herm, mut trace, mut comm) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..samples {
        let mag = 10f64.powf(rng.gen_range(-3.0..3.0));
        let p = random_direction(&mut rng).map(|x| x * mag);
        let l = lambda_symbol(p).matrix;
        let d = free_dirac_symbol(p).matrix;
        idem = idem.max(mat_max_abs(&mat_sub(&mat_mul(&l, &l), &l)));
        herm = herm.max(mat_max_abs(&mat_sub(&mat_adjoint(&l), &l)));
        trace = trace.max((mat_trace(&l) - Complex64::new(2.0, 0.0)).norm());
        let c = mat_sub(&mat_mul(&l, &d), &mat_mul(&d, &l));
        comm = comm.max(mat_max_abs(&c) / (1.0 + mag));
    }
    let worst = idem.max(herm).max(trace).max(comm);
    LemmaReport::at_most("projector.algebra", worst, 1e-13, 0.0)
        .input("samples", samples)
        .input("seed", seed)
        .detail("idempotency", idem)
        .detail("hermiticity", herm)
        .detail("trace", trace)
        .detail("commutator", comm)
}

/// K_ν(z) = ∫₀^∞ e^{−z cosh t} cosh(νt) dt by Gauss–Legendre panels up to
/// the point where the integrand is below e^{−745}·(scale).
pub fn bessel_integral(nu: u32, z: f64) -> f64 {
    let (x, w) = gauss_legendre(20);
    let top = (1.0 + 745.0 / z).acosh();
    let panels = 400;
    let h = top / panels as f64;
    let mut acc = 0.0;
    for k in 0..panels {
        let mid = (k as f64 + 0.5) * h;
        for (xi, wi) in x.iter().zip(&w) {
            let t = mid + 0.5 * h * xi;
            // e^{−z(cosh t − 1)} keeps the integrand O(1) for large z
            acc += wi * 0.5 * h * (-z * (t.cosh() - 1.0)).exp() * (nu as f64 * t).cosh();
        }
    }
    acc * (-z).exp()
}

fn log_points(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}

/// max relative |K_ν − integral| over log-spaced z ∈ [1e−4, 30].
pub fn bessel_accuracy_report(points: usize) -> LemmaReport {
    let mut worst = 0.0f64;
    let mut at = 0.0;
    for z in log_points(1e-4, 30.0, points) {
        let (k0, k1, _) = k0k1_f64(z);
        for (nu, k) in [(0, k0), (1, k1)] {
            let o = bessel_integral(nu, z);
            let e = ((k - o) / o).abs();
            if e > worst {
                worst = e;
                at = z;
            }
        }
    }
    LemmaReport::at_most("besselk.accuracy", worst, 1e-10, 0.0)
        .input("points", points)
        .input("range", vec![1e-4, 30.0])
        .detail("worst_z", at)
}

/// K₀′ = −K₁ and K₁′ = −K₀ − K₁/z by central differences with step
/// 1e−4·min(z, 1).
pub fn bessel_derivative_report(points: usize) -> LemmaReport {
    let mut worst = 0.0f64;
    for z in log_points(1e-4, 30.0, points) {
        let h = 1e-4 * z.min(1.0);
        let (a0, a1, _) = k0k1_f64(z - h);
        let (b0, b1, _) = k0k1_f64(z + h);
        let (k0, k1, _) = k0k1_f64(z);
        let d0 = (b0 - a0) / (2.0 * h);
        let d1 = (b1 - a1) / (2.0 * h);
        worst = worst.max(((d0 + k1) / k1).abs());
        let t = -k0 - k1 / z;
        worst = worst.max(((d1 - t) / t).abs());
    }
    LemmaReport::at_most("besselk.derivatives", worst, 1e-6, 0.0).input("points", points)
}

/// Smooth bump (1 − r²/a²)⁴ times a random spinor.
pub fn random_bump(grid: Grid<f64>, rng: &mut ChaCha8Rng, radius: (f64, f64), offset: f64) -> SpinorField<f64> {
    let a: f64 = rng.gen_range(radius.0..radius.1);
    let cen: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-offset..=offset));
    let u: [Complex64; 4] = std::array::from_fn(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    SpinorField::from_fn(grid, |x| {
        let r2 = ((x[0] - cen[0]).powi(2) + (x[1] - cen[1]).powi(2) + (x[2] - cen[2]).powi(2)) / (a * a);
        let s = if r2 < 1.0 { (1.0 - r2).powi(4) } else { 0.0 };
        u.map(|q| q * s)
    })
}

/// Coordinate kernel against the Fourier symbol on random bumps: raw errors
/// at ε = h, 1.5h, 2h, 2.5h must increase with ε, and the extrapolation over
/// (h, 2h) must be within `tolerance` in relative L₂.
pub fn dual_representation_report(grid_n: usize, box_l: f64, fields: usize, seed: u64, tolerance: f64) -> Result<LemmaReport> {
    let g = Grid::new(grid_n, box_l)?;
    let kq = KernelQuadrature::new(g);
    let proj = Projector::new(g);
    let h = g.spacing();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut worst_raw = 0.0f64;
    let mut monotone = true;
    for _ in 0..fields {
        let f = random_bump(g, &mut rng, (6.0, 9.0), 1.0);
        let exact = proj.apply(&f);
        let n = exact.norm();
        let mut apps = Vec::new();
        let mut errs = Vec::new();
        for m in [1.0, 1.5, 2.0, 2.5] {
            let a = kq.apply(&f, m * h)?;
            errs.push(a.field.sub(&exact).norm() / n);
            apps.push(a);
        }
        monotone &= errs.windows(2).all(|w| w[1] > w[0]);
        worst_raw = worst_raw.max(errs[0]);
        let ex = richardson(&apps[0], &apps[2])?;
        worst = worst.max(ex.sub(&exact).norm() / n);
    }
    let mut rep = LemmaReport::at_most("projector.dual_representation", worst, tolerance, 0.0)
        .input("grid_n", grid_n)
        .input("box_l", box_l)
        .input("fields", fields)
        .input("seed", seed)
        .detail("worst_raw_at_h", worst_raw);
    if !monotone {
        rep = rep.force_fail("raw error is not monotone in epsilon");
    }
    Ok(rep)
}

/// |Λ₊f(x)| ≤ G(d)|Ω|^{1/2}‖f‖ at random exterior points of random bumps.
pub fn decay_report(fields: usize, points: usize, seed: u64, slack: f64) -> Result<LemmaReport> {
    let g = Grid::new(24, 12.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::NEG_INFINITY;
    let mut violations = 0usize;
    let mut min_ratio_gap = f64::INFINITY;
    for _ in 0..fields {
        let f = random_bump(g, &mut rng, (1.5, 3.0), 1.0);
        let reach = f.support_radius();
        for _ in 0..points {
            let d: f64 = 10f64.powf(rng.gen_range(-0.3..1.2));
            let x = random_direction(&mut rng).map(|v| v * (reach + d));
            let s = exterior_sample(&f, x)?;
            let excess = s.magnitude - s.bound;
            worst = worst.max(excess);
            if excess > slack {
                violations += 1;
            }
            if s.bound > 0.0 {
                min_ratio_gap = min_ratio_gap.min(1.0 - s.magnitude / s.bound);
            }
        }
    }
    Ok(LemmaReport::at_most("projector.decay", violations as f64, 0.0, 0.0)
        .input("fields", fields)
        .input("points", points)
        .input("seed", seed)
        .input("slack", slack)
        .detail("worst_excess", worst)
        .detail("min_relative_gap", min_ratio_gap))
}

/// Random Λ₊-range states: Gaussians e^{−r²/(2w²)} with log-uniform width
/// around the orbital radius, random spinor, random small offset.
fn random_gaussian(grid: Grid<f64>, rng: &mut ChaCha8Rng, width: (f64, f64)) -> SpinorField<f64> {
    let w = width.0 * (width.1 / width.0).powf(rng.gen::<f64>());
    let cen: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-0.2..0.2) * w);
    let u: [Complex64; 4] = std::array::from_fn(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    SpinorField::from_fn(grid, |x| {
        let r2 = (x[0] - cen[0]).powi(2) + (x[1] - cen[1]).powi(2) + (x[2] - cen[2]).powi(2);
        let s = (-0.5 * r2 / (w * w)).exp();
        u.map(|q| q * s)
    })
}

/// min over random states of ⟨(D − αZ/|x|)Λ₊f, Λ₊f⟩/‖Λ₊f‖² against 1 − αZ,
/// with `slack` relative to 1 − αZ.
pub fn semibounded_report(params: &CouplingParams, grid_n: usize, states: usize, seed: u64, slack: f64) -> Result<LemmaReport> {
    let a0 = params.orbital_radius();
    let g = Grid::new(grid_n, 8.0 * a0)?;
    let proj = Projector::new(g);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = g.spacing();
    let mut lowest = f64::INFINITY;
    for _ in 0..states {
        let f = random_gaussian(g, &mut rng, (1.5 * h, a0));
        lowest = lowest.min(br_one_particle_terms_with(&proj, &f, params).rayleigh());
    }
    let floor = 1.0 - params.alpha_z();
    Ok(LemmaReport::at_least("hamiltonian.semibounded", lowest, floor, slack * floor)
        .input("z", params.z)
        .input("alpha", params.alpha)
        .input("grid_n", grid_n)
        .input("states", states)
        .input("seed", seed))
}

/// ∫|f|²/|x| ≤ (π/2)⟨|p|f̂, f̂⟩ on random Gaussians centred near the origin;
/// measured is the worst ratio, allowed up to 1 + slack.
pub fn kato_report(grid_n: usize, box_l: f64, fields: usize, seed: u64, slack: f64) -> Result<LemmaReport> {
    let g = Grid::new(grid_n, box_l)?;
    let h = g.spacing();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..fields {
        let f = random_gaussian(g, &mut rng, (2.0 * h, box_l / 10.0));
        let ratio = coulomb_form(&f, 1.0) / (0.5 * PI * abs_momentum_form(&f));
        worst = worst.max(ratio);
    }
    Ok(LemmaReport::at_most("hamiltonian.kato", worst, 1.0, slack)
        .input("grid_n", grid_n)
        .input("box_l", box_l)
        .input("fields", fields)
        .input("seed", seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integral_oracle_reproduces_reference_values() {
        assert!((bessel_integral(0, 1.0) - 0.42102443824070834).abs() < 1e-14);
        assert!((bessel_integral(1, 1.0) - 0.60190723019723457).abs() < 1e-14);
    }

    #[test]
    fn projector_algebra_small_sample() {
        let r = projector_algebra_report(50, 1);
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn kato_on_a_coarse_grid() {
        let r = kato_report(24, 12.0, 4, 3, 0.05).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(r.measured > 0.5);
    }
}
