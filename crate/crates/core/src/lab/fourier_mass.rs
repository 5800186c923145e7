//! Fourier mass of functions orthogonal to the low sine modes of a box.
//!
//! On [−2R, 2R] the modes φ_k(x) = (2R)^{−1/2} sin(πk(½ + x/(4R))), k ≥ 1,
//! are orthonormal and have closed-form transforms. A function supported in
//! the box (or its cube) and orthogonal to every product mode with all indices
//! below L keeps at least half of its Fourier norm outside {|p_i| ≤ M}.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::report::LemmaReport;
use crate::error::{Error, Result};
use crate::quad::gauss_legendre;

/// Largest coefficient tensor the dim-3 check will allocate.
pub const MAX_COEFFICIENTS: usize = 4_000_000;

/// Real-valued mode count 512·dim·R·M/π³ + 1 (1536RM/π³ + 1 for dim 3).
pub fn mode_bound(dim: usize, r: f64, m: f64) -> f64 {
    512.0 * dim as f64 * r * m / PI.powi(3) + 1.0
}

/// Smallest integer index that is excluded from the low-mode set.
pub fn mode_cutoff(dim: usize, r: f64, m: f64) -> usize {
    mode_bound(dim, r, m).ceil() as usize
}

pub fn mode(k: usize, x: f64, r: f64) -> f64 {
    if x.abs() > 2.0 * r {
        return 0.0;
    }
    (PI * k as f64 * (0.5 + x / (4.0 * r))).sin() / (2.0 * r).sqrt()
}

/// Unitary transform (2π)^{−1/2}∫e^{−ipx}φ_k(x)dx in closed form.
pub fn mode_transform(k: usize, p: f64, r: f64) -> Complex64 {
    if p < 0.0 {
        return mode_transform(k, -p, r).conj();
    }
    let kf = k as f64;
    // denominator π²k² − 16p²R² = 2θ(πk + 4pR) with θ = πk/2 − 2pR
    let theta = 0.5 * PI * kf - 2.0 * p * r;
    let sinc = if theta.abs() < 1e-6 { 1.0 - theta * theta / 6.0 } else { theta.sin() / theta };
    let amp = 4.0 * (PI * r).sqrt() * kf * sinc / (2.0 * (PI * kf + 4.0 * p * r));
    Complex64::from_polar(amp, 0.5 * PI * (kf - 1.0))
}

/// Gram matrix A_{kk'} = ∫_{−M}^{M} φ̂_k conj(φ̂_k') dp for k, k' ∈ [1, kmax).
///
/// φ_k is real, so φ̂_k(−p) = conj φ̂_k(p) and A is real symmetric.
pub fn inside_gram(kmax: usize, r: f64, m: f64) -> Vec<Vec<f64>> {
    let (x, w) = gauss_legendre(20);
    let panels = (4.0 * m * r).ceil() as usize + 8;
    let width = m / panels as f64;
    let mut nodes = Vec::with_capacity(panels * x.len());
    for pnl in 0..panels {
        let mid = (pnl as f64 + 0.5) * width;
        for (xi, wi) in x.iter().zip(&w) {
            nodes.push((mid + 0.5 * width * xi, 0.5 * width * wi));
        }
    }
    let n = kmax.saturating_sub(1);
    let table: Vec<Vec<Complex64>> = (1..kmax).map(|k| nodes.iter().map(|&(p, _)| mode_transform(k, p, r)).collect()).collect();
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let s: f64 = nodes.iter().enumerate().map(|(q, &(_, wq))| wq * (table[i][q] * table[j][q].conj()).re).sum();
            a[i][j] = 2.0 * s;
            a[j][i] = 2.0 * s;
        }
    }
    a
}

/// Outcome of one function.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MassCase {
    /// ‖f̂‖ over the complement of the cube {|p_i| ≤ M}.
    pub outside: f64,
    /// ‖f̂‖ = ‖f‖.
    pub total: f64,
    /// The orthogonalized function is zero.
    pub vacuous: bool,
}

impl MassCase {
    pub fn ratio(&self) -> f64 {
        if self.vacuous {
            1.0
        } else {
            self.outside / self.total
        }
    }

    pub fn holds(&self) -> bool {
        self.vacuous || self.outside >= 0.5 * self.total
    }
}

/// Mode expansion on [1, kmax)^dim; flat row-major index over (k_1 − 1, …).
#[derive(Clone, Debug)]
pub struct ModeSetup {
    pub dim: usize,
    pub r: f64,
    pub m: f64,
    pub cutoff: usize,
    pub kmax: usize,
    gram: Vec<Vec<f64>>,
}

impl ModeSetup {
    /// Keeps `extra` modes above the cutoff in each direction.
    pub fn new(dim: usize, r: f64, m: f64, extra: usize) -> Result<Self> {
        if dim != 1 && dim != 3 {
            return Err(Error::Precondition(format!("dim must be 1 or 3, got {dim}")));
        }
        if !(r > 0.0 && m > 0.0) {
            return Err(Error::Precondition("R and M must be positive".into()));
        }
        let cutoff = mode_cutoff(dim, r, m);
        let kmax = cutoff + extra.max(1);
        let count = (kmax - 1).checked_pow(dim as u32).unwrap_or(usize::MAX);
        if count > MAX_COEFFICIENTS {
            return Err(Error::Precondition(format!(
                "L = {cutoff} gives {count} coefficients in dim {dim}, limit {MAX_COEFFICIENTS}"
            )));
        }
        Ok(Self { dim, r, m, cutoff, kmax, gram: inside_gram(kmax, r, m) })
    }

    pub fn modes_per_axis(&self) -> usize {
        self.kmax - 1
    }

    pub fn len(&self) -> usize {
        self.modes_per_axis().pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn gram(&self) -> &[Vec<f64>] {
        &self.gram
    }

    fn indices(&self, flat: usize) -> [usize; 3] {
        let n = self.modes_per_axis();
        match self.dim {
            1 => [flat + 1, 0, 0],
            _ => [flat / (n * n) + 1, (flat / n) % n + 1, flat % n + 1],
        }
    }

    /// Drops every coefficient whose indices are all below L.
    pub fn orthogonalize(&self, coeffs: &mut [f64]) {
        for (flat, c) in coeffs.iter_mut().enumerate() {
            let k = self.indices(flat);
            if k[..self.dim].iter().all(|&ki| ki < self.cutoff) {
                *c = 0.0;
            }
        }
    }

    /// Inside mass c·(A⊗…⊗A)c.
    pub fn inside_mass(&self, coeffs: &[f64]) -> f64 {
        let n = self.modes_per_axis();
        let a = &self.gram;
        if self.dim == 1 {
            return (0..n).map(|i| coeffs[i] * (0..n).map(|j| a[i][j] * coeffs[j]).sum::<f64>()).sum();
        }
        // apply A along each axis in turn
        let mut cur = coeffs.to_vec();
        for axis in 0..3 {
            let stride = n.pow(2 - axis as u32);
            let mut next = vec![0.0; cur.len()];
            for base in 0..cur.len() {
                if (base / stride) % n != 0 {
                    continue;
                }
                for i in 0..n {
                    let s: f64 = (0..n).map(|j| a[i][j] * cur[base + j * stride]).sum();
                    next[base + i * stride] = s;
                }
            }
            cur = next;
        }
        coeffs.iter().zip(&cur).map(|(x, y)| x * y).sum()
    }

    /// Orthogonalizes and measures one coefficient vector.
    pub fn measure(&self, coeffs: &[f64]) -> Result<MassCase> {
        if coeffs.len() != self.len() {
            return Err(Error::Precondition(format!("expected {} coefficients, got {}", self.len(), coeffs.len())));
        }
        let mut c = coeffs.to_vec();
        let before: f64 = c.iter().map(|v| v * v).sum::<f64>().sqrt();
        self.orthogonalize(&mut c);
        let total2: f64 = c.iter().map(|v| v * v).sum();
        if total2 <= (1e-14 * before).powi(2) {
            return Ok(MassCase { outside: 0.0, total: 0.0, vacuous: true });
        }
        let inside = self.inside_mass(&c).clamp(0.0, total2);
        Ok(MassCase { outside: (total2 - inside).sqrt(), total: total2.sqrt(), vacuous: false })
    }

    /// Mode coefficients ∫f φ_k of a function on the box, for k ∈ [1, kmax).
    pub fn project_1d(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        let (x, w) = gauss_legendre(16);
        let r = self.r;
        let panels = 4 * self.kmax;
        let width = 4.0 * r / panels as f64;
        let mut samples = Vec::with_capacity(panels * x.len());
        for p in 0..panels {
            let mid = -2.0 * r + (p as f64 + 0.5) * width;
            for (xi, wi) in x.iter().zip(&w) {
                let xx = mid + 0.5 * width * xi;
                samples.push((xx, 0.5 * width * wi * f(xx)));
            }
        }
        (1..self.kmax).map(|k| samples.iter().map(|&(xx, fw)| fw * mode(k, xx, r)).sum()).collect()
    }
}

/// Smooth bump (1 − s²)³ on |x − c| < w.
fn bump(x: f64, c: f64, w: f64) -> f64 {
    let s = (x - c) / w;
    if s.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - s * s).powi(3)
    }
}

fn random_bumps_1d(setup: &ModeSetup, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let r = setup.r;
    let count = rng.gen_range(1..=4);
    let bumps: Vec<(f64, f64, f64)> = (0..count)
        .map(|_| {
            let w = r * rng.gen_range(0.02..1.0);
            let c = rng.gen_range(-2.0 * r + w..2.0 * r - w);
            (c, w, rng.gen_range(-1.0..1.0))
        })
        .collect();
    setup.project_1d(|x| bumps.iter().map(|&(c, w, a)| a * bump(x, c, w)).sum())
}

/// Random coefficient vector; the kinds cycle through smooth bumps, noise
/// concentrated just above the cutoff, and white noise.
pub fn random_coefficients(setup: &ModeSetup, case: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = setup.modes_per_axis();
    let near = |rng: &mut ChaCha8Rng, k: usize| -> f64 {
        if k >= setup.cutoff && k < setup.cutoff + 8 {
            rng.gen_range(-1.0..1.0)
        } else {
            0.0
        }
    };
    match (setup.dim, case % 3) {
        (1, 0) => random_bumps_1d(setup, rng),
        (1, 1) => (1..=n).map(|k| near(rng, k)).collect(),
        (1, _) => (1..=n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        (_, 0) => {
            // sum of separable bump products
            let mut c = vec![0.0; setup.len()];
            for _ in 0..2 {
                let f: Vec<Vec<f64>> = (0..3).map(|_| random_bumps_1d(setup, rng)).collect();
                for i in 0..n {
                    for j in 0..n {
                        for k in 0..n {
                            c[(i * n + j) * n + k] += f[0][i] * f[1][j] * f[2][k];
                        }
                    }
                }
            }
            c
        }
        (_, 1) => {
            let mut c = vec![0.0; setup.len()];
            for (flat, v) in c.iter_mut().enumerate() {
                let k = setup.indices(flat);
                // one index just above the cutoff, the others anywhere
                if k.iter().any(|&ki| ki >= setup.cutoff && ki < setup.cutoff + 4) {
                    *v = rng.gen_range(-1.0..1.0) / (1.0 + (k[0] * k[1] * k[2]) as f64).sqrt();
                }
            }
            c
        }
        _ => (0..setup.len()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    }
}

/// Randomized check of the ≥ ½ outside-mass bound.
///
/// Reports the smallest ratio ‖f̂‖_{outside}/‖f̂‖ over `n_random` functions.
pub fn fourier_mass_check(dim: usize, r: f64, m: f64, n_random: usize, seed: u64) -> Result<LemmaReport> {
    let extra = if dim == 1 { (mode_cutoff(1, r, m) / 2).max(16) } else { 8 };
    let setup = ModeSetup::new(dim, r, m, extra)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_ratio = f64::INFINITY;
    let mut vacuous = 0usize;
    let mut violations = 0usize;
    for case in 0..n_random {
        let c = random_coefficients(&setup, case, &mut rng);
        let res = setup.measure(&c)?;
        if res.vacuous {
            vacuous += 1;
            continue;
        }
        if !res.holds() {
            violations += 1;
        }
        min_ratio = min_ratio.min(res.ratio());
    }
    let mut report = LemmaReport::at_least("fourier_mass.outside_fraction", min_ratio, 0.5, 0.0)
        .input("dim", dim)
        .input("r", r)
        .input("m", m)
        .input("n_random", n_random)
        .input("seed", seed)
        .detail("cutoff_l", setup.cutoff as f64)
        .detail("l_formula", mode_bound(dim, r, m))
        .detail("modes_per_axis", setup.modes_per_axis() as f64)
        .detail("vacuous", vacuous as f64)
        .detail("violations", violations as f64);
    if vacuous == n_random {
        report = LemmaReport::at_least("fourier_mass.outside_fraction", 1.0, 0.5, 0.0)
            .input("dim", dim)
            .input("r", r)
            .input("m", m)
            .note("vacuous: every orthogonalized function is zero");
    }
    Ok(report)
}

/// Single retained high mode: all indices equal to L.
pub fn high_mode_case(dim: usize, r: f64, m: f64) -> Result<MassCase> {
    let setup = ModeSetup::new(dim, r, m, 1)?;
    let mut c = vec![0.0; setup.len()];
    let n = setup.modes_per_axis();
    let i = setup.cutoff - 1;
    let flat = match dim {
        1 => i,
        _ => (i * n + i) * n + i,
    };
    c[flat] = 1.0;
    setup.measure(&c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::integrate_panels;

    /// Direct quadrature of (2π)^{−1/2}∫e^{−ipx}g(x)dx over the box.
    fn direct_transform(g: &dyn Fn(f64) -> f64, p: f64, r: f64) -> Complex64 {
        let panels = 400 + (8.0 * p.abs() * r) as usize;
        let re = integrate_panels(|x| g(x) * (p * x).cos(), -2.0 * r, 2.0 * r, 12, panels);
        let im = integrate_panels(|x| -g(x) * (p * x).sin(), -2.0 * r, 2.0 * r, 12, panels);
        Complex64::new(re, im) / (2.0 * PI).sqrt()
    }

    #[test]
    fn closed_form_matches_direct_transform() {
        for &r in &[0.5, 1.0, 2.5] {
            for k in [1usize, 2, 3, 7, 20] {
                for &p in &[-3.1, -0.4, 0.0, 0.9, PI * k as f64 / (4.0 * r), 5.3] {
                    let exact = direct_transform(&|x| mode(k, x, r), p, r);
                    let closed = mode_transform(k, p, r);
                    assert!((exact - closed).norm() < 1e-10, "k={k} p={p} r={r}: {exact} vs {closed}");
                }
            }
        }
        let r = 1.3;
        let v = mode_transform(1, 0.0, r);
        assert!((v.re - 4.0 * (PI * r).sqrt() / (PI * PI)).abs() < 1e-14 && v.im.abs() < 1e-14);
    }

    #[test]
    fn gram_matches_direct_inside_mass() {
        let (r, m) = (1.0, 2.0);
        let setup = ModeSetup::new(1, r, m, 20).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let c: Vec<f64> = (0..setup.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let f = |x: f64| c.iter().enumerate().map(|(i, ci)| ci * mode(i + 1, x, r)).sum::<f64>();
        let direct = integrate_panels(|p| direct_transform(&f, p, r).norm_sqr(), -m, m, 12, 40);
        let via_gram = setup.inside_mass(&c);
        assert!((direct - via_gram).abs() < 1e-8 * c.iter().map(|v| v * v).sum::<f64>(), "{direct} vs {via_gram}");
    }

    #[test]
    fn random_dim1_cases_pass_with_direct_oracle() {
        let (r, m) = (1.0, 2.0);
        let setup = ModeSetup::new(1, r, m, 30).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for case in 0..50 {
            let mut c = random_coefficients(&setup, case, &mut rng);
            let res = setup.measure(&c).unwrap();
            assert!(res.holds() && !res.vacuous);
            if case % 10 == 0 {
                setup.orthogonalize(&mut c);
                let f = |x: f64| c.iter().enumerate().map(|(i, ci)| ci * mode(i + 1, x, r)).sum::<f64>();
                let inside = integrate_panels(|p| direct_transform(&f, p, r).norm_sqr(), -m, m, 12, 40);
                let ratio = ((res.total * res.total - inside) / (res.total * res.total)).sqrt();
                assert!((ratio - res.ratio()).abs() < 1e-8);
                assert!(ratio >= 0.5);
            }
        }
    }

    #[test]
    fn low_mode_is_vacuous() {
        let setup = ModeSetup::new(1, 1.0, 2.0, 4).unwrap();
        let mut c = vec![0.0; setup.len()];
        c[2] = 1.0;
        let res = setup.measure(&c).unwrap();
        assert!(res.vacuous && res.holds());
    }

    #[test]
    fn retained_high_mode_keeps_mass_outside() {
        for dim in [1, 3] {
            let res = high_mode_case(dim, 0.5, 1.0).unwrap();
            assert!(!res.vacuous && res.ratio() >= 0.5, "dim {dim}: {}", res.ratio());
        }
    }

    #[test]
    fn tensor_inside_mass_factorizes() {
        let setup = ModeSetup::new(3, 0.2, 1.0, 3).unwrap();
        let n = setup.modes_per_axis();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let v: Vec<Vec<f64>> = (0..3).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let mut c = vec![0.0; setup.len()];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    c[(i * n + j) * n + k] = v[0][i] * v[1][j] * v[2][k];
                }
            }
        }
        let one = |u: &Vec<f64>| -> f64 { (0..n).map(|i| u[i] * (0..n).map(|j| setup.gram()[i][j] * u[j]).sum::<f64>()).sum() };
        let expect = one(&v[0]) * one(&v[1]) * one(&v[2]);
        assert!((setup.inside_mass(&c) - expect).abs() < 1e-12 * expect.abs().max(1e-300));
    }

    #[test]
    fn oversized_setup_is_rejected() {
        let err = ModeSetup::new(3, 10.0, 10.0, 8).unwrap_err();
        assert!(err.to_string().contains("L = "));
    }

    #[test]
    fn aggregate_report_passes() {
        let rep = fourier_mass_check(1, 1.0, 2.0, 30, 1).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert_eq!(rep.details["violations"], 0.0);
    }
}
