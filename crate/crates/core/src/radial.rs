//! Positive-energy s-waves Λ₊(a(|x|)e₁) and the one-electron ground state in
//! that channel.
//!
//! With â the radial transform of a, the state has momentum density
//! ½(1 + 1/E)|â|² and coordinate form (u(r)χ, i l(r) σ·x̂ χ) where
//!
//!   u(r) = ∫ ½(1 + 1/E) â j₀(pr) dμ,   l(r) = ∫ p/(2E) â j₁(pr) dμ,
//!
//! dμ = p²dp/(2π²) and E = √(p² + 1). Pointwise spinor products of two such
//! states reduce to u_a u_b + l_a l_b, so every form used by the trial family
//! is a one-dimensional integral.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::hamiltonian::CouplingParams;
use crate::quad::gauss_legendre;

const GL_ORDER: usize = 16;

/// Composite Gauss–Legendre rule on sorted breakpoints.
#[derive(Clone, Debug, Default)]
pub struct PanelRule {
    pub x: Vec<f64>,
    pub w: Vec<f64>,
}

impl PanelRule {
    pub fn from_breaks(breaks: &[f64]) -> Self {
        let (gx, gw) = gauss_legendre(GL_ORDER);
        let mut rule = PanelRule::default();
        for pair in breaks.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if b <= a {
                continue;
            }
            let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
            for (xi, wi) in gx.iter().zip(&gw) {
                rule.x.push(mid + half * xi);
                rule.w.push(half * wi);
            }
        }
        rule
    }

    /// Equal panels of width at most `width` on [a, b].
    pub fn uniform(a: f64, b: f64, width: f64) -> Self {
        let n = ((b - a) / width).ceil().max(1.0) as usize;
        let breaks: Vec<f64> = (0..=n).map(|k| a + (b - a) * k as f64 / n as f64).collect();
        Self::from_breaks(&breaks)
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

/// Sorts and removes near-duplicate breakpoints.
pub fn merge_breaks(mut breaks: Vec<f64>) -> Vec<f64> {
    breaks.retain(|b| b.is_finite() && *b >= 0.0);
    breaks.sort_by(|a, b| a.total_cmp(b));
    let mut out: Vec<f64> = Vec::with_capacity(breaks.len());
    for b in breaks {
        match out.last() {
            Some(&last) if b - last <= 1e-12 * b.max(1.0) => {}
            _ => out.push(b),
        }
    }
    out
}

pub fn energy(p: f64) -> f64 {
    (p * p + 1.0).sqrt()
}

/// E − 1 without cancellation.
pub fn energy_excess(p: f64) -> f64 {
    p * p / (energy(p) + 1.0)
}

/// ½(1 + 1/E): the e₁ diagonal of Λ₊(p).
pub fn upper_weight(p: f64) -> f64 {
    0.5 * (1.0 + 1.0 / energy(p))
}

pub fn sph_j0_j1(x: f64) -> (f64, f64) {
    if x.abs() < 1e-3 {
        let x2 = x * x;
        (1.0 - x2 / 6.0 + x2 * x2 / 120.0, x / 3.0 - x * x2 / 30.0)
    } else {
        let (s, c) = x.sin_cos();
        (s / x, s / (x * x) - c / x)
    }
}

/// A radial profile a(|x|), described through its transform â(p).
pub trait SWave {
    /// â(p) = 4π ∫ a(r) j₀(pr) r² dr.
    fn hat(&self, p: f64) -> f64;

    /// Largest momentum carrying weight and the panel width needed to follow
    /// the oscillations of â.
    fn momentum_extent(&self) -> (f64, f64);

    /// (u, l) of Λ₊(a e₁) at each radius.
    fn amplitudes(&self, r: &[f64]) -> Vec<[f64; 2]>;
}

/// Momentum rule fit for products of the two transforms.
pub fn joint_momentum_rule(a: &dyn SWave, b: &dyn SWave) -> PanelRule {
    let (pa, wa) = a.momentum_extent();
    let (pb, wb) = b.momentum_extent();
    PanelRule::uniform(0.0, pa.min(pb), wa.min(wb))
}

/// ∫ k(p) â b̂ dμ.
pub fn momentum_form(a: &dyn SWave, b: &dyn SWave, k: impl Fn(f64) -> f64) -> f64 {
    let rule = joint_momentum_rule(a, b);
    rule.x
        .iter()
        .zip(&rule.w)
        .map(|(&p, &w)| w * p * p / (2.0 * PI * PI) * k(p) * a.hat(p) * b.hat(p))
        .sum()
}

/// (⟨Λ₊a, Λ₊b⟩, ⟨(D − 1)Λ₊a, Λ₊b⟩) in one pass over the transforms.
pub fn overlap_and_kinetic(a: &dyn SWave, b: &dyn SWave) -> (f64, f64) {
    let rule = joint_momentum_rule(a, b);
    let mut acc = (0.0, 0.0);
    for (&p, &w) in rule.x.iter().zip(&rule.w) {
        let v = w * p * p / (2.0 * PI * PI) * upper_weight(p) * a.hat(p) * b.hat(p);
        acc.0 += v;
        acc.1 += v * energy_excess(p);
    }
    acc
}

/// ⟨Λ₊a, Λ₊b⟩.
pub fn overlap(a: &dyn SWave, b: &dyn SWave) -> f64 {
    momentum_form(a, b, upper_weight)
}

/// ⟨(D − 1)Λ₊a, Λ₊b⟩.
pub fn kinetic_excess(a: &dyn SWave, b: &dyn SWave) -> f64 {
    momentum_form(a, b, |p| energy_excess(p) * upper_weight(p))
}

/// Radial quadrature in coordinate space, weights including 4πr².
#[derive(Clone, Debug)]
pub struct RadialRule {
    pub r: Vec<f64>,
    pub w: Vec<f64>,
}

impl RadialRule {
    pub fn from_breaks(breaks: &[f64]) -> Self {
        let rule = PanelRule::from_breaks(breaks);
        let w = rule.x.iter().zip(&rule.w).map(|(r, w)| 4.0 * PI * r * r * w).collect();
        Self { r: rule.x, w }
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    /// ∫ f d³x for a radial function sampled at the nodes.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.w.iter().zip(f).map(|(w, f)| w * f).sum()
    }

    /// Φ(r_i) = ∫ ρ(y)/|x − y| d³y at |x| = r_i, by the shell theorem.
    pub fn coulomb_potential(&self, rho: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut inner = vec![0.0; n];
        let mut acc = 0.0;
        for i in 0..n {
            let c = self.w[i] * rho[i];
            inner[i] = acc + 0.5 * c;
            acc += c;
        }
        let mut outer = vec![0.0; n];
        let mut acc = 0.0;
        for i in (0..n).rev() {
            let c = self.w[i] * rho[i] / self.r[i];
            outer[i] = acc + 0.5 * c;
            acc += c;
        }
        (0..n).map(|i| inner[i] / self.r[i] + outer[i]).collect()
    }

    /// ∫∫ a(x)b(y)/|x − y| for radial a, b.
    pub fn coulomb_pair(&self, a: &[f64], b: &[f64]) -> f64 {
        self.integrate(&self.coulomb_potential(b).iter().zip(a).map(|(p, a)| p * a).collect::<Vec<_>>())
    }
}

/// Pointwise u_a u_b + l_a l_b.
pub fn pair_density(a: &[[f64; 2]], b: &[[f64; 2]]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x[0] * y[0] + x[1] * y[1]).collect()
}

/// (u, l) on the uniform radii r_j = jπ/(MΔp), from samples of ½(1 + 1/E)â
/// and p/(2E)â at p_k = kΔp, k = 0..M.
///
/// Both Hankel integrals become sine and cosine sums (j₀(x)x² = x sin x and
/// j₁(x)x² = sin x − x cos x) with even integrands, so the trapezoid rule is
/// spectrally accurate and one FFT of length 2M gives all radii.
#[derive(Clone, Debug)]
pub struct HankelTable {
    dr: f64,
    u: Vec<f64>,
    l: Vec<f64>,
}

/// Radii below this many table steps are summed directly.
const DIRECT_STEPS: usize = 16;

impl HankelTable {
    pub fn new(dp: f64, upper: &[f64], lower: &[f64]) -> Self {
        assert_eq!(upper.len(), lower.len());
        let m = upper.len() - 1;
        assert!(m >= 2 * DIRECT_STEPS, "table too short");
        let dr = PI / (m as f64 * dp);
        let fft = FftPlanner::new().plan_fft_forward(2 * m);
        let sine = |a: &dyn Fn(usize) -> f64| -> Vec<f64> {
            let mut x = vec![Complex64::new(0.0, 0.0); 2 * m];
            for k in 1..m {
                x[k] = Complex64::new(a(k), 0.0);
                x[2 * m - k] = Complex64::new(-a(k), 0.0);
            }
            fft.process(&mut x);
            x[..=m].iter().map(|v| -0.5 * v.im).collect()
        };
        let cosine = |a: &dyn Fn(usize) -> f64| -> Vec<f64> {
            let mut x = vec![Complex64::new(0.0, 0.0); 2 * m];
            for k in 0..=m {
                x[k] = Complex64::new(a(k), 0.0);
                if k > 0 && k < m {
                    x[2 * m - k] = Complex64::new(a(k), 0.0);
                }
            }
            fft.process(&mut x);
            x[..=m].iter().map(|v| 0.5 * v.re).collect()
        };
        let p = |k: usize| k as f64 * dp;
        let su = sine(&|k| upper[k] * p(k));
        let sl = sine(&|k| lower[k]);
        let cl = cosine(&|k| lower[k] * p(k));
        let c = dp / (2.0 * PI * PI);
        let mut u = vec![0.0; m + 1];
        let mut l = vec![0.0; m + 1];
        for j in 0..=m {
            let r = j as f64 * dr;
            if j < DIRECT_STEPS {
                // trapezoid on the same samples, without the 1/r factors
                let mut acc = [0.0, 0.0];
                for k in 0..=m {
                    let wk = if k == 0 || k == m { 0.5 } else { 1.0 };
                    let (j0, j1) = sph_j0_j1(p(k) * r);
                    acc[0] += wk * upper[k] * j0 * p(k) * p(k);
                    acc[1] += wk * lower[k] * j1 * p(k) * p(k);
                }
                u[j] = c * acc[0];
                l[j] = c * acc[1];
            } else {
                u[j] = c * su[j] / r;
                l[j] = c * (sl[j] / (r * r) - cl[j] / r);
            }
        }
        Self { dr, u, l }
    }

    pub fn spacing(&self) -> f64 {
        self.dr
    }

    pub fn reach(&self) -> f64 {
        self.dr * (self.u.len() - 1) as f64
    }

    /// Six-point Lagrange interpolation; u is even and l odd in r. Zero past
    /// the end of the table.
    pub fn eval(&self, r: f64) -> [f64; 2] {
        let n = self.u.len() as isize - 1;
        let s = r / self.dr;
        let j0 = s.floor() as isize - 2;
        if j0 + 5 > n {
            return [0.0, 0.0];
        }
        let mut out = [0.0, 0.0];
        for a in 0..6 {
            let ja = j0 + a;
            let mut w = 1.0;
            for b in 0..6 {
                if b != a {
                    w *= (s - (j0 + b) as f64) / (a - b) as f64;
                }
            }
            let (uj, lj) = if ja < 0 {
                (self.u[(-ja) as usize], -self.l[(-ja) as usize])
            } else {
                (self.u[ja as usize], self.l[ja as usize])
            };
            out[0] += w * uj;
            out[1] += w * lj;
        }
        out
    }

    pub fn eval_all(&self, r: &[f64]) -> Vec<[f64; 2]> {
        r.iter().map(|&x| self.eval(x)).collect()
    }
}

/// Samples ½(1 + 1/E(sp))h(p) and (sp)/(2E(sp))h(p) for a transform h given
/// in a variable p = (physical momentum)/s.
pub fn projected_samples(dp: f64, m: usize, scale: f64, h: impl Fn(f64) -> f64) -> (Vec<f64>, Vec<f64>) {
    (0..=m)
        .map(|k| {
            let q = k as f64 * dp;
            let p = q / scale;
            let v = h(q);
            (upper_weight(p) * v, p / (2.0 * energy(p)) * v)
        })
        .unzip()
}

/// Σ c_k e^{−β_k r²}.
#[derive(Clone, Debug)]
pub struct GaussianWave {
    pub betas: Vec<f64>,
    pub coeffs: Vec<f64>,
}

/// Radius beyond which the Λ₊ tail of a Gaussian of width 1/√β is below
/// e^{−40} relative to its peak.
fn gaussian_reach(beta: f64) -> f64 {
    7.0 / beta.sqrt() + 40.0
}

fn gaussian_hat(beta: f64, p: f64) -> f64 {
    (PI / beta).powf(1.5) * (-p * p / (4.0 * beta)).exp()
}

impl GaussianWave {
    pub fn single(beta: f64) -> Self {
        Self { betas: vec![beta], coeffs: vec![1.0] }
    }

    /// Amplitude table reaching at least `r_max` and resolving the narrowest
    /// Gaussian.
    pub fn tabulate(&self, r_max: f64) -> HankelTable {
        // oversampling in r keeps the interpolation error near 1e-12
        let pmax = 16.0 * self.momentum_extent().0;
        let m = ((r_max * pmax / PI).ceil() as usize).next_power_of_two().max(1024);
        let dp = pmax / m as f64;
        let (up, lo) = projected_samples(dp, m, 1.0, |p| self.hat(p));
        HankelTable::new(dp, &up, &lo)
    }

    /// (u, l) of one basis function, zero beyond its reach.
    fn basis_amplitudes(beta: f64, r: &[f64]) -> Vec<[f64; 2]> {
        let reach = gaussian_reach(beta);
        let pmax = 13.0 * beta.sqrt();
        let width = (2.0 / reach).min(0.25).min(pmax / 8.0);
        let rule = PanelRule::uniform(0.0, pmax, width);
        let weights: Vec<(f64, f64, f64)> = rule
            .x
            .iter()
            .zip(&rule.w)
            .map(|(&p, &w)| {
                let m = w * p * p / (2.0 * PI * PI) * gaussian_hat(beta, p);
                (p, m * upper_weight(p), m * p / (2.0 * energy(p)))
            })
            .collect();
        r.iter()
            .map(|&ri| {
                if ri > reach {
                    return [0.0, 0.0];
                }
                let mut acc = [0.0, 0.0];
                for &(p, wu, wl) in &weights {
                    let (j0, j1) = sph_j0_j1(p * ri);
                    acc[0] += wu * j0;
                    acc[1] += wl * j1;
                }
                acc
            })
            .collect()
    }
}

impl SWave for GaussianWave {
    fn hat(&self, p: f64) -> f64 {
        self.betas.iter().zip(&self.coeffs).map(|(&b, &c)| c * gaussian_hat(b, p)).sum()
    }

    fn momentum_extent(&self) -> (f64, f64) {
        let bmax = self.betas.iter().cloned().fold(0.0, f64::max);
        let bmin = self.betas.iter().cloned().fold(f64::INFINITY, f64::min);
        (13.0 * bmax.sqrt(), (0.25 * bmin.sqrt()).min(0.25))
    }

    fn amplitudes(&self, r: &[f64]) -> Vec<[f64; 2]> {
        let mut out = vec![[0.0, 0.0]; r.len()];
        for (&b, &c) in self.betas.iter().zip(&self.coeffs) {
            for (o, a) in out.iter_mut().zip(Self::basis_amplitudes(b, r)) {
                o[0] += c * a[0];
                o[1] += c * a[1];
            }
        }
        out
    }
}

/// Lowest eigenpair of the one-electron form in the s½ positive-energy
/// channel.
#[derive(Clone, Debug)]
pub struct RadialGroundState {
    pub energy: f64,
    /// Normalized: ⟨Λ₊a, Λ₊a⟩ = 1.
    pub wave: GaussianWave,
    /// Smallest retained overlap eigenvalue relative to the largest.
    pub conditioning: f64,
}

/// Even-tempered exponents spanning the orbital radius 1/(αZ).
pub fn even_tempered(params: &CouplingParams, size: usize) -> Vec<f64> {
    let a0 = params.orbital_radius();
    let lo = 0.01 / (a0 * a0);
    let hi = (3e3 / (a0 * a0)).min(400.0);
    let ratio = (hi / lo).powf(1.0 / (size as f64 - 1.0));
    (0..size).map(|k| lo * ratio.powi(k as i32)).collect()
}

/// Coordinate rule resolving a ground state of orbital radius a0.
pub fn orbital_breaks(a0: f64) -> Vec<f64> {
    let mut breaks = vec![0.0];
    let mut r = 1e-4_f64.min(a0 * 1e-4);
    while r < a0 {
        breaks.push(r);
        r *= 1.2;
    }
    let outer = 40.0 * a0 + 40.0;
    let step = 0.2 * a0;
    let mut r = a0;
    while r < outer {
        breaks.push(r);
        r += step;
    }
    breaks.push(outer);
    breaks
}

/// Ritz solution in an even-tempered Gaussian basis.
pub fn radial_ground_state(params: &CouplingParams, size: usize) -> Result<RadialGroundState> {
    if size < 2 {
        return Err(Error::Precondition("need at least two basis functions".into()));
    }
    let betas = even_tempered(params, size);
    let waves: Vec<GaussianWave> = betas.iter().map(|&b| GaussianWave::single(b)).collect();
    let rule = RadialRule::from_breaks(&orbital_breaks(params.orbital_radius()));
    let amps: Vec<Vec<[f64; 2]>> = betas.iter().map(|&b| GaussianWave::basis_amplitudes(b, &rule.r)).collect();
    let inv_r: Vec<f64> = rule.r.iter().map(|r| 1.0 / r).collect();
    let mut s = DMatrix::zeros(size, size);
    let mut h = DMatrix::zeros(size, size);
    for i in 0..size {
        for j in 0..=i {
            let sij = overlap(&waves[i], &waves[j]);
            let kij = kinetic_excess(&waves[i], &waves[j]);
            let dens = pair_density(&amps[i], &amps[j]);
            let vij = -params.alpha_z() * rule.integrate(&dens.iter().zip(&inv_r).map(|(d, v)| d * v).collect::<Vec<_>>());
            s[(i, j)] = sij;
            s[(j, i)] = sij;
            h[(i, j)] = kij + vij;
            h[(j, i)] = kij + vij;
        }
    }
    // canonical orthogonalization drops near-dependent combinations
    let se = SymmetricEigen::new(s.clone());
    let smax = se.eigenvalues.max();
    let keep: Vec<usize> = (0..size).filter(|&k| se.eigenvalues[k] > 1e-11 * smax).collect();
    let smin = keep.iter().map(|&k| se.eigenvalues[k]).fold(f64::INFINITY, f64::min);
    let mut x = DMatrix::zeros(size, keep.len());
    for (c, &k) in keep.iter().enumerate() {
        let scale = 1.0 / se.eigenvalues[k].sqrt();
        for r in 0..size {
            x[(r, c)] = se.eigenvectors[(r, k)] * scale;
        }
    }
    let hr = x.transpose() * &h * &x;
    let he = SymmetricEigen::new(hr);
    let (imin, emin) = he.eigenvalues.iter().enumerate().fold((0, f64::INFINITY), |acc, (i, &e)| if e < acc.1 { (i, e) } else { acc });
    let c = &x * he.eigenvectors.column(imin);
    let mut coeffs: Vec<f64> = c.iter().cloned().collect();
    let norm = (c.transpose() * &s * &c)[(0, 0)].sqrt();
    // fix the sign so that u(0) > 0
    let sign = if coeffs.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
    coeffs.iter_mut().for_each(|v| *v *= sign / norm);
    Ok(RadialGroundState { energy: 1.0 + emin, wave: GaussianWave { betas, coeffs }, conditioning: smin / smax })
}

/// One-electron form ⟨(D − αZ/|x|)Λ₊a, Λ₊a⟩ on `rule`, minus ⟨Λ₊a, Λ₊a⟩,
/// and the norm; used to re-evaluate a stored state.
pub fn one_electron_excess(wave: &dyn SWave, params: &CouplingParams, rule: &RadialRule) -> (f64, f64) {
    let amps = wave.amplitudes(&rule.r);
    let dens: Vec<f64> = amps.iter().zip(&rule.r).map(|(a, r)| (a[0] * a[0] + a[1] * a[1]) / r).collect();
    (kinetic_excess(wave, wave) - params.alpha_z() * rule.integrate(&dens), overlap(wave, wave))
}
