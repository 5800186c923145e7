//! The positive-energy projector Λ₊ on grid fields.
//!
//! Two independent routes are provided. [`Projector`] multiplies by the
//! momentum symbol ½ + (α·p+β)/(2√(1+p²)) on the dual lattice. [`KernelQuadrature`]
//! evaluates the coordinate-space form
//!
//! ```text
//! Λ₊f(x) = f(x)/2 + (1/4π²)∫ [β K₁(r)/r + iα·(x−y) K₀(r)/r²] f(y) dy
//!                 + (i/2π²) PV∫_{r>ε} α·(x−y) K₁(r)/r³ f(y) dy,   r = |x−y|,
//! ```
//!
//! by quadrature over grid cells. Cells within three cells of the target use
//! exact cell averages of the kernel (the kernel is far from linear there);
//! the remaining cells use midpoint values. The ε-ball is removed by a
//! cell-centre test. Because the removed ball is a union of cells, the leading
//! truncation error is proportional to the excluded second moment
//! M(ε) = Σ_excluded ∫_cell z_x² K₁(|z|)/|z|³ dz, which is what
//! [`richardson`] extrapolates in.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::besselk::{g_decay_f64, k0k1_f64};
use crate::cutoff::CutoffProfile;
use crate::dirac::Spinor;
use crate::error::{Error, Result};
use crate::grid::{Fft3, FourierField, Grid, SpinorField};
use crate::quad::gauss_legendre;
use crate::real::Real;

const FOUR_PI_SQ: f64 = 4.0 * std::f64::consts::PI * std::f64::consts::PI;
const TWO_PI_SQ: f64 = 2.0 * std::f64::consts::PI * std::f64::consts::PI;

/// Cells with all offsets |o_i| ≤ NEAR_CELLS use averaged kernel values.
pub const NEAR_CELLS: i64 = 3;

#[inline]
fn c<T: Real>(re: T, im: T) -> Complex<T> {
    Complex::new(re, im)
}

/// (α·p + β)v for one spinor.
#[inline]
pub fn dirac_mode<T: Real>(p: [T; 3], v: &Spinor<T>) -> Spinor<T> {
    let pz = c(p[2], T::zero());
    let pm = c(p[0], -p[1]);
    let pp = c(p[0], p[1]);
    // σ·p acting on a 2-spinor
    let sp = |a: Complex<T>, b: Complex<T>| (pz * a + pm * b, pp * a - pz * b);
    let (l0, l1) = sp(v[2], v[3]);
    let (u0, u1) = sp(v[0], v[1]);
    [v[0] + l0, v[1] + l1, u0 - v[2], u1 - v[3]]
}

/// Λ₊(p)v given E = √(1+p²).
#[inline]
pub fn lambda_mode<T: Real>(p: [T; 3], energy: T, v: &Spinor<T>) -> Spinor<T> {
    let d = dirac_mode(p, v);
    let half = T::lit(0.5);
    let s = half / energy;
    std::array::from_fn(|i| v[i] * half + d[i] * s)
}

/// Fourier-side operations on one grid: Λ₊, commutators, Sobolev norms.
pub struct Projector<T: Real> {
    grid: Grid<T>,
    fft: Fft3<T>,
    momenta: Vec<[T; 3]>,
    energy: Vec<T>,
}

impl<T: Real> Projector<T> {
    pub fn new(grid: Grid<T>) -> Self {
        let momenta = grid.momenta();
        let energy = momenta.iter().map(|p| (T::one() + p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt()).collect();
        Self { grid, fft: Fft3::new(grid.n()), momenta, energy }
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn fft(&self) -> &Fft3<T> {
        &self.fft
    }

    pub fn momenta(&self) -> &[[T; 3]] {
        &self.momenta
    }

    /// √(1+p²) in FFT order.
    pub fn energies(&self) -> &[T] {
        &self.energy
    }

    fn check_grid(&self, f: &SpinorField<T>) {
        assert_eq!(f.grid, self.grid, "field lives on a different grid");
    }

    pub fn to_fourier(&self, f: &SpinorField<T>) -> FourierField<T> {
        self.check_grid(f);
        f.to_fourier(&self.fft)
    }

    pub fn to_spinor(&self, f: &FourierField<T>) -> SpinorField<T> {
        f.to_spinor(&self.fft)
    }

    /// Multiplies every mode by its symbol Λ₊(p) in place.
    pub fn project_fourier(&self, f: &mut FourierField<T>) {
        for idx in 0..self.grid.len() {
            let v = lambda_mode(self.momenta[idx], self.energy[idx], &f.at(idx));
            f.set(idx, v);
        }
    }

    pub fn apply(&self, f: &SpinorField<T>) -> SpinorField<T> {
        let mut ff = self.to_fourier(f);
        self.project_fourier(&mut ff);
        self.to_spinor(&ff)
    }

    /// χ·Λ₊f − Λ₊(χ·f) with χ sampled on the grid.
    pub fn commutator(&self, chi: &[T], f: &SpinorField<T>) -> SpinorField<T> {
        let a = self.apply(f).multiply_scalar(chi);
        let b = self.apply(&f.multiply_scalar(chi));
        a.sub(&b)
    }

    /// (Σ_p (1+p²)^s |f̂(p)|² h³)^{1/2}.
    pub fn sobolev_norm(&self, f: &SpinorField<T>, s: T) -> T {
        let ff = self.to_fourier(f);
        let mut acc = T::zero();
        for idx in 0..self.grid.len() {
            let w = (self.energy[idx] * self.energy[idx]).powf(s);
            let m = ff.comps.iter().fold(T::zero(), |a, comp| a + comp[idx].norm_sqr());
            acc += w * m;
        }
        (acc * self.grid.cell_volume()).sqrt()
    }
}

pub fn apply_lambda_fourier<T: Real>(f: &SpinorField<T>) -> SpinorField<T> {
    Projector::new(f.grid).apply(f)
}

pub fn commutator_apply<T: Real>(chi: &CutoffProfile, f: &SpinorField<T>) -> SpinorField<T> {
    Projector::new(f.grid).commutator(&chi.sample(&f.grid), f)
}

pub fn h1_norm<T: Real>(f: &SpinorField<T>) -> T {
    Projector::new(f.grid).sobolev_norm(f, T::one())
}

pub fn h_half_norm<T: Real>(f: &SpinorField<T>) -> T {
    Projector::new(f.grid).sobolev_norm(f, T::lit(0.5))
}

/// Lower bound on ‖op‖ from seeded random probes refined by power iteration.
///
/// Every recorded value is ‖op v‖ for a unit v, so the result never exceeds
/// the true norm; for normal operators the iteration converges to it.
pub fn estimate_operator_norm<T: Real>(
    grid: Grid<T>,
    op: impl Fn(&SpinorField<T>) -> SpinorField<T>,
    n_probes: usize,
    power_steps: usize,
    seed: u64,
) -> Result<T> {
    if n_probes == 0 {
        return Err(Error::Precondition("need at least one probe".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = T::zero();
    for _ in 0..n_probes {
        let mut v = gaussian_field(grid, &mut rng);
        for _ in 0..=power_steps {
            let w = op(&v);
            let n = w.norm();
            best = best.max(n);
            if n == T::zero() || !n.is_finite() {
                break;
            }
            v = w.scaled(c(T::one() / n, T::zero()));
        }
    }
    Ok(best)
}

/// Unit-norm field with Box–Muller normal entries.
pub fn gaussian_field<T: Real>(grid: Grid<T>, rng: &mut impl Rng) -> SpinorField<T> {
    let mut f = SpinorField::zeros(grid);
    for comp in f.comps.iter_mut() {
        for v in comp.iter_mut() {
            let u1: f64 = 1.0 - rng.gen::<f64>();
            let u2: f64 = rng.gen();
            let r = (-2.0 * u1.ln()).sqrt();
            let t = 2.0 * std::f64::consts::PI * u2;
            *v = c(T::lit(r * t.cos()), T::lit(r * t.sin()));
        }
    }
    let n = f.norm();
    f.scale(c(T::one() / n, T::zero()));
    f
}

/// Kernel pieces at separation z (|z| > 0): K₁/r, K₀/r² and K₁/r³.
#[inline]
fn kernel_radial(r: f64) -> (f64, f64, f64) {
    let (k0, k1, _) = k0k1_f64(r);
    (k1 / r, k0 / (r * r), k1 / (r * r * r))
}

/// Gauss–Legendre average over the cube of side h centred at `center`,
/// split into `sub`³ sub-cubes. `acc` receives (weight, point).
fn cube_average(center: [f64; 3], h: f64, sub: usize, nodes: &(Vec<f64>, Vec<f64>), mut acc: impl FnMut(f64, [f64; 3])) {
    let (x, w) = nodes;
    let hs = h / sub as f64;
    let norm = 1.0 / (8.0 * (sub * sub * sub) as f64);
    for sx in 0..sub {
        for sy in 0..sub {
            for sz in 0..sub {
                let lo = [
                    center[0] - 0.5 * h + sx as f64 * hs,
                    center[1] - 0.5 * h + sy as f64 * hs,
                    center[2] - 0.5 * h + sz as f64 * hs,
                ];
                for (i, xi) in x.iter().enumerate() {
                    for (j, xj) in x.iter().enumerate() {
                        for (k, xk) in x.iter().enumerate() {
                            let p = [lo[0] + 0.5 * (xi + 1.0) * hs, lo[1] + 0.5 * (xj + 1.0) * hs, lo[2] + 0.5 * (xk + 1.0) * hs];
                            acc(w[i] * w[j] * w[k] * norm, p);
                        }
                    }
                }
            }
        }
    }
}

/// Average of K₁(r)/r over the cube [−h/2, h/2]³.
///
/// Uses the face decomposition: for a face at distance a = h/2 the cone
/// through a surface point at distance ρ contributes (a/ρ³)∫₀^ρ r K₁(r) dr per
/// unit area.
pub fn self_cell_beta_average(h: f64) -> f64 {
    let a = 0.5 * h;
    let (gu, gw) = gauss_legendre(40);
    let (gr, gwr) = gauss_legendre(16);
    let mut tot = 0.0;
    for (u, wu) in gu.iter().zip(&gw) {
        for (v, wv) in gu.iter().zip(&gw) {
            let rho = a * (u * u + v * v + 1.0).sqrt();
            let inner: f64 = gr
                .iter()
                .zip(&gwr)
                .map(|(t, wt)| {
                    let r = 0.5 * (t + 1.0) * rho;
                    wt * r * k0k1_f64(r).1
                })
                .sum::<f64>()
                * 0.5
                * rho;
            tot += wu * wv * a * a * a / (rho * rho * rho) * inner;
        }
    }
    6.0 * tot / (h * h * h)
}

/// Average of 1/|x|ⁿ (n = 1 or 2) over the unit cube centred at the origin,
/// by the same face decomposition.
pub fn unit_cube_inverse_power_average(power: u32) -> f64 {
    let a = 0.5;
    let (gu, gw) = gauss_legendre(48);
    let mut tot = 0.0;
    for (u, wu) in gu.iter().zip(&gw) {
        for (v, wv) in gu.iter().zip(&gw) {
            let rho: f64 = a * (u * u + v * v + 1.0).sqrt();
            // ∫₀^ρ r² r^{-n} dr
            let radial = match power {
                1 => 0.5 * rho * rho,
                2 => rho,
                _ => panic!("only powers 1 and 2 are supported"),
            };
            tot += wu * wv * a * a * a / (rho * rho * rho) * radial;
        }
    }
    6.0 * tot
}

/// Precomputed kernel tables for coordinate-space application of Λ₊.
pub struct KernelQuadrature<T: Real> {
    grid: Grid<T>,
    fft: Fft3<T>,
    /// β-term weight per offset (already divided by 4π² and multiplied by h³), transformed.
    beta_hat: Vec<Complex<T>>,
    /// K₀ term (x−y)_j K₀/r² /4π², per axis, untransformed, f64.
    odd_k0: [Vec<f64>; 3],
    /// PV term (x−y)_j K₁/r³ /2π², per axis.
    odd_pv: [Vec<f64>; 3],
    /// Cell integral of z_x² K₁/r³ per offset.
    moment: Vec<f64>,
    /// Distance of each offset cell centre from the origin.
    radius: Vec<f64>,
}

/// Result of one kernel application.
#[derive(Clone, Debug)]
pub struct KernelApplication<T> {
    pub field: SpinorField<T>,
    pub epsilon: T,
    /// Excluded second moment M(ε).
    pub excluded_moment: f64,
}

impl<T: Real> KernelQuadrature<T> {
    pub fn new(grid: Grid<T>) -> Self {
        let n = grid.n();
        let h = grid.spacing().to_f64_lossy();
        let len = grid.len();
        let nodes = gauss_legendre(8);
        let mut beta = vec![0.0; len];
        let mut odd_k0: [Vec<f64>; 3] = std::array::from_fn(|_| vec![0.0; len]);
        let mut odd_pv: [Vec<f64>; 3] = std::array::from_fn(|_| vec![0.0; len]);
        let mut moment = vec![0.0; len];
        let mut radius = vec![0.0; len];
        let sb = self_cell_beta_average(h);
        let w = h * h * h;
        for idx in 0..len {
            let (ix, iy, iz) = grid.unravel(idx);
            let o = [grid.freq_index(ix), grid.freq_index(iy), grid.freq_index(iz)];
            let z = o.map(|k| k as f64 * h);
            let r = (z[0] * z[0] + z[1] * z[1] + z[2] * z[2]).sqrt();
            radius[idx] = r;
            if o == [0, 0, 0] {
                beta[idx] = sb;
                moment[idx] = sb / 3.0 * w;
                continue;
            }
            if o.iter().all(|k| k.abs() <= NEAR_CELLS) {
                let mut acc = [0.0; 8];
                cube_average(z, h, 2, &nodes, |wt, p| {
                    let rr = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
                    let (a, b, cc) = kernel_radial(rr);
                    acc[0] += wt * a;
                    for j in 0..3 {
                        acc[1 + j] += wt * p[j] * b;
                        acc[4 + j] += wt * p[j] * cc;
                    }
                    acc[7] += wt * p[0] * p[0] * cc;
                });
                beta[idx] = acc[0];
                for j in 0..3 {
                    odd_k0[j][idx] = acc[1 + j];
                    odd_pv[j][idx] = acc[4 + j];
                }
                moment[idx] = acc[7] * w;
            } else {
                let (a, b, cc) = kernel_radial(r);
                beta[idx] = a;
                for j in 0..3 {
                    odd_k0[j][idx] = z[j] * b;
                    odd_pv[j][idx] = z[j] * cc;
                }
                moment[idx] = z[0] * z[0] * cc * w;
            }
        }
        for j in 0..3 {
            for v in odd_k0[j].iter_mut() {
                *v *= w / FOUR_PI_SQ;
            }
            for v in odd_pv[j].iter_mut() {
                *v *= w / TWO_PI_SQ;
            }
        }
        let fft = Fft3::new(n);
        let scale = (len as f64).sqrt();
        let mut beta_hat: Vec<Complex<T>> = beta.iter().map(|&v| c(T::lit(v * w / FOUR_PI_SQ * scale), T::zero())).collect();
        fft.forward(&mut beta_hat);
        Self { grid, fft, beta_hat, odd_k0, odd_pv, moment, radius }
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    /// Σ over offsets of the β weight; tends to ∫K₁(r)/r dr/4π² = 1/2 as h → 0.
    pub fn beta_weight_sum(&self) -> f64 {
        self.beta_hat[0].re.to_f64_lossy()
    }

    /// Excluded second moment M(ε) for the cell-centre test |o| < ε.
    pub fn excluded_moment(&self, epsilon: f64) -> f64 {
        self.radius.iter().zip(&self.moment).filter(|(r, _)| **r < epsilon).map(|(_, m)| m).sum()
    }

    fn check(&self, f: &SpinorField<T>, epsilon: T) -> Result<()> {
        if f.grid != self.grid {
            return Err(Error::Precondition("field lives on a different grid".into()));
        }
        let h = self.grid.spacing();
        if !(epsilon >= h * T::lit(1.0 - 1e-9)) {
            return Err(Error::Precondition(format!(
                "epsilon {:.4e} is below the grid spacing {:.4e}",
                epsilon.to_f64_lossy(),
                h.to_f64_lossy()
            )));
        }
        let limit = self.grid.box_l() * T::lit(0.25);
        let r = f.support_radius();
        if r > limit {
            return Err(Error::Precondition(format!(
                "support radius {:.4} exceeds box_l/4 = {:.4}",
                r.to_f64_lossy(),
                limit.to_f64_lossy()
            )));
        }
        Ok(())
    }

    /// Transformed odd kernel tables Σ (K₀ term + masked PV term), per axis.
    fn odd_hat(&self, epsilon: f64, include_k0: bool, include_pv: bool) -> [Vec<Complex<T>>; 3] {
        let scale = (self.grid.len() as f64).sqrt();
        std::array::from_fn(|j| {
            let mut t: Vec<Complex<T>> = (0..self.grid.len())
                .map(|idx| {
                    let mut v = 0.0;
                    if include_k0 {
                        v += self.odd_k0[j][idx];
                    }
                    if include_pv && self.radius[idx] >= epsilon {
                        v += self.odd_pv[j][idx];
                    }
                    c(T::lit(v * scale), T::zero())
                })
                .collect();
            self.fft.forward(&mut t);
            t
        })
    }

    /// Circular convolution of f with the operator β·B + iα·V, where B and V
    /// are given by their transforms.
    fn convolve(&self, f: &SpinorField<T>, beta: Option<&[Complex<T>]>, odd: &[Vec<Complex<T>>; 3]) -> SpinorField<T> {
        let mut fh = f.comps.clone();
        for comp in fh.iter_mut() {
            self.fft.forward(comp);
        }
        let len = self.grid.len();
        let i = c(T::zero(), T::one());
        let mut out: [Vec<Complex<T>>; 4] = std::array::from_fn(|_| vec![c(T::zero(), T::zero()); len]);
        for m in 0..len {
            let v = [fh[0][m], fh[1][m], fh[2][m], fh[3][m]];
            let p = [odd[0][m], odd[1][m], odd[2][m]];
            // iα·V v with α_j = [[0, σ_j], [σ_j, 0]]
            let sv = |a: Complex<T>, b: Complex<T>| (p[2] * a + (p[0] - i * p[1]) * b, (p[0] + i * p[1]) * a - p[2] * b);
            let (l0, l1) = sv(v[2], v[3]);
            let (u0, u1) = sv(v[0], v[1]);
            let mut r = [i * l0, i * l1, i * u0, i * u1];
            if let Some(bh) = beta {
                r[0] += bh[m] * v[0];
                r[1] += bh[m] * v[1];
                r[2] -= bh[m] * v[2];
                r[3] -= bh[m] * v[3];
            }
            for k in 0..4 {
                out[k][m] = r[k];
            }
        }
        for comp in out.iter_mut() {
            self.fft.inverse(comp);
        }
        SpinorField { grid: self.grid, comps: out }
    }

    /// f/2 plus the three kernel integrals with the ε-ball removed from the PV term.
    pub fn apply(&self, f: &SpinorField<T>, epsilon: T) -> Result<KernelApplication<T>> {
        self.check(f, epsilon)?;
        let eps = epsilon.to_f64_lossy();
        let odd = self.odd_hat(eps, true, true);
        let mut field = self.convolve(f, Some(&self.beta_hat), &odd);
        field.axpy(c(T::lit(0.5), T::zero()), f);
        Ok(KernelApplication { field, epsilon, excluded_moment: self.excluded_moment(eps) })
    }

    /// The truncated principal-value term T_ε f alone.
    pub fn pv_term(&self, f: &SpinorField<T>, epsilon: T) -> Result<SpinorField<T>> {
        self.check(f, epsilon)?;
        let odd = self.odd_hat(epsilon.to_f64_lossy(), false, true);
        Ok(self.convolve(f, None, &odd))
    }

    /// ‖T_ε‖ on the periodic grid: the largest symbol magnitude max_p |V̂_ε(p)|.
    pub fn pv_operator_norm(&self, epsilon: T) -> T {
        let odd = self.odd_hat(epsilon.to_f64_lossy(), false, true);
        let mut best = T::zero();
        for m in 0..self.grid.len() {
            // the table is real and odd, so its transform is imaginary; the
            // operator iα·V̂ is Hermitian with eigenvalues ±|V̂|
            let s = (odd[0][m].norm_sqr() + odd[1][m].norm_sqr() + odd[2][m].norm_sqr()).sqrt();
            best = best.max(s);
        }
        best
    }
}

/// Extrapolates two truncated applications to M → 0:
/// T₀ = (M₂T₁ − M₁T₂)/(M₂ − M₁).
pub fn richardson<T: Real>(a: &KernelApplication<T>, b: &KernelApplication<T>) -> Result<SpinorField<T>> {
    let (m1, m2) = (a.excluded_moment, b.excluded_moment);
    if (m2 - m1).abs() <= 1e-14 * m1.abs().max(m2.abs()) {
        return Err(Error::Precondition("the two epsilons exclude the same cells".into()));
    }
    let d = m2 - m1;
    let mut out = a.field.scaled(c(T::lit(m2 / d), T::zero()));
    out.axpy(c(T::lit(-m1 / d), T::zero()), &b.field);
    Ok(out)
}

pub fn apply_lambda_kernel<T: Real>(f: &SpinorField<T>, epsilon: T) -> Result<SpinorField<T>> {
    Ok(KernelQuadrature::new(f.grid).apply(f, epsilon)?.field)
}

/// Λ₊f at a point outside the support by direct midpoint summation over the
/// support nodes (no periodic images), with the distance d to the nearest
/// support node and the decay-envelope bound G(d)|Ω|^{1/2}‖f‖, where |Ω| is
/// the total volume of the support cells.
#[derive(Clone, Copy, Debug)]
pub struct ExteriorSample {
    pub x: [f64; 3],
    pub value: Spinor<f64>,
    pub magnitude: f64,
    pub distance: f64,
    pub bound: f64,
}

pub fn exterior_sample<T: Real>(f: &SpinorField<T>, x: [f64; 3]) -> Result<ExteriorSample> {
    let grid = f.grid;
    let w = grid.cell_volume().to_f64_lossy();
    let support = f.support_indices();
    if support.is_empty() {
        return Ok(ExteriorSample { x, value: [Complex::new(0.0, 0.0); 4], magnitude: 0.0, distance: f64::INFINITY, bound: 0.0 });
    }
    let mut acc = [Complex::new(0.0, 0.0); 4];
    let mut dmin = f64::INFINITY;
    let i = Complex::new(0.0, 1.0);
    for &idx in &support {
        let y = grid.position(idx).map(|v| v.to_f64_lossy());
        let z = [x[0] - y[0], x[1] - y[1], x[2] - y[2]];
        let r = (z[0] * z[0] + z[1] * z[1] + z[2] * z[2]).sqrt();
        dmin = dmin.min(r);
        if r == 0.0 {
            return Err(Error::Precondition("sample point lies on a support node".into()));
        }
        let (a, b, cc) = kernel_radial(r);
        let a = a / FOUR_PI_SQ;
        let s = b / FOUR_PI_SQ + cc / TWO_PI_SQ;
        let v = f.at(idx).map(|q| Complex::new(q.re.to_f64_lossy(), q.im.to_f64_lossy()));
        let p = z.map(|t| Complex::new(t * s, 0.0));
        let sv = |u: Complex<f64>, l: Complex<f64>| (p[2] * u + (p[0] - i * p[1]) * l, (p[0] + i * p[1]) * u - p[2] * l);
        let (l0, l1) = sv(v[2], v[3]);
        let (u0, u1) = sv(v[0], v[1]);
        acc[0] += (a * v[0] + i * l0) * w;
        acc[1] += (a * v[1] + i * l1) * w;
        acc[2] += (-a * v[2] + i * u0) * w;
        acc[3] += (-a * v[3] + i * u1) * w;
    }
    let magnitude = acc.iter().map(|q| q.norm_sqr()).sum::<f64>().sqrt();
    let omega = support.len() as f64 * w;
    let bound = g_decay_f64(dmin) * omega.sqrt() * f.norm().to_f64_lossy();
    Ok(ExteriorSample { x, value: acc, magnitude, distance: dmin, bound })
}
