//! Uniform periodic grids, spinor fields and the unitary 3D FFT.
//!
//! Grid points sit at x_i = −L/2 + (i + ½)h with h = L/n, so no node coincides
//! with the origin. Momenta live on the dual lattice 2π/L·{0, 1, …, −1} in FFT
//! order.

use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::real::Real;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid<T> {
    n: usize,
    l: T,
}

impl<T: Real> Grid<T> {
    pub fn new(n: usize, box_l: T) -> Result<Self> {
        if n < 2 {
            return Err(Error::Precondition(format!("grid needs at least 2 points per axis, got {n}")));
        }
        if !(box_l > T::zero()) || !box_l.is_finite() {
            return Err(Error::Precondition("box length must be positive and finite".into()));
        }
        Ok(Self { n, l: box_l })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn box_l(&self) -> T {
        self.l
    }

    #[inline]
    pub fn spacing(&self) -> T {
        self.l / T::from_count(self.n)
    }

    #[inline]
    pub fn cell_volume(&self) -> T {
        let h = self.spacing();
        h * h * h
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn coord(&self, i: usize) -> T {
        -self.l * T::lit(0.5) + (T::from_count(i) + T::lit(0.5)) * self.spacing()
    }

    /// Signed FFT frequency index of position `i` along one axis.
    #[inline]
    pub fn freq_index(&self, i: usize) -> i64 {
        if i < self.n.div_ceil(2) {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    #[inline]
    pub fn momentum(&self, i: usize) -> T {
        T::lit(2.0 * std::f64::consts::PI * self.freq_index(i) as f64) / self.l
    }

    /// Spacing of the dual lattice, 2π/L.
    #[inline]
    pub fn dual_spacing(&self) -> T {
        T::lit(2.0 * std::f64::consts::PI) / self.l
    }

    #[inline]
    pub fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (ix * self.n + iy) * self.n + iz
    }

    #[inline]
    pub fn unravel(&self, idx: usize) -> (usize, usize, usize) {
        let iz = idx % self.n;
        let iy = (idx / self.n) % self.n;
        let ix = idx / (self.n * self.n);
        (ix, iy, iz)
    }

    #[inline]
    pub fn position(&self, idx: usize) -> [T; 3] {
        let (ix, iy, iz) = self.unravel(idx);
        [self.coord(ix), self.coord(iy), self.coord(iz)]
    }

    #[inline]
    pub fn momentum_at(&self, idx: usize) -> [T; 3] {
        let (ix, iy, iz) = self.unravel(idx);
        [self.momentum(ix), self.momentum(iy), self.momentum(iz)]
    }

    /// Largest momentum component magnitude represented on the grid, π/h.
    pub fn nyquist(&self) -> T {
        T::PI() / self.spacing()
    }

    /// Positions of all nodes in storage order.
    pub fn positions(&self) -> Vec<[T; 3]> {
        (0..self.len()).map(|i| self.position(i)).collect()
    }

    /// Momenta of all Fourier modes in storage order.
    pub fn momenta(&self) -> Vec<[T; 3]> {
        (0..self.len()).map(|i| self.momentum_at(i)).collect()
    }

    /// Snaps a momentum to the nearest dual-lattice vector.
    pub fn snap_momentum(&self, k: [T; 3]) -> [T; 3] {
        let dk = self.dual_spacing();
        k.map(|c| (c / dk).round() * dk)
    }
}

/// Unitary 3D discrete Fourier transform on an n³ block.
pub struct Fft3<T: Real> {
    n: usize,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
}

impl<T: Real> Fft3<T> {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self { n, forward: planner.plan_fft_forward(n), inverse: planner.plan_fft_inverse(n) }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// In-place unitary forward transform, F_m = n^{-3/2} Σ_j f_j e^{−2πi j·m/n}.
    pub fn forward(&self, data: &mut [Complex<T>]) {
        self.run(data, &self.forward);
    }

    /// In-place unitary inverse transform.
    pub fn inverse(&self, data: &mut [Complex<T>]) {
        self.run(data, &self.inverse);
    }

    fn run(&self, data: &mut [Complex<T>], plan: &Arc<dyn Fft<T>>) {
        let n = self.n;
        assert_eq!(data.len(), n * n * n, "buffer does not match FFT size");
        let mut scratch = vec![Complex::new(T::zero(), T::zero()); plan.get_inplace_scratch_len()];
        plan.process_with_scratch(data, &mut scratch);
        let mut line = vec![Complex::new(T::zero(), T::zero()); n * n];
        for ix in 0..n {
            let plane = &mut data[ix * n * n..(ix + 1) * n * n];
            for iy in 0..n {
                for iz in 0..n {
                    line[iz * n + iy] = plane[iy * n + iz];
                }
            }
            plan.process_with_scratch(&mut line, &mut scratch);
            for iy in 0..n {
                for iz in 0..n {
                    plane[iy * n + iz] = line[iz * n + iy];
                }
            }
        }
        for iy in 0..n {
            for ix in 0..n {
                for iz in 0..n {
                    line[iz * n + ix] = data[(ix * n + iy) * n + iz];
                }
            }
            plan.process_with_scratch(&mut line, &mut scratch);
            for ix in 0..n {
                for iz in 0..n {
                    data[(ix * n + iy) * n + iz] = line[iz * n + ix];
                }
            }
        }
        let s = T::one() / T::from_count(n * n * n).sqrt();
        for v in data.iter_mut() {
            *v = *v * s;
        }
    }
}

/// Four-component complex field on a grid, stored as one array per component.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinorField<T> {
    pub grid: Grid<T>,
    pub comps: [Vec<Complex<T>>; 4],
}

/// Momentum-space counterpart of [`SpinorField`]: unitary DFT coefficients in
/// FFT order. Norms carry the same cell weight h³ as the position-space field,
/// so Parseval holds without extra factors.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierField<T> {
    pub grid: Grid<T>,
    pub comps: [Vec<Complex<T>>; 4],
}

/// Real scalar field (densities, potentials, cutoff profiles).
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField<T> {
    pub grid: Grid<T>,
    pub data: Vec<T>,
}

fn zero_comps<T: Real>(len: usize) -> [Vec<Complex<T>>; 4] {
    std::array::from_fn(|_| vec![Complex::new(T::zero(), T::zero()); len])
}

fn comps_norm_sqr<T: Real>(comps: &[Vec<Complex<T>>; 4]) -> T {
    comps.iter().flatten().fold(T::zero(), |s, c| s + c.norm_sqr())
}

impl<T: Real> SpinorField<T> {
    pub fn zeros(grid: Grid<T>) -> Self {
        Self { grid, comps: zero_comps(grid.len()) }
    }

    /// Builds a field from a pointwise function of position.
    pub fn from_fn(grid: Grid<T>, f: impl Fn([T; 3]) -> [Complex<T>; 4]) -> Self {
        let mut out = Self::zeros(grid);
        for idx in 0..grid.len() {
            let v = f(grid.position(idx));
            for c in 0..4 {
                out.comps[c][idx] = v[c];
            }
        }
        out
    }

    #[inline]
    pub fn at(&self, idx: usize) -> [Complex<T>; 4] {
        [self.comps[0][idx], self.comps[1][idx], self.comps[2][idx], self.comps[3][idx]]
    }

    #[inline]
    pub fn set(&mut self, idx: usize, v: [Complex<T>; 4]) {
        for (c, val) in v.into_iter().enumerate() {
            self.comps[c][idx] = val;
        }
    }

    pub fn norm_sqr(&self) -> T {
        comps_norm_sqr(&self.comps) * self.grid.cell_volume()
    }

    /// L₂ norm with cell weight h³.
    pub fn norm(&self) -> T {
        self.norm_sqr().sqrt()
    }

    /// ⟨self, other⟩ = ∫ self* · other, conjugate-linear in `self`.
    pub fn inner(&self, other: &Self) -> Complex<T> {
        let mut s = Complex::new(T::zero(), T::zero());
        for c in 0..4 {
            for (a, b) in self.comps[c].iter().zip(&other.comps[c]) {
                s = s + a.conj() * b;
            }
        }
        s * self.grid.cell_volume()
    }

    pub fn scale(&mut self, s: Complex<T>) {
        for v in self.comps.iter_mut().flatten() {
            *v = *v * s;
        }
    }

    pub fn scaled(&self, s: Complex<T>) -> Self {
        let mut out = self.clone();
        out.scale(s);
        out
    }

    /// self += s·other
    pub fn axpy(&mut self, s: Complex<T>, other: &Self) {
        for c in 0..4 {
            for (a, b) in self.comps[c].iter_mut().zip(&other.comps[c]) {
                *a = *a + s * b;
            }
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(Complex::new(-T::one(), T::zero()), other);
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(Complex::new(T::one(), T::zero()), other);
        out
    }

    /// Pointwise multiplication by a real function sampled on the grid.
    pub fn multiply_scalar(&self, w: &[T]) -> Self {
        let mut out = self.clone();
        for comp in out.comps.iter_mut() {
            for (v, &s) in comp.iter_mut().zip(w) {
                *v = *v * s;
            }
        }
        out
    }

    /// |f|² at every node.
    pub fn density(&self) -> ScalarField<T> {
        let mut data = vec![T::zero(); self.grid.len()];
        for comp in &self.comps {
            for (d, v) in data.iter_mut().zip(comp) {
                *d += v.norm_sqr();
            }
        }
        ScalarField { grid: self.grid, data }
    }

    /// f*·g at every node (transition density).
    pub fn pair_density(&self, other: &Self) -> Vec<Complex<T>> {
        let mut data = vec![Complex::new(T::zero(), T::zero()); self.grid.len()];
        for c in 0..4 {
            for (d, (a, b)) in data.iter_mut().zip(self.comps[c].iter().zip(&other.comps[c])) {
                *d = *d + a.conj() * b;
            }
        }
        data
    }

    pub fn to_fourier(&self, fft: &Fft3<T>) -> FourierField<T> {
        let mut comps = self.comps.clone();
        for comp in comps.iter_mut() {
            fft.forward(comp);
        }
        FourierField { grid: self.grid, comps }
    }

    /// Largest distance from the origin of a node where the field is nonzero.
    pub fn support_radius(&self) -> T {
        let mut r = T::zero();
        for idx in 0..self.grid.len() {
            if self.comps.iter().any(|c| c[idx].norm_sqr() > T::zero()) {
                let x = self.grid.position(idx);
                r = r.max((x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt());
            }
        }
        r
    }

    pub fn support_indices(&self) -> Vec<usize> {
        (0..self.grid.len()).filter(|&i| self.comps.iter().any(|c| c[i].norm_sqr() > T::zero())).collect()
    }
}

impl<T: Real> FourierField<T> {
    pub fn zeros(grid: Grid<T>) -> Self {
        Self { grid, comps: zero_comps(grid.len()) }
    }

    pub fn norm(&self) -> T {
        (comps_norm_sqr(&self.comps) * self.grid.cell_volume()).sqrt()
    }

    pub fn to_spinor(&self, fft: &Fft3<T>) -> SpinorField<T> {
        let mut comps = self.comps.clone();
        for comp in comps.iter_mut() {
            fft.inverse(comp);
        }
        SpinorField { grid: self.grid, comps }
    }

    #[inline]
    pub fn at(&self, idx: usize) -> [Complex<T>; 4] {
        [self.comps[0][idx], self.comps[1][idx], self.comps[2][idx], self.comps[3][idx]]
    }

    #[inline]
    pub fn set(&mut self, idx: usize, v: [Complex<T>; 4]) {
        for (c, val) in v.into_iter().enumerate() {
            self.comps[c][idx] = val;
        }
    }

    /// Σ_p w(p)|f̂(p)|² h³, the weighted momentum-space norm squared.
    pub fn weighted_norm_sqr(&self, w: impl Fn([T; 3]) -> T) -> T {
        let mut s = T::zero();
        for idx in 0..self.grid.len() {
            let p = self.grid.momentum_at(idx);
            let m = self.comps.iter().fold(T::zero(), |a, c| a + c[idx].norm_sqr());
            s += w(p) * m;
        }
        s * self.grid.cell_volume()
    }
}

impl<T: Real> ScalarField<T> {
    pub fn zeros(grid: Grid<T>) -> Self {
        Self { grid, data: vec![T::zero(); grid.len()] }
    }

    pub fn from_fn(grid: Grid<T>, f: impl Fn([T; 3]) -> T) -> Self {
        Self { grid, data: (0..grid.len()).map(|i| f(grid.position(i))).collect() }
    }

    /// ∫ f with cell weight h³.
    pub fn integral(&self) -> T {
        self.data.iter().fold(T::zero(), |s, &v| s + v) * self.grid.cell_volume()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodes_avoid_origin() {
        let g = Grid::new(8, 4.0f64).unwrap();
        assert!((g.coord(3) + 0.25).abs() < 1e-15);
        assert!((g.coord(4) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn frequencies_follow_fft_order() {
        let g = Grid::new(6, 1.0f64).unwrap();
        let f: Vec<i64> = (0..6).map(|i| g.freq_index(i)).collect();
        assert_eq!(f, vec![0, 1, 2, -3, -2, -1]);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::new(1, 1.0f64).is_err());
        assert!(Grid::new(4, 0.0f64).is_err());
    }

    #[test]
    fn fft_round_trip_and_parseval() {
        let g = Grid::new(6, 3.0f64).unwrap();
        let f = SpinorField::from_fn(g, |x| {
            let a = Complex::new((x[0] * 1.3).sin() + x[2], x[1].cos());
            [a, a * 0.5, Complex::new(x[1], 0.0), Complex::new(0.0, x[0] * x[2])]
        });
        let fft = Fft3::new(6);
        let ff = f.to_fourier(&fft);
        assert!((ff.norm() - f.norm()).abs() < 1e-12 * f.norm());
        let back = ff.to_spinor(&fft);
        assert!(back.sub(&f).norm() < 1e-12 * f.norm());
    }

    #[test]
    fn plane_wave_is_one_mode() {
        let g = Grid::new(8, 5.0f64).unwrap();
        let k = [g.momentum(1), g.momentum(7), g.momentum(2)];
        let f = SpinorField::from_fn(g, |x| {
            let ph = k[0] * x[0] + k[1] * x[1] + k[2] * x[2];
            [Complex::from_polar(1.0, ph), Complex::new(0.0, 0.0), Complex::new(0.0, 0.0), Complex::new(0.0, 0.0)]
        });
        let ff = f.to_fourier(&Fft3::new(8));
        let target = g.index(1, 7, 2);
        let total: f64 = ff.comps[0].iter().map(|c| c.norm_sqr()).sum();
        assert!((ff.comps[0][target].norm_sqr() / total - 1.0).abs() < 1e-12);
    }
}
