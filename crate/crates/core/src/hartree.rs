//! Free-space convolution with 1/|x| and 1/|x|² on a grid.
//!
//! Data on an n³ grid is zero-padded to (2n)³ and convolved with the kernel
//! sampled at minimum-image offsets, which reproduces the open-boundary sum
//! Σ_y k(x−y)ρ(y)h³ exactly for all node pairs. The self cell uses the cell
//! average of the kernel (C₁/h for 1/r, C₂/h² for 1/r²).

use num_complex::Complex64;

use crate::grid::{Fft3, Grid, ScalarField};
use crate::projector::unit_cube_inverse_power_average;

pub struct FreeSpaceConvolution {
    grid: Grid<f64>,
    power: u32,
    fft: Fft3<f64>,
    kernel_hat: Vec<Complex64>,
}

impl FreeSpaceConvolution {
    /// Kernel 1/|x|^power, power ∈ {1, 2}.
    pub fn new(grid: Grid<f64>, power: u32) -> Self {
        assert!(power == 1 || power == 2, "only 1/r and 1/r² kernels are supported");
        let n = grid.n();
        let m = 2 * n;
        let h = grid.spacing();
        let w = grid.cell_volume();
        let self_value = unit_cube_inverse_power_average(power) / h.powi(power as i32);
        let off = |i: usize| -> f64 {
            let k = if i < n { i as f64 } else { i as f64 - m as f64 };
            k * h
        };
        let mut kernel = vec![Complex64::new(0.0, 0.0); m * m * m];
        for ix in 0..m {
            for iy in 0..m {
                for iz in 0..m {
                    let (a, b, c) = (off(ix), off(iy), off(iz));
                    let r2 = a * a + b * b + c * c;
                    let v = if r2 == 0.0 {
                        self_value
                    } else if power == 1 {
                        1.0 / r2.sqrt()
                    } else {
                        1.0 / r2
                    };
                    kernel[(ix * m + iy) * m + iz] = Complex64::new(v * w * ((m * m * m) as f64).sqrt(), 0.0);
                }
            }
        }
        let fft = Fft3::new(m);
        fft.forward(&mut kernel);
        Self { grid, power, fft, kernel_hat: kernel }
    }

    pub fn grid(&self) -> &Grid<f64> {
        &self.grid
    }

    pub fn power(&self) -> u32 {
        self.power
    }

    pub fn convolve_complex(&self, data: &[Complex64]) -> Vec<Complex64> {
        let n = self.grid.n();
        let m = 2 * n;
        assert_eq!(data.len(), n * n * n);
        let mut buf = vec![Complex64::new(0.0, 0.0); m * m * m];
        for ix in 0..n {
            for iy in 0..n {
                let src = (ix * n + iy) * n;
                let dst = (ix * m + iy) * m;
                buf[dst..dst + n].copy_from_slice(&data[src..src + n]);
            }
        }
        self.fft.forward(&mut buf);
        for (b, k) in buf.iter_mut().zip(&self.kernel_hat) {
            *b *= k;
        }
        self.fft.inverse(&mut buf);
        let mut out = vec![Complex64::new(0.0, 0.0); n * n * n];
        for ix in 0..n {
            for iy in 0..n {
                let dst = (ix * n + iy) * n;
                let src = (ix * m + iy) * m;
                out[dst..dst + n].copy_from_slice(&buf[src..src + n]);
            }
        }
        out
    }

    pub fn convolve(&self, data: &[f64]) -> Vec<f64> {
        let c: Vec<Complex64> = data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.convolve_complex(&c).into_iter().map(|v| v.re).collect()
    }

    /// ∫∫ a(x) b(y) k(x−y) dx dy (bilinear, no conjugation).
    pub fn pair_energy(&self, a: &[Complex64], b: &[Complex64]) -> Complex64 {
        let wb = self.convolve_complex(b);
        a.iter().zip(&wb).fold(Complex64::new(0.0, 0.0), |s, (x, y)| s + x * y) * self.grid.cell_volume()
    }
}

/// Potential ∫ρ(y)/|x−y| dy of a density, with open boundary conditions.
pub fn hartree_potential(density: &ScalarField<f64>) -> ScalarField<f64> {
    let conv = FreeSpaceConvolution::new(density.grid, 1);
    ScalarField { grid: density.grid, data: conv.convolve(&density.data) }
}
