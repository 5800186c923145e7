//! Radial C² cutoff profiles built from the quintic smoothstep.

use serde::{Deserialize, Serialize};

use crate::grid::Grid;
use crate::real::Real;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutoffKind {
    /// 1 inside radius `a·R`, 0 outside `b·R`.
    Ball { a: f64, b: f64 },
    /// 0 inside `a·R`, 1 outside `b·R`.
    Complement { a: f64, b: f64 },
    /// Rises on [r0, r1]·R, equals 1 on [r1, r2]·R, falls on [r2, r3]·R.
    Shell { r0: f64, r1: f64, r2: f64, r3: f64 },
}

/// S(t) = 6t⁵ − 15t⁴ + 10t³ clamped to [0, 1], with first and second derivatives.
#[inline]
pub fn smoothstep(t: f64) -> (f64, f64, f64) {
    if t <= 0.0 {
        (0.0, 0.0, 0.0)
    } else if t >= 1.0 {
        (1.0, 0.0, 0.0)
    } else {
        let v = t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
        let d1 = 30.0 * t * t * (1.0 - t) * (1.0 - t);
        let d2 = 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t);
        (v, d1, d2)
    }
}

/// Radial cutoff χ(x) = profile(|x|/R) with measured derivative sup-norms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffProfile {
    pub scale_r: f64,
    pub kind: CutoffKind,
    /// sup |∇χ|
    pub sup_grad: f64,
    /// sup of the operator norm of the Hessian of χ
    pub sup_hess: f64,
}

impl CutoffProfile {
    pub fn new(kind: CutoffKind, scale_r: f64) -> Self {
        let mut out = Self { scale_r, kind, sup_grad: 0.0, sup_hess: 0.0 };
        let (g, h) = out.measure_sup_norms();
        out.sup_grad = g;
        out.sup_hess = h;
        out
    }

    pub fn ball(a: f64, b: f64, scale_r: f64) -> Self {
        Self::new(CutoffKind::Ball { a, b }, scale_r)
    }

    pub fn complement(a: f64, b: f64, scale_r: f64) -> Self {
        Self::new(CutoffKind::Complement { a, b }, scale_r)
    }

    pub fn shell(r0: f64, r1: f64, r2: f64, r3: f64, scale_r: f64) -> Self {
        Self::new(CutoffKind::Shell { r0, r1, r2, r3 }, scale_r)
    }

    /// Same shape at a different scale.
    pub fn rescaled(&self, scale_r: f64) -> Self {
        Self::new(self.kind, scale_r)
    }

    /// Profile value and its first two derivatives with respect to s = r/R.
    pub fn profile(&self, s: f64) -> (f64, f64, f64) {
        match self.kind {
            CutoffKind::Ball { a, b } => {
                let w = b - a;
                let (v, d1, d2) = smoothstep((s - a) / w);
                (1.0 - v, -d1 / w, -d2 / (w * w))
            }
            CutoffKind::Complement { a, b } => {
                let w = b - a;
                let (v, d1, d2) = smoothstep((s - a) / w);
                (v, d1 / w, d2 / (w * w))
            }
            CutoffKind::Shell { r0, r1, r2, r3 } => {
                let (wu, wd) = (r1 - r0, r3 - r2);
                let (u, u1, u2) = smoothstep((s - r0) / wu);
                let (d, d1, d2) = smoothstep((s - r2) / wd);
                let (u1, u2) = (u1 / wu, u2 / (wu * wu));
                let (d, d1, d2) = (1.0 - d, -d1 / wd, -d2 / (wd * wd));
                (u * d, u1 * d + u * d1, u2 * d + 2.0 * u1 * d1 + u * d2)
            }
        }
    }

    /// Outer radius of the support in absolute units (infinite for complements).
    pub fn outer_radius(&self) -> f64 {
        match self.kind {
            CutoffKind::Ball { b, .. } => b * self.scale_r,
            CutoffKind::Complement { .. } => f64::INFINITY,
            CutoffKind::Shell { r3, .. } => r3 * self.scale_r,
        }
    }

    pub fn value(&self, x: [f64; 3]) -> f64 {
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        self.profile(r / self.scale_r).0
    }

    pub fn gradient(&self, x: [f64; 3]) -> [f64; 3] {
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        if r == 0.0 {
            return [0.0; 3];
        }
        let d = self.profile(r / self.scale_r).1 / self.scale_r;
        x.map(|c| d * c / r)
    }

    /// Samples χ on the grid nodes.
    pub fn sample<T: Real>(&self, grid: &Grid<T>) -> Vec<T> {
        (0..grid.len())
            .map(|i| {
                let p = grid.position(i).map(|c| c.to_f64_lossy());
                T::lit(self.value(p))
            })
            .collect()
    }

    fn measure_sup_norms(&self) -> (f64, f64) {
        let s_max = match self.kind {
            CutoffKind::Ball { b, .. } | CutoffKind::Complement { b, .. } => b,
            CutoffKind::Shell { r3, .. } => r3,
        };
        let steps = 20_000;
        let (mut g, mut h) = (0.0f64, 0.0f64);
        for i in 1..=steps {
            let s = s_max * i as f64 / steps as f64;
            let (_, d1, d2) = self.profile(s);
            g = g.max(d1.abs());
            // Hessian eigenvalues are χ'' (radial) and χ'/r (tangential, twice)
            h = h.max(d2.abs()).max((d1 / s).abs());
        }
        (g / self.scale_r, h / (self.scale_r * self.scale_r))
    }
}
