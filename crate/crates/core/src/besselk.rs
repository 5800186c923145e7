//! Modified Bessel functions K₀, K₁ of positive real argument and the decay
//! envelope G(d) built from them.
//!
//! Evaluation is done in `f64` in three regimes: the power/log series for
//! z < 2, Steed's continued fraction for 2 ≤ z < 25, and the large-argument
//! asymptotic expansion for z ≥ 25 (where it is accurate to machine precision).
//! The generic entry points convert to and from the requested scalar type.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;

/// Boundary between the series and the continued fraction.
pub const SERIES_LIMIT: f64 = 2.0;
/// Boundary between the continued fraction and the asymptotic expansion.
pub const ASYMPTOTIC_LIMIT: f64 = 25.0;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Series,
    ContinuedFraction,
    Asymptotic,
}

/// K₀(z) and K₁(z) at one argument together with the branch that produced them.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BesselEval<T> {
    pub z: T,
    pub k0: T,
    pub k1: T,
    pub regime: Regime,
}

/// Value of G(d) = (1/4π²)(K₁(d)/d + 3K₀(d)/d + 6K₁(d)/d²).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayEnvelope<T> {
    pub d: T,
    pub value: T,
}

pub fn regime_for(z: f64) -> Regime {
    if z < SERIES_LIMIT {
        Regime::Series
    } else if z < ASYMPTOTIC_LIMIT {
        Regime::ContinuedFraction
    } else {
        Regime::Asymptotic
    }
}

/// Power/log series (A&S 9.6.13 and 9.6.11 with n = 1).
pub fn k0k1_series(z: f64) -> (f64, f64) {
    let y = 0.25 * z * z;
    let lg = (0.5 * z).ln();
    // term_k = y^k / (k!)^2 for I0; y^k / (k!(k+1)!) for I1 and the K1 sum
    let mut t0 = 1.0;
    let mut t1 = 1.0;
    let mut i0 = 1.0;
    let mut i1s = 1.0;
    let mut harm = 0.0;
    let mut k0_sum = 0.0;
    // psi(1) = -gamma, psi(2) = 1 - gamma
    let mut psi_k1 = -EULER_GAMMA;
    let mut psi_k2 = 1.0 - EULER_GAMMA;
    let mut k1_sum = psi_k1 + psi_k2;
    for k in 1..60 {
        let kf = k as f64;
        t0 *= y / (kf * kf);
        t1 *= y / (kf * (kf + 1.0));
        harm += 1.0 / kf;
        psi_k1 += 1.0 / kf;
        psi_k2 += 1.0 / (kf + 1.0);
        i0 += t0;
        i1s += t1;
        k0_sum += harm * t0;
        k1_sum += (psi_k1 + psi_k2) * t1;
        if t0 < 1e-18 * i0 && t1 < 1e-18 * i1s {
            break;
        }
    }
    let i1 = 0.5 * z * i1s;
    let k0 = -(lg + EULER_GAMMA) * i0 + k0_sum;
    let k1 = 1.0 / z + lg * i1 - 0.25 * z * k1_sum;
    (k0, k1)
}

/// Steed's continued fraction for order zero; returns e^z·K₀(z), e^z·K₁(z).
pub fn k0k1_scaled_cf(z: f64) -> (f64, f64) {
    let a1 = 0.25;
    let mut b = 2.0 * (1.0 + z);
    let mut d = 1.0 / b;
    let mut delh = d;
    let mut h = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 1..10_000 {
        let fi = i as f64;
        a -= 2.0 * fi;
        c = -a * c / (fi + 1.0);
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh = (b * d - 1.0) * delh;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < 1e-17 {
            break;
        }
    }
    let h = a1 * h;
    let k0 = (std::f64::consts::PI / (2.0 * z)).sqrt() / s;
    let k1 = k0 * (z + 0.5 - h) / z;
    (k0, k1)
}

/// Large-argument expansion; returns e^z·K₀(z), e^z·K₁(z).
pub fn k0k1_scaled_asymptotic(z: f64) -> (f64, f64) {
    let pref = (std::f64::consts::PI / (2.0 * z)).sqrt();
    let mut out = [0.0; 2];
    for (nu, slot) in out.iter_mut().enumerate() {
        let mu = 4.0 * (nu * nu) as f64;
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut prev = f64::INFINITY;
        for k in 1..80 {
            let odd = (2 * k - 1) as f64;
            term *= (mu - odd * odd) / (8.0 * k as f64 * z);
            if term.abs() > prev {
                break;
            }
            sum += term;
            prev = term.abs();
            if term.abs() < 1e-18 * sum.abs() {
                break;
            }
        }
        *slot = pref * sum;
    }
    (out[0], out[1])
}

/// (K₀(z), K₁(z), regime) in `f64`; caller guarantees z > 0.
pub fn k0k1_f64(z: f64) -> (f64, f64, Regime) {
    let regime = regime_for(z);
    let (k0, k1) = match regime {
        Regime::Series => k0k1_series(z),
        Regime::ContinuedFraction => {
            let (a, b) = k0k1_scaled_cf(z);
            let e = (-z).exp();
            (a * e, b * e)
        }
        Regime::Asymptotic => {
            let (a, b) = k0k1_scaled_asymptotic(z);
            let e = (-z).exp();
            (a * e, b * e)
        }
    };
    (k0, k1, regime)
}

fn check_positive<T: Real>(z: T, what: &str) -> Result<f64> {
    let zf = z.to_f64_lossy();
    if zf > 0.0 && zf.is_finite() {
        Ok(zf)
    } else {
        Err(Error::Domain(format!("{what} requires a positive finite argument, got {zf}")))
    }
}

pub fn bessel_eval<T: Real>(z: T) -> Result<BesselEval<T>> {
    let zf = check_positive(z, "bessel_eval")?;
    let (k0, k1, regime) = k0k1_f64(zf);
    Ok(BesselEval { z, k0: T::lit(k0), k1: T::lit(k1), regime })
}

pub fn bessel_k0<T: Real>(z: T) -> Result<T> {
    let zf = check_positive(z, "bessel_k0")?;
    Ok(T::lit(k0k1_f64(zf).0))
}

pub fn bessel_k1<T: Real>(z: T) -> Result<T> {
    let zf = check_positive(z, "bessel_k1")?;
    Ok(T::lit(k0k1_f64(zf).1))
}

/// G(d) in `f64` without argument checks.
pub fn g_decay_f64(d: f64) -> f64 {
    let (k0, k1, _) = k0k1_f64(d);
    (k1 / d + 3.0 * k0 / d + 6.0 * k1 / (d * d)) / (4.0 * std::f64::consts::PI * std::f64::consts::PI)
}

pub fn g_decay<T: Real>(d: T) -> Result<DecayEnvelope<T>> {
    let df = check_positive(d, "g_decay")?;
    Ok(DecayEnvelope { d, value: T::lit(g_decay_f64(df)) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_nonpositive_arguments() {
        assert!(bessel_k0(0.0f64).is_err());
        assert!(bessel_k1(-1.0f64).is_err());
        assert!(g_decay(0.0f64).is_err());
        assert!(bessel_k0(f64::NAN).is_err());
    }

    #[test]
    fn regimes_cover_the_axis() {
        assert_eq!(regime_for(1.0), Regime::Series);
        assert_eq!(regime_for(2.0), Regime::ContinuedFraction);
        assert_eq!(regime_for(30.0), Regime::Asymptotic);
    }

    #[test]
    fn branches_agree_at_crossovers() {
        let (s0, s1) = k0k1_series(SERIES_LIMIT);
        let (c0, c1) = k0k1_scaled_cf(SERIES_LIMIT);
        let e = (-SERIES_LIMIT).exp();
        assert!((s0 - c0 * e).abs() / s0 < 1e-12);
        assert!((s1 - c1 * e).abs() / s1 < 1e-12);
        let (a0, a1) = k0k1_scaled_asymptotic(ASYMPTOTIC_LIMIT);
        let (b0, b1) = k0k1_scaled_cf(ASYMPTOTIC_LIMIT);
        assert!((a0 - b0).abs() / a0 < 1e-13);
        assert!((a1 - b1).abs() / a1 < 1e-13);
    }

    #[test]
    fn single_precision_entry_points() {
        let k = bessel_k0(1.0f32).unwrap();
        assert!((k - 0.421_024_4).abs() < 1e-6);
    }
}
