use proptest::prelude::*;
use relatom::besselk::{bessel_eval, bessel_k0, bessel_k1, g_decay, g_decay_f64, Regime};

/// K_ν(z) = ∫₀^∞ e^{−z cosh t} cosh(νt) dt by the trapezoid rule, which
/// converges geometrically here: the integrand is even, analytic and decays
/// double-exponentially.
fn oracle(nu: f64, z: f64) -> f64 {
    let h = 0.01;
    let mut acc = 0.5;
    let mut k = 1;
    loop {
        let t = k as f64 * h;
        let v = (-z * (t.cosh() - 1.0)).exp() * (nu * t).cosh();
        acc += v;
        if v < 1e-18 * acc {
            break;
        }
        k += 1;
    }
    acc * h * (-z).exp()
}

#[test]
fn oracle_reproduces_frozen_values() {
    for (nu, z, v) in [
        (0.0, 1.0, 0.42102443824070834),
        (1.0, 1.0, 0.60190723019723457),
        (0.0, 0.1, 2.4270690247020166),
        (1.0, 0.1, 9.8538447808705),
        (0.0, 10.0, 1.778006231616918e-5),
        (1.0, 10.0, 1.864877345382558e-5),
    ] {
        assert!(((oracle(nu, z) - v) / v).abs() < 1e-13, "nu {nu} z {z}: {}", oracle(nu, z));
    }
}

#[test]
fn values_match_the_oracle_across_regimes() {
    let mut worst = 0.0f64;
    for i in 0..=300 {
        let z = 1e-4 * (3e5f64).powf(i as f64 / 300.0);
        worst = worst.max(((bessel_k0(z).unwrap() - oracle(0.0, z)) / oracle(0.0, z)).abs());
        worst = worst.max(((bessel_k1(z).unwrap() - oracle(1.0, z)) / oracle(1.0, z)).abs());
    }
    assert!(worst < 1e-10, "{worst:e}");
}

#[test]
fn frozen_reference_values() {
    assert!((bessel_k0(1.0f64).unwrap() - 0.42102443824070834).abs() < 1e-15);
    assert!((bessel_k1(1.0f64).unwrap() - 0.60190723019723457).abs() < 1e-15);
}

#[test]
fn small_argument_asymptotics() {
    let z = 1e-12f64;
    let r = bessel_k0(z).unwrap() / -z.ln();
    assert!((r - 1.0).abs() < 0.03, "{r}");
    let z = 1e-6f64;
    let s = z * bessel_k1(z).unwrap();
    assert!((s - 1.0).abs() < 1e-3);
}

#[test]
fn large_argument_asymptotics() {
    let z = 20.0f64;
    let r = bessel_k0(z).unwrap() / ((std::f64::consts::PI / 40.0).sqrt() * (-z).exp());
    assert!((0.98..=1.0).contains(&r), "{r}");
}

#[test]
fn derivative_identities_at_two() {
    let h = 1e-5f64;
    let d0 = (bessel_k0(2.0 + h).unwrap() - bessel_k0(2.0 - h).unwrap()) / (2.0 * h);
    assert!((d0 + bessel_k1(2.0).unwrap()).abs() < 1e-6);
    let d1 = (bessel_k1(2.0 + h).unwrap() - bessel_k1(2.0 - h).unwrap()) / (2.0 * h);
    assert!((d1 + bessel_k0(2.0).unwrap() + bessel_k1(2.0).unwrap() / 2.0).abs() < 1e-6);
}

#[test]
fn regime_labels() {
    assert_eq!(bessel_eval(0.5f64).unwrap().regime, Regime::Series);
    assert_eq!(bessel_eval(5.0f64).unwrap().regime, Regime::ContinuedFraction);
    assert_eq!(bessel_eval(40.0f64).unwrap().regime, Regime::Asymptotic);
}

#[test]
fn envelope_at_one() {
    let expect = (0.60191 + 3.0 * 0.42102 + 6.0 * 0.60191) / (4.0 * std::f64::consts::PI.powi(2));
    assert!((g_decay(1.0f64).unwrap().value - expect).abs() < 1e-5);
}

#[test]
fn envelope_halves_faster_than_exponential() {
    for i in 0..=30 {
        let d = 5.0 + i as f64;
        assert!(g_decay_f64(2.0 * d) / g_decay_f64(d) < (-d / 2.0).exp());
    }
}

#[test]
fn envelope_is_monotone() {
    let vals: Vec<f64> = (1..=200).map(|i| g_decay_f64(0.1 * i as f64)).collect();
    assert!(vals.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn nonpositive_arguments_are_domain_errors() {
    assert!(bessel_k0(0.0f64).is_err());
    assert!(bessel_k1(-1.0f64).is_err());
    assert!(g_decay(0.0f64).is_err());
}

proptest! {
    #[test]
    fn positive_ordered_and_decreasing(lz in -4.0f64..2.0, step in 1e-3f64..0.5) {
        let z = 10f64.powf(lz);
        let a = bessel_eval(z).unwrap();
        let b = bessel_eval(z * (1.0 + step)).unwrap();
        prop_assert!(a.k0 > 0.0 && a.k1 > 0.0);
        prop_assert!(a.k1 >= a.k0);
        prop_assert!(b.k0 < a.k0 && b.k1 < a.k1);
    }

    #[test]
    fn wronskian_identity(lz in -3.0f64..1.4) {
        let z = 10f64.powf(lz);
        let h = 1e-4 * z.min(1.0);
        let d1 = (bessel_k1(z + h).unwrap() - bessel_k1(z - h).unwrap()) / (2.0 * h);
        let r = d1 + bessel_k0(z).unwrap() + bessel_k1(z).unwrap() / z;
        // the three terms are of size K₁/z and cancel
        prop_assert!((r * z / bessel_k1(z).unwrap()).abs() < 1e-6);
    }
}
