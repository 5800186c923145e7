//! Acceptance criteria 1–10, one line each. Runs without the libtest harness
//! so the lines are always printed; exits non-zero if any criterion fails.

use std::sync::Arc;
use std::time::Instant;

use relatom::grid::Grid;
use relatom::hamiltonian::{ground_state_with, CouplingParams, DEFAULT_ALPHA};
use relatom::lab::commutator::{commutator_h1_report, commutator_scaling_reports, sweep_profiles, CommutatorProbe, COMMUTATOR_H1_CONSTANT};
use relatom::lab::fourier_mass::fourier_mass_check;
use relatom::lab::report::LemmaReport;
use relatom::lab::selfcheck::*;
use relatom::lab::trial::*;
use relatom::lab::weyl::*;
use relatom::lanczos::LanczosOptions;
use relatom::radial::radial_ground_state;
use relatom::cutoff::CutoffProfile;

struct Outcome {
    pass: bool,
    summary: String,
}

fn from_reports(reports: &[LemmaReport], summary: String) -> Outcome {
    let failed: Vec<String> = reports
        .iter()
        .filter(|r| !r.pass)
        .map(|r| format!("{} (measured {:.4e}, bound {:.4e}{})", r.lemma, r.measured, r.bound, if r.notes.is_empty() { String::new() } else { format!("; {}", r.notes.join("; ")) }))
        .collect();
    let summary = if failed.is_empty() { summary } else { format!("{summary}; failed: {}", failed.join(", ")) };
    Outcome { pass: failed.is_empty(), summary }
}

fn criterion_1() -> Outcome {
    let r = projector_algebra_report(1000, 42);
    let s = format!("max residual {:.2e} over 1000 momenta", r.measured);
    from_reports(&[r], s)
}

fn criterion_2() -> Outcome {
    let a = bessel_accuracy_report(400);
    let d = bessel_derivative_report(400);
    let s = format!("K0/K1 vs integral {:.2e}, derivative identities {:.2e}", a.measured, d.measured);
    from_reports(&[a, d], s)
}

fn criterion_3() -> Outcome {
    let r = dual_representation_report(48, 40.0, 10, 42, 5e-2).expect("dual representation");
    let s = format!("extrapolated relative L2 error {:.4} (raw at eps = h: {:.4})", r.measured, r.details["worst_raw_at_h"]);
    from_reports(&[r], s)
}

fn criterion_4() -> Outcome {
    let r = decay_report(10, 50, 42, 1e-9).expect("decay");
    let s = format!("{} violations over 500 samples, worst excess {:.2e}", r.measured, r.details["worst_excess"]);
    from_reports(&[r], s)
}

fn criterion_5() -> Outcome {
    let mut reps = Vec::new();
    let mut parts = Vec::new();
    for z in [20.0, 60.0, 100.0] {
        let r = semibounded_report(&CouplingParams::with_z(z).unwrap(), 32, 100, 42, 0.01).expect("semibounded");
        parts.push(format!("Z={z}: {:.4} >= {:.4}", r.measured, r.bound));
        reps.push(r);
    }
    let k = kato_report(48, 24.0, 10, 42, 0.05).expect("kato");
    parts.push(format!("Kato ratio {:.4}", k.measured));
    reps.push(k);
    from_reports(&reps, parts.join(", "))
}

fn criterion_6() -> Outcome {
    let opts = LanczosOptions { tol: 1e-8, ..LanczosOptions::default() };
    let solve = |z: f64, n: usize, radii: f64| {
        let p = CouplingParams::with_z(z).unwrap();
        ground_state_with(&p, n, radii * p.orbital_radius(), &opts, 42).expect("ground state").result.e1
    };
    let mut reps = Vec::new();
    let e_h = solve(1.0, 48, 12.0);
    let nonrel = DEFAULT_ALPHA * DEFAULT_ALPHA / 2.0;
    let bind_ratio = (1.0 - e_h) / nonrel;
    reps.push(LemmaReport::at_most("ground_state.hydrogenic", (bind_ratio - 1.0).abs(), 0.1, 0.0));
    let mut energies = Vec::new();
    for z in [20.0, 50.0, 90.0] {
        let e = solve(z, 48, 8.0);
        let floor = 1.0 - DEFAULT_ALPHA * z;
        reps.push(LemmaReport::at_least("ground_state.bracket_low", e, floor, 0.0).input("z", z));
        reps.push(LemmaReport::at_most("ground_state.bracket_high", e, 1.0, 0.0).input("z", z).force_fail_if(e >= 1.0));
        energies.push(e);
    }
    let monotone = energies.windows(2).all(|w| w[1] < w[0]);
    reps.push(LemmaReport::at_least("ground_state.monotone", monotone as u8 as f64, 1.0, 0.0));
    let e64 = solve(50.0, 64, 8.0);
    let drift = (e64 - energies[1]).abs();
    reps.push(LemmaReport::at_most("ground_state.refinement", drift, 1e-3, 0.0));
    let s = format!(
        "Z=1 binding/nonrel {:.4}; E1(20,50,90) = {:.6}, {:.6}, {:.6}; drift 48->64 {:.2e}",
        bind_ratio, energies[0], energies[1], energies[2], drift
    );
    from_reports(&reps, s)
}

trait FailIf {
    fn force_fail_if(self, cond: bool) -> Self;
}

impl FailIf for LemmaReport {
    fn force_fail_if(self, cond: bool) -> Self {
        if cond {
            self.force_fail("strict inequality violated")
        } else {
            self
        }
    }
}

fn criterion_7() -> Outcome {
    let g = Grid::new(128, 136.0).unwrap();
    let ctx = WeylContext::from_ground_state(g, CouplingParams::with_z(50.0).unwrap(), 56, &LanczosOptions::default(), 42)
        .expect("weyl context");
    let mut reps = Vec::new();
    let mut parts = Vec::new();
    let mut min_norm = f64::INFINITY;
    for lambda in [1.0, 1.2] {
        let mut residuals = Vec::new();
        for r in [8.0, 16.0, 32.0] {
            let s = build_weyl_state(&g, lambda, r, 11).expect("weyl state");
            residuals.push(weyl_residual_report(&ctx, &s));
            let a = antisym_overlap_check(&ctx, &s, 0.9);
            min_norm = min_norm.min(a.measured);
            reps.push(a);
            if r == 32.0 {
                let e = weyl_energy_report(&ctx, &s, 0.05).expect("weyl energy");
                parts.push(format!("lambda={lambda}: relative energy gap {:.2e}", e.measured));
                reps.push(e);
            }
        }
        let t = weyl_trend_report(&residuals);
        parts.push(format!("lambda={lambda}: {} non-decreasing terms", t.measured));
        reps.push(t);
        reps.extend(residuals);
    }
    parts.push(format!("min antisymmetrized norm {min_norm:.4}"));
    from_reports(&reps, parts.join(", "))
}

fn criterion_8() -> Outcome {
    let p = CouplingParams::with_z(2.0).unwrap();
    let gs = radial_ground_state(&p, 24).expect("radial ground state");
    let prof = Arc::new(ShellProfile::new(2));
    let large = analyze_sweep(&p, 2, &[2e3, 2e4, 2e5], 3, &gs, prof.clone()).expect("large sweep");
    let compton = analyze_sweep(&p, 2, &[1.0, 1.5, 2.0, 3.0, 4.0], 3, &gs, prof.clone()).expect("compton sweep");
    let orbital = analyze_sweep(&p, 2, &[50.0, 100.0, 200.0, 400.0], 3, &gs, prof).expect("orbital sweep");
    let best = large.last().unwrap();
    let energy = trial_energy_report(best);
    let lead = leading_term_report(&large, 2, 0.3);
    let direct = direct_envelope_report(&compton);
    let nuclear = nuclear_envelope_report(&compton);
    let exchange = exchange_envelope_report(&orbital);
    let s = format!(
        "Rayleigh - (E1+1) = {:.3e} <= -{:.3e}; fitted coefficient {:.4e} vs -alpha/12 = {:.4e} (diagonal total {:.4e}); decay rates direct {:.2}, nuclear {:.2}, exchange {:.3}",
        energy.measured,
        best.required_gap(),
        lead.details["fitted"],
        lead.details["target"],
        lead.details["total_fitted"],
        direct.measured,
        nuclear.measured,
        exchange.measured
    );
    let mut reps = vec![energy, lead, direct, nuclear, exchange];
    // every term-by-term estimate must hold on all sweeps
    for a in large.iter().chain(&compton).chain(&orbital) {
        if !a.violations.is_empty() {
            reps.push(LemmaReport::at_most("trial.term_bounds", a.violations.len() as f64, 0.0, 0.0).note(a.violations.join("; ")));
        }
    }
    from_reports(&reps, s)
}

fn criterion_9() -> Outcome {
    let one = fourier_mass_check(1, 1.0, 2.0, 200, 42).expect("dim 1");
    let three = fourier_mass_check(3, 0.25, 1.0, 20, 42).expect("dim 3");
    let s = format!(
        "dim 1: min ratio {:.4} (L = {}), dim 3: min ratio {:.4} (L = {}); violations {} + {}",
        one.measured, one.details["cutoff_l"], three.measured, three.details["cutoff_l"], one.details["violations"], three.details["violations"]
    );
    from_reports(&[one, three], s)
}

fn criterion_10() -> Outcome {
    let probe = CommutatorProbe::new(Grid::new(64, 96.0).unwrap(), 0.5);
    let mut reps = commutator_scaling_reports(&probe, &CutoffProfile::ball(1.0, 2.0, 1.0), &[4.0, 8.0, 16.0], 30, 7, 1.5)
        .expect("commutator scaling");
    let ratios: Vec<String> = reps.iter().map(|r| format!("{:.3}", r.details["ratio"])).collect();
    let h1 = CommutatorProbe::new(Grid::new(48, 72.0).unwrap(), 0.5);
    let sweep: Vec<LemmaReport> = sweep_profiles().iter().map(|chi| commutator_h1_report(&h1, chi, 12, 5, COMMUTATOR_H1_CONSTANT)).collect();
    let worst = sweep.iter().map(|r| r.details["ratio"]).fold(0.0, f64::max);
    reps.extend(sweep);
    let s = format!("halving ratios {} ; H1 sweep worst ratio {:.3} vs C = {}", ratios.join(", "), worst, COMMUTATOR_H1_CONSTANT);
    from_reports(&reps, s)
}

fn main() {
    let criteria: [(u32, fn() -> Outcome); 10] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
        (10, criterion_10),
    ];
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut all = true;
    for (k, run) in criteria {
        if !only.is_empty() && !only.contains(&k) {
            continue;
        }
        let t = Instant::now();
        let out = run();
        all &= out.pass;
        println!("criterion {k:>2}: {} ({:.1} s) {}", if out.pass { "PASS" } else { "FAIL" }, t.elapsed().as_secs_f64(), out.summary);
    }
    if !all {
        std::process::exit(1);
    }
}
