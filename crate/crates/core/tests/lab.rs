use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use relatom::grid::Grid;
use relatom::hamiltonian::CouplingParams;
use relatom::lab::hard_part::{hard_part_constants, momentum_cutoff, HardPartSetup};
use relatom::lab::partition::*;
use relatom::lab::trial::*;
use relatom::lab::weyl::{build_weyl_state, eigen_defect};
use relatom::projector::{gaussian_field, Projector};
use relatom::radial::radial_ground_state;

#[test]
fn partition_is_exact_at_many_points() {
    for (n, r) in [(1, 1.0), (2, 3.0), (3, 10.0)] {
        let p = PartitionOfUnity::new(n, r).unwrap();
        let rep = partition_exactness_report(&p, 10_000, 5);
        assert!(rep.pass, "{}", rep.to_json_line());
        assert!(p.delta > 0.0);
    }
}

#[test]
fn localization_error_halves_with_the_scale() {
    let g = Grid::new(48, 48.0).unwrap();
    let params = CouplingParams::with_z(20.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    let fields = vec![gaussian_field(g, &mut rng)];
    let errors: Vec<f64> = [1.5, 3.0, 6.0]
        .iter()
        .map(|&r| {
            let part = PartitionOfUnity::new(1, r).unwrap();
            let rep = localization_check(&fields, &part, &params, 0.5, 20).unwrap();
            assert!(rep.pass, "{}", rep.to_json_line());
            rep.measured
        })
        .collect();
    for w in errors.windows(2) {
        let ratio = w[0] / w[1];
        assert!((1.6..=2.6).contains(&ratio), "{errors:?}");
    }
}

#[test]
fn hard_part_chain_holds_below_the_resolved_charge() {
    for z in [1.0, 20.0, 60.0] {
        let p = CouplingParams::with_z(z).unwrap();
        let rep = hard_part_constants(&p, 0.0, &HardPartSetup::default()).unwrap();
        assert!(rep.pass, "{}", rep.to_json_line());
        assert!(rep.details["l"] > rep.details["first_requirement_rhs"]);
    }
}

#[test]
fn momentum_cutoff_at_zero_charge() {
    let p = CouplingParams::with_z(0.0).unwrap();
    for e in [0.0, 0.5, 0.9] {
        let m: f64 = momentum_cutoff(&p, e).unwrap();
        assert!((m - ((8.0 * (e + 1.0)).powi(2) - 1.0).sqrt()).abs() < 1e-12);
    }
}

#[test]
fn weyl_shells_approach_the_positive_range() {
    let g = Grid::new(128, 136.0).unwrap();
    let proj = Projector::new(g);
    for lambda in [1.0, 1.2] {
        let defects: Vec<f64> = [8.0, 16.0, 32.0]
            .iter()
            .map(|&r| {
                let s = build_weyl_state(&g, lambda, r, 11).unwrap();
                assert!(eigen_defect(&s) < 1e-12);
                proj.apply(&s.psi).sub(&s.psi).norm()
            })
            .collect();
        assert!(defects.windows(2).all(|w| w[1] < w[0]), "lambda {lambda}: {defects:?}");
    }
}

#[test]
fn trial_family_is_negative_for_z10() {
    let p = CouplingParams::with_z(10.0).unwrap();
    let gs = radial_ground_state(&p, 24).unwrap();
    let fam = build_trial_family(&p, 2, 2e5, 3, &gs, Arc::new(ShellProfile::new(2))).unwrap();
    let a = analyze_trial(&fam).unwrap();
    let rep = trial_energy_report(&a);
    assert!(rep.pass, "{}", rep.to_json_line());
    assert!(a.mu <= -a.required_gap());
}
