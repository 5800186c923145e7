use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use relatom::grid::{Grid, ScalarField, SpinorField};
use relatom::hamiltonian::*;
use relatom::hartree::hartree_potential;
use relatom::lanczos::LanczosOptions;
use relatom::projector::{gaussian_field, Projector};
use relatom::radial::radial_ground_state;
use relatom::slater::{two_particle_energy_form, two_particle_energy_terms, SlaterState};

// 2/(π/2 + 2/π) evaluated with 30 significant digits
const ALPHA_Z_C: f64 = 0.906036700900580413;

#[test]
fn critical_values() {
    assert!((critical_coupling() - ALPHA_Z_C).abs() < 1e-15);
    let zc = critical_charge(DEFAULT_ALPHA).unwrap();
    assert!((zc - 124.159645344611937).abs() < 1e-10);
    assert!(critical_charge(0.0).is_err());
    assert!(CouplingParams::with_z(124.2).is_err());
    assert!(CouplingParams::with_z(124.1).is_ok());
}

fn blob(g: Grid<f64>, s: f64) -> SpinorField<f64> {
    let mut f = SpinorField::from_fn(g, |x| {
        let r2 = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / (s * s);
        [Complex64::new((-r2).exp(), 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.3 * (-r2).exp(), 0.0), Complex64::new(0.0, 0.0)]
    });
    let n = f.norm();
    f.scale(Complex64::new(1.0 / n, 0.0));
    f
}

#[test]
fn coulomb_form_is_linear_in_the_charge() {
    let f = blob(Grid::new(24, 12.0).unwrap(), 1.5);
    assert_eq!(coulomb_form(&f, 0.0), 0.0);
    assert!((coulomb_form(&f, 3.0) - 3.0 * coulomb_form(&f, 1.0)).abs() < 1e-12);
}

#[test]
fn coulomb_form_scales_under_dilation() {
    let g = Grid::new(96, 64.0).unwrap();
    let base = coulomb_form(&blob(g, 3.5), 1.0);
    for r in [2.0, 4.0] {
        let v = coulomb_form(&blob(g, 3.5 * r), 1.0);
        assert!((v * r / base - 1.0).abs() < 0.02, "R = {r}: {}", v * r / base);
    }
}

#[test]
fn kinetic_form_alone_starts_at_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let g = Grid::new(24, 12.0).unwrap();
    let p = CouplingParams::with_z(0.0).unwrap();
    for _ in 0..5 {
        let t = br_one_particle_terms(&gaussian_field(g, &mut rng), &p);
        assert!(t.value() >= t.norm_sqr);
        assert_eq!(t.value(), t.kinetic);
    }
}

#[test]
fn form_controls_the_kinetic_energy() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let g = Grid::new(24, 8.0).unwrap();
    for z in [20.0, 60.0, 100.0] {
        let p = CouplingParams::with_z(z).unwrap();
        let c = (p.z_c() - z) / p.z_c();
        for _ in 0..5 {
            let t = br_one_particle_terms(&gaussian_field(g, &mut rng), &p);
            assert!(t.value() >= c * t.kinetic - 0.01 * t.kinetic.abs(), "Z = {z}");
        }
    }
}

#[test]
fn hartree_potential_is_linear_and_positive() {
    let g = Grid::new(16, 16.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    use rand::Rng;
    let rho = |rng: &mut ChaCha8Rng| {
        let c: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-2.0..2.0));
        let s = rng.gen_range(0.8..2.0);
        ScalarField::from_fn(g, move |x| (-((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2) + (x[2] - c[2]).powi(2)) / (s * s)).exp())
    };
    for _ in 0..5 {
        let (a, b) = (rho(&mut rng), rho(&mut rng));
        let sum = ScalarField { grid: g, data: a.data.iter().zip(&b.data).map(|(x, y)| x + 2.0 * y).collect() };
        let (va, vb, vs) = (hartree_potential(&a), hartree_potential(&b), hartree_potential(&sum));
        let scale = vs.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..g.len() {
            assert!((vs.data[i] - va.data[i] - 2.0 * vb.data[i]).abs() < 1e-12 * scale);
            assert!(vs.data[i] >= 0.0);
        }
    }
}

#[test]
fn two_particle_quotients_are_bounded_below() {
    let g = Grid::new(16, 6.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for z in [20.0, 60.0] {
        let p = CouplingParams::with_z(z).unwrap();
        for _ in 0..3 {
            let st = SlaterState::product(gaussian_field(g, &mut rng), gaussian_field(g, &mut rng), true);
            let terms = two_particle_energy_terms(&st, &p, true).unwrap();
            let floor = 2.0 * (1.0 - p.alpha_z());
            assert!(terms.value() >= floor - 0.02 * floor, "Z = {z}: {}", terms.value());
            assert!(terms.without_interaction() < terms.value());
        }
    }
}

#[test]
fn product_of_ground_states_lies_above_twice_the_ground_energy() {
    let p = CouplingParams::with_z(20.0).unwrap();
    let opts = LanczosOptions { tol: 1e-8, ..LanczosOptions::default() };
    let gs = ground_state_with(&p, 24, 8.0 * p.orbital_radius(), &opts, 42).unwrap();
    let partner = kramers_partner(&gs.state);
    let st = SlaterState::product(gs.state.clone(), partner, true);
    let v = two_particle_energy_form(&st, &p).unwrap();
    assert!(v >= 2.0 * gs.result.e1, "{v} vs {}", 2.0 * gs.result.e1);
}

#[test]
fn ground_state_residual_is_within_tolerance() {
    let p = CouplingParams::with_z(30.0).unwrap();
    let gs = ground_state_one_particle(&p, 24, 8.0 * p.orbital_radius(), 1e-8).unwrap();
    assert!(gs.result.residual <= 1e-8);
    assert!((gs.state.norm() - 1.0).abs() < 1e-10);
    // the eigenvector is a fixed point of the projector
    let proj = Projector::new(gs.state.grid);
    assert!(proj.apply(&gs.state).sub(&gs.state).norm() < 1e-10);
}

/// The s-wave Ritz energy and the lattice Lanczos energy bracket the same E₁
/// by independent routes.
#[test]
fn radial_and_lattice_ground_states_agree() {
    let p = CouplingParams::with_z(50.0).unwrap();
    let radial = radial_ground_state(&p, 24).unwrap().energy;
    let opts = LanczosOptions { tol: 1e-8, ..LanczosOptions::default() };
    let lattice = ground_state_with(&p, 48, 8.0 * p.orbital_radius(), &opts, 42).unwrap().result.e1;
    assert!((radial - lattice).abs() < 0.02 * (1.0 - lattice), "radial {radial} lattice {lattice}");
    assert!(1.0 - p.alpha_z() <= radial && radial < 1.0);
}
