//! Numerical checks of the proof ingredients: partition of unity and
//! localization, commutator scaling, the Fourier-mass lemma, the hard-part
//! constants, the Weyl sequence and the trial family.

pub mod commutator;
pub mod fourier_mass;
pub mod hard_part;
pub mod partition;
pub mod report;
pub mod selfcheck;
pub mod trial;
pub mod weyl;

use num_complex::Complex64;

use crate::grid::SpinorField;
use crate::projector::Projector;

pub use report::{LemmaReport, Relation};

/// Zeroes every mode with some |p_i| above `fraction` of the Nyquist momentum.
///
/// The lattice symbol of Λ₊ jumps across the Brillouin-zone boundary, which
/// makes commutators with smooth multipliers O(1) there; the checks work on
/// the resolved band only.
pub fn band_limit(proj: &Projector<f64>, f: &SpinorField<f64>, fraction: f64) -> SpinorField<f64> {
    if fraction >= 1.0 {
        return f.clone();
    }
    let cut = proj.grid().nyquist() * fraction;
    let mut ff = proj.to_fourier(f);
    for (idx, p) in proj.momenta().iter().enumerate() {
        if p.iter().any(|c| c.abs() > cut) {
            ff.set(idx, [Complex64::new(0.0, 0.0); 4]);
        }
    }
    proj.to_spinor(&ff)
}
