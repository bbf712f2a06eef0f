//! Grating efficiencies of the propagating reflected modes.
//!
//! With the incident potential amplitude `a0 = -i/kappa1`, the
//! compressional and shear efficiencies of a propagating mode are
//! `beta_j |amplitude|^2 / (beta |a0|^2)`. For a rigid surface they sum to one.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::dtn::incident_trace;
use crate::error::Result;
use crate::fields::{helmholtz_coefficients, FourierVectorField};
use crate::modes::{Incidence, Lattice, Medium, ModeData, ModeIndex};
use crate::CVec3;

/// Efficiencies per propagating mode.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EfficiencyTable {
    pub e1: BTreeMap<ModeIndex, f64>,
    pub e2: BTreeMap<ModeIndex, f64>,
    pub total: f64,
}

/// Efficiencies from the diffracted-field coefficients on the plane `field.height`.
pub fn grating_efficiencies(
    field: &FourierVectorField,
    lattice: &Lattice,
    medium: &Medium,
    incidence: &Incidence,
) -> Result<EfficiencyTable> {
    let h = field.height;
    let a0_sq = 1.0 / (medium.kappa1 * medium.kappa1);
    let norm = incidence.beta * a0_sq;
    let mut table = EfficiencyTable::default();
    for (n, v) in &field.coeffs {
        let mode = ModeData::new(lattice, medium, *n)?;
        if !mode.prop2 {
            continue;
        }
        let c = helmholtz_coefficients(&mode, medium, *v);
        if mode.prop1 {
            let a1 = c.phi * Complex64::from_polar(1.0, -mode.beta1.re * h);
            table.e1.insert(*n, mode.beta1.re * a1.norm_sqr() / norm);
        }
        let b = c.psi * Complex64::from_polar(1.0, -mode.beta2.re * h);
        table.e2.insert(*n, mode.beta2.re * b.norm_squared() / norm);
    }
    table.total = table.e1.values().sum::<f64>() + table.e2.values().sum::<f64>();
    Ok(table)
}

/// Diffracted coefficients from total-field coefficients: the incident
/// trace is removed from mode zero.
pub fn diffracted_from_total(total: &FourierVectorField, incidence: &Incidence, medium: &Medium) -> FourierVectorField {
    let mut out = total.clone();
    *out.coeffs.entry(ModeIndex::ZERO).or_insert_with(CVec3::zeros) -= incident_trace(incidence, medium, total.height);
    out
}

/// `|total - 1|`.
pub fn energy_balance(table: &EfficiencyTable) -> f64 {
    (table.total - 1.0).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dtn::traction_of_potentials;
    use crate::fields::tests::ex1;
    use crate::fields::{exact_flat_solution, PotentialCoefficients};
    use crate::modes::example_medium;

    fn reflected_trace(inc: &Incidence, m: &Medium, h: f64) -> FourierVectorField {
        let s = exact_flat_solution(inc, m).unwrap();
        FourierVectorField::single(h, ModeIndex::ZERO, s.reflected([0.0, 0.0, h]))
    }

    #[test]
    fn normal_incidence() {
        let m = example_medium();
        let inc = Incidence::new(&m, 0.0, 0.0).unwrap();
        let t = grating_efficiencies(&reflected_trace(&inc, &m, 0.3), &Lattice::unit(&inc), &m, &inc).unwrap();
        assert!((t.e1[&ModeIndex::ZERO] - 1.0).abs() < 1e-12);
        assert!(t.e2[&ModeIndex::ZERO].abs() < 1e-24);
        assert!(energy_balance(&t) < 1e-12);
    }

    #[test]
    fn oblique_example_conserves_energy() {
        let (m, inc, lat) = ex1();
        let t = grating_efficiencies(&reflected_trace(&inc, &m, 0.3), &lat, &m, &inc).unwrap();
        assert!(energy_balance(&t) < 1e-10);
        assert!((t.e1[&ModeIndex::ZERO] - 0.45863).abs() < 1e-5);
        assert!((t.e2[&ModeIndex::ZERO] - 0.54137).abs() < 1e-5);
    }

    #[test]
    fn diffracted_part_of_total_trace() {
        let (m, inc, lat) = ex1();
        let s = exact_flat_solution(&inc, &m).unwrap();
        let total = FourierVectorField::single(0.3, ModeIndex::ZERO, s.eval([0.0, 0.0, 0.3]));
        let d = diffracted_from_total(&total, &inc, &m);
        let expect = reflected_trace(&inc, &m, 0.3);
        assert!((d.get(ModeIndex::ZERO).unwrap() - expect.get(ModeIndex::ZERO).unwrap()).norm() < 1e-14);
        let t = grating_efficiencies(&d, &lat, &m, &inc).unwrap();
        assert!(energy_balance(&t) < 1e-10);
    }

    #[test]
    fn evanescent_only_and_zero_table() {
        let (m, inc, lat) = ex1();
        let f = FourierVectorField::single(0.3, ModeIndex::new(2, 1), CVec3::new(1.0.into(), 0.0.into(), 0.0.into()));
        let t = grating_efficiencies(&f, &lat, &m, &inc).unwrap();
        assert_eq!(t.total, 0.0);
        assert_eq!(energy_balance(&EfficiencyTable::default()), 1.0);
    }

    #[test]
    fn phase_invariance_and_scaling() {
        let (m, inc, lat) = ex1();
        let f = reflected_trace(&inc, &m, 0.3);
        let base = grating_efficiencies(&f, &lat, &m, &inc).unwrap();
        let z = Complex64::new(0.0, 0.0);
        let rotated = f.combine(Complex64::from_polar(1.0, 0.7), &f, z);
        let r = grating_efficiencies(&rotated, &lat, &m, &inc).unwrap();
        assert!((r.total - base.total).abs() < 1e-14);
        let scaled = f.combine(Complex64::new(1.7, 0.0), &f, z);
        let s = grating_efficiencies(&scaled, &lat, &m, &inc).unwrap();
        assert!((s.e1[&ModeIndex::ZERO] - 1.7f64.powi(2) * base.e1[&ModeIndex::ZERO]).abs() < 1e-13);
    }

    /// Energy flux `Im(D w . conj w)` of an upgoing single-mode field.
    fn flux(mode: &ModeData, m: &Medium, c: &PotentialCoefficients) -> f64 {
        let w = c.displacement(mode, 0.0);
        let t = traction_of_potentials(mode, m, c);
        t.dotc(&w).im
    }

    #[test]
    fn efficiencies_match_flux_identity_over_angle_sweep() {
        let m = example_medium();
        for k in 0..10 {
            let t1 = 0.05 + 0.14 * k as f64;
            let t2 = 0.6 * k as f64;
            let inc = Incidence::new(&m, t1, t2).unwrap();
            let lat = Lattice::unit(&inc);
            let s = exact_flat_solution(&inc, &m).unwrap();
            let mode = ModeData::from_wave_vector(ModeIndex::ZERO, inc.alpha, &m).unwrap();
            // incident flux through the plane x3 = 0: downward compressional wave
            let q = CVec3::new(inc.q[0].into(), inc.q[1].into(), inc.q[2].into());
            let i = Complex64::new(0.0, 1.0);
            let mut td = q.scale(-m.mu * inc.beta) * i;
            td[2] += i * m.kappa1 * (m.lambda + m.mu);
            let incoming = -td.dotc(&q).im;
            let p = PotentialCoefficients { phi: s.a, psi: CVec3::zeros() };
            let sh = PotentialCoefficients { phi: Complex64::new(0.0, 0.0), psi: s.b };
            let e1 = flux(&mode, &m, &p) / incoming;
            let e2 = flux(&mode, &m, &sh) / incoming;
            let t = grating_efficiencies(&reflected_trace(&inc, &m, 0.0), &lat, &m, &inc).unwrap();
            assert!((t.e1[&ModeIndex::ZERO] - e1).abs() < 1e-12, "{k}");
            assert!((t.e2[&ModeIndex::ZERO] - e2).abs() < 1e-12, "{k}");
            assert!(energy_balance(&t) < 1e-10);
        }
    }
}
