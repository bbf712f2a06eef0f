//! Exact transparent boundary operator on the plane `x3 = h`.
//!
//! The operator is diagonal in the quasi-periodic Fourier basis; mode `n`
//! maps the displacement coefficient to the traction coefficient
//! `mu d3 v + (lambda + mu) (div v) e3` through a 3x3 matrix.

use num_complex::Complex64;

use crate::error::Result;
use crate::fields::{incident_field, FourierVectorField, PotentialCoefficients};
use crate::modes::{Incidence, Lattice, Medium, ModeData, ModeIndex};
use crate::{CMat3, CVec3, C64};

const I: C64 = Complex64::new(0.0, 1.0);

/// Symbol of the transparent boundary operator for one mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DtnMatrix {
    pub mode: ModeIndex,
    pub m: CMat3,
}

/// Builds the DtN matrix of one mode.
pub fn dtn_matrix(mode: &ModeData, medium: &Medium) -> DtnMatrix {
    let [a1, a2] = mode.alpha;
    let b2 = mode.beta2;
    let chi = mode.chi;
    let d = mode.beta_gap;
    let k2 = medium.kappa2 * medium.kappa2;
    let n = CMat3::new(
        d * (a1 * a1) + b2 * chi,
        d * (a1 * a2),
        d * b2 * a1,
        d * (a1 * a2),
        d * (a2 * a2) + b2 * chi,
        d * b2 * a2,
        -d * b2 * a1,
        -d * b2 * a2,
        b2 * k2,
    );
    DtnMatrix {
        mode: mode.index,
        m: n * (I * medium.mu / chi),
    }
}

/// Traction coefficient `(D v)^(n)` at the boundary, computed from potentials.
pub fn traction_of_potentials(mode: &ModeData, medium: &Medium, c: &PotentialCoefficients) -> CVec3 {
    let [a1, a2] = mode.alpha;
    let (b1, b2) = (mode.beta1, mode.beta2);
    let b22 = b2 * b2;
    let [p1, p2, p3] = [c.psi[0], c.psi[1], c.psi[2]];
    let phi = c.phi;
    let t = CVec3::new(
        b1 * a1 * phi - b22 * p2 + b2 * a2 * p3,
        b1 * a2 * phi + b22 * p1 - b2 * a1 * p3,
        b22 * phi - b2 * a2 * p1 + b2 * a1 * p2,
    );
    t.scale(-medium.mu)
}

/// Applies the truncated DtN operator mode by mode.
pub fn apply_dtn(field: &FourierVectorField, lattice: &Lattice, medium: &Medium) -> Result<FourierVectorField> {
    let mut out = FourierVectorField::new(field.height);
    for (n, v) in &field.coeffs {
        let mode = ModeData::new(lattice, medium, *n)?;
        out.coeffs.insert(*n, dtn_matrix(&mode, medium).m * v);
    }
    Ok(out)
}

/// Boundary source carried by mode zero: `amplitude * phase * e^{i alpha.r}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundarySource {
    pub amplitude: CVec3,
    /// `e^{-i beta h}`.
    pub phase: C64,
}

impl BoundarySource {
    /// The mode-zero Fourier coefficient.
    pub fn coefficient(&self) -> CVec3 {
        self.amplitude * self.phase
    }

    /// The source as a Fourier field supported on mode zero.
    pub fn as_field(&self, height: f64) -> FourierVectorField {
        FourierVectorField::single(height, ModeIndex::ZERO, self.coefficient())
    }
}

/// Mode-zero coefficient of the incident traction at height `h`.
pub fn incident_traction(incidence: &Incidence, medium: &Medium, h: f64) -> CVec3 {
    let u = incident_field(incidence, medium, [0.0, 0.0, h]);
    let div = I * medium.kappa1 * Complex64::from_polar(1.0, -incidence.beta * h);
    let mut t = u * (-I * incidence.beta * medium.mu);
    t[2] += div * (medium.lambda + medium.mu);
    t
}

/// Mode-zero coefficient of the incident trace at height `h`.
pub fn incident_trace(incidence: &Incidence, medium: &Medium, h: f64) -> CVec3 {
    incident_field(incidence, medium, [0.0, 0.0, h])
}

/// Closed-form boundary source `g` of the total-field transparent condition.
pub fn boundary_source_g(incidence: &Incidence, medium: &Medium, h: f64) -> Result<BoundarySource> {
    let mode = ModeData::from_wave_vector(ModeIndex::ZERO, incidence.alpha, medium)?;
    let w2 = medium.omega * medium.omega;
    let f = -(I * 2.0 * w2 * incidence.beta) / (medium.kappa1 * mode.chi);
    let amp = CVec3::new(f * incidence.alpha[0], f * incidence.alpha[1], -f * mode.beta2);
    Ok(BoundarySource {
        amplitude: amp,
        phase: Complex64::from_polar(1.0, -incidence.beta * h),
    })
}

/// `D u_inc - M u_inc` evaluated directly from the plane wave.
pub fn boundary_source_direct(incidence: &Incidence, medium: &Medium, h: f64) -> Result<BoundarySource> {
    let mode = ModeData::from_wave_vector(ModeIndex::ZERO, incidence.alpha, medium)?;
    let m = dtn_matrix(&mode, medium).m;
    let phase = Complex64::from_polar(1.0, -incidence.beta * h);
    let g = incident_traction(incidence, medium, h) - m * incident_trace(incidence, medium, h);
    Ok(BoundarySource {
        amplitude: g / phase,
        phase,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::helmholtz_coefficients;
    use crate::fields::tests::{ex1, rand_c};
    use crate::modes::example_medium;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rand_potentials(mode: &ModeData, rng: &mut ChaCha8Rng) -> PotentialCoefficients {
        // psi3 chosen to satisfy the divergence constraint
        let p1 = rand_c(rng);
        let p2 = rand_c(rng);
        let p3 = -(p1 * mode.alpha[0] + p2 * mode.alpha[1]) / mode.beta2;
        PotentialCoefficients {
            phi: rand_c(rng),
            psi: CVec3::new(p1, p2, p3),
        }
    }

    #[test]
    fn normal_incidence_diagonal() {
        let m = example_medium();
        let inc = Incidence::new(&m, 0.0, 0.0).unwrap();
        let mode = ModeData::new(&Lattice::unit(&inc), &m, ModeIndex::ZERO).unwrap();
        let d = dtn_matrix(&mode, &m).m;
        let expect = [8.885766, 8.885766, 14.049631];
        for k in 0..3 {
            assert!(d[(k, k)].re.abs() < 1e-13);
            assert!((d[(k, k)].im - expect[k]).abs() < 1e-5, "{}", d[(k, k)]);
        }
        assert!((d - CMat3::from_diagonal(&d.diagonal())).norm() < 1e-13);
    }

    #[test]
    fn structural_symmetry() {
        let (m, _, lat) = ex1();
        for n in ModeIndex::window(5) {
            let d = dtn_matrix(&ModeData::new(&lat, &m, n).unwrap(), &m).m;
            let s = d.norm();
            assert!((d[(0, 1)] - d[(1, 0)]).norm() < 1e-14 * s);
            assert!((d[(0, 2)] + d[(2, 0)]).norm() < 1e-14 * s);
            assert!((d[(1, 2)] + d[(2, 1)]).norm() < 1e-14 * s);
        }
    }

    #[test]
    fn operator_consistency_with_potential_traction() {
        let (m, _, lat) = ex1();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for n in ModeIndex::window(5) {
            let mode = ModeData::new(&lat, &m, n).unwrap();
            for _ in 0..5 {
                let c = rand_potentials(&mode, &mut rng);
                let v = c.displacement(&mode, 0.0);
                let t = traction_of_potentials(&mode, &m, &c);
                let mv = dtn_matrix(&mode, &m).m * v;
                assert!((t - mv).norm() < 1e-10 * v.norm(), "mode {n}");
                // and the coefficients round-trip
                let back = helmholtz_coefficients(&mode, &m, v);
                assert!((back.phi - c.phi).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn apply_single_mode_and_linearity() {
        let m = example_medium();
        let inc = Incidence::new(&m, 0.0, 0.0).unwrap();
        let lat = Lattice::unit(&inc);
        let e3 = CVec3::new(0.0.into(), 0.0.into(), 1.0.into());
        let out = apply_dtn(&FourierVectorField::single(0.3, ModeIndex::ZERO, e3), &lat, &m).unwrap();
        let v = out.get(ModeIndex::ZERO).unwrap();
        assert!((v[2].im - 14.049631).abs() < 1e-5 && v[0].norm() < 1e-14);
        assert!((v[2].im - m.mu * m.kappa2 * m.kappa2 / m.kappa1).abs() < 1e-12);

        let zero = apply_dtn(&FourierVectorField::single(0.3, ModeIndex::ZERO, CVec3::zeros()), &lat, &m).unwrap();
        assert_eq!(zero.get(ModeIndex::ZERO).unwrap(), CVec3::zeros());

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut rv = || CVec3::new(rand_c(&mut rng), rand_c(&mut rng), rand_c(&mut rng));
        let a = FourierVectorField::single(0.3, ModeIndex::new(1, -1), rv());
        let b = FourierVectorField::single(0.3, ModeIndex::new(0, 2), rv());
        let (s, t) = (C64::new(0.3, -1.2), C64::new(2.0, 0.5));
        let lhs = apply_dtn(&a.combine(s, &b, t), &lat, &m).unwrap();
        let rhs = apply_dtn(&a, &lat, &m).unwrap().combine(s, &apply_dtn(&b, &lat, &m).unwrap(), t);
        for (n, v) in &lhs.coeffs {
            assert!((v - rhs.coeffs[n]).norm() < 1e-12 * v.norm());
        }
    }

    #[test]
    fn source_closed_form_matches_direct() {
        let (m, inc, _) = ex1();
        let g = boundary_source_g(&inc, &m, 0.3).unwrap();
        let d = boundary_source_direct(&inc, &m, 0.3).unwrap();
        assert!((g.coefficient() - d.coefficient()).norm() < 1e-12 * g.coefficient().norm());

        let normal = Incidence::new(&m, 0.0, 0.0).unwrap();
        let g = boundary_source_g(&normal, &m, 0.3).unwrap();
        let expect = I * 2.0 * m.omega * m.omega / m.kappa1;
        assert!((g.amplitude[2] - expect).norm() < 1e-12 * expect.norm());
        assert!((g.amplitude[2].im - 28.099).abs() < 1e-3);
        assert!((g.phase - Complex64::from_polar(1.0, -0.84298)).norm() < 1e-5);
        assert_eq!(g.as_field(0.3).coeffs.len(), 1);
    }
}
