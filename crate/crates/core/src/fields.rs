//! Incident field, Helmholtz coefficient recovery, Rayleigh expansions and
//! the closed-form solution for a flat rigid surface.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::modes::{Incidence, Lattice, Medium, ModeData, ModeIndex};
use crate::{CVec3, C64};

const I: C64 = Complex64::new(0.0, 1.0);

/// Phase `e^{i (a . r)}` for a tangential wave vector.
pub(crate) fn tangential_phase(alpha: [f64; 2], x: [f64; 3]) -> C64 {
    Complex64::from_polar(1.0, alpha[0] * x[0] + alpha[1] * x[1])
}

/// Incident compressional plane wave `q e^{i kappa1 x.q}`.
pub fn incident_field(incidence: &Incidence, medium: &Medium, x: [f64; 3]) -> CVec3 {
    let q = incidence.q;
    let phase = Complex64::from_polar(1.0, medium.kappa1 * (x[0] * q[0] + x[1] * q[1] + x[2] * q[2]));
    CVec3::new(q[0] * phase, q[1] * phase, q[2] * phase)
}

/// Partial derivatives of the incident wave: entry `k` is `d_k u_inc`.
pub fn incident_gradient(incidence: &Incidence, medium: &Medium, x: [f64; 3]) -> [CVec3; 3] {
    let u = incident_field(incidence, medium, x);
    let q = incidence.q;
    let k = medium.kappa1;
    [u * (I * k * q[0]), u * (I * k * q[1]), u * (I * k * q[2])]
}

/// Compressional and shear potential coefficients of one mode at the boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialCoefficients {
    pub phi: C64,
    pub psi: CVec3,
}

impl PotentialCoefficients {
    pub fn zero() -> Self {
        Self {
            phi: C64::new(0.0, 0.0),
            psi: CVec3::zeros(),
        }
    }

    /// `alpha1 psi1 + alpha2 psi2 + beta2 psi3`, zero for admissible shear data.
    pub fn divergence(&self, mode: &ModeData) -> C64 {
        self.psi[0] * mode.alpha[0] + self.psi[1] * mode.alpha[1] + self.psi[2] * mode.beta2
    }

    /// Mode coefficient of the displacement at height `h + dz`, `dz >= 0`.
    pub fn displacement(&self, mode: &ModeData, dz: f64) -> CVec3 {
        let [a1, a2] = mode.alpha;
        let (b1, b2) = (mode.beta1, mode.beta2);
        let e1 = (I * b1 * dz).exp();
        let e2 = (I * b2 * dz).exp();
        let p = self.psi;
        let comp = CVec3::new(a1 * self.phi, a2 * self.phi, b1 * self.phi) * (I * e1);
        let shear = CVec3::new(
            p[2] * a2 - b2 * p[1],
            b2 * p[0] - p[2] * a1,
            p[1] * a1 - p[0] * a2,
        ) * (I * e2);
        comp + shear
    }
}

/// Recovers potential coefficients from the displacement coefficient `v` of one mode.
pub fn helmholtz_coefficients(mode: &ModeData, medium: &Medium, v: CVec3) -> PotentialCoefficients {
    let [a1, a2] = mode.alpha;
    let (b1, b2) = (mode.beta1, mode.beta2);
    let k2 = medium.kappa2 * medium.kappa2;
    let f = -I / mode.chi;
    let d = mode.beta_gap;
    let phi = f * (v[0] * a1 + v[1] * a2 + b2 * v[2]);
    // b2 a1^2 + b1 a2^2 + b1 b2^2 = k2 b1 - a1^2 d, using b2^2 = k2 - |alpha|^2
    let psi1 = f * ((a1 * a2 * d * v[0] + (b1 * k2 - d * (a1 * a1)) * v[1]) / k2 - v[2] * a2);
    let psi2 = f * ((-(b1 * k2 - d * (a2 * a2)) * v[0] - a1 * a2 * d * v[1]) / k2 + v[2] * a1);
    let psi3 = -I / k2 * (v[0] * a2 - v[1] * a1);
    PotentialCoefficients {
        phi,
        psi: CVec3::new(psi1, psi2, psi3),
    }
}

/// Finite set of vector Fourier coefficients on a horizontal plane.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FourierVectorField {
    pub height: f64,
    pub coeffs: BTreeMap<ModeIndex, CVec3>,
}

impl FourierVectorField {
    pub fn new(height: f64) -> Self {
        Self {
            height,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn single(height: f64, n: ModeIndex, v: CVec3) -> Self {
        let mut f = Self::new(height);
        f.coeffs.insert(n, v);
        f
    }

    pub fn get(&self, n: ModeIndex) -> Result<CVec3> {
        self.coeffs.get(&n).copied().ok_or(Error::MissingMode(n))
    }

    /// Evaluates the Fourier sum at tangential position `r` on the plane.
    pub fn synthesize(&self, lattice: &Lattice, r: [f64; 2]) -> CVec3 {
        self.coeffs
            .iter()
            .map(|(n, v)| v * tangential_phase(lattice.wave_vector(*n), [r[0], r[1], 0.0]))
            .sum()
    }

    /// `a * self + b * other` over the union of supports.
    pub fn combine(&self, a: C64, other: &Self, b: C64) -> Self {
        let mut out = Self::new(self.height);
        for (n, v) in &self.coeffs {
            *out.coeffs.entry(*n).or_insert_with(CVec3::zeros) += v * a;
        }
        for (n, v) in &other.coeffs {
            *out.coeffs.entry(*n).or_insert_with(CVec3::zeros) += v * b;
        }
        out
    }
}

/// Outgoing Rayleigh expansion above the plane `x3 = height`.
#[derive(Debug, Clone, PartialEq)]
pub struct RayleighExpansion {
    pub height: f64,
    pub terms: Vec<(ModeData, PotentialCoefficients)>,
}

impl RayleighExpansion {
    /// Builds the expansion whose boundary trace is `trace`.
    pub fn from_trace(trace: &FourierVectorField, lattice: &Lattice, medium: &Medium) -> Result<Self> {
        let terms = trace
            .coeffs
            .iter()
            .map(|(n, v)| {
                let mode = ModeData::new(lattice, medium, *n)?;
                Ok((mode, helmholtz_coefficients(&mode, medium, *v)))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            height: trace.height,
            terms,
        })
    }

    /// Displacement at `x`, valid for `x[2] >= height`.
    pub fn eval(&self, x: [f64; 3]) -> CVec3 {
        rayleigh_eval(&self.terms, self.height, x)
    }
}

/// Sums the mode-wise Rayleigh terms at `x` (requires `x[2] >= h`).
pub fn rayleigh_eval(terms: &[(ModeData, PotentialCoefficients)], h: f64, x: [f64; 3]) -> CVec3 {
    terms
        .iter()
        .map(|(mode, c)| c.displacement(mode, x[2] - h) * tangential_phase(mode.alpha, x))
        .sum()
}

/// Total field for a flat rigid surface at `x3 = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactFlatSolution {
    /// Reflected compressional amplitude.
    pub a: C64,
    /// Reflected shear potential amplitude.
    pub b: CVec3,
    /// Shear vertical wavenumber of mode zero.
    pub beta2: C64,
    pub incidence: Incidence,
    pub medium: Medium,
}

/// Reflection amplitudes for a flat rigid surface.
pub fn exact_flat_solution(incidence: &Incidence, medium: &Medium) -> Result<ExactFlatSolution> {
    let mode = ModeData::from_wave_vector(ModeIndex::ZERO, incidence.alpha, medium)?;
    let [a1, a2] = incidence.alpha;
    let beta = incidence.beta;
    let b2 = mode.beta2;
    let [q1, q2, q3] = incidence.q;
    let k2 = medium.kappa2 * medium.kappa2;
    let chi = mode.chi;
    let f = I / chi;
    let a = f * (b2 * q3 + a1 * q1 + a2 * q2);
    let b1c = f
        * ((a1 * a2 * (beta - b2) * q1 + (b2 * a1 * a1 + beta * a2 * a2 + beta * b2 * b2) * q2) / k2
            - a2 * q3);
    let b2c = f
        * ((-(beta * a1 * a1 + b2 * a2 * a2 + beta * b2 * b2) * q1 - a1 * a2 * (beta - b2) * q2) / k2
            + a1 * q3);
    let b3c = I / k2 * (a2 * q1 - a1 * q2);
    Ok(ExactFlatSolution {
        a,
        b: CVec3::new(b1c, b2c, C64::from(b3c)),
        beta2: b2,
        incidence: *incidence,
        medium: *medium,
    })
}

impl ExactFlatSolution {
    /// Reflected (diffracted) part of the field.
    pub fn reflected(&self, x: [f64; 3]) -> CVec3 {
        let [a1, a2] = self.incidence.alpha;
        let beta = self.incidence.beta;
        let b2 = self.beta2;
        let b = self.b;
        let base = tangential_phase(self.incidence.alpha, x);
        let e1 = base * Complex64::from_polar(1.0, beta * x[2]);
        let e2 = base * (I * b2 * x[2]).exp();
        let comp = CVec3::new(C64::from(a1), C64::from(a2), C64::from(beta)) * (I * self.a * e1);
        let shear = CVec3::new(
            b[2] * a2 - b2 * b[1],
            b2 * b[0] - b[2] * a1,
            b[1] * a1 - b[0] * a2,
        ) * (I * e2);
        comp + shear
    }

    /// Total field `u_inc + reflected`.
    pub fn eval(&self, x: [f64; 3]) -> CVec3 {
        incident_field(&self.incidence, &self.medium, x) + self.reflected(x)
    }

    /// Potential coefficients of the reflected field on the plane `x3 = h`.
    pub fn reflected_potentials(&self, h: f64) -> PotentialCoefficients {
        let e1 = Complex64::from_polar(1.0, self.incidence.beta * h);
        let e2 = (I * self.beta2 * h).exp();
        PotentialCoefficients {
            phi: self.a * e1,
            psi: self.b * e2,
        }
    }
}

/// Convenience wrapper for [`ExactFlatSolution::eval`].
pub fn eval_exact(sol: &ExactFlatSolution, x: [f64; 3]) -> CVec3 {
    sol.eval(x)
}
