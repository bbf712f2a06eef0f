//! Perfectly matched layer above the plane `x3 = h`.
//!
//! The layer `h < x3 < h + delta` is complex-stretched with the medium
//! profile `rho(x3) = 1 + sigma ((x3 - h)/delta)^m`. Inside it the
//! potentials are combinations of `e^{+-i beta_j zeta(x3)}`, and a rigid
//! top wall turns the layer into a per-mode 3x3 boundary matrix, computed
//! either from the 8x8 coefficient system or from closed-form entries.
//!
//! All exponentials are carried as `E_j = e^{i beta_j zeta}`, which has
//! modulus at most one for an absorbing profile. The coefficients of the
//! decaying branches are rescaled by `E_j` so that no `e^{-i beta_j zeta}`
//! is ever formed.

use nalgebra::{SMatrix, SVector};
use num_complex::Complex64;

use crate::dtn::{incident_trace, incident_traction, BoundarySource};
use crate::error::{Error, Result};
use crate::linalg::dense_solve;
use crate::modes::{Incidence, Medium, ModeData, ModeIndex};
use crate::{CMat3, CVec3, C64};

const I: C64 = Complex64::new(0.0, 1.0);

/// Layer coefficient matrix.
pub type Mat8 = SMatrix<C64, 8, 8>;
/// Layer coefficient vector `(A, B, C1, D1, C2, D2, C3, D3)`.
pub type Vec8 = SVector<C64, 8>;

/// Power-law PML medium profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PmlProfile {
    /// Bottom of the layer.
    pub h: f64,
    /// Thickness.
    pub delta: f64,
    /// Complex strength.
    pub sigma: C64,
    /// Polynomial degree.
    pub degree: u32,
}

/// Non-fatal profile diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProfileWarning {
    /// `Im sigma = 0`: the layer does not absorb.
    NoAbsorption,
    /// `Re zeta < 1`, below the customary threshold.
    ThinLayer { re_zeta: f64 },
}

impl PmlProfile {
    pub fn new(h: f64, delta: f64, sigma: C64, degree: u32) -> Result<Self> {
        if !h.is_finite() {
            return Err(Error::Domain(format!("PML start height must be finite, got {h}")));
        }
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::Domain(format!("PML thickness must be positive, got {delta}")));
        }
        if degree == 0 {
            return Err(Error::Domain("PML degree must be at least 1".into()));
        }
        if !(sigma.re >= 0.0 && sigma.im >= 0.0) || !sigma.is_finite() {
            return Err(Error::Domain(format!(
                "PML strength needs non-negative real and imaginary parts, got {sigma}"
            )));
        }
        Ok(Self { h, delta, sigma, degree })
    }

    /// Profile with `Re sigma = Im sigma = magnitude`.
    pub fn with_magnitude(h: f64, delta: f64, magnitude: f64, degree: u32) -> Result<Self> {
        Self::new(h, delta, C64::new(magnitude, magnitude), degree)
    }

    /// Same profile with `sigma` multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        Self::new(self.h, self.delta, self.sigma * s, self.degree)
    }

    /// Medium profile `rho(x3)`.
    pub fn rho(&self, x3: f64) -> C64 {
        if x3 <= self.h {
            C64::new(1.0, 0.0)
        } else {
            1.0 + self.sigma * ((x3 - self.h) / self.delta).powi(self.degree as i32)
        }
    }

    /// Complex layer thickness `int_h^{h+delta} rho`.
    pub fn zeta(&self) -> C64 {
        self.delta + self.sigma * self.delta / f64::from(self.degree + 1)
    }

    /// Stretched coordinate `int_h^{x3} rho`, equal to `x3 - h` below the layer.
    pub fn zeta_at(&self, x3: f64) -> C64 {
        let t = x3 - self.h;
        if t <= 0.0 {
            return C64::new(t, 0.0);
        }
        let m = self.degree as i32;
        t + self.sigma * t.powi(m + 1) / (f64::from(self.degree + 1) * self.delta.powi(m))
    }

    pub fn top(&self) -> f64 {
        self.h + self.delta
    }

    pub fn warnings(&self) -> Vec<ProfileWarning> {
        let mut w = Vec::new();
        if self.sigma.im == 0.0 {
            w.push(ProfileWarning::NoAbsorption);
        }
        let re = self.zeta().re;
        if re < 1.0 {
            w.push(ProfileWarning::ThinLayer { re_zeta: re });
        }
        w
    }
}

/// Layer exponentials `e^{i beta_j zeta}`.
fn layer_exponentials(mode: &ModeData, zeta: C64) -> (C64, C64) {
    ((I * mode.beta1 * zeta).exp(), (I * mode.beta2 * zeta).exp())
}

/// Coefficient system of one mode in the layer.
///
/// Stored with the columns of `B` and `D_k` multiplied by `E_1`, `E_2`
/// respectively; [`LayerSystem::displayed`] undoes the scaling.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerSystem {
    pub mode: ModeData,
    pub scaled: Mat8,
    pub e1: C64,
    pub e2: C64,
}

/// Builds the layer coefficient system of one mode.
pub fn layer_system(mode: &ModeData, profile: &PmlProfile) -> LayerSystem {
    let (e1, e2) = layer_exponentials(mode, profile.zeta());
    let [a1, a2] = mode.alpha.map(C64::from);
    let (b1, b2) = (mode.beta1, mode.beta2);
    let z = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    // (bottom factor, top factor) for growing and rescaled decaying branches
    let (p1, m1) = ((one, e1), (e1, one));
    let (p2, m2) = ((one, e2), (e2, one));
    // Bottom rows use the first factor, top rows the second.
    let row = |c: [C64; 8], top: bool| -> [C64; 8] {
        let f = [p1, m1, p2, m2, p2, m2, p2, m2];
        let mut r = [z; 8];
        for k in 0..8 {
            r[k] = c[k] * if top { f[k].1 } else { f[k].0 };
        }
        r
    };
    let u1 = [a1, a1, z, z, -b2, b2, a2, a2];
    let u2 = [a2, a2, b2, -b2, z, z, -a1, -a1];
    let u3 = [b1, -b1, -a2, -a2, a1, a1, z, z];
    let dv = [z, z, a1, a1, a2, a2, b2, -b2];
    let rows = [
        row(u1, false),
        row(u2, false),
        row(u3, false),
        row(u1, true),
        row(u2, true),
        row(u3, true),
        row(dv, false),
        row(dv, true),
    ];
    let scaled = Mat8::from_fn(|i, j| rows[i][j]);
    LayerSystem {
        mode: *mode,
        scaled,
        e1,
        e2,
    }
}

impl LayerSystem {
    /// Column scale factors turning unscaled coefficients into scaled ones.
    fn column_scale(&self) -> [C64; 8] {
        let one = C64::new(1.0, 0.0);
        [one, self.e1, one, self.e2, one, self.e2, one, self.e2]
    }

    /// The unscaled system in terms of `(A, B, C1, D1, ...)`. Entries overflow
    /// for strongly evanescent modes.
    pub fn displayed(&self) -> Mat8 {
        let s = self.column_scale();
        Mat8::from_fn(|i, j| self.scaled[(i, j)] / s[j])
    }

    /// Right-hand side for boundary displacement `v`.
    pub fn rhs(v: CVec3) -> Vec8 {
        let mut r = Vec8::zeros();
        for k in 0..3 {
            r[k] = -I * v[k];
        }
        r
    }

    /// Solves for the layer coefficients matching boundary data `v`.
    pub fn solve(&self, v: CVec3) -> Result<LayerCoefficients> {
        let (x, cond) = dense_solve(&self.scaled, &Self::rhs(v))?;
        Ok(LayerCoefficients {
            mode: self.mode,
            scaled: x,
            e1: self.e1,
            e2: self.e2,
            condition: cond,
        })
    }

    /// Traction map acting on scaled coefficients.
    fn traction_rows(&self) -> SMatrix<C64, 3, 8> {
        let [a1, a2] = self.mode.alpha.map(C64::from);
        let (b1, b2) = (self.mode.beta1, self.mode.beta2);
        let bb = b2 * b2;
        let z = C64::new(0.0, 0.0);
        let p = SMatrix::<C64, 3, 8>::from_row_slice(&[
            -a1 * b1, a1 * b1, z, z, bb, bb, -a2 * b2, a2 * b2, //
            -a2 * b1, a2 * b1, -bb, -bb, z, z, a1 * b2, -a1 * b2, //
            -bb, -bb, a2 * b2, -a2 * b2, -a1 * b2, a1 * b2, z, z,
        ]);
        let s = self.column_scale();
        SMatrix::<C64, 3, 8>::from_fn(|i, j| p[(i, j)] * s[j])
    }
}

/// Solved layer coefficients (decaying branches rescaled).
#[derive(Debug, Clone, PartialEq)]
pub struct LayerCoefficients {
    pub mode: ModeData,
    pub scaled: Vec8,
    pub e1: C64,
    pub e2: C64,
    /// 1-norm condition number of the scaled system.
    pub condition: f64,
}

impl LayerCoefficients {
    /// Unscaled `(A, B, C1, D1, C2, D2, C3, D3)`.
    pub fn unscaled(&self) -> Vec8 {
        let mut x = self.scaled;
        x[1] *= self.e1;
        for k in [3, 5, 7] {
            x[k] *= self.e2;
        }
        x
    }

    /// Displacement coefficient of the layer solution at `x3` in `[h, h + delta]`.
    pub fn displacement(&self, profile: &PmlProfile, x3: f64) -> CVec3 {
        let [a1, a2] = self.mode.alpha.map(C64::from);
        let (b1, b2) = (self.mode.beta1, self.mode.beta2);
        let zx = profile.zeta_at(x3);
        let zr = profile.zeta() - zx;
        let x = &self.scaled;
        let ga = (I * b1 * zx).exp() * x[0];
        let gb = (I * b1 * zr).exp() * x[1];
        let gc = (I * b2 * zx).exp();
        let gd = (I * b2 * zr).exp();
        let c = [x[2] * gc, x[4] * gc, x[6] * gc];
        let d = [x[3] * gd, x[5] * gd, x[7] * gd];
        let v = CVec3::new(
            a1 * (ga + gb) + a2 * (c[2] + d[2]) - b2 * (c[1] - d[1]),
            a2 * (ga + gb) + b2 * (c[0] - d[0]) - a1 * (c[2] + d[2]),
            b1 * (ga - gb) + a1 * (c[1] + d[1]) - a2 * (c[0] + d[0]),
        );
        v * I
    }

    /// Stretched divergence of the shear potential at `x3`, zero for an exact solve.
    pub fn shear_divergence(&self, profile: &PmlProfile, x3: f64) -> C64 {
        let [a1, a2] = self.mode.alpha.map(C64::from);
        let b2 = self.mode.beta2;
        let gc = (I * b2 * profile.zeta_at(x3)).exp();
        let gd = (I * b2 * (profile.zeta() - profile.zeta_at(x3))).exp();
        let x = &self.scaled;
        a1 * (x[2] * gc + x[3] * gd) + a2 * (x[4] * gc + x[5] * gd) + b2 * (x[6] * gc - x[7] * gd)
    }
}

/// Scalars entering the closed-form PML boundary matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PmlAuxiliaries {
    pub epsilon: C64,
    pub theta: C64,
    pub eta: C64,
    pub gamma: C64,
    pub chihat: C64,
}

/// Per-mode PML boundary matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PmlDtnMatrix {
    pub mode: ModeIndex,
    pub mhat: CMat3,
    /// Present for the closed-form construction.
    pub aux: Option<PmlAuxiliaries>,
    /// Condition number of the layer system, for the system construction.
    pub condition: Option<f64>,
}

/// PML boundary matrix from three layer solves with unit boundary data.
pub fn pml_dtn_from_system(mode: &ModeData, profile: &PmlProfile, medium: &Medium) -> Result<PmlDtnMatrix> {
    let sys = layer_system(mode, profile);
    let mut rhs = SMatrix::<C64, 8, 3>::zeros();
    for k in 0..3 {
        rhs[(k, k)] = -I;
    }
    let (x, cond) = dense_solve(&sys.scaled, &rhs)?;
    let mhat = (sys.traction_rows() * x).scale(medium.mu);
    Ok(PmlDtnMatrix {
        mode: mode.index,
        mhat,
        aux: None,
        condition: Some(cond),
    })
}

/// Which expression to use for the coupling scalar `gamma` in the closed form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GammaForm {
    /// `(E1^2 + E2^4)^2 / ((1 - E1^2)(1 - E2^2)^2)` taken literally. Only
    /// the (1,2) and (2,1) entries depend on it, and with this choice they
    /// disagree with the layer system.
    Literal,
    /// `gamma = -eta`, which restores the in-plane rotational structure of
    /// the matrix and agrees with the layer system to round-off.
    #[default]
    NegEta,
}

/// Closed-form PML boundary matrix.
pub fn pml_dtn_closed_form(
    mode: &ModeData,
    profile: &PmlProfile,
    medium: &Medium,
    gamma_form: GammaForm,
) -> Result<PmlDtnMatrix> {
    let (e1, e2) = layer_exponentials(mode, profile.zeta());
    let one = C64::new(1.0, 0.0);
    let (q1, q2) = (e1 * e1, e2 * e2);
    let den = (one - q1) * (one - q2);
    if den.norm() == 0.0 {
        return Err(Error::IllConditioned { estimate: f64::INFINITY });
    }
    let epsilon = 2.0 * q2 / (one - q2);
    let theta = (e2 - e1) * (e2 - e1) / den;
    let eta = (q2 - q1) / den;
    let gamma = match gamma_form {
        GammaForm::Literal => (q1 + q2 * q2) * (q1 + q2 * q2) / (den * (one - q2)),
        GammaForm::NegEta => -eta,
    };
    let [a1, a2] = mode.alpha;
    let (b1, b2) = (mode.beta1, mode.beta2);
    let chi = mode.chi;
    let k2 = medium.kappa2 * medium.kappa2;
    let d = mode.beta_gap;
    let chihat = chi + 4.0 * mode.alpha_sq() * b1 * b2 * theta / chi;
    if chihat.norm() < 1e-8 * medium.kappa1 * medium.kappa1 {
        log::warn!("mode {}: near-singular chi-hat {chihat}", mode.index);
    }
    let ep1 = epsilon + 1.0;
    let pre = I * medium.mu / (chi * chihat);
    let b22 = b2 * b2;
    let m11 = pre
        * (chi * (d * (a1 * a1) + b2 * chi) * ep1 + 4.0 * (a2 * a2) * b1 * b22 * theta * ep1
            - 2.0 * (a1 * a1) * b1 * k2 * eta);
    let m22 = pre
        * (chi * (d * (a2 * a2) + b2 * chi) * ep1 + 4.0 * (a1 * a1) * b1 * b22 * theta * ep1
            - 2.0 * (a2 * a2) * b1 * k2 * eta);
    let m12 = pre
        * (a1 * a2)
        * (chi * d * ep1 - 2.0 * chi * b1 * eta - 4.0 * b1 * b22 * theta * ep1 - 2.0 * b1 * b2 * d * gamma);
    let side = chi * d + 2.0 * b1 * (k2 - 2.0 * b22) * theta;
    let m13 = pre * a1 * b2 * side;
    let m23 = pre * a2 * b2 * side;
    let m33 = pre * b2 * k2 * (chi * ep1 - 2.0 * b1 * b2 * eta);
    let mhat = CMat3::new(m11, m12, m13, m12, m22, m23, -m13, -m23, m33);
    Ok(PmlDtnMatrix {
        mode: mode.index,
        mhat,
        aux: Some(PmlAuxiliaries {
            epsilon,
            theta,
            eta,
            gamma,
            chihat,
        }),
        condition: None,
    })
}

/// An entry of the closed form that disagrees with the layer system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntryDiscrepancy {
    pub mode: ModeIndex,
    pub row: usize,
    pub col: usize,
    /// `|closed - system|` relative to the Frobenius norm of the system matrix.
    pub relative: f64,
}

/// Entries of the closed form (with `gamma_form`) that differ from the layer
/// system by more than `tol` relative.
pub fn closed_form_discrepancies(
    mode: &ModeData,
    profile: &PmlProfile,
    medium: &Medium,
    gamma_form: GammaForm,
    tol: f64,
) -> Result<Vec<EntryDiscrepancy>> {
    let sys = pml_dtn_from_system(mode, profile, medium)?.mhat;
    let cf = pml_dtn_closed_form(mode, profile, medium, gamma_form)?.mhat;
    let scale = sys.norm();
    let mut out = Vec::new();
    for row in 0..3 {
        for col in 0..3 {
            let relative = (cf[(row, col)] - sys[(row, col)]).norm() / scale;
            if relative > tol {
                out.push(EntryDiscrepancy {
                    mode: mode.index,
                    row,
                    col,
                    relative,
                });
            }
        }
    }
    Ok(out)
}

/// Mode-zero source of the PML-truncated transparent condition,
/// `D u_inc - M_hat u_inc` at `x3 = h`.
pub fn pml_source_g(incidence: &Incidence, medium: &Medium, profile: &PmlProfile) -> Result<BoundarySource> {
    let mode = ModeData::from_wave_vector(ModeIndex::ZERO, incidence.alpha, medium)?;
    let mhat = pml_dtn_from_system(&mode, profile, medium)?.mhat;
    let h = profile.h;
    let phase = Complex64::from_polar(1.0, -incidence.beta * h);
    let g = incident_traction(incidence, medium, h) - mhat * incident_trace(incidence, medium, h);
    Ok(BoundarySource {
        amplitude: g / phase,
        phase,
    })
}

/// The PML used by the flat-surface example: `h = delta = 0.3`, `sigma = 25.39 (1 + i)`, `m = 2`.
pub fn example_profile() -> PmlProfile {
    PmlProfile::with_magnitude(0.3, 0.3, 25.39, 2).expect("valid profile")
}
