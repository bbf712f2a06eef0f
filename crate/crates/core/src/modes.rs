//! Quasi-periodic lattice and per-mode spectral data.
//!
//! A mode `n = (n1, n2)` carries the tangential wave vector
//! `alpha_n = alpha + 2*pi*(n1/L1, n2/L2)` and the vertical wavenumbers
//! `beta_j = sqrt(kappa_j^2 - |alpha_n|^2)`, taken real positive for
//! propagating modes and positive imaginary for evanescent ones.

use std::collections::BTreeSet;
use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative distance to a Rayleigh frequency below which a mode is rejected.
pub const RESONANCE_TOL: f64 = 1e-12;

/// Default half-width of the mode window used by operator studies.
pub const DEFAULT_WINDOW: usize = 10;

/// Isotropic elastic medium at a fixed angular frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Medium {
    pub lambda: f64,
    pub mu: f64,
    pub omega: f64,
    /// Compressional wavenumber `omega / sqrt(lambda + 2 mu)`.
    pub kappa1: f64,
    /// Shear wavenumber `omega / sqrt(mu)`.
    pub kappa2: f64,
}

impl Medium {
    pub fn new(lambda: f64, mu: f64, omega: f64) -> Result<Self> {
        if !(mu > 0.0) || !(lambda + mu > 0.0) || !lambda.is_finite() || !mu.is_finite() {
            return Err(Error::Domain(format!(
                "Lame constants need mu > 0 and lambda + mu > 0, got lambda = {lambda}, mu = {mu}"
            )));
        }
        if !(omega > 0.0) || !omega.is_finite() {
            return Err(Error::Domain(format!("omega must be positive, got {omega}")));
        }
        Ok(Self {
            lambda,
            mu,
            omega,
            kappa1: omega / (lambda + 2.0 * mu).sqrt(),
            kappa2: omega / mu.sqrt(),
        })
    }

    /// `kappa1` or `kappa2` for `wave` = 1 or 2.
    pub fn kappa(&self, wave: u8) -> f64 {
        if wave == 1 {
            self.kappa1
        } else {
            self.kappa2
        }
    }
}

/// Compressional plane wave incident from above.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Incidence {
    pub theta1: f64,
    pub theta2: f64,
    /// Tangential wave vector `(alpha1, alpha2)`.
    pub alpha: [f64; 2],
    /// Vertical wavenumber `kappa1 cos(theta1)`.
    pub beta: f64,
    /// Unit propagation direction, pointing downwards.
    pub q: [f64; 3],
}

impl Incidence {
    pub fn new(medium: &Medium, theta1: f64, theta2: f64) -> Result<Self> {
        if !(0.0..FRAC_PI_2).contains(&theta1) {
            return Err(Error::Domain(format!("theta1 must lie in [0, pi/2), got {theta1}")));
        }
        if !(0.0..=TAU).contains(&theta2) {
            return Err(Error::Domain(format!("theta2 must lie in [0, 2 pi], got {theta2}")));
        }
        let (s1, c1) = theta1.sin_cos();
        let (s2, c2) = theta2.sin_cos();
        let k = medium.kappa1;
        Ok(Self {
            theta1,
            theta2,
            alpha: [k * s1 * c2, k * s1 * s2],
            beta: k * c1,
            q: [s1 * c2, s1 * s2, -c1],
        })
    }
}

/// Lattice index of a quasi-periodic Fourier mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct ModeIndex {
    pub n1: i32,
    pub n2: i32,
}

impl ModeIndex {
    pub const ZERO: ModeIndex = ModeIndex { n1: 0, n2: 0 };

    pub const fn new(n1: i32, n2: i32) -> Self {
        Self { n1, n2 }
    }

    /// All indices with `|n1|, |n2| <= n`, row-major in `(n1, n2)`.
    pub fn window(n: usize) -> Vec<ModeIndex> {
        let n = n as i32;
        (-n..=n)
            .flat_map(|n1| (-n..=n).map(move |n2| ModeIndex { n1, n2 }))
            .collect()
    }
}

impl fmt::Display for ModeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.n1, self.n2)
    }
}

/// Periods of the grating together with the Bloch offset of the incidence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lattice {
    pub period: [f64; 2],
    pub alpha: [f64; 2],
}

impl Lattice {
    pub fn new(period1: f64, period2: f64, incidence: &Incidence) -> Result<Self> {
        if !(period1 > 0.0 && period2 > 0.0) || !period1.is_finite() || !period2.is_finite() {
            return Err(Error::Domain(format!(
                "periods must be positive, got ({period1}, {period2})"
            )));
        }
        Ok(Self {
            period: [period1, period2],
            alpha: incidence.alpha,
        })
    }

    /// Unit periods, the setting of the worked examples.
    pub fn unit(incidence: &Incidence) -> Self {
        Self {
            period: [1.0, 1.0],
            alpha: incidence.alpha,
        }
    }

    pub fn wave_vector(&self, n: ModeIndex) -> [f64; 2] {
        [
            self.alpha[0] + TAU * f64::from(n.n1) / self.period[0],
            self.alpha[1] + TAU * f64::from(n.n2) / self.period[1],
        ]
    }

    /// Smallest window half-width guaranteed to contain every mode with
    /// `|alpha_n| < kappa`.
    pub fn required_window(&self, kappa: f64) -> usize {
        (0..2)
            .map(|i| ((kappa + self.alpha[i].abs()) * self.period[i] / TAU).floor() as usize)
            .max()
            .unwrap_or(0)
    }

    /// Lower bound on `|alpha_n|` over modes outside the window of half-width `n`.
    pub fn outside_window_radius(&self, n: usize) -> f64 {
        (0..2)
            .map(|i| TAU * (n as f64 + 1.0) / self.period[i] - self.alpha[i].abs())
            .fold(f64::INFINITY, f64::min)
            .max(0.0)
    }
}

/// Spectral data of one mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeData {
    pub index: ModeIndex,
    pub alpha: [f64; 2],
    pub beta1: Complex64,
    pub beta2: Complex64,
    /// `|alpha_n|^2 + beta1 beta2`.
    pub chi: Complex64,
    /// `beta1 - beta2`.
    pub beta_gap: Complex64,
    /// `| kappa1^2 - |alpha_n|^2 |^(1/2)`.
    pub delta1: f64,
    pub delta2: f64,
    pub prop1: bool,
    pub prop2: bool,
}

/// Vertical wavenumber on the physical branch, plus `Delta` and the propagating flag.
fn vertical_wavenumber(kappa: f64, alpha_sq: f64) -> (Complex64, f64, bool) {
    let d = kappa * kappa - alpha_sq;
    if d > 0.0 {
        let s = d.sqrt();
        (Complex64::new(s, 0.0), s, true)
    } else {
        let s = (-d).sqrt();
        (Complex64::new(0.0, s), s, false)
    }
}

impl ModeData {
    pub fn new(lattice: &Lattice, medium: &Medium, n: ModeIndex) -> Result<Self> {
        let alpha = lattice.wave_vector(n);
        Self::from_wave_vector(n, alpha, medium)
    }

    /// Mode data for an explicit tangential wave vector.
    pub fn from_wave_vector(index: ModeIndex, alpha: [f64; 2], medium: &Medium) -> Result<Self> {
        let norm = alpha[0].hypot(alpha[1]);
        for wave in [1u8, 2] {
            let kappa = medium.kappa(wave);
            if (norm - kappa).abs() < RESONANCE_TOL * kappa {
                return Err(Error::Resonance {
                    index,
                    wave,
                    alpha_norm: norm,
                    kappa,
                });
            }
        }
        let alpha_sq = alpha[0] * alpha[0] + alpha[1] * alpha[1];
        let (beta1, delta1, prop1) = vertical_wavenumber(medium.kappa1, alpha_sq);
        let (beta2, delta2, prop2) = vertical_wavenumber(medium.kappa2, alpha_sq);
        let (k1, k2) = (medium.kappa1 * medium.kappa1, medium.kappa2 * medium.kappa2);
        // same-type pairs are formed from differences of squares to avoid cancellation
        let (chi, beta_gap) = match (prop1, prop2) {
            (false, false) => (
                Complex64::from((alpha_sq * (k1 + k2) - k1 * k2) / (alpha_sq + delta1 * delta2)),
                Complex64::new(0.0, (k2 - k1) / (delta1 + delta2)),
            ),
            (true, true) => (
                Complex64::from(alpha_sq + delta1 * delta2),
                Complex64::from((k1 - k2) / (delta1 + delta2)),
            ),
            _ => (alpha_sq + beta1 * beta2, beta1 - beta2),
        };
        Ok(Self {
            index,
            alpha,
            beta1,
            beta2,
            chi,
            beta_gap,
            delta1,
            delta2,
            prop1,
            prop2,
        })
    }

    pub fn alpha_sq(&self) -> f64 {
        self.alpha[0] * self.alpha[0] + self.alpha[1] * self.alpha[1]
    }

    pub fn alpha_norm(&self) -> f64 {
        self.alpha[0].hypot(self.alpha[1])
    }

    pub fn beta(&self, wave: u8) -> Complex64 {
        if wave == 1 {
            self.beta1
        } else {
            self.beta2
        }
    }
}

/// Convenience wrapper for [`ModeData::new`].
pub fn mode_data(lattice: &Lattice, medium: &Medium, n: ModeIndex) -> Result<ModeData> {
    ModeData::new(lattice, medium, n)
}

/// Propagating compressional and shear mode sets.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PropagatingSets {
    pub u1: BTreeSet<ModeIndex>,
    pub u2: BTreeSet<ModeIndex>,
}

/// Collects `U_j = { n : |alpha_n| < kappa_j }` over the window `|n_i| <= window`.
///
/// Fails if the window could miss a propagating shear mode.
pub fn propagating_sets(lattice: &Lattice, medium: &Medium, window: usize) -> Result<PropagatingSets> {
    let required = lattice.required_window(medium.kappa2);
    if window < required {
        return Err(Error::WindowTooSmall { window, required });
    }
    let mut sets = PropagatingSets::default();
    for n in ModeIndex::window(window) {
        let a = lattice.wave_vector(n);
        let norm = a[0].hypot(a[1]);
        if norm < medium.kappa1 {
            sets.u1.insert(n);
        }
        if norm < medium.kappa2 {
            sets.u2.insert(n);
        }
    }
    Ok(sets)
}

/// Reference medium: `lambda = 1, mu = 2, omega = 2 pi`.
pub fn example_medium() -> Medium {
    Medium::new(1.0, 2.0, 2.0 * PI).expect("valid constants")
}
