//! Error constants for the PML truncation and numerical witnesses of the
//! supporting inequalities.
//!
//! The modeling constant `K` controls `|M - M_hat|` through exponential
//! factors in the complex layer thickness; `K_hat = 11 mu K / kappa1^4`
//! bounds the Frobenius gap per mode.

use crate::error::{Error, Result};
use crate::modes::{Lattice, Medium, ModeData, ModeIndex};
use crate::par;
use crate::pml::{pml_dtn_from_system, PmlProfile};
use crate::dtn::dtn_matrix;
use crate::C64;

/// `min |kappa_j^2 - |alpha_n|^2|^(1/2)` inside (`minus`) and outside (`plus`)
/// the propagating sets, indexed by `j - 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaExtrema {
    /// Infinite when the propagating set is empty.
    pub minus: [f64; 2],
    pub plus: [f64; 2],
}

/// Computes the extrema over the window and a lattice-spacing bound for the
/// modes beyond it.
pub fn delta_extrema(lattice: &Lattice, medium: &Medium, window: usize) -> Result<DeltaExtrema> {
    let mut minus = [f64::INFINITY; 2];
    let mut plus = [f64::INFINITY; 2];
    for n in ModeIndex::window(window) {
        let a = lattice.wave_vector(n);
        let r2 = a[0] * a[0] + a[1] * a[1];
        for j in 0..2 {
            let k = medium.kappa(j as u8 + 1);
            let d = (k * k - r2).abs().sqrt();
            if r2 < k * k {
                minus[j] = minus[j].min(d);
            } else {
                plus[j] = plus[j].min(d);
            }
        }
    }
    let r_out = lattice.outside_window_radius(window);
    for j in 0..2 {
        let k = medium.kappa(j as u8 + 1);
        if r_out <= k {
            return Err(Error::WindowTooSmall {
                window,
                required: lattice.required_window(medium.kappa2) + 1,
            });
        }
        plus[j] = plus[j].min((r_out * r_out - k * k).sqrt());
    }
    Ok(DeltaExtrema { minus, plus })
}

/// `1 / (e^x - 1)^p` for `x > 0`, zero for `x = inf`.
fn inv_expm1_pow(x: f64, p: i32) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!(
            "non-absorbing PML: exponential rate {x} is not positive"
        )));
    }
    Ok(1.0 / x.exp_m1().powi(p))
}

/// The modeling constant together with its ingredients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelingConstant {
    pub k: f64,
    pub prefactor: f64,
    pub terms: [f64; 8],
    pub extrema: DeltaExtrema,
}

/// Evaluates `K = 48 (49 + kappa2^2)^{7/2} / kappa1^2 * max(terms)`.
pub fn modeling_constant_k(
    medium: &Medium,
    lattice: &Lattice,
    profile: &PmlProfile,
    window: usize,
) -> Result<ModelingConstant> {
    let z = profile.zeta();
    if !(z.im > 0.0) {
        return Err(Error::Domain(format!("Im zeta must be positive, got {}", z.im)));
    }
    if z.re < 1.0 {
        return Err(Error::Domain(format!("Re zeta must be at least 1, got {}", z.re)));
    }
    let ex = delta_extrema(lattice, medium, window)?;
    let [dm1, dm2] = ex.minus;
    let [dp1, dp2] = ex.plus;
    let (re, im) = (z.re, z.im);
    let decay = |x: f64| (-x).exp();
    let one_minus = |x: f64| -(-x).exp_m1();
    let last_den = one_minus(2.0 * dp1 * im) * one_minus(2.0 * dm2 * re).powi(2);
    if !(last_den > 0.0) {
        return Err(Error::Domain("non-absorbing PML: vanishing denominator".into()));
    }
    let terms = [
        inv_expm1_pow(dm1 * im, 1)?,
        inv_expm1_pow(0.5 * dm1 * im, 2)?,
        inv_expm1_pow(dm1 * im / 3.0, 3)?,
        inv_expm1_pow(dp2 * re, 1)?,
        inv_expm1_pow(0.5 * dp2 * re, 2)?,
        inv_expm1_pow(dp2 * re / 3.0, 3)?,
        inv_expm1_pow(dm2 * im, 1)?,
        (decay(dp1 * re) + decay(dm2 * im)).powi(2) / last_den,
    ];
    let k2 = medium.kappa2 * medium.kappa2;
    let prefactor = 48.0 * (49.0 + k2).powf(3.5) / (medium.kappa1 * medium.kappa1);
    let worst = terms.iter().copied().fold(0.0, f64::max);
    Ok(ModelingConstant {
        k: prefactor * worst,
        prefactor,
        terms,
        extrema: ex,
    })
}

/// Trace constant `(1 + 1/(h - a))^{1/2}` for a surface below `a`.
pub fn trace_constant(h: f64, surface_max: f64) -> Result<f64> {
    if !(h > surface_max) {
        return Err(Error::Domain(format!(
            "boundary height {h} must exceed the surface maximum {surface_max}"
        )));
    }
    Ok((1.0 + 1.0 / (h - surface_max)).sqrt())
}

/// Frobenius gap between the exact and PML boundary matrices of one mode.
pub fn mode_gap(mode: &ModeData, medium: &Medium, profile: &PmlProfile) -> Result<f64> {
    let exact = dtn_matrix(mode, medium).m;
    let pml = pml_dtn_from_system(mode, profile, medium)?.mhat;
    Ok((exact - pml).norm())
}

/// Largest gap over the window and the mode attaining it.
pub fn sup_gap(lattice: &Lattice, medium: &Medium, profile: &PmlProfile, window: usize) -> Result<(f64, ModeIndex)> {
    let modes = ModeIndex::window(window);
    let gaps = par::map_slice(&modes, |n| {
        let mode = ModeData::new(lattice, medium, *n)?;
        mode_gap(&mode, medium, profile).map(|g| (g, *n))
    });
    let mut best = (0.0, ModeIndex::ZERO);
    for g in gaps {
        let g = g?;
        if g.0 > best.0 {
            best = g;
        }
    }
    Ok(best)
}

/// Operator-gap check against the constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapReport {
    pub k: f64,
    /// `11 mu K / kappa1^4`, the bound that is checked.
    pub khat: f64,
    /// `11 mu^2 K / kappa1^4`, reported alongside.
    pub khat_mu_squared: f64,
    pub gamma2: f64,
    pub worst_gap: f64,
    pub worst_mode: ModeIndex,
    pub bound_satisfied: bool,
    pub assumed_gamma1: f64,
    /// `assumed_gamma1 - khat * gamma2^2`; positive when the convergence
    /// condition would hold for the assumed inf-sup constant.
    pub condition_margin: f64,
    /// `K > kappa1^2 / 2`, outside the regime where `chi_hat` is guaranteed
    /// to stay away from zero.
    pub smallness_violated: bool,
}

/// Evaluates every window gap and compares the worst one with `K_hat`.
pub fn operator_gap(
    lattice: &Lattice,
    medium: &Medium,
    profile: &PmlProfile,
    window: usize,
    surface_max: f64,
    assumed_gamma1: f64,
) -> Result<GapReport> {
    let kc = modeling_constant_k(medium, lattice, profile, window)?;
    let k1_4 = medium.kappa1.powi(4);
    let khat = 11.0 * medium.mu * kc.k / k1_4;
    let gamma2 = trace_constant(profile.h, surface_max)?;
    let (worst_gap, worst_mode) = sup_gap(lattice, medium, profile, window)?;
    Ok(GapReport {
        k: kc.k,
        khat,
        khat_mu_squared: 11.0 * medium.mu * medium.mu * kc.k / k1_4,
        gamma2,
        worst_gap,
        worst_mode,
        bound_satisfied: worst_gap <= khat,
        assumed_gamma1,
        condition_margin: assumed_gamma1 - khat * gamma2 * gamma2,
        smallness_violated: kc.k > 0.5 * medium.kappa1 * medium.kappa1,
    })
}

/// A window mode with `|chi|` outside `(kappa1^2, kappa2^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiViolation {
    pub mode: ModeIndex,
    pub chi_abs: f64,
}

/// Checks `kappa1^2 < |chi| < kappa2^2` on every window mode.
pub fn chi_bounds_check(lattice: &Lattice, medium: &Medium, window: usize) -> Result<Vec<ChiViolation>> {
    let lo = medium.kappa1 * medium.kappa1;
    let hi = medium.kappa2 * medium.kappa2;
    let mut out = Vec::new();
    for n in ModeIndex::window(window) {
        let c = ModeData::new(lattice, medium, n)?.chi.norm();
        if !(lo < c && c < hi) {
            out.push(ChiViolation { mode: n, chi_abs: c });
        }
    }
    Ok(out)
}

/// `t^k e^{-(t^2 - s^2)^{1/2}}` for `t >= s`.
pub fn g3(s: f64, k: f64, t: f64) -> f64 {
    t.powf(k) * (-(t * t - s * s).max(0.0).sqrt()).exp()
}

/// Grid maximum of `g3` against its bound `(s^2 + k^2)^{k/2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct G3Check {
    pub s: f64,
    pub k: f64,
    pub max_value: f64,
    pub argmax: f64,
    pub bound: f64,
    pub holds: bool,
}

/// Samples `g3` on `points` equispaced values in `(s, t_max]`.
pub fn g3_check(s: f64, k: f64, t_max: f64, points: usize) -> G3Check {
    let step = (t_max - s) / points as f64;
    let (mut max_value, mut argmax) = (0.0, s);
    for i in 1..=points {
        let t = s + step * i as f64;
        let v = g3(s, k, t);
        if v > max_value {
            max_value = v;
            argmax = t;
        }
    }
    let bound = (s * s + k * k).powf(0.5 * k);
    G3Check {
        s,
        k,
        max_value,
        argmax,
        bound,
        holds: max_value <= bound,
    }
}

/// Combined witness report.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticChecks {
    pub chi_violations: Vec<ChiViolation>,
    pub g3: Vec<G3Check>,
}

impl AnalyticChecks {
    pub fn all_hold(&self) -> bool {
        self.chi_violations.is_empty() && self.g3.iter().all(|c| c.holds)
    }
}

/// Runs the `chi` window check and the `g3` grid checks for each `(s, k)`.
pub fn analytic_checks(
    lattice: &Lattice,
    medium: &Medium,
    window: usize,
    s_k_grid: &[(f64, f64)],
    t_max: f64,
    points: usize,
) -> Result<AnalyticChecks> {
    Ok(AnalyticChecks {
        chi_violations: chi_bounds_check(lattice, medium, window)?,
        g3: s_k_grid
            .iter()
            .map(|&(s, k)| g3_check(s, k, t_max.max(s + 1.0), points))
            .collect(),
    })
}

/// Least-squares line `y = slope x + intercept` with its coefficient of determination.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return Err(Error::Domain(format!("linear fit needs two or more paired points, got {n} and {}", y.len())));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("linear fit with constant abscissa".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - slope * a - intercept).powi(2)).sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - sse / syy };
    Ok(LinearFit { slope, intercept, r_squared })
}

/// One point of a PML strength sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayRow {
    pub sigma: C64,
    pub zeta: C64,
    pub worst_gap: f64,
    pub worst_mode: ModeIndex,
}

/// Exponential decay of the boundary-matrix gap over a PML strength sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayStudy {
    pub rows: Vec<DecayRow>,
    /// `ln(worst gap)` against `Im zeta`.
    pub fit_im: LinearFit,
    /// `ln(worst gap)` against `Re zeta`.
    pub fit_re: LinearFit,
}

/// Sweeps `sigma = s (1 + i)` over `magnitudes` and fits the log of the
/// windowed worst gap against both parts of `zeta`.
pub fn pml_decay_study(
    lattice: &Lattice,
    medium: &Medium,
    h: f64,
    delta: f64,
    degree: u32,
    magnitudes: &[f64],
    window: usize,
) -> Result<DecayStudy> {
    let mut rows = Vec::with_capacity(magnitudes.len());
    for &s in magnitudes {
        let p = PmlProfile::with_magnitude(h, delta, s, degree)?;
        let (g, n) = sup_gap(lattice, medium, &p, window)?;
        rows.push(DecayRow {
            sigma: p.sigma,
            zeta: p.zeta(),
            worst_gap: g,
            worst_mode: n,
        });
    }
    if rows.iter().any(|r| !(r.worst_gap > 0.0)) {
        return Err(Error::Domain("gap vanished to round-off; the sweep is too strong to fit".into()));
    }
    let ln: Vec<f64> = rows.iter().map(|r| r.worst_gap.ln()).collect();
    let im: Vec<f64> = rows.iter().map(|r| r.zeta.im).collect();
    let re: Vec<f64> = rows.iter().map(|r| r.zeta.re).collect();
    Ok(DecayStudy {
        fit_im: linear_fit(&im, &ln)?,
        fit_re: linear_fit(&re, &ln)?,
        rows,
    })
}

/// `n` points from `lo` to `hi` equally spaced in the logarithm.
pub fn geometric_points(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let r = (hi / lo).ln() / (n - 1) as f64;
    (0..n).map(|i| lo * (r * i as f64).exp()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::tests::ex1;
    use crate::pml::example_profile;
    use num_complex::Complex64;

    #[test]
    fn example_extrema() {
        let (m, inc, lat) = ex1();
        let ex = delta_extrema(&lat, &m, 20).unwrap();
        assert!((ex.minus[0] - inc.beta).abs() < 1e-12);
        assert!((ex.minus[0] - 2.433490).abs() < 5e-5);
        let d2 = ModeData::new(&lat, &m, ModeIndex::ZERO).unwrap().delta2;
        assert_eq!(ex.minus[1], d2);
        assert!(ex.plus[0] > 0.0 && ex.plus[1] > 0.0);
    }

    #[test]
    fn k_vanishes_for_huge_layer_and_decreases_with_delta() {
        let (m, _, lat) = ex1();
        let huge = PmlProfile::new(0.3, 1.0, Complex64::new(3e3, 3e3), 2).unwrap();
        assert_eq!(modeling_constant_k(&m, &lat, &huge, 10).unwrap().k, 0.0);
        let p = example_profile();
        let p2 = PmlProfile::new(p.h, 2.0 * p.delta, p.sigma, p.degree).unwrap();
        let k1 = modeling_constant_k(&m, &lat, &p, 10).unwrap().k;
        let k2 = modeling_constant_k(&m, &lat, &p2, 10).unwrap().k;
        assert!(k1 > 0.0 && k2 < k1);
    }

    #[test]
    fn k_monotone_in_each_part_of_zeta() {
        let (m, _, lat) = ex1();
        let mut last = f64::INFINITY;
        for s in [10.0, 20.0, 40.0] {
            let p = PmlProfile::new(0.3, 0.3, Complex64::new(25.39, s), 2).unwrap();
            let k = modeling_constant_k(&m, &lat, &p, 10).unwrap().k;
            assert!(k <= last);
            last = k;
        }
        last = f64::INFINITY;
        for s in [10.0, 20.0, 40.0] {
            let p = PmlProfile::new(0.3, 0.3, Complex64::new(s, 25.39), 2).unwrap();
            let k = modeling_constant_k(&m, &lat, &p, 10).unwrap().k;
            assert!(k <= last);
            last = k;
        }
    }

    #[test]
    fn k_rejects_non_absorbing_layer() {
        let (m, _, lat) = ex1();
        let p = PmlProfile::new(0.3, 1.5, Complex64::new(1.0, 0.0), 2).unwrap();
        assert!(modeling_constant_k(&m, &lat, &p, 10).is_err());
    }

    #[test]
    fn trace_constant_value() {
        assert!((trace_constant(0.3, 0.0).unwrap() - 2.081666).abs() < 1e-6);
        assert!(trace_constant(0.3, 0.3).is_err());
    }

    #[test]
    fn trace_inequality_on_single_modes() {
        // |u(h)|^2 <= gamma2^2 (|u|^2 + |u'|^2 + |alpha|^2 |u|^2) integrated over (a, h)
        let (a, h) = (0.0, 0.3);
        let g2 = trace_constant(h, a).unwrap().powi(2);
        let n = 4000;
        let dx = (h - a) / n as f64;
        for (c, alpha_sq) in [(0.0, 0.0), (5.0, 1.0), (20.0, 0.0), (-3.0, 4.0), (60.0, 2.0)] {
            let u = |x: f64| Complex64::new(0.0, 2.0 * x).exp() * (c * x).exp();
            let du = |x: f64| u(x) * Complex64::new(c, 2.0);
            let mut norm = 0.0;
            for k in 0..n {
                let x = a + (k as f64 + 0.5) * dx;
                norm += ((1.0 + alpha_sq) * u(x).norm_sqr() + du(x).norm_sqr()) * dx;
            }
            assert!(u(h).norm_sqr() <= g2 * norm, "c = {c}");
        }
    }

    #[test]
    fn example_gap_bound() {
        let (m, _, lat) = ex1();
        let r = operator_gap(&lat, &m, &example_profile(), 20, 0.0, 1.0).unwrap();
        assert!(r.bound_satisfied);
        assert!(r.worst_gap <= r.khat);
        assert!((r.khat_mu_squared / r.khat - m.mu).abs() < 1e-12);
        let huge = PmlProfile::new(0.3, 1.0, Complex64::new(3e3, 3e3), 2).unwrap();
        let r = operator_gap(&lat, &m, &huge, 5, 0.0, 1.0).unwrap();
        assert!(r.worst_gap < 1e-8 && r.khat < 1e-6);
    }

    #[test]
    fn chi_and_g3_checks_hold() {
        let (m, _, lat) = ex1();
        let r = analytic_checks(&lat, &m, 50, &[(1.0, 0.0), (3.0, 7.0), (0.5, 2.5)], 100.0, 10_000).unwrap();
        assert!(r.all_hold(), "{r:?}");
        let c = g3_check(1.0, 0.0, 50.0, 1000);
        assert_eq!(c.bound, 1.0);
        let c = g3_check(3.0, 7.0, 100.0, 10_000);
        assert!(c.max_value <= 58f64.powf(3.5));
    }

    #[test]
    fn fit_recovers_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 0.5 * v).collect();
        let f = linear_fit(&x, &y).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-14 && (f.intercept - 2.0).abs() < 1e-14);
        assert!((f.r_squared - 1.0).abs() < 1e-14);
        assert!(linear_fit(&[1.0], &[1.0]).is_err());
        let g = geometric_points(1.0, 8.0, 4);
        assert!((g[1] - 2.0).abs() < 1e-14 && (g[3] - 8.0).abs() < 1e-14);
    }

    #[test]
    fn gap_decays_exponentially_in_zeta() {
        let (m, _, lat) = ex1();
        let mags = geometric_points(25.39 / 8.0, 25.39, 6);
        let st = pml_decay_study(&lat, &m, 0.3, 0.3, 2, &mags, 5).unwrap();
        assert!(st.fit_im.slope < 0.0 && st.fit_re.slope < 0.0);
        assert!(st.fit_im.r_squared > 0.99 && st.fit_re.r_squared > 0.99);
        assert!(st.rows.windows(2).all(|w| w[1].worst_gap < w[0].worst_gap));
    }
}
