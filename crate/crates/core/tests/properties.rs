use std::f64::consts::PI;

use elastic_grating::bounds::modeling_constant_k;
use elastic_grating::dtn::{apply_dtn, dtn_matrix, traction_of_potentials};
use elastic_grating::efficiency::grating_efficiencies;
use elastic_grating::fields::{exact_flat_solution, helmholtz_coefficients, FourierVectorField, PotentialCoefficients};
use elastic_grating::modes::{propagating_sets, Incidence, Lattice, Medium, ModeData, ModeIndex};
use elastic_grating::pml::{pml_dtn_closed_form, pml_dtn_from_system, GammaForm, PmlProfile};
use elastic_grating::solver1d::{solve_mode_bvp, Mesh1D};
use elastic_grating::{CMat3, CVec3, C64};
use proptest::prelude::*;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

fn medium() -> impl Strategy<Value = Medium> {
    (0.2f64..5.0, 0.2f64..5.0, 0.5f64..10.0).prop_map(|(l, m, w)| Medium::new(l, m, w).unwrap())
}

fn setup() -> impl Strategy<Value = (Medium, Incidence, Lattice)> {
    (medium(), 0.0f64..1.5, 0.0f64..(2.0 * PI), 0.5f64..2.0, 0.5f64..2.0).prop_map(|(m, t1, t2, l1, l2)| {
        let inc = Incidence::new(&m, t1, t2).unwrap();
        let lat = Lattice::new(l1, l2, &inc).unwrap();
        (m, inc, lat)
    })
}

fn cplx() -> impl Strategy<Value = C64> {
    (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(a, b)| C64::new(a, b))
}

fn cvec() -> impl Strategy<Value = CVec3> {
    (cplx(), cplx(), cplx()).prop_map(|(a, b, c)| CVec3::new(a, b, c))
}

fn small_index() -> impl Strategy<Value = ModeIndex> {
    (-5i32..=5, -5i32..=5).prop_map(|(a, b)| ModeIndex::new(a, b))
}

fn symmetric_pattern(d: &CMat3, tol: f64) -> bool {
    let s = d.norm() * tol;
    (d[(0, 1)] - d[(1, 0)]).norm() <= s && (d[(0, 2)] + d[(2, 0)]).norm() <= s && (d[(1, 2)] + d[(2, 1)]).norm() <= s
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn vertical_wavenumbers_are_consistent((m, _, lat) in setup(), n1 in -50i32..=50, n2 in -50i32..=50) {
        let mode = ModeData::new(&lat, &m, ModeIndex::new(n1, n2));
        prop_assume!(mode.is_ok());
        let mode = mode.unwrap();
        for wave in [1u8, 2] {
            let b = mode.beta(wave);
            prop_assert!(b.re >= 0.0 && b.im >= 0.0);
            prop_assert!((b.re == 0.0) != (b.im == 0.0));
            let k2 = m.kappa(wave).powi(2);
            prop_assert!((b * b + mode.alpha_sq() - k2).norm() <= 1e-12 * k2.max(mode.alpha_sq()));
        }
        let chi = mode.chi.norm();
        prop_assert!(m.kappa1.powi(2) < chi && chi < m.kappa2.powi(2), "chi {chi}");
    }

    #[test]
    fn compressional_set_inside_shear_set((m, _, lat) in setup()) {
        let w = lat.required_window(m.kappa2);
        if let Ok(sets) = propagating_sets(&lat, &m, w) {
            prop_assert!(sets.u1.is_subset(&sets.u2));
            prop_assert!(sets.u2.len() >= sets.u1.len());
        }
    }

    #[test]
    fn coefficient_recovery_round_trip((m, _, lat) in setup(), n in small_index(), v in cvec()) {
        let mode = ModeData::new(&lat, &m, n);
        prop_assume!(mode.is_ok());
        let mode = mode.unwrap();
        let c = helmholtz_coefficients(&mode, &m, v);
        let scale = c.psi.norm() + c.phi.norm();
        prop_assert!(c.divergence(&mode).norm() <= 1e-12 * scale.max(1e-300) * (1.0 + mode.alpha_norm() + mode.beta2.norm()));
        prop_assert!((c.displacement(&mode, 0.0) - v).norm() <= 1e-10 * v.norm().max(1e-300));
    }

    #[test]
    fn dtn_matches_potential_traction((m, _, lat) in setup(), n in small_index(), phi in cplx(), p1 in cplx(), p2 in cplx()) {
        let mode = ModeData::new(&lat, &m, n);
        prop_assume!(mode.is_ok());
        let mode = mode.unwrap();
        let p3 = -(p1 * mode.alpha[0] + p2 * mode.alpha[1]) / mode.beta2;
        let c = PotentialCoefficients { phi, psi: CVec3::new(p1, p2, p3) };
        let v = c.displacement(&mode, 0.0);
        prop_assume!(v.norm() > 1e-6);
        let d = dtn_matrix(&mode, &m).m;
        let t = traction_of_potentials(&mode, &m, &c);
        prop_assert!((t - d * v).norm() <= 1e-10 * d.norm() * v.norm());
        prop_assert!(symmetric_pattern(&d, 1e-12));
    }

    #[test]
    fn dtn_is_linear((m, _, lat) in setup(), u in cvec(), w in cvec(), a in cplx(), b in cplx(), n in small_index()) {
        prop_assume!(ModeData::new(&lat, &m, n).is_ok() && ModeData::new(&lat, &m, ModeIndex::ZERO).is_ok());
        let mut f = FourierVectorField::single(0.5, n, u);
        f.coeffs.insert(ModeIndex::ZERO, w);
        let g = FourierVectorField::single(0.5, ModeIndex::ZERO, u);
        let lhs = apply_dtn(&f.combine(a, &g, b), &lat, &m).unwrap();
        let rhs = apply_dtn(&f, &lat, &m).unwrap().combine(a, &apply_dtn(&g, &lat, &m).unwrap(), b);
        for (k, v) in &lhs.coeffs {
            prop_assert!((v - rhs.coeffs[k]).norm() <= 1e-12 * (1.0 + v.norm()));
        }
    }

    #[test]
    fn pml_closed_form_matches_system(
        (m, _, lat) in setup(),
        n in small_index(),
        delta in 0.2f64..1.0,
        mag in 10.0f64..40.0,
    ) {
        let mode = ModeData::new(&lat, &m, n);
        prop_assume!(mode.is_ok());
        let mode = mode.unwrap();
        let p = PmlProfile::with_magnitude(0.5, delta, mag, 2).unwrap();
        let sys = pml_dtn_from_system(&mode, &p, &m);
        prop_assume!(sys.as_ref().map(|s| s.condition.unwrap() < 1e8).unwrap_or(false));
        let sys = sys.unwrap();
        let cond = sys.condition.unwrap();
        let sys = sys.mhat;
        let cf = pml_dtn_closed_form(&mode, &p, &m, GammaForm::NegEta).unwrap().mhat;
        prop_assert!((sys - cf).norm() <= 1e-9 * sys.norm(), "{}", (sys - cf).norm() / sys.norm());
        prop_assert!(symmetric_pattern(&sys, 1e-14 * cond.max(100.0)));
    }

    #[test]
    fn modeling_constant_monotone_in_zeta(re_sigma in 10.0f64..60.0, extra in 0.0f64..20.0, im_sigma in 10.0f64..60.0) {
        let m = Medium::new(1.0, 2.0, 2.0 * PI).unwrap();
        let inc = Incidence::new(&m, PI / 6.0, PI / 6.0).unwrap();
        let lat = Lattice::unit(&inc);
        let k = |re: f64, im: f64| {
            let p = PmlProfile::new(0.3, 0.5, C64::new(re, im), 2).unwrap();
            modeling_constant_k(&m, &lat, &p, 20).unwrap().k
        };
        // raising Re sigma raises Re zeta only; raising Im sigma raises Im zeta only
        prop_assert!(k(re_sigma + extra, im_sigma) <= k(re_sigma, im_sigma) * (1.0 + 1e-12));
        prop_assert!(k(re_sigma, im_sigma + extra) <= k(re_sigma, im_sigma) * (1.0 + 1e-12));
    }

    #[test]
    fn efficiencies_phase_invariant_and_quadratic(t1 in 0.0f64..1.4, t2 in 0.0f64..(2.0 * PI), arg in 0.0f64..(2.0 * PI), s in 0.1f64..3.0, extra in cvec()) {
        let m = Medium::new(1.0, 2.0, 2.0 * PI).unwrap();
        let inc = Incidence::new(&m, t1, t2).unwrap();
        let lat = Lattice::unit(&inc);
        let ex = exact_flat_solution(&inc, &m).unwrap();
        let mut f = FourierVectorField::single(0.2, ModeIndex::ZERO, ex.reflected([0.0, 0.0, 0.2]));
        f.coeffs.insert(ModeIndex::new(3, -2), extra);
        let zero = C64::new(0.0, 0.0);
        let base = grating_efficiencies(&f, &lat, &m, &inc).unwrap();
        prop_assert!((base.total - 1.0).abs() < 1e-10);
        let rot = grating_efficiencies(&f.combine(C64::from_polar(1.0, arg), &f, zero), &lat, &m, &inc).unwrap();
        let sc = grating_efficiencies(&f.combine(C64::new(s, 0.0), &f, zero), &lat, &m, &inc).unwrap();
        for (k, e) in &base.e1 {
            prop_assert!((rot.e1[k] - e).abs() <= 1e-12);
            prop_assert!((sc.e1[k] - s * s * e).abs() <= 1e-12 * s * s);
        }
        for (k, e) in &base.e2 {
            prop_assert!((rot.e2[k] - e).abs() <= 1e-12);
            prop_assert!((sc.e2[k] - s * s * e).abs() <= 1e-12 * s * s);
        }
        prop_assert!(base.e1.values().chain(base.e2.values()).all(|e| *e >= 0.0));
    }
}

proptest! {
    #![proptest_config(config(16))]

    #[test]
    fn layer_solve_superposition(a in cvec(), b in cvec(), n in small_index()) {
        let m = Medium::new(1.0, 2.0, 2.0 * PI).unwrap();
        let inc = Incidence::new(&m, PI / 6.0, PI / 6.0).unwrap();
        let mode = ModeData::new(&Lattice::unit(&inc), &m, n).unwrap();
        let p = PmlProfile::with_magnitude(0.3, 0.3, 25.39, 2).unwrap();
        let mesh = Mesh1D::uniform(0.3, 0.6, 32).unwrap();
        let z = CVec3::zeros();
        let sa = solve_mode_bvp(&mode, &m, Some(&p), &mesh, a, z).unwrap();
        let sb = solve_mode_bvp(&mode, &m, Some(&p), &mesh, b, z).unwrap();
        let sab = solve_mode_bvp(&mode, &m, Some(&p), &mesh, a + b, z).unwrap();
        for i in 0..sab.values.len() {
            prop_assert!((sab.values[i] - sa.values[i] - sb.values[i]).norm() <= 1e-10 * (1.0 + sab.values[i].norm()));
        }
        let ta = sa.bottom_traction() + sb.bottom_traction();
        prop_assert!((sab.bottom_traction() - ta).norm() <= 1e-10 * ta.norm().max(1.0));
    }
}
