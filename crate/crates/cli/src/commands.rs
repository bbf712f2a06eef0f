//! Subcommand bodies. Each returns its artifacts without touching the disk.

use elastic_grating::bounds::{chi_bounds_check, geometric_points, mode_gap, operator_gap, pml_decay_study};
use elastic_grating::dtn::{dtn_matrix, traction_of_potentials};
use elastic_grating::efficiency::{diffracted_from_total, energy_balance, grating_efficiencies, EfficiencyTable};
use elastic_grating::fields::{exact_flat_solution, FourierVectorField, PotentialCoefficients};
use elastic_grating::modes::{propagating_sets, ModeData, ModeIndex};
use elastic_grating::pml::{pml_dtn_closed_form, pml_dtn_from_system, GammaForm};
use elastic_grating::solver1d::{flat_full_problem, l2_error_vs_exact, pml_convergence_study};
use elastic_grating::solver3d::{
    assemble_system, boundary_mode_coefficients, build_mesh, solve_system, AssemblyOptions, Geometry, Variant,
};
use elastic_grating::{CVec3, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::config::{RunConfig, SolverVariant};
use crate::output::{complex_header, num, push_complex, Artifacts, Table};
use crate::CliError;

/// Maps a library error onto the CLI categories.
fn lib(e: elastic_grating::Error) -> CliError {
    if e.is_input_error() {
        CliError::Config(e.to_string())
    } else {
        CliError::Numerical(e.to_string())
    }
}

fn vec_header(base: &str) -> Vec<String> {
    (1..=3).flat_map(|k| complex_header(&format!("{base}{k}"))).collect()
}

fn push_vec(row: &mut Vec<String>, v: CVec3) {
    for z in v.iter() {
        push_complex(row, *z);
    }
}

fn mode_cols(n: ModeIndex) -> Vec<String> {
    vec![n.n1.to_string(), n.n2.to_string()]
}

fn efficiency_table(t: &EfficiencyTable) -> Table {
    let mut tab = Table::new("efficiencies.csv", ["n1", "n2", "e1", "e2"]);
    for (n, e2) in &t.e2 {
        let mut row = mode_cols(*n);
        row.push(num(t.e1.get(n).copied().unwrap_or(0.0)));
        row.push(num(*e2));
        tab.rows.push(row);
    }
    tab
}

fn order(coarse: (usize, f64), fine: (usize, f64)) -> f64 {
    (coarse.1 / fine.1).ln() / (fine.0 as f64 / coarse.0 as f64).ln()
}

pub fn modes(c: &RunConfig) -> Result<Artifacts, CliError> {
    let mut a = Artifacts::default();
    let mut header = vec!["n1".to_string(), "n2".into(), "alpha1".into(), "alpha2".into()];
    for name in ["beta1", "beta2", "chi"] {
        header.extend(complex_header(name));
    }
    header.extend(["propagating1".to_string(), "propagating2".into()]);
    let mut t = Table::new("modes.csv", header);
    for n in ModeIndex::window(c.window) {
        let m = ModeData::new(&c.lattice, &c.medium, n).map_err(lib)?;
        let mut row = mode_cols(n);
        row.push(num(m.alpha[0]));
        row.push(num(m.alpha[1]));
        for z in [m.beta1, m.beta2, m.chi] {
            push_complex(&mut row, z);
        }
        row.push(m.prop1.to_string());
        row.push(m.prop2.to_string());
        t.rows.push(row);
    }
    let required = c.lattice.required_window(c.medium.kappa2);
    let sets = propagating_sets(&c.lattice, &c.medium, c.window.max(required)).map_err(lib)?;
    a.result("kappa1", c.medium.kappa1);
    a.result("kappa2", c.medium.kappa2);
    a.result("propagating_compressional", sets.u1.len());
    a.result("propagating_shear", sets.u2.len());
    a.report.push(format!(
        "{} modes; {} compressional and {} shear propagating",
        t.rows.len(),
        sets.u1.len(),
        sets.u2.len()
    ));
    a.tables.push(t);
    Ok(a)
}

pub fn exact(c: &RunConfig) -> Result<Artifacts, CliError> {
    let mut a = Artifacts::default();
    let ex = exact_flat_solution(&c.incidence, &c.medium).map_err(lib)?;
    let trace = FourierVectorField::single(c.h, ModeIndex::ZERO, ex.reflected([0.0, 0.0, c.h]));
    let eff = grating_efficiencies(&trace, &c.lattice, &c.medium, &c.incidence).map_err(lib)?;
    let dev = energy_balance(&eff);

    let mut coeffs = Table::new("coefficients.csv", ["name", "re", "im"]);
    let named = [("a", ex.a), ("b1", ex.b[0]), ("b2", ex.b[1]), ("b3", ex.b[2])];
    for (name, z) in named {
        coeffs.rows.push(vec![name.into(), num(z.re), num(z.im)]);
    }
    let mut header = vec!["x3".to_string()];
    header.extend(vec_header("u"));
    let mut profile = Table::new("profile.csv", header);
    for k in 0..=20 {
        let x3 = c.h * k as f64 / 20.0;
        let mut row = vec![num(x3)];
        push_vec(&mut row, ex.eval([0.0, 0.0, x3]));
        profile.rows.push(row);
    }

    a.result("energy_deviation", dev);
    a.result("total_efficiency", eff.total);
    a.report.push(format!("total efficiency {}, deviation {:.3e}", num(eff.total), dev));
    a.tables.push(efficiency_table(&eff));
    a.tables.push(coeffs);
    a.tables.push(profile);
    Ok(a)
}

pub fn dtn_check(c: &RunConfig) -> Result<Artifacts, CliError> {
    let mut a = Artifacts::default();
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    let mut rc = move || C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    let mut t = Table::new("dtn_check.csv", ["n1", "n2", "max_relative_residual"]);
    let mut worst: f64 = 0.0;
    for n in ModeIndex::window(c.window) {
        let mode = ModeData::new(&c.lattice, &c.medium, n).map_err(lib)?;
        let d = dtn_matrix(&mode, &c.medium).m;
        let mut local: f64 = 0.0;
        for _ in 0..c.samples {
            let (p1, p2) = (rc(), rc());
            let p3 = -(p1 * mode.alpha[0] + p2 * mode.alpha[1]) / mode.beta2;
            let pc = PotentialCoefficients {
                phi: rc(),
                psi: CVec3::new(p1, p2, p3),
            };
            let v = pc.displacement(&mode, 0.0);
            let tr = traction_of_potentials(&mode, &c.medium, &pc);
            local = local.max((tr - d * v).norm() / v.norm());
        }
        worst = worst.max(local);
        let mut row = mode_cols(n);
        row.push(num(local));
        t.rows.push(row);
    }
    a.result("max_relative_residual", worst);
    a.report.push(format!("max DtN consistency residual {worst:.3e}"));
    if worst > c.check_tol {
        a.violation = Some(format!("DtN residual {worst:.3e} exceeds check.tol {:.3e}", c.check_tol));
    }
    a.tables.push(t);
    Ok(a)
}

pub fn pml_check(c: &RunConfig) -> Result<Artifacts, CliError> {
    let mut a = Artifacts::default();
    let mut t = Table::new(
        "pml_check.csv",
        ["n1", "n2", "condition", "gap_gamma_neg_eta", "gap_gamma_literal"],
    );
    let mut worst: f64 = 0.0;
    let mut worst_literal: f64 = 0.0;
    for n in ModeIndex::window(c.window) {
        let mode = ModeData::new(&c.lattice, &c.medium, n).map_err(lib)?;
        let sys = pml_dtn_from_system(&mode, &c.profile, &c.medium).map_err(lib)?;
        let gap = |form| -> Result<f64, CliError> {
            let cf = pml_dtn_closed_form(&mode, &c.profile, &c.medium, form).map_err(lib)?;
            Ok((sys.mhat - cf.mhat).norm() / sys.mhat.norm())
        };
        let (g, gl) = (gap(GammaForm::NegEta)?, gap(GammaForm::Literal)?);
        worst = worst.max(g);
        worst_literal = worst_literal.max(gl);
        let mut row = mode_cols(n);
        row.push(num(sys.condition.unwrap_or(f64::NAN)));
        row.push(num(g));
        row.push(num(gl));
        t.rows.push(row);
    }
    a.result("max_discrepancy", worst);
    a.result("max_discrepancy_literal_gamma", worst_literal);
    a.report.push(format!("max cross-check discrepancy: {worst:.3e}"));
    a.report.push(format!("with literal gamma: {worst_literal:.3e}"));
    if worst > c.check_tol {
        a.violation = Some(format!("closed form differs by {worst:.3e}, above check.tol {:.3e}", c.check_tol));
    }
    a.tables.push(t);
    Ok(a)
}

pub fn bounds(c: &RunConfig) -> Result<Artifacts, CliError> {
    let mut a = Artifacts::default();
    let r = operator_gap(&c.lattice, &c.medium, &c.profile, c.window, c.surface_max, c.gamma1).map_err(lib)?;
    let chi = chi_bounds_check(&c.lattice, &c.medium, c.window).map_err(lib)?;
    let mut t = Table::new("gap_by_mode.csv", ["n1", "n2", "gap"]);
    for n in ModeIndex::window(c.window) {
        let mode = ModeData::new(&c.lattice, &c.medium, n).map_err(lib)?;
        let mut row = mode_cols(n);
        row.push(num(mode_gap(&mode, &c.medium, &c.profile).map_err(lib)?));
        t.rows.push(row);
    }
    a.result(
        "gap_report",
        json!({
            "k": r.k,
            "khat": r.khat,
            "khat_mu_squared": r.khat_mu_squared,
            "gamma2": r.gamma2,
            "worst_gap": r.worst_gap,
            "worst_mode": [r.worst_mode.n1, r.worst_mode.n2],
            "bound_satisfied": r.bound_satisfied,
            "assumed_gamma1": r.assumed_gamma1,
            "condition_margin": r.condition_margin,
            "smallness_violated": r.smallness_violated,
        }),
    );
    a.result("chi_violations", chi.len());
    a.report.push(format!(
        "sup gap {:.3e} at {} vs K_hat {:.3e}: {}",
        r.worst_gap,
        r.worst_mode,
        r.khat,
        if r.bound_satisfied { "bound holds" } else { "BOUND VIOLATED" }
    ));
    if r.smallness_violated {
        a.report.push("note: K exceeds kappa1^2 / 2, the stability estimate does not apply".into());
    }
    if !r.bound_satisfied {
        a.violation = Some(format!("sup gap {:.3e} exceeds K_hat {:.3e}", r.worst_gap, r.khat));
    } else if !chi.is_empty() {
        a.violation = Some(format!("{} modes violate kappa1^2 < |chi| < kappa2^2", chi.len()));
    }
    a.tables.push(t);
    Ok(a)
}

pub fn solve1d(c: &RunConfig) -> Result<Artifacts, CliError> {
    let mut a = Artifacts::default();
    let ex = exact_flat_solution(&c.incidence, &c.medium).map_err(lib)?;
    let sol = flat_full_problem(&c.incidence, &c.medium, &c.profile, c.elements).map_err(lib)?;
    let mut header = vec!["x3".to_string()];
    header.extend(vec_header("u"));
    header.extend(vec_header("exact"));
    let mut t = Table::new("solution.csv", header);
    for (x3, u) in sol.nodes.iter().zip(&sol.values) {
        let mut row = vec![num(*x3)];
        push_vec(&mut row, *u);
        // the exact field is only defined in the physical domain
        let e = if *x3 <= c.h { ex.eval([0.0, 0.0, *x3]) } else { CVec3::from_element(C64::new(f64::NAN, f64::NAN)) };
        push_vec(&mut row, e);
        t.rows.push(row);
    }
    let err = l2_error_vs_exact(&sol, &ex, c.h);

    let mut conv = Table::new("convergence.csv", ["elements", "l2_error", "order"]);
    let mut prev: Option<(usize, f64)> = None;
    for &e in &c.refinements {
        let s = flat_full_problem(&c.incidence, &c.medium, &c.profile, e).map_err(lib)?;
        let cur = (e, l2_error_vs_exact(&s, &ex, c.h));
        let ord = prev.map(|p| num(order(p, cur))).unwrap_or_default();
        conv.rows.push(vec![e.to_string(), num(cur.1), ord]);
        prev = Some(cur);
    }
    if !matches!(c.geometry, Geometry::Flat) {
        a.report.push("note: the per-mode solver treats the surface as flat".into());
    }
    a.result("l2_error", err);
    a.result("residual", sol.residual);
    a.report.push(format!("{} elements: relative L2 error {err:.3e}", c.elements));
    a.tables.push(t);
    a.tables.push(conv);
    Ok(a)
}

pub fn solve3d(c: &RunConfig) -> Result<Artifacts, CliError> {
    let mut a = Artifacts::default();
    let (variant, delta) = match c.variant {
        SolverVariant::Pml => (Variant::Pml(c.profile), Some(c.profile.delta)),
        SolverVariant::Dtn => (Variant::Dtn { truncation: c.truncation }, None),
    };
    let mesh = build_mesh(&c.geometry, &c.lattice, c.h, delta, c.resolution).map_err(lib)?;
    let sys = assemble_system(&mesh, &c.medium, &c.incidence, &variant, &AssemblyOptions::default()).map_err(lib)?;
    let (field, rep) = solve_system(&sys, c.tol, c.max_iter).map_err(lib)?;
    let total = boundary_mode_coefficients(&field, &c.lattice, c.window).map_err(lib)?;
    let diffracted = diffracted_from_total(&total, &c.incidence, &c.medium);
    let eff = grating_efficiencies(&diffracted, &c.lattice, &c.medium, &c.incidence).map_err(lib)?;
    let dev = energy_balance(&eff);

    let mut header = vec!["n1".to_string(), "n2".into()];
    header.extend(vec_header("v"));
    let mut coeffs = Table::new("coefficients.csv", header);
    for (n, v) in &diffracted.coeffs {
        let mut row = mode_cols(*n);
        push_vec(&mut row, *v);
        coeffs.rows.push(row);
    }
    let mut hist = Table::new("residual_history.csv", ["iteration", "relative_residual"]);
    for (i, r) in rep.history.iter().enumerate() {
        hist.rows.push(vec![i.to_string(), num(*r)]);
    }

    if matches!(c.geometry, Geometry::Flat) {
        let ex = exact_flat_solution(&c.incidence, &c.medium).map_err(lib)?;
        let err = field.l2_error(&|x| ex.eval(x), c.h).map_err(lib)?;
        a.result("l2_error", err);
        a.report.push(format!("relative L2 error against the flat exact solution {err:.3e}"));
    }
    if c.dump_field {
        let mut buf = Vec::new();
        field.dump(&mut buf).map_err(|e| CliError::Io(e.to_string()))?;
        a.texts.push(("field.txt".into(), buf));
    }
    a.result("method", rep.method.clone());
    a.result("iterations", rep.iterations);
    a.result("residual", rep.residual);
    a.result("unknowns", rep.unknowns);
    a.result("energy_deviation", dev);
    a.result("total_efficiency", eff.total);
    a.report.push(format!(
        "{}: {} unknowns, {} iterations, residual {:.3e}, {:.2}s; energy deviation {:.3e}",
        rep.method, rep.unknowns, rep.iterations, rep.residual, rep.wall_time, dev
    ));
    a.tables.push(efficiency_table(&eff));
    a.tables.push(coeffs);
    a.tables.push(hist);
    Ok(a)
}

pub fn sweep(c: &RunConfig) -> Result<Artifacts, CliError> {
    let mut a = Artifacts::default();
    let rows = pml_convergence_study(&c.incidence, &c.medium, &c.profile, &c.scalings, c.elements).map_err(lib)?;
    let mut header = vec!["scale".to_string()];
    header.extend(complex_header("zeta"));
    header.push("l2_error".into());
    let mut t = Table::new("sweep_sigma.csv", header);
    for r in &rows {
        let mut row = vec![num(r.scale)];
        push_complex(&mut row, r.zeta);
        row.push(num(r.error));
        t.rows.push(row);
    }
    a.tables.push(t);

    let magnitudes = if c.magnitudes.is_empty() {
        let top = c.profile.sigma.norm() / std::f64::consts::SQRT_2;
        geometric_points(top / 8.0, top, 6)
    } else {
        c.magnitudes.clone()
    };
    if magnitudes.len() >= 2 {
        let st = pml_decay_study(
            &c.lattice,
            &c.medium,
            c.h,
            c.profile.delta,
            c.profile.degree,
            &magnitudes,
            c.window,
        )
        .map_err(lib)?;
        let mut header = Vec::new();
        header.extend(complex_header("sigma"));
        header.extend(complex_header("zeta"));
        header.extend(["sup_gap".to_string(), "worst_n1".into(), "worst_n2".into()]);
        let mut g = Table::new("sweep_gap.csv", header);
        for r in &st.rows {
            let mut row = Vec::new();
            push_complex(&mut row, r.sigma);
            push_complex(&mut row, r.zeta);
            row.push(num(r.worst_gap));
            row.extend(mode_cols(r.worst_mode));
            g.rows.push(row);
        }
        a.tables.push(g);
        let fit = |f: &elastic_grating::bounds::LinearFit| json!({"slope": f.slope, "intercept": f.intercept, "r_squared": f.r_squared});
        a.result("fit_log_gap_vs_im_zeta", fit(&st.fit_im));
        a.result("fit_log_gap_vs_re_zeta", fit(&st.fit_re));
        a.report.push(format!(
            "ln sup gap vs Im zeta: slope {:.4}, R^2 {:.6}",
            st.fit_im.slope, st.fit_im.r_squared
        ));
    }
    for r in &rows {
        a.report.push(format!("sigma x {}: L2 error {:.3e}", r.scale, r.error));
    }
    Ok(a)
}
