//! Per-mode finite elements in the vertical direction.
//!
//! For a fixed tangential dependence the stretched Navier system reduces to
//! a 3-component ODE in `x3`. It is discretized with linear elements in the
//! weak form
//!
//! `b(u, v) = int rho [ mu G u : G v* + (lambda + mu) (G . u)(G . v*) - omega^2 u . v* ]`
//!
//! with `G = (d1, d2, rho^{-1} d3)`. The tangential derivatives enter
//! through [`PlaneSymbols`], so the same assembly serves exact Fourier
//! modes and the discrete in-plane symbols of the 3D Fourier
//! preconditioner.

use num_complex::Complex64;

use crate::dtn::incident_trace;
use crate::error::{Error, Result};
use crate::fields::{ExactFlatSolution, incident_field};
use crate::linalg::BlockTridiag;
use crate::modes::{Incidence, Medium, ModeData};
use crate::par;
use crate::pml::PmlProfile;
use crate::{CMat3, CVec3, C64};

const I: C64 = Complex64::new(0.0, 1.0);

/// Gauss-Legendre points and weights on `[0, 1]`.
pub fn gauss_rule(points: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    match points {
        1 => Ok((vec![0.5], vec![1.0])),
        2 => {
            let d = 0.5 / 3f64.sqrt();
            Ok((vec![0.5 - d, 0.5 + d], vec![0.5, 0.5]))
        }
        3 => {
            let d = 0.5 * 0.6f64.sqrt();
            Ok((vec![0.5 - d, 0.5, 0.5 + d], vec![5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0]))
        }
        _ => Err(Error::Domain(format!("unsupported Gauss rule with {points} points"))),
    }
}

/// Nodes of a 1D mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh1D {
    pub nodes: Vec<f64>,
}

impl Mesh1D {
    pub fn new(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::Mesh("need at least one element".into()));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Mesh("nodes must be strictly increasing".into()));
        }
        Ok(Self { nodes })
    }

    pub fn uniform(lo: f64, hi: f64, elements: usize) -> Result<Self> {
        if elements == 0 || !(hi > lo) {
            return Err(Error::Mesh(format!("bad uniform mesh [{lo}, {hi}] with {elements} elements")));
        }
        let h = (hi - lo) / elements as f64;
        let mut nodes: Vec<f64> = (0..=elements).map(|k| lo + h * k as f64).collect();
        nodes[elements] = hi;
        Self::new(nodes)
    }

    pub fn elements(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn lo(&self) -> f64 {
        self.nodes[0]
    }

    pub fn hi(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }
}

/// Tangential factors of the bilinear form for one in-plane Fourier symbol.
///
/// `mass[k]`, `stiff[k]`, `d_trial[k]`, `d_test[k]` are the direction-`k`
/// symbols of `int f g`, `int f' g'`, `int f' g` (trial differentiated) and
/// `int f g'` (test differentiated).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneSymbols {
    pub mass: [f64; 2],
    pub stiff: [f64; 2],
    pub d_trial: [C64; 2],
    pub d_test: [C64; 2],
}

impl PlaneSymbols {
    /// Exact symbols of `e^{i alpha . r}` per unit area.
    pub fn continuous(alpha: [f64; 2]) -> Self {
        Self {
            mass: [1.0, 1.0],
            stiff: [alpha[0] * alpha[0], alpha[1] * alpha[1]],
            d_trial: [I * alpha[0], I * alpha[1]],
            d_test: [-I * alpha[0], -I * alpha[1]],
        }
    }

    /// Symbols of piecewise-linear elements of width `h[k]` on a uniform
    /// periodic grid, for the Bloch wave number `xi[k]`.
    pub fn discrete(xi: [f64; 2], h: [f64; 2]) -> Self {
        let f = |k: usize| {
            let t = xi[k] * h[k];
            let (s, c) = t.sin_cos();
            (h[k] * (4.0 + 2.0 * c) / 6.0, (2.0 - 2.0 * c) / h[k], s)
        };
        let (m1, s1, n1) = f(0);
        let (m2, s2, n2) = f(1);
        Self {
            mass: [m1, m2],
            stiff: [s1, s2],
            d_trial: [I * n1, I * n2],
            d_test: [-I * n1, -I * n2],
        }
    }
}

/// Medium profile value, one outside any PML.
pub fn rho_at(profile: Option<&PmlProfile>, x3: f64) -> C64 {
    profile.map_or(C64::new(1.0, 0.0), |p| p.rho(x3))
}

/// Element integrals of products of the two linear shape functions.
#[derive(Debug, Clone, Copy)]
struct ElementIntegrals {
    rho_nn: [[C64; 2]; 2],
    rinv_dd: [[C64; 2]; 2],
    /// `int N_a N_b'`
    n_d: [[f64; 2]; 2],
    /// `int N_a' N_b`
    d_n: [[f64; 2]; 2],
}

fn element_integrals(x0: f64, x1: f64, profile: Option<&PmlProfile>, rule: &(Vec<f64>, Vec<f64>)) -> ElementIntegrals {
    let len = x1 - x0;
    let dn = [-1.0 / len, 1.0 / len];
    let z = C64::new(0.0, 0.0);
    let mut rho_nn = [[z; 2]; 2];
    let mut rinv_dd = [[z; 2]; 2];
    let mut n_d = [[0.0; 2]; 2];
    let mut d_n = [[0.0; 2]; 2];
    for (t, w) in rule.0.iter().zip(&rule.1) {
        let n = [1.0 - t, *t];
        let wl = w * len;
        let r = rho_at(profile, x0 + t * len);
        let ri = 1.0 / r;
        for a in 0..2 {
            for b in 0..2 {
                rho_nn[a][b] += r * (wl * n[a] * n[b]);
                rinv_dd[a][b] += ri * (wl * dn[a] * dn[b]);
                n_d[a][b] += wl * n[a] * dn[b];
                d_n[a][b] += wl * dn[a] * n[b];
            }
        }
    }
    ElementIntegrals { rho_nn, rinv_dd, n_d, d_n }
}

/// 3x3 coupling block between test node `a` and trial node `b` of one element.
fn element_block(s: &PlaneSymbols, medium: &Medium, e: &ElementIntegrals, a: usize, b: usize) -> CMat3 {
    let (mu, lm) = (medium.mu, medium.lambda + medium.mu);
    let w2 = medium.omega * medium.omega;
    let [m1, m2] = s.mass;
    let [s1, s2] = s.stiff;
    let [t1, t2] = s.d_trial;
    let [u1, u2] = s.d_test;
    let rnn = e.rho_nn[a][b];
    let mm = m1 * m2;
    let diag = mu * ((s1 * m2 + m1 * s2) * rnn + mm * e.rinv_dd[a][b]) - w2 * mm * rnn;
    let nd = e.n_d[a][b];
    let dn = e.d_n[a][b];
    let mut k = CMat3::from_diagonal_element(diag);
    k[(0, 0)] += lm * s1 * m2 * rnn;
    k[(1, 1)] += lm * m1 * s2 * rnn;
    k[(0, 1)] += lm * u1 * t2 * rnn;
    k[(1, 0)] += lm * t1 * u2 * rnn;
    k[(0, 2)] += lm * u1 * m2 * nd;
    k[(2, 0)] += lm * t1 * m2 * dn;
    k[(1, 2)] += lm * m1 * u2 * nd;
    k[(2, 1)] += lm * m1 * t2 * dn;
    k[(2, 2)] += lm * mm * e.rinv_dd[a][b];
    k
}

/// Assembles the vertical operator over all mesh nodes (no boundary conditions).
pub fn assemble_vertical(
    symbols: &PlaneSymbols,
    medium: &Medium,
    profile: Option<&PmlProfile>,
    nodes: &[f64],
    gauss_points: usize,
) -> Result<BlockTridiag> {
    let rule = gauss_rule(gauss_points)?;
    let n = nodes.len();
    let mut t = BlockTridiag::zeros(n);
    for e in 0..n.saturating_sub(1) {
        let ints = element_integrals(nodes[e], nodes[e + 1], profile, &rule);
        t.diag[e] += element_block(symbols, medium, &ints, 0, 0);
        t.diag[e + 1] += element_block(symbols, medium, &ints, 1, 1);
        t.upper[e] += element_block(symbols, medium, &ints, 0, 1);
        t.lower[e] += element_block(symbols, medium, &ints, 1, 0);
    }
    Ok(t)
}

/// Right-hand side of a per-mode problem.
pub enum Load<'a> {
    None,
    /// `L u = f`: contributes `-int rho f . N_i`.
    Source(&'a (dyn Fn(f64) -> CVec3 + Sync)),
    /// `b(w, N_i)` for a field `w` given by value and `x3`-derivative of its
    /// mode coefficient.
    Field(&'a (dyn Fn(f64) -> (CVec3, CVec3) + Sync)),
}

/// Per-mode Dirichlet problem on an interval.
#[derive(Debug, Clone)]
pub struct ModeBvp {
    pub alpha: [f64; 2],
    pub medium: Medium,
    pub profile: Option<PmlProfile>,
    pub mesh: Mesh1D,
    pub bc_lo: CVec3,
    pub bc_hi: CVec3,
    pub gauss_points: usize,
}

/// Nodal solution of a [`ModeBvp`].
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSolution {
    pub nodes: Vec<f64>,
    pub values: Vec<CVec3>,
    /// Relative residual of the reduced system at the computed solution.
    pub residual: f64,
    pub pivot_condition: f64,
    /// Full assembled operator (all nodes), kept for flux extraction.
    pub operator: BlockTridiag,
    /// Full load vector (all nodes).
    pub load: Vec<CVec3>,
}

impl ModeSolution {
    /// Linear interpolation of the nodal values.
    pub fn eval(&self, x3: f64) -> CVec3 {
        let k = match self.nodes.iter().position(|&x| x >= x3) {
            Some(0) => return self.values[0],
            Some(k) => k,
            None => return self.values[self.values.len() - 1],
        };
        let (x0, x1) = (self.nodes[k - 1], self.nodes[k]);
        let t = (x3 - x0) / (x1 - x0);
        self.values[k - 1].scale(1.0 - t) + self.values[k].scale(t)
    }

    /// Weak-form traction at the bottom node, `D u = -(b(u, N_0) - load_0)`.
    pub fn bottom_traction(&self) -> CVec3 {
        let k = &self.operator;
        let mut r = k.diag[0] * self.values[0] - self.load[0];
        if k.len() > 1 {
            r += k.upper[0] * self.values[1];
        }
        -r
    }
}

impl ModeBvp {
    pub fn new(mode: &ModeData, medium: &Medium, profile: Option<&PmlProfile>, mesh: Mesh1D, bc_lo: CVec3, bc_hi: CVec3) -> Self {
        Self {
            alpha: mode.alpha,
            medium: *medium,
            profile: profile.copied(),
            mesh,
            bc_lo,
            bc_hi,
            gauss_points: 3,
        }
    }

    fn load_vector(&self, load: &Load) -> Result<Vec<CVec3>> {
        let nodes = &self.mesh.nodes;
        let mut f = vec![CVec3::zeros(); nodes.len()];
        if matches!(load, Load::None) {
            return Ok(f);
        }
        let rule = gauss_rule(self.gauss_points)?;
        let p = self.profile.as_ref();
        let (mu, lm) = (self.medium.mu, self.medium.lambda + self.medium.mu);
        let w2 = self.medium.omega * self.medium.omega;
        let [a1, a2] = self.alpha;
        for e in 0..self.mesh.elements() {
            let (x0, x1) = (nodes[e], nodes[e + 1]);
            let len = x1 - x0;
            let dn = [-1.0 / len, 1.0 / len];
            for (t, w) in rule.0.iter().zip(&rule.1) {
                let x = x0 + t * len;
                let n = [1.0 - t, *t];
                let r = rho_at(p, x);
                let wl = w * len;
                match load {
                    Load::None => {}
                    Load::Source(src) => {
                        let s = src(x) * (-r * wl);
                        for a in 0..2 {
                            f[e + a] += s.scale(n[a]);
                        }
                    }
                    Load::Field(field) => {
                        let (v, dv) = field(x);
                        // trial gradient rows: G_k v
                        let g = [v * (I * a1), v * (I * a2), dv / r];
                        let div = g[0][0] + g[1][1] + g[2][2];
                        for a in 0..2 {
                            // conjugated test gradient of N_a e^{i alpha . r}
                            let tg = [-I * a1 * n[a], -I * a2 * n[a], C64::from(dn[a]) / r];
                            for c in 0..3 {
                                let mut s = C64::new(0.0, 0.0);
                                for k in 0..3 {
                                    s += mu * g[k][c] * tg[k];
                                }
                                s += lm * div * tg[c] - w2 * v[c] * n[a];
                                f[e + a][c] += s * r * wl;
                            }
                        }
                    }
                }
            }
        }
        Ok(f)
    }

    /// Solves with the given load.
    pub fn solve_with(&self, load: &Load) -> Result<ModeSolution> {
        let symbols = PlaneSymbols::continuous(self.alpha);
        let nodes = &self.mesh.nodes;
        let n = nodes.len();
        let op = assemble_vertical(&symbols, &self.medium, self.profile.as_ref(), nodes, self.gauss_points)?;
        let load_full = self.load_vector(load)?;
        let mut values = vec![CVec3::zeros(); n];
        values[0] = self.bc_lo;
        values[n - 1] = self.bc_hi;
        if n == 2 {
            return Ok(ModeSolution {
                nodes: nodes.clone(),
                values,
                residual: 0.0,
                pivot_condition: 1.0,
                operator: op,
                load: load_full,
            });
        }
        // interior system with lifted Dirichlet data
        let m = n - 2;
        let mut inner = BlockTridiag::zeros(m);
        inner.diag.copy_from_slice(&op.diag[1..n - 1]);
        inner.lower.copy_from_slice(&op.lower[1..n - 2]);
        inner.upper.copy_from_slice(&op.upper[1..n - 2]);
        let mut rhs: Vec<CVec3> = load_full[1..n - 1].to_vec();
        rhs[0] -= op.lower[0] * self.bc_lo;
        rhs[m - 1] -= op.upper[n - 2] * self.bc_hi;
        let lu = inner.factor()?;
        let x = lu.solve(&rhs);
        let ax = inner.matvec(&x);
        let rn: f64 = rhs.iter().map(|v| v.norm_squared()).sum::<f64>().sqrt();
        let en: f64 = ax.iter().zip(&rhs).map(|(a, b)| (a - b).norm_squared()).sum::<f64>().sqrt();
        values[1..n - 1].copy_from_slice(&x);
        Ok(ModeSolution {
            nodes: nodes.clone(),
            values,
            residual: if rn > 0.0 { en / rn } else { en },
            pivot_condition: lu.pivot_condition,
            operator: op,
            load: load_full,
        })
    }

    pub fn solve(&self) -> Result<ModeSolution> {
        self.solve_with(&Load::None)
    }
}

/// Solves the homogeneous per-mode problem with Dirichlet data at both ends.
pub fn solve_mode_bvp(
    mode: &ModeData,
    medium: &Medium,
    profile: Option<&PmlProfile>,
    mesh: &Mesh1D,
    bc_lo: CVec3,
    bc_hi: CVec3,
) -> Result<ModeSolution> {
    ModeBvp::new(mode, medium, profile, mesh.clone(), bc_lo, bc_hi).solve()
}

/// PML boundary matrix of one mode from layer solves on `elements` elements.
pub fn layer_dtn_numeric(mode: &ModeData, medium: &Medium, profile: &PmlProfile, elements: usize) -> Result<CMat3> {
    let mesh = Mesh1D::uniform(profile.h, profile.top(), elements)?;
    let mut out = CMat3::zeros();
    for k in 0..3 {
        let mut e = CVec3::zeros();
        e[k] = C64::new(1.0, 0.0);
        let sol = solve_mode_bvp(mode, medium, Some(profile), &mesh, e, CVec3::zeros())?;
        out.set_column(k, &sol.bottom_traction());
    }
    Ok(out)
}

/// Flat-surface total-field problem for mode zero on `[0, h + delta]`.
///
/// The field vanishes at `x3 = 0`, equals the incident wave at the top, and
/// the load is `b(u_inc, N_i)`, which equals the stretched operator applied
/// to the incident wave inside the layer.
pub fn flat_full_problem(incidence: &Incidence, medium: &Medium, profile: &PmlProfile, elements: usize) -> Result<ModeSolution> {
    let mode = ModeData::from_wave_vector(crate::modes::ModeIndex::ZERO, incidence.alpha, medium)?;
    let top = profile.top();
    let mesh = Mesh1D::uniform(0.0, top, elements)?;
    let bvp = ModeBvp::new(&mode, medium, Some(profile), mesh, CVec3::zeros(), incident_trace(incidence, medium, top));
    let beta = incidence.beta;
    let field = move |x: f64| {
        let v = incident_field(incidence, medium, [0.0, 0.0, x]);
        (v, v * (-I * beta))
    };
    bvp.solve_with(&Load::Field(&field))
}

/// Relative `L^2(0, upto)` error of a mode-zero solution against the exact
/// flat solution, by 3-point Gauss on each element below `upto`.
pub fn l2_error_vs_exact(sol: &ModeSolution, exact: &ExactFlatSolution, upto: f64) -> f64 {
    let rule = gauss_rule(3).expect("3-point rule");
    let (mut err, mut norm) = (0.0, 0.0);
    for e in 0..sol.nodes.len() - 1 {
        let (x0, x1) = (sol.nodes[e], sol.nodes[e + 1]);
        if x0 >= upto - 1e-12 {
            break;
        }
        let x1c = x1.min(upto);
        let len = x1c - x0;
        for (t, w) in rule.0.iter().zip(&rule.1) {
            let x = x0 + t * len;
            let u = exact.eval([0.0, 0.0, x]);
            err += w * len * (sol.eval(x) - u).norm_squared();
            norm += w * len * u.norm_squared();
        }
    }
    (err / norm).sqrt()
}

/// One row of a PML parameter study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudyRow {
    pub scale: f64,
    pub zeta: C64,
    pub error: f64,
}

/// Solves the flat full problem with `sigma` scaled by each entry of
/// `scalings` and reports the `L^2(0, h)` error against the exact solution.
pub fn pml_convergence_study(
    incidence: &Incidence,
    medium: &Medium,
    base: &PmlProfile,
    scalings: &[f64],
    elements: usize,
) -> Result<Vec<StudyRow>> {
    let exact = crate::fields::exact_flat_solution(incidence, medium)?;
    par::map_slice(scalings, |&s| {
        let p = base.scaled(s)?;
        let sol = flat_full_problem(incidence, medium, &p, elements)?;
        Ok(StudyRow {
            scale: s,
            zeta: p.zeta(),
            error: l2_error_vs_exact(&sol, &exact, p.h),
        })
    })
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::exact_flat_solution;
    use crate::fields::tests::{ex1, rand_c};
    use crate::modes::{Lattice, ModeIndex};
    use crate::pml::{example_profile, layer_system, pml_dtn_from_system};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn order(e: &[f64]) -> Vec<f64> {
        e.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
    }

    #[test]
    fn homogeneous_data_gives_zero() {
        let (m, _, lat) = ex1();
        let mode = ModeData::new(&lat, &m, ModeIndex::ZERO).unwrap();
        let mesh = Mesh1D::uniform(0.0, 0.6, 40).unwrap();
        let s = solve_mode_bvp(&mode, &m, Some(&example_profile()), &mesh, CVec3::zeros(), CVec3::zeros()).unwrap();
        assert!(s.values.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn mesh_validation() {
        assert!(Mesh1D::new(vec![0.0, 0.5, 0.5]).is_err());
        assert!(Mesh1D::uniform(1.0, 0.0, 4).is_err());
        assert_eq!(Mesh1D::uniform(0.0, 1.0, 4).unwrap().elements(), 4);
    }

    #[test]
    fn layer_dtn_converges_at_second_order() {
        let (m, _, lat) = ex1();
        let p = example_profile();
        let mode = ModeData::new(&lat, &m, ModeIndex::ZERO).unwrap();
        let exact = pml_dtn_from_system(&mode, &p, &m).unwrap().mhat;
        let errs: Vec<f64> = [64, 128, 256]
            .iter()
            .map(|&e| (layer_dtn_numeric(&mode, &m, &p, e).unwrap() - exact).norm() / exact.norm())
            .collect();
        for o in order(&errs) {
            assert!((o - 2.0).abs() < 0.3, "{errs:?}");
        }
    }

    #[test]
    fn layer_solution_matches_analytic() {
        let (m, _, lat) = ex1();
        let p = example_profile();
        let mode = ModeData::new(&lat, &m, ModeIndex::new(1, 0)).unwrap();
        let v = CVec3::new(C64::new(1.0, 0.2), C64::new(-0.5, 0.0), C64::new(0.1, 0.7));
        let analytic = layer_system(&mode, &p).solve(v).unwrap();
        let mut errs = Vec::new();
        for e in [64, 128] {
            let mesh = Mesh1D::uniform(p.h, p.top(), e).unwrap();
            let s = solve_mode_bvp(&mode, &m, Some(&p), &mesh, v, CVec3::zeros()).unwrap();
            let err = s
                .nodes
                .iter()
                .zip(&s.values)
                .map(|(x, u)| (u - analytic.displacement(&p, *x)).norm())
                .fold(0.0, f64::max);
            errs.push(err);
        }
        assert!(errs[1] < 0.35 * errs[0] && errs[1] < 1e-2, "{errs:?}");
    }

    #[test]
    fn superposition_in_bottom_data() {
        let (m, _, lat) = ex1();
        let p = example_profile();
        let mode = ModeData::new(&lat, &m, ModeIndex::new(0, 1)).unwrap();
        let mesh = Mesh1D::uniform(p.h, p.top(), 64).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let mut rv = || CVec3::new(rand_c(&mut rng), rand_c(&mut rng), rand_c(&mut rng));
        let (a, b) = (rv(), rv());
        let t = |v: CVec3| solve_mode_bvp(&mode, &m, Some(&p), &mesh, v, CVec3::zeros()).unwrap().bottom_traction();
        let sum = t(a + b * C64::new(0.5, -2.0));
        let parts = t(a) + t(b) * C64::new(0.5, -2.0);
        assert!((sum - parts).norm() < 1e-11 * sum.norm());
    }

    #[test]
    fn residual_is_small() {
        let (m, inc, _) = ex1();
        let s = flat_full_problem(&inc, &m, &example_profile(), 96).unwrap();
        assert!(s.residual < 1e-10, "{}", s.residual);
    }

    #[test]
    fn manufactured_solution_second_order() {
        let (m, _, lat) = ex1();
        let mode = ModeData::new(&lat, &m, ModeIndex::new(1, -1)).unwrap();
        let p = PmlProfile::with_magnitude(0.2, 0.4, 3.0, 2).unwrap();
        let (lo, hi) = (0.0, 0.6);
        let [a1, a2] = mode.alpha;
        let u = |x: f64| {
            CVec3::new(
                C64::new((3.0 * x).sin(), x * x),
                C64::new(x.cos(), -(2.0 * x).sin()),
                C64::new(x * (1.0 - x), 0.5 * x.exp()),
            )
        };
        // stretched operator by nested central differences
        let hd = 1e-4;
        let d = |f: &dyn Fn(f64) -> CVec3, x: f64| (f(x + hd) - f(x - hd)).unscale(2.0 * hd);
        let du_hat = |x: f64| d(&u, x) / p.rho(x);
        let div = |x: f64| I * a1 * u(x)[0] + I * a2 * u(x)[1] + du_hat(x)[2];
        let src = |x: f64| {
            let lap = -u(x).scale(a1 * a1 + a2 * a2) + d(&du_hat, x) / p.rho(x);
            let ddiv = (div(x + hd) - div(x - hd)) / (2.0 * hd) / p.rho(x);
            let gd = CVec3::new(I * a1 * div(x), I * a2 * div(x), ddiv);
            lap.scale(m.mu) + gd.scale(m.lambda + m.mu) + u(x).scale(m.omega * m.omega)
        };
        let mut errs = Vec::new();
        for e in [40, 80, 160] {
            let mesh = Mesh1D::uniform(lo, hi, e).unwrap();
            let bvp = ModeBvp::new(&mode, &m, Some(&p), mesh, u(lo), u(hi));
            let s = bvp.solve_with(&Load::Source(&src)).unwrap();
            let err = s.nodes.iter().zip(&s.values).map(|(x, v)| (v - u(*x)).norm()).fold(0.0, f64::max);
            errs.push(err);
        }
        for o in order(&errs) {
            assert!((o - 2.0).abs() < 0.3, "{errs:?}");
        }
    }

    #[test]
    fn flat_problem_converges_and_pml_matters() {
        let (m, inc, _) = ex1();
        let exact = exact_flat_solution(&inc, &m).unwrap();
        let p = example_profile();
        let errs: Vec<f64> = [24, 48, 96]
            .iter()
            .map(|&e| l2_error_vs_exact(&flat_full_problem(&inc, &m, &p, e).unwrap(), &exact, p.h))
            .collect();
        for o in order(&errs) {
            assert!((o - 2.0).abs() < 0.3, "{errs:?}");
        }
        let rows = pml_convergence_study(&inc, &m, &p, &[0.0, 0.25, 0.5, 1.0], 192).unwrap();
        assert!(rows[0].error > 0.1);
        assert!(rows[1].error > rows[2].error && rows[2].error > rows[3].error);
    }

    #[test]
    fn discrete_symbols_approach_continuous() {
        let s = PlaneSymbols::discrete([1.3, -0.4], [1e-4, 1e-4]);
        let c = PlaneSymbols::continuous([1.3, -0.4]);
        for k in 0..2 {
            assert!((s.mass[k] / 1e-4 - 1.0).abs() < 1e-7);
            assert!((s.stiff[k] / 1e-4 - c.stiff[k]).abs() < 1e-6);
            assert!((s.d_trial[k] / 1e-4 - c.d_trial[k]).norm() < 1e-6);
        }
        let _ = Lattice::unit;
    }
}
