//! Iterative solution, nodal fields and boundary post-processing.

use std::io::Write;
use std::time::Instant;

use super::assembly::AssembledSystem;
use super::mesh::{HexMesh, NodeTag};
use crate::error::{Error, Result};
use crate::fields::{tangential_phase, FourierVectorField};
use crate::linalg::{gmres, GmresConfig};
use crate::modes::{Lattice, ModeIndex};
use crate::par;
use crate::solver1d::gauss_rule;
use crate::{CVec3, C64};

/// Summary of a 3D solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub method: String,
    pub iterations: usize,
    /// Final relative residual of the free system.
    pub residual: f64,
    /// Wall time in seconds, assembly excluded.
    pub wall_time: f64,
    pub unknowns: usize,
    pub history: Vec<f64>,
}

/// Nodal values on the master nodes of a mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalField {
    pub mesh: HexMesh,
    pub values: Vec<CVec3>,
}

/// Solves the free system by right-preconditioned GMRES with the
/// flat-geometry Fourier inverse as preconditioner.
pub fn solve_system(system: &AssembledSystem, tol: f64, max_iter: usize) -> Result<(NodalField, SolveReport)> {
    let start = Instant::now();
    let pre = system.preconditioner()?;
    let cfg = GmresConfig {
        max_iter,
        restart: 80,
        tol,
    };
    let mut x = vec![C64::new(0.0, 0.0); system.len()];
    let out = gmres(|x, y| system.apply(x, y), |r, z| pre.apply(r, z), &system.rhs, &mut x, &cfg);
    if !out.converged {
        return Err(Error::NoConvergence {
            iterations: out.iterations,
            residual: out.residual,
            history: out.history,
        });
    }
    let values = (0..system.mesh.master_count())
        .map(|id| {
            let s = 3 * id;
            CVec3::new(
                x[s] + system.lifting[s],
                x[s + 1] + system.lifting[s + 1],
                x[s + 2] + system.lifting[s + 2],
            )
        })
        .collect();
    let report = SolveReport {
        method: "gmres, flat Fourier block-tridiagonal preconditioner".into(),
        iterations: out.iterations,
        residual: out.residual,
        wall_time: start.elapsed().as_secs_f64(),
        unknowns: system.unknowns(),
        history: out.history,
    };
    log::info!(
        "{} solve: {} unknowns, {} iterations, residual {:.2e}",
        system.variant.name(),
        report.unknowns,
        report.iterations,
        report.residual
    );
    Ok((
        NodalField {
            mesh: system.mesh.clone(),
            values,
        },
        report,
    ))
}

impl NodalField {
    /// Samples `f` at every non-excluded master node.
    pub fn from_fn(mesh: &HexMesh, f: impl Fn([f64; 3]) -> CVec3) -> Self {
        let values = (0..mesh.master_count())
            .map(|id| {
                if mesh.tag(id) == NodeTag::Excluded {
                    return CVec3::zeros();
                }
                let (i1, i2, k) = mesh.node_indices(id);
                f(mesh.coords(i1 as i64, i2 as i64, k))
            })
            .collect();
        Self {
            mesh: mesh.clone(),
            values,
        }
    }

    /// Value at an unwrapped lattice node.
    pub fn node_value(&self, i1: i64, i2: i64, k: usize) -> CVec3 {
        let (id, ph) = self.mesh.master_of(i1, i2, k);
        self.values[id] * ph
    }

    /// Trilinear interpolation at any point with `0 <= x3 <= top`.
    pub fn eval(&self, x: [f64; 3]) -> CVec3 {
        let m = &self.mesh;
        let n3 = m.resolution[2];
        let f1 = x[0] / m.spacing[0];
        let f2 = x[1] / m.spacing[1];
        let f3 = (x[2] / m.spacing[2]).clamp(0.0, n3 as f64);
        let e1 = f1.floor() as i64;
        let e2 = f2.floor() as i64;
        let e3 = (f3.floor() as usize).min(n3 - 1);
        let t = [f1 - e1 as f64, f2 - e2 as f64, f3 - e3 as f64];
        let mut v = CVec3::zeros();
        for a in 0..8 {
            let l = [a & 1, (a >> 1) & 1, (a >> 2) & 1];
            let mut w = 1.0;
            for i in 0..3 {
                w *= if l[i] == 0 { 1.0 - t[i] } else { t[i] };
            }
            if w != 0.0 {
                v += self.node_value(e1 + l[0] as i64, e2 + l[1] as i64, e3 + l[2]).scale(w);
            }
        }
        v
    }

    /// Relative `L^2` error against `exact` over the fluid elements below `upto`,
    /// by 3-point Gauss in each direction.
    pub fn l2_error(&self, exact: &(dyn Fn([f64; 3]) -> CVec3 + Sync), upto: f64) -> Result<f64> {
        let m = &self.mesh;
        let [n1, n2, n3] = m.resolution;
        let (pts, wts) = gauss_rule(3)?;
        let levels = (0..n3).filter(|&k| m.z(k + 1) <= upto + 1e-12).count();
        let vol = m.spacing[0] * m.spacing[1] * m.spacing[2];
        let parts = par::map_range(levels, |k| {
            let (mut err, mut norm) = (0.0, 0.0);
            for e2 in 0..n2 {
                for e1 in 0..n1 {
                    if m.is_solid(e1 as i64, e2 as i64, k) {
                        continue;
                    }
                    let corner = m.coords(e1 as i64, e2 as i64, k);
                    for (a, ta) in pts.iter().enumerate() {
                        for (b, tb) in pts.iter().enumerate() {
                            for (c, tc) in pts.iter().enumerate() {
                                let x = [
                                    corner[0] + ta * m.spacing[0],
                                    corner[1] + tb * m.spacing[1],
                                    corner[2] + tc * m.spacing[2],
                                ];
                                let w = wts[a] * wts[b] * wts[c] * vol;
                                let u = exact(x);
                                err += w * (self.eval(x) - u).norm_squared();
                                norm += w * u.norm_squared();
                            }
                        }
                    }
                }
            }
            (err, norm)
        });
        let (e, n) = parts.iter().fold((0.0, 0.0), |s, p| (s.0 + p.0, s.1 + p.1));
        Ok(if n > 0.0 { (e / n).sqrt() } else { e.sqrt() })
    }

    /// Writes every lattice node (images included) as
    /// `x1 x2 x3 tag re_u1 im_u1 re_u2 im_u2 re_u3 im_u3`.
    pub fn dump(&self, out: &mut impl Write) -> std::io::Result<()> {
        let m = &self.mesh;
        let [n1, n2, n3] = m.resolution;
        writeln!(out, "# resolution {n1} {n2} {n3}")?;
        writeln!(out, "# x1 x2 x3 tag re_u1 im_u1 re_u2 im_u2 re_u3 im_u3")?;
        for k in 0..=n3 {
            for i2 in 0..=n2 as i64 {
                for i1 in 0..=n1 as i64 {
                    let x = m.coords(i1, i2, k);
                    let (id, _) = m.master_of(i1, i2, k);
                    let tag = match m.tag(id) {
                        NodeTag::Free => "free",
                        NodeTag::Surface => "surface",
                        NodeTag::Top => "top",
                        NodeTag::Excluded => "excluded",
                    };
                    let v = self.node_value(i1, i2, k);
                    write!(out, "{:.16e} {:.16e} {:.16e} {tag}", x[0], x[1], x[2])?;
                    for c in 0..3 {
                        write!(out, " {:.16e} {:.16e}", v[c].re, v[c].im)?;
                    }
                    writeln!(out)?;
                }
            }
        }
        Ok(())
    }
}

/// Fourier coefficients `|n_i| <= window` of the field on the plane `x3 = h`
/// by the trapezoidal rule on the level grid.
///
/// Modes outside the grid Nyquist range alias onto resolved ones; a warning
/// is logged when the window exceeds it.
pub fn boundary_mode_coefficients(field: &NodalField, lattice: &Lattice, window: usize) -> Result<FourierVectorField> {
    let m = &field.mesh;
    let [n1, n2, _] = m.resolution;
    if (lattice.period[0] - m.period[0]).abs() > 1e-12 || (lattice.period[1] - m.period[1]).abs() > 1e-12 {
        return Err(Error::Mesh("lattice periods differ from the mesh".into()));
    }
    if 2 * window + 1 > n1.min(n2) {
        log::warn!("mode window {window} exceeds the Nyquist range of the {n1}x{n2} boundary grid; coefficients alias");
    }
    let k = m.h_index;
    let plane: Vec<([f64; 3], CVec3)> = (0..n2 as i64)
        .flat_map(|i2| (0..n1 as i64).map(move |i1| (i1, i2)))
        .map(|(i1, i2)| (m.coords(i1, i2, k), field.node_value(i1, i2, k)))
        .collect();
    let scale = 1.0 / (n1 * n2) as f64;
    let modes = ModeIndex::window(window);
    let coeffs = par::map_slice(&modes, |n| {
        let a = lattice.wave_vector(*n);
        let s: CVec3 = plane.iter().map(|(x, v)| v * tangential_phase(a, *x).conj()).sum();
        (*n, s.scale(scale))
    });
    let mut out = FourierVectorField::new(m.z(k));
    out.coeffs.extend(coeffs);
    Ok(out)
}
