//! Trilinear element matrices and row-wise assembly of the quasi-periodic system.

use num_complex::Complex64;

use super::fourier::{apply_dtn_blocks, dtn_blocks, hat_factor, FourierPreconditioner, PlaneFft};
use super::mesh::{HexMesh, NodeTag};
use crate::dtn::boundary_source_g;
use crate::error::{Error, Result};
use crate::fields::{incident_field, incident_gradient};
use crate::modes::{Incidence, Lattice, Medium};
use crate::par;
use crate::pml::PmlProfile;
use crate::solver1d::{gauss_rule, rho_at};
use crate::{CMat3, CVec3, C64};

/// Truncation of the artificial boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Variant {
    /// Transparent boundary condition at `h`, Fourier modes `|n_i| <= truncation`.
    Dtn { truncation: usize },
    /// Absorbing layer on `(h, h + delta)` with the incident wave imposed on top.
    Pml(PmlProfile),
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::Dtn { .. } => "dtn",
            Variant::Pml(_) => "pml",
        }
    }

    fn profile(&self) -> Option<&PmlProfile> {
        match self {
            Variant::Dtn { .. } => None,
            Variant::Pml(p) => Some(p),
        }
    }
}

/// Assembly switches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssemblyOptions {
    /// Keep the `-omega^2 u . v` term.
    pub include_mass: bool,
    /// Gauss points per direction for the incident-wave load.
    pub load_gauss_points: usize,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        Self {
            include_mass: true,
            load_gauss_points: 3,
        }
    }
}

/// 8x8 array of 3x3 blocks; local node `a = a1 + 2 a2 + 4 a3`.
pub(crate) type ElementMatrix = [[CMat3; 8]; 8];

fn local(a: usize) -> [usize; 3] {
    [a & 1, (a >> 1) & 1, (a >> 2) & 1]
}

/// Shape values and physical derivatives of the 8 trilinear functions at `t`.
fn shapes(t: [f64; 3], spacing: [f64; 3]) -> [(f64, [f64; 3]); 8] {
    let mut out = [(0.0, [0.0; 3]); 8];
    for (a, o) in out.iter_mut().enumerate() {
        let l = local(a);
        let mut n = [0.0; 3];
        let mut d = [0.0; 3];
        for i in 0..3 {
            if l[i] == 0 {
                n[i] = 1.0 - t[i];
                d[i] = -1.0 / spacing[i];
            } else {
                n[i] = t[i];
                d[i] = 1.0 / spacing[i];
            }
        }
        *o = (
            n[0] * n[1] * n[2],
            [d[0] * n[1] * n[2], n[0] * d[1] * n[2], n[0] * n[1] * d[2]],
        );
    }
    out
}

/// Element matrix of the stretched sesquilinear form on level `[z0, z0 + hz]`.
fn element_matrix(z0: f64, spacing: [f64; 3], medium: &Medium, profile: Option<&PmlProfile>, include_mass: bool) -> Result<ElementMatrix> {
    let (pts, wts) = gauss_rule(2)?;
    let (mu, lm) = (medium.mu, medium.lambda + medium.mu);
    let w2 = if include_mass { medium.omega * medium.omega } else { 0.0 };
    let vol = spacing[0] * spacing[1] * spacing[2];
    let mut k = [[CMat3::zeros(); 8]; 8];
    for q3 in 0..2 {
        let rho = rho_at(profile, z0 + pts[q3] * spacing[2]);
        let rinv = 1.0 / rho;
        for q2 in 0..2 {
            for q1 in 0..2 {
                let w = wts[q1] * wts[q2] * wts[q3] * vol;
                let sh = shapes([pts[q1], pts[q2], pts[q3]], spacing);
                // G phi with the stretched vertical derivative
                let g: Vec<[C64; 3]> = sh.iter().map(|(_, d)| [d[0].into(), d[1].into(), rinv * d[2]]).collect();
                for a in 0..8 {
                    for b in 0..8 {
                        let gg: C64 = (0..3).map(|i| g[a][i] * g[b][i]).sum();
                        let diag = mu * gg - w2 * sh[a].0 * sh[b].0;
                        let blk = &mut k[a][b];
                        for c in 0..3 {
                            blk[(c, c)] += rho * w * diag;
                            for d in 0..3 {
                                blk[(c, d)] += rho * w * lm * g[a][c] * g[b][d];
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(k)
}

/// `b(u_inc, phi_a)` on the element with corner `(0, 0, z0)`.
fn incident_load(
    z0: f64,
    spacing: [f64; 3],
    medium: &Medium,
    incidence: &Incidence,
    profile: Option<&PmlProfile>,
    points: usize,
) -> Result<[CVec3; 8]> {
    let (pts, wts) = gauss_rule(points)?;
    let (mu, lm) = (medium.mu, medium.lambda + medium.mu);
    let w2 = medium.omega * medium.omega;
    let vol = spacing[0] * spacing[1] * spacing[2];
    let mut f = [CVec3::zeros(); 8];
    for (q3, t3) in pts.iter().enumerate() {
        let z = z0 + t3 * spacing[2];
        let rho = rho_at(profile, z);
        let rinv = 1.0 / rho;
        for (q2, t2) in pts.iter().enumerate() {
            for (q1, t1) in pts.iter().enumerate() {
                let w = wts[q1] * wts[q2] * wts[q3] * vol;
                let x = [t1 * spacing[0], t2 * spacing[1], z];
                let u = incident_field(incidence, medium, x);
                let du = incident_gradient(incidence, medium, x);
                let gu = [du[0], du[1], du[2] * rinv];
                let div = gu[0][0] + gu[1][1] + gu[2][2];
                let sh = shapes([*t1, *t2, *t3], spacing);
                for (a, (n, d)) in sh.iter().enumerate() {
                    let gv = [C64::from(d[0]), C64::from(d[1]), rinv * d[2]];
                    for c in 0..3 {
                        let mut s: C64 = (0..3).map(|k| mu * gu[k][c] * gv[k]).sum();
                        s += lm * div * gv[c] - w2 * u[c] * *n;
                        f[a][c] += s * rho * w;
                    }
                }
            }
        }
    }
    Ok(f)
}

/// Offset slot of a neighbour `d in {-1, 0, 1}^3`.
fn slot(d: [i64; 3]) -> usize {
    ((d[0] + 1) + 3 * (d[1] + 1) + 9 * (d[2] + 1)) as usize
}

/// Assembled quasi-periodic system on the master nodes.
///
/// Unknowns are three complex components per master node, interleaved.
/// Constrained nodes (surface, PML top, excluded) hold their lifted values
/// in `lifting` and are masked out of [`AssembledSystem::apply`].
#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub mesh: HexMesh,
    pub medium: Medium,
    pub incidence: Incidence,
    pub lattice: Lattice,
    pub variant: Variant,
    pub options: AssemblyOptions,
    /// 27-point block stencil per master node, Bloch factors included.
    blocks: Vec<[CMat3; 27]>,
    /// Right-hand side of the free system (zero at constrained nodes).
    pub rhs: Vec<C64>,
    /// Dirichlet values, zero at free nodes.
    pub lifting: Vec<C64>,
    free: Vec<bool>,
    boundary: Option<Vec<CMat3>>,
    fft: PlaneFft,
}

/// Assembles the volume form, the artificial boundary terms and the loads.
pub fn assemble_system(
    mesh: &HexMesh,
    medium: &Medium,
    incidence: &Incidence,
    variant: &Variant,
    options: &AssemblyOptions,
) -> Result<AssembledSystem> {
    let lattice = Lattice {
        period: mesh.period,
        alpha: incidence.alpha,
    };
    if (mesh.alpha[0] - incidence.alpha[0]).abs() > 1e-12 || (mesh.alpha[1] - incidence.alpha[1]).abs() > 1e-12 {
        return Err(Error::Mesh("mesh Bloch phase differs from the incidence".into()));
    }
    let rel = |a: f64, b: f64| (a - b).abs() <= 1e-9 * b.abs().max(1.0);
    match variant {
        Variant::Dtn { .. } => {
            if mesh.has_pml || !rel(mesh.top, mesh.h) {
                return Err(Error::Mesh("DtN variant needs a mesh whose top is the plane h".into()));
            }
        }
        Variant::Pml(p) => {
            if !mesh.has_pml || !rel(mesh.top, p.top()) || !rel(mesh.h, p.h) {
                return Err(Error::Mesh(format!(
                    "PML variant needs a mesh on [0, {}] with the layer starting at {}",
                    p.top(),
                    p.h
                )));
            }
        }
    }
    let profile = variant.profile();
    let [n1, n2, n3] = mesh.resolution;
    let sp = mesh.spacing;
    let element_mats = par::map_range(n3, |k| element_matrix(mesh.z(k), sp, medium, profile, options.include_mass))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let loads = match variant {
        Variant::Pml(p) => Some(
            par::map_range(n3, |k| incident_load(mesh.z(k), sp, medium, incidence, Some(p), options.load_gauss_points))
                .into_iter()
                .collect::<Result<Vec<_>>>()?,
        ),
        Variant::Dtn { .. } => None,
    };

    let nm = mesh.master_count();
    let rows = par::map_range(nm, |id| {
        let (i1, i2, k) = mesh.node_indices(id);
        let mut st = [CMat3::zeros(); 27];
        let mut f = CVec3::zeros();
        if mesh.tag(id) == NodeTag::Excluded {
            return (st, f);
        }
        for s in 0..8 {
            let l = local(s);
            let ek = k as i64 - l[2] as i64;
            if ek < 0 || ek >= n3 as i64 {
                continue;
            }
            let (e1, e2) = (i1 as i64 - l[0] as i64, i2 as i64 - l[1] as i64);
            if mesh.is_solid(e1, e2, ek as usize) {
                continue;
            }
            let ke = &element_mats[ek as usize];
            for t in 0..8 {
                let lt = local(t);
                let d = [lt[0] as i64 - l[0] as i64, lt[1] as i64 - l[1] as i64, lt[2] as i64 - l[2] as i64];
                st[slot(d)] += ke[s][t];
            }
            if let Some(loads) = &loads {
                let r = mesh.coords(e1, e2, 0);
                let ph = Complex64::from_polar(1.0, mesh.alpha[0] * r[0] + mesh.alpha[1] * r[1]);
                f += loads[ek as usize][s] * ph;
            }
        }
        for (sl, blk) in st.iter_mut().enumerate() {
            let d = [(sl % 3) as i64 - 1, ((sl / 3) % 3) as i64 - 1];
            let (_, ph) = mesh.master_of(i1 as i64 + d[0], i2 as i64 + d[1], k);
            *blk *= ph;
        }
        (st, f)
    });
    let mut blocks = Vec::with_capacity(nm);
    let mut load = vec![C64::new(0.0, 0.0); 3 * nm];
    for (id, (st, f)) in rows.into_iter().enumerate() {
        blocks.push(st);
        for c in 0..3 {
            load[3 * id + c] = f[c];
        }
    }

    let free: Vec<bool> = mesh.tags().iter().map(|t| *t == NodeTag::Free).collect();
    let mut lifting = vec![C64::new(0.0, 0.0); 3 * nm];
    for id in 0..nm {
        if mesh.tag(id) == NodeTag::Top {
            let (i1, i2, k) = mesh.node_indices(id);
            let u = incident_field(incidence, medium, mesh.coords(i1 as i64, i2 as i64, k));
            for c in 0..3 {
                lifting[3 * id + c] = u[c];
            }
        }
    }

    let boundary = match variant {
        Variant::Dtn { truncation } => {
            let b = dtn_blocks(mesh, &lattice, medium, *truncation)?;
            // source <g, phi_m> on the top level
            let g = boundary_source_g(incidence, medium, mesh.h)?.coefficient();
            let s = hat_factor(incidence.alpha, [sp[0], sp[1]]) * sp[0] * sp[1];
            let base = n3 * n1 * n2;
            for i2 in 0..n2 {
                for i1 in 0..n1 {
                    let r = mesh.coords(i1 as i64, i2 as i64, n3);
                    let ph = Complex64::from_polar(s, mesh.alpha[0] * r[0] + mesh.alpha[1] * r[1]);
                    let id = base + i1 + n1 * i2;
                    for c in 0..3 {
                        load[3 * id + c] += g[c] * ph;
                    }
                }
            }
            Some(b)
        }
        Variant::Pml(_) => None,
    };

    let mut sys = AssembledSystem {
        mesh: mesh.clone(),
        medium: *medium,
        incidence: *incidence,
        lattice,
        variant: *variant,
        options: *options,
        blocks,
        rhs: Vec::new(),
        lifting,
        free,
        boundary,
        fft: PlaneFft::new(mesh),
    };
    let mut kl = vec![C64::new(0.0, 0.0); 3 * nm];
    sys.apply_volume(&sys.lifting, &mut kl);
    for i in 0..3 * nm {
        load[i] = if sys.free[i / 3] { load[i] - kl[i] } else { C64::new(0.0, 0.0) };
    }
    sys.rhs = load;
    Ok(sys)
}

impl AssembledSystem {
    /// Length of the interleaved nodal vectors.
    pub fn len(&self) -> usize {
        3 * self.mesh.master_count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of free scalar unknowns.
    pub fn unknowns(&self) -> usize {
        3 * self.free.iter().filter(|f| **f).count()
    }

    /// Whether master node `id` carries unknowns.
    pub fn is_free(&self, id: usize) -> bool {
        self.free[id]
    }

    fn stencil_apply(&self, x: &[C64], y: &mut [C64], masked: bool) {
        let m = &self.mesh;
        let [n1, n2, n3] = m.resolution;
        let plane = n1 * n2;
        par::for_each_chunk_mut(y, 3 * plane, |k, out| {
            for j in 0..plane {
                let id = k * plane + j;
                let mut acc = CVec3::zeros();
                if !masked || self.free[id] {
                    let (i1, i2) = (j % n1, j / n1);
                    let st = &self.blocks[id];
                    for (sl, blk) in st.iter().enumerate() {
                        let d3 = (sl / 9) as i64 - 1;
                        let kk = k as i64 + d3;
                        if kk < 0 || kk > n3 as i64 {
                            continue;
                        }
                        let c1 = (i1 as i64 + (sl % 3) as i64 - 1).rem_euclid(n1 as i64) as usize;
                        let c2 = (i2 as i64 + ((sl / 3) % 3) as i64 - 1).rem_euclid(n2 as i64) as usize;
                        let col = c1 + n1 * (c2 + n2 * kk as usize);
                        if masked && !self.free[col] {
                            continue;
                        }
                        let v = CVec3::new(x[3 * col], x[3 * col + 1], x[3 * col + 2]);
                        acc += blk * v;
                    }
                }
                out[3 * j..3 * j + 3].copy_from_slice(acc.as_slice());
            }
        });
    }

    /// Volume matrix on all master nodes, without boundary terms or masking.
    pub fn apply_volume(&self, x: &[C64], y: &mut [C64]) {
        self.stencil_apply(x, y, false);
    }

    /// Operator of the free system: constrained entries of `x` are ignored
    /// and constrained entries of `y` are zero.
    pub fn apply(&self, x: &[C64], y: &mut [C64]) {
        self.stencil_apply(x, y, true);
        if let Some(b) = &self.boundary {
            let [n1, n2, n3] = self.mesh.resolution;
            let base = n3 * n1 * n2;
            let top: Vec<CVec3> = (0..n1 * n2)
                .map(|j| {
                    let id = base + j;
                    if self.free[id] {
                        CVec3::new(x[3 * id], x[3 * id + 1], x[3 * id + 2])
                    } else {
                        CVec3::zeros()
                    }
                })
                .collect();
            let mut by = vec![CVec3::zeros(); n1 * n2];
            apply_dtn_blocks(&self.fft, b, &top, &mut by, C64::new(-1.0, 0.0));
            for (j, v) in by.iter().enumerate() {
                let id = base + j;
                if self.free[id] {
                    for c in 0..3 {
                        y[3 * id + c] += v[c];
                    }
                }
            }
        }
    }

    /// Flat-geometry inverse used as preconditioner.
    pub fn preconditioner(&self) -> Result<FourierPreconditioner> {
        FourierPreconditioner::new(
            &self.mesh,
            &self.medium,
            self.variant.profile(),
            self.boundary.as_deref(),
            self.free.clone(),
        )
    }

    /// Stencil block between master `row` and its neighbour at offset `d`.
    pub fn block(&self, row: usize, d: [i64; 3]) -> CMat3 {
        self.blocks[row][slot(d)]
    }
}
