//! Horizontal Fourier transforms on mesh levels.
//!
//! A field `U_j = e^{i alpha . x_j} sum_p c_p e^{2 pi i p . j / n}` on a level
//! is moved to its coefficients `c_p` and back. On a flat mesh the volume
//! operator is block diagonal in `p`, each block a block-tridiagonal
//! vertical operator, which gives both the discrete DtN term and an exact
//! flat-geometry preconditioner.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::mesh::HexMesh;
use crate::dtn::dtn_matrix;
use crate::error::Result;
use crate::linalg::{BlockTridiag, BlockTridiagLu};
use crate::modes::{Lattice, Medium, ModeData, ModeIndex};
use crate::par;
use crate::pml::PmlProfile;
use crate::solver1d::{assemble_vertical, PlaneSymbols};
use crate::{CMat3, CVec3, C64};

/// `(sin x / x)^2`.
fn sinc2(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 3.0
    } else {
        let s = x.sin() / x;
        s * s
    }
}

/// Fourier factor of the bilinear hat function on the level grid at wave vector `xi`.
pub fn hat_factor(xi: [f64; 2], spacing: [f64; 2]) -> f64 {
    sinc2(0.5 * xi[0] * spacing[0]) * sinc2(0.5 * xi[1] * spacing[1])
}

/// 2D DFT of level planes stored as `i1 + n1 i2`.
#[derive(Clone)]
pub struct PlaneFft {
    n: [usize; 2],
    fwd: [Arc<dyn Fft<f64>>; 2],
    inv: [Arc<dyn Fft<f64>>; 2],
    /// `e^{i alpha . x}` on the level grid.
    bloch: Vec<C64>,
}

impl std::fmt::Debug for PlaneFft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PlaneFft").field("n", &self.n).finish()
    }
}

impl PlaneFft {
    pub fn new(mesh: &HexMesh) -> Self {
        let [n1, n2, _] = mesh.resolution;
        let mut planner = FftPlanner::new();
        let fwd = [planner.plan_fft_forward(n1), planner.plan_fft_forward(n2)];
        let inv = [planner.plan_fft_inverse(n1), planner.plan_fft_inverse(n2)];
        let mut bloch = Vec::with_capacity(n1 * n2);
        for i2 in 0..n2 {
            for i1 in 0..n1 {
                let x = mesh.coords(i1 as i64, i2 as i64, 0);
                bloch.push(Complex64::from_polar(1.0, mesh.alpha[0] * x[0] + mesh.alpha[1] * x[1]));
            }
        }
        Self {
            n: [n1, n2],
            fwd,
            inv,
            bloch,
        }
    }

    pub fn len(&self) -> usize {
        self.n[0] * self.n[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn transform(&self, plane: &mut [C64], plans: &[Arc<dyn Fft<f64>>; 2]) {
        let [n1, n2] = self.n;
        plans[0].process(plane);
        let mut col = vec![C64::new(0.0, 0.0); n2];
        for i1 in 0..n1 {
            for i2 in 0..n2 {
                col[i2] = plane[i1 + n1 * i2];
            }
            plans[1].process(&mut col);
            for i2 in 0..n2 {
                plane[i1 + n1 * i2] = col[i2];
            }
        }
    }

    /// Nodal values to coefficients `c_p`, in place.
    pub fn forward(&self, plane: &mut [C64]) {
        for (v, b) in plane.iter_mut().zip(&self.bloch) {
            *v *= b.conj();
        }
        self.transform(plane, &self.fwd);
        let s = 1.0 / self.len() as f64;
        plane.iter_mut().for_each(|v| *v *= s);
    }

    /// Coefficients to nodal values, in place.
    pub fn inverse(&self, plane: &mut [C64]) {
        self.transform(plane, &self.inv);
        for (v, b) in plane.iter_mut().zip(&self.bloch) {
            *v *= b;
        }
    }
}

/// Wave vector `alpha + 2 pi p / L` of DFT index `p = p1 + n1 p2`.
fn wave_vector(mesh: &HexMesh, p: usize) -> [f64; 2] {
    let [n1, _, _] = mesh.resolution;
    let (p1, p2) = (p % n1, p / n1);
    [
        mesh.alpha[0] + 2.0 * PI * p1 as f64 / mesh.period[0],
        mesh.alpha[1] + 2.0 * PI * p2 as f64 / mesh.period[1],
    ]
}

/// Discrete transparent boundary term: one 3x3 block per DFT index.
///
/// Block `p` is `h1 h2 sum_{n = p mod (n1, n2), |n_i| <= N} S_n^2 M^(n)`,
/// where `S_n` is the hat-function factor at `alpha_n`.
pub fn dtn_blocks(mesh: &HexMesh, lattice: &Lattice, medium: &Medium, truncation: usize) -> Result<Vec<CMat3>> {
    let [n1, n2, _] = mesh.resolution;
    let area = mesh.spacing[0] * mesh.spacing[1];
    let mut blocks = vec![CMat3::zeros(); n1 * n2];
    for n in ModeIndex::window(truncation) {
        let mode = ModeData::new(lattice, medium, n)?;
        let s = hat_factor(mode.alpha, [mesh.spacing[0], mesh.spacing[1]]);
        let p = (n.n1 as i64).rem_euclid(n1 as i64) as usize + n1 * (n.n2 as i64).rem_euclid(n2 as i64) as usize;
        blocks[p] += dtn_matrix(&mode, medium).m * C64::from(area * s * s);
    }
    Ok(blocks)
}

/// Applies the boundary blocks to the top-level values `x`, adding `scale * B x` into `y`.
pub fn apply_dtn_blocks(fft: &PlaneFft, blocks: &[CMat3], x: &[CVec3], y: &mut [CVec3], scale: C64) {
    let n = fft.len();
    let mut planes = vec![C64::new(0.0, 0.0); 3 * n];
    for c in 0..3 {
        let plane = &mut planes[c * n..(c + 1) * n];
        for j in 0..n {
            plane[j] = x[j][c];
        }
        fft.forward(plane);
    }
    let mut out = vec![C64::new(0.0, 0.0); 3 * n];
    for p in 0..n {
        let v = blocks[p] * CVec3::new(planes[p], planes[n + p], planes[2 * n + p]);
        for c in 0..3 {
            out[c * n + p] = v[c];
        }
    }
    for c in 0..3 {
        let plane = &mut out[c * n..(c + 1) * n];
        fft.inverse(plane);
        for j in 0..n {
            y[j][c] += scale * plane[j];
        }
    }
}

/// Exact inverse of the flat-geometry operator, applied level-plane by level-plane.
#[derive(Debug, Clone)]
pub struct FourierPreconditioner {
    fft: PlaneFft,
    /// First and last level carrying unknowns.
    levels: (usize, usize),
    lus: Vec<BlockTridiagLu>,
    free: Vec<bool>,
}

impl FourierPreconditioner {
    /// Builds the per-wave-vector factorizations. `boundary` holds DtN
    /// blocks subtracted at the top level.
    pub fn new(
        mesh: &HexMesh,
        medium: &Medium,
        profile: Option<&PmlProfile>,
        boundary: Option<&[CMat3]>,
        free: Vec<bool>,
    ) -> Result<Self> {
        let [n1, n2, n3] = mesh.resolution;
        let nodes: Vec<f64> = (0..=n3).map(|k| mesh.z(k)).collect();
        let last = if mesh.has_pml { n3 - 1 } else { n3 };
        let levels = (1, last);
        let spacing = [mesh.spacing[0], mesh.spacing[1]];
        let lus = par::map_range(n1 * n2, |p| -> Result<BlockTridiagLu> {
            let sym = PlaneSymbols::discrete(wave_vector(mesh, p), spacing);
            let full = assemble_vertical(&sym, medium, profile, &nodes, 2)?;
            let m = last;
            let mut t = BlockTridiag::zeros(m);
            t.diag.copy_from_slice(&full.diag[1..=last]);
            t.lower.copy_from_slice(&full.lower[1..last]);
            t.upper.copy_from_slice(&full.upper[1..last]);
            if let Some(b) = boundary {
                t.diag[m - 1] -= b[p];
            }
            t.factor()
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            fft: PlaneFft::new(mesh),
            levels,
            lus,
            free,
        })
    }

    /// Largest pivot condition estimate over all vertical factorizations.
    pub fn pivot_condition(&self) -> f64 {
        self.lus.iter().map(|l| l.pivot_condition).fold(0.0, f64::max)
    }

    /// `z = P^{-1} r` on interleaved nodal vectors (three entries per master node).
    pub fn apply(&self, r: &[C64], z: &mut [C64]) {
        let n = self.fft.len();
        let (k0, k1) = self.levels;
        let nl = k1 - k0 + 1;
        let mut planes = vec![C64::new(0.0, 0.0); 3 * n * nl];
        par::for_each_chunk_mut(&mut planes, n, |idx, plane| {
            let (kl, c) = (idx / 3, idx % 3);
            let base = (k0 + kl) * n;
            for j in 0..n {
                if self.free[base + j] {
                    plane[j] = r[3 * (base + j) + c];
                }
            }
            self.fft.forward(plane);
        });
        let solved = par::map_range(n, |p| {
            let mut col: Vec<CVec3> = (0..nl)
                .map(|kl| {
                    let o = 3 * kl * n;
                    CVec3::new(planes[o + p], planes[o + n + p], planes[o + 2 * n + p])
                })
                .collect();
            self.lus[p].solve_in_place(&mut col);
            col
        });
        for (p, col) in solved.iter().enumerate() {
            for (kl, v) in col.iter().enumerate() {
                let o = 3 * kl * n;
                for c in 0..3 {
                    planes[o + c * n + p] = v[c];
                }
            }
        }
        par::for_each_chunk_mut(&mut planes, n, |_, plane| self.fft.inverse(plane));
        z.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
        for kl in 0..nl {
            let base = (k0 + kl) * n;
            for c in 0..3 {
                let plane = &planes[(3 * kl + c) * n..(3 * kl + c + 1) * n];
                for j in 0..n {
                    if self.free[base + j] {
                        z[3 * (base + j) + c] = plane[j];
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::tests::ex1;
    use crate::solver3d::mesh::{build_mesh, Geometry};

    #[test]
    fn plane_transform_round_trip_and_mode() {
        let (_, _, lat) = ex1();
        let mesh = build_mesh(&Geometry::Flat, &lat, 0.3, Some(0.3), [6, 4, 4]).unwrap();
        let fft = PlaneFft::new(&mesh);
        // a single twisted mode lands on one coefficient
        let p = 1 + 6 * 3;
        let xi = wave_vector(&mesh, p);
        let mut plane: Vec<C64> = (0..24)
            .map(|j| {
                let x = mesh.coords((j % 6) as i64, (j / 6) as i64, 0);
                Complex64::from_polar(1.0, xi[0] * x[0] + xi[1] * x[1])
            })
            .collect();
        let orig = plane.clone();
        fft.forward(&mut plane);
        for (q, v) in plane.iter().enumerate() {
            let expect = if q == p { 1.0 } else { 0.0 };
            assert!((v - expect).norm() < 1e-13, "{q} {v}");
        }
        fft.inverse(&mut plane);
        for (a, b) in plane.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn hat_factor_matches_quadrature() {
        // (1/h) int hat(x) e^{-i xi x} dx over [-h, h]
        let (h, xi) = (0.2, 7.3);
        let m = 20000;
        let mut s = C64::new(0.0, 0.0);
        for i in 0..m {
            let x = -h + (i as f64 + 0.5) * 2.0 * h / m as f64;
            s += Complex64::from_polar(1.0 - x.abs() / h, -xi * x) * (2.0 * h / m as f64);
        }
        assert!((s.re / h - hat_factor([xi, 0.0], [h, 1.0])).abs() < 1e-8);
        assert!(s.im.abs() < 1e-12);
    }
}
