//! Structured hexahedral meshes of one lattice cell.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::modes::Lattice;
use crate::C64;

const ALIGN_TOL: f64 = 1e-9;

/// Axis-aligned box rising from the base plane `x3 = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bump {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
    pub height: f64,
}

/// Rigid surface shape inside one lattice cell.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Geometry {
    #[default]
    Flat,
    Bumps(Vec<Bump>),
}

impl Geometry {
    /// Two 0.2 x 0.2 x 0.2 boxes on the unit cell, at `[0.2, 0.4]^2` and `[0.6, 0.8]^2`.
    pub fn two_bumps() -> Self {
        Geometry::Bumps(vec![
            Bump {
                lo: [0.2, 0.2],
                hi: [0.4, 0.4],
                height: 0.2,
            },
            Bump {
                lo: [0.6, 0.6],
                hi: [0.8, 0.8],
                height: 0.2,
            },
        ])
    }

    pub fn bumps(&self) -> &[Bump] {
        match self {
            Geometry::Flat => &[],
            Geometry::Bumps(b) => b,
        }
    }
}

/// Role of a node in the discrete problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeTag {
    Free,
    /// On the rigid surface, value zero.
    Surface,
    /// On the PML top wall, value of the incident wave.
    Top,
    /// Strictly inside the rigid body; carries no unknown.
    Excluded,
}

/// Uniform hexahedral mesh of `[0, L1] x [0, L2] x [0, top]`.
///
/// Nodes with `i1 < n1` and `i2 < n2` are masters. The node at
/// `(i1 + w1 n1, i2 + w2 n2, k)` is the image of master `(i1, i2, k)` with
/// value multiplied by `e^{i (alpha1 L1 w1 + alpha2 L2 w2)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct HexMesh {
    pub resolution: [usize; 3],
    pub period: [f64; 2],
    pub alpha: [f64; 2],
    pub spacing: [f64; 3],
    /// Height of the artificial boundary plane.
    pub h: f64,
    /// Level index of that plane.
    pub h_index: usize,
    pub top: f64,
    pub has_pml: bool,
    pub geometry: Geometry,
    solid: Vec<bool>,
    tags: Vec<NodeTag>,
}

fn grid_index(value: f64, step: f64, what: &str) -> Result<usize> {
    let r = value / step;
    let k = r.round();
    if (r - k).abs() > ALIGN_TOL * r.abs().max(1.0) || k < 0.0 {
        return Err(Error::Mesh(format!("{what} = {value} does not lie on a mesh plane (spacing {step})")));
    }
    Ok(k as usize)
}

/// Builds the mesh. Without `delta` the top is the plane `h` itself.
pub fn build_mesh(geometry: &Geometry, lattice: &Lattice, h: f64, delta: Option<f64>, resolution: [usize; 3]) -> Result<HexMesh> {
    let [n1, n2, n3] = resolution;
    if n1 == 0 || n2 == 0 || n3 < 2 {
        return Err(Error::Mesh(format!("resolution {resolution:?} too coarse (need n1, n2 >= 1 and n3 >= 2)")));
    }
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::Mesh(format!("artificial boundary height must be positive, got {h}")));
    }
    if let Some(d) = delta {
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::Mesh(format!("PML thickness must be positive, got {d}")));
        }
    }
    let top = h + delta.unwrap_or(0.0);
    let spacing = [lattice.period[0] / n1 as f64, lattice.period[1] / n2 as f64, top / n3 as f64];
    let h_index = grid_index(h, spacing[2], "h")?;

    let mut solid = vec![false; n1 * n2 * n3];
    for b in geometry.bumps() {
        let mut lo = [0usize; 3];
        let mut hi = [0usize; 3];
        for i in 0..2 {
            if !(b.lo[i] >= 0.0 && b.lo[i] < b.hi[i] && b.hi[i] <= lattice.period[i] + ALIGN_TOL) {
                return Err(Error::Mesh(format!("bump footprint {:?}..{:?} outside the cell", b.lo, b.hi)));
            }
            lo[i] = grid_index(b.lo[i], spacing[i], "bump edge")?;
            hi[i] = grid_index(b.hi[i], spacing[i], "bump edge")?;
        }
        if !(b.height > 0.0 && b.height < h) {
            return Err(Error::Mesh(format!("bump height {} must lie in (0, h = {h})", b.height)));
        }
        hi[2] = grid_index(b.height, spacing[2], "bump height")?;
        for ek in lo[2]..hi[2] {
            for e2 in lo[1]..hi[1] {
                for e1 in lo[0]..hi[0] {
                    solid[e1 + n1 * (e2 + n2 * ek)] = true;
                }
            }
        }
    }

    let mut mesh = HexMesh {
        resolution,
        period: lattice.period,
        alpha: lattice.alpha,
        spacing,
        h,
        h_index,
        top,
        has_pml: delta.is_some(),
        geometry: geometry.clone(),
        solid,
        tags: Vec::new(),
    };
    let mut tags = Vec::with_capacity(mesh.master_count());
    for k in 0..=n3 {
        for i2 in 0..n2 {
            for i1 in 0..n1 {
                let mut active = false;
                let mut touches_solid = false;
                for s in 0..8 {
                    let (s1, s2, s3) = (s & 1, (s >> 1) & 1, (s >> 2) & 1);
                    let ek = k as i64 - s3 as i64;
                    if ek < 0 || ek >= n3 as i64 {
                        continue;
                    }
                    if mesh.is_solid(i1 as i64 - s1 as i64, i2 as i64 - s2 as i64, ek as usize) {
                        touches_solid = true;
                    } else {
                        active = true;
                    }
                }
                tags.push(if !active {
                    NodeTag::Excluded
                } else if k == 0 || touches_solid {
                    NodeTag::Surface
                } else if mesh.has_pml && k == n3 {
                    NodeTag::Top
                } else {
                    NodeTag::Free
                });
            }
        }
    }
    mesh.tags = tags;
    Ok(mesh)
}

impl HexMesh {
    /// Number of nodes of the full `(n1+1)(n2+1)(n3+1)` lattice.
    pub fn lattice_node_count(&self) -> usize {
        let [n1, n2, n3] = self.resolution;
        (n1 + 1) * (n2 + 1) * (n3 + 1)
    }

    pub fn master_count(&self) -> usize {
        let [n1, n2, n3] = self.resolution;
        n1 * n2 * (n3 + 1)
    }

    pub fn element_count(&self) -> usize {
        self.solid.len()
    }

    /// Nodes per horizontal level.
    pub fn plane_size(&self) -> usize {
        self.resolution[0] * self.resolution[1]
    }

    pub fn node_id(&self, i1: usize, i2: usize, k: usize) -> usize {
        i1 + self.resolution[0] * (i2 + self.resolution[1] * k)
    }

    /// `(i1, i2, k)` of a master id.
    pub fn node_indices(&self, id: usize) -> (usize, usize, usize) {
        let [n1, n2, _] = self.resolution;
        (id % n1, (id / n1) % n2, id / (n1 * n2))
    }

    pub fn z(&self, k: usize) -> f64 {
        if k == self.resolution[2] {
            self.top
        } else {
            k as f64 * self.spacing[2]
        }
    }

    /// Coordinates of the (possibly unwrapped) lattice node.
    pub fn coords(&self, i1: i64, i2: i64, k: usize) -> [f64; 3] {
        [i1 as f64 * self.spacing[0], i2 as f64 * self.spacing[1], self.z(k)]
    }

    /// Master id and Bloch factor of an unwrapped lattice node.
    pub fn master_of(&self, i1: i64, i2: i64, k: usize) -> (usize, C64) {
        let (n1, n2) = (self.resolution[0] as i64, self.resolution[1] as i64);
        let (w1, w2) = (i1.div_euclid(n1), i2.div_euclid(n2));
        let id = self.node_id(i1.rem_euclid(n1) as usize, i2.rem_euclid(n2) as usize, k);
        let arg = self.alpha[0] * self.period[0] * w1 as f64 + self.alpha[1] * self.period[1] * w2 as f64;
        (id, Complex64::from_polar(1.0, arg))
    }

    /// Whether the (unwrapped) element lies inside the rigid body.
    pub fn is_solid(&self, e1: i64, e2: i64, ek: usize) -> bool {
        let (n1, n2) = (self.resolution[0] as i64, self.resolution[1] as i64);
        let id = e1.rem_euclid(n1) as usize + self.resolution[0] * (e2.rem_euclid(n2) as usize + self.resolution[1] * ek);
        self.solid[id]
    }

    /// Whether the element of level `ek` lies in the absorbing layer.
    pub fn in_pml(&self, ek: usize) -> bool {
        self.has_pml && ek >= self.h_index
    }

    pub fn tag(&self, id: usize) -> NodeTag {
        self.tags[id]
    }

    pub fn tags(&self) -> &[NodeTag] {
        &self.tags
    }

    /// Count of master nodes carrying each tag, in the order free, surface, top, excluded.
    pub fn tag_counts(&self) -> [usize; 4] {
        let mut c = [0; 4];
        for t in &self.tags {
            c[match t {
                NodeTag::Free => 0,
                NodeTag::Surface => 1,
                NodeTag::Top => 2,
                NodeTag::Excluded => 3,
            }] += 1;
        }
        c
    }
}
