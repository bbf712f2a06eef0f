//! Small linear-algebra kernels: 3x3-block tridiagonal LU, restarted GMRES
//! and a dense 1-norm condition number.

use nalgebra::{Const, DimMin, SMatrix, ToTypenum};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::{CMat3, CVec3, C64};

/// Condition estimates above this are treated as singular.
pub const MAX_CONDITION: f64 = 1e12;

/// Induced 1-norm (maximum absolute column sum).
pub fn norm1<const R: usize, const N: usize>(m: &SMatrix<C64, R, N>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Solves `a x = b` for several right-hand sides with partial pivoting and
/// reports the 1-norm condition number of `a`.
pub fn dense_solve<const N: usize, const K: usize>(
    a: &SMatrix<C64, N, N>,
    b: &SMatrix<C64, N, K>,
) -> Result<(SMatrix<C64, N, K>, f64)>
where
    Const<N>: DimMin<Const<N>, Output = Const<N>> + ToTypenum,
{
    let lu = a.lu();
    let inv = lu.try_inverse().ok_or(Error::IllConditioned { estimate: f64::INFINITY })?;
    let cond = norm1(a) * norm1(&inv);
    if !cond.is_finite() || cond > MAX_CONDITION {
        return Err(Error::IllConditioned { estimate: cond });
    }
    let x = a.lu().solve(b).ok_or(Error::IllConditioned { estimate: cond })?;
    Ok((x, cond))
}

fn inverse3(m: &CMat3) -> Result<(CMat3, f64)> {
    let inv = m
        .lu()
        .try_inverse()
        .ok_or(Error::IllConditioned { estimate: f64::INFINITY })?;
    let cond = norm1(m) * norm1(&inv);
    if !cond.is_finite() || cond > MAX_CONDITION {
        return Err(Error::IllConditioned { estimate: cond });
    }
    Ok((inv, cond))
}

/// Block tridiagonal matrix with 3x3 blocks.
///
/// `lower[i]` couples row `i + 1` to column `i`, `upper[i]` couples row `i`
/// to column `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockTridiag {
    pub lower: Vec<CMat3>,
    pub diag: Vec<CMat3>,
    pub upper: Vec<CMat3>,
}

impl BlockTridiag {
    pub fn zeros(n: usize) -> Self {
        let off = n.saturating_sub(1);
        Self {
            lower: vec![CMat3::zeros(); off],
            diag: vec![CMat3::zeros(); n],
            upper: vec![CMat3::zeros(); off],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn matvec(&self, x: &[CVec3]) -> Vec<CVec3> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut y = self.diag[i] * x[i];
                if i > 0 {
                    y += self.lower[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    y += self.upper[i] * x[i + 1];
                }
                y
            })
            .collect()
    }

    /// Block LU without inter-block pivoting; pivot blocks are inverted
    /// with partial pivoting.
    pub fn factor(&self) -> Result<BlockTridiagLu> {
        let n = self.len();
        let mut pivots_inv = Vec::with_capacity(n);
        let mut g = Vec::with_capacity(n.saturating_sub(1));
        let mut worst = 0.0f64;
        let mut s = self.diag.first().copied().unwrap_or_else(CMat3::zeros);
        for i in 0..n {
            let (inv, cond) = inverse3(&s)?;
            worst = worst.max(cond);
            if i + 1 < n {
                let gi = inv * self.upper[i];
                s = self.diag[i + 1] - self.lower[i] * gi;
                g.push(gi);
            }
            pivots_inv.push(inv);
        }
        Ok(BlockTridiagLu {
            lower: self.lower.clone(),
            pivots_inv,
            g,
            pivot_condition: worst,
        })
    }
}

/// Factors of a [`BlockTridiag`].
#[derive(Debug, Clone)]
pub struct BlockTridiagLu {
    lower: Vec<CMat3>,
    pivots_inv: Vec<CMat3>,
    g: Vec<CMat3>,
    /// Largest 1-norm condition number among the pivot blocks.
    pub pivot_condition: f64,
}

impl BlockTridiagLu {
    /// Overwrites `b` with the solution.
    pub fn solve_in_place(&self, b: &mut [CVec3]) {
        let n = self.pivots_inv.len();
        for i in 0..n {
            let mut r = b[i];
            if i > 0 {
                r -= self.lower[i - 1] * b[i - 1];
            }
            b[i] = self.pivots_inv[i] * r;
        }
        for i in (0..n.saturating_sub(1)).rev() {
            let next = b[i + 1];
            b[i] -= self.g[i] * next;
        }
    }

    pub fn solve(&self, b: &[CVec3]) -> Vec<CVec3> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

/// Restarted GMRES settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmresConfig {
    pub max_iter: usize,
    pub restart: usize,
    /// Relative residual target `|b - A x| / |b|`.
    pub tol: f64,
}

impl Default for GmresConfig {
    fn default() -> Self {
        Self {
            max_iter: 500,
            restart: 60,
            tol: 1e-8,
        }
    }
}

/// Outcome of a GMRES run.
#[derive(Debug, Clone, PartialEq)]
pub struct GmresOutcome {
    pub iterations: usize,
    /// True relative residual at exit.
    pub residual: f64,
    /// Relative residual estimate after every iteration.
    pub history: Vec<f64>,
    pub converged: bool,
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Right-preconditioned restarted GMRES for complex systems.
///
/// `apply(x, y)` writes `A x` into `y`, `precond(r, z)` writes `M^{-1} r`
/// into `z`. `x` holds the initial guess and receives the result.
pub fn gmres<A, P>(apply: A, precond: P, b: &[C64], x: &mut [C64], cfg: &GmresConfig) -> GmresOutcome
where
    A: Fn(&[C64], &mut [C64]),
    P: Fn(&[C64], &mut [C64]),
{
    let n = b.len();
    let zero = Complex64::new(0.0, 0.0);
    let bnorm = norm(b);
    let mut history = Vec::new();
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = zero);
        return GmresOutcome {
            iterations: 0,
            residual: 0.0,
            history,
            converged: true,
        };
    }
    let m = cfg.restart.max(1);
    let mut r = vec![zero; n];
    let mut tmp = vec![zero; n];
    let mut iterations = 0;

    let residual = |x: &[C64], r: &mut Vec<C64>, tmp: &mut Vec<C64>| {
        apply(x, tmp);
        for i in 0..n {
            r[i] = b[i] - tmp[i];
        }
        norm(r)
    };

    let mut rnorm = residual(x, &mut r, &mut tmp);
    while iterations < cfg.max_iter && rnorm / bnorm > cfg.tol {
        let mut v: Vec<Vec<C64>> = Vec::with_capacity(m + 1);
        v.push(r.iter().map(|z| z / rnorm).collect());
        let mut hcol: Vec<Vec<C64>> = Vec::with_capacity(m);
        let mut cs: Vec<f64> = Vec::with_capacity(m);
        let mut sn: Vec<C64> = Vec::with_capacity(m);
        let mut e = vec![Complex64::new(rnorm, 0.0)];
        let mut z = vec![zero; n];
        let mut w = vec![zero; n];
        let mut k = 0;
        while k < m && iterations < cfg.max_iter {
            precond(&v[k], &mut z);
            apply(&z, &mut w);
            let mut h = vec![zero; k + 2];
            for j in 0..=k {
                h[j] = dot(&v[j], &w);
                let hj = h[j];
                w.iter_mut().zip(&v[j]).for_each(|(wi, vi)| *wi -= hj * vi);
            }
            let wn = norm(&w);
            h[k + 1] = wn.into();
            for j in 0..k {
                let t = h[j] * cs[j] + sn[j] * h[j + 1];
                h[j + 1] = -sn[j].conj() * h[j] + h[j + 1] * cs[j];
                h[j] = t;
            }
            let (a, bb) = (h[k], h[k + 1]);
            let rho = (a.norm_sqr() + bb.norm_sqr()).sqrt();
            let (c, s) = if a.norm() == 0.0 {
                (0.0, Complex64::new(1.0, 0.0))
            } else {
                let u = a / a.norm();
                (a.norm() / rho, u * bb.conj() / rho)
            };
            h[k] = if a.norm() == 0.0 { bb } else { a / a.norm() * rho };
            h[k + 1] = zero;
            cs.push(c);
            sn.push(s);
            let ek = e[k];
            e.push(-s.conj() * ek);
            e[k] = ek * c;
            hcol.push(h);
            iterations += 1;
            k += 1;
            let est = e[k].norm() / bnorm;
            history.push(est);
            if est <= cfg.tol || wn == 0.0 {
                break;
            }
            v.push(w.iter().map(|z| z / wn).collect());
        }
        // back substitution for the least-squares coefficients
        let mut y = vec![zero; k];
        for i in (0..k).rev() {
            let mut s = e[i];
            for j in i + 1..k {
                s -= hcol[j][i] * y[j];
            }
            y[i] = s / hcol[i][i];
        }
        let mut upd = vec![zero; n];
        for (j, yj) in y.iter().enumerate() {
            upd.iter_mut().zip(&v[j]).for_each(|(u, vj)| *u += yj * vj);
        }
        precond(&upd, &mut z);
        x.iter_mut().zip(&z).for_each(|(xi, zi)| *xi += zi);
        rnorm = residual(x, &mut r, &mut tmp);
    }
    let rel = rnorm / bnorm;
    GmresOutcome {
        iterations,
        residual: rel,
        history,
        converged: rel <= cfg.tol,
    }
}
