//! U(n)-invariant Kähler metrics on CP^n described by a radial potential
//! F(s), s = log|z|^2, and their pointwise curvature.
//!
//! Derivatives are taken in the moment coordinate x = e^s / (1 + e^s) of
//! the Fubini-Study metric, applied to the residual R = F - F_FS. Writing
//! T = F'/x and P = F''/(x(1-x)) (primes are d/ds), both are smooth and
//! positive on the closed interval [0, 1], which is how the two poles of
//! the compactification are handled without special boundary stencils.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::quadrature::{composite_weights, neumaier};
use crate::stencil::Stencils;

pub const DEFAULT_TOL_BC: f64 = 1e-6;
/// Allowed gap between a node value and the skeleton interpolant, relative
/// to `1 + max |residual|`.
pub const SKELETON_TOL: f64 = 1e-3;
pub const MIN_NODES: usize = 16;
pub const NORM_CONVENTION: &str =
    "frame-l2: sqrt of the sum of squares of R(i,jb,k,lb) over all n^4 unitary-frame index tuples";

/// (x, 1 - x) for x = e^s / (1 + e^s), each computed without cancellation.
pub fn moment(s: f64) -> (f64, f64) {
    (1.0 / (1.0 + (-s).exp()), 1.0 / (1.0 + s.exp()))
}

/// Fubini-Study potential (n+1) log(1 + e^s).
pub fn fs_potential(n: usize, s: f64) -> f64 {
    (n + 1) as f64 * (s.max(0.0) + (-s.abs()).exp().ln_1p())
}

/// Volume of the class per unit angular volume, (n+1)^n / n.
pub fn class_volume(n: usize) -> f64 {
    ((n + 1) as f64).powi(n as i32) / n as f64
}

/// Grid data shared by every profile on the same s-nodes.
#[derive(Debug)]
pub struct Grid {
    pub s: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub stencils: Stencils,
    pub ds_weights: Vec<f64>,
}

impl Grid {
    pub fn new(s: &[f64]) -> Result<Arc<Grid>> {
        if s.len() < MIN_NODES {
            return Err(LabError::Config(format!(
                "grid has {} nodes, need at least {MIN_NODES}",
                s.len()
            )));
        }
        if s.iter().any(|v| !v.is_finite()) {
            return Err(LabError::Config("grid contains non-finite values".into()));
        }
        if let Some(i) = s.windows(2).position(|w| w[1] <= w[0]) {
            return Err(LabError::Config(format!("grid not strictly increasing at index {i}")));
        }
        let (x, y): (Vec<f64>, Vec<f64>) = s.iter().map(|&v| moment(v)).unzip();
        if let Some(i) = x.windows(2).position(|w| w[1] <= w[0]) {
            return Err(LabError::Config(format!(
                "grid nodes {i} and {} coincide in the moment coordinate",
                i + 1
            )));
        }
        let stencils = Stencils::new(&x)
            .ok_or_else(|| LabError::Config("grid too coarse for derivative stencils".into()))?;
        let ds_weights = composite_weights(s);
        Ok(Arc::new(Grid { s: s.to_vec(), x, y, stencils, ds_weights }))
    }

    pub fn uniform(half_width: f64, nodes: usize) -> Result<Arc<Grid>> {
        Self::new(&uniform_nodes(half_width, nodes)?)
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    /// Smallest spacing of the skeleton nodes in the moment coordinate.
    pub fn min_stencil_gap(&self) -> f64 {
        let sk = &self.stencils.skeleton;
        sk.windows(2).map(|w| self.x[w[1]] - self.x[w[0]]).fold(f64::INFINITY, f64::min)
    }
}

/// `nodes` equispaced points on [-half_width, half_width].
pub fn uniform_nodes(half_width: f64, nodes: usize) -> Result<Vec<f64>> {
    if !(half_width > 0.0) || nodes < 2 {
        return Err(LabError::Config("grid needs L > 0 and at least 2 nodes".into()));
    }
    Ok((0..nodes)
        .map(|i| -half_width + 2.0 * half_width * i as f64 / (nodes - 1) as f64)
        .collect())
}

/// Asymptotic closure beyond the grid: F ~ a e^s + c_minus at the left end,
/// F ~ (n+1) s + c_plus + b e^{-s} at the right end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryModel {
    pub a: f64,
    pub c_minus: f64,
    pub b: f64,
    pub c_plus: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub n: usize,
    pub grid: Vec<f64>,
    #[serde(rename = "F")]
    pub f: Vec<f64>,
    #[serde(default = "default_tol_bc")]
    pub tol_bc: f64,
}

fn default_tol_bc() -> f64 {
    DEFAULT_TOL_BC
}

impl RadialProfile {
    /// The Fubini-Study profile, whose Ricci form equals its Kähler form.
    pub fn fubini_study(n: usize, grid: &[f64]) -> Result<Self> {
        Self::from_residual(n, grid, &vec![0.0; grid.len()])
    }

    /// F = F_FS + residual on the given grid.
    pub fn from_residual(n: usize, grid: &[f64], residual: &[f64]) -> Result<Self> {
        if n == 0 {
            return Err(LabError::Config("complex dimension must be at least 1".into()));
        }
        if residual.len() != grid.len() {
            return Err(LabError::Config("residual length differs from grid".into()));
        }
        Grid::new(grid)?;
        let f = grid.iter().zip(residual).map(|(&s, &r)| fs_potential(n, s) + r).collect();
        Ok(Self { n, grid: grid.to_vec(), f, tol_bc: DEFAULT_TOL_BC })
    }

    pub fn residual(&self) -> Vec<f64> {
        self.grid.iter().zip(&self.f).map(|(&s, &f)| f - fs_potential(self.n, s)).collect()
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.grid[self.grid.len() - 1] - self.grid[0])
    }

    /// Checks every profile invariant and returns the node geometry.
    pub fn geometry(&self) -> Result<ProfileGeometry> {
        if self.n == 0 {
            return Err(LabError::Config("complex dimension must be at least 1".into()));
        }
        if self.f.len() != self.grid.len() {
            return Err(LabError::Config("F and grid lengths differ".into()));
        }
        if self.f.iter().any(|v| !v.is_finite()) {
            return Err(LabError::Config("F contains non-finite values".into()));
        }
        let grid = Grid::new(&self.grid)?;
        let residual = self.residual();
        let geo = ProfileGeometry::from_residual(grid, self.n, &residual)?;
        // Off-skeleton values only enter through interpolation, so a stray
        // value there would otherwise go unnoticed.
        let scale = 1.0 + residual.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (i, (r, j)) in residual.iter().zip(&geo.jets).enumerate() {
            if (r - j[0]).abs() > SKELETON_TOL * scale {
                return Err(LabError::Config(format!(
                    "F at s = {} departs from its smooth interpolant by {:.3e}",
                    self.grid[i],
                    r - j[0]
                )));
            }
        }
        geo.check_boundary(self.tol_bc)?;
        Ok(geo)
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry().map(|_| ())
    }

    pub fn boundary_model(&self) -> Result<BoundaryModel> {
        let geo = self.geometry()?;
        Ok(geo.boundary_model(&self.f))
    }
}

/// Pointwise data at one node, all in terms of the moment coordinate.
#[derive(Debug, Clone, Copy, Default)]
pub struct Local {
    pub x: f64,
    pub y: f64,
    pub t: f64,
    pub tx: f64,
    pub txx: f64,
    pub p: f64,
    pub px: f64,
    pub pxx: f64,
    /// Unitary-frame components: R(1,1b,1,1b), R(1,1b,k,kb), R(k,kb,l,lb) for
    /// k != l transverse. The transverse same-plane component is 2 d.
    pub a: f64,
    pub b: f64,
    pub d: f64,
    pub ric_radial: f64,
    pub ric_transverse: f64,
    pub ric_radial_pot: f64,
    pub ric_transverse_pot: f64,
    /// d/dx of the Ricci potential H with Ric - omega = i dd-bar H.
    pub hx: f64,
}

impl Local {
    pub fn new(n: usize, x: f64, y: f64, d: &[f64; 5]) -> Self {
        let nf = n as f64;
        let t = (nf + 1.0) + y * d[1];
        let tx = -d[1] + y * d[2];
        let txx = -2.0 * d[2] + y * d[3];
        let txxx = -3.0 * d[3] + y * d[4];
        let p = t + x * tx;
        let px = 2.0 * tx + x * txx;
        let pxx = 3.0 * txx + x * txxx;
        let phi_tt = -2.0 + (y - x) * px / p + x * y * (pxx * p - px * px) / (p * p);
        let a = -phi_tt / p;
        let b = -((-p + y * px) / t - y * p * tx / (t * t)) / p;
        let dd = (t - y * tx) / (t * t);
        let ric_radial = a + (nf - 1.0) * b;
        let ric_transverse = b + nf * dd;
        let hx = -px / p - (nf - 1.0) * tx / t - d[1];
        let hxx = -(pxx / p - px * px / (p * p)) - (nf - 1.0) * (txx / t - tx * tx / (t * t)) - d[2];
        let ric_radial_pot = 1.0 + ((y - x) * hx + x * y * hxx) / p;
        let ric_transverse_pot = 1.0 + y * hx / t;
        Local {
            x,
            y,
            t,
            tx,
            txx,
            p,
            px,
            pxx,
            a,
            b,
            d: dd,
            ric_radial,
            ric_transverse,
            ric_radial_pot,
            ric_transverse_pot,
            hx,
        }
    }

    /// F'(s).
    pub fn tau(&self) -> f64 {
        self.x * self.t
    }

    /// F''(s).
    pub fn fpp(&self) -> f64 {
        self.x * self.y * self.p
    }

    pub fn scalar(&self, n: usize) -> f64 {
        self.ric_radial + (n as f64 - 1.0) * self.ric_transverse
    }

    pub fn ric_min(&self, n: usize) -> f64 {
        if n == 1 {
            self.ric_radial
        } else {
            self.ric_radial.min(self.ric_transverse)
        }
    }

    pub fn ric_max(&self, n: usize) -> f64 {
        if n == 1 {
            self.ric_radial
        } else {
            self.ric_radial.max(self.ric_transverse)
        }
    }

    pub fn ric0_sq(&self, n: usize) -> f64 {
        let (r, t) = (self.ric_radial - 1.0, self.ric_transverse - 1.0);
        r * r + (n as f64 - 1.0) * t * t
    }

    pub fn ric0_max_abs(&self, n: usize) -> f64 {
        let r = (self.ric_radial - 1.0).abs();
        if n == 1 {
            r
        } else {
            r.max((self.ric_transverse - 1.0).abs())
        }
    }

    pub fn riem_sq(&self, n: usize) -> f64 {
        let m = n as f64 - 1.0;
        let c = 2.0 * self.d;
        self.a * self.a + m * c * c + 2.0 * (2.0 * m * self.b * self.b + m * (m - 1.0) * self.d * self.d)
    }

    pub fn q0_sq(&self, n: usize) -> f64 {
        let m = n as f64 - 1.0;
        let k = 1.0 / (n as f64 + 1.0);
        let (a, b, c, d) = (self.a - 2.0 * k, self.b - k, 2.0 * self.d - 2.0 * k, self.d - k);
        a * a + m * c * c + 2.0 * (2.0 * m * b * b + m * (m - 1.0) * d * d)
    }
}

/// Distinct unitary-frame curvature components of a U(n)-invariant metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct R4 {
    pub radial_radial: f64,
    pub radial_transverse: f64,
    pub transverse_same: f64,
    pub transverse_cross: f64,
    pub cross_term: f64,
}

impl R4 {
    /// Full table R[i][j][k][l] standing for R(i, jb, k, lb), index 0 radial.
    pub fn expand(&self, n: usize) -> Vec<f64> {
        let mut t = vec![0.0; n * n * n * n];
        let at = |i: usize, j: usize, k: usize, l: usize| ((i * n + j) * n + k) * n + l;
        for i in 0..n {
            for k in 0..n {
                let v = if i == k {
                    if i == 0 {
                        self.radial_radial
                    } else {
                        self.transverse_same
                    }
                } else if i == 0 || k == 0 {
                    self.radial_transverse
                } else {
                    self.transverse_cross
                };
                t[at(i, i, k, k)] = v;
                if i != k {
                    let w = if i == 0 || k == 0 { self.cross_term } else { self.transverse_cross };
                    t[at(i, k, k, i)] = w;
                }
            }
        }
        t
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureFrame {
    pub s: f64,
    pub metric_eigs: (f64, f64),
    pub r4: R4,
    pub ricci_eigs: (f64, f64),
    pub ricci_eigs_potential: (f64, f64),
    pub scalar: f64,
    pub ric0_norm: f64,
    pub q0_norm: f64,
    pub riem_norm: f64,
}

impl CurvatureFrame {
    fn from_local(n: usize, s: f64, l: &Local) -> Self {
        CurvatureFrame {
            s,
            metric_eigs: (l.y * l.y * l.p, l.y * l.t),
            r4: R4 {
                radial_radial: l.a,
                radial_transverse: l.b,
                transverse_same: 2.0 * l.d,
                transverse_cross: l.d,
                cross_term: l.b,
            },
            ricci_eigs: (l.ric_radial, l.ric_transverse),
            ricci_eigs_potential: (l.ric_radial_pot, l.ric_transverse_pot),
            scalar: l.scalar(n),
            ric0_norm: l.ric0_sq(n).sqrt(),
            q0_norm: l.q0_sq(n).sqrt(),
            riem_norm: l.riem_sq(n).sqrt(),
        }
    }
}

/// Node-by-node geometry of a profile.
#[derive(Debug, Clone)]
pub struct ProfileGeometry {
    pub n: usize,
    pub grid: Arc<Grid>,
    pub residual: Vec<f64>,
    pub jets: Vec<[f64; 5]>,
    pub local: Vec<Local>,
    /// Weights of (1/V) times the volume form, tails folded into the ends.
    pub mu: Vec<f64>,
}

/// Derivative jets of a grid function with its middle value removed before
/// differentiation and restored in the order-0 slot.
pub fn jets_of(grid: &Grid, u: &[f64]) -> Vec<[f64; 5]> {
    let c = u[u.len() / 2];
    let shifted: Vec<f64> = u.iter().map(|v| v - c).collect();
    let mut j = grid.stencils.jets(&shifted);
    for d in j.iter_mut() {
        d[0] += c;
    }
    j
}

impl ProfileGeometry {
    pub fn from_residual(grid: Arc<Grid>, n: usize, residual: &[f64]) -> Result<Self> {
        let jets = jets_of(&grid, residual);
        Self::from_jets(grid, n, residual.to_vec(), jets)
    }

    pub fn from_jets(grid: Arc<Grid>, n: usize, residual: Vec<f64>, jets: Vec<[f64; 5]>) -> Result<Self> {
        let local: Vec<Local> = (0..grid.len()).map(|i| Local::new(n, grid.x[i], grid.y[i], &jets[i])).collect();
        for (i, l) in local.iter().enumerate() {
            if !(l.t > 0.0) {
                return Err(LabError::Positivity { s: grid.s[i], what: format!("F' <= 0 (T = {})", l.t) });
            }
            if !(l.p > 0.0) {
                return Err(LabError::Positivity { s: grid.s[i], what: format!("F'' <= 0 (P = {})", l.p) });
            }
            if !l.a.is_finite() || !l.b.is_finite() || !l.d.is_finite() {
                return Err(LabError::Numerical(format!("non-finite curvature at s = {}", grid.s[i])));
            }
        }
        let mu = volume_weights(&grid, n, &local);
        Ok(Self { n, grid, residual, jets, local, mu })
    }

    pub fn len(&self) -> usize {
        self.local.len()
    }

    pub fn is_empty(&self) -> bool {
        self.local.is_empty()
    }

    /// (1/V) times the integral of g against the volume form.
    pub fn average(&self, g: &[f64]) -> f64 {
        neumaier(self.mu.iter().zip(g).map(|(w, v)| w * v))
    }

    pub fn average_with<F: Fn(&Local) -> f64>(&self, f: F) -> f64 {
        neumaier(self.mu.iter().zip(&self.local).map(|(w, l)| w * f(l)))
    }

    pub fn frame(&self, i: usize) -> CurvatureFrame {
        CurvatureFrame::from_local(self.n, self.grid.s[i], &self.local[i])
    }

    /// Node extremum of `f`, polished by a golden-section search over the two
    /// neighbouring intervals.
    pub fn extremum<F: Fn(&Local) -> f64>(&self, f: F, maximize: bool) -> f64 {
        let sign = if maximize { -1.0 } else { 1.0 };
        let g = |l: &Local| sign * f(l);
        let (i, best) = self
            .local
            .iter()
            .enumerate()
            .map(|(i, l)| (i, g(l)))
            .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
        let k = self.len() - 1;
        let (mut a, mut b) = (self.grid.s[i.saturating_sub(1)], self.grid.s[(i + 1).min(k)]);
        let eval = |s: f64| local_at(self, s).map(|l| g(&l)).unwrap_or(f64::INFINITY);
        let r = 0.5 * (5f64.sqrt() - 1.0);
        let mut c = b - r * (b - a);
        let mut d = a + r * (b - a);
        let (mut fc, mut fd) = (eval(c), eval(d));
        for _ in 0..60 {
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - r * (b - a);
                fc = eval(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + r * (b - a);
                fd = eval(d);
            }
        }
        sign * best.min(fc).min(fd)
    }

    /// Smallest Ricci eigenvalue relative to the metric over the profile.
    pub fn ricci_lower_bound(&self) -> f64 {
        let n = self.n;
        self.extremum(|l| l.ric_min(n), false)
    }

    pub fn ricci_upper_bound(&self) -> f64 {
        let n = self.n;
        self.extremum(|l| l.ric_max(n), true)
    }

    /// Largest frame norm of the curvature tensor over the profile.
    pub fn riem_sup_norm(&self) -> f64 {
        let n = self.n;
        self.extremum(|l| l.riem_sq(n).sqrt(), true)
    }

    pub fn ricci_lower_bound_nodes(&self) -> f64 {
        self.local.iter().map(|l| l.ric_min(self.n)).fold(f64::INFINITY, f64::min)
    }

    pub fn riem_sup_nodes(&self) -> f64 {
        self.local.iter().map(|l| l.riem_sq(self.n).sqrt()).fold(0.0, f64::max)
    }

    pub fn ric0_sup(&self) -> f64 {
        self.local.iter().map(|l| l.ric0_max_abs(self.n)).fold(0.0, f64::max)
    }

    pub fn q0_sup(&self) -> f64 {
        self.local.iter().map(|l| l.q0_sq(self.n).sqrt()).fold(0.0, f64::max)
    }

    /// Boundary closure: F' - F'' -> 0 at the left end and F' + F'' -> n+1
    /// at the right end, both at second order in the pole distance.
    pub fn check_boundary(&self, tol: f64) -> Result<()> {
        let first = &self.local[0];
        let last = &self.local[self.len() - 1];
        let left = (first.tau() - first.fpp()).abs();
        let right = (last.tau() + last.fpp() - (self.n + 1) as f64).abs();
        if left >= tol {
            return Err(LabError::Boundary(format!("left closure residual {left:.3e} exceeds {tol:.1e}")));
        }
        if right >= tol {
            return Err(LabError::Boundary(format!("right closure residual {right:.3e} exceeds {tol:.1e}")));
        }
        Ok(())
    }

    pub fn boundary_model(&self, f: &[f64]) -> BoundaryModel {
        let k = self.len() - 1;
        let (s0, s1) = (self.grid.s[0], self.grid.s[k]);
        let a = self.local[0].t * self.local[0].y;
        let b = self.local[k].x * self.local[k].x * self.local[k].p;
        BoundaryModel {
            a,
            c_minus: f[0] - a * s0.exp(),
            b,
            c_plus: f[k] - (self.n + 1) as f64 * s1 - b * (-s1).exp(),
        }
    }
}

fn volume_weights(grid: &Grid, n: usize, local: &[Local]) -> Vec<f64> {
    let v = class_volume(n);
    let nf = n as f64;
    let mut mu: Vec<f64> = local
        .iter()
        .zip(&grid.ds_weights)
        .map(|(l, w)| w * l.fpp() * l.tau().powi(n as i32 - 1) / v)
        .collect();
    let k = local.len() - 1;
    mu[0] += local[0].tau().powi(n as i32) / nf / v;
    mu[k] += ((nf + 1.0).powi(n as i32) - local[k].tau().powi(n as i32)) / nf / v;
    mu
}

/// Interpolating evaluator of the local geometry between nodes.
pub struct PointEvaluator<'a> {
    geo: &'a ProfileGeometry,
    shifted: Vec<f64>,
    center: f64,
}

impl<'a> PointEvaluator<'a> {
    pub fn new(geo: &'a ProfileGeometry) -> Self {
        let center = geo.residual[geo.residual.len() / 2];
        let shifted = geo.residual.iter().map(|v| v - center).collect();
        PointEvaluator { geo, shifted, center }
    }

    /// Local data at moment coordinate x; extrapolates outside the grid span.
    pub fn at_moment(&self, x: f64) -> Local {
        let mut d = self.geo.grid.stencils.jet_at(&self.shifted, x);
        d[0] += self.center;
        Local::new(self.geo.n, x, 1.0 - x, &d)
    }
}

/// Geometry at an arbitrary point inside the grid span.
pub fn local_at(geo: &ProfileGeometry, s: f64) -> Result<Local> {
    let g = &geo.grid;
    if !(s >= g.s[0] && s <= g.s[g.len() - 1]) {
        return Err(LabError::Domain(format!("s = {s} outside [{}, {}]", g.s[0], g.s[g.len() - 1])));
    }
    let (x, y) = moment(s);
    let c = geo.residual[geo.residual.len() / 2];
    let shifted: Vec<f64> = geo.residual.iter().map(|v| v - c).collect();
    let mut d = g.stencils.jet_at(&shifted, x);
    d[0] += c;
    Ok(Local::new(geo.n, x, y, &d))
}

/// Radial and transverse coordinate-frame metric eigenvalues at
/// (e^{s/2}, 0, ..., 0).
pub fn metric_at(p: &RadialProfile, s: f64) -> Result<(f64, f64)> {
    let geo = p.geometry()?;
    let l = local_at(&geo, s)?;
    let eig = (l.y * l.y * l.p, l.y * l.t);
    if !(eig.0 > 0.0 && eig.1 > 0.0) {
        return Err(LabError::Positivity { s, what: format!("metric eigenvalues {eig:?}") });
    }
    Ok(eig)
}

pub fn curvature_at(p: &RadialProfile, s: f64) -> Result<CurvatureFrame> {
    let geo = p.geometry()?;
    let l = local_at(&geo, s)?;
    Ok(CurvatureFrame::from_local(p.n, s, &l))
}

pub fn ricci_lower_bound(p: &RadialProfile) -> Result<f64> {
    Ok(p.geometry()?.ricci_lower_bound())
}

pub fn riem_sup_norm(p: &RadialProfile) -> Result<f64> {
    Ok(p.geometry()?.riem_sup_norm())
}

/// Constant with |Riem| >= |R| / c_norm(n) under the frame-l2 convention.
pub fn c_norm(n: usize) -> f64 {
    n as f64
}

/// |Riem| of the Fubini-Study metric in the frame-l2 convention.
pub fn fs_riem_norm(n: usize) -> f64 {
    (2.0 * n as f64 / (n as f64 + 1.0)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(nodes: usize) -> Vec<f64> {
        uniform_nodes(12.0, nodes).unwrap()
    }

    #[test]
    fn fs_value_at_origin() {
        let p = RadialProfile::fubini_study(1, &grid(256)).unwrap();
        let f0 = fs_potential(1, 0.0);
        assert!((f0 - 2.0 * 2f64.ln()).abs() < 1e-15);
        assert!(p.validate().is_ok());
    }

    #[test]
    fn fs_metric_at_origin() {
        let p = RadialProfile::fubini_study(1, &grid(256)).unwrap();
        let (r, t) = metric_at(&p, 0.0).unwrap();
        assert!((r - 0.5).abs() < 1e-12 && (t - 1.0).abs() < 1e-12);
        assert!(metric_at(&p, 13.0).is_err());
    }

    #[test]
    fn fs_is_einstein() {
        for n in 1..=3 {
            let geo = RadialProfile::fubini_study(n, &grid(256)).unwrap().geometry().unwrap();
            for l in &geo.local {
                assert!((l.ric_radial - 1.0).abs() < 1e-12);
                assert!((l.ric_transverse - 1.0).abs() < 1e-12);
                assert!((l.scalar(n) - n as f64).abs() < 1e-12);
                assert!(l.q0_sq(n) < 1e-20);
            }
            assert!((geo.riem_sup_norm() - fs_riem_norm(n)).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::new(&[0.0, 1.0, 2.0]).is_err());
        let mut g = grid(64);
        g.swap(3, 4);
        assert!(Grid::new(&g).is_err());
    }

    #[test]
    fn expansion_has_kahler_symmetries() {
        let r = R4 { radial_radial: 0.7, radial_transverse: 0.3, transverse_same: 0.8, transverse_cross: 0.4, cross_term: 0.3 };
        let n = 3;
        let t = r.expand(n);
        let at = |i: usize, j: usize, k: usize, l: usize| t[((i * n + j) * n + k) * n + l];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        assert_eq!(at(i, j, k, l), at(k, j, i, l));
                        assert_eq!(at(i, j, k, l), at(i, l, k, j));
                        assert_eq!(at(i, j, k, l), at(j, i, l, k));
                    }
                }
            }
        }
    }
}
