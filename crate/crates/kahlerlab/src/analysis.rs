//! Diameter, first eigenvalue and related diagnostics of a radial metric.
//!
//! Riemannian lengths use the metric 2 Re g, so that the Fubini-Study
//! sphere with Ric = omega is the round unit sphere (diameter pi, first
//! eigenvalue 2).

use serde::{Deserialize, Serialize};

use crate::constants::sprouse_threshold;
use crate::error::{LabError, Result};
use crate::geometry::{Local, PointEvaluator, ProfileGeometry};
use crate::quadrature::{gauss_legendre, neumaier};

use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiameterParts {
    pub radial: f64,
    pub transverse: f64,
    pub diameter: f64,
}

/// Pole-to-pole length of the metric scale * g along a meridian.
pub fn radial_length(geo: &ProfileGeometry, scale: f64) -> f64 {
    let f: Vec<f64> = geo.local.iter().map(|l| (scale * l.fpp() / 2.0).sqrt()).collect();
    let body = neumaier(geo.grid.ds_weights.iter().zip(&f).map(|(w, v)| w * v));
    // Beyond the grid the integrand decays like e^{-|s|/2}.
    body + 2.0 * f[0] + 2.0 * f[f.len() - 1]
}

pub fn diameter(geo: &ProfileGeometry) -> DiameterParts {
    let radial = radial_length(geo, 1.0);
    let transverse = geo.local.iter().map(|l| PI * (l.tau() / 2.0).sqrt()).fold(0.0, f64::max);
    let diameter = if geo.n == 1 { radial } else { radial.max(transverse) };
    DiameterParts { radial, transverse, diameter }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    /// First nonzero eigenvalue among U(n)-invariant functions.
    pub invariant: f64,
    /// Lowest eigenvalue among functions f(s) e^{i theta} (n = 1 only).
    pub angular: Option<f64>,
    pub lambda1: f64,
    /// True when only the invariant sector was searched.
    pub sector_bound: bool,
}

/// Symmetric tridiagonal matrix.
#[derive(Debug, Clone)]
struct Tridiag {
    diag: Vec<f64>,
    off: Vec<f64>,
}

impl Tridiag {
    fn zeros(m: usize) -> Self {
        Tridiag { diag: vec![0.0; m], off: vec![0.0; m - 1] }
    }

    /// Number of eigenvalues of (self, mass) below sigma, by Sylvester's law
    /// of inertia applied to the LDL^T factorization of self - sigma mass.
    fn count_below(&self, mass: &Tridiag, sigma: f64) -> usize {
        let mut count = 0;
        let mut d_prev = 1.0;
        let mut e_prev = 0.0;
        for i in 0..self.diag.len() {
            let a = self.diag[i] - sigma * mass.diag[i];
            let mut d = a - if i > 0 { e_prev * e_prev / d_prev } else { 0.0 };
            if d == 0.0 {
                d = -f64::EPSILON * a.abs().max(1e-300);
            }
            if d < 0.0 {
                count += 1;
            }
            if i + 1 < self.diag.len() {
                e_prev = self.off[i] - sigma * mass.off[i];
            }
            d_prev = d;
        }
        count
    }

    fn quad(&self, u: &[f64]) -> f64 {
        let mut acc = neumaier(self.diag.iter().zip(u).map(|(d, v)| d * v * v));
        acc += 2.0 * neumaier(self.off.iter().enumerate().map(|(i, e)| e * u[i] * u[i + 1]));
        acc
    }
}

/// Assembles P1 stiffness and mass on the mesh {0, grid nodes, 1}.
/// `kf(l) -> (a, b, c)` gives the stiffness density a g'^2 + 2 b g g' + c g^2
/// and `mf(l)` the mass density.
fn assemble<KF, MF>(geo: &ProfileGeometry, kf: KF, mf: MF) -> (Tridiag, Tridiag)
where
    KF: Fn(&Local) -> (f64, f64, f64),
    MF: Fn(&Local) -> f64,
{
    let mut mesh = vec![0.0];
    mesh.extend_from_slice(&geo.grid.x);
    mesh.push(1.0);
    let m = mesh.len();
    let eval = PointEvaluator::new(geo);
    let (gx, gw) = gauss_legendre(3);
    let mut k = Tridiag::zeros(m);
    let mut mm = Tridiag::zeros(m);
    for e in 0..m - 1 {
        let (a, b) = (mesh[e], mesh[e + 1]);
        let h = b - a;
        for (u, w) in gx.iter().zip(&gw) {
            let x = a + 0.5 * h * (u + 1.0);
            let l = eval.at_moment(x);
            let (ka, kb, kc) = kf(&l);
            let md = mf(&l);
            let wt = 0.5 * h * w;
            let phi = [(b - x) / h, (x - a) / h];
            let dphi = [-1.0 / h, 1.0 / h];
            for i in 0..2 {
                for j in 0..2 {
                    let kv = ka * dphi[i] * dphi[j] + kb * (phi[i] * dphi[j] + dphi[i] * phi[j]) + kc * phi[i] * phi[j];
                    let mv = md * phi[i] * phi[j];
                    if i == j {
                        k.diag[e + i] += wt * kv;
                        mm.diag[e + i] += wt * mv;
                    } else if i < j {
                        k.off[e] += wt * kv;
                        mm.off[e] += wt * mv;
                    }
                }
            }
        }
    }
    (k, mm)
}

fn bisect_eigen(k: &Tridiag, m: &Tridiag, index: usize, mut lo: f64, mut hi: f64) -> Result<f64> {
    if k.count_below(m, hi) <= index {
        return Err(LabError::Numerical(format!(
            "eigenvalue bracket failed: count({hi}) = {}",
            k.count_below(m, hi)
        )));
    }
    if k.count_below(m, lo) > index {
        return Err(LabError::Numerical(format!("eigenvalue below {lo}: count = {}", k.count_below(m, lo))));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if k.count_below(m, mid) > index {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// First nonzero eigenvalue of the Riemannian Laplacian.
pub fn lambda1(geo: &ProfileGeometry) -> Result<Spectrum> {
    let n = geo.n;
    let e = n as i32 - 1;
    // Invariant sector in x: stiffness 2 x(1-x) (xT)^{n-1} u'^2, mass (xT)^{n-1} P u^2.
    let (k, m) = assemble(
        geo,
        |l| (2.0 * l.x * l.y * (l.x * l.t).powi(e), 0.0, 0.0),
        |l| (l.x * l.t).powi(e) * l.p,
    );
    let mesh_x: Vec<f64> = std::iter::once(0.0).chain(geo.grid.x.iter().cloned()).chain(std::iter::once(1.0)).collect();
    let trial: Vec<f64> = mesh_x.iter().map(|x| x - 0.5).collect();
    let mean = {
        let ones = vec![1.0; trial.len()];
        let num = bilinear(&m, &trial, &ones);
        num / m.quad(&ones)
    };
    let trial: Vec<f64> = trial.iter().map(|v| v - mean).collect();
    let rq = k.quad(&trial) / m.quad(&trial);
    let invariant = bisect_eigen(&k, &m, 1, rq * 1e-6, rq * (1.0 + 1e-9))?;
    let angular = if n == 1 {
        // f = sqrt(x(1-x)) g removes the square-root behaviour at the poles.
        let (k1, m1) = assemble(
            geo,
            |l| {
                let q = l.x * l.y;
                let c = l.y - l.x;
                (2.0 * q * q, q * c, 0.5 * c * c + 0.5)
            },
            |l| l.x * l.y * l.p,
        );
        let ones = vec![1.0; mesh_x.len()];
        let rq1 = k1.quad(&ones) / m1.quad(&ones);
        Some(bisect_eigen(&k1, &m1, 0, 0.0, rq1 * (1.0 + 1e-9))?)
    } else {
        None
    };
    let lambda1 = angular.map_or(invariant, |a| a.min(invariant));
    Ok(Spectrum { invariant, angular, lambda1, sector_bound: n > 1 })
}

fn bilinear(m: &Tridiag, u: &[f64], v: &[f64]) -> f64 {
    let mut acc = neumaier(m.diag.iter().enumerate().map(|(i, d)| d * u[i] * v[i]));
    acc += neumaier(m.off.iter().enumerate().map(|(i, e)| e * (u[i] * v[i + 1] + u[i + 1] * v[i])));
    acc
}

/// Largest sigma required by the Sobolev inequality over a fixed family of
/// 32 radial test functions; a lower bound for the Sobolev constant.
pub fn sobolev_proxy(geo: &ProfileGeometry) -> f64 {
    let n = geo.n;
    let v = crate::geometry::class_volume(n);
    let family = test_family();
    family
        .iter()
        .map(|f| {
            let vals: Vec<(f64, f64)> = geo.local.iter().map(|l| f(l.x)).collect();
            let l2 = v * geo.average(&vals.iter().map(|(u, _)| u * u).collect::<Vec<_>>());
            let grad = v * geo.average(
                &geo.local.iter().zip(&vals).map(|(l, (_, du))| 2.0 * l.x * l.y * du * du / l.p).collect::<Vec<_>>(),
            );
            let lp_sq = if n == 1 {
                vals.iter().map(|(u, _)| u.abs()).fold(0.0, f64::max).powi(2)
            } else {
                let p = 2.0 * n as f64 / (n as f64 - 1.0);
                let ip = v * geo.average(&vals.iter().map(|(u, _)| u.abs().powf(p)).collect::<Vec<_>>());
                ip.powf(2.0 / p)
            };
            lp_sq / (grad + l2)
        })
        .fold(0.0, f64::max)
}

type TestFn = Box<dyn Fn(f64) -> (f64, f64) + Send + Sync>;

/// (f(x), f'(x)) for cosines and Gaussian bumps in the moment coordinate.
fn test_family() -> Vec<TestFn> {
    let mut fam: Vec<TestFn> = Vec::with_capacity(32);
    for j in 0..16 {
        let w = PI * j as f64;
        fam.push(Box::new(move |x: f64| ((w * x).cos(), -w * (w * x).sin())));
    }
    for j in 0..16 {
        let c = (j as f64 + 0.5) / 16.0;
        let s = 0.15;
        fam.push(Box::new(move |x: f64| {
            let z = (x - c) / s;
            let g = (-z * z).exp();
            (g, -2.0 * z / s * g)
        }));
    }
    fam
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SprouseVerdict {
    pub integral: f64,
    pub threshold: f64,
    pub hypothesis_met: bool,
    pub diameter: f64,
    pub bound: f64,
    /// Present only when the integral is below the threshold.
    pub diameter_below_bound: Option<bool>,
}

/// Integral criterion for the diameter bound pi + delta.
pub fn sprouse_check(geo: &ProfileGeometry, delta: f64) -> SprouseVerdict {
    let n = geo.n;
    let m = 2 * n;
    let integral = geo.average_with(|l| ((m as f64 - 1.0) - l.ric_min(n)).max(0.0));
    let threshold = sprouse_threshold(m);
    let hypothesis_met = geo.ricci_lower_bound() >= -1.0;
    let d = diameter(geo).diameter;
    let bound = PI + delta;
    let diameter_below_bound = (hypothesis_met && integral < threshold).then_some(d < bound);
    SprouseVerdict { integral, threshold, hypothesis_met, diameter: d, bound, diameter_below_bound }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometryDigest {
    pub diameter: f64,
    pub lambda1: f64,
    pub liyau_ok: bool,
    pub sobolev_proxy: f64,
    pub poincare_proxy: f64,
    pub ric_min: f64,
}

/// Li-Yau lower bound pi^2 / (4 D^2).
pub fn li_yau_bound(diameter: f64) -> f64 {
    PI * PI / (4.0 * diameter * diameter)
}

pub fn digest(geo: &ProfileGeometry) -> Result<GeometryDigest> {
    let d = diameter(geo).diameter;
    let spec = lambda1(geo)?;
    Ok(GeometryDigest {
        diameter: d,
        lambda1: spec.lambda1,
        liyau_ok: spec.lambda1 >= li_yau_bound(d),
        sobolev_proxy: sobolev_proxy(geo),
        poincare_proxy: 1.0 / spec.lambda1,
        ric_min: geo.ricci_lower_bound(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{uniform_nodes, RadialProfile};

    fn fs(n: usize, nodes: usize) -> ProfileGeometry {
        RadialProfile::fubini_study(n, &uniform_nodes(12.0, nodes).unwrap()).unwrap().geometry().unwrap()
    }

    #[test]
    fn fs_sphere_diameter_and_spectrum() {
        let g = fs(1, 256);
        assert!((diameter(&g).diameter - PI).abs() < 1e-6);
        let s = lambda1(&g).unwrap();
        assert!((s.invariant - 2.0).abs() < 1e-9, "{s:?}");
        assert!((s.angular.unwrap() - 2.0).abs() < 1e-9, "{s:?}");
    }

    #[test]
    fn constant_function_sobolev_ratio() {
        for n in 1..=3 {
            let g = fs(n, 128);
            let v = crate::geometry::class_volume(n);
            assert!(sobolev_proxy(&g) >= v.powf(-1.0 / n as f64) * (1.0 - 1e-12));
        }
    }
}
