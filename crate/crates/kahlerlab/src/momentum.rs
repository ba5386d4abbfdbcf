//! Legendre-dual description of a radial profile: the momentum tau = F'(s)
//! and phi(tau) = F''(s(tau)) on [0, n+1].

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::geometry::{RadialProfile, DEFAULT_TOL_BC};
use crate::quadrature::gauss_legendre;
use crate::stencil::fornberg;

/// Point fixing the additive constants lost in the transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    pub s: f64,
    pub tau: f64,
    pub f: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentumProfile {
    pub n: usize,
    pub tau_grid: Vec<f64>,
    pub phi: Vec<f64>,
    pub anchor: Anchor,
    pub tol_bc: f64,
}

pub fn to_momentum(p: &RadialProfile) -> Result<MomentumProfile> {
    let geo = p.geometry()?;
    let k = (p.n + 1) as f64;
    let mut tau_grid = vec![0.0];
    let mut phi = vec![0.0];
    for l in &geo.local {
        tau_grid.push(l.tau());
        phi.push(l.fpp());
    }
    tau_grid.push(k);
    phi.push(0.0);
    if let Some(i) = tau_grid.windows(2).position(|w| w[1] <= w[0]) {
        return Err(LabError::Convexity(format!("F' not increasing near node {i}")));
    }
    let mid = p.grid.len() / 2;
    let anchor = Anchor { s: p.grid[mid], tau: tau_grid[mid + 1], f: p.f[mid] };
    Ok(MomentumProfile { n: p.n, tau_grid, phi, anchor, tol_bc: p.tol_bc })
}

impl MomentumProfile {
    pub fn validate(&self) -> Result<()> {
        let m = self.tau_grid.len();
        let k = (self.n + 1) as f64;
        if self.n == 0 || m < 6 || self.phi.len() != m {
            return Err(LabError::Config("momentum profile too short or inconsistent".into()));
        }
        if self.tau_grid[0] != 0.0 || self.tau_grid[m - 1] != k {
            return Err(LabError::Boundary(format!("tau grid must span [0, {k}]")));
        }
        if let Some(i) = self.tau_grid.windows(2).position(|w| w[1] <= w[0]) {
            return Err(LabError::Convexity(format!("tau grid not increasing at {i}")));
        }
        if self.phi[0].abs() > self.tol_bc || self.phi[m - 1].abs() > self.tol_bc {
            return Err(LabError::Convexity(format!(
                "phi must vanish at both ends, got {} and {}",
                self.phi[0],
                self.phi[m - 1]
            )));
        }
        if let Some(i) = self.phi[1..m - 1].iter().position(|&v| !(v > 0.0)) {
            return Err(LabError::Convexity(format!("phi not positive at node {}", i + 1)));
        }
        let (l, r) = self.end_slopes();
        if (l - 1.0).abs() > self.tol_bc.max(DEFAULT_TOL_BC) || (r + 1.0).abs() > self.tol_bc.max(DEFAULT_TOL_BC) {
            return Err(LabError::Boundary(format!("end slopes {l} and {r}, expected 1 and -1")));
        }
        Ok(())
    }

    /// phi'(0) and phi'(n+1) from linear extrapolation of phi/tau and
    /// phi/(n+1-tau) over the two nodes nearest each end.
    pub fn end_slopes(&self) -> (f64, f64) {
        let t = &self.tau_grid;
        let f = &self.phi;
        let m = t.len();
        let k = (self.n + 1) as f64;
        let (r1, r2) = (f[1] / t[1], f[2] / t[2]);
        let left = r1 - t[1] * (r2 - r1) / (t[2] - t[1]);
        let (u1, u2) = (k - t[m - 2], k - t[m - 3]);
        let (q1, q2) = (f[m - 2] / u1, f[m - 3] / u2);
        let right = -(q1 - u1 * (q2 - q1) / (u2 - u1));
        (left, right)
    }
}

/// Inverse transform. Returns the profile on the reconstructed s-nodes
/// s_i = s(tau_i) of the interior momentum nodes.
pub fn from_momentum(m: &MomentumProfile) -> Result<RadialProfile> {
    m.validate()?;
    let n = m.n;
    let k = (n + 1) as f64;
    let tau = &m.tau_grid[1..m.tau_grid.len() - 1];
    let phi = &m.phi[1..m.phi.len() - 1];
    let len = tau.len();
    // 1/phi = 1/phi_FS + rho with rho bounded at both poles.
    let rho: Vec<f64> = tau
        .iter()
        .zip(phi)
        .map(|(&t, &p)| {
            let pfs = t * (k - t) / k;
            (pfs - p) / (p * pfs)
        })
        .collect();
    let trho: Vec<f64> = tau.iter().zip(&rho).map(|(t, r)| t * r).collect();
    let seg_s = interval_integrals(tau, &rho);
    let seg_f = interval_integrals(tau, &trho);
    let ia = tau.partition_point(|&t| t < m.anchor.tau);
    if ia >= len || (tau[ia] - m.anchor.tau).abs() > 1e-12 * k {
        return Err(LabError::Config("anchor must sit on a momentum node".into()));
    }
    let s_fs = |t: f64| (t / (k - t)).ln();
    let f_fs = |t: f64| -k * ((k - t) / k).ln();
    let cum = |seg: &[f64], i: usize| -> f64 {
        if i >= ia {
            seg[ia..i].iter().sum()
        } else {
            -seg[i..ia].iter().sum::<f64>()
        }
    };
    let mut grid = Vec::with_capacity(len);
    let mut f = Vec::with_capacity(len);
    for i in 0..len {
        grid.push(m.anchor.s + s_fs(tau[i]) - s_fs(m.anchor.tau) + cum(&seg_s, i));
        f.push(m.anchor.f + f_fs(tau[i]) - f_fs(m.anchor.tau) + cum(&seg_f, i));
    }
    let p = RadialProfile { n, grid, f, tol_bc: m.tol_bc };
    p.validate()?;
    Ok(p)
}

/// Integral of the local 8-point interpolant of `g` over each interval.
fn interval_integrals(t: &[f64], g: &[f64]) -> Vec<f64> {
    const K: usize = 8;
    let n = t.len();
    let (gx, gw) = gauss_legendre(6);
    (0..n - 1)
        .map(|i| {
            let lo = i.saturating_sub(K / 2 - 1).min(n - K);
            let (a, b) = (t[i], t[i + 1]);
            let half = 0.5 * (b - a);
            let mut acc = 0.0;
            for (u, w) in gx.iter().zip(&gw) {
                let c = fornberg(a + half * (u + 1.0), &t[lo..lo + K], 0);
                let v: f64 = (0..K).map(|j| c[j][0] * g[lo + j]).sum();
                acc += half * w * v;
            }
            acc
        })
        .collect()
}
