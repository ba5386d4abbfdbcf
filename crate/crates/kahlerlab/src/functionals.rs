//! Energy functionals on the space of radial potentials, reduced to
//! one-dimensional quadrature.
//!
//! Every invariant (1,1)-form is diagonal in the unitary frame with a radial
//! eigenvalue and an (n-1)-fold transverse eigenvalue. A wedge of n such forms
//! divided by omega_phi^n is their mixed discriminant
//! (1/n) sum_j r_j prod_{i != j} t_i, which is what `mixed` evaluates.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::geometry::{class_volume, jets_of, Grid, Local, ProfileGeometry, RadialProfile};
use crate::quadrature::{gauss_legendre, neumaier};

/// Relative eigenvalues (radial, transverse) of a diagonal (1,1)-form.
#[derive(Debug, Clone, Copy)]
pub struct Eig(pub f64, pub f64);

/// Mixed discriminant of `counts[i]` copies of `forms[i]`, counts summing to n.
pub fn mixed(n: usize, forms: &[(Eig, usize)]) -> f64 {
    let mut total = 0.0;
    for (j, &(fj, cj)) in forms.iter().enumerate() {
        if cj == 0 {
            continue;
        }
        let mut prod = cj as f64 * fj.0;
        for (i, &(fi, ci)) in forms.iter().enumerate() {
            let e = if i == j { ci - 1 } else { ci };
            if e > 0 {
                prod *= fi.1.powi(e as i32);
            }
        }
        total += prod;
    }
    total / n as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PathKind {
    Linear,
    Reparam { power: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathSpec {
    pub kind: PathKind,
    pub quadrature_nodes: usize,
}

impl Default for PathSpec {
    fn default() -> Self {
        PathSpec { kind: PathKind::Linear, quadrature_nodes: 16 }
    }
}

impl PathSpec {
    fn validate(&self) -> Result<()> {
        if self.quadrature_nodes < 4 {
            return Err(LabError::Config("path quadrature needs at least 4 nodes".into()));
        }
        if let PathKind::Reparam { power } = self.kind {
            if power == 0 {
                return Err(LabError::Config("path power must be positive".into()));
            }
        }
        Ok(())
    }

    /// (phi(t)/phi, phi'(t)/phi) for the path from 0 to phi.
    fn at(&self, t: f64) -> (f64, f64) {
        match self.kind {
            PathKind::Linear => (t, 1.0),
            PathKind::Reparam { power } => {
                let p = power as f64;
                (t.powi(power as i32), p * t.powi(power as i32 - 1))
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    #[serde(rename = "E0")]
    pub e0: f64,
    #[serde(rename = "E1")]
    pub e1: f64,
    #[serde(rename = "Ek")]
    pub ek: Vec<f64>,
    #[serde(rename = "Jk")]
    pub jk: Vec<f64>,
    #[serde(rename = "dE1_dt_formula")]
    pub de1_dt_formula: Option<f64>,
    pub l2_ric0: f64,
    pub l2_scalar: f64,
    #[serde(rename = "l2_Q0")]
    pub l2_q0: f64,
}

/// L^2 pinching integrals, all divided by V.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pinching {
    pub l2_ric0: f64,
    pub l2_scalar: f64,
    pub l2_q0: f64,
    pub identity_ok: bool,
}

/// Value of the derivative formula, with the two-term split for k = 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivativeReport {
    pub value: f64,
    pub split: Option<(f64, f64)>,
}

/// Reference data shared by all energy evaluations against one metric.
#[derive(Debug, Clone)]
pub struct EnergyContext {
    pub n: usize,
    pub grid: Arc<Grid>,
    pub reference: ProfileGeometry,
    pub h: Vec<f64>,
    pub ck: Vec<f64>,
}

/// Ricci potential H of a node: Ric - omega = i dd-bar H, before normalization.
fn ricci_potential(n: usize, l: &Local, r0: f64) -> f64 {
    -l.p.ln() - (n as f64 - 1.0) * l.t.ln() - r0
}

impl EnergyContext {
    pub fn new(reference: &RadialProfile) -> Result<Self> {
        let geo = reference.geometry()?;
        Self::from_geometry(geo)
    }

    pub fn from_geometry(reference: ProfileGeometry) -> Result<Self> {
        let n = reference.n;
        let raw: Vec<f64> = reference
            .local
            .iter()
            .zip(&reference.jets)
            .map(|(l, d)| ricci_potential(n, l, d[0]))
            .collect();
        let h = normalize_h(&reference, &raw)?;
        let ck = (0..=n)
            .map(|k| {
                reference.average(
                    &reference
                        .local
                        .iter()
                        .zip(&h)
                        .map(|(l, hv)| {
                            let ric = Eig(l.ric_radial, l.ric_transverse);
                            let sum: f64 = (0..=k).map(|i| mixed(n, &[(ric, i), (Eig(1.0, 1.0), n - i)])).sum();
                            hv * sum
                        })
                        .collect::<Vec<_>>(),
                )
            })
            .collect();
        Ok(Self { n, grid: reference.grid.clone(), reference, h, ck })
    }

    /// Geometry of omega_phi = omega + i dd-bar phi.
    pub fn geometry_of(&self, phi: &[f64]) -> Result<ProfileGeometry> {
        if phi.len() != self.grid.len() {
            return Err(LabError::Config("potential length differs from grid".into()));
        }
        let total: Vec<f64> = self.reference.residual.iter().zip(phi).map(|(a, b)| a + b).collect();
        ProfileGeometry::from_residual(self.grid.clone(), self.n, &total)
            .map_err(|e| LabError::Domain(format!("omega_phi not positive: {e}")))
    }

    fn ratios(&self, i: usize, l: &Local) -> Eig {
        let r = &self.reference.local[i];
        Eig(r.p / l.p, r.t / l.t)
    }

    pub fn ek0(&self, phi: &[f64], k: usize) -> Result<f64> {
        let geo = self.geometry_of(phi)?;
        Ok(self.ek0_with(&geo, k))
    }

    pub fn ek0_with(&self, geo: &ProfileGeometry, k: usize) -> f64 {
        let n = self.n;
        let nf = n as f64;
        let vals: Vec<f64> = geo
            .local
            .iter()
            .enumerate()
            .map(|(i, l)| {
                let r = &self.reference.local[i];
                let log_ratio = (l.p / r.p).ln() + (nf - 1.0) * (l.t / r.t).ln();
                let ric = Eig(l.ric_radial, l.ric_transverse);
                let om = self.ratios(i, l);
                let sum: f64 =
                    (0..=k).map(|j| mixed(n, &[(ric, j), (om, k - j), (Eig(1.0, 1.0), n - k)])).sum();
                (log_ratio - self.h[i]) * sum
            })
            .collect();
        geo.average(&vals) + self.ck[k]
    }

    pub fn jk(&self, phi: &[f64], k: usize, path: &PathSpec) -> Result<f64> {
        path.validate()?;
        let n = self.n;
        if k >= n {
            return Ok(0.0);
        }
        let (tn, tw) = gauss_legendre(path.quadrature_nodes);
        let dphi = jets_of(&self.grid, phi);
        let mut terms = Vec::with_capacity(tn.len());
        for (u, w) in tn.iter().zip(&tw) {
            let t = 0.5 * (u + 1.0);
            let (a, da) = path.at(t);
            let jets: Vec<[f64; 5]> = self
                .reference
                .jets
                .iter()
                .zip(&dphi)
                .map(|(r, d)| std::array::from_fn(|o| r[o] + a * d[o]))
                .collect();
            let residual: Vec<f64> = jets.iter().map(|d| d[0]).collect();
            let geo = ProfileGeometry::from_jets(self.grid.clone(), n, residual, jets).map_err(|e| {
                LabError::Path(format!("intermediate metric at t = {t:.4} not positive ({e}); use more nodes or another path"))
            })?;
            let vals: Vec<f64> = geo
                .local
                .iter()
                .enumerate()
                .map(|(i, l)| {
                    let om = self.ratios(i, l);
                    let m = mixed(n, &[(om, k + 1), (Eig(1.0, 1.0), n - k - 1)]);
                    da * phi[i] * (1.0 - m)
                })
                .collect();
            terms.push(0.5 * w * geo.average(&vals));
        }
        Ok(-((n - k) as f64) * neumaier(terms))
    }

    pub fn ek(&self, phi: &[f64], k: usize, path: &PathSpec) -> Result<f64> {
        Ok(self.ek0(phi, k)? - self.jk(phi, k, path)?)
    }

    /// Right side of the derivative formula for E_k along a variation phidot.
    pub fn dek_dt(&self, phi: &[f64], phidot: &[f64], k: usize) -> Result<DerivativeReport> {
        let geo = self.geometry_of(phi)?;
        Ok(self.dek_dt_with(&geo, phidot, k))
    }

    pub fn dek_dt_with(&self, geo: &ProfileGeometry, phidot: &[f64], k: usize) -> DerivativeReport {
        let n = self.n;
        let nf = n as f64;
        let du = jets_of(&self.grid, phidot);
        let one = Eig(1.0, 1.0);
        let mut first = Vec::with_capacity(geo.len());
        let mut second = Vec::with_capacity(geo.len());
        for (i, l) in geo.local.iter().enumerate() {
            let ric = Eig(l.ric_radial, l.ric_transverse);
            let lap = complex_laplacian(n, l, &du[i]);
            first.push(lap * mixed(n, &[(ric, k), (one, n - k)]));
            let top = if k < n { mixed(n, &[(ric, k + 1), (one, n - k - 1)]) - 1.0 } else { 0.0 };
            second.push(phidot[i] * top);
        }
        let value = (k as f64 + 1.0) * geo.average(&first) - (nf - k as f64) * geo.average(&second);
        let split = (k == 1).then(|| {
            let a = -(2.0 / nf) * geo.average_with(|l| (nf - l.scalar(n)).powi(2));
            let grad: Vec<f64> = geo
                .local
                .iter()
                .zip(&du)
                .map(|(l, d)| gradient_sq(l, d) * (l.ric_transverse + 1.0) / nf)
                .collect();
            let b = if n >= 2 { -(nf - 1.0) * geo.average(&grad) } else { 0.0 };
            (a, b)
        });
        DerivativeReport { value, split }
    }

    /// The gradient form of dE_0/dt: -(n/V) int i d(phidot) ^ dbar(phidot) ^ omega_phi^{n-1}.
    pub fn de0_dt_gradient(&self, geo: &ProfileGeometry, phidot: &[f64]) -> f64 {
        let du = jets_of(&self.grid, phidot);
        let vals: Vec<f64> = geo.local.iter().zip(&du).map(|(l, d)| gradient_sq(l, d)).collect();
        -geo.average(&vals)
    }

    pub fn pinching(&self, phi: &[f64]) -> Result<Pinching> {
        Ok(pinching(&self.geometry_of(phi)?))
    }

    /// Full report with E_k and J_k for every k = 0..=n.
    pub fn report(&self, phi: &[f64], path: &PathSpec) -> Result<EnergyReport> {
        let geo = self.geometry_of(phi)?;
        let n = self.n;
        let mut ek = Vec::with_capacity(n + 1);
        let mut jk = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let j = self.jk(phi, k, path)?;
            ek.push(self.ek0_with(&geo, k) - j);
            jk.push(j);
        }
        let pin = pinching(&geo);
        Ok(EnergyReport {
            e0: ek[0],
            e1: if n >= 1 { ek[1] } else { 0.0 },
            ek,
            jk,
            de1_dt_formula: None,
            l2_ric0: pin.l2_ric0,
            l2_scalar: pin.l2_scalar,
            l2_q0: pin.l2_q0,
        })
    }
}

/// Complex Laplacian g^{i jb} u_{i jb} of a radial function with jet `d` in x.
pub fn complex_laplacian(n: usize, l: &Local, d: &[f64; 5]) -> f64 {
    ((l.y - l.x) * d[1] + l.x * l.y * d[2]) / l.p + (n as f64 - 1.0) * l.y * d[1] / l.t
}

/// |du|^2 = g^{i jb} u_i u_jb of a radial function, equal to u'^2 / F''.
pub fn gradient_sq(l: &Local, d: &[f64; 5]) -> f64 {
    l.x * l.y * d[1] * d[1] / l.p
}

pub fn pinching(geo: &ProfileGeometry) -> Pinching {
    let n = geo.n;
    let nf = n as f64;
    let l2_ric0 = geo.average_with(|l| l.ric0_sq(n));
    let l2_scalar = geo.average_with(|l| (l.scalar(n) - nf).powi(2));
    let l2_q0 = geo.average_with(|l| l.q0_sq(n));
    let identity_ok = (l2_ric0 - l2_scalar).abs() <= 1e-6 * l2_ric0.max(l2_scalar) + 1e-12;
    Pinching { l2_ric0, l2_scalar, l2_q0, identity_ok }
}

fn normalize_h(geo: &ProfileGeometry, raw: &[f64]) -> Result<Vec<f64>> {
    // Shift by the maximum before exponentiating to keep the average finite.
    let m = raw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = raw.iter().map(|v| (v - m).exp()).collect();
    let avg = geo.average(&e);
    if !(avg > 0.0 && avg.is_finite()) {
        return Err(LabError::Normalization(format!("cannot normalize Ricci potential (mean {avg})")));
    }
    let c = -m - avg.ln();
    Ok(raw.iter().map(|v| v + c).collect())
}

/// Ricci potential of a reference profile, normalized by int (e^h - 1) omega^n = 0.
pub fn h_potential(reference: &RadialProfile) -> Result<Vec<f64>> {
    Ok(EnergyContext::new(reference)?.h)
}

pub fn l2_pinching_report(phi: &[f64], reference: &RadialProfile) -> Result<EnergyReport> {
    let ctx = EnergyContext::new(reference)?;
    ctx.report(phi, &PathSpec::default())
}

/// Volume of the Kähler class, per unit angular volume.
pub fn volume(n: usize) -> f64 {
    class_volume(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::uniform_nodes;

    #[test]
    fn mixed_of_identical_forms_is_determinant() {
        let e = Eig(0.7, 1.3);
        assert!((mixed(3, &[(e, 3)]) - 0.7 * 1.3 * 1.3).abs() < 1e-15);
        assert!((mixed(1, &[(e, 1)]) - 0.7).abs() < 1e-15);
    }

    #[test]
    fn fs_reference_has_zero_ricci_potential() {
        for n in 1..=3 {
            let p = RadialProfile::fubini_study(n, &uniform_nodes(12.0, 128).unwrap()).unwrap();
            let h = h_potential(&p).unwrap();
            assert!(h.iter().all(|v| v.abs() < 1e-12), "{n}");
        }
    }

    #[test]
    fn zero_potential_has_zero_energies() {
        let p = RadialProfile::fubini_study(2, &uniform_nodes(12.0, 128).unwrap()).unwrap();
        let ctx = EnergyContext::new(&p).unwrap();
        let phi = vec![0.0; 128];
        let r = ctx.report(&phi, &PathSpec::default()).unwrap();
        assert!(r.ek.iter().chain(&r.jk).all(|v| v.abs() < 1e-14));
    }
}
