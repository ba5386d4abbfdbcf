//! Monte-Carlo check of the segment inequality on U(1)-invariant metrics of
//! CP^1, with geodesics found by shooting on the Clairaut constant.
//!
//! In the angle w with x = sin^2(w/2) the metric reads
//! (P/2)(dw^2 + sin^2 w dtheta^2), so the profile radius is a = h sin w
//! with h = sqrt(P/2).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::area_ratio;
use crate::error::{LabError, Result};
use crate::geometry::{PointEvaluator, ProfileGeometry};
use crate::quadrature::{gauss_legendre, tanh_sinh};

use std::f64::consts::PI;

const TABLE_INTERVALS: usize = 4096;
const SKIP_LIMIT: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Geodesic {
    pub length: f64,
    /// Integral of |Ric - 1| along the curve.
    pub f_integral: f64,
    pub clairaut: f64,
}

/// Tabulated surface of revolution.
pub struct Surface {
    dw: f64,
    h: Vec<f64>,
    ric: Vec<f64>,
    area_density: Vec<f64>,
    f_density: Vec<f64>,
    rho: Vec<f64>,
    area: Vec<f64>,
    f_mass: Vec<f64>,
    /// Sparse table of range minima of a over the nodes.
    a_min: Vec<Vec<f64>>,
    rule: Vec<(f64, f64, f64)>,
}

fn lagrange4(xi: f64) -> ([f64; 4], [f64; 4]) {
    let (a, b, c, d) = (xi, xi - 1.0, xi - 2.0, xi - 3.0);
    let v = [-b * c * d / 6.0, a * c * d / 2.0, -a * b * d / 2.0, a * b * c / 6.0];
    let dv = [
        -(c * d + b * d + b * c) / 6.0,
        (c * d + a * d + a * c) / 2.0,
        -(b * d + a * d + a * b) / 2.0,
        (b * c + a * c + a * b) / 6.0,
    ];
    (v, dv)
}

impl Surface {
    pub fn new(geo: &ProfileGeometry) -> Result<Self> {
        if geo.n != 1 {
            return Err(LabError::Domain(format!("segment check needs n = 1, got {}", geo.n)));
        }
        let m = TABLE_INTERVALS;
        let dw = PI / m as f64;
        let eval = PointEvaluator::new(geo);
        let mut h = Vec::with_capacity(m + 1);
        let mut ric = Vec::with_capacity(m + 1);
        for i in 0..=m {
            let w = i as f64 * dw;
            let l = eval.at_moment((0.5 * w).sin().powi(2));
            if !(l.p > 0.0) {
                return Err(LabError::Positivity { s: f64::NAN, what: format!("P = {} at w = {w}", l.p) });
            }
            h.push((0.5 * l.p).sqrt());
            ric.push(l.ric_radial - 1.0);
        }
        let area_density: Vec<f64> = (0..=m).map(|i| h[i] * h[i] * (i as f64 * dw).sin()).collect();
        let f_density: Vec<f64> = area_density.iter().zip(&ric).map(|(a, r)| a * r.abs()).collect();
        let mut s = Surface {
            dw,
            h,
            ric,
            area_density,
            f_density,
            rho: vec![],
            area: vec![],
            f_mass: vec![],
            a_min: vec![],
            rule: tanh_sinh(1.0 / 12.0, 3.2),
        };
        s.rho = s.cumulate(&s.h);
        s.area = s.cumulate(&s.area_density);
        s.f_mass = s.cumulate(&s.f_density);
        let mut level: Vec<f64> = (0..=m).map(|i| s.h[i] * (i as f64 * dw).sin()).collect();
        let mut width = 1;
        while width <= m {
            let next: Vec<f64> = (0..level.len().saturating_sub(width)).map(|i| level[i].min(level[i + width])).collect();
            s.a_min.push(std::mem::replace(&mut level, next));
            width *= 2;
        }
        Ok(s)
    }

    fn interp(&self, v: &[f64], w: f64) -> (f64, f64) {
        let m = v.len() - 1;
        let i = ((w / self.dw).floor().max(0.0) as usize).min(m - 1);
        let i0 = i.saturating_sub(1).min(m - 3);
        let (l, dl) = lagrange4(w / self.dw - i0 as f64);
        let mut val = 0.0;
        let mut der = 0.0;
        for k in 0..4 {
            val += l[k] * v[i0 + k];
            der += dl[k] * v[i0 + k];
        }
        (val, der / self.dw)
    }

    fn interval_integral(&self, v: &[f64], a: f64, b: f64) -> f64 {
        let (gx, gw) = gauss_legendre(4);
        let half = 0.5 * (b - a);
        gx.iter().zip(&gw).map(|(u, wt)| half * wt * self.interp(v, a + half * (u + 1.0)).0).sum()
    }

    fn cumulate(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0];
        for i in 0..v.len() - 1 {
            let a = i as f64 * self.dw;
            out.push(out[i] + self.interval_integral(v, a, a + self.dw));
        }
        out
    }

    fn cumulative_at(&self, cum: &[f64], v: &[f64], w: f64) -> f64 {
        let i = ((w / self.dw).floor().max(0.0) as usize).min(cum.len() - 2);
        let a = i as f64 * self.dw;
        cum[i] + self.interval_integral(v, a, w)
    }

    fn invert(&self, cum: &[f64], v: &[f64], target: f64) -> f64 {
        let i = cum.partition_point(|&c| c < target).clamp(1, cum.len() - 1);
        let (mut lo, mut hi) = ((i - 1) as f64 * self.dw, i as f64 * self.dw);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if self.cumulative_at(cum, v, mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Pole-to-pole length.
    pub fn total_length(&self) -> f64 {
        self.rho[self.rho.len() - 1]
    }

    pub fn total_area(&self) -> f64 {
        2.0 * PI * self.area[self.area.len() - 1]
    }

    /// Integral of |Ric - 1| over the surface.
    pub fn f_total(&self) -> f64 {
        2.0 * PI * self.f_mass[self.f_mass.len() - 1]
    }

    /// Angle w at distance r from the south pole.
    pub fn angle_at_distance(&self, r: f64) -> f64 {
        self.invert(&self.rho, &self.h, r)
    }

    fn h_at(&self, w: f64) -> (f64, f64) {
        self.interp(&self.h, w)
    }

    fn a_at(&self, w: f64) -> (f64, f64) {
        let (h, dh) = self.h_at(w);
        (h * w.sin(), dh * w.sin() + h * w.cos())
    }

    fn f_at(&self, w: f64) -> f64 {
        self.interp(&self.ric, w).0.abs()
    }

    /// Arc without turning point, w1 < w2, Clairaut constant c < min a.
    fn monotone(&self, w1: f64, w2: f64, c: f64) -> Option<[f64; 3]> {
        let span = w2 - w1;
        let mut acc = [0.0; 3];
        for &(left, _, wt) in &self.rule {
            let w = w1 + span * left;
            let (a, _) = self.a_at(w);
            let q = a * a - c * c;
            if !(q > 0.0) {
                return None;
            }
            let s = q.sqrt();
            let dl = self.h_at(w).0 * a / s;
            acc[0] += span * wt * c / (w.sin() * s);
            acc[1] += span * wt * dl;
            acc[2] += span * wt * dl * self.f_at(w);
        }
        Some(acc)
    }

    /// Arc from the turning point w_t (where a = c) to w_e, with the square
    /// root removed by w = w_t + sign * L u^2.
    fn from_turning(&self, wt_pt: f64, w_e: f64) -> Option<[f64; 3]> {
        let len = (w_e - wt_pt).abs();
        if len == 0.0 {
            return Some([0.0; 3]);
        }
        let sg = (w_e - wt_pt).signum();
        let (c, dc) = self.a_at(wt_pt);
        let mut acc = [0.0; 3];
        for &(u, _, wt) in &self.rule {
            let w = wt_pt + sg * len * u * u;
            let (a, _) = self.a_at(w);
            let r = if u >= 1e-3 { (a - c) / (len * u * u) } else { sg * dc };
            if !(r > 0.0) {
                return None;
            }
            let common = 2.0 * len.sqrt() / (r * (a + c)).sqrt();
            let dl = self.h_at(w).0 * a * common;
            acc[0] += wt * c * common / w.sin();
            acc[1] += wt * dl;
            acc[2] += wt * dl * self.f_at(w);
        }
        Some(acc)
    }

    fn min_a_between(&self, lo: f64, hi: f64) -> f64 {
        let i0 = (lo / self.dw).ceil() as usize;
        let i1 = ((hi / self.dw).floor() as usize).min(self.h.len() - 1);
        let m = self.a_at(lo).0.min(self.a_at(hi).0);
        if i1 < i0 {
            return m;
        }
        let k = (usize::BITS - 1 - (i1 - i0 + 1).leading_zeros()) as usize;
        let t = &self.a_min[k];
        m.min(t[i0]).min(t[i1 + 1 - (1 << k)])
    }

    fn turning(&self, w1: f64, w2: f64, wt_pt: f64) -> Option<[f64; 3]> {
        let (lo, hi) = if wt_pt < w1 { (wt_pt, w2) } else { (w1, wt_pt) };
        let c = self.a_at(wt_pt).0;
        let inner = self.min_a_between(lo + 2.0 * self.dw, hi - 2.0 * self.dw);
        if hi - lo > 4.0 * self.dw && inner <= c {
            return None;
        }
        let p = self.from_turning(wt_pt, w1)?;
        let q = self.from_turning(wt_pt, w2)?;
        Some([p[0] + q[0], p[1] + q[1], p[2] + q[2]])
    }

    /// Shortest geodesic found between (w1, 0) and (w2, dtheta), w1 < w2.
    pub fn geodesic(&self, w1: f64, w2: f64, dtheta: f64) -> Option<Geodesic> {
        let d = dtheta.rem_euclid(2.0 * PI);
        let d = d.min(2.0 * PI - d);
        let targets = [d, 2.0 * PI - d];
        let c_hi = self.min_a_between(w1, w2);
        let mut params: Vec<f64> = (0..8).map(|j| j as f64 / 8.0).collect();
        params.extend((1..=48).map(|k| 1.0 - 10f64.powf(-0.25 * k as f64)));
        params.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // Turning point as a fraction of the way to the pole, clustered at
        // both ends: near 0 it joins the monotone family, near 1 it passes
        // the pole.
        let mut qs: Vec<f64> = (1..=24).map(|k| 10f64.powf(-0.25 * k as f64)).collect();
        qs.extend((2..=48).map(|k| 1.0 - 10f64.powf(-0.25 * k as f64)));
        qs.push(0.5);
        qs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        qs.dedup();

        type Fam<'a> = Box<dyn Fn(f64) -> Option<([f64; 3], f64)> + 'a>;
        let families: [Fam; 3] = [
            Box::new(|lam: f64| self.monotone(w1, w2, lam * c_hi).map(|v| (v, lam * c_hi))),
            Box::new(|q: f64| {
                let wt = (1.0 - q) * w1;
                self.turning(w1, w2, wt).map(|v| (v, self.a_at(wt).0))
            }),
            Box::new(|q: f64| {
                let wt = w2 + (1.0 - q) * (PI - w2);
                self.turning(w1, w2, wt).map(|v| (v, self.a_at(wt).0))
            }),
        ];
        let grids = [&params, &qs, &qs];
        let mut best: Option<Geodesic> = None;
        for (fam, grid) in families.iter().zip(grids) {
            let samples: Vec<(f64, Option<([f64; 3], f64)>)> = grid.iter().map(|&p| (p, fam(p))).collect();
            for &target in &targets {
                for win in samples.windows(2) {
                    let (p0, Some((v0, _))) = &win[0] else { continue };
                    let (p1, Some((v1, _))) = &win[1] else { continue };
                    let (g0, g1) = (v0[0] - target, v1[0] - target);
                    if g0 * g1 > 0.0 {
                        continue;
                    }
                    let exact = |v: &[f64; 3], c: f64| Geodesic { length: v[1], f_integral: v[2], clairaut: c };
                    let found = if g0 == 0.0 {
                        Some(exact(v0, win[0].1.unwrap().1))
                    } else if g1 == 0.0 {
                        Some(exact(v1, win[1].1.unwrap().1))
                    } else {
                        bisect_family(fam, *p0, *p1, g0, target)
                    };
                    if let Some(sol) = found {
                        if best.is_none_or(|b| sol.length < b.length) {
                            best = Some(sol);
                        }
                    }
                }
            }
        }
        best
    }

    /// Point in the polar cap of radius r: (w, theta).
    fn sample_cap(&self, rng: &mut ChaCha8Rng, south: bool, w_edge: f64) -> (f64, f64) {
        let u: f64 = rng.gen();
        let theta = rng.gen::<f64>() * 2.0 * PI;
        let edge = self.cumulative_at(&self.area, &self.area_density, w_edge);
        let total = self.area[self.area.len() - 1];
        let target = if south { u * edge } else { edge + u * (total - edge) };
        (self.invert(&self.area, &self.area_density, target), theta)
    }
}

fn bisect_family(
    fam: &dyn Fn(f64) -> Option<([f64; 3], f64)>,
    mut lo: f64,
    mut hi: f64,
    mut g_lo: f64,
    target: f64,
) -> Option<Geodesic> {
    let mut last = None;
    for _ in 0..48 {
        let mid = 0.5 * (lo + hi);
        let (v, c) = fam(mid)?;
        let g = v[0] - target;
        last = Some(Geodesic { length: v[1], f_integral: v[2], clairaut: c });
        if g.abs() < 1e-13 || hi - lo < 1e-15 {
            break;
        }
        if (g < 0.0) == (g_lo < 0.0) {
            lo = mid;
            g_lo = g;
        } else {
            hi = mid;
        }
    }
    last
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentConfig {
    pub cap_radius: f64,
    pub pairs: usize,
    pub seed: u64,
}

impl Default for SegmentConfig {
    fn default() -> Self {
        SegmentConfig { cap_radius: 0.2, pairs: 500, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentReport {
    pub cap_radius: f64,
    pub pairs: usize,
    pub seed: u64,
    pub skipped: usize,
    pub flagged: bool,
    pub vol_a1: f64,
    pub vol_a2: f64,
    pub c_m: f64,
    pub f_integral: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    /// Largest v1 v2 (line integral) / rhs over single pairs.
    pub max_pair_ratio: f64,
    pub holds: bool,
}

impl SegmentReport {
    pub fn to_text(&self) -> String {
        let rows: Vec<(&str, String)> = vec![
            ("cap_radius", format!("{:.16e}", self.cap_radius)),
            ("pairs", self.pairs.to_string()),
            ("seed", self.seed.to_string()),
            ("skipped", self.skipped.to_string()),
            ("flagged", self.flagged.to_string()),
            ("vol_a1", format!("{:.16e}", self.vol_a1)),
            ("vol_a2", format!("{:.16e}", self.vol_a2)),
            ("c_m", format!("{:.16e}", self.c_m)),
            ("f_integral", format!("{:.16e}", self.f_integral)),
            ("lhs", format!("{:.16e}", self.lhs)),
            ("rhs", format!("{:.16e}", self.rhs)),
            ("ratio", format!("{:.16e}", self.ratio)),
            ("max_pair_ratio", format!("{:.16e}", self.max_pair_ratio)),
            ("holds", self.holds.to_string()),
        ];
        rows.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

/// Pair i draws from ChaCha8 stream i of the seed, so results do not depend
/// on the worker count.
pub fn segment_inequality_check(geo: &ProfileGeometry, cfg: &SegmentConfig) -> Result<SegmentReport> {
    let surf = Surface::new(geo)?;
    let r = cfg.cap_radius;
    if !(r > 0.0) || 2.0 * r >= surf.total_length() {
        return Err(LabError::Config(format!(
            "cap radius {r} must be positive and below half the pole distance {}",
            surf.total_length()
        )));
    }
    if cfg.pairs == 0 {
        return Err(LabError::Config("at least one pair is required".into()));
    }
    let w_s = surf.angle_at_distance(r);
    let w_n = surf.angle_at_distance(surf.total_length() - r);
    let v1 = 2.0 * PI * surf.cumulative_at(&surf.area, &surf.area_density, w_s);
    let v2 = surf.total_area() - 2.0 * PI * surf.cumulative_at(&surf.area, &surf.area_density, w_n);
    let results: Vec<Option<f64>> = (0..cfg.pairs)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(i as u64);
            let (w1, t1) = surf.sample_cap(&mut rng, true, w_s);
            let (w2, t2) = surf.sample_cap(&mut rng, false, w_n);
            surf.geodesic(w1, w2, t2 - t1).map(|g| g.f_integral)
        })
        .collect();
    let done: Vec<f64> = results.iter().flatten().cloned().collect();
    let skipped = cfg.pairs - done.len();
    let c_m = area_ratio(2);
    let f_integral = surf.f_total();
    let rhs = c_m * (2.0 * r * v1 + 2.0 * r * v2) * f_integral;
    let mean = if done.is_empty() { 0.0 } else { done.iter().sum::<f64>() / done.len() as f64 };
    let lhs = v1 * v2 * mean;
    let ratio_of = |num: f64| if rhs > 0.0 { num / rhs } else if num > 0.0 { f64::INFINITY } else { 0.0 };
    let max_pair = done.iter().cloned().fold(0.0, f64::max);
    Ok(SegmentReport {
        cap_radius: r,
        pairs: cfg.pairs,
        seed: cfg.seed,
        skipped,
        flagged: skipped as f64 > SKIP_LIMIT * cfg.pairs as f64,
        vol_a1: v1,
        vol_a2: v2,
        c_m,
        f_integral,
        lhs,
        rhs,
        ratio: ratio_of(lhs),
        max_pair_ratio: ratio_of(v1 * v2 * max_pair),
        holds: lhs <= rhs,
    })
}

