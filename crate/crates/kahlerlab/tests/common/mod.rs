//! Independent oracles shared by the integration tests. Everything here works
//! in the s-coordinate with closed-form derivatives, so it shares no code
//! path with the library's moment-coordinate stencils.
#![allow(dead_code)]

use kahlerlab::geometry::{uniform_nodes, RadialProfile};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Perturbation sum_j a_j sech(s - c_j).
#[derive(Debug, Clone)]
pub struct Bumps {
    pub terms: Vec<(f64, f64)>,
}

impl Bumps {
    pub fn single(a: f64) -> Self {
        Bumps { terms: vec![(a, 0.0)] }
    }

    /// Random admissible perturbation with total amplitude up to `amp`.
    pub fn random(seed: u64, amp: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = rng.gen_range(1..=3);
        let terms = (0..k)
            .map(|_| (amp * rng.gen_range(-1.0..1.0) / k as f64, rng.gen_range(-2.0..2.0)))
            .collect();
        Bumps { terms }
    }

    /// Value and s-derivatives up to order 4.
    pub fn jet(&self, s: f64) -> [f64; 5] {
        let mut d = [0.0; 5];
        for &(a, c) in &self.terms {
            let u = 1.0 / (s - c).cosh();
            let v = (s - c).tanh();
            let u2 = u * u;
            d[0] += a * u;
            d[1] += a * (-u * v);
            d[2] += a * u * (1.0 - 2.0 * u2);
            d[3] += a * (-u * v * (1.0 - 6.0 * u2));
            d[4] += a * u * (1.0 - 20.0 * u2 + 24.0 * u2 * u2);
        }
        d
    }

    pub fn profile(&self, n: usize, half_width: f64, nodes: usize) -> RadialProfile {
        let grid = uniform_nodes(half_width, nodes).unwrap();
        let r: Vec<f64> = grid.iter().map(|&s| self.jet(s)[0]).collect();
        RadialProfile::from_residual(n, &grid, &r).unwrap()
    }
}

/// s-derivatives F', F'', F''', F'''' of F_FS + bumps.
pub fn potential_jet(n: usize, b: &Bumps, s: f64) -> [f64; 4] {
    let k = (n + 1) as f64;
    let x = 1.0 / (1.0 + (-s).exp());
    let y = 1.0 / (1.0 + s.exp());
    let r = b.jet(s);
    [
        k * x + r[1],
        k * x * y + r[2],
        k * x * y * (y - x) + r[3],
        k * x * y * (1.0 - 6.0 * x * y) + r[4],
    ]
}

/// Exact unitary-frame data (A, B, D, ric_radial, ric_transverse) from the
/// momentum-profile formulas.
pub fn exact_curvature(n: usize, b: &Bumps, s: f64) -> [f64; 5] {
    let [f1, f2, f3, f4] = potential_jet(n, b, s);
    let phi_t = f3 / f2;
    let phi_tt = (f4 / f2 - phi_t * phi_t) / f2;
    let a = -phi_tt;
    let bb = (f2 - f1 * phi_t) / (f1 * f1);
    let d = (f1 - f2) / (f1 * f1);
    let nf = n as f64;
    [a, bb, d, a + (nf - 1.0) * bb, bb + nf * d]
}

/// Brute-force curvature from the coordinate formula
/// R(i,jb,k,lb) = -d_k d_lb g(i,jb) + g^(p,qb) d_k g(i,qb) d_lb g(p,jb)
/// by finite differences of the ambient metric on C^2 at (e^{s/2}, 0).
/// Returns unitary-frame (R11, R1122, R2222, R1221).
pub fn ambient_curvature_n2(b: &Bumps, s: f64) -> [f64; 4] {
    let metric = |z: [Complex64; 2]| -> [[Complex64; 2]; 2] {
        let r2 = z[0].norm_sqr() + z[1].norm_sqr();
        let sv = r2.ln();
        let [f1, f2, _, _] = potential_jet(2, b, sv);
        let mut g = [[Complex64::new(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                let delta = if i == j { f1 / r2 } else { 0.0 };
                g[i][j] = Complex64::new(delta, 0.0) + (f2 - f1) * z[i].conj() * z[j] / (r2 * r2);
            }
        }
        g
    };
    let z0 = [Complex64::new((0.5 * s).exp(), 0.0), Complex64::new(0.0, 0.0)];
    let h = 1e-3 * (0.5 * s).exp().max(1e-2);
    let shift = |z: [Complex64; 2], k: usize, re: f64, im: f64| {
        let mut w = z;
        w[k] += Complex64::new(re, im);
        w
    };
    let c = [1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0];
    let offs = [-2.0, -1.0, 0.0, 1.0, 2.0];
    // Real partial derivative along direction (k, real/imag) of a metric entry function.
    let d1 = |f: &dyn Fn([Complex64; 2]) -> Complex64, z: [Complex64; 2], k: usize, imag: bool| {
        let mut acc = Complex64::new(0.0, 0.0);
        for (w, o) in c.iter().zip(offs) {
            let zz = if imag { shift(z, k, 0.0, o * h) } else { shift(z, k, o * h, 0.0) };
            acc += *w * f(zz);
        }
        acc / h
    };
    let wirt = |f: &dyn Fn([Complex64; 2]) -> Complex64, z: [Complex64; 2], k: usize, bar: bool| {
        let dre = d1(f, z, k, false);
        let dim = d1(f, z, k, true);
        let i = Complex64::new(0.0, 1.0);
        if bar {
            0.5 * (dre + i * dim)
        } else {
            0.5 * (dre - i * dim)
        }
    };
    let g0 = metric(z0);
    let det = g0[0][0] * g0[1][1] - g0[0][1] * g0[1][0];
    let ginv = [[g0[1][1] / det, -g0[0][1] / det], [-g0[1][0] / det, g0[0][0] / det]];
    let entry = |i: usize, j: usize| move |z: [Complex64; 2]| metric(z)[i][j];
    let riem = |i: usize, j: usize, k: usize, l: usize| -> f64 {
        let gij = entry(i, j);
        let inner = |z: [Complex64; 2]| wirt(&gij, z, l, true);
        let second = wirt(&inner, z0, k, false);
        let mut acc = -second;
        for p in 0..2 {
            for q in 0..2 {
                let a = wirt(&entry(i, q), z0, k, false);
                let bq = wirt(&entry(p, j), z0, l, true);
                // g^{p qb} stored as inverse of g[q][p] ordering.
                acc += ginv[q][p] * a * bq;
            }
        }
        acc.re
    };
    let g11 = g0[0][0].re;
    let g22 = g0[1][1].re;
    [
        riem(0, 0, 0, 0) / (g11 * g11),
        riem(0, 0, 1, 1) / (g11 * g22),
        riem(1, 1, 1, 1) / (g22 * g22),
        riem(0, 1, 1, 0) / (g11 * g22),
    ]
}

/// Second-order finite differences in s for -((F')^{n-1} f')' = mu F'' (F')^{n-1} f
/// (invariant functions) and, on CP^1, -g'' + g/4 = mu F'' g for g(s) e^{i theta}.
/// The Laplace eigenvalue is 2 mu.
struct Pencil {
    diag: Vec<f64>,
    off: Vec<f64>,
}

impl Pencil {
    fn new(n: usize, b: &Bumps, half: f64, h: f64, angular: bool) -> Self {
        let m = (2.0 * half / h).round() as usize + 1;
        let s = |i: f64| -half + i * h;
        let coef = |t: f64| potential_jet(n, b, t)[0].powi(n as i32 - 1);
        let weight = |t: f64| {
            let j = potential_jet(n, b, t);
            j[1] * j[0].powi(n as i32 - 1)
        };
        let w: Vec<f64> = (0..m).map(|i| weight(s(i as f64)) * h).collect();
        let a: Vec<f64> = (0..m - 1).map(|i| coef(s(i as f64 + 0.5)) / h).collect();
        let mut diag = vec![0.0; m];
        for i in 0..m - 1 {
            diag[i] += a[i];
            diag[i + 1] += a[i];
        }
        if angular {
            for i in 0..m {
                diag[i] += 0.25 * h;
            }
        }
        let off: Vec<f64> = (0..m - 1).map(|i| -a[i] / (w[i] * w[i + 1]).sqrt()).collect();
        let diag = diag.iter().zip(&w).map(|(d, wi)| d / wi).collect();
        Pencil { diag, off }
    }

    fn count_below(&self, mu: f64) -> usize {
        let mut count = 0;
        let mut d = 1.0;
        for i in 0..self.diag.len() {
            let e2 = if i == 0 { 0.0 } else { self.off[i - 1] * self.off[i - 1] };
            d = self.diag[i] - mu - e2 / d;
            if d == 0.0 {
                d = -1e-300;
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn eigenvalue(&self, k: usize) -> f64 {
        let (mut lo, mut hi) = (0.0, 50.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// Richardson-extrapolated lambda in the given sector.
pub fn oracle_lambda(n: usize, b: &Bumps, angular: bool) -> f64 {
    let k = if angular { 0 } else { 1 };
    let coarse = 2.0 * Pencil::new(n, b, 36.0, 0.01, angular).eigenvalue(k);
    let fine = 2.0 * Pencil::new(n, b, 36.0, 0.005, angular).eigenvalue(k);
    (4.0 * fine - coarse) / 3.0
}
