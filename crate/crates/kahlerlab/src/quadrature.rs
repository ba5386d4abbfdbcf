//! Quadrature rules and compensated summation.

use crate::stencil::fornberg;

/// Neumaier-compensated sum in iteration order.
pub fn neumaier<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, 0.0);
            for j in 0..m {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = m as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[m - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    (nodes, weights)
}

/// Node weights for integrating a smooth function over `[s_0, s_last]` on a
/// monotone grid. Each interval integrates the Lagrange interpolant through
/// the eight surrounding nodes.
pub fn composite_weights(s: &[f64]) -> Vec<f64> {
    const K: usize = 8;
    let n = s.len();
    assert!(n >= K, "need at least {K} nodes");
    let (gx, gw) = gauss_legendre(5);
    let mut w = vec![0.0; n];
    for i in 0..n - 1 {
        let lo = i.saturating_sub(K / 2 - 1).min(n - K);
        let xs = &s[lo..lo + K];
        let (a, b) = (s[i], s[i + 1]);
        let half = 0.5 * (b - a);
        for (t, wt) in gx.iter().zip(&gw) {
            let x0 = a + half * (t + 1.0);
            let c = fornberg(x0, xs, 0);
            for k in 0..K {
                w[lo + k] += half * wt * c[k][0];
            }
        }
    }
    w
}

/// Tanh-sinh rule on [0, 1] as (distance from 0, distance from 1, weight).
/// Distances are returned separately so integrands with endpoint
/// singularities see them without cancellation.
pub fn tanh_sinh(step: f64, t_max: f64) -> Vec<(f64, f64, f64)> {
    let half_pi = 0.5 * std::f64::consts::PI;
    let k = (t_max / step).floor() as i64;
    (-k..=k)
        .filter_map(|j| {
            let t = j as f64 * step;
            let z = half_pi * t.sinh();
            let left = 1.0 / (1.0 + (-2.0 * z).exp());
            let right = 1.0 / (1.0 + (2.0 * z).exp());
            let sech = 2.0 / (z.exp() + (-z).exp());
            let w = 0.5 * step * half_pi * t.cosh() * sech * sech;
            (left > 0.0 && right > 0.0 && w > 0.0).then_some((left, right, w))
        })
        .collect()
}
