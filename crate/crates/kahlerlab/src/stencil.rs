//! Finite-difference weights on nonuniform nodes and the skeleton stencil
//! layout used for derivatives in the moment coordinate.

/// Number of points in every derivative stencil.
pub const WIDTH: usize = 9;
/// Highest derivative order produced by the stencils.
pub const MAX_ORDER: usize = 4;

/// Fornberg's recursion. Returns `w[j][k]`, the weight of node `j` for the
/// `k`-th derivative at `x0`, for `k <= m`.
pub fn fornberg(x0: f64, x: &[f64], m: usize) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut c = vec![vec![0.0; m + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = x[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - x0;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c
}

/// Subset of node indices whose spacing never drops below
/// `kappa * max_gap`. Built greedily outward from the middle node, with both
/// end nodes always kept.
pub fn skeleton(x: &[f64], kappa: f64) -> Vec<usize> {
    let n = x.len();
    let max_gap = x.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    let floor = kappa * max_gap;
    let c = n / 2;
    let mut sk = vec![c];
    let mut j = c;
    loop {
        let mut k = j + 1;
        while k < n - 1 && x[k] - x[j] < floor {
            k += 1;
        }
        if k >= n - 1 {
            sk.push(n - 1);
            break;
        }
        sk.push(k);
        j = k;
    }
    j = c;
    loop {
        let mut k = j - 1;
        while k > 0 && x[j] - x[k] < floor {
            k -= 1;
        }
        if k == 0 {
            sk.push(0);
            break;
        }
        sk.push(k);
        j = k;
    }
    sk.sort_unstable();
    sk.dedup();
    sk
}

/// Per-node derivative stencils drawn from the skeleton.
#[derive(Debug, Clone)]
pub struct Stencils {
    pub x: Vec<f64>,
    pub skeleton: Vec<usize>,
    pub index: Vec<[usize; WIDTH]>,
    pub weights: Vec<[[f64; MAX_ORDER + 1]; WIDTH]>,
}

impl Stencils {
    pub const KAPPA: f64 = 0.5;

    /// Builds stencils for strictly increasing nodes `x`. Needs at least
    /// `WIDTH` skeleton nodes.
    pub fn new(x: &[f64]) -> Option<Self> {
        let sk = skeleton(x, Self::KAPPA);
        if sk.len() < WIDTH {
            return None;
        }
        let mut index = Vec::with_capacity(x.len());
        let mut weights = Vec::with_capacity(x.len());
        for &xi in x {
            let (idx, w) = Self::local(x, &sk, xi);
            index.push(idx);
            weights.push(w);
        }
        Some(Self { x: x.to_vec(), skeleton: sk, index, weights })
    }

    fn local(x: &[f64], sk: &[usize], x0: f64) -> ([usize; WIDTH], [[f64; MAX_ORDER + 1]; WIDTH]) {
        let half = WIDTH / 2;
        let p = sk.partition_point(|&j| x[j] < x0);
        let lo = p.saturating_sub(half).min(sk.len() - WIDTH);
        let mut idx = [0usize; WIDTH];
        let mut xs = [0.0; WIDTH];
        for k in 0..WIDTH {
            idx[k] = sk[lo + k];
            xs[k] = x[idx[k]];
        }
        let c = fornberg(x0, &xs, MAX_ORDER);
        let mut w = [[0.0; MAX_ORDER + 1]; WIDTH];
        for k in 0..WIDTH {
            w[k].copy_from_slice(&c[k]);
        }
        (idx, w)
    }

    /// Derivatives of order 0..=4 of the grid function `u` at node `i`.
    pub fn jet(&self, u: &[f64], i: usize) -> [f64; MAX_ORDER + 1] {
        let mut d = [0.0; MAX_ORDER + 1];
        let idx = &self.index[i];
        let w = &self.weights[i];
        for k in 0..WIDTH {
            let v = u[idx[k]];
            for (o, dv) in d.iter_mut().enumerate() {
                *dv += w[k][o] * v;
            }
        }
        d
    }

    /// Derivatives of order 0..=4 at an arbitrary abscissa inside the span.
    pub fn jet_at(&self, u: &[f64], x0: f64) -> [f64; MAX_ORDER + 1] {
        let (idx, w) = Self::local(&self.x, &self.skeleton, x0);
        let mut d = [0.0; MAX_ORDER + 1];
        for k in 0..WIDTH {
            for (o, dv) in d.iter_mut().enumerate() {
                *dv += w[k][o] * u[idx[k]];
            }
        }
        d
    }

    /// Jets at every node.
    pub fn jets(&self, u: &[f64]) -> Vec<[f64; MAX_ORDER + 1]> {
        (0..self.x.len()).map(|i| self.jet(u, i)).collect()
    }
}
