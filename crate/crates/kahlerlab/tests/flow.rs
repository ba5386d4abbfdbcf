mod common;

use common::Bumps;
use kahlerlab::flow::{
    metric_locals, run_metric_direct, step_metric_direct, DtPolicy, Flow, FlowConfig, FlowState, MetricState,
};
use kahlerlab::geometry::{jets_of, Grid};

fn perturbed_flow(n: usize, nodes: usize, amp: f64, cfg: FlowConfig) -> (Flow, FlowState) {
    let p = Bumps::random(4, amp).profile(n, 12.0, nodes);
    Flow::new(&p, cfg).unwrap()
}

fn integrate_fixed(flow: &Flow, state: &FlowState, t_end: f64, steps: usize) -> Vec<f64> {
    let dt = t_end / steps as f64;
    let mut s = state.clone();
    for _ in 0..steps {
        s = flow.step_potential(&s, dt).unwrap();
    }
    s.phi
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn rk4_is_fourth_order() {
    let (flow, s0) = perturbed_flow(1, 96, 0.1, FlowConfig::new(1.0, 1.0));
    let t = 0.2;
    let reference = integrate_fixed(&flow, &s0, t, 1024);
    let e1 = max_diff(&integrate_fixed(&flow, &s0, t, 128), &reference);
    let e2 = max_diff(&integrate_fixed(&flow, &s0, t, 256), &reference);
    let order = (e1 / e2).log2();
    assert!(order > 3.7, "observed order {order} ({e1:e}, {e2:e})");
}

#[test]
fn metric_and_potential_flows_agree() {
    for n in 1..=2 {
        let (flow, s0) = perturbed_flow(n, 256, 0.1, FlowConfig::new(0.1, 0.1));
        let out = flow.run(s0.clone(), false, &mut |_, _| Ok(())).unwrap();
        let grid: &Grid = flow.grid();
        let q_pot: Vec<f64> = jets_of(grid, &out.state.geo.residual).iter().map(|d| d[1]).collect();
        let init = flow.profile(&s0).unwrap();
        let m = run_metric_direct(grid, n, MetricState::from_profile(&init).unwrap(), 0.1, 1e-4).unwrap();
        let err = max_diff(&q_pot, &m.q);
        assert!(err < 1e-5, "n={n}: max |dq| = {err:e}");
    }
}

#[test]
fn ricci_potential_evolves_by_scalar_curvature() {
    // Ric - omega = i dd-bar H and d(omega)/dt = -i dd-bar H give
    // dH/dt = R + H up to a constant, hence d(H_x)/dt = R_x + H_x.
    let n = 2;
    let p = Bumps::random(8, 0.1).profile(n, 12.0, 512);
    let grid = Grid::new(&p.grid).unwrap();
    let m0 = MetricState::from_profile(&p).unwrap();
    let h = 1e-4;
    let fwd = step_metric_direct(&grid, n, &m0, h).unwrap();
    let back = step_metric_direct(&grid, n, &m0, -h).unwrap();
    let hx = |q: &[f64]| metric_locals(&grid, n, q).unwrap().iter().map(|l| l.hx).collect::<Vec<_>>();
    let (hp, hm, h0) = (hx(&fwd.q), hx(&back.q), hx(&m0.q));
    let scalar = m0.scalar(&grid, n).unwrap();
    let rx: Vec<f64> = jets_of(&grid, &scalar).iter().map(|d| d[1]).collect();
    let mut worst: f64 = 0.0;
    for i in 0..grid.len() {
        if grid.s[i].abs() > 6.0 {
            continue;
        }
        let dt_hx = (hp[i] - hm[i]) / (2.0 * h);
        worst = worst.max((dt_hx - (rx[i] + h0[i])).abs() / (1.0 + rx[i].abs()));
    }
    assert!(worst < 1e-4, "worst relative mismatch {worst:e}");
}

#[test]
fn runs_are_bitwise_reproducible() {
    let mut cfg = FlowConfig::new(1.0, 0.25);
    cfg.light = true;
    let (flow, s0) = perturbed_flow(1, 128, 0.1, cfg.clone());
    let a = flow.run(s0.clone(), true, &mut |_, _| Ok(())).unwrap();
    let b = flow.run(s0, true, &mut |_, _| Ok(())).unwrap();
    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a.state.phi), bits(&b.state.phi));
    assert_eq!(a.samples.len(), 5);
    assert_eq!(a.samples[4].record.t, 1.0);
}

#[test]
fn fixed_policy_lands_on_cadence() {
    let mut cfg = FlowConfig::new(0.3, 0.1);
    cfg.dt_policy = DtPolicy::Fixed { dt: 0.003 };
    cfg.light = true;
    let (flow, s0) = perturbed_flow(1, 64, 0.05, cfg);
    let out = flow.run(s0, true, &mut |_, _| Ok(())).unwrap();
    let ts: Vec<f64> = out.samples.iter().map(|s| s.record.t).collect();
    assert_eq!(ts.len(), 4);
    for (k, t) in ts.iter().enumerate() {
        assert!((t - 0.1 * k as f64).abs() < 1e-12, "{ts:?}");
    }
}

#[test]
fn invalid_configs_are_rejected() {
    let p = Bumps::single(0.05).profile(1, 12.0, 64);
    let mut cfg = FlowConfig::new(1.0, 0.0);
    assert!(Flow::new(&p, cfg.clone()).is_err());
    cfg.cadence = 0.1;
    cfg.dt_policy = DtPolicy::Adaptive { cfl: 1.5, dt_max: None };
    assert!(Flow::new(&p, cfg.clone()).is_err());
    cfg.dt_policy = DtPolicy::Fixed { dt: -1.0 };
    assert!(Flow::new(&p, cfg).is_err());
}
