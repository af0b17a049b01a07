mod common;

use common::*;
use mhdlab_core::fields::{DiffOps, Projector};
use mhdlab_core::mhd_operators::*;
use mhdlab_core::spectral::*;
use mhdlab_core::stabilize::*;
use mhdlab_core::MhdError;
use std::f64::consts::PI;

struct Loop {
    space: StateSpace,
    eq: Equilibrium,
    op: LinearOperator,
    proj: UnstableProjection,
    controls: Vec<ControlField>,
    b: faer::Mat<f64>,
    lambda_next: f64,
    lambda_top: f64,
    projector: Projector,
    ops: DiffOps,
}

fn build(n: usize) -> Loop {
    let ops = box_ops(n);
    let projector = Projector::new(&ops);
    let eq = make_equilibrium(&ops, &projector, &EquilibriumSpec::Zero, 1.0, 2.0).unwrap();
    let space = StateSpace::new(&ops, &projector).unwrap();
    let opts = GeneratorOptions { sigma: 1.5, ..Default::default() };
    let op = assemble_generator(&ops, &projector, &eq, opts).unwrap();
    let adj = assemble_adjoint(&ops, &projector, &eq, opts).unwrap();
    let fwd = compute_spectrum(&space, &op, &eq, 4, Strategy::Auto).unwrap();
    let bwd = adjoint_spectrum(&space, &adj, &eq, 4, Strategy::Auto).unwrap();
    let proj = UnstableProjection::new(&space, &op, &fwd, &bwd).unwrap();
    let g = &ops.grid;
    let omega: Vec<usize> = (0..g.len()).filter(|&k| {
        let (x, y) = g.coords(k);
        (x - PI).hypot(y - PI) <= 0.15 * 2.0 * PI
    }).collect();
    let views = bwd.unstable_views();
    let grams: Vec<GramMatrix> = views.iter().map(|v| ucp_gram_test(g, v.lambda, &v.vectors, &omega, GRAM_THRESHOLD).unwrap()).collect();
    let u = select_actuators(g, &views, &grams, &omega, bwd.k_max).unwrap();
    let mut m = vec![0.0; g.len()];
    omega.iter().for_each(|&k| m[k] = 1.0);
    let controls = control_fields(&space, &projector, &u, &m).unwrap();
    let b = input_map(&proj, &controls).unwrap();
    let lambda_next = fwd.first_stable().unwrap().re;
    let lambda_top = fwd.pairs[0].lambda.re;
    Loop { space, eq, op, proj, controls, b, lambda_next, lambda_top, projector, ops }
}

#[test]
fn projection_and_input_map() {
    let l = build(16);
    assert_eq!(l.proj.dim(), 4);
    assert!(l.proj.pairing_cond < 1e3);
    assert!((l.lambda_top - 0.5).abs() < 0.05);
    for i in 0..4 {
        for j in 0..4 {
            let want = if i == j { l.lambda_top } else { 0.0 };
            assert!((l.proj.a_u[(i, j)] - want).abs() < 1e-8);
        }
    }
    // projecting twice changes nothing
    let y = random_projected_state(&l.projector, l.ops.n(), &mut rng(2)).flat();
    let p1 = l.proj.project(&y).unwrap();
    let p2 = l.proj.project(&p1).unwrap();
    assert!(max_diff(&p1, &p2) < 1e-10);
    assert_eq!(l.b.nrows(), 4);
    for c in &l.controls {
        assert!(c.leakage >= 0.0 && c.leakage < 1.0);
    }
}

#[test]
fn closed_loop_decays_and_open_loop_grows() {
    let l = build(16);
    let gain = synthesize_feedback(&l.proj.a_u, &l.b, 1.0, 0).unwrap();
    assert!(gain.max_real_part() <= -1.0 + 1e-8);
    let y0 = random_projected_state(&l.projector, l.ops.n(), &mut rng(8)).flat();
    let dt = 0.01;
    let closed = simulate_closed_loop(&l.space, &l.op, &l.eq, &l.proj, Some(&gain), &l.controls, &y0, 12.0, dt).unwrap();
    let open = simulate_closed_loop(&l.space, &l.op, &l.eq, &l.proj, None, &l.controls, &y0, 4.0, dt).unwrap();
    assert!(open.energy_unstable.last().unwrap() > &open.energy_unstable[0]);
    let fit_u = measure_decay(&closed.times, &closed.energy_unstable, (1.0, 6.0)).unwrap();
    assert!(fit_u.rate >= 2.0 * 0.9, "unstable energy rate {}", fit_u.rate);
    let fit = measure_decay(&closed.times, &closed.energy, (6.0, 12.0)).unwrap();
    let expected = 1.0f64.min(l.lambda_next.abs());
    assert!((fit.rate / 2.0 - expected).abs() <= 0.15 * expected, "rate {} expected {}", fit.rate / 2.0, expected);
}

#[test]
fn zero_gain_is_open_loop() {
    let l = build(16);
    let y0 = random_projected_state(&l.projector, l.ops.n(), &mut rng(4)).flat();
    let zero = FeedbackGain { f: faer::Mat::zeros(l.controls.len(), 4), gamma: 1.0, targets: vec![], closed_loop: vec![] };
    let a = simulate_closed_loop(&l.space, &l.op, &l.eq, &l.proj, Some(&zero), &l.controls, &y0, 1.0, 0.05).unwrap();
    let b = simulate_closed_loop(&l.space, &l.op, &l.eq, &l.proj, None, &l.controls, &y0, 1.0, 0.05).unwrap();
    assert!(max_diff(&a.energy, &b.energy) <= 1e-12 * a.energy[0]);
}

#[test]
fn blow_up_is_reported() {
    let l = build(16);
    let y0 = random_projected_state(&l.projector, l.ops.n(), &mut rng(4)).flat();
    let r = simulate_closed_loop(&l.space, &l.op, &l.eq, &l.proj, None, &l.controls, &y0, 40.0, 0.1);
    assert!(matches!(r, Err(MhdError::Instability(_))));
}
