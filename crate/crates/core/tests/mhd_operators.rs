mod common;

use common::*;
use mhdlab_core::fields::{DiffOps, Order, PoissonSolver, Projector, ScalarField, StateVector, VectorField2};
use mhdlab_core::geometry::{
    build_cutoff, build_nested_regions, BandWidths, BcKind, CutoffField, CutoffSpec, DomainSpec, GeometryCase, Grid, OmegaSpec,
};
use mhdlab_core::linalg::{self, C64};
use mhdlab_core::mhd_operators::*;
use std::f64::consts::PI;

fn eq(ops: &DiffOps, spec: EquilibriumSpec) -> Equilibrium {
    make_equilibrium(ops, &Projector::new(ops), &spec, 1.0, 1.0).unwrap()
}

fn shear() -> EquilibriumSpec {
    EquilibriumSpec::Shear { amplitude: 1.0, wavenumber: 1.0, magnetic: 0.0 }
}

fn coupled() -> EquilibriumSpec {
    EquilibriumSpec::Custom {
        velocity: vec![StreamMode { amplitude: 0.7, kx: 1.0, ky: 1.0, phase: 0.3 }],
        magnetic: vec![StreamMode { amplitude: 0.5, kx: 1.0, ky: 0.0, phase: 0.0 }, StreamMode { amplitude: 0.2, kx: 0.0, ky: 2.0, phase: 1.0 }],
    }
}

#[test]
fn zero_equilibrium_is_trivial() {
    let ops = box_ops(16);
    let e = eq(&ops, EquilibriumSpec::Zero);
    assert!(e.is_zero());
    assert_eq!(e.grad_bound, 0.0);
    assert_eq!(e.f.max_abs(), 0.0);
    assert_eq!(e.g.max_abs(), 0.0);
}

#[test]
fn shear_forcing_matches_symbolic_laplacian() {
    let ops = box_ops(32);
    let e = eq(&ops, shear());
    let div = ops.divergence(&e.y_e).unwrap();
    assert!(linalg::max_abs(&div.values) < 1e-12);
    let expect: Vec<f64> = ops.grid.sample(|_, y| y.sin());
    assert!(max_diff(&e.f.u1, &expect) < 1e-4);
    assert!(linalg::max_abs(&e.f.u2) < 1e-12);
    assert!(e.g.max_abs() < 1e-12);
    assert!((e.grad_bound - 1.0).abs() < 1e-3);
}

#[test]
fn taylor_vortex_is_solenoidal() {
    let ops = box_ops(32);
    let e = eq(&ops, EquilibriumSpec::TaylorVortex { amplitude: 1.0, magnetic: 0.5 });
    assert!(linalg::max_abs(&ops.divergence(&e.y_e).unwrap().values) < 1e-12);
    assert!(linalg::max_abs(&ops.divergence(&e.b_e).unwrap().values) < 1e-12);
    let expect = ops.grid.sample(|x, y| x.sin() * y.cos());
    assert!(max_diff(&e.y_e.u1, &expect) < 1e-12);
}

#[test]
fn channel_equilibrium_respects_walls() {
    let ops = channel_ops(32);
    let e = eq(&ops, shear());
    for k in ops.grid.boundary_nodes() {
        assert!(e.y_e.u1[k].abs() < 1e-12 && e.y_e.u2[k].abs() < 1e-12);
    }
    // a field that cannot satisfy the walls is rejected or repaired, never silently broken
    let bad = EquilibriumSpec::Shear { amplitude: 1.0, wavenumber: 0.5, magnetic: 0.0 };
    if let Ok(e) = make_equilibrium(&ops, &Projector::new(&ops), &bad, 1.0, 1.0) {
        for k in ops.grid.boundary_nodes() {
            assert!(e.y_e.u1[k].abs() < 1e-8);
        }
    }
}

#[test]
fn invalid_viscosity_rejected() {
    let ops = box_ops(8);
    assert!(make_equilibrium(&ops, &Projector::new(&ops), &EquilibriumSpec::Zero, 0.0, 1.0).is_err());
}

#[test]
fn oseen_examples() {
    let ops = box_ops(32);
    let g = &ops.grid;
    let n = g.len();
    let zero = VectorField2::zeros(n);
    let op = oseen_plus(&ops, &zero, OpLabel::L1).unwrap();
    assert!(op.matrix.data().iter().all(|&v| v == 0.0));
    assert!(oseen_minus(&ops, &zero, OpLabel::M1).unwrap().matrix.data().iter().all(|&v| v == 0.0));

    let mut r = rng(1);
    let v = VectorField2::new(noise(n, &mut r), noise(n, &mut r));
    let c = VectorField2::new(vec![1.0; n], vec![0.0; n]);
    let lp = oseen_plus(&ops, &c, OpLabel::L1).unwrap().apply(&v.flat()).unwrap();
    let dxv = [linalg::spmv(&ops.dx, &v.u1), linalg::spmv(&ops.dx, &v.u2)].concat();
    assert!(max_diff(&lp, &dxv) < 1e-12);
    let lm = oseen_minus(&ops, &c, OpLabel::M1).unwrap().apply(&v.flat()).unwrap();
    assert!(max_diff(&lp, &lm) < 1e-12);

    let e = VectorField2::new(g.sample(|_, y| y.sin()), vec![0.0; n]);
    let v = VectorField2::new(vec![0.0; n], vec![1.0; n]);
    let cos = g.sample(|_, y| y.cos());
    let lp = oseen_plus(&ops, &e, OpLabel::L1).unwrap().apply(&v.flat()).unwrap();
    assert!(max_diff(&lp[..n], &cos) < 1e-4);
    assert!(linalg::max_abs(&lp[n..]) < 1e-12);
    let lm = oseen_minus(&ops, &e, OpLabel::M1).unwrap().apply(&v.flat()).unwrap();
    let neg: Vec<f64> = cos.iter().map(|c| -c).collect();
    assert!(max_diff(&lm[..n], &neg) < 1e-4);
    // curl form agrees on this pair
    let im = induction(&ops, &e, OpLabel::M1).unwrap().apply(&v.flat()).unwrap();
    assert!(max_diff(&im[..n], &neg) < 1e-4);
}

#[test]
fn induction_curl_form_matches_literal_on_solenoidal_fields() {
    // equal for divergence-free data up to truncation error, which shrinks at fourth order
    let mut errs = Vec::new();
    let mut last = None;
    for n in [32, 64] {
        let ops = box_ops(n);
        let mut r = rng(3);
        let e = smooth_solenoidal(&ops.grid, &mut r);
        let v = smooth_solenoidal(&ops.grid, &mut r);
        let lit = oseen_minus(&ops, &e, OpLabel::M2).unwrap().apply(&v.flat()).unwrap();
        let curl = induction(&ops, &e, OpLabel::M2).unwrap().apply(&v.flat()).unwrap();
        errs.push(max_diff(&lit, &curl) / linalg::max_abs(&lit));
        last = Some((ops, curl, linalg::max_abs(&lit)));
    }
    assert!(errs[1] < 1e-3 && errs[1] < errs[0] / 10.0, "{errs:?}");
    let (ops, curl, scale) = last.unwrap();
    let out = VectorField2::from_flat(&curl, Default::default()).unwrap();
    assert!(linalg::max_abs(&ops.divergence(&out).unwrap().values) < 1e-10 * scale);
}

#[test]
fn generator_zero_equilibrium_is_block_laplacian() {
    let ops = box_ops(16);
    let p = Projector::new(&ops);
    let e = EquilibriumSpec::Zero;
    let eqm = make_equilibrium(&ops, &p, &e, 1.0, 2.0).unwrap();
    let a = assemble_generator(&ops, &p, &eqm, GeneratorOptions::default()).unwrap();
    let n = ops.n();
    for (v, (i, j)) in a.matrix.iter() {
        if *v != 0.0 {
            assert_eq!(i / (2 * n), j / (2 * n), "coupling entry at ({i},{j})");
        }
    }
    let mut r = rng(5);
    let x = random_projected_state(&p, n, &mut r).flat();
    let y = a.apply(&x).unwrap();
    let lap = ops.vector_lap();
    let lphi = linalg::spmv(&lap, &x[..2 * n]);
    let lxi: Vec<f64> = linalg::spmv(&lap, &x[2 * n..]).into_iter().map(|v| 2.0 * v).collect();
    assert!(max_diff(&y[..2 * n], &lphi) < 1e-10);
    assert!(max_diff(&y[2 * n..], &lxi) < 1e-10);

    let shifted = assemble_generator(&ops, &p, &eqm, GeneratorOptions { sigma: 0.5, project_xi_row: false }).unwrap();
    let ys = shifted.apply(&x).unwrap();
    let diff: Vec<f64> = ys.iter().zip(&y).map(|(a, b)| a - b).collect();
    let half: Vec<f64> = x.iter().map(|v| 0.5 * v).collect();
    assert!(max_diff(&diff, &half) < 1e-12);
    assert!(assemble_generator(&ops, &p, &eqm, GeneratorOptions { sigma: -1.0, project_xi_row: false }).is_err());
}

#[test]
fn shear_generator_is_block_triangular() {
    let ops = box_ops(16);
    let p = Projector::new(&ops);
    let a = assemble_generator(&ops, &p, &eq(&ops, shear()), GeneratorOptions::default()).unwrap();
    let n = ops.n();
    for (v, (i, j)) in a.matrix.iter() {
        if *v != 0.0 {
            assert!(!(i < 2 * n && j >= 2 * n) && !(i >= 2 * n && j < 2 * n), "coupling entry at ({i},{j})");
        }
    }
}

fn pairing_defect(ops: &DiffOps, spec: EquilibriumSpec, seed: u64) -> f64 {
    let p = Projector::new(ops);
    let e = eq(ops, spec);
    let opts = GeneratorOptions { sigma: 0.3, project_xi_row: false };
    let a = assemble_generator(ops, &p, &e, opts).unwrap();
    let b = assemble_adjoint(ops, &p, &e, opts).unwrap();
    let w: Vec<f64> = (0..4).flat_map(|_| ops.weights.iter().copied()).collect();
    let mut r = rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let u = random_projected_state(&p, ops.n(), &mut r).flat();
        let v = random_projected_state(&p, ops.n(), &mut r).flat();
        let lhs = linalg::wdot(&w, &a.apply(&u).unwrap(), &v);
        let rhs = linalg::wdot(&w, &u, &b.apply(&v).unwrap());
        worst = worst.max((lhs - rhs).abs() / (linalg::wnorm(&w, &u) * linalg::wnorm(&w, &v)));
    }
    worst
}

#[test]
fn adjoint_pairing_periodic_and_channel() {
    assert!(pairing_defect(&box_ops(16), coupled(), 7) < 1e-10);
    assert!(pairing_defect(&channel_ops(16), shear(), 8) < 1e-10);
}

#[test]
fn zero_equilibrium_adjoint_equals_generator() {
    let ops = box_ops(16);
    let p = Projector::new(&ops);
    let e = eq(&ops, EquilibriumSpec::Zero);
    let a = assemble_generator(&ops, &p, &e, GeneratorOptions::default()).unwrap();
    let b = assemble_adjoint(&ops, &p, &e, GeneratorOptions::default()).unwrap();
    let mut r = rng(9);
    let x = random_projected_state(&p, ops.n(), &mut r).flat();
    assert!(max_diff(&a.apply(&x).unwrap(), &b.apply(&x).unwrap()) < 1e-10);
}

fn dense_spectrum(op: &LinearOperator) -> Vec<C64> {
    let m = op.n();
    let mut cols = Vec::with_capacity(m);
    for j in 0..m {
        let mut e = vec![0.0; m];
        e[j] = 1.0;
        let mut ej = e.clone();
        if let Some(p) = &op.projector {
            let h = m / 2;
            p.project_flat(&mut ej[..h]).unwrap();
            p.project_flat(&mut ej[h..]).unwrap();
        }
        cols.push(op.apply(&ej).unwrap());
    }
    let a = faer::Mat::<f64>::from_fn(m, m, |i, j| cols[j][i]);
    a.eigenvalues().unwrap().into_iter().map(|z| C64::new(z.re, z.im)).collect()
}

#[test]
fn adjoint_spectrum_is_conjugate() {
    let ops = DiffOps::new(&Grid::periodic_box(2.0 * PI, 12).unwrap(), Order::Fourth).unwrap();
    let p = Projector::new(&ops);
    let e = eq(&ops, coupled());
    let opts = GeneratorOptions::default();
    let f = dense_spectrum(&assemble_generator(&ops, &p, &e, opts).unwrap());
    let mut a = dense_spectrum(&assemble_adjoint(&ops, &p, &e, opts).unwrap());
    let scale = f.iter().map(|z| z.norm()).fold(0.0, f64::max);
    for z in &f {
        let (k, d) = a.iter().enumerate().map(|(k, w)| (k, (w.conj() - z).norm())).min_by(|x, y| x.1.total_cmp(&y.1)).unwrap();
        assert!(d < 1e-8 * scale, "unmatched eigenvalue {z} (distance {d:e})");
        a.swap_remove(k);
    }
}

#[test]
fn coo_export_lists_every_entry() {
    let ops = box_ops(8);
    let e = VectorField2::new(ops.grid.sample(|_, y| y.sin()), vec![0.0; ops.n()]);
    let op = oseen_plus(&ops, &e, OpLabel::L1).unwrap();
    let mut buf = Vec::new();
    op.write_coo(&mut buf).unwrap();
    let s = String::from_utf8(buf).unwrap();
    assert!(s.starts_with("# L1 rows=128 cols=128"));
    assert_eq!(s.lines().count(), 1 + op.matrix.nnz());
}

#[test]
fn pressure_trivial_cases() {
    let ops = box_ops(16);
    let ps = PoissonSolver::new(&ops);
    let p = Projector::new(&ops);
    let e = eq(&ops, coupled());
    let zero = StateVector::<f64>::zeros(ops.n());
    assert_eq!(linalg::max_abs(&pressure_from_state(&ops, &ps, &zero, &e).unwrap().p.values), 0.0);
    let mut r = rng(11);
    let s = random_projected_state(&p, ops.n(), &mut r);
    let ez = eq(&ops, EquilibriumSpec::Zero);
    assert_eq!(linalg::max_abs(&pressure_from_state(&ops, &ps, &s, &ez).unwrap().p.values), 0.0);
}

#[test]
fn pressure_identity_residual_and_order() {
    let mut errs = Vec::new();
    for n in [32, 64] {
        let g = Grid::periodic_box(2.0 * PI, n).unwrap();
        let ops = DiffOps::new(&g, Order::Second).unwrap();
        let p = Projector::new(&ops);
        let ps = PoissonSolver::new(&ops);
        let e = eq(&ops, coupled());
        let mut r = rng(12);
        let phi = p.project(&smooth_solenoidal(&g, &mut r)).unwrap();
        let xi = p.project(&smooth_solenoidal(&g, &mut r)).unwrap();
        let s = StateVector::new(phi.clone(), xi).unwrap();
        let sol = pressure_from_state(&ops, &ps, &s, &e).unwrap();
        assert!(sol.residual <= 1e-10);
        let lp = mhdlab_core::mhd_operators::commutators::poisson_apply(&ops, &sol.p.values);
        let rhs = mhdlab_core::mhd_operators::pressure::pressure_rhs(&ops, &s, &e).unwrap();
        assert!(max_diff(&lp, &rhs) <= 1e-10 * linalg::max_abs(&rhs));

        let div_l1 = linalg::spmv(&ops.div_matrix(), &oseen_plus(&ops, &e.y_e, OpLabel::L1).unwrap().apply(&phi.flat()).unwrap());
        let ident = div_oseen_identity(&ops, &e.y_e, &phi).unwrap();
        errs.push(max_diff(&div_l1, &ident));
    }
    let order = (errs[0] / errs[1]).log2();
    assert!(order >= 1.8, "measured order {order}");
}

fn disc_setup(n: usize) -> (DiffOps, mhdlab_core::geometry::RegionSet, CutoffField) {
    let ops = box_ops(n);
    let omega = OmegaSpec::Disc { radius: 0.15 * 2.0 * PI, center: None };
    let regions = build_nested_regions(&ops.grid, &omega, GeometryCase::InteriorPatch, BandWidths::default_for(&ops.grid)).unwrap();
    let chi = build_cutoff(&ops.grid, &regions, CutoffSpec::for_reach(ops.order.reach())).unwrap();
    (ops, regions, chi)
}

#[test]
fn commutators_vanish_outside_transition() {
    let (ops, regions, chi) = disc_setup(64);
    let p = Projector::new(&ops);
    let e = eq(&ops, coupled());
    let mut r = rng(13);
    let s = random_projected_state(&p, ops.n(), &mut r);
    let pr = ScalarField::new(noise(ops.n(), &mut r));
    let f = build_commutators(&ops, &regions, &chi, &s, &pr, &e).unwrap();
    assert!(f.scale() > 0.0);
    assert!(f.leak(&regions) <= 1e-12 * f.scale());

    let one = CutoffField::constant(ops.n(), 1.0);
    let f1 = commutator_forcing(&ops, &one, &s, &pr, &e).unwrap();
    assert_eq!(f1.scale(), 0.0);
}

#[test]
fn thin_cutoff_layers_leak() {
    let (ops, regions, _) = disc_setup(64);
    let e = eq(&ops, coupled());
    let thin = build_cutoff(&ops.grid, &regions, CutoffSpec { profile: Default::default(), layer_cells: 0 }).unwrap();
    let mut r = rng(14);
    let s = random_projected_state(&Projector::new(&ops), ops.n(), &mut r);
    let pr = ScalarField::new(noise(ops.n(), &mut r));
    assert!(matches!(
        build_commutators(&ops, &regions, &thin, &s, &pr, &e),
        Err(mhdlab_core::MhdError::CommutatorLeak(_))
    ));
}

#[test]
fn chi_laplacian_commutator_matches_leibniz() {
    // [χ,Δ]φ for φ = (x, 0) is −φΔχ − 2∇χ·∇φ
    let mut errs = Vec::new();
    for n in [32, 64] {
        let g = Grid::new(&DomainSpec { lx: 1.0, ly: 1.0, nx: n, ny: n, bc_x: BcKind::Wall, bc_y: BcKind::Wall }).unwrap();
        let ops = DiffOps::new(&g, Order::Second).unwrap();
        let chi_f = |x: f64, y: f64| (-8.0 * ((x - 0.5).powi(2) + (y - 0.5).powi(2))).exp();
        let chi = CutoffField { values: g.sample(chi_f), transition: (0.0, 1.0) };
        let phi = VectorField2::new(g.sample(|x, _| x), vec![0.0; g.len()]);
        let s = StateVector::new(phi, VectorField2::zeros(g.len())).unwrap();
        let e = make_equilibrium(&ops, &Projector::new(&ops), &EquilibriumSpec::Zero, 1.0, 1.0).unwrap();
        let f = commutator_forcing(&ops, &chi, &s, &ScalarField::zeros(g.len()), &e).unwrap();
        let mut err: f64 = 0.0;
        for k in 0..g.len() {
            if g.is_boundary(k) {
                continue;
            }
            let (x, y) = g.coords(k);
            let r2 = (x - 0.5).powi(2) + (y - 0.5).powi(2);
            let c = chi_f(x, y);
            let lap = c * (256.0 * r2 - 32.0);
            let dcx = -16.0 * (x - 0.5) * c;
            let exact = -(x * lap + 2.0 * dcx);
            err = err.max((f.f_chi.u1[k] - exact).abs());
        }
        errs.push(err);
    }
    assert!(errs[1] < errs[0] / 3.0, "{errs:?}");
}

#[test]
fn oseen_commutator_is_zero_order() {
    let (ops, _, chi) = disc_setup(64);
    let e = eq(&ops, coupled());
    let n = ops.n();
    let l1 = oseen_plus(&ops, &e.y_e, OpLabel::L1).unwrap();
    let dchi = |u: &VectorField2<f64>| -> Vec<f64> {
        // (e·∇χ) u
        let dx = linalg::spmv(&ops.dx, &chi.values);
        let dy = linalg::spmv(&ops.dy, &chi.values);
        let a: Vec<f64> = (0..n).map(|k| e.y_e.u1[k] * dx[k] + e.y_e.u2[k] * dy[k]).collect();
        [u.u1.iter().zip(&a).map(|(x, y)| x * y).collect::<Vec<_>>(), u.u2.iter().zip(&a).map(|(x, y)| x * y).collect()].concat()
    };
    let commute = |u: &VectorField2<f64>| -> Vec<f64> {
        let cu = u.times(&chi.values).flat();
        let a = l1.apply(&cu).unwrap();
        let b = VectorField2::from_flat(&l1.apply(&u.flat()).unwrap(), Default::default()).unwrap().times(&chi.values).flat();
        a.iter().zip(&b).map(|(x, y)| x - y).collect()
    };
    let constant = VectorField2::new(vec![1.0; n], vec![0.5; n]);
    assert!(max_diff(&commute(&constant), &dchi(&constant)) < 1e-12);
    let ramp = VectorField2::new(ops.grid.sample(|x, _| (x).sin()), ops.grid.sample(|_, y| y.cos()));
    let scale = linalg::max_abs(&dchi(&ramp)).max(1e-300);
    assert!(max_diff(&commute(&ramp), &dchi(&ramp)) < 0.05 * scale);
}
