mod common;

use common::*;
use mhdlab_core::carleman::*;
use mhdlab_core::fields::{DiffOps, PoissonSolver, Projector, ScalarField, StateVector, VectorField2};
use mhdlab_core::geometry::*;
use mhdlab_core::linalg::C64;
use mhdlab_core::mhd_operators::*;
use mhdlab_core::spectral::{compute_spectrum, StateSpace, Strategy};
use std::f64::consts::PI;

struct Geo {
    ops: DiffOps,
    regions: RegionSet,
    psi: WeightField,
    chi: CutoffField,
}

fn geo(n: usize, radius: f64, widths: Option<BandWidths>) -> Geo {
    let ops = box_ops(n);
    let omega = OmegaSpec::Disc { radius, center: None };
    let widths = widths.unwrap_or_else(|| BandWidths::default_for(&ops.grid));
    let regions = build_nested_regions(&ops.grid, &omega, GeometryCase::InteriorPatch, widths).unwrap();
    let psi = build_weight(&ops.grid, &regions).unwrap();
    let chi = build_cutoff(&ops.grid, &regions, CutoffSpec::for_reach(ops.order.reach())).unwrap();
    Geo { ops, regions, psi, chi }
}

fn default_geo() -> Geo {
    geo(64, 0.1 * 2.0 * PI, Some(BandWidths { omega1: 0.3, omega_star: 1.6 }))
}

fn base(g: &Geo) -> CarlemanParams {
    CarlemanParams::new(1.0, 0.5, 0.5, g.psi.rho, g.psi.k).unwrap()
}

/// Smooth solenoidal-ish state multiplied by a factor vanishing on ω.
fn omega_vanishing(g: &Geo, seed: u64) -> (StateVector<f64>, ScalarField<f64>) {
    let mut r = rng(seed);
    let w1 = g.regions.layering.w1;
    let f: Vec<f64> = g.regions.s.iter().map(|&s| 1.0 - Profile::Quintic.eval(s / w1)).collect();
    let phi = smooth_solenoidal(&g.ops.grid, &mut r).times(&f);
    let xi = smooth_solenoidal(&g.ops.grid, &mut r).times(&f);
    let p = ScalarField::new(g.ops.grid.sample(|x, y| (x + 0.3).sin() * (2.0 * y).cos())).times(&f);
    (StateVector::new(phi, xi).unwrap(), p)
}

#[test]
fn zero_field_passes_trivially() {
    let g = default_geo();
    let w = vec![0.0; g.ops.n()];
    let r = integrated_inequality_check(&g.ops, &[&w], &g.psi, &base(&g), &g.regions, 0.0).unwrap();
    assert_eq!((r.lhs_grad, r.lhs_zero, r.rhs_main), (0.0, 0.0, 0.0));
    assert!(r.pass);
}

#[test]
fn field_without_zero_cauchy_data_is_rejected() {
    let g = default_geo();
    let w = vec![1.0; g.ops.n()];
    assert!(matches!(
        integrated_inequality_check(&g.ops, &[&w], &g.psi, &base(&g), &g.regions, 0.0),
        Err(mhdlab_core::MhdError::Precondition(_))
    ));
}

#[test]
fn mollified_fields_vanish_outside_g() {
    let g = default_geo();
    let gm = g.regions.g_mask();
    for w in random_test_fields(&g.ops, &g.regions, 10, 3) {
        for k in 0..g.ops.n() {
            if !gm[k] {
                assert_eq!(w[k], 0.0);
            }
        }
    }
}

#[test]
fn integrated_inequality_sweep() {
    let g = default_geo();
    let diam = g.regions.diameter_g(&g.ops.grid);
    let taus = tau_grid(diam);
    let lib = gaussian_library(&g.ops, &g.regions);
    assert!(!lib.is_empty());
    let c2 = calibrate_c2(&g.ops, &lib, &g.psi, &base(&g), &g.regions, &taus).unwrap();
    let fields = random_test_fields(&g.ops, &g.regions, 100, 7);
    let sweep = sweep_test_fields(&g.ops, &fields, &g.psi, &base(&g), &g.regions, &taus, c2).unwrap();
    let tau0 = sweep.tau0.expect("some tau passes for every field");
    for row in sweep.rows.iter().filter(|r| r.tau >= tau0) {
        assert_eq!(row.passed, row.total);
    }
    assert!((sweep.zero_order_slope - 3.0).abs() <= 0.2, "slope {}", sweep.zero_order_slope);
    // the library itself passes at every τ once calibrated
    for w in &lib {
        for &t in &taus {
            assert!(integrated_inequality_check(&g.ops, &[w], &g.psi, &base(&g).with_tau(t), &g.regions, c2).unwrap().pass);
        }
    }
}

#[test]
fn empty_tau_list_is_config_error() {
    let g = default_geo();
    let fields = random_test_fields(&g.ops, &g.regions, 2, 1);
    assert!(sweep_test_fields(&g.ops, &fields, &g.psi, &base(&g), &g.regions, &[], 0.0).is_err());
}

#[test]
fn chi_system_residual_of_eigen_solution() {
    let g = geo(32, 0.1 * 2.0 * PI, Some(BandWidths { omega1: 0.4, omega_star: 2.2 }));
    let projector = Projector::new(&g.ops);
    let spec = EquilibriumSpec::Shear { amplitude: 1.0, wavenumber: 1.0, magnetic: 0.5 };
    let eq = make_equilibrium(&g.ops, &projector, &spec, 0.5, 0.7).unwrap();
    let space = StateSpace::new(&g.ops, &projector).unwrap();
    let sigma = 0.2;
    let op = assemble_generator(&g.ops, &projector, &eq, GeneratorOptions { sigma, ..Default::default() }).unwrap();
    let rep = compute_spectrum(&space, &op, &eq, 2, Strategy::ShiftInvert).unwrap();
    let poisson = PoissonSolver::new(&g.ops);
    let pair = &rep.pairs[0];
    let lambda = C64::new(sigma, 0.0) - pair.lambda;
    let res = eigen_residual(&g.ops, &projector, &poisson, &eq, lambda, &pair.vector).unwrap();
    let p = ScalarField::new(res.pressure.values.clone());
    let r = assemble_chi_system_residual(&g.ops, &pair.vector, &p, &g.chi, &eq, lambda).unwrap();
    assert!(r.max_norm <= 1e-6 * r.scale, "{} vs {}", r.max_norm, r.scale);
    let one = CutoffField::constant(g.ops.n(), 1.0);
    let r1 = assemble_chi_system_residual(&g.ops, &pair.vector, &p, &one, &eq, lambda).unwrap();
    assert!(r1.max_norm <= 1e-6 * r1.scale);
    let zero_s = StateVector::<C64>::zeros(g.ops.n());
    let zero_p = ScalarField::<C64>::zeros(g.ops.n());
    assert_eq!(assemble_chi_system_residual(&g.ops, &zero_s, &zero_p, &g.chi, &eq, lambda).unwrap().max_norm, 0.0);
}

#[test]
fn final_estimate_trivial_and_vanishing_state() {
    let g = default_geo();
    let diam = g.regions.diameter_g(&g.ops.grid);
    let k = EstimateConstants::default();
    let zs = StateVector::<f64>::zeros(g.ops.n());
    let zp = ScalarField::<f64>::zeros(g.ops.n());
    let r = final_estimate_eval(&g.ops, &zs, &zp, &g.chi, &g.psi, &base(&g), &g.regions, &k).unwrap();
    assert_eq!((r.lhs, r.rhs), (0.0, 0.0));
    assert!(r.pass);
    let (s, p) = omega_vanishing(&g, 11);
    let rows: Vec<FinalEstimate> =
        [5.0, 10.0, 20.0].iter().map(|m| final_estimate_eval(&g.ops, &s, &p, &g.chi, &g.psi, &base(&g).with_tau(m / diam), &g.regions, &k).unwrap()).collect();
    assert!(rows.last().unwrap().pass, "{:?}", rows.last());
    assert!(rows.iter().all(|r| r.lhs.is_finite() && r.rhs.is_finite()));
}

#[test]
fn tau_sweep_decays() {
    let g = default_geo();
    let diam = g.regions.diameter_g(&g.ops.grid);
    let taus: Vec<f64> = [1.0, 2.0, 4.0, 8.0, 16.0].iter().map(|m| m / diam).collect();
    let k = EstimateConstants::default();
    let (s, p) = omega_vanishing(&g, 5);
    let sw = tau_sweep_vanishing(&g.ops, &s, &p, &g.regions, &g.psi, &taus, &k).unwrap();
    assert!(sw.monotone);
    assert!(sw.state_exponents.iter().all(|&e| e >= 3.0));
    assert!(sw.pressure_exponents.iter().all(|&e| e >= 2.0));
    assert!(sw.c1 > 0.0 && sw.c2 > 0.0);

    let zs = StateVector::<f64>::zeros(g.ops.n());
    let zp = ScalarField::<f64>::zeros(g.ops.n());
    let z = tau_sweep_vanishing(&g.ops, &zs, &zp, &g.regions, &g.psi, &taus, &k).unwrap();
    assert!(z.rows.iter().all(|r| r.bound_state == 0.0 && r.bound_pressure == 0.0));

    let full = StateVector::new(VectorField2::new(vec![1.0; g.ops.n()], vec![0.0; g.ops.n()]), VectorField2::zeros(g.ops.n())).unwrap();
    assert!(tau_sweep_vanishing(&g.ops, &full, &zp, &g.regions, &g.psi, &taus, &k).is_err());
    assert!(tau_sweep_vanishing(&g.ops, &s, &p, &g.regions, &g.psi, &[], &k).is_err());
}
