use mhdlab_core::carleman::{
    calibrate_c2, coefficients, gaussian_library, random_test_fields, sweep_test_fields, CarlemanParams, FieldSweepRow,
};
use mhdlab_core::fields::{DiffOps, Projector};
use mhdlab_core::geometry::{build_nested_regions, build_weight, BandWidths, Grid, RegionSet, WeightField};
use mhdlab_core::mhd_operators::{assemble_adjoint, assemble_generator, make_equilibrium, Equilibrium, GeneratorOptions, LinearOperator};
use mhdlab_core::spectral::{
    adjoint_spectrum, compute_spectrum, kalman_rank, select_actuators, ucp_gram_test, GramMatrix, SpectrumReport, StateSpace, GRAM_THRESHOLD,
};
use mhdlab_core::stabilize::{
    control_fields, input_map, measure_decay, random_initial_state, simulate_closed_loop, synthesize_feedback, UnstableProjection,
};
use mhdlab_core::{MhdError, Result};
use serde::Serialize;

use crate::config::RunConfig;
use crate::report::Table;

pub struct Context {
    pub cfg: RunConfig,
    pub ops: DiffOps,
    pub projector: Projector,
    pub eq: Equilibrium,
    pub space: StateSpace,
    pub regions: RegionSet,
}

impl Context {
    /// Validates every block and builds the grid, operators and regions.
    pub fn new(cfg: RunConfig) -> Result<Self> {
        cfg.validate()?;
        let grid = Grid::new(&cfg.geometry.domain)?;
        let ops = match cfg.geometry.order {
            Some(o) => DiffOps::new(&grid, o)?,
            None => DiffOps::default_for(&grid)?,
        };
        let projector = Projector::new(&ops);
        let eq = make_equilibrium(&ops, &projector, &cfg.equilibrium, cfg.physics.nu, cfg.physics.eta)?;
        let omega = &cfg.geometry.omega;
        let bands = cfg.geometry.bands.unwrap_or_else(|| BandWidths::default_for(&ops.grid));
        let regions = build_nested_regions(&ops.grid, omega, omega.natural_case(), bands)?;
        let space = StateSpace::new(&ops, &projector)?;
        Ok(Self { cfg, ops, projector, eq, space, regions })
    }

    fn opts(&self) -> GeneratorOptions {
        GeneratorOptions { sigma: self.cfg.physics.sigma, ..Default::default() }
    }

    fn generator(&self) -> Result<LinearOperator> {
        assemble_generator(&self.ops, &self.projector, &self.eq, self.opts())
    }

    fn spectra(&self) -> Result<(LinearOperator, SpectrumReport, SpectrumReport)> {
        let op = self.generator()?;
        let adj = assemble_adjoint(&self.ops, &self.projector, &self.eq, self.opts())?;
        let sp = &self.cfg.spectral;
        let fwd = compute_spectrum(&self.space, &op, &self.eq, sp.count, sp.strategy)?;
        let bwd = adjoint_spectrum(&self.space, &adj, &self.eq, sp.count, sp.strategy)?;
        Ok((op, fwd, bwd))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumSummary {
    pub n_unstable: usize,
    pub m_distinct: usize,
    pub multiplicities: Vec<usize>,
    pub k_max: usize,
    pub max_residual: f64,
    pub first_stable: Option<[f64; 2]>,
}

fn summarize(rep: &SpectrumReport) -> SpectrumSummary {
    SpectrumSummary {
        n_unstable: rep.n_unstable,
        m_distinct: rep.m_distinct,
        multiplicities: rep.unstable_clusters().map(|c| c.multiplicity).collect(),
        k_max: rep.k_max,
        max_residual: rep.max_residual(),
        first_stable: rep.first_stable().map(|z| [z.re, z.im]),
    }
}

pub fn run_spectrum(ctx: &Context) -> Result<(SpectrumSummary, Table)> {
    let op = ctx.generator()?;
    let rep = compute_spectrum(&ctx.space, &op, &ctx.eq, ctx.cfg.spectral.count, ctx.cfg.spectral.strategy)?;
    let mut t = Table::new(&["index", "re_mu", "im_mu", "re_lambda", "im_lambda", "cluster", "residual"]);
    let sigma = ctx.cfg.physics.sigma;
    for (i, p) in rep.pairs.iter().enumerate() {
        t.row(vec![i.to_string(), Table::num(p.lambda.re), Table::num(p.lambda.im), Table::num(sigma - p.lambda.re), Table::num(-p.lambda.im), p.cluster.to_string(), Table::num(p.residual)]);
    }
    Ok((summarize(&rep), t))
}

#[derive(Debug, Clone, Serialize)]
pub struct ClusterUcp {
    pub cluster: usize,
    pub lambda: [f64; 2],
    pub multiplicity: usize,
    pub sigma_min: f64,
    pub gram_passed: bool,
    pub kalman_rank: Option<usize>,
    pub kalman_holds: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct UcpSummary {
    pub omega_nodes: usize,
    pub clusters: Vec<ClusterUcp>,
    pub actuators: usize,
    /// True when there is nothing to check.
    pub vacuous: bool,
    pub passed: bool,
}

pub fn run_ucp(ctx: &Context) -> Result<(UcpSummary, Table)> {
    let (_, _, bwd) = ctx.spectra()?;
    let grid = &ctx.ops.grid;
    let omega = &ctx.regions.omega;
    let views = bwd.unstable_views();
    let grams: Vec<GramMatrix> = views.iter().map(|v| ucp_gram_test(grid, v.lambda, &v.vectors, omega, GRAM_THRESHOLD)).collect::<Result<_>>()?;
    let mut clusters: Vec<ClusterUcp> = grams
        .iter()
        .zip(&views)
        .enumerate()
        .map(|(i, (g, v))| ClusterUcp {
            cluster: i,
            lambda: g.lambda,
            multiplicity: v.vectors.len(),
            sigma_min: g.sigma_min,
            gram_passed: g.passed,
            kalman_rank: None,
            kalman_holds: None,
        })
        .collect();
    let mut actuators = 0;
    if !views.is_empty() && clusters.iter().all(|c| c.gram_passed) {
        let u = select_actuators(grid, &views, &grams, omega, bwd.k_max)?;
        actuators = u.len();
        for (c, k) in clusters.iter_mut().zip(kalman_rank(grid, &u, &views, omega)?) {
            c.kalman_rank = Some(k.rank);
            c.kalman_holds = Some(k.holds);
        }
    }
    let passed = clusters.iter().all(|c| c.gram_passed && c.kalman_holds.unwrap_or(false));
    let mut t = Table::new(&["cluster", "re_mu", "im_mu", "multiplicity", "sigma_min", "gram", "kalman_rank", "kalman"]);
    for c in &clusters {
        t.row(vec![
            c.cluster.to_string(),
            Table::num(c.lambda[0]),
            Table::num(c.lambda[1]),
            c.multiplicity.to_string(),
            Table::num(c.sigma_min),
            pass_word(c.gram_passed).into(),
            c.kalman_rank.map_or("-".into(), |r| r.to_string()),
            c.kalman_holds.map_or("-", pass_word).into(),
        ]);
    }
    Ok((UcpSummary { omega_nodes: omega.len(), vacuous: clusters.is_empty(), passed, clusters, actuators }, t))
}

fn pass_word(b: bool) -> &'static str {
    if b {
        "PASS"
    } else {
        "FAIL"
    }
}

/// First failing cluster as an error, for the exit status.
pub fn ucp_failure(s: &UcpSummary) -> Option<MhdError> {
    s.clusters.iter().find(|c| !c.gram_passed || c.kalman_holds == Some(false)).map(|c| {
        if !c.gram_passed {
            MhdError::Precondition(format!("cluster {} fails the omega-Gram test: sigma_min {:.3e}", c.cluster, c.sigma_min))
        } else {
            MhdError::Uncontrollable(format!("cluster {} has Kalman rank {} < {}", c.cluster, c.kalman_rank.unwrap_or(0), c.multiplicity))
        }
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CarlemanSummary {
    pub diam_g: f64,
    pub rho: f64,
    pub k: f64,
    pub c2: f64,
    pub tau0: Option<f64>,
    pub zero_order_slope: f64,
    pub fields: usize,
    pub rows: Vec<FieldSweepRow>,
}

fn weight(ctx: &Context) -> Result<WeightField> {
    build_weight(&ctx.ops.grid, &ctx.regions)
}

pub fn run_carleman(ctx: &Context, seed: u64) -> Result<(CarlemanSummary, Table)> {
    let c = &ctx.cfg.carleman;
    let psi = weight(ctx)?;
    let diam = ctx.regions.diameter_g(&ctx.ops.grid);
    let taus: Vec<f64> = c.tau_list.iter().map(|m| m / diam).collect();
    let base = CarlemanParams::new(taus[0], c.delta0, c.epsilon, psi.rho, psi.k)?;
    let lib = gaussian_library(&ctx.ops, &ctx.regions);
    let c2 = calibrate_c2(&ctx.ops, &lib, &psi, &base, &ctx.regions, &taus)?;
    let fields = random_test_fields(&ctx.ops, &ctx.regions, c.fields, seed);
    let sweep = sweep_test_fields(&ctx.ops, &fields, &psi, &base, &ctx.regions, &taus, c2)?;
    let mut t = Table::new(&["tau", "tau_diam", "c_grad", "c_zero", "c_rhs", "passed", "total", "min_margin_rel", "zero_side_normalized"]);
    for (row, m) in sweep.rows.iter().zip(&c.tau_list) {
        let co = coefficients(&base.with_tau(row.tau))?;
        t.row(vec![
            Table::num(row.tau),
            Table::num(*m),
            Table::num(co.c_grad),
            Table::num(co.c_zero),
            Table::num(co.c_rhs),
            row.passed.to_string(),
            row.total.to_string(),
            Table::num(row.min_margin_rel),
            Table::num(row.zero_side_normalized),
        ]);
    }
    let summary = CarlemanSummary {
        diam_g: diam,
        rho: psi.rho,
        k: psi.k,
        c2,
        tau0: sweep.tau0,
        zero_order_slope: sweep.zero_order_slope,
        fields: fields.len(),
        rows: sweep.rows,
    };
    Ok((summary, t))
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilizeSummary {
    pub n_unstable: usize,
    pub actuators: usize,
    pub gain_on: bool,
    pub gamma: f64,
    pub targets: Vec<f64>,
    pub closed_loop: Vec<[f64; 2]>,
    pub max_closed_loop_re: Option<f64>,
    pub pairing_cond: f64,
    pub max_leakage: f64,
    pub window: [f64; 2],
    /// Energy decay rate, `−d/dt log ‖y‖²`.
    pub energy_rate: f64,
    pub energy_rate_half_width: f64,
    /// Amplitude decay rate, half the energy rate.
    pub decay_rate: f64,
    pub expected_rate: f64,
    pub within_tolerance: bool,
    pub energy_ratio: f64,
}

pub fn run_stabilize(ctx: &Context, seed: u64) -> Result<(StabilizeSummary, Table, Table)> {
    let st = &ctx.cfg.stabilize;
    let (op, fwd, bwd) = ctx.spectra()?;
    let proj = UnstableProjection::new(&ctx.space, &op, &fwd, &bwd)?;
    let grid = &ctx.ops.grid;
    let omega = &ctx.regions.omega;
    let views = bwd.unstable_views();
    let grams: Vec<GramMatrix> = views.iter().map(|v| ucp_gram_test(grid, v.lambda, &v.vectors, omega, GRAM_THRESHOLD)).collect::<Result<_>>()?;
    let u = if views.is_empty() { Vec::new() } else { select_actuators(grid, &views, &grams, omega, bwd.k_max)? };
    let controls = control_fields(&ctx.space, &ctx.projector, &u, &ctx.regions.omega_indicator())?;
    let b = input_map(&proj, &controls)?;
    let gain = synthesize_feedback(&proj.a_u, &b, st.gamma, seed)?;
    let y0 = random_initial_state(&ctx.space, seed)?;
    let trace = simulate_closed_loop(&ctx.space, &op, &ctx.eq, &proj, st.gain.then_some(&gain), &controls, &y0, st.t_final, st.dt)?;
    let window = st.window.unwrap_or([0.5 * st.t_final, st.t_final]);
    let fit = measure_decay(&trace.times, &trace.energy, (window[0], window[1]))?;
    let next = fwd.first_stable().map_or(f64::INFINITY, |z| z.re.abs());
    let expected = if st.gain { st.gamma.min(next) } else { -fwd.pairs.first().map_or(0.0, |p| p.lambda.re) };
    let decay_rate = 0.5 * fit.rate;
    let mut gt = Table::new(&["actuator", "coordinate", "gain"]);
    for r in 0..gain.f.nrows() {
        for c in 0..gain.f.ncols() {
            gt.row(vec![r.to_string(), c.to_string(), Table::num(gain.f[(r, c)])]);
        }
    }
    let mut tt = Table::new(&["t", "energy", "energy_unstable"]);
    for i in 0..trace.times.len() {
        tt.row(vec![Table::num(trace.times[i]), Table::num(trace.energy[i]), Table::num(trace.energy_unstable[i])]);
    }
    let summary = StabilizeSummary {
        n_unstable: proj.dim(),
        actuators: controls.len(),
        gain_on: st.gain,
        gamma: st.gamma,
        targets: gain.targets.clone(),
        closed_loop: gain.closed_loop.iter().map(|z| [z.re, z.im]).collect(),
        max_closed_loop_re: (!gain.closed_loop.is_empty()).then(|| gain.max_real_part()),
        pairing_cond: proj.pairing_cond,
        max_leakage: controls.iter().map(|c| c.leakage).fold(0.0, f64::max),
        window,
        energy_rate: fit.rate,
        energy_rate_half_width: fit.half_width,
        decay_rate,
        expected_rate: expected,
        within_tolerance: (decay_rate - expected).abs() <= 0.15 * expected.abs(),
        energy_ratio: trace.energy.last().copied().unwrap_or(0.0) / trace.energy[0],
    };
    Ok((summary, gt, tt))
}
