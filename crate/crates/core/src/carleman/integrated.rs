use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{coefficients, CarlemanParams};
use crate::error::{check_len, MhdError, Result};
use crate::fields::DiffOps;
use crate::geometry::{RegionSet, WeightField};
use crate::linalg::spmv;

/// Relative tolerance on values of a test field outside G.
pub const CAUCHY_TOL: f64 = 1e-10;
/// Relative slack on the margin.
pub const MARGIN_TOL: f64 = 1e-8;

/// Integrated inequality with the `c₂τ²` correction, all weights normalized
/// by `e^{-2τ max_G ψ}` (common to both sides).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EstimateReport {
    pub tau: f64,
    /// `c_grad ∫ e|∇w|²`
    pub lhs_grad: f64,
    /// `c_zero ∫ e|w|²`
    pub lhs_zero: f64,
    /// `c₂τ² ∫ e|w|²`, subtracted from the left side.
    pub correction: f64,
    /// `c_rhs ∫ e|Δw|²`
    pub rhs_main: f64,
    /// `∫ e|w|²`
    pub weighted_l2: f64,
    pub margin: f64,
    pub c2: f64,
    pub tau_too_small: bool,
    /// Largest `|∇w|` on nodes outside G (diagnostic).
    pub grad_trace: f64,
    pub pass: bool,
}

fn g_bounds(regions: &RegionSet) -> f64 {
    regions.layering.w1 + regions.layering.w_star
}

/// `64 (u(1−u))³` in the normalized layer coordinate of G: vanishes with two
/// derivatives on ∂G, zero outside.
pub fn mollifier(regions: &RegionSet) -> Vec<f64> {
    let sg = g_bounds(regions);
    regions
        .s
        .iter()
        .map(|&s| {
            let u = s / sg;
            if u <= 0.0 || u >= 1.0 {
                0.0
            } else {
                64.0 * (u * (1.0 - u)).powi(3)
            }
        })
        .collect()
}

/// Shifted weight `e^{2τ(ψ − max_G ψ)}`.
fn weight(psi: &WeightField, g: &[usize], tau: f64) -> Vec<f64> {
    let top = psi.max_over(g);
    psi.psi.iter().map(|&p| (2.0 * tau * (p - top)).exp()).collect()
}

/// Sum of the weighted quadratic integrals over the components of `w`.
pub(crate) fn integrals(ops: &DiffOps, comps: &[&[f64]], g: &[usize], e: &[f64]) -> (f64, f64, f64) {
    let grid = &ops.grid;
    let (mut gi, mut zi, mut li) = (0.0, 0.0, 0.0);
    for c in comps {
        let dx = spmv(&ops.dx, c);
        let dy = spmv(&ops.dy, c);
        let lap = spmv(&ops.lap, c);
        for &k in g {
            let m = grid.weight(k) * e[k];
            gi += m * (dx[k] * dx[k] + dy[k] * dy[k]);
            zi += m * c[k] * c[k];
            li += m * lap[k] * lap[k];
        }
    }
    (gi, zi, li)
}

/// Checks `c_grad∫e|∇w|² + (c_zero − c₂τ²)∫e|w|² ≤ c_rhs∫e|Δw|²` over G for a
/// field whose Cauchy data vanish on ∂G. `comps` are the components of `w`.
pub fn integrated_inequality_check(
    ops: &DiffOps,
    comps: &[&[f64]],
    psi: &WeightField,
    p: &CarlemanParams,
    regions: &RegionSet,
    c2: f64,
) -> Result<EstimateReport> {
    let n = ops.n();
    for c in comps {
        check_len(n, c.len())?;
    }
    check_len(n, psi.psi.len())?;
    let coef = coefficients(p)?;
    let g = regions.g_nodes();
    if g.is_empty() {
        return Err(MhdError::Empty("G has no nodes".into()));
    }
    let gm = regions.g_mask();
    let scale = comps.iter().flat_map(|c| c.iter()).fold(0.0f64, |a, v| a.max(v.abs()));
    let mut outside: f64 = 0.0;
    let mut grad_trace: f64 = 0.0;
    for c in comps {
        let dx = spmv(&ops.dx, c);
        let dy = spmv(&ops.dy, c);
        for k in (0..n).filter(|&k| !gm[k]) {
            outside = outside.max(c[k].abs());
            grad_trace = grad_trace.max(dx[k].hypot(dy[k]));
        }
    }
    if outside > CAUCHY_TOL * scale {
        return Err(MhdError::Precondition(format!("test field does not vanish outside G: {outside:.3e} (scale {scale:.3e})")));
    }
    let e = weight(psi, &g, p.tau);
    let (gi, zi, li) = integrals(ops, comps, &g, &e);
    let lhs_grad = coef.c_grad * gi;
    let lhs_zero = coef.c_zero * zi;
    let correction = c2 * p.tau * p.tau * zi;
    let rhs_main = coef.c_rhs * li;
    let margin = rhs_main - (lhs_grad + lhs_zero - correction);
    Ok(EstimateReport {
        tau: p.tau,
        lhs_grad,
        lhs_zero,
        correction,
        rhs_main,
        weighted_l2: zi,
        margin,
        c2,
        tau_too_small: coef.tau_too_small,
        grad_trace,
        pass: margin >= -MARGIN_TOL * rhs_main,
    })
}

/// `{1, 2, 4, 8, 16, 32}/diam(G)`.
pub fn tau_grid(diam: f64) -> Vec<f64> {
    [1.0, 2.0, 4.0, 8.0, 16.0, 32.0].iter().map(|m| m / diam).collect()
}

fn g_geometry(ops: &DiffOps, regions: &RegionSet) -> Vec<(f64, f64)> {
    regions.g_nodes().iter().map(|&k| ops.grid.coords(k)).collect()
}

/// Gaussians of three widths centred on G nodes in the middle layer of G,
/// times the mollifier.
pub fn gaussian_library(ops: &DiffOps, regions: &RegionSet) -> Vec<Vec<f64>> {
    let m = mollifier(regions);
    let sg = g_bounds(regions);
    let grid = &ops.grid;
    let mid: Vec<usize> = regions.g_nodes().into_iter().filter(|&k| (regions.s[k] - 0.5 * sg).abs() <= grid.h_max()).collect();
    let picks: Vec<usize> = (0..4).filter_map(|i| mid.get(i * mid.len() / 4).copied()).collect();
    let mut out = Vec::new();
    for &c in &picks {
        let (x0, y0) = grid.coords(c);
        for width in [0.15, 0.3, 0.6] {
            let s = width * sg;
            let v: Vec<f64> = (0..grid.len())
                .map(|k| {
                    let (x, y) = grid.coords(k);
                    let r2 = (x - x0).powi(2) + (y - y0).powi(2);
                    (-r2 / (2.0 * s * s)).exp() * m[k]
                })
                .collect();
            out.push(v);
        }
    }
    out
}

/// Seeded random smooth bumps `(1 − r²)³ cos(k·x + θ)` with random centre in
/// G, times the mollifier.
pub fn random_test_fields(ops: &DiffOps, regions: &RegionSet, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = mollifier(regions);
    let sg = g_bounds(regions);
    let pts = g_geometry(ops, regions);
    let grid = &ops.grid;
    (0..count)
        .map(|_| {
            let (x0, y0) = pts[rng.gen_range(0..pts.len())];
            let r = rng.gen_range(0.3..1.5) * sg;
            let (kx, ky) = (rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            let th = rng.gen_range(0.0..std::f64::consts::TAU);
            (0..grid.len())
                .map(|k| {
                    let (x, y) = grid.coords(k);
                    let q = ((x - x0).powi(2) + (y - y0).powi(2)) / (r * r);
                    if q >= 1.0 {
                        0.0
                    } else {
                        (1.0 - q).powi(3) * (kx * x + ky * y + th).cos() * m[k]
                    }
                })
                .collect()
        })
        .collect()
}

/// Smallest `c₂ ≥ 0` making the inequality hold for every library field at
/// every τ of the grid.
pub fn calibrate_c2(ops: &DiffOps, library: &[Vec<f64>], psi: &WeightField, base: &CarlemanParams, regions: &RegionSet, taus: &[f64]) -> Result<f64> {
    let mut c2: f64 = 0.0;
    for w in library {
        for &tau in taus {
            let r = integrated_inequality_check(ops, &[w], psi, &base.with_tau(tau), regions, 0.0)?;
            if r.weighted_l2 > 0.0 && r.margin < 0.0 {
                c2 = c2.max(-r.margin / (tau * tau * r.weighted_l2));
            }
        }
    }
    Ok(c2 * (1.0 + 1e-9))
}

#[derive(Debug, Clone, Serialize)]
pub struct FieldSweepRow {
    pub tau: f64,
    pub passed: usize,
    pub total: usize,
    pub min_margin_rel: f64,
    pub lhs_grad: f64,
    pub lhs_zero: f64,
    pub rhs: f64,
    /// `lhs_zero / ∫e|w|²` for the first field.
    pub zero_side_normalized: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FieldSweep {
    pub c2: f64,
    pub rows: Vec<FieldSweepRow>,
    /// Smallest grid τ from which every field passes at every larger τ.
    pub tau0: Option<f64>,
    /// Log–log slope of the normalized zero-order side against τ.
    pub zero_order_slope: f64,
}

/// Runs the integrated check for every field at every τ.
pub fn sweep_test_fields(ops: &DiffOps, fields: &[Vec<f64>], psi: &WeightField, base: &CarlemanParams, regions: &RegionSet, taus: &[f64], c2: f64) -> Result<FieldSweep> {
    if taus.is_empty() {
        return Err(MhdError::Config("empty tau list".into()));
    }
    let mut rows = Vec::new();
    for &tau in taus {
        let mut row = FieldSweepRow { tau, passed: 0, total: fields.len(), min_margin_rel: f64::INFINITY, lhs_grad: 0.0, lhs_zero: 0.0, rhs: 0.0, zero_side_normalized: 0.0 };
        for (i, w) in fields.iter().enumerate() {
            let r = integrated_inequality_check(ops, &[w], psi, &base.with_tau(tau), regions, c2)?;
            if r.pass {
                row.passed += 1;
            }
            let rel = if r.rhs_main > 0.0 { r.margin / r.rhs_main } else { 0.0 };
            row.min_margin_rel = row.min_margin_rel.min(rel);
            if i == 0 {
                row.lhs_grad = r.lhs_grad;
                row.lhs_zero = r.lhs_zero;
                row.rhs = r.rhs_main;
                row.zero_side_normalized = if r.weighted_l2 > 0.0 { r.lhs_zero / r.weighted_l2 } else { 0.0 };
            }
        }
        rows.push(row);
    }
    let mut tau0 = None;
    for row in rows.iter().rev() {
        if row.passed == row.total {
            tau0 = Some(row.tau);
        } else {
            break;
        }
    }
    let pts: Vec<(f64, f64)> = rows.iter().filter(|r| r.zero_side_normalized > 0.0).map(|r| (r.tau.ln(), r.zero_side_normalized.ln())).collect();
    let zero_order_slope = slope(&pts);
    Ok(FieldSweep { c2, rows, tau0, zero_order_slope })
}

pub(crate) fn slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return f64::NAN;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}
