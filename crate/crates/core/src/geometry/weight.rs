use super::grid::Grid;
use super::regions::{GeometryCase, Region, RegionSet};
use crate::error::{MhdError, Result};

/// Carleman weight ψ with its discrete convexity constants over G.
#[derive(Debug, Clone)]
pub struct WeightField {
    pub psi: Vec<f64>,
    /// Smallest eigenvalue of the discrete Hessian over G.
    pub rho: f64,
    /// Smallest discrete gradient magnitude over G.
    pub k: f64,
    pub anchor: [f64; 2],
    /// Whether ψ ≥ 0 on Ω₁ and ψ ≤ 0 on Ω* ∪ Ω₀.
    pub ordering_holds: bool,
}

impl WeightField {
    pub fn max_over(&self, nodes: &[usize]) -> f64 {
        nodes.iter().map(|&k| self.psi[k]).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// ψ(x) = |x − a|² − t₁², with `a` the layering anchor and `t₁` the distance
/// from `a` to the Ω₁/Ω* interface.
///
/// For collars the anchor sits at the domain centre or beyond the opposite
/// wall and ψ is positive on ω ∪ Ω₁, negative on Ω* ∪ Ω₀. For an interior
/// patch the anchor is the ω centre; a strictly convex ψ cannot be
/// nonnegative on Ω₁ and nonpositive on the band Ω* enclosing it, so the
/// sign ordering is reported as not holding there.
pub fn build_weight(grid: &Grid, regions: &RegionSet) -> Result<WeightField> {
    let lay = regions.layering;
    let a = lay.anchor;
    let t1 = lay.t1();
    let psi_at = |x: f64, y: f64| (x - a[0]).powi(2) + (y - a[1]).powi(2) - t1 * t1;
    let psi = grid.sample(psi_at);

    let (hx, hy) = (grid.hx, grid.hy);
    let mut rho = f64::INFINITY;
    let mut k = f64::INFINITY;
    for idx in regions.g_nodes() {
        let (x, y) = grid.coords(idx);
        let c = psi_at(x, y);
        let fxx = (psi_at(x + hx, y) - 2.0 * c + psi_at(x - hx, y)) / (hx * hx);
        let fyy = (psi_at(x, y + hy) - 2.0 * c + psi_at(x, y - hy)) / (hy * hy);
        let fxy = (psi_at(x + hx, y + hy) - psi_at(x + hx, y - hy) - psi_at(x - hx, y + hy)
            + psi_at(x - hx, y - hy))
            / (4.0 * hx * hy);
        let gx = (psi_at(x + hx, y) - psi_at(x - hx, y)) / (2.0 * hx);
        let gy = (psi_at(x, y + hy) - psi_at(x, y - hy)) / (2.0 * hy);
        let mean = 0.5 * (fxx + fyy);
        let dev = (0.25 * (fxx - fyy).powi(2) + fxy * fxy).sqrt();
        rho = rho.min(mean - dev);
        k = k.min(gx.hypot(gy));
    }
    if !(rho > 0.0) {
        return Err(MhdError::Weight(format!("Hessian lower bound rho = {rho:.3e} is not positive on G")));
    }
    if !(k > 0.0) {
        return Err(MhdError::Weight(format!("gradient lower bound k = {k:.3e} is not positive on G")));
    }
    let ordering_holds = regions.labels.iter().zip(&psi).all(|(&l, &p)| match l {
        Region::Omega1 => p >= 0.0,
        Region::OmegaStar | Region::Omega0 => p <= 0.0,
        Region::Omega => true,
    });
    debug_assert!(regions.case == GeometryCase::InteriorPatch || ordering_holds);
    Ok(WeightField { psi, rho, k, anchor: a, ordering_holds })
}
