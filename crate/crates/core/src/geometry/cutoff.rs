use serde::{Deserialize, Serialize};

use super::grid::Grid;
use super::regions::RegionSet;
use crate::error::{MhdError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// `1 - (10u^3 - 15u^4 + 6u^5)`, C² with vanishing first and second derivatives at both ends.
    #[default]
    Quintic,
}

impl Profile {
    pub fn eval(self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        match self {
            Profile::Quintic => 1.0 - u * u * u * (10.0 - 15.0 * u + 6.0 * u * u),
        }
    }
}

/// Cutoff construction choices. `layer_cells` is the width of the χ ≡ 1 layer
/// of Ω* bordering Ω₁ and of the χ ≡ 0 layer bordering Ω₀.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffSpec {
    pub profile: Profile,
    pub layer_cells: usize,
}

impl CutoffSpec {
    /// Layers at least as wide as the composite stencil reach (two first
    /// derivatives) so commutators vanish exactly outside Ω*.
    pub fn for_reach(first_derivative_reach: usize) -> Self {
        Self { profile: Profile::Quintic, layer_cells: (2 * first_derivative_reach).max(3) }
    }
}

#[derive(Debug, Clone)]
pub struct CutoffField {
    pub values: Vec<f64>,
    /// Layer-coordinate interval `[s0, s1]` of the transition.
    pub transition: (f64, f64),
}

impl CutoffField {
    pub fn constant(n: usize, c: f64) -> Self {
        Self { values: vec![c; n], transition: (0.0, 0.0) }
    }
}

pub fn build_cutoff(grid: &Grid, regions: &RegionSet, spec: CutoffSpec) -> Result<CutoffField> {
    let h = grid.h_max();
    let lay = &regions.layering;
    let s0 = lay.w1 + spec.layer_cells as f64 * h;
    let s1 = lay.w1 + lay.w_star - spec.layer_cells as f64 * h;
    if s1 - s0 < 3.0 * h {
        return Err(MhdError::Resolution(format!(
            "cutoff transition spans {:.2} cells (< 3); widen Omega* or refine the grid",
            (s1 - s0) / h
        )));
    }
    let values = regions
        .s
        .iter()
        .map(|&s| {
            if s <= s0 {
                1.0
            } else if s >= s1 {
                0.0
            } else {
                spec.profile.eval((s - s0) / (s1 - s0))
            }
        })
        .collect();
    Ok(CutoffField { values, transition: (s0, s1) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::regions::{build_nested_regions, BandWidths, GeometryCase, OmegaSpec, Region};
    use std::f64::consts::PI;

    fn setup(n: usize) -> (Grid, RegionSet) {
        let g = Grid::periodic_box(2.0 * PI, n).unwrap();
        let r = build_nested_regions(
            &g,
            &OmegaSpec::Disc { radius: 0.1 * g.lx, center: None },
            GeometryCase::InteriorPatch,
            BandWidths { omega1: 0.3, omega_star: 1.6 },
        )
        .unwrap();
        (g, r)
    }

    #[test]
    fn values_on_regions() {
        let (g, r) = setup(64);
        let chi = build_cutoff(&g, &r, CutoffSpec::for_reach(2)).unwrap();
        for &k in r.omega.iter().chain(&r.omega1) {
            assert_eq!(chi.values[k], 1.0);
        }
        for &k in &r.omega0 {
            assert_eq!(chi.values[k], 0.0);
        }
        assert!(chi.values.iter().all(|&c| (0.0..=1.0).contains(&c)));
        let _ = Region::Omega;
    }

    #[test]
    fn midpoint_is_half() {
        assert!((Profile::Quintic.eval(0.5) - 0.5).abs() < 1e-15);
        assert_eq!(Profile::Quintic.eval(0.0), 1.0);
        assert_eq!(Profile::Quintic.eval(1.0), 0.0);
    }

    #[test]
    fn monotone_along_transition() {
        let (g, r) = setup(64);
        let chi = build_cutoff(&g, &r, CutoffSpec::for_reach(2)).unwrap();
        let mut pairs: Vec<(f64, f64)> = r.s.iter().copied().zip(chi.values.iter().copied()).collect();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        for w in pairs.windows(2) {
            assert!(w[1].1 <= w[0].1 + 1e-15);
        }
    }

    #[test]
    fn thin_band_is_resolution_error() {
        let (g, r) = setup(16);
        assert!(matches!(build_cutoff(&g, &r, CutoffSpec::for_reach(2)), Err(MhdError::Resolution(_))));
    }
}
