use serde::{Deserialize, Serialize};

use super::grid::Grid;
use crate::error::{MhdError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeometryCase {
    InteriorPatch,
    FullCollar,
    PartialCollar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

/// Shape and size of the control region ω.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum OmegaSpec {
    /// Disc; `center` defaults to the domain centre.
    Disc { radius: f64, #[serde(default)] center: Option<[f64; 2]> },
    /// Band along the whole of Γ, at least `width` thick everywhere.
    Collar { width: f64 },
    /// Band along one side of Γ.
    PartialCollar { side: Side, width: f64 },
}

impl OmegaSpec {
    pub fn natural_case(&self) -> GeometryCase {
        match self {
            OmegaSpec::Disc { .. } => GeometryCase::InteriorPatch,
            OmegaSpec::Collar { .. } => GeometryCase::FullCollar,
            OmegaSpec::PartialCollar { .. } => GeometryCase::PartialCollar,
        }
    }
}

/// Widths of the two bands nested around ω (lengths, not cells).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandWidths {
    pub omega1: f64,
    pub omega_star: f64,
}

impl BandWidths {
    /// 8% and 22% of the shorter side.
    pub fn default_for(grid: &Grid) -> Self {
        let l = grid.lx.min(grid.ly);
        Self { omega1: 0.08 * l, omega_star: 0.22 * l }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Omega,
    Omega1,
    OmegaStar,
    Omega0,
}

/// Radial layering about an anchor point.
///
/// `t = |x - anchor|`; the layer coordinate `s` is 0 on ∂ω and grows toward Ω₀.
/// Interior patches grow outward (`s = t - t_omega`), collars grow inward
/// (`s = t_omega - t`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Layering {
    pub anchor: [f64; 2],
    pub t_omega: f64,
    pub outward: bool,
    pub w1: f64,
    pub w_star: f64,
}

impl Layering {
    pub fn t(&self, x: f64, y: f64) -> f64 {
        (x - self.anchor[0]).hypot(y - self.anchor[1])
    }

    pub fn s_of_t(&self, t: f64) -> f64 {
        if self.outward {
            t - self.t_omega
        } else {
            self.t_omega - t
        }
    }

    pub fn s(&self, x: f64, y: f64) -> f64 {
        self.s_of_t(self.t(x, y))
    }

    /// Value of `t` on the Ω₁/Ω* interface.
    pub fn t1(&self) -> f64 {
        if self.outward {
            self.t_omega + self.w1
        } else {
            self.t_omega - self.w1
        }
    }

    pub fn classify(&self, s: f64) -> Region {
        if s <= 0.0 {
            Region::Omega
        } else if s <= self.w1 {
            Region::Omega1
        } else if s <= self.w1 + self.w_star {
            Region::OmegaStar
        } else {
            Region::Omega0
        }
    }
}

/// Nested decomposition Ω = ω ∪ Ω₁ ∪ Ω* ∪ Ω₀ on grid nodes.
#[derive(Debug, Clone)]
pub struct RegionSet {
    pub case: GeometryCase,
    pub layering: Layering,
    pub labels: Vec<Region>,
    /// Layer coordinate per node.
    pub s: Vec<f64>,
    pub omega: Vec<usize>,
    pub omega1: Vec<usize>,
    pub omega_star: Vec<usize>,
    pub omega0: Vec<usize>,
    /// Facets of ∂(Ω₁ ∪ Ω*) as (node inside G, neighbouring node outside G).
    pub facets: Vec<(usize, usize)>,
}

impl RegionSet {
    pub fn region(&self, r: Region) -> &[usize] {
        match r {
            Region::Omega => &self.omega,
            Region::Omega1 => &self.omega1,
            Region::OmegaStar => &self.omega_star,
            Region::Omega0 => &self.omega0,
        }
    }

    pub fn mask(&self, r: Region) -> Vec<bool> {
        self.labels.iter().map(|&l| l == r).collect()
    }

    /// Indicator of G = Ω₁ ∪ Ω*.
    pub fn g_mask(&self) -> Vec<bool> {
        self.labels
            .iter()
            .map(|&l| l == Region::Omega1 || l == Region::OmegaStar)
            .collect()
    }

    pub fn g_nodes(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.omega1.iter().chain(&self.omega_star).copied().collect();
        v.sort_unstable();
        v
    }

    /// ω indicator as a 0/1 field, the localization m(x).
    pub fn omega_indicator(&self) -> Vec<f64> {
        self.labels
            .iter()
            .map(|&l| if l == Region::Omega { 1.0 } else { 0.0 })
            .collect()
    }

    /// Largest distance between two G nodes.
    pub fn diameter_g(&self, grid: &Grid) -> f64 {
        let g = self.g_nodes();
        let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for &k in &g {
            let (x, y) = grid.coords(k);
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if g.is_empty() {
            0.0
        } else {
            (x1 - x0).hypot(y1 - y0)
        }
    }
}

/// Four-neighbour adjacency, wrapping periodic directions.
pub fn neighbours(grid: &Grid, k: usize) -> impl Iterator<Item = usize> + '_ {
    let (i, j) = grid.ij(k);
    let px = grid.bc_x == super::grid::BcKind::Periodic;
    let py = grid.bc_y == super::grid::BcKind::Periodic;
    let mut out = [None; 4];
    if i > 0 {
        out[0] = Some(grid.idx(i - 1, j));
    } else if px {
        out[0] = Some(grid.idx(grid.mx - 1, j));
    }
    if i + 1 < grid.mx {
        out[1] = Some(grid.idx(i + 1, j));
    } else if px {
        out[1] = Some(grid.idx(0, j));
    }
    if j > 0 {
        out[2] = Some(grid.idx(i, j - 1));
    } else if py {
        out[2] = Some(grid.idx(i, grid.my - 1));
    }
    if j + 1 < grid.my {
        out[3] = Some(grid.idx(i, j + 1));
    } else if py {
        out[3] = Some(grid.idx(i, 0));
    }
    out.into_iter().flatten()
}

pub fn build_nested_regions(
    grid: &Grid,
    omega: &OmegaSpec,
    case: GeometryCase,
    widths: BandWidths,
) -> Result<RegionSet> {
    if case != omega.natural_case() {
        return Err(MhdError::Config(format!(
            "omega shape {:?} does not describe geometry case {:?}",
            omega, case
        )));
    }
    if !(widths.omega1 > 0.0 && widths.omega_star > 0.0) {
        return Err(MhdError::Config("band widths must be positive".into()));
    }
    let (lx, ly) = (grid.lx, grid.ly);
    let layering = match *omega {
        OmegaSpec::Disc { radius, center } => {
            let c = center.unwrap_or([0.5 * lx, 0.5 * ly]);
            if !(radius > 0.0) {
                return Err(MhdError::Geometry("disc radius must be positive".into()));
            }
            let inside = c[0] - radius > 0.0
                && c[0] + radius < lx
                && c[1] - radius > 0.0
                && c[1] + radius < ly;
            if !inside {
                return Err(MhdError::Geometry(format!(
                    "disc of radius {radius} at ({}, {}) does not lie strictly inside the domain",
                    c[0], c[1]
                )));
            }
            Layering { anchor: c, t_omega: radius, outward: true, w1: widths.omega1, w_star: widths.omega_star }
        }
        OmegaSpec::Collar { width } => {
            let half = 0.5 * lx.min(ly);
            if !(width > 0.0 && width < half) {
                return Err(MhdError::Geometry(format!("collar width {width} out of range")));
            }
            Layering {
                anchor: [0.5 * lx, 0.5 * ly],
                t_omega: half - width,
                outward: false,
                w1: widths.omega1,
                w_star: widths.omega_star,
            }
        }
        OmegaSpec::PartialCollar { side, width } => {
            // anchor one domain length beyond the opposite wall
            let far = lx.max(ly);
            let (anchor, span) = match side {
                Side::Left => ([lx + far, 0.5 * ly], lx),
                Side::Right => ([-far, 0.5 * ly], lx),
                Side::Bottom => ([0.5 * lx, ly + far], ly),
                Side::Top => ([0.5 * lx, -far], ly),
            };
            if !(width > 0.0 && width < span) {
                return Err(MhdError::Geometry(format!("collar width {width} out of range")));
            }
            Layering {
                anchor,
                t_omega: span + far - width,
                outward: false,
                w1: widths.omega1,
                w_star: widths.omega_star,
            }
        }
    };

    let n = grid.len();
    let mut s = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for k in 0..n {
        let (x, y) = grid.coords(k);
        let sk = layering.s(x, y);
        s.push(sk);
        labels.push(layering.classify(sk));
    }
    let pick = |r: Region| -> Vec<usize> { (0..n).filter(|&k| labels[k] == r).collect() };
    let (omega_n, omega1, omega_star, omega0) =
        (pick(Region::Omega), pick(Region::Omega1), pick(Region::OmegaStar), pick(Region::Omega0));
    for (name, set) in [("omega", &omega_n), ("omega1", &omega1), ("omega_star", &omega_star), ("omega0", &omega0)] {
        if set.is_empty() {
            return Err(MhdError::Geometry(format!("region {name} is empty at this size/resolution")));
        }
    }

    let mut facets = Vec::new();
    for k in 0..n {
        let lk = labels[k];
        for nb in neighbours(grid, k) {
            let ln = labels[nb];
            let bad = matches!(
                (lk, ln),
                (Region::Omega, Region::OmegaStar)
                    | (Region::Omega, Region::Omega0)
                    | (Region::Omega1, Region::Omega0)
            );
            if bad {
                return Err(MhdError::Geometry(format!(
                    "{lk:?} node {k} touches {ln:?} node {nb}: a band is thinner than one cell"
                )));
            }
            let in_g = |r: Region| r == Region::Omega1 || r == Region::OmegaStar;
            if in_g(lk) && !in_g(ln) {
                facets.push((k, nb));
            }
        }
    }

    Ok(RegionSet { case, layering, labels, s, omega: omega_n, omega1, omega_star, omega0, facets })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::grid::{BcKind, DomainSpec};
    use std::f64::consts::PI;

    fn box32() -> Grid {
        Grid::periodic_box(2.0 * PI, 32).unwrap()
    }

    #[test]
    fn disc_gives_four_nonempty_regions() {
        let g = box32();
        let spec = OmegaSpec::Disc { radius: 0.15 * g.lx, center: None };
        let r = build_nested_regions(&g, &spec, GeometryCase::InteriorPatch, BandWidths::default_for(&g)).unwrap();
        let total = r.omega.len() + r.omega1.len() + r.omega_star.len() + r.omega0.len();
        assert_eq!(total, g.len());
        assert!(!r.facets.is_empty());
        // every facet separates G from ω or Ω₀
        for &(a, b) in &r.facets {
            assert!(r.g_mask()[a] && !r.g_mask()[b]);
        }
    }

    #[test]
    fn huge_disc_rejected() {
        let g = box32();
        let spec = OmegaSpec::Disc { radius: 0.9 * g.lx, center: None };
        let err = build_nested_regions(&g, &spec, GeometryCase::InteriorPatch, BandWidths::default_for(&g));
        assert!(matches!(err, Err(MhdError::Geometry(_))));
    }

    #[test]
    fn full_collar_is_ordered_inward() {
        let spec = DomainSpec { lx: 2.0 * PI, ly: 2.0 * PI, nx: 48, ny: 48, bc_x: BcKind::Wall, bc_y: BcKind::Wall };
        let g = Grid::new(&spec).unwrap();
        let om = OmegaSpec::Collar { width: 0.1 * g.lx };
        let r = build_nested_regions(&g, &om, GeometryCase::FullCollar, BandWidths::default_for(&g)).unwrap();
        // every boundary node is in ω and the centre is in Ω₀
        for k in g.boundary_nodes() {
            assert_eq!(r.labels[k], Region::Omega);
        }
        let c = g.idx(24, 24);
        assert_eq!(r.labels[c], Region::Omega0);
        // walking from the wall to the centre visits the regions in order
        let order: Vec<Region> = (0..=24).map(|i| r.labels[g.idx(i, 24)]).collect();
        let mut seen = vec![order[0]];
        for l in order {
            if *seen.last().unwrap() != l {
                seen.push(l);
            }
        }
        assert_eq!(seen, vec![Region::Omega, Region::Omega1, Region::OmegaStar, Region::Omega0]);
    }

    #[test]
    fn partial_collar_touches_one_side() {
        let spec = DomainSpec { lx: 2.0, ly: 1.0, nx: 64, ny: 32, bc_x: BcKind::Wall, bc_y: BcKind::Wall };
        let g = Grid::new(&spec).unwrap();
        let om = OmegaSpec::PartialCollar { side: Side::Left, width: 0.2 };
        let r = build_nested_regions(&g, &om, GeometryCase::PartialCollar, BandWidths { omega1: 0.2, omega_star: 0.5 }).unwrap();
        for j in 0..g.my {
            assert_eq!(r.labels[g.idx(0, j)], Region::Omega);
            assert_eq!(r.labels[g.idx(g.nx, j)], Region::Omega0);
        }
    }

    #[test]
    fn mismatched_case_is_config_error() {
        let g = box32();
        let spec = OmegaSpec::Disc { radius: 1.0, center: None };
        let err = build_nested_regions(&g, &spec, GeometryCase::FullCollar, BandWidths::default_for(&g));
        assert!(matches!(err, Err(MhdError::Config(_))));
    }
}
