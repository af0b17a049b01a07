use serde::{Deserialize, Serialize};

use crate::error::{MhdError, Result};

pub const MIN_CELLS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BcKind {
    Periodic,
    Wall,
}

/// Domain block of a run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub lx: f64,
    pub ly: f64,
    pub nx: usize,
    pub ny: usize,
    #[serde(default = "periodic")]
    pub bc_x: BcKind,
    #[serde(default = "periodic")]
    pub bc_y: BcKind,
}

fn periodic() -> BcKind {
    BcKind::Periodic
}

impl DomainSpec {
    pub fn periodic_box(l: f64, n: usize) -> Self {
        Self { lx: l, ly: l, nx: n, ny: n, bc_x: BcKind::Periodic, bc_y: BcKind::Periodic }
    }
}

/// Node-based rectangular grid on `[0,Lx]x[0,Ly]`.
///
/// A periodic direction with `n` cells carries `n` nodes `x_i = i*h`; a wall
/// direction carries `n+1` nodes, the first and last lying on the wall.
/// Nodes are stored row-major: `idx = j*mx + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub hx: f64,
    pub hy: f64,
    pub bc_x: BcKind,
    pub bc_y: BcKind,
    pub mx: usize,
    pub my: usize,
}

impl Grid {
    pub fn new(spec: &DomainSpec) -> Result<Self> {
        if !(spec.lx > 0.0 && spec.ly > 0.0) || !spec.lx.is_finite() || !spec.ly.is_finite() {
            return Err(MhdError::Config(format!(
                "extents must be positive, got Lx={} Ly={}",
                spec.lx, spec.ly
            )));
        }
        if spec.nx < MIN_CELLS || spec.ny < MIN_CELLS {
            return Err(MhdError::Config(format!(
                "cell counts must be at least {MIN_CELLS}, got nx={} ny={}",
                spec.nx, spec.ny
            )));
        }
        let nodes = |n: usize, bc: BcKind| if bc == BcKind::Periodic { n } else { n + 1 };
        Ok(Self {
            nx: spec.nx,
            ny: spec.ny,
            lx: spec.lx,
            ly: spec.ly,
            hx: spec.lx / spec.nx as f64,
            hy: spec.ly / spec.ny as f64,
            bc_x: spec.bc_x,
            bc_y: spec.bc_y,
            mx: nodes(spec.nx, spec.bc_x),
            my: nodes(spec.ny, spec.bc_y),
        })
    }

    pub fn periodic_box(l: f64, n: usize) -> Result<Self> {
        Self::new(&DomainSpec::periodic_box(l, n))
    }

    pub fn len(&self) -> usize {
        self.mx * self.my
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.mx + i
    }

    #[inline]
    pub fn ij(&self, idx: usize) -> (usize, usize) {
        (idx % self.mx, idx / self.mx)
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.hx
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        j as f64 * self.hy
    }

    pub fn coords(&self, idx: usize) -> (f64, f64) {
        let (i, j) = self.ij(idx);
        (self.x(i), self.y(j))
    }

    pub fn fully_periodic(&self) -> bool {
        self.bc_x == BcKind::Periodic && self.bc_y == BcKind::Periodic
    }

    pub fn on_x_wall(&self, i: usize) -> bool {
        self.bc_x == BcKind::Wall && (i == 0 || i == self.nx)
    }

    pub fn on_y_wall(&self, j: usize) -> bool {
        self.bc_y == BcKind::Wall && (j == 0 || j == self.ny)
    }

    pub fn is_boundary(&self, idx: usize) -> bool {
        let (i, j) = self.ij(idx);
        self.on_x_wall(i) || self.on_y_wall(j)
    }

    /// Nodes lying on Γ, in index order.
    pub fn boundary_nodes(&self) -> Vec<usize> {
        (0..self.len()).filter(|&k| self.is_boundary(k)).collect()
    }

    /// Trapezoid quadrature weight of a node.
    pub fn weight(&self, idx: usize) -> f64 {
        let (i, j) = self.ij(idx);
        let wx = if self.on_x_wall(i) { 0.5 } else { 1.0 };
        let wy = if self.on_y_wall(j) { 0.5 } else { 1.0 };
        wx * wy * self.hx * self.hy
    }

    pub fn weights(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.weight(k)).collect()
    }

    pub fn h_max(&self) -> f64 {
        self.hx.max(self.hy)
    }

    pub fn diameter(&self) -> f64 {
        self.lx.hypot(self.ly)
    }

    pub fn sample<F: Fn(f64, f64) -> f64>(&self, f: F) -> Vec<f64> {
        (0..self.len())
            .map(|k| {
                let (x, y) = self.coords(k);
                f(x, y)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn periodic_box_spacing() {
        let g = Grid::periodic_box(2.0 * PI, 32).unwrap();
        assert_eq!(g.hx, 2.0 * PI / 32.0);
        assert_eq!(g.hy, g.hx);
        assert_eq!(g.len(), 32 * 32);
        assert!(g.boundary_nodes().is_empty());
    }

    #[test]
    fn too_few_cells() {
        let spec = DomainSpec { lx: 1.0, ly: 1.0, nx: 4, ny: 8, bc_x: BcKind::Periodic, bc_y: BcKind::Periodic };
        assert!(matches!(Grid::new(&spec), Err(MhdError::Config(_))));
    }

    #[test]
    fn non_positive_extent() {
        let spec = DomainSpec { lx: 0.0, ly: 1.0, nx: 8, ny: 8, bc_x: BcKind::Wall, bc_y: BcKind::Wall };
        assert!(Grid::new(&spec).is_err());
    }

    #[test]
    fn wall_channel_spacing() {
        let spec = DomainSpec { lx: 2.0, ly: 1.0, nx: 64, ny: 32, bc_x: BcKind::Wall, bc_y: BcKind::Wall };
        let g = Grid::new(&spec).unwrap();
        assert_eq!(g.hx, 1.0 / 32.0);
        assert_eq!(g.hy, 1.0 / 32.0);
        assert_eq!((g.mx, g.my), (65, 33));
        assert_eq!(g.boundary_nodes().len(), 2 * 65 + 2 * 31);
        let area: f64 = g.weights().iter().sum();
        assert!((area - 2.0).abs() < 1e-12);
    }
}
