use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use super::ops::Order;
use crate::geometry::Grid;
use crate::linalg::C64;

/// 2-D FFT on a fully periodic grid (row-major, `idx = j*nx + i`).
#[derive(Clone)]
pub struct Fft2 {
    nx: usize,
    ny: usize,
    fx: Arc<dyn Fft<f64>>,
    fy: Arc<dyn Fft<f64>>,
    ix: Arc<dyn Fft<f64>>,
    iy: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Fft2({}x{})", self.nx, self.ny)
    }
}

impl Fft2 {
    pub fn new(nx: usize, ny: usize) -> Self {
        let mut p = FftPlanner::new();
        Self {
            nx,
            ny,
            fx: p.plan_fft_forward(nx),
            fy: p.plan_fft_forward(ny),
            ix: p.plan_fft_inverse(nx),
            iy: p.plan_fft_inverse(ny),
        }
    }

    fn apply(&self, data: &mut [C64], along_x: &Arc<dyn Fft<f64>>, along_y: &Arc<dyn Fft<f64>>) {
        let (nx, ny) = (self.nx, self.ny);
        for row in data.chunks_exact_mut(nx) {
            along_x.process(row);
        }
        let mut col = vec![C64::new(0.0, 0.0); ny];
        for i in 0..nx {
            for j in 0..ny {
                col[j] = data[j * nx + i];
            }
            along_y.process(&mut col);
            for j in 0..ny {
                data[j * nx + i] = col[j];
            }
        }
    }

    pub fn forward(&self, data: &mut [C64]) {
        self.apply(data, &self.fx, &self.fy);
    }

    /// Normalized inverse.
    pub fn inverse(&self, data: &mut [C64]) {
        self.apply(data, &self.ix, &self.iy);
        let s = 1.0 / (self.nx * self.ny) as f64;
        for v in data.iter_mut() {
            *v *= s;
        }
    }
}

fn theta(k: usize, n: usize) -> f64 {
    2.0 * PI * k as f64 / n as f64
}

/// Discrete first-derivative symbol: `D e^{ikx} = i·sym·e^{ikx}`.
pub fn first_symbol(k: usize, n: usize, h: f64, order: Order) -> f64 {
    let t = theta(k, n);
    match order {
        Order::Second => t.sin() / h,
        Order::Fourth => (8.0 * t.sin() - (2.0 * t).sin()) / (6.0 * h),
    }
}

/// Discrete second-derivative symbol (nonpositive).
pub fn second_symbol(k: usize, n: usize, h: f64, order: Order) -> f64 {
    let t = theta(k, n);
    match order {
        Order::Second => -(2.0 - 2.0 * t.cos()) / (h * h),
        Order::Fourth => -(30.0 - 32.0 * t.cos() + 2.0 * (2.0 * t).cos()) / (12.0 * h * h),
    }
}

/// Per-mode symbols of a periodic grid.
#[derive(Debug, Clone)]
pub struct Symbols {
    /// First-derivative symbols along x and y for each flat mode index.
    pub kx: Vec<f64>,
    pub ky: Vec<f64>,
    /// Compact Laplacian symbol.
    pub lap: Vec<f64>,
    /// Threshold below which `|k̃|` counts as zero.
    pub zero_tol: f64,
}

impl Symbols {
    pub fn new(grid: &Grid, order: Order) -> Self {
        let (nx, ny) = (grid.nx, grid.ny);
        let n = nx * ny;
        let (mut kx, mut ky, mut lap) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        for j in 0..ny {
            for i in 0..nx {
                let m = j * nx + i;
                kx[m] = first_symbol(i, nx, grid.hx, order);
                ky[m] = first_symbol(j, ny, grid.hy, order);
                lap[m] = second_symbol(i, nx, grid.hx, order) + second_symbol(j, ny, grid.hy, order);
            }
        }
        Self { kx, ky, lap, zero_tol: 1e-8 / grid.h_max() }
    }

    pub fn k2(&self, m: usize) -> f64 {
        self.kx[m] * self.kx[m] + self.ky[m] * self.ky[m]
    }

    pub fn is_null(&self, m: usize) -> bool {
        self.k2(m).sqrt() <= self.zero_tol
    }
}
