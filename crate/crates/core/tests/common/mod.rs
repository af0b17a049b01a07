#![allow(dead_code)]

use mhdlab_core::fields::{DiffOps, Projector, StateVector, VectorField2};
use mhdlab_core::geometry::{BcKind, DomainSpec, Grid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn box_ops(n: usize) -> DiffOps {
    DiffOps::default_for(&Grid::periodic_box(2.0 * PI, n).unwrap()).unwrap()
}

pub fn channel_ops(n: usize) -> DiffOps {
    let g = Grid::new(&DomainSpec { lx: 2.0 * PI, ly: PI, nx: n, ny: n / 2, bc_x: BcKind::Periodic, bc_y: BcKind::Wall }).unwrap();
    DiffOps::new(&g, mhdlab_core::fields::Order::Second).unwrap()
}

pub fn noise(n: usize, r: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| r.gen_range(-1.0..1.0)).collect()
}

/// Projected white noise.
pub fn random_projected_state(p: &Projector, n: usize, r: &mut ChaCha8Rng) -> StateVector<f64> {
    let mut v = noise(4 * n, r);
    p.project_flat(&mut v[..2 * n]).unwrap();
    p.project_flat(&mut v[2 * n..]).unwrap();
    StateVector::from_flat(&v).unwrap()
}

/// Smooth divergence-free field on the 2π box from a few random streamfunction
/// modes.
pub fn smooth_solenoidal(g: &Grid, r: &mut ChaCha8Rng) -> VectorField2<f64> {
    let mut modes = Vec::new();
    for kx in -2i32..=2 {
        for ky in -2i32..=2 {
            if kx == 0 && ky == 0 {
                continue;
            }
            modes.push((kx as f64, ky as f64, r.gen_range(-1.0..1.0), r.gen_range(0.0..2.0 * PI)));
        }
    }
    let u1 = g.sample(|x, y| modes.iter().map(|&(kx, ky, a, ph)| -a * ky * (kx * x + ky * y + ph).sin()).sum());
    let u2 = g.sample(|x, y| modes.iter().map(|&(kx, ky, a, ph)| a * kx * (kx * x + ky * y + ph).sin()).sum());
    VectorField2::new(u1, u2)
}

pub fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
