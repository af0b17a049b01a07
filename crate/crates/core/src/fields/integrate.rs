use super::{ScalarField, StateVector, VectorField2};
use crate::error::{check_len, MhdError, Result};
use crate::geometry::Grid;
use crate::linalg::Scalar;

/// Fields whose pointwise squared magnitude can be integrated.
pub trait Abs2Field {
    fn abs2_values(&self) -> Vec<f64>;
}

impl<T: Scalar> Abs2Field for ScalarField<T> {
    fn abs2_values(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.abs2()).collect()
    }
}

impl<T: Scalar> Abs2Field for VectorField2<T> {
    fn abs2_values(&self) -> Vec<f64> {
        self.abs2()
    }
}

impl<T: Scalar> Abs2Field for StateVector<T> {
    fn abs2_values(&self) -> Vec<f64> {
        self.phi.abs2().into_iter().zip(self.xi.abs2()).map(|(a, b)| a + b).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    /// Set when the region held no nodes.
    pub empty_region: bool,
}

/// `Σ_{k ∈ region} weight_k |f_k|² w_k` with trapezoid weights `w_k`.
pub fn weighted_norm2<F: Abs2Field>(grid: &Grid, f: &F, weight: &[f64], region: &[usize]) -> Result<Integral> {
    let a = f.abs2_values();
    check_len(grid.len(), a.len())?;
    check_len(grid.len(), weight.len())?;
    if region.is_empty() {
        return Ok(Integral { value: 0.0, empty_region: true });
    }
    let mut s = 0.0;
    for &k in region {
        if !(weight[k] > 0.0) {
            return Err(MhdError::Precondition(format!("weight must be positive, node {k} has {}", weight[k])));
        }
        s += weight[k] * a[k] * grid.weight(k);
    }
    Ok(Integral { value: s, empty_region: false })
}

/// Integral of pointwise values over a region (no weight).
pub fn integrate_values(grid: &Grid, values: &[f64], region: &[usize]) -> f64 {
    region.iter().map(|&k| values[k] * grid.weight(k)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{BcKind, DomainSpec};
    use std::f64::consts::PI;

    #[test]
    fn unit_square_constant() {
        for bc in [BcKind::Periodic, BcKind::Wall] {
            let g = Grid::new(&DomainSpec { lx: 1.0, ly: 1.0, nx: 10, ny: 12, bc_x: bc, bc_y: bc }).unwrap();
            let all: Vec<usize> = (0..g.len()).collect();
            let f = ScalarField::new(vec![1.0; g.len()]);
            let i = weighted_norm2(&g, &f, &vec![1.0; g.len()], &all).unwrap();
            assert!((i.value - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn zero_field_and_empty_region() {
        let g = Grid::periodic_box(1.0, 8).unwrap();
        let f = ScalarField::new(vec![0.0; g.len()]);
        let all: Vec<usize> = (0..g.len()).collect();
        assert_eq!(weighted_norm2(&g, &f, &vec![1.0; g.len()], &all).unwrap().value, 0.0);
        let e = weighted_norm2(&g, &f, &vec![1.0; g.len()], &[]).unwrap();
        assert!(e.empty_region);
    }

    #[test]
    fn sine_squared_on_periodic_box() {
        for n in [16, 32] {
            let g = Grid::periodic_box(2.0 * PI, n).unwrap();
            let f = ScalarField::new(g.sample(|x, _| x.sin()));
            let all: Vec<usize> = (0..g.len()).collect();
            let i = weighted_norm2(&g, &f, &vec![1.0; g.len()], &all).unwrap();
            assert!((i.value - 2.0 * PI * PI).abs() < 1e-10);
        }
    }

    #[test]
    fn nonpositive_weight_rejected() {
        let g = Grid::periodic_box(1.0, 8).unwrap();
        let f = ScalarField::new(vec![1.0; g.len()]);
        assert!(weighted_norm2(&g, &f, &vec![0.0; g.len()], &[0]).is_err());
    }
}
