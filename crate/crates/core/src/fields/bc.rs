use super::{BcTag, VectorField2};
use crate::error::{check_len, Result};
use crate::geometry::Grid;
use crate::linalg::Scalar;

/// Enforce the boundary condition named by `tag` on the wall nodes.
///
/// `VelocityDirichlet` zeroes both components. `MagneticTangential` zeroes the
/// normal component and sets the tangential one from the second-order
/// one-sided closure `t0 = (4 t1 - t2)/3`, which makes the one-sided normal
/// derivative of the tangential component, hence the scalar curl, vanish.
pub fn apply_bc<T: Scalar>(grid: &Grid, v: &VectorField2<T>, tag: BcTag) -> Result<VectorField2<T>> {
    check_len(grid.len(), v.len())?;
    let mut out = v.clone();
    out.bc_tag = tag;
    if grid.fully_periodic() {
        return Ok(out);
    }
    let (mx, my) = (grid.mx, grid.my);
    match tag {
        BcTag::VelocityDirichlet => {
            for k in grid.boundary_nodes() {
                out.u1[k] = T::zero();
                out.u2[k] = T::zero();
            }
        }
        BcTag::MagneticTangential => {
            let third = 1.0 / 3.0;
            // tangential closures first, then normal components (corners end at zero)
            if grid.on_y_wall(0) {
                for i in 0..mx {
                    let (a, b) = (out.u1[grid.idx(i, 1)], out.u1[grid.idx(i, 2)]);
                    out.u1[grid.idx(i, 0)] = (a * 4.0 - b) * third;
                    let (a, b) = (out.u1[grid.idx(i, my - 2)], out.u1[grid.idx(i, my - 3)]);
                    out.u1[grid.idx(i, my - 1)] = (a * 4.0 - b) * third;
                }
            }
            if grid.on_x_wall(0) {
                for j in 0..my {
                    let (a, b) = (out.u2[grid.idx(1, j)], out.u2[grid.idx(2, j)]);
                    out.u2[grid.idx(0, j)] = (a * 4.0 - b) * third;
                    let (a, b) = (out.u2[grid.idx(mx - 2, j)], out.u2[grid.idx(mx - 3, j)]);
                    out.u2[grid.idx(mx - 1, j)] = (a * 4.0 - b) * third;
                }
            }
            if grid.on_y_wall(0) {
                for i in 0..mx {
                    out.u2[grid.idx(i, 0)] = T::zero();
                    out.u2[grid.idx(i, my - 1)] = T::zero();
                }
            }
            if grid.on_x_wall(0) {
                for j in 0..my {
                    out.u1[grid.idx(0, j)] = T::zero();
                    out.u1[grid.idx(mx - 1, j)] = T::zero();
                }
            }
        }
    }
    Ok(out)
}

/// Largest violation of the tagged boundary condition (0 on periodic grids).
pub fn bc_violation<T: Scalar>(grid: &Grid, ops: &super::DiffOps, v: &VectorField2<T>, tag: BcTag) -> Result<f64> {
    check_len(grid.len(), v.len())?;
    let mut worst: f64 = 0.0;
    let curl = if tag == BcTag::MagneticTangential { Some(ops.curl2d(v)?) } else { None };
    for k in grid.boundary_nodes() {
        let (i, j) = grid.ij(k);
        match tag {
            BcTag::VelocityDirichlet => {
                worst = worst.max(v.u1[k].abs2().sqrt()).max(v.u2[k].abs2().sqrt());
            }
            BcTag::MagneticTangential => {
                if grid.on_x_wall(i) {
                    worst = worst.max(v.u1[k].abs2().sqrt());
                }
                if grid.on_y_wall(j) {
                    worst = worst.max(v.u2[k].abs2().sqrt());
                }
                let c = curl.as_ref().unwrap().values[k].abs2().sqrt() * grid.h_max();
                worst = worst.max(c);
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{DiffOps, Order};
    use crate::geometry::{BcKind, DomainSpec};

    fn channel() -> Grid {
        Grid::new(&DomainSpec { lx: 2.0, ly: 1.0, nx: 32, ny: 16, bc_x: BcKind::Periodic, bc_y: BcKind::Wall }).unwrap()
    }

    fn boxed() -> Grid {
        Grid::new(&DomainSpec { lx: 1.0, ly: 1.0, nx: 16, ny: 16, bc_x: BcKind::Wall, bc_y: BcKind::Wall }).unwrap()
    }

    fn field(g: &Grid) -> VectorField2<f64> {
        VectorField2::new(g.sample(|x, y| 1.0 + x * y + (3.0 * x).sin()), g.sample(|x, y| 2.0 - y + x.cos()))
    }

    #[test]
    fn dirichlet_zeroes_wall_values_only() {
        let g = channel();
        let v = field(&g);
        let w = apply_bc(&g, &v, BcTag::VelocityDirichlet).unwrap();
        for k in 0..g.len() {
            if g.is_boundary(k) {
                assert_eq!((w.u1[k], w.u2[k]), (0.0, 0.0));
            } else {
                assert_eq!((w.u1[k], w.u2[k]), (v.u1[k], v.u2[k]));
            }
        }
    }

    #[test]
    fn magnetic_tangential_zero_normal_and_curl() {
        for g in [channel(), boxed()] {
            let ops = DiffOps::new(&g, Order::Second).unwrap();
            let w = apply_bc(&g, &field(&g), BcTag::MagneticTangential).unwrap();
            assert!(bc_violation(&g, &ops, &w, BcTag::MagneticTangential).unwrap() < 1e-12);
        }
    }

    #[test]
    fn periodic_grid_unchanged() {
        let g = Grid::periodic_box(1.0, 8).unwrap();
        let v = field(&g);
        assert_eq!(apply_bc(&g, &v, BcTag::MagneticTangential).unwrap().u1, v.u1);
    }

    #[test]
    fn unknown_tag_is_config_error() {
        assert!("slip".parse::<BcTag>().is_err());
        assert_eq!("magnetic_tangential".parse::<BcTag>().unwrap(), BcTag::MagneticTangential);
    }
}
