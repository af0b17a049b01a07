use faer::Mat;
use serde::Serialize;

use super::eigen::SpectrumReport;
use crate::dense;
use crate::error::{check_len, MhdError, Result};
use crate::fields::{StateVector, VectorField2};
use crate::geometry::Grid;
use crate::linalg::C64;

/// Default lower bound on `σ_min` of the Gram matrix.
pub const GRAM_THRESHOLD: f64 = 1e-6;
const KALMAN_REL: f64 = 1e-8;
const ACTUATOR_REL: f64 = 1e-8;

/// Eigenvalue with its orthonormal eigenvectors.
#[derive(Debug, Clone)]
pub struct ClusterView<'a> {
    pub lambda: C64,
    pub vectors: Vec<&'a StateVector<C64>>,
}

impl SpectrumReport {
    /// Unstable clusters in report order.
    pub fn unstable_views(&self) -> Vec<ClusterView<'_>> {
        self.unstable_clusters().map(|c| ClusterView { lambda: c.value(), vectors: self.cluster_vectors(c) }).collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GramMatrix {
    pub lambda: [f64; 2],
    /// Row-major `[re, im]` entries.
    pub entries: Vec<Vec<[f64; 2]>>,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub threshold: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct KalmanMatrix {
    pub lambda: [f64; 2],
    pub entries: Vec<Vec<[f64; 2]>>,
    pub rank: usize,
    pub multiplicity: usize,
    pub holds: bool,
}

fn omega_dot(grid: &Grid, omega: &[usize], a: &StateVector<C64>, b: &StateVector<C64>) -> C64 {
    let mut s = C64::new(0.0, 0.0);
    for &k in omega {
        let w = grid.weight(k);
        s += (a.phi.u1[k].conj() * b.phi.u1[k] + a.phi.u2[k].conj() * b.phi.u2[k] + a.xi.u1[k].conj() * b.xi.u1[k] + a.xi.u2[k].conj() * b.xi.u2[k]) * w;
    }
    s
}

fn omega_dot_real(grid: &Grid, omega: &[usize], u: &StateVector<f64>, b: &StateVector<C64>) -> C64 {
    let mut s = C64::new(0.0, 0.0);
    for &k in omega {
        let w = grid.weight(k);
        s += (b.phi.u1[k] * u.phi.u1[k] + b.phi.u2[k] * u.phi.u2[k] + b.xi.u1[k] * u.xi.u1[k] + b.xi.u2[k] * u.xi.u2[k]) * w;
    }
    s
}

fn entries(m: &Mat<C64>) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}

/// Gram matrix `G_ab = ∫_ω conj(Φ*_a)·Φ*_b` of the adjoint eigenvectors of
/// one eigenvalue; passes when its smallest singular value reaches `threshold`.
pub fn ucp_gram_test(grid: &Grid, lambda: C64, vectors: &[&StateVector<C64>], omega: &[usize], threshold: f64) -> Result<GramMatrix> {
    if vectors.is_empty() {
        return Err(MhdError::Empty("no eigenvectors for the Gram test".into()));
    }
    if omega.is_empty() {
        return Err(MhdError::Empty("observation region has no nodes".into()));
    }
    for v in vectors {
        check_len(grid.len(), v.n())?;
    }
    let l = vectors.len();
    let g = Mat::from_fn(l, l, |a, b| omega_dot(grid, omega, vectors[a], vectors[b]));
    let sv = dense::singular_values_c(&g)?;
    let sigma_max = sv.iter().cloned().fold(0.0, f64::max);
    let sigma_min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(GramMatrix { lambda: [lambda.re, lambda.im], entries: entries(&g), sigma_min, sigma_max, threshold, passed: sigma_min >= threshold })
}

fn restrict(u: &StateVector<f64>, omega_mask: &[bool]) -> StateVector<f64> {
    let m: Vec<f64> = omega_mask.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    u.times(&m)
}

/// `K` real controls supported in ω built from the unstable adjoint
/// eigenvectors and orthonormalized over ω.
///
/// For each cluster the real and imaginary parts of its eigenvectors are
/// orthonormalized into a real basis `R_i`; control `j` sums column `j` of
/// every `R_i` that has one. A complex-conjugate pair contributes once.
pub fn select_actuators(grid: &Grid, clusters: &[ClusterView<'_>], grams: &[GramMatrix], omega: &[usize], k: usize) -> Result<Vec<StateVector<f64>>> {
    if let Some(g) = grams.iter().find(|g| !g.passed) {
        return Err(MhdError::Precondition(format!("Gram test failed at λ = {:.6}{:+.6}i", g.lambda[0], g.lambda[1])));
    }
    if clusters.is_empty() || k == 0 {
        return Ok(Vec::new());
    }
    if omega.is_empty() {
        return Err(MhdError::Empty("observation region has no nodes".into()));
    }
    let n = grid.len();
    let mut mask = vec![false; n];
    omega.iter().for_each(|&i| mask[i] = true);
    let w: Vec<f64> = (0..4).flat_map(|_| grid.weights()).collect();
    let wo: Vec<f64> = (0..4).flat_map(|_| (0..n).map(|i| if mask[i] { grid.weight(i) } else { 0.0 })).collect();

    let tol = 1e-6 * clusters.iter().map(|c| c.lambda.norm()).fold(1.0, f64::max);
    let mut bases: Vec<Mat<f64>> = Vec::new();
    for c in clusters {
        if c.lambda.im < -tol && clusters.iter().any(|d| (d.lambda - c.lambda.conj()).norm() <= tol) {
            continue;
        }
        let mut cols: Vec<Vec<f64>> = Vec::new();
        for v in &c.vectors {
            let f = v.flat();
            cols.push(f.iter().map(|z| z.re).collect());
            if c.lambda.im.abs() > tol {
                cols.push(f.iter().map(|z| z.im).collect());
            }
        }
        // real parts alone can be dependent after phase mixing
        let mut r = dense::w_orthonormalize_real(&dense::from_cols(4 * n, &cols), &w, 1e-8)?;
        if r.ncols() < c.vectors.len() {
            for v in &c.vectors {
                cols.push(v.flat().iter().map(|z| z.im).collect());
            }
            r = dense::w_orthonormalize_real(&dense::from_cols(4 * n, &cols), &w, 1e-8)?;
        }
        bases.push(r);
    }
    let mut raw: Vec<Vec<f64>> = Vec::new();
    for j in 0..k {
        let mut u = vec![0.0; 4 * n];
        for r in &bases {
            if j < r.ncols() {
                for i in 0..4 * n {
                    if mask[i % n] {
                        u[i] += r[(i, j)];
                    }
                }
            }
        }
        raw.push(u);
    }
    // orthonormalize over ω: nodes outside ω have zero weight and zero values
    let q = dense::w_orthonormalize_real(&dense::from_cols(4 * n, &raw), &wo.iter().map(|&x| x.max(f64::MIN_POSITIVE)).collect::<Vec<_>>(), ACTUATOR_REL)?;
    if q.ncols() < k {
        return Err(MhdError::Actuator(format!("only {} independent controls supported in ω, need {k}", q.ncols())));
    }
    (0..k)
        .map(|j| {
            let c = dense::col(&q, j);
            let s = StateVector::new(VectorField2::new(c[..n].to_vec(), c[n..2 * n].to_vec()), VectorField2::new(c[2 * n..3 * n].to_vec(), c[3 * n..].to_vec()))?;
            Ok(restrict(&s, &mask))
        })
        .collect()
}

/// Per unstable eigenvalue, the `ℓ × K` matrix `⟨u_j, Φ*_a⟩_ω` and its rank.
pub fn kalman_rank(grid: &Grid, actuators: &[StateVector<f64>], clusters: &[ClusterView<'_>], omega: &[usize]) -> Result<Vec<KalmanMatrix>> {
    clusters
        .iter()
        .map(|c| {
            let m = Mat::from_fn(c.vectors.len(), actuators.len(), |a, j| omega_dot_real(grid, omega, &actuators[j], c.vectors[a]));
            let sv = dense::singular_values_c(&m)?;
            let rank = dense::rank(&sv, KALMAN_REL);
            let multiplicity = c.vectors.len();
            Ok(KalmanMatrix { lambda: [c.lambda.re, c.lambda.im], entries: entries(&m), rank, multiplicity, holds: rank == multiplicity })
        })
        .collect()
}
