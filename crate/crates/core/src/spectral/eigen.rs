use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::space::StateSpace;
use crate::dense;
use crate::error::{MhdError, Result};
use crate::fields::StateVector;
use crate::linalg::C64;
use crate::mhd_operators::{Equilibrium, LinearOperator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Dense eigendecomposition of the Galerkin matrix on the state space.
    Dense,
    /// Block subspace iteration with `(sI − Ã)⁻¹` and Rayleigh–Ritz.
    ShiftInvert,
    /// Dense up to [`DENSE_LIMIT`] unknowns, shift-invert above.
    #[default]
    Auto,
}

pub const DENSE_LIMIT: usize = 1600;
/// Ritz residual tolerance relative to `max(1, |λ|)`.
pub const RITZ_TOL: f64 = 1e-9;
const CLUSTER_REL: f64 = 1e-6;
const RANK_REL: f64 = 1e-6;
const MAX_SWEEPS: usize = 400;

/// One eigenpair of the generator: `Ã Φ = λ Φ`, `‖Φ‖ = 1`.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub lambda: C64,
    pub vector: StateVector<C64>,
    /// `‖ΠÃΦ − λΦ‖` in the trapezoid norm.
    pub residual: f64,
    pub cluster: usize,
}

/// Eigenvalues equal up to the clustering tolerance, with the orthonormal
/// eigenvectors spanning their eigenspace.
#[derive(Debug, Clone, Serialize)]
pub struct Cluster {
    pub lambda: [f64; 2],
    pub members: Vec<usize>,
    pub multiplicity: usize,
}

impl Cluster {
    pub fn value(&self) -> C64 {
        C64::new(self.lambda[0], self.lambda[1])
    }

    pub fn unstable(&self) -> bool {
        self.lambda[0] >= 0.0
    }
}

#[derive(Debug, Clone)]
pub struct SpectrumReport {
    pub label: String,
    pub pairs: Vec<EigenPair>,
    pub clusters: Vec<Cluster>,
    /// Eigenvalues with `Re λ ≥ 0`, counted with geometric multiplicity.
    pub n_unstable: usize,
    /// Distinct unstable eigenvalues.
    pub m_distinct: usize,
    /// Largest geometric multiplicity among unstable clusters.
    pub k_max: usize,
    pub strategy: Strategy,
    pub sweeps: usize,
}

impl SpectrumReport {
    pub fn unstable_clusters(&self) -> impl Iterator<Item = &Cluster> {
        self.clusters.iter().filter(|c| c.unstable())
    }

    pub fn cluster_vectors(&self, c: &Cluster) -> Vec<&StateVector<C64>> {
        c.members.iter().map(|&i| &self.pairs[i].vector).collect()
    }

    /// First eigenvalue with `Re λ < 0`, when one was computed.
    pub fn first_stable(&self) -> Option<C64> {
        self.clusters.iter().find(|c| !c.unstable()).map(|c| c.value())
    }

    pub fn max_residual(&self) -> f64 {
        self.pairs.iter().map(|p| p.residual).fold(0.0, f64::max)
    }
}

/// Leading `how_many` eigenvalues of `op` (largest real part first), extended
/// to complete the last cluster and to include every eigenvalue with
/// `Re λ ≥ 0` plus the first stable one.
pub fn compute_spectrum(space: &StateSpace, op: &LinearOperator, eq: &Equilibrium, how_many: usize, strategy: Strategy) -> Result<SpectrumReport> {
    if how_many == 0 {
        return Err(MhdError::Precondition("how_many must be positive".into()));
    }
    let dim = space.dim();
    let strategy = match strategy {
        Strategy::Auto if dim <= DENSE_LIMIT => Strategy::Dense,
        Strategy::Auto => Strategy::ShiftInvert,
        s => s,
    };
    match strategy {
        Strategy::ShiftInvert if 2 * how_many + 10 < dim => shift_invert(space, op, eq, how_many),
        _ => dense_path(space, op, how_many),
    }
}

/// Same as [`compute_spectrum`] for the adjoint operator.
pub fn adjoint_spectrum(space: &StateSpace, adjoint: &LinearOperator, eq: &Equilibrium, how_many: usize, strategy: Strategy) -> Result<SpectrumReport> {
    compute_spectrum(space, adjoint, eq, how_many, strategy)
}

fn dense_path(space: &StateSpace, op: &LinearOperator, how_many: usize) -> Result<SpectrumReport> {
    let q = space.dense_basis()?;
    let h = space.galerkin(op, &q)?;
    let (vals, vecs) = dense::eig(&h)?;
    let order = sort_order(&vals);
    let sorted: Vec<C64> = order.iter().map(|&i| vals[i]).collect();
    let t = selection(&sorted, how_many);
    let qc = Mat::from_fn(q.nrows(), q.ncols(), |i, j| C64::new(q[(i, j)], 0.0));
    let picked: Vec<(C64, Vec<C64>)> = order[..t]
        .iter()
        .map(|&k| {
            let c = Mat::from_fn(vecs.nrows(), 1, |i, _| vecs[(i, k)]);
            let v = &qc * &c;
            (vals[k], dense::col_c(&v, 0))
        })
        .collect();
    finalize(space, op, picked, Strategy::Dense, 0)
}

fn shift_invert(space: &StateSpace, op: &LinearOperator, eq: &Equilibrium, how_many: usize) -> Result<SpectrumReport> {
    let dim = space.dim();
    let len = space.w.len();
    let p = (how_many + how_many.max(10)).min(dim);
    let s = op.shift + 2.0 * eq.grad_bound + 0.25;
    let solver = space.shifted_solver(op, s, (eq.nu, eq.eta))?;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut random = |space: &StateSpace| -> Result<Vec<f64>> {
        let mut v: Vec<f64> = (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect();
        space.project(&mut v)?;
        Ok(v)
    };
    let mut cols: Vec<Vec<f64>> = (0..p).map(|_| random(space)).collect::<Result<_>>()?;
    let mut y = dense::w_orthonormalize_real(&dense::from_cols(len, &cols), &space.w, 1e-12)?;
    for sweep in 1..=MAX_SWEEPS {
        cols = (0..y.ncols()).map(|j| solver.solve(&dense::col(&y, j))).collect::<Result<_>>()?;
        // components outside the space are amplified by 1/(s − σ) and must not accumulate
        for c in cols.iter_mut() {
            space.project(c)?;
        }
        let mut z = dense::w_orthonormalize_real(&dense::from_cols(len, &cols), &space.w, 1e-12)?;
        while z.ncols() < p {
            let mut extra: Vec<Vec<f64>> = (0..z.ncols()).map(|j| dense::col(&z, j)).collect();
            extra.push(random(space)?);
            z = dense::w_orthonormalize_real(&dense::from_cols(len, &extra), &space.w, 1e-12)?;
        }
        y = z;
        let ay: Vec<Vec<f64>> = (0..p).map(|j| space.apply(op, &dense::col(&y, j))).collect::<Result<_>>()?;
        let ayw = Mat::from_fn(len, p, |i, j| ay[j][i] * space.w[i]);
        let h = y.transpose() * &ayw;
        let (theta, c) = dense::eig(&h)?;
        let order = sort_order(&theta);
        let sorted: Vec<C64> = order.iter().map(|&i| theta[i]).collect();
        let t = selection(&sorted, how_many);
        if t + 2 > p {
            if p == dim {
                break;
            }
            return shift_invert(space, op, eq, (2 * how_many).min(dim));
        }
        let yc = Mat::from_fn(len, p, |i, j| C64::new(y[(i, j)], 0.0));
        let ayc = Mat::from_fn(len, p, |i, j| C64::new(ay[j][i], 0.0));
        let mut picked = Vec::with_capacity(t);
        let mut worst: f64 = 0.0;
        for &k in &order[..t] {
            let ck = Mat::from_fn(p, 1, |i, _| c[(i, k)]);
            let v = dense::col_c(&(&yc * &ck), 0);
            let av = dense::col_c(&(&ayc * &ck), 0);
            let nv = space.wnorm(&v);
            let r: Vec<C64> = av.iter().zip(&v).map(|(a, b)| a - theta[k] * b).collect();
            worst = worst.max(space.wnorm(&r) / nv / theta[k].norm().max(1.0));
            picked.push((theta[k], v));
        }
        if worst <= RITZ_TOL {
            return finalize(space, op, picked, Strategy::ShiftInvert, sweep);
        }
    }
    Err(MhdError::Numerical { message: format!("subspace iteration did not converge in {MAX_SWEEPS} sweeps"), residual: f64::NAN })
}

/// Order by real part descending; runs with equal real part (to clustering
/// tolerance) by imaginary part ascending.
pub(crate) fn sort_order(vals: &[C64]) -> Vec<usize> {
    let tol = cluster_tol(vals);
    let mut idx: Vec<usize> = (0..vals.len()).collect();
    idx.sort_by(|&a, &b| vals[b].re.total_cmp(&vals[a].re));
    let mut out = Vec::with_capacity(idx.len());
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && (vals[idx[end - 1]].re - vals[idx[end]].re).abs() <= tol {
            end += 1;
        }
        let mut run = idx[start..end].to_vec();
        run.sort_by(|&a, &b| vals[a].im.total_cmp(&vals[b].im));
        out.extend(run);
        start = end;
    }
    out
}

fn cluster_tol(vals: &[C64]) -> f64 {
    CLUSTER_REL * vals.iter().map(|v| v.norm()).fold(1.0, f64::max)
}

/// Number of leading sorted values to keep.
fn selection(sorted: &[C64], how_many: usize) -> usize {
    let n = sorted.len();
    let mut t = how_many.min(n);
    // every unstable value plus the first stable one
    while t < n && sorted[t - 1].re >= 0.0 {
        t += 1;
    }
    let tol = cluster_tol(&sorted[..t]);
    loop {
        let grow = (t..n).any(|j| sorted[..t].iter().any(|v| (v - sorted[j]).norm() <= tol));
        if !grow {
            return t;
        }
        t += 1;
    }
}

/// Single-linkage groups of `vals` (indices).
fn clusters_of(vals: &[C64]) -> Vec<Vec<usize>> {
    let tol = cluster_tol(vals);
    let mut label: Vec<usize> = (0..vals.len()).collect();
    for i in 0..vals.len() {
        for j in 0..i {
            if (vals[i] - vals[j]).norm() <= tol {
                let (a, b) = (label[i], label[j]);
                for l in label.iter_mut() {
                    if *l == a {
                        *l = b;
                    }
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut seen: Vec<usize> = Vec::new();
    for i in 0..vals.len() {
        match seen.iter().position(|&l| l == label[i]) {
            Some(g) => groups[g].push(i),
            None => {
                seen.push(label[i]);
                groups.push(vec![i]);
            }
        }
    }
    groups
}

fn apply_c(space: &StateSpace, op: &LinearOperator, v: &[C64]) -> Result<Vec<C64>> {
    let re: Vec<f64> = v.iter().map(|z| z.re).collect();
    let im: Vec<f64> = v.iter().map(|z| z.im).collect();
    let (a, b) = (space.apply(op, &re)?, space.apply(op, &im)?);
    Ok(a.into_iter().zip(b).map(|(x, y)| C64::new(x, y)).collect())
}

fn phase_normalize(v: &mut [C64]) {
    let k = (0..v.len()).max_by(|&a, &b| v[a].norm().total_cmp(&v[b].norm())).unwrap_or(0);
    if v.is_empty() || v[k].norm() == 0.0 {
        return;
    }
    let ph = v[k].conj() / v[k].norm();
    v.iter_mut().for_each(|z| *z *= ph);
}

fn finalize(space: &StateSpace, op: &LinearOperator, picked: Vec<(C64, Vec<C64>)>, strategy: Strategy, sweeps: usize) -> Result<SpectrumReport> {
    let vals: Vec<C64> = picked.iter().map(|p| p.0).collect();
    let len = space.w.len();
    let mut pairs = Vec::new();
    let mut clusters = Vec::new();
    for group in clusters_of(&vals) {
        let cols: Vec<Vec<C64>> = group.iter().map(|&i| picked[i].1.clone()).collect();
        let basis = dense::w_orthonormalize(&dense::from_cols_c(len, &cols), &space.w, RANK_REL)?;
        let mean = group.iter().map(|&i| vals[i]).sum::<C64>() / group.len() as f64;
        let mut members = Vec::new();
        for j in 0..basis.ncols() {
            let mut v = dense::col_c(&basis, j);
            phase_normalize(&mut v);
            let av = apply_c(space, op, &v)?;
            let lambda = if group.len() == 1 { vals[group[0]] } else { space.wdot(&v, &av) };
            let r: Vec<C64> = av.iter().zip(&v).map(|(a, b)| a - lambda * b).collect();
            members.push(pairs.len());
            pairs.push(EigenPair { lambda, vector: StateVector::from_flat(&v)?, residual: space.wnorm(&r), cluster: clusters.len() });
        }
        let multiplicity = members.len();
        clusters.push(Cluster { lambda: [mean.re, mean.im], members, multiplicity });
    }
    let n_unstable = clusters.iter().filter(|c| c.unstable()).map(|c| c.multiplicity).sum();
    let m_distinct = clusters.iter().filter(|c| c.unstable()).count();
    let k_max = clusters.iter().filter(|c| c.unstable()).map(|c| c.multiplicity).max().unwrap_or(0);
    Ok(SpectrumReport { label: op.label.to_string(), pairs, clusters, n_unstable, m_distinct, k_max, strategy, sweeps })
}

/// Index of the cluster in `other` whose eigenvalue is closest to `conj(λ)`.
pub fn match_conjugate(lambda: C64, other: &SpectrumReport) -> Option<usize> {
    other.clusters.iter().enumerate().min_by(|a, b| (a.1.value() - lambda.conj()).norm().total_cmp(&(b.1.value() - lambda.conj()).norm())).map(|(i, _)| i)
}
