//! Projection onto the unstable subspace, pole placement through localized
//! actuators, closed-loop simulation and decay-rate fitting.

mod simulate;

use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dense;
use crate::error::{MhdError, Result};
use crate::fields::{Projector, StateVector};
use crate::linalg::C64;
use crate::mhd_operators::LinearOperator;
use crate::spectral::{SpectrumReport, StateSpace};

pub use simulate::{measure_decay, simulate_closed_loop, DecayFit, SimulationTrace};

/// Largest tolerated condition number of the pairing matrix.
pub const PAIRING_COND_MAX: f64 = 1e10;
const BASIS_REL: f64 = 1e-8;

/// Real bases of the unstable forward and adjoint invariant subspaces with
/// their pairing and the restricted generator.
#[derive(Debug, Clone)]
pub struct UnstableProjection {
    /// `4n × N`, `W`-orthonormal.
    pub v: Mat<f64>,
    /// `4n × N`, `W`-orthonormal.
    pub v_adj: Mat<f64>,
    /// `V*ᵀ W V`
    pub pairing: Mat<f64>,
    pub pairing_cond: f64,
    /// Generator restricted to the unstable subspace in the coordinates of `V`.
    pub a_u: Mat<f64>,
    w: Vec<f64>,
}

fn real_basis(report: &SpectrumReport, w: &[f64]) -> Result<Mat<f64>> {
    let len = w.len();
    let mut cols: Vec<Vec<f64>> = Vec::new();
    for c in report.unstable_clusters() {
        for v in report.cluster_vectors(c) {
            let f = v.flat();
            cols.push(f.iter().map(|z| z.re).collect());
            cols.push(f.iter().map(|z| z.im).collect());
        }
    }
    dense::w_orthonormalize_real(&dense::from_cols(len, &cols), w, BASIS_REL)
}

impl UnstableProjection {
    pub fn new(space: &StateSpace, op: &LinearOperator, forward: &SpectrumReport, adjoint: &SpectrumReport) -> Result<Self> {
        let w = space.w.clone();
        let v = real_basis(forward, &w)?;
        let v_adj = real_basis(adjoint, &w)?;
        let nn = forward.n_unstable;
        if v.ncols() != nn || v_adj.ncols() != nn {
            return Err(MhdError::Projection(format!(
                "unstable bases have dimensions {} (forward) and {} (adjoint), expected {nn}",
                v.ncols(),
                v_adj.ncols()
            )));
        }
        let len = w.len();
        let wv = Mat::from_fn(len, nn, |i, j| v[(i, j)] * w[i]);
        let pairing = v_adj.transpose() * &wv;
        let pairing_cond = if nn == 0 { 1.0 } else { dense::condition(&pairing)? };
        if pairing_cond > PAIRING_COND_MAX {
            return Err(MhdError::Projection(format!("pairing matrix condition {pairing_cond:.3e}")));
        }
        let av: Vec<Vec<f64>> = (0..nn).map(|j| space.apply(op, &dense::col(&v, j))).collect::<Result<_>>()?;
        let wav = Mat::from_fn(len, nn, |i, j| av[j][i] * w[i]);
        let a_u = if nn == 0 { Mat::zeros(0, 0) } else { dense::solve(&pairing, &(v_adj.transpose() * &wav)) };
        Ok(Self { v, v_adj, pairing, pairing_cond, a_u, w })
    }

    pub fn dim(&self) -> usize {
        self.v.ncols()
    }

    /// Coordinates `(V*ᵀWV)⁻¹ V*ᵀ W x` of the unstable component.
    pub fn coords(&self, x: &[f64]) -> Result<Vec<f64>> {
        crate::error::check_len(self.w.len(), x.len())?;
        let nn = self.dim();
        if nn == 0 {
            return Ok(Vec::new());
        }
        let wx = Mat::from_fn(x.len(), 1, |i, _| x[i] * self.w[i]);
        let c = dense::solve(&self.pairing, &(self.v_adj.transpose() * &wx));
        Ok((0..nn).map(|i| c[(i, 0)]).collect())
    }

    /// Unstable component `V c(x)`.
    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        let c = self.coords(x)?;
        let mut out = vec![0.0; x.len()];
        for (j, cj) in c.iter().enumerate() {
            for (i, o) in out.iter_mut().enumerate() {
                *o += self.v[(i, j)] * cj;
            }
        }
        Ok(out)
    }
}

/// Seeded white noise projected onto the state space.
pub fn random_initial_state(space: &StateSpace, seed: u64) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut y: Vec<f64> = (0..space.w.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    space.project(&mut y)?;
    Ok(y)
}

/// `project_unstable` on a state vector.
pub fn project_unstable(state: &StateVector<f64>, p: &UnstableProjection) -> Result<Vec<f64>> {
    p.coords(&state.flat())
}

/// Control field `m·P(u)` (exactly zero outside ω) and the leakage of its
/// projection `Π(m·P(u))` outside ω relative to its size.
#[derive(Debug, Clone)]
pub struct ControlField {
    pub field: Vec<f64>,
    pub injected: Vec<f64>,
    pub leakage: f64,
}

pub fn control_fields(space: &StateSpace, projector: &Projector, actuators: &[StateVector<f64>], m: &[f64]) -> Result<Vec<ControlField>> {
    let n = m.len();
    actuators
        .iter()
        .map(|u| {
            let mut phi = u.phi.flat();
            let mut xi = u.xi.flat();
            projector.project_flat(&mut phi)?;
            projector.project_flat(&mut xi)?;
            let mut field: Vec<f64> = phi.into_iter().chain(xi).collect();
            for (i, f) in field.iter_mut().enumerate() {
                *f *= m[i % n];
            }
            let mut injected = field.clone();
            space.project(&mut injected)?;
            let total = space.wnorm(&injected);
            let outside: Vec<f64> = injected.iter().enumerate().map(|(i, &v)| if m[i % n] == 0.0 { v } else { 0.0 }).collect();
            let leakage = if total > 0.0 { space.wnorm(&outside) / total } else { 0.0 };
            Ok(ControlField { field, injected, leakage })
        })
        .collect()
}

/// Input map `N × K`: unstable coordinates of each injected control.
pub fn input_map(p: &UnstableProjection, controls: &[ControlField]) -> Result<Mat<f64>> {
    let cols: Vec<Vec<f64>> = controls.iter().map(|c| p.coords(&c.injected)).collect::<Result<_>>()?;
    Ok(Mat::from_fn(p.dim(), controls.len(), |i, j| cols[j][i]))
}

#[derive(Debug, Clone)]
pub struct FeedbackGain {
    /// `K × N`; amplitudes are `−F c`.
    pub f: Mat<f64>,
    pub gamma: f64,
    pub targets: Vec<f64>,
    pub closed_loop: Vec<C64>,
}

impl FeedbackGain {
    pub fn amplitudes(&self, coords: &[f64]) -> Vec<f64> {
        (0..self.f.nrows()).map(|r| -(0..self.f.ncols()).map(|c| self.f[(r, c)] * coords[c]).sum::<f64>()).collect()
    }

    pub fn max_real_part(&self) -> f64 {
        self.closed_loop.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Closed-loop targets `−γ(1 + 0.1 j)`.
pub fn targets(n: usize, gamma: f64) -> Vec<f64> {
    (0..n).map(|j| -gamma * (1.0 + 0.1 * j as f64)).collect()
}

fn controllability_rank(a: &Mat<f64>, b: &Mat<f64>) -> Result<usize> {
    let n = a.nrows();
    let k = b.ncols();
    let mut blocks = vec![b.clone()];
    for _ in 1..n {
        let next = a * blocks.last().unwrap();
        blocks.push(next);
    }
    let c = Mat::from_fn(n, n * k, |i, j| blocks[j / k][(i, j % k)]);
    Ok(dense::rank(&dense::singular_values(&c)?, 1e-10))
}

fn char_poly_eval(a: &Mat<f64>, roots: &[f64]) -> Mat<f64> {
    let n = a.nrows();
    let mut p = Mat::<f64>::identity(n, n);
    for &r in roots {
        let shifted = Mat::from_fn(n, n, |i, j| a[(i, j)] - if i == j { r } else { 0.0 });
        p = &p * &shifted;
    }
    p
}

/// Pole placement for `ċ = A c + B a`, `a = −F c`.
///
/// With `rank B = N` the closed loop is set to `diag(targets)` directly.
/// Otherwise a seeded random pre-feedback makes the pair cyclic and a random
/// input combination is placed with Ackermann's formula.
pub fn synthesize_feedback(a: &Mat<f64>, b: &Mat<f64>, gamma: f64, seed: u64) -> Result<FeedbackGain> {
    let n = a.nrows();
    if !(gamma > 0.0) {
        return Err(MhdError::Config(format!("gamma must be positive, got {gamma}")));
    }
    if n == 0 {
        return Ok(FeedbackGain { f: Mat::zeros(b.ncols(), 0), gamma, targets: Vec::new(), closed_loop: Vec::new() });
    }
    if b.nrows() != n {
        return Err(MhdError::Shape { expected: n, got: b.nrows() });
    }
    let k = b.ncols();
    if k == 0 || controllability_rank(a, b)? < n {
        return Err(MhdError::Uncontrollable(format!("controllability rank below {n} with {k} actuators")));
    }
    let t = targets(n, gamma);
    let d = Mat::from_fn(n, n, |i, j| if i == j { t[i] } else { 0.0 });
    let f = if dense::rank(&dense::singular_values(b)?, 1e-10) == n {
        // F = Bᵀ(BBᵀ)⁻¹(A − D)
        let bbt = b * b.transpose();
        b.transpose() * dense::solve(&bbt, &(a - &d))
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut found = None;
        for _ in 0..50 {
            let f0 = Mat::from_fn(k, n, |_, _| rng.gen_range(-1.0..1.0));
            let q = Mat::from_fn(k, 1, |_, _| rng.gen_range(-1.0..1.0));
            let a0 = a - b * &f0;
            let bq = b * &q;
            let mut cols = vec![bq.clone()];
            for _ in 1..n {
                let next = &a0 * cols.last().unwrap();
                cols.push(next);
            }
            let ctrb = Mat::from_fn(n, n, |i, j| cols[j][(i, 0)]);
            if dense::condition(&ctrb)? > 1e12 {
                continue;
            }
            let en = Mat::from_fn(1, n, |_, j| if j == n - 1 { 1.0 } else { 0.0 });
            // kᵀ = e_nᵀ C⁻¹ p(A₀)
            let cinv_t = dense::solve(&ctrb.transpose().to_owned(), &en.transpose().to_owned());
            let kr = cinv_t.transpose() * char_poly_eval(&a0, &t);
            found = Some(&f0 + &q * &kr);
            break;
        }
        found.ok_or_else(|| MhdError::Numerical { message: "no cyclic pre-feedback found".into(), residual: f64::NAN })?
    };
    let closed = a - b * &f;
    let closed_loop = dense::eigenvalues(&closed)?;
    let worst = closed_loop.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    if worst > -gamma + 1e-8 {
        return Err(MhdError::Numerical { message: "pole placement missed the target half-plane".into(), residual: worst + gamma });
    }
    Ok(FeedbackGain { f, gamma, targets: t, closed_loop })
}
