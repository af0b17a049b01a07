use serde::Serialize;

use super::{ControlField, FeedbackGain, UnstableProjection};
use crate::error::{check_len, MhdError, Result};
use crate::mhd_operators::{Equilibrium, LinearOperator};
use crate::spectral::StateSpace;

/// Energy growth factor treated as blow-up.
pub const BLOWUP_FACTOR: f64 = 1e6;

#[derive(Debug, Clone, Serialize)]
pub struct SimulationTrace {
    pub times: Vec<f64>,
    /// `‖y‖²_W`
    pub energy: Vec<f64>,
    /// `‖P_u y‖²_W`
    pub energy_unstable: Vec<f64>,
    /// Actuator amplitudes applied on each step.
    pub amplitudes: Vec<Vec<f64>>,
    pub final_state: Vec<f64>,
}

/// Backward Euler for `y' = Ã y + Σ_j a_j Π(m P u_j)` with `a = −F c(y)`
/// evaluated at the start of each step. `gain = None` runs open loop.
#[allow(clippy::too_many_arguments)]
pub fn simulate_closed_loop(
    space: &StateSpace,
    op: &LinearOperator,
    eq: &Equilibrium,
    proj: &UnstableProjection,
    gain: Option<&FeedbackGain>,
    controls: &[ControlField],
    y0: &[f64],
    t_final: f64,
    dt: f64,
) -> Result<SimulationTrace> {
    check_len(space.w.len(), y0.len())?;
    if !(dt > 0.0 && t_final > 0.0) {
        return Err(MhdError::Config(format!("need positive dt and horizon, got {dt} and {t_final}")));
    }
    if let Some(g) = gain {
        check_len(g.f.nrows(), controls.len())?;
    }
    let steps = (t_final / dt).round() as usize;
    let s = 1.0 / dt;
    let solver = space.shifted_solver(op, s, (eq.nu, eq.eta))?;
    let mut y = y0.to_vec();
    space.project(&mut y)?;
    let e_u = |y: &[f64]| -> Result<f64> { Ok(space.wnorm(&proj.project(y)?).powi(2)) };
    let e0 = space.wnorm(&y).powi(2);
    let mut tr = SimulationTrace {
        times: vec![0.0],
        energy: vec![e0],
        energy_unstable: vec![e_u(&y)?],
        amplitudes: Vec::new(),
        final_state: Vec::new(),
    };
    for step in 1..=steps {
        let amps = match gain {
            Some(g) => g.amplitudes(&proj.coords(&y)?),
            None => vec![0.0; controls.len()],
        };
        let mut rhs: Vec<f64> = y.iter().map(|v| v * s).collect();
        for (a, c) in amps.iter().zip(controls) {
            for (r, g) in rhs.iter_mut().zip(&c.injected) {
                *r += a * g;
            }
        }
        y = solver.solve(&rhs)?;
        let e = space.wnorm(&y).powi(2);
        if !e.is_finite() || e > BLOWUP_FACTOR * e0 {
            return Err(MhdError::Instability(format!("energy {e:.3e} at t = {:.3} (initial {e0:.3e})", step as f64 * dt)));
        }
        tr.times.push(step as f64 * dt);
        tr.energy.push(e);
        tr.energy_unstable.push(e_u(&y)?);
        tr.amplitudes.push(amps);
    }
    tr.final_state = y;
    Ok(tr)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct DecayFit {
    /// `−d/dt log E`, a rate of energy.
    pub rate: f64,
    /// Half-width of the 95% interval on the rate.
    pub half_width: f64,
    pub samples: usize,
}

/// Least-squares fit of `log E` against `t` over `[t0, t1]`.
pub fn measure_decay(times: &[f64], energy: &[f64], window: (f64, f64)) -> Result<DecayFit> {
    check_len(times.len(), energy.len())?;
    let pts: Vec<(f64, f64)> = times.iter().zip(energy).filter(|(t, _)| **t >= window.0 && **t <= window.1).map(|(&t, &e)| (t, e)).collect();
    if pts.len() < 10 {
        return Err(MhdError::Fit(format!("{} samples in window, need at least 10", pts.len())));
    }
    if pts.iter().any(|p| !(p.1 > 0.0) || !p.1.is_finite()) {
        return Err(MhdError::Fit("energy must be positive and finite".into()));
    }
    let n = pts.len() as f64;
    let logs: Vec<(f64, f64)> = pts.iter().map(|&(t, e)| (t, e.ln())).collect();
    let mt = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let ml = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let stt: f64 = logs.iter().map(|p| (p.0 - mt).powi(2)).sum();
    if stt == 0.0 {
        return Err(MhdError::Fit("degenerate time window".into()));
    }
    let slope = logs.iter().map(|p| (p.0 - mt) * (p.1 - ml)).sum::<f64>() / stt;
    let sse: f64 = logs.iter().map(|p| (p.1 - ml - slope * (p.0 - mt)).powi(2)).sum();
    let se = (sse / (n - 2.0) / stt).sqrt();
    Ok(DecayFit { rate: -slope, half_width: 1.96 * se, samples: pts.len() })
}
