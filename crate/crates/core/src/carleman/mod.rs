//! Numerical checks of the Carleman machinery: pointwise coefficients, the
//! integrated inequality for fields with zero Cauchy data, the cutoff system
//! residual, the final two-sided estimate and the vanishing sweep in τ.

pub mod estimate;
pub mod integrated;

use serde::{Deserialize, Serialize};

use crate::error::{MhdError, Result};

pub use estimate::{
    assemble_chi_system_residual, final_estimate_eval, tau_sweep_vanishing, ChiResidual, EstimateConstants, FinalEstimate, SweepRow,
    VanishingSweep,
};
pub use integrated::{
    calibrate_c2, gaussian_library, integrated_inequality_check, mollifier, random_test_fields, sweep_test_fields, tau_grid, EstimateReport,
    FieldSweep, FieldSweepRow,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CarlemanParams {
    pub tau: f64,
    pub delta0: f64,
    pub epsilon: f64,
    /// Hessian lower bound of ψ over G.
    pub rho: f64,
    /// Gradient lower bound of ψ over G.
    pub k: f64,
}

impl CarlemanParams {
    pub fn new(tau: f64, delta0: f64, epsilon: f64, rho: f64, k: f64) -> Result<Self> {
        let p = Self { tau, delta0, epsilon, rho, k };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(MhdError::Config(format!("tau must be positive, got {}", self.tau)));
        }
        if !(self.delta0 > 0.0 && self.delta0 < 1.0) {
            return Err(MhdError::Config(format!("delta0 must lie in (0, 1), got {}", self.delta0)));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(MhdError::Config(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if !(self.rho > 0.0 && self.k > 0.0) {
            return Err(MhdError::Config(format!("rho and k must be positive, got {} and {}", self.rho, self.k)));
        }
        Ok(())
    }

    pub fn with_tau(&self, tau: f64) -> Self {
        Self { tau, ..*self }
    }
}

/// Pointwise coefficients of the weighted estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Coefficients {
    /// `δ₀(2ρτ − ε/2)`
    pub c_grad: f64,
    /// `4ρk²τ³(1 − δ₀)`, leading order.
    pub c_zero: f64,
    /// `1 + 1/ε`
    pub c_rhs: f64,
    /// Set when `c_grad ≤ 0`.
    pub tau_too_small: bool,
}

pub fn coefficients(p: &CarlemanParams) -> Result<Coefficients> {
    p.validate()?;
    let CarlemanParams { tau, delta0, epsilon, rho, k } = *p;
    let c_grad = delta0 * (2.0 * rho * tau - epsilon / 2.0);
    let c_zero = 4.0 * rho * k * k * tau * tau * tau * (1.0 - delta0);
    let c_rhs = 1.0 + 1.0 / epsilon;
    Ok(Coefficients { c_grad, c_zero, c_rhs, tau_too_small: c_grad <= 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let c = coefficients(&CarlemanParams::new(1.0, 0.5, 0.5, 1.0, 1.0).unwrap()).unwrap();
        assert_eq!((c.c_grad, c.c_zero, c.c_rhs), (0.875, 2.0, 3.0));
        let c = coefficients(&CarlemanParams::new(10.0, 0.5, 0.5, 2.0, 3.0).unwrap()).unwrap();
        assert_eq!((c.c_grad, c.c_zero, c.c_rhs), (19.875, 36000.0, 3.0));
        let c = coefficients(&CarlemanParams { tau: 1.0, delta0: 1.0 - 1e-16, epsilon: 0.5, rho: 1.0, k: 1.0 }).unwrap();
        assert!(c.c_zero < 1e-15);
    }

    #[test]
    fn small_tau_is_signalled() {
        let c = coefficients(&CarlemanParams::new(0.1, 0.5, 1.0, 1.0, 1.0).unwrap()).unwrap();
        assert!(c.tau_too_small && c.c_grad < 0.0);
    }

    #[test]
    fn invalid_params() {
        assert!(CarlemanParams::new(1.0, 1.0, 0.5, 1.0, 1.0).is_err());
        assert!(CarlemanParams::new(0.0, 0.5, 0.5, 1.0, 1.0).is_err());
        assert!(CarlemanParams::new(1.0, 0.5, -1.0, 1.0, 1.0).is_err());
    }
}
