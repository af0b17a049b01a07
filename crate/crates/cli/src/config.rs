use std::path::{Path, PathBuf};

use mhdlab_core::fields::Order;
use mhdlab_core::geometry::{BandWidths, DomainSpec, OmegaSpec};
use mhdlab_core::mhd_operators::EquilibriumSpec;
use mhdlab_core::spectral::Strategy;
use mhdlab_core::{MhdError, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub geometry: GeometryBlock,
    #[serde(default)]
    pub equilibrium: EquilibriumSpec,
    pub physics: PhysicsBlock,
    #[serde(default)]
    pub spectral: SpectralBlock,
    #[serde(default)]
    pub carleman: CarlemanBlock,
    #[serde(default)]
    pub stabilize: StabilizeBlock,
    #[serde(default)]
    pub output: OutputBlock,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryBlock {
    pub domain: DomainSpec,
    #[serde(default)]
    pub order: Option<Order>,
    pub omega: OmegaSpec,
    /// Layer widths; scaled defaults from the domain when absent.
    #[serde(default)]
    pub bands: Option<BandWidths>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsBlock {
    pub nu: f64,
    pub eta: f64,
    #[serde(default)]
    pub sigma: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectralBlock {
    pub count: usize,
    pub strategy: Strategy,
}

impl Default for SpectralBlock {
    fn default() -> Self {
        Self { count: 12, strategy: Strategy::Auto }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CarlemanBlock {
    pub delta0: f64,
    pub epsilon: f64,
    /// τ values in units of `1/diam(G)`.
    pub tau_list: Vec<f64>,
    pub fields: usize,
}

impl Default for CarlemanBlock {
    fn default() -> Self {
        Self { delta0: 0.5, epsilon: 0.5, tau_list: vec![1.0, 2.0, 4.0, 8.0, 16.0, 32.0], fields: 100 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StabilizeBlock {
    pub gamma: f64,
    #[serde(rename = "T")]
    pub t_final: f64,
    pub dt: f64,
    /// Fit window; the second half of the run when absent.
    pub window: Option<[f64; 2]>,
    pub gain: bool,
}

impl Default for StabilizeBlock {
    fn default() -> Self {
        Self { gamma: 1.0, t_final: 12.0, dt: 0.01, window: None, gain: true }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputBlock {
    pub dir: PathBuf,
}

impl Default for OutputBlock {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

fn bad(msg: String) -> MhdError {
    MhdError::Config(msg)
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| bad(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| bad(e.to_string().trim().to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let d = &self.geometry.domain;
        if !(d.lx > 0.0 && d.ly > 0.0) || d.nx < 4 || d.ny < 4 {
            return Err(bad("domain needs positive lengths and at least 4 nodes per direction".into()));
        }
        let p = &self.physics;
        if !(p.nu > 0.0 && p.eta > 0.0) {
            return Err(bad(format!("nu and eta must be positive, got {} and {}", p.nu, p.eta)));
        }
        if !(p.sigma >= 0.0 && p.sigma.is_finite()) {
            return Err(bad(format!("sigma must be nonnegative, got {}", p.sigma)));
        }
        if self.spectral.count == 0 {
            return Err(bad("spectral.count must be at least 1".into()));
        }
        let c = &self.carleman;
        if !(c.delta0 > 0.0 && c.delta0 < 1.0) {
            return Err(bad(format!("delta0 must lie in (0, 1), got {}", c.delta0)));
        }
        if !(c.epsilon > 0.0) {
            return Err(bad(format!("epsilon must be positive, got {}", c.epsilon)));
        }
        if c.tau_list.is_empty() {
            return Err(bad("empty tau list".into()));
        }
        if c.tau_list.iter().any(|&t| !(t > 0.0)) || c.tau_list.windows(2).any(|w| w[1] <= w[0]) {
            return Err(bad("tau list must be positive and increasing".into()));
        }
        if c.fields == 0 {
            return Err(bad("carleman.fields must be at least 1".into()));
        }
        let s = &self.stabilize;
        if !(s.gamma > 0.0) {
            return Err(bad(format!("gamma must be positive, got {}", s.gamma)));
        }
        if !(s.dt > 0.0 && s.t_final >= 10.0 * s.dt) {
            return Err(bad(format!("need dt > 0 and T ≥ 10 dt, got dt = {} and T = {}", s.dt, s.t_final)));
        }
        if let Some([a, b]) = s.window {
            if !(a >= 0.0 && b > a && b <= s.t_final) {
                return Err(bad(format!("fit window [{a}, {b}] must lie inside [0, T]")));
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
    }
}

pub fn parse_tau_list(s: &str) -> std::result::Result<Vec<f64>, String> {
    s.split(',').filter(|t| !t.trim().is_empty()).map(|t| t.trim().parse::<f64>().map_err(|e| format!("bad tau value {t:?}: {e}"))).collect()
}
