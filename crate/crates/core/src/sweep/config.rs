//! Sweep configuration: a flat TOML table whose keys are exactly the
//! [`SweepConfig`] field names. Unknown keys are rejected.
//!
//! ```toml
//! nx = 32
//! ny = 32
//! nz = 16
//! l1 = 6.283185307179586
//! l2 = 6.283185307179586
//! data_kind = "random"          # or "taylor_green", "baroclinic_wave", "modulated_taylor_green"
//! seed = 20240917
//! max_mode = 4
//! amplitude = 1.0
//! norm_target = "h2"            # "h1", "h2" or "none"
//! norm_target_value = 5.0
//! smoothness = "h2"             # "h1" or "h2"
//! alphas = [3.0, 4.0]
//! epsilons = [0.2, 0.1, 0.05, 0.025]
//! t_end = 0.5
//! dt_max = 0.005
//! cfl_safety = 0.9
//! outputs = 50
//! output_dir = "sweep-out"
//! workers = 4
//! slope_tolerance = 0.6
//! lm_exponents = [4.0]
//! ```

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{make_grid, Grid};
use crate::initial::{Analytic, DataKind, DataSpec, NormTarget, Smoothness};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    #[serde(default = "two_pi")]
    pub l1: f64,
    #[serde(default = "two_pi")]
    pub l2: f64,

    #[serde(default = "default_kind")]
    pub data_kind: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_max_mode")]
    pub max_mode: usize,
    #[serde(default = "one")]
    pub amplitude: f64,
    #[serde(default = "default_target")]
    pub norm_target: String,
    #[serde(default = "one")]
    pub norm_target_value: f64,
    #[serde(default = "default_smoothness")]
    pub smoothness: Smoothness,

    pub alphas: Vec<f64>,
    #[serde(default = "default_epsilons")]
    pub epsilons: Vec<f64>,
    pub t_end: f64,
    #[serde(default = "default_dt_max")]
    pub dt_max: f64,
    #[serde(default = "default_cfl")]
    pub cfl_safety: f64,
    #[serde(default = "default_outputs")]
    pub outputs: usize,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "one_usize")]
    pub workers: usize,
    /// Absolute half-width of the pass band around the predicted slope.
    #[serde(default = "default_tolerance")]
    pub slope_tolerance: f64,
    #[serde(default = "default_lm")]
    pub lm_exponents: Vec<f64>,
}

fn two_pi() -> f64 {
    2.0 * std::f64::consts::PI
}
fn one() -> f64 {
    1.0
}
fn one_usize() -> usize {
    1
}
fn default_kind() -> String {
    "random".into()
}
fn default_max_mode() -> usize {
    4
}
fn default_target() -> String {
    "none".into()
}
fn default_smoothness() -> Smoothness {
    Smoothness::H2
}
fn default_epsilons() -> Vec<f64> {
    vec![0.2, 0.1, 0.05, 0.025]
}
fn default_dt_max() -> f64 {
    0.005
}
fn default_cfl() -> f64 {
    0.9
}
fn default_outputs() -> usize {
    50
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("sweep-out")
}
fn default_tolerance() -> f64 {
    0.6
}
fn default_lm() -> Vec<f64> {
    vec![4.0]
}

impl SweepConfig {
    pub fn from_toml(text: &str) -> Result<SweepConfig> {
        let cfg: SweepConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<SweepConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        SweepConfig::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.epsilons.is_empty() {
            return bad("epsilons must not be empty".into());
        }
        if self.epsilons.windows(2).any(|w| !(w[1] < w[0])) {
            return bad("epsilons must be strictly decreasing".into());
        }
        if self.epsilons.iter().any(|&e| !(e > 0.0 && e <= 1.0)) {
            return bad("every eps must lie in (0, 1]".into());
        }
        if self.alphas.is_empty() || self.alphas.iter().any(|&a| !(a > 2.0)) {
            return bad("alphas must be non-empty and all exceed 2".into());
        }
        if !(self.t_end > 0.0) {
            return bad(format!("t_end = {} must be positive", self.t_end));
        }
        if !(self.dt_max > 0.0) {
            return bad(format!("dt_max = {} must be positive", self.dt_max));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return bad(format!(
                "cfl_safety = {} must lie in (0, 1]",
                self.cfl_safety
            ));
        }
        if self.outputs == 0 {
            return bad("outputs must be positive".into());
        }
        if self.workers == 0 {
            return bad("workers must be positive".into());
        }
        if !(self.slope_tolerance >= 0.0) {
            return bad("slope_tolerance must be non-negative".into());
        }
        self.data_spec()?.validate(&*self.grid()?)
    }

    pub fn grid(&self) -> Result<Arc<Grid>> {
        make_grid(self.nx, self.ny, self.nz, self.l1, self.l2)
    }

    pub fn data_spec(&self) -> Result<DataSpec> {
        let kind = match self.data_kind.as_str() {
            "random" => {
                let target = match self.norm_target.as_str() {
                    "none" => None,
                    "h1" => Some(NormTarget::H1(self.norm_target_value)),
                    "h2" => Some(NormTarget::H2(self.norm_target_value)),
                    other => return Err(Error::Config(format!("unknown norm_target {other:?}"))),
                };
                DataKind::RandomBandLimited {
                    seed: self.seed,
                    max_mode: self.max_mode,
                    amplitude: self.amplitude,
                    target,
                }
            }
            name => {
                let name = match name {
                    "taylor_green" => Analytic::TaylorGreen,
                    "baroclinic_wave" => Analytic::BaroclinicWave,
                    "modulated_taylor_green" => Analytic::ModulatedTaylorGreen,
                    other => return Err(Error::Config(format!("unknown data_kind {other:?}"))),
                };
                DataKind::Analytic {
                    name,
                    amplitude: self.amplitude,
                }
            }
        };
        Ok(DataSpec {
            kind,
            smoothness: self.smoothness,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
nx = 16
ny = 16
nz = 12
alphas = [3.0]
t_end = 0.1
"#;

    #[test]
    fn defaults_fill_in() {
        let cfg = SweepConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(cfg.epsilons, vec![0.2, 0.1, 0.05, 0.025]);
        assert_eq!(cfg.outputs, 50);
        assert_eq!(cfg.smoothness, Smoothness::H2);
        let again = SweepConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn unknown_keys_are_errors() {
        let text = format!("{MINIMAL}\nbogus = 1\n");
        assert!(matches!(
            SweepConfig::from_toml(&text),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn invariants_are_enforced() {
        for extra in [
            "epsilons = [0.1, 0.2, 0.05]",
            "epsilons = [0.2, 0.2, 0.1]",
            "t_end = 0.0",
            "data_kind = \"vortex\"",
            "max_mode = 5",
            "epsilons = [0.2, -0.1]",
        ] {
            let key = extra.split('=').next().unwrap().trim();
            let base: String = MINIMAL
                .lines()
                .filter(|l| !l.starts_with(key))
                .collect::<Vec<_>>()
                .join("\n");
            let text = format!("{base}\n{extra}\n");
            assert!(SweepConfig::from_toml(&text).is_err(), "{extra}");
        }
        let text = MINIMAL.replace("[3.0]", "[2.0]");
        assert!(SweepConfig::from_toml(&text).is_err());
    }
}
