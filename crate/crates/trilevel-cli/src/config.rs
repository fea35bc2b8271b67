//! Run configuration: a TOML file with one section per concern, every key
//! optional, unknown keys rejected. The empty file is a valid config and
//! reproduces the bundled demonstration setup.

use serde::{Deserialize, Serialize};
use trilevel::kinetic::ClosureMode;
use trilevel::sweep::AxisSpec;
use trilevel::{BathSpec, EngineKind, EngineSpec, FactorLevels, GridSpec, WorkChannelClosure};

/// Artifact serialization format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EngineSection {
    pub omega10: f64,
    pub omega20: f64,
    pub lam: f64,
    pub drive_freq: Option<f64>,
}

impl Default for EngineSection {
    fn default() -> Self {
        EngineSection {
            omega10: 1.0,
            omega20: 2.6,
            lam: 0.5,
            drive_freq: None,
        }
    }
}

impl EngineSection {
    pub fn to_spec(self) -> EngineSpec {
        EngineSpec {
            omega10: self.omega10,
            omega20: self.omega20,
            lam: self.lam,
            drive_freq: self.drive_freq,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BathSection {
    pub beta_c: f64,
    pub beta_h: f64,
    pub g_c_res: f64,
    pub g_h_res: f64,
    pub g_c_det: f64,
    pub g_h_det: f64,
}

impl Default for BathSection {
    fn default() -> Self {
        BathSection {
            beta_c: 5.0,
            beta_h: 1.0,
            g_c_res: 2.0,
            g_h_res: 2.0,
            g_c_det: 2.0,
            g_h_det: 2.0,
        }
    }
}

impl BathSection {
    pub fn to_spec(self) -> BathSpec {
        BathSpec {
            beta_c: self.beta_c,
            beta_h: self.beta_h,
            g_c_res: self.g_c_res,
            g_h_res: self.g_h_res,
            g_c_det: self.g_c_det,
            g_h_det: self.g_h_det,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClosureSection {
    pub mode: ClosureMode,
    pub gw_fixed: Option<f64>,
    pub width_g: Option<f64>,
}

impl Default for ClosureSection {
    fn default() -> Self {
        ClosureSection {
            mode: ClosureMode::Structural,
            gw_fixed: None,
            width_g: None,
        }
    }
}

impl ClosureSection {
    pub fn to_spec(self) -> WorkChannelClosure {
        WorkChannelClosure {
            mode: self.mode,
            gw_fixed: self.gw_fixed,
            width_g: self.width_g,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub omega20_min: f64,
    pub omega20_max: f64,
    pub omega20_count: usize,
    pub lam_min: f64,
    pub lam_max: f64,
    pub lam_count: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            omega20_min: 1.0,
            omega20_max: 5.0,
            omega20_count: 101,
            lam_min: 0.0,
            lam_max: 1.0,
            lam_count: 101,
        }
    }
}

impl GridSection {
    /// Grid with counts optionally replaced by a command-line override.
    pub fn to_spec(self, counts: Option<(usize, usize)>) -> GridSpec {
        let (n_omega, n_lam) = counts.unwrap_or((self.omega20_count, self.lam_count));
        GridSpec {
            omega20: AxisSpec::new("omega20", self.omega20_min, self.omega20_max, n_omega),
            lam: AxisSpec::new("lam", self.lam_min, self.lam_max, n_lam),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LevelsSection {
    pub dbeta: [[f64; 2]; 3],
    pub dr: [[f64; 2]; 3],
    pub dd: [[f64; 2]; 3],
}

impl Default for LevelsSection {
    fn default() -> Self {
        let d = FactorLevels::default();
        LevelsSection {
            dbeta: d.dbeta.map(|(a, b)| [a, b]),
            dr: d.dr.map(|(a, b)| [a, b]),
            dd: d.dd.map(|(a, b)| [a, b]),
        }
    }
}

impl LevelsSection {
    pub fn to_spec(self) -> FactorLevels {
        FactorLevels {
            dbeta: self.dbeta.map(|[a, b]| (a, b)),
            dr: self.dr.map(|[a, b]| (a, b)),
            dd: self.dd.map(|[a, b]| (a, b)),
        }
    }
}

/// The whole run configuration. Field names are the exact TOML keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub engine: EngineKind,
    pub format: OutFormat,
    pub out_dir: Option<String>,
    pub seed: u64,
    pub engine_spec: EngineSection,
    pub baths: BathSection,
    pub closure: ClosureSection,
    pub grid: GridSection,
    pub levels: LevelsSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            engine: EngineKind::Kinetic,
            format: OutFormat::Csv,
            out_dir: None,
            seed: 0,
            engine_spec: EngineSection::default(),
            baths: BathSection::default(),
            closure: ClosureSection::default(),
            grid: GridSection::default(),
            levels: LevelsSection::default(),
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let cfg: RunConfig = toml::from_str(text)?;
        Ok(cfg)
    }

    /// Canonical serialization; also the byte stream the config hash covers.
    pub fn to_canonical_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}
