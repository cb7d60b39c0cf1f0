//! Scenario files and built-in presets.
//!
//! Every physical quantity carries its unit in the key name. Example:
//!
//! ```json
//! {
//!   "name": "paper-barrier",
//!   "potential": { "kind": "rectangular", "V0_eV": 0.3, "a_nm": 500.0, "b_nm": 505.0 },
//!   "mass_rel": 0.067,
//!   "packet": { "E_avg_eV": 0.25, "l0_nm": 7.5 },
//!   "times_fs": [0.0, 400.0, 420.0],
//!   "L1_nm": 0.0,
//!   "L2_nm": 0.0
//! }
//! ```

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tunnelsplit::model::Particle;
use tunnelsplit::packets::{default_grids, gaussian_profile};
use tunnelsplit::potentials::{Layer, PotentialSpec};
use tunnelsplit::{KGrid, Potential, SpectralProfile, XGrid};

use crate::CliError;

pub const PRESETS: [&str; 4] = ["paper-barrier", "paper-well", "delta", "free"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum PotentialConfig {
    Rectangular {
        #[serde(rename = "V0_eV")]
        v0: f64,
        #[serde(rename = "a_nm")]
        a: f64,
        #[serde(rename = "b_nm")]
        b: f64,
    },
    Delta {
        #[serde(rename = "W_eVnm")]
        w: f64,
        #[serde(rename = "a_nm")]
        a: f64,
    },
    Piecewise {
        #[serde(rename = "a_nm")]
        a: f64,
        layers: Vec<LayerConfig>,
    },
    Free {
        #[serde(rename = "a_nm")]
        a: f64,
        #[serde(rename = "b_nm")]
        b: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerConfig {
    #[serde(rename = "V_eV")]
    pub v: f64,
    pub width_nm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketConfig {
    #[serde(rename = "E_avg_eV", default, skip_serializing_if = "Option::is_none")]
    pub e_avg: Option<f64>,
    #[serde(rename = "k0_per_nm", default, skip_serializing_if = "Option::is_none")]
    pub k0: Option<f64>,
    pub l0_nm: f64,
}

/// Optional grid overrides; each grid is overridden only when all three of
/// its keys are present.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_min_per_nm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_max_per_nm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_min_nm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_max_nm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dx_nm: Option<f64>,
}

fn default_name() -> String {
    "scenario".into()
}

fn default_times() -> Vec<f64> {
    vec![0.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub potential: PotentialConfig,
    /// particle mass in electron masses
    pub mass_rel: f64,
    pub packet: PacketConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grids: Option<GridConfig>,
    #[serde(default = "default_times")]
    pub times_fs: Vec<f64>,
    #[serde(rename = "L1_nm", default)]
    pub l1: f64,
    #[serde(rename = "L2_nm", default)]
    pub l2: f64,
}

/// A configuration with everything derived from it.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub potential: Potential,
    pub particle: Particle<f64>,
    pub k0: f64,
    pub l0: f64,
    pub profile: SpectralProfile,
    pub x_grid: XGrid,
    /// true if either grid came from the config
    pub custom_grids: bool,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn preset(name: &str) -> Result<Self, CliError> {
        let packet = |e: f64, l0: f64| PacketConfig {
            e_avg: Some(e),
            k0: None,
            l0_nm: l0,
        };
        let cfg = match name {
            "paper-barrier" => Self {
                name: name.into(),
                potential: PotentialConfig::Rectangular {
                    v0: 0.3,
                    a: 500.0,
                    b: 505.0,
                },
                mass_rel: 0.067,
                packet: packet(0.25, 7.5),
                grids: None,
                times_fs: vec![0.0, 400.0, 420.0],
                l1: 0.0,
                l2: 0.0,
            },
            "paper-well" => Self {
                name: name.into(),
                potential: PotentialConfig::Rectangular {
                    v0: -0.3,
                    a: 500.0,
                    b: 505.0,
                },
                mass_rel: 0.067,
                packet: packet(0.25, 7.5),
                grids: None,
                times_fs: vec![0.0, 400.0, 430.0],
                l1: 0.0,
                l2: 0.0,
            },
            "delta" => Self {
                name: name.into(),
                potential: PotentialConfig::Delta { w: 1.5, a: 150.0 },
                mass_rel: 0.067,
                packet: packet(0.25, 25.0),
                grids: None,
                times_fs: vec![0.0, 100.0, 200.0],
                l1: 0.0,
                l2: 0.0,
            },
            "free" => Self {
                name: name.into(),
                potential: PotentialConfig::Free { a: 100.0, b: 105.0 },
                mass_rel: 0.067,
                packet: packet(0.25, 7.5),
                grids: None,
                times_fs: vec![0.0, 50.0, 100.0],
                l1: 10.0,
                l2: 10.0,
            },
            other => {
                return Err(CliError::UnknownPreset {
                    name: other.into(),
                    known: PRESETS.join(", "),
                })
            }
        };
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        match (self.packet.e_avg, self.packet.k0) {
            (Some(_), Some(_)) | (None, None) => return bad("give exactly one of E_avg_eV and k0_per_nm".into()),
            (Some(e), None) if !(e > 0.0) => return bad(format!("E_avg_eV must be positive, got {e}")),
            (None, Some(k)) if !(k > 0.0) => return bad(format!("k0_per_nm must be positive, got {k}")),
            _ => {}
        }
        if !(self.packet.l0_nm > 0.0) {
            return bad(format!("l0_nm must be positive, got {}", self.packet.l0_nm));
        }
        if !(self.mass_rel > 0.0) {
            return bad(format!("mass_rel must be positive, got {}", self.mass_rel));
        }
        if self.times_fs.is_empty() || self.times_fs.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return bad("times_fs must be a non-empty list of non-negative times".into());
        }
        if !(self.l1 >= 0.0 && self.l2 >= 0.0) {
            return bad("L1_nm and L2_nm must be non-negative".into());
        }
        if self.name.is_empty() || !self.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
            return bad(format!("name {:?} must be non-empty and use only [A-Za-z0-9_-]", self.name));
        }
        self.potential()?;
        Ok(())
    }

    pub fn potential(&self) -> Result<Potential, CliError> {
        Ok(match &self.potential {
            PotentialConfig::Rectangular { v0, a, b } => PotentialSpec::rectangular(*v0, *a, *b)?,
            PotentialConfig::Delta { w, a } => PotentialSpec::delta(*w, *a)?,
            PotentialConfig::Piecewise { a, layers } => {
                PotentialSpec::piecewise(*a, layers.iter().map(|l| Layer::new(l.v, l.width_nm)).collect())?
            }
            PotentialConfig::Free { a, b } => PotentialSpec::free(*a, *b)?,
        })
    }

    /// First 12 hex digits of the SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serialises");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().take(6).map(|b| format!("{b:02x}")).collect()
    }

    pub fn t_max(&self) -> f64 {
        self.times_fs.iter().cloned().fold(0.0, f64::max)
    }

    pub fn resolve(&self) -> Result<Scenario, CliError> {
        self.validate()?;
        let potential = self.potential()?;
        let particle = Particle::with_relative_mass(self.mass_rel);
        let k0 = match (self.packet.e_avg, self.packet.k0) {
            (Some(e), _) => particle.wavenumber(e),
            (_, Some(k)) => k,
            _ => unreachable!("validated"),
        };
        let l0 = self.packet.l0_nm;
        let defaults = default_grids(&potential, k0, l0, self.t_max(), &particle)?;
        let g = self.grids.clone().unwrap_or_default();
        let geom = potential.geometry();
        let (k_grid, custom_k) = match (g.k_min_per_nm, g.k_max_per_nm, g.n_k) {
            (Some(lo), Some(hi), Some(n)) => (KGrid::new(lo, hi, n)?, true),
            (None, None, None) => (defaults.k, false),
            _ => return Err(CliError::Config("k grid override needs k_min_per_nm, k_max_per_nm and n_k".into())),
        };
        let (x_grid, custom_x) = match (g.x_min_nm, g.x_max_nm, g.dx_nm) {
            (Some(lo), Some(hi), Some(dx)) => (
                XGrid::anchored(lo, hi, dx, geom.a)?.with_breaks_at(&[geom.a, geom.x_mid, geom.b]),
                true,
            ),
            (None, None, None) => (defaults.x, false),
            _ => return Err(CliError::Config("x grid override needs x_min_nm, x_max_nm and dx_nm".into())),
        };
        let profile = gaussian_profile(k0, l0, k_grid)?;
        Ok(Scenario {
            config: self.clone(),
            potential,
            particle,
            k0,
            l0,
            profile,
            x_grid,
            custom_grids: custom_k || custom_x,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_resolve() {
        for name in PRESETS {
            let cfg = ScenarioConfig::preset(name).unwrap();
            let sc = cfg.resolve().unwrap();
            assert!(sc.k0 * sc.l0 >= 3.0);
        }
        assert!(ScenarioConfig::preset("nope").is_err());
    }

    #[test]
    fn json_round_trip_and_hash() {
        let cfg = ScenarioConfig::preset("paper-barrier").unwrap();
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        assert!(text.contains("\"V0_eV\": 0.3"));
        let back = ScenarioConfig::from_json(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
        assert_eq!(cfg.hash().len(), 12);
        assert_ne!(cfg.hash(), ScenarioConfig::preset("paper-well").unwrap().hash());
    }

    #[test]
    fn rejects_ambiguous_packet() {
        let text = r#"{"potential":{"kind":"delta","W_eVnm":1.0,"a_nm":100},"mass_rel":0.067,
            "packet":{"E_avg_eV":0.25,"k0_per_nm":0.6,"l0_nm":10}}"#;
        assert!(ScenarioConfig::from_json(text).is_err());
        let none = r#"{"potential":{"kind":"delta","W_eVnm":1.0,"a_nm":100},"mass_rel":0.067,
            "packet":{"l0_nm":10}}"#;
        assert!(ScenarioConfig::from_json(none).is_err());
    }

    #[test]
    fn rejects_unknown_and_unitless_keys() {
        let text = r#"{"potential":{"kind":"rectangular","V0":0.3,"a_nm":1,"b_nm":2},"mass_rel":0.067,
            "packet":{"k0_per_nm":0.6,"l0_nm":10}}"#;
        assert!(ScenarioConfig::from_json(text).is_err());
    }

    #[test]
    fn layer_stack_and_grid_override() {
        let text = r#"{"name":"stack","potential":{"kind":"piecewise","a_nm":200,
            "layers":[{"V_eV":0.2,"width_nm":2},{"V_eV":-0.1,"width_nm":3},{"V_eV":0.2,"width_nm":2}]},
            "mass_rel":0.067,"packet":{"k0_per_nm":0.6,"l0_nm":10},
            "grids":{"k_min_per_nm":0.1,"k_max_per_nm":1.2,"n_k":200,"x_min_nm":-100,"x_max_nm":400,"dx_nm":0.05}}"#;
        let sc = ScenarioConfig::from_json(text).unwrap().resolve().unwrap();
        assert!(sc.custom_grids);
        assert_eq!(sc.profile.grid.len(), 200);
        assert!((sc.potential.geometry().b - 207.0).abs() < 1e-12);
        let partial = text.replace(r#""n_k":200,"#, "");
        assert!(ScenarioConfig::from_json(&partial).unwrap().resolve().is_err());
    }
}
