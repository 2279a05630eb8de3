use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{self, ChannelRealization, PowerDelayProfile};
use crate::error::{invalid, Error, Result};
use crate::modem::OfdmConfig;
use crate::psi_opt::ObjectiveKind;

/// Guard construction, or "optimized" for a ψ chosen per channel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum SchemeChoice {
    Cyclic,
    ZeroPad,
    /// Fixed ψ = e^{jα}.
    Generalized { alpha: f64 },
    Optimized,
}

impl std::str::FromStr for SchemeChoice {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cyclic" | "cp" => Ok(Self::Cyclic),
            "zero-pad" | "zp" => Ok(Self::ZeroPad),
            "optimized" => Ok(Self::Optimized),
            _ => match s.strip_prefix("generalized:") {
                Some(a) => a
                    .parse()
                    .map(|alpha| Self::Generalized { alpha })
                    .map_err(|_| invalid(format!("bad alpha in {s:?}"))),
                None => Err(invalid(format!(
                    "unknown scheme {s:?}; expected cyclic, zero-pad, optimized or generalized:<alpha>"
                ))),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ChannelModel {
    /// The same taps on every trial, `[re, im]` pairs.
    Fixed { taps: Vec<[f64; 2]> },
    /// Rayleigh taps drawn per trial. Exactly one of `preset`, `file` or an
    /// inline `profile` must be given; loading a config resolves the first
    /// two into `profile`.
    Rayleigh {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        preset: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        file: Option<PathBuf>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        profile: Option<PowerDelayProfile>,
    },
}

impl ChannelModel {
    pub fn fixed(taps: &[Complex64]) -> Self {
        ChannelModel::Fixed {
            taps: taps.iter().map(|t| [t.re, t.im]).collect(),
        }
    }

    pub fn rayleigh_preset(name: &str) -> Result<Self> {
        Ok(ChannelModel::Rayleigh {
            preset: Some(name.to_owned()),
            file: None,
            profile: Some(PowerDelayProfile::preset(name)?),
        })
    }

    /// Loads the profile named by `preset` or `file` (relative to `base`).
    pub fn resolve(&mut self, base: Option<&Path>) -> Result<()> {
        if let ChannelModel::Rayleigh {
            preset,
            file,
            profile,
        } = self
        {
            let given = [preset.is_some(), file.is_some()].iter().filter(|b| **b).count();
            if given > 1 {
                return Err(invalid("rayleigh channel takes either preset or file, not both"));
            }
            if let Some(name) = preset {
                *profile = Some(PowerDelayProfile::preset(name)?);
            } else if let Some(f) = file {
                let path = match base {
                    Some(dir) if f.is_relative() => dir.join(&f),
                    _ => f.clone(),
                };
                *profile = Some(PowerDelayProfile::from_file(&path)?);
            }
            if profile.is_none() {
                return Err(invalid("rayleigh channel needs a preset, file or profile"));
            }
        }
        Ok(())
    }
}

/// How the receiver learns the channel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum Estimation {
    Perfect,
    /// Full pilot symbol at the start of every slot.
    Block,
    /// Comb pilots in every symbol.
    Comb {
        spacing: usize,
        #[serde(default = "unit_pilot")]
        pilot_value: Complex64,
    },
}

fn unit_pilot() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mobility {
    pub speed_kmh: f64,
    #[serde(default = "default_carrier")]
    pub carrier_hz: f64,
    /// Overrides the value derived from speed and carrier.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub doppler_hz: Option<f64>,
}

fn default_carrier() -> f64 {
    channel::DEFAULT_CARRIER_HZ
}

impl Mobility {
    pub fn doppler(&self) -> f64 {
        self.doppler_hz
            .unwrap_or_else(|| channel::doppler_hz(self.speed_kmh, self.carrier_hz))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StopRule {
    /// Stop a point once this many bit errors are seen...
    #[serde(default = "default_min_errors")]
    pub min_errors: u64,
    /// ...and at least this many trials have run.
    #[serde(default)]
    pub min_trials: u64,
    /// Hard cap; defaults to the trial count of 10⁷ bits.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_trials: Option<u64>,
}

fn default_min_errors() -> u64 {
    200
}

impl Default for StopRule {
    fn default() -> Self {
        Self {
            min_errors: default_min_errors(),
            min_trials: 0,
            max_trials: None,
        }
    }
}

/// A full Monte Carlo experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    #[serde(default)]
    pub name: String,
    pub ofdm: OfdmConfig,
    pub scheme: SchemeChoice,
    pub channel: ChannelModel,
    pub ebno_grid_db: Vec<f64>,
    #[serde(default = "default_objective")]
    pub objective: ObjectiveKind,
    #[serde(default = "default_tol")]
    pub search_tol: f64,
    #[serde(default = "default_estimation")]
    pub estimation: Estimation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mobility: Option<Mobility>,
    #[serde(default = "default_slot")]
    pub symbols_per_slot: usize,
    #[serde(default = "default_awgn")]
    pub awgn: bool,
    #[serde(default)]
    pub stop: StopRule,
    #[serde(default)]
    pub seed: u64,
}

fn default_objective() -> ObjectiveKind {
    ObjectiveKind::MinPe
}

fn default_tol() -> f64 {
    1e-3
}

fn default_estimation() -> Estimation {
    Estimation::Perfect
}

fn default_slot() -> usize {
    7
}

fn default_awgn() -> bool {
    true
}

impl SimConfig {
    pub fn from_toml_str(text: &str, base: Option<&Path>) -> Result<Self> {
        let mut cfg: SimConfig = toml::from_str(text).map_err(|e| Error::Parse {
            path: base.map(Path::to_owned).unwrap_or_default(),
            message: e.to_string(),
        })?;
        cfg.channel.resolve(base)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        let mut cfg: SimConfig = toml::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_owned(),
            message: e.to_string(),
        })?;
        cfg.channel.resolve(path.parent())?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.ofdm.validate()?;
        if self.ebno_grid_db.is_empty() {
            return Err(invalid("Eb/N0 grid is empty"));
        }
        if self.ebno_grid_db.iter().any(|v| !v.is_finite())
            || self.ebno_grid_db.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(invalid("Eb/N0 grid must be finite and strictly increasing"));
        }
        if self.stop.min_errors == 0 {
            return Err(invalid("min_errors must be at least 1"));
        }
        if self.stop.max_trials == Some(0) {
            return Err(invalid("max_trials must be at least 1"));
        }
        if !(self.search_tol > 0.0) {
            return Err(invalid("search tolerance must be positive"));
        }
        if self.symbols_per_slot == 0 {
            return Err(invalid("symbols_per_slot must be at least 1"));
        }
        match self.estimation {
            Estimation::Block if self.symbols_per_slot < 2 => {
                return Err(invalid("block estimation needs at least 2 symbols per slot"));
            }
            Estimation::Comb { .. } => self.pilot_plan().expect("comb").validate(self.ofdm.n)?,
            _ => {}
        }
        if self.scheme == SchemeChoice::ZeroPad && self.estimation != Estimation::Perfect {
            return Err(invalid("zero-pad scheme supports perfect CSI only"));
        }
        if let Some(m) = self.mobility {
            if !(m.doppler() >= 0.0) {
                return Err(invalid("Doppler frequency must be >= 0"));
            }
        }
        let span = match &self.channel {
            ChannelModel::Fixed { taps } => {
                ChannelRealization::new(taps.iter().map(|t| Complex64::new(t[0], t[1])).collect())?;
                if self.mobility.is_some() {
                    return Err(invalid("mobility needs a rayleigh channel"));
                }
                taps.len()
            }
            ChannelModel::Rayleigh { profile, .. } => profile
                .as_ref()
                .ok_or_else(|| invalid("rayleigh channel profile not resolved"))?
                .span(),
        };
        if span > self.ofdm.k + 1 {
            return Err(invalid(format!(
                "channel spans {span} taps but the guard only covers {}",
                self.ofdm.k + 1
            )));
        }
        Ok(())
    }

    pub(crate) fn pilot_plan(&self) -> Option<crate::chanest::PilotPlan> {
        use crate::chanest::PilotPlan;
        match self.estimation {
            Estimation::Perfect => None,
            Estimation::Block => Some(PilotPlan::Block {
                symbols_per_slot: self.symbols_per_slot,
            }),
            Estimation::Comb {
                spacing,
                pilot_value,
            } => Some(PilotPlan::Comb {
                spacing,
                pilot_value,
            }),
        }
    }

    /// Named experiment presets: `example1`, `example2-tu`, `example2-bu`.
    pub fn preset(name: &str) -> Result<Self> {
        let grid = |lo: i32, hi: i32, step: i32| -> Vec<f64> {
            (lo..=hi).step_by(step as usize).map(f64::from).collect()
        };
        match name {
            "example1" => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                Ok(SimConfig {
                    name: name.into(),
                    ofdm: OfdmConfig::new(64, 16, 4)?,
                    scheme: SchemeChoice::Optimized,
                    channel: ChannelModel::Fixed {
                        taps: vec![[s, 0.0], [s, 0.0]],
                    },
                    ebno_grid_db: grid(0, 44, 2),
                    objective: ObjectiveKind::MinPe,
                    search_tol: 1e-3,
                    estimation: Estimation::Perfect,
                    mobility: None,
                    symbols_per_slot: 7,
                    awgn: true,
                    stop: StopRule::default(),
                    seed: 1,
                })
            }
            "example2-tu" | "example2-bu" => {
                let profile = if name.ends_with("tu") { "TU12" } else { "BU12" };
                Ok(SimConfig {
                    name: name.into(),
                    ofdm: OfdmConfig::new(512, 64, 4)?,
                    scheme: SchemeChoice::Optimized,
                    channel: ChannelModel::rayleigh_preset(profile)?,
                    ebno_grid_db: grid(0, 40, 2),
                    objective: ObjectiveKind::MinPe,
                    search_tol: 1e-3,
                    estimation: Estimation::Perfect,
                    mobility: None,
                    symbols_per_slot: 7,
                    awgn: true,
                    stop: StopRule::default(),
                    seed: 1,
                })
            }
            _ => Err(invalid(format!(
                "unknown preset {name:?}; expected example1, example2-tu or example2-bu"
            ))),
        }
    }
}
