//! Run configuration: one JSON document describing the model, the prepared
//! state, the time grid, the sampling mode, and the analysis settings.
//! Unknown keys are rejected. Frequencies in configs are plain Hz; every
//! quantity is converted to angular units (rad/s) when the model is built.

use crate::dynamics::FrameConvention;
use crate::error::{Error, Result};
use crate::ion_chain::TrapConfig;
use crate::spectroscopy::WindowKind;
use serde::Deserialize;
use std::f64::consts::TAU;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    /// Transverse field in units of the largest coupling, B = b_over_j * max|J|.
    #[serde(default)]
    pub b_over_j: Option<f64>,
    /// Preparation rotation strength.
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub modes: Option<ModesConfig>,
    #[serde(default)]
    pub time: Option<TimeConfig>,
    #[serde(default)]
    pub sampling: SamplingConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default = "default_frame")]
    pub frame_convention: FrameConvention,
}

fn default_frame() -> FrameConvention {
    FrameConvention::Main
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    PowerLaw(PowerLawConfig),
    Trap(TrapModelConfig),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerLawConfig {
    pub n: usize,
    /// Nearest-neighbor coupling J_0 in Hz.
    pub j0_hz: f64,
    /// Power-law exponent; the string "inf" selects the nearest-neighbor
    /// limit (JSON numbers cannot express infinity).
    #[serde(deserialize_with = "deserialize_alpha")]
    pub alpha: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrapModelConfig {
    pub n_ions: usize,
    pub axial_freq_hz: f64,
    pub transverse_freq_hz: f64,
    /// One value for uniform illumination or one per ion.
    pub rabi_hz: RabiConfig,
    pub lamb_dicke_scale: f64,
    pub detuning_hz: f64,
    #[serde(default = "default_true")]
    pub scale_lamb_dicke: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum RabiConfig {
    Uniform(f64),
    PerIon(Vec<f64>),
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModesConfig {
    pub k: usize,
    #[serde(default)]
    pub k_prime: Option<usize>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    /// Final sample time in seconds; the grid is t_i = i * t_max / (n_samples - 1).
    pub t_max: f64,
    pub n_samples: usize,
}

#[derive(Debug, Clone, Copy, Deserialize, Default)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum SamplingConfig {
    #[default]
    Exact,
    Shots {
        shots: u64,
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    #[serde(default = "default_zero_pad")]
    pub zero_pad: usize,
    #[serde(default = "default_window")]
    pub window: WindowKind,
    /// Peak floor as a fraction of the spectrum maximum.
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    /// Minimum peak separation in Hz; when absent, two padded bins.
    #[serde(default)]
    pub min_sep_hz: Option<f64>,
}

fn default_zero_pad() -> usize {
    8
}

fn default_window() -> WindowKind {
    WindowKind::None
}

fn default_threshold() -> f64 {
    0.1
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            zero_pad: default_zero_pad(),
            window: default_window(),
            threshold: default_threshold(),
            min_sep_hz: None,
        }
    }
}

fn deserialize_alpha<'de, D>(deserializer: D) -> std::result::Result<f64, D::Error>
where
    D: serde::Deserializer<'de>,
{
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Number(f64),
        Text(String),
    }
    match Raw::deserialize(deserializer)? {
        Raw::Number(x) => Ok(x),
        Raw::Text(s) => match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" => Ok(f64::INFINITY),
            other => Err(serde::de::Error::custom(format!(
                "alpha must be a number or \"inf\", got \"{other}\""
            ))),
        },
    }
}

impl TrapModelConfig {
    /// Angular-unit trap parameters.
    pub fn to_trap(&self) -> Result<TrapConfig> {
        let rabi = match &self.rabi_hz {
            RabiConfig::Uniform(r) => vec![*r * TAU; self.n_ions],
            RabiConfig::PerIon(v) => {
                if v.len() != self.n_ions {
                    return Err(Error::invalid(format!(
                        "rabi_hz lists {} values for {} ions",
                        v.len(),
                        self.n_ions
                    )));
                }
                v.iter().map(|r| r * TAU).collect()
            }
        };
        let t = TrapConfig {
            n_ions: self.n_ions,
            axial_freq: self.axial_freq_hz * TAU,
            transverse_freq: self.transverse_freq_hz * TAU,
            rabi,
            lamb_dicke_scale: self.lamb_dicke_scale,
            detuning: self.detuning_hz * TAU,
            scale_lamb_dicke: self.scale_lamb_dicke,
        };
        t.validate()?;
        Ok(t)
    }
}

impl ModelConfig {
    pub fn n_spins(&self) -> usize {
        match self {
            ModelConfig::PowerLaw(p) => p.n,
            ModelConfig::Trap(t) => t.n_ions,
        }
    }
}

impl ExperimentConfig {
    /// Structural validation beyond what deserialization enforces.
    pub fn validate(&self) -> Result<()> {
        let n = self.model.n_spins();
        match &self.model {
            ModelConfig::PowerLaw(p) => {
                if p.n == 0 {
                    return Err(Error::invalid("model.power_law.n must be at least 1"));
                }
                if !(p.j0_hz > 0.0) || !p.j0_hz.is_finite() {
                    return Err(Error::invalid("model.power_law.j0_hz must be positive"));
                }
                if !(p.alpha > 0.0) {
                    return Err(Error::invalid("model.power_law.alpha must be positive"));
                }
            }
            ModelConfig::Trap(t) => {
                t.to_trap()?;
            }
        }
        if let Some(b) = self.b_over_j {
            if !b.is_finite() {
                return Err(Error::invalid("b_over_j must be finite"));
            }
        }
        if let Some(g) = self.gamma {
            if !g.is_finite() {
                return Err(Error::invalid("gamma must be finite"));
            }
        }
        if let Some(m) = &self.modes {
            if m.k == 0 || m.k > n {
                return Err(Error::invalid(format!("modes.k {} outside 1..={n}", m.k)));
            }
            if let Some(k2) = m.k_prime {
                if k2 == 0 || k2 > n {
                    return Err(Error::invalid(format!(
                        "modes.k_prime {k2} outside 1..={n}"
                    )));
                }
                if k2 == m.k {
                    return Err(Error::invalid("modes.k and modes.k_prime must differ"));
                }
            }
        }
        if let Some(t) = &self.time {
            if !(t.t_max > 0.0) || !t.t_max.is_finite() {
                return Err(Error::invalid("time.t_max must be positive"));
            }
            if t.n_samples < 8 {
                return Err(Error::invalid(format!(
                    "time.n_samples {} below the minimum of 8",
                    t.n_samples
                )));
            }
        }
        if let SamplingConfig::Shots { shots, .. } = self.sampling {
            if shots == 0 {
                return Err(Error::invalid("sampling.shots must be at least 1"));
            }
        }
        let a = &self.analysis;
        if a.zero_pad == 0 || a.zero_pad > 1024 {
            return Err(Error::invalid(format!(
                "analysis.zero_pad {} outside 1..=1024",
                a.zero_pad
            )));
        }
        if !(0.0..=1.0).contains(&a.threshold) {
            return Err(Error::invalid(format!(
                "analysis.threshold {} outside 0..=1",
                a.threshold
            )));
        }
        if let Some(sep) = a.min_sep_hz {
            if !(sep >= 0.0) || !sep.is_finite() {
                return Err(Error::invalid("analysis.min_sep_hz must be >= 0"));
            }
        }
        Ok(())
    }

    pub fn require_time(&self) -> Result<TimeConfig> {
        self.time
            .ok_or_else(|| Error::invalid("this run needs a \"time\" section"))
    }

    pub fn require_gamma(&self) -> Result<f64> {
        self.gamma
            .ok_or_else(|| Error::invalid("this run needs \"gamma\""))
    }

    pub fn require_b_over_j(&self) -> Result<f64> {
        self.b_over_j
            .ok_or_else(|| Error::invalid("this run needs \"b_over_j\""))
    }

    pub fn require_mode(&self) -> Result<usize> {
        Ok(self
            .modes
            .as_ref()
            .ok_or_else(|| Error::invalid("this run needs a \"modes\" section with \"k\""))?
            .k)
    }

    pub fn require_mode_pair(&self) -> Result<(usize, usize)> {
        let m = self
            .modes
            .as_ref()
            .ok_or_else(|| Error::invalid("this run needs \"modes\" with \"k\" and \"k_prime\""))?;
        let k2 = m
            .k_prime
            .ok_or_else(|| Error::invalid("this run needs \"modes.k_prime\""))?;
        Ok((m.k, k2))
    }
}
