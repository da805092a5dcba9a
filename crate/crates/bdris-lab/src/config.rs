//! Experiment configuration: a JSON document describing one batch run.

use bdris_core::channel::Geometry;
use bdris_core::units::{db_to_linear, dbm_to_watts};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

/// The canned experiment recipes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    /// Mean optimal SNR of each architecture versus the element count,
    /// Rayleigh cascade links, closed-form solvers.
    SisoScaling,
    /// Asymptotic SNR curves plus the active/passive crossover counts.
    SisoAsymptotic,
    /// Mean spectral efficiency versus total transmit power.
    MimoPowerSweep,
    /// Mean spectral efficiency versus the element count.
    MimoElementSweep,
    /// Run the numerical validation suite instead of a sweep.
    Validate,
}

impl ExperimentKind {
    pub fn label(&self) -> &'static str {
        match self {
            ExperimentKind::SisoScaling => "siso-scaling",
            ExperimentKind::SisoAsymptotic => "siso-asymptotic",
            ExperimentKind::MimoPowerSweep => "mimo-power-sweep",
            ExperimentKind::MimoElementSweep => "mimo-element-sweep",
            ExperimentKind::Validate => "validate",
        }
    }
}

/// Element interconnection of a BD architecture.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Connectivity {
    #[default]
    Full,
    Group(usize),
}

/// One architecture entry of the sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum ArchSpec {
    NoRis,
    ActiveD,
    PassiveD,
    ActiveBd {
        #[serde(default)]
        connectivity: Connectivity,
        #[serde(default)]
        reciprocal: bool,
    },
    PassiveBd {
        #[serde(default)]
        connectivity: Connectivity,
        #[serde(default)]
        reciprocal: bool,
    },
}

impl ArchSpec {
    /// Stable CSV label.
    pub fn label(&self) -> String {
        match self {
            ArchSpec::NoRis => "no-ris".into(),
            ArchSpec::ActiveD => "active-d".into(),
            ArchSpec::PassiveD => "passive-d".into(),
            ArchSpec::ActiveBd { connectivity, reciprocal } => compose_label("active-bd", connectivity, *reciprocal),
            ArchSpec::PassiveBd { connectivity, reciprocal } => compose_label("passive-bd", connectivity, *reciprocal),
        }
    }

    /// Group size for an element count, `None` for the no-RIS entry.
    pub fn group_size(&self, n_i: usize) -> Option<usize> {
        match self {
            ArchSpec::NoRis => None,
            ArchSpec::ActiveD | ArchSpec::PassiveD => Some(1),
            ArchSpec::ActiveBd { connectivity, .. } | ArchSpec::PassiveBd { connectivity, .. } => Some(match connectivity {
                Connectivity::Full => n_i,
                Connectivity::Group(group) => *group,
            }),
        }
    }

    pub fn reciprocal(&self) -> bool {
        match self {
            ArchSpec::ActiveBd { reciprocal, .. } | ArchSpec::PassiveBd { reciprocal, .. } => *reciprocal,
            _ => false,
        }
    }

    pub fn is_passive(&self) -> bool {
        matches!(self, ArchSpec::PassiveD | ArchSpec::PassiveBd { .. })
    }
}

fn compose_label(family: &str, connectivity: &Connectivity, reciprocal: bool) -> String {
    let conn = match connectivity {
        Connectivity::Full => "full".to_string(),
        Connectivity::Group(group) => format!("group{group}"),
    };
    let rec = if reciprocal { "re" } else { "nr" };
    format!("{family}-{conn}-{rec}")
}

/// Division of the total budget between the transmitter and the surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerSplit {
    pub transmit_fraction: f64,
    pub ris_fraction: f64,
}

impl Default for PowerSplit {
    fn default() -> Self {
        Self { transmit_fraction: 0.99, ris_fraction: 0.01 }
    }
}

/// What the sweep grid ranges over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepVariable {
    NI,
    PTotDbm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometryConfig {
    pub tx: [f64; 2],
    pub ris: [f64; 2],
    pub rx: [f64; 2],
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self { tx: [0.0, -60.0], ris: [300.0, 10.0], rx: [300.0, 0.0] }
    }
}

fn default_trials() -> u64 {
    50
}

fn default_noise_dbm() -> f64 {
    -90.0
}

fn default_out() -> PathBuf {
    PathBuf::from("results")
}

fn default_kappa() -> f64 {
    1.0
}

fn default_one() -> usize {
    1
}

/// One batch run, deserialized from JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub geometry: GeometryConfig,
    #[serde(default = "default_one")]
    pub n_t: usize,
    #[serde(default = "default_one")]
    pub n_r: usize,
    #[serde(default = "default_one")]
    pub n_s: usize,
    /// Rician factor for the MIMO experiments (SISO sweeps are Rayleigh).
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    pub architectures: Vec<ArchSpec>,
    #[serde(default)]
    pub power_split: PowerSplit,
    pub sweep: SweepSpec,
    /// Total power for element sweeps; `p_tot_watts` takes precedence.
    #[serde(default)]
    pub p_tot_dbm: Option<f64>,
    #[serde(default)]
    pub p_tot_watts: Option<f64>,
    /// Element count for power sweeps.
    #[serde(default)]
    pub n_i: Option<usize>,
    #[serde(default = "default_noise_dbm")]
    pub noise_dbm: f64,
    /// Mean cascade link gains for the SISO sweeps (geometry is not used
    /// there); both links default to -70 dB.
    #[serde(default)]
    pub zeta_ri_db: Option<f64>,
    #[serde(default)]
    pub zeta_it_db: Option<f64>,
    /// WMMSE stopping rule overrides (defaults: 1e-5, 200).
    #[serde(default)]
    pub wmmse_tol: Option<f64>,
    #[serde(default)]
    pub wmmse_max_iters: Option<usize>,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
}

/// Errors found while parsing or checking a configuration.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| ConfigError(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.sweep.values.is_empty() && self.experiment != ExperimentKind::Validate {
            return Err(ConfigError("sweep grid must be non-empty".into()));
        }
        if self.trials == 0 {
            return Err(ConfigError("trials must be >= 1".into()));
        }
        let split_sum = self.power_split.transmit_fraction + self.power_split.ris_fraction;
        if (split_sum - 1.0).abs() > 1e-9 {
            return Err(ConfigError(format!("power split fractions must sum to 1, got {split_sum}")));
        }
        if self.architectures.is_empty() && !matches!(self.experiment, ExperimentKind::Validate) {
            return Err(ConfigError("at least one architecture is required".into()));
        }
        match self.experiment {
            ExperimentKind::MimoPowerSweep => {
                if self.sweep.variable != SweepVariable::PTotDbm {
                    return Err(ConfigError("mimo-power-sweep requires sweep.variable = p-tot-dbm".into()));
                }
                if self.n_i.is_none() {
                    return Err(ConfigError("mimo-power-sweep requires a fixed n_i".into()));
                }
            }
            ExperimentKind::MimoElementSweep | ExperimentKind::SisoScaling => {
                if self.sweep.variable != SweepVariable::NI {
                    return Err(ConfigError("element sweeps require sweep.variable = n-i".into()));
                }
                if self.experiment == ExperimentKind::MimoElementSweep && self.p_tot().is_none() {
                    return Err(ConfigError("mimo-element-sweep requires p_tot_dbm or p_tot_watts".into()));
                }
            }
            _ => {}
        }
        if matches!(self.experiment, ExperimentKind::SisoScaling | ExperimentKind::SisoAsymptotic) {
            if self.architectures.iter().any(|a| matches!(a, ArchSpec::NoRis)) {
                return Err(ConfigError("no-ris is not a SISO sweep architecture".into()));
            }
            if self.p_tot().is_none() {
                return Err(ConfigError("SISO experiments require p_tot_dbm or p_tot_watts".into()));
            }
        }
        for a in &self.architectures {
            if let Some(0) = a.group_size(usize::MAX) {
                return Err(ConfigError(format!("group size must be positive in {}", a.label())));
            }
        }
        self.geometry()?;
        Ok(())
    }

    pub fn geometry(&self) -> Result<Geometry, ConfigError> {
        Geometry::new(self.geometry.tx, self.geometry.ris, self.geometry.rx)
            .map_err(|e| ConfigError(e.to_string()))
    }

    /// Total power budget in watts.
    pub fn p_tot(&self) -> Option<f64> {
        self.p_tot_watts.or_else(|| self.p_tot_dbm.map(dbm_to_watts))
    }

    pub fn noise_watts(&self) -> f64 {
        dbm_to_watts(self.noise_dbm)
    }

    pub fn zeta_ri_sq(&self) -> f64 {
        db_to_linear(self.zeta_ri_db.unwrap_or(-70.0))
    }

    pub fn zeta_it_sq(&self) -> f64 {
        db_to_linear(self.zeta_it_db.unwrap_or(-70.0))
    }
}
