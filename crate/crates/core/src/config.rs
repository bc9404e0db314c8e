//! Run configuration: one JSON document per experiment.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ProblemInstance, StatisticsKind};
use crate::rates::DynamicsParams;

pub const DEFAULT_SEED: u64 = 42;

fn default_seed() -> u64 {
    DEFAULT_SEED
}

fn default_alpha() -> f64 {
    1.0
}

fn default_xi() -> f64 {
    1e-3
}

fn default_n_slices() -> usize {
    crate::kmc::DEFAULT_SCHEDULE_SLICES
}

/// Where the coupling matrix comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum InstanceSpec {
    Inline {
        coupling: Vec<Vec<f64>>,
        n: u32,
        lambda: f64,
    },
    TwoLevel {
        n: u32,
        gap: f64,
    },
    Complete {
        m: usize,
        coupling: f64,
        n: u32,
        lambda: f64,
    },
    GraphFile {
        path: String,
        n: u32,
        #[serde(default)]
        lambda_bias: f64,
    },
}

impl InstanceSpec {
    pub fn build(&self) -> Result<ProblemInstance> {
        match self {
            Self::Inline {
                coupling,
                n,
                lambda,
            } => ProblemInstance::new(coupling.clone(), *n, *lambda),
            Self::TwoLevel { n, gap } => ProblemInstance::two_level(*n, *gap),
            Self::Complete {
                m,
                coupling,
                n,
                lambda,
            } => ProblemInstance::complete_graph(*m, *coupling, *n, *lambda),
            Self::GraphFile {
                path,
                n,
                lambda_bias,
            } => {
                let text = std::fs::read_to_string(path)?;
                let graph = crate::graph::parse_edge_list(&text)?;
                crate::graph::maxcut_instance(&graph, *n, *lambda_bias)
            }
        }
    }

    /// Same problem with a different boson count (for N sweeps).
    pub fn build_with_n(&self, n: u32) -> Result<ProblemInstance> {
        let mut spec = self.clone();
        match &mut spec {
            Self::Inline { n: slot, .. }
            | Self::TwoLevel { n: slot, .. }
            | Self::Complete { n: slot, .. }
            | Self::GraphFile { n: slot, .. } => *slot = n,
        }
        spec.build()
    }
}

/// Dynamics parameters with the usual defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsSpec {
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_xi")]
    pub xi: f64,
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default)]
    pub delta_k_max: Option<u32>,
}

impl Default for ParamsSpec {
    fn default() -> Self {
        Self {
            alpha: default_alpha(),
            xi: default_xi(),
            beta: None,
            delta_k_max: None,
        }
    }
}

impl ParamsSpec {
    pub fn to_params(&self, beta: f64) -> Result<DynamicsParams> {
        let mut p = DynamicsParams::new(self.alpha, self.xi, beta)?;
        if let Some(dkm) = self.delta_k_max {
            p = p.with_delta_k_max(dkm)?;
        }
        Ok(p)
    }

    pub fn required_beta(&self) -> Result<f64> {
        self.beta
            .ok_or_else(|| Error::Config("this experiment needs params.beta".into()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Linear,
    Geometric,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub points: usize,
    #[serde(default)]
    pub spacing: Spacing,
}

impl GridSpec {
    pub fn build(&self) -> Result<Vec<f64>> {
        if self.points < 2 || !(self.max > self.min) {
            return Err(Error::Config(
                "grid needs points >= 2 and max > min".into(),
            ));
        }
        let n = self.points;
        Ok(match self.spacing {
            Spacing::Linear => (0..n)
                .map(|i| self.min + (self.max - self.min) * i as f64 / (n - 1) as f64)
                .collect(),
            Spacing::Geometric => {
                if !(self.min > 0.0) {
                    return Err(Error::Config("geometric grid needs min > 0".into()));
                }
                let ratio = (self.max / self.min).ln();
                (0..n)
                    .map(|i| self.min * (ratio * i as f64 / (n - 1) as f64).exp())
                    .collect()
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumConfig {
    pub instance: InstanceSpec,
    pub n_list: Vec<u32>,
    /// Temperature grid in units of `kT / (J N)`.
    pub kt_over_jn: GridSpec,
    /// Coupling magnitude used for the temperature rescaling.
    pub j_scale: f64,
    #[serde(default = "default_kinds")]
    pub kinds: Vec<StatisticsKind>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<String>,
}

fn default_kinds() -> Vec<StatisticsKind> {
    vec![StatisticsKind::Bosonic, StatisticsKind::Distinguishable]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    Half,
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdeConfig {
    pub instance: InstanceSpec,
    pub params: ParamsSpec,
    pub init: InitKind,
    pub t_grid: GridSpec,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KmcConfig {
    pub instance: InstanceSpec,
    pub params: ParamsSpec,
    /// Constant-temperature target: either `params.beta` or an equilibrium
    /// error probability to solve the temperature from.
    #[serde(default)]
    pub error_target: Option<f64>,
    pub init: InitKind,
    pub t_grid: GridSpec,
    pub n_traj: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnealConfig {
    pub instance: InstanceSpec,
    #[serde(default)]
    pub params: ParamsSpec,
    pub n_list: Vec<u32>,
    pub tau0_list: Vec<f64>,
    pub n_traj: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuantumInit {
    MaximallyMixed,
    PureState { occupations: Vec<u32> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantumConfig {
    pub instance: InstanceSpec,
    pub gamma_feedback: f64,
    pub eta: f64,
    pub gamma_meas: f64,
    pub alpha: f64,
    pub init: QuantumInit,
    pub t_grid: GridSpec,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxcutConfig {
    pub graph: String,
    #[serde(default = "default_maxcut_n")]
    pub n: u32,
    #[serde(default)]
    pub params: ParamsSpec,
    #[serde(default = "default_maxcut_tau0")]
    pub tau0: f64,
    /// Starting temperature; defaults to a hot scale set by the couplings.
    #[serde(default)]
    pub t0: Option<f64>,
    #[serde(default = "default_maxcut_runs")]
    pub n_runs: usize,
    #[serde(default = "default_n_slices")]
    pub n_slices: usize,
    #[serde(default)]
    pub oracle: bool,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<String>,
}

fn default_maxcut_n() -> u32 {
    4
}

fn default_maxcut_tau0() -> f64 {
    10.0
}

fn default_maxcut_runs() -> usize {
    20
}

/// Tagged union of all experiment configurations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "snake_case")]
pub enum RunConfig {
    Equilibrium(EquilibriumConfig),
    Ode(OdeConfig),
    Kmc(KmcConfig),
    Anneal(AnnealConfig),
    Quantum(QuantumConfig),
    Maxcut(MaxcutConfig),
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn experiment_name(&self) -> &'static str {
        match self {
            Self::Equilibrium(_) => "equilibrium",
            Self::Ode(_) => "ode",
            Self::Kmc(_) => "kmc",
            Self::Anneal(_) => "anneal",
            Self::Quantum(_) => "quantum",
            Self::Maxcut(_) => "maxcut",
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            Self::Equilibrium(c) => c.seed,
            Self::Ode(c) => c.seed,
            Self::Kmc(c) => c.seed,
            Self::Anneal(c) => c.seed,
            Self::Quantum(c) => c.seed,
            Self::Maxcut(c) => c.seed,
        }
    }

    pub fn set_seed(&mut self, seed: u64) {
        match self {
            Self::Equilibrium(c) => c.seed = seed,
            Self::Ode(c) => c.seed = seed,
            Self::Kmc(c) => c.seed = seed,
            Self::Anneal(c) => c.seed = seed,
            Self::Quantum(c) => c.seed = seed,
            Self::Maxcut(c) => c.seed = seed,
        }
    }

    pub fn out(&self) -> Option<&str> {
        match self {
            Self::Equilibrium(c) => c.out.as_deref(),
            Self::Ode(c) => c.out.as_deref(),
            Self::Kmc(c) => c.out.as_deref(),
            Self::Anneal(c) => c.out.as_deref(),
            Self::Quantum(c) => c.out.as_deref(),
            Self::Maxcut(c) => c.out.as_deref(),
        }
    }

    pub fn set_out(&mut self, out: String) {
        match self {
            Self::Equilibrium(c) => c.out = Some(out),
            Self::Ode(c) => c.out = Some(out),
            Self::Kmc(c) => c.out = Some(out),
            Self::Anneal(c) => c.out = Some(out),
            Self::Quantum(c) => c.out = Some(out),
            Self::Maxcut(c) => c.out = Some(out),
        }
    }
}
