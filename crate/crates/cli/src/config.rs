//! TOML run configuration. Unknown keys are rejected everywhere so a typo
//! fails loudly instead of silently falling back to a default.

use std::path::Path;

use serde::Deserialize;

use pulseopt_core::dynamics::IntegratorConfig;
use pulseopt_core::fitness::FitnessSpec;
use pulseopt_core::model::{make_grid, TimeGrid, TwoLevelSystem};
use pulseopt_core::pulses::{
    constant_pulse, n_pi_soliton, soliton_envelope, square_pulse_matching, EnergyBudget, Envelope,
};

use crate::error::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemCfg,
    pub grid: GridCfg,
    pub pulse: PulseCfg,
    #[serde(default)]
    pub fitness: FitnessCfg,
    #[serde(default)]
    pub integrator: IntegratorCfg,
    #[serde(default)]
    pub optimizer: OptimizerCfg,
    #[serde(default)]
    pub output: OutputCfg,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemCfg {
    pub mu: f64,
    #[serde(default)]
    pub gamma1: f64,
    #[serde(default)]
    pub gamma2: f64,
    #[serde(default = "one")]
    pub omega: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridCfg {
    pub t0: f64,
    pub t1: f64,
    pub n: usize,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum PulseCfg {
    /// No field at all.
    Zero,
    /// Optimal sech pulse for the energy budget.
    Soliton { e0: f64 },
    /// Higher-order sech pulse of total area `order`*pi.
    Npi { order: u32 },
    /// Square pulse matching a given total area at a given energy.
    Square { area: f64, e0: f64 },
    /// Constant pulse that inverts the system exactly at `t_control`.
    Constant { t_control: f64 },
    /// Explicit samples on the run grid.
    Sampled { values: Vec<f64> },
}

#[derive(Debug, Default, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum FitnessCfg {
    #[default]
    Integrated,
    Terminal {
        t_control: f64,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorCfg {
    pub dt_max: Option<f64>,
    #[serde(default = "one_u32")]
    pub substeps: u32,
}

impl Default for IntegratorCfg {
    fn default() -> Self {
        IntegratorCfg { dt_max: None, substeps: 1 }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerCfg {
    /// Energy budget of the optimization sphere.
    pub e0: Option<f64>,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_tol_grad")]
    pub tol_grad: f64,
    #[serde(default = "one")]
    pub step0: f64,
    #[serde(default = "default_armijo")]
    pub armijo: f64,
    #[serde(default)]
    pub seed: u64,
    /// Exit with the non-convergence code when the run stops above tol_grad.
    #[serde(default)]
    pub require_convergence: bool,
    #[serde(default = "default_trials")]
    pub n_trials: usize,
    #[serde(default = "default_rel_amplitude")]
    pub rel_amplitude: f64,
}

impl Default for OptimizerCfg {
    fn default() -> Self {
        OptimizerCfg {
            e0: None,
            max_iters: default_max_iters(),
            tol_grad: default_tol_grad(),
            step0: 1.0,
            armijo: default_armijo(),
            seed: 0,
            require_convergence: false,
            n_trials: default_trials(),
            rel_amplitude: default_rel_amplitude(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputCfg {
    #[serde(default = "default_prefix")]
    pub prefix: String,
}

impl Default for OutputCfg {
    fn default() -> Self {
        OutputCfg { prefix: default_prefix() }
    }
}

fn one() -> f64 {
    1.0
}
fn one_u32() -> u32 {
    1
}
fn default_max_iters() -> usize {
    2000
}
fn default_tol_grad() -> f64 {
    1e-6
}
fn default_armijo() -> f64 {
    1e-4
}
fn default_trials() -> usize {
    100
}
fn default_rel_amplitude() -> f64 {
    1e-4
}
fn default_prefix() -> String {
    "run".into()
}

impl RunConfig {
    /// Parse and hash a config file. The hash goes into the provenance
    /// stanza of every output written from this config.
    pub fn load(path: &Path) -> Result<(Self, String), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let config: RunConfig =
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{e}")))?;
        Ok((config, crate::output::sha256_hex(text.as_bytes())))
    }

    pub fn system(&self) -> Result<TwoLevelSystem, CliError> {
        Ok(TwoLevelSystem::new(
            self.system.mu,
            self.system.gamma1,
            self.system.gamma2,
            self.system.omega,
        )?)
    }

    pub fn time_grid(&self) -> Result<TimeGrid, CliError> {
        Ok(make_grid(self.grid.t0, self.grid.t1, self.grid.n)?)
    }

    pub fn envelope(&self, sys: &TwoLevelSystem, grid: &TimeGrid) -> Result<Envelope, CliError> {
        Ok(match &self.pulse {
            PulseCfg::Zero => Envelope::Sampled { grid: *grid, values: vec![0.0; grid.len()] },
            PulseCfg::Soliton { e0 } => soliton_envelope(sys, &EnergyBudget::new(*e0)?)?,
            PulseCfg::Npi { order } => n_pi_soliton(sys, *order)?.0,
            PulseCfg::Square { area, e0 } => {
                square_pulse_matching(sys, *area, &EnergyBudget::new(*e0)?)?
            }
            PulseCfg::Constant { t_control } => constant_pulse(sys, *t_control)?.0,
            PulseCfg::Sampled { values } => {
                if values.len() != grid.len() {
                    return Err(CliError::Config(format!(
                        "pulse.values has {} entries but the grid has {} nodes",
                        values.len(),
                        grid.len()
                    )));
                }
                Envelope::Sampled { grid: *grid, values: values.clone() }
            }
        })
    }

    pub fn fitness_spec(&self) -> FitnessSpec {
        match self.fitness {
            FitnessCfg::Integrated => FitnessSpec::IntegratedUpper,
            FitnessCfg::Terminal { t_control } => FitnessSpec::TerminalUpper { t_control },
        }
    }

    pub fn integrator(&self) -> Result<IntegratorConfig, CliError> {
        Ok(IntegratorConfig::new(
            self.integrator.dt_max.unwrap_or(f64::INFINITY),
            self.integrator.substeps,
        )?)
    }
}
