//! Experiment configuration file format.

use serde::Deserialize;

use rotsync::depth::{RuleKind, SelectionRule};
use rotsync::error::{Result, SyncError};
use rotsync::scenario::{CorruptionModel, GraphKind, ScenarioSpec};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n: usize,
    #[serde(rename = "D")]
    pub dim: usize,
    pub graph: GraphConfig,
    pub corruption: CorruptionConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub output_dir: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphConfig {
    Complete,
    ErdosRenyi { p: f64 },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorruptionConfig {
    pub model: String,
    #[serde(default)]
    pub alpha: f64,
    #[serde(default = "default_rho")]
    pub rho: f64,
    #[serde(default)]
    pub seed: u64,
    /// Cluster offset of the spurious fixture (radians).
    #[serde(default = "default_theta")]
    pub theta: f64,
}

fn default_rho() -> f64 {
    1.0
}

fn default_theta() -> f64 {
    std::f64::consts::FRAC_PI_4
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_algo")]
    pub algo: String,
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default)]
    pub rule: Option<String>,
    #[serde(default = "default_max_epochs")]
    pub max_epochs: usize,
    #[serde(default = "default_stop_tol")]
    pub stop_tol: f64,
    /// A sweep run counts as a success when its final delta is below this.
    #[serde(default = "default_success_tol")]
    pub success_tol: f64,
}

fn default_algo() -> String {
    "dds".into()
}

fn default_max_epochs() -> usize {
    2000
}

fn default_stop_tol() -> f64 {
    1e-12
}

fn default_success_tol() -> f64 {
    1e-6
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            algo: default_algo(),
            eta: None,
            beta: None,
            rule: None,
            max_epochs: default_max_epochs(),
            stop_tol: default_stop_tol(),
            success_tol: default_success_tol(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub alphas: Vec<f64>,
    pub seeds: Vec<u64>,
    /// Solvers to run; defaults to the single configured solver.
    #[serde(default)]
    pub algos: Option<Vec<String>>,
}

pub fn parse_rule(name: &str) -> Result<SelectionRule> {
    let kind = match name {
        "trimmed_mean" => RuleKind::TrimmedMean,
        "deepest" => RuleKind::DeepestCandidate,
        "random_interior" => RuleKind::RandomInterior,
        other => {
            return Err(SyncError::InvalidConfig(format!(
                "unknown selection rule '{other}' (expected trimmed_mean, deepest, or random_interior)"
            )))
        }
    };
    Ok(SelectionRule::new(kind, 500))
}

impl ExperimentConfig {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let config: ExperimentConfig = serde_json::from_str(&text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(SyncError::InvalidConfig(format!(
                "D must be at least 2, got {}",
                self.dim
            )));
        }
        let model = CorruptionModel::parse(&self.corruption.model)?;
        if !(0.0..0.5).contains(&self.corruption.alpha) {
            return Err(SyncError::InvalidConfig(format!(
                "alpha must be in [0, 1/2), got {}",
                self.corruption.alpha
            )));
        }
        if model == CorruptionModel::Spurious {
            if self.n % 2 != 0 {
                return Err(SyncError::InvalidConfig(
                    "the spurious model requires an even n".into(),
                ));
            }
            if self.dim != 2 {
                return Err(SyncError::InvalidConfig(
                    "the spurious model is defined on SO(2) only".into(),
                ));
            }
        }
        if let GraphConfig::ErdosRenyi { p } = self.graph {
            if !(p > 0.0 && p <= 1.0) {
                return Err(SyncError::InvalidConfig(format!(
                    "edge probability must be in (0, 1], got {p}"
                )));
            }
        }
        for algo in self.algo_list() {
            validate_algo(&algo, self.dim)?;
        }
        if let Some(rule) = &self.solver.rule {
            parse_rule(rule)?;
        }
        if let Some(sweep) = &self.sweep {
            if sweep.alphas.is_empty() || sweep.seeds.is_empty() {
                return Err(SyncError::InvalidConfig(
                    "sweep alpha and seed lists must be nonempty".into(),
                ));
            }
            for &a in &sweep.alphas {
                if !(0.0..0.5).contains(&a) {
                    return Err(SyncError::InvalidConfig(format!(
                        "sweep alpha must be in [0, 1/2), got {a}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn algo_list(&self) -> Vec<String> {
        self.sweep
            .as_ref()
            .and_then(|s| s.algos.clone())
            .unwrap_or_else(|| vec![self.solver.algo.clone()])
    }

    /// The deterministic scenario parameters for one (alpha, seed) cell.
    pub fn scenario_spec(&self, alpha: f64, seed: u64) -> Result<ScenarioSpec> {
        Ok(ScenarioSpec {
            n: self.n,
            dim: self.dim,
            graph: match self.graph {
                GraphConfig::Complete => GraphKind::Complete,
                GraphConfig::ErdosRenyi { p } => GraphKind::ErdosRenyi { p },
            },
            model: CorruptionModel::parse(&self.corruption.model)?,
            alpha,
            rho: self.corruption.rho,
            theta: self.corruption.theta,
            seed,
        })
    }
}

pub fn validate_algo(algo: &str, dim: usize) -> Result<()> {
    match algo {
        "dds" => Ok(()),
        "tas" | "l1mra" => {
            if dim != 2 {
                Err(SyncError::InvalidConfig(format!(
                    "solver '{algo}' requires D = 2, got D = {dim}"
                )))
            } else {
                Ok(())
            }
        }
        other => Err(SyncError::InvalidConfig(format!(
            "unknown solver '{other}' (expected dds, tas, or l1mra)"
        ))),
    }
}
