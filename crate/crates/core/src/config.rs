//! Experiment configuration (JSON).

use serde::{Deserialize, Serialize};

use crate::channel::{JumpEnsemble, JumpSet, SamplerModel};
use crate::error::{Error, Result};
use crate::hamiltonians::{build_random_local, build_tfim, eigensystem, EigenSystem, HermitianOperator};
use crate::qpe::{self, energy_grid, EnergyGrid};

pub const VERSION: &str = concat!("qmetro ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Tfim {
        #[serde(default = "one")]
        coupling: f64,
        #[serde(default = "half")]
        field: f64,
    },
    RandomLocal {
        #[serde(default = "two")]
        locality: usize,
        #[serde(default)]
        seed: u64,
    },
}

fn one() -> f64 {
    1.0
}

fn half() -> f64 {
    0.5
}

fn two() -> usize {
    2
}

impl Default for ModelSpec {
    fn default() -> Self {
        ModelSpec::Tfim { coupling: 1.0, field: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Entrywise agreement of exact identities.
    pub identity: f64,
    /// Reference vs fast channel, and Lindblad equivalence.
    pub cross_build: f64,
    /// Lower limit on Choi eigenvalues.
    pub choi: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { identity: 1e-10, cross_build: 1e-9, choi: 1e-9 }
    }
}

/// Axes of the `sweep` grid. Empty axes fall back to the scalar setting.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepAxes {
    pub r: Vec<usize>,
    pub g: Vec<usize>,
    pub tau: Vec<f64>,
    pub beta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n: usize,
    pub model: ModelSpec,
    pub beta: f64,
    pub r: usize,
    pub g: usize,
    pub tau: f64,
    /// Iterations per chain.
    pub k: usize,
    pub chains: usize,
    pub jumps: JumpSet,
    pub seed: u64,
    /// Mixing-time accuracy.
    pub epsilon: f64,
    pub tolerances: Tolerances,
    pub sweep: SweepAxes,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n: 2,
            model: ModelSpec::default(),
            beta: 1.0,
            r: 3,
            g: 3,
            tau: 0.1,
            k: 50,
            chains: 1000,
            jumps: JumpSet::Pauli,
            seed: 1,
            epsilon: 0.05,
            tolerances: Tolerances::default(),
            sweep: SweepAxes::default(),
        }
    }
}

/// Everything derived from a config that most subcommands need.
pub struct Setup {
    pub hamiltonian: HermitianOperator,
    pub es: EigenSystem,
    pub grid: EnergyGrid,
    pub model: SamplerModel,
    pub ensemble: JumpEnsemble,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        qpe::check_odd(self.g)?;
        for &g in &self.sweep.g {
            qpe::check_odd(g)?;
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::Configuration(format!("beta must be finite and >= 0, got {}", self.beta)));
        }
        if !(0.0..=1.0).contains(&self.tau) || self.sweep.tau.iter().any(|t| !(0.0..=1.0).contains(t)) {
            return Err(Error::Configuration("tau must lie in [0, 1]".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::Configuration(format!("epsilon must lie in (0, 1), got {}", self.epsilon)));
        }
        if self.r == 0 || self.k == 0 || self.chains == 0 {
            return Err(Error::Configuration("r, k and chains must be positive".into()));
        }
        Ok(())
    }

    pub fn hamiltonian(&self) -> Result<HermitianOperator> {
        match self.model {
            ModelSpec::Tfim { coupling, field } => build_tfim(self.n, coupling, field),
            ModelSpec::RandomLocal { locality, seed } => build_random_local(self.n, locality, seed),
        }
    }

    /// Warnings about settings outside the regime the bounds assume.
    pub fn warnings(&self, es: &EigenSystem) -> Vec<String> {
        let mut out = Vec::new();
        if self.beta > 0.0 {
            let needed = 1.0 + es.kappa.log2() + self.beta.log2();
            if (self.r as f64) < needed {
                out.push(format!("r = {} is below 1 + log2(kappa) + log2(beta) = {needed:.3}", self.r));
            }
        }
        out
    }

    pub fn setup_with(&self, r: usize, g: usize, beta: f64) -> Result<Setup> {
        let hamiltonian = self.hamiltonian()?;
        let es = eigensystem(&hamiltonian)?;
        let grid = energy_grid(r, es.kappa)?;
        let model = SamplerModel::new(&es, &grid, g, beta)?;
        let ensemble = JumpEnsemble::named(self.jumps, self.n)?;
        Ok(Setup { hamiltonian, es, grid, model, ensemble })
    }

    pub fn setup(&self) -> Result<Setup> {
        self.setup_with(self.r, self.g, self.beta)
    }
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig =
        serde_json::from_str(text).map_err(|e| Error::Configuration(format!("invalid config: {e}")))?;
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = parse_config(r#"{"n": 2}"#).unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert_eq!((cfg.r, cfg.g, cfg.tau, cfg.beta), (3, 3, 0.1, 1.0));
        assert_eq!(cfg.model, ModelSpec::Tfim { coupling: 1.0, field: 0.5 });
    }

    #[test]
    fn even_g_is_rejected() {
        let err = parse_config(r#"{"g": 4}"#).unwrap_err();
        assert!(matches!(err, Error::Configuration(_)));
        assert!(err.to_string().contains("odd"), "{err}");
        assert!(parse_config(r#"{"sweep": {"g": [3, 6]}}"#).is_err());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(parse_config(r#"{"gg": 3}"#).is_err());
    }

    #[test]
    fn round_trip() {
        let cfg = ExperimentConfig {
            model: ModelSpec::RandomLocal { locality: 2, seed: 9 },
            jumps: JumpSet::ZOnly,
            sweep: SweepAxes { r: vec![2, 3], g: vec![1], tau: vec![0.1], beta: vec![0.5, 2.0] },
            ..Default::default()
        };
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        assert_eq!(parse_config(&text).unwrap(), cfg);
    }

    #[test]
    fn low_precision_warns() {
        let cfg = ExperimentConfig { r: 2, beta: 2.0, ..Default::default() };
        let s = cfg.setup().unwrap();
        assert_eq!(cfg.warnings(&s.es).len(), 1);
        let cfg = ExperimentConfig { r: 8, ..Default::default() };
        assert!(cfg.warnings(&cfg.setup().unwrap().es).is_empty());
    }
}
