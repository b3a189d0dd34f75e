//! TOML experiment configuration: a mandatory top-level seed, a system
//! declaration, and an experiment declaration. Rationals are exact strings
//! ("a/b", integers, or finite decimals); unknown keys are rejected.

use num::rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rank_one::{RankOneSpec, RankOneSystem, Stage};
use crate::rational::parse_rational;
use crate::shift::{ProbabilityVector, ShiftSystem, Sidedness};
use crate::system::System;

/// A full experiment: `seed` is mandatory so no run depends on ambient
/// randomness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub system: SystemDecl,
    pub experiment: ExperimentDecl,
}

/// Declarative system description, closed under products.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", rename_all_fields = "kebab-case", deny_unknown_fields)]
pub enum SystemDecl {
    Shift { sidedness: Sidedness, probabilities: Vec<String> },
    RankOne {
        initial_width: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        space_cap: Option<String>,
        #[serde(default)]
        allow_infinite_measure: bool,
        #[serde(default)]
        head: Vec<StageDecl>,
        #[serde(default)]
        cycle: Vec<StageDecl>,
    },
    Product { left: Box<SystemDecl>, right: Box<SystemDecl> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct StageDecl {
    pub cuts: usize,
    pub spacers: Vec<u64>,
    /// Omitted means uniform.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub proportions: Option<Vec<String>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EntropyMethod {
    Analytic,
    SymbolFrequency,
    DynamicalBall,
    Partition,
}

fn d_trials() -> u64 {
    1000
}
fn d_horizon() -> u64 {
    1_000_000
}
fn d_depth() -> usize {
    64
}
fn d_scan() -> u64 {
    100_000
}
fn d_samples() -> u64 {
    10
}
fn d_search() -> usize {
    32
}
fn d_orbit() -> u64 {
    10_000
}
fn d_rate_orbit() -> u64 {
    1_000_000
}
fn d_tolerance() -> f64 {
    0.02
}

/// The experiment to run. Each variant is one CLI-level operation; shared
/// numeric knobs default per the crate-wide conventions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", rename_all_fields = "kebab-case", deny_unknown_fields)]
pub enum ExperimentDecl {
    CheckRs {
        a: f64,
        delta: String,
        epsilons: Vec<f64>,
        #[serde(default = "d_trials")]
        trials: u64,
        #[serde(default = "d_depth")]
        depth_cap: usize,
    },
    CheckRps {
        a: f64,
        delta: String,
        #[serde(default = "d_trials")]
        trials: u64,
        #[serde(default = "d_horizon")]
        horizon: u64,
        #[serde(default = "d_depth")]
        depth_cap: usize,
        #[serde(default = "d_scan")]
        scan_cap: u64,
    },
    WitnessRpsFailure { a: f64, delta: String },
    WitnessRankoneFailure {
        a: f64,
        delta: String,
        #[serde(default = "d_search")]
        search_cap: usize,
        #[serde(default = "d_depth")]
        depth_cap: usize,
    },
    Entropy {
        method: EntropyMethod,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        delta: Option<String>,
        #[serde(default = "d_orbit")]
        orbit_length: u64,
        #[serde(default = "d_samples")]
        samples: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        partition: Option<Vec<Vec<u8>>>,
    },
    Rate {
        #[serde(default = "d_rate_orbit")]
        orbit_length: u64,
    },
    BoundCheck {
        a: f64,
        delta: String,
        #[serde(default = "d_trials")]
        trials: u64,
        #[serde(default = "d_orbit")]
        orbit_length: u64,
        #[serde(default = "d_samples")]
        samples: u64,
        #[serde(default = "d_tolerance")]
        tolerance: f64,
        #[serde(default = "d_horizon")]
        horizon: u64,
        #[serde(default = "d_depth")]
        depth_cap: usize,
        #[serde(default = "d_scan")]
        scan_cap: u64,
    },
}

impl ExperimentDecl {
    pub fn kind(&self) -> &'static str {
        match self {
            ExperimentDecl::CheckRs { .. } => "check-rs",
            ExperimentDecl::CheckRps { .. } => "check-rps",
            ExperimentDecl::WitnessRpsFailure { .. } => "witness-rps-failure",
            ExperimentDecl::WitnessRankoneFailure { .. } => "witness-rankone-failure",
            ExperimentDecl::Entropy { .. } => "entropy",
            ExperimentDecl::Rate { .. } => "rate",
            ExperimentDecl::BoundCheck { .. } => "bound-check",
        }
    }
}

/// Parse and validate a config document. Every diagnostic names the
/// offending field via the TOML error path.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let config: ExperimentConfig =
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    // eagerly validate rational fields and the system declaration so config
    // problems surface as config errors, not mid-run failures
    build_system(&config.system)?;
    for field in rational_fields(&config.experiment) {
        parse_positive_rational(field.1, field.0)?;
    }
    Ok(config)
}

fn rational_fields(e: &ExperimentDecl) -> Vec<(&'static str, &str)> {
    match e {
        ExperimentDecl::CheckRs { delta, .. }
        | ExperimentDecl::CheckRps { delta, .. }
        | ExperimentDecl::WitnessRpsFailure { delta, .. }
        | ExperimentDecl::WitnessRankoneFailure { delta, .. }
        | ExperimentDecl::BoundCheck { delta, .. } => vec![("delta", delta.as_str())],
        ExperimentDecl::Entropy { delta: Some(d), .. } => vec![("delta", d.as_str())],
        _ => vec![],
    }
}

pub fn parse_positive_rational(s: &str, field: &str) -> Result<BigRational> {
    let q = parse_rational(s).map_err(|e| Error::Config(format!("{field}: {e}")))?;
    if q <= BigRational::from_integer(0.into()) {
        return Err(Error::Config(format!("{field} = {s} must be positive")));
    }
    Ok(q)
}

fn parse_probabilities(entries: &[String]) -> Result<ProbabilityVector> {
    let parsed: Result<Vec<BigRational>> = entries
        .iter()
        .map(|s| parse_rational(s).map_err(|e| Error::Config(format!("probabilities: {e}"))))
        .collect();
    ProbabilityVector::new(parsed?)
}

fn build_stage(decl: &StageDecl) -> Result<Stage> {
    match &decl.proportions {
        None => Stage::uniform(decl.cuts, decl.spacers.clone()),
        Some(p) => {
            let parsed: Result<Vec<BigRational>> = p
                .iter()
                .map(|s| parse_rational(s).map_err(|e| Error::Config(format!("proportions: {e}"))))
                .collect();
            Stage::new(decl.cuts, decl.spacers.clone(), ProbabilityVector::new(parsed?)?)
        }
    }
}

/// Instantiate the declared system.
pub fn build_system(decl: &SystemDecl) -> Result<System> {
    match decl {
        SystemDecl::Shift { sidedness, probabilities } => Ok(System::Shift(ShiftSystem::new(
            *sidedness,
            parse_probabilities(probabilities)?,
        ))),
        SystemDecl::RankOne { initial_width, space_cap, allow_infinite_measure, head, cycle } => {
            let w0 = parse_positive_rational(initial_width, "initial_width")?;
            let cap = space_cap
                .as_deref()
                .map(|s| parse_positive_rational(s, "space_cap"))
                .transpose()?;
            let head: Result<Vec<Stage>> = head.iter().map(build_stage).collect();
            let cycle: Result<Vec<Stage>> = cycle.iter().map(build_stage).collect();
            let spec = RankOneSpec::new(head?, cycle?, w0, cap)?;
            Ok(System::RankOne(std::sync::Arc::new(RankOneSystem::with_space_override(
                spec,
                *allow_infinite_measure,
            ))))
        }
        SystemDecl::Product { left, right } => {
            Ok(System::product(build_system(left)?, build_system(right)?))
        }
    }
}
