//! Run configuration: a single JSON file reproduces every data set; command
//! line flags override individual fields. Defaults are laboratory-realistic:
//! N = 15000 coincidences per setting, visibility grid down to 0.95,
//! 6-sigma no-signaling threshold.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::path::Path;

use serde::{Deserialize, Serialize};
use steercert::states::{FamilyTag, StateFamily};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum FidelityConvention {
    Root,
    Squared,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMode {
    /// One multinomial draw of N coincidences per setting pair.
    Multinomial,
    /// Independent Poisson counts per outcome cell with mean N * p.
    Poisson,
    /// No sampling: exact probabilities injected (the infinite-N limit).
    Exact,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub families: Vec<FamilyTag>,
    pub a_values: Vec<f64>,
    pub delta_values: Vec<f64>,
    pub theta: ThetaSetting,
    pub visibility: f64,
    pub angle_jitter_sigma: f64,
    pub visibility_values: Vec<f64>,
    pub n_per_setting: u64,
    pub seed: u64,
    pub reps: usize,
    pub theta_grid: usize,
    pub vartheta_grid: usize,
    pub q_grid: usize,
    pub fidelity_convention: FidelityConvention,
    pub sampling: SamplingMode,
    pub no_signaling_threshold: f64,
    pub out_dir: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ThetaSetting {
    /// One point per state at the violation-maximizing angle.
    Max,
    /// A fixed list of angles, crossed with every state.
    Fixed { values: Vec<f64> },
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema_version: 1,
            families: vec![
                FamilyTag::PhiPlus,
                FamilyTag::PhiMinus,
                FamilyTag::PsiPlus,
                FamilyTag::PsiMinus,
            ],
            a_values: vec![0.2, 0.4, 0.5, FRAC_1_SQRT_2, 0.8, 0.95],
            delta_values: (0..9).map(|k| 2.0 * PI * k as f64 / 9.0).collect(),
            theta: ThetaSetting::Max,
            visibility: 1.0,
            angle_jitter_sigma: 0.0,
            visibility_values: vec![1.0, 0.99, 0.97, 0.95],
            n_per_setting: 15000,
            seed: 7,
            reps: 100,
            theta_grid: 181,
            vartheta_grid: 1000,
            q_grid: 11,
            fidelity_convention: FidelityConvention::Root,
            sampling: SamplingMode::Multinomial,
            no_signaling_threshold: 6.0,
            out_dir: "out".into(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))?;
        let cfg: RunConfig = serde_json::from_str(&text).map_err(|e| {
            CliError::Config(format!(
                "{} at line {}, column {}",
                e,
                e.line(),
                e.column()
            ))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema_version != 1 {
            return Err(CliError::Config(format!(
                "unsupported schema_version {}",
                self.schema_version
            )));
        }
        if self.families.is_empty() {
            return Err(CliError::Config("families list is empty".into()));
        }
        if self.a_values.is_empty() {
            return Err(CliError::Config("a_values list is empty".into()));
        }
        for &a in &self.a_values {
            StateFamily::phi_plus(a)
                .map_err(|e| CliError::Config(format!("a_values: {e}")))?;
        }
        if !(0.0..=1.0).contains(&self.visibility) {
            return Err(CliError::Config(format!(
                "visibility {} outside [0, 1]",
                self.visibility
            )));
        }
        for &v in &self.visibility_values {
            if !(0.0..=1.0).contains(&v) {
                return Err(CliError::Config(format!("visibility value {v} outside [0, 1]")));
            }
        }
        if self.angle_jitter_sigma < 0.0 || !self.angle_jitter_sigma.is_finite() {
            return Err(CliError::Config("angle_jitter_sigma must be finite and >= 0".into()));
        }
        if self.n_per_setting == 0 {
            return Err(CliError::Config("n_per_setting must be positive".into()));
        }
        if self.reps < 2 {
            return Err(CliError::Config("reps must be at least 2".into()));
        }
        if self.theta_grid < 2 {
            return Err(CliError::Config("theta_grid must be at least 2".into()));
        }
        if self.vartheta_grid < 2 {
            return Err(CliError::Config("vartheta_grid must be at least 2".into()));
        }
        if self.q_grid < 2 {
            return Err(CliError::Config("q_grid must be at least 2".into()));
        }
        if self.no_signaling_threshold <= 0.0 {
            return Err(CliError::Config("no_signaling_threshold must be positive".into()));
        }
        if let ThetaSetting::Fixed { values } = &self.theta {
            if values.is_empty() {
                return Err(CliError::Config("theta.values list is empty".into()));
            }
        }
        Ok(())
    }

    /// Delta grid for a family (only `phi_delta` carries a phase).
    pub fn deltas_for(&self, tag: FamilyTag) -> Vec<f64> {
        if tag == FamilyTag::PhiDelta {
            self.delta_values.clone()
        } else {
            vec![0.0]
        }
    }
}
