//! Experiment configuration file: plain TOML with one section per
//! subsystem. Unknown keys are rejected so a misspelled option can never
//! fall back to a silent default, and `parse(render(c)) == c` on the
//! canonical form.

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use wignerlab_core::ensembles::Ensemble;
use wignerlab_core::probes::Probe;
use wignerlab_core::test_functions::TestFunction;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub ensemble: EnsembleSection,
    pub probe: ProbeSection,
    pub test_function: TestFunctionSection,
    pub mc: McSection,
    #[serde(default)]
    pub limits: LimitsSection,
    #[serde(default)]
    pub transforms: TransformsSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSection {
    /// `goe:w2=1.0` or an entry-law spec such as `uniform:w2=1.0`
    pub spec: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSection {
    /// `identity`, `elem:j=1`, `bilinear:delocalized`,
    /// `bilinear:spiked,a=0.8`, `custom:file=<path>`
    pub spec: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestFunctionSection {
    /// `x`, `x2`, `poly:0,1,0.5`, `exp:a=1.0`, `sin:a=1.0`, `cos:a=1.0`,
    /// `gauss:s=1.0`
    pub spec: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSection {
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    #[serde(default = "default_x_grid")]
    pub x_grid: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_sweep: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitsSection {
    #[serde(default = "default_quad_order")]
    pub quad_order: usize,
    #[serde(default = "default_cumulant_order")]
    pub cumulant_order: usize,
    /// diagonal-variance multiplier; omit for the standard value 2
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w2_variant: Option<f64>,
}

impl Default for LimitsSection {
    fn default() -> Self {
        LimitsSection {
            quad_order: default_quad_order(),
            cumulant_order: default_cumulant_order(),
            w2_variant: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformsSection {
    #[serde(default = "default_h")]
    pub h: f64,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_t2_values")]
    pub t2_values: Vec<f64>,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

impl Default for TransformsSection {
    fn default() -> Self {
        TransformsSection {
            h: default_h(),
            horizon: default_horizon(),
            t2_values: default_t2_values(),
            tolerance: default_tolerance(),
        }
    }
}

fn default_x_grid() -> Vec<f64> {
    (-20..=20).map(|k| k as f64 * 0.1).collect()
}

fn default_quad_order() -> usize {
    128
}

fn default_cumulant_order() -> usize {
    8
}

fn default_h() -> f64 {
    0.01
}

fn default_horizon() -> f64 {
    4.0
}

fn default_t2_values() -> Vec<f64> {
    vec![0.5, 1.0, 2.0]
}

fn default_tolerance() -> f64 {
    1e-3
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> anyhow::Result<ExperimentConfig> {
        let cfg: ExperimentConfig = toml::from_str(text).context("config parse error")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> anyhow::Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        Self::parse(&text)
    }

    /// Canonical rendering; parsing it back reproduces the value.
    pub fn render(&self) -> String {
        toml::to_string(self).expect("config is serializable")
    }

    fn validate(&self) -> anyhow::Result<()> {
        self.build_ensemble()?;
        self.build_probe()?;
        self.build_test_function()?;
        if self.limits.cumulant_order < 4 {
            bail!("limits.cumulant_order must be >= 4");
        }
        if self.limits.quad_order < 8 {
            bail!("limits.quad_order must be >= 8");
        }
        Ok(())
    }

    /// Ensemble with the diagonal-variance variant applied when set.
    pub fn build_ensemble(&self) -> anyhow::Result<Ensemble> {
        let ens = Ensemble::parse(&self.ensemble.spec)?;
        match self.limits.w2_variant {
            None => Ok(ens),
            Some(v) => Ok(ens.with_diag_multiplier(v)?),
        }
    }

    pub fn build_probe(&self) -> anyhow::Result<Probe> {
        Ok(Probe::parse(&self.probe.spec)?)
    }

    pub fn build_test_function(&self) -> anyhow::Result<TestFunction> {
        Ok(TestFunction::parse(&self.test_function.spec)?)
    }
}
