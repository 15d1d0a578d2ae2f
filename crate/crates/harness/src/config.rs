//! TOML experiment configuration.
//!
//! ```toml
//! [dataset]
//! kind = "robot"
//! path = "data/lp1.data"
//! problem = "LP1"
//!
//! [grids]
//! variants = ["linear"]
//! omegas = ["w2"]
//! strategies = ["ds3"]
//!
//! [protocol]
//! repeats = 5
//!
//! [output]
//! dir = "runs/lp1"
//! ```
//!
//! Omitted grid values default to the full search ranges; relative paths are
//! resolved against the directory holding the configuration file.

use std::fs;
use std::path::{Path, PathBuf};

use mssvdd::data::{LearningProblem, SpectfLayout};
use mssvdd::{DecisionStrategy, Omega, Variant};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::report::ReportFormat;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub grids: GridConfig,
    #[serde(default)]
    pub protocol: ProtocolConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetKind {
    Robot,
    Spectf,
    Synthetic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub kind: DatasetKind,
    /// Display name in reports; derived from the dataset when absent.
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub problem: Option<LearningProblem>,
    #[serde(default)]
    pub target_label: Option<String>,
    #[serde(default)]
    pub train_path: Option<PathBuf>,
    #[serde(default)]
    pub test_path: Option<PathBuf>,
    #[serde(default)]
    pub layout: SpectfLayout,
    #[serde(default)]
    pub synthetic: Option<SyntheticConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticConfig {
    pub dims: Vec<usize>,
    pub targets: usize,
    pub outliers: usize,
    #[serde(default = "default_latent")]
    pub latent: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_latent() -> usize {
    3
}

impl DatasetConfig {
    pub fn display_name(&self) -> String {
        if let Some(n) = &self.name {
            return n.clone();
        }
        match self.kind {
            DatasetKind::Robot => self.problem.map(|p| p.to_string()).unwrap_or_else(|| "robot".into()),
            DatasetKind::Spectf => "SPECTF".into(),
            DatasetKind::Synthetic => "synthetic".into(),
        }
    }
}

pub fn default_beta() -> Vec<f64> {
    (-4..=4).map(|e| 10f64.powi(e)).collect()
}

pub fn default_c() -> Vec<f64> {
    vec![0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6]
}

pub fn default_sigma() -> Vec<f64> {
    (-3..=3).map(|e| 10f64.powi(e)).collect()
}

pub fn default_d() -> Vec<usize> {
    vec![1, 2, 3, 4, 5, 10, 20, 50, 100]
}

pub fn default_eta() -> Vec<f64> {
    vec![0.1]
}

fn default_variants() -> Vec<Variant> {
    vec![Variant::Linear]
}

fn default_omegas() -> Vec<Omega> {
    Omega::ALL.to_vec()
}

fn default_strategies() -> Vec<DecisionStrategy> {
    DecisionStrategy::ALL.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_variants")]
    pub variants: Vec<Variant>,
    #[serde(default = "default_omegas")]
    pub omegas: Vec<Omega>,
    #[serde(default = "default_strategies")]
    pub strategies: Vec<DecisionStrategy>,
    #[serde(default = "default_c")]
    pub c: Vec<f64>,
    #[serde(default = "default_beta")]
    pub beta: Vec<f64>,
    #[serde(default = "default_sigma")]
    pub sigma: Vec<f64>,
    #[serde(default = "default_d")]
    pub d: Vec<usize>,
    #[serde(default = "default_eta")]
    pub eta: Vec<f64>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            variants: default_variants(),
            omegas: default_omegas(),
            strategies: default_strategies(),
            c: default_c(),
            beta: default_beta(),
            sigma: default_sigma(),
            d: default_d(),
            eta: default_eta(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Baseline {
    /// Plain description of the concatenated features.
    Svdd,
    /// The subspace method on each modality alone.
    SSvdd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolConfig {
    #[serde(default)]
    pub seed: u64,
    /// Explicit split seeds; overrides `seed` and `repeats`.
    #[serde(default)]
    pub seeds: Option<Vec<u64>>,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default = "default_cv_k")]
    pub cv_k: usize,
    #[serde(default = "default_fraction")]
    pub train_fraction: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_true")]
    pub standardize: bool,
    #[serde(default)]
    pub center_kernel: bool,
    #[serde(default)]
    pub baselines: Vec<Baseline>,
}

fn default_repeats() -> usize {
    5
}

fn default_cv_k() -> usize {
    5
}

fn default_fraction() -> f64 {
    0.7
}

fn default_max_iter() -> usize {
    50
}

fn default_true() -> bool {
    true
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            seeds: None,
            repeats: default_repeats(),
            cv_k: default_cv_k(),
            train_fraction: default_fraction(),
            max_iter: default_max_iter(),
            standardize: true,
            center_kernel: false,
            baselines: Vec::new(),
        }
    }
}

impl ProtocolConfig {
    pub fn split_seeds(&self) -> Vec<u64> {
        match &self.seeds {
            Some(s) => s.clone(),
            None => (0..self.repeats as u64).map(|r| self.seed + r).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<ReportFormat>,
    #[serde(default = "default_true")]
    pub save_models: bool,
}

fn default_dir() -> PathBuf {
    PathBuf::from("runs")
}

fn default_formats() -> Vec<ReportFormat> {
    vec![ReportFormat::Markdown, ReportFormat::Csv]
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: default_dir(),
            formats: default_formats(),
            save_models: true,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads, validates and resolves relative paths against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(q) = p {
                if q.is_relative() {
                    *q = base.join(&*q);
                }
            }
        };
        fix(&mut self.dataset.path);
        fix(&mut self.dataset.train_path);
        fix(&mut self.dataset.test_path);
        if self.output.dir.is_relative() {
            self.output.dir = base.join(&self.output.dir);
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(HarnessError::Config(m));
        let d = &self.dataset;
        match d.kind {
            DatasetKind::Robot => {
                if d.path.is_none() || d.problem.is_none() {
                    return fail("robot datasets need `path` and `problem`".into());
                }
            }
            DatasetKind::Spectf => {
                if d.train_path.is_none() || d.test_path.is_none() {
                    return fail("SPECTF datasets need `train_path` and `test_path`".into());
                }
            }
            DatasetKind::Synthetic => {
                if d.synthetic.is_none() {
                    return fail("synthetic datasets need a [dataset.synthetic] table".into());
                }
            }
        }
        let g = &self.grids;
        let lists = [
            ("variants", g.variants.is_empty()),
            ("omegas", g.omegas.is_empty()),
            ("strategies", g.strategies.is_empty()),
            ("c", g.c.is_empty()),
            ("beta", g.beta.is_empty()),
            ("d", g.d.is_empty()),
            ("eta", g.eta.is_empty()),
        ];
        for (name, empty) in lists {
            if empty {
                return fail(format!("grid `{name}` is empty"));
            }
        }
        if g.variants.iter().any(|v| v.uses_sigma()) && g.sigma.is_empty() {
            return fail("grid `sigma` is empty but a kernel variant is requested".into());
        }
        if g.c.iter().any(|&c| !(c > 0.0 && c <= 1.0)) {
            return fail("grid `c` values must lie in (0, 1]".into());
        }
        if g.beta.iter().any(|&b| !(b >= 0.0 && b.is_finite())) {
            return fail("grid `beta` values must be non-negative".into());
        }
        if g.sigma.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return fail("grid `sigma` values must be positive".into());
        }
        if g.eta.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
            return fail("grid `eta` values must be positive".into());
        }
        if g.d.contains(&0) {
            return fail("grid `d` values must be at least 1".into());
        }
        let p = &self.protocol;
        if p.cv_k < 2 {
            return fail("protocol `cv_k` must be at least 2".into());
        }
        if p.split_seeds().is_empty() {
            return fail("protocol needs at least one split".into());
        }
        if !(p.train_fraction > 0.0 && p.train_fraction < 1.0) {
            return fail("protocol `train_fraction` must lie in (0, 1)".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_full_grids() {
        let cfg = ExperimentConfig::from_toml(
            r#"
            [dataset]
            kind = "robot"
            path = "lp1.data"
            problem = "LP1"
            "#,
        )
        .unwrap();
        assert_eq!(cfg.grids.beta.len(), 9);
        assert_eq!(cfg.grids.c, default_c());
        assert_eq!(cfg.grids.sigma.first(), Some(&1e-3));
        assert_eq!(cfg.grids.d, vec![1, 2, 3, 4, 5, 10, 20, 50, 100]);
        assert_eq!(cfg.grids.eta, vec![0.1]);
        assert_eq!(cfg.protocol.split_seeds(), vec![0, 1, 2, 3, 4]);
        assert!(cfg.protocol.standardize);
    }

    #[test]
    fn unknown_keys_and_bad_values_are_rejected() {
        let unknown = "[dataset]\nkind = \"robot\"\npath = \"x\"\nproblem = \"LP1\"\ncolour = 3\n";
        assert!(matches!(ExperimentConfig::from_toml(unknown), Err(HarnessError::ConfigParse(_))));
        let empty = "[dataset]\nkind = \"spectf\"\ntrain_path = \"a\"\ntest_path = \"b\"\n[grids]\nc = []\n";
        assert!(matches!(ExperimentConfig::from_toml(empty), Err(HarnessError::Config(_))));
        let missing = "[dataset]\nkind = \"robot\"\n";
        assert!(matches!(ExperimentConfig::from_toml(missing), Err(HarnessError::Config(_))));
    }

    #[test]
    fn grid_names_parse() {
        let cfg = ExperimentConfig::from_toml(
            r#"
            [dataset]
            kind = "spectf"
            train_path = "a"
            test_path = "b"
            layout = "blocked"
            [grids]
            variants = ["kernel", "npt"]
            omegas = ["w0", "w6"]
            strategies = ["ds1", "ds4"]
            [protocol]
            baselines = ["svdd", "s-svdd"]
            "#,
        )
        .unwrap();
        assert_eq!(cfg.grids.omegas, vec![Omega::None, Omega::CrossSupportScatter]);
        assert_eq!(cfg.dataset.layout, SpectfLayout::Blocked);
        assert_eq!(cfg.protocol.baselines, vec![Baseline::Svdd, Baseline::SSvdd]);
    }
}
