//! Experiment configuration files.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use wh_core::algo::DEFAULT_VERTEX_CAP;
use wh_core::graph::Preset;
use wh_core::walks::ClosingMode;

/// Current configuration schema version.
pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentId {
    StrictMinimality,
    BiasedRatio,
    Lambda0,
    Adaptedness,
    MinsetStability,
    EquivFuzz,
    QuasiInversion,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 7] = [
        ExperimentId::StrictMinimality,
        ExperimentId::BiasedRatio,
        ExperimentId::Lambda0,
        ExperimentId::Adaptedness,
        ExperimentId::MinsetStability,
        ExperimentId::EquivFuzz,
        ExperimentId::QuasiInversion,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentId::StrictMinimality => "strict-minimality",
            ExperimentId::BiasedRatio => "biased-ratio",
            ExperimentId::Lambda0 => "lambda0",
            ExperimentId::Adaptedness => "adaptedness",
            ExperimentId::MinsetStability => "minset-stability",
            ExperimentId::EquivFuzz => "equiv-fuzz",
            ExperimentId::QuasiInversion => "quasi-inversion",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL
            .into_iter()
            .find(|e| e.name() == s || e.name().replace('-', "_") == s)
    }
}

/// Where trial words come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SamplerSpec {
    /// Uniform cyclically reduced words of length `n`.
    UniformCyclic { rank: usize },
    /// Uniform reduced words of length `n`, cyclically reduced afterwards.
    UniformNb { rank: usize },
    /// Positive words with `p(a) = 1/10`, `p(b) = 9/10`.
    BiasedPositive,
    /// Simple random walk on `F_N` with `n` steps.
    GroupWalk { rank: usize },
    /// Chain-directed walk on a preset chart, closed by `mode`.
    Directed {
        /// Preset name: `rose2`, `rose-positive`, `lollipop` or `theta`.
        preset: String,
        rank: usize,
        #[serde(default = "default_mode")]
        mode: ClosingMode,
    },
}

fn default_mode() -> ClosingMode {
    ClosingMode::Hat
}

impl SamplerSpec {
    pub fn rank(&self) -> usize {
        match self {
            SamplerSpec::UniformCyclic { rank }
            | SamplerSpec::UniformNb { rank }
            | SamplerSpec::GroupWalk { rank }
            | SamplerSpec::Directed { rank, .. } => *rank,
            SamplerSpec::BiasedPositive => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Params {
    /// Depth of the probe set and of counting tables.
    pub probe_depth: usize,
    pub vertex_cap: usize,
    /// Repetitions per runtime measurement; the median is kept.
    pub repetitions: usize,
    /// Longest random move product used to manufacture equivalent pairs.
    pub max_product: usize,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            probe_depth: 3,
            vertex_cap: DEFAULT_VERTEX_CAP,
            repetitions: 5,
            max_product: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub version: u32,
    pub experiment: ExperimentId,
    pub sampler: SamplerSpec,
    pub lengths: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    #[serde(default)]
    pub params: Params,
    /// Trial records (JSON lines); the CSV summary goes next to it.
    pub output: PathBuf,
}

impl ExperimentConfig {
    pub fn new(
        experiment: ExperimentId,
        sampler: SamplerSpec,
        lengths: Vec<usize>,
        trials: usize,
        seed: u64,
        output: PathBuf,
    ) -> Self {
        ExperimentConfig {
            version: CONFIG_VERSION,
            experiment,
            sampler,
            lengths,
            trials,
            seed,
            params: Params::default(),
            output,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg: ExperimentConfig =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        if cfg.output.is_relative() {
            if let Some(dir) = path.parent() {
                cfg.output = dir.join(&cfg.output);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if let SamplerSpec::Directed { preset, .. } = &self.sampler {
            if Preset::parse(preset).is_none() {
                bail!("unknown preset {preset:?}");
            }
        }
        if self.version != CONFIG_VERSION {
            bail!(
                "unsupported config version {} (expected {CONFIG_VERSION})",
                self.version
            );
        }
        if self.trials == 0 {
            bail!("trials must be at least 1");
        }
        if self.lengths.is_empty() {
            bail!("lengths must not be empty");
        }
        if self.lengths.windows(2).any(|w| w[0] >= w[1]) {
            bail!("lengths must be strictly increasing");
        }
        if self.lengths[0] == 0 {
            bail!("lengths must be positive");
        }
        if self.params.repetitions == 0 {
            bail!("repetitions must be at least 1");
        }
        Ok(())
    }

    /// Path of the CSV summary.
    pub fn summary_path(&self) -> PathBuf {
        self.output.with_extension("csv")
    }
}
