//! Run configuration, read from TOML. Every key is optional and falls back
//! to the documented default; unknown keys are rejected.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sfl_core::curricula::SchedulerConfig;
use sfl_core::gridmaze::MazeConfig;
use sfl_core::jaxnav::NavConfig;
use sfl_core::learner::PpoConfig;
use sfl_core::level::GenParams;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// Solvable levels sampled for the CVaR protocol (N).
    pub n_levels: usize,
    /// Worst-case percentages α in (0, 100].
    pub alphas: Vec<f64>,
    pub episodes: usize,
    /// Environments stepped together during evaluation.
    pub chunk_envs: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { n_levels: 10_000, alphas: vec![1.0, 5.0, 10.0, 20.0, 50.0, 100.0], episodes: 10, chunk_envs: 1024 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Gradient updates per seed.
    pub updates: u64,
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
    /// Extra checkpoints every this many updates; 0 keeps only the final one.
    pub checkpoint_every: u64,
    /// Log a CVaR evaluation every this many updates; 0 disables it.
    pub eval_every: u64,
    /// Level distribution; `gen.env_kind` selects the environment.
    pub gen: GenParams,
    pub nav: NavConfig,
    pub maze: MazeConfig,
    pub ppo: PpoConfig,
    pub scheduler: SchedulerConfig,
    pub eval: EvalConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            updates: 2250,
            seeds: vec![0],
            out_dir: PathBuf::from("runs"),
            checkpoint_every: 0,
            eval_every: 0,
            gen: GenParams::default(),
            nav: NavConfig::default(),
            maze: MazeConfig::default(),
            ppo: PpoConfig::default(),
            scheduler: SchedulerConfig::default(),
            eval: EvalConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let de = toml::Deserializer::parse(text).context("config is not valid TOML")?;
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            anyhow::anyhow!("config key `{path}`: {}", e.into_inner().message())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        let keyed = |key: &str, r: sfl_core::Result<()>| r.with_context(|| format!("config key `{key}`"));
        keyed("gen", self.gen.validate())?;
        keyed("nav", self.nav.validate())?;
        keyed("maze", self.maze.validate())?;
        keyed("ppo", self.ppo.validate())?;
        keyed("scheduler", self.scheduler.validate())?;
        if self.updates == 0 {
            bail!("config key `updates`: must be positive");
        }
        if self.seeds.is_empty() {
            bail!("config key `seeds`: at least one seed is required");
        }
        let e = &self.eval;
        if e.n_levels == 0 || e.episodes == 0 || e.chunk_envs == 0 {
            bail!("config key `eval`: n_levels, episodes and chunk_envs must be positive");
        }
        if let Some(a) = e.alphas.iter().find(|&&a| !(a > 0.0 && a <= 100.0)) {
            bail!("config key `eval.alphas`: {a} is outside (0, 100]");
        }
        Ok(())
    }
}
