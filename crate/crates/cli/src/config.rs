//! Declarative run configuration loaded from TOML.
//!
//! Precedence, lowest first: built-in defaults, the config file,
//! environment variables (`HOLOCR_EMBED_ENDPOINT`, `HOLOCR_WORKERS`),
//! command-line flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use holocr::grpo::{
    DEFAULT_ENTROPY_BINS, DEFAULT_ENTROPY_THRESHOLD, DEFAULT_EPSILON, DEFAULT_SIGMA_GUARD,
    DEFAULT_STEP_SIZE,
};
use holocr::vision::remote::RemoteConfig;
use holocr::vision::render::RenderTemplate;
use holocr::vision::{CodeFormat, VisionRewardConfig};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const ENV_ENDPOINT: &str = "HOLOCR_EMBED_ENDPOINT";
pub const ENV_WORKERS: &str = "HOLOCR_WORKERS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    #[default]
    Stub,
    Remote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendSection {
    pub kind: BackendKind,
    pub endpoint: Option<String>,
    pub timeout_secs: f64,
    pub retries: usize,
    pub max_in_flight: usize,
    pub backoff_ms: u64,
}

impl Default for BackendSection {
    fn default() -> Self {
        let r = RemoteConfig::new("");
        BackendSection {
            kind: BackendKind::Stub,
            endpoint: None,
            timeout_secs: r.timeout_secs,
            retries: r.retries,
            max_in_flight: r.max_in_flight,
            backoff_ms: r.backoff_ms,
        }
    }
}

impl BackendSection {
    /// Remote client settings, or `None` for the stub backend.
    pub fn remote(&self) -> Result<Option<RemoteConfig>, CliError> {
        match self.kind {
            BackendKind::Stub => Ok(None),
            BackendKind::Remote => {
                let endpoint = self
                    .endpoint
                    .clone()
                    .filter(|e| !e.trim().is_empty())
                    .ok_or_else(|| {
                        CliError::config("backend.kind = \"remote\" requires backend.endpoint")
                    })?;
                Ok(Some(RemoteConfig {
                    endpoint,
                    timeout_secs: self.timeout_secs,
                    retries: self.retries,
                    max_in_flight: self.max_in_flight,
                    backoff_ms: self.backoff_ms,
                }))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderSection {
    /// Scratch directory for render jobs; the system temp dir when unset.
    pub workdir: Option<PathBuf>,
    pub max_parallel: usize,
    pub commands: BTreeMap<CodeFormat, RenderTemplate>,
}

impl Default for RenderSection {
    fn default() -> Self {
        RenderSection {
            workdir: None,
            max_parallel: 2,
            commands: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GrpoSection {
    pub group_size: usize,
    pub epsilon: f64,
    pub sigma_guard: f64,
    pub entropy_bins: usize,
    pub entropy_threshold: f64,
    pub sim_target: String,
    pub sim_step_size: f64,
    pub sim_iterations: usize,
    pub sim_seed: u64,
}

impl Default for GrpoSection {
    fn default() -> Self {
        GrpoSection {
            group_size: 8,
            epsilon: DEFAULT_EPSILON,
            sigma_guard: DEFAULT_SIGMA_GUARD,
            entropy_bins: DEFAULT_ENTROPY_BINS,
            entropy_threshold: DEFAULT_ENTROPY_THRESHOLD,
            sim_target: "ab".into(),
            sim_step_size: DEFAULT_STEP_SIZE,
            sim_iterations: 300,
            sim_seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub workers: usize,
    pub vision: VisionRewardConfig,
    pub backend: BackendSection,
    pub render: RenderSection,
    pub grpo: GrpoSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dataset: None,
            output: None,
            workers: 1,
            vision: VisionRewardConfig::default(),
            backend: BackendSection::default(),
            render: RenderSection::default(),
            grpo: GrpoSection::default(),
        }
    }
}

impl RunConfig {
    /// Parses TOML. Relative paths are resolved against `base`.
    pub fn from_toml(text: &str, base: &Path) -> Result<Self, CliError> {
        let mut cfg: RunConfig =
            toml::from_str(text).map_err(|e| CliError::config(format!("invalid config: {e}")))?;
        let rebase = |p: &mut Option<PathBuf>| {
            if let Some(path) = p {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        };
        rebase(&mut cfg.dataset);
        rebase(&mut cfg.output);
        rebase(&mut cfg.render.workdir);
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&text, base)
    }

    /// Applies environment overrides through `lookup` so tests can inject
    /// values without touching the process environment.
    pub fn apply_env(&mut self, lookup: impl Fn(&str) -> Option<String>) -> Result<(), CliError> {
        if let Some(endpoint) = lookup(ENV_ENDPOINT).filter(|v| !v.trim().is_empty()) {
            self.backend.kind = BackendKind::Remote;
            self.backend.endpoint = Some(endpoint);
        }
        if let Some(w) = lookup(ENV_WORKERS).filter(|v| !v.trim().is_empty()) {
            self.workers = w.trim().parse().map_err(|_| {
                CliError::config(format!("{ENV_WORKERS}={w} is not a worker count"))
            })?;
        }
        Ok(())
    }

    /// Checks every range and weight invariant. Path existence is checked
    /// by the command that needs the path.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.workers == 0 {
            return Err(CliError::config("workers must be at least 1"));
        }
        self.vision
            .validate()
            .map_err(|e| CliError::config(format!("vision: {e}")))?;
        self.backend.remote()?;
        if self.backend.timeout_secs.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
            return Err(CliError::config("backend.timeout_secs must be positive"));
        }
        if self.backend.max_in_flight == 0 {
            return Err(CliError::config("backend.max_in_flight must be at least 1"));
        }
        if self.render.max_parallel == 0 {
            return Err(CliError::config("render.max_parallel must be at least 1"));
        }
        for (format, t) in &self.render.commands {
            t.validate()
                .map_err(|e| CliError::config(format!("render.commands.{format}: {e}")))?;
        }
        if let Some(dir) = &self.render.workdir {
            if !dir.is_dir() {
                return Err(CliError::config(format!(
                    "render.workdir {} is not a directory",
                    dir.display()
                )));
            }
        }
        let g = &self.grpo;
        if g.group_size < 2 {
            return Err(CliError::config("grpo.group_size must be at least 2"));
        }
        if !(g.epsilon > 0.0 && g.epsilon < 1.0) {
            return Err(CliError::config("grpo.epsilon must lie in (0, 1)"));
        }
        if !(g.sigma_guard > 0.0 && g.sigma_guard.is_finite()) {
            return Err(CliError::config("grpo.sigma_guard must be positive"));
        }
        if g.entropy_bins < 2 {
            return Err(CliError::config("grpo.entropy_bins must be at least 2"));
        }
        if !(0.0..=1.0).contains(&g.entropy_threshold) {
            return Err(CliError::config(
                "grpo.entropy_threshold must lie in [0, 1]",
            ));
        }
        if g.sim_target.is_empty() {
            return Err(CliError::config("grpo.sim_target must be non-empty"));
        }
        if !(g.sim_step_size >= 0.0 && g.sim_step_size.is_finite()) {
            return Err(CliError::config(
                "grpo.sim_step_size must be finite and nonnegative",
            ));
        }
        Ok(())
    }
}
