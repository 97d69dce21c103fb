//! Tool configuration: one TOML document with `${VAR}` interpolation.

use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use causal_plot::eval::EvalConfig;
use causal_plot::knowledge::KnowledgeConfig;
use causal_plot::planner::PlannerConfig;
use causal_plot::similarity::SimilarityConfig;
use causal_plot::transport::Endpoint;
use serde::{Deserialize, Serialize};

pub const DEFAULT_KEY_ENV: &str = "CAUSAL_PLOT_API_KEY";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EndpointConfig {
    pub url: Option<String>,
    /// Name of the environment variable holding the bearer token.
    pub api_key_env: String,
    /// Inline token, normally written as `"${SOME_VAR}"`.
    pub api_key: Option<String>,
    pub model: Option<String>,
    pub max_tokens: u32,
    pub max_in_flight: usize,
    pub max_attempts: u32,
    pub timeout_secs: u64,
    pub backoff_ms: u64,
}

impl Default for EndpointConfig {
    fn default() -> Self {
        EndpointConfig {
            url: None,
            api_key_env: DEFAULT_KEY_ENV.to_string(),
            api_key: None,
            model: None,
            max_tokens: 48,
            max_in_flight: 4,
            max_attempts: 3,
            timeout_secs: 60,
            backoff_ms: 250,
        }
    }
}

impl EndpointConfig {
    fn resolved_key(&self) -> Option<String> {
        self.api_key
            .clone()
            .filter(|k| !k.is_empty())
            .or_else(|| std::env::var(&self.api_key_env).ok().filter(|k| !k.is_empty()))
    }

    pub fn endpoint(&self, url: &str) -> Endpoint {
        let mut e = Endpoint::new(url).with_api_key(self.resolved_key()).with_model(self.model.clone());
        e.max_in_flight = self.max_in_flight.max(1);
        e.max_attempts = self.max_attempts.max(1);
        e.timeout = Duration::from_secs(self.timeout_secs.max(1));
        e.backoff = Duration::from_millis(self.backoff_ms);
        e
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToolConfig {
    pub seed: u64,
    /// Directory of prompt TOML files; the built-in prompts when absent.
    pub prompts: Option<PathBuf>,
    pub knowledge: EndpointConfig,
    /// `"local"` or the URL of an embeddings endpoint.
    pub embedding: String,
    pub embedding_endpoint: EndpointConfig,
    pub generation: KnowledgeConfig,
    pub similarity: SimilarityConfig,
    pub planner: PlannerConfig,
    pub eval: EvalConfig,
}

impl Default for ToolConfig {
    fn default() -> Self {
        ToolConfig {
            seed: 0,
            prompts: None,
            knowledge: EndpointConfig::default(),
            embedding: "local".to_string(),
            embedding_endpoint: EndpointConfig::default(),
            generation: KnowledgeConfig::default(),
            similarity: SimilarityConfig::default(),
            planner: PlannerConfig::default(),
            eval: EvalConfig::default(),
        }
    }
}

/// Replaces `${NAME}` with the value of environment variable `NAME`.
/// Unset variables are an error; `$$` escapes a literal dollar.
pub fn interpolate(text: &str, lookup: impl Fn(&str) -> Option<String>) -> Result<String> {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(i) = rest.find('$') {
        out.push_str(&rest[..i]);
        let tail = &rest[i + 1..];
        if let Some(after) = tail.strip_prefix('$') {
            out.push('$');
            rest = after;
        } else if let Some(body) = tail.strip_prefix('{') {
            let end = body.find('}').context("unterminated `${` in config")?;
            let name = &body[..end];
            if name.is_empty() {
                bail!("empty variable name in config");
            }
            match lookup(name) {
                Some(v) => out.push_str(&v),
                None => bail!("environment variable `{name}` referenced by config is not set"),
            }
            rest = &body[end + 1..];
        } else {
            out.push('$');
            rest = tail;
        }
    }
    out.push_str(rest);
    Ok(out)
}

impl ToolConfig {
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let text = interpolate(text, |k| std::env::var(k).ok())?;
        let mut cfg: ToolConfig = toml::from_str(&text).context("invalid config")?;
        if let Some(p) = &cfg.prompts {
            if p.is_relative() {
                cfg.prompts = Some(base.join(p));
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(p) = &self.prompts {
            if !p.is_dir() {
                bail!("prompt directory {} does not exist", p.display());
            }
        }
        self.similarity.validate().map_err(anyhow::Error::msg)?;
        self.planner.validate().map_err(anyhow::Error::msg)?;
        self.generation.validate().map_err(anyhow::Error::msg)?;
        if self.embedding != "local" && !self.embedding.starts_with("http") {
            bail!("embedding must be \"local\" or an http(s) URL, got `{}`", self.embedding);
        }
        Ok(())
    }

    /// The config as TOML with any inline credentials masked.
    pub fn to_redacted_toml(&self) -> Result<String> {
        let mut shown = self.clone();
        for e in [&mut shown.knowledge, &mut shown.embedding_endpoint] {
            if e.api_key.is_some() {
                e.api_key = Some("<redacted>".to_string());
            }
        }
        Ok(toml::to_string_pretty(&shown)?)
    }
}
