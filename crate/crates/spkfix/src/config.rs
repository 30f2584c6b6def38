//! TOML configuration with dotted keys mirroring the session settings.
//!
//! ```toml
//! swm.window_s = 1.0
//! swm.stride_s = 0.2
//! swm.theta = 0.7
//! loop.interval = 15
//! loop.correction_limit = 30
//! loop.max_online_enrollments = 1
//! loop.display_mode = "summary"
//! score.collar = 0.0
//! score.mapping = "identity"
//! llm.mock = "rules"
//! ```

use std::path::Path;

use spkfix_core::metrics::Mapping;
use spkfix_core::model::{DisplayMode, SessionConfig};

use crate::bundle::read_text;
use crate::error::{Error, Result};
use crate::gateway::GatewaySpec;

/// Every recognized key.
pub const KEYS: &[&str] = &[
    "swm.window_s",
    "swm.stride_s",
    "swm.theta",
    "loop.interval",
    "loop.correction_limit",
    "loop.max_online_enrollments",
    "loop.display_mode",
    "loop.context_turns",
    "loop.match_threshold",
    "score.collar",
    "score.mapping",
    "llm.endpoint",
    "llm.mock",
    "llm.token_env",
];

/// Settings as read; unset values fall back to defaults when resolved.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    pub window: Option<f64>,
    pub stride: Option<f64>,
    pub theta: Option<f64>,
    pub interval: Option<usize>,
    pub correction_limit: Option<usize>,
    pub max_online_enrollments: Option<usize>,
    pub display_mode: Option<DisplayMode>,
    pub context_turns: Option<usize>,
    pub match_threshold: Option<f64>,
    pub collar: Option<f64>,
    pub mapping: Option<Mapping>,
    pub llm_endpoint: Option<String>,
    pub llm_mock: Option<String>,
    pub llm_token_env: Option<String>,
}

fn bad(key: &str, want: &str) -> Error {
    Error::Config(format!("`{key}` must be {want}"))
}

fn float(key: &str, v: &toml::Value) -> Result<f64> {
    match v {
        toml::Value::Float(f) => Ok(*f),
        toml::Value::Integer(i) => Ok(*i as f64),
        _ => Err(bad(key, "a number")),
    }
}

fn count(key: &str, v: &toml::Value) -> Result<usize> {
    match v {
        toml::Value::Integer(i) if *i >= 0 => Ok(*i as usize),
        _ => Err(bad(key, "a non-negative integer")),
    }
}

fn string<'a>(key: &str, v: &'a toml::Value) -> Result<&'a str> {
    v.as_str().ok_or_else(|| bad(key, "a string"))
}

fn flatten(prefix: &str, table: &toml::Table, out: &mut Vec<(String, toml::Value)>) {
    for (k, v) in table {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            toml::Value::Table(t) => flatten(&key, t, out),
            other => out.push((key, other.clone())),
        }
    }
}

impl Settings {
    pub fn from_toml(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        let mut pairs = Vec::new();
        flatten("", &table, &mut pairs);
        let mut s = Settings::default();
        for (k, v) in pairs {
            s.set(&k, &v)?;
        }
        Ok(s)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_toml(&read_text(path)?).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn set(&mut self, key: &str, v: &toml::Value) -> Result<()> {
        match key {
            "swm.window_s" => self.window = Some(float(key, v)?),
            "swm.stride_s" => self.stride = Some(float(key, v)?),
            "swm.theta" => self.theta = Some(float(key, v)?),
            "loop.interval" => self.interval = Some(count(key, v)?),
            "loop.correction_limit" => self.correction_limit = Some(count(key, v)?),
            "loop.max_online_enrollments" => self.max_online_enrollments = Some(count(key, v)?),
            "loop.display_mode" => {
                let s = string(key, v)?;
                self.display_mode = Some(DisplayMode::parse(s).ok_or_else(|| bad(key, "`summary` or `conversation`"))?)
            }
            "loop.context_turns" => self.context_turns = Some(count(key, v)?),
            "loop.match_threshold" => self.match_threshold = Some(float(key, v)?),
            "score.collar" => self.collar = Some(float(key, v)?),
            "score.mapping" => {
                let s = string(key, v)?;
                self.mapping = Some(Mapping::parse(s).ok_or_else(|| bad(key, "`identity` or `optimal`"))?)
            }
            "llm.endpoint" => self.llm_endpoint = Some(string(key, v)?.to_string()),
            "llm.mock" => self.llm_mock = Some(string(key, v)?.to_string()),
            "llm.token_env" => self.llm_token_env = Some(string(key, v)?.to_string()),
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Applies a `key=value` override; the value is read as TOML, falling
    /// back to a bare string.
    pub fn set_override(&mut self, assignment: &str) -> Result<()> {
        let (key, raw) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override `{assignment}` is not key=value")))?;
        let (key, raw) = (key.trim(), raw.trim());
        let value = format!("v = {raw}")
            .parse::<toml::Table>()
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(raw.to_string()));
        self.set(key, &value)
    }

    /// Session config; the online-enrollment cap defaults by whether SWM runs
    /// and the correction context defaults to the summary interval.
    pub fn session_config(&self, swm_enabled: bool) -> Result<SessionConfig> {
        let mut cfg = SessionConfig::defaults_for(swm_enabled);
        if let Some(v) = self.window {
            cfg.swm_window = v;
        }
        if let Some(v) = self.stride {
            cfg.swm_stride = v;
        }
        if let Some(v) = self.theta {
            cfg.dominance = v;
        }
        if let Some(v) = self.interval {
            cfg = cfg.with_interval(v);
        }
        if let Some(v) = self.correction_limit {
            cfg.correction_limit = v;
        }
        if let Some(v) = self.max_online_enrollments {
            cfg.max_online_enrollments = v;
        }
        if let Some(v) = self.display_mode {
            cfg.display_mode = v;
        }
        if let Some(v) = self.context_turns {
            cfg.correction_context_turns = v;
        }
        if let Some(v) = self.match_threshold {
            cfg.match_threshold = v;
        }
        if let Some(v) = self.collar {
            cfg.collar = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn mapping(&self) -> Mapping {
        self.mapping.unwrap_or(Mapping::Identity)
    }

    /// Gateway selection: an endpoint wins over a mock; default is the
    /// rule-based mock.
    pub fn gateway(&self) -> Result<GatewaySpec> {
        if let Some(url) = &self.llm_endpoint {
            return Ok(GatewaySpec::Http {
                endpoint: url.clone(),
                token_env: self.llm_token_env.clone().unwrap_or_else(|| crate::gateway::TOKEN_ENV.to_string()),
            });
        }
        match &self.llm_mock {
            None => Ok(GatewaySpec::Rules),
            Some(m) => GatewaySpec::parse_mock(m),
        }
    }
}
