//! Gateway selection and the HTTP transport.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use spkfix_core::feedback::{
    EchoGateway, GatewayRequest, GatewayResponse, RuleBasedGateway, ScriptedGateway, TextGateway,
};

use crate::bundle::read_text;
use crate::error::{Error, Result};

/// Environment variable holding the bearer token for the HTTP gateway.
pub const TOKEN_ENV: &str = "SPKFIX_LLM_TOKEN";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum GatewaySpec {
    Echo,
    Rules,
    /// JSON object mapping request keys to response texts.
    Scripted { path: PathBuf },
    Http { endpoint: String, token_env: String },
}

impl GatewaySpec {
    /// `echo`, `rules`, or `scripted:<path>`.
    pub fn parse_mock(s: &str) -> Result<Self> {
        match s {
            "echo" => Ok(GatewaySpec::Echo),
            "rules" => Ok(GatewaySpec::Rules),
            _ => match s.strip_prefix("scripted:") {
                Some(p) if !p.is_empty() => Ok(GatewaySpec::Scripted { path: PathBuf::from(p) }),
                _ => Err(Error::Config(format!("unknown mock `{s}` (echo, rules, scripted:<path>)"))),
            },
        }
    }

    pub fn is_mock(&self) -> bool {
        !matches!(self, GatewaySpec::Http { .. })
    }

    pub fn build(&self) -> Result<Box<dyn TextGateway + Send>> {
        Ok(match self {
            GatewaySpec::Echo => Box::new(EchoGateway),
            GatewaySpec::Rules => Box::new(RuleBasedGateway::default()),
            GatewaySpec::Scripted { path } => {
                let map: BTreeMap<String, String> = serde_json::from_str(&read_text(path)?)
                    .map_err(|e| Error::format(path.display().to_string(), e.line(), e.to_string()))?;
                Box::new(ScriptedGateway::from_map(map))
            }
            GatewaySpec::Http { endpoint, token_env } => {
                Box::new(HttpGateway::new(endpoint.clone(), std::env::var(token_env).ok()))
            }
        })
    }
}

/// POSTs `{"prompt_name", "filled_template"}` as JSON and expects `{"text"}` back.
pub struct HttpGateway {
    endpoint: String,
    token: Option<String>,
    agent: ureq::Agent,
}

impl HttpGateway {
    pub fn new(endpoint: String, token: Option<String>) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(60)))
            .http_status_as_error(false)
            .build()
            .into();
        Self { endpoint, token, agent }
    }
}

impl TextGateway for HttpGateway {
    fn complete(&mut self, request: &GatewayRequest) -> spkfix_core::Result<GatewayResponse> {
        let fail = |m: String| spkfix_core::Error::Gateway(m);
        let body = serde_json::to_string(request).map_err(|e| fail(e.to_string()))?;
        let mut req = self.agent.post(&self.endpoint).header("Content-Type", "application/json");
        if let Some(t) = &self.token {
            req = req.header("Authorization", &format!("Bearer {t}"));
        }
        let mut resp = req.send(body.as_str()).map_err(|e| fail(e.to_string()))?;
        let status = resp.status();
        let text = resp.body_mut().read_to_string().map_err(|e| fail(e.to_string()))?;
        if !status.is_success() {
            return Err(fail(format!("HTTP {status}: {text}")));
        }
        serde_json::from_str::<GatewayResponse>(&text).map_err(|e| fail(format!("bad response body: {e}")))
    }
}
