//! HTTP transport over ureq.

use std::time::Duration;

use super::remote::Transport;
use super::{GatewayError, GatewayResult};

pub struct HttpTransport {
    agent: ureq::Agent,
    base: String,
    bearer_token: Option<String>,
}

impl HttpTransport {
    pub fn new(base: &str, timeout: Duration, bearer_token: Option<String>) -> Self {
        let config = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build();
        HttpTransport {
            agent: config.into(),
            base: base.trim_end_matches('/').to_string(),
            bearer_token,
        }
    }
}

impl Transport for HttpTransport {
    fn post(&self, path: &str, body: &str) -> GatewayResult<String> {
        let url = format!("{}{}", self.base, path);
        let mut request = self
            .agent
            .post(&url)
            .header("content-type", "application/json");
        if let Some(token) = &self.bearer_token {
            request = request.header("authorization", format!("Bearer {}", token));
        }
        let mut response = request
            .send(body)
            .map_err(|e| GatewayError::Transport(e.to_string()))?;
        let status = response.status().as_u16();
        let text = response
            .body_mut()
            .read_to_string()
            .map_err(|e| GatewayError::Transport(e.to_string()))?;
        match status {
            200..=299 => Ok(text),
            500..=599 => Err(GatewayError::Transport(format!(
                "server error {}: {}",
                status,
                text.chars().take(200).collect::<String>()
            ))),
            _ => Err(GatewayError::Rejected {
                status,
                message: text.chars().take(200).collect(),
            }),
        }
    }
}
