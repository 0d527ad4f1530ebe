//! Gateway to the three model-backed text services the augmenters delegate
//! to: translation, masked-token suggestion, and question generation.
//!
//! Each service is a trait. The remote implementation speaks JSON over HTTP
//! POST (`/translate`, `/fill_mask`, `/generate_questions`) with retries,
//! bounded concurrency, and an on-disk response cache; the stubs are
//! deterministic in-process implementations for tests and offline runs.

mod http;
mod remote;
mod stubs;
mod sync;

pub use http::HttpTransport;
pub use remote::{RemoteProvider, Transport};
pub use stubs::{strip_markers, IdentityTranslate, MarkerTranslate, RuleQgen, StubFillMask};

use std::path::PathBuf;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::AnswerSpan;
use crate::text;

/// Mask placeholder recognized by the fill-mask service.
pub const MASK_TOKEN: &str = "[MASK]";

pub type GatewayResult<T> = std::result::Result<T, GatewayError>;

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("invalid argument: {0}")]
    Argument(String),

    /// Transient transport failure (connection, timeout, 5xx).
    #[error("transport error: {0}")]
    Transport(String),

    /// Non-retryable remote rejection (4xx).
    #[error("request rejected with status {status}: {message}")]
    Rejected { status: u16, message: String },

    #[error("provider failed after {attempts} attempts: {message}")]
    Exhausted { attempts: u32, message: String },

    #[error("malformed provider response: {0}")]
    Malformed(String),

    #[error("provider cache error: {0}")]
    Cache(String),
}

impl GatewayError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, GatewayError::Transport(_))
    }
}

/// One masked-token replacement proposal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskSuggestion {
    pub word: String,
    pub probability: f64,
}

/// One generated question with its answer span in the source snippet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedQa {
    pub question: String,
    pub answer: String,
    pub span: AnswerSpan,
}

impl GeneratedQa {
    /// The span must select exactly the answer text in the snippet.
    pub fn is_valid_for(&self, snippet: &str) -> bool {
        text::slice_chars(snippet, self.span.start, self.span.end)
            .is_some_and(|s| s == self.answer)
    }
}

#[derive(Debug, Clone)]
pub struct ProviderConfig {
    /// Base URL of the remote provider, or the literal `"stub"`.
    pub endpoint: String,
    pub timeout: Duration,
    pub max_retries: u32,
    pub max_concurrent: usize,
    pub cache_dir: Option<PathBuf>,
    pub bearer_token: Option<String>,
    /// First retry delay; doubles per attempt.
    pub backoff_base: Duration,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        ProviderConfig {
            endpoint: "stub".into(),
            timeout: Duration::from_secs(30),
            max_retries: 3,
            max_concurrent: 4,
            cache_dir: None,
            bearer_token: None,
            backoff_base: Duration::from_millis(100),
        }
    }
}

/// Round-trip translation service.
pub trait Translate: Send + Sync {
    fn translate(&self, text: &str, source: &str, target: &str) -> GatewayResult<String>;
}

/// Masked-token suggestion service. Input must contain exactly one
/// [`MASK_TOKEN`]; suggestions come back sorted by probability descending.
pub trait FillMask: Send + Sync {
    fn fill_mask(&self, text_with_mask: &str) -> GatewayResult<Vec<MaskSuggestion>>;
}

/// Question generation service. Implementations only return items whose
/// span locates the answer in the snippet.
pub trait GenerateQuestions: Send + Sync {
    fn generate_questions(
        &self,
        snippet: &str,
        max_items: usize,
    ) -> GatewayResult<Vec<GeneratedQa>>;
}

pub(crate) fn validate_single_mask(text: &str) -> GatewayResult<()> {
    let count = text.matches(MASK_TOKEN).count();
    if count != 1 {
        return Err(GatewayError::Argument(format!(
            "expected exactly one {} placeholder, found {}",
            MASK_TOKEN, count
        )));
    }
    Ok(())
}

pub(crate) fn validate_snippet(snippet: &str) -> GatewayResult<()> {
    if snippet.is_empty() {
        return Err(GatewayError::Argument("snippet must be non-empty".into()));
    }
    Ok(())
}
