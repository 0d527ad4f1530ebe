//! Remote provider: JSON-over-HTTP services with retry, bounded concurrency,
//! a content-addressed response cache, and single-flight per cache key.

use std::fs;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::sync::{KeyedLocks, Semaphore};
use super::{
    validate_single_mask, validate_snippet, FillMask, GatewayError, GatewayResult,
    GenerateQuestions, GeneratedQa, HttpTransport, MaskSuggestion, ProviderConfig, Translate,
};
use crate::dataset::AnswerSpan;

/// One HTTP POST to a provider endpoint. Implementations return the raw
/// response body on 2xx and classify failures as retryable
/// ([`GatewayError::Transport`]) or not.
pub trait Transport: Send + Sync {
    fn post(&self, path: &str, body: &str) -> GatewayResult<String>;
}

pub struct RemoteProvider {
    transport: Arc<dyn Transport>,
    max_retries: u32,
    backoff_base: Duration,
    cache_dir: Option<PathBuf>,
    limiter: Semaphore,
    inflight: KeyedLocks,
    remote_calls: AtomicU64,
    dropped_items: AtomicU64,
}

impl RemoteProvider {
    /// Build a provider over HTTP from its configuration. The endpoint must
    /// be a URL; stub endpoints have their own types.
    pub fn from_config(cfg: &ProviderConfig) -> GatewayResult<Self> {
        if cfg.endpoint == "stub" {
            return Err(GatewayError::Argument(
                "endpoint is \"stub\"; construct stub providers instead".into(),
            ));
        }
        let transport = HttpTransport::new(&cfg.endpoint, cfg.timeout, cfg.bearer_token.clone());
        Ok(Self::with_transport(Arc::new(transport), cfg))
    }

    /// Build over any transport (tests use instrumented fakes).
    pub fn with_transport(transport: Arc<dyn Transport>, cfg: &ProviderConfig) -> Self {
        RemoteProvider {
            transport,
            max_retries: cfg.max_retries,
            backoff_base: cfg.backoff_base,
            cache_dir: cfg.cache_dir.clone(),
            limiter: Semaphore::new(cfg.max_concurrent),
            inflight: KeyedLocks::new(),
            remote_calls: AtomicU64::new(0),
            dropped_items: AtomicU64::new(0),
        }
    }

    /// Remote calls actually performed (cache hits excluded, retries
    /// included).
    pub fn remote_calls(&self) -> u64 {
        self.remote_calls.load(Ordering::Relaxed)
    }

    /// Generated-question items dropped by local span validation.
    pub fn dropped_items(&self) -> u64 {
        self.dropped_items.load(Ordering::Relaxed)
    }

    fn request(&self, service: &str, body: &str) -> GatewayResult<String> {
        let Some(cache_dir) = &self.cache_dir else {
            return self.call_with_retry(service, body);
        };
        let key = cache_key(service, body);
        let _permit = self.inflight.acquire(&key);
        let path = cache_dir.join(service).join(format!("{}.json", key));
        if path.exists() {
            return fs::read_to_string(&path).map_err(|e| GatewayError::Cache(e.to_string()));
        }
        let response = self.call_with_retry(service, body)?;
        let parent = path.parent().expect("cache file has parent");
        fs::create_dir_all(parent).map_err(|e| GatewayError::Cache(e.to_string()))?;
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, &response)
            .and_then(|_| fs::rename(&tmp, &path))
            .map_err(|e| GatewayError::Cache(e.to_string()))?;
        Ok(response)
    }

    fn call_with_retry(&self, service: &str, body: &str) -> GatewayResult<String> {
        let path = format!("/{}", service);
        let mut attempt = 0u32;
        loop {
            let outcome = {
                let _permit = self.limiter.acquire();
                self.remote_calls.fetch_add(1, Ordering::Relaxed);
                self.transport.post(&path, body)
            };
            match outcome {
                Ok(response) => return Ok(response),
                Err(e) if e.is_retryable() && attempt < self.max_retries => {
                    let delay = self.backoff_base.saturating_mul(1 << attempt.min(16));
                    log::warn!("{} attempt {} failed ({}), retrying", service, attempt + 1, e);
                    std::thread::sleep(delay);
                    attempt += 1;
                }
                Err(e) if e.is_retryable() => {
                    return Err(GatewayError::Exhausted {
                        attempts: attempt + 1,
                        message: e.to_string(),
                    });
                }
                Err(e) => return Err(e),
            }
        }
    }
}

fn cache_key(service: &str, body: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(service.as_bytes());
    hasher.update(b"\n");
    hasher.update(body.as_bytes());
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{:02x}", b)).collect()
}

#[derive(Serialize)]
struct TranslateRequest<'a> {
    text: &'a str,
    source: &'a str,
    target: &'a str,
}

#[derive(Deserialize)]
struct TranslateResponse {
    text: String,
}

#[derive(Serialize)]
struct FillMaskRequest<'a> {
    text: &'a str,
}

#[derive(Deserialize)]
struct FillMaskResponse {
    suggestions: Vec<MaskSuggestion>,
}

#[derive(Serialize)]
struct GenerateRequest<'a> {
    snippet: &'a str,
    max_items: usize,
}

#[derive(Deserialize)]
struct GenerateResponse {
    items: Vec<GenerateItem>,
}

#[derive(Deserialize)]
struct GenerateItem {
    question: String,
    answer: String,
    start: usize,
    end: usize,
}

fn encode<T: Serialize>(value: &T) -> GatewayResult<String> {
    serde_json::to_string(value).map_err(|e| GatewayError::Malformed(e.to_string()))
}

fn decode<T: for<'de> Deserialize<'de>>(raw: &str) -> GatewayResult<T> {
    serde_json::from_str(raw).map_err(|e| GatewayError::Malformed(e.to_string()))
}

impl Translate for RemoteProvider {
    fn translate(&self, text: &str, source: &str, target: &str) -> GatewayResult<String> {
        let body = encode(&TranslateRequest {
            text,
            source,
            target,
        })?;
        let raw = self.request("translate", &body)?;
        Ok(decode::<TranslateResponse>(&raw)?.text)
    }
}

impl FillMask for RemoteProvider {
    fn fill_mask(&self, text_with_mask: &str) -> GatewayResult<Vec<MaskSuggestion>> {
        validate_single_mask(text_with_mask)?;
        let body = encode(&FillMaskRequest {
            text: text_with_mask,
        })?;
        let raw = self.request("fill_mask", &body)?;
        let mut suggestions = decode::<FillMaskResponse>(&raw)?.suggestions;
        for s in &suggestions {
            if !(0.0..=1.0).contains(&s.probability) {
                return Err(GatewayError::Malformed(format!(
                    "probability {} for {:?} outside [0, 1]",
                    s.probability, s.word
                )));
            }
        }
        suggestions.sort_by(|a, b| {
            b.probability
                .partial_cmp(&a.probability)
                .expect("finite probabilities")
                .then_with(|| a.word.cmp(&b.word))
        });
        Ok(suggestions)
    }
}

impl GenerateQuestions for RemoteProvider {
    fn generate_questions(
        &self,
        snippet: &str,
        max_items: usize,
    ) -> GatewayResult<Vec<GeneratedQa>> {
        validate_snippet(snippet)?;
        let body = encode(&GenerateRequest { snippet, max_items })?;
        let raw = self.request("generate_questions", &body)?;
        let items = decode::<GenerateResponse>(&raw)?.items;
        let mut out = Vec::new();
        for item in items {
            let qa = GeneratedQa {
                question: item.question,
                answer: item.answer,
                span: AnswerSpan::new(item.start, item.end),
            };
            if qa.is_valid_for(snippet) {
                out.push(qa);
            } else {
                self.dropped_items.fetch_add(1, Ordering::Relaxed);
            }
        }
        out.truncate(max_items);
        Ok(out)
    }
}
