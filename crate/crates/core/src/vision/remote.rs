//! HTTP client for an external image encoder.
//!
//! Wire protocol:
//! - `POST {endpoint}/embed` with a PNG body (`Content-Type: image/png`),
//!   answered by `{"dim": <int>, "values": [<float>, ...]}`.
//! - `GET {endpoint}/health`, answered by `{"dim": <int>}`.

use std::sync::{Condvar, Mutex};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{EmbeddingBackend, EmbeddingVector, RasterImage, VisionError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RemoteConfig {
    pub endpoint: String,
    #[serde(default = "default_timeout")]
    pub timeout_secs: f64,
    /// Extra attempts after the first failure.
    #[serde(default = "default_retries")]
    pub retries: usize,
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
    /// Pause between attempts.
    #[serde(default = "default_backoff")]
    pub backoff_ms: u64,
}

fn default_timeout() -> f64 {
    30.0
}
fn default_retries() -> usize {
    2
}
fn default_in_flight() -> usize {
    4
}
fn default_backoff() -> u64 {
    100
}

impl RemoteConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        RemoteConfig {
            endpoint: endpoint.into(),
            timeout_secs: default_timeout(),
            retries: default_retries(),
            max_in_flight: default_in_flight(),
            backoff_ms: default_backoff(),
        }
    }
}

#[derive(Deserialize)]
struct EmbedResponse {
    dim: usize,
    values: Vec<f64>,
}

#[derive(Deserialize)]
struct HealthResponse {
    dim: usize,
}

/// Counting semaphore capping concurrent requests.
pub(crate) struct Semaphore {
    permits: Mutex<usize>,
    cv: Condvar,
}

pub(crate) struct Permit<'a>(&'a Semaphore);

impl Semaphore {
    pub(crate) fn new(permits: usize) -> Self {
        Semaphore {
            permits: Mutex::new(permits.max(1)),
            cv: Condvar::new(),
        }
    }

    pub(crate) fn acquire(&self) -> Permit<'_> {
        let mut n = self.permits.lock().unwrap_or_else(|e| e.into_inner());
        while *n == 0 {
            n = self.cv.wait(n).unwrap_or_else(|e| e.into_inner());
        }
        *n -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut n = self.0.permits.lock().unwrap_or_else(|e| e.into_inner());
        *n += 1;
        self.0.cv.notify_one();
    }
}

/// Embedding backend reached over HTTP. Shareable across threads; at most
/// `max_in_flight` requests are outstanding at once.
pub struct RemoteBackend {
    config: RemoteConfig,
    agent: ureq::Agent,
    expected_dim: Option<usize>,
    gate: Semaphore,
}

impl std::fmt::Debug for RemoteBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RemoteBackend")
            .field("config", &self.config)
            .field("expected_dim", &self.expected_dim)
            .finish()
    }
}

impl RemoteBackend {
    pub fn new(config: RemoteConfig) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(
                config.timeout_secs.max(0.001),
            )))
            .http_status_as_error(false)
            .build()
            .into();
        let gate = Semaphore::new(config.max_in_flight);
        RemoteBackend {
            config,
            agent,
            expected_dim: None,
            gate,
        }
    }

    /// Probes `/health` and pins the advertised dimension.
    pub fn connect(config: RemoteConfig) -> Result<Self, VisionError> {
        let mut backend = Self::new(config);
        backend.expected_dim = Some(backend.health()?);
        Ok(backend)
    }

    pub fn expected_dim(&self) -> Option<usize> {
        self.expected_dim
    }

    fn url(&self, path: &str) -> String {
        format!("{}/{path}", self.config.endpoint.trim_end_matches('/'))
    }

    fn with_retries<T>(
        &self,
        mut attempt: impl FnMut() -> Result<T, String>,
    ) -> Result<T, VisionError> {
        let total = self.config.retries + 1;
        let mut last = String::new();
        for n in 0..total {
            if n > 0 && self.config.backoff_ms > 0 {
                thread::sleep(Duration::from_millis(self.config.backoff_ms));
            }
            match attempt() {
                Ok(v) => return Ok(v),
                Err(e) => last = e,
            }
        }
        Err(VisionError::Transport {
            attempts: total,
            message: last,
        })
    }

    /// Returns the dimension advertised by the health endpoint.
    pub fn health(&self) -> Result<usize, VisionError> {
        let url = self.url("health");
        self.with_retries(|| {
            let mut resp = self.agent.get(&url).call().map_err(|e| e.to_string())?;
            if !resp.status().is_success() {
                return Err(format!("health probe returned status {}", resp.status()));
            }
            let body = resp
                .body_mut()
                .read_to_string()
                .map_err(|e| e.to_string())?;
            let h: HealthResponse =
                serde_json::from_str(&body).map_err(|e| format!("bad health response: {e}"))?;
            Ok(h.dim)
        })
    }

    /// Sends one image and returns its normalized embedding.
    pub fn remote_embed(&self, img: &RasterImage) -> Result<EmbeddingVector, VisionError> {
        let png = img.encode_png()?;
        let url = self.url("embed");
        let _permit = self.gate.acquire();
        let resp = self.with_retries(|| {
            let mut resp = self
                .agent
                .post(&url)
                .header("Content-Type", "image/png")
                .send(&png[..])
                .map_err(|e| e.to_string())?;
            if !resp.status().is_success() {
                return Err(format!("embed request returned status {}", resp.status()));
            }
            let body = resp
                .body_mut()
                .read_to_string()
                .map_err(|e| e.to_string())?;
            serde_json::from_str::<EmbedResponse>(&body)
                .map_err(|e| format!("bad embed response: {e}"))
        })?;

        if resp.values.len() != resp.dim {
            return Err(VisionError::Dimension {
                expected: resp.dim,
                actual: resp.values.len(),
            });
        }
        if let Some(expected) = self.expected_dim {
            if resp.dim != expected {
                return Err(VisionError::Dimension {
                    expected,
                    actual: resp.dim,
                });
            }
        }
        EmbeddingVector::new(resp.values)
    }
}

impl EmbeddingBackend for RemoteBackend {
    fn embed(&self, img: &RasterImage) -> Result<EmbeddingVector, VisionError> {
        self.remote_embed(img)
    }
}
