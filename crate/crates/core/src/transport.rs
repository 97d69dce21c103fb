//! Blocking JSON-over-HTTP client shared by the remote knowledge source,
//! embedder and QA oracle.

use std::fmt;
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::Serialize;

/// Counting semaphore bounding in-flight requests.
struct Limiter {
    in_flight: Mutex<usize>,
    freed: Condvar,
    max: usize,
}

impl Limiter {
    fn new(max: usize) -> Self {
        Limiter { in_flight: Mutex::new(0), freed: Condvar::new(), max: max.max(1) }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut n = self.in_flight.lock().expect("limiter lock");
        while *n >= self.max {
            n = self.freed.wait(n).expect("limiter lock");
        }
        *n += 1;
        Permit(self)
    }
}

struct Permit<'a>(&'a Limiter);

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.in_flight.lock().expect("limiter lock") -= 1;
        self.0.freed.notify_one();
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransportError {
    pub message: String,
    pub attempts: u32,
}

impl fmt::Display for TransportError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (after {} attempt(s))", self.message, self.attempts)
    }
}

impl std::error::Error for TransportError {}

/// Connection settings for a remote endpoint.
#[derive(Clone)]
pub struct Endpoint {
    pub url: String,
    /// Sent as a bearer token. Never printed.
    pub api_key: Option<String>,
    pub model: Option<String>,
    pub max_in_flight: usize,
    pub max_attempts: u32,
    pub timeout: Duration,
    /// Delay before the second attempt; doubled for each later one.
    pub backoff: Duration,
}

impl fmt::Debug for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Endpoint")
            .field("url", &self.url)
            .field("api_key", &self.api_key.as_ref().map(|_| "<redacted>"))
            .field("model", &self.model)
            .field("max_in_flight", &self.max_in_flight)
            .field("max_attempts", &self.max_attempts)
            .field("timeout", &self.timeout)
            .field("backoff", &self.backoff)
            .finish()
    }
}

impl Endpoint {
    pub fn new(url: impl Into<String>) -> Self {
        Endpoint {
            url: url.into(),
            api_key: None,
            model: None,
            max_in_flight: 4,
            max_attempts: 3,
            timeout: Duration::from_secs(60),
            backoff: Duration::from_millis(250),
        }
    }

    pub fn with_api_key(mut self, key: Option<String>) -> Self {
        self.api_key = key;
        self
    }

    pub fn with_model(mut self, model: Option<String>) -> Self {
        self.model = model;
        self
    }
}

pub struct JsonClient {
    endpoint: Endpoint,
    http: reqwest::blocking::Client,
    limiter: Limiter,
}

impl fmt::Debug for JsonClient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("JsonClient").field("endpoint", &self.endpoint).finish()
    }
}

impl JsonClient {
    pub fn new(endpoint: Endpoint) -> Result<Self, TransportError> {
        let http = reqwest::blocking::Client::builder()
            .timeout(endpoint.timeout)
            .build()
            .map_err(|e| TransportError { message: e.to_string(), attempts: 0 })?;
        let limiter = Limiter::new(endpoint.max_in_flight);
        Ok(JsonClient { endpoint, http, limiter })
    }

    pub fn endpoint(&self) -> &Endpoint {
        &self.endpoint
    }

    /// POSTs `body` to `base_url + path`, retrying transport and 5xx failures.
    pub fn post<B: Serialize, R: DeserializeOwned>(&self, path: &str, body: &B) -> Result<R, TransportError> {
        let url = format!("{}{}", self.endpoint.url.trim_end_matches('/'), path);
        let max = self.endpoint.max_attempts.max(1);
        let mut last = String::new();
        for attempt in 1..=max {
            let _permit = self.limiter.acquire();
            let mut req = self.http.post(&url).json(body);
            if let Some(key) = &self.endpoint.api_key {
                req = req.bearer_auth(key);
            }
            match req.send() {
                Ok(resp) if resp.status().is_success() => {
                    return resp
                        .json::<R>()
                        .map_err(|e| TransportError { message: format!("malformed response: {e}"), attempts: attempt });
                }
                Ok(resp) if resp.status().is_client_error() => {
                    return Err(TransportError { message: format!("{url}: HTTP {}", resp.status()), attempts: attempt });
                }
                Ok(resp) => last = format!("{url}: HTTP {}", resp.status()),
                Err(e) => last = format!("{url}: {e}"),
            }
            tracing::debug!(attempt, error = %last, "request failed");
            if attempt < max {
                std::thread::sleep(self.endpoint.backoff.saturating_mul(1 << (attempt - 1).min(6)));
            }
        }
        Err(TransportError { message: last, attempts: max })
    }
}
