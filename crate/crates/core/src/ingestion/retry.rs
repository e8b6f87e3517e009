use std::future::Future;
use std::time::Duration;

use serde::{Deserialize, Serialize};

/// Bounded retry with exponential backoff: `base_delay_ms * 2^(attempt-1)`
/// between attempts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub base_delay_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { attempts: 3, base_delay_ms: 200 }
    }
}

pub(crate) enum Attempt<T, E> {
    Done(T),
    Retry(E),
    Fatal(E),
}

impl RetryPolicy {
    pub fn immediate(attempts: u32) -> Self {
        Self { attempts, base_delay_ms: 0 }
    }

    fn delay(&self, attempt: u32) -> Duration {
        let factor = 1u64 << (attempt.saturating_sub(1)).min(16);
        Duration::from_millis(self.base_delay_ms.saturating_mul(factor))
    }

    /// Runs `op` until it succeeds, fails fatally, or attempts run out.
    /// Returns the last error together with the number of attempts made.
    pub(crate) async fn run<T, E, F, Fut>(&self, mut op: F) -> Result<T, (E, u32)>
    where
        F: FnMut() -> Fut,
        Fut: Future<Output = Attempt<T, E>>,
    {
        let attempts = self.attempts.max(1);
        let mut n = 0;
        loop {
            n += 1;
            match op().await {
                Attempt::Done(v) => return Ok(v),
                Attempt::Fatal(e) => return Err((e, n)),
                Attempt::Retry(e) if n >= attempts => return Err((e, n)),
                Attempt::Retry(_) => tokio::time::sleep(self.delay(n)).await,
            }
        }
    }
}

/// GET with retries on transport errors, 429 and 5xx. Other non-success
/// statuses fail immediately.
pub(crate) async fn get_bytes(
    client: &reqwest::Client,
    url: &str,
    query: &[(String, String)],
    headers: &[(String, String)],
    policy: &RetryPolicy,
) -> Result<Vec<u8>, super::IngestError> {
    use super::IngestError;
    let result = policy
        .run(|| async {
            let mut req = client.get(url).query(query);
            for (k, v) in headers {
                req = req.header(k.as_str(), v.as_str());
            }
            let resp = match req.send().await {
                Ok(r) => r,
                Err(e) => {
                    return Attempt::Retry(IngestError::Network {
                        url: url.to_string(),
                        attempts: 0,
                        reason: e.to_string(),
                    })
                }
            };
            let status = resp.status();
            if status.is_server_error() || status.as_u16() == 429 {
                return Attempt::Retry(IngestError::Status { url: url.to_string(), status: status.as_u16() });
            }
            if !status.is_success() {
                return Attempt::Fatal(IngestError::Status { url: url.to_string(), status: status.as_u16() });
            }
            match resp.bytes().await {
                Ok(b) => Attempt::Done(b.to_vec()),
                Err(e) => {
                    Attempt::Retry(IngestError::Network { url: url.to_string(), attempts: 0, reason: e.to_string() })
                }
            }
        })
        .await;
    result.map_err(|(e, n)| match e {
        IngestError::Network { url, reason, .. } => IngestError::Network { url, attempts: n, reason },
        other => other,
    })
}
