use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{threshold_type, Detector, DetectorError, Prediction};
use crate::corpus::DocumentSet;
use crate::mbti::MbtiType;

/// Request body sent to a remote detector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemoteRequest {
    pub documents: Vec<String>,
}

/// Response body expected from a remote detector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemoteResponse {
    #[serde(rename = "type")]
    pub mbti: String,
    pub scores: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_scores: Option<Vec<f64>>,
}

const CLASS_SUM_TOLERANCE: f64 = 1e-6;

impl RemoteResponse {
    /// Checks ranges, lengths and that the type agrees with the scores.
    pub fn into_prediction(self) -> Result<Prediction, DetectorError> {
        let malformed = |msg: String| DetectorError::MalformedResponse(msg);
        let mbti = MbtiType::parse(&self.mbti).map_err(|e| malformed(e.to_string()))?;
        let scores: [f64; 4] = self
            .scores
            .as_slice()
            .try_into()
            .map_err(|_| malformed(format!("expected 4 scores, got {}", self.scores.len())))?;
        if let Some(bad) = scores.iter().find(|s| !(0.0..=1.0).contains(*s)) {
            return Err(malformed(format!("score {bad} outside [0, 1]")));
        }
        match self.class_scores {
            Some(probs) => {
                if probs.len() != MbtiType::COUNT {
                    return Err(malformed(format!(
                        "expected 16 class scores, got {}",
                        probs.len()
                    )));
                }
                if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
                    return Err(malformed("class score outside [0, 1]".into()));
                }
                let sum: f64 = probs.iter().sum();
                if (sum - 1.0).abs() > CLASS_SUM_TOLERANCE {
                    return Err(malformed(format!("class scores sum to {sum}")));
                }
                let argmax = Prediction::from_class_scores(probs.clone()).mbti;
                if argmax != mbti {
                    return Err(malformed(format!("type {mbti} is not the argmax class {argmax}")));
                }
                Ok(Prediction {
                    mbti,
                    per_dimension_scores: scores,
                    per_class_scores: Some(probs),
                })
            }
            None => {
                let thresholded = threshold_type(&scores);
                if thresholded != mbti {
                    return Err(malformed(format!(
                        "type {mbti} disagrees with scores (thresholded {thresholded})"
                    )));
                }
                Ok(Prediction::from_dimension_scores(scores))
            }
        }
    }
}

/// Blocks callers once `limit` permits are taken.
struct Semaphore {
    available: Mutex<usize>,
    freed: Condvar,
}

impl Semaphore {
    fn new(limit: usize) -> Self {
        Semaphore {
            available: Mutex::new(limit),
            freed: Condvar::new(),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut n = self.available.lock().unwrap_or_else(|e| e.into_inner());
        while *n == 0 {
            n = self.freed.wait(n).unwrap_or_else(|e| e.into_inner());
        }
        *n -= 1;
        Permit(self)
    }
}

struct Permit<'a>(&'a Semaphore);

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.available.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.freed.notify_one();
    }
}

/// HTTP client for an externally hosted detector (e.g. a fine-tuned LLM).
pub struct RemoteDetector {
    endpoint: String,
    client: reqwest::blocking::Client,
    permits: Semaphore,
}

impl RemoteDetector {
    /// `max_in_flight` bounds concurrent requests from this client.
    pub fn new(
        endpoint: impl Into<String>,
        timeout: Duration,
        max_in_flight: usize,
    ) -> Result<Self, DetectorError> {
        let endpoint = endpoint.into();
        if endpoint.trim().is_empty() {
            return Err(DetectorError::Transport("empty endpoint".into()));
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| DetectorError::Transport(e.to_string()))?;
        Ok(RemoteDetector {
            endpoint,
            client,
            permits: Semaphore::new(max_in_flight.max(1)),
        })
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }
}

fn transport(e: reqwest::Error) -> DetectorError {
    if e.is_timeout() {
        DetectorError::Timeout
    } else {
        DetectorError::Transport(e.to_string())
    }
}

/// Sends one document set and validates the reply.
pub fn remote_predict(client: &RemoteDetector, docs: &DocumentSet) -> Result<Prediction, DetectorError> {
    let _permit = client.permits.acquire();
    let body = RemoteRequest {
        documents: docs.documents().to_vec(),
    };
    let response = client
        .client
        .post(&client.endpoint)
        .json(&body)
        .send()
        .map_err(transport)?;
    let status = response.status();
    if !status.is_success() {
        return Err(DetectorError::Transport(format!("detector returned {status}")));
    }
    let text = response.text().map_err(transport)?;
    let parsed: RemoteResponse =
        serde_json::from_str(&text).map_err(|e| DetectorError::MalformedResponse(e.to_string()))?;
    parsed.into_prediction()
}

impl Detector for RemoteDetector {
    fn predict(&self, docs: &DocumentSet) -> Result<Prediction, DetectorError> {
        remote_predict(self, docs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn response(json: &str) -> Result<Prediction, DetectorError> {
        serde_json::from_str::<RemoteResponse>(json)
            .unwrap()
            .into_prediction()
    }

    #[test]
    fn valid_binary_response() {
        let p = response(r#"{"type":"INFJ","scores":[0.2,0.9,0.3,0.8]}"#).unwrap();
        assert_eq!(p.mbti.code(), "INFJ");
        assert_eq!(p.per_dimension_scores, [0.2, 0.9, 0.3, 0.8]);
    }

    #[test]
    fn bad_type_code() {
        assert!(matches!(
            response(r#"{"type":"XQZW","scores":[0.2,0.9,0.3,0.8]}"#),
            Err(DetectorError::MalformedResponse(_))
        ));
    }

    #[test]
    fn out_of_range_or_inconsistent_scores() {
        for json in [
            r#"{"type":"INFJ","scores":[0.2,1.9,0.3,0.8]}"#,
            r#"{"type":"INFJ","scores":[0.2,0.9,0.3]}"#,
            r#"{"type":"ENFJ","scores":[0.2,0.9,0.3,0.8]}"#,
        ] {
            assert!(
                matches!(response(json), Err(DetectorError::MalformedResponse(_))),
                "{json}"
            );
        }
    }

    #[test]
    fn class_scores_checked_against_type() {
        let mut probs = vec![0.0; 16];
        let infj: MbtiType = "INFJ".parse().unwrap();
        probs[infj.index()] = 1.0;
        let ok = RemoteResponse {
            mbti: "INFJ".into(),
            scores: vec![0.0, 1.0, 0.0, 1.0],
            class_scores: Some(probs.clone()),
        };
        assert_eq!(ok.into_prediction().unwrap().mbti, infj);
        let wrong = RemoteResponse {
            mbti: "ESTP".into(),
            scores: vec![0.0, 1.0, 0.0, 1.0],
            class_scores: Some(probs),
        };
        assert!(wrong.into_prediction().is_err());
        let unnormalized = RemoteResponse {
            mbti: "ENTJ".into(),
            scores: vec![0.5; 4],
            class_scores: Some(vec![0.5; 16]),
        };
        assert!(unnormalized.into_prediction().is_err());
    }
}
