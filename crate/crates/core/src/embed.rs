//! Sentence embeddings and cosine similarity.
//!
//! The default [`HashEmbedder`] is a hashed bag of word tokens: every
//! token is hashed with 64-bit FNV-1a into one of `dim` buckets, counts are
//! accumulated and the result is L2-normalized. It needs no model files and
//! gives identical vectors on every platform. [`HttpEmbedder`] calls an
//! external embeddings endpoint instead.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::text::{self, NormalizedText};

pub const DEFAULT_DIM: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct Embedding<T> {
    components: Vec<T>,
}

impl<T: Scalar> Embedding<T> {
    pub fn new(components: Vec<T>) -> Self {
        Embedding { components }
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[T] {
        &self.components
    }

    pub fn norm(&self) -> T {
        self.components
            .iter()
            .fold(T::zero(), |acc, &x| acc + x * x)
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.components.iter().all(|x| x.is_finite())
    }

    /// Scales to unit length. Fails on a zero vector.
    pub fn normalized(mut self) -> Result<Self> {
        let n = self.norm();
        if n <= T::zero() || !n.is_finite() {
            return Err(Error::ZeroNorm);
        }
        for x in &mut self.components {
            *x = *x / n;
        }
        Ok(self)
    }
}

/// Cosine of the angle between `a` and `b`, clamped into `[-1, 1]`.
pub fn cosine_sim<T: Scalar>(a: &Embedding<T>, b: &Embedding<T>) -> Result<T> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    let (na, nb) = (a.norm(), b.norm());
    if na <= T::zero() || nb <= T::zero() {
        return Err(Error::ZeroNorm);
    }
    let dot = a
        .components
        .iter()
        .zip(&b.components)
        .fold(T::zero(), |acc, (&x, &y)| acc + x * y);
    Ok((dot / (na * nb)).max(-T::one()).min(T::one()))
}

pub trait Embedder<T: Scalar>: Send + Sync {
    fn embed(&self, text: &str) -> Result<Embedding<T>>;

    fn dim(&self) -> usize;
}

impl<T: Scalar, E: Embedder<T> + ?Sized> Embedder<T> for &E {
    fn embed(&self, text: &str) -> Result<Embedding<T>> {
        (**self).embed(text)
    }

    fn dim(&self) -> usize {
        (**self).dim()
    }
}

pub(crate) fn fnv1a64(bytes: &[u8]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    bytes
        .iter()
        .fold(OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(PRIME))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashEmbedder {
    dim: usize,
}

impl HashEmbedder {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidConfig(
                "embedding dimension must be positive".into(),
            ));
        }
        Ok(HashEmbedder { dim })
    }
}

impl Default for HashEmbedder {
    fn default() -> Self {
        HashEmbedder { dim: DEFAULT_DIM }
    }
}

impl<T: Scalar> Embedder<T> for HashEmbedder {
    fn embed(&self, text: &str) -> Result<Embedding<T>> {
        let trimmed = text.trim();
        if trimmed.is_empty() {
            return Err(Error::EmptyInput);
        }
        let norm = NormalizedText::new(trimmed);
        let tokens = text::tokenize(&norm.chars);
        let mut counts = vec![0u32; self.dim];
        if tokens.is_empty() {
            // punctuation-only text still gets a non-zero vector
            let whole = norm.as_string();
            counts[(fnv1a64(whole.as_bytes()) % self.dim as u64) as usize] += 1;
        }
        for t in &tokens {
            counts[(fnv1a64(t.text.as_bytes()) % self.dim as u64) as usize] += 1;
        }
        let v = counts
            .into_iter()
            .map(|c| T::from_f64_lossy(f64::from(c)))
            .collect();
        Embedding::new(v).normalized()
    }

    fn dim(&self) -> usize {
        self.dim
    }
}

/// Endpoint settings for an external embeddings service speaking the
/// common `{"model", "input"} -> {"data": [{"embedding": [...]}]}` shape.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmbeddingProviderConfig {
    pub endpoint: String,
    pub model_id: String,
    /// Name of the environment variable holding the bearer token.
    #[serde(default)]
    pub api_key_env: Option<String>,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: f64,
    pub dim: usize,
}

fn default_timeout_secs() -> f64 {
    30.0
}

#[derive(Debug)]
pub struct HttpEmbedder {
    config: EmbeddingProviderConfig,
    agent: ureq::Agent,
}

impl HttpEmbedder {
    pub fn new(config: EmbeddingProviderConfig) -> Result<Self> {
        if config.dim == 0 || !(config.timeout_secs > 0.0) {
            return Err(Error::InvalidConfig(
                "embedding provider needs dim > 0 and timeout > 0".into(),
            ));
        }
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(config.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(HttpEmbedder { config, agent })
    }
}

#[derive(Deserialize)]
struct EmbeddingResponse {
    data: Vec<EmbeddingDatum>,
}

#[derive(Deserialize)]
struct EmbeddingDatum {
    embedding: Vec<f64>,
}

impl<T: Scalar> Embedder<T> for HttpEmbedder {
    fn embed(&self, text: &str) -> Result<Embedding<T>> {
        if text.trim().is_empty() {
            return Err(Error::EmptyInput);
        }
        let body = serde_json::json!({ "model": self.config.model_id, "input": text });
        let mut req = self.agent.post(&self.config.endpoint);
        if let Some(var) = &self.config.api_key_env {
            let key = std::env::var(var).map_err(|_| Error::MissingSecret(var.clone()))?;
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req.send_json(&body).map_err(|e| Error::Transport {
            attempts: 1,
            message: e.to_string(),
        })?;
        let status = resp.status().as_u16();
        let raw = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| Error::Transport {
                attempts: 1,
                message: e.to_string(),
            })?;
        if status != 200 {
            return Err(Error::HttpStatus { status, body: raw });
        }
        let vector = serde_json::from_str::<EmbeddingResponse>(&raw)
            .ok()
            .and_then(|r| r.data.into_iter().next())
            .ok_or(Error::MalformedResponse { raw })?
            .embedding;
        if vector.len() != self.config.dim {
            return Err(Error::DimensionMismatch {
                left: self.config.dim,
                right: vector.len(),
            });
        }
        let e = Embedding::new(vector.into_iter().map(T::from_f64_lossy).collect());
        if !e.is_finite() {
            return Err(Error::InvalidConfig(
                "embedding has non-finite components".into(),
            ));
        }
        e.normalized()
    }

    fn dim(&self) -> usize {
        self.config.dim
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn emb(v: &[f64]) -> Embedding<f64> {
        Embedding::new(v.to_vec())
    }

    #[test]
    fn fnv_reference_values() {
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn fallback_is_deterministic_and_unit() {
        let e = HashEmbedder::default();
        let a: Embedding<f64> = e.embed("I saw her duck.").unwrap();
        let b: Embedding<f64> = e.embed("I saw her duck.").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.dim(), 256);
        assert!((a.norm() - 1.0).abs() < 1e-12);
        assert!((cosine_sim(&a, &b).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn fallback_ignores_surrounding_whitespace_and_case() {
        let e = HashEmbedder::default();
        let a: Embedding<f64> = e.embed("abc").unwrap();
        let b: Embedding<f64> = e.embed("abc ").unwrap();
        let c: Embedding<f64> = e.embed("  ABC").unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn fallback_rejects_empty_and_handles_punctuation() {
        let e = HashEmbedder::default();
        assert!(matches!(
            Embedder::<f64>::embed(&e, "   "),
            Err(Error::EmptyInput)
        ));
        let p: Embedding<f64> = e.embed("?!").unwrap();
        assert!(p.norm() > 0.0);
    }

    #[test]
    fn fallback_f32_matches_f64() {
        let e = HashEmbedder::default();
        let a: Embedding<f64> = e.embed("the bank was closed").unwrap();
        let b: Embedding<f32> = e.embed("the bank was closed").unwrap();
        for (x, y) in a.components().iter().zip(b.components()) {
            assert!((x - f64::from(*y)).abs() < 1e-6);
        }
    }

    #[test]
    fn cosine_basics() {
        assert_eq!(
            cosine_sim(&emb(&[1.0, 0.0]), &emb(&[0.0, 1.0])).unwrap(),
            0.0
        );
        let v = emb(&[0.3, -1.2, 2.5]);
        let w = emb(&[0.6, -2.4, 5.0]);
        assert!((cosine_sim(&v, &w).unwrap() - 1.0).abs() < 1e-12);
        assert!((cosine_sim(&v, &emb(&[-0.3, 1.2, -2.5])).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn cosine_matches_hand_computation() {
        // a = (1, 2, 3), b = (4, -5, 6): dot = 12, |a| = sqrt(14), |b| = sqrt(77)
        let got = cosine_sim(&emb(&[1.0, 2.0, 3.0]), &emb(&[4.0, -5.0, 6.0])).unwrap();
        let want = 12.0 / (14.0f64.sqrt() * 77.0f64.sqrt());
        assert!((got - want).abs() < 1e-15);
    }

    #[test]
    fn cosine_errors() {
        assert!(matches!(
            cosine_sim(&emb(&[1.0]), &emb(&[1.0, 0.0])),
            Err(Error::DimensionMismatch { left: 1, right: 2 })
        ));
        assert!(matches!(
            cosine_sim(&emb(&[0.0, 0.0]), &emb(&[1.0, 0.0])),
            Err(Error::ZeroNorm)
        ));
    }
}
