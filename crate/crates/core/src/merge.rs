//! Similarity-based union of rule- and LLM-sourced interpretations.

use crate::embed::{cosine_sim, Embedder, Embedding};
use crate::error::{Error, Result};
use crate::interp::RawInterpretation;
use crate::scalar::Scalar;

pub const DEFAULT_TAU: f64 = 0.85;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MergePolicy {
    tau: f64,
    /// Also drop a second-list item that duplicates an earlier surviving
    /// second-list item.
    pub dedup_within_second: bool,
}

impl MergePolicy {
    pub fn new(tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "merge threshold must lie in (0, 1), got {tau}"
            )));
        }
        Ok(MergePolicy {
            tau,
            dedup_within_second: true,
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn with_dedup_within_second(mut self, on: bool) -> Self {
        self.dedup_within_second = on;
        self
    }
}

impl Default for MergePolicy {
    fn default() -> Self {
        MergePolicy {
            tau: DEFAULT_TAU,
            dedup_within_second: true,
        }
    }
}

/// Keeps all of `first`, then every item of `second` whose meaning has
/// similarity strictly below `tau` to every kept `first` item (and, with
/// `dedup_within_second`, to every earlier kept `second` item).
/// Similarity is cosine over embeddings of the meaning strings.
pub fn merge<T, E>(
    first: Vec<RawInterpretation>,
    second: Vec<RawInterpretation>,
    policy: &MergePolicy,
    embedder: &E,
) -> Result<Vec<RawInterpretation>>
where
    T: Scalar,
    E: Embedder<T> + ?Sized,
{
    if second.is_empty() {
        return Ok(first);
    }
    let tau = T::from_f64_lossy(policy.tau);
    let anchors: Vec<Embedding<T>> = first
        .iter()
        .map(|i| embedder.embed(&i.meaning))
        .collect::<Result<_>>()?;
    let mut survivors: Vec<Embedding<T>> = Vec::new();
    let mut out = first;
    for item in second {
        let v = embedder.embed(&item.meaning)?;
        let mut keep = true;
        for a in &anchors {
            if cosine_sim(&v, a)? >= tau {
                keep = false;
                break;
            }
        }
        if keep && policy.dedup_within_second {
            for s in &survivors {
                if cosine_sim(&v, s)? >= tau {
                    keep = false;
                    break;
                }
            }
        }
        if keep {
            survivors.push(v);
            out.push(item);
        }
    }
    Ok(out)
}
