//! State construction and information-theoretic metrics.
//!
//! A [`State`] holds one entry per interpretation: its embedding, an
//! interned context id, an unnormalized activation weight and metadata
//! (source plus the feature vector of the text it came from). Weights are
//! normalized only inside [`state_entropy`].

use std::fmt;

use serde::Serialize;

use crate::embed::{Embedder, Embedding};
use crate::error::{Error, Result};
use crate::interp::{RawInterpretation, Source};
use crate::lexicon::{BitsMap, FeatureVector};
use crate::scalar::Scalar;

pub const DEFAULT_BETA: f64 = 0.5;
pub const LITERAL_CONTEXT: &str = "literal";

/// Index into a state's context table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ContextId(u32);

impl ContextId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntryMeta {
    pub source: Source,
    pub conflict: FeatureVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateEntry<T> {
    pub meaning: String,
    pub embedding: Embedding<T>,
    pub context: ContextId,
    pub weight: T,
    pub meta: EntryMeta,
}

#[derive(Debug, Clone, PartialEq)]
pub struct State<T> {
    source_text: String,
    entries: Vec<StateEntry<T>>,
    contexts: Vec<String>,
    collapsed_fallback: bool,
    warnings: Vec<String>,
}

impl<T: Scalar> State<T> {
    pub fn new(source_text: impl Into<String>) -> Self {
        State {
            source_text: source_text.into(),
            entries: Vec::new(),
            contexts: Vec::new(),
            collapsed_fallback: false,
            warnings: Vec::new(),
        }
    }

    pub fn source_text(&self) -> &str {
        &self.source_text
    }

    pub fn entries(&self) -> &[StateEntry<T>] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// True when nothing was extracted and the state holds only the
    /// literal text.
    pub fn is_collapsed_fallback(&self) -> bool {
        self.collapsed_fallback
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn add_warning(&mut self, w: impl Into<String>) {
        self.warnings.push(w.into());
    }

    /// Interns a context label.
    pub fn intern(&mut self, label: &str) -> ContextId {
        let idx = match self.contexts.iter().position(|c| c == label) {
            Some(i) => i,
            None => {
                self.contexts.push(label.to_string());
                self.contexts.len() - 1
            }
        };
        ContextId(idx as u32)
    }

    pub fn context_label(&self, id: ContextId) -> Option<&str> {
        self.contexts.get(id.index()).map(String::as_str)
    }

    /// Appends an entry whose context is given as a label.
    pub fn push(
        &mut self,
        meaning: impl Into<String>,
        embedding: Embedding<T>,
        context: &str,
        weight: T,
        meta: EntryMeta,
    ) {
        let context = self.intern(context);
        self.entries.push(StateEntry {
            meaning: meaning.into(),
            embedding,
            context,
            weight,
            meta,
        });
    }

    /// Appends every entry of `other`, re-interning its contexts.
    pub fn extend_from(&mut self, other: &State<T>) {
        for e in &other.entries {
            let label = other.context_label(e.context).unwrap_or(LITERAL_CONTEXT);
            self.push(
                e.meaning.clone(),
                e.embedding.clone(),
                label,
                e.weight,
                e.meta.clone(),
            );
        }
        self.warnings.extend(other.warnings.iter().cloned());
    }

    /// Multiplies every weight by `factor`.
    pub fn scale_weights(&mut self, factor: T) {
        for e in &mut self.entries {
            e.weight = e.weight * factor;
        }
    }

    pub fn set_weight(&mut self, index: usize, weight: T) {
        self.entries[index].weight = weight;
    }

    pub fn entries_mut(&mut self) -> &mut [StateEntry<T>] {
        &mut self.entries
    }

    /// Checks the well-formedness invariants: positive finite weights,
    /// resolvable non-empty contexts, finite embeddings of one dimension.
    pub fn validate(&self) -> std::result::Result<(), String> {
        let dim = self.entries.first().map(|e| e.embedding.dim());
        for (i, e) in self.entries.iter().enumerate() {
            if !(e.weight > T::zero()) || !e.weight.is_finite() {
                return Err(format!("entry {i} has weight {}", e.weight));
            }
            match self.context_label(e.context) {
                Some(l) if !l.is_empty() => {}
                _ => return Err(format!("entry {i} has no context label")),
            }
            if Some(e.embedding.dim()) != dim || !e.embedding.is_finite() {
                return Err(format!("entry {i} has a malformed embedding"));
            }
            if e.meaning.trim().is_empty() {
                return Err(format!("entry {i} has an empty meaning"));
            }
        }
        Ok(())
    }

    pub fn metrics(&self) -> Result<StateMetrics<T>> {
        let entropy_bits = state_entropy(self)?;
        Ok(StateMetrics {
            size: self.len(),
            entropy_bits,
            epr: epr_from(entropy_bits, self.len()),
        })
    }

    /// Index of the highest-weight entry; ties go to the lowest index.
    pub fn argmax(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, e) in self.entries.iter().enumerate() {
            match best {
                Some(b) if self.entries[b].weight >= e.weight => {}
                _ => best = Some(i),
            }
        }
        best
    }

    /// A copy holding only the argmax entry: what a model that commits to a
    /// single reading would keep.
    pub fn collapsed(&self) -> State<T> {
        let mut out = State::new(self.source_text.clone());
        out.collapsed_fallback = self.collapsed_fallback;
        if let Some(i) = self.argmax() {
            let e = &self.entries[i];
            let label = self.context_label(e.context).unwrap_or(LITERAL_CONTEXT);
            out.push(
                e.meaning.clone(),
                e.embedding.clone(),
                label,
                e.weight,
                e.meta.clone(),
            );
        }
        out
    }

    pub fn to_json(&self, include_embeddings: bool) -> Result<serde_json::Value> {
        let metrics = self.metrics()?;
        let view = StateJson {
            source_text: &self.source_text,
            collapsed_fallback: self.collapsed_fallback,
            warnings: &self.warnings,
            entries: self
                .entries
                .iter()
                .map(|e| EntryJson {
                    meaning: &e.meaning,
                    context: self.context_label(e.context).unwrap_or(""),
                    weight: e.weight.to_f64_lossy(),
                    source: e.meta.source,
                    conflict_bits: BitsMap(e.meta.conflict.bits()),
                    embedding: include_embeddings.then(|| {
                        e.embedding
                            .components()
                            .iter()
                            .map(|c| c.to_f64_lossy())
                            .collect()
                    }),
                })
                .collect(),
            metrics: MetricsJson {
                size: metrics.size,
                entropy_bits: metrics.entropy_bits.to_f64_lossy(),
                epr: metrics.epr.to_f64_lossy(),
            },
        };
        Ok(serde_json::to_value(view)?)
    }
}

#[derive(Serialize)]
struct StateJson<'a> {
    source_text: &'a str,
    entries: Vec<EntryJson<'a>>,
    metrics: MetricsJson,
    collapsed_fallback: bool,
    warnings: &'a [String],
}

#[derive(Serialize)]
struct EntryJson<'a> {
    meaning: &'a str,
    context: &'a str,
    weight: f64,
    source: Source,
    conflict_bits: BitsMap<'a>,
    #[serde(skip_serializing_if = "Option::is_none")]
    embedding: Option<Vec<f64>>,
}

#[derive(Serialize)]
struct MetricsJson {
    size: usize,
    entropy_bits: f64,
    epr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateMetrics<T> {
    pub size: usize,
    pub entropy_bits: T,
    pub epr: T,
}

/// Builds a state from extracted interpretations.
///
/// Each interpretation becomes one entry with weight
/// `confidence * (1 + beta)` when the text has any conflict marker and
/// `confidence` otherwise. Interpretations with non-positive confidence are
/// skipped. With nothing left, the state holds the whole text at weight 1
/// under the `literal` context and is flagged as a collapsed fallback.
pub fn construct_state<T, E>(
    text: &str,
    interps: &[RawInterpretation],
    fv: &FeatureVector,
    beta: f64,
    embedder: &E,
) -> Result<State<T>>
where
    T: Scalar,
    E: Embedder<T> + ?Sized,
{
    if !beta.is_finite() || beta < 0.0 {
        return Err(Error::InvalidConfig(format!(
            "beta must be finite and >= 0, got {beta}"
        )));
    }
    let boost = if fv.has_conflict() { 1.0 + beta } else { 1.0 };
    let mut state = State::new(text);
    for i in interps {
        if !(i.confidence > 0.0) {
            log::warn!("dropping zero-confidence interpretation {:?}", i.meaning);
            state.add_warning(format!(
                "dropped zero-confidence interpretation {:?}",
                i.meaning
            ));
            continue;
        }
        let v = embedder.embed(&i.meaning)?;
        let context = if i.context_label.trim().is_empty() {
            LITERAL_CONTEXT
        } else {
            i.context_label.trim()
        };
        state.push(
            i.meaning.clone(),
            v,
            context,
            T::from_f64_lossy(i.confidence * boost),
            EntryMeta {
                source: i.source,
                conflict: fv.clone(),
            },
        );
    }
    if state.is_empty() {
        let v = embedder.embed(text)?;
        state.push(
            text.trim(),
            v,
            LITERAL_CONTEXT,
            T::one(),
            EntryMeta {
                source: Source::Rule,
                conflict: fv.clone(),
            },
        );
        state.collapsed_fallback = true;
    }
    Ok(state)
}

/// Shannon entropy in bits of `w_i / sum(w)`.
pub fn entropy_of_weights<T: Scalar>(weights: &[T]) -> Result<T> {
    for (index, w) in weights.iter().enumerate() {
        if !(*w > T::zero()) || !w.is_finite() {
            return Err(Error::InvalidWeight {
                index,
                weight: w.to_f64_lossy(),
            });
        }
    }
    if weights.len() <= 1 {
        return Ok(T::zero());
    }
    let total = weights.iter().fold(T::zero(), |a, &w| a + w);
    let h = weights.iter().fold(T::zero(), |acc, &w| {
        let p = w / total;
        if p > T::zero() {
            acc - p * p.log2()
        } else {
            acc
        }
    });
    Ok(h.max(T::zero()))
}

pub fn state_entropy<T: Scalar>(state: &State<T>) -> Result<T> {
    let weights: Vec<T> = state.entries.iter().map(|e| e.weight).collect();
    entropy_of_weights(&weights)
}

fn epr_from<T: Scalar>(h: T, size: usize) -> T {
    if size < 2 {
        return T::zero();
    }
    let hmax = T::from_f64_lossy(size as f64).log2();
    (h / hmax).min(T::one())
}

/// `H(S) / log2 |S|`, defined as 0 for a single-entry state.
pub fn epr<T: Scalar>(state: &State<T>) -> Result<T> {
    Ok(epr_from(state_entropy(state)?, state.len()))
}

#[derive(Debug, Clone, PartialEq)]
pub enum NonCollapse {
    Pass,
    Fail(CollapseReason),
}

#[derive(Debug, Clone, PartialEq)]
pub enum CollapseReason {
    /// Fewer than two entries.
    Structural {
        size: usize,
    },
    /// At least two entries but zero entropy.
    Entropic,
    InvalidWeights(String),
}

impl fmt::Display for CollapseReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CollapseReason::Structural { size } => write!(f, "structural collapse: |S| = {size}"),
            CollapseReason::Entropic => f.write_str("entropy collapse: H(S) = 0"),
            CollapseReason::InvalidWeights(m) => write!(f, "invalid weights: {m}"),
        }
    }
}

/// Passes iff the state keeps at least two interpretations with positive
/// entropy.
pub fn check_noncollapse<T: Scalar>(state: &State<T>) -> NonCollapse {
    if state.len() < 2 {
        return NonCollapse::Fail(CollapseReason::Structural { size: state.len() });
    }
    match state_entropy(state) {
        Ok(h) if h > T::zero() => NonCollapse::Pass,
        Ok(_) => NonCollapse::Fail(CollapseReason::Entropic),
        Err(e) => NonCollapse::Fail(CollapseReason::InvalidWeights(e.to_string())),
    }
}
