//! Maps a piece of text to a weighted set of coexisting interpretations
//! instead of a single reading.
//!
//! The mapping runs in four steps:
//!
//! 1. [`MarkerLexicon::detect`] finds conflict markers and returns a
//!    [`FeatureVector`].
//! 2. [`rule_extract`] splits at contrast markers or expands hedges;
//!    [`llm_extract`] asks an [`InterpretationSource`] (recorded fixtures or
//!    a live endpoint) for readings.
//! 3. [`merge`] joins both lists, dropping near-duplicates by embedding
//!    similarity.
//! 4. [`construct_state`] weights the survivors and yields a [`State`],
//!    whose spread is measured by [`state_entropy`] and [`epr`].
//!
//! [`Mapper`] bundles these steps; [`eval`] runs a mapper over a corpus.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`). The aliases at
//! the crate root fix the scalar to `f64`, with `F32` variants alongside.

// `!(x > 0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod embed;
pub mod error;
pub mod eval;
pub mod interp;
pub mod lexicon;
pub mod llm;
pub mod merge;
pub mod pipeline;
pub mod rule;
pub mod scalar;
pub mod state;
pub mod text;

pub use embed::{cosine_sim, Embedder, EmbeddingProviderConfig, HashEmbedder, HttpEmbedder};
pub use error::{Error, Result};
pub use interp::{RawInterpretation, Source};
pub use lexicon::{
    detect_conflict_markers, Boundary, FeatureVector, Language, LanguageSelector, MarkerCategory,
    MarkerEntry, MarkerHit, MarkerLexicon,
};
pub use llm::{
    llm_extract, parse_llm_response, record_fixtures, Fixture, FixtureStore, InterpretationSource,
    LiveClient, ProviderConfig, ReplaySource,
};
pub use merge::{merge, MergePolicy, DEFAULT_TAU};
pub use pipeline::{ExtractMode, Mapper, NrrPipeline, PhiConfig};
pub use rule::rule_extract;
pub use scalar::Scalar;
pub use state::{
    check_noncollapse, construct_state, entropy_of_weights, epr, state_entropy, CollapseReason,
    NonCollapse, DEFAULT_BETA,
};

pub type State = state::State<f64>;
pub type StateF32 = state::State<f32>;
pub type StateEntry = state::StateEntry<f64>;
pub type StateEntryF32 = state::StateEntry<f32>;
pub type StateMetrics = state::StateMetrics<f64>;
pub type StateMetricsF32 = state::StateMetrics<f32>;
pub type Embedding = embed::Embedding<f64>;
pub type EmbeddingF32 = embed::Embedding<f32>;

/// Bundled corpus (`corpus.jsonl`) and curated fixtures (`fixtures/`), as
/// located in the source tree at build time.
pub const BUNDLED_DATA_DIR: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/data");
