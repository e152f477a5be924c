//! The composed text-to-state mapping and the operator pipeline around it.
//!
//! [`Mapper::phi`] runs detection, extraction (rule, LLM or both), merge
//! and state construction. [`NrrPipeline`] threads the resulting state
//! through an ordered list of [`Operator`] stages and finishes with a
//! non-destructive [`Projection`].

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::embed::Embedder;
use crate::error::{Error, Result};
use crate::interp::RawInterpretation;
use crate::lexicon::{FeatureVector, LanguageSelector, MarkerLexicon};
use crate::llm::{llm_extract, ExtractionMode, InterpretationSource};
use crate::merge::{merge, MergePolicy, DEFAULT_TAU};
use crate::rule::rule_extract;
use crate::scalar::Scalar;
use crate::state::{construct_state, State, DEFAULT_BETA};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtractMode {
    Rule,
    Llm,
    #[default]
    Hybrid,
}

impl FromStr for ExtractMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "rule" => Ok(ExtractMode::Rule),
            "llm" => Ok(ExtractMode::Llm),
            "hybrid" => Ok(ExtractMode::Hybrid),
            _ => Err(format!("unknown mode {s:?} (expected rule, llm or hybrid)")),
        }
    }
}

impl fmt::Display for ExtractMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExtractMode::Rule => "rule",
            ExtractMode::Llm => "llm",
            ExtractMode::Hybrid => "hybrid",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiConfig {
    pub mode: ExtractMode,
    pub tau: f64,
    pub beta: f64,
    pub language: LanguageSelector,
    pub dedup_within_llm: bool,
}

impl Default for PhiConfig {
    fn default() -> Self {
        PhiConfig {
            mode: ExtractMode::Hybrid,
            tau: DEFAULT_TAU,
            beta: DEFAULT_BETA,
            language: LanguageSelector::Auto,
            dedup_within_llm: true,
        }
    }
}

impl PhiConfig {
    pub fn validate(&self) -> Result<()> {
        MergePolicy::new(self.tau)?;
        if !self.beta.is_finite() || self.beta < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "beta must be finite and >= 0, got {}",
                self.beta
            )));
        }
        Ok(())
    }

    pub fn merge_policy(&self) -> Result<MergePolicy> {
        Ok(MergePolicy::new(self.tau)?.with_dedup_within_second(self.dedup_within_llm))
    }
}

/// Everything needed to map text to a state.
#[derive(Clone)]
pub struct Mapper<E> {
    lexicon: Arc<MarkerLexicon>,
    config: PhiConfig,
    embedder: E,
    source: Option<Arc<dyn InterpretationSource>>,
    provider_label: Option<String>,
}

impl<E> Mapper<E> {
    pub fn new(lexicon: Arc<MarkerLexicon>, config: PhiConfig, embedder: E) -> Result<Self> {
        config.validate()?;
        Ok(Mapper {
            lexicon,
            config,
            embedder,
            source: None,
            provider_label: None,
        })
    }

    pub fn with_source(mut self, source: Arc<dyn InterpretationSource>) -> Self {
        self.source = Some(source);
        self
    }

    /// Label reported alongside results; informational only.
    pub fn with_provider_label(mut self, label: impl Into<String>) -> Self {
        self.provider_label = Some(label.into());
        self
    }

    pub fn provider_label(&self) -> Option<&str> {
        self.provider_label.as_deref()
    }

    pub fn config(&self) -> &PhiConfig {
        &self.config
    }

    pub fn lexicon(&self) -> &MarkerLexicon {
        &self.lexicon
    }

    pub fn embedder(&self) -> &E {
        &self.embedder
    }

    pub fn source(&self) -> Option<&dyn InterpretationSource> {
        self.source.as_deref()
    }

    /// Same mapper with a different extraction mode.
    pub fn with_mode(&self, mode: ExtractMode) -> Self
    where
        E: Clone,
    {
        Mapper {
            lexicon: self.lexicon.clone(),
            config: PhiConfig {
                mode,
                ..self.config
            },
            embedder: self.embedder.clone(),
            source: self.source.clone(),
            provider_label: self.provider_label.clone(),
        }
    }

    fn llm_interpretations(
        &self,
        text: &str,
        fv: &FeatureVector,
        sentence_id: Option<&str>,
        warnings: &mut Vec<String>,
    ) -> Result<Vec<RawInterpretation>> {
        let hybrid = self.config.mode == ExtractMode::Hybrid;
        let Some(source) = self.source.as_deref() else {
            if hybrid {
                warnings.push("no interpretation source configured; rule extraction only".into());
                return Ok(Vec::new());
            }
            return Err(Error::FixtureNotFound {
                key: sentence_id.unwrap_or(text).to_string(),
            });
        };
        match llm_extract(text, fv, source, sentence_id) {
            Err(Error::FixtureNotFound { key })
                if hybrid && source.mode() == ExtractionMode::Replay =>
            {
                log::debug!("no fixture for {key:?}; falling back to rule extraction");
                warnings.push(format!(
                    "fixture not found for {key:?}; rule extraction only"
                ));
                Ok(Vec::new())
            }
            other => other,
        }
    }

    /// Maps `text` to a state. `sentence_id` keys fixture lookup in replay
    /// mode; without it fixtures are matched by exact text.
    pub fn phi<T>(&self, text: &str, sentence_id: Option<&str>) -> Result<State<T>>
    where
        T: Scalar,
        E: Embedder<T>,
    {
        self.phi_in(text, sentence_id, self.config.language)
    }

    /// [`Mapper::phi`] with the configured language overridden.
    pub fn phi_in<T>(
        &self,
        text: &str,
        sentence_id: Option<&str>,
        language: LanguageSelector,
    ) -> Result<State<T>>
    where
        T: Scalar,
        E: Embedder<T>,
    {
        let fv = self.lexicon.detect(text, language)?;
        let mut warnings = Vec::new();
        let rules = match self.config.mode {
            ExtractMode::Llm => Vec::new(),
            _ => rule_extract(text, &fv),
        };
        let llm = match self.config.mode {
            ExtractMode::Rule => Vec::new(),
            _ => self.llm_interpretations(text, &fv, sentence_id, &mut warnings)?,
        };
        let merged = merge(rules, llm, &self.config.merge_policy()?, &self.embedder)?;
        let mut state = construct_state(text, &merged, &fv, self.config.beta, &self.embedder)?;
        for w in warnings {
            state.add_warning(w);
        }
        Ok(state)
    }
}

/// The eight operator slots, in pipeline order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OperatorName {
    Sigma,
    Alpha,
    Rho,
    Iota,
    Delta,
    TauOp,
    Kappa,
    Pi,
}

impl OperatorName {
    pub fn as_str(self) -> &'static str {
        match self {
            OperatorName::Sigma => "sigma",
            OperatorName::Alpha => "alpha",
            OperatorName::Rho => "rho",
            OperatorName::Iota => "iota",
            OperatorName::Delta => "delta",
            OperatorName::TauOp => "tau_op",
            OperatorName::Kappa => "kappa",
            OperatorName::Pi => "pi",
        }
    }
}

impl fmt::Display for OperatorName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub struct StageContext<'a, T> {
    pub prev_state: Option<&'a State<T>>,
    /// Dampening strength handed to the delta slot.
    pub lambda: f64,
}

pub trait Operator<T: Scalar>: Send + Sync {
    fn name(&self) -> OperatorName;

    fn apply(&self, state: State<T>, ctx: &StageContext<'_, T>) -> Result<State<T>>;
}

/// Pass-through stage for any slot.
#[derive(Debug, Clone, Copy)]
pub struct Identity(pub OperatorName);

impl<T: Scalar> Operator<T> for Identity {
    fn name(&self) -> OperatorName {
        self.0
    }

    fn apply(&self, state: State<T>, _ctx: &StageContext<'_, T>) -> Result<State<T>> {
        Ok(state)
    }
}

/// Default kappa: appends every entry of the previous state, keeping each
/// entry's conflict metadata.
#[derive(Debug, Clone, Copy, Default)]
pub struct KappaUnion;

impl<T: Scalar> Operator<T> for KappaUnion {
    fn name(&self) -> OperatorName {
        OperatorName::Kappa
    }

    fn apply(&self, mut state: State<T>, ctx: &StageContext<'_, T>) -> Result<State<T>> {
        if let Some(prev) = ctx.prev_state {
            state.extend_from(prev);
        }
        Ok(state)
    }
}

pub trait Projection<T: Scalar>: Send + Sync {
    fn project(&self, state: &State<T>) -> Option<String>;
}

/// Emits the meaning of the highest-weight entry; ties go to the lowest
/// index.
#[derive(Debug, Clone, Copy, Default)]
pub struct ArgmaxProjection;

impl<T: Scalar> Projection<T> for ArgmaxProjection {
    fn project(&self, state: &State<T>) -> Option<String> {
        state.argmax().map(|i| state.entries()[i].meaning.clone())
    }
}

pub struct NrrPipeline<T: Scalar> {
    stages: Vec<Box<dyn Operator<T>>>,
    projection: Box<dyn Projection<T>>,
    lambda: f64,
}

impl<T: Scalar> NrrPipeline<T> {
    /// Stages must appear in slot order with no slot repeated.
    pub fn new(stages: Vec<Box<dyn Operator<T>>>) -> Result<Self> {
        for w in stages.windows(2) {
            if w[0].name() >= w[1].name() {
                return Err(Error::InvalidConfig(format!(
                    "operator {} cannot follow {}",
                    w[1].name(),
                    w[0].name()
                )));
            }
        }
        Ok(NrrPipeline {
            stages,
            projection: Box::new(ArgmaxProjection),
            lambda: 0.0,
        })
    }

    /// sigma, rho, delta, kappa, pi with identity defaults and
    /// [`KappaUnion`] for kappa.
    pub fn standard() -> Self {
        Self::new(vec![
            Box::new(Identity(OperatorName::Sigma)),
            Box::new(Identity(OperatorName::Rho)),
            Box::new(Identity(OperatorName::Delta)),
            Box::new(KappaUnion),
            Box::new(Identity(OperatorName::Pi)),
        ])
        .expect("standard order is valid")
    }

    pub fn with_projection(mut self, projection: Box<dyn Projection<T>>) -> Self {
        self.projection = projection;
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn stage_names(&self) -> Vec<OperatorName> {
        self.stages.iter().map(|s| s.name()).collect()
    }

    /// Runs the stages over an already-mapped state.
    pub fn process(
        &self,
        state: State<T>,
        prev_state: Option<&State<T>>,
    ) -> Result<(State<T>, Option<String>)> {
        let ctx = StageContext {
            prev_state,
            lambda: self.lambda,
        };
        let mut state = state;
        for stage in &self.stages {
            state = stage.apply(state, &ctx)?;
            let contract = |reason: String| Error::StageContract {
                stage: stage.name().to_string(),
                reason,
            };
            if state.is_empty() {
                return Err(contract("state has no entries".into()));
            }
            state.validate().map_err(contract)?;
        }
        let output = self.projection.project(&state);
        Ok((state, output))
    }

    /// Maps `text` and runs the stages.
    pub fn run<E: Embedder<T>>(
        &self,
        mapper: &Mapper<E>,
        text: &str,
        sentence_id: Option<&str>,
        prev_state: Option<&State<T>>,
    ) -> Result<(State<T>, Option<String>)> {
        let fresh = mapper.phi(text, sentence_id)?;
        self.process(fresh, prev_state)
    }
}
