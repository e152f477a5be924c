//! LLM-based interpretation enumeration.
//!
//! An [`InterpretationSource`] answers an interpretation prompt. Two
//! sources ship: [`ReplaySource`] serves recorded [`Fixture`]s and is fully
//! deterministic; [`LiveClient`] calls a chat-completion endpoint.
//! [`record_fixtures`] turns live answers into fixtures.

mod fixture;
mod live;
mod parse;
mod prompt;

use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::thread;

pub use fixture::{fixture_file_name, Fixture, FixtureStore};
pub use live::{LiveClient, ProviderConfig};
pub use parse::parse_llm_response;
pub use prompt::{build_prompt, InterpPrompt};

use crate::error::{Error, Result};
use crate::interp::RawInterpretation;
use crate::lexicon::{FeatureVector, LanguageSelector, MarkerLexicon};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExtractionMode {
    Live,
    #[default]
    Replay,
}

pub struct LlmRequest<'a> {
    pub sentence_id: Option<&'a str>,
    pub text: &'a str,
    pub prompt: &'a InterpPrompt,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LlmAnswer {
    pub provider_label: String,
    pub raw_response: String,
    pub interpretations: Vec<RawInterpretation>,
}

pub trait InterpretationSource: Send + Sync {
    fn mode(&self) -> ExtractionMode;

    fn answer(&self, request: &LlmRequest<'_>) -> Result<LlmAnswer>;
}

/// Serves fixtures by sentence id or exact text.
#[derive(Debug, Clone)]
pub struct ReplaySource {
    store: FixtureStore,
    provider: Option<String>,
}

impl ReplaySource {
    pub fn new(store: FixtureStore) -> Self {
        ReplaySource {
            store,
            provider: None,
        }
    }

    /// Restricts lookups to one provider label.
    pub fn with_provider(mut self, provider: Option<String>) -> Self {
        self.provider = provider;
        self
    }

    pub fn store(&self) -> &FixtureStore {
        &self.store
    }
}

impl InterpretationSource for ReplaySource {
    fn mode(&self) -> ExtractionMode {
        ExtractionMode::Replay
    }

    fn answer(&self, request: &LlmRequest<'_>) -> Result<LlmAnswer> {
        let f = self
            .store
            .lookup(request.sentence_id, request.text, self.provider.as_deref())
            .ok_or_else(|| Error::FixtureNotFound {
                key: request.sentence_id.unwrap_or(request.text).to_string(),
            })?;
        Ok(LlmAnswer {
            provider_label: f.provider_label.clone(),
            raw_response: f.raw_response.clone(),
            interpretations: f.parsed.clone(),
        })
    }
}

impl InterpretationSource for LiveClient {
    fn mode(&self) -> ExtractionMode {
        ExtractionMode::Live
    }

    fn answer(&self, request: &LlmRequest<'_>) -> Result<LlmAnswer> {
        let raw = self.complete(&request.prompt.rendered)?;
        let interpretations = parse_llm_response(&raw)?;
        Ok(LlmAnswer {
            provider_label: self.config().provider_label.clone(),
            raw_response: raw,
            interpretations,
        })
    }
}

/// Builds the prompt for `text` and asks `source` for interpretations.
pub fn llm_extract(
    text: &str,
    fv: &FeatureVector,
    source: &dyn InterpretationSource,
    sentence_id: Option<&str>,
) -> Result<Vec<RawInterpretation>> {
    let prompt = build_prompt(text, fv)?;
    let answer = source.answer(&LlmRequest {
        sentence_id,
        text,
        prompt: &prompt,
    })?;
    Ok(answer.interpretations)
}

#[derive(Debug, Clone)]
pub struct RecordItem {
    pub id: String,
    pub text: String,
    pub language: LanguageSelector,
}

#[derive(Debug, Default)]
pub struct RecordSummary {
    pub written: usize,
    pub failures: Vec<(String, Error)>,
}

/// Queries `source` for every item and writes one fixture per success
/// into `out_dir`. Requests run on up to `max_concurrency` threads; the
/// calling thread is the only writer. Failures are collected per item and
/// do not undo earlier writes.
pub fn record_fixtures(
    items: &[RecordItem],
    source: &dyn InterpretationSource,
    provider_label: &str,
    lexicon: &MarkerLexicon,
    out_dir: &Path,
    max_concurrency: usize,
) -> Result<RecordSummary> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel::<(usize, Result<Fixture>)>();
    let workers = max_concurrency.clamp(1, items.len().max(1));
    let mut summary = RecordSummary::default();

    thread::scope(|scope| {
        for _ in 0..workers {
            let tx = tx.clone();
            let next = &next;
            scope.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(item) = items.get(i) else { break };
                let result = (|| {
                    let fv = lexicon.detect(&item.text, item.language)?;
                    let prompt = build_prompt(&item.text, &fv)?;
                    let answer = source.answer(&LlmRequest {
                        sentence_id: Some(&item.id),
                        text: &item.text,
                        prompt: &prompt,
                    })?;
                    Fixture::from_response(
                        &item.id,
                        provider_label,
                        &item.text,
                        answer.raw_response,
                    )
                })();
                if tx.send((i, result)).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        let mut results: Vec<(usize, Result<Fixture>)> = rx.iter().collect();
        results.sort_by_key(|(i, _)| *i);
        for (i, r) in results {
            match r.and_then(|f| FixtureStore::write(out_dir, &f)) {
                Ok(_) => summary.written += 1,
                Err(e) => {
                    log::warn!("recording {} failed: {e}", items[i].id);
                    summary.failures.push((items[i].id.clone(), e));
                }
            }
        }
    });
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Canned;

    impl InterpretationSource for Canned {
        fn mode(&self) -> ExtractionMode {
            ExtractionMode::Live
        }

        fn answer(&self, request: &LlmRequest<'_>) -> Result<LlmAnswer> {
            if request.text.contains("fail") {
                return Err(Error::Transport {
                    attempts: 4,
                    message: "boom".into(),
                });
            }
            Ok(LlmAnswer {
                provider_label: "canned".into(),
                raw_response: format!(
                    "INTERP: literal {}\nCONTEXT: a\nCONFIDENCE: 0.6\n---\nINTERP: figurative reading\nCONTEXT: b\nCONFIDENCE: 0.4\n---",
                    request.text
                ),
                interpretations: vec![],
            })
        }
    }

    #[test]
    fn replay_by_id_and_missing() {
        let mut store = FixtureStore::new();
        store.insert(
            Fixture::from_response(
                "lex_en_01",
                "chatgpt",
                "I saw her duck.",
                r#"[{"meaning": "a duck", "context": "noun", "confidence": 0.5},
                    {"meaning": "ducking down", "context": "verb", "confidence": 0.5}]"#,
            )
            .unwrap(),
        );
        let src = ReplaySource::new(store);
        let fv = FeatureVector::empty();
        let out = llm_extract("I saw her duck.", &fv, &src, Some("lex_en_01")).unwrap();
        assert_eq!(out.len(), 2);
        let again = llm_extract("I saw her duck.", &fv, &src, None).unwrap();
        assert_eq!(out, again);
        assert!(matches!(
            llm_extract("unknown", &fv, &src, Some("nope")),
            Err(Error::FixtureNotFound { .. })
        ));
    }

    #[test]
    fn record_keeps_successes_and_reports_failures() {
        let dir = tempfile::tempdir().unwrap();
        let items: Vec<RecordItem> = ["one sentence", "please fail here", "another sentence"]
            .iter()
            .enumerate()
            .map(|(i, t)| RecordItem {
                id: format!("s{i}"),
                text: t.to_string(),
                language: LanguageSelector::En,
            })
            .collect();
        let summary = record_fixtures(
            &items,
            &Canned,
            "canned",
            &MarkerLexicon::builtin(),
            dir.path(),
            2,
        )
        .unwrap();
        assert_eq!(summary.written, 2);
        assert_eq!(summary.failures.len(), 1);
        assert_eq!(summary.failures[0].0, "s1");
        let store = FixtureStore::load(dir.path()).unwrap();
        assert_eq!(store.len(), 2);
        let f = store.lookup(Some("s2"), "", Some("canned")).unwrap();
        assert_eq!(f.parsed[0].meaning, "literal another sentence");
        assert_eq!(f.text, "another sentence");
    }
}
