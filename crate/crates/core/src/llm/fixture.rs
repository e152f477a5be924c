//! Recorded model responses stored as one JSON file per
//! (sentence id, provider label).

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::parse::parse_llm_response;
use crate::error::{Error, Result};
use crate::interp::RawInterpretation;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fixture {
    pub sentence_id: String,
    pub provider_label: String,
    /// Input text the response was recorded for; enables lookup by text.
    #[serde(default)]
    pub text: String,
    pub raw_response: String,
    pub parsed: Vec<RawInterpretation>,
}

impl Fixture {
    /// Builds a fixture whose `parsed` field is derived from the raw
    /// response.
    pub fn from_response(
        sentence_id: impl Into<String>,
        provider_label: impl Into<String>,
        text: impl Into<String>,
        raw_response: impl Into<String>,
    ) -> Result<Self> {
        let raw_response = raw_response.into();
        let parsed = parse_llm_response(&raw_response)?;
        Ok(Fixture {
            sentence_id: sentence_id.into(),
            provider_label: provider_label.into(),
            text: text.into(),
            raw_response,
            parsed,
        })
    }

    pub fn file_name(&self) -> String {
        fixture_file_name(&self.sentence_id, &self.provider_label)
    }

    fn check(&self, path: &Path) -> Result<()> {
        let invalid = |message: String| Error::FixtureInvalid {
            path: path.to_path_buf(),
            message,
        };
        if self.sentence_id.trim().is_empty() || self.provider_label.trim().is_empty() {
            return Err(invalid(
                "sentence_id and provider_label must be non-empty".into(),
            ));
        }
        let reparsed = parse_llm_response(&self.raw_response)
            .map_err(|e| invalid(format!("raw_response does not parse: {e}")))?;
        if reparsed != self.parsed {
            return Err(invalid("parsed does not match raw_response".into()));
        }
        Ok(())
    }
}

fn sanitize(s: &str) -> String {
    s.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

pub fn fixture_file_name(sentence_id: &str, provider_label: &str) -> String {
    format!(
        "{}__{}.json",
        sanitize(sentence_id),
        sanitize(provider_label)
    )
}

/// In-memory index over a fixture directory. Read-only after loading.
#[derive(Debug, Clone, Default)]
pub struct FixtureStore {
    // (sentence_id, provider_label) -> fixture; BTreeMap keeps lookup order stable
    by_id: BTreeMap<(String, String), Fixture>,
    root: Option<PathBuf>,
}

impl FixtureStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Loads every `*.json` file in `dir`. Each file is validated: its
    /// `parsed` list must equal what the parser yields for `raw_response`.
    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let mut store = FixtureStore {
            by_id: BTreeMap::new(),
            root: Some(dir.to_path_buf()),
        };
        let mut paths: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        for path in paths {
            let body = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            let fixture: Fixture =
                serde_json::from_str(&body).map_err(|e| Error::FixtureInvalid {
                    path: path.clone(),
                    message: e.to_string(),
                })?;
            fixture.check(&path)?;
            store.insert(fixture);
        }
        Ok(store)
    }

    pub fn root(&self) -> Option<&Path> {
        self.root.as_deref()
    }

    pub fn insert(&mut self, fixture: Fixture) {
        self.by_id.insert(
            (fixture.sentence_id.clone(), fixture.provider_label.clone()),
            fixture,
        );
    }

    pub fn len(&self) -> usize {
        self.by_id.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_id.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Fixture> {
        self.by_id.values()
    }

    /// Distinct provider labels, sorted.
    pub fn providers(&self) -> Vec<String> {
        let mut p: Vec<String> = self.by_id.keys().map(|(_, p)| p.clone()).collect();
        p.sort();
        p.dedup();
        p
    }

    /// Finds a fixture by sentence id, falling back to an exact text match.
    /// Without a provider filter the lexicographically first provider wins.
    pub fn lookup(
        &self,
        sentence_id: Option<&str>,
        text: &str,
        provider: Option<&str>,
    ) -> Option<&Fixture> {
        let provider_ok = |f: &&Fixture| provider.is_none_or(|p| f.provider_label == p);
        if let Some(id) = sentence_id {
            let hit = self
                .by_id
                .range((id.to_string(), String::new())..)
                .take_while(|((sid, _), _)| sid == id)
                .map(|(_, f)| f)
                .find(provider_ok);
            if hit.is_some() {
                return hit;
            }
        }
        let mut by_text: Vec<&Fixture> = self
            .by_id
            .values()
            .filter(|f| !f.text.is_empty() && f.text == text)
            .filter(provider_ok)
            .collect();
        by_text.sort_by(|a, b| {
            (&a.provider_label, &a.sentence_id).cmp(&(&b.provider_label, &b.sentence_id))
        });
        by_text.into_iter().next()
    }

    /// Writes one fixture file, replacing any previous file for the same
    /// (sentence id, provider label).
    pub fn write(dir: impl AsRef<Path>, fixture: &Fixture) -> Result<PathBuf> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join(fixture.file_name());
        let tmp = dir.join(format!(".{}.tmp", fixture.file_name()));
        let mut body = serde_json::to_string_pretty(fixture)?;
        body.push('\n');
        fs::write(&tmp, body).map_err(|e| Error::io(&tmp, e))?;
        fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}
