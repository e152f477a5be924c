//! Optional TOML config file. Values here sit below flags and environment
//! variables and above built-in defaults.

use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Deserialize;
use textstate::{ExtractMode, LanguageSelector};

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub mode: Option<ExtractMode>,
    pub tau: Option<f64>,
    pub beta: Option<f64>,
    pub language: Option<LanguageSelector>,
    pub dedup_within_llm: Option<bool>,
    pub lexicon: Option<PathBuf>,
    pub fixtures: Option<PathBuf>,
    pub provider: Option<String>,
    pub provider_config: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
    pub jobs: Option<usize>,
}

impl FileConfig {
    /// Reads `path`; relative paths inside are taken relative to the
    /// file's directory.
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let body = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: FileConfig =
            toml::from_str(&body).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [
            &mut cfg.lexicon,
            &mut cfg.fixtures,
            &mut cfg.provider_config,
            &mut cfg.corpus,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_paths_follow_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("textstate.toml");
        std::fs::write(&path, "mode = \"rule\"\ntau = 0.9\nfixtures = \"fx\"\n").unwrap();
        let cfg = FileConfig::load(&path).unwrap();
        assert_eq!(cfg.mode, Some(ExtractMode::Rule));
        assert_eq!(cfg.tau, Some(0.9));
        assert_eq!(cfg.fixtures.unwrap(), dir.path().join("fx"));
    }

    #[test]
    fn unknown_keys_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "api_key = \"x\"\n").unwrap();
        assert!(FileConfig::load(&path).is_err());
    }
}
