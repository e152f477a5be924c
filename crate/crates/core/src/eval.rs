//! Corpus evaluation: runs a [`Mapper`] over labelled sentences and
//! aggregates state size, entropy and marker detection per category.

use std::collections::HashSet;
use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embed::Embedder;
use crate::error::{Error, Result};
use crate::lexicon::Language;
use crate::llm::{FixtureStore, ReplaySource};
use crate::pipeline::{ExtractMode, Mapper};
use crate::state::{state_entropy, State};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Adversative,
    Hedging,
    Epistemic,
    Lexical,
    Structural,
}

impl Category {
    pub const ALL: [Category; 5] = [
        Category::Adversative,
        Category::Hedging,
        Category::Epistemic,
        Category::Lexical,
        Category::Structural,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Category::Adversative => "adversative",
            Category::Hedging => "hedging",
            Category::Epistemic => "epistemic",
            Category::Lexical => "lexical",
            Category::Structural => "structural",
        }
    }

    fn title(self) -> &'static str {
        match self {
            Category::Adversative => "Adversative",
            Category::Hedging => "Hedging",
            Category::Epistemic => "Epistemic",
            Category::Lexical => "Lexical",
            Category::Structural => "Structural",
        }
    }

    /// Only these categories have Japanese sentences.
    pub fn allows_japanese(self) -> bool {
        matches!(self, Category::Adversative | Category::Hedging)
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Category {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Category::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown category {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Rule,
    Llm,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSentence {
    pub id: String,
    pub text: String,
    pub language: Language,
    pub category: Category,
    pub expected_method: Method,
}

/// Parses JSONL corpus text. Blank lines are skipped; line numbers in
/// errors are 1-based.
pub fn parse_corpus(source: &str) -> Result<Vec<CorpusSentence>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in source.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let schema = |message: String| Error::CorpusSchema {
            line: line_no,
            message,
        };
        let s: CorpusSentence = serde_json::from_str(line).map_err(|e| schema(e.to_string()))?;
        if s.id.trim().is_empty() {
            return Err(schema("empty id".into()));
        }
        if s.text.trim().is_empty() {
            return Err(schema(format!("sentence {} has empty text", s.id)));
        }
        if s.language == Language::Jp && !s.category.allows_japanese() {
            return Err(schema(format!(
                "sentence {}: category {} has no jp sentences",
                s.id, s.category
            )));
        }
        if !seen.insert(s.id.clone()) {
            return Err(schema(format!("duplicate id {}", s.id)));
        }
        out.push(s);
    }
    Ok(out)
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<CorpusSentence>> {
    let path = path.as_ref();
    let body = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_corpus(&body)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SentenceResult {
    pub id: String,
    pub category: Category,
    pub language: Language,
    pub size: usize,
    pub entropy_bits: f64,
    pub epr: f64,
    pub conflict_detected: bool,
    /// Entropy after keeping only the heaviest entry.
    pub baseline_entropy_bits: f64,
    pub collapsed_fallback: bool,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SentenceFailure {
    pub id: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CategoryRow {
    /// Category name, or `overall`.
    pub category: String,
    pub n: usize,
    pub mean_size: f64,
    pub mean_entropy: f64,
    pub mean_epr: f64,
    pub conflict_detection_rate: f64,
    pub method: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub mode: ExtractMode,
    pub provider: Option<String>,
    pub rows: Vec<CategoryRow>,
    pub overall: CategoryRow,
    pub baseline_entropy: f64,
    /// Sentences expected to use the LLM path whose fixture was absent.
    pub missing_fixtures: Vec<String>,
    pub failures: Vec<SentenceFailure>,
    pub sentences: Vec<SentenceResult>,
}

impl MetricsReport {
    pub fn row(&self, category: Category) -> Option<&CategoryRow> {
        self.rows.iter().find(|r| r.category == category.name())
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

fn method_label(mode: ExtractMode, sentences: &[&CorpusSentence]) -> String {
    let base = match mode {
        ExtractMode::Rule => "Rule",
        ExtractMode::Llm => "LLM",
        ExtractMode::Hybrid => {
            let llm = sentences
                .iter()
                .filter(|s| s.expected_method == Method::Llm)
                .count();
            if 2 * llm > sentences.len() {
                "LLM"
            } else {
                "Rule"
            }
        }
    };
    let en = sentences.iter().any(|s| s.language == Language::En);
    let jp = sentences.iter().any(|s| s.language == Language::Jp);
    match (en, jp) {
        (true, true) => format!("{base} (EN+JP)"),
        (true, false) => format!("{base} (EN)"),
        (false, true) => format!("{base} (JP)"),
        (false, false) => base.to_string(),
    }
}

fn aggregate(label: &str, method: String, results: &[&SentenceResult]) -> CategoryRow {
    let conflict = results.iter().filter(|r| r.conflict_detected).count();
    CategoryRow {
        category: label.to_string(),
        n: results.len(),
        mean_size: mean(results.iter().map(|r| r.size as f64)),
        mean_entropy: mean(results.iter().map(|r| r.entropy_bits)),
        mean_epr: mean(results.iter().map(|r| r.epr)),
        conflict_detection_rate: if results.is_empty() {
            0.0
        } else {
            conflict as f64 / results.len() as f64
        },
        method,
    }
}

fn evaluate_one<E: Embedder<f64>>(
    mapper: &Mapper<E>,
    sentence: &CorpusSentence,
) -> Result<SentenceResult> {
    let language = sentence.language.into();
    let fv = mapper.lexicon().detect(&sentence.text, language)?;
    let state: State<f64> = mapper.phi_in(&sentence.text, Some(&sentence.id), language)?;
    let metrics = state.metrics()?;
    let baseline = state_entropy(&state.collapsed())?;
    Ok(SentenceResult {
        id: sentence.id.clone(),
        category: sentence.category,
        language: sentence.language,
        size: metrics.size,
        entropy_bits: metrics.entropy_bits,
        epr: metrics.epr,
        conflict_detected: fv.has_conflict(),
        baseline_entropy_bits: baseline,
        collapsed_fallback: state.is_collapsed_fallback(),
        warnings: state.warnings().to_vec(),
    })
}

/// Runs the mapper over every sentence. Sentences are processed in
/// parallel (`jobs` threads, or rayon's default pool when `None`) and
/// aggregated in corpus order, so the report is identical across runs.
/// Per-sentence errors are reported in `failures` and excluded from the
/// means.
pub fn evaluate<E: Embedder<f64>>(
    corpus: &[CorpusSentence],
    mapper: &Mapper<E>,
    jobs: Option<usize>,
) -> Result<MetricsReport> {
    let run = || -> Vec<Result<SentenceResult>> {
        corpus.par_iter().map(|s| evaluate_one(mapper, s)).collect()
    };
    let outcomes = match jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))?
            .install(run),
        None => run(),
    };

    let mode = mapper.config().mode;
    let mut sentences = Vec::new();
    let mut failures = Vec::new();
    let mut missing_fixtures = Vec::new();
    for (s, outcome) in corpus.iter().zip(outcomes) {
        match outcome {
            Ok(r) => {
                if s.expected_method == Method::Llm
                    && mode != ExtractMode::Rule
                    && r.warnings.iter().any(|w| w.contains("fixture not found"))
                {
                    missing_fixtures.push(s.id.clone());
                }
                sentences.push(r);
            }
            Err(e) => {
                if matches!(e, Error::FixtureNotFound { .. }) {
                    missing_fixtures.push(s.id.clone());
                }
                failures.push(SentenceFailure {
                    id: s.id.clone(),
                    error: e.to_string(),
                });
            }
        }
    }

    let mut rows = Vec::new();
    for category in Category::ALL {
        let members: Vec<&CorpusSentence> =
            corpus.iter().filter(|s| s.category == category).collect();
        if members.is_empty() {
            continue;
        }
        let results: Vec<&SentenceResult> = sentences
            .iter()
            .filter(|r| r.category == category)
            .collect();
        rows.push(aggregate(
            category.name(),
            method_label(mode, &members),
            &results,
        ));
    }
    let overall_method = match mode {
        ExtractMode::Rule => "Rule",
        ExtractMode::Llm => "LLM",
        ExtractMode::Hybrid => "Hybrid",
    };
    let all: Vec<&SentenceResult> = sentences.iter().collect();
    let overall = aggregate("overall", overall_method.to_string(), &all);
    let baseline_entropy = mean(sentences.iter().map(|r| r.baseline_entropy_bits));

    Ok(MetricsReport {
        mode,
        provider: mapper.provider_label().map(str::to_string),
        rows,
        overall,
        baseline_entropy,
        missing_fixtures,
        failures,
        sentences,
    })
}

/// Evaluates the corpus once per provider label found in `store`.
pub fn evaluate_providers<E: Embedder<f64> + Clone>(
    corpus: &[CorpusSentence],
    mapper: &Mapper<E>,
    store: &FixtureStore,
    jobs: Option<usize>,
) -> Result<Vec<(String, MetricsReport)>> {
    store
        .providers()
        .into_iter()
        .map(|p| {
            let source = ReplaySource::new(store.clone()).with_provider(Some(p.clone()));
            let m = mapper
                .clone()
                .with_source(Arc::new(source))
                .with_provider_label(&p);
            evaluate(corpus, &m, jobs).map(|r| (p, r))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub category: String,
    pub n: usize,
    /// One value per provider, in [`ProviderComparison::providers`] order.
    pub mean_size: Vec<f64>,
    pub mean_entropy: Vec<f64>,
    pub cross_mean_size: f64,
    pub cross_mean_entropy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProviderComparison {
    pub providers: Vec<String>,
    pub rows: Vec<ComparisonRow>,
}

impl ProviderComparison {
    pub fn from_reports(reports: &[(String, MetricsReport)]) -> Self {
        let providers: Vec<String> = reports.iter().map(|(p, _)| p.clone()).collect();
        let mut rows = Vec::new();
        let labels = Category::ALL
            .iter()
            .map(|c| c.name())
            .chain(std::iter::once("overall"));
        for label in labels {
            let picked: Vec<&CategoryRow> = reports
                .iter()
                .filter_map(|(_, r)| {
                    if label == "overall" {
                        Some(&r.overall)
                    } else {
                        r.rows.iter().find(|row| row.category == label)
                    }
                })
                .collect();
            if picked.len() != reports.len() || picked.iter().all(|r| r.n == 0) {
                continue;
            }
            let mean_size: Vec<f64> = picked.iter().map(|r| r.mean_size).collect();
            let mean_entropy: Vec<f64> = picked.iter().map(|r| r.mean_entropy).collect();
            rows.push(ComparisonRow {
                category: label.to_string(),
                n: picked[0].n,
                cross_mean_size: mean(mean_size.iter().copied()),
                cross_mean_entropy: mean(mean_entropy.iter().copied()),
                mean_size,
                mean_entropy,
            });
        }
        ProviderComparison { providers, rows }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Text,
    Json,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "text" | "text-table" => Ok(ReportFormat::Text),
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            _ => Err(format!("unknown format {s:?} (expected text, json or csv)")),
        }
    }
}

fn title_of(label: &str) -> &str {
    match label.parse::<Category>() {
        Ok(c) => c.title(),
        Err(_) => "Overall",
    }
}

fn csv_string(write: impl FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    write(&mut w).map_err(|e| Error::InvalidConfig(format!("csv: {e}")))?;
    let bytes = w
        .into_inner()
        .map_err(|e| Error::InvalidConfig(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn emit_report(report: &MetricsReport, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(report)?;
            s.push('\n');
            Ok(s)
        }
        ReportFormat::Csv => csv_string(|w| {
            w.write_record([
                "category",
                "n",
                "mean_size",
                "mean_entropy",
                "mean_epr",
                "conflict_detection_rate",
                "method",
            ])?;
            for r in report.rows.iter().chain(std::iter::once(&report.overall)) {
                w.write_record([
                    r.category.clone(),
                    r.n.to_string(),
                    r.mean_size.to_string(),
                    r.mean_entropy.to_string(),
                    r.mean_epr.to_string(),
                    r.conflict_detection_rate.to_string(),
                    r.method.clone(),
                ])?;
            }
            Ok(())
        }),
        ReportFormat::Text => Ok(text_table(report)),
    }
}

fn text_table(report: &MetricsReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<12} {:>4} {:>6} {:>7}  Method",
        "Category", "N", "|S|", "H(S)"
    );
    for r in &report.rows {
        let _ = writeln!(
            out,
            "{:<12} {:>4} {:>6.2} {:>7.3}  {}",
            title_of(&r.category),
            r.n,
            r.mean_size,
            r.mean_entropy,
            r.method
        );
    }
    let o = &report.overall;
    let _ = writeln!(
        out,
        "{:<12} {:>4} {:>6.2} {:>7.3}  {}",
        "Overall", o.n, o.mean_size, o.mean_entropy, o.method
    );
    out.push('\n');
    let _ = writeln!(out, "{:<12} {:>7} {:>9}", "Category", "EPR", "Detected");
    for r in &report.rows {
        let _ = writeln!(
            out,
            "{:<12} {:>7.3} {:>8.1}%",
            title_of(&r.category),
            r.mean_epr,
            100.0 * r.conflict_detection_rate
        );
    }
    let _ = writeln!(
        out,
        "\nBaseline (forced collapse) mean H(S) = {:.3}",
        report.baseline_entropy
    );
    if !report.missing_fixtures.is_empty() {
        let _ = writeln!(
            out,
            "Missing fixtures: {}",
            report.missing_fixtures.join(", ")
        );
    }
    for f in &report.failures {
        let _ = writeln!(out, "Failed {}: {}", f.id, f.error);
    }
    out
}

pub fn emit_comparison(cmp: &ProviderComparison, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(cmp)?;
            s.push('\n');
            Ok(s)
        }
        ReportFormat::Csv => csv_string(|w| {
            let mut header = vec!["category".to_string(), "n".to_string()];
            for p in &cmp.providers {
                header.push(format!("{p}_mean_size"));
                header.push(format!("{p}_mean_entropy"));
            }
            header.push("mean_size".into());
            header.push("mean_entropy".into());
            w.write_record(&header)?;
            for r in &cmp.rows {
                let mut rec = vec![r.category.clone(), r.n.to_string()];
                for (s, h) in r.mean_size.iter().zip(&r.mean_entropy) {
                    rec.push(s.to_string());
                    rec.push(h.to_string());
                }
                rec.push(r.cross_mean_size.to_string());
                rec.push(r.cross_mean_entropy.to_string());
                w.write_record(&rec)?;
            }
            Ok(())
        }),
        ReportFormat::Text => {
            let mut out = String::new();
            let _ = write!(out, "{:<12} {:>4}", "Category", "N");
            for p in &cmp.providers {
                let _ = write!(out, "  {:>14}", format!("{p} |S|/H"));
            }
            let _ = writeln!(out, "  {:>14}", "Mean |S|/H");
            for r in &cmp.rows {
                let _ = write!(out, "{:<12} {:>4}", title_of(&r.category), r.n);
                for (s, h) in r.mean_size.iter().zip(&r.mean_entropy) {
                    let _ = write!(out, "  {:>14}", format!("{s:.2}/{h:.3}"));
                }
                let _ = writeln!(
                    out,
                    "  {:>14}",
                    format!("{:.2}/{:.3}", r.cross_mean_size, r.cross_mean_entropy)
                );
            }
            Ok(out)
        }
    }
}
