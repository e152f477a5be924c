//! `textstate` command-line tool.
//!
//! Exit codes: 0 on success, 1 on domain errors, 2 on usage errors.
//! Payloads go to stdout; diagnostics go to stderr.

mod settings;

use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};

use settings::FileConfig;
use textstate::eval::{
    emit_comparison, emit_report, evaluate, evaluate_providers, load_corpus, Method,
    ProviderComparison, ReportFormat,
};
use textstate::llm::{record_fixtures, InterpretationSource, RecordItem};
use textstate::{
    ExtractMode, FixtureStore, HashEmbedder, LanguageSelector, LiveClient, Mapper, MarkerLexicon,
    PhiConfig, ProviderConfig, ReplaySource, State, BUNDLED_DATA_DIR, DEFAULT_BETA, DEFAULT_TAU,
};

#[derive(Parser)]
#[command(
    name = "textstate",
    version,
    about = "Map text to a weighted set of interpretations"
)]
struct Cli {
    /// TOML config file (lowest precedence after built-in defaults)
    #[arg(long, global = true, env = "TEXTSTATE_CONFIG")]
    config: Option<PathBuf>,

    /// More log output on stderr (repeatable)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the conflict-marker feature vector of a text
    Detect {
        #[command(flatten)]
        input: TextInput,
        #[command(flatten)]
        lex: LexiconArgs,
    },
    /// Map a text to a state
    Map {
        #[command(flatten)]
        input: TextInput,
        #[command(flatten)]
        lex: LexiconArgs,
        #[command(flatten)]
        phi: PhiArgs,
        /// Sentence id used for fixture lookup
        #[arg(long)]
        id: Option<String>,
        /// Include embedding vectors in the output
        #[arg(long)]
        emit_embeddings: bool,
    },
    /// Evaluate a corpus and print a metrics report
    Eval {
        #[arg(long, env = "TEXTSTATE_CORPUS")]
        corpus: Option<PathBuf>,
        #[command(flatten)]
        lex: LexiconArgs,
        #[command(flatten)]
        phi: PhiArgs,
        /// text, json or csv
        #[arg(long, default_value = "text")]
        format: ReportFormat,
        /// Write the report here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (default: logical cores)
        #[arg(long, env = "TEXTSTATE_JOBS")]
        jobs: Option<usize>,
        /// One report per fixture provider plus a cross-provider mean
        #[arg(long, conflicts_with = "provider_config")]
        per_provider: bool,
    },
    /// Query a live provider and write one fixture per sentence
    Record {
        #[arg(long, env = "TEXTSTATE_CORPUS")]
        corpus: Option<PathBuf>,
        #[arg(long, env = "TEXTSTATE_PROVIDER_CONFIG")]
        provider_config: Option<PathBuf>,
        #[arg(long)]
        fixtures_out: PathBuf,
        /// Record every sentence, not only those expected to use the LLM path
        #[arg(long)]
        all: bool,
        #[command(flatten)]
        lex: LexiconArgs,
    },
    /// Print the active lexicon as JSON
    LexiconDump {
        #[command(flatten)]
        lex: LexiconArgs,
    },
}

#[derive(Args)]
struct TextInput {
    /// Input text
    text: Option<String>,
    /// Read the text from stdin
    #[arg(long, conflicts_with = "text")]
    stdin: bool,
    /// en, jp or auto
    #[arg(long, env = "TEXTSTATE_LANG")]
    lang: Option<LanguageSelector>,
}

#[derive(Args)]
struct LexiconArgs {
    /// Lexicon JSON file (default: built-in)
    #[arg(long, env = "TEXTSTATE_LEXICON")]
    lexicon: Option<PathBuf>,
}

#[derive(Args)]
struct PhiArgs {
    /// rule, llm or hybrid
    #[arg(long, env = "TEXTSTATE_MODE")]
    mode: Option<ExtractMode>,
    /// Merge similarity threshold in (0, 1)
    #[arg(long, env = "TEXTSTATE_TAU")]
    tau: Option<f64>,
    /// Conflict weight boost
    #[arg(long, env = "TEXTSTATE_BETA")]
    beta: Option<f64>,
    /// Fixture directory for replay (default: bundled fixtures)
    #[arg(long, env = "TEXTSTATE_FIXTURES")]
    fixtures: Option<PathBuf>,
    /// Restrict replay to one provider label
    #[arg(long, env = "TEXTSTATE_PROVIDER")]
    provider: Option<String>,
    /// Provider JSON config; switches to live extraction
    #[arg(long, env = "TEXTSTATE_PROVIDER_CONFIG")]
    provider_config: Option<PathBuf>,
    /// Keep near-duplicate LLM interpretations
    #[arg(long)]
    no_dedup: bool,
}

enum CliError {
    Usage(String),
    Domain(anyhow::Error),
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        match e.downcast_ref::<textstate::Error>() {
            Some(textstate::Error::EmptyInput) => CliError::Usage(e.to_string()),
            _ => CliError::Domain(e),
        }
    }
}

impl From<textstate::Error> for CliError {
    fn from(e: textstate::Error) -> Self {
        anyhow::Error::from(e).into()
    }
}

type CliResult<T> = Result<T, CliError>;

fn bundled(rel: &str) -> PathBuf {
    Path::new(BUNDLED_DATA_DIR).join(rel)
}

fn read_text(input: &TextInput) -> CliResult<String> {
    let text = if input.stdin {
        let mut s = String::new();
        std::io::stdin()
            .read_to_string(&mut s)
            .context("reading stdin")?;
        s
    } else {
        input
            .text
            .clone()
            .ok_or_else(|| CliError::Usage("no text given (pass TEXT or --stdin)".into()))?
    };
    if text.trim().is_empty() {
        return Err(CliError::Usage("input text is empty".into()));
    }
    Ok(text.trim_end_matches(['\n', '\r']).to_string())
}

fn lexicon(args: &LexiconArgs, file: &FileConfig) -> CliResult<Arc<MarkerLexicon>> {
    match args.lexicon.as_ref().or(file.lexicon.as_ref()) {
        Some(path) => {
            let body = std::fs::read_to_string(path)
                .with_context(|| format!("reading lexicon {}", path.display()))?;
            let lex = MarkerLexicon::from_json(&body)
                .with_context(|| format!("loading lexicon {}", path.display()))?;
            Ok(Arc::new(lex))
        }
        None => Ok(Arc::new(MarkerLexicon::builtin())),
    }
}

fn phi_config(phi: &PhiArgs, lang: Option<LanguageSelector>, file: &FileConfig) -> PhiConfig {
    PhiConfig {
        mode: phi.mode.or(file.mode).unwrap_or_default(),
        tau: phi.tau.or(file.tau).unwrap_or(DEFAULT_TAU),
        beta: phi.beta.or(file.beta).unwrap_or(DEFAULT_BETA),
        language: lang.or(file.language).unwrap_or_default(),
        dedup_within_llm: !phi.no_dedup && file.dedup_within_llm.unwrap_or(true),
    }
}

fn live_client(path: &Path) -> CliResult<LiveClient> {
    let body = std::fs::read_to_string(path)
        .with_context(|| format!("reading provider config {}", path.display()))?;
    let cfg = ProviderConfig::from_json(&body)
        .with_context(|| format!("loading provider config {}", path.display()))?;
    Ok(LiveClient::new(cfg)?)
}

fn fixture_store(phi: &PhiArgs, file: &FileConfig) -> CliResult<FixtureStore> {
    let dir = phi
        .fixtures
        .clone()
        .or_else(|| file.fixtures.clone())
        .unwrap_or_else(|| bundled("fixtures"));
    Ok(FixtureStore::load(&dir)
        .with_context(|| format!("loading fixtures from {}", dir.display()))?)
}

fn build_mapper(
    phi: &PhiArgs,
    lang: Option<LanguageSelector>,
    lex: &LexiconArgs,
    file: &FileConfig,
) -> CliResult<(Mapper<HashEmbedder>, Option<FixtureStore>)> {
    let config = phi_config(phi, lang, file);
    let mapper = Mapper::new(lexicon(lex, file)?, config, HashEmbedder::default())
        .map_err(|e| CliError::Usage(e.to_string()))?;
    if config.mode == ExtractMode::Rule {
        return Ok((mapper, None));
    }
    if let Some(path) = phi
        .provider_config
        .as_ref()
        .or(file.provider_config.as_ref())
    {
        let client = live_client(path)?;
        let label = client.config().provider_label.clone();
        return Ok((
            mapper
                .with_source(Arc::new(client))
                .with_provider_label(label),
            None,
        ));
    }
    let store = fixture_store(phi, file)?;
    let provider = phi.provider.clone().or_else(|| file.provider.clone());
    let source = ReplaySource::new(store.clone()).with_provider(provider.clone());
    let mut mapper = mapper.with_source(Arc::new(source));
    if let Some(p) = provider {
        mapper = mapper.with_provider_label(p);
    }
    Ok((mapper, Some(store)))
}

/// Writes to stdout; a closed pipe is not an error.
fn emit(s: &str) -> CliResult<()> {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    match out.write_all(s.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
            Err(anyhow::Error::from(e).context("writing stdout").into())
        }
        _ => Ok(()),
    }
}

fn print_json(value: &impl serde::Serialize) -> CliResult<()> {
    let mut s = serde_json::to_string_pretty(value).context("serializing output")?;
    s.push('\n');
    emit(&s)
}

fn run(cli: Cli) -> CliResult<()> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    match cli.command {
        Command::Detect { input, lex } => {
            let text = read_text(&input)?;
            let lang = input.lang.or(file.language).unwrap_or_default();
            let fv = lexicon(&lex, &file)?.detect(&text, lang)?;
            print_json(&fv)
        }
        Command::Map {
            input,
            lex,
            phi,
            id,
            emit_embeddings,
        } => {
            let text = read_text(&input)?;
            let (mapper, _) = build_mapper(&phi, input.lang, &lex, &file)?;
            let state: State = mapper.phi(&text, id.as_deref())?;
            print_json(&state.to_json(emit_embeddings)?)
        }
        Command::Eval {
            corpus,
            lex,
            phi,
            format,
            out,
            jobs,
            per_provider,
        } => {
            let path = corpus
                .or_else(|| file.corpus.clone())
                .unwrap_or_else(|| bundled("corpus.jsonl"));
            let sentences =
                load_corpus(&path).with_context(|| format!("loading corpus {}", path.display()))?;
            let jobs = jobs.or(file.jobs);
            let (mapper, store) = build_mapper(&phi, None, &lex, &file)?;
            let rendered = if per_provider {
                let store = match store {
                    Some(s) => s,
                    None => fixture_store(&phi, &file)?,
                };
                let reports = evaluate_providers(&sentences, &mapper, &store, jobs)?;
                emit_comparison(&ProviderComparison::from_reports(&reports), format)?
            } else {
                let report = evaluate(&sentences, &mapper, jobs)?;
                for f in &report.failures {
                    log::warn!("{}: {}", f.id, f.error);
                }
                emit_report(&report, format)?
            };
            match out {
                Some(path) => {
                    std::fs::write(&path, rendered)
                        .with_context(|| format!("writing {}", path.display()))?;
                    eprintln!("report written to {}", path.display());
                }
                None => emit(&rendered)?,
            }
            Ok(())
        }
        Command::Record {
            corpus,
            provider_config,
            fixtures_out,
            all,
            lex,
        } => {
            let path = corpus
                .or_else(|| file.corpus.clone())
                .unwrap_or_else(|| bundled("corpus.jsonl"));
            let sentences =
                load_corpus(&path).with_context(|| format!("loading corpus {}", path.display()))?;
            let cfg_path = provider_config
                .or_else(|| file.provider_config.clone())
                .ok_or_else(|| CliError::Usage("record needs --provider-config".into()))?;
            let client = live_client(&cfg_path)?;
            let items: Vec<RecordItem> = sentences
                .iter()
                .filter(|s| all || s.expected_method == Method::Llm)
                .map(|s| RecordItem {
                    id: s.id.clone(),
                    text: s.text.clone(),
                    language: s.language.into(),
                })
                .collect();
            let label = client.config().provider_label.clone();
            let workers = client.config().max_concurrency;
            let summary = record_fixtures(
                &items,
                &client as &dyn InterpretationSource,
                &label,
                &*lexicon(&lex, &file)?,
                &fixtures_out,
                workers,
            )?;
            for (id, e) in &summary.failures {
                eprintln!("{id}: {e}");
            }
            emit(&format!(
                "recorded {} of {} fixtures for provider {label} into {}\n",
                summary.written,
                items.len(),
                fixtures_out.display()
            ))?;
            if summary.failures.is_empty() {
                Ok(())
            } else {
                Err(CliError::Domain(anyhow!(
                    "{} sentence(s) failed to record",
                    summary.failures.len()
                )))
            }
        }
        Command::LexiconDump { lex } => {
            let l = lexicon(&lex, &file)?;
            emit(&format!("{}\n", l.to_json()))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .target(env_logger::Target::Stderr)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Domain(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
