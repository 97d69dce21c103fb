//! `causal-plot`: plan a story backwards from its ending, evaluate stories
//! with enablement questions, and export plans.
//!
//! Exit codes: 0 success, 1 other failure, 2 usage or input error,
//! 3 event budget exhausted, 4 knowledge or embedding endpoint failure.

mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use causal_plot::eval::{
    corrupt_story, enablement_score, parse_stories, validate_measure, CoherenceReport, MockOracle, QAOracle,
    SourceOracle, Story,
};
use causal_plot::graph::{to_dot, PlanGraph};
use causal_plot::knowledge::{
    seed_ending, HttpSource, Knowledge, KnowledgeError, KnowledgeSource, ScriptedFixture, ScriptedSource, TemplateSet,
};
use causal_plot::ordering::render_plot;
use causal_plot::planner::{plan, PlanError, PlanReport};
use causal_plot::similarity::{Embedder, HttpEmbedder, LocalEmbedder, SimilarityError};
use clap::{Parser, Subcommand, ValueEnum};
use config::ToolConfig;

const EXIT_USAGE: u8 = 2;
const EXIT_BUDGET: u8 = 3;
const EXIT_TRANSPORT: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "causal-plot", version, about = "Backward-chaining story plot planner")]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Replay a scripted fixture instead of calling the knowledge endpoint.
    #[arg(long, global = true)]
    scripted: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Log verbosity: -v info, -vv debug. RUST_LOG takes precedence.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a plan ending in the given sentence.
    Plan {
        ending: String,
        /// File of initial conditions, one sentence per line.
        #[arg(long)]
        initial: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Print the resolved configuration and exit without writing anything.
        #[arg(long)]
        dry_run: bool,
    },
    /// Score stories by how many of their sentences have an enabling earlier sentence.
    Eval {
        stories: PathBuf,
        #[arg(long, value_enum, default_value_t = OracleMode::Mock)]
        oracle: OracleMode,
        #[arg(long, default_value = "eval-out")]
        out: PathBuf,
        /// Also check the oracle against seeded sentence swaps.
        #[arg(long)]
        corrupt: bool,
    },
    /// Generate an ending sentence from a story title.
    SeedEnding { title: String },
    /// Convert a plan JSON file to Graphviz DOT.
    ExportDot {
        plan: PathBuf,
        /// Output file; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum OracleMode {
    /// Lexical heuristic, no model calls.
    Mock,
    /// The enablement prompt against the knowledge source.
    Source,
}

/// An error with the exit code it maps to.
#[derive(Debug)]
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    fn usage(error: anyhow::Error) -> Self {
        Failure { code: EXIT_USAGE, error }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        Failure { code: 1, error }
    }
}

type CmdResult = std::result::Result<(), Failure>;

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let filter = tracing_subscriber::EnvFilter::try_from_default_env()
        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new(level));
    tracing_subscriber::fmt().with_env_filter(filter).with_writer(std::io::stderr).init();
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(cli.verbose);
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> CmdResult {
    let mut cfg = match &cli.config {
        Some(path) => ToolConfig::load(path).map_err(Failure::usage)?,
        None => ToolConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.planner.seed = cfg.seed;
    let rt = Runtime { cfg, scripted: cli.scripted };
    match cli.command {
        Command::Plan { ending, initial, out, dry_run } => rt.cmd_plan(&ending, initial.as_deref(), &out, dry_run),
        Command::Eval { stories, oracle, out, corrupt } => rt.cmd_eval(&stories, oracle, &out, corrupt),
        Command::SeedEnding { title } => rt.cmd_seed_ending(&title),
        Command::ExportDot { plan, out } => cmd_export_dot(&plan, out.as_deref()),
    }
}

struct Runtime {
    cfg: ToolConfig,
    scripted: Option<PathBuf>,
}

fn is_transport(e: &KnowledgeError) -> bool {
    matches!(e, KnowledgeError::Transport(_) | KnowledgeError::Similarity(SimilarityError::Transport(_)))
}

fn knowledge_failure(e: KnowledgeError) -> Failure {
    let code = if is_transport(&e) { EXIT_TRANSPORT } else { 1 };
    Failure { code, error: e.into() }
}

impl Runtime {
    fn templates(&self) -> Result<TemplateSet, Failure> {
        match &self.cfg.prompts {
            Some(dir) => TemplateSet::load_dir(dir).map_err(|e| Failure::usage(e.into())),
            None => Ok(TemplateSet::builtin()),
        }
    }

    fn source(&self) -> Result<Box<dyn KnowledgeSource>, Failure> {
        if let Some(path) = &self.scripted {
            let fixture = ScriptedFixture::load(path).map_err(|e| Failure::usage(e.into()))?;
            return Ok(Box::new(ScriptedSource::new(fixture)));
        }
        let kc = &self.cfg.knowledge;
        let url = kc.url.as_deref().ok_or_else(|| {
            Failure::usage(anyhow!("no knowledge source: pass --scripted <fixture> or set knowledge.url in the config"))
        })?;
        let source = HttpSource::new(kc.endpoint(url), kc.max_tokens).map_err(knowledge_failure)?;
        Ok(Box::new(source))
    }

    fn embedder(&self) -> Result<Box<dyn Embedder>, Failure> {
        if self.cfg.embedding == "local" {
            return Ok(Box::new(LocalEmbedder::default()));
        }
        let endpoint = self.cfg.embedding_endpoint.endpoint(&self.cfg.embedding);
        let e = HttpEmbedder::new(endpoint).map_err(|e| Failure { code: EXIT_TRANSPORT, error: e.into() })?;
        Ok(Box::new(e))
    }

    fn cmd_plan(&self, ending: &str, initial: Option<&Path>, out: &Path, dry_run: bool) -> CmdResult {
        if ending.trim().is_empty() {
            return Err(Failure::usage(anyhow!("ending sentence must not be empty")));
        }
        let initial_conditions = match initial {
            Some(p) => read_initial(p).map_err(Failure::usage)?,
            None => Vec::new(),
        };
        let templates = self.templates()?;
        let source = self.source()?;
        if dry_run {
            print!("{}", self.cfg.to_redacted_toml()?);
            println!("# ending: {ending}");
            println!("# initial conditions: {}", initial_conditions.len());
            println!("# output directory: {}", out.display());
            return Ok(());
        }
        let embedder = self.embedder()?;
        let k = Knowledge {
            source: &*source,
            templates: &templates,
            embedder: &*embedder,
            similarity: &self.cfg.similarity,
            config: &self.cfg.generation,
        };
        match plan(ending, &initial_conditions, &self.cfg.planner, k) {
            Ok(report) => {
                write_plan(&report, out)?;
                print!("{}", render_plot(&report.plan).map_err(anyhow::Error::from)?);
                Ok(())
            }
            Err(e) => {
                if let Some(partial) = e.partial() {
                    write_plan(partial, out)?;
                    tracing::warn!(dir = %out.display(), "partial plan written");
                }
                let code = match &e {
                    PlanError::BudgetExceeded { .. } => EXIT_BUDGET,
                    PlanError::Knowledge { error, .. } if is_transport(error) => EXIT_TRANSPORT,
                    PlanError::EmptyEnding | PlanError::Config(_) => EXIT_USAGE,
                    _ => 1,
                };
                Err(Failure { code, error: e.into() })
            }
        }
    }

    fn oracle(&self, mode: OracleMode) -> Result<Box<dyn QAOracle>, Failure> {
        Ok(match mode {
            OracleMode::Mock => Box::new(MockOracle { lexicon: self.cfg.planner.characters.clone() }),
            OracleMode::Source => Box::new(SourceOracle { source: self.source()?, templates: self.templates()? }),
        })
    }

    fn cmd_eval(&self, path: &Path, mode: OracleMode, out: &Path, corrupt: bool) -> CmdResult {
        let text = fs::read_to_string(path)
            .with_context(|| format!("cannot read stories {}", path.display()))
            .map_err(Failure::usage)?;
        let stories = parse_stories(&text).map_err(|e| Failure::usage(e.into()))?;
        let qa = self.oracle(mode)?;
        fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
        let mut reports = Vec::new();
        for s in &stories {
            let r = enablement_score(s, &*qa, &self.cfg.eval).map_err(anyhow::Error::from)?;
            write_json(&out.join(format!("{}.json", file_stem(&r.story_id))), &r)?;
            println!("{}\t{:.4}\t{}/{}", r.story_id, r.score, r.answerable(), r.counted());
            reports.push(r);
        }
        let aggregate = aggregate(&reports);
        write_json(&out.join("aggregate.json"), &serde_json::json!({ "stories": reports.len(), "score": aggregate }))?;
        println!("aggregate\t{aggregate:.4}\t{} stories", reports.len());
        if corrupt {
            let corrupted = corrupt_all(&stories, self.cfg.seed).map_err(Failure::usage)?;
            let summary = validate_measure(&stories, &corrupted, &*qa).map_err(anyhow::Error::from)?;
            write_json(&out.join("validation.json"), &summary)?;
            println!(
                "validation\tclean {:.4}\tcorrupted-none {:.4}\taccuracy {:.2}%",
                summary.clean_response_rate,
                summary.corrupted_none_rate,
                summary.accuracy * 100.0
            );
        }
        Ok(())
    }

    fn cmd_seed_ending(&self, title: &str) -> CmdResult {
        if title.trim().is_empty() {
            return Err(Failure::usage(anyhow!("title must not be empty")));
        }
        let templates = self.templates()?;
        let source = self.source()?;
        let ending =
            seed_ending(title, &*source, &templates, self.cfg.generation.temperature).map_err(knowledge_failure)?;
        println!("{ending}");
        Ok(())
    }
}

/// Mean of per-story scores.
fn aggregate(reports: &[CoherenceReport]) -> f64 {
    if reports.is_empty() {
        0.0
    } else {
        reports.iter().map(|r| r.score).sum::<f64>() / reports.len() as f64
    }
}

/// One corrupted copy per story, each taking a sentence from the next story.
fn corrupt_all(stories: &[Story], seed: u64) -> Result<Vec<causal_plot::eval::CorruptedStory>> {
    if stories.len() < 2 {
        return Err(anyhow!("--corrupt needs at least two stories"));
    }
    let mut out = Vec::new();
    for (i, s) in stories.iter().enumerate() {
        if s.len() < 2 {
            continue;
        }
        let donor = &stories[(i + 1) % stories.len()];
        let position = 1 + (seed.wrapping_add(i as u64) % (s.len() as u64 - 1)) as usize;
        out.push(corrupt_story(s, donor, position, seed.wrapping_add(i as u64))?);
    }
    Ok(out)
}

fn file_stem(id: &str) -> String {
    id.chars().map(|c| if c.is_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

fn read_initial(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read initial conditions {}", path.display()))?;
    Ok(text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')).map(String::from).collect())
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn write_plan(report: &PlanReport, out: &Path) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    let write = |name: &str, body: String| {
        let p = out.join(name);
        fs::write(&p, body).with_context(|| format!("cannot write {}", p.display()))
    };
    write("plan.json", report.plan.to_json()?)?;
    write("plan.dot", to_dot(&report.plan))?;
    write("plot.txt", render_plot(&report.plan)?)?;
    write("trace.jsonl", report.trace.to_jsonl())?;
    Ok(())
}

fn cmd_export_dot(path: &Path, out: Option<&Path>) -> CmdResult {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read plan {}", path.display()))
        .map_err(Failure::usage)?;
    let plan = PlanGraph::from_json(&text).map_err(|e| Failure::usage(e.into()))?;
    let dot = to_dot(&plan);
    match out {
        Some(p) => fs::write(p, dot).with_context(|| format!("cannot write {}", p.display()))?,
        None => print!("{dot}"),
    }
    Ok(())
}
