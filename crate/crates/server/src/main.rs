use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use duet_core::feedback::{paraphrase_feedback, Lexicon, TemplateSet};
use duet_core::gateway::{Gateway, GatewayConfig};
use duet_core::pipeline::{compare, parse_role, CompareOptions, Comparison, PipelineError, Role};
use duet_core::store::{Store, StoreError};
use duet_core::DiagramKind;
use duet_server::{load_templates, router, AppState, CorsConfig};
use serde::Serialize;

const EXIT_DIFFERENCES: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_PARSE: u8 = 3;
const EXIT_GATEWAY: u8 = 4;

#[derive(Parser)]
#[command(name = "duet", version, about = "Compare student UML class and ER diagrams with a reference and write formative feedback")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Class,
    Er,
}

impl From<KindArg> for DiagramKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Class => DiagramKind::ClassDiagram,
            KindArg::Er => DiagramKind::ERDiagram,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AudienceArg {
    Student,
    Educator,
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Run the HTTP API.
    Serve {
        #[arg(long, default_value_t = 8080, env = "DUET_PORT")]
        port: u16,
        #[arg(long, default_value = "127.0.0.1", env = "DUET_HOST")]
        host: String,
        #[arg(long, env = "DUET_STORE_DIR", default_value = "duet-store")]
        store: PathBuf,
        /// Allowed browser origin; repeat for several. Any origin when omitted.
        #[arg(long = "cors-origin", env = "DUET_CORS_ORIGINS", value_delimiter = ',')]
        cors_origins: Vec<String>,
    },
    /// Compare one student diagram with a reference. Exits 1 when they differ.
    Compare {
        reference: PathBuf,
        student: PathBuf,
        #[arg(long, conflicts_with = "markdown")]
        json: bool,
        #[arg(long)]
        markdown: bool,
        #[arg(long, value_enum, default_value = "both")]
        audience: AudienceArg,
        /// Reword the feedback through the text model (skipped offline).
        #[arg(long)]
        paraphrase: bool,
    },
    /// Compare every .puml file of a directory with a reference.
    Batch {
        reference: PathBuf,
        dir: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Transcribe a PNG or JPEG diagram picture to PlantUML.
    Convert {
        image: PathBuf,
        #[arg(long, value_enum)]
        kind: KindArg,
    },
    /// Print misconception statistics for a stored reference.
    Analytics {
        #[arg(long, env = "DUET_STORE_DIR")]
        store: PathBuf,
        #[arg(long)]
        reference: String,
    },
    /// Delete every stored reference and submission.
    Purge {
        #[arg(long, env = "DUET_STORE_DIR")]
        store: PathBuf,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure { code, message: message.into() }
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        let mut message = e.to_string();
        for d in e.diagnostics() {
            message.push_str(&format!("\n  {d}"));
        }
        Failure::new(EXIT_PARSE, message)
    }
}

impl From<StoreError> for Failure {
    fn from(e: StoreError) -> Self {
        let code = match e {
            StoreError::UnknownReference(_) => EXIT_USAGE,
            _ => 1,
        };
        Failure::new(code, e.to_string())
    }
}

fn read_text(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::new(EXIT_USAGE, format!("{}: {e}", path.display())))
}

fn write_json(value: &impl Serialize) -> String {
    serde_json::to_string_pretty(value).expect("json")
}

fn resources(config: &GatewayConfig) -> Result<(TemplateSet, Lexicon), Failure> {
    load_templates(config.templates_dir.as_deref()).map_err(|e| Failure::new(EXIT_USAGE, e))
}

fn compare_files(
    reference: &Path,
    student: &Path,
    templates: &TemplateSet,
) -> Result<Comparison, Failure> {
    let reference = parse_role(&read_text(reference)?, None, Role::Reference)?;
    let student = parse_role(&read_text(student)?, Some(reference.kind), Role::Student)?;
    Ok(compare(&reference, &student, &CompareOptions::new(templates))?)
}

fn render(comparison: &Comparison, json: bool, audience: AudienceArg) -> String {
    let f = &comparison.feedback;
    match (json, audience) {
        (true, _) => write_json(comparison),
        (false, AudienceArg::Student) => f.student_markdown.clone(),
        (false, AudienceArg::Educator) => f.educator_markdown.clone(),
        (false, AudienceArg::Both) => format!(
            "# Feedback for the student\n\n{}\n\n# Notes for the educator\n\n{}",
            f.student_markdown.trim_end(),
            f.educator_markdown.trim_end()
        ),
    }
}

#[derive(Serialize)]
struct BatchEntry {
    file: String,
    #[serde(flatten, skip_serializing_if = "Option::is_none")]
    comparison: Option<Comparison>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<BatchError>,
}

#[derive(Serialize)]
struct BatchError {
    code: String,
    message: String,
    diagnostics: Vec<duet_core::ParseDiagnostic>,
}

fn batch(reference: &Path, dir: &Path, out: &Path, templates: &TemplateSet) -> Result<(), Failure> {
    let reference = parse_role(&read_text(reference)?, None, Role::Reference)?;
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Failure::new(EXIT_USAGE, format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "puml"))
        .collect();
    files.sort();
    let options = CompareOptions::new(templates);
    let mut failed = 0;
    let results: Vec<BatchEntry> = files
        .iter()
        .map(|path| {
            let file = path.file_name().unwrap_or_default().to_string_lossy().into_owned();
            let outcome = std::fs::read_to_string(path)
                .map_err(|e| BatchError { code: "io".into(), message: e.to_string(), diagnostics: vec![] })
                .and_then(|text| {
                    parse_role(&text, Some(reference.kind), Role::Student)
                        .and_then(|s| compare(&reference, &s, &options))
                        .map_err(|e| BatchError {
                            code: e.code().into(),
                            message: e.to_string(),
                            diagnostics: e.diagnostics().to_vec(),
                        })
                });
            match outcome {
                Ok(c) => BatchEntry { file, comparison: Some(c), error: None },
                Err(e) => {
                    failed += 1;
                    BatchEntry { file, comparison: None, error: Some(e) }
                }
            }
        })
        .collect();
    let body = write_json(&serde_json::json!({ "results": results }));
    std::fs::write(out, body + "\n").map_err(|e| Failure::new(1, format!("{}: {e}", out.display())))?;
    eprintln!("{} file(s) compared, {failed} failed; results in {}", files.len(), out.display());
    Ok(())
}

async fn serve(host: &str, port: u16, store: &Path, cors: CorsConfig, config: GatewayConfig) -> Result<(), Failure> {
    let (templates, lexicon) = resources(&config)?;
    let store = Store::open(store)?;
    let offline = config.offline;
    let mut state = AppState::new(store, Gateway::with_http(config));
    state.templates = templates.into();
    state.lexicon = lexicon.into();
    let addr: SocketAddr = format!("{host}:{port}")
        .parse()
        .map_err(|e| Failure::new(EXIT_USAGE, format!("bad address {host}:{port}: {e}")))?;
    let listener = tokio::net::TcpListener::bind(addr).await.map_err(|e| Failure::new(1, format!("bind {addr}: {e}")))?;
    log::info!("listening on http://{addr} (offline: {offline})");
    axum::serve(listener, router(state, &cors))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| Failure::new(1, e.to_string()))
}

fn run(cli: Cli) -> Result<u8, Failure> {
    let config = GatewayConfig::from_env();
    match cli.command {
        Command::Serve { port, host, store, cors_origins } => {
            let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::new(1, e.to_string()))?;
            runtime.block_on(serve(&host, port, &store, CorsConfig { origins: cors_origins }, config))?;
            Ok(0)
        }
        Command::Compare { reference, student, json, markdown: _, audience, paraphrase } => {
            let (templates, lexicon) = resources(&config)?;
            let mut comparison = compare_files(&reference, &student, &templates)?;
            if paraphrase {
                let gateway = Gateway::with_http(config);
                comparison.feedback = paraphrase_feedback(&comparison.feedback, &gateway, &lexicon)
                    .map_err(|e| Failure::new(EXIT_GATEWAY, e.to_string()))?;
            }
            for warning in &comparison.feedback.warnings {
                log::warn!("{warning}");
            }
            println!("{}", render(&comparison, json, audience));
            Ok(if comparison.diff_report.is_empty() { 0 } else { EXIT_DIFFERENCES })
        }
        Command::Batch { reference, dir, out } => {
            let (templates, _) = resources(&config)?;
            batch(&reference, &dir, &out, &templates)?;
            Ok(0)
        }
        Command::Convert { image, kind } => {
            let bytes = std::fs::read(&image).map_err(|e| Failure::new(EXIT_USAGE, format!("{}: {e}", image.display())))?;
            let result = Gateway::with_http(config)
                .convert_image(&bytes, kind.into(), None)
                .map_err(|e| Failure::new(EXIT_GATEWAY, e.to_string()))?;
            println!("{}", result.plantuml);
            Ok(0)
        }
        Command::Analytics { store, reference } => {
            let stats = Store::open(store)?.aggregate(&reference)?;
            println!("{}", write_json(&stats));
            Ok(0)
        }
        Command::Purge { store } => {
            let (references, submissions) = Store::open(store)?.purge()?;
            println!("removed {references} reference(s) and {submissions} submission(s)");
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let default_level = if matches!(cli.command, Command::Serve { .. }) { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(default_level)).init();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("duet: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
