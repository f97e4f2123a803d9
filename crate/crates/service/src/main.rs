use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use vizgen_core::cost::CostParams;
use vizgen_core::difftree::{enumerate_queries, DiffForest};
use vizgen_core::mapping::Size;
use vizgen_core::relational::Catalog;
use vizgen_core::search::{SearchConfig, SearchError};
use vizgen_core::sql::{parse_log, render_sql, QueryAst};
use vizgen_service::pipeline::{self, PipelineError};
use vizgen_service::{router, AppState, Datasets, VersionStore};

const ENUMERATE_CAP: usize = 1000;

#[derive(Parser)]
#[command(
    name = "vizgen",
    version,
    about = "Generate interactive interfaces from SQL query logs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Search for an interface and write its spec JSON.
    Generate(GenerateArgs),
    /// Serve the HTTP API over a directory of datasets.
    Serve {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// JSON-lines file that persists interface versions.
        #[arg(long)]
        state: Option<PathBuf>,
    },
    /// Print the queries expressible by the initial and searched states.
    Enumerate {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        iterations: Option<usize>,
    },
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    log: PathBuf,
    /// Directory of CSV files.
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    width: Option<f64>,
    #[arg(long)]
    height: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    iterations: Option<usize>,
    /// Write the search trace to stderr as JSON lines.
    #[arg(long)]
    trace: bool,
    #[arg(long)]
    cost_config: Option<PathBuf>,
    /// Complete-search the five best states instead of one.
    #[arg(long)]
    complete_all: bool,
    /// Spec output path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Parse(String),
    Io(String),
    Other(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Parse(_) => 1,
            Failure::Io(_) => 2,
            Failure::Other(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Parse(m) | Failure::Io(m) | Failure::Other(m) => m,
        }
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Parse { .. } => Failure::Parse(e.to_string()),
            PipelineError::Search(SearchError::Diff(_)) => Failure::Parse(e.to_string()),
            _ => Failure::Other(e.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .map_err(|e| Failure::Io(format!("cannot read {}: {e}", path.display())))
}

fn load_log(path: &Path) -> Result<Vec<QueryAst>, Failure> {
    let text = read(path)?;
    let log = parse_log(&text).map_err(|e| Failure::Parse(format!("{}: {e}", path.display())))?;
    if log.is_empty() {
        return Err(Failure::Parse(format!("{}: no queries", path.display())));
    }
    Ok(log.into_iter().map(|q| q.ast).collect())
}

fn load_catalog(dir: &Path) -> Result<Catalog, Failure> {
    let c = Catalog::from_dir(dir).map_err(|e| Failure::Io(e.to_string()))?;
    if c.is_empty() {
        return Err(Failure::Io(format!("{}: no CSV files", dir.display())));
    }
    Ok(c)
}

fn config(seed: Option<u64>, iterations: Option<usize>) -> SearchConfig {
    let mut c = SearchConfig::default();
    if let Some(s) = seed {
        c.seed = s;
    }
    if let Some(n) = iterations {
        c.iterations = n;
    }
    c
}

fn run_generate(a: GenerateArgs) -> Result<(), Failure> {
    let log = load_log(&a.log)?;
    let catalog = load_catalog(&a.data)?;
    let mut params = match &a.cost_config {
        Some(p) => CostParams::from_config(&read(p)?)
            .map_err(|e| Failure::Parse(format!("{}: {e}", p.display())))?,
        None => CostParams::default(),
    };
    let screen = params.screen();
    params = params.with_screen(Size::new(
        a.width.unwrap_or(screen.width),
        a.height.unwrap_or(screen.height),
    ));
    if !(params.screen_width > 0.0 && params.screen_height > 0.0) {
        return Err(Failure::Other("screen dimensions must be positive".into()));
    }
    let mut cfg = config(a.seed, a.iterations);
    cfg.complete_all = a.complete_all;
    let result = pipeline::generate(&log, &catalog, &params, &cfg)?;

    if a.trace {
        let mut err = std::io::stderr().lock();
        for e in &result.trace {
            let line = serde_json::to_string(e).map_err(|e| Failure::Other(e.to_string()))?;
            writeln!(err, "{line}").map_err(|e| Failure::Io(e.to_string()))?;
        }
    }
    let json = result.spec.to_json();
    let cost = serde_json::to_string(&result.cost).map_err(|e| Failure::Other(e.to_string()))?;
    match &a.out {
        Some(path) => {
            std::fs::write(path, json + "\n")
                .map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))?;
            println!("{cost}");
        }
        None => {
            println!("{json}");
            eprintln!("{cost}");
        }
    }
    Ok(())
}

fn print_forest(title: &str, forest: &DiffForest) -> Result<(), Failure> {
    println!("# {title}");
    for t in &forest.trees {
        let e = enumerate_queries(t, ENUMERATE_CAP).map_err(|e| Failure::Other(e.to_string()))?;
        println!(
            "-- tree {} ({}{} queries)",
            t.id,
            e.queries.len(),
            if e.truncated { "+" } else { "" }
        );
        for q in &e.queries {
            println!("{}", render_sql(q));
        }
    }
    Ok(())
}

fn run_enumerate(
    log: &Path,
    data: &Path,
    seed: Option<u64>,
    iterations: Option<usize>,
) -> Result<(), Failure> {
    let log = load_log(log)?;
    let catalog = load_catalog(data)?;
    let initial = DiffForest::initial(&log, &catalog).map_err(|e| Failure::Parse(e.to_string()))?;
    print_forest("initial state", &initial)?;
    let result = pipeline::generate(
        &log,
        &catalog,
        &CostParams::default(),
        &config(seed, iterations),
    )?;
    let actions: Vec<String> = result.actions.iter().map(|a| a.to_string()).collect();
    print_forest(
        &format!("searched state [{}]", actions.join(", ")),
        &result.state,
    )
}

fn run_serve(data: &Path, host: &str, port: u16, state: Option<&Path>) -> Result<(), Failure> {
    let datasets = Datasets::load(data).map_err(|e| Failure::Io(e.to_string()))?;
    if datasets.is_empty() {
        return Err(Failure::Io(format!("{}: no datasets", data.display())));
    }
    let store = match state {
        Some(p) => {
            VersionStore::open(p).map_err(|e| Failure::Io(format!("{}: {e}", p.display())))?
        }
        None => VersionStore::in_memory(),
    };
    let names = datasets.names();
    let app = router(AppState::new(datasets, store));
    let rt = tokio::runtime::Runtime::new().map_err(|e| Failure::Io(e.to_string()))?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind((host, port))
            .await
            .map_err(|e| Failure::Io(format!("cannot bind {host}:{port}: {e}")))?;
        tracing::info!(addr = %listener.local_addr().map_err(|e| Failure::Io(e.to_string()))?, datasets = ?names, "listening");
        axum::serve(listener, app).await.map_err(|e| Failure::Io(e.to_string()))
    })
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    let r = match cli.command {
        Command::Generate(a) => run_generate(a),
        Command::Serve {
            data,
            port,
            host,
            state,
        } => run_serve(&data, &host, port, state.as_deref()),
        Command::Enumerate {
            log,
            data,
            seed,
            iterations,
        } => run_enumerate(&log, &data, seed, iterations),
    };
    match r {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
