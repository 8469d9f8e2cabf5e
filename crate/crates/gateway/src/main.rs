use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hine_core::{load_catalog, CatalogError, DEFAULT_MAX_DIMENSION};
use hine_gateway::server::{load_catalogs, shutdown_signal};
use hine_gateway::stages::write_stages;
use hine_gateway::{serve, ApiError, AppState, ErrorCode, ServeConfig, StartupError};
use hine_imaging::{codec, run_pipeline, PipelineConfig};
use hine_testkit::{format_ground_truth, gen_scene, random_stick_figure};

#[derive(Parser)]
#[command(
    name = "hine",
    version,
    about = "Infant neurological examination records and skeleton pipeline"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Directory holding the records log and media store.
    #[arg(
        long,
        global = true,
        env = "HINE_DATA_DIR",
        default_value = "hine-data"
    )]
    data_dir: PathBuf,
    /// Neonatal catalog file; requires --post-neonatal-catalog.
    #[arg(long, global = true, requires = "post_neonatal_catalog")]
    neonatal_catalog: Option<PathBuf>,
    /// Post-neonatal catalog file; requires --neonatal-catalog.
    #[arg(long, global = true, requires = "neonatal_catalog")]
    post_neonatal_catalog: Option<PathBuf>,
}

impl Global {
    fn catalog_paths(&self) -> Option<(PathBuf, PathBuf)> {
        self.neonatal_catalog
            .clone()
            .zip(self.post_neonatal_catalog.clone())
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the HTTP API.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: SocketAddr,
        /// Largest accepted frame width or height.
        #[arg(long, default_value_t = DEFAULT_MAX_DIMENSION)]
        max_dimension: usize,
    },
    /// Extract the skeleton of one frame into image files.
    Skeletonize {
        input: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Also write the segment, merged and silhouette stages.
        #[arg(long)]
        stages: bool,
        /// JSON file with pipeline parameter overrides.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Write every patient and session as one JSON document; `-` for stdout.
    Export { output: PathBuf },
    /// Load an exported document into an empty store.
    Import { input: PathBuf },
    /// Catalog utilities.
    Catalog {
        #[command(subcommand)]
        command: CatalogCommand,
    },
    /// Render a synthetic stick-figure frame and its centreline.
    GenScene {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
        /// File stem; defaults to `scene-<seed>`.
        #[arg(long)]
        name: Option<String>,
        #[arg(long, default_value_t = 352)]
        width: usize,
        #[arg(long, default_value_t = 288)]
        height: usize,
        /// Per-channel jitter amplitude, 0..=20.
        #[arg(long)]
        noise: Option<u8>,
    },
}

#[derive(Subcommand)]
enum CatalogCommand {
    /// Check a catalog file against every catalog rule.
    Validate { file: PathBuf },
}

/// A failure reported as `Kind: message` lines on stderr.
struct Failure {
    kind: &'static str,
    lines: Vec<String>,
}

impl Failure {
    fn new(kind: &'static str, message: impl Into<String>) -> Self {
        Self {
            kind,
            lines: vec![message.into()],
        }
    }

    fn io(path: &Path, e: std::io::Error) -> Self {
        Self::new("IoError", format!("{}: {e}", path.display()))
    }
}

impl From<ApiError> for Failure {
    fn from(e: ApiError) -> Self {
        let kind = match e.code {
            ErrorCode::Validation | ErrorCode::InvalidTemplate => "ValidationError",
            ErrorCode::NotFound => "NotFound",
            ErrorCode::NoForeground => "NoForeground",
            ErrorCode::PayloadTooLarge => "TooLarge",
            ErrorCode::Conflict
            | ErrorCode::NotEligible
            | ErrorCode::SessionOpen
            | ErrorCode::SessionClosed
            | ErrorCode::StaleVersion => "Conflict",
            ErrorCode::Internal => "Error",
        };
        Self::new(kind, e.message)
    }
}

impl From<CatalogError> for Failure {
    fn from(e: CatalogError) -> Self {
        match e {
            CatalogError::Validation(problems) => Self {
                kind: "ValidationError",
                lines: problems,
            },
            CatalogError::Io { .. } => Self::new("IoError", e.to_string()),
            other => Self::new("ValidationError", other.to_string()),
        }
    }
}

impl From<StartupError> for Failure {
    fn from(e: StartupError) -> Self {
        match e {
            StartupError::Catalog(c) => c.into(),
            other => Self::new("StartupError", other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let mut err = std::io::stderr().lock();
            for line in &f.lines {
                let _ = writeln!(err, "{}: {line}", f.kind);
            }
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let global = cli.global;
    match cli.command {
        Command::Serve {
            bind,
            max_dimension,
        } => {
            tracing_subscriber::fmt()
                .with_writer(std::io::stderr)
                .with_env_filter(
                    tracing_subscriber::EnvFilter::try_from_default_env()
                        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info")),
                )
                .init();
            let cfg = ServeConfig {
                data_dir: global.data_dir.clone(),
                bind,
                catalogs: global.catalog_paths(),
                max_dimension,
            };
            let rt = tokio::runtime::Runtime::new()
                .map_err(|e| Failure::new("StartupError", e.to_string()))?;
            rt.block_on(serve(cfg, shutdown_signal()))?;
            Ok(())
        }
        Command::Skeletonize {
            input,
            out_dir,
            stages,
            config,
        } => skeletonize(&input, &out_dir, stages, config.as_deref()),
        Command::Export { output } => {
            let state = open_state(&global)?;
            let doc = state.records.export();
            if output.as_os_str() == "-" {
                std::io::stdout()
                    .lock()
                    .write_all(doc.as_bytes())
                    .map_err(|e| Failure::new("IoError", e.to_string()))
            } else {
                std::fs::write(&output, doc).map_err(|e| Failure::io(&output, e))
            }
        }
        Command::Import { input } => {
            let doc = std::fs::read_to_string(&input).map_err(|e| Failure::io(&input, e))?;
            let state = open_state(&global)?;
            state.records.import(&doc).map_err(ApiError::from)?;
            println!("imported {}", input.display());
            Ok(())
        }
        Command::Catalog {
            command: CatalogCommand::Validate { file },
        } => {
            let doc = hine_core::catalog::read(&file)?;
            let catalog = load_catalog(&doc)?;
            println!(
                "ok: {} catalog with {} items",
                catalog.category,
                catalog.items.len()
            );
            Ok(())
        }
        Command::GenScene {
            seed,
            out_dir,
            name,
            width,
            height,
            noise,
        } => {
            let mut spec = random_stick_figure(seed, (width, height), 7..=11);
            if let Some(n) = noise {
                spec.noise = n;
            }
            let scene = gen_scene(&spec, seed)
                .map_err(|e| Failure::new("ValidationError", e.to_string()))?;
            std::fs::create_dir_all(&out_dir).map_err(|e| Failure::io(&out_dir, e))?;
            let stem = name.unwrap_or_else(|| format!("scene-{seed}"));
            let image = out_dir.join(format!("{stem}.ppm"));
            let truth = out_dir.join(format!("{stem}.gt.txt"));
            std::fs::write(&image, codec::encode_ppm(&scene.image))
                .map_err(|e| Failure::io(&image, e))?;
            std::fs::write(&truth, format_ground_truth(&scene.ground_truth))
                .map_err(|e| Failure::io(&truth, e))?;
            println!("{}", image.display());
            println!("{}", truth.display());
            Ok(())
        }
    }
}

fn open_state(global: &Global) -> Result<AppState, Failure> {
    let catalogs = load_catalogs(global.catalog_paths().as_ref())?;
    AppState::open(&global.data_dir, catalogs, DEFAULT_MAX_DIMENSION)
        .map_err(|e| Failure::new("StorageError", e))
}

fn skeletonize(
    input: &Path,
    out_dir: &Path,
    all: bool,
    config: Option<&Path>,
) -> Result<(), Failure> {
    let cfg = match config {
        Some(path) => {
            let raw = std::fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
            serde_json::from_str::<PipelineConfig>(&raw)
                .map_err(|e| Failure::new("ValidationError", format!("{}: {e}", path.display())))?
        }
        None => PipelineConfig::default(),
    };
    cfg.validate().map_err(ApiError::from)?;
    let bytes = std::fs::read(input).map_err(|e| Failure::io(input, e))?;
    let (w, h) = codec::probe_dimensions(&bytes).map_err(ApiError::from)?;
    if w > DEFAULT_MAX_DIMENSION || h > DEFAULT_MAX_DIMENSION {
        return Err(Failure::new(
            "ValidationError",
            format!("frame is {w}x{h}, larger than {DEFAULT_MAX_DIMENSION} in some dimension"),
        ));
    }
    let img = codec::decode(&bytes).map_err(ApiError::from)?;
    let result = run_pipeline(&img, &cfg).map_err(ApiError::from)?;
    let stem = input
        .file_stem()
        .and_then(|s| s.to_str())
        .filter(|s| !s.is_empty())
        .unwrap_or("frame");
    let written = write_stages(out_dir, stem, &result, all).map_err(|e| Failure::io(out_dir, e))?;
    for path in written {
        println!("{}", path.display());
    }
    Ok(())
}
