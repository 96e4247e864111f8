//! The `modcanvas` command line.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use modcanvas_core::analysis::validate;
use modcanvas_core::h5p::read_package;
use modcanvas_core::model::{CompositionGraph, CompositionId, ModuleId};
use modcanvas_core::registry::ModuleRegistry;

use crate::api::{self, commit_import, export_bytes, import_mutation, ImportQuery, Service};
use crate::config::Config;
use crate::state::Effect;
use crate::store::Store;

#[derive(Debug, Parser)]
#[command(name = "modcanvas", version, about = "Compose, run and share e-learning modules")]
pub struct Cli {
    /// TOML config file; MODCANVAS_* variables override it.
    #[arg(long, global = true, env = "MODCANVAS_CONFIG")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the HTTP API.
    Serve,
    /// Import a .h5p package as a module owned by an existing user.
    Import {
        file: PathBuf,
        /// Logon id of the owning user.
        #[arg(long)]
        author: String,
        #[arg(long)]
        title: Option<String>,
        /// Content type used by search filters; defaults to the main library name.
        #[arg(long = "type")]
        content_type: Option<String>,
    },
    /// Export a composition, with everything it nests, as one .h5p package.
    Export {
        /// Composition id, or the id of the module holding it.
        composition: String,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Validate a stored composition or a graph JSON file. Exits 1 on errors.
    Validate {
        /// Composition id, module id, or path to a graph document.
        target: String,
    },
    /// Check a .h5p package and print its manifest and libraries.
    Inspect { file: PathBuf },
}

/// Runs `cli`, writing results to `out`. Returns the process exit code.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<i32, String> {
    let config = Config::from_process(cli.config.as_deref()).map_err(|e| e.to_string())?;
    match cli.command {
        Command::Serve => serve(&config).map(|()| 0),
        Command::Import {
            file,
            author,
            title,
            content_type,
        } => {
            let store = open(&config)?;
            let bytes = std::fs::read(&file).map_err(|e| format!("{}: {e}", file.display()))?;
            let state = store.state();
            let author = state
                .user_by_logon(&author)
                .ok_or_else(|| format!("no user with logon id {author}"))?
                .user_id
                .clone();
            let query = ImportQuery { title, content_type };
            let (mutation, package) = import_mutation(&bytes, &query, &author).map_err(|e| e.to_string())?;
            let Effect::Module(descriptor) =
                commit_import(&store, &bytes, mutation, package).map_err(|e| e.to_string())?
            else {
                unreachable!("imports yield a module")
            };
            writeln!(out, "{}", serde_json::to_string_pretty(&descriptor).expect("serializable"))
                .map_err(|e| e.to_string())?;
            Ok(0)
        }
        Command::Export { composition, output } => {
            let store = open(&config)?;
            let state = store.state();
            let graph = lookup(&state.catalog, &composition)
                .ok_or_else(|| format!("no composition {composition}"))?;
            let bytes = export_bytes(graph, &state.catalog).map_err(|e| e.to_string())?;
            std::fs::write(&output, &bytes).map_err(|e| format!("{}: {e}", output.display()))?;
            writeln!(out, "wrote {} ({} bytes)", output.display(), bytes.len()).map_err(|e| e.to_string())?;
            Ok(0)
        }
        Command::Validate { target } => {
            let path = Path::new(&target);
            let store = open(&config)?;
            let state = store.state();
            let graph = if path.is_file() {
                let text = std::fs::read_to_string(path).map_err(|e| format!("{target}: {e}"))?;
                CompositionGraph::from_json(&text).map_err(|e| format!("{target}: {e}"))?
            } else {
                lookup(&state.catalog, &target)
                    .ok_or_else(|| format!("no composition {target}"))?
                    .clone()
            };
            let report = validate(&graph, &state.catalog);
            writeln!(out, "{}", serde_json::to_string_pretty(&report).expect("serializable"))
                .map_err(|e| e.to_string())?;
            Ok(if report.has_errors() { 1 } else { 0 })
        }
        Command::Inspect { file } => {
            let bytes = std::fs::read(&file).map_err(|e| format!("{}: {e}", file.display()))?;
            let package = read_package(&bytes).map_err(|e| e.to_string())?;
            let m = &package.manifest;
            let mut text = format!("title: {}\nmain library: {}\n", m.title, m.main_library);
            for library in package.libraries.values() {
                let (major, minor, patch) = library.full_version();
                text += &format!("library: {} {major}.{minor}.{patch}\n", library.machine_name);
            }
            text += &format!("assets: {}\n", package.assets.len());
            write!(out, "{text}").map_err(|e| e.to_string())?;
            Ok(0)
        }
    }
}

fn open(config: &Config) -> Result<Store, String> {
    Store::open(&config.store_path, config.snapshot_every).map_err(|e| e.to_string())
}

/// A graph by composition id, falling back to a module id.
fn lookup<'a>(registry: &'a dyn ModuleRegistry, id: &str) -> Option<&'a CompositionGraph> {
    registry
        .composition(&CompositionId::new(id))
        .or_else(|| registry.module_graph(&ModuleId::new(id)))
}

fn serve(config: &Config) -> Result<(), String> {
    let addr = config.socket_addr().map_err(|e| format!("bad listen address: {e}"))?;
    let store = open(config)?;
    let service = Service::new(store, config.hash, &config.default_locale);
    let runtime = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(|e| format!("cannot listen on {addr}: {e}"))?;
        eprintln!("modcanvas listening on http://{addr}");
        axum::serve(listener, api::router(service))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(|e| e.to_string())
    })
}
