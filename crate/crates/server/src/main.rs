// SPDX-License-Identifier: Apache-2.0

use std::fs::File;
use std::io::{self, BufReader, IsTerminal};
use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use tracing_subscriber::EnvFilter;

use arbohub_core::datastore::{DatasetKind, IngestOptions, PageLimits, TruthColumn};
use arbohub_core::domain::{DEFAULT_ALLOWED_HOSTS, DEFAULT_MAX_PREDICTION_ROWS};
use arbohub_core::{Disease, ValidationPolicy};
use arbohub_server::{Hub, Settings};

#[derive(Parser)]
#[command(name = "arbohub-server", version, about = "Arbovirus forecast hub service and admin tools")]
struct Cli {
    #[command(flatten)]
    store: StoreArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct StoreArgs {
    /// Directory holding the persisted tables.
    #[arg(long, env = "ARBOHUB_DATA_DIR", default_value = "arbohub-data", global = true)]
    data_dir: PathBuf,
    /// Largest page a listing may request.
    #[arg(long, env = "ARBOHUB_MAX_PER_PAGE", default_value_t = 300, global = true)]
    max_per_page: u32,
}

#[derive(Subcommand)]
enum Command {
    /// Run the HTTP service.
    Serve {
        #[arg(long, env = "ARBOHUB_BIND_ADDR", default_value = "127.0.0.1:8080")]
        bind: SocketAddr,
        /// Case count used as ground truth when scoring.
        #[arg(long, env = "ARBOHUB_TRUTH_COLUMN", default_value = "casos")]
        truth: TruthColumn,
        /// Hosts a model repository URL may point to (comma-separated).
        #[arg(long, env = "ARBOHUB_ALLOWED_HOSTS", value_delimiter = ',', default_values_t = DEFAULT_ALLOWED_HOSTS.map(String::from))]
        allowed_hosts: Vec<String>,
        /// Largest accepted prediction, in rows.
        #[arg(long, env = "ARBOHUB_MAX_PREDICTION_ROWS", default_value_t = DEFAULT_MAX_PREDICTION_ROWS)]
        max_prediction_rows: usize,
        /// Warn when weekly rows are not 7 days apart.
        #[arg(long, env = "ARBOHUB_STRICT_WEEKLY_SPACING")]
        strict_weekly_spacing: bool,
    },
    /// Create an account and print its API key (shown only once).
    IssueKey {
        #[arg(long)]
        name: String,
    },
    /// Add another key to an existing account.
    AddKey {
        #[arg(long)]
        account: u64,
    },
    /// Deactivate a key by its id (the part of the token before the dot).
    RevokeKey {
        #[arg(long)]
        key_id: String,
    },
    /// Load a dataset CSV file and print the ingest report as JSON.
    Ingest {
        #[arg(long)]
        kind: String,
        /// Disease for infodengue files without a disease column.
        #[arg(long)]
        disease: Option<Disease>,
        file: PathBuf,
    },
}

fn open_hub(store: &StoreArgs, mut settings: Settings) -> Result<Hub, String> {
    settings.limits = PageLimits {
        max_per_page: store.max_per_page.max(1),
        default_per_page: settings.limits.default_per_page.min(store.max_per_page.max(1)),
    };
    Hub::open(&store.data_dir, settings).map_err(|e| format!("cannot open {}: {e}", store.data_dir.display()))
}

fn run(cli: Cli) -> Result<(), String> {
    match cli.command {
        Command::Serve {
            bind,
            truth,
            allowed_hosts,
            max_prediction_rows,
            strict_weekly_spacing,
        } => {
            let settings = Settings {
                policy: ValidationPolicy {
                    allowed_repository_hosts: allowed_hosts,
                    max_prediction_rows,
                    strict_weekly_spacing,
                },
                truth,
                ..Settings::default()
            };
            let hub = Arc::new(open_hub(&cli.store, settings)?);
            let runtime = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
            runtime.block_on(async {
                let listener = tokio::net::TcpListener::bind(bind)
                    .await
                    .map_err(|e| format!("cannot bind {bind}: {e}"))?;
                tracing::info!(addr = %bind, data_dir = %cli.store.data_dir.display(), "listening");
                arbohub_server::serve(listener, hub).await.map_err(|e| e.to_string())
            })
        }
        Command::IssueKey { name } => {
            let name = name.trim();
            if name.is_empty() {
                return Err("--name must not be empty".into());
            }
            let hub = open_hub(&cli.store, Settings::default())?;
            let (account, key) = hub.registry.issue_key(name).map_err(|e| e.to_string())?;
            eprintln!("account {} ({}) created; store this key, it is not shown again", account.id, account.name);
            println!("{}", key.token);
            Ok(())
        }
        Command::AddKey { account } => {
            let hub = open_hub(&cli.store, Settings::default())?;
            if hub.registry.account(account).is_none() {
                return Err(format!("no account {account}"));
            }
            let key = hub.registry.add_key(account).map_err(|e| e.to_string())?;
            println!("{}", key.token);
            Ok(())
        }
        Command::RevokeKey { key_id } => {
            let hub = open_hub(&cli.store, Settings::default())?;
            match hub.registry.revoke_key(&key_id).map_err(|e| e.to_string())? {
                true => {
                    eprintln!("key {key_id} revoked");
                    Ok(())
                }
                false => Err(format!("no key {key_id}")),
            }
        }
        Command::Ingest { kind, disease, file } => {
            let kind: DatasetKind = kind.parse().map_err(|e: arbohub_core::datastore::IngestError| e.to_string())?;
            let hub = open_hub(&cli.store, Settings::default())?;
            let f = File::open(&file).map_err(|e| format!("cannot read {}: {e}", file.display()))?;
            let report = hub
                .datastore
                .ingest(kind, BufReader::new(f), &IngestOptions { disease })
                .map_err(|e| format!("{}: {e}", file.display()))?;
            serde_json::to_writer_pretty(io::stdout().lock(), &report).map_err(|e| e.to_string())?;
            println!();
            eprintln!(
                "{}: read {}, inserted {}, updated {}, rejected {}",
                file.display(),
                report.read,
                report.inserted,
                report.updated,
                report.rejected
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_env("ARBOHUB_LOG").unwrap_or_else(|_| EnvFilter::new("info")))
        .with_writer(io::stderr)
        .with_ansi(io::stderr().is_terminal())
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
