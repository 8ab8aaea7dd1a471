// SPDX-License-Identifier: Apache-2.0

use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{Map, Value};

use arbohub::commands::{self, Destination};
use arbohub::config::{file_layer, ConfigLayer};
use arbohub::output::Format;
use arbohub::rows::{read_rows, upload_document};
use arbohub::score::{score_offline, OfflineOptions};
use arbohub::{CliError, HubClient};
use arbohub_core::datastore::{DatasetKind, TruthColumn};
use arbohub_core::domain::calendar::parse_wire_date;
use arbohub_core::{AdmLevel, Disease, Metric};

#[derive(Parser)]
#[command(name = "arbohub", version, about = "Client for the arbovirus forecast hub")]
struct Cli {
    #[command(flatten)]
    conn: ConnArgs,
    #[command(subcommand)]
    command: Command,
}

/// Connection settings. Flags win over ARBOHUB_API_URL / ARBOHUB_API_KEY,
/// which win over the config file.
#[derive(Args)]
struct ConnArgs {
    #[arg(long, global = true)]
    api_url: Option<String>,
    #[arg(long, global = true)]
    api_key: Option<String>,
    /// TOML file with api_url, api_key, timeout_secs, retries.
    #[arg(long, global = true, env = "ARBOHUB_CONFIG")]
    config: Option<PathBuf>,
    /// Per-request timeout in seconds.
    #[arg(long, global = true)]
    timeout: Option<u64>,
    /// Extra attempts after a network failure.
    #[arg(long, global = true)]
    retries: Option<u32>,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricChoice {
    All,
    Crps,
    LogScore,
    Mae,
    Mse,
}

#[derive(Subcommand)]
enum Command {
    /// Download a dataset, following every page.
    Fetch {
        /// infodengue, climate, episcanner or ovitrap.
        kind: String,
        #[arg(long)]
        disease: Option<String>,
        #[arg(long)]
        geocode: Option<String>,
        #[arg(long)]
        uf: Option<String>,
        /// YYYY-mm-dd, inclusive.
        #[arg(long)]
        start: Option<String>,
        /// YYYY-mm-dd, inclusive.
        #[arg(long)]
        end: Option<String>,
        /// Extra query parameter, passed through as is.
        #[arg(long = "param", value_name = "NAME=VALUE", value_parser = parse_pair)]
        params: Vec<(String, String)>,
        #[arg(long)]
        per_page: Option<u32>,
        /// Output file; .json writes a JSON array, anything else CSV.
        #[arg(long, short)]
        out: Option<PathBuf>,
        /// Format when writing to stdout.
        #[arg(long, value_enum, default_value = "csv")]
        format: OutFormat,
    },
    /// Register a model and print its id.
    RegisterModel {
        /// JSON file with the model metadata; flags override its fields.
        #[arg(long)]
        file: Option<PathBuf>,
        #[arg(long)]
        name: Option<String>,
        #[arg(long)]
        description: Option<String>,
        #[arg(long)]
        repository: Option<String>,
        #[arg(long = "language")]
        implementation_language: Option<String>,
        #[arg(long)]
        disease: Option<String>,
        #[arg(long)]
        adm_level: Option<u8>,
        #[arg(long)]
        time_resolution: Option<String>,
        #[arg(long)]
        temporal: Option<bool>,
        #[arg(long)]
        spatial: Option<bool>,
        #[arg(long)]
        categorical: Option<bool>,
        #[arg(long)]
        sprint: Option<bool>,
    },
    /// Validate and upload a prediction, then print its id.
    UploadPrediction {
        #[arg(long)]
        model: u64,
        /// 40-character git commit of the code that produced the rows.
        #[arg(long)]
        commit: String,
        /// YYYY-mm-dd.
        #[arg(long)]
        predict_date: String,
        /// Rows as a JSON array or CSV with date,pred,lower,upper,adm_* headers.
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        description: Option<String>,
    },
    /// Score prediction rows against an observed infodengue CSV, offline.
    Score {
        /// Rows file (JSON or CSV), or a prediction downloaded from the hub.
        #[arg(long)]
        prediction: PathBuf,
        /// Infodengue CSV with the observed cases.
        #[arg(long)]
        observed: PathBuf,
        #[arg(long, value_enum, default_value = "all")]
        metric: MetricChoice,
        #[arg(long)]
        disease: Option<Disease>,
        /// ADM level of the rows; inferred from the filled adm_* columns when absent.
        #[arg(long)]
        adm_level: Option<u8>,
        #[arg(long, value_parser = parse_date)]
        start: Option<chrono::NaiveDate>,
        #[arg(long, value_parser = parse_date)]
        end: Option<chrono::NaiveDate>,
        #[arg(long, default_value = "casos")]
        truth: TruthColumn,
    },
}

fn parse_pair(s: &str) -> Result<(String, String), String> {
    s.split_once('=')
        .map(|(k, v)| (k.trim().to_string(), v.to_string()))
        .filter(|(k, _)| !k.is_empty())
        .ok_or_else(|| format!("expected NAME=VALUE, got {s:?}"))
}

fn parse_date(s: &str) -> Result<chrono::NaiveDate, String> {
    parse_wire_date(s).map_err(|e| e.to_string())
}

fn client(conn: &ConnArgs) -> Result<HubClient, CliError> {
    let flags = ConfigLayer {
        api_url: conn.api_url.clone(),
        api_key: conn.api_key.clone(),
        timeout_secs: conn.timeout,
        retries: conn.retries,
    };
    let env = ConfigLayer::from_env(|k| std::env::var(k).ok());
    let config = flags.over(env.over(file_layer(conn.config.as_deref())?)).resolve()?;
    HubClient::new(config)
}

fn print_json(v: &impl serde::Serialize) -> Result<(), CliError> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, v).map_err(|e| CliError::Invalid(e.to_string()))?;
    writeln!(out).map_err(|e| CliError::Invalid(e.to_string()))
}

async fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Fetch {
            kind,
            disease,
            geocode,
            uf,
            start,
            end,
            params,
            per_page,
            out,
            format,
        } => {
            let kind: DatasetKind = kind.parse().map_err(|e: arbohub_core::datastore::IngestError| {
                CliError::Invalid(e.to_string())
            })?;
            let mut filters: Vec<(String, String)> = [
                ("disease", disease),
                ("geocode", geocode),
                ("uf", uf),
                ("start", start),
                ("end", end),
            ]
            .into_iter()
            .filter_map(|(k, v)| v.map(|v| (k.to_string(), v)))
            .collect();
            filters.extend(params);
            let hub = client(&cli.conn)?;
            let dest = match &out {
                Some(p) => Destination::File(p),
                None => Destination::Stdout(match format {
                    OutFormat::Csv => Format::Csv,
                    OutFormat::Json => Format::Json,
                }),
            };
            let n = commands::fetch(&hub, kind, &filters, per_page, dest).await?;
            match &out {
                Some(p) => eprintln!("{n} {kind} rows written to {}", p.display()),
                None => eprintln!("{n} {kind} rows"),
            }
            Ok(())
        }
        Command::RegisterModel {
            file,
            name,
            description,
            repository,
            implementation_language,
            disease,
            adm_level,
            time_resolution,
            temporal,
            spatial,
            categorical,
            sprint,
        } => {
            let mut flags = Map::new();
            let mut set = |k: &str, v: Option<Value>| {
                if let Some(v) = v {
                    flags.insert(k.to_string(), v);
                }
            };
            set("name", name.map(Value::from));
            set("description", description.map(Value::from));
            set("repository", repository.map(Value::from));
            set("implementation_language", implementation_language.map(Value::from));
            set("disease", disease.map(Value::from));
            set("adm_level", adm_level.map(Value::from));
            set("time_resolution", time_resolution.map(Value::from));
            set("temporal", temporal.map(Value::from));
            set("spatial", spatial.map(Value::from));
            set("categorical", categorical.map(Value::from));
            set("sprint", sprint.map(Value::from));
            let doc = commands::model_document(file.as_deref(), flags)?;
            let hub = client(&cli.conn)?;
            let model = commands::register_model(&hub, &doc).await?;
            println!("{}", model.id);
            Ok(())
        }
        Command::UploadPrediction {
            model,
            commit,
            predict_date,
            data,
            description,
        } => {
            let rows = read_rows(&data)?;
            let doc = upload_document(model, &commit, &predict_date, description.as_deref(), rows.rows);
            let hub = client(&cli.conn)?;
            let created = commands::upload_prediction(&hub, &doc).await?;
            for w in &created.warnings {
                eprintln!("warning: {w}");
            }
            println!("{}", created.id);
            Ok(())
        }
        Command::Score {
            prediction,
            observed,
            metric,
            disease,
            adm_level,
            start,
            end,
            truth,
        } => {
            let level = adm_level
                .map(|n| {
                    AdmLevel::from_number(n.into())
                        .ok_or_else(|| CliError::Invalid(format!("--adm-level must be 0..3, got {n}")))
                })
                .transpose()?;
            let metric = match metric {
                MetricChoice::All => None,
                MetricChoice::Crps => Some(Metric::Crps),
                MetricChoice::LogScore => Some(Metric::LogScore),
                MetricChoice::Mae => Some(Metric::Mae),
                MetricChoice::Mse => Some(Metric::Mse),
            };
            let rows = read_rows(&prediction)?;
            let file = File::open(&observed)
                .map_err(|e| CliError::Invalid(format!("cannot read {}: {e}", observed.display())))?;
            let opts = OfflineOptions {
                disease,
                level,
                metric,
                start,
                end,
                truth,
            };
            let scored = score_offline(&rows, BufReader::new(file), &opts)?;
            if scored.ingest.rejected > 0 {
                eprintln!(
                    "warning: {} of {} observed rows rejected",
                    scored.ingest.rejected, scored.ingest.read
                );
            }
            print_json(&scored.report)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let runtime = match tokio::runtime::Builder::new_current_thread().enable_all().build() {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    };
    match runtime.block_on(run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprint!("{}", e.render());
            e.exit()
        }
    }
}
