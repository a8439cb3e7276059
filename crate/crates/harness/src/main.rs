use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use adjustsat::analyze::{analyze, ld_maxima, AnalyzeError, AnalyzeOptions};
use adjustsat::manifest::{Manifest, Overrides};
use adjustsat::measure::measure;
use adjustsat::prepare::{prepare, ItemStatus};
use adjustsat::serve::{serve, ServeConfig};
use adjustsat::simulate::simulate_ds;
use adjustsat_core::stimulus::{LdGrid, DEFAULT_TARGET_LUFS, WDR_GRID};
use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "adjustsat", version, about = "Dialogue-level listening test toolkit")]
struct Cli {
    /// Experiment manifest (JSON).
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    /// Output directory; replaces the manifest's `output_dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Loudness target for items that do not set one.
    #[arg(long, global = true, allow_hyphen_values = true)]
    target_lufs: Option<f64>,
    /// Leakage of the separation model, in dB (<= 0, or -inf for none).
    #[arg(long, global = true, allow_hyphen_values = true)]
    leakage_db: Option<f64>,
    /// Address the session service listens on.
    #[arg(long, global = true, default_value = "127.0.0.1:8750")]
    bind: String,
    /// Results directory.
    #[arg(long, global = true, env = "ADJUSTSAT_RESULTS_DIR")]
    results: Option<PathBuf>,
    /// Debug logging.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render and cache every item's versions.
    Prepare,
    /// Print the integrated loudness of a WAV file.
    Measure { wav: PathBuf },
    /// Run the session service.
    Serve {
        /// Seconds a disconnected participant has to reconnect.
        #[arg(long, default_value_t = 60.0)]
        grace_secs: f64,
        /// Static files of the participant UI.
        #[arg(long)]
        ui_dir: Option<PathBuf>,
    },
    /// Write plot documents and a summary for the collected results.
    Analyze {
        /// Also write SVG renderings.
        #[arg(long)]
        svg: bool,
    },
    /// Apply the leakage model to a stem pair.
    SimulateDs {
        #[arg(long)]
        fg: PathBuf,
        #[arg(long)]
        bg: PathBuf,
        #[arg(long, default_value = WDR_GRID, allow_hyphen_values = true)]
        grid: String,
    },
}

impl Cli {
    fn overrides(&self) -> Overrides {
        Overrides {
            target_lufs: self.target_lufs,
            leakage_db: self.leakage_db,
        }
    }

    fn manifest(&self) -> Result<Manifest> {
        let path = self.manifest.as_ref().context("--manifest is required for this command")?;
        let mut m = Manifest::load(path)?;
        if let Some(out) = &self.out {
            m.output_dir = std::path::absolute(out)?;
        }
        Ok(m)
    }

    fn results_dir(&self, manifest: Option<&Manifest>) -> Result<PathBuf> {
        match (&self.results, manifest) {
            (Some(r), _) => Ok(r.clone()),
            (None, Some(m)) => Ok(m.results_dir()),
            (None, None) => bail!("give --results, ADJUSTSAT_RESULTS_DIR or --manifest"),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_max_level(if cli.verbose { tracing::Level::DEBUG } else { tracing::Level::INFO })
        .init();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: &Cli) -> Result<ExitCode> {
    match &cli.command {
        Command::Prepare => {
            let m = cli.manifest()?;
            let report = prepare(&m, cli.overrides());
            for item in &report.items {
                let status = match item.status {
                    ItemStatus::Rendered => "rendered",
                    ItemStatus::UpToDate => "up to date",
                };
                println!(
                    "{}: {status}, {} versions, default LD {:.1} LU, loudness band {:.2} LU",
                    item.id, item.versions, item.default_ld, item.loudness_band
                );
            }
            for (id, err) in &report.failures {
                eprintln!("item {id}: {err}");
            }
            println!(
                "{} rendered, {} up to date, {} failed; cache at {}",
                report.rendered(),
                report.items.len() - report.rendered(),
                report.failures.len(),
                m.cache().root().display()
            );
            Ok(if report.is_ok() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::Measure { wav } => {
            print!("{}", measure(wav)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Serve { grace_secs, ui_dir } => {
            let m = cli.manifest()?;
            let cache = m.cache();
            let config = ServeConfig {
                playlist: Arc::new(m.playlist(&cache)?),
                cache,
                results_dir: cli.results_dir(Some(&m))?,
                reconnect_grace: Duration::try_from_secs_f64(*grace_secs).context("--grace-secs")?,
                ui_dir: ui_dir.clone(),
            };
            config.check_cache()?;
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(async {
                let listener = tokio::net::TcpListener::bind(&cli.bind)
                    .await
                    .with_context(|| format!("cannot listen on {}", cli.bind))?;
                tracing::info!(
                    addr = %listener.local_addr()?,
                    results = %config.results_dir.display(),
                    "session service ready"
                );
                serve(listener, config).await?;
                anyhow::Ok(())
            })?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Analyze { svg } => {
            let m = cli.manifest.as_ref().map(|_| cli.manifest()).transpose()?;
            let results = cli.results_dir(m.as_ref())?;
            let out = match (&cli.out, &m) {
                (Some(o), _) => o.clone(),
                (None, Some(m)) => m.output_dir().join("reports"),
                (None, None) => results.join("reports"),
            };
            let opts = AnalyzeOptions {
                svg: *svg,
                maxima: m.as_ref().map(|m| ld_maxima(m, cli.overrides())).unwrap_or_default(),
                max_discard_share: None,
            };
            match analyze(&results, &out, &opts) {
                Ok(report) => {
                    print!("{}", report.summary);
                    for p in &report.written {
                        println!("wrote {}", p.display());
                    }
                    Ok(ExitCode::SUCCESS)
                }
                Err(e @ AnalyzeError::Csv { .. }) => {
                    for line in e.details() {
                        eprintln!("{line}");
                    }
                    Ok(ExitCode::FAILURE)
                }
                Err(e) => Err(e.into()),
            }
        }
        Command::SimulateDs { fg, bg, grid } => {
            let grid: LdGrid = grid.parse()?;
            let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
            let report = simulate_ds(
                fg,
                bg,
                cli.leakage_db.unwrap_or(adjustsat_core::stimulus::DEFAULT_LEAKAGE_DB),
                &grid,
                cli.target_lufs.unwrap_or(DEFAULT_TARGET_LUFS),
                &out,
            )?;
            print!("{report}");
            Ok(ExitCode::SUCCESS)
        }
    }
}
