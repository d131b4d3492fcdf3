use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use pulsedoa::experiment::{self, ExperimentConfig};
use pulsedoa::pulsebank::{band_table, PulseSpec, BAND_TABLE_CENTERS_GHZ};
use pulsedoa::{Error, Result};

#[derive(Parser)]
#[command(name = "pulsedoa", version, about = "Impulse-radio DOA and center-frequency simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Half-power bands and durations of the standard pulse table.
    Table1 {
        /// Output CSV; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = experiment::DEFAULT_POWER_W)]
        power_w: f64,
    },
    /// Monte Carlo sweep over every configured cell.
    Sweep {
        /// TOML experiment description.
        #[arg(long, conflicts_with = "manifest", required_unless_present = "manifest")]
        config: Option<PathBuf>,
        /// Replay the configuration recorded in a previous manifest.json.
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Kind::Doa)]
        kind: Kind,
        /// Overrides `base_seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides `runs`.
        #[arg(long)]
        runs: Option<usize>,
        /// Absorption CSV used when the config names none.
        #[arg(long, env = "PULSEDOA_ABSORPTION")]
        absorption: Option<PathBuf>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Time-domain waveform over one pulse duration.
    Pulse {
        #[arg(long)]
        order: u32,
        #[arg(long)]
        center_hz: f64,
        #[arg(long, default_value_t = experiment::DEFAULT_POWER_W)]
        power_w: f64,
        #[arg(long, default_value_t = 1001)]
        samples: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Kind {
    Doa,
    Freq,
    Confusion,
}

#[derive(Debug, Serialize, Deserialize)]
struct RunManifest {
    config_path: Option<PathBuf>,
    config: ExperimentConfig,
    kind: Kind,
    version: String,
    base_seed: u64,
    outputs: Vec<PathBuf>,
    duration_s: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Table1 { out, power_w } => cmd_table1(out.as_deref(), power_w),
        Command::Sweep { config, manifest, kind, seed, runs, absorption, out } => {
            cmd_sweep(config.as_deref(), manifest.as_deref(), kind, seed, runs, absorption, &out)
        }
        Command::Pulse { order, center_hz, power_w, samples, out } => {
            cmd_pulse(order, center_hz, power_w, samples, out.as_deref())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

/// Writes through a temporary file in the target directory so a failure
/// never leaves a partial file behind.
fn write_atomic(path: &Path, fill: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(path, e))?;
    {
        let mut w = std::io::BufWriter::new(tmp.as_file_mut());
        fill(&mut w).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))?;
    }
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

fn emit(out: Option<&Path>, fill: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
    match out {
        Some(p) => write_atomic(p, fill),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            fill(&mut lock).map_err(|e| Error::io("<stdout>", e))
        }
    }
}

fn cmd_table1(out: Option<&Path>, power_w: f64) -> Result<()> {
    let rows = band_table(power_w)?;
    emit(out, |w| {
        writeln!(w, "order,center_ghz,f_low_ghz,f_high_ghz,bandwidth_ghz,duration_ps")?;
        for (r, (_, ghz)) in rows.iter().zip(BAND_TABLE_CENTERS_GHZ) {
            writeln!(
                w,
                "{},{:?},{:?},{:?},{:?},{:?}",
                r.order,
                ghz,
                r.band.f_low * 1e-9,
                r.band.f_high * 1e-9,
                r.band.bandwidth * 1e-9,
                r.duration_s * 1e12
            )?;
        }
        Ok(())
    })
}

fn cmd_pulse(order: u32, center_hz: f64, power_w: f64, samples: usize, out: Option<&Path>) -> Result<()> {
    if samples < 2 {
        return Err(Error::Config("samples must be at least 2".into()));
    }
    let spec = PulseSpec::from_center(order, center_hz, power_w)?;
    let wave = spec.sample_waveform(samples);
    emit(out, |w| {
        writeln!(w, "t_seconds,amplitude")?;
        for (t, a) in &wave {
            writeln!(w, "{t:?},{a:?}")?;
        }
        Ok(())
    })
}

fn cmd_sweep(
    config: Option<&Path>,
    manifest: Option<&Path>,
    kind: Kind,
    seed: Option<u64>,
    runs: Option<usize>,
    absorption: Option<PathBuf>,
    out: &Path,
) -> Result<()> {
    let started = Instant::now();
    let mut cfg = match (config, manifest) {
        (Some(p), _) => ExperimentConfig::from_path(p)?,
        (None, Some(m)) => {
            let text = std::fs::read_to_string(m).map_err(|e| Error::io(m, e))?;
            let rec: RunManifest = serde_json::from_str(&text).map_err(|e| Error::Parse {
                path: m.to_path_buf(),
                line: e.line(),
                msg: e.to_string(),
            })?;
            rec.config
        }
        (None, None) => return Err(Error::Config("either --config or --manifest is required".into())),
    };
    if let Some(s) = seed {
        cfg.base_seed = s;
    }
    if let Some(r) = runs {
        cfg.runs = r;
    }
    if cfg.absorption.is_none() {
        cfg.absorption = absorption;
    }
    cfg.validate()?;
    for w in cfg.window_warnings()? {
        eprintln!("warning: {w}");
    }
    let table = cfg.load_absorption()?;

    let result = experiment::sweep(&cfg, &table)?;

    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let results_path = out.join("results.csv");
    write_atomic(&results_path, |w| experiment::write_results_csv(&result.reports, w))?;
    let mut outputs = vec![results_path];
    if kind == Kind::Confusion {
        let p = out.join("confusion.csv");
        write_atomic(&p, |w| experiment::write_confusion_csv(&result.confusion, w))?;
        outputs.push(p);
    }
    let manifest_path = out.join("manifest.json");
    outputs.push(manifest_path.clone());
    let record = RunManifest {
        config_path: config.map(Path::to_path_buf),
        base_seed: cfg.base_seed,
        config: cfg,
        kind,
        version: env!("CARGO_PKG_VERSION").to_string(),
        outputs,
        duration_s: started.elapsed().as_secs_f64(),
    };
    write_atomic(&manifest_path, |w| {
        serde_json::to_writer_pretty(&mut *w, &record).map_err(std::io::Error::other)?;
        writeln!(w)
    })
}
