use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use arofsim_core::planner::sweep_feasibility;
use arofsim_core::topology::{calibrate, coherent_preset, sweep, CalibrationTargets};
use clap::{Args, Parser, Subcommand};

use crate::config::{
    parse_raw, resolve, RawCoherent, RawConfig, RawSweep, ResolvedConfig, ScenarioConfig, COHERENT_PRESETS,
};
use crate::error::CliError;
use crate::report::{
    cell_label, constellation_rows, matrix_rows, plan_rows, psd_rows, CellStatus, ReportWriter, RunManifest,
    CONSTELLATION_COLUMNS, MATRIX_COLUMNS, PLAN_COLUMNS, PSD_COLUMNS, SCHEMA_VERSION,
};

#[derive(Debug, Parser)]
#[command(name = "arofsim", version, about = "ARoF and coherent coexistence simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Feasibility table for placing the ARoF carriers.
    Plan(CommonArgs),
    /// Simulate one scenario.
    Run(CommonArgs),
    /// Simulate every cell of the sweep grid and write the EVM matrix.
    Sweep(CommonArgs),
    /// Fit the receiver noise and transmitter SNR to the reference figures.
    Calibrate(CommonArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Scenario file (TOML). Defaults apply without one.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory; overrides `output_dir`.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Master seed; overrides `seed` and `sweep.seeds`.
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
    /// Worker threads for sweeps.
    #[arg(long, value_name = "N")]
    pub jobs: Option<usize>,
    /// `100G`, `400G` or a scenario name such as `100G-topoB-800MHz`.
    #[arg(long, value_name = "NAME")]
    pub preset: Option<String>,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Plan(_) => "plan",
            Command::Run(_) => "run",
            Command::Sweep(_) => "sweep",
            Command::Calibrate(_) => "calibrate",
        }
    }

    fn args(&self) -> &CommonArgs {
        match self {
            Command::Plan(a) | Command::Run(a) | Command::Sweep(a) | Command::Calibrate(a) => a,
        }
    }
}

/// Read the config file, apply command-line overrides and resolve.
pub fn load(args: &CommonArgs) -> Result<ResolvedConfig, CliError> {
    let mut raw: RawConfig = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            parse_raw(&text)?
        }
        None => RawConfig::default(),
    };
    if let Some(name) = &args.preset {
        if COHERENT_PRESETS.contains(&name.as_str()) {
            raw.coherent.get_or_insert_with(RawCoherent::default).preset = Some(name.clone());
        } else {
            raw.preset = Some(name.clone());
        }
    }
    if let Some(seed) = args.seed {
        raw.seed = Some(seed);
        if let Some(sweep) = raw.sweep.as_mut() {
            sweep.seeds = None;
        } else {
            raw.sweep = Some(RawSweep::default());
        }
    }
    if let Some(out) = &args.out {
        raw.output_dir = Some(out.display().to_string());
    }
    resolve(&raw)
}

struct Session {
    command: &'static str,
    started: Instant,
    started_unix_s: u64,
    writer: ReportWriter,
    config: ScenarioConfig,
    hash: String,
}

impl Session {
    fn open(command: &'static str, config: ScenarioConfig) -> Result<Self, CliError> {
        let hash = config.hash()?;
        let mut writer = ReportWriter::new(Path::new(&config.output_dir), &hash)?;
        writer.write_bytes("config.toml", config.canonical_toml()?.as_bytes())?;
        Ok(Self {
            command,
            started: Instant::now(),
            started_unix_s: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
            writer,
            config,
            hash,
        })
    }

    fn finish(mut self, seeds: Vec<u64>, cells: Vec<CellStatus>) -> Result<PathBuf, CliError> {
        let manifest = RunManifest {
            schema_version: SCHEMA_VERSION,
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: self.command.to_string(),
            config_hash: self.hash.clone(),
            seeds,
            started_unix_s: self.started_unix_s,
            wall_clock_s: self.started.elapsed().as_secs_f64(),
            cells,
            files: self.writer.files().to_vec(),
        };
        self.writer.write_manifest(&manifest)
    }
}

type Outcome = Result<(Vec<u64>, Vec<CellStatus>), CliError>;

fn plan(s: &mut Session) -> Outcome {
    let scenario = s.config.scenario()?;
    let mut bandwidths = s.config.sweep.bandwidths.clone();
    bandwidths.push(s.config.ofdm.bandwidth);
    bandwidths.sort_by(f64::total_cmp);
    bandwidths.dedup();
    let mut rows = Vec::new();
    let mut cells = Vec::new();
    for name in &s.config.sweep.presets {
        let coherent = if *name == s.config.preset { s.config.coherent.clone() } else { coherent_preset(name)? };
        let base = arofsim_core::planner::ChannelPlan {
            channel_width: coherent.channel_width,
            coherent_occupied: coherent.occupied_width,
            ..scenario.channel_plan()
        };
        let table = sweep_feasibility(&base, &bandwidths)?;
        println!(
            "{name}: free {} GHz total ({} GHz per side), widest ARoF signal {:.3} GHz",
            base.free_total() / 1e9,
            base.free_per_side() / 1e9,
            table.max_feasible_bw / 1e9
        );
        cells.push(CellStatus { cell: name.clone(), status: "ok".into() });
        rows.extend(plan_rows(name, &table));
    }
    s.writer.write_csv("plan.csv", &PLAN_COLUMNS, rows)?;
    Ok((vec![s.config.seed], cells))
}

fn run(s: &mut Session) -> Outcome {
    let outcome = s.config.scenario()?.run()?;
    let r = &outcome.result;
    let a = &outcome.artifacts;
    s.writer.write_json("result.json", r)?;
    s.writer.write_csv("psd.csv", &PSD_COLUMNS, psd_rows(&a.composite_psd))?;
    for (port, psd) in &a.port_psds {
        s.writer.write_csv(&format!("psd_{port}.csv"), &PSD_COLUMNS, psd_rows(psd))?;
    }
    s.writer.write_csv("constellation_low.csv", &CONSTELLATION_COLUMNS, constellation_rows(&a.constellation_low))?;
    s.writer.write_csv("constellation_high.csv", &CONSTELLATION_COLUMNS, constellation_rows(&a.constellation_high))?;
    println!(
        "{} topo{} {} MHz: EVM {:.3}% / {:.3}%, Q {:.3} dB",
        r.preset,
        r.topology,
        r.arof_bw_hz / 1e6,
        r.evm_low,
        r.evm_high,
        r.q_report.q_db
    );
    for w in &r.warnings {
        println!("warning: {w}");
    }
    let cell =
        CellStatus { cell: format!("{}-topo{}-{}MHz", r.preset, r.topology, r.arof_bw_hz / 1e6), status: "ok".into() };
    Ok((vec![s.config.seed], vec![cell]))
}

fn run_sweep(s: &mut Session, jobs: Option<usize>) -> Outcome {
    let cells = sweep(&s.config.sweep_spec(), jobs)?;
    s.writer.write_csv("matrix.csv", &MATRIX_COLUMNS, matrix_rows(&cells))?;
    s.writer.write_json("sweep.json", &serde_json::json!({ "cells": cells }))?;
    let status: Vec<CellStatus> = cells
        .iter()
        .map(|c| CellStatus {
            cell: cell_label(c),
            status: match &c.outcome {
                Ok(_) => "ok".into(),
                Err(e) => format!("error: {e}"),
            },
        })
        .collect();
    let failed = status.iter().filter(|c| c.status != "ok").count();
    println!("{} cells, {} failed", cells.len(), failed);
    Ok((s.config.sweep.seeds.clone(), status))
}

fn run_calibrate(s: &mut Session) -> Outcome {
    let targets = CalibrationTargets { seed: s.config.seed, ..CalibrationTargets::default() };
    let fit = calibrate(&s.config.plant, &targets)?;
    s.writer.write_json("calibration.json", &serde_json::json!({ "targets": targets, "result": fit }))?;
    let mut fitted = s.config.clone();
    fitted.plant = fit.plant.clone();
    match fitted.preset.as_str() {
        "100G" => fitted.coherent.tx_snr_db = Some(fit.tx_snr_100g_db),
        "400G" => fitted.coherent.tx_snr_db = Some(fit.tx_snr_400g_db),
        _ => {}
    }
    s.writer.write_bytes("calibrated.toml", fitted.canonical_toml()?.as_bytes())?;
    println!(
        "thermal noise {:.4e} A/rtHz (baseline EVM {:.3}%), tx SNR {:.3} dB (100G Q {:.3} dB), {:.3} dB (400G Q {:.3} dB)",
        fit.thermal_noise_density,
        fit.baseline_evm_pct,
        fit.tx_snr_100g_db,
        fit.q_100g_db,
        fit.tx_snr_400g_db,
        fit.q_400g_db
    );
    Ok((vec![s.config.seed], vec![CellStatus { cell: "calibration".into(), status: "ok".into() }]))
}

/// Failures after the output directory exists still leave a manifest, with
/// the error as the cell status, and an `error.json`.
pub fn execute(cli: Cli) -> Result<(), CliError> {
    let args = cli.command.args().clone();
    let config = load(&args)?.config;
    let mut s = Session::open(cli.command.name(), config)?;
    let outcome = match cli.command {
        Command::Plan(_) => plan(&mut s),
        Command::Run(_) => run(&mut s),
        Command::Sweep(_) => run_sweep(&mut s, args.jobs),
        Command::Calibrate(_) => run_calibrate(&mut s),
    };
    match outcome {
        Ok((seeds, cells)) => {
            let manifest = s.finish(seeds, cells)?;
            println!("wrote {}", manifest.display());
            Ok(())
        }
        Err(e) => {
            s.writer.write_json("error.json", &serde_json::json!({ "error": e.report() }))?;
            let seeds = vec![s.config.seed];
            s.finish(seeds, vec![CellStatus { cell: failed_cell_label(&args), status: format!("error: {e}") }])?;
            Err(e)
        }
    }
}

fn failed_cell_label(args: &CommonArgs) -> String {
    args.preset.clone().unwrap_or_else(|| "scenario".to_string())
}

/// Parse arguments, run, and turn any failure into error JSON on stderr.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let result = match Cli::try_parse_from(args) {
        Ok(cli) => {
            let name = cli.command.name();
            execute(cli).map_err(|e| (Some(name), e))
        }
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => Err((None, CliError::Usage(e.render().to_string().trim().to_string()))),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err((command, e)) => {
            let mut doc = serde_json::json!({ "error": e.report() });
            if let Some(c) = command {
                doc["command"] = c.into();
            }
            eprintln!("{doc}");
            ExitCode::from(e.exit_code())
        }
    }
}
