//! The `run` subcommand.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use octsca_core::measure::CsvSink;
use octsca_core::snapshot::{decode, encode_with_metadata};
use octsca_core::{
    growth_exponent_fit, log_growth_fit, log_schedule, run, AnyField, Engine, MeasurementRecord,
    RefSimulation, RngStreamSet, RunError, ScalarField, Simulation, SlopeField, Snapshot, Word,
};
use serde_json::{json, Value};

use crate::config::{EngineChoice, FileConfig, RunArgs, RunConfig};
use crate::error::{io_at, CliError};

pub const CSV_NAME: &str = "measurements.csv";
pub const SNAPSHOT_NAME: &str = "final.snap";
pub const DIAGNOSTIC_NAME: &str = "diagnostic.snap";
pub const METADATA_NAME: &str = "metadata.json";

/// What a finished run leaves behind.
#[derive(Debug)]
pub struct RunOutcome {
    pub config: RunConfig,
    pub records: Vec<MeasurementRecord>,
    pub csv: PathBuf,
    pub snapshot: PathBuf,
    pub metadata: PathBuf,
}

pub fn load_snapshot(path: &Path) -> Result<Snapshot, CliError> {
    let bytes = fs::read(path).map_err(io_at(path))?;
    decode(&bytes).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

/// Resolves the configuration, consulting the resumed snapshot's metadata.
pub fn resolve(args: &RunArgs) -> Result<(RunConfig, Option<Snapshot>), CliError> {
    let file = args.config.as_deref().map(FileConfig::load).transpose()?;
    let snapshot = args.resume.as_deref().map(load_snapshot).transpose()?;
    let base = match snapshot.as_ref().and_then(|s| s.metadata.as_deref()) {
        Some(text) => Some(
            FileConfig::from_toml(text)
                .map_err(|e| CliError::config(format!("snapshot metadata: {e}")))?,
        ),
        None => None,
    };
    let mut config = RunConfig::resolve(args, file, base)?;
    if let Some(snap) = &snapshot {
        let c = snap.field.config();
        if (c.x(), c.y(), c.w()) != (config.x, config.y, config.w) {
            return Err(CliError::config(format!(
                "snapshot lattice is {}x{} with w = {}, but the configuration asks for {}x{} with w = {}",
                c.x(),
                c.y(),
                c.w(),
                config.x,
                config.y,
                config.w
            )));
        }
        if let Some(streams) = &snap.streams {
            if args.seed.is_some() && args.seed != Some(streams.master_seed()) {
                return Err(CliError::config(format!(
                    "--seed {} conflicts with the snapshot's stream seed {}",
                    config.seed,
                    streams.master_seed()
                )));
            }
            config.seed = streams.master_seed();
        }
        if snap.field.t_mcs() >= config.tmax {
            return Err(CliError::config(format!(
                "snapshot is already at t = {}; pass --tmax beyond it",
                snap.field.t_mcs()
            )));
        }
    }
    Ok((config, snapshot))
}

pub fn run_command(args: &RunArgs) -> Result<RunOutcome, CliError> {
    let (config, snapshot) = resolve(args)?;
    run_session(config, snapshot)
}

pub fn run_session(config: RunConfig, snapshot: Option<Snapshot>) -> Result<RunOutcome, CliError> {
    let lattice = config.lattice()?;
    match snapshot {
        None if config.w == 32 => execute(config, SlopeField::<u32>::new_flat(lattice)?, None),
        None => execute(config, SlopeField::<u64>::new_flat(lattice)?, None),
        Some(Snapshot { field: AnyField::W32(f), streams, .. }) => execute(config, f, streams),
        Some(Snapshot { field: AnyField::W64(f), streams, .. }) => execute(config, f, streams),
    }
}

enum Runner<W: Word> {
    Vec(Simulation<W>),
    Ref(RefSimulation<W>),
}

impl<W: Word> Runner<W> {
    fn engine(&mut self) -> &mut dyn Engine {
        match self {
            Runner::Vec(s) => s,
            Runner::Ref(s) => s,
        }
    }

    fn state(&self) -> (SlopeField<W>, RngStreamSet) {
        match self {
            Runner::Vec(s) => (s.field().clone(), s.streams().clone()),
            Runner::Ref(s) => (
                s.field().to_slope_field::<W>().expect("dimensions were validated"),
                s.streams().clone(),
            ),
        }
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(io_at(path))
}

fn execute<W: Word>(
    config: RunConfig,
    field: SlopeField<W>,
    streams: Option<RngStreamSet>,
) -> Result<RunOutcome, CliError> {
    let params = config.params()?;
    let t_start = field.t_mcs();
    let streams = match streams {
        Some(s) => s,
        None => RngStreamSet::derive(config.seed, config.y).map_err(|e| CliError::config(e.to_string()))?,
    };
    let mut runner = match config.engine {
        EngineChoice::Vec => Runner::Vec(Simulation::from_parts(field, params.clone(), config.workers, streams)?),
        EngineChoice::Ref => Runner::Ref(RefSimulation::from_parts(
            ScalarField::from_slope_field(&field),
            params.clone(),
            streams,
        )?),
    };

    let schedule: Vec<u64> = if config.resume.is_none() && t_start == 0 {
        std::iter::once(0).chain(log_schedule(config.tmax, config.ppd)).collect()
    } else {
        log_schedule(config.tmax, config.ppd).into_iter().filter(|&t| t > t_start).collect()
    };

    fs::create_dir_all(&config.out).map_err(io_at(&config.out))?;
    let csv_path = config.out.join(CSV_NAME);
    let mut comments = config.csv_comments();
    if t_start > 0 {
        comments.push(format!("resumed_from_t={t_start}"));
    }
    let file = File::create(&csv_path).map_err(io_at(&csv_path))?;
    let mut sink = CsvSink::new(BufWriter::new(file), &comments).map_err(io_at(&csv_path))?;
    let config_text = config.to_toml();

    let result = run(runner.engine(), &schedule, &mut sink);
    sink.into_inner().map_err(io_at(&csv_path))?;
    let records = match result {
        Ok(r) => r,
        Err(e @ RunError::Invariant { .. }) => {
            let (f, s) = runner.state();
            let diag = config.out.join(DIAGNOSTIC_NAME);
            write_file(&diag, &encode_with_metadata(&f, Some(&s), Some(&config_text)))?;
            return Err(CliError::Invariant(format!("{e}; state written to {}", diag.display())));
        }
        Err(e) => return Err(e.into()),
    };

    let (final_field, final_streams) = runner.state();
    let snap_path = config.out.join(SNAPSHOT_NAME);
    write_file(&snap_path, &encode_with_metadata(&final_field, Some(&final_streams), Some(&config_text)))?;

    let fit = config.fit.map(|window| fit_json(&records, window));
    let metadata = json!({
        "octsca_version": env!("CARGO_PKG_VERSION"),
        "seed": config.seed,
        "config": config,
        "config_toml": config_text,
        "resolved_modes": {
            "p": params.p().mode(),
            "q": params.q().mode(),
            "draws_per_word": params.draws_per_word::<W>(),
        },
        "rng": octsca_core::RngStreamSet::DESCRIPTION,
        "bit_convention": "bit 1 is slope +1",
        "t_start": t_start,
        "t_end": final_field.t_mcs(),
        "records": records.len(),
        "fit": fit,
    });
    let meta_path = config.out.join(METADATA_NAME);
    let text = serde_json::to_string_pretty(&metadata).expect("metadata serializes");
    write_file(&meta_path, text.as_bytes())?;

    Ok(RunOutcome { config, records, csv: csv_path, snapshot: snap_path, metadata: meta_path })
}

/// Growth-exponent and logarithmic fits as a JSON object; fit failures are
/// recorded rather than aborting the run.
pub fn fit_json(records: &[MeasurementRecord], window: (u64, u64)) -> Value {
    let power = growth_exponent_fit(records, window);
    let log = log_growth_fit(records, window);
    json!({
        "window": [window.0, window.1],
        "power_law": match power {
            Ok(f) => json!({ "beta": f.beta, "stderr": f.stderr, "r2": f.r2, "points": f.points, "window": [f.window.0, f.window.1] }),
            Err(e) => json!({ "error": e.to_string() }),
        },
        "log_growth": match log {
            Ok(f) => json!({ "slope": f.slope, "intercept": f.intercept, "r2": f.r2, "points": f.points }),
            Err(e) => json!({ "error": e.to_string() }),
        },
    })
}
