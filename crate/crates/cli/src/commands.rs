//! The `bench`, `snapshot` and `fit` subcommands.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Subcommand};
use octsca_core::measure::parse_csv;
use octsca_core::snapshot::encode_with_metadata;
use octsca_core::{
    compare_engines, reports_csv, AnyField, BenchCase, HeightMap, LatticeConfig, ModeRequest,
    Probability, SlopeField, Snapshot, UpdateParams, Word,
};

use crate::config::{parse_mode, EngineChoice, FileConfig};
use crate::error::{io_at, CliError};
use crate::session::{fit_json, load_snapshot};

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    /// Comma-separated lattice sides.
    #[arg(long, value_delimiter = ',', default_values_t = [2048usize])]
    pub sizes: Vec<usize>,
    #[arg(long, value_delimiter = ',', value_enum, default_values_t = [EngineChoice::Vec])]
    pub engines: Vec<EngineChoice>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.5f64])]
    pub p: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.0f64])]
    pub q: Vec<f64>,
    #[arg(long, value_parser = parse_mode, default_value = "auto")]
    pub pmode: ModeRequest,
    #[arg(long, value_parser = parse_mode, default_value = "auto")]
    pub qmode: ModeRequest,
    #[arg(long, default_value_t = 64)]
    pub w: u32,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// MCS per repeat, including the discarded warmup.
    #[arg(long, default_value_t = 100)]
    pub mcs: u64,
    #[arg(long, default_value_t = 3)]
    pub repeats: usize,
    /// Directory for bench.csv and bench.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl BenchArgs {
    pub fn cases(&self) -> Result<Vec<BenchCase>, CliError> {
        let mut cases = Vec::new();
        for &engine in &self.engines {
            for &l in &self.sizes {
                LatticeConfig::square(l, self.w)
                    .map_err(|e| CliError::config(format!("--sizes {l}: {e}")))?;
                for &p in &self.p {
                    for &q in &self.q {
                        let params = UpdateParams::new(
                            Probability::new(p, self.pmode).map_err(|e| CliError::config(format!("--p {p}: {e}")))?,
                            Probability::new(q, self.qmode).map_err(|e| CliError::config(format!("--q {q}: {e}")))?,
                        );
                        cases.push(BenchCase {
                            engine: engine.into(),
                            l,
                            w: self.w,
                            params,
                            workers: self.workers,
                            seed: self.seed,
                        });
                    }
                }
            }
        }
        Ok(cases)
    }
}

pub fn bench_command(args: &BenchArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    if args.workers == 0 {
        return Err(CliError::config("--workers must be at least 1"));
    }
    let cases = args.cases()?;
    let reports = compare_engines(&cases, args.mcs, args.repeats)?;
    let csv = reports_csv(&reports);
    stdout.write_all(csv.as_bytes())?;
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir).map_err(io_at(dir))?;
        let path = dir.join("bench.csv");
        fs::write(&path, &csv).map_err(io_at(&path))?;
        let path = dir.join("bench.json");
        let json = serde_json::to_string_pretty(&reports).expect("reports serialize");
        fs::write(&path, json).map_err(io_at(&path))?;
    }
    Ok(())
}

#[derive(Debug, Clone, Subcommand)]
pub enum SnapshotCommand {
    /// Write the height profile of a snapshot as text.
    Export {
        snapshot: PathBuf,
        #[arg(long)]
        heights: PathBuf,
    },
    /// Pack a height profile into a snapshot.
    Import {
        heights: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 64)]
        w: u32,
        /// Take time, phase, RNG streams and run config from this snapshot.
        #[arg(long)]
        streams_from: Option<PathBuf>,
    },
}

pub fn snapshot_command(cmd: &SnapshotCommand) -> Result<(), CliError> {
    match cmd {
        SnapshotCommand::Export { snapshot, heights } => {
            let snap = load_snapshot(snapshot)?;
            let map = match &snap.field {
                AnyField::W32(f) => f.reconstruct_heights(),
                AnyField::W64(f) => f.reconstruct_heights(),
            }
            .map_err(|e| CliError::Invariant(format!("{}: {e}", snapshot.display())))?;
            fs::write(heights, map.to_text()).map_err(io_at(heights))
        }
        SnapshotCommand::Import { heights, out, w, streams_from } => {
            let text = fs::read_to_string(heights).map_err(io_at(heights))?;
            let map = HeightMap::from_text(&text)
                .map_err(|e| CliError::config(format!("{}: {e}", heights.display())))?;
            let source = streams_from.as_deref().map(load_snapshot).transpose()?;
            let config = LatticeConfig::new(map.x(), map.y(), *w)?;
            let bytes = match w {
                32 => import::<u32>(config, &map, source.as_ref())?,
                _ => import::<u64>(config, &map, source.as_ref())?,
            };
            fs::write(out, bytes).map_err(io_at(out))
        }
    }
}

fn import<W: Word>(config: LatticeConfig, map: &HeightMap, source: Option<&Snapshot>) -> Result<Vec<u8>, CliError> {
    let packed = SlopeField::<W>::pack_from_heights(config, map)?;
    let Some(src) = source else {
        return Ok(encode_with_metadata(&packed, None, None));
    };
    let c = src.field.config();
    if (c.x(), c.y()) != (config.x(), config.y()) {
        return Err(CliError::config(format!(
            "height profile is {}x{} but the stream source is {}x{}",
            config.x(),
            config.y(),
            c.x(),
            c.y()
        )));
    }
    let (t, phase) = match &src.field {
        AnyField::W32(f) => (f.t_mcs(), f.phase()),
        AnyField::W64(f) => (f.t_mcs(), f.phase()),
    };
    let [a, b, c, d] = packed.planes().clone();
    let field = SlopeField::from_planes(config, [a, b, c, d], t, phase)?;
    let metadata = src.metadata.as_deref().map(|m| retag_word(m, config.w())).transpose()?;
    Ok(encode_with_metadata(&field, src.streams.as_ref(), metadata.as_deref()))
}

/// Points a stored run config at the imported word size.
fn retag_word(metadata: &str, w: u32) -> Result<String, CliError> {
    let mut file = FileConfig::from_toml(metadata)
        .map_err(|e| CliError::config(format!("snapshot metadata: {e}")))?;
    file.w = Some(w);
    Ok(toml::to_string(&file).expect("config serializes"))
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    /// Measurement CSV written by `run`.
    #[arg(long)]
    pub csv: PathBuf,
    #[arg(long)]
    pub tmin: u64,
    #[arg(long)]
    pub tmax: u64,
    /// Print the fit as JSON.
    #[arg(long)]
    pub json: bool,
}

pub fn fit_command(args: &FitArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let records = read_records(&args.csv)?;
    let window = (args.tmin, args.tmax);
    if args.json {
        let value = fit_json(&records, window);
        writeln!(stdout, "{}", serde_json::to_string_pretty(&value).expect("fit serializes"))?;
        return Ok(());
    }
    let power = octsca_core::growth_exponent_fit(&records, window)?;
    let log = octsca_core::log_growth_fit(&records, window)?;
    writeln!(
        stdout,
        "beta = {:.4} +- {:.4} (r2 = {:.4}, {} points on [{}, {}])",
        power.beta, power.stderr, power.r2, power.points, power.window.0, power.window.1
    )?;
    writeln!(stdout, "W2 = {:.4} ln t + {:.4} (r2 = {:.4})", log.slope, log.intercept, log.r2)?;
    Ok(())
}

fn read_records(path: &Path) -> Result<Vec<octsca_core::MeasurementRecord>, CliError> {
    let text = fs::read_to_string(path).map_err(io_at(path))?;
    parse_csv(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}
