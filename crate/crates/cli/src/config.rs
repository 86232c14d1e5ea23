//! Run configuration: command-line flags over environment over config file
//! over built-in defaults.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, ValueEnum};
use octsca_core::{EngineKind, LatticeConfig, ModeRequest, Probability, UpdateParams};
use serde::{Deserialize, Serialize};

use crate::error::{io_at, CliError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineChoice {
    #[default]
    Vec,
    Ref,
}

impl EngineChoice {
    pub fn name(self) -> &'static str {
        EngineKind::from(self).label()
    }
}

impl From<EngineChoice> for EngineKind {
    fn from(e: EngineChoice) -> Self {
        match e {
            EngineChoice::Vec => EngineKind::Vec,
            EngineChoice::Ref => EngineKind::Ref,
        }
    }
}

pub fn parse_mode(s: &str) -> Result<ModeRequest, String> {
    ModeRequest::from_str(s).map_err(|e| e.to_string())
}

/// Keys accepted in a config file; every field is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pmode: Option<ModeRequest>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub qmode: Option<ModeRequest>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tmax: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ppd: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub engine: Option<EngineChoice>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_tmin: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_tmax: Option<u64>,
}

impl FileConfig {
    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(io_at(path))?;
        Self::from_toml(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
    }

    /// Fills every unset key from `lower`.
    pub fn or(self, lower: FileConfig) -> FileConfig {
        FileConfig {
            size: self.size.or(lower.size),
            x: self.x.or(lower.x),
            y: self.y.or(lower.y),
            w: self.w.or(lower.w),
            p: self.p.or(lower.p),
            q: self.q.or(lower.q),
            pmode: self.pmode.or(lower.pmode),
            qmode: self.qmode.or(lower.qmode),
            seed: self.seed.or(lower.seed),
            workers: self.workers.or(lower.workers),
            tmax: self.tmax.or(lower.tmax),
            ppd: self.ppd.or(lower.ppd),
            engine: self.engine.or(lower.engine),
            out: self.out.or(lower.out),
            fit_tmin: self.fit_tmin.or(lower.fit_tmin),
            fit_tmax: self.fit_tmax.or(lower.fit_tmax),
        }
    }

    /// Folds `size` into `x` and `y` within this layer.
    fn resolve_size(mut self) -> Result<Self, CliError> {
        if let Some(l) = self.size.take() {
            for (name, v) in [("x", &mut self.x), ("y", &mut self.y)] {
                match *v {
                    Some(d) if d != l => {
                        return Err(CliError::config(format!(
                            "--size {l} conflicts with --{name} {d}; give either a square size or both --x and --y"
                        )))
                    }
                    _ => *v = Some(l),
                }
            }
        }
        Ok(self)
    }
}

/// Flags shared by `run` and mirrored by config file keys.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// TOML file with any of the keys below; flags take precedence.
    #[arg(long, env = "OCTSCA_CONFIG")]
    pub config: Option<PathBuf>,
    /// Square lattice side L (sets both X and Y).
    #[arg(short = 'L', long = "size", env = "OCTSCA_SIZE")]
    pub size: Option<usize>,
    #[arg(long, env = "OCTSCA_X")]
    pub x: Option<usize>,
    #[arg(long, env = "OCTSCA_Y")]
    pub y: Option<usize>,
    /// Word size in bits: 32 or 64.
    #[arg(long, env = "OCTSCA_W")]
    pub w: Option<u32>,
    /// Deposition probability.
    #[arg(long, env = "OCTSCA_P")]
    pub p: Option<f64>,
    /// Removal probability.
    #[arg(long, env = "OCTSCA_Q")]
    pub q: Option<f64>,
    /// auto, zero, half, dyadic or arbitrary.
    #[arg(long, env = "OCTSCA_PMODE", value_parser = parse_mode)]
    pub pmode: Option<ModeRequest>,
    #[arg(long, env = "OCTSCA_QMODE", value_parser = parse_mode)]
    pub qmode: Option<ModeRequest>,
    /// Master seed; drawn from the clock when absent and always recorded.
    #[arg(long, env = "OCTSCA_SEED")]
    pub seed: Option<u64>,
    #[arg(long, env = "OCTSCA_WORKERS")]
    pub workers: Option<usize>,
    /// Last MCS to simulate and measure.
    #[arg(long, env = "OCTSCA_TMAX")]
    pub tmax: Option<u64>,
    /// Measurement points per decade of time.
    #[arg(long, env = "OCTSCA_PPD")]
    pub ppd: Option<u32>,
    #[arg(long, env = "OCTSCA_ENGINE", value_enum)]
    pub engine: Option<EngineChoice>,
    /// Output directory.
    #[arg(long, env = "OCTSCA_OUT")]
    pub out: Option<PathBuf>,
    /// Fit window `TMIN:TMAX` for growth exponents stored in the metadata.
    #[arg(long, env = "OCTSCA_FIT", value_parser = parse_window)]
    pub fit: Option<(u64, u64)>,
    /// Continue from a snapshot written by an earlier run.
    #[arg(long, env = "OCTSCA_RESUME")]
    pub resume: Option<PathBuf>,
}

pub fn parse_window(s: &str) -> Result<(u64, u64), String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("expected TMIN:TMAX, got {s:?}"))?;
    let a: u64 = a.trim().parse().map_err(|_| format!("bad TMIN in {s:?}"))?;
    let b: u64 = b.trim().parse().map_err(|_| format!("bad TMAX in {s:?}"))?;
    if a == 0 || b <= a {
        return Err(format!("fit window {s:?} needs 0 < TMIN < TMAX"));
    }
    Ok((a, b))
}

impl RunArgs {
    fn layer(&self) -> FileConfig {
        FileConfig {
            size: self.size,
            x: self.x,
            y: self.y,
            w: self.w,
            p: self.p,
            q: self.q,
            pmode: self.pmode,
            qmode: self.qmode,
            seed: self.seed,
            workers: self.workers,
            tmax: self.tmax,
            ppd: self.ppd,
            engine: self.engine,
            out: self.out.clone(),
            fit_tmin: self.fit.map(|w| w.0),
            fit_tmax: self.fit.map(|w| w.1),
        }
    }
}

/// Fully resolved, validated configuration of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub x: usize,
    pub y: usize,
    pub w: u32,
    pub p: f64,
    pub q: f64,
    pub pmode: ModeRequest,
    pub qmode: ModeRequest,
    pub seed: u64,
    pub workers: usize,
    pub tmax: u64,
    pub ppd: u32,
    pub engine: EngineChoice,
    pub out: PathBuf,
    pub fit: Option<(u64, u64)>,
    #[serde(skip)]
    pub resume: Option<PathBuf>,
}

pub const DEFAULT_SIZE: usize = 256;
pub const DEFAULT_TMAX: u64 = 1000;
pub const DEFAULT_PPD: u32 = 10;

fn clock_seed() -> u64 {
    let nanos = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_nanos() as u64)
        .unwrap_or(0);
    nanos ^ u64::from(std::process::id()).rotate_left(32)
}

impl RunConfig {
    /// `flags` (with environment already merged by clap) over `file` over
    /// `base` (the metadata of a resumed snapshot) over defaults.
    pub fn resolve(flags: &RunArgs, file: Option<FileConfig>, base: Option<FileConfig>) -> Result<Self, CliError> {
        let mut merged = flags.layer().resolve_size()?;
        if let Some(f) = file {
            merged = merged.or(f.resolve_size()?);
        }
        if let Some(b) = base {
            merged = merged.or(b.resolve_size()?);
        }
        let x = merged.x.unwrap_or(DEFAULT_SIZE);
        let y = merged.y.unwrap_or(x);
        let fit = match (merged.fit_tmin, merged.fit_tmax) {
            (Some(a), Some(b)) if a > 0 && b > a => Some((a, b)),
            (None, None) => None,
            (a, b) => {
                return Err(CliError::config(format!(
                    "fit window needs 0 < fit_tmin < fit_tmax, got {a:?} and {b:?}"
                )))
            }
        };
        let cfg = RunConfig {
            x,
            y,
            w: merged.w.unwrap_or(64),
            p: merged.p.unwrap_or(0.5),
            q: merged.q.unwrap_or(0.0),
            pmode: merged.pmode.unwrap_or_default(),
            qmode: merged.qmode.unwrap_or_default(),
            seed: merged.seed.unwrap_or_else(clock_seed),
            workers: merged.workers.unwrap_or(1),
            tmax: merged.tmax.unwrap_or(DEFAULT_TMAX),
            ppd: merged.ppd.unwrap_or(DEFAULT_PPD),
            engine: merged.engine.unwrap_or_default(),
            out: merged.out.unwrap_or_else(|| PathBuf::from("octsca-out")),
            fit,
            resume: flags.resume.clone(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.lattice()?;
        self.params()?;
        if self.workers == 0 {
            return Err(CliError::config("--workers must be at least 1"));
        }
        if self.tmax == 0 {
            return Err(CliError::config("--tmax must be at least 1"));
        }
        if self.ppd == 0 {
            return Err(CliError::config("--ppd must be at least 1"));
        }
        Ok(())
    }

    pub fn lattice(&self) -> Result<LatticeConfig, CliError> {
        LatticeConfig::new(self.x, self.y, self.w).map_err(|e| {
            CliError::config(format!("{e} (lattice {}x{}, w = {})", self.x, self.y, self.w))
        })
    }

    pub fn params(&self) -> Result<UpdateParams, CliError> {
        let p = Probability::new(self.p, self.pmode).map_err(|e| CliError::config(format!("--p: {e}")))?;
        let q = Probability::new(self.q, self.qmode).map_err(|e| CliError::config(format!("--q: {e}")))?;
        Ok(UpdateParams::new(p, q))
    }

    /// The configuration as a config file, so a run can be reproduced from
    /// its metadata alone.
    pub fn to_file_config(&self) -> FileConfig {
        FileConfig {
            size: None,
            x: Some(self.x),
            y: Some(self.y),
            w: Some(self.w),
            p: Some(self.p),
            q: Some(self.q),
            pmode: Some(self.pmode),
            qmode: Some(self.qmode),
            seed: Some(self.seed),
            workers: Some(self.workers),
            tmax: Some(self.tmax),
            ppd: Some(self.ppd),
            engine: Some(self.engine),
            out: Some(self.out.clone()),
            fit_tmin: self.fit.map(|w| w.0),
            fit_tmax: self.fit.map(|w| w.1),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&self.to_file_config()).expect("config serializes")
    }

    /// Comment lines for the measurement CSV. The worker count and output
    /// path are left out: neither changes the data.
    pub fn csv_comments(&self) -> Vec<String> {
        let params = self.params().expect("validated");
        let fit = match self.fit {
            Some((a, b)) => format!(" fit={a}:{b}"),
            None => String::new(),
        };
        vec![
            format!("octsca {}", env!("CARGO_PKG_VERSION")),
            format!("seed={}", self.seed),
            format!(
                "x={} y={} w={} p={} q={} pmode={} qmode={} engine={} tmax={} ppd={}{}",
                self.x,
                self.y,
                self.w,
                self.p,
                self.q,
                params.p().mode().name(),
                params.q().mode().name(),
                self.engine.name(),
                self.tmax,
                self.ppd,
                fit
            ),
        ]
    }
}
