//! Throughput measurement over the ordinary simulation path.

use std::fmt::Write as _;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::engine::{Engine, EngineError, Simulation};
use crate::lattice::{LatticeConfig, SlopeField};
use crate::params::UpdateParams;
use crate::reference::{RefSimulation, ScalarField};

/// Bytes moved per site update: two slope bits, each read twice and written
/// twice per MCS.
pub const BYTES_PER_UPDATE: f64 = 1.0;

/// Shortest timed interval accepted as a measurement.
pub const MIN_TIMED_SECONDS: f64 = 1e-3;

pub const BENCH_CSV_HEADER: &str = "engine,L,p,q,mode,workers,mcs,updates_per_ns,net_GBps,wall_s";

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("timed section took {wall_s:.3e} s, below the {min:.0e} s resolution floor; use more MCS or a larger lattice")]
    TooFast { wall_s: f64, min: f64 },
    #[error("need at least one repeat")]
    NoRepeats,
    #[error("{mcs} MCS leaves nothing to time after the warmup of {warmup}")]
    TooFewSteps { mcs: u64, warmup: u64 },
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineKind {
    Vec,
    Ref,
}

impl EngineKind {
    pub fn label(self) -> &'static str {
        match self {
            EngineKind::Vec => "vec",
            EngineKind::Ref => "ref",
        }
    }
}

/// One cell of a benchmark matrix.
#[derive(Debug, Clone)]
pub struct BenchCase {
    pub engine: EngineKind,
    pub l: usize,
    pub w: u32,
    pub params: UpdateParams,
    pub workers: usize,
    pub seed: u64,
}

impl BenchCase {
    /// Label of the p and q generation modes, e.g. `half/zero`.
    pub fn mode_label(&self) -> String {
        format!("{}/{}", self.params.p().mode().name(), self.params.q().mode().name())
    }
}

/// Fresh engine at the flat initial condition.
pub fn build_engine(case: &BenchCase) -> Result<Box<dyn Engine>, EngineError> {
    let config = LatticeConfig::square(case.l, case.w)?;
    let params = case.params.clone();
    Ok(match (case.engine, case.w) {
        (EngineKind::Vec, 32) => Box::new(Simulation::<u32>::new(
            SlopeField::new_flat(config)?,
            params,
            case.workers,
            case.seed,
        )?),
        (EngineKind::Vec, _) => Box::new(Simulation::<u64>::new(
            SlopeField::new_flat(config)?,
            params,
            case.workers,
            case.seed,
        )?),
        (EngineKind::Ref, 32) => Box::new(RefSimulation::<u32>::new(
            ScalarField::new_flat(case.l, case.l)?,
            params,
            case.seed,
        )?),
        (EngineKind::Ref, _) => Box::new(RefSimulation::<u64>::new(
            ScalarField::new_flat(case.l, case.l)?,
            params,
            case.seed,
        )?),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub engine: String,
    #[serde(rename = "L")]
    pub l: usize,
    pub p: f64,
    pub q: f64,
    pub mode: String,
    pub workers: usize,
    /// Timed MCS, warmup excluded.
    pub mcs: u64,
    pub updates_per_ns: f64,
    #[serde(rename = "net_GBps")]
    pub net_gbps: f64,
    pub wall_s: f64,
    /// Checksum of the final field, equal across repeats.
    #[serde(skip)]
    pub checksum: u64,
}

impl BenchReport {
    /// Derives the rates from a timing of `mcs` steps over `L²` sites.
    pub fn from_timing(case: &BenchCase, mcs: u64, wall_s: f64, checksum: u64) -> Self {
        let updates = (case.l * case.l) as f64 * mcs as f64;
        let updates_per_ns = updates / (wall_s * 1e9);
        BenchReport {
            engine: case.engine.label().to_string(),
            l: case.l,
            p: case.params.p().value(),
            q: case.params.q().value(),
            mode: case.mode_label(),
            workers: case.workers,
            mcs,
            updates_per_ns,
            net_gbps: updates_per_ns * BYTES_PER_UPDATE,
            wall_s,
            checksum,
        }
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{:.6},{:.6},{:.6}",
            self.engine,
            self.l,
            self.p,
            self.q,
            self.mode,
            self.workers,
            self.mcs,
            self.updates_per_ns,
            self.net_gbps,
            self.wall_s
        )
    }
}

/// Steps discarded before timing: the first 10% of `mcs`.
pub fn warmup_steps(mcs: u64) -> u64 {
    mcs / 10
}

/// Median wall time over `repeats` fresh runs of `mcs` steps, the first 10%
/// of which are untimed.
pub fn throughput_bench(case: &BenchCase, mcs: u64, repeats: usize) -> Result<BenchReport, BenchError> {
    if repeats == 0 {
        return Err(BenchError::NoRepeats);
    }
    let warmup = warmup_steps(mcs);
    let timed = mcs - warmup;
    if timed == 0 {
        return Err(BenchError::TooFewSteps { mcs, warmup });
    }
    let mut walls = Vec::with_capacity(repeats);
    let mut checksum = 0;
    for _ in 0..repeats {
        let mut engine = build_engine(case)?;
        for _ in 0..warmup {
            engine.step()?;
        }
        let start = Instant::now();
        for _ in 0..timed {
            engine.step()?;
        }
        walls.push(start.elapsed().as_secs_f64());
        checksum = engine.checksum();
    }
    let wall_s = median(&mut walls);
    if wall_s < MIN_TIMED_SECONDS {
        return Err(BenchError::TooFast { wall_s, min: MIN_TIMED_SECONDS });
    }
    Ok(BenchReport::from_timing(case, timed, wall_s, checksum))
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Runs every case in order, one report each.
pub fn compare_engines(cases: &[BenchCase], mcs: u64, repeats: usize) -> Result<Vec<BenchReport>, BenchError> {
    cases.iter().map(|c| throughput_bench(c, mcs, repeats)).collect()
}

pub fn reports_csv(reports: &[BenchReport]) -> String {
    let mut out = String::from(BENCH_CSV_HEADER);
    out.push('\n');
    for r in reports {
        let _ = writeln!(out, "{}", r.csv_row());
    }
    out
}
