//! Word-parallel stochastic cellular automaton for the 2+1-dimensional
//! octahedron growth model.
//!
//! Slopes are stored as four bit-planes (axis × checkerboard parity) so that
//! one word of boolean operations updates `w` sites of a sublattice. A scalar
//! engine replays the same random words site by site and serves as an exact
//! oracle.

pub mod bench;
pub mod engine;
pub mod lattice;
pub mod measure;
pub mod params;
pub mod reference;
pub mod rng;
pub mod snapshot;
pub mod tile;
pub mod word;

pub use bench::{
    build_engine, compare_engines, reports_csv, throughput_bench, BenchCase, BenchError,
    BenchReport, EngineKind,
};
pub use engine::{
    gather_xplus, mcs_step, run, scatter_xplus, sublattice_sweep, update_mask, Engine,
    EngineError, RunError, Simulation, SweepPlan,
};
pub use lattice::{
    Axis, Direction, HeightMap, Imbalance, LatticeConfig, LatticeError, Parity, Plaquette,
    SlopeField,
};
pub use measure::{
    growth_exponent_fit, height_moments, log_growth_fit, log_schedule, roughness_sq, CsvSink,
    FitResult, MeasureError, MeasurementRecord, Moments, RecordSink,
};
pub use params::{ModeRequest, ParamsError, ProbMode, Probability, UpdateParams};
pub use reference::{ref_sublattice_sweep, ref_update_site, RefSimulation, ScalarField, SiteUpdate};
pub use rng::{
    derive_streams, dyadic_plan, xi_arbitrary, xi_dyadic, xi_half, DyadicPlan, RandomStream,
    RngError, RngStreamSet,
};
pub use snapshot::{AnyField, Snapshot, SnapshotError};
pub use tile::LocalTileWord;
pub use word::Word;
