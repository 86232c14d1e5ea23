//! Benchmark cases shared by the criterion harness.

use octsca_core::{BenchCase, EngineKind, ModeRequest, Probability, UpdateParams};

/// One probability per generation mode: half, dyadic and arbitrary.
pub const MODES: [(&str, f64, ModeRequest); 3] = [
    ("half", 0.5, ModeRequest::Half),
    ("dyadic", 0.75, ModeRequest::Dyadic),
    ("arbitrary", 0.95, ModeRequest::Arbitrary),
];

pub fn params(p: f64, mode: ModeRequest, q: f64) -> UpdateParams {
    UpdateParams::new(
        Probability::new(p, mode).expect("valid probability"),
        Probability::new(q, ModeRequest::Auto).expect("valid probability"),
    )
}

/// Single-worker case at side `l` with no removal.
pub fn case(engine: EngineKind, l: usize, p: f64, mode: ModeRequest) -> BenchCase {
    BenchCase { engine, l, w: 64, params: params(p, mode, 0.0), workers: 1, seed: 1 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use octsca_core::ProbMode;

    #[test]
    fn modes_resolve_as_named() {
        for (name, p, mode) in MODES {
            let c = case(EngineKind::Vec, 256, p, mode);
            assert_eq!(c.params.p().mode().name(), name);
            assert!(matches!(c.params.q().mode(), ProbMode::Zero));
        }
    }
}
