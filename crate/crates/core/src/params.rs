//! Deposition/removal probabilities and how their random words are generated.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::rng::{dyadic_plan, DyadicPlan, RandomStream, RngError, Threshold, MAX_DYADIC_WORDS};
use crate::word::Word;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParamsError {
    #[error("probability {0} must be a finite number in [0, 1]")]
    Range(f64),
    #[error("{mode} mode requires probability {required}, got {value}")]
    Inconsistent { mode: &'static str, required: f64, value: f64 },
    #[error("probability 0 must use zero mode")]
    ZeroNeedsZeroMode,
    #[error(transparent)]
    Dyadic(#[from] RngError),
    #[error("unknown probability mode {0:?}; expected auto, zero, half, dyadic or arbitrary")]
    UnknownMode(String),
}

/// Mode as requested on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeRequest {
    #[default]
    Auto,
    Zero,
    Half,
    Dyadic,
    Arbitrary,
}

impl FromStr for ModeRequest {
    type Err = ParamsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "auto" => ModeRequest::Auto,
            "zero" => ModeRequest::Zero,
            "half" => ModeRequest::Half,
            "dyadic" => ModeRequest::Dyadic,
            "arbitrary" => ModeRequest::Arbitrary,
            other => return Err(ParamsError::UnknownMode(other.to_string())),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProbMode {
    Zero,
    Half,
    Dyadic(DyadicPlan),
    Arbitrary(Threshold),
}

impl ProbMode {
    pub fn name(&self) -> &'static str {
        match self {
            ProbMode::Zero => "zero",
            ProbMode::Half => "half",
            ProbMode::Dyadic(_) => "dyadic",
            ProbMode::Arbitrary(_) => "arbitrary",
        }
    }

    pub fn code(&self) -> u8 {
        match self {
            ProbMode::Zero => 0,
            ProbMode::Half => 1,
            ProbMode::Dyadic(_) => 2,
            ProbMode::Arbitrary(_) => 3,
        }
    }
}

/// A probability together with its word-generation regime.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Probability {
    value: f64,
    mode: ProbMode,
}

impl Probability {
    pub const ZERO: Probability = Probability { value: 0.0, mode: ProbMode::Zero };

    pub fn new(value: f64, request: ModeRequest) -> Result<Self, ParamsError> {
        if !value.is_finite() || !(0.0..=1.0).contains(&value) {
            return Err(ParamsError::Range(value));
        }
        if value == 0.0 && !matches!(request, ModeRequest::Auto | ModeRequest::Zero) {
            return Err(ParamsError::ZeroNeedsZeroMode);
        }
        let mode = match request {
            ModeRequest::Auto => {
                if value == 0.0 {
                    ProbMode::Zero
                } else if value == 0.5 {
                    ProbMode::Half
                } else {
                    match dyadic_plan(value, MAX_DYADIC_WORDS) {
                        Ok(plan) => ProbMode::Dyadic(plan),
                        Err(_) => ProbMode::Arbitrary(Threshold::new(value)),
                    }
                }
            }
            ModeRequest::Zero => ProbMode::Zero,
            ModeRequest::Half => {
                if value != 0.5 {
                    return Err(ParamsError::Inconsistent { mode: "half", required: 0.5, value });
                }
                ProbMode::Half
            }
            ModeRequest::Dyadic => ProbMode::Dyadic(dyadic_plan(value, MAX_DYADIC_WORDS)?),
            ModeRequest::Arbitrary => ProbMode::Arbitrary(Threshold::new(value)),
        };
        if mode == ProbMode::Zero && value != 0.0 {
            return Err(ParamsError::Inconsistent { mode: "zero", required: 0.0, value });
        }
        Ok(Probability { value, mode })
    }

    pub fn auto(value: f64) -> Result<Self, ParamsError> {
        Self::new(value, ModeRequest::Auto)
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn mode(&self) -> &ProbMode {
        &self.mode
    }

    pub fn is_zero(&self) -> bool {
        self.mode == ProbMode::Zero
    }

    /// Raw stream words consumed per site word; never depends on lattice state.
    pub fn draws_per_word<W: Word>(&self) -> usize {
        match &self.mode {
            ProbMode::Zero => 0,
            ProbMode::Half => 1,
            ProbMode::Dyadic(plan) => plan.words(),
            ProbMode::Arbitrary(_) => W::BITS as usize,
        }
    }

    /// Decodes one acceptance word from exactly `draws_per_word` draws.
    #[inline]
    pub fn word_from_draws<W: Word>(&self, draws: &[u64]) -> W {
        match &self.mode {
            ProbMode::Zero => W::ZERO,
            ProbMode::Half => W::from_draw(draws[0]),
            ProbMode::Dyadic(plan) => plan.from_draws(draws),
            ProbMode::Arbitrary(t) => t.from_draws(draws),
        }
    }

    /// Draws one acceptance word from the stream.
    pub fn draw<W: Word>(&self, stream: &mut RandomStream) -> W {
        if let ProbMode::Arbitrary(t) = &self.mode {
            return crate::rng::xi_threshold(stream, *t);
        }
        let mut buf = [0u64; 64];
        let n = self.draws_per_word::<W>();
        stream.fill(&mut buf[..n]);
        self.word_from_draws(&buf[..n])
    }
}

impl fmt::Display for Probability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.value, self.mode.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpdateParams {
    p: Probability,
    q: Probability,
}

impl UpdateParams {
    pub fn new(p: Probability, q: Probability) -> Self {
        UpdateParams { p, q }
    }

    /// Both probabilities with automatic mode selection.
    pub fn auto(p: f64, q: f64) -> Result<Self, ParamsError> {
        Ok(UpdateParams { p: Probability::auto(p)?, q: Probability::auto(q)? })
    }

    pub fn p(&self) -> &Probability {
        &self.p
    }

    pub fn q(&self) -> &Probability {
        &self.q
    }

    /// False selects the deposition-only path `m = m_p`.
    pub fn has_removal(&self) -> bool {
        !self.q.is_zero()
    }

    pub fn draws_per_word<W: Word>(&self) -> usize {
        self.p.draws_per_word::<W>() + self.q.draws_per_word::<W>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auto_mode_selection() {
        assert_eq!(Probability::auto(0.0).unwrap().mode(), &ProbMode::Zero);
        assert_eq!(Probability::auto(0.5).unwrap().mode(), &ProbMode::Half);
        match Probability::auto(0.75).unwrap().mode() {
            ProbMode::Dyadic(plan) => assert_eq!(plan.words(), 2),
            m => panic!("unexpected {m:?}"),
        }
        assert!(matches!(Probability::auto(0.95).unwrap().mode(), ProbMode::Arbitrary(_)));
        assert!(matches!(Probability::auto(1.0).unwrap().mode(), ProbMode::Arbitrary(_)));
    }

    #[test]
    fn inconsistent_modes_rejected() {
        assert!(matches!(
            Probability::new(0.4, ModeRequest::Half),
            Err(ParamsError::Inconsistent { mode: "half", .. })
        ));
        assert!(matches!(
            Probability::new(0.3, ModeRequest::Zero),
            Err(ParamsError::Inconsistent { mode: "zero", .. })
        ));
        assert!(matches!(
            Probability::new(0.95, ModeRequest::Dyadic),
            Err(ParamsError::Dyadic(RngError::NotDyadic { .. }))
        ));
        assert_eq!(
            Probability::new(0.0, ModeRequest::Arbitrary),
            Err(ParamsError::ZeroNeedsZeroMode)
        );
        assert!(matches!(Probability::auto(1.5), Err(ParamsError::Range(_))));
        assert!(matches!(Probability::auto(f64::NAN), Err(ParamsError::Range(_))));
        assert!(Probability::new(0.5, ModeRequest::Arbitrary).is_ok());
    }

    #[test]
    fn draws_per_word_is_fixed() {
        let p = Probability::auto(0.95).unwrap();
        assert_eq!(p.draws_per_word::<u64>(), 64);
        assert_eq!(p.draws_per_word::<u32>(), 32);
        let d = Probability::auto(13.0 / 16.0).unwrap();
        assert_eq!(d.draws_per_word::<u64>(), 4);
        let params = UpdateParams::auto(0.5, 0.0).unwrap();
        assert!(!params.has_removal());
        assert_eq!(params.draws_per_word::<u64>(), 1);
    }

    #[test]
    fn draw_consumes_declared_count() {
        let mut set = crate::rng::derive_streams(2, 1).unwrap();
        for v in [0.0, 0.5, 0.75, 0.95, 1.0] {
            let p = Probability::auto(v).unwrap();
            let s = set.stream_mut(0);
            let before = s.position();
            let _: u32 = p.draw(s);
            assert_eq!(s.position() - before, p.draws_per_word::<u32>() as u64);
        }
    }

    #[test]
    fn mode_parse() {
        assert_eq!("dyadic".parse::<ModeRequest>().unwrap(), ModeRequest::Dyadic);
        assert!("fast".parse::<ModeRequest>().is_err());
    }
}
