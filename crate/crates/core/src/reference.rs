//! Scalar per-site engine.
//!
//! Walks the sites of a sublattice in the same (row, word, bit) order as the
//! vectorized sweep and consumes the identical acceptance words, so after any
//! number of steps both engines hold the same surface bit for bit.

use std::marker::PhantomData;

use crate::engine::{Engine, EngineError};
use crate::lattice::{
    curl_violations, imbalances, integrate_slopes, Axis, HeightMap, Imbalance, LatticeConfig,
    LatticeError, Parity, Plaquette, SlopeField,
};
use crate::params::UpdateParams;
use crate::rng::RngStreamSet;
use crate::word::Word;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SiteUpdate {
    None,
    Deposit,
    Remove,
}

/// Per-site rule with the slopes grouped by axis, `(σx−, σx+, σy−, σy+)`:
/// `(−1, +1, −1, +1)` deposits at rate p, `(+1, −1, +1, −1)` is removed at
/// rate q.
pub fn ref_update_site(
    x_minus: i8,
    x_plus: i8,
    y_minus: i8,
    y_plus: i8,
    accept_p: bool,
    accept_q: bool,
) -> SiteUpdate {
    match (x_minus, x_plus, y_minus, y_plus) {
        (-1, 1, -1, 1) if accept_p => SiteUpdate::Deposit,
        (1, -1, 1, -1) if accept_q => SiteUpdate::Remove,
        _ => SiteUpdate::None,
    }
}

/// Plain per-site slope pairs `(σx−, σy−)`, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScalarField {
    x: usize,
    y: usize,
    sx: Vec<i8>,
    sy: Vec<i8>,
    t_mcs: u64,
    phase: Parity,
}

impl ScalarField {
    pub fn new_flat(x: usize, y: usize) -> Result<Self, LatticeError> {
        if x == 0 || !x.is_multiple_of(2) || !y.is_multiple_of(2) || y < 2 {
            return Err(LatticeError::OddDimensions { x, y });
        }
        let sign: Vec<i8> = (0..y)
            .flat_map(|yy| (0..x).map(move |xx| if (xx + yy) % 2 == 0 { -1 } else { 1 }))
            .collect();
        Ok(ScalarField { x, y, sx: sign.clone(), sy: sign, t_mcs: 0, phase: Parity::Even })
    }

    pub fn from_slope_field<W: Word>(field: &SlopeField<W>) -> Self {
        let (sx, sy) = field.expand();
        ScalarField {
            x: field.config().x(),
            y: field.config().y(),
            sx,
            sy,
            t_mcs: field.t_mcs(),
            phase: field.phase(),
        }
    }

    /// Packs into bit-planes; dimensions must satisfy [`LatticeConfig`].
    pub fn to_slope_field<W: Word>(&self) -> Result<SlopeField<W>, LatticeError> {
        let config = LatticeConfig::new(self.x, self.y, W::BITS)?;
        let n = config.words_per_plane();
        let mut field =
            SlopeField::from_planes(config, std::array::from_fn(|_| vec![W::ZERO; n]), 0, Parity::Even)?;
        for yy in 0..self.y {
            for xx in 0..self.x {
                let i = yy * self.x + xx;
                field.set_sigma_minus(Axis::X, xx, yy, self.sx[i] > 0);
                field.set_sigma_minus(Axis::Y, xx, yy, self.sy[i] > 0);
            }
        }
        SlopeField::from_planes(config, field.planes().clone(), self.t_mcs, self.phase)
    }

    /// Builds a field from raw arrays of ±1 values.
    pub fn from_slopes(
        x: usize,
        y: usize,
        sx: Vec<i8>,
        sy: Vec<i8>,
        t_mcs: u64,
        phase: Parity,
    ) -> Result<Self, LatticeError> {
        let mut f = Self::new_flat(x, y)?;
        if sx.len() != x * y || sy.len() != x * y {
            return Err(LatticeError::ShapeMismatch { x, y, found_x: sx.len(), found_y: sy.len() });
        }
        f.sx = sx;
        f.sy = sy;
        f.t_mcs = t_mcs;
        f.phase = phase;
        Ok(f)
    }

    pub fn x(&self) -> usize {
        self.x
    }

    pub fn y(&self) -> usize {
        self.y
    }

    pub fn t_mcs(&self) -> u64 {
        self.t_mcs
    }

    pub fn phase(&self) -> Parity {
        self.phase
    }

    pub fn x_slopes(&self) -> &[i8] {
        &self.sx
    }

    pub fn y_slopes(&self) -> &[i8] {
        &self.sy
    }

    pub fn heights(&self) -> Result<HeightMap, LatticeError> {
        integrate_slopes(self.x, self.y, &self.sx, &self.sy)
    }

    pub fn curl_check(&self) -> Vec<Plaquette> {
        curl_violations(self.x, self.y, &self.sx, &self.sy)
    }

    pub fn balance_check(&self) -> Vec<Imbalance> {
        imbalances(self.x, self.y, &self.sx, &self.sy)
    }
}

/// Scalar counterpart of [`crate::engine::sublattice_sweep`] for words of
/// type `W`.
pub fn ref_sublattice_sweep<W: Word>(
    field: &mut ScalarField,
    parity: Parity,
    params: &UpdateParams,
    streams: &mut RngStreamSet,
) -> Result<(), EngineError> {
    if field.phase != parity {
        return Err(EngineError::PhaseMismatch { requested: parity, expected: field.phase });
    }
    let (nx, ny) = (field.x, field.y);
    if streams.len() != ny {
        return Err(EngineError::StreamCount { expected: ny, found: streams.len() });
    }
    let half = nx / 2;
    let bits = W::BITS as usize;
    if half % bits != 0 {
        return Err(EngineError::WordAlignment { half_x: half, w: W::BITS });
    }
    for y in 0..ny {
        let stream = streams.stream_mut(y);
        let offset = parity.x_offset(y);
        let y_next = (y + 1) % ny;
        for k in 0..half / bits {
            let xi_p: W = params.p().draw(stream);
            let xi_q: W = params.q().draw(stream);
            for b in 0..W::BITS {
                let j = k * bits + b as usize;
                let x = 2 * j + offset;
                let x_next = (x + 1) % nx;
                let here = y * nx + x;
                let right = y * nx + x_next;
                let up = y_next * nx + x;
                let decision = ref_update_site(
                    field.sx[here],
                    field.sx[right],
                    field.sy[here],
                    field.sy[up],
                    xi_p.bit(b),
                    xi_q.bit(b),
                );
                if decision != SiteUpdate::None {
                    field.sx[here] = -field.sx[here];
                    field.sy[here] = -field.sy[here];
                    field.sx[right] = -field.sx[right];
                    field.sy[up] = -field.sy[up];
                }
            }
        }
    }
    if parity == Parity::Odd {
        field.t_mcs += 1;
    }
    field.phase = parity.flip();
    Ok(())
}

/// Scalar engine bundled with its parameters and streams.
#[derive(Debug, Clone)]
pub struct RefSimulation<W: Word> {
    field: ScalarField,
    params: UpdateParams,
    streams: RngStreamSet,
    word: PhantomData<W>,
}

impl<W: Word> RefSimulation<W> {
    pub fn new(field: ScalarField, params: UpdateParams, seed: u64) -> Result<Self, EngineError> {
        let streams = RngStreamSet::derive(seed, field.y())?;
        Self::from_parts(field, params, streams)
    }

    pub fn from_parts(
        field: ScalarField,
        params: UpdateParams,
        streams: RngStreamSet,
    ) -> Result<Self, EngineError> {
        if streams.len() != field.y() {
            return Err(EngineError::StreamCount { expected: field.y(), found: streams.len() });
        }
        if !(field.x() / 2).is_multiple_of(W::BITS as usize) {
            return Err(EngineError::WordAlignment { half_x: field.x() / 2, w: W::BITS });
        }
        Ok(RefSimulation { field, params, streams, word: PhantomData })
    }

    pub fn field(&self) -> &ScalarField {
        &self.field
    }

    pub fn streams(&self) -> &RngStreamSet {
        &self.streams
    }

    pub fn sweep(&mut self) -> Result<(), EngineError> {
        let parity = self.field.phase();
        ref_sublattice_sweep::<W>(&mut self.field, parity, &self.params, &mut self.streams)
    }
}

impl<W: Word> Engine for RefSimulation<W> {
    fn label(&self) -> &'static str {
        "ref"
    }

    fn sites(&self) -> usize {
        self.field.x() * self.field.y()
    }

    fn t_mcs(&self) -> u64 {
        self.field.t_mcs()
    }

    fn step(&mut self) -> Result<(), EngineError> {
        let t = self.field.t_mcs();
        while self.field.t_mcs() == t {
            self.sweep()?;
        }
        Ok(())
    }

    fn heights(&self) -> Result<HeightMap, LatticeError> {
        self.field.heights()
    }

    fn checksum(&self) -> u64 {
        self.field.to_slope_field::<W>().map(|f| f.checksum()).unwrap_or(0)
    }
}
