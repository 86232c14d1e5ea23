//! Word-parallel checkerboard sweep.
//!
//! Updating sublattice `π` in row `y` touches exactly three plane rows besides
//! its own pair: `x/¬π` in row `y` (the `σx+` slopes) and `y/¬π` in row `y+1`
//! (the `σy+` slopes). No two rows of one sweep share any of these, so rows are
//! independent jobs and workers can own disjoint row blocks without locking.
//!
//! In rows where the sites sit at odd `x` the `σx+` bits live one packed index
//! further along, so the neighbour row is rotated down by one bit across the
//! whole row before masking and the mask is rotated back when applied.

use std::io;
use std::ops::Range;

use crate::lattice::{plane_index, Axis, HeightMap, LatticeError, Parity, SlopeField};
use crate::measure::{MeasurementRecord, RecordSink};
use crate::params::{ProbMode, Probability, UpdateParams};
use crate::rng::{RandomStream, RngError, RngStreamSet};
use crate::word::Word;

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error("sweep of the {requested:?} sublattice requested but the field expects {expected:?}")]
    PhaseMismatch { requested: Parity, expected: Parity },
    #[error("{found} random streams supplied, one per row ({expected}) required")]
    StreamCount { expected: usize, found: usize },
    #[error("worker count must be at least 1")]
    NoWorkers,
    #[error("sweep plan covers {plan_rows} rows of {plan_words} words, field has {rows} of {words}")]
    PlanMismatch { plan_rows: usize, plan_words: usize, rows: usize, words: usize },
    #[error("half_x = {half_x} is not a multiple of the word size {w}")]
    WordAlignment { half_x: usize, w: u32 },
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Rng(#[from] RngError),
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("schedule must be strictly increasing: entry {index} is {t} after {prev}")]
    NotIncreasing { index: usize, t: u64, prev: u64 },
    #[error("schedule time {t} is before the current time {now}")]
    Behind { t: u64, now: u64 },
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("invariant violated at t = {t}: {source}")]
    Invariant { t: u64, source: LatticeError },
    #[error("measurement sink failed: {0}")]
    Sink(#[from] io::Error),
}

/// Kawasaki exchange mask: bit set where a deposition or removal happens.
///
/// `m_p = ξp ∧ ¬(σx− ∨ σy−) ∧ σx+ ∧ σy+`, `m_q = ξq ∧ ¬(σx+ ∨ σy+) ∧ σx− ∧ σy−`,
/// `m = m_p ⊕ m_q`. The two patterns are mutually exclusive.
#[inline(always)]
pub fn update_mask<W: Word>(x_minus: W, y_minus: W, x_plus: W, y_plus: W, xi_p: W, xi_q: W) -> W {
    let mp = xi_p & !(x_minus | y_minus) & x_plus & y_plus;
    let mq = xi_q & !(x_plus | y_plus) & x_minus & y_minus;
    mp ^ mq
}

#[inline(always)]
fn mask_word<W: Word, const REMOVAL: bool>(xm: W, ym: W, xp: W, yp: W, xi_p: W, xi_q: W) -> W {
    let mp = xi_p & !(xm | ym) & xp & yp;
    if REMOVAL {
        mp ^ (xi_q & !(xp | yp) & xm & ym)
    } else {
        mp
    }
}

/// `aligned[i] = raw[(i + 1) mod len]` over the packed bit indices of a row.
pub fn gather_xplus_row<W: Word>(raw: &[W], shifted: bool) -> Vec<W> {
    if !shifted {
        return raw.to_vec();
    }
    let n = raw.len();
    (0..n).map(|k| (raw[k] >> 1) | (raw[(k + 1) % n] << (W::BITS - 1))).collect()
}

/// Inverse alignment of [`gather_xplus_row`]: xors `mask` into `raw`.
pub fn scatter_xplus_row<W: Word>(raw: &mut [W], shifted: bool, mask: &[W]) {
    let n = raw.len();
    assert_eq!(mask.len(), n, "mask length must match the row");
    if !shifted {
        for (r, &m) in raw.iter_mut().zip(mask) {
            *r ^= m;
        }
        return;
    }
    let mut carry = mask[n - 1] >> (W::BITS - 1);
    for (r, &m) in raw.iter_mut().zip(mask) {
        *r ^= (m << 1) | carry;
        carry = m >> (W::BITS - 1);
    }
}

/// `σx+` words aligned with the `parity` sites of row `y`.
pub fn gather_xplus<W: Word>(field: &SlopeField<W>, y: usize, parity: Parity) -> Vec<W> {
    gather_xplus_row(field.row(Axis::X, parity.flip(), y), parity.x_offset(y) == 1)
}

/// Applies a mask computed in the aligned frame of [`gather_xplus`].
pub fn scatter_xplus<W: Word>(field: &mut SlopeField<W>, y: usize, parity: Parity, mask: &[W]) {
    let shifted = parity.x_offset(y) == 1;
    scatter_xplus_row(field.row_mut(Axis::X, parity.flip(), y), shifted, mask);
}

/// Row blocks handed to workers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepPlan {
    row_blocks: Vec<Range<usize>>,
    rows: usize,
    words_per_row: usize,
}

impl SweepPlan {
    /// Contiguous blocks balanced to within one row; the remainder rows go to
    /// the last workers.
    pub fn new(rows: usize, workers: usize, words_per_row: usize) -> Result<Self, EngineError> {
        if workers == 0 {
            return Err(EngineError::NoWorkers);
        }
        let base = rows / workers;
        let extra = rows % workers;
        let mut start = 0;
        let row_blocks = (0..workers)
            .map(|i| {
                let len = base + usize::from(i >= workers - extra);
                let r = start..start + len;
                start += len;
                r
            })
            .collect();
        Ok(SweepPlan { row_blocks, rows, words_per_row })
    }

    pub fn for_field<W: Word>(field: &SlopeField<W>, workers: usize) -> Result<Self, EngineError> {
        Self::new(field.config().y(), workers, field.config().words_per_row())
    }

    pub fn worker_count(&self) -> usize {
        self.row_blocks.len()
    }

    pub fn row_blocks(&self) -> &[Range<usize>] {
        &self.row_blocks
    }

    pub fn words_per_row(&self) -> usize {
        self.words_per_row
    }

    pub fn rows(&self) -> usize {
        self.rows
    }
}

struct RowJob<'a, W> {
    y: usize,
    shifted: bool,
    own_x: &'a mut [W],
    own_y: &'a mut [W],
    nb_x: &'a mut [W],
    nb_y: &'a mut [W],
    stream: &'a mut RandomStream,
}

#[derive(Default)]
struct RowScratch<W> {
    draws: Vec<u64>,
    xi_p: Vec<W>,
    xi_q: Vec<W>,
    masks: Vec<W>,
}

fn row_jobs<'a, W: Word>(
    field: &'a mut SlopeField<W>,
    parity: Parity,
    streams: &'a mut [RandomStream],
) -> Vec<RowJob<'a, W>> {
    let n = field.config().words_per_row();
    let [xe, xo, ye, yo] = field.planes_mut();
    let (own_x, nb_x, own_y, nb_y) = match parity {
        Parity::Even => (xe, xo, ye, yo),
        Parity::Odd => (xo, xe, yo, ye),
    };
    // row y writes the y-neighbour plane at row y + 1 (periodic)
    let mut nb_y_rows: Vec<&mut [W]> = nb_y.chunks_exact_mut(n).collect();
    nb_y_rows.rotate_left(1);
    own_x
        .chunks_exact_mut(n)
        .zip(own_y.chunks_exact_mut(n))
        .zip(nb_x.chunks_exact_mut(n))
        .zip(nb_y_rows)
        .zip(streams.iter_mut())
        .enumerate()
        .map(|(y, ((((own_x, own_y), nb_x), nb_y), stream))| RowJob {
            y,
            shifted: parity.x_offset(y) == 1,
            own_x,
            own_y,
            nb_x,
            nb_y,
            stream,
        })
        .collect()
}

fn partition<T>(items: Vec<T>, blocks: &[Range<usize>]) -> Vec<Vec<T>> {
    let mut it = items.into_iter();
    blocks.iter().map(|b| it.by_ref().take(b.len()).collect()).collect()
}

#[inline]
fn decode_xi<W: Word>(prob: &Probability, draws: &[u64], stride: usize, offset: usize, out: &mut [W]) {
    match prob.mode() {
        ProbMode::Zero => out.fill(W::ZERO),
        ProbMode::Half => {
            for (o, d) in out.iter_mut().zip(draws.iter().skip(offset).step_by(stride)) {
                *o = W::from_draw(*d);
            }
        }
        ProbMode::Dyadic(plan) => {
            let k = plan.words();
            for (i, o) in out.iter_mut().enumerate() {
                let at = i * stride + offset;
                *o = plan.from_draws(&draws[at..at + k]);
            }
        }
        ProbMode::Arbitrary(t) => {
            let k = W::BITS as usize;
            for (i, o) in out.iter_mut().enumerate() {
                let at = i * stride + offset;
                *o = t.from_draws(&draws[at..at + k]);
            }
        }
    }
}

#[inline(always)]
fn row_kernel<W: Word, const SHIFTED: bool, const REMOVAL: bool>(
    job: &mut RowJob<'_, W>,
    xi_p: &[W],
    xi_q: &[W],
    masks: &mut [W],
) {
    let n = job.own_x.len();
    let own_x = &mut job.own_x[..n];
    let own_y = &mut job.own_y[..n];
    let nb_x = &mut job.nb_x[..n];
    let nb_y = &mut job.nb_y[..n];
    let xi_p = &xi_p[..n];
    let masks = &mut masks[..n];
    let xq = |k: usize| if REMOVAL { xi_q[k] } else { W::ZERO };

    if !SHIFTED {
        for k in 0..n {
            let m = mask_word::<W, REMOVAL>(own_x[k], own_y[k], nb_x[k], nb_y[k], xi_p[k], xq(k));
            own_x[k] ^= m;
            own_y[k] ^= m;
            nb_x[k] ^= m;
            nb_y[k] ^= m;
        }
        return;
    }

    // the first word closes the periodic seam of the rotation
    let first = nb_x[0];
    let top = W::BITS - 1;
    for k in 0..n {
        let next = if k + 1 < n { nb_x[k + 1] } else { first };
        let xp = (nb_x[k] >> 1) | (next << top);
        let m = mask_word::<W, REMOVAL>(own_x[k], own_y[k], xp, nb_y[k], xi_p[k], xq(k));
        masks[k] = m;
        own_x[k] ^= m;
        own_y[k] ^= m;
        nb_y[k] ^= m;
    }
    let mut carry = masks[n - 1] >> top;
    for k in 0..n {
        let m = masks[k];
        nb_x[k] ^= (m << 1) | carry;
        carry = m >> top;
    }
}

fn sweep_row<W: Word>(job: &mut RowJob<'_, W>, params: &UpdateParams, scratch: &mut RowScratch<W>) {
    let n = job.own_x.len();
    let dp = params.p().draws_per_word::<W>();
    let dq = params.q().draws_per_word::<W>();
    let per = dp + dq;
    if per == 0 {
        return;
    }
    scratch.xi_p.resize(n, W::ZERO);
    scratch.masks.resize(n, W::ZERO);
    let removal = params.has_removal();
    if removal {
        scratch.xi_q.resize(n, W::ZERO);
    }
    let arbitrary = |p: &Probability| matches!(p.mode(), ProbMode::Arbitrary(_));
    match (params.p().mode(), removal) {
        // the whole row's draws go to ξp
        (ProbMode::Arbitrary(t), false) => job.stream.fill_threshold(*t, &mut scratch.xi_p),
        _ if arbitrary(params.p()) || arbitrary(params.q()) => {
            for k in 0..n {
                scratch.xi_p[k] = params.p().draw(job.stream);
                scratch.xi_q[k] = params.q().draw(job.stream);
            }
        }
        _ => {
            // per word: the ξp draws, then the ξq draws
            scratch.draws.resize(n * per, 0);
            job.stream.fill(&mut scratch.draws);
            decode_xi(params.p(), &scratch.draws, per, 0, &mut scratch.xi_p);
            if removal {
                decode_xi(params.q(), &scratch.draws, per, dp, &mut scratch.xi_q);
            }
        }
    }
    let (xp, xq, masks) = (&scratch.xi_p, &scratch.xi_q, &mut scratch.masks);
    match (job.shifted, removal) {
        (false, false) => row_kernel::<W, false, false>(job, xp, xq, masks),
        (false, true) => row_kernel::<W, false, true>(job, xp, xq, masks),
        (true, false) => row_kernel::<W, true, false>(job, xp, xq, masks),
        (true, true) => row_kernel::<W, true, true>(job, xp, xq, masks),
    }
}

fn check_shapes<W: Word>(
    field: &SlopeField<W>,
    plan: &SweepPlan,
    streams: &RngStreamSet,
) -> Result<(), EngineError> {
    let rows = field.config().y();
    let words = field.config().words_per_row();
    if plan.rows() != rows || plan.words_per_row() != words {
        return Err(EngineError::PlanMismatch {
            plan_rows: plan.rows(),
            plan_words: plan.words_per_row(),
            rows,
            words,
        });
    }
    if streams.len() != rows {
        return Err(EngineError::StreamCount { expected: rows, found: streams.len() });
    }
    Ok(())
}

/// Updates every site of one sublattice, then advances the field's phase.
///
/// Row `y` draws from stream `y`, words in ascending order, so the outcome
/// does not depend on how rows are split between workers.
pub fn sublattice_sweep<W: Word>(
    field: &mut SlopeField<W>,
    parity: Parity,
    params: &UpdateParams,
    plan: &SweepPlan,
    streams: &mut RngStreamSet,
) -> Result<(), EngineError> {
    if field.phase() != parity {
        return Err(EngineError::PhaseMismatch { requested: parity, expected: field.phase() });
    }
    check_shapes(field, plan, streams)?;
    let jobs = row_jobs(field, parity, streams.streams_mut());
    if plan.worker_count() == 1 {
        let mut scratch = RowScratch::default();
        for mut job in jobs {
            sweep_row(&mut job, params, &mut scratch);
        }
    } else {
        let mut blocks = partition(jobs, plan.row_blocks());
        blocks.retain(|b| !b.is_empty());
        let local = blocks.pop();
        // scope exit is the barrier between sublattices
        std::thread::scope(|s| {
            for block in blocks {
                s.spawn(move || {
                    let mut scratch = RowScratch::default();
                    for mut job in block {
                        sweep_row(&mut job, params, &mut scratch);
                    }
                });
            }
            if let Some(block) = local {
                let mut scratch = RowScratch::default();
                for mut job in block {
                    sweep_row(&mut job, params, &mut scratch);
                }
            }
        });
    }
    field.advance_phase();
    Ok(())
}

/// Completes the current Monte Carlo step: even then odd sublattice.
pub fn mcs_step<W: Word>(
    field: &mut SlopeField<W>,
    params: &UpdateParams,
    plan: &SweepPlan,
    streams: &mut RngStreamSet,
) -> Result<(), EngineError> {
    let t = field.t_mcs();
    while field.t_mcs() == t {
        sublattice_sweep(field, field.phase(), params, plan, streams)?;
    }
    Ok(())
}

/// `(plane index, row)` pairs each worker writes during a sweep, read back
/// from the slices actually handed to the workers.
pub fn sweep_write_sets<W: Word>(
    field: &mut SlopeField<W>,
    parity: Parity,
    plan: &SweepPlan,
    streams: &mut RngStreamSet,
) -> Result<Vec<Vec<(usize, usize)>>, EngineError> {
    check_shapes(field, plan, streams)?;
    let n = field.config().words_per_row();
    let bases: Vec<(usize, usize)> = [Axis::X, Axis::Y]
        .into_iter()
        .flat_map(|a| [Parity::Even, Parity::Odd].map(|p| plane_index(a, p)))
        .map(|i| (i, field.planes()[i].as_ptr() as usize))
        .collect();
    let plane_len = field.config().words_per_plane() * std::mem::size_of::<W>();
    let locate = |ptr: *const W| {
        let addr = ptr as usize;
        let (plane, base) = bases
            .iter()
            .copied()
            .find(|&(_, b)| addr >= b && addr < b + plane_len)
            .expect("slice inside a plane");
        (plane, (addr - base) / std::mem::size_of::<W>() / n)
    };
    let jobs = row_jobs(field, parity, streams.streams_mut());
    let blocks = partition(jobs, plan.row_blocks());
    Ok(blocks
        .into_iter()
        .map(|block| {
            block
                .iter()
                .flat_map(|j| {
                    debug_assert!(j.y < plan.rows());
                    [j.own_x.as_ptr(), j.own_y.as_ptr(), j.nb_x.as_ptr(), j.nb_y.as_ptr()]
                })
                .map(locate)
                .collect()
        })
        .collect())
}

/// Common driver interface of the vectorized and scalar engines.
pub trait Engine {
    fn label(&self) -> &'static str;

    fn sites(&self) -> usize;

    fn t_mcs(&self) -> u64;

    /// One Monte Carlo step.
    fn step(&mut self) -> Result<(), EngineError>;

    fn heights(&self) -> Result<HeightMap, LatticeError>;

    /// Checksum of the equivalent [`SlopeField`].
    fn checksum(&self) -> u64;
}

/// The vectorized engine with its parameters, plan and streams.
#[derive(Debug, Clone)]
pub struct Simulation<W: Word> {
    field: SlopeField<W>,
    params: UpdateParams,
    plan: SweepPlan,
    streams: RngStreamSet,
}

impl<W: Word> Simulation<W> {
    /// One stream per row, derived from `seed`.
    pub fn new(
        field: SlopeField<W>,
        params: UpdateParams,
        workers: usize,
        seed: u64,
    ) -> Result<Self, EngineError> {
        let streams = RngStreamSet::derive(seed, field.config().y())?;
        Self::from_parts(field, params, workers, streams)
    }

    pub fn from_parts(
        field: SlopeField<W>,
        params: UpdateParams,
        workers: usize,
        streams: RngStreamSet,
    ) -> Result<Self, EngineError> {
        let plan = SweepPlan::for_field(&field, workers)?;
        check_shapes(&field, &plan, &streams)?;
        Ok(Simulation { field, params, plan, streams })
    }

    pub fn field(&self) -> &SlopeField<W> {
        &self.field
    }

    pub fn params(&self) -> &UpdateParams {
        &self.params
    }

    pub fn plan(&self) -> &SweepPlan {
        &self.plan
    }

    pub fn streams(&self) -> &RngStreamSet {
        &self.streams
    }

    pub fn set_workers(&mut self, workers: usize) -> Result<(), EngineError> {
        self.plan = SweepPlan::for_field(&self.field, workers)?;
        Ok(())
    }

    pub fn sweep(&mut self) -> Result<(), EngineError> {
        let parity = self.field.phase();
        sublattice_sweep(&mut self.field, parity, &self.params, &self.plan, &mut self.streams)
    }

    pub fn into_parts(self) -> (SlopeField<W>, UpdateParams, RngStreamSet) {
        (self.field, self.params, self.streams)
    }
}

impl<W: Word> Engine for Simulation<W> {
    fn label(&self) -> &'static str {
        "vec"
    }

    fn sites(&self) -> usize {
        self.field.config().sites()
    }

    fn t_mcs(&self) -> u64 {
        self.field.t_mcs()
    }

    fn step(&mut self) -> Result<(), EngineError> {
        mcs_step(&mut self.field, &self.params, &self.plan, &mut self.streams)
    }

    fn heights(&self) -> Result<HeightMap, LatticeError> {
        self.field.reconstruct_heights()
    }

    fn checksum(&self) -> u64 {
        self.field.checksum()
    }
}

/// Advances `engine` through `schedule`, measuring at each listed time.
pub fn run<E: Engine + ?Sized>(
    engine: &mut E,
    schedule: &[u64],
    sink: &mut dyn RecordSink,
) -> Result<Vec<MeasurementRecord>, RunError> {
    for (index, pair) in schedule.windows(2).enumerate() {
        if pair[1] <= pair[0] {
            return Err(RunError::NotIncreasing { index: index + 1, t: pair[1], prev: pair[0] });
        }
    }
    if let Some(&t) = schedule.first() {
        if t < engine.t_mcs() {
            return Err(RunError::Behind { t, now: engine.t_mcs() });
        }
    }
    let mut records = Vec::with_capacity(schedule.len());
    for &t in schedule {
        while engine.t_mcs() < t {
            engine.step()?;
        }
        let heights = engine.heights().map_err(|source| RunError::Invariant { t, source })?;
        let rec = MeasurementRecord::from_heights(t, &heights);
        sink.accept(&rec)?;
        records.push(rec);
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LatticeConfig;

    #[test]
    fn mask_examples() {
        assert_eq!(update_mask(0b0000u8, 0b0000, 0b1111, 0b1111, 0b1010, 0), 0b1010);
        for xi in [0u8, 0x5a, 0xff] {
            assert_eq!(update_mask(0xffu8, 0xff, 0x3c, 0xc3, xi, 0), 0);
        }
        assert_eq!(update_mask(0b0011u8, 0b0101, 0b1110, 0b1010, 0b1111, 0), 0b1000);
    }

    #[test]
    fn gather_examples() {
        let raw = [0b0000_0001u8, 0b1000_0000];
        assert_eq!(gather_xplus_row(&raw, false), raw.to_vec());
        assert_eq!(gather_xplus_row(&raw, true), vec![0b0000_0000, 0b1100_0000]);
        let lone = [1u8, 0, 0];
        assert_eq!(gather_xplus_row(&lone, true), vec![0, 0, 0b1000_0000]);
    }

    #[test]
    fn scatter_examples() {
        let mut raw = [0x12u8, 0x34];
        scatter_xplus_row(&mut raw, true, &[0, 0]);
        assert_eq!(raw, [0x12, 0x34]);
        let mut raw = [0u8; 2];
        scatter_xplus_row(&mut raw, false, &[0, 0b0100]);
        assert_eq!(raw, [0, 0b0100]);
        let mut raw = [0u8; 2];
        scatter_xplus_row(&mut raw, true, &[0, 0b1000_0000]);
        assert_eq!(raw, [1, 0]);
    }

    #[test]
    fn plan_blocks_balance() {
        let p = SweepPlan::new(10, 3, 1).unwrap();
        assert_eq!(p.row_blocks(), &[0..3, 3..6, 6..10]);
        let p = SweepPlan::new(2, 4, 1).unwrap();
        assert_eq!(p.row_blocks(), &[0..0, 0..0, 0..1, 1..2]);
        assert!(matches!(SweepPlan::new(4, 0, 1), Err(EngineError::NoWorkers)));
    }

    fn flat(l: usize) -> SlopeField<u64> {
        SlopeField::new_flat(LatticeConfig::square(l, 64).unwrap()).unwrap()
    }

    #[test]
    fn zero_probabilities_leave_field_alone() {
        let mut sim = Simulation::new(flat(128), UpdateParams::auto(0.0, 0.0).unwrap(), 1, 1).unwrap();
        let before = sim.field().planes().clone();
        sim.sweep().unwrap();
        assert_eq!(sim.field().phase(), Parity::Odd);
        sim.sweep().unwrap();
        assert_eq!(sim.field().t_mcs(), 1);
        assert_eq!(sim.field().planes(), &before);
        assert_eq!(sim.streams().stream(0).position(), 0);
    }

    #[test]
    fn phase_mismatch_rejected() {
        let mut f = flat(128);
        let plan = SweepPlan::for_field(&f, 1).unwrap();
        let mut streams = RngStreamSet::derive(0, 128).unwrap();
        let params = UpdateParams::auto(0.5, 0.0).unwrap();
        let err = sublattice_sweep(&mut f, Parity::Odd, &params, &plan, &mut streams).unwrap_err();
        assert!(matches!(err, EngineError::PhaseMismatch { .. }));
        let mut few = RngStreamSet::derive(0, 3).unwrap();
        let err = sublattice_sweep(&mut f, Parity::Even, &params, &plan, &mut few).unwrap_err();
        assert!(matches!(err, EngineError::StreamCount { expected: 128, found: 3 }));
    }

    #[test]
    fn full_deposition_raises_even_sites() {
        let mut sim = Simulation::new(flat(128), UpdateParams::auto(1.0, 0.0).unwrap(), 1, 4).unwrap();
        sim.sweep().unwrap();
        let h = sim.field().reconstruct_heights().unwrap();
        let base = HeightMap::flat(128, 128);
        // h(0,0) is the anchor, so every other height is relative to it
        for y in 0..128i64 {
            for x in 0..128i64 {
                let expect = base.get(x, y) + if (x + y) % 2 == 0 { 2 } else { 0 } - 2;
                assert_eq!(h.get(x, y), expect, "site ({x},{y})");
            }
        }
    }

    #[test]
    fn run_rejects_bad_schedules() {
        let mut sim = Simulation::new(flat(128), UpdateParams::auto(0.5, 0.0).unwrap(), 1, 4).unwrap();
        let mut sink = Vec::new();
        assert!(matches!(run(&mut sim, &[1, 1], &mut sink), Err(RunError::NotIncreasing { .. })));
        run(&mut sim, &[2], &mut sink).unwrap();
        assert!(matches!(run(&mut sim, &[1], &mut sink), Err(RunError::Behind { t: 1, now: 2 })));
    }

    #[test]
    fn initial_record_of_flat_surface() {
        let mut sim = Simulation::new(flat(128), UpdateParams::auto(0.5, 0.0).unwrap(), 1, 4).unwrap();
        let recs = run(&mut sim, &[0], &mut Vec::new()).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].t, 0);
        assert_eq!(recs[0].w2, 0.25);
    }
}
