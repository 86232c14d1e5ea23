//! Random words for stochastic acceptance.
//!
//! Each stream interleaves [`LANES`] xoshiro256++ generators and emits their
//! outputs round-robin, so bulk fills vectorize. Stream `i` of a set starts
//! `i` long jumps (2^192 draws) after the seed state and its lanes are one
//! jump (2^128 draws) apart, which keeps every lane of every stream disjoint.
//!
//! A word `ξ_r` has each bit set independently with probability `r`:
//! * `r = 1/2` is one raw draw;
//! * dyadic `r = m / 2^k` combines `k` draws with AND/OR ([`DyadicPlan`]);
//! * any other `r` thresholds one draw per bit ([`Threshold`]).

use serde::{Deserialize, Serialize};

use crate::word::Word;

pub const LANES: usize = 8;

/// Longest dyadic expansion turned into a plan.
pub const MAX_DYADIC_WORDS: u32 = 16;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RngError {
    #[error("probability {0} is outside the open interval (0, 1)")]
    OutOfRange(f64),
    #[error("{r} has no binary expansion of at most {max_words} digits; use arbitrary mode")]
    NotDyadic { r: f64, max_words: u32 },
    #[error("stream set needs at least one stream")]
    NoStreams,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Scalar xoshiro256++, used to seed and jump the lanes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Xoshiro256pp {
    s: [u64; 4],
}

impl Xoshiro256pp {
    const JUMP: [u64; 4] =
        [0x180e_c6d3_3cfd_0aba, 0xd5a6_1266_f0c9_392c, 0xa958_2618_e03f_c9aa, 0x39ab_dc45_29b1_661c];
    const LONG_JUMP: [u64; 4] =
        [0x76e1_5d3e_fefd_cbbf, 0xc500_4e44_1c52_2fb3, 0x7771_0069_854e_e241, 0x3910_9bb0_2acb_e635];

    pub fn from_state(s: [u64; 4]) -> Self {
        assert!(s != [0; 4], "xoshiro state must not be all zero");
        Xoshiro256pp { s }
    }

    /// Expands a 64-bit seed with SplitMix64.
    pub fn seed_from_u64(seed: u64) -> Self {
        let mut sm = seed;
        let s = [splitmix64(&mut sm), splitmix64(&mut sm), splitmix64(&mut sm), splitmix64(&mut sm)];
        Xoshiro256pp { s }
    }

    pub fn state(&self) -> [u64; 4] {
        self.s
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let s = &mut self.s;
        let out = s[0].wrapping_add(s[3]).rotate_left(23).wrapping_add(s[0]);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        out
    }

    fn apply_jump(&mut self, poly: &[u64; 4]) {
        let mut acc = [0u64; 4];
        for &word in poly {
            for b in 0..64 {
                if (word >> b) & 1 == 1 {
                    for (a, s) in acc.iter_mut().zip(self.s) {
                        *a ^= s;
                    }
                }
                self.next_u64();
            }
        }
        self.s = acc;
    }

    /// Advances by 2^128 draws.
    pub fn jump(&mut self) {
        self.apply_jump(&Self::JUMP);
    }

    /// Advances by 2^192 draws.
    pub fn long_jump(&mut self) {
        self.apply_jump(&Self::LONG_JUMP);
    }
}

/// Serializable position of a [`RandomStream`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamState {
    pub lanes: [[u64; 4]; LANES],
    pub buffer: [u64; LANES],
    pub cursor: u8,
    pub position: u64,
}

/// One independent stream of uniform 64-bit words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RandomStream {
    // structure-of-arrays: s[k][lane]
    s: [[u64; LANES]; 4],
    buf: [u64; LANES],
    cursor: usize,
    position: u64,
}

impl RandomStream {
    /// Stream whose lane `l` is `base` jumped `l` times.
    pub fn from_base(base: Xoshiro256pp) -> Self {
        let mut s = [[0u64; LANES]; 4];
        let mut lane = base;
        for l in 0..LANES {
            for k in 0..4 {
                s[k][l] = lane.s[k];
            }
            lane.jump();
        }
        RandomStream { s, buf: [0; LANES], cursor: LANES, position: 0 }
    }

    /// Words consumed so far.
    pub fn position(&self) -> u64 {
        self.position
    }

    #[inline(always)]
    fn step(&mut self, out: &mut [u64; LANES]) {
        let [s0, s1, s2, s3] = &mut self.s;
        for l in 0..LANES {
            out[l] = s0[l].wrapping_add(s3[l]).rotate_left(23).wrapping_add(s0[l]);
            let t = s1[l] << 17;
            s2[l] ^= s0[l];
            s3[l] ^= s1[l];
            s1[l] ^= s2[l];
            s0[l] ^= s3[l];
            s2[l] ^= t;
            s3[l] = s3[l].rotate_left(45);
        }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        if self.cursor == LANES {
            let mut b = [0u64; LANES];
            self.step(&mut b);
            self.buf = b;
            self.cursor = 0;
        }
        let v = self.buf[self.cursor];
        self.cursor += 1;
        self.position += 1;
        v
    }

    /// Same words as `out.len()` calls to [`next_u64`](Self::next_u64).
    pub fn fill(&mut self, out: &mut [u64]) {
        self.position += out.len() as u64;
        let buffered = (LANES - self.cursor).min(out.len());
        out[..buffered].copy_from_slice(&self.buf[self.cursor..self.cursor + buffered]);
        self.cursor += buffered;
        let mut chunks = out[buffered..].chunks_exact_mut(LANES);
        for chunk in &mut chunks {
            let chunk: &mut [u64; LANES] = chunk.try_into().expect("exact chunk");
            self.step(chunk);
        }
        let rem = chunks.into_remainder();
        if !rem.is_empty() {
            let mut b = [0u64; LANES];
            self.step(&mut b);
            self.buf = b;
            rem.copy_from_slice(&b[..rem.len()]);
            self.cursor = rem.len();
        }
    }

    /// Fills `out` with threshold words: bit `i` of a word is set iff the
    /// `i`-th of its `W::BITS` draws passes `t`. Consumes and decides exactly
    /// as drawing the words one at a time with [`xi_threshold`].
    pub fn fill_threshold<W: Word>(&mut self, t: Threshold, out: &mut [W]) {
        let total = out.len() * W::BITS as usize;
        self.position += total as u64;
        if self.cursor == LANES {
            // each step decides one byte of the output
            let bytes = W::BITS as usize / 8;
            let mut masks = [0u8; 64];
            for chunk in out.chunks_mut(masks.len() / bytes) {
                let m = &mut masks[..chunk.len() * bytes];
                self.threshold_masks(t.0, m);
                for (w, b) in chunk.iter_mut().zip(m.chunks_exact(bytes)) {
                    let mut le = [0u8; 8];
                    le[..bytes].copy_from_slice(b);
                    *w = W::from_low_bits(u64::from_le_bytes(le));
                }
            }
            return;
        }
        let mut sink = BitSink { out, idx: 0, acc: 0, n: 0 };
        let buffered = (LANES - self.cursor).min(total);
        for &d in &self.buf[self.cursor..self.cursor + buffered] {
            sink.push(t.accept(d) as u64, 1);
        }
        self.cursor += buffered;
        let mut steps = (total - buffered) / LANES;
        let mut masks = [0u8; 64];
        while steps > 0 {
            let c = steps.min(masks.len());
            self.threshold_masks(t.0, &mut masks[..c]);
            for chunk in masks[..c].chunks(8) {
                let mut bytes = [0u8; 8];
                bytes[..chunk.len()].copy_from_slice(chunk);
                sink.push(u64::from_le_bytes(bytes), 8 * chunk.len() as u32);
            }
            steps -= c;
        }
        let rem = (total - buffered) % LANES;
        if rem > 0 {
            let mut b = [0u64; LANES];
            self.step(&mut b);
            self.buf = b;
            for &d in &b[..rem] {
                sink.push(t.accept(d) as u64, 1);
            }
            self.cursor = rem;
        }
        debug_assert_eq!((sink.idx, sink.n), (sink.out.len(), 0));
    }

    /// One byte per generator step, bit `l` set iff lane `l` passes.
    #[cfg(all(target_arch = "x86_64", target_feature = "avx512f"))]
    fn threshold_masks(&mut self, threshold: u64, out: &mut [u8]) {
        // SAFETY: the build enables avx512f.
        unsafe { self.threshold_masks_avx512(threshold, out) }
    }

    #[cfg(all(target_arch = "x86_64", target_feature = "avx512f"))]
    #[target_feature(enable = "avx512f")]
    fn threshold_masks_avx512(&mut self, threshold: u64, out: &mut [u8]) {
        use std::arch::x86_64::*;
        let [p0, p1, p2, p3] = &mut self.s;
        // SAFETY: each lane array is exactly 64 bytes.
        let (mut s0, mut s1, mut s2, mut s3) = unsafe {
            (
                _mm512_loadu_si512(p0.as_ptr().cast()),
                _mm512_loadu_si512(p1.as_ptr().cast()),
                _mm512_loadu_si512(p2.as_ptr().cast()),
                _mm512_loadu_si512(p3.as_ptr().cast()),
            )
        };
        // (d >> 11) < threshold  <=>  d <= (threshold << 11) - 1, and no draw
        // passes a zero threshold
        let bound = _mm512_set1_epi64((threshold << 11).wrapping_sub(1) as i64);
        let live: __mmask8 = if threshold == 0 { 0 } else { 0xff };
        for o in out {
            let r = _mm512_add_epi64(_mm512_rol_epi64::<23>(_mm512_add_epi64(s0, s3)), s0);
            *o = _mm512_mask_cmple_epu64_mask(live, r, bound);
            let t = _mm512_slli_epi64::<17>(s1);
            let s3x = _mm512_xor_si512(s3, s1);
            let s2x = _mm512_ternarylogic_epi64::<0x96>(s2, s0, t);
            s1 = _mm512_ternarylogic_epi64::<0x96>(s1, s2, s0);
            s0 = _mm512_xor_si512(s0, s3x);
            s2 = s2x;
            s3 = _mm512_rol_epi64::<45>(s3x);
        }
        // SAFETY: as above.
        unsafe {
            _mm512_storeu_si512(p0.as_mut_ptr().cast(), s0);
            _mm512_storeu_si512(p1.as_mut_ptr().cast(), s1);
            _mm512_storeu_si512(p2.as_mut_ptr().cast(), s2);
            _mm512_storeu_si512(p3.as_mut_ptr().cast(), s3);
        }
    }

    #[cfg(not(all(target_arch = "x86_64", target_feature = "avx512f")))]
    fn threshold_masks(&mut self, threshold: u64, out: &mut [u8]) {
        let mut b = [0u64; LANES];
        for o in out {
            self.step(&mut b);
            *o = b.iter().enumerate().fold(0u8, |m, (l, &d)| m | (((d >> 11) < threshold) as u8) << l);
        }
    }

    pub fn state(&self) -> StreamState {
        let mut lanes = [[0u64; 4]; LANES];
        for (l, lane) in lanes.iter_mut().enumerate() {
            for (k, v) in lane.iter_mut().enumerate() {
                *v = self.s[k][l];
            }
        }
        StreamState { lanes, buffer: self.buf, cursor: self.cursor as u8, position: self.position }
    }

    pub fn from_state(state: &StreamState) -> Self {
        let mut s = [[0u64; LANES]; 4];
        for (l, lane) in state.lanes.iter().enumerate() {
            for (k, &v) in lane.iter().enumerate() {
                s[k][l] = v;
            }
        }
        RandomStream {
            s,
            buf: state.buffer,
            cursor: (state.cursor as usize).min(LANES),
            position: state.position,
        }
    }
}

/// Packs a bit stream LSB-first into consecutive words.
struct BitSink<'a, W> {
    out: &'a mut [W],
    idx: usize,
    acc: u128,
    n: u32,
}

impl<W: Word> BitSink<'_, W> {
    #[inline(always)]
    fn push(&mut self, bits: u64, count: u32) {
        self.acc |= (bits as u128) << self.n;
        self.n += count;
        while self.n >= W::BITS {
            self.out[self.idx] = W::from_low_bits(self.acc as u64);
            self.idx += 1;
            self.acc >>= W::BITS;
            self.n -= W::BITS;
        }
    }
}

/// Independent streams derived from one master seed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RngStreamSet {
    master_seed: u64,
    streams: Vec<RandomStream>,
}

impl RngStreamSet {
    /// Human-readable description of the parameterization, for run metadata.
    pub const DESCRIPTION: &'static str = "xoshiro256++ x8 interleaved lanes; seed expanded by \
        SplitMix64; stream i = seed state after i long jumps (2^192), lane l = stream state after \
        l jumps (2^128)";

    pub fn derive(master_seed: u64, n: usize) -> Result<Self, RngError> {
        if n == 0 {
            return Err(RngError::NoStreams);
        }
        let mut base = Xoshiro256pp::seed_from_u64(master_seed);
        let mut streams = Vec::with_capacity(n);
        for _ in 0..n {
            streams.push(RandomStream::from_base(base));
            base.long_jump();
        }
        Ok(RngStreamSet { master_seed, streams })
    }

    pub fn from_streams(master_seed: u64, streams: Vec<RandomStream>) -> Result<Self, RngError> {
        if streams.is_empty() {
            return Err(RngError::NoStreams);
        }
        Ok(RngStreamSet { master_seed, streams })
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn len(&self) -> usize {
        self.streams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.streams.is_empty()
    }

    pub fn stream(&self, i: usize) -> &RandomStream {
        &self.streams[i]
    }

    pub fn stream_mut(&mut self, i: usize) -> &mut RandomStream {
        &mut self.streams[i]
    }

    pub fn streams(&self) -> &[RandomStream] {
        &self.streams
    }

    pub fn streams_mut(&mut self) -> &mut [RandomStream] {
        &mut self.streams
    }
}

/// Convenience wrapper matching the `derive_streams(seed, n)` naming.
pub fn derive_streams(master_seed: u64, n: usize) -> Result<RngStreamSet, RngError> {
    RngStreamSet::derive(master_seed, n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CombineOp {
    And,
    Or,
}

/// AND/OR recipe realising `r = numerator / 2^bits` from `bits` fair words.
///
/// Horner evaluation from the least significant binary digit of `r`, which
/// is always 1: start with one fair word, then for each higher digit combine
/// the accumulator with a new fair word by OR (digit 1) or AND (digit 0).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DyadicPlan {
    numerator: u32,
    bits: u32,
    ops: Vec<CombineOp>,
}

impl DyadicPlan {
    pub fn numerator(&self) -> u32 {
        self.numerator
    }

    /// Number of fair words consumed, `k`.
    pub fn words(&self) -> usize {
        self.bits as usize
    }

    pub fn ops(&self) -> &[CombineOp] {
        &self.ops
    }

    pub fn target(&self) -> f64 {
        self.numerator as f64 / (1u64 << self.bits) as f64
    }

    /// Combines fair words `fair[0..k]`, `fair[0]` being the base word.
    #[inline]
    pub fn combine<W: Word>(&self, fair: &[W]) -> W {
        let mut acc = fair[0];
        for (op, &w) in self.ops.iter().zip(&fair[1..]) {
            acc = match op {
                CombineOp::And => acc & w,
                CombineOp::Or => acc | w,
            };
        }
        acc
    }

    /// Word from `k` consecutive raw draws.
    #[inline]
    pub fn from_draws<W: Word>(&self, draws: &[u64]) -> W {
        let mut acc = W::from_draw(draws[0]);
        for (op, &d) in self.ops.iter().zip(&draws[1..self.bits as usize]) {
            let w = W::from_draw(d);
            acc = match op {
                CombineOp::And => acc & w,
                CombineOp::Or => acc | w,
            };
        }
        acc
    }
}

/// Plan for `r` if its binary expansion ends within `max_words` digits.
pub fn dyadic_plan(r: f64, max_words: u32) -> Result<DyadicPlan, RngError> {
    if !(r > 0.0 && r < 1.0) {
        return Err(RngError::OutOfRange(r));
    }
    let max_words = max_words.min(31);
    for k in 1..=max_words {
        let scaled = r * (1u64 << k) as f64;
        if scaled.fract() == 0.0 {
            let m = scaled as u32;
            let ops = (0..k - 1)
                .map(|i| if (m >> (i + 1)) & 1 == 1 { CombineOp::Or } else { CombineOp::And })
                .collect();
            return Ok(DyadicPlan { numerator: m, bits: k, ops });
        }
    }
    Err(RngError::NotDyadic { r, max_words })
}

/// Integer form of `u < r` where `u` is the top 53 bits of a draw scaled to
/// `[0, 1)`: the bit is set iff `draw >> 11 < threshold`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Threshold(u64);

impl Threshold {
    pub fn new(r: f64) -> Self {
        let r = r.clamp(0.0, 1.0);
        Threshold((r * (1u64 << 53) as f64).ceil() as u64)
    }

    pub fn value(self) -> u64 {
        self.0
    }

    #[inline(always)]
    pub fn accept(self, draw: u64) -> bool {
        (draw >> 11) < self.0
    }

    /// Word from `W::BITS` consecutive draws, draw `i` deciding bit `i`.
    #[inline]
    pub fn from_draws<W: Word>(self, draws: &[u64]) -> W {
        let mut w = W::ZERO;
        for (i, &d) in draws[..W::BITS as usize].iter().enumerate() {
            w |= W::from_bool(self.accept(d)) << i as u32;
        }
        w
    }
}

/// `ξ_{1/2}`: one raw draw.
#[inline]
pub fn xi_half<W: Word>(stream: &mut RandomStream) -> W {
    W::from_draw(stream.next_u64())
}

pub fn xi_dyadic<W: Word>(stream: &mut RandomStream, plan: &DyadicPlan) -> W {
    let mut acc = W::from_draw(stream.next_u64());
    for op in plan.ops() {
        let w = W::from_draw(stream.next_u64());
        acc = match op {
            CombineOp::And => acc & w,
            CombineOp::Or => acc | w,
        };
    }
    acc
}

/// Always consumes `W::BITS` draws, whatever `r` is.
pub fn xi_arbitrary<W: Word>(stream: &mut RandomStream, r: f64) -> W {
    xi_threshold(stream, Threshold::new(r))
}

pub fn xi_threshold<W: Word>(stream: &mut RandomStream, t: Threshold) -> W {
    let mut w = [W::ZERO];
    stream.fill_threshold(t, &mut w);
    w[0]
}
