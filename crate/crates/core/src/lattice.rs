//! Lattice geometry and the non-local bit-plane representation of slopes.
//!
//! Every site `(x, y)` owns two slopes, `σx−(x, y) = h(x, y) − h(x−1, y)` and
//! `σy−(x, y) = h(x, y) − h(x, y−1)`, each either +1 or −1. The `+` slopes are
//! read from the neighbours: `σx+(x, y) = σx−(x+1, y)`, `σy+(x, y) = σy−(x, y+1)`.
//!
//! Slopes are grouped into four planes by axis and by checkerboard parity
//! `(x ⊕ y) ∧ 1`. A row of a plane holds `X/2` bits; the site with parity `π`
//! in row `y` at packed index `j` sits at `x = 2j + (π ⊕ (y ∧ 1))`. A set bit is
//! slope +1.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::word::{row_bit, set_row_bit, Word};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LatticeError {
    #[error("lattice dimensions {x}x{y} must both be even and y must be at least 2")]
    OddDimensions { x: usize, y: usize },
    #[error("x = {x} is not a positive multiple of 2*w = {}", 2 * w)]
    NotWordAligned { x: usize, w: u32 },
    #[error("unsupported word size {0}; use 32 or 64")]
    WordSize(u32),
    #[error("field word type has {found} bits but the config asks for w = {expected}")]
    WordTypeMismatch { expected: u32, found: u32 },
    #[error("height map is {found_x}x{found_y} but the lattice is {x}x{y}")]
    ShapeMismatch { x: usize, y: usize, found_x: usize, found_y: usize },
    #[error("height step of {step} along {axis} into site ({x}, {y}); steps must be +-1")]
    NonUnitStep { x: usize, y: usize, axis: Axis, step: i64 },
    #[error("slopes are not curl-free at plaquette ({x}, {y})")]
    Curl { x: usize, y: usize },
    #[error("{axis} slopes along line {index} sum to {sum}, expected 0")]
    Unbalanced { axis: Axis, index: usize, sum: i64 },
    #[error("plane {plane} has {found} words, expected {expected}")]
    PlaneLength { plane: usize, expected: usize, found: usize },
    #[error("tile codec needs dimensions divisible by 4, got {x}x{y}")]
    TileShape { x: usize, y: usize },
    #[error("expected {expected} tile words, got {found}")]
    TileCount { expected: usize, found: usize },
    #[error("malformed height text: {0}")]
    HeightText(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::X => "x",
            Axis::Y => "y",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Minus,
    Plus,
}

/// Checkerboard colour of a site, `(x ⊕ y) ∧ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Parity {
    Even = 0,
    Odd = 1,
}

impl Parity {
    #[inline]
    pub fn of_site(x: usize, y: usize) -> Parity {
        Parity::from_bit(((x ^ y) & 1) as u8)
    }

    #[inline]
    pub fn from_bit(bit: u8) -> Parity {
        if bit & 1 == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    #[inline]
    pub fn flip(self) -> Parity {
        match self {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
        }
    }

    #[inline]
    pub fn bit(self) -> usize {
        self as usize
    }

    /// Offset `x − 2j` of this sublattice's sites in row `y`. The x-neighbour
    /// planes need a one-bit shift exactly when this is 1.
    #[inline]
    pub fn x_offset(self, y: usize) -> usize {
        self.bit() ^ (y & 1)
    }
}

/// Index of a plane in storage and snapshot order: x/even, x/odd, y/even, y/odd.
#[inline]
pub fn plane_index(axis: Axis, parity: Parity) -> usize {
    match axis {
        Axis::X => parity.bit(),
        Axis::Y => 2 + parity.bit(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeConfig {
    x: usize,
    y: usize,
    w: u32,
}

impl LatticeConfig {
    pub const DEFAULT_WORD_BITS: u32 = 64;

    pub fn new(x: usize, y: usize, w: u32) -> Result<Self, LatticeError> {
        if w != 32 && w != 64 {
            return Err(LatticeError::WordSize(w));
        }
        if !x.is_multiple_of(2) || !y.is_multiple_of(2) || y < 2 {
            return Err(LatticeError::OddDimensions { x, y });
        }
        if x == 0 || !x.is_multiple_of(2 * w as usize) {
            return Err(LatticeError::NotWordAligned { x, w });
        }
        Ok(LatticeConfig { x, y, w })
    }

    pub fn square(l: usize, w: u32) -> Result<Self, LatticeError> {
        Self::new(l, l, w)
    }

    pub fn x(&self) -> usize {
        self.x
    }

    pub fn y(&self) -> usize {
        self.y
    }

    pub fn w(&self) -> u32 {
        self.w
    }

    pub fn sites(&self) -> usize {
        self.x * self.y
    }

    /// Bits per plane row, `X/2`.
    pub fn half_x(&self) -> usize {
        self.x / 2
    }

    pub fn words_per_row(&self) -> usize {
        self.x / (2 * self.w as usize)
    }

    pub fn words_per_plane(&self) -> usize {
        self.words_per_row() * self.y
    }
}

/// Upper-right corner of a plaquette `{x−1, x} × {y−1, y}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Plaquette {
    pub x: usize,
    pub y: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Imbalance {
    pub axis: Axis,
    pub index: usize,
    pub sum: i64,
}

/// Integer surface heights, row-major with `heights[y * X + x]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeightMap {
    x: usize,
    y: usize,
    heights: Vec<i64>,
    mean: f64,
}

impl HeightMap {
    pub fn new(x: usize, y: usize, heights: Vec<i64>) -> Result<Self, LatticeError> {
        if heights.len() != x * y || x == 0 || y == 0 {
            return Err(LatticeError::ShapeMismatch {
                x,
                y,
                found_x: heights.len(),
                found_y: 1,
            });
        }
        let mean = heights.iter().map(|&h| h as f64).sum::<f64>() / heights.len() as f64;
        Ok(HeightMap { x, y, heights, mean })
    }

    /// The flat surface `h(x, y) = (x + y) mod 2`.
    pub fn flat(x: usize, y: usize) -> Self {
        let heights = (0..y)
            .flat_map(|yy| (0..x).map(move |xx| ((xx + yy) % 2) as i64))
            .collect();
        HeightMap::new(x, y, heights).expect("non-empty shape")
    }

    pub fn x(&self) -> usize {
        self.x
    }

    pub fn y(&self) -> usize {
        self.y
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn as_slice(&self) -> &[i64] {
        &self.heights
    }

    /// Height with periodic reduction of both coordinates.
    pub fn get(&self, x: i64, y: i64) -> i64 {
        let xx = x.rem_euclid(self.x as i64) as usize;
        let yy = y.rem_euclid(self.y as i64) as usize;
        self.heights[yy * self.x + xx]
    }

    /// `Y` lines of `X` space-separated integers.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.heights.len() * 4);
        for row in self.heights.chunks(self.x) {
            let mut first = true;
            for h in row {
                if !first {
                    out.push(' ');
                }
                first = false;
                out.push_str(&h.to_string());
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, LatticeError> {
        let mut heights = Vec::new();
        let mut width = None;
        let mut rows = 0;
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let before = heights.len();
            for tok in line.split_whitespace() {
                let h = tok.parse::<i64>().map_err(|e| {
                    LatticeError::HeightText(format!("line {}: {tok:?}: {e}", lineno + 1))
                })?;
                heights.push(h);
            }
            let n = heights.len() - before;
            match width {
                None => width = Some(n),
                Some(w) if w != n => {
                    return Err(LatticeError::HeightText(format!(
                        "line {} has {n} values, expected {w}",
                        lineno + 1
                    )))
                }
                _ => {}
            }
            rows += 1;
        }
        let width = width.ok_or_else(|| LatticeError::HeightText("no rows".into()))?;
        HeightMap::new(width, rows, heights)
    }
}

/// Slopes of an X×Y periodic surface, stored as four bit-planes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlopeField<W: Word> {
    config: LatticeConfig,
    planes: [Vec<W>; 4],
    t_mcs: u64,
    phase: Parity,
}

impl<W: Word> SlopeField<W> {
    fn check_word(config: &LatticeConfig) -> Result<(), LatticeError> {
        if config.w() != W::BITS {
            return Err(LatticeError::WordTypeMismatch { expected: config.w(), found: W::BITS });
        }
        Ok(())
    }

    /// Flat initial condition `h(x, y) = (x + y) mod 2`: every even site is a
    /// local minimum. Starts at `t = 0` with the even sublattice next.
    pub fn new_flat(config: LatticeConfig) -> Result<Self, LatticeError> {
        Self::check_word(&config)?;
        let n = config.words_per_plane();
        // even sites have every "−" slope pointing down, odd sites up
        Ok(SlopeField {
            config,
            planes: [vec![W::ZERO; n], vec![W::ONES; n], vec![W::ZERO; n], vec![W::ONES; n]],
            t_mcs: 0,
            phase: Parity::Even,
        })
    }

    pub fn from_planes(
        config: LatticeConfig,
        planes: [Vec<W>; 4],
        t_mcs: u64,
        phase: Parity,
    ) -> Result<Self, LatticeError> {
        Self::check_word(&config)?;
        let expected = config.words_per_plane();
        for (plane, p) in planes.iter().enumerate() {
            if p.len() != expected {
                return Err(LatticeError::PlaneLength { plane, expected, found: p.len() });
            }
        }
        Ok(SlopeField { config, planes, t_mcs, phase })
    }

    pub fn pack_from_heights(
        config: LatticeConfig,
        heights: &HeightMap,
    ) -> Result<Self, LatticeError> {
        let (nx, ny) = (config.x(), config.y());
        if heights.x() != nx || heights.y() != ny {
            return Err(LatticeError::ShapeMismatch {
                x: nx,
                y: ny,
                found_x: heights.x(),
                found_y: heights.y(),
            });
        }
        let mut field = Self::new_flat(config)?;
        for y in 0..ny {
            for x in 0..nx {
                let h = heights.get(x as i64, y as i64);
                let dx = h - heights.get(x as i64 - 1, y as i64);
                let dy = h - heights.get(x as i64, y as i64 - 1);
                for (axis, step) in [(Axis::X, dx), (Axis::Y, dy)] {
                    if step.abs() != 1 {
                        return Err(LatticeError::NonUnitStep { x, y, axis, step });
                    }
                    field.set_sigma_minus(axis, x, y, step == 1);
                }
            }
        }
        Ok(field)
    }

    pub fn config(&self) -> &LatticeConfig {
        &self.config
    }

    pub fn t_mcs(&self) -> u64 {
        self.t_mcs
    }

    /// Sublattice to be updated next.
    pub fn phase(&self) -> Parity {
        self.phase
    }

    pub(crate) fn advance_phase(&mut self) {
        if self.phase == Parity::Odd {
            self.t_mcs += 1;
        }
        self.phase = self.phase.flip();
    }

    pub fn plane(&self, axis: Axis, parity: Parity) -> &[W] {
        &self.planes[plane_index(axis, parity)]
    }

    pub fn planes(&self) -> &[Vec<W>; 4] {
        &self.planes
    }

    pub(crate) fn planes_mut(&mut self) -> &mut [Vec<W>; 4] {
        &mut self.planes
    }

    pub fn row(&self, axis: Axis, parity: Parity, y: usize) -> &[W] {
        let n = self.config.words_per_row();
        &self.plane(axis, parity)[y * n..(y + 1) * n]
    }

    pub(crate) fn row_mut(&mut self, axis: Axis, parity: Parity, y: usize) -> &mut [W] {
        let n = self.config.words_per_row();
        &mut self.planes[plane_index(axis, parity)][y * n..(y + 1) * n]
    }

    /// Raw bit of `σ{axis}−(x, y)`; coordinates must be in range.
    #[inline]
    pub fn sigma_minus(&self, axis: Axis, x: usize, y: usize) -> bool {
        row_bit(self.row(axis, Parity::of_site(x, y), y), x >> 1)
    }

    pub fn set_sigma_minus(&mut self, axis: Axis, x: usize, y: usize, up: bool) {
        let parity = Parity::of_site(x, y);
        set_row_bit(self.row_mut(axis, parity, y), x >> 1, up);
    }

    /// Slope value (+1 or −1) in the given direction, coordinates periodic.
    pub fn slope_at(&self, x: i64, y: i64, axis: Axis, direction: Direction) -> i8 {
        let (nx, ny) = (self.config.x() as i64, self.config.y() as i64);
        let (mut sx, mut sy) = (x, y);
        if direction == Direction::Plus {
            match axis {
                Axis::X => sx += 1,
                Axis::Y => sy += 1,
            }
        }
        let xx = sx.rem_euclid(nx) as usize;
        let yy = sy.rem_euclid(ny) as usize;
        if self.sigma_minus(axis, xx, yy) {
            1
        } else {
            -1
        }
    }

    /// Row-major `(σx−, σy−)` slope values (±1) for every site.
    pub fn expand(&self) -> (Vec<i8>, Vec<i8>) {
        let (nx, ny) = (self.config.x(), self.config.y());
        let half = self.config.half_x();
        let mut sx = vec![0i8; nx * ny];
        let mut sy = vec![0i8; nx * ny];
        for y in 0..ny {
            for parity in [Parity::Even, Parity::Odd] {
                let off = parity.x_offset(y);
                let rx = self.row(Axis::X, parity, y);
                let ry = self.row(Axis::Y, parity, y);
                for j in 0..half {
                    let i = y * nx + 2 * j + off;
                    sx[i] = if row_bit(rx, j) { 1 } else { -1 };
                    sy[i] = if row_bit(ry, j) { 1 } else { -1 };
                }
            }
        }
        (sx, sy)
    }

    /// Every plaquette whose four slopes do not close, in row-major order.
    pub fn curl_check(&self) -> Vec<Plaquette> {
        let (sx, sy) = self.expand();
        curl_violations(self.config.x(), self.config.y(), &sx, &sy)
    }

    /// Rows whose x slopes and columns whose y slopes do not sum to zero.
    pub fn balance_check(&self) -> Vec<Imbalance> {
        let (sx, sy) = self.expand();
        imbalances(self.config.x(), self.config.y(), &sx, &sy)
    }

    /// Integrates slopes into heights anchored at `h(0, 0) = 0`.
    pub fn reconstruct_heights(&self) -> Result<HeightMap, LatticeError> {
        let (sx, sy) = self.expand();
        integrate_slopes(self.config.x(), self.config.y(), &sx, &sy)
    }

    /// FNV-1a over the serialized planes, time and phase.
    pub fn checksum(&self) -> u64 {
        let mut hash = 0xcbf2_9ce4_8422_2325u64;
        let mut eat = |b: u8| {
            hash ^= b as u64;
            hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
        };
        let mut buf = Vec::with_capacity(8);
        for plane in &self.planes {
            for w in plane {
                buf.clear();
                w.write_le(&mut buf);
                buf.iter().for_each(|&b| eat(b));
            }
        }
        self.t_mcs.to_le_bytes().iter().for_each(|&b| eat(b));
        eat(self.phase as u8);
        hash
    }
}

pub(crate) fn curl_violations(nx: usize, ny: usize, sx: &[i8], sy: &[i8]) -> Vec<Plaquette> {
    let mut out = Vec::new();
    for y in 0..ny {
        let ym = (y + ny - 1) % ny;
        for x in 0..nx {
            let xm = (x + nx - 1) % nx;
            let lhs = sx[y * nx + x] - sx[ym * nx + x];
            let rhs = sy[y * nx + x] - sy[y * nx + xm];
            if lhs != rhs {
                out.push(Plaquette { x, y });
            }
        }
    }
    out
}

pub(crate) fn imbalances(nx: usize, ny: usize, sx: &[i8], sy: &[i8]) -> Vec<Imbalance> {
    let v = |s: i8| s as i64;
    let mut out = Vec::new();
    for y in 0..ny {
        let sum: i64 = sx[y * nx..(y + 1) * nx].iter().map(|&b| v(b)).sum();
        if sum != 0 {
            out.push(Imbalance { axis: Axis::X, index: y, sum });
        }
    }
    for x in 0..nx {
        let sum: i64 = (0..ny).map(|y| v(sy[y * nx + x])).sum();
        if sum != 0 {
            out.push(Imbalance { axis: Axis::Y, index: x, sum });
        }
    }
    out
}

pub(crate) fn integrate_slopes(
    nx: usize,
    ny: usize,
    sx: &[i8],
    sy: &[i8],
) -> Result<HeightMap, LatticeError> {
    if let Some(p) = curl_violations(nx, ny, sx, sy).first() {
        return Err(LatticeError::Curl { x: p.x, y: p.y });
    }
    // curl-freeness makes every row (column) sum equal, so one of each suffices
    let v = |s: i8| s as i64;
    let row0: i64 = sx[..nx].iter().map(|&b| v(b)).sum();
    if row0 != 0 {
        return Err(LatticeError::Unbalanced { axis: Axis::X, index: 0, sum: row0 });
    }
    let col0: i64 = (0..ny).map(|y| v(sy[y * nx])).sum();
    if col0 != 0 {
        return Err(LatticeError::Unbalanced { axis: Axis::Y, index: 0, sum: col0 });
    }
    let mut h = vec![0i64; nx * ny];
    for x in 1..nx {
        h[x] = h[x - 1] + v(sx[x]);
    }
    for y in 1..ny {
        for x in 0..nx {
            h[y * nx + x] = h[(y - 1) * nx + x] + v(sy[y * nx + x]);
        }
    }
    HeightMap::new(nx, ny, h)
}
