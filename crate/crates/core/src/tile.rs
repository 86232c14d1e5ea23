//! Local 4×4 tile encoding: one 32-bit word per tile, two bits per site.
//!
//! Tiles are laid out row-major over the lattice and sites row-major within a
//! tile. Site `s = 4·ty + tx` of a tile stores σx− in bit `2s` and σy− in bit
//! `2s + 1`, with the same 1 ↔ +1 convention as the bit-planes.

use crate::lattice::{Axis, LatticeError, Parity, SlopeField};
use crate::reference::ScalarField;
use crate::word::Word;

/// A 4×4 block of sites in the local encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct LocalTileWord(pub u32);

impl LocalTileWord {
    /// Slope bits `(σx−, σy−)` of tile-local site `(tx, ty)`.
    pub fn site(self, tx: usize, ty: usize) -> (bool, bool) {
        let s = 2 * (4 * ty + tx);
        ((self.0 >> s) & 1 == 1, (self.0 >> (s + 1)) & 1 == 1)
    }

    pub fn with_site(self, tx: usize, ty: usize, x_up: bool, y_up: bool) -> Self {
        let s = 2 * (4 * ty + tx);
        let cleared = self.0 & !(0b11 << s);
        LocalTileWord(cleared | (x_up as u32) << s | (y_up as u32) << (s + 1))
    }
}

fn check_shape(x: usize, y: usize) -> Result<(), LatticeError> {
    if !x.is_multiple_of(4) || !y.is_multiple_of(4) {
        return Err(LatticeError::TileShape { x, y });
    }
    Ok(())
}

fn encode_with(
    nx: usize,
    ny: usize,
    slopes: impl Fn(usize, usize) -> (bool, bool),
) -> Result<Vec<LocalTileWord>, LatticeError> {
    check_shape(nx, ny)?;
    let mut out = Vec::with_capacity(nx * ny / 16);
    for by in 0..ny / 4 {
        for bx in 0..nx / 4 {
            let mut t = LocalTileWord::default();
            for ty in 0..4 {
                for tx in 0..4 {
                    let (x, y) = (4 * bx + tx, 4 * by + ty);
                    let (x_up, y_up) = slopes(x, y);
                    t = t.with_site(tx, ty, x_up, y_up);
                }
            }
            out.push(t);
        }
    }
    Ok(out)
}

fn decode_with(
    nx: usize,
    ny: usize,
    tiles: &[LocalTileWord],
    mut set: impl FnMut(usize, usize, bool, bool),
) -> Result<(), LatticeError> {
    check_shape(nx, ny)?;
    let expected = nx * ny / 16;
    if tiles.len() != expected {
        return Err(LatticeError::TileCount { expected, found: tiles.len() });
    }
    let per_row = nx / 4;
    for (i, t) in tiles.iter().enumerate() {
        let (bx, by) = (i % per_row, i / per_row);
        for ty in 0..4 {
            for tx in 0..4 {
                let (x_up, y_up) = t.site(tx, ty);
                let (x, y) = (4 * bx + tx, 4 * by + ty);
                set(x, y, x_up, y_up);
            }
        }
    }
    Ok(())
}

/// Encodes the whole field as `(X/4)·(Y/4)` tile words.
pub fn encode_tiles<W: Word>(field: &SlopeField<W>) -> Result<Vec<LocalTileWord>, LatticeError> {
    encode_with(field.config().x(), field.config().y(), |x, y| {
        (field.sigma_minus(Axis::X, x, y), field.sigma_minus(Axis::Y, x, y))
    })
}

/// Writes tile words back into the bit-planes of `field`, keeping its clock.
pub fn decode_tiles<W: Word>(
    field: &mut SlopeField<W>,
    tiles: &[LocalTileWord],
) -> Result<(), LatticeError> {
    let (nx, ny) = (field.config().x(), field.config().y());
    decode_with(nx, ny, tiles, |x, y, x_up, y_up| {
        field.set_sigma_minus(Axis::X, x, y, x_up);
        field.set_sigma_minus(Axis::Y, x, y, y_up);
    })
}

pub fn encode_scalar_tiles(field: &ScalarField) -> Result<Vec<LocalTileWord>, LatticeError> {
    let nx = field.x();
    encode_with(nx, field.y(), |x, y| {
        (field.x_slopes()[y * nx + x] > 0, field.y_slopes()[y * nx + x] > 0)
    })
}

/// Builds a scalar field at time zero from tile words.
pub fn decode_scalar_tiles(
    x: usize,
    y: usize,
    tiles: &[LocalTileWord],
) -> Result<ScalarField, LatticeError> {
    let mut sx = vec![0i8; x * y];
    let mut sy = vec![0i8; x * y];
    decode_with(x, y, tiles, |xx, yy, x_up, y_up| {
        sx[yy * x + xx] = if x_up { 1 } else { -1 };
        sy[yy * x + xx] = if y_up { 1 } else { -1 };
    })?;
    ScalarField::from_slopes(x, y, sx, sy, 0, Parity::Even)
}
