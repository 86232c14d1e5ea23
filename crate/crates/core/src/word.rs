//! Machine words used as bit vectors of lattice sites.

use std::fmt::Debug;
use std::ops::{BitAnd, BitAndAssign, BitOr, BitOrAssign, BitXor, BitXorAssign, Not, Shl, Shr};

/// An unsigned integer treated as a vector of `BITS` site bits, LSB first.
///
/// The engines are generic over this trait; lattices only accept 32- and
/// 64-bit words, the narrower widths exist so the row kernels can be tested
/// on tiny hand-checkable examples.
pub trait Word:
    Copy
    + Eq
    + Debug
    + Default
    + Send
    + Sync
    + 'static
    + BitAnd<Output = Self>
    + BitOr<Output = Self>
    + BitXor<Output = Self>
    + Not<Output = Self>
    + Shl<u32, Output = Self>
    + Shr<u32, Output = Self>
    + BitAndAssign
    + BitOrAssign
    + BitXorAssign
{
    const BITS: u32;
    const ZERO: Self;
    const ONES: Self;

    /// Word made from the top `BITS` bits of a 64-bit generator output.
    fn from_draw(draw: u64) -> Self;

    fn bit(self, i: u32) -> bool;

    fn single(i: u32) -> Self;

    fn from_bool(b: bool) -> Self;

    fn count_ones(self) -> u32;

    fn to_u64(self) -> u64;

    /// Word made from the low `BITS` bits of `bits`.
    fn from_low_bits(bits: u64) -> Self;

    fn write_le(self, out: &mut Vec<u8>);

    /// Reads a word from exactly `BITS / 8` little-endian bytes.
    fn read_le(bytes: &[u8]) -> Self;
}

macro_rules! impl_word {
    ($($t:ty),*) => {$(
        impl Word for $t {
            const BITS: u32 = <$t>::BITS;
            const ZERO: Self = 0;
            const ONES: Self = <$t>::MAX;

            #[inline(always)]
            fn from_draw(draw: u64) -> Self {
                (draw >> (64 - <$t>::BITS)) as $t
            }

            #[inline(always)]
            fn bit(self, i: u32) -> bool {
                (self >> i) & 1 == 1
            }

            #[inline(always)]
            fn single(i: u32) -> Self {
                1 << i
            }

            #[inline(always)]
            fn from_bool(b: bool) -> Self {
                b as $t
            }

            #[inline(always)]
            fn count_ones(self) -> u32 {
                <$t>::count_ones(self)
            }

            #[inline(always)]
            fn to_u64(self) -> u64 {
                self as u64
            }

            #[inline(always)]
            fn from_low_bits(bits: u64) -> Self {
                bits as $t
            }

            fn write_le(self, out: &mut Vec<u8>) {
                out.extend_from_slice(&self.to_le_bytes());
            }

            fn read_le(bytes: &[u8]) -> Self {
                let mut buf = [0u8; std::mem::size_of::<$t>()];
                buf.copy_from_slice(bytes);
                <$t>::from_le_bytes(buf)
            }
        }
    )*};
}

impl_word!(u8, u16, u32, u64);

/// Reads packed index `j` of a row stored LSB-first in words of type `W`.
#[inline]
pub fn row_bit<W: Word>(row: &[W], j: usize) -> bool {
    row[j / W::BITS as usize].bit((j % W::BITS as usize) as u32)
}

#[inline]
pub fn flip_row_bit<W: Word>(row: &mut [W], j: usize) {
    row[j / W::BITS as usize] ^= W::single((j % W::BITS as usize) as u32);
}

#[inline]
pub fn set_row_bit<W: Word>(row: &mut [W], j: usize, value: bool) {
    if row_bit(row, j) != value {
        flip_row_bit(row, j);
    }
}
