//! Gray-mapped square QAM with unit average symbol energy.
//!
//! Bits are consumed most-significant first; the first half of each symbol's
//! bits select the in-phase level, the second half the quadrature level.
//! Within a dimension, Gray word `0…0` maps to the most positive level, so
//! 4-QAM `00` is `(1 + j)/√2`.

use num_complex::Complex64;

use crate::error::{AfbmError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Constellation {
    order: usize,
}

impl Constellation {
    pub const QPSK: Constellation = Constellation { order: 4 };

    /// `order` must be an even power of two (4, 16, 64, ...).
    pub fn new(order: usize) -> Result<Self> {
        let bits = order.trailing_zeros() as usize;
        if order < 4 || !order.is_power_of_two() || bits % 2 != 0 {
            return Err(AfbmError::InvalidArgument(format!("QAM order must be 4, 16, 64, ...; got {order}")));
        }
        Ok(Self { order })
    }

    pub fn order(self) -> usize {
        self.order
    }

    pub fn bits_per_symbol(self) -> usize {
        self.order.trailing_zeros() as usize
    }

    fn levels(self) -> usize {
        1 << (self.bits_per_symbol() / 2)
    }

    fn scale(self) -> f64 {
        (2.0 * (self.order as f64 - 1.0) / 3.0).sqrt()
    }

    fn level_amplitude(self, gray: usize) -> f64 {
        let idx = gray_to_binary(gray);
        (self.levels() - 1) as f64 - 2.0 * idx as f64
    }

    fn nearest_gray(self, amplitude: f64) -> usize {
        let m = self.levels() as f64;
        let idx = (((m - 1.0) - amplitude) / 2.0).round().clamp(0.0, m - 1.0) as usize;
        idx ^ (idx >> 1)
    }

    pub fn points(self) -> Vec<Complex64> {
        (0..self.order)
            .map(|word| {
                let bits: Vec<u8> =
                    (0..self.bits_per_symbol()).rev().map(|b| ((word >> b) & 1) as u8).collect();
                self.map_symbol(&bits)
            })
            .collect()
    }

    fn map_symbol(self, bits: &[u8]) -> Complex64 {
        let half = self.bits_per_symbol() / 2;
        let word = |bs: &[u8]| bs.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize);
        let i = self.level_amplitude(word(&bits[..half]));
        let q = self.level_amplitude(word(&bits[half..]));
        Complex64::new(i, q) / self.scale()
    }

    pub fn map(self, bits: &[u8]) -> Result<Vec<Complex64>> {
        let bps = self.bits_per_symbol();
        if bits.len() % bps != 0 {
            return Err(AfbmError::InvalidArgument(format!(
                "bit count {} is not a multiple of {bps} bits per symbol",
                bits.len()
            )));
        }
        if bits.iter().any(|&b| b > 1) {
            return Err(AfbmError::InvalidArgument("bits must be 0 or 1".into()));
        }
        Ok(bits.chunks(bps).map(|c| self.map_symbol(c)).collect())
    }

    /// Hard nearest-neighbour decision back to bits.
    pub fn demap(self, symbols: &[Complex64]) -> Vec<u8> {
        let half = self.bits_per_symbol() / 2;
        let s = self.scale();
        let mut out = Vec::with_capacity(symbols.len() * self.bits_per_symbol());
        for z in symbols {
            for word in [self.nearest_gray(z.re * s), self.nearest_gray(z.im * s)] {
                out.extend((0..half).rev().map(|b| ((word >> b) & 1) as u8));
            }
        }
        out
    }

    /// Nearest constellation point for each input.
    pub fn decide(self, symbols: &[Complex64]) -> Vec<Complex64> {
        let bits = self.demap(symbols);
        self.map(&bits).expect("demapped bits have a whole number of symbols")
    }
}

fn gray_to_binary(mut g: usize) -> usize {
    let mut b = 0;
    while g != 0 {
        b ^= g;
        g >>= 1;
    }
    b
}
