//! Gray-mapped square QAM with unit average symbol energy.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Square QAM constellation of order 4, 16 or 64.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Qam {
    order: u32,
    bits_per_axis: u32,
}

impl Qam {
    pub fn new(order: u32) -> Result<Self> {
        let bits_per_axis = match order {
            4 => 1,
            16 => 2,
            64 => 3,
            _ => return Err(Error::invalid(format!("unsupported QAM order {order}; expected 4, 16 or 64"))),
        };
        Ok(Self { order, bits_per_axis })
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn bits_per_symbol(&self) -> usize {
        2 * self.bits_per_axis as usize
    }

    fn levels(&self) -> u32 {
        1 << self.bits_per_axis
    }

    /// Scale that brings the mean energy of the integer grid `{±1, ±3, ...}` to one.
    fn norm(&self) -> f64 {
        (2.0 * (self.order as f64 - 1.0) / 3.0).sqrt()
    }

    /// Amplitude of PAM level index `i`; index 0 is the most positive level.
    fn level(&self, i: u32) -> f64 {
        ((self.levels() - 1) as f64 - 2.0 * i as f64) / self.norm()
    }

    fn axis_map(&self, bits: &[u8]) -> f64 {
        let gray = bits.iter().fold(0u32, |acc, &b| (acc << 1) | u32::from(b & 1));
        self.level(gray_to_binary(gray))
    }

    fn axis_demap(&self, x: f64, out: &mut Vec<u8>) {
        let top = (self.levels() - 1) as f64;
        let idx = ((top - x * self.norm()) / 2.0).round().clamp(0.0, top) as u32;
        let gray = idx ^ (idx >> 1);
        for shift in (0..self.bits_per_axis).rev() {
            out.push(((gray >> shift) & 1) as u8);
        }
    }

    /// Maps bits (each 0 or 1) to symbols. The first half of every
    /// symbol's bit group drives the in-phase axis.
    pub fn map(&self, bits: &[u8]) -> Result<Vec<Complex64>> {
        let bps = self.bits_per_symbol();
        if !bits.len().is_multiple_of(bps) {
            return Err(Error::invalid(format!(
                "qam_map: {} bits is not a multiple of {bps}",
                bits.len()
            )));
        }
        let half = self.bits_per_axis as usize;
        Ok(bits
            .chunks_exact(bps)
            .map(|c| Complex64::new(self.axis_map(&c[..half]), self.axis_map(&c[half..])))
            .collect())
    }

    /// Nearest-neighbor hard decision.
    pub fn demap(&self, symbols: &[Complex64]) -> Vec<u8> {
        let mut bits = Vec::with_capacity(symbols.len() * self.bits_per_symbol());
        for s in symbols {
            self.axis_demap(s.re, &mut bits);
            self.axis_demap(s.im, &mut bits);
        }
        bits
    }

    /// All constellation points, in natural bit order.
    pub fn constellation(&self) -> Vec<Complex64> {
        let bps = self.bits_per_symbol();
        (0..self.order)
            .flat_map(|v| (0..bps).rev().map(move |s| ((v >> s) & 1) as u8))
            .collect::<Vec<_>>()
            .chunks_exact(bps)
            .map(|c| self.map(c).expect("whole symbol")[0])
            .collect()
    }
}

fn gray_to_binary(mut g: u32) -> u32 {
    let mut b = g;
    while g > 0 {
        g >>= 1;
        b ^= g;
    }
    b
}

/// Convenience wrapper over [`Qam::map`].
pub fn qam_map(order: u32, bits: &[u8]) -> Result<Vec<Complex64>> {
    Qam::new(order)?.map(bits)
}

/// Convenience wrapper over [`Qam::demap`].
pub fn qam_demap(order: u32, symbols: &[Complex64]) -> Result<Vec<u8>> {
    Ok(Qam::new(order)?.demap(symbols))
}
