//! The periodic square grid `[0, 2π)²` and its integer frequency lattice.
//!
//! Physical samples and Fourier coefficients share the same row-major
//! layout: flat index `a * n + b`. In physical space `a` indexes `x₁` and
//! `b` indexes `x₂`; in Fourier space `a` and `b` hold the wrapped
//! wavenumbers `k₁` and `k₂` (index `m` maps to `m` for `m < n/2` and to
//! `m - n` otherwise), so every `kᵢ` lies in `[-n/2, n/2)`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

pub const DEFAULT_DEALIAS_FRACTION: f64 = 2.0 / 3.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    n: usize,
    dealias_fraction: f64,
}

impl GridSpec {
    pub fn new(n: usize) -> Result<Self> {
        Self::with_dealias(n, DEFAULT_DEALIAS_FRACTION)
    }

    pub fn with_dealias(n: usize, dealias_fraction: f64) -> Result<Self> {
        if n < 8 || !n.is_multiple_of(2) {
            return Err(Error::invalid(format!("grid size must be an even integer >= 8, got {n}")));
        }
        if !(dealias_fraction > 0.0 && dealias_fraction <= 1.0) {
            return Err(Error::invalid(format!("dealias fraction must lie in (0, 1], got {dealias_fraction}")));
        }
        Ok(Self { n, dealias_fraction })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n * self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dealias_fraction(&self) -> f64 {
        self.dealias_fraction
    }

    /// Grid spacing `h = 2π/n`.
    #[inline]
    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.n as f64
    }

    /// Quadrature weight `h²` of a single cell.
    #[inline]
    pub fn cell_area(&self) -> f64 {
        let h = self.spacing();
        h * h
    }

    /// Largest retained `|kᵢ|` under the dealiasing rule, as a real cutoff.
    pub fn dealias_cutoff(&self) -> f64 {
        self.dealias_fraction * (self.n / 2) as f64
    }

    /// Wrapped wavenumber of storage index `m`.
    #[inline]
    pub fn wavenumber(&self, m: usize) -> i64 {
        let half = self.n / 2;
        if m < half {
            m as i64
        } else {
            m as i64 - self.n as i64
        }
    }

    /// Storage index of wavenumber `k` (taken modulo `n`).
    #[inline]
    pub fn storage_index(&self, k: i64) -> usize {
        k.rem_euclid(self.n as i64) as usize
    }

    /// Flat index of the lattice point `(k₁, k₂)`.
    #[inline]
    pub fn flat_index(&self, k1: i64, k2: i64) -> usize {
        self.storage_index(k1) * self.n + self.storage_index(k2)
    }

    /// Wavevector stored at flat index `idx`.
    #[inline]
    pub fn wavevector(&self, idx: usize) -> (i64, i64) {
        (self.wavenumber(idx / self.n), self.wavenumber(idx % self.n))
    }

    /// Flat index of `-k` for the wavevector stored at `idx`.
    #[inline]
    pub fn conjugate_index(&self, idx: usize) -> usize {
        let (a, b) = (idx / self.n, idx % self.n);
        ((self.n - a) % self.n) * self.n + (self.n - b) % self.n
    }

    /// True when either component sits on the unpaired Nyquist index `-n/2`.
    #[inline]
    pub fn touches_nyquist(&self, k1: i64, k2: i64) -> bool {
        let nyq = -((self.n / 2) as i64);
        k1 == nyq || k2 == nyq
    }

    /// Iterator over `(flat index, k₁, k₂)` for the whole lattice.
    pub fn lattice(&self) -> impl Iterator<Item = (usize, i64, i64)> + '_ {
        (0..self.len()).map(move |idx| {
            let (k1, k2) = self.wavevector(idx);
            (idx, k1, k2)
        })
    }

    /// Physical coordinates `(x₁, x₂)` of sample `idx`.
    #[inline]
    pub fn point(&self, idx: usize) -> (f64, f64) {
        let h = self.spacing();
        ((idx / self.n) as f64 * h, (idx % self.n) as f64 * h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_small_or_odd_grids() {
        assert!(GridSpec::new(6).is_err());
        assert!(GridSpec::new(9).is_err());
        assert!(GridSpec::new(8).is_ok());
        assert!(GridSpec::with_dealias(16, 0.0).is_err());
        assert!(GridSpec::with_dealias(16, 1.5).is_err());
    }

    #[test]
    fn lattice_covers_half_open_range() {
        let g = GridSpec::new(8).unwrap();
        let ks: Vec<i64> = (0..8).map(|m| g.wavenumber(m)).collect();
        assert_eq!(ks, vec![0, 1, 2, 3, -4, -3, -2, -1]);
        for (idx, k1, k2) in g.lattice() {
            assert_eq!(g.flat_index(k1, k2), idx);
            let c = g.conjugate_index(idx);
            let (c1, c2) = g.wavevector(c);
            if !g.touches_nyquist(k1, k2) {
                assert_eq!((c1, c2), (-k1, -k2));
            }
        }
    }
}
