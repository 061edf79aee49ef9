//! Seeded random spectral fields.

use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;

use crate::grid::GridSpec;
use crate::spectral::SpectralField;

/// Random real field whose coefficients live on `r_min <= |k| <= r_max`.
///
/// Each retained mode gets independent standard-normal real and imaginary
/// parts scaled by `weight(|k|)`; the conjugate partner is filled in so the
/// field is real. The mean mode and Nyquist-touching modes stay zero. Modes
/// are visited in storage order, so a given RNG state always yields the
/// same field.
pub fn random_annulus<R: Rng + ?Sized>(
    grid: GridSpec,
    r_min: f64,
    r_max: f64,
    rng: &mut R,
    weight: impl Fn(f64) -> f64,
) -> SpectralField {
    let mut field = SpectralField::zeros(grid);
    for (_, k1, k2) in grid.lattice() {
        if !(k1 > 0 || (k1 == 0 && k2 > 0)) || grid.touches_nyquist(k1, k2) {
            continue;
        }
        let r = ((k1 * k1 + k2 * k2) as f64).sqrt();
        if r < r_min || r > r_max {
            continue;
        }
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        field.set_mode(k1, k2, Complex64::new(re, im) * weight(r));
    }
    field
}
