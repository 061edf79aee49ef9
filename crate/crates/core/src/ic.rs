//! Initial-condition generators.
//!
//! | name               | `ω₀`                         | `j₀`                              | default amplitudes |
//! |--------------------|------------------------------|-----------------------------------|--------------------|
//! | `zero`             | 0                            | 0                                 |                    |
//! | `single_mode_b`    | 0                            | `-A_b cos x₂`, `b = A_b(sin x₂, 0)` | `A_b = 1`        |
//! | `orszag_tang_like` | `A_u (cos x₁ + cos x₂)`      | `A_b (4 cos 2x₁ + cos x₂)`        | `A_u = 2, A_b = 1` |
//! | `random_band`      | seeded, band `k_min..=k_max` | seeded, same band                 | `A_u = A_b = 1`    |
//!
//! The Orszag–Tang-like fields come from the stream function
//! `ψ = A_u (cos x₁ + cos x₂)` and the magnetic potential
//! `a = A_b (cos 2x₁ + cos x₂)`, with `u = (∂₂ψ, -∂₁ψ)` and `b = (∂₂a, -∂₁a)`.
//!
//! `random_band` draws every coefficient of `ω̂` and then of `ĵ` from a
//! ChaCha8 stream seeded with `seed`, with standard deviation `|k|^{-slope}`,
//! and rescales so that the root-mean-square velocity is `A_u` and the
//! root-mean-square magnetic field is `A_b`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;

use crate::config::{IcKind, IcSpec};
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::sampling::random_annulus;
use crate::solver::FlowState;
use crate::spectral::{SpectralField, FOUR_PI_SQ};

fn mode(grid: GridSpec, entries: &[(i64, i64, f64)]) -> SpectralField {
    let mut f = SpectralField::zeros(grid);
    for &(k1, k2, c) in entries {
        f.set_mode(k1, k2, Complex64::new(c, 0.0));
    }
    f
}

/// Rescales `f` so that the curl-inverted vector field has `L²` norm `target`.
fn normalize(f: SpectralField, target: f64) -> SpectralField {
    let energy = f.weighted_l2_sq(|k1, k2| {
        let k_sq = (k1 * k1 + k2 * k2) as f64;
        if k_sq == 0.0 {
            0.0
        } else {
            1.0 / k_sq
        }
    });
    if energy > 0.0 {
        f.scaled(target / energy.sqrt())
    } else {
        f
    }
}

pub fn make_initial_condition(spec: &IcSpec, seed: u64, grid: GridSpec, beta: f64) -> Result<FlowState> {
    for (what, v) in [("ic.amplitude_u", spec.amplitude_u), ("ic.amplitude_b", spec.amplitude_b)] {
        if let Some(a) = v {
            if !a.is_finite() {
                return Err(Error::Config(format!("{what} must be finite, got {a}")));
            }
        }
    }
    let (omega, j) = match spec.kind {
        IcKind::Zero => (SpectralField::zeros(grid), SpectralField::zeros(grid)),
        IcKind::SingleModeB => {
            let ab = spec.amplitude_b.unwrap_or(1.0);
            (SpectralField::zeros(grid), mode(grid, &[(0, 1, -0.5 * ab)]))
        }
        IcKind::OrszagTangLike => {
            if grid.dealias_cutoff() < 2.0 {
                return Err(Error::Config(format!(
                    "orszag_tang_like needs wavenumber 2 below the dealias cutoff {}",
                    grid.dealias_cutoff()
                )));
            }
            let au = spec.amplitude_u.unwrap_or(2.0);
            let ab = spec.amplitude_b.unwrap_or(1.0);
            (mode(grid, &[(1, 0, 0.5 * au), (0, 1, 0.5 * au)]), mode(grid, &[(2, 0, 2.0 * ab), (0, 1, 0.5 * ab)]))
        }
        IcKind::RandomBand => {
            let (k_min, k_max) = (spec.k_min, spec.k_max);
            if !(k_min.is_finite() && k_max.is_finite() && k_min >= 0.0 && k_min <= k_max) {
                return Err(Error::Config(format!("need 0 <= ic.k_min <= ic.k_max, got {k_min}, {k_max}")));
            }
            if k_max > grid.dealias_cutoff() {
                return Err(Error::Config(format!(
                    "ic.k_max = {k_max} exceeds the dealias cutoff {}",
                    grid.dealias_cutoff()
                )));
            }
            if !spec.slope.is_finite() {
                return Err(Error::Config(format!("ic.slope must be finite, got {}", spec.slope)));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let slope = spec.slope;
            let w = random_annulus(grid, k_min.max(1.0), k_max, &mut rng, |r| r.powf(-slope));
            let j = random_annulus(grid, k_min.max(1.0), k_max, &mut rng, |r| r.powf(-slope));
            let rms = FOUR_PI_SQ.sqrt();
            (normalize(w, rms * spec.amplitude_u.unwrap_or(1.0)), normalize(j, rms * spec.amplitude_b.unwrap_or(1.0)))
        }
    };
    FlowState::new(omega, j, beta)
}
