//! Inhomogeneous Littlewood–Paley decomposition on the discrete lattice.
//!
//! The bank is built from a radial cutoff `χ` equal to 1 on `|ξ| <= 3/4`
//! and to 0 on `|ξ| >= 4/3`, joined by the `C^∞` step built from
//! `exp(-1/t)`. Then
//!
//! ```text
//! Ψ̂(ξ)   = χ(ξ)
//! Φ̂₀(ξ)  = χ(ξ/2) - χ(ξ)          supported in 3/4 <= |ξ| <= 8/3
//! Φ̂_j(ξ) = Φ̂₀(2^{-j} ξ)
//! ```
//!
//! and the sum telescopes to `χ(2^{-J-1} ξ)`, which is 1 below
//! `(3/4)·2^{J+1}`. The top shell `J_max` absorbs every lattice frequency
//! left over, `Φ̂_{J_max} = 1 - χ(2^{-J_max} ξ)`, so the finite bank
//! reconstructs any grid field exactly.

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::spectral::{self, lq_norm, lq_norm_with, RealField, Reduction, SpectralField};

/// Inner radius of the low-frequency ball cutoff's transition.
pub const BALL_INNER: f64 = 0.75;
/// Radius beyond which `Ψ̂` vanishes.
pub const BALL_OUTER: f64 = 4.0 / 3.0;
/// Annulus radii of `Φ̂₀`.
pub const ANNULUS_INNER: f64 = 0.75;
pub const ANNULUS_OUTER: f64 = 8.0 / 3.0;

/// Smooth step, 0 for `t <= 0` and 1 for `t >= 1`.
fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let a = (-1.0 / t).exp();
    let b = (-1.0 / (1.0 - t)).exp();
    a / (a + b)
}

/// The radial cutoff `χ(r)`; this is also `Ψ̂`.
pub fn ball_profile(r: f64) -> f64 {
    1.0 - smooth_step((r - BALL_INNER) / (BALL_OUTER - BALL_INNER))
}

/// The radial profile of `Φ̂₀`.
pub fn annulus_profile(r: f64) -> f64 {
    ball_profile(0.5 * r) - ball_profile(r)
}

#[inline]
fn radius(k1: i64, k2: i64) -> f64 {
    ((k1 * k1 + k2 * k2) as f64).sqrt()
}

/// Largest `j` with `(3/4)·2^j <= n/2`.
pub fn top_shell(n: usize) -> Option<usize> {
    let nyquist = (n / 2) as f64;
    if ANNULUS_INNER > nyquist {
        return None;
    }
    let mut j = 0usize;
    while ANNULUS_INNER * 2f64.powi(j as i32 + 1) <= nyquist {
        j += 1;
    }
    Some(j)
}

/// `Ψ̂` and `Φ̂_0 .. Φ̂_{J_max}` sampled on the lattice of one grid.
#[derive(Clone, Debug)]
pub struct DyadicFilterBank {
    grid: GridSpec,
    j_max: usize,
    psi_hat: Vec<f64>,
    phi_hat: Vec<Vec<f64>>,
}

impl DyadicFilterBank {
    pub fn new(grid: GridSpec) -> Result<Self> {
        let j_max = top_shell(grid.n())
            .ok_or_else(|| Error::invalid(format!("grid n = {} cannot host dyadic shell 0", grid.n())))?;
        let psi_hat = grid.lattice().map(|(_, k1, k2)| ball_profile(radius(k1, k2))).collect();
        let phi_hat = (0..=j_max)
            .map(|j| {
                let scale = 2f64.powi(-(j as i32));
                grid.lattice()
                    .map(|(_, k1, k2)| {
                        let r = radius(k1, k2) * scale;
                        if j == j_max {
                            1.0 - ball_profile(r)
                        } else {
                            annulus_profile(r)
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(Self { grid, j_max, psi_hat, phi_hat })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn j_max(&self) -> usize {
        self.j_max
    }

    pub fn psi_hat(&self) -> &[f64] {
        &self.psi_hat
    }

    pub fn phi_hat(&self, j: usize) -> &[f64] {
        &self.phi_hat[j]
    }

    /// Multiplier of `Δ_j` for `j` in `-1 ..= J_max`.
    pub fn shell(&self, j: i32) -> Result<&[f64]> {
        match j {
            -1 => Ok(&self.psi_hat),
            j if j >= 0 && (j as usize) <= self.j_max => Ok(&self.phi_hat[j as usize]),
            _ => Err(Error::invalid(format!("shell index {j} outside -1..={}", self.j_max))),
        }
    }

    pub fn shells(&self) -> impl Iterator<Item = i32> {
        -1..=(self.j_max as i32)
    }

    /// Nominal support radii `(inner, outer)` of shell `j`.
    pub fn support(&self, j: i32) -> (f64, f64) {
        if j < 0 {
            (0.0, BALL_OUTER)
        } else {
            let s = 2f64.powi(j);
            (ANNULUS_INNER * s, ANNULUS_OUTER * s)
        }
    }

    /// Radius below which the untruncated partition of unity holds.
    pub fn covered_radius(&self) -> f64 {
        ANNULUS_INNER * 2f64.powi(self.j_max as i32)
    }

    /// Largest `|Ψ̂ + Σ Φ̂_j - 1|` over lattice points with `|k| <= covered_radius`.
    pub fn partition_defect(&self) -> f64 {
        let cover = self.covered_radius();
        self.grid
            .lattice()
            .filter(|&(_, k1, k2)| radius(k1, k2) <= cover)
            .map(|(idx, _, _)| {
                let total: f64 = self.psi_hat[idx] + self.phi_hat.iter().map(|p| p[idx]).sum::<f64>();
                (total - 1.0).abs()
            })
            .fold(0.0, f64::max)
    }

    fn check_grid(&self, grid: &GridSpec) -> Result<()> {
        spectral::same_grid(&self.grid, grid)
    }

    /// `Δ_j` applied in Fourier space.
    pub fn project_spectral(&self, f: &SpectralField, j: i32) -> Result<SpectralField> {
        self.check_grid(f.grid())?;
        let mult = self.shell(j)?;
        let coeffs = f.coeffs().iter().zip(mult).map(|(c, m)| c * *m).collect();
        Ok(SpectralField::from_raw(*f.grid(), coeffs))
    }

    pub fn project_shell(&self, f: &RealField, j: i32) -> Result<RealField> {
        self.check_grid(f.grid())?;
        let spec = f.forward()?;
        Ok(self.project_spectral(&spec, j)?.inverse())
    }

    /// `S_j = Σ_{k=-1}^{j-1} Δ_k`; for `j > J_max` this is the identity.
    pub fn partial_sum_spectral(&self, f: &SpectralField, j: i32) -> Result<SpectralField> {
        self.check_grid(f.grid())?;
        if j < 0 {
            return Err(Error::invalid(format!("partial sum index must be >= 0, got {j}")));
        }
        let top = (j - 1).min(self.j_max as i32);
        let mult: Vec<f64> = (0..self.grid.len())
            .map(|idx| self.psi_hat[idx] + (0..=top).map(|k| self.phi_hat[k as usize][idx]).sum::<f64>())
            .collect();
        let coeffs = f.coeffs().iter().zip(&mult).map(|(c, m)| c * *m).collect();
        Ok(SpectralField::from_raw(*f.grid(), coeffs))
    }

    pub fn partial_sum(&self, f: &RealField, j: i32) -> Result<RealField> {
        Ok(self.partial_sum_spectral(&f.forward()?, j)?.inverse())
    }

    pub fn decompose(&self, f: &RealField) -> Result<ShellDecomposition> {
        self.check_grid(f.grid())?;
        let spec = f.forward()?;
        let blocks =
            self.shells().map(|j| self.project_spectral(&spec, j).map(|s| s.inverse())).collect::<Result<Vec<_>>>()?;
        Ok(ShellDecomposition { grid: *f.grid(), blocks })
    }

    /// `‖Δ_j f‖_{L^p}` for every shell, from a spectral field.
    pub fn block_norms(&self, f: &SpectralField, p: f64, reduction: Reduction) -> Result<Vec<f64>> {
        check_index(p, "Lebesgue exponent")?;
        self.shells()
            .map(|j| {
                let block = self.project_spectral(f, j)?;
                if p == 2.0 {
                    Ok(block.l2_norm_sq().sqrt())
                } else {
                    lq_norm_with(&block.inverse(), p, reduction)
                }
            })
            .collect()
    }

    /// `‖f‖_{B^s_{p,q}} = ‖ 2^{js} ‖Δ_j f‖_{L^p} ‖_{l^q(j >= -1)}`.
    pub fn besov_norm_spectral(
        &self,
        f: &SpectralField,
        s: f64,
        p: f64,
        q_index: f64,
        reduction: Reduction,
    ) -> Result<f64> {
        if !s.is_finite() {
            return Err(Error::invalid(format!("Besov smoothness must be finite, got {s}")));
        }
        check_index(q_index, "Besov summability index")?;
        let norms = self.block_norms(f, p, reduction)?;
        let weighted = self.shells().zip(norms).map(|(j, v)| 2f64.powf(j as f64 * s) * v);
        Ok(if q_index.is_infinite() {
            weighted.fold(0.0, f64::max)
        } else if q_index == 1.0 {
            weighted.sum()
        } else {
            weighted.map(|v| v.powf(q_index)).sum::<f64>().powf(1.0 / q_index)
        })
    }

    pub fn besov_norm(&self, f: &RealField, s: f64, p: f64, q_index: f64) -> Result<f64> {
        self.check_grid(f.grid())?;
        self.besov_norm_spectral(&f.forward()?, s, p, q_index, Reduction::Ordered)
    }

    /// True when every coefficient outside shell `j`'s nominal support is
    /// negligible against the field's largest coefficient.
    pub fn is_shell_supported(&self, f: &SpectralField, j: i32) -> bool {
        let (lo, hi) = self.support(j);
        let tol = 1e-13 * f.max_abs();
        self.grid.lattice().all(|(idx, k1, k2)| {
            let r = radius(k1, k2);
            (lo..=hi).contains(&r) || f.coeffs()[idx].norm() <= tol
        })
    }

    pub fn bernstein_check(&self, f: &RealField, alpha: f64, p: f64, q: f64, j: i32) -> Result<BernsteinReport> {
        self.check_grid(f.grid())?;
        if !alpha.is_finite() || alpha < 0.0 {
            return Err(Error::invalid(format!("alpha must be finite and >= 0, got {alpha}")));
        }
        check_index(p, "p")?;
        check_index(q, "q")?;
        if p > q {
            return Err(Error::invalid(format!("need p <= q, got p = {p}, q = {q}")));
        }
        if j < 0 || j as usize > self.j_max {
            return Err(Error::invalid(format!("Bernstein shell index must lie in 0..={}, got {j}", self.j_max)));
        }
        let spec = f.forward()?;
        if !self.is_shell_supported(&spec, j) {
            return Err(Error::invalid(format!("field is not spectrally supported in shell {j}")));
        }
        let derived = spec.fractional_laplacian(alpha)?.inverse();
        let lhs = lq_norm(&derived, q)?;
        let f_q = lq_norm(f, q)?;
        let f_p = lq_norm(f, p)?;
        let jf = j as f64;
        let lower_scale = 2f64.powf(2.0 * alpha * jf);
        let dim_gain = 2.0 * jf * (1.0 / p - 1.0 / q);
        let upper_scale = 2f64.powf(2.0 * alpha * jf + dim_gain);
        let ratio = |num: f64, den: f64| if den > 0.0 { Some(num / den) } else { None };
        Ok(BernsteinReport {
            lhs,
            f_q,
            f_p,
            lower_ratio: ratio(lhs, lower_scale * f_q),
            upper_ratio: ratio(lhs, upper_scale * f_p),
        })
    }
}

fn check_index(v: f64, what: &str) -> Result<()> {
    if v.is_nan() || v < 1.0 {
        return Err(Error::invalid(format!("{what} must lie in [1, ∞], got {v}")));
    }
    Ok(())
}

/// Ratios from one Bernstein-inequality evaluation. Ratios are `None` when
/// the field is zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BernsteinReport {
    /// `‖(-Δ)^α f‖_{L^q}`
    pub lhs: f64,
    pub f_q: f64,
    pub f_p: f64,
    /// `lhs / (2^{2αj} ‖f‖_q)`
    pub lower_ratio: Option<f64>,
    /// `lhs / (2^{2αj + 2j(1/p - 1/q)} ‖f‖_p)`
    pub upper_ratio: Option<f64>,
}

/// The blocks `Δ_j f` for `j = -1 ..= J_max`.
#[derive(Clone, Debug)]
pub struct ShellDecomposition {
    grid: GridSpec,
    blocks: Vec<RealField>,
}

impl ShellDecomposition {
    pub fn block(&self, j: i32) -> Option<&RealField> {
        usize::try_from(j + 1).ok().and_then(|i| self.blocks.get(i))
    }

    pub fn blocks(&self) -> &[RealField] {
        &self.blocks
    }

    pub fn reconstruct(&self) -> RealField {
        let mut total = vec![0.0; self.grid.len()];
        for b in &self.blocks {
            for (t, v) in total.iter_mut().zip(b.values()) {
                *t += v;
            }
        }
        RealField::from_raw(self.grid, total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::random_annulus;
    use crate::spectral::Axis;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rustfft::num_complex::Complex64;

    fn bank(n: usize) -> DyadicFilterBank {
        DyadicFilterBank::new(GridSpec::new(n).unwrap()).unwrap()
    }

    fn mode(g: GridSpec, k1: i64, k2: i64) -> SpectralField {
        let mut f = SpectralField::zeros(g);
        f.set_mode(k1, k2, Complex64::new(0.5, 0.0));
        f
    }

    #[test]
    fn top_shell_from_support_radii() {
        assert_eq!(top_shell(64), Some(5));
        assert_eq!(top_shell(8), Some(2));
        assert_eq!(top_shell(256), Some(7));
        assert_eq!(bank(64).j_max(), 5);
    }

    #[test]
    fn profiles_respect_supports_and_bounds() {
        for i in 0..=4000 {
            let r = i as f64 * 0.001;
            let psi = ball_profile(r);
            let phi = annulus_profile(r);
            assert!((0.0..=1.0).contains(&psi) && (0.0..=1.0).contains(&phi));
            if r >= BALL_OUTER {
                assert_eq!(psi, 0.0);
            }
            if r <= ANNULUS_INNER || r >= ANNULUS_OUTER {
                assert_eq!(phi, 0.0);
            }
        }
    }

    #[test]
    fn psi_is_one_at_origin_and_unit_frequency_splits_two_ways() {
        let b = bank(32);
        let g = *b.grid();
        assert_eq!(b.psi_hat()[0], 1.0);
        assert!((0..=b.j_max()).all(|j| b.phi_hat(j)[0] == 0.0));
        let idx = g.flat_index(1, 0);
        assert!((b.psi_hat()[idx] + b.phi_hat(0)[idx] - 1.0).abs() < 1e-15);
        assert!((1..=b.j_max()).all(|j| b.phi_hat(j)[idx] == 0.0));
    }

    #[test]
    fn shells_are_exact_dilations() {
        let b = bank(64);
        let g = *b.grid();
        for j in 0..b.j_max() {
            for (idx, k1, k2) in g.lattice() {
                let scaled = radius(k1, k2) * 2f64.powi(-(j as i32));
                assert_eq!(b.phi_hat(j)[idx], annulus_profile(scaled));
            }
        }
        // the catch-all top shell agrees with the dilation wherever the
        // next shell would not yet have started
        let top = b.j_max();
        let limit = ANNULUS_INNER * 2f64.powi(top as i32 + 1);
        for (idx, k1, k2) in g.lattice() {
            if radius(k1, k2) <= limit {
                let scaled = radius(k1, k2) * 2f64.powi(-(top as i32));
                assert_eq!(b.phi_hat(top)[idx], annulus_profile(scaled));
            }
        }
    }

    #[test]
    fn partition_of_unity() {
        for n in [8, 32, 64, 256] {
            assert!(bank(n).partition_defect() <= 1e-12);
        }
    }

    #[test]
    fn projection_of_constant_and_pure_mode() {
        let b = bank(32);
        let g = *b.grid();
        let one = RealField::from_fn(g, |_, _| 1.0);
        let low = b.project_shell(&one, -1).unwrap();
        assert!(low.values().iter().all(|v| (v - 1.0).abs() < 1e-14));
        for j in 0..=b.j_max() as i32 {
            assert!(b.project_shell(&one, j).unwrap().max_abs() < 1e-15);
        }
        let f = mode(g, 3, 4);
        for j in b.shells() {
            let norm = b.project_spectral(&f, j).unwrap().max_abs();
            if j == 1 || j == 2 {
                assert!(norm > 0.0);
            } else {
                assert_eq!(norm, 0.0, "shell {j}");
            }
        }
        let f = f.inverse();
        assert!(b.project_shell(&f, -2).is_err());
        assert!(b.project_shell(&f, b.j_max() as i32 + 1).is_err());
    }

    #[test]
    fn shells_far_apart_annihilate() {
        let b = bank(64);
        let g = *b.grid();
        let f = random_annulus(g, 0.0, 30.0, &mut ChaCha8Rng::seed_from_u64(1), |_| 1.0);
        for j in b.shells() {
            for l in b.shells() {
                if (j - l).abs() >= 2 {
                    let twice = b.project_spectral(&b.project_spectral(&f, l).unwrap(), j).unwrap();
                    assert_eq!(twice.max_abs(), 0.0);
                }
            }
        }
    }

    #[test]
    fn reconstruction_and_partial_sums() {
        let b = bank(64);
        let g = *b.grid();
        for seed in 0..5 {
            let spec = random_annulus(g, 0.0, 20.0, &mut ChaCha8Rng::seed_from_u64(seed), |_| 1.0);
            let f = spec.inverse();
            let rec = b.decompose(&f).unwrap().reconstruct();
            let scale = f.max_abs();
            let err = f.values().iter().zip(rec.values()).map(|(a, c)| (a - c).abs()).fold(0.0, f64::max);
            assert!(err <= 1e-10 * scale);

            let s0 = b.partial_sum(&f, 0).unwrap();
            let d = b.project_shell(&f, -1).unwrap();
            assert!(s0.values().iter().zip(d.values()).all(|(a, c)| (a - c).abs() <= 1e-14 * scale));

            let full = b.partial_sum(&f, b.j_max() as i32 + 1).unwrap();
            let err = f.values().iter().zip(full.values()).map(|(a, c)| (a - c).abs()).fold(0.0, f64::max);
            assert!(err <= 1e-10 * scale);
        }
        assert!(b.partial_sum(&RealField::zeros(g), -1).is_err());
    }

    #[test]
    fn partial_sum_of_pure_mode_is_contraction() {
        let b = bank(32);
        let g = *b.grid();
        let f = mode(g, 3, 4).inverse();
        let s1 = b.partial_sum(&f, 1).unwrap();
        // |k| = 5 lies outside Ψ̂'s support, so S_1 f = Δ_{-1} f vanishes
        assert!(s1.max_abs() < 1e-15);
        let s2 = b.partial_sum(&f, 2).unwrap();
        assert!(lq_norm(&s2, 2.0).unwrap() <= lq_norm(&f, 2.0).unwrap());
    }

    #[test]
    fn besov_examples() {
        let b = bank(32);
        let g = *b.grid();
        assert_eq!(b.besov_norm(&RealField::zeros(g), 1.0, 2.0, 1.0).unwrap(), 0.0);
        let one = RealField::from_fn(g, |_, _| 1.0);
        let four_pi_sq = spectral::FOUR_PI_SQ;
        for (s, p, q) in [(0.0, 2.0, 1.0), (1.5, 1.0, 2.0), (-0.5, 4.0, f64::INFINITY)] {
            let expect = 2f64.powf(-s) * four_pi_sq.powf(1.0 / p);
            let got = b.besov_norm(&one, s, p, q).unwrap();
            assert!((got - expect).abs() <= 1e-12 * expect, "{s} {p} {q}");
        }
        let f = mode(g, 3, 4).inverse();
        let got = b.besov_norm(&f, 0.0, 2.0, 1.0).unwrap();
        let idx = g.flat_index(3, 4);
        let (w1, w2) = (b.phi_hat(1)[idx], b.phi_hat(2)[idx]);
        assert!((w1 + w2 - 1.0).abs() < 1e-15);
        // ‖f‖₂ = π√2 for a unit-amplitude cosine
        let l2 = std::f64::consts::PI * 2f64.sqrt();
        assert!((got - (w1 + w2) * l2).abs() < 1e-12);
        assert!(b.besov_norm(&f, 0.0, 0.5, 1.0).is_err());
        assert!(b.besov_norm(&f, f64::NAN, 2.0, 1.0).is_err());
        assert!(b.besov_norm(&f, 0.0, 2.0, 0.0).is_err());
    }

    #[test]
    fn besov_l2_equivalence_bracket() {
        let b = bank(64);
        let g = *b.grid();
        for seed in 0..10 {
            let f = random_annulus(g, 0.0, 30.0, &mut ChaCha8Rng::seed_from_u64(seed), |r| 1.0 / (1.0 + r));
            let besov = b.besov_norm_spectral(&f, 0.0, 2.0, 2.0, Reduction::Ordered).unwrap();
            let ratio = besov / f.l2_norm_sq().sqrt();
            assert!((1.0 / 3f64.sqrt()..=3f64.sqrt()).contains(&ratio));
        }
    }

    #[test]
    fn projection_commutes_with_derivative() {
        let b = bank(32);
        let g = *b.grid();
        let f = random_annulus(g, 0.0, 10.0, &mut ChaCha8Rng::seed_from_u64(3), |_| 1.0);
        for j in b.shells() {
            for axis in [Axis::X1, Axis::X2] {
                let a = b.project_spectral(&f.partial_derivative(axis), j).unwrap();
                let c = b.project_spectral(&f, j).unwrap().partial_derivative(axis);
                let diff = a.sub(&c).unwrap().max_abs();
                assert!(diff <= 2.0 * f64::EPSILON * a.max_abs().max(1e-300));
            }
        }
    }

    #[test]
    fn bernstein_trivial_and_error_cases() {
        let b = bank(64);
        let g = *b.grid();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (lo, hi) = b.support(2);
        let f = random_annulus(g, lo, hi, &mut rng, |_| 1.0).inverse();
        let rep = b.bernstein_check(&f, 0.0, 2.0, 2.0, 2).unwrap();
        assert!((rep.lower_ratio.unwrap() - 1.0).abs() < 1e-12);
        assert!((rep.upper_ratio.unwrap() - 1.0).abs() < 1e-12);
        assert!(b.bernstein_check(&f, 0.5, 2.0, 2.0, 0).is_err());
        assert!(b.bernstein_check(&f, 0.5, 4.0, 2.0, 2).is_err());
        assert!(b.bernstein_check(&f, -1.0, 2.0, 2.0, 2).is_err());
        let zero = b.bernstein_check(&RealField::zeros(g), 1.0, 2.0, 2.0, 1).unwrap();
        assert!(zero.lower_ratio.is_none());
    }
}
