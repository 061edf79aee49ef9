//! Real and spectral fields on the periodic grid, the discrete Fourier pair
//! and the Fourier-multiplier operators used by the solver.
//!
//! Coefficients follow the Fourier-series convention
//! `f(x) = Σ_k c_k e^{i k·x}`, so `c_k = n⁻² Σ_x f(x) e^{-i k·x}`
//! approximates `(4π²)⁻¹ ∫ f e^{-i k·x} dx`.

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::GridSpec;

pub const FOUR_PI_SQ: f64 = 4.0 * PI * PI;

/// Spatial axis of a partial derivative.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X1,
    X2,
}

/// Order in which quadrature sums are accumulated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Reduction {
    /// Fixed left-to-right order; bitwise reproducible.
    #[default]
    Ordered,
    /// Parallel partial sums; faster on large grids, order not fixed.
    Parallel,
}

impl Reduction {
    pub fn from_deterministic(deterministic: bool) -> Self {
        if deterministic {
            Reduction::Ordered
        } else {
            Reduction::Parallel
        }
    }

    pub(crate) fn sum<F>(self, values: &[f64], f: F) -> f64
    where
        F: Fn(f64) -> f64 + Sync + Send,
    {
        match self {
            Reduction::Ordered => values.iter().map(|&v| f(v)).sum(),
            Reduction::Parallel => values.par_iter().map(|&v| f(v)).sum(),
        }
    }

    pub(crate) fn max<F>(self, values: &[f64], f: F) -> f64
    where
        F: Fn(f64) -> f64 + Sync + Send,
    {
        match self {
            Reduction::Ordered => values.iter().map(|&v| f(v)).fold(0.0, f64::max),
            Reduction::Parallel => values.par_iter().map(|&v| f(v)).reduce(|| 0.0, f64::max),
        }
    }
}

struct Plan {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

type PlanCache = (FftPlanner<f64>, HashMap<usize, Arc<Plan>>);

thread_local! {
    static PLANS: RefCell<PlanCache> =
        RefCell::new((FftPlanner::new(), HashMap::new()));
}

fn plan_for(n: usize) -> Arc<Plan> {
    PLANS.with(|cell| {
        let mut guard = cell.borrow_mut();
        let (planner, cache) = &mut *guard;
        if let Some(p) = cache.get(&n) {
            return p.clone();
        }
        let plan = Arc::new(Plan { forward: planner.plan_fft_forward(n), inverse: planner.plan_fft_inverse(n) });
        cache.insert(n, plan.clone());
        plan
    })
}

fn transpose_square(data: &mut [Complex64], n: usize) {
    for a in 0..n {
        for b in (a + 1)..n {
            data.swap(a * n + b, b * n + a);
        }
    }
}

/// Unnormalized 2D transform in place, rows then columns.
fn fft2(data: &mut [Complex64], n: usize, fft: &dyn Fft<f64>) {
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    fft.process_with_scratch(data, &mut scratch);
    transpose_square(data, n);
    fft.process_with_scratch(data, &mut scratch);
    transpose_square(data, n);
}

/// Samples of a real scalar field at the grid points.
#[derive(Clone, Debug, PartialEq)]
pub struct RealField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl RealField {
    pub fn zeros(grid: GridSpec) -> Self {
        Self { grid, values: vec![0.0; grid.len()] }
    }

    pub fn from_values(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::invalid(format!("expected {} samples, got {}", grid.len(), values.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput("real field"));
        }
        Ok(Self { grid, values })
    }

    /// Sample `f(x₁, x₂)` at every grid point.
    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = (0..grid.len())
            .map(|idx| {
                let (x1, x2) = grid.point(idx);
                f(x1, x2)
            })
            .collect();
        Self { grid, values }
    }

    pub(crate) fn from_raw(grid: GridSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    #[inline]
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::from_raw(self.grid, self.values.iter().map(|v| v * factor).collect())
    }

    pub fn forward(&self) -> Result<SpectralField> {
        forward(self)
    }
}

/// Quadrature `Lq` norm `(h² Σ |f|^q)^{1/q}`, or the grid maximum for `q = ∞`.
pub fn lq_norm(f: &RealField, q: f64) -> Result<f64> {
    lq_norm_with(f, q, Reduction::Ordered)
}

pub fn lq_norm_with(f: &RealField, q: f64, reduction: Reduction) -> Result<f64> {
    lq_norm_of_values(f.values(), f.grid().cell_area(), q, reduction)
}

pub(crate) fn lq_norm_of_values(values: &[f64], cell_area: f64, q: f64, reduction: Reduction) -> Result<f64> {
    if q.is_nan() || q < 1.0 {
        return Err(Error::invalid(format!("Lebesgue exponent must be >= 1, got {q}")));
    }
    if q.is_infinite() {
        return Ok(reduction.max(values, f64::abs));
    }
    if q == 2.0 {
        return Ok((cell_area * reduction.sum(values, |v| v * v)).sqrt());
    }
    if q == 1.0 {
        return Ok(cell_area * reduction.sum(values, f64::abs));
    }
    Ok((cell_area * reduction.sum(values, |v| v.abs().powf(q))).powf(1.0 / q))
}

/// Fourier coefficients of a real field on the integer lattice.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    grid: GridSpec,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: GridSpec) -> Self {
        Self { grid, coeffs: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    pub fn from_coeffs(grid: GridSpec, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::invalid(format!("expected {} coefficients, got {}", grid.len(), coeffs.len())));
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::NonFiniteInput("spectral field"));
        }
        Ok(Self { grid, coeffs })
    }

    pub(crate) fn from_raw(grid: GridSpec, coeffs: Vec<Complex64>) -> Self {
        debug_assert_eq!(coeffs.len(), grid.len());
        Self { grid, coeffs }
    }

    #[inline]
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    #[inline]
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    #[inline]
    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn coeff(&self, k1: i64, k2: i64) -> Complex64 {
        self.coeffs[self.grid.flat_index(k1, k2)]
    }

    /// Set `c_k` and `c_{-k} = conj(c_k)` together.
    pub fn set_mode(&mut self, k1: i64, k2: i64, value: Complex64) {
        let idx = self.grid.flat_index(k1, k2);
        let cdx = self.grid.flat_index(-k1, -k2);
        self.coeffs[idx] = value;
        self.coeffs[cdx] = value.conj();
        if idx == cdx {
            self.coeffs[idx].im = 0.0;
        }
    }

    pub fn mean_mode(&self) -> Complex64 {
        self.coeffs[0]
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.norm()))
    }

    /// Largest `|c_{-k} - conj(c_k)|` over the lattice.
    pub fn hermitian_defect(&self) -> f64 {
        let g = &self.grid;
        g.lattice()
            .filter(|&(_, k1, k2)| !g.touches_nyquist(k1, k2))
            .map(|(idx, _, _)| (self.coeffs[g.conjugate_index(idx)] - self.coeffs[idx].conj()).norm())
            .fold(0.0, f64::max)
    }

    /// Pointwise multiplication by a real symbol `m(k₁, k₂)`.
    pub fn apply_symbol(&self, symbol: impl Fn(i64, i64) -> f64) -> Self {
        let g = self.grid;
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(idx, &c)| {
                let (k1, k2) = g.wavevector(idx);
                c * symbol(k1, k2)
            })
            .collect();
        Self::from_raw(g, coeffs)
    }

    /// `(-Δ)^β`, symbol `|k|^{2β}` with the mean mode sent to zero.
    pub fn fractional_laplacian(&self, beta: f64) -> Result<Self> {
        check_exponent(beta)?;
        Ok(self.apply_symbol(|k1, k2| fractional_symbol(k1, k2, beta)))
    }

    /// `Λ^β = (-Δ)^{β/2}`, symbol `|k|^β`.
    pub fn lambda_power(&self, beta: f64) -> Result<Self> {
        check_exponent(beta)?;
        Ok(self.apply_symbol(|k1, k2| fractional_symbol(k1, k2, 0.5 * beta)))
    }

    /// `∂_axis`, symbol `i k_axis`. The unpaired Nyquist index is zeroed so
    /// the result stays the transform of a real field.
    pub fn partial_derivative(&self, axis: Axis) -> Self {
        let g = self.grid;
        let nyq = -((g.n() / 2) as i64);
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(idx, &c)| {
                let (k1, k2) = g.wavevector(idx);
                let k = match axis {
                    Axis::X1 => k1,
                    Axis::X2 => k2,
                };
                if k == nyq {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(-c.im * k as f64, c.re * k as f64)
                }
            })
            .collect();
        Self::from_raw(g, coeffs)
    }

    /// Zero every mode with `|k₁|` or `|k₂|` above the dealiasing cutoff.
    pub fn dealias(&self) -> Self {
        let mut out = self.clone();
        out.dealias_in_place();
        out
    }

    pub fn dealias_in_place(&mut self) {
        let g = self.grid;
        let cut = g.dealias_cutoff();
        for (idx, c) in self.coeffs.iter_mut().enumerate() {
            let (k1, k2) = g.wavevector(idx);
            if (k1.abs() as f64) > cut || (k2.abs() as f64) > cut {
                *c = Complex64::new(0.0, 0.0);
            }
        }
    }

    /// Divergence-free vector field whose scalar curl is this field:
    /// `û(k) = i (k₂, -k₁) ĉ(k) / |k|²`, `û(0) = 0`.
    ///
    /// The mean mode must vanish; modes touching the Nyquist index are
    /// dropped from the result.
    pub fn biot_savart(&self) -> Result<(SpectralField, SpectralField)> {
        let scale = self.max_abs().max(1.0);
        let mean = self.mean_mode().norm();
        if mean > 1e-12 * scale {
            return Err(Error::MeanMode { what: "curl field", magnitude: mean });
        }
        Ok(self.biot_savart_unchecked())
    }

    pub(crate) fn biot_savart_unchecked(&self) -> (SpectralField, SpectralField) {
        let g = self.grid;
        let zero = Complex64::new(0.0, 0.0);
        let mut u1 = vec![zero; g.len()];
        let mut u2 = vec![zero; g.len()];
        for (idx, &c) in self.coeffs.iter().enumerate() {
            let (k1, k2) = g.wavevector(idx);
            if (k1 == 0 && k2 == 0) || g.touches_nyquist(k1, k2) {
                continue;
            }
            let inv = 1.0 / (k1 * k1 + k2 * k2) as f64;
            // w = i c / |k|²
            let w = Complex64::new(-c.im * inv, c.re * inv);
            u1[idx] = w * k2 as f64;
            u2[idx] = -(w * k1 as f64);
        }
        (Self::from_raw(g, u1), Self::from_raw(g, u2))
    }

    /// `4π² Σ_k |c_k|²`, the squared `L²` norm by Parseval.
    pub fn l2_norm_sq(&self) -> f64 {
        FOUR_PI_SQ * self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>()
    }

    /// `4π² Σ_k m(k) |c_k|²` for a real weight `m`.
    pub fn weighted_l2_sq(&self, weight: impl Fn(i64, i64) -> f64) -> f64 {
        let g = self.grid;
        FOUR_PI_SQ
            * self
                .coeffs
                .iter()
                .enumerate()
                .map(|(idx, c)| {
                    let (k1, k2) = g.wavevector(idx);
                    weight(k1, k2) * c.norm_sqr()
                })
                .sum::<f64>()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::from_raw(self.grid, self.coeffs.iter().map(|c| c * factor).collect())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        same_grid(&self.grid, &other.grid)?;
        Ok(Self::from_raw(self.grid, self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect()))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        same_grid(&self.grid, &other.grid)?;
        Ok(Self::from_raw(self.grid, self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect()))
    }

    /// Real inner product `4π² Σ_k Re(conj(a_k) b_k) = ∫ a b dx`.
    pub fn inner(&self, other: &Self) -> Result<f64> {
        same_grid(&self.grid, &other.grid)?;
        Ok(FOUR_PI_SQ * self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| (a.conj() * b).re).sum::<f64>())
    }

    pub fn inverse(&self) -> RealField {
        inverse(self)
    }
}

/// `|k|^{2β}` with the value at `k = 0` fixed to zero.
#[inline]
pub fn fractional_symbol(k1: i64, k2: i64, beta: f64) -> f64 {
    let k_sq = k1 * k1 + k2 * k2;
    if k_sq == 0 {
        0.0
    } else if beta == 1.0 {
        k_sq as f64
    } else {
        (k_sq as f64).powf(beta)
    }
}

fn check_exponent(beta: f64) -> Result<()> {
    if !beta.is_finite() || beta < 0.0 {
        return Err(Error::invalid(format!("fractional exponent must be finite and >= 0, got {beta}")));
    }
    Ok(())
}

pub(crate) fn same_grid(a: &GridSpec, b: &GridSpec) -> Result<()> {
    if a != b {
        return Err(Error::invalid(format!("grid mismatch: n = {} vs n = {}", a.n(), b.n())));
    }
    Ok(())
}

/// Forward transform with the Fourier-series normalization.
pub fn forward(f: &RealField) -> Result<SpectralField> {
    if f.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput("forward transform input"));
    }
    Ok(forward_unchecked(f))
}

pub(crate) fn forward_unchecked(f: &RealField) -> SpectralField {
    let g = f.grid;
    let n = g.n();
    let plan = plan_for(n);
    let mut data: Vec<Complex64> = f.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft2(&mut data, n, plan.forward.as_ref());
    let norm = 1.0 / (n * n) as f64;
    for c in &mut data {
        *c *= norm;
    }
    SpectralField::from_raw(g, data)
}

/// Inverse transform, discarding the (round-off sized) imaginary part.
pub fn inverse(field: &SpectralField) -> RealField {
    inverse_with_imag(field).0
}

/// Inverse transform returning also `max |Im f(x)|` over the grid.
pub fn inverse_with_imag(field: &SpectralField) -> (RealField, f64) {
    let g = field.grid;
    let n = g.n();
    let plan = plan_for(n);
    let mut data = field.coeffs.clone();
    fft2(&mut data, n, plan.inverse.as_ref());
    let max_imag = data.iter().fold(0.0, |m: f64, c| m.max(c.im.abs()));
    (RealField::from_raw(g, data.into_iter().map(|c| c.re).collect()), max_imag)
}

/// Scalar curl `∂₁v₂ - ∂₂v₁` of a vector field given spectrally.
pub fn curl(v1: &SpectralField, v2: &SpectralField) -> Result<SpectralField> {
    v2.partial_derivative(Axis::X1).sub(&v1.partial_derivative(Axis::X2))
}

/// Divergence `∂₁v₁ + ∂₂v₂` of a vector field given spectrally.
pub fn divergence(v1: &SpectralField, v2: &SpectralField) -> Result<SpectralField> {
    v1.partial_derivative(Axis::X1).add(&v2.partial_derivative(Axis::X2))
}
