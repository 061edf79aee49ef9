//! Time integration of the vorticity–current system
//!
//! ```text
//! ∂t ω + u·∇ω             = b·∇j
//! ∂t j + u·∇j + (-Δ)^β j  = b·∇ω + 2 ∂₁b₁(∂₂u₁ + ∂₁u₂) - 2 ∂₁u₁(∂₂b₁ + ∂₁b₂)
//! ```
//!
//! with `u`, `b` recovered from `ω`, `j` by Biot–Savart. The diffusion is
//! absorbed exactly by an integrating factor `e^{|k|^{2β} t}` and the
//! remaining tendencies are advanced with classical RK4 (Lawson's scheme).
//!
//! The stepper also integrates `Q(t) = ∫₀ᵗ ‖Λ^β b‖₂² dτ` with the same RK4
//! stages, so the magnetic dissipation entering the energy balance is
//! fourth-order accurate in time.

use log::warn;
use rustfft::num_complex::Complex64;

use crate::error::{Abort, AbortCause, Error, Result};
use crate::grid::GridSpec;
use crate::spectral::{forward_unchecked, fractional_symbol, same_grid, Axis, RealField, SpectralField, FOUR_PI_SQ};

/// Steps shorter than this abort the run.
pub const MIN_DT: f64 = 1e-12;
/// Guard added to the maximum signal speed in the CFL formula.
pub const CFL_EPSILON: f64 = 1e-12;

/// Full dynamical state in spectral space.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowState {
    /// `ω = ∇×u`
    pub omega_hat: SpectralField,
    /// `j = ∇×b`
    pub j_hat: SpectralField,
    pub t: f64,
    pub beta: f64,
    /// `∫₀ᵗ ‖Λ^β b‖₂² dτ`, advanced alongside the fields.
    pub magnetic_dissipation: f64,
}

/// Checks the diffusion exponent; values in `(0, 1]` are accepted with a warning.
pub fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta <= 2.0) {
        return Err(Error::invalid(format!("beta must lie in (0, 2], got {beta}")));
    }
    if beta <= 1.0 {
        warn!("beta = {beta} is outside the global-regularity range beta > 1");
    }
    Ok(())
}

impl FlowState {
    /// Builds a state at `t = 0`. Mean modes must be (numerically) zero and
    /// are then set to exactly zero.
    pub fn new(omega_hat: SpectralField, j_hat: SpectralField, beta: f64) -> Result<Self> {
        same_grid(omega_hat.grid(), j_hat.grid())?;
        check_beta(beta)?;
        if !omega_hat.is_finite() || !j_hat.is_finite() {
            return Err(Error::NonFiniteInput("flow state"));
        }
        let mut omega_hat = omega_hat;
        let mut j_hat = j_hat;
        for (what, f) in [("vorticity", &mut omega_hat), ("current", &mut j_hat)] {
            let mean = f.mean_mode().norm();
            if mean > 1e-12 * f.max_abs().max(1.0) {
                return Err(Error::MeanMode { what, magnitude: mean });
            }
            f.coeffs_mut()[0] = Complex64::new(0.0, 0.0);
        }
        Ok(Self { omega_hat, j_hat, t: 0.0, beta, magnetic_dissipation: 0.0 })
    }

    pub fn zero(grid: GridSpec, beta: f64) -> Result<Self> {
        Self::new(SpectralField::zeros(grid), SpectralField::zeros(grid), beta)
    }

    pub fn grid(&self) -> &GridSpec {
        self.omega_hat.grid()
    }

    pub fn velocity(&self) -> (SpectralField, SpectralField) {
        self.omega_hat.biot_savart_unchecked()
    }

    pub fn magnetic(&self) -> (SpectralField, SpectralField) {
        self.j_hat.biot_savart_unchecked()
    }

    /// The same state with `ω`, `j` multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            omega_hat: self.omega_hat.scaled(factor),
            j_hat: self.j_hat.scaled(factor),
            t: self.t,
            beta: self.beta,
            magnetic_dissipation: self.magnetic_dissipation * factor * factor,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.omega_hat.is_finite() && self.j_hat.is_finite() && self.t.is_finite()
    }

    /// `max_x (|u| + |b|)` over the grid.
    pub fn max_signal_speed(&self) -> f64 {
        let (u1, u2) = self.velocity();
        let (b1, b2) = self.magnetic();
        let (u1, u2, b1, b2) = (u1.inverse(), u2.inverse(), b1.inverse(), b2.inverse());
        (0..self.grid().len())
            .map(|i| u1.values()[i].hypot(u2.values()[i]) + b1.values()[i].hypot(b2.values()[i]))
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepControl {
    pub cfl_number: f64,
    pub dt_max: f64,
    pub nonlinear_enabled: bool,
    pub diffusion_enabled: bool,
}

impl Default for StepControl {
    fn default() -> Self {
        Self { cfl_number: 0.4, dt_max: 0.01, nonlinear_enabled: true, diffusion_enabled: true }
    }
}

impl StepControl {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl_number > 0.0 && self.cfl_number <= 1.0) {
            return Err(Error::invalid(format!("cfl_number must lie in (0, 1], got {}", self.cfl_number)));
        }
        if !(self.dt_max > 0.0 && self.dt_max.is_finite()) {
            return Err(Error::invalid(format!("dt_max must be > 0, got {}", self.dt_max)));
        }
        Ok(())
    }
}

/// `min(dt_max, cfl · h / (max(|u| + |b|) + ε))`.
pub fn cfl_dt(state: &FlowState, ctl: &StepControl) -> f64 {
    cfl_dt_for_speed(state.grid(), state.max_signal_speed(), ctl)
}

fn cfl_dt_for_speed(grid: &GridSpec, speed: f64, ctl: &StepControl) -> f64 {
    ctl.dt_max.min(ctl.cfl_number * grid.spacing() / (speed + CFL_EPSILON))
}

/// Non-diffusive tendencies `(∂t ω̂, ∂t ĵ + (-Δ)^β ĵ)`, dealiased and mean-free.
pub fn compute_rhs(state: &FlowState) -> Result<(SpectralField, SpectralField)> {
    tendencies(&state.omega_hat, &state.j_hat).map_err(|_| {
        Error::Numerical(Abort { cause: AbortCause::NonFinite, t: state.t, max_speed: state.max_signal_speed() })
    })
}

struct NonFinite;

fn tendencies(
    omega: &SpectralField,
    j: &SpectralField,
) -> std::result::Result<(SpectralField, SpectralField), NonFinite> {
    let g = *omega.grid();
    let (u1h, u2h) = omega.biot_savart_unchecked();
    let (b1h, b2h) = j.biot_savart_unchecked();
    let d = |f: &SpectralField, axis| f.partial_derivative(axis).inverse();

    let (u1, u2, b1, b2) = (u1h.inverse(), u2h.inverse(), b1h.inverse(), b2h.inverse());
    let (wx, wy) = (d(omega, Axis::X1), d(omega, Axis::X2));
    let (jx, jy) = (d(j, Axis::X1), d(j, Axis::X2));
    let b1x = d(&b1h, Axis::X1);
    let b1y = d(&b1h, Axis::X2);
    let b2x = d(&b2h, Axis::X1);
    let u1x = d(&u1h, Axis::X1);
    let u1y = d(&u1h, Axis::X2);
    let u2x = d(&u2h, Axis::X1);

    let mut n_omega = vec![0.0; g.len()];
    let mut n_j = vec![0.0; g.len()];
    for i in 0..g.len() {
        let (u1, u2, b1, b2) = (u1.values()[i], u2.values()[i], b1.values()[i], b2.values()[i]);
        let (wx, wy, jx, jy) = (wx.values()[i], wy.values()[i], jx.values()[i], jy.values()[i]);
        n_omega[i] = -(u1 * wx + u2 * wy) + (b1 * jx + b2 * jy);
        n_j[i] =
            -(u1 * jx + u2 * jy) + (b1 * wx + b2 * wy) + 2.0 * b1x.values()[i] * (u1y.values()[i] + u2x.values()[i])
                - 2.0 * u1x.values()[i] * (b1y.values()[i] + b2x.values()[i]);
    }
    if n_omega.iter().chain(&n_j).any(|v| !v.is_finite()) {
        return Err(NonFinite);
    }
    let finish = |vals: Vec<f64>| {
        let mut s = forward_unchecked(&RealField::from_raw(g, vals));
        s.dealias_in_place();
        s.coeffs_mut()[0] = Complex64::new(0.0, 0.0);
        s
    };
    Ok((finish(n_omega), finish(n_j)))
}

/// Reusable integrator for one grid and diffusion exponent.
#[derive(Clone, Debug)]
pub struct Stepper {
    grid: GridSpec,
    beta: f64,
    ctl: StepControl,
    /// `|k|^{2β}`, or zero when diffusion is off.
    decay_rate: Vec<f64>,
    /// `|k|^{2β-2}`, mapping `|ĵ|²` to `|Λ^β b̂|²`.
    dissipation_weight: Vec<f64>,
}

impl Stepper {
    pub fn new(grid: GridSpec, beta: f64, ctl: StepControl) -> Result<Self> {
        check_beta(beta)?;
        ctl.validate()?;
        let decay_rate = grid
            .lattice()
            .map(|(_, k1, k2)| if ctl.diffusion_enabled { fractional_symbol(k1, k2, beta) } else { 0.0 })
            .collect();
        let dissipation_weight = grid
            .lattice()
            .map(|(_, k1, k2)| if ctl.diffusion_enabled { fractional_symbol(k1, k2, beta - 1.0) } else { 0.0 })
            .collect();
        Ok(Self { grid, beta, ctl, decay_rate, dissipation_weight })
    }

    pub fn control(&self) -> &StepControl {
        &self.ctl
    }

    pub fn cfl_dt(&self, state: &FlowState) -> f64 {
        cfl_dt(state, &self.ctl)
    }

    fn dissipation_rate(&self, j: &SpectralField) -> f64 {
        FOUR_PI_SQ * j.coeffs().iter().zip(&self.dissipation_weight).map(|(c, w)| w * c.norm_sqr()).sum::<f64>()
    }

    fn rhs(
        &self,
        omega: &SpectralField,
        j: &SpectralField,
    ) -> std::result::Result<(SpectralField, SpectralField), NonFinite> {
        if self.ctl.nonlinear_enabled {
            tendencies(omega, j)
        } else {
            Ok((SpectralField::zeros(self.grid), SpectralField::zeros(self.grid)))
        }
    }

    fn abort(&self, state: &FlowState, cause: AbortCause) -> Error {
        let max_speed = if state.is_finite() { state.max_signal_speed() } else { f64::NAN };
        Error::Numerical(Abort { cause, t: state.t, max_speed })
    }

    /// Advances by exactly `dt`.
    pub fn advance(&self, state: &FlowState, dt: f64) -> Result<FlowState> {
        same_grid(&self.grid, state.grid())?;
        if state.beta != self.beta {
            return Err(Error::invalid(format!(
                "stepper built for beta = {}, state has beta = {}",
                self.beta, state.beta
            )));
        }
        if dt.is_nan() || dt < MIN_DT {
            return Err(self.abort(state, AbortCause::StepCollapse));
        }
        if !state.is_finite() {
            return Err(self.abort(state, AbortCause::NonFinite));
        }
        let n = self.grid.len();
        let full: Vec<f64> = self.decay_rate.iter().map(|l| (-l * dt).exp()).collect();
        let half: Vec<f64> = self.decay_rate.iter().map(|l| (-l * 0.5 * dt).exp()).collect();
        let w = state.omega_hat.coeffs();
        let j = state.j_hat.coeffs();
        let h = 0.5 * dt;
        let field = |coeffs: Vec<Complex64>| SpectralField::from_raw(self.grid, coeffs);
        let fail = |_| self.abort(state, AbortCause::NonFinite);

        let (k1w, k1j) = self.rhs(&state.omega_hat, &state.j_hat).map_err(fail)?;
        let w2 = field((0..n).map(|i| w[i] + k1w.coeffs()[i] * h).collect());
        let j2 = field((0..n).map(|i| (j[i] + k1j.coeffs()[i] * h) * half[i]).collect());

        let (k2w, k2j) = self.rhs(&w2, &j2).map_err(fail)?;
        let w3 = field((0..n).map(|i| w[i] + k2w.coeffs()[i] * h).collect());
        let j3 = field((0..n).map(|i| j[i] * half[i] + k2j.coeffs()[i] * h).collect());

        let (k3w, k3j) = self.rhs(&w3, &j3).map_err(fail)?;
        let w4 = field((0..n).map(|i| w[i] + k3w.coeffs()[i] * dt).collect());
        let j4 = field((0..n).map(|i| j[i] * full[i] + k3j.coeffs()[i] * (dt * half[i])).collect());

        let (k4w, k4j) = self.rhs(&w4, &j4).map_err(fail)?;
        let sixth = dt / 6.0;
        let omega_new = field(
            (0..n)
                .map(|i| w[i] + (k1w.coeffs()[i] + (k2w.coeffs()[i] + k3w.coeffs()[i]) * 2.0 + k4w.coeffs()[i]) * sixth)
                .collect(),
        );
        let j_new = field(
            (0..n)
                .map(|i| {
                    j[i] * full[i]
                        + (k1j.coeffs()[i] * full[i]
                            + (k2j.coeffs()[i] + k3j.coeffs()[i]) * (2.0 * half[i])
                            + k4j.coeffs()[i])
                            * sixth
                })
                .collect(),
        );
        let dq = sixth
            * (self.dissipation_rate(&state.j_hat)
                + 2.0 * self.dissipation_rate(&j2)
                + 2.0 * self.dissipation_rate(&j3)
                + self.dissipation_rate(&j4));

        let next = FlowState {
            omega_hat: omega_new,
            j_hat: j_new,
            t: state.t + dt,
            beta: self.beta,
            magnetic_dissipation: state.magnetic_dissipation + dq,
        };
        if !next.is_finite() || !next.magnetic_dissipation.is_finite() {
            return Err(self.abort(state, AbortCause::NonFinite));
        }
        Ok(next)
    }

    /// One step of length `min(cfl_dt, limit - t)`; returns the step used.
    pub fn step_until(&self, state: &FlowState, limit: f64) -> Result<(FlowState, f64)> {
        let speed = state.max_signal_speed();
        if !speed.is_finite() {
            return Err(self.abort(state, AbortCause::NonFinite));
        }
        let dt_cfl = cfl_dt_for_speed(&self.grid, speed, &self.ctl);
        if dt_cfl < MIN_DT {
            return Err(self.abort(state, AbortCause::StepCollapse));
        }
        let remaining = limit - state.t;
        if remaining <= dt_cfl * (1.0 + 1e-9) {
            let mut next = self.advance(state, remaining)?;
            next.t = limit;
            Ok((next, remaining))
        } else {
            Ok((self.advance(state, dt_cfl)?, dt_cfl))
        }
    }
}

/// One CFL-limited step.
pub fn step(state: &FlowState, ctl: &StepControl) -> Result<FlowState> {
    let stepper = Stepper::new(*state.grid(), state.beta, *ctl)?;
    let dt = stepper.cfl_dt(state);
    stepper.advance(state, dt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::random_annulus;
    use crate::spectral::{curl, lq_norm};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn grid(n: usize) -> GridSpec {
        GridSpec::new(n).unwrap()
    }

    fn single_mode_b(g: GridSpec, beta: f64) -> FlowState {
        // b = (sin x₂, 0) ⇒ j = -cos x₂
        let j = RealField::from_fn(g, |_, x2| -x2.cos()).forward().unwrap();
        FlowState::new(SpectralField::zeros(g), j, beta).unwrap()
    }

    fn random_state(g: GridSpec, seed: u64, beta: f64) -> FlowState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let kmax = g.dealias_cutoff().floor();
        let w = random_annulus(g, 1.0, kmax, &mut rng, |r| 1.0 / (1.0 + r * r));
        let j = random_annulus(g, 1.0, kmax, &mut rng, |r| 1.0 / (1.0 + r * r));
        FlowState::new(w.dealias(), j.dealias(), beta).unwrap()
    }

    #[test]
    fn rhs_vanishes_for_single_mode_b_and_zero_state() {
        let g = grid(32);
        let (nw, nj) = compute_rhs(&single_mode_b(g, 1.5)).unwrap();
        assert!(nw.max_abs() < 1e-15 && nj.max_abs() < 1e-15);
        let (nw, nj) = compute_rhs(&FlowState::zero(g, 1.5).unwrap()).unwrap();
        assert_eq!(nw.max_abs() + nj.max_abs(), 0.0);
    }

    #[test]
    fn vorticity_advection_is_skew() {
        let g = grid(32);
        for seed in 0..4 {
            let s = random_state(g, seed, 1.5);
            let (u1, u2) = s.velocity();
            let (u1, u2) = (u1.inverse(), u2.inverse());
            let wx = s.omega_hat.partial_derivative(Axis::X1).inverse();
            let wy = s.omega_hat.partial_derivative(Axis::X2).inverse();
            let adv: Vec<f64> =
                (0..g.len()).map(|i| u1.values()[i] * wx.values()[i] + u2.values()[i] * wy.values()[i]).collect();
            let adv = forward_unchecked(&RealField::from_raw(g, adv)).dealias();
            let integral = adv.inner(&s.omega_hat).unwrap();
            let scale = adv.l2_norm_sq().sqrt() * s.omega_hat.l2_norm_sq().sqrt();
            assert!(integral.abs() <= 1e-10 * scale, "{integral}");
        }
    }

    /// The current tendency must equal `curl(b·∇u - u·∇b)` formed from the
    /// velocity–magnetic form of the induction equation.
    #[test]
    fn current_tendency_matches_curl_of_induction() {
        let g = grid(32);
        let s = random_state(g, 17, 1.2);
        let (_, nj) = compute_rhs(&s).unwrap();
        let (u1h, u2h) = s.velocity();
        let (b1h, b2h) = s.magnetic();
        let phys = |f: &SpectralField| f.inverse();
        let dx = |f: &SpectralField, a| f.partial_derivative(a).inverse();
        let (u1, u2, b1, b2) = (phys(&u1h), phys(&u2h), phys(&b1h), phys(&b2h));
        let mut r1 = vec![0.0; g.len()];
        let mut r2 = vec![0.0; g.len()];
        let grads: Vec<RealField> =
            [&u1h, &u2h, &b1h, &b2h].iter().flat_map(|f| [dx(f, Axis::X1), dx(f, Axis::X2)]).collect();
        for i in 0..g.len() {
            let (uu1, uu2, bb1, bb2) = (u1.values()[i], u2.values()[i], b1.values()[i], b2.values()[i]);
            let gv = |n: usize| grads[n].values()[i];
            // b·∇u - u·∇b, components
            r1[i] = bb1 * gv(0) + bb2 * gv(1) - (uu1 * gv(4) + uu2 * gv(5));
            r2[i] = bb1 * gv(2) + bb2 * gv(3) - (uu1 * gv(6) + uu2 * gv(7));
        }
        let r1 = forward_unchecked(&RealField::from_raw(g, r1)).dealias();
        let r2 = forward_unchecked(&RealField::from_raw(g, r2)).dealias();
        let oracle = curl(&r1, &r2).unwrap();
        assert!(oracle.sub(&nj).unwrap().max_abs() <= 1e-12 * oracle.max_abs());
    }

    #[test]
    fn tendencies_are_mean_free_and_dealiased() {
        let g = grid(32);
        let (nw, nj) = compute_rhs(&random_state(g, 3, 1.5)).unwrap();
        for f in [&nw, &nj] {
            assert_eq!(f.mean_mode().norm(), 0.0);
            assert_eq!(f.dealias(), *f);
        }
    }

    #[test]
    fn linear_step_is_exact_integrating_factor() {
        let g = grid(16);
        let ctl = StepControl { nonlinear_enabled: false, dt_max: 0.1, ..StepControl::default() };
        let s = single_mode_b(g, 1.25);
        let stepper = Stepper::new(g, 1.25, ctl).unwrap();
        let next = stepper.advance(&s, 0.1).unwrap();
        let ratio = next.j_hat.coeff(0, 1).re / s.j_hat.coeff(0, 1).re;
        assert!((ratio - (-0.1f64).exp()).abs() < 1e-15);
        assert_eq!(next.omega_hat, s.omega_hat);
    }

    #[test]
    fn zero_state_stays_zero() {
        let g = grid(16);
        let s = FlowState::zero(g, 1.5).unwrap();
        let next = step(&s, &StepControl::default()).unwrap();
        assert_eq!(next.omega_hat.max_abs() + next.j_hat.max_abs(), 0.0);
        assert_eq!(next.t, StepControl::default().dt_max);
    }

    #[test]
    fn frozen_without_diffusion_or_nonlinearity() {
        let g = grid(16);
        let ctl = StepControl { nonlinear_enabled: false, diffusion_enabled: false, ..StepControl::default() };
        let s = random_state(g, 5, 1.5);
        let stepper = Stepper::new(g, 1.5, ctl).unwrap();
        let mut cur = s.clone();
        for _ in 0..10 {
            cur = stepper.advance(&cur, 0.05).unwrap();
        }
        assert_eq!(cur.omega_hat, s.omega_hat);
        assert_eq!(cur.j_hat, s.j_hat);
    }

    #[test]
    fn exact_solution_with_full_nonlinearity() {
        let g = grid(32);
        for beta in [1.1, 1.5] {
            let stepper = Stepper::new(g, beta, StepControl { dt_max: 0.01, ..Default::default() }).unwrap();
            let mut s = single_mode_b(g, beta);
            while s.t < 1.0 {
                s = stepper.step_until(&s, 1.0).unwrap().0;
            }
            assert_eq!(s.t, 1.0);
            let j = s.j_hat.inverse();
            let expect = RealField::from_fn(g, |_, x2| -(-1.0f64).exp() * x2.cos());
            let err = j.values().iter().zip(expect.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err <= 1e-8, "beta {beta}: {err}");
            // Q(1) = ∫ ‖b‖² e^{-2t} = 2π² (1 - e^{-2}) / 2
            let pi2 = std::f64::consts::PI.powi(2);
            let q = pi2 * (1.0 - (-2.0f64).exp());
            assert!((s.magnetic_dissipation - q).abs() <= 1e-8 * q);
        }
    }

    #[test]
    fn cfl_examples() {
        let g = grid(64);
        let ctl = StepControl { dt_max: 1.0, cfl_number: 0.4, ..Default::default() };
        let zero = FlowState::zero(g, 1.5).unwrap();
        assert_eq!(cfl_dt(&zero, &ctl), 1.0);
        // |b| = 2 sin-peak with u = 0 gives max(|u|+|b|) = 2 on a grid divisible by 4
        let j = RealField::from_fn(g, |_, x2| -2.0 * x2.cos()).forward().unwrap();
        let s = FlowState::new(SpectralField::zeros(g), j, 1.5).unwrap();
        let expect = 0.4 * (2.0 * std::f64::consts::PI / 64.0) / 2.0;
        assert!((cfl_dt(&s, &ctl) - expect).abs() < 1e-12 * expect);
        assert!((expect - 0.01963).abs() < 1e-5);
        let doubled = s.scaled(2.0);
        assert!((cfl_dt(&doubled, &ctl) - expect / 2.0).abs() < 1e-12 * expect);
        let capped = StepControl { dt_max: 1e-3, ..ctl };
        assert_eq!(cfl_dt(&s, &capped), 1e-3);
    }

    #[test]
    fn step_collapse_and_nan_are_distinguished() {
        let g = grid(16);
        let s = random_state(g, 1, 1.5);
        let stepper = Stepper::new(g, 1.5, StepControl::default()).unwrap();
        match stepper.advance(&s, 0.0) {
            Err(Error::Numerical(a)) => assert_eq!(a.cause, AbortCause::StepCollapse),
            other => panic!("{other:?}"),
        }
        let mut bad = s.clone();
        bad.omega_hat.coeffs_mut()[5] = Complex64::new(f64::NAN, 0.0);
        match stepper.advance(&bad, 0.01) {
            Err(Error::Numerical(a)) => assert_eq!(a.cause, AbortCause::NonFinite),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let g = grid(16);
        assert!(FlowState::zero(g, 0.0).is_err());
        assert!(FlowState::zero(g, 2.5).is_err());
        let one = RealField::from_fn(g, |_, _| 1.0).forward().unwrap();
        assert!(matches!(FlowState::new(one, SpectralField::zeros(g), 1.5), Err(Error::MeanMode { .. })));
        assert!(StepControl { cfl_number: 1.5, ..Default::default() }.validate().is_err());
        assert!(StepControl { dt_max: 0.0, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn mean_modes_and_reality_persist() {
        let g = grid(32);
        let stepper = Stepper::new(g, 1.3, StepControl::default()).unwrap();
        let mut s = random_state(g, 21, 1.3);
        for _ in 0..5 {
            s = stepper.step_until(&s, 10.0).unwrap().0;
            assert_eq!(s.omega_hat.mean_mode().norm(), 0.0);
            assert_eq!(s.j_hat.mean_mode().norm(), 0.0);
            for f in [&s.omega_hat, &s.j_hat] {
                let (phys, imag) = crate::spectral::inverse_with_imag(f);
                assert!(imag <= 1e-12 * lq_norm(&phys, f64::INFINITY).unwrap());
            }
        }
    }

    fn low_band_state(g: GridSpec, seed: u64, beta: f64) -> FlowState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = random_annulus(g, 1.0, 3.0, &mut rng, |_| 0.3);
        let j = random_annulus(g, 1.0, 3.0, &mut rng, |_| 0.3);
        FlowState::new(w, j, beta).unwrap()
    }

    #[test]
    fn fourth_order_refinement() {
        let g = grid(32);
        for (beta, diffusion) in [(1.5, false), (1.1, true)] {
            let run = |dt: f64| {
                let ctl =
                    StepControl { dt_max: dt, cfl_number: 1.0, diffusion_enabled: diffusion, ..Default::default() };
                let stepper = Stepper::new(g, beta, ctl).unwrap();
                let mut s = low_band_state(g, 99, beta);
                while s.t < 0.4 {
                    s = stepper.step_until(&s, 0.4).unwrap().0;
                }
                s
            };
            let reference = run(0.0025);
            let err = |s: &FlowState| {
                s.omega_hat.sub(&reference.omega_hat).unwrap().max_abs()
                    + s.j_hat.sub(&reference.j_hat).unwrap().max_abs()
            };
            let coarse = err(&run(0.02));
            let fine = err(&run(0.01));
            assert!(fine > 1e-12, "errors must stay above rounding: {fine}");
            assert!(coarse / fine >= 8.0, "beta {beta}: ratio {}", coarse / fine);
        }
    }
}
