//! Monitored norms, their time integrals, and inequality checks.
//!
//! One [`NormRecord`] is produced per output time. Cumulative columns are
//! extended from the previous record by the trapezoid rule, except the
//! magnetic dissipation `∫‖Λ^β b‖₂²`, which the stepper integrates with its
//! own RK4 stages and carries in the state. The energy residual is
//!
//! ```text
//! ‖u(t)‖₂² + ‖b(t)‖₂² + 2 ∫₀ᵗ ‖Λ^β b‖₂² dτ - (‖u₀‖₂² + ‖b₀‖₂²)
//! ```

use std::fmt;

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::littlewood_paley::{DyadicFilterBank, ANNULUS_INNER};
use crate::ranges::fmt_num;
use crate::solver::FlowState;
use crate::spectral::{
    forward_unchecked, fractional_symbol, lq_norm_of_values, same_grid, Axis, RealField, Reduction, SpectralField,
    FOUR_PI_SQ,
};

/// Which exponents a series carries.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticsSchema {
    /// Lebesgue exponents for `‖ω‖_q`, `‖j‖_q` and the embedding ratio.
    pub q_list: Vec<f64>,
    /// `(s, q)` pairs for `‖j‖_{B^s_{q,1}}`.
    pub besov_pairs: Vec<(f64, f64)>,
    /// Exponents for `‖∇j‖_r`.
    pub r_list: Vec<f64>,
}

pub(crate) fn tag(v: f64) -> String {
    if v.is_infinite() {
        "inf".into()
    } else {
        format!("{v}")
    }
}

impl DiagnosticsSchema {
    pub fn columns(&self) -> Vec<String> {
        let mut c: Vec<String> = [
            "t",
            "dt_used",
            "l2_u",
            "l2_b",
            "l2_lambda_beta_b",
            "energy_residual",
            "l2_omega",
            "l2_j",
            "l2_lambda_beta_j",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        c.extend(self.q_list.iter().map(|q| format!("lq_omega_q{}", tag(*q))));
        c.extend(self.q_list.iter().map(|q| format!("lq_j_q{}", tag(*q))));
        c.extend(self.besov_pairs.iter().map(|(s, q)| format!("besov_j_s{}_q{}", tag(*s), tag(*q))));
        c.extend(["linf_omega", "linf_b", "linf_j", "linf_grad_j"].map(String::from));
        c.extend(self.r_list.iter().map(|r| format!("lr_grad_j_r{}", tag(*r))));
        c.extend(["int_l2_lambda_beta_b_sq", "int_l2_lambda_beta_j_sq"].map(String::from));
        c.extend(self.besov_pairs.iter().map(|(s, q)| format!("int_besov_j_s{}_q{}", tag(*s), tag(*q))));
        c.push("int_linf_grad_j".into());
        c.extend(self.r_list.iter().map(|r| format!("int_lr_grad_j_r{}", tag(*r))));
        c.extend(["int_linf_j", "initial_energy", "tail_weight"].map(String::from));
        c.extend(self.q_list.iter().map(|q| format!("embedding_ratio_q{}", tag(*q))));
        c
    }

    pub fn width(&self) -> usize {
        19 + 3 * self.q_list.len() + 2 * self.besov_pairs.len() + 2 * self.r_list.len()
    }
}

/// All monitored quantities at one output time.
#[derive(Clone, Debug, PartialEq)]
pub struct NormRecord {
    pub t: f64,
    pub dt_used: f64,
    pub l2_u: f64,
    pub l2_b: f64,
    pub l2_lambda_beta_b: f64,
    pub energy_residual: f64,
    pub l2_omega: f64,
    pub l2_j: f64,
    pub l2_lambda_beta_j: f64,
    pub lq_omega: Vec<f64>,
    pub lq_j: Vec<f64>,
    /// `‖j‖_{B^s_{q,1}}` per schema pair.
    pub besov_j: Vec<f64>,
    pub linf_omega: f64,
    pub linf_b: f64,
    pub linf_j: f64,
    pub linf_grad_j: f64,
    pub lr_grad_j: Vec<f64>,
    pub int_l2_lambda_beta_b_sq: f64,
    pub int_l2_lambda_beta_j_sq: f64,
    pub int_besov_j: Vec<f64>,
    pub int_linf_grad_j: f64,
    pub int_lr_grad_j: Vec<f64>,
    pub int_linf_j: f64,
    /// `‖u₀‖₂² + ‖b₀‖₂²`
    pub initial_energy: f64,
    /// `Σ_{|k| > n/4} |ω̂|² + |ĵ|²`
    pub tail_weight: f64,
    /// `‖∇(|j|^{q/2})‖₂ / ‖|j|^{q/2}‖_{H^β}`, 0 for a zero field.
    pub embedding_ratio: Vec<f64>,
}

impl NormRecord {
    /// Values in [`DiagnosticsSchema::columns`] order.
    pub fn to_row(&self) -> Vec<f64> {
        let mut r = vec![
            self.t,
            self.dt_used,
            self.l2_u,
            self.l2_b,
            self.l2_lambda_beta_b,
            self.energy_residual,
            self.l2_omega,
            self.l2_j,
            self.l2_lambda_beta_j,
        ];
        r.extend(&self.lq_omega);
        r.extend(&self.lq_j);
        r.extend(&self.besov_j);
        r.extend([self.linf_omega, self.linf_b, self.linf_j, self.linf_grad_j]);
        r.extend(&self.lr_grad_j);
        r.extend([self.int_l2_lambda_beta_b_sq, self.int_l2_lambda_beta_j_sq]);
        r.extend(&self.int_besov_j);
        r.push(self.int_linf_grad_j);
        r.extend(&self.int_lr_grad_j);
        r.extend([self.int_linf_j, self.initial_energy, self.tail_weight]);
        r.extend(&self.embedding_ratio);
        r
    }

    pub fn from_row(schema: &DiagnosticsSchema, row: &[f64]) -> Result<Self> {
        if row.len() != schema.width() {
            return Err(Error::invalid(format!(
                "record row has {} values, schema expects {}",
                row.len(),
                schema.width()
            )));
        }
        let mut it = row.iter().copied();
        let mut one = || it.next().unwrap_or(f64::NAN);
        let t = one();
        let dt_used = one();
        let l2_u = one();
        let l2_b = one();
        let l2_lambda_beta_b = one();
        let energy_residual = one();
        let l2_omega = one();
        let l2_j = one();
        let l2_lambda_beta_j = one();
        let mut take = |n: usize| (0..n).map(|_| one()).collect::<Vec<f64>>();
        let (nq, nb, nr) = (schema.q_list.len(), schema.besov_pairs.len(), schema.r_list.len());
        let lq_omega = take(nq);
        let lq_j = take(nq);
        let besov_j = take(nb);
        let v = take(4);
        let lr_grad_j = take(nr);
        let ints = take(2);
        let int_besov_j = take(nb);
        let int_linf_grad_j = take(1)[0];
        let int_lr_grad_j = take(nr);
        let tail = take(3);
        let embedding_ratio = take(nq);
        Ok(Self {
            t,
            dt_used,
            l2_u,
            l2_b,
            l2_lambda_beta_b,
            energy_residual,
            l2_omega,
            l2_j,
            l2_lambda_beta_j,
            lq_omega,
            lq_j,
            besov_j,
            linf_omega: v[0],
            linf_b: v[1],
            linf_j: v[2],
            linf_grad_j: v[3],
            lr_grad_j,
            int_l2_lambda_beta_b_sq: ints[0],
            int_l2_lambda_beta_j_sq: ints[1],
            int_besov_j,
            int_linf_grad_j,
            int_lr_grad_j,
            int_linf_j: tail[0],
            initial_energy: tail[1],
            tail_weight: tail[2],
            embedding_ratio,
        })
    }
}

/// Per-run diagnostics engine: grid, exponents, filter bank and weights.
#[derive(Clone, Debug)]
pub struct Diagnostics {
    grid: GridSpec,
    beta: f64,
    schema: DiagnosticsSchema,
    bank: DyadicFilterBank,
    reduction: Reduction,
    /// `|k|^{2β-2}`
    lambda_b: Vec<f64>,
    /// `|k|^{2β}`
    lambda_j: Vec<f64>,
    tail: Vec<bool>,
}

impl Diagnostics {
    pub fn new(grid: GridSpec, beta: f64, schema: DiagnosticsSchema, reduction: Reduction) -> Result<Self> {
        for &q in schema.q_list.iter().chain(schema.besov_pairs.iter().map(|(_, q)| q)).chain(&schema.r_list) {
            if q.is_nan() || q < 1.0 {
                return Err(Error::invalid(format!("diagnostic exponent must be >= 1, got {q}")));
            }
        }
        if schema.besov_pairs.iter().any(|(s, _)| !s.is_finite()) {
            return Err(Error::invalid("Besov smoothness must be finite"));
        }
        let bank = DyadicFilterBank::new(grid)?;
        let lambda_b = grid.lattice().map(|(_, k1, k2)| fractional_symbol(k1, k2, beta - 1.0)).collect();
        let lambda_j = grid.lattice().map(|(_, k1, k2)| fractional_symbol(k1, k2, beta)).collect();
        let cut = (grid.n() / 4) as f64;
        let tail = grid.lattice().map(|(_, k1, k2)| ((k1 * k1 + k2 * k2) as f64).sqrt() > cut).collect();
        Ok(Self { grid, beta, schema, bank, reduction, lambda_b, lambda_j, tail })
    }

    pub fn schema(&self) -> &DiagnosticsSchema {
        &self.schema
    }

    pub fn bank(&self) -> &DyadicFilterBank {
        &self.bank
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    fn weighted(&self, f: &SpectralField, w: &[f64]) -> f64 {
        FOUR_PI_SQ * f.coeffs().iter().zip(w).map(|(c, w)| w * c.norm_sqr()).sum::<f64>()
    }

    fn norm(&self, values: &[f64], q: f64) -> f64 {
        // exponents were validated in `new`
        lq_norm_of_values(values, self.grid.cell_area(), q, self.reduction).unwrap_or(f64::NAN)
    }

    fn embedding_ratio(&self, j: &RealField, q: f64) -> f64 {
        let g: Vec<f64> = j.values().iter().map(|v| v.abs().powf(0.5 * q)).collect();
        let gh = forward_unchecked(&RealField::from_raw(self.grid, g));
        let grad = gh.weighted_l2_sq(|k1, k2| (k1 * k1 + k2 * k2) as f64);
        let hb = gh.weighted_l2_sq(|k1, k2| (1.0 + (k1 * k1 + k2 * k2) as f64).powf(self.beta));
        if hb > 0.0 {
            (grad / hb).sqrt()
        } else {
            0.0
        }
    }

    /// Computes every column at `state`. `prev` is required for `t > 0`
    /// and must be the record at the previous output time.
    pub fn record(&self, state: &FlowState, prev: Option<&NormRecord>, dt_used: f64) -> Result<NormRecord> {
        same_grid(&self.grid, state.grid())?;
        if state.beta != self.beta {
            return Err(Error::invalid(format!(
                "diagnostics built for beta = {}, state has beta = {}",
                self.beta, state.beta
            )));
        }
        if prev.is_none() && state.t > 0.0 {
            return Err(Error::invalid(format!(
                "a record at t = {} needs the previous record for its time integrals",
                state.t
            )));
        }
        let (u1h, u2h) = state.velocity();
        let (b1h, b2h) = state.magnetic();
        let u_sq = u1h.l2_norm_sq() + u2h.l2_norm_sq();
        let b_sq = b1h.l2_norm_sq() + b2h.l2_norm_sq();
        let lam_b_sq = self.weighted(&state.j_hat, &self.lambda_b);
        let lam_j_sq = self.weighted(&state.j_hat, &self.lambda_j);

        let omega = state.omega_hat.inverse();
        let j = state.j_hat.inverse();
        let (b1, b2) = (b1h.inverse(), b2h.inverse());
        let jx = state.j_hat.partial_derivative(Axis::X1).inverse();
        let jy = state.j_hat.partial_derivative(Axis::X2).inverse();
        let b_mag: Vec<f64> = b1.values().iter().zip(b2.values()).map(|(a, b)| a.hypot(*b)).collect();
        let grad_j: Vec<f64> = jx.values().iter().zip(jy.values()).map(|(a, b)| a.hypot(*b)).collect();

        let lq_omega: Vec<f64> = self.schema.q_list.iter().map(|&q| self.norm(omega.values(), q)).collect();
        let lq_j: Vec<f64> = self.schema.q_list.iter().map(|&q| self.norm(j.values(), q)).collect();
        let besov_j = self
            .schema
            .besov_pairs
            .iter()
            .map(|&(s, q)| self.bank.besov_norm_spectral(&state.j_hat, s, q, 1.0, self.reduction))
            .collect::<Result<Vec<f64>>>()?;
        let lr_grad_j: Vec<f64> = self.schema.r_list.iter().map(|&r| self.norm(&grad_j, r)).collect();
        let linf_j = self.norm(j.values(), f64::INFINITY);
        let linf_grad_j = self.norm(&grad_j, f64::INFINITY);

        let energy = u_sq + b_sq;
        let initial_energy = prev.map_or(energy, |p| p.initial_energy);
        let q_int = state.magnetic_dissipation;
        let span = prev.map_or(0.0, |p| state.t - p.t);
        let trap = |a: f64, b: f64| 0.5 * span * (a + b);
        let pick = |f: fn(&NormRecord) -> f64| prev.map_or(0.0, f);
        let acc = |old: Option<&Vec<f64>>, last: Option<&Vec<f64>>, cur: &[f64]| -> Vec<f64> {
            match (old, last) {
                (Some(o), Some(l)) => cur.iter().zip(o).zip(l).map(|((c, o), l)| o + trap(*l, *c)).collect(),
                _ => vec![0.0; cur.len()],
            }
        };
        let int_besov_j = acc(prev.map(|p| &p.int_besov_j), prev.map(|p| &p.besov_j), &besov_j);
        let int_lr_grad_j = acc(prev.map(|p| &p.int_lr_grad_j), prev.map(|p| &p.lr_grad_j), &lr_grad_j);
        let tail_weight: f64 = state
            .omega_hat
            .coeffs()
            .iter()
            .zip(state.j_hat.coeffs())
            .zip(&self.tail)
            .filter(|(_, &t)| t)
            .map(|((w, j), _)| w.norm_sqr() + j.norm_sqr())
            .sum();
        let embedding_ratio = self.schema.q_list.iter().map(|&q| self.embedding_ratio(&j, q)).collect();

        Ok(NormRecord {
            t: state.t,
            dt_used,
            l2_u: u_sq.sqrt(),
            l2_b: b_sq.sqrt(),
            l2_lambda_beta_b: lam_b_sq.sqrt(),
            energy_residual: energy + 2.0 * q_int - initial_energy,
            l2_omega: state.omega_hat.l2_norm_sq().sqrt(),
            l2_j: state.j_hat.l2_norm_sq().sqrt(),
            l2_lambda_beta_j: lam_j_sq.sqrt(),
            lq_omega,
            lq_j,
            besov_j,
            linf_omega: self.norm(omega.values(), f64::INFINITY),
            linf_b: self.norm(&b_mag, f64::INFINITY),
            linf_j,
            linf_grad_j,
            lr_grad_j,
            int_l2_lambda_beta_b_sq: q_int,
            int_l2_lambda_beta_j_sq: pick(|p| p.int_l2_lambda_beta_j_sq)
                + trap(pick(|p| p.l2_lambda_beta_j.powi(2)), lam_j_sq),
            int_besov_j,
            int_linf_grad_j: pick(|p| p.int_linf_grad_j) + trap(pick(|p| p.linf_grad_j), linf_grad_j),
            int_lr_grad_j,
            int_linf_j: pick(|p| p.int_linf_j) + trap(pick(|p| p.linf_j), linf_j),
            initial_energy,
            tail_weight,
            embedding_ratio,
        })
    }
}

/// Ratios `LHS / RHS` of the Sobolev-type inequalities with the constant
/// dropped. `None` marks a vanishing right-hand side.
#[derive(Clone, Debug, PartialEq)]
pub struct SobolevReport {
    /// `‖b‖_∞ / (‖b‖₂^{1-θ} ‖Λ^β j‖₂^θ)`, `θ = 1/(1+β)`
    pub b_sup: Option<f64>,
    /// `‖∇j‖_q / (‖j‖₂^{1-θ} ‖Λ^β j‖₂^θ)`, `θ = 2(q-1)/(βq)`, per `q`
    pub grad_j: Vec<(f64, Option<f64>)>,
    /// `‖j‖_∞ / (‖j‖₂^{1-1/β} ‖Λ^β j‖₂^{1/β})`
    pub j_sup: Option<f64>,
}

impl SobolevReport {
    fn values(&self) -> Vec<Option<f64>> {
        let mut v = vec![self.b_sup, self.j_sup];
        v.extend(self.grad_j.iter().map(|(_, r)| *r));
        v
    }
}

fn interpolation_ratio(lhs: f64, low: f64, high: f64, theta: f64) -> Option<f64> {
    let den = low.powf(1.0 - theta) * high.powf(theta);
    (den > 0.0 && den.is_finite()).then(|| lhs / den)
}

pub fn sobolev_ratio_checks(state: &FlowState, q_list: &[f64]) -> Result<SobolevReport> {
    let beta = state.beta;
    let g = *state.grid();
    let (b1h, b2h) = state.magnetic();
    let (b1, b2) = (b1h.inverse(), b2h.inverse());
    let b_mag: Vec<f64> = b1.values().iter().zip(b2.values()).map(|(a, b)| a.hypot(*b)).collect();
    let b_inf = lq_norm_of_values(&b_mag, g.cell_area(), f64::INFINITY, Reduction::Ordered)?;
    let b_l2 = (b1h.l2_norm_sq() + b2h.l2_norm_sq()).sqrt();
    let j_l2 = state.j_hat.l2_norm_sq().sqrt();
    let lam_j = state.j_hat.weighted_l2_sq(|k1, k2| fractional_symbol(k1, k2, beta)).sqrt();
    let j = state.j_hat.inverse();
    let j_inf = lq_norm_of_values(j.values(), g.cell_area(), f64::INFINITY, Reduction::Ordered)?;
    let jx = state.j_hat.partial_derivative(Axis::X1).inverse();
    let jy = state.j_hat.partial_derivative(Axis::X2).inverse();
    let grad: Vec<f64> = jx.values().iter().zip(jy.values()).map(|(a, b)| a.hypot(*b)).collect();
    let grad_j = q_list
        .iter()
        .map(|&q| {
            let theta = if q.is_infinite() { 2.0 / beta } else { 2.0 * (q - 1.0) / (beta * q) };
            let lhs = lq_norm_of_values(&grad, g.cell_area(), q, Reduction::Ordered)?;
            Ok((q, interpolation_ratio(lhs, j_l2, lam_j, theta)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SobolevReport {
        b_sup: interpolation_ratio(b_inf, b_l2, lam_j, 1.0 / (1.0 + beta)),
        grad_j,
        j_sup: interpolation_ratio(j_inf, j_l2, lam_j, 1.0 / beta),
    })
}

/// Largest relative change of any ratio when the state is scaled by `lambda`.
pub fn sobolev_scale_defect(state: &FlowState, q_list: &[f64], lambda: f64) -> Result<f64> {
    let a = sobolev_ratio_checks(state, q_list)?.values();
    let b = sobolev_ratio_checks(&state.scaled(lambda), q_list)?.values();
    let mut worst: f64 = 0.0;
    for (x, y) in a.iter().zip(&b) {
        match (x, y) {
            (Some(x), Some(y)) => worst = worst.max((x - y).abs() / x.abs().max(f64::MIN_POSITIVE)),
            (None, None) => {}
            _ => return Ok(f64::INFINITY),
        }
    }
    Ok(worst)
}

/// Outcome of the shell-wise diffusion lower bound.
#[derive(Clone, Debug, PartialEq)]
pub struct DiffusionReport {
    pub shell: i32,
    pub q: f64,
    /// `∫ f|f|^{q-2} (-Δ)^β f` with `f = Δ_k j`.
    pub lhs: f64,
    /// `‖Δ_k j‖_q^q`
    pub shell_norm_pow: f64,
    /// `2^{2βk}`
    pub scale: f64,
    /// `lhs / (scale · shell_norm_pow)`
    pub ratio: Option<f64>,
    /// Guaranteed lower bound on `ratio` (only for `q = 2`).
    pub bound: Option<f64>,
    pub holds: bool,
}

pub fn diffusion_lower_bound_check(
    j: &RealField,
    shell: i32,
    q: f64,
    beta: f64,
    bank: &DyadicFilterBank,
) -> Result<DiffusionReport> {
    if q.is_nan() || q < 2.0 || q.is_infinite() {
        return Err(Error::invalid(format!("diffusion bound needs finite q >= 2, got {q}")));
    }
    if !beta.is_finite() || beta < 0.0 {
        return Err(Error::invalid(format!("beta must be finite and >= 0, got {beta}")));
    }
    let spec = j.forward()?;
    let block = bank.project_spectral(&spec, shell)?;
    let scale = 2f64.powf(2.0 * beta * shell as f64);
    let g = *j.grid();
    let (lhs, norm_pow, bound, holds);
    if q == 2.0 {
        lhs = block.weighted_l2_sq(|k1, k2| fractional_symbol(k1, k2, beta));
        norm_pow = block.l2_norm_sq();
        let inner = bank.support(shell).0;
        let b = if shell < 0 { 0.0 } else { (inner / 2f64.powi(shell)).powf(2.0 * beta) };
        debug_assert!(shell < 0 || inner / 2f64.powi(shell) == ANNULUS_INNER);
        bound = Some(b);
        holds = lhs >= b * scale * norm_pow * (1.0 - 1e-12);
    } else {
        let f = block.inverse();
        let d = block.fractional_laplacian(beta)?.inverse();
        let integrand: Vec<f64> =
            f.values().iter().zip(d.values()).map(|(&a, &b)| a * a.abs().powf(q - 2.0) * b).collect();
        lhs = g.cell_area() * integrand.iter().sum::<f64>();
        norm_pow = lq_norm_of_values(f.values(), g.cell_area(), q, Reduction::Ordered)?.powf(q);
        bound = None;
        holds = lhs >= -1e-10 * norm_pow;
    }
    let den = scale * norm_pow;
    Ok(DiffusionReport {
        shell,
        q,
        lhs,
        shell_norm_pow: norm_pow,
        scale,
        ratio: (den > 0.0).then(|| lhs / den),
        bound,
        holds,
    })
}

/// Running summary of one column.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantitySummary {
    pub name: String,
    /// Largest value; for the signed energy residual, largest magnitude.
    pub max: f64,
    pub argmax_t: f64,
    pub final_value: f64,
    pub finite: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundednessReport {
    pub rows: usize,
    pub t_final: f64,
    pub quantities: Vec<QuantitySummary>,
    /// First non-finite entry as `(column, t)`.
    pub first_non_finite: Option<(String, f64)>,
}

impl BoundednessReport {
    pub fn all_finite(&self) -> bool {
        self.first_non_finite.is_none()
    }

    pub fn get(&self, name: &str) -> Option<&QuantitySummary> {
        self.quantities.iter().find(|q| q.name == name)
    }
}

impl fmt::Display for BoundednessReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} records up to t = {}", self.rows, fmt_num(self.t_final))?;
        writeln!(f, "{:<28} {:>14} {:>10} {:>14}", "quantity", "max", "at t", "final")?;
        for q in &self.quantities {
            writeln!(
                f,
                "{:<28} {:>14.6e} {:>10.4} {:>14.6e}{}",
                q.name,
                q.max,
                q.argmax_t,
                q.final_value,
                if q.finite { "" } else { "  NON-FINITE" }
            )?;
        }
        match &self.first_non_finite {
            Some((c, t)) => writeln!(f, "first non-finite entry: {c} at t = {t}"),
            None => writeln!(f, "all entries finite"),
        }
    }
}

/// Summarizes a series given as column names plus rows. The first column
/// must be `t`.
pub fn boundedness_report(columns: &[String], rows: &[Vec<f64>]) -> Result<BoundednessReport> {
    if rows.is_empty() {
        return Err(Error::invalid("boundedness report needs at least one record"));
    }
    if columns.first().map(String::as_str) != Some("t") {
        return Err(Error::invalid("series must start with a t column"));
    }
    if let Some(bad) = rows.iter().find(|r| r.len() != columns.len()) {
        return Err(Error::invalid(format!("row has {} values, header has {} columns", bad.len(), columns.len())));
    }
    let mut first_non_finite = None;
    for r in rows {
        if let Some(i) = r.iter().position(|v| !v.is_finite()) {
            first_non_finite = Some((columns[i].clone(), r[0]));
            break;
        }
    }
    let quantities = columns
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, name)| {
            let signed = name == "energy_residual";
            let mut max = f64::NEG_INFINITY;
            let mut argmax_t = rows[0][0];
            let mut finite = true;
            for r in rows {
                let v = if signed { r[i].abs() } else { r[i] };
                if !v.is_finite() {
                    finite = false;
                    continue;
                }
                if v > max {
                    max = v;
                    argmax_t = r[0];
                }
            }
            QuantitySummary { name: name.clone(), max, argmax_t, final_value: rows[rows.len() - 1][i], finite }
        })
        .collect();
    Ok(BoundednessReport { rows: rows.len(), t_final: rows[rows.len() - 1][0], quantities, first_non_finite })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{StepControl, Stepper};
    use std::f64::consts::PI;

    fn schema() -> DiagnosticsSchema {
        DiagnosticsSchema { q_list: vec![2.0, 4.0], besov_pairs: vec![(1.25, 2.0)], r_list: vec![2.0, f64::INFINITY] }
    }

    fn single_mode_b(g: GridSpec, beta: f64) -> FlowState {
        let mut j = SpectralField::zeros(g);
        j.set_mode(0, 1, rustfft::num_complex::Complex64::new(-0.5, 0.0));
        FlowState::new(SpectralField::zeros(g), j, beta).unwrap()
    }

    #[test]
    fn columns_match_row_width() {
        let s = schema();
        let cols = s.columns();
        assert_eq!(cols.len(), s.width());
        assert!(cols.contains(&"lq_j_q4".to_string()));
        assert!(cols.contains(&"besov_j_s1.25_q2".to_string()));
        assert!(cols.contains(&"lr_grad_j_rinf".to_string()));
        let g = GridSpec::new(16).unwrap();
        let d = Diagnostics::new(g, 1.25, s.clone(), Reduction::Ordered).unwrap();
        let rec = d.record(&single_mode_b(g, 1.25), None, 0.0).unwrap();
        let row = rec.to_row();
        assert_eq!(row.len(), s.width());
        assert_eq!(NormRecord::from_row(&s, &row).unwrap(), rec);
        assert!(NormRecord::from_row(&s, &row[1..]).is_err());
    }

    #[test]
    fn zero_state_records_zero() {
        let g = GridSpec::new(16).unwrap();
        let d = Diagnostics::new(g, 1.5, schema(), Reduction::Ordered).unwrap();
        let rec = d.record(&FlowState::zero(g, 1.5).unwrap(), None, 0.0).unwrap();
        assert!(rec.to_row().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_mode_values() {
        let g = GridSpec::new(32).unwrap();
        for beta in [1.1, 1.7] {
            let d = Diagnostics::new(g, beta, schema(), Reduction::Ordered).unwrap();
            let rec = d.record(&single_mode_b(g, beta), None, 0.0).unwrap();
            let l2 = PI * 2f64.sqrt();
            assert!((rec.l2_j - l2).abs() < 1e-13);
            assert!((rec.l2_lambda_beta_j - rec.l2_j).abs() < 1e-13);
            assert!((rec.l2_b - l2).abs() < 1e-13);
            assert!((rec.linf_j - 1.0).abs() < 1e-14);
            assert!((rec.linf_b - 1.0).abs() < 1e-14);
            assert!((rec.linf_grad_j - 1.0).abs() < 1e-14);
            assert_eq!(rec.l2_u, 0.0);
            assert_eq!(rec.energy_residual, 0.0);
            assert!((rec.initial_energy - 2.0 * PI * PI).abs() < 1e-12);
            assert_eq!(rec.tail_weight, 0.0);
        }
    }

    #[test]
    fn missing_previous_record_is_rejected() {
        let g = GridSpec::new(16).unwrap();
        let d = Diagnostics::new(g, 1.5, schema(), Reduction::Ordered).unwrap();
        let mut s = single_mode_b(g, 1.5);
        s.t = 0.5;
        assert!(d.record(&s, None, 0.1).is_err());
        assert!(
            Diagnostics::new(g, 1.5, DiagnosticsSchema { q_list: vec![0.5], ..schema() }, Reduction::Ordered).is_err()
        );
    }

    #[test]
    fn exact_solution_energy_residual() {
        let g = GridSpec::new(32).unwrap();
        let beta = 1.5;
        let d = Diagnostics::new(g, beta, schema(), Reduction::Ordered).unwrap();
        let stepper = Stepper::new(g, beta, StepControl::default()).unwrap();
        let mut s = single_mode_b(g, beta);
        let mut rec = d.record(&s, None, 0.0).unwrap();
        for k in 1..=100 {
            let target = k as f64 * 0.01;
            let mut dt = 0.0;
            while s.t < target {
                let (next, used) = stepper.step_until(&s, target).unwrap();
                s = next;
                dt = used;
            }
            rec = d.record(&s, Some(&rec), dt).unwrap();
            assert!(rec.energy_residual.abs() <= 1e-6, "{}", rec.energy_residual);
        }
        // ∫₀¹ ‖j‖_∞ = ∫ e^{-t} with the trapezoid rule at spacing 0.01
        let trap = 0.005 * (1.0 + (-1.0f64).exp()) + 0.01 * (1..100).map(|k| (-(k as f64) * 0.01).exp()).sum::<f64>();
        assert!((rec.int_linf_j - trap).abs() < 1e-10);
    }

    #[test]
    fn sobolev_single_mode_and_homogeneity() {
        let g = GridSpec::new(32).unwrap();
        let s = single_mode_b(g, 1.4);
        let r = sobolev_ratio_checks(&s, &[2.0, 4.0]).unwrap();
        assert!((r.b_sup.unwrap() - 1.0 / (PI * 2f64.sqrt())).abs() < 1e-13);
        assert!(sobolev_scale_defect(&s, &[2.0, 4.0, f64::INFINITY], 3.7).unwrap() < 1e-12);
        let z = sobolev_ratio_checks(&FlowState::zero(g, 1.4).unwrap(), &[2.0]).unwrap();
        assert_eq!(z.b_sup, None);
        assert_eq!(z.grad_j, vec![(2.0, None)]);
    }

    #[test]
    fn diffusion_bound_examples() {
        let g = GridSpec::new(32).unwrap();
        let bank = DyadicFilterBank::new(g).unwrap();
        let j = RealField::from_fn(g, |x1, _| (2.0 * x1).cos());
        let r = diffusion_lower_bound_check(&j, 1, 2.0, 1.25, &bank).unwrap();
        let ratio = r.lhs / r.shell_norm_pow;
        assert!((ratio - 2f64.powf(2.5)).abs() < 1e-12);
        assert!(r.holds);
        assert!((r.bound.unwrap() - 0.75f64.powf(2.5)).abs() < 1e-15);
        let z = diffusion_lower_bound_check(&RealField::zeros(g), 1, 2.0, 1.25, &bank).unwrap();
        assert_eq!((z.lhs, z.shell_norm_pow, z.ratio), (0.0, 0.0, None));
        assert!(diffusion_lower_bound_check(&j, 1, 1.5, 1.25, &bank).is_err());
    }

    #[test]
    fn boundedness_summary() {
        let cols: Vec<String> = ["t", "a", "energy_residual"].map(String::from).to_vec();
        let rows = vec![vec![0.0, 1.0, 0.0], vec![0.5, 3.0, -2.0], vec![1.0, 2.0, 1.0]];
        let r = boundedness_report(&cols, &rows).unwrap();
        assert!(r.all_finite());
        let a = r.get("a").unwrap();
        assert_eq!((a.max, a.argmax_t, a.final_value), (3.0, 0.5, 2.0));
        assert_eq!(r.get("energy_residual").unwrap().max, 2.0);
        let rows = vec![vec![0.0, 1.0, 0.0], vec![0.5, f64::NAN, 0.0]];
        let r = boundedness_report(&cols, &rows).unwrap();
        assert_eq!(r.first_non_finite, Some(("a".to_string(), 0.5)));
        assert!(boundedness_report(&cols, &[]).is_err());
        let zero = vec![vec![0.0, 0.0, 0.0]; 3];
        assert!(boundedness_report(&cols, &zero).unwrap().quantities.iter().all(|q| q.max == 0.0));
    }
}
