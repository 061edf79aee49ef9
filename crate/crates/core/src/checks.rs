//! Seeded property suites behind the `check-*` subcommands.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::diagnostics::{diffusion_lower_bound_check, DiffusionReport};
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::littlewood_paley::{DyadicFilterBank, ANNULUS_INNER, ANNULUS_OUTER};
use crate::sampling::random_annulus;
use crate::spectral::SpectralField;

pub const PARTITION_TOL: f64 = 1e-12;
pub const RECONSTRUCTION_TOL: f64 = 1e-10;
pub const BERNSTEIN_TOL: f64 = 1e-10;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random real field with coefficients on `1 <= |k| <= radius`.
pub fn band_limited_field(grid: GridSpec, radius: f64, seed: u64) -> SpectralField {
    random_annulus(grid, 1.0, radius, &mut rng(seed), |_| 1.0)
}

/// Random real field with coefficients inside the nominal support of shell `j >= 0`.
pub fn shell_field(grid: GridSpec, j: i32, seed: u64) -> SpectralField {
    let s = 2f64.powi(j);
    random_annulus(grid, ANNULUS_INNER * s, ANNULUS_OUTER * s, &mut rng(seed), |_| 1.0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpGridReport {
    pub n: usize,
    pub j_max: usize,
    pub covered_radius: f64,
    pub partition_defect: f64,
    pub fields: usize,
    /// Largest `max|Σ_j Δ_j f - f| / max|f|` over the fields.
    pub reconstruction_error: f64,
}

impl LpGridReport {
    pub fn passed(&self) -> bool {
        self.partition_defect <= PARTITION_TOL && self.reconstruction_error <= RECONSTRUCTION_TOL
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSuiteReport {
    pub grids: Vec<LpGridReport>,
}

impl LpSuiteReport {
    pub fn passed(&self) -> bool {
        self.grids.iter().all(LpGridReport::passed)
    }
}

impl fmt::Display for LpSuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:>6} {:>6} {:>9} {:>18} {:>7} {:>18}  status",
            "n", "J_max", "covered", "partition defect", "fields", "reconstruction"
        )?;
        for g in &self.grids {
            writeln!(
                f,
                "{:>6} {:>6} {:>9} {:>18.3e} {:>7} {:>18.3e}  {}",
                g.n,
                g.j_max,
                g.covered_radius,
                g.partition_defect,
                g.fields,
                g.reconstruction_error,
                if g.passed() { "ok" } else { "VIOLATION" }
            )?;
        }
        Ok(())
    }
}

/// Partition of unity and shell reconstruction on each grid size.
pub fn lp_suite(ns: &[usize], fields: usize, seed: u64) -> Result<LpSuiteReport> {
    let grids = ns
        .iter()
        .map(|&n| {
            let grid = GridSpec::new(n)?;
            let bank = DyadicFilterBank::new(grid)?;
            let mut worst: f64 = 0.0;
            for i in 0..fields {
                let f = band_limited_field(grid, bank.covered_radius(), seed.wrapping_add(i as u64)).inverse();
                let rec = bank.decompose(&f)?.reconstruct();
                let err = f.values().iter().zip(rec.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                let scale = f.max_abs();
                if scale > 0.0 {
                    worst = worst.max(err / scale);
                }
            }
            Ok(LpGridReport {
                n,
                j_max: bank.j_max(),
                covered_radius: bank.covered_radius(),
                partition_defect: bank.partition_defect(),
                fields,
                reconstruction_error: worst,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LpSuiteReport { grids })
}

/// Envelope of one Bernstein configuration over all trials.
#[derive(Clone, Debug, PartialEq)]
pub struct BernsteinEnvelope {
    pub alpha: f64,
    pub p: f64,
    pub q: f64,
    pub trials: usize,
    pub lower_min: f64,
    pub lower_max: f64,
    pub upper_min: f64,
    pub upper_max: f64,
    /// For `p = q = 2`: trials whose ratio left `[(3/4)^{2α}, (8/3)^{2α}]`.
    pub violations: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BernsteinSuiteReport {
    pub n: usize,
    pub envelopes: Vec<BernsteinEnvelope>,
}

impl BernsteinSuiteReport {
    pub fn passed(&self) -> bool {
        self.envelopes.iter().all(|e| e.violations == 0 && e.lower_min.is_finite() && e.upper_max.is_finite())
    }
}

impl fmt::Display for BernsteinSuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "n = {}", self.n)?;
        writeln!(
            f,
            "{:>6} {:>4} {:>4} {:>7} {:>13} {:>13} {:>13} {:>13} {:>10}",
            "alpha", "p", "q", "trials", "lower min", "lower max", "upper min", "upper max", "violations"
        )?;
        for e in &self.envelopes {
            writeln!(
                f,
                "{:>6} {:>4} {:>4} {:>7} {:>13.6e} {:>13.6e} {:>13.6e} {:>13.6e} {:>10}",
                e.alpha,
                crate::diagnostics::tag(e.p),
                crate::diagnostics::tag(e.q),
                e.trials,
                e.lower_min,
                e.lower_max,
                e.upper_min,
                e.upper_max,
                e.violations
            )?;
        }
        Ok(())
    }
}

/// Shells cycled through by the seeded trials: every shell whose nominal
/// annulus lies inside the grid's frequency square.
fn trial_shells(grid: &GridSpec, bank: &DyadicFilterBank) -> Vec<i32> {
    let half = (grid.n() / 2) as f64;
    (0..=bank.j_max() as i32).filter(|&j| ANNULUS_OUTER * 2f64.powi(j) < half).collect()
}

/// Runs `trials` seeded shell fields for every `(α, p, q)`. The `p = q = 2`
/// entries are checked against the exact Plancherel envelope.
pub fn bernstein_suite(
    n: usize,
    trials: usize,
    alphas: &[f64],
    exponents: &[(f64, f64)],
    seed: u64,
) -> Result<BernsteinSuiteReport> {
    let grid = GridSpec::new(n)?;
    let bank = DyadicFilterBank::new(grid)?;
    let shells = trial_shells(&grid, &bank);
    if shells.is_empty() {
        return Err(Error::invalid(format!("grid n = {n} has no complete shell")));
    }
    let mut envelopes = Vec::new();
    for &(p, q) in exponents {
        for &alpha in alphas {
            let mut e = BernsteinEnvelope {
                alpha,
                p,
                q,
                trials,
                lower_min: f64::INFINITY,
                lower_max: 0.0,
                upper_min: f64::INFINITY,
                upper_max: 0.0,
                violations: 0,
            };
            for i in 0..trials {
                let j = shells[i % shells.len()];
                let f = shell_field(grid, j, seed.wrapping_add(i as u64)).inverse();
                let r = bank.bernstein_check(&f, alpha, p, q, j)?;
                let (lo, hi) = match (r.lower_ratio, r.upper_ratio) {
                    (Some(a), Some(b)) => (a, b),
                    _ => continue,
                };
                e.lower_min = e.lower_min.min(lo);
                e.lower_max = e.lower_max.max(lo);
                e.upper_min = e.upper_min.min(hi);
                e.upper_max = e.upper_max.max(hi);
                if p == 2.0 && q == 2.0 {
                    let (a, b) = (ANNULUS_INNER.powf(2.0 * alpha), ANNULUS_OUTER.powf(2.0 * alpha));
                    if lo < a * (1.0 - BERNSTEIN_TOL) || lo > b * (1.0 + BERNSTEIN_TOL) {
                        e.violations += 1;
                    }
                }
            }
            envelopes.push(e);
        }
    }
    Ok(BernsteinSuiteReport { n, envelopes })
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiffusionSuiteReport {
    pub n: usize,
    pub beta: f64,
    pub q: f64,
    pub trials: usize,
    pub held: usize,
    pub min_ratio: f64,
    pub reports: Vec<DiffusionReport>,
}

impl DiffusionSuiteReport {
    pub fn passed(&self) -> bool {
        self.held == self.trials
    }
}

impl fmt::Display for DiffusionSuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "diffusion lower bound, n = {}, beta = {}, q = {}: {}/{} trials hold, smallest ratio {:.6e}",
            self.n, self.beta, self.q, self.held, self.trials, self.min_ratio
        )
    }
}

/// Shell-wise diffusion lower bound on `trials` seeded fields: each trial
/// draws a band-limited `j` and tests one shell, cycling through shells.
pub fn diffusion_suite(n: usize, beta: f64, q: f64, trials: usize, seed: u64) -> Result<DiffusionSuiteReport> {
    let grid = GridSpec::new(n)?;
    let bank = DyadicFilterBank::new(grid)?;
    let shells = trial_shells(&grid, &bank);
    let mut reports = Vec::with_capacity(trials);
    for i in 0..trials {
        let k = shells[i % shells.len()];
        let j = band_limited_field(grid, grid.dealias_cutoff(), seed.wrapping_add(i as u64)).inverse();
        reports.push(diffusion_lower_bound_check(&j, k, q, beta, &bank)?);
    }
    let held = reports.iter().filter(|r| r.holds).count();
    let min_ratio = reports.iter().filter_map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    Ok(DiffusionSuiteReport { n, beta, q, trials, held, min_ratio, reports })
}
