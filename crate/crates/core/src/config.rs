//! Run configuration: a flat `key = value` text file plus overrides.
//!
//! Blank lines and text after `#` are ignored. Lists are comma separated
//! and accept `inf`. Later assignments win, so command-line overrides are
//! applied after the file. See the README for the full key table.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, DEFAULT_DEALIAS_FRACTION};
use crate::ranges::RangeParams;
use crate::solver::{check_beta, StepControl};

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "FRACMHD_OUTPUT_DIR";
const FALLBACK_OUTPUT_DIR: &str = "fracmhd-output";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IcKind {
    Zero,
    SingleModeB,
    OrszagTangLike,
    RandomBand,
}

impl IcKind {
    pub fn name(&self) -> &'static str {
        match self {
            IcKind::Zero => "zero",
            IcKind::SingleModeB => "single_mode_b",
            IcKind::OrszagTangLike => "orszag_tang_like",
            IcKind::RandomBand => "random_band",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(IcKind::Zero),
            "single_mode_b" => Ok(IcKind::SingleModeB),
            "orszag_tang_like" => Ok(IcKind::OrszagTangLike),
            "random_band" => Ok(IcKind::RandomBand),
            _ => Err(Error::Config(format!(
                "unknown initial condition '{s}' (expected zero, single_mode_b, orszag_tang_like, random_band)"
            ))),
        }
    }
}

/// Initial-condition generator and its parameters. Amplitudes left unset
/// take the generator's default.
#[derive(Clone, Debug, PartialEq)]
pub struct IcSpec {
    pub kind: IcKind,
    pub amplitude_u: Option<f64>,
    pub amplitude_b: Option<f64>,
    pub k_min: f64,
    pub k_max: f64,
    pub slope: f64,
}

impl Default for IcSpec {
    fn default() -> Self {
        Self { kind: IcKind::SingleModeB, amplitude_u: None, amplitude_b: None, k_min: 1.0, k_max: 8.0, slope: 2.0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub n: usize,
    pub beta: f64,
    pub t_end: f64,
    pub output_interval: f64,
    /// Time between checkpoints, rounded to a whole number of outputs; 0
    /// writes only the final checkpoint.
    pub checkpoint_interval: f64,
    pub cfl_number: f64,
    pub dt_max: f64,
    pub dealias_fraction: f64,
    pub nonlinear: bool,
    pub diffusion: bool,
    pub ic: IcSpec,
    pub seed: u64,
    pub q_list: Vec<f64>,
    pub s_list: Vec<f64>,
    pub r_list: Vec<f64>,
    /// Monitor inadmissible exponents too instead of dropping them.
    pub keep_inadmissible: bool,
    pub deterministic: bool,
    pub output_dir: PathBuf,
    pub ndjson: bool,
}

fn default_output_dir() -> PathBuf {
    std::env::var_os(OUTPUT_DIR_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(FALLBACK_OUTPUT_DIR))
}

impl Default for RunConfig {
    fn default() -> Self {
        let ctl = StepControl::default();
        Self {
            n: 64,
            beta: 1.5,
            t_end: 1.0,
            output_interval: 0.01,
            checkpoint_interval: 0.0,
            cfl_number: ctl.cfl_number,
            dt_max: ctl.dt_max,
            dealias_fraction: DEFAULT_DEALIAS_FRACTION,
            nonlinear: true,
            diffusion: true,
            ic: IcSpec::default(),
            seed: 0,
            q_list: vec![2.0],
            s_list: Vec::new(),
            r_list: vec![2.0],
            keep_inadmissible: false,
            deterministic: true,
            output_dir: default_output_dir(),
            ndjson: false,
        }
    }
}

pub const KEYS: &[&str] = &[
    "n",
    "beta",
    "t_end",
    "output_interval",
    "checkpoint_interval",
    "cfl_number",
    "dt_max",
    "dealias_fraction",
    "nonlinear",
    "diffusion",
    "ic",
    "ic.amplitude_u",
    "ic.amplitude_b",
    "ic.k_min",
    "ic.k_max",
    "ic.slope",
    "seed",
    "q_list",
    "s_list",
    "r_list",
    "keep_inadmissible",
    "deterministic",
    "output_dir",
    "ndjson",
];

/// Keys that do not change the computed trajectory or its records.
const NON_PHYSICS_KEYS: &[&str] = &["t_end", "checkpoint_interval", "output_dir", "ndjson"];

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    let v = v.trim();
    let parsed = match v {
        "inf" | "+inf" | "infinity" => Ok(f64::INFINITY),
        _ => v.parse::<f64>(),
    };
    parsed.map_err(|_| Error::Config(format!("{key}: '{v}' is not a number")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.trim() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        other => Err(Error::Config(format!("{key}: '{other}' is not a boolean"))),
    }
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(|s| parse_f64(key, s)).collect()
}

fn num(v: f64) -> String {
    if v.is_infinite() {
        "inf".into()
    } else {
        format!("{v:?}")
    }
}

fn list(v: &[f64]) -> String {
    v.iter().map(|x| num(*x)).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "n" => self.n = v.parse().map_err(|_| Error::Config(format!("n: '{v}' is not a positive integer")))?,
            "beta" => self.beta = parse_f64(key, v)?,
            "t_end" => self.t_end = parse_f64(key, v)?,
            "output_interval" => self.output_interval = parse_f64(key, v)?,
            "checkpoint_interval" => self.checkpoint_interval = parse_f64(key, v)?,
            "cfl_number" => self.cfl_number = parse_f64(key, v)?,
            "dt_max" => self.dt_max = parse_f64(key, v)?,
            "dealias_fraction" => self.dealias_fraction = parse_f64(key, v)?,
            "nonlinear" => self.nonlinear = parse_bool(key, v)?,
            "diffusion" => self.diffusion = parse_bool(key, v)?,
            "ic" => self.ic.kind = IcKind::parse(v)?,
            "ic.amplitude_u" => self.ic.amplitude_u = Some(parse_f64(key, v)?),
            "ic.amplitude_b" => self.ic.amplitude_b = Some(parse_f64(key, v)?),
            "ic.k_min" => self.ic.k_min = parse_f64(key, v)?,
            "ic.k_max" => self.ic.k_max = parse_f64(key, v)?,
            "ic.slope" => self.ic.slope = parse_f64(key, v)?,
            "seed" => {
                self.seed = v.parse().map_err(|_| Error::Config(format!("seed: '{v}' is not an unsigned integer")))?
            }
            "q_list" => self.q_list = parse_list(key, v)?,
            "s_list" => self.s_list = parse_list(key, v)?,
            "r_list" => self.r_list = parse_list(key, v)?,
            "keep_inadmissible" => self.keep_inadmissible = parse_bool(key, v)?,
            "deterministic" => self.deterministic = parse_bool(key, v)?,
            "output_dir" => self.output_dir = PathBuf::from(v),
            "ndjson" => self.ndjson = parse_bool(key, v)?,
            other => return Err(Error::Config(format!("unknown configuration key '{other}'"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected 'key = value', got '{line}'", no + 1)))?;
            self.set(k, v).map_err(|e| match e {
                Error::Config(m) => Error::Config(format!("line {}: {m}", no + 1)),
                other => other,
            })?;
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut c = Self::default();
        c.apply_text(text)?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Applies `key=value` overrides in order.
    pub fn apply_overrides<S: AsRef<str>>(&mut self, overrides: &[S]) -> Result<()> {
        for o in overrides {
            let o = o.as_ref();
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override '{o}' is not of the form key=value")))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    fn pairs(&self) -> Vec<(&'static str, String)> {
        let opt = |v: Option<f64>| v.map_or_else(|| "default".to_string(), num);
        vec![
            ("n", self.n.to_string()),
            ("beta", num(self.beta)),
            ("t_end", num(self.t_end)),
            ("output_interval", num(self.output_interval)),
            ("checkpoint_interval", num(self.checkpoint_interval)),
            ("cfl_number", num(self.cfl_number)),
            ("dt_max", num(self.dt_max)),
            ("dealias_fraction", num(self.dealias_fraction)),
            ("nonlinear", self.nonlinear.to_string()),
            ("diffusion", self.diffusion.to_string()),
            ("ic", self.ic.kind.name().to_string()),
            ("ic.amplitude_u", opt(self.ic.amplitude_u)),
            ("ic.amplitude_b", opt(self.ic.amplitude_b)),
            ("ic.k_min", num(self.ic.k_min)),
            ("ic.k_max", num(self.ic.k_max)),
            ("ic.slope", num(self.ic.slope)),
            ("seed", self.seed.to_string()),
            ("q_list", list(&self.q_list)),
            ("s_list", list(&self.s_list)),
            ("r_list", list(&self.r_list)),
            ("keep_inadmissible", self.keep_inadmissible.to_string()),
            ("deterministic", self.deterministic.to_string()),
            ("output_dir", self.output_dir.display().to_string()),
            ("ndjson", self.ndjson.to_string()),
        ]
    }

    /// Every key in canonical form; parsing this text gives back `self`
    /// (amplitudes shown as `default` are skipped on re-read).
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.pairs() {
            if v == "default" {
                let _ = writeln!(s, "# {k} = default");
            } else {
                let _ = writeln!(s, "{k} = {v}");
            }
        }
        s
    }

    /// SHA-256 over the canonical values of every key that affects the
    /// trajectory and its records.
    pub fn digest(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        for (k, v) in self.pairs() {
            if NON_PHYSICS_KEYS.contains(&k) {
                continue;
            }
            h.update(k.as_bytes());
            h.update(b"=");
            h.update(v.as_bytes());
            h.update(b"\n");
        }
        h.finalize().into()
    }

    pub fn digest_hex(&self) -> String {
        hex::encode(self.digest())
    }

    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::with_dealias(self.n, self.dealias_fraction).map_err(to_config)
    }

    pub fn step_control(&self) -> StepControl {
        StepControl {
            cfl_number: self.cfl_number,
            dt_max: self.dt_max,
            nonlinear_enabled: self.nonlinear,
            diffusion_enabled: self.diffusion,
        }
    }

    pub fn range_params(&self) -> RangeParams {
        RangeParams {
            beta: self.beta,
            q_list: self.q_list.clone(),
            s_list: self.s_list.clone(),
            r_list: self.r_list.clone(),
        }
    }

    /// Checks every field. Inadmissible exponents are not errors, see
    /// [`RunConfig::range_warnings`].
    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        check_beta(self.beta).map_err(to_config)?;
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::Config(format!("t_end must be finite and >= 0, got {}", self.t_end)));
        }
        if !(self.output_interval > 0.0 && self.output_interval.is_finite()) {
            return Err(Error::Config(format!("output_interval must be > 0, got {}", self.output_interval)));
        }
        if !(self.checkpoint_interval >= 0.0 && self.checkpoint_interval.is_finite()) {
            return Err(Error::Config(format!(
                "checkpoint_interval must be finite and >= 0, got {}",
                self.checkpoint_interval
            )));
        }
        self.step_control().validate().map_err(to_config)?;
        for (what, v) in [("q_list", &self.q_list), ("r_list", &self.r_list)] {
            if let Some(bad) = v.iter().find(|x| x.is_nan() || **x < 1.0) {
                return Err(Error::Config(format!("{what}: exponent {bad} is below 1")));
            }
        }
        if let Some(bad) = self.s_list.iter().find(|s| !s.is_finite()) {
            return Err(Error::Config(format!("s_list: smoothness {bad} is not finite")));
        }
        Ok(())
    }

    /// One line per inadmissible diagnostic exponent.
    pub fn range_warnings(&self) -> Vec<String> {
        let action = if self.keep_inadmissible { "kept" } else { "dropped" };
        self.range_params()
            .validate()
            .failures()
            .map(|f| format!("{}: {} ({action})", f.parameter, f.verdict))
            .collect()
    }

    /// Number of outputs between checkpoints, or `None` for final-only.
    pub fn checkpoint_every(&self) -> Option<u64> {
        if self.checkpoint_interval == 0.0 {
            None
        } else {
            Some(((self.checkpoint_interval / self.output_interval).round() as u64).max(1))
        }
    }

    /// Index of the last output time `k·Δ <= t_end`.
    pub fn last_output_index(&self) -> u64 {
        (self.t_end / self.output_interval * (1.0 + 1e-12)).floor() as u64
    }
}

fn to_config(e: Error) -> Error {
    match e {
        Error::InvalidArgument(m) => Error::Config(m),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_round_trip() {
        let text =
            "# comment\nn = 32\nbeta=1.25  # trailing\nq_list = 2, 4, inf\nic = random_band\nic.amplitude_u = 0.5\n";
        let c = RunConfig::parse(text).unwrap();
        assert_eq!(c.n, 32);
        assert_eq!(c.beta, 1.25);
        assert_eq!(c.q_list, vec![2.0, 4.0, f64::INFINITY]);
        assert_eq!(c.ic.kind, IcKind::RandomBand);
        assert_eq!(c.ic.amplitude_u, Some(0.5));
        assert_eq!(c.ic.amplitude_b, None);
        let again = RunConfig::parse(&c.to_text()).unwrap();
        assert_eq!(again, c);
        assert_eq!(again.digest(), c.digest());
    }

    #[test]
    fn errors_name_the_problem() {
        assert!(matches!(RunConfig::parse("bogus = 1"), Err(Error::Config(m)) if m.contains("bogus")));
        assert!(matches!(RunConfig::parse("n 3"), Err(Error::Config(m)) if m.contains("line 1")));
        assert!(matches!(RunConfig::parse("ic = vortex"), Err(Error::Config(_))));
        assert!(RunConfig::parse("beta = 2.5").unwrap().validate().is_err());
        assert!(RunConfig::parse("output_interval = 0").unwrap().validate().is_err());
        assert!(RunConfig::parse("t_end = -1").unwrap().validate().is_err());
        assert!(RunConfig::parse("n = 7").unwrap().validate().is_err());
        assert!(RunConfig::parse("q_list = 0.5").unwrap().validate().is_err());
    }

    #[test]
    fn digest_ignores_bookkeeping_keys() {
        let a = RunConfig::default();
        let mut b = a.clone();
        b.apply_overrides(&["t_end=7", "output_dir=/tmp/x", "ndjson=true", "checkpoint_interval=0.5"]).unwrap();
        assert_eq!(a.digest(), b.digest());
        b.set("beta", "1.6").unwrap();
        assert_ne!(a.digest(), b.digest());
        assert_eq!(a.digest_hex().len(), 64);
    }

    #[test]
    fn output_schedule() {
        let c = RunConfig::parse("t_end = 1\noutput_interval = 0.1\ncheckpoint_interval = 0.25").unwrap();
        assert_eq!(c.last_output_index(), 10);
        assert_eq!(c.checkpoint_every(), Some(3));
        let c = RunConfig::parse("t_end = 0.35\noutput_interval = 0.1").unwrap();
        assert_eq!(c.last_output_index(), 3);
        assert_eq!(c.checkpoint_every(), None);
        assert_eq!(RunConfig::parse("t_end = 0").unwrap().last_output_index(), 0);
    }
}
