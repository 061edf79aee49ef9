//! Admissible exponents for the monitored norms.
//!
//! ```text
//! Lebesgue  2 <= q <= 2/(2-β)          (2 <= q < ∞ when β = 2)
//! Besov     2/q < s < 2β - 1
//! gradient  2 <= r < 2/(4-3β)  if β <= 4/3,   2 <= r <= ∞ otherwise
//! ```
//!
//! All three hold only for `1 < β <= 2`; other exponents are reported as
//! outside the hypothesis rather than rejected.

use std::fmt;

/// An interval of the real line with independently open or closed ends.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub lo_closed: bool,
    pub hi: f64,
    pub hi_closed: bool,
}

impl Interval {
    pub fn contains(&self, v: f64) -> bool {
        let above = if self.lo_closed { v >= self.lo } else { v > self.lo };
        let below = if self.hi_closed { v <= self.hi } else { v < self.hi };
        above && below
    }

    /// Name of the end that `v` violates, or `None` when `v` is inside.
    fn violated(&self, v: f64, name: &str) -> Option<String> {
        if v.is_nan() {
            return Some(format!("{name} is NaN"));
        }
        let above = if self.lo_closed { v >= self.lo } else { v > self.lo };
        if !above {
            let op = if self.lo_closed { ">=" } else { ">" };
            return Some(format!("{name} {op} {}", fmt_num(self.lo)));
        }
        let below = if self.hi_closed { v <= self.hi } else { v < self.hi };
        if !below {
            let op = if self.hi_closed { "<=" } else { "<" };
            return Some(format!("{name} {op} {}", fmt_num(self.hi)));
        }
        None
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}, {}{}",
            if self.lo_closed { '[' } else { '(' },
            fmt_num(self.lo),
            fmt_num(self.hi),
            if self.hi_closed { ']' } else { ')' }
        )
    }
}

pub(crate) fn fmt_num(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        let s = format!("{v:.6}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

pub fn within_hypothesis(beta: f64) -> bool {
    beta > 1.0 && beta <= 2.0
}

/// Admissible Lebesgue exponents `q`.
pub fn q_interval(beta: f64) -> Interval {
    if beta == 2.0 {
        Interval { lo: 2.0, lo_closed: true, hi: f64::INFINITY, hi_closed: false }
    } else {
        Interval { lo: 2.0, lo_closed: true, hi: 2.0 / (2.0 - beta), hi_closed: true }
    }
}

/// Admissible Besov smoothness `s` for a given `q`.
pub fn s_interval(beta: f64, q: f64) -> Interval {
    Interval { lo: 2.0 / q, lo_closed: false, hi: 2.0 * beta - 1.0, hi_closed: false }
}

/// Admissible gradient exponents `r`.
pub fn r_interval(beta: f64) -> Interval {
    if beta > 4.0 / 3.0 {
        Interval { lo: 2.0, lo_closed: true, hi: f64::INFINITY, hi_closed: true }
    } else {
        Interval { lo: 2.0, lo_closed: true, hi: 2.0 / (4.0 - 3.0 * beta), hi_closed: false }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Verdict {
    Admissible,
    /// The named inequality fails.
    Inadmissible(String),
    OutsideHypothesis,
}

impl Verdict {
    pub fn is_admissible(&self) -> bool {
        matches!(self, Verdict::Admissible)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Admissible => f.write_str("admissible"),
            Verdict::Inadmissible(c) => write!(f, "inadmissible (needs {c})"),
            Verdict::OutsideHypothesis => f.write_str("outside theorem hypothesis (needs 1 < beta <= 2)"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Parameter {
    Q(f64),
    /// Smoothness `s` paired with Lebesgue exponent `q`.
    S {
        s: f64,
        q: f64,
    },
    R(f64),
}

impl fmt::Display for Parameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Parameter::Q(q) => write!(f, "q = {}", fmt_num(*q)),
            Parameter::S { s, q } => write!(f, "s = {} (q = {})", fmt_num(*s), fmt_num(*q)),
            Parameter::R(r) => write!(f, "r = {}", fmt_num(*r)),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RangeCheck {
    pub parameter: Parameter,
    pub interval: Interval,
    pub verdict: Verdict,
}

/// `(β, q, s, r)` as requested for a run.
#[derive(Clone, Debug, PartialEq)]
pub struct RangeParams {
    pub beta: f64,
    pub q_list: Vec<f64>,
    pub s_list: Vec<f64>,
    pub r_list: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdmissibilityReport {
    pub beta: f64,
    pub within_hypothesis: bool,
    pub checks: Vec<RangeCheck>,
}

impl AdmissibilityReport {
    pub fn all_admissible(&self) -> bool {
        self.checks.iter().all(|c| c.verdict.is_admissible())
    }

    pub fn failures(&self) -> impl Iterator<Item = &RangeCheck> {
        self.checks.iter().filter(|c| !c.verdict.is_admissible())
    }
}

impl fmt::Display for AdmissibilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "beta = {}", fmt_num(self.beta))?;
        if !self.within_hypothesis {
            writeln!(f, "  beta is outside the theorem hypothesis 1 < beta <= 2")?;
        }
        for c in &self.checks {
            writeln!(f, "  {:<22} range {:<18} {}", c.parameter.to_string(), c.interval.to_string(), c.verdict)?;
        }
        Ok(())
    }
}

fn judge(beta: f64, interval: Interval, value: f64, name: &str) -> Verdict {
    if !within_hypothesis(beta) {
        return Verdict::OutsideHypothesis;
    }
    match interval.violated(value, name) {
        None => Verdict::Admissible,
        Some(c) => Verdict::Inadmissible(c),
    }
}

/// Checks every `q`, every `(q, s)` pair and every `r`.
pub fn validate_ranges(beta: f64, q_list: &[f64], s_list: &[f64], r_list: &[f64]) -> AdmissibilityReport {
    let mut checks = Vec::new();
    let qi = q_interval(beta);
    for &q in q_list {
        checks.push(RangeCheck { parameter: Parameter::Q(q), interval: qi, verdict: judge(beta, qi, q, "q") });
    }
    for &q in q_list {
        for &s in s_list {
            let si = s_interval(beta, q);
            checks.push(RangeCheck {
                parameter: Parameter::S { s, q },
                interval: si,
                verdict: judge(beta, si, s, "s"),
            });
        }
    }
    let ri = r_interval(beta);
    for &r in r_list {
        checks.push(RangeCheck { parameter: Parameter::R(r), interval: ri, verdict: judge(beta, ri, r, "r") });
    }
    AdmissibilityReport { beta, within_hypothesis: within_hypothesis(beta), checks }
}

impl RangeParams {
    pub fn validate(&self) -> AdmissibilityReport {
        validate_ranges(self.beta, &self.q_list, &self.s_list, &self.r_list)
    }

    /// The Besov pair used when no smoothness is requested: `q = 2` and `s`
    /// at the midpoint of `(1, 2β - 1)`, which is `β`.
    pub fn default_besov_pair(beta: f64) -> (f64, f64) {
        (beta, 2.0)
    }

    /// Keeps the admissible entries. Outside the hypothesis every entry is
    /// kept, since no range can be checked there.
    pub fn admissible_subset(&self) -> RangeParams {
        if !within_hypothesis(self.beta) {
            return self.clone();
        }
        let qi = q_interval(self.beta);
        let ri = r_interval(self.beta);
        RangeParams {
            beta: self.beta,
            q_list: self.q_list.iter().copied().filter(|&q| qi.contains(q)).collect(),
            s_list: self.s_list.clone(),
            r_list: self.r_list.iter().copied().filter(|&r| ri.contains(r)).collect(),
        }
    }

    /// `(s, q)` pairs for Besov diagnostics.
    pub fn besov_pairs(&self, keep_inadmissible: bool) -> Vec<(f64, f64)> {
        if self.s_list.is_empty() {
            return vec![Self::default_besov_pair(self.beta)];
        }
        let qs: Vec<f64> = if self.q_list.is_empty() { vec![2.0] } else { self.q_list.clone() };
        let mut pairs = Vec::new();
        for &q in &qs {
            for &s in &self.s_list {
                let ok = !within_hypothesis(self.beta)
                    || (q_interval(self.beta).contains(q) && s_interval(self.beta, q).contains(s));
                if ok || keep_inadmissible {
                    pairs.push((s, q));
                }
            }
        }
        pairs
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lebesgue_range_examples() {
        let r = validate_ranges(1.5, &[1.9, 2.0, 3.0, 4.0, 4.01], &[], &[]);
        let ok: Vec<bool> = r.checks.iter().map(|c| c.verdict.is_admissible()).collect();
        assert_eq!(ok, vec![false, true, true, true, false]);
        assert_eq!(r.checks[4].verdict, Verdict::Inadmissible("q <= 4".into()));
        assert_eq!(r.checks[0].verdict, Verdict::Inadmissible("q >= 2".into()));
        let r2 = validate_ranges(2.0, &[2.0, 1e6, f64::INFINITY], &[], &[]);
        let ok: Vec<bool> = r2.checks.iter().map(|c| c.verdict.is_admissible()).collect();
        assert_eq!(ok, vec![true, true, false]);
    }

    #[test]
    fn besov_and_gradient_examples() {
        let r = validate_ranges(1.5, &[4.0], &[0.5, 0.51, 1.0, 1.99, 2.0], &[]);
        let s: Vec<bool> = r.checks[1..].iter().map(|c| c.verdict.is_admissible()).collect();
        assert_eq!(s, vec![false, true, true, true, false]);
        let r = validate_ranges(1.2, &[], &[], &[2.0, 4.99, 5.0, 1.5]);
        let ok: Vec<bool> = r.checks.iter().map(|c| c.verdict.is_admissible()).collect();
        assert_eq!(ok, vec![true, true, false, false]);
        let r = validate_ranges(1.5, &[], &[], &[8.0, f64::INFINITY]);
        assert!(r.all_admissible());
    }

    #[test]
    fn outside_hypothesis_is_reported() {
        let r = validate_ranges(0.9, &[2.0], &[1.0], &[2.0]);
        assert!(!r.within_hypothesis);
        assert!(r.checks.iter().all(|c| c.verdict == Verdict::OutsideHypothesis));
        let p = RangeParams { beta: 1.0, q_list: vec![7.0], s_list: vec![], r_list: vec![] };
        assert_eq!(p.admissible_subset().q_list, vec![7.0]);
    }

    #[test]
    fn subsets_and_default_pair() {
        let p = RangeParams { beta: 1.1, q_list: vec![2.0, 4.0], s_list: vec![], r_list: vec![2.0, 30.0] };
        let sub = p.admissible_subset();
        assert_eq!(sub.q_list, vec![2.0]);
        assert_eq!(sub.r_list, vec![2.0]);
        assert_eq!(p.besov_pairs(false), vec![(1.1, 2.0)]);
        let p = RangeParams { beta: 1.5, q_list: vec![2.0, 4.0], s_list: vec![0.8, 1.5], r_list: vec![] };
        assert_eq!(p.besov_pairs(false), vec![(1.5, 2.0), (0.8, 4.0), (1.5, 4.0)]);
        assert_eq!(p.besov_pairs(true).len(), 4);
    }
}
