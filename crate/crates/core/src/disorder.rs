//! Single-site disorder laws on `[0, M]`.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, Continuous, ContinuousCDF};

use crate::{Error, Result};

/// Shape of the single-site law, on the normalized variable `s = t / M`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Law {
    Uniform {},
    /// CDF `s^τ`; `τ >= 1` keeps the density bounded.
    PowerTail {
        tau: f64,
    },
    /// Beta(a, b) with `a, b >= 1`.
    Beta {
        a: f64,
        b: f64,
    },
    /// Point mass at `value` (in units of `t`, not `s`). Degenerate; used
    /// for deterministic reference runs.
    Constant {
        value: f64,
    },
    /// Law of `M - ω` for `ω` drawn from the inner law.
    Reflected {
        inner: Box<Law>,
    },
}

/// A law together with its support bound `M`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisorderSpec {
    pub law: Law,
    pub m: f64,
}

impl DisorderSpec {
    pub fn new(law: Law, m: f64) -> Result<Self> {
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::invalid(format!("M must be positive and finite, got {m}")));
        }
        validate(&law, m)?;
        Ok(DisorderSpec { law, m })
    }

    pub fn uniform(m: f64) -> Result<Self> {
        Self::new(Law::Uniform {}, m)
    }

    pub fn power_tail(m: f64, tau: f64) -> Result<Self> {
        Self::new(Law::PowerTail { tau }, m)
    }

    pub fn beta(m: f64, a: f64, b: f64) -> Result<Self> {
        Self::new(Law::Beta { a, b }, m)
    }

    pub fn constant(m: f64, value: f64) -> Result<Self> {
        Self::new(Law::Constant { value }, m)
    }

    /// The law of `ω̃ = M - ω`.
    pub fn reflected(&self) -> Self {
        let law = match &self.law {
            Law::Reflected { inner } => (**inner).clone(),
            other => Law::Reflected { inner: Box::new(other.clone()) },
        };
        DisorderSpec { law, m: self.m }
    }

    pub fn cdf(&self, t: f64) -> f64 {
        cdf(&self.law, self.m, t)
    }

    /// Generalized inverse of the CDF, for `u ∈ [0, 1)`.
    pub fn quantile(&self, u: f64) -> f64 {
        quantile(&self.law, self.m, u).clamp(0.0, self.m)
    }

    /// `μ̄`
    pub fn mean(&self) -> f64 {
        moments(&self.law, self.m).0
    }

    pub fn variance(&self) -> f64 {
        moments(&self.law, self.m).1
    }

    /// Supremum of the density; infinite for the point mass.
    pub fn density_bound(&self) -> f64 {
        density_bound(&self.law, self.m)
    }

    pub fn is_deterministic(&self) -> bool {
        matches!(&self.law, Law::Constant { .. })
            || matches!(&self.law, Law::Reflected { inner } if matches!(**inner, Law::Constant { .. }))
    }

    /// Inverse-CDF draw from one uniform variate.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        self.quantile(u)
    }
}

fn validate(law: &Law, m: f64) -> Result<()> {
    match law {
        Law::Uniform {} => Ok(()),
        Law::PowerTail { tau } if *tau >= 1.0 && tau.is_finite() => Ok(()),
        Law::PowerTail { tau } => Err(Error::invalid(format!("power-tail τ must be >= 1, got {tau}"))),
        Law::Beta { a, b } if *a >= 1.0 && *b >= 1.0 && a.is_finite() && b.is_finite() => Ok(()),
        Law::Beta { a, b } => Err(Error::invalid(format!("beta parameters must be >= 1, got ({a}, {b})"))),
        Law::Constant { value } if (0.0..=m).contains(value) => Ok(()),
        Law::Constant { value } => Err(Error::invalid(format!("constant {value} outside [0, {m}]"))),
        Law::Reflected { inner } => validate(inner, m),
    }
}

fn beta(a: f64, b: f64) -> Beta {
    Beta::new(a, b).expect("validated beta parameters")
}

fn cdf(law: &Law, m: f64, t: f64) -> f64 {
    if t < 0.0 {
        return 0.0;
    }
    if t >= m {
        return 1.0;
    }
    let s = t / m;
    match law {
        Law::Uniform {} => s,
        Law::PowerTail { tau } => s.powf(*tau),
        Law::Beta { a, b } => beta(*a, *b).cdf(s),
        Law::Constant { value } => (t >= *value) as u8 as f64,
        // P(M - ω <= t) = 1 - P(ω < M - t)
        Law::Reflected { inner } => match &**inner {
            Law::Constant { value } => (m - value <= t) as u8 as f64,
            other => 1.0 - cdf(other, m, m - t),
        },
    }
}

fn quantile(law: &Law, m: f64, u: f64) -> f64 {
    match law {
        Law::Uniform {} => m * u,
        Law::PowerTail { tau } => m * u.powf(1.0 / tau),
        Law::Beta { a, b } => m * beta(*a, *b).inverse_cdf(u),
        Law::Constant { value } => *value,
        Law::Reflected { inner } => m - quantile(inner, m, 1.0 - u),
    }
}

fn moments(law: &Law, m: f64) -> (f64, f64) {
    match law {
        Law::Uniform {} => (m / 2.0, m * m / 12.0),
        Law::PowerTail { tau } => {
            let mean = tau / (tau + 1.0);
            let second = tau / (tau + 2.0);
            (m * mean, m * m * (second - mean * mean))
        }
        Law::Beta { a, b } => {
            let s = a + b;
            (m * a / s, m * m * a * b / (s * s * (s + 1.0)))
        }
        Law::Constant { value } => (*value, 0.0),
        Law::Reflected { inner } => {
            let (mean, var) = moments(inner, m);
            (m - mean, var)
        }
    }
}

fn density_bound(law: &Law, m: f64) -> f64 {
    match law {
        Law::Uniform {} => 1.0 / m,
        Law::PowerTail { tau } => tau / m,
        Law::Beta { a, b } => {
            let dist = beta(*a, *b);
            let mode = if a + b > 2.0 { (a - 1.0) / (a + b - 2.0) } else { 0.5 };
            dist.pdf(mode) / m
        }
        Law::Constant { .. } => f64::INFINITY,
        Law::Reflected { inner } => density_bound(inner, m),
    }
}

/// Outcome of checking `μ̃((0, t]) <= α t^τ` on a grid.
#[derive(Clone, Debug, Serialize)]
pub struct TailReport {
    pub holds: bool,
    /// `min_t (α t^τ - CDF(t))`; negative where the bound fails.
    pub worst_margin: f64,
    pub worst_t: f64,
    pub alpha: f64,
    pub tau: f64,
}

/// Checks the small-`t` tail bound on an already reflected law, using its
/// exact CDF. Ties are accepted up to a relative `1e-12` of `α t^τ`.
pub fn check_tail_condition(
    reflected: &DisorderSpec,
    alpha: f64,
    tau: f64,
    dim: usize,
    tgrid: &[f64],
) -> Result<TailReport> {
    if alpha <= 0.0 {
        return Err(Error::invalid("α must be positive"));
    }
    if tau <= dim as f64 / 2.0 {
        return Err(Error::invalid(format!("τ = {tau} must exceed d/2 = {}", dim as f64 / 2.0)));
    }
    if tgrid.is_empty() || tgrid.iter().any(|&t| t <= 0.0) {
        return Err(Error::invalid("t grid must be nonempty and positive"));
    }
    let mut holds = true;
    let mut worst_margin = f64::INFINITY;
    let mut worst_t = tgrid[0];
    for &t in tgrid {
        let bound = alpha * t.powf(tau);
        // μ̃((0, t]) = F(t) - F(0)
        let mass = reflected.cdf(t) - reflected.cdf(0.0);
        let margin = bound - mass;
        if margin < -1e-12 * bound.max(f64::MIN_POSITIVE) {
            holds = false;
        }
        if margin < worst_margin {
            worst_margin = margin;
            worst_t = t;
        }
    }
    Ok(TailReport { holds, worst_margin, worst_t, alpha, tau })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn grid() -> Vec<f64> {
        (1..=50).map(|i| 1e-3 * i as f64).collect()
    }

    #[test]
    fn cdf_endpoints_and_monotonicity() {
        let laws = [
            DisorderSpec::uniform(2.0).unwrap(),
            DisorderSpec::power_tail(2.0, 3.0).unwrap(),
            DisorderSpec::beta(2.0, 2.0, 5.0).unwrap(),
            DisorderSpec::uniform(2.0).unwrap().reflected(),
            DisorderSpec::power_tail(2.0, 1.5).unwrap().reflected(),
        ];
        for law in &laws {
            assert_eq!(law.cdf(0.0), 0.0);
            assert_eq!(law.cdf(2.0), 1.0);
            let mut prev = 0.0;
            for i in 0..=200 {
                let v = law.cdf(i as f64 * 0.01);
                assert!(v >= prev - 1e-15);
                prev = v;
            }
            assert!(law.density_bound().is_finite());
        }
    }

    #[test]
    fn quantile_inverts_cdf() {
        let law = DisorderSpec::beta(3.0, 2.0, 3.0).unwrap();
        for u in [0.01, 0.3, 0.5, 0.9] {
            assert!((law.cdf(law.quantile(u)) - u).abs() < 1e-8);
        }
        let law = DisorderSpec::power_tail(3.0, 2.0).unwrap().reflected();
        for u in [0.01, 0.3, 0.5, 0.9] {
            assert!((law.cdf(law.quantile(u)) - u).abs() < 1e-12);
        }
    }

    #[test]
    fn empirical_mean_matches() {
        for law in [
            DisorderSpec::uniform(1.0).unwrap(),
            DisorderSpec::power_tail(2.0, 2.0).unwrap(),
            DisorderSpec::beta(1.0, 2.0, 2.0).unwrap(),
        ] {
            let mut rng = stream(99, 0);
            let n = 100_000;
            let xs: Vec<f64> = (0..n).map(|_| law.sample(&mut rng)).collect();
            assert!(xs.iter().all(|x| (0.0..=law.m).contains(x)));
            let mean = xs.iter().sum::<f64>() / n as f64;
            let se = (law.variance() / n as f64).sqrt();
            assert!((mean - law.mean()).abs() < 3.0 * se, "{law:?}: {mean} vs {}", law.mean());
        }
    }

    #[test]
    fn reflection_is_an_involution() {
        let law = DisorderSpec::power_tail(2.0, 2.0).unwrap();
        assert_eq!(law.reflected().reflected(), law);
        assert!((law.reflected().mean() - (2.0 - law.mean())).abs() < 1e-15);
    }

    #[test]
    fn rejects_unregular_laws() {
        assert!(DisorderSpec::power_tail(1.0, 0.5).is_err());
        assert!(DisorderSpec::beta(1.0, 0.5, 2.0).is_err());
        assert!(DisorderSpec::uniform(0.0).is_err());
        assert!(DisorderSpec::constant(1.0, 2.0).is_err());
    }

    #[test]
    fn tail_uniform_tau_one_equality() {
        let m = 2.0;
        let rep = check_tail_condition(&DisorderSpec::uniform(m).unwrap(), 1.0 / m, 1.0, 1, &grid()).unwrap();
        assert!(rep.holds);
        assert!(rep.worst_margin.abs() < 1e-15);
    }

    #[test]
    fn tail_power_law_equality() {
        let (m, tau) = (3.0, 2.5);
        let law = DisorderSpec::power_tail(m, tau).unwrap();
        let rep = check_tail_condition(&law, m.powf(-tau), tau, 2, &grid()).unwrap();
        assert!(rep.holds);
        assert!(rep.worst_margin.abs() < 1e-15);
    }

    #[test]
    fn tail_uniform_tau_two_fails() {
        let rep = check_tail_condition(&DisorderSpec::uniform(1.0).unwrap(), 1.0, 2.0, 1, &grid()).unwrap();
        assert!(!rep.holds);
        assert!(rep.worst_margin < 0.0);
        assert!(check_tail_condition(&DisorderSpec::uniform(1.0).unwrap(), 1.0, 0.5, 1, &grid()).is_err());
    }
}
