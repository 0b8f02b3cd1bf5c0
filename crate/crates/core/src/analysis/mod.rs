//! Closed forms for availability, bribery and Sybil resistance, a Monte
//! Carlo check of the availability model, and cost reports.

mod cost;

use serde::{Deserialize, Serialize};

pub use cost::{cost_analytic, cost_report, CostBreakdown, CostLine, CostMode};

use crate::contracts::LayerAssignment;
use crate::ledger::Amount;
use crate::rng::SimRng;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AnalysisError {
    #[error("parameter out of domain: {0}")]
    Domain(&'static str),
    #[error("with l = 1 the expected deposit falls monotonically towards p_M = 0; there is no interior optimum")]
    DegenerateLayer,
    #[error("trace calls `{0}`, which the gas schedule does not price")]
    UnknownFunction(alloc::string::String),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AvailabilityParams {
    pub l: u32,
    pub t: u32,
    pub n: u32,
    pub a_t: f64,
}

impl AvailabilityParams {
    pub fn validate(&self) -> Result<(), AnalysisError> {
        if self.l == 0 {
            return Err(AnalysisError::Domain("l >= 1"));
        }
        if self.t == 0 || self.t > self.n {
            return Err(AnalysisError::Domain("1 <= t <= n"));
        }
        if !(0.0..=1.0).contains(&self.a_t) {
            return Err(AnalysisError::Domain("A_T in [0, 1]"));
        }
        Ok(())
    }

    /// Per-share loss probability `P = 1 − A_T^l`.
    pub fn loss(&self) -> f64 {
        1.0 - libm::pow(self.a_t, self.l as f64)
    }

    pub fn service(&self) -> Result<f64, AnalysisError> {
        availability(self.l, self.t, self.n, self.a_t)
    }
}

/// Compensated summation.
struct Kahan {
    sum: f64,
    c: f64,
}

impl Kahan {
    fn new() -> Self {
        Self { sum: 0.0, c: 0.0 }
    }

    fn add(&mut self, x: f64) {
        let y = x - self.c;
        let t = self.sum + y;
        self.c = (t - self.sum) - y;
        self.sum = t;
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Service availability: the probability that at least `t` of the `n`
/// shares survive, each share being lost with probability `P = 1 − A_T^l`.
///
/// `A_S = 1 − Σ_{i=n−t+1}^{n} C(n,i) P^i (1−P)^{n−i}`. The failure tail is
/// summed directly rather than as `1 − CDF`, which keeps the small terms.
pub fn availability(l: u32, t: u32, n: u32, a_t: f64) -> Result<f64, AnalysisError> {
    let p = AvailabilityParams { l, t, n, a_t };
    p.validate()?;
    let loss = p.loss();
    let mut tail = Kahan::new();
    for i in (n - t + 1)..=n {
        tail.add(binomial(n, i) * libm::pow(loss, i as f64) * libm::pow(1.0 - loss, (n - i) as f64));
    }
    Ok((1.0 - tail.sum).clamp(0.0, 1.0))
}

/// Fraction of `trials` in which at least `t` shares survive. Every share
/// has its own `l` holders, each present independently with probability
/// `A_T`.
pub fn availability_mc(l: u32, t: u32, n: u32, a_t: f64, trials: u32, seed: u64) -> Result<f64, AnalysisError> {
    AvailabilityParams { l, t, n, a_t }.validate()?;
    if trials == 0 {
        return Err(AnalysisError::Domain("trials >= 1"));
    }
    let mut rng = SimRng::from_label(seed, "availability-mc");
    let mut ok = 0u32;
    for _ in 0..trials {
        let survivors = (0..n).filter(|_| (0..l).fold(true, |alive, _| rng.bernoulli(a_t) & alive)).count();
        if survivors >= t as usize {
            ok += 1;
        }
    }
    Ok(ok as f64 / trials as f64)
}

/// Cheapest bribery when every share has `l` dedicated holders: `t·l·d`.
pub fn bribery_cost(t: u32, l: u32, d: Amount) -> Amount {
    t as Amount * l as Amount * d
}

/// Cheapest bribery for a concrete layout. With cyclic layering `t`
/// adjacent shares share holders, so `min(t + l − 1, n)` keys suffice.
pub fn bribery_cost_for(assignment: LayerAssignment, t: u32, l: u32, n: u32, d: Amount) -> Amount {
    match assignment {
        LayerAssignment::Disjoint => bribery_cost(t, l, d),
        LayerAssignment::Cyclic => (t + l - 1).min(n) as Amount * d,
    }
}

fn check_sybil(l: u32, t: u32, n: u32) -> Result<(), AnalysisError> {
    if l == 0 {
        return Err(AnalysisError::Domain("l >= 1"));
    }
    if t == 0 || t > n {
        return Err(AnalysisError::Domain("1 <= t <= n"));
    }
    Ok(())
}

/// Deposit the Sybil adversary stakes per `t` expected captured shares.
///
/// With `x` adversarial and `v` innocent mailmen, `p_M = x/(x+v)`, so
/// `x = v·p_M/(1−p_M)`. A share is captured with probability `p_M^l`, so a
/// service yields `n·p_M^l` captured shares on average and `t` of them cost
/// `x·d·t/(n·p_M^l)`:
///
/// `d̂ = (v·d·t/n) · p_M^(1−l) / (1−p_M)`.
pub fn sybil_expected_deposit(l: u32, v: f64, d: f64, t: u32, n: u32, p_m: f64) -> Result<f64, AnalysisError> {
    check_sybil(l, t, n)?;
    if !(p_m > 0.0 && p_m < 1.0) {
        return Err(AnalysisError::Domain("0 < p_M < 1"));
    }
    Ok(v * d * t as f64 / n as f64 * libm::pow(p_m, 1.0 - l as f64) / (1.0 - p_m))
}

/// Minimiser of [`sybil_expected_deposit`].
///
/// `d/dp ln d̂ = (1−l)/p + 1/(1−p)`, which vanishes at `p = (l−1)/l`. For
/// `l = 1` the derivative is `1/(1−p) > 0` everywhere and the infimum sits
/// at the boundary `p → 0`.
pub fn optimal_sybil_fraction(l: u32) -> Result<f64, AnalysisError> {
    match l {
        0 => Err(AnalysisError::Domain("l >= 1")),
        1 => Err(AnalysisError::DegenerateLayer),
        _ => Ok((l - 1) as f64 / l as f64),
    }
}

/// Adversarial registrations at the optimum: `x* = v·p*/(1−p*) = (l−1)·v`.
pub fn optimal_sybil_count(l: u32, v: u32) -> Result<u32, AnalysisError> {
    optimal_sybil_fraction(l)?;
    Ok((l - 1) * v)
}

/// Deposit the adversary stakes at the optimum, `x*·d = (l−1)·v·d`.
///
/// This is the quantity the security argument bounds. It is not the value
/// of `d̂` at its minimum: substituting `p* = (l−1)/l` into `d̂` gives
/// `(v·d·t/n)·l^l/(l−1)^(l−1)`, see [`sybil_expected_deposit_min`]; the
/// `t/n` factor survives. Choosing `x*` fixes how many mailmen the
/// adversary must fund, and those `x*·d` are at stake whatever the yield.
pub fn sybil_min_deposit(l: u32, v: f64, d: f64) -> f64 {
    l.saturating_sub(1) as f64 * v * d
}

/// `min d̂ = (v·d·t/n) · l^l / (l−1)^(l−1)`.
pub fn sybil_expected_deposit_min(l: u32, v: f64, d: f64, t: u32, n: u32) -> Result<f64, AnalysisError> {
    check_sybil(l, t, n)?;
    optimal_sybil_fraction(l)?;
    let lf = l as f64;
    Ok(v * d * t as f64 / n as f64 * libm::pow(lf, lf) / libm::pow(lf - 1.0, lf - 1.0))
}
