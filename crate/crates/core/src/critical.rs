//! Critical points, contact fraction, transition order and the
//! large-deviation rate of the contact density.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::disorder::DisorderLaw;
use crate::error::{PinningError, Result};
use crate::excursion::ExcursionLaw;
use crate::free_energy::{annealed_shift, free_energy_det, free_energy_quenched_mc};
use crate::numeric::{bisect_predicate, golden_min};
use crate::partition::PinningSystem;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriticalCase {
    /// `a_E > 0`: `u_c^d = -log M_E(a_E) ∈ [-∞, 0)`.
    ExponentiallyRecurrent,
    /// `a_E = 0`: `u_c^d = -log P(E₁ < ∞) ∈ [0, ∞)`.
    SubExponential,
}

/// Deterministic critical point at `β = 1`; divide by `β` for other `β`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetCritical {
    #[serde(with = "crate::extreal")]
    pub u_c: f64,
    pub case: CriticalCase,
}

pub fn u_c_det(law: &ExcursionLaw) -> DetCritical {
    let a = law.analytics();
    let case = if a.exponentially_recurrent {
        CriticalCase::ExponentiallyRecurrent
    } else {
        CriticalCase::SubExponential
    };
    DetCritical {
        u_c: -a.log_m_e_at_a_e,
        case,
    }
}

/// `u_c^d(β) = u_c^d(1) / β`.
pub fn u_c_det_at(beta: f64, law: &ExcursionLaw) -> f64 {
    u_c_det(law).u_c / beta
}

/// `u_c^a(β) = u_c^d(β) - β⁻¹ log M_V(β)`.
pub fn u_c_annealed(beta: f64, law: &ExcursionLaw, disorder: &DisorderLaw) -> Result<f64> {
    Ok(u_c_det_at(beta, law) - annealed_shift(beta, disorder)?)
}

/// Locates the sign change of `βf^d(β,·) + a_E` by bisection; an independent
/// route to the closed form. `None` when no change is found in `[lo, hi]`.
pub fn u_c_det_by_bisection(beta: f64, law: &ExcursionLaw, lo: f64, hi: f64, tol: f64) -> Option<f64> {
    let a_e = law.a_e();
    let pinned = |u: f64| free_energy_det(beta, u, law).value > -a_e;
    if pinned(lo) || !pinned(hi) {
        return None;
    }
    let (l, h) = bisect_predicate(pinned, lo, hi, tol);
    Some(0.5 * (l + h))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuenchedConfig {
    pub n_list: Vec<usize>,
    pub replicas: usize,
    pub confidence: f64,
    pub seed: u64,
    /// Target width of the returned interval.
    pub tol: f64,
    /// Initial bracket is `[u_c^a - margin, u_c^d + margin]`.
    pub margin: f64,
    pub max_steps: usize,
}

impl Default for QuenchedConfig {
    fn default() -> Self {
        Self {
            n_list: vec![512, 2048, 8192],
            replicas: 32,
            confidence: 0.95,
            seed: 0,
            tol: 0.01,
            margin: 0.25,
            max_steps: 40,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateStatus {
    Converged,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestPoint {
    pub u: f64,
    pub n: usize,
    /// `βf^q_MC(u) + a_E`.
    pub statistic: f64,
    pub stderr: f64,
    pub pinned: bool,
}

/// `[largest u failing the test, smallest u passing it]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuenchedInterval {
    pub lo: f64,
    pub hi: f64,
    pub confidence: f64,
    /// One-sided normal quantile used in the test.
    pub z: f64,
    pub n: usize,
    pub replicas: usize,
    pub seed: u64,
    pub status: EstimateStatus,
    pub evaluations: Vec<TestPoint>,
}

/// One-sided standard normal quantile.
pub fn one_sided_z(confidence: f64) -> f64 {
    Normal::standard().inverse_cdf(confidence)
}

/// `βf^q_MC(u) + a_E` and its standard error at size `n`; the same replica
/// seeds are used for every `u` (common random numbers).
pub fn quenched_test(
    beta: f64,
    u: f64,
    law: &ExcursionLaw,
    disorder: &DisorderLaw,
    n: usize,
    replicas: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    let system = PinningSystem::new(beta, u, law.clone(), disorder.clone())?;
    let est = free_energy_quenched_mc(&system, n, replicas, seed)?;
    Ok((est.value + law.a_e(), est.stderr))
}

/// Bisection on `u` of the test `βf^q_MC(u) + a_E > z · stderr` at the
/// largest size in `cfg.n_list`.
pub fn u_c_quenched_estimate(
    beta: f64,
    law: &ExcursionLaw,
    disorder: &DisorderLaw,
    cfg: &QuenchedConfig,
) -> Result<QuenchedInterval> {
    let u_det = u_c_det_at(beta, law);
    if !u_det.is_finite() {
        return Err(PinningError::Precondition(
            "the quenched critical point estimate needs a finite deterministic critical point".into(),
        ));
    }
    let n = *cfg
        .n_list
        .iter()
        .max()
        .ok_or_else(|| PinningError::Precondition("n_list is empty".into()))?;
    if !(cfg.confidence > 0.5 && cfg.confidence < 1.0) {
        return Err(PinningError::Precondition(format!("confidence must lie in (0.5, 1), got {}", cfg.confidence)));
    }
    let z = one_sided_z(cfg.confidence);
    // heavy-tailed disorder has no annealed point; start one margin below u_c^d
    let u_ann = u_c_annealed(beta, law, disorder).unwrap_or(u_det - 1.0);
    let mut evaluations = Vec::new();
    let test = |u: f64, evaluations: &mut Vec<TestPoint>| -> Result<bool> {
        let (statistic, stderr) = quenched_test(beta, u, law, disorder, n, cfg.replicas, cfg.seed)?;
        let pinned = statistic > z * stderr;
        evaluations.push(TestPoint {
            u,
            n,
            statistic,
            stderr,
            pinned,
        });
        Ok(pinned)
    };

    let mut lo = u_ann - cfg.margin;
    let mut hi = u_det + cfg.margin;
    let mut inconclusive = false;
    let mut expansions = 0;
    while test(lo, &mut evaluations)? {
        expansions += 1;
        if expansions > 4 {
            inconclusive = true;
            break;
        }
        lo -= cfg.margin * (1 << expansions) as f64;
    }
    expansions = 0;
    while !inconclusive && !test(hi, &mut evaluations)? {
        expansions += 1;
        if expansions > 4 {
            inconclusive = true;
            break;
        }
        hi += cfg.margin * (1 << expansions) as f64;
    }
    let mut steps = 0;
    while !inconclusive && hi - lo > cfg.tol && steps < cfg.max_steps {
        let mid = 0.5 * (lo + hi);
        if test(mid, &mut evaluations)? {
            hi = mid;
        } else {
            lo = mid;
        }
        steps += 1;
    }
    let status = if inconclusive || hi - lo > cfg.tol {
        EstimateStatus::Inconclusive
    } else {
        EstimateStatus::Converged
    };
    Ok(QuenchedInterval {
        lo,
        hi,
        confidence: cfg.confidence,
        z,
        n,
        replicas: cfg.replicas,
        seed: cfg.seed,
        status,
        evaluations,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContactFraction {
    pub value: f64,
    /// Set when `u` sits exactly at `u_c^d(β)`, where the limit is reported
    /// as 0 although it may jump.
    pub at_boundary: bool,
}

/// Maximizing `δ*` of the deterministic variational problem.
pub fn contact_fraction(beta: f64, u: f64, law: &ExcursionLaw) -> ContactFraction {
    let u_c = u_c_det_at(beta, law);
    if u <= u_c {
        return ContactFraction {
            value: 0.0,
            at_boundary: u == u_c,
        };
    }
    let e = free_energy_det(beta, u, law);
    ContactFraction {
        value: e.argmax_delta.unwrap_or(0.0),
        at_boundary: false,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransitionOrder {
    Continuous,
    FirstOrder,
    UndefinedUcInfinite,
}

pub fn transition_order(law: &ExcursionLaw) -> TransitionOrder {
    let a = law.analytics();
    if u_c_det(law).u_c == f64::NEG_INFINITY {
        TransitionOrder::UndefinedUcInfinite
    } else if a.exponentially_recurrent || a.m_e.is_infinite() {
        TransitionOrder::Continuous
    } else {
        TransitionOrder::FirstOrder
    }
}

/// `inf_{δ < x ≤ η} g(x)`, the exponential decay rate of `P(δn < L_n ≤ ηn)`
/// for the free chain.
pub fn ld_rate_contacts(law: &ExcursionLaw, delta: f64, eta: f64) -> Result<f64> {
    if !(0.0 <= delta && delta < eta && eta <= 1.0) {
        return Err(PinningError::Precondition(format!(
            "need 0 <= delta < eta <= 1, got ({delta}, {eta})"
        )));
    }
    let delta_e = law.analytics().delta_e;
    if delta < delta_e && delta_e <= eta {
        return Ok(0.0);
    }
    let (d_lo, d_hi) = law.g_domain();
    let lo = delta.max(d_lo);
    let hi = eta.min(d_hi);
    if lo > hi || (lo == hi && lo == delta) {
        return Ok(f64::INFINITY);
    }
    // the infimum over the half-open interval equals the minimum over its
    // closure because g is continuous on the interior of its domain
    let (_, v) = golden_min(|x| law.g(x), lo, hi, 1e-10);
    Ok(v.max(0.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalReport {
    pub beta: f64,
    #[serde(with = "crate::extreal")]
    pub u_c_det: f64,
    pub det_case: CriticalCase,
    /// `None` when `M_V(β) = ∞`.
    #[serde(with = "crate::extreal::option")]
    pub u_c_ann: Option<f64>,
    pub u_c_quenched: Option<QuenchedInterval>,
    /// `(u, C(β, u))` samples.
    pub contact_fraction_curve: Vec<(f64, f64)>,
    pub transition_order: TransitionOrder,
}

pub fn critical_report(
    beta: f64,
    law: &ExcursionLaw,
    disorder: &DisorderLaw,
    u_grid: &[f64],
    quenched: Option<&QuenchedConfig>,
) -> Result<CriticalReport> {
    let det = u_c_det(law);
    let u_c_ann = match u_c_annealed(beta, law, disorder) {
        Ok(v) => Some(v),
        Err(PinningError::InfiniteMgf { .. }) => None,
        Err(e) => return Err(e),
    };
    let u_c_quenched = match quenched {
        Some(cfg) if det.u_c.is_finite() && !disorder.is_degenerate() => {
            Some(u_c_quenched_estimate(beta, law, disorder, cfg)?)
        }
        _ => None,
    };
    let contact_fraction_curve = u_grid.iter().map(|&u| (u, contact_fraction(beta, u, law).value)).collect();
    Ok(CriticalReport {
        beta,
        u_c_det: det.u_c / beta,
        det_case: det.case,
        u_c_ann,
        u_c_quenched,
        contact_fraction_curve,
        transition_order: transition_order(law),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Pinned,
    Depinned,
    Uncertain,
}

impl Phase {
    pub fn as_str(&self) -> &'static str {
        match self {
            Phase::Pinned => "pinned",
            Phase::Depinned => "depinned",
            Phase::Uncertain => "uncertain",
        }
    }
}

/// Phase at `(β, u)`: depinned below `u_c^a`, pinned above `u_c^d`, and in
/// between pinned only when the quenched test passes.
#[allow(clippy::too_many_arguments)]
pub fn classify_phase(
    beta: f64,
    u: f64,
    law: &ExcursionLaw,
    disorder: &DisorderLaw,
    n: usize,
    replicas: usize,
    seed: u64,
    z: f64,
) -> Result<Phase> {
    let u_det = u_c_det_at(beta, law);
    if u > u_det {
        return Ok(Phase::Pinned);
    }
    let u_ann = match u_c_annealed(beta, law, disorder) {
        Ok(v) => v,
        Err(PinningError::InfiniteMgf { .. }) => f64::NEG_INFINITY,
        Err(e) => return Err(e),
    };
    if u < u_ann || (disorder.is_degenerate() && u <= u_det) {
        return Ok(Phase::Depinned);
    }
    let (stat, se) = quenched_test(beta, u, law, disorder, n, replicas, seed)?;
    Ok(if stat > z * se { Phase::Pinned } else { Phase::Uncertain })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms() {
        assert_eq!(u_c_det(&ExcursionLaw::zeta(1.5, 0.0).unwrap()).u_c, 0.0);
        let d = u_c_det(&ExcursionLaw::zeta(1.5, 0.3).unwrap());
        assert!((d.u_c + 0.7f64.ln()).abs() < 1e-12);
        assert_eq!(d.case, CriticalCase::SubExponential);
        assert_eq!(u_c_det(&ExcursionLaw::geometric(0.5, 0.0).unwrap()).u_c, f64::NEG_INFINITY);
        let law = ExcursionLaw::zeta(1.5, 0.3).unwrap();
        let g = DisorderLaw::gaussian(1.0).unwrap();
        let a = u_c_annealed(2.0, &law, &g).unwrap();
        assert!((a - (-0.7f64.ln() / 2.0 - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn bisection_matches_closed_form() {
        let law = ExcursionLaw::zeta(1.5, 0.3).unwrap();
        let u = u_c_det_by_bisection(1.0, &law, -1.0, 2.0, 1e-6).unwrap();
        assert!((u + 0.7f64.ln()).abs() < 1e-4, "{u}");
    }

    #[test]
    fn orders() {
        assert_eq!(
            transition_order(&ExcursionLaw::geometric(0.5, 0.0).unwrap()),
            TransitionOrder::UndefinedUcInfinite
        );
        assert_eq!(transition_order(&ExcursionLaw::zeta(3.0, 0.3).unwrap()), TransitionOrder::FirstOrder);
        assert_eq!(transition_order(&ExcursionLaw::zeta(1.5, 0.3).unwrap()), TransitionOrder::Continuous);
    }

    #[test]
    fn contact_fraction_examples() {
        let fixed = ExcursionLaw::fixed(2).unwrap();
        assert!((contact_fraction(1.0, 5.0, &fixed).value - 0.5).abs() < 1e-9);
        let z = ExcursionLaw::zeta(3.0, 0.3).unwrap();
        assert_eq!(contact_fraction(1.0, -1.0, &z).value, 0.0);
        let u_c = u_c_det(&z).u_c;
        let c = contact_fraction(1.0, u_c + 1e-6, &z).value;
        assert!(c >= 1.0 / z.analytics().m_e - 1e-3, "{c}");
    }

    #[test]
    fn ld_rate_examples() {
        let fixed = ExcursionLaw::fixed(2).unwrap();
        assert_eq!(ld_rate_contacts(&fixed, 0.1, 0.3).unwrap(), f64::INFINITY);
        let geo = ExcursionLaw::geometric(0.5, 0.0).unwrap();
        assert_eq!(ld_rate_contacts(&geo, 0.4, 0.6).unwrap(), 0.0);
        // g(x) = x log(2x) + (1-x) log(2(1-x)) for K(k) = 2^{-k}
        let g = |x: f64| x * (2.0 * x).ln() + (1.0 - x) * (2.0 * (1.0 - x)).ln();
        assert!((ld_rate_contacts(&geo, 0.7, 0.9).unwrap() - g(0.7)).abs() < 1e-9);
        assert!(ld_rate_contacts(&geo, 0.5, 0.4).is_err());
    }

    #[test]
    fn z_quantile() {
        assert!((one_sided_z(0.95) - 1.6448536269514722).abs() < 1e-9);
    }
}
