//! Explicit lower bounds on the quenched partition function from a greedy
//! trajectory that returns to the defect at high-reward sites, and the
//! symbolic sufficient conditions for pinning at every `u`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::disorder::{DisorderFamily, DisorderLaw, DisorderRealization};
use crate::error::{PinningError, Result};
use crate::excursion::{ExcursionFamily, ExcursionLaw};
use crate::partition::PinningSystem;
use crate::rng::{derive_seed, stream};

/// Largest aperiodicity floor accepted.
pub const MAX_L0: u64 = 1000;
/// Number of tail masses in the threshold search.
pub const THRESHOLD_GRID: usize = 32;

const AUX_STREAM: u64 = 0x5eed_a0c5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategyBound {
    pub n: usize,
    /// Reward threshold `M`.
    pub m: f64,
    pub l0: u64,
    pub l1: u64,
    /// `min K(l)` over `l0 ≤ l ≤ min(l1, n)`.
    pub theta: f64,
    /// Probability with which a site exactly at an atom `M` counts as a
    /// reward site (1 without randomization).
    pub atom_acceptance: f64,
    pub j_plus: Vec<usize>,
    pub j_minus: Vec<usize>,
    #[serde(with = "crate::extreal")]
    pub log_z_lower: f64,
    #[serde(with = "crate::extreal")]
    pub per_site_rate: f64,
}

impl StrategyBound {
    pub fn j_minus_fraction(&self) -> f64 {
        let total = self.j_plus.len() + self.j_minus.len();
        if total == 0 {
            0.0
        } else {
            self.j_minus.len() as f64 / total as f64
        }
    }
}

fn aperiodicity_floor(law: &ExcursionLaw) -> Result<u64> {
    let l0 = law
        .aperiodicity_floor()
        .ok_or_else(|| PinningError::Precondition("the law has no l0 with K(k) > 0 for all k >= l0".into()))?;
    if l0 > MAX_L0 {
        return Err(PinningError::Budget(format!("aperiodicity floor {l0} exceeds {MAX_L0}")));
    }
    Ok(l0)
}

/// Greedy bound at threshold `M` with `l1 = floor(1 / Ḡ_V(M))`.
pub fn greedy_bound(system: &PinningSystem, realization: &DisorderRealization, m: f64, n: usize) -> Result<StrategyBound> {
    let tail = system.disorder.tail_prob(m);
    if tail <= 0.0 {
        return Err(PinningError::Precondition(format!("P(V >= {m}) = 0")));
    }
    greedy_core(system, realization, n, m, 1.0, l1_from_mass(tail))
}

fn l1_from_mass(mass: f64) -> u64 {
    (1.0 / mass + 1e-9).floor().max(1.0) as u64
}

fn greedy_core(
    system: &PinningSystem,
    realization: &DisorderRealization,
    n: usize,
    m: f64,
    atom_acceptance: f64,
    l1: u64,
) -> Result<StrategyBound> {
    if realization.len() < n {
        return Err(PinningError::Precondition(format!("realization has {} sites, need {n}", realization.len())));
    }
    let law = &system.law;
    let l0 = aperiodicity_floor(law)?;
    // an empty window would stall the construction; any gap ≥ l0 is admissible
    let l1 = l1.max(l0);
    let v = &realization.values;
    let aux_seed = derive_seed(realization.seed, AUX_STREAM);
    let qualifies = |i: usize| {
        let x = v[i - 1];
        x > m || (x == m && (atom_acceptance >= 1.0 || stream(aux_seed, i as u64).random::<f64>() < atom_acceptance))
    };

    let mut theta_log = f64::INFINITY;
    for l in l0..=l1.min(n as u64) {
        theta_log = theta_log.min(law.log_pmf(l));
    }
    let (mut j_plus, mut j_minus) = (Vec::new(), Vec::new());
    let bu = system.beta * system.u;
    let mut log_z = 0.0;
    let mut prev = 0usize;
    loop {
        let start = prev + l0 as usize;
        if start > n {
            break;
        }
        let end = prev + l1 as usize;
        let hit = (start..=end.min(n)).find(|&i| qualifies(i));
        let i = match hit {
            Some(i) => i,
            None if end <= n => end,
            None => break,
        };
        if hit.is_some() {
            j_plus.push(i);
            log_z += bu + system.beta * m;
        } else {
            j_minus.push(i);
            log_z += bu + system.beta * v[i - 1];
        }
        log_z += law.log_pmf((i - prev) as u64);
        prev = i;
    }
    log_z += law.log_tail((n - prev) as u64);
    Ok(StrategyBound {
        n,
        m,
        l0,
        l1,
        theta: theta_log.exp(),
        atom_acceptance,
        j_plus,
        j_minus,
        log_z_lower: log_z,
        per_site_rate: log_z / n as f64,
    })
}

/// Tail masses `1/2 = t_0 > ... > t_31 = 1/n`, geometrically spaced.
pub fn threshold_grid(n: usize) -> Vec<f64> {
    let lo = (1.0 / n as f64).ln();
    let hi = 0.5f64.ln();
    (0..THRESHOLD_GRID)
        .map(|k| (hi + (lo - hi) * k as f64 / (THRESHOLD_GRID - 1) as f64).exp())
        .collect()
}

/// Bound at the threshold `M = Ḡ_V⁻¹(1/l1)` for a given `l1`, randomizing
/// the acceptance of an atom at `M` so that reward sites have mass exactly
/// `1/l1` whenever `1/l1 ≤ Ḡ_V(0)`.
pub fn bound_at_l1(system: &PinningSystem, realization: &DisorderRealization, n: usize, l1: u64) -> Result<StrategyBound> {
    let d = &system.disorder;
    let target = 1.0 / l1 as f64;
    let m = d.tail_quantile(target);
    let at_least = d.tail_prob(m);
    let atom = d.atom_mass(m);
    let above = at_least - atom;
    let (acceptance, mass) = if atom > 0.0 && above < target && target <= at_least {
        ((target - above) / atom, target)
    } else {
        (1.0, at_least)
    };
    if mass <= 0.0 {
        return Err(PinningError::Precondition(format!("P(V >= {m}) = 0")));
    }
    greedy_core(system, realization, n, m, acceptance, l1_from_mass(mass))
}

/// Best bound over the tail-mass grid; ties keep the earliest grid point.
pub fn optimize_threshold(system: &PinningSystem, realization: &DisorderRealization, n: usize) -> Result<StrategyBound> {
    let mut l1s: Vec<u64> = threshold_grid(n).into_iter().map(l1_from_mass).collect();
    l1s.dedup();
    let bounds: Vec<Result<StrategyBound>> =
        l1s.par_iter().map(|&l1| bound_at_l1(system, realization, n, l1)).collect();
    let mut best: Option<StrategyBound> = None;
    for b in bounds {
        let b = b?;
        if best.as_ref().is_none_or(|x| b.log_z_lower > x.log_z_lower) {
            best = Some(b);
        }
    }
    best.ok_or_else(|| PinningError::Precondition("empty threshold grid".into()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    PinningAllU,
    ConditionNotMet,
    Unknown,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerdictReport {
    pub verdict: Verdict,
    pub reason: String,
}

/// Symbolic check of the sufficient conditions for pinning at all `(β, u)`:
/// a polynomially decaying excursion law with disorder lacking a finite
/// exponential moment, or an exponentially decaying law with stretched or
/// power-law disorder tails.
pub fn corollary17_verdict(law: &ExcursionLaw, disorder: &DisorderLaw) -> VerdictReport {
    let report = |verdict, reason: &str| VerdictReport {
        verdict,
        reason: reason.into(),
    };
    let heavy_disorder = matches!(
        disorder.family(),
        DisorderFamily::ShiftedPareto { .. } | DisorderFamily::StretchedExpTail { .. }
    );
    match &law.spec().family {
        ExcursionFamily::Custom { .. } => report(
            Verdict::Unknown,
            "custom laws specify only finitely many probabilities; asymptotic tail conditions cannot be decided",
        ),
        ExcursionFamily::Fixed { .. } => report(
            Verdict::ConditionNotMet,
            "finite support: P(E1 = k) vanishes for large k",
        ),
        ExcursionFamily::Zeta { .. } if heavy_disorder => report(
            Verdict::PinningAllU,
            "polynomial excursion tail and disorder without a finite exponential moment",
        ),
        ExcursionFamily::Geometric { .. } if heavy_disorder => report(
            Verdict::PinningAllU,
            "exponential excursion tail and disorder with stretched or power-law upper tail",
        ),
        _ => report(
            Verdict::ConditionNotMet,
            "the disorder has all exponential moments",
        ),
    }
}
