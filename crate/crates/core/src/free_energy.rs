//! Deterministic, annealed and quenched free energies, reported in the `βf`
//! convention (the limit of `(1/n) log Z_n`).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::disorder::DisorderLaw;
use crate::error::{PinningError, Result};
use crate::excursion::ExcursionLaw;
use crate::numeric::golden_max;
use crate::partition::{endpoint_log_partition, trace, LawTable, PinningSystem};
use crate::rng::derive_seed;

/// Smallest size accepted by the finite-volume estimators.
pub const MIN_FINITE_N: usize = 64;

const DELTA_TOL: f64 = 1e-11;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Variational,
    FiniteVolume,
    QuenchedMc,
    AnnealedShift,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Variational => "variational",
            Method::FiniteVolume => "finite_volume",
            Method::QuenchedMc => "quenched_mc",
            Method::AnnealedShift => "annealed_shift",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FreeEnergyEstimate {
    #[serde(with = "crate::extreal")]
    pub value: f64,
    pub stderr: f64,
    /// System size; 0 for the variational formulas.
    pub n: usize,
    pub samples: usize,
    pub method: Method,
    /// Maximizing contact density `δ*` of the variational problem.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub argmax_delta: Option<f64>,
    /// Across-replica standard deviation of `(1/n) log Z_n`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replica_sd: Option<f64>,
    /// `(1/n) log Z_n - (2/n) log Z_{n/2}`, a heuristic size for the
    /// finite-volume bias; `value + correction` is the Richardson step.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub finite_size_correction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl FreeEnergyEstimate {
    fn variational(value: f64, delta: f64, method: Method) -> Self {
        Self {
            value,
            stderr: 0.0,
            n: 0,
            samples: 0,
            method,
            argmax_delta: Some(delta),
            replica_sd: None,
            finite_size_correction: None,
            seed: None,
        }
    }

    /// `value + finite_size_correction` when the correction is available.
    pub fn extrapolated(&self) -> f64 {
        self.value + self.finite_size_correction.unwrap_or(0.0)
    }
}

/// `sup_{δ ∈ [0,1]} (βuδ - g(δ))` and its maximizer, with `g(0) = a_E`.
pub fn free_energy_det(beta: f64, u: f64, law: &ExcursionLaw) -> FreeEnergyEstimate {
    let bu = beta * u;
    let a_e = law.a_e();
    let (lo, hi) = law.g_domain();
    let objective = |d: f64| bu * d - law.g(d);
    let (mut delta, mut value) = golden_max(objective, lo, hi, DELTA_TOL);
    // δ = 0 lies outside the domain when `a_E = ∞` but always contributes -a_E
    if -a_e >= value {
        delta = 0.0;
        value = 0.0 - a_e;
    }
    FreeEnergyEstimate::variational(value, delta, Method::Variational)
}

/// `(1/n) log Z_n` for one realization (or `V ≡ 0` when `None`), with the
/// `n` vs `n/2` difference reported as a finite-size correction.
pub fn free_energy_finite(
    system: &PinningSystem,
    realization: Option<&crate::disorder::DisorderRealization>,
    n: usize,
) -> Result<FreeEnergyEstimate> {
    if n < MIN_FINITE_N {
        return Err(PinningError::Precondition(format!("finite-volume estimates need n >= {MIN_FINITE_N}, got {n}")));
    }
    let zeros;
    let r = match realization {
        Some(r) => r,
        None => {
            zeros = crate::disorder::DisorderRealization::zeros(n);
            &zeros
        }
    };
    let t = trace(system, r, n)?;
    let half = n / 2;
    let f_n = t.log_z[n] / n as f64;
    let f_half = t.log_z[half] / half as f64;
    Ok(FreeEnergyEstimate {
        value: f_n,
        stderr: 0.0,
        n,
        samples: 1,
        method: Method::FiniteVolume,
        argmax_delta: None,
        replica_sd: None,
        finite_size_correction: Some(f_n - f_half),
        seed: realization.map(|r| r.seed),
    })
}

/// Deterministic free energy at the shifted parameter `u + β⁻¹ log M_V(β)`.
pub fn free_energy_annealed(
    beta: f64,
    u: f64,
    law: &ExcursionLaw,
    disorder: &DisorderLaw,
) -> Result<FreeEnergyEstimate> {
    let shifted = annealed_shift(beta, disorder)?;
    let mut est = free_energy_det(beta, u + shifted, law);
    est.method = Method::AnnealedShift;
    Ok(est)
}

/// `β⁻¹ log M_V(β)` (0 at `β = 0`).
pub fn annealed_shift(beta: f64, disorder: &DisorderLaw) -> Result<f64> {
    if beta == 0.0 {
        return Ok(0.0);
    }
    let lm = disorder.log_mgf(beta);
    if !lm.is_finite() {
        return Err(PinningError::InfiniteMgf { beta });
    }
    Ok(lm / beta)
}

/// Per-replica `(log Z_n, log Z_{n/2})` for replicas `0..replicas` with seeds
/// `derive_seed(seed, r)`; the output order is the replica order regardless
/// of scheduling.
pub fn replica_log_partitions(system: &PinningSystem, n: usize, replicas: usize, seed: u64) -> Vec<(f64, f64)> {
    let table = LawTable::new(&system.law, n);
    (0..replicas)
        .into_par_iter()
        .map(|r| {
            let realization = system.disorder.sample(n, derive_seed(seed, r as u64));
            let weights: Vec<f64> = realization.values.iter().map(|v| system.beta * (system.u + v)).collect();
            endpoint_log_partition(&table, &weights, n)
        })
        .collect()
}

/// Sample mean, standard deviation and standard error, folded in input order.
pub fn mean_sd_stderr(xs: &[f64]) -> (f64, f64, f64) {
    let k = xs.len();
    if k == 0 {
        return (f64::NAN, f64::NAN, f64::NAN);
    }
    if xs.iter().all(|&x| x == xs[0]) {
        return (xs[0], 0.0, 0.0);
    }
    let mean = xs.iter().sum::<f64>() / k as f64;
    if k < 2 {
        return (mean, 0.0, 0.0);
    }
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    let sd = (ss / (k - 1) as f64).sqrt();
    (mean, sd, sd / (k as f64).sqrt())
}

/// Monte Carlo estimate of `βf^q` from independent disorder replicas.
pub fn free_energy_quenched_mc(system: &PinningSystem, n: usize, replicas: usize, seed: u64) -> Result<FreeEnergyEstimate> {
    if replicas < 2 {
        return Err(PinningError::Precondition(format!("need at least 2 replicas, got {replicas}")));
    }
    if n < MIN_FINITE_N {
        return Err(PinningError::Precondition(format!("finite-volume estimates need n >= {MIN_FINITE_N}, got {n}")));
    }
    let logs = replica_log_partitions(system, n, replicas, seed);
    let half = n / 2;
    let f_n: Vec<f64> = logs.iter().map(|(z, _)| z / n as f64).collect();
    let f_half: Vec<f64> = logs.iter().map(|(_, z)| z / half as f64).collect();
    let (mean, sd, se) = mean_sd_stderr(&f_n);
    let (mean_half, _, _) = mean_sd_stderr(&f_half);
    Ok(FreeEnergyEstimate {
        value: mean,
        stderr: se,
        n,
        samples: replicas,
        method: Method::QuenchedMc,
        argmax_delta: None,
        replica_sd: Some(sd),
        finite_size_correction: Some(mean - mean_half),
        seed: Some(seed),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_law_variational() {
        let law = ExcursionLaw::fixed(2).unwrap();
        let e = free_energy_det(1.0, 1.0, &law);
        assert!((e.value - 0.5).abs() < 1e-12);
        assert!((e.argmax_delta.unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn flat_phase_equals_minus_a_e() {
        let law = ExcursionLaw::zeta(1.5, 0.0).unwrap();
        let e = free_energy_det(1.0, -1.0, &law);
        assert_eq!(e.value, 0.0);
        assert_eq!(e.argmax_delta, Some(0.0));
    }

    #[test]
    fn geometric_closed_form() {
        // K(k) = 2^{-k}: Z_n = ((1 + e^{βu}) / 2)^n
        let law = ExcursionLaw::geometric(0.5, 0.0).unwrap();
        for u in [-1.0, 0.0, 0.7, 2.0] {
            let e = free_energy_det(1.0, u, &law);
            let exact = ((1.0 + f64::exp(u)) / 2.0).ln();
            assert!((e.value - exact).abs() < 1e-9, "u = {u}: {} vs {exact}", e.value);
        }
    }

    #[test]
    fn finite_volume_fixed_law() {
        let sys = PinningSystem::deterministic(1.0, 1.0, ExcursionLaw::fixed(2).unwrap()).unwrap();
        let e = free_energy_finite(&sys, None, 4096).unwrap();
        assert!((e.value - 0.5).abs() < 1e-12);
    }

    #[test]
    fn degenerate_disorder_has_zero_stderr() {
        let sys = PinningSystem::deterministic(1.0, 0.3, ExcursionLaw::zeta(1.5, 0.0).unwrap()).unwrap();
        let q = free_energy_quenched_mc(&sys, 256, 4, 7).unwrap();
        let f = free_energy_finite(&sys, None, 256).unwrap();
        assert_eq!(q.stderr, 0.0);
        assert_eq!(q.value, f.value);
    }

    #[test]
    fn annealed_gaussian_shift() {
        let law = ExcursionLaw::zeta(1.5, 0.0).unwrap();
        let g = DisorderLaw::gaussian(1.0).unwrap();
        let a = free_energy_annealed(1.0, 0.2, &law, &g).unwrap();
        let d = free_energy_det(1.0, 0.7, &law);
        assert!((a.value - d.value).abs() < 1e-12);
        let heavy = DisorderLaw::shifted_pareto(1.5, 1.0).unwrap();
        assert!(matches!(free_energy_annealed(1.0, 0.0, &law, &heavy), Err(PinningError::InfiniteMgf { .. })));
    }
}
