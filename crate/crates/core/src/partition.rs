//! Exact finite-volume partition functions by the last-return (renewal)
//! recursion, carried out in log-space.
//!
//! With site weights `w_k = β(u + V_k)`, the pinned weights satisfy
//! `c_0 = 1`, `c_k = e^{w_k} Σ_{j=1}^{k} K(j) c_{k-j}`, and the free
//! partition function is `Z_k = Σ_{m ≤ k} c_m P(E₁ > k - m)`.

use serde::{Deserialize, Serialize};

use crate::disorder::{DisorderLaw, DisorderRealization};
use crate::error::{PinningError, Result};
use crate::excursion::ExcursionLaw;
use crate::numeric::LogAccumulator;

pub const DEFAULT_CONTACT_CAP: usize = 1024;
pub const BRUTE_FORCE_MAX_N: usize = 20;

/// Terms smaller than `max · e^{-SKIP}` are dropped from a row sum; their
/// total relative contribution is below `n e^{-SKIP}`.
const SKIP: f64 = 60.0;

/// `(β, u, excursion law, disorder law)`.
#[derive(Clone, Debug)]
pub struct PinningSystem {
    pub beta: f64,
    pub u: f64,
    pub law: ExcursionLaw,
    pub disorder: DisorderLaw,
}

impl PinningSystem {
    pub fn new(beta: f64, u: f64, law: ExcursionLaw, disorder: DisorderLaw) -> Result<Self> {
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(PinningError::Precondition(format!("beta must be finite and nonnegative, got {beta}")));
        }
        if !u.is_finite() {
            return Err(PinningError::Precondition(format!("u must be finite, got {u}")));
        }
        Ok(Self { beta, u, law, disorder })
    }

    /// Deterministic model `V ≡ 0`.
    pub fn deterministic(beta: f64, u: f64, law: ExcursionLaw) -> Result<Self> {
        Self::new(beta, u, law, DisorderLaw::degenerate())
    }

    pub fn with_u(&self, u: f64) -> Self {
        Self { u, ..self.clone() }
    }

    /// `β(u + V_k)` for `k = 1..=n` (index `k - 1`).
    pub fn site_weights(&self, realization: &DisorderRealization, n: usize) -> Result<Vec<f64>> {
        if realization.len() < n {
            return Err(PinningError::Precondition(format!(
                "realization has {} sites, need {n}",
                realization.len()
            )));
        }
        Ok(realization.values[..n].iter().map(|v| self.beta * (self.u + v)).collect())
    }
}

/// `log K(j)` for `j = 1..=n` and `log P(E₁ > k)` for `k = 0..=n`, evaluated
/// once per law and size and shared by every realization.
#[derive(Clone, Debug)]
pub struct LawTable {
    pub n: usize,
    pub log_pmf: Vec<f64>,
    pub log_tail: Vec<f64>,
    /// Gap lengths `j ≤ n` with `K(j) > 0`.
    pub support: Vec<usize>,
}

impl LawTable {
    pub fn new(law: &ExcursionLaw, n: usize) -> Self {
        let mut log_pmf = vec![f64::NEG_INFINITY; n + 1];
        for (j, slot) in log_pmf.iter_mut().enumerate().skip(1) {
            *slot = law.log_pmf(j as u64);
        }
        let log_tail = (0..=n as u64).map(|k| law.log_tail(k)).collect();
        let support = (1..=n).filter(|&j| log_pmf[j] > f64::NEG_INFINITY).collect();
        Self {
            n,
            log_pmf,
            log_tail,
            support,
        }
    }
}

/// Log pinned weights `log_c[0..=n]` and free partition functions
/// `log_z[0..=n]` for one realization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionTrace {
    pub n: usize,
    pub log_c: Vec<f64>,
    pub log_z: Vec<f64>,
}

impl PartitionTrace {
    pub fn log_z_n(&self) -> f64 {
        self.log_z[self.n]
    }

    /// CSV rows `(k, log_c, log_z)`.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["k", "log_c", "log_z"])?;
        for k in 0..=self.n {
            out.write_record([
                k.to_string(),
                crate::extreal::format(self.log_c[k]),
                crate::extreal::format(self.log_z[k]),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Row sum `log Σ_{j ∈ support, j ≤ k} exp(log_pmf[j] + log_c[k - j])`.
#[inline]
fn renewal_row(table: &LawTable, log_c: &[f64], k: usize, scratch: &mut Vec<f64>) -> f64 {
    scratch.clear();
    let mut max = f64::NEG_INFINITY;
    for &j in &table.support {
        if j > k {
            break;
        }
        let a = table.log_pmf[j] + log_c[k - j];
        scratch.push(a);
        if a > max {
            max = a;
        }
    }
    if max == f64::NEG_INFINITY {
        return max;
    }
    let cut = max - SKIP;
    let mut s = 0.0;
    for &a in scratch.iter() {
        if a > cut {
            s += (a - max).exp();
        }
    }
    max + s.ln()
}

/// Pinned weights `log_c[0..=n]` from site weights `w[0..n]`.
pub fn pinned_log_weights(table: &LawTable, weights: &[f64], n: usize) -> Vec<f64> {
    assert!(n <= table.n && n <= weights.len());
    let mut log_c = vec![f64::NEG_INFINITY; n + 1];
    log_c[0] = 0.0;
    let mut scratch = Vec::with_capacity(table.support.len());
    for k in 1..=n {
        log_c[k] = weights[k - 1] + renewal_row(table, &log_c, k, &mut scratch);
    }
    log_c
}

/// `log Z_k` from pinned weights, via the last-return decomposition.
pub fn free_log_partition(table: &LawTable, log_c: &[f64], k: usize) -> f64 {
    let mut max = f64::NEG_INFINITY;
    for m in 0..=k {
        max = max.max(log_c[m] + table.log_tail[k - m]);
    }
    if max == f64::NEG_INFINITY {
        return max;
    }
    let mut s = 0.0;
    for m in 0..=k {
        let a = log_c[m] + table.log_tail[k - m];
        if a > max - SKIP {
            s += (a - max).exp();
        }
    }
    max + s.ln()
}

/// Full trace from precomputed tables and site weights.
pub fn trace_from_weights(table: &LawTable, weights: &[f64], n: usize) -> PartitionTrace {
    let log_c = pinned_log_weights(table, weights, n);
    let log_z = (0..=n).map(|k| free_log_partition(table, &log_c, k)).collect();
    PartitionTrace { n, log_c, log_z }
}

/// `(log Z_n, log Z_{n/2})` without materializing the whole `log_z` array.
pub fn endpoint_log_partition(table: &LawTable, weights: &[f64], n: usize) -> (f64, f64) {
    let log_c = pinned_log_weights(table, weights, n);
    (free_log_partition(table, &log_c, n), free_log_partition(table, &log_c, n / 2))
}

/// Exact trace for `system` on the first `n` sites of `realization`.
pub fn trace(system: &PinningSystem, realization: &DisorderRealization, n: usize) -> Result<PartitionTrace> {
    let weights = system.site_weights(realization, n)?;
    let table = LawTable::new(&system.law, n);
    Ok(trace_from_weights(&table, &weights, n))
}

/// Independent oracle: explicit sum over all return sets `S ⊆ {1..n}`.
pub fn brute_force(system: &PinningSystem, realization: &DisorderRealization, n: usize) -> Result<f64> {
    if n > BRUTE_FORCE_MAX_N {
        return Err(PinningError::Budget(format!(
            "brute-force enumeration is limited to n <= {BRUTE_FORCE_MAX_N}, got {n}"
        )));
    }
    let weights = system.site_weights(realization, n)?;
    let law = &system.law;
    let mut acc = LogAccumulator::default();
    for mask in 0u32..(1u32 << n) {
        let mut log_w = 0.0;
        let mut last = 0u64;
        for i in 1..=n as u64 {
            if mask & (1 << (i - 1)) != 0 {
                log_w += law.log_pmf(i - last) + weights[(i - 1) as usize];
                last = i;
            }
        }
        log_w += law.log_tail(n as u64 - last);
        acc.add(log_w);
    }
    Ok(acc.value())
}

/// Pinned weights resolved by contact count: `log_c[k][j]` is the log weight
/// of return sets ending at `k` with exactly `j` returns; `log_z[j]` is the
/// free partition function at `n` restricted to `L_n = j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContactResolved {
    pub n: usize,
    pub log_c: Vec<Vec<f64>>,
    pub log_z: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// `L_n ≤ δ n`
    AtMost,
    /// `L_n > δ n`
    Above,
}

impl ContactResolved {
    pub fn total(&self) -> f64 {
        let mut acc = LogAccumulator::default();
        for &x in &self.log_z {
            acc.add(x);
        }
        acc.value()
    }

    /// `log Z` restricted to `L_n ≤ δn` or `L_n > δn`.
    pub fn restrict(&self, delta: f64, side: Side) -> f64 {
        let threshold = delta * self.n as f64;
        let mut acc = LogAccumulator::default();
        for (j, &x) in self.log_z.iter().enumerate() {
            let keep = match side {
                Side::AtMost => (j as f64) <= threshold,
                Side::Above => (j as f64) > threshold,
            };
            if keep {
                acc.add(x);
            }
        }
        acc.value()
    }

    /// `log Z` restricted to `δn < L_n ≤ ηn`.
    pub fn window(&self, delta: f64, eta: f64) -> f64 {
        let (lo, hi) = (delta * self.n as f64, eta * self.n as f64);
        let mut acc = LogAccumulator::default();
        for (j, &x) in self.log_z.iter().enumerate() {
            let jf = j as f64;
            if jf > lo && jf <= hi {
                acc.add(x);
            }
        }
        acc.value()
    }

    /// CSV rows `(j, log_weight)`.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["j", "log_weight"])?;
        for (j, &x) in self.log_z.iter().enumerate() {
            out.write_record([j.to_string(), crate::extreal::format(x)])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Contact-resolved dynamic program, `O(n³)`; refuses `n > cap`.
pub fn contact_resolved(
    system: &PinningSystem,
    realization: &DisorderRealization,
    n: usize,
    cap: usize,
) -> Result<ContactResolved> {
    if n > cap {
        return Err(PinningError::Budget(format!(
            "contact-resolved recursion is O(n^3); n = {n} exceeds the cap {cap}"
        )));
    }
    let weights = system.site_weights(realization, n)?;
    let table = LawTable::new(&system.law, n);
    let mut log_c: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    log_c.push(vec![0.0]);
    let mut max = vec![f64::NEG_INFINITY; n + 1];
    let mut sum = vec![0.0; n + 1];
    for k in 1..=n {
        // row k has entries j = 0..=k; j = 0 impossible for k ≥ 1
        max[..=k].fill(f64::NEG_INFINITY);
        sum[..=k].fill(0.0);
        for &i in &table.support {
            if i > k {
                break;
            }
            let prev = &log_c[k - i];
            let lk = table.log_pmf[i];
            for (j1, &x) in prev.iter().enumerate() {
                let a = lk + x;
                if a > max[j1 + 1] {
                    max[j1 + 1] = a;
                }
            }
        }
        for &i in &table.support {
            if i > k {
                break;
            }
            let prev = &log_c[k - i];
            let lk = table.log_pmf[i];
            for (j1, &x) in prev.iter().enumerate() {
                let a = lk + x;
                let m = max[j1 + 1];
                if a > m - SKIP {
                    sum[j1 + 1] += (a - m).exp();
                }
            }
        }
        let mut row = vec![f64::NEG_INFINITY; k + 1];
        for j in 1..=k {
            if max[j] > f64::NEG_INFINITY {
                row[j] = weights[k - 1] + max[j] + sum[j].ln();
            }
        }
        log_c.push(row);
    }
    let mut log_z = vec![f64::NEG_INFINITY; n + 1];
    for j in 0..=n {
        let mut acc = LogAccumulator::default();
        for m in j..=n {
            if let Some(&x) = log_c[m].get(j) {
                acc.add(x + table.log_tail[n - m]);
            }
        }
        log_z[j] = acc.value();
    }
    Ok(ContactResolved { n, log_c, log_z })
}

/// Mean and variance of `L_n` under the finite-volume Gibbs measure.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContactMoments {
    pub mean: f64,
    pub variance: f64,
    pub log_z: f64,
}

/// Exact contact moments by a recursion carrying conditional means and
/// variances alongside the pinned weights (law of total variance over the
/// last gap), with no numerical differentiation.
pub fn contact_moments(system: &PinningSystem, realization: &DisorderRealization, n: usize) -> Result<ContactMoments> {
    let weights = system.site_weights(realization, n)?;
    let table = LawTable::new(&system.law, n);
    Ok(contact_moments_from_weights(&table, &weights, n))
}

pub fn contact_moments_from_weights(table: &LawTable, weights: &[f64], n: usize) -> ContactMoments {
    let mut log_c = vec![f64::NEG_INFINITY; n + 1];
    let mut mean = vec![0.0; n + 1];
    let mut var = vec![0.0; n + 1];
    log_c[0] = 0.0;
    let mut scratch: Vec<(usize, f64)> = Vec::with_capacity(table.support.len());
    for k in 1..=n {
        scratch.clear();
        let mut max = f64::NEG_INFINITY;
        for &j in &table.support {
            if j > k {
                break;
            }
            let a = table.log_pmf[j] + log_c[k - j];
            if a > f64::NEG_INFINITY {
                scratch.push((k - j, a));
                max = max.max(a);
            }
        }
        if max == f64::NEG_INFINITY {
            continue;
        }
        let (lc, m, v) = mixture(&scratch, max, &mean, &var);
        log_c[k] = weights[k - 1] + lc;
        mean[k] = 1.0 + m;
        var[k] = v;
    }
    let mut terms: Vec<(usize, f64)> = Vec::with_capacity(n + 1);
    let mut max = f64::NEG_INFINITY;
    for m in 0..=n {
        let a = log_c[m] + table.log_tail[n - m];
        if a > f64::NEG_INFINITY {
            terms.push((m, a));
            max = max.max(a);
        }
    }
    let (log_z, m, v) = mixture(&terms, max, &mean, &var);
    ContactMoments {
        mean: m,
        variance: v.max(0.0),
        log_z,
    }
}

/// Log total weight, mean and variance of a mixture whose components are
/// indexed by `(source, log_weight)` with component moments `mean/var[source]`.
fn mixture(terms: &[(usize, f64)], max: f64, mean: &[f64], var: &[f64]) -> (f64, f64, f64) {
    let mut s = 0.0;
    let mut m1 = 0.0;
    for &(src, a) in terms {
        let w = (a - max).exp();
        s += w;
        m1 += w * mean[src];
    }
    m1 /= s;
    let mut v = 0.0;
    for &(src, a) in terms {
        let w = (a - max).exp() / s;
        let d = mean[src] - m1;
        v += w * (var[src] + d * d);
    }
    (max + s.ln(), m1, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::excursion::TailClass;

    fn two_step() -> ExcursionLaw {
        ExcursionLaw::custom(vec![0.5, 0.5], 0.0, TailClass::Finite).unwrap()
    }

    #[test]
    fn zero_weights_give_probability_one() {
        for law in [
            ExcursionLaw::zeta(1.5, 0.0).unwrap(),
            ExcursionLaw::geometric(0.3, 0.2).unwrap(),
            ExcursionLaw::fixed(3).unwrap(),
            two_step(),
        ] {
            let sys = PinningSystem::deterministic(1.0, 0.0, law).unwrap();
            let t = trace(&sys, &DisorderRealization::zeros(10), 10).unwrap();
            for k in 0..=10 {
                assert!(t.log_z[k].abs() < 1e-14, "k = {k}: {}", t.log_z[k]);
            }
        }
    }

    #[test]
    fn small_enumerated_example() {
        let sys = PinningSystem::deterministic(1.0, 0.0, two_step()).unwrap();
        let r = DisorderRealization::from_values(vec![1.0, 0.0]);
        let t = trace(&sys, &r, 2).unwrap();
        let expect = (0.5 * 1f64.exp() + 0.5f64).ln();
        assert!((t.log_z_n() - expect).abs() < 1e-14);
        assert!((brute_force(&sys, &r, 2).unwrap() - expect).abs() < 1e-14);
    }

    #[test]
    fn fixed_law_forced_returns() {
        let sys = PinningSystem::deterministic(1.0, 1.0, ExcursionLaw::fixed(2).unwrap()).unwrap();
        let r = DisorderRealization::zeros(6);
        assert!((trace(&sys, &r, 6).unwrap().log_z_n() - 3.0).abs() < 1e-14);
        let cr = contact_resolved(&sys, &r, 6, DEFAULT_CONTACT_CAP).unwrap();
        assert!((cr.log_z[3] - 3.0).abs() < 1e-14);
        assert!(cr.log_z.iter().enumerate().all(|(j, &x)| j == 3 || x == f64::NEG_INFINITY));
        let m = contact_moments(&sys, &r, 6).unwrap();
        assert!((m.mean - 3.0).abs() < 1e-14 && m.variance.abs() < 1e-14);
    }

    #[test]
    fn contact_distribution_at_beta_zero() {
        let sys = PinningSystem::deterministic(0.0, 0.0, two_step()).unwrap();
        let cr = contact_resolved(&sys, &DisorderRealization::zeros(2), 2, 16).unwrap();
        assert_eq!(cr.log_z[0], f64::NEG_INFINITY);
        assert!((cr.log_z[1].exp() - 0.75).abs() < 1e-15);
        assert!((cr.log_z[2].exp() - 0.25).abs() < 1e-15);
        assert!((cr.restrict(1.0, Side::AtMost) - cr.total()).abs() < 1e-15);
    }

    #[test]
    fn brute_force_budget() {
        let sys = PinningSystem::deterministic(1.0, 0.0, two_step()).unwrap();
        assert!(brute_force(&sys, &DisorderRealization::zeros(21), 21).is_err());
    }
}
