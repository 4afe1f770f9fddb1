//! Exact draws of return-time sets from the finite-volume Gibbs measure by
//! backward decomposition of the partition function, and good-block
//! statistics of sampled paths.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::disorder::DisorderRealization;
use crate::error::{PinningError, Result};
use crate::excursion::ExcursionLaw;
use crate::partition::{trace_from_weights, LawTable, PartitionTrace, PinningSystem};
use crate::rng::stream;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathSample {
    pub n: usize,
    pub return_times: Vec<usize>,
    /// The path makes no return after its last return time before `n`.
    pub escaped: bool,
}

impl PathSample {
    pub fn contacts(&self) -> usize {
        self.return_times.len()
    }

    /// Excursion lengths `T_j - T_{j-1}` with `T_0 = 0`.
    pub fn gaps(&self) -> Vec<usize> {
        let mut prev = 0;
        self.return_times
            .iter()
            .map(|&t| {
                let g = t - prev;
                prev = t;
                g
            })
            .collect()
    }

    /// Return-time set encoded as a bit mask (bit `t - 1` for time `t`).
    pub fn mask(&self) -> u64 {
        self.return_times.iter().fold(0u64, |m, &t| m | (1u64 << (t - 1)))
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["j", "return_time"])?;
        for (j, t) in self.return_times.iter().enumerate() {
            out.write_record([(j + 1).to_string(), t.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Precomputed weights for repeated draws on one `(system, realization, n)`.
pub struct PathSampler {
    table: LawTable,
    weights: Vec<f64>,
    trace: PartitionTrace,
}

impl PathSampler {
    pub fn new(system: &PinningSystem, realization: &DisorderRealization, n: usize) -> Result<Self> {
        let weights = system.site_weights(realization, n)?;
        let table = LawTable::new(&system.law, n);
        let trace = trace_from_weights(&table, &weights, n);
        if !trace.log_z_n().is_finite() {
            return Err(PinningError::Numeric("partition function is zero or not finite".into()));
        }
        Ok(Self { table, weights, trace })
    }

    pub fn trace(&self) -> &PartitionTrace {
        &self.trace
    }

    pub fn n(&self) -> usize {
        self.trace.n
    }

    /// One exact draw using the uniforms of `rng`.
    pub fn draw<R: Rng>(&self, rng: &mut R) -> PathSample {
        let n = self.n();
        let t = &self.trace;
        let tb = &self.table;
        // last return m ∈ [0, n] with weight c_m P(E₁ > n - m) / Z_n
        let log_z = t.log_z[n];
        let mut target: f64 = rng.random();
        let mut last = 0;
        let mut chosen = None;
        for m in (0..=n).rev() {
            let a = t.log_c[m] + tb.log_tail[n - m];
            if a == f64::NEG_INFINITY {
                continue;
            }
            last = m;
            let p = (a - log_z).exp();
            if target < p {
                chosen = Some(m);
                break;
            }
            target -= p;
        }
        let mut k = chosen.unwrap_or(last);
        let escaped = k < n;
        let mut returns = Vec::new();
        // from a return at k, the previous one is k - j with weight
        // K(j) c_{k-j} / (c_k e^{-w_k})
        while k > 0 {
            returns.push(k);
            let log_norm = t.log_c[k] - self.weights[k - 1];
            let mut target: f64 = rng.random();
            let mut fallback = None;
            let mut chosen = None;
            for &j in &tb.support {
                if j > k {
                    break;
                }
                let a = tb.log_pmf[j] + t.log_c[k - j];
                if a == f64::NEG_INFINITY {
                    continue;
                }
                fallback = Some(j);
                let p = (a - log_norm).exp();
                if target < p {
                    chosen = Some(j);
                    break;
                }
                target -= p;
            }
            let j = chosen.or(fallback).expect("pinned weight with no admissible predecessor");
            k -= j;
        }
        returns.reverse();
        PathSample {
            n,
            return_times: returns,
            escaped,
        }
    }

    /// Draws `0..count`, draw `i` using the stream `(seed, i)`.
    pub fn draw_many(&self, count: usize, seed: u64) -> Vec<PathSample> {
        (0..count)
            .into_par_iter()
            .map(|i| self.draw(&mut stream(seed, i as u64)))
            .collect()
    }
}

/// One exact draw from the Gibbs measure on `[0, n]`.
pub fn sample_path(system: &PinningSystem, realization: &DisorderRealization, n: usize, seed: u64) -> Result<PathSample> {
    let s = PathSampler::new(system, realization, n)?;
    Ok(s.draw(&mut stream(seed, 0)))
}

/// Log Gibbs probability of the return set `returns ⊆ {1..n}` (increasing).
pub fn path_log_probability(
    system: &PinningSystem,
    realization: &DisorderRealization,
    n: usize,
    returns: &[usize],
    log_z: f64,
) -> f64 {
    let law = &system.law;
    let mut prev = 0;
    let mut w = 0.0;
    for &t in returns {
        w += law.log_pmf((t - prev) as u64) + system.beta * (system.u + realization.values[t - 1]);
        prev = t;
    }
    w + law.log_tail((n - prev) as u64) - log_z
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockStats {
    pub r1: u64,
    pub r2: u64,
    pub num_blocks: usize,
    /// `G_n`: blocks `(T_{2j-2}, T_{2j}]` of length `r1 + r2`.
    pub good_blocks: usize,
    /// Good blocks whose first excursion has length `r1`.
    pub targets_hit: usize,
    pub p_g: f64,
    pub p_h: f64,
}

pub fn block_stats(path: &PathSample, law: &ExcursionLaw) -> Result<BlockStats> {
    let r1 = law.r1();
    let r2 = law
        .r2()
        .ok_or_else(|| PinningError::Precondition("good blocks need two support points r1 < r2".into()))?;
    let gaps = path.gaps();
    let mut good = 0;
    let mut hit = 0;
    for pair in gaps.chunks_exact(2) {
        if (pair[0] + pair[1]) as u64 == r1 + r2 {
            good += 1;
            if pair[0] as u64 == r1 {
                hit += 1;
            }
        }
    }
    Ok(BlockStats {
        r1,
        r2,
        num_blocks: gaps.len() / 2,
        good_blocks: good,
        targets_hit: hit,
        p_g: law.analytics().p_g,
        p_h: 0.5,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoodBlockReport {
    pub n: usize,
    pub delta: f64,
    /// Accepted draws satisfy `|L_n - δn| ≤ band`.
    pub band: f64,
    pub draws: usize,
    pub accepted: usize,
    pub p_g: f64,
    /// `(G_n, count)` over accepted draws, increasing in `G_n`.
    pub good_block_histogram: Vec<(usize, usize)>,
    pub mean_good_fraction: f64,
    /// Largest `c` with empirical `P(G_n ≥ c p_g δ n) ≥ 0.99`.
    pub c_99: f64,
    pub status: crate::critical::EstimateStatus,
    pub seed: u64,
}

impl GoodBlockReport {
    /// Empirical `P(G_n ≥ c p_g δ n)` among accepted draws.
    pub fn prob_at_least(&self, c: f64) -> f64 {
        if self.accepted == 0 {
            return f64::NAN;
        }
        let threshold = c * self.p_g * self.delta * self.n as f64;
        let hits: usize = self
            .good_block_histogram
            .iter()
            .filter(|(g, _)| *g as f64 >= threshold)
            .map(|(_, k)| k)
            .sum();
        hits as f64 / self.accepted as f64
    }
}

/// Fewer accepted draws than this makes the diagnostic inconclusive.
pub const MIN_ACCEPTED: usize = 100;

/// Good-block counts of Gibbs paths with `L_n` in the band `|L_n - δn| ≤ √n`.
pub fn good_block_diagnostic(
    system: &PinningSystem,
    realization: &DisorderRealization,
    n: usize,
    delta: f64,
    draws: usize,
    seed: u64,
) -> Result<GoodBlockReport> {
    let law = &system.law;
    let a = law.analytics();
    if !(a.a_e > 0.0 && a.a_e.is_finite() && a.log_m_e_at_a_e.is_finite()) {
        return Err(PinningError::Precondition(
            "the good-block diagnostic needs 0 < a_E < inf and M_E(a_E) < inf".into(),
        ));
    }
    let sampler = PathSampler::new(system, realization, n)?;
    let band = (n as f64).sqrt();
    let center = delta * n as f64;
    let mut counts = std::collections::BTreeMap::new();
    let mut accepted = 0;
    let mut fraction_sum = 0.0;
    for path in sampler.draw_many(draws, seed) {
        if (path.contacts() as f64 - center).abs() > band {
            continue;
        }
        let stats = block_stats(&path, law)?;
        *counts.entry(stats.good_blocks).or_insert(0usize) += 1;
        fraction_sum += stats.good_blocks as f64 / n as f64;
        accepted += 1;
    }
    let histogram: Vec<(usize, usize)> = counts.into_iter().collect();
    // 1% lower quantile of G_n
    let mut c_99 = f64::NAN;
    if accepted > 0 {
        let allowed = accepted / 100;
        let mut below = 0;
        for &(g, k) in &histogram {
            if below + k > allowed {
                c_99 = g as f64 / (a.p_g * delta * n as f64);
                break;
            }
            below += k;
        }
    }
    let status = if accepted < MIN_ACCEPTED {
        crate::critical::EstimateStatus::Inconclusive
    } else {
        crate::critical::EstimateStatus::Converged
    };
    Ok(GoodBlockReport {
        n,
        delta,
        band,
        draws,
        accepted,
        p_g: a.p_g,
        good_block_histogram: histogram,
        mean_good_fraction: if accepted > 0 { fraction_sum / accepted as f64 } else { f64::NAN },
        c_99,
        status,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::excursion::TailClass;

    #[test]
    fn fixed_law_path_is_forced() {
        let sys = PinningSystem::deterministic(1.0, 0.0, ExcursionLaw::fixed(2).unwrap()).unwrap();
        let r = DisorderRealization::zeros(6);
        for seed in 0..5 {
            let p = sample_path(&sys, &r, 6, seed).unwrap();
            assert_eq!(p.return_times, vec![2, 4, 6]);
            assert!(!p.escaped);
        }
    }

    #[test]
    fn two_contacts_with_probability_one_quarter() {
        let law = ExcursionLaw::custom(vec![0.5, 0.5], 0.0, TailClass::Finite).unwrap();
        let sys = PinningSystem::deterministic(0.0, 0.0, law).unwrap();
        let s = PathSampler::new(&sys, &DisorderRealization::zeros(2), 2).unwrap();
        let draws = s.draw_many(100_000, 3);
        let two = draws.iter().filter(|p| p.contacts() == 2).count() as f64 / 1e5;
        assert!((two - 0.25).abs() < 0.01, "{two}");
    }

    #[test]
    fn block_definitions() {
        let law = ExcursionLaw::custom(vec![0.5, 0.5], 0.0, TailClass::Finite).unwrap();
        let path = PathSample {
            n: 6,
            return_times: vec![1, 3, 4, 6],
            escaped: false,
        };
        let b = block_stats(&path, &law).unwrap();
        assert_eq!((b.num_blocks, b.good_blocks, b.targets_hit), (2, 2, 2));
        assert!(block_stats(&path, &ExcursionLaw::fixed(2).unwrap()).is_err());
    }
}
