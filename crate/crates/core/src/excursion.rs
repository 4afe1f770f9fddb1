//! Excursion-length laws `K(k) = P(E₁ = k)`, possibly defective, and the
//! analytic objects derived from them: the moment generating function `M_E`,
//! its abscissa `a_E`, the rate function `J_E` and `g(x) = x J_E(1/x)`.

use serde::{Deserialize, Serialize};

use crate::error::{PinningError, Result};
use crate::numeric::{logaddexp, ConvexProfile, LogAccumulator};
use crate::special::{hurwitz_zeta, riemann_zeta, shifted_power_exp_sum};

pub const DEFAULT_TRUNCATION_HORIZON: usize = 1024;
pub const LAW_SCHEMA_VERSION: u32 = 1;

const NORMALIZATION_TOL: f64 = 1e-12;

fn default_horizon() -> usize {
    DEFAULT_TRUNCATION_HORIZON
}

fn default_version() -> u32 {
    LAW_SCHEMA_VERSION
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case")]
pub enum ExcursionFamily {
    /// `K(k) ∝ k^{-γ}`, γ > 1.
    Zeta { gamma: f64 },
    /// `K(k) ∝ (1-ρ) ρ^{k-1}`.
    Geometric { rho: f64 },
    /// All mass at `r`.
    Fixed { r: u64 },
    /// `pmf[i] = K(i + 1)`; remaining mass `1 - Σ pmf - p_inf` is spread over
    /// `k > pmf.len()` according to the declared tail class.
    Custom { pmf: Vec<f64> },
}

/// Decay class of a custom law beyond its tabulated head. The residual mass
/// is distributed proportionally to `k^{-gamma} e^{-rate k}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TailClass {
    Finite,
    Polynomial {
        gamma: f64,
    },
    Exponential {
        rate: f64,
        #[serde(default)]
        gamma: f64,
    },
}

/// JSON form of an excursion law.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExcursionSpec {
    #[serde(default = "default_version")]
    pub version: u32,
    #[serde(flatten)]
    pub family: ExcursionFamily,
    #[serde(default)]
    pub p_inf: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail_class: Option<TailClass>,
    #[serde(default = "default_horizon")]
    pub truncation_horizon: usize,
}

/// Coarse tail behaviour used by symbolic criteria.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailDecay {
    Polynomial,
    Exponential,
    Finite,
    Declared,
}

#[derive(Clone, Debug)]
struct ResidualTail {
    log_mass: f64,
    gamma: f64,
    rate: f64,
    /// log Σ_{k>H} k^{-γ} e^{-rate k}
    log_norm: f64,
}

#[derive(Clone, Debug)]
enum Kind {
    Zeta { gamma: f64, log_zeta: f64 },
    Geometric { rho: f64 },
    Fixed { r: u64 },
    Custom {
        pmf: Vec<f64>,
        /// upper[k] = p_inf + residual + Σ_{k<j≤H} pmf(j), for k < H
        upper: Vec<f64>,
        tail: Option<ResidualTail>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExcursionAnalytics {
    #[serde(with = "crate::extreal")]
    pub a_e: f64,
    #[serde(with = "crate::extreal")]
    pub log_m_e_at_a_e: f64,
    #[serde(with = "crate::extreal")]
    pub m_e: f64,
    #[serde(with = "crate::extreal")]
    pub a_e_prime: f64,
    pub delta_e: f64,
    pub p_g: f64,
    pub exponentially_recurrent: bool,
    pub r1: u64,
    pub r2: Option<u64>,
    pub period: u64,
    pub periodic_warning: bool,
}

/// A validated excursion law. Immutable after construction.
#[derive(Clone, Debug)]
pub struct ExcursionLaw {
    spec: ExcursionSpec,
    kind: Kind,
    log_finite: f64,
    r1: u64,
    r2: Option<u64>,
    r_max: Option<u64>,
    period: u64,
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl ExcursionLaw {
    pub fn zeta(gamma: f64, p_inf: f64) -> Result<Self> {
        Self::new(ExcursionSpec::new(ExcursionFamily::Zeta { gamma }, p_inf, None))
    }

    pub fn geometric(rho: f64, p_inf: f64) -> Result<Self> {
        Self::new(ExcursionSpec::new(ExcursionFamily::Geometric { rho }, p_inf, None))
    }

    pub fn fixed(r: u64) -> Result<Self> {
        Self::new(ExcursionSpec::new(ExcursionFamily::Fixed { r }, 0.0, None))
    }

    pub fn custom(pmf: Vec<f64>, p_inf: f64, tail_class: TailClass) -> Result<Self> {
        Self::new(ExcursionSpec::new(ExcursionFamily::Custom { pmf }, p_inf, Some(tail_class)))
    }

    pub fn new(spec: ExcursionSpec) -> Result<Self> {
        let p = spec.p_inf;
        if !(0.0..1.0).contains(&p) {
            return Err(PinningError::InvalidLaw(format!("p_inf must lie in [0, 1), got {p}")));
        }
        if spec.version != LAW_SCHEMA_VERSION {
            return Err(PinningError::InvalidLaw(format!(
                "unsupported law schema version {}",
                spec.version
            )));
        }
        let log_finite = (-p).ln_1p();
        let (kind, r1, r2, r_max, period) = match &spec.family {
            ExcursionFamily::Zeta { gamma } => {
                if !(*gamma > 1.0 && gamma.is_finite()) {
                    return Err(PinningError::InvalidLaw(format!("zeta exponent must exceed 1, got {gamma}")));
                }
                let log_zeta = riemann_zeta(*gamma).ln();
                (Kind::Zeta { gamma: *gamma, log_zeta }, 1, Some(2), None, 1)
            }
            ExcursionFamily::Geometric { rho } => {
                if !(*rho > 0.0 && *rho < 1.0) {
                    return Err(PinningError::InvalidLaw(format!("geometric rho must lie in (0, 1), got {rho}")));
                }
                (Kind::Geometric { rho: *rho }, 1, Some(2), None, 1)
            }
            ExcursionFamily::Fixed { r } => {
                if *r == 0 {
                    return Err(PinningError::InvalidLaw("fixed excursion length must be at least 1".into()));
                }
                (Kind::Fixed { r: *r }, *r, None, Some(*r), *r)
            }
            ExcursionFamily::Custom { pmf } => Self::build_custom(pmf, p, spec.tail_class.as_ref())?,
        };
        let law = Self {
            spec,
            kind,
            log_finite,
            r1,
            r2,
            r_max,
            period,
        };
        law.check_normalization()?;
        Ok(law)
    }

    #[allow(clippy::type_complexity)]
    fn build_custom(
        pmf: &[f64],
        p: f64,
        tail_class: Option<&TailClass>,
    ) -> Result<(Kind, u64, Option<u64>, Option<u64>, u64)> {
        let Some(tail_class) = tail_class else {
            return Err(PinningError::InvalidLaw(
                "custom laws must declare tail_class (finite, polynomial or exponential)".into(),
            ));
        };
        if pmf.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
            return Err(PinningError::InvalidLaw("custom pmf entries must be finite and nonnegative".into()));
        }
        let head_sum: f64 = pmf.iter().sum();
        let residual = 1.0 - head_sum - p;
        if residual < -NORMALIZATION_TOL {
            return Err(PinningError::InvalidLaw(format!(
                "custom pmf plus p_inf sums to {} > 1",
                head_sum + p
            )));
        }
        let h = pmf.len();
        let tail = match tail_class {
            TailClass::Finite => {
                if residual > NORMALIZATION_TOL {
                    return Err(PinningError::InvalidLaw(format!(
                        "finite-support custom law is missing mass {residual}"
                    )));
                }
                None
            }
            TailClass::Polynomial { gamma } => Some(Self::residual_tail(residual, *gamma, 0.0, h)?),
            TailClass::Exponential { rate, gamma } => {
                if !(*rate >= 0.0 && rate.is_finite()) {
                    return Err(PinningError::InvalidLaw(format!("tail rate must be nonnegative, got {rate}")));
                }
                Some(Self::residual_tail(residual, *gamma, *rate, h)?)
            }
        };
        let residual_mass = if tail.is_some() { residual } else { 0.0 };
        let mut upper = vec![0.0; h];
        let mut acc = p + residual_mass;
        for k in (0..h).rev() {
            upper[k] = acc + pmf[k];
            acc = upper[k];
        }
        let support: Vec<u64> = pmf
            .iter()
            .enumerate()
            .filter(|(_, &x)| x > 0.0)
            .map(|(i, _)| i as u64 + 1)
            .collect();
        let mut firsts = support.clone();
        if tail.is_some() {
            firsts.push(h as u64 + 1);
            firsts.push(h as u64 + 2);
        }
        if firsts.is_empty() {
            return Err(PinningError::InvalidLaw("custom law has no finite excursion mass".into()));
        }
        let r1 = firsts[0];
        let r2 = firsts.get(1).copied();
        let r_max = if tail.is_some() { None } else { support.last().copied() };
        let period = firsts.iter().fold(0, |g, &k| gcd(g, k));
        Ok((Kind::Custom { pmf: pmf.to_vec(), upper, tail }, r1, r2, r_max, period))
    }

    fn residual_tail(residual: f64, gamma: f64, rate: f64, h: usize) -> Result<ResidualTail> {
        if residual < 1e-14 {
            return Err(PinningError::InvalidLaw(
                "declared tail class carries no mass; declare tail_class finite".into(),
            ));
        }
        if !gamma.is_finite() || (rate == 0.0 && gamma <= 1.0) {
            return Err(PinningError::InvalidLaw(format!(
                "polynomial tail exponent must exceed 1 (got gamma = {gamma}, rate = {rate})"
            )));
        }
        let start = h as f64 + 1.0;
        let log_norm = -rate * start + shifted_power_exp_sum(gamma, rate, start).ln();
        Ok(ResidualTail {
            log_mass: residual.ln(),
            gamma,
            rate,
            log_norm,
        })
    }

    fn check_normalization(&self) -> Result<()> {
        let h = self.spec.truncation_horizon.max(1) as u64;
        let mut total = 0.0;
        for k in 1..=h {
            total += self.pmf(k);
        }
        total += self.tail(h);
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(PinningError::InvalidLaw(format!(
                "normalization check failed: sum to horizon {h} plus tail is {total}"
            )));
        }
        Ok(())
    }

    pub fn spec(&self) -> &ExcursionSpec {
        &self.spec
    }

    pub fn p_inf(&self) -> f64 {
        self.spec.p_inf
    }

    pub fn family_name(&self) -> &'static str {
        match self.kind {
            Kind::Zeta { .. } => "zeta",
            Kind::Geometric { .. } => "geometric",
            Kind::Fixed { .. } => "fixed",
            Kind::Custom { .. } => "custom",
        }
    }

    pub fn tail_decay(&self) -> TailDecay {
        match self.kind {
            Kind::Zeta { .. } => TailDecay::Polynomial,
            Kind::Geometric { .. } => TailDecay::Exponential,
            Kind::Fixed { .. } => TailDecay::Finite,
            Kind::Custom { .. } => TailDecay::Declared,
        }
    }

    /// `log P(E₁ = k)` for `k ≥ 1`.
    pub fn log_pmf(&self, k: u64) -> f64 {
        if k == 0 {
            return f64::NEG_INFINITY;
        }
        match &self.kind {
            Kind::Zeta { gamma, log_zeta } => self.log_finite - gamma * (k as f64).ln() - log_zeta,
            Kind::Geometric { rho } => self.log_finite + (-rho).ln_1p() + (k - 1) as f64 * rho.ln(),
            Kind::Fixed { r } => {
                if k == *r {
                    self.log_finite
                } else {
                    f64::NEG_INFINITY
                }
            }
            Kind::Custom { pmf, tail, .. } => {
                let h = pmf.len() as u64;
                if k <= h {
                    pmf[(k - 1) as usize].ln()
                } else if let Some(t) = tail {
                    t.log_mass - t.gamma * (k as f64).ln() - t.rate * k as f64 - t.log_norm
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    pub fn pmf(&self, k: u64) -> f64 {
        self.log_pmf(k).exp()
    }

    /// `log P(E₁ > k)`, including the mass at infinity; `log_tail(0) = 0`.
    pub fn log_tail(&self, k: u64) -> f64 {
        if k == 0 {
            return 0.0;
        }
        let p = self.spec.p_inf;
        let log_p = if p > 0.0 { p.ln() } else { f64::NEG_INFINITY };
        match &self.kind {
            Kind::Zeta { gamma, log_zeta } => {
                let finite_part = self.log_finite + hurwitz_zeta(*gamma, k as f64 + 1.0).ln() - log_zeta;
                logaddexp(log_p, finite_part)
            }
            Kind::Geometric { rho } => logaddexp(log_p, self.log_finite + k as f64 * rho.ln()),
            Kind::Fixed { r } => {
                if k < *r {
                    0.0
                } else {
                    log_p
                }
            }
            Kind::Custom { pmf, upper, tail } => {
                let h = pmf.len() as u64;
                if k < h {
                    return upper[k as usize].min(1.0).ln();
                }
                match tail {
                    Some(t) => {
                        let start = k as f64 + 1.0;
                        let log_rest = -t.rate * start + shifted_power_exp_sum(t.gamma, t.rate, start).ln();
                        logaddexp(log_p, t.log_mass + log_rest - t.log_norm)
                    }
                    None => log_p,
                }
            }
        }
    }

    pub fn tail(&self, k: u64) -> f64 {
        self.log_tail(k).exp()
    }

    /// `(K(k), P(E₁ > k))`.
    pub fn pmf_and_tail(&self, k: u64) -> (f64, f64) {
        (self.pmf(k), self.tail(k))
    }

    /// Smallest support point.
    pub fn r1(&self) -> u64 {
        self.r1
    }

    /// Second smallest support point, if any.
    pub fn r2(&self) -> Option<u64> {
        self.r2
    }

    /// Largest support point for finite-support laws.
    pub fn r_max(&self) -> Option<u64> {
        self.r_max
    }

    /// gcd of the support.
    pub fn period(&self) -> u64 {
        self.period
    }

    pub fn is_periodic(&self) -> bool {
        self.period > 1
    }

    /// Smallest `l` with `K(k) > 0` for all `k ≥ l`, if it exists.
    pub fn aperiodicity_floor(&self) -> Option<u64> {
        match &self.kind {
            Kind::Zeta { .. } | Kind::Geometric { .. } => Some(1),
            Kind::Fixed { .. } => None,
            Kind::Custom { pmf, tail, .. } => {
                tail.as_ref()?;
                let mut l = pmf.len() as u64 + 1;
                while l > 1 && pmf[(l - 2) as usize] > 0.0 {
                    l -= 1;
                }
                Some(l)
            }
        }
    }

    /// Abscissa of convergence of `M_E`; 0 for defective laws.
    pub fn a_e(&self) -> f64 {
        if self.spec.p_inf > 0.0 {
            return 0.0;
        }
        match &self.kind {
            Kind::Zeta { .. } => 0.0,
            Kind::Geometric { rho } => -rho.ln(),
            Kind::Fixed { .. } => f64::INFINITY,
            Kind::Custom { tail, .. } => match tail {
                None => f64::INFINITY,
                Some(t) => t.rate,
            },
        }
    }

    /// `log M_E(t)`, with `M_E(0) = P(E₁ < ∞)` and `+inf` beyond `a_E`.
    pub fn log_mgf(&self, t: f64) -> f64 {
        if t > self.a_e() {
            return f64::INFINITY;
        }
        if t == 0.0 {
            return self.log_finite;
        }
        match &self.kind {
            Kind::Zeta { gamma, log_zeta } => {
                self.log_finite - log_zeta + t + shifted_power_exp_sum(*gamma, -t, 1.0).ln()
            }
            Kind::Geometric { rho } => {
                let x = rho * t.exp();
                if x >= 1.0 {
                    return f64::INFINITY;
                }
                self.log_finite + (-rho).ln_1p() + t - (-x).ln_1p()
            }
            Kind::Fixed { r } => self.log_finite + *r as f64 * t,
            Kind::Custom { pmf, tail, .. } => custom_log_moment(pmf, tail.as_ref(), t, 0.0),
        }
    }

    /// Left derivative of `log M_E` at `t` (`+inf` beyond the domain or where
    /// the first moment of the tilted law diverges).
    pub fn log_mgf_slope(&self, t: f64) -> f64 {
        if t > self.a_e() {
            return f64::INFINITY;
        }
        match &self.kind {
            Kind::Zeta { gamma, .. } => {
                let num = shifted_power_exp_sum(gamma - 1.0, -t, 1.0);
                if num.is_infinite() {
                    return f64::INFINITY;
                }
                num / shifted_power_exp_sum(*gamma, -t, 1.0)
            }
            Kind::Geometric { rho } => {
                let x = rho * t.exp();
                if x >= 1.0 {
                    f64::INFINITY
                } else {
                    1.0 / (1.0 - x)
                }
            }
            Kind::Fixed { r } => *r as f64,
            Kind::Custom { pmf, tail, .. } => {
                let num = custom_log_moment(pmf, tail.as_ref(), t, 1.0);
                let den = custom_log_moment(pmf, tail.as_ref(), t, 0.0);
                if num.is_infinite() {
                    f64::INFINITY
                } else {
                    (num - den).exp()
                }
            }
        }
    }

    /// Mean of `E₁` given `E₁ < ∞`.
    pub fn mean_given_finite(&self) -> f64 {
        self.log_mgf_slope(0.0)
    }

    pub fn analytics(&self) -> ExcursionAnalytics {
        let a_e = self.a_e();
        let log_m_e_at_a_e = if a_e.is_finite() { self.log_mgf(a_e) } else { f64::INFINITY };
        let m_e = self.mean_given_finite();
        let a_e_prime = if a_e.is_finite() {
            self.log_mgf_slope(a_e)
        } else {
            self.r_max.map_or(f64::INFINITY, |r| r as f64)
        };
        let delta_e = if self.spec.p_inf > 0.0 || m_e.is_infinite() { 0.0 } else { 1.0 / m_e };
        let p_g = match self.r2 {
            Some(r2) => 2.0 * self.pmf(self.r1) * self.pmf(r2),
            None => 0.0,
        };
        ExcursionAnalytics {
            a_e,
            log_m_e_at_a_e,
            m_e,
            a_e_prime,
            delta_e,
            p_g,
            exponentially_recurrent: a_e > 0.0,
            r1: self.r1,
            r2: self.r2,
            period: self.period,
            periodic_warning: self.period > 1,
        }
    }

    /// `J_E(t) = sup_x (t x - log M_E(x))`.
    pub fn rate_j(&self, t: f64) -> f64 {
        let value = |x: f64| self.log_mgf(x);
        let slope = |x: f64| self.log_mgf_slope(x);
        let a_e = self.a_e();
        let upper_asymptote = match self.r_max {
            Some(r) if a_e.is_infinite() => (r as f64, self.log_pmf(r)),
            _ => (f64::INFINITY, 0.0),
        };
        let profile = ConvexProfile {
            value: &value,
            slope: &slope,
            lower: f64::NEG_INFINITY,
            upper: a_e,
            lower_asymptote: (self.r1 as f64, self.log_pmf(self.r1)),
            upper_asymptote,
        };
        profile.conjugate(t).0.max(0.0)
    }

    /// `g(x) = x J_E(1/x)` with `g(0) = a_E`.
    pub fn g(&self, x: f64) -> f64 {
        if x == 0.0 {
            return self.a_e();
        }
        let j = self.rate_j(1.0 / x);
        if j.is_infinite() {
            f64::INFINITY
        } else {
            x * j
        }
    }

    /// Interval outside of which `g` is infinite.
    pub fn g_domain(&self) -> (f64, f64) {
        let hi = 1.0 / self.r1 as f64;
        let lo = match self.r_max {
            Some(r) if self.a_e().is_infinite() => 1.0 / r as f64,
            _ => 0.0,
        };
        (lo, hi)
    }
}

/// `log Σ_k k^m K(k) e^{t k}` for a custom law (m = 0 or 1).
fn custom_log_moment(pmf: &[f64], tail: Option<&ResidualTail>, t: f64, m: f64) -> f64 {
    let mut acc = LogAccumulator::default();
    for (i, &x) in pmf.iter().enumerate() {
        if x > 0.0 {
            let k = (i + 1) as f64;
            acc.add(x.ln() + m * k.ln() + t * k);
        }
    }
    if let Some(tl) = tail {
        let s = tl.rate - t;
        let start = pmf.len() as f64 + 1.0;
        let sum = shifted_power_exp_sum(tl.gamma - m, s, start);
        if sum.is_infinite() {
            return f64::INFINITY;
        }
        acc.add(tl.log_mass - tl.log_norm - s * start + sum.ln());
    }
    acc.value()
}

impl ExcursionSpec {
    pub fn new(family: ExcursionFamily, p_inf: f64, tail_class: Option<TailClass>) -> Self {
        Self {
            version: LAW_SCHEMA_VERSION,
            family,
            p_inf,
            tail_class,
            truncation_horizon: DEFAULT_TRUNCATION_HORIZON,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ZETA_15: f64 = 2.612_375_348_685_488;

    #[test]
    fn pmf_and_tail_examples() {
        let g = ExcursionLaw::geometric(0.5, 0.0).unwrap();
        let (k, t) = g.pmf_and_tail(2);
        assert!((k - 0.25).abs() < 1e-15 && (t - 0.25).abs() < 1e-15);

        let f = ExcursionLaw::fixed(3).unwrap();
        assert_eq!(f.pmf_and_tail(3), (1.0, 0.0));

        let z = ExcursionLaw::zeta(1.5, 0.3).unwrap();
        let (k, t) = z.pmf_and_tail(1);
        assert!((k - 0.7 / ZETA_15).abs() < 1e-14);
        assert!((t - (0.3 + 0.7 * (1.0 - 1.0 / ZETA_15))).abs() < 1e-14);
    }

    #[test]
    fn log_mgf_examples() {
        let g = ExcursionLaw::geometric(0.5, 0.0).unwrap();
        assert_eq!(g.log_mgf(0.0), 0.0);
        assert_eq!(g.log_mgf(2f64.ln()), f64::INFINITY);
        let z = ExcursionLaw::zeta(1.5, 0.3).unwrap();
        assert!((z.log_mgf(0.0) - 0.7f64.ln()).abs() < 1e-15);
        assert_eq!(z.log_mgf(1e-9), f64::INFINITY);
        for t in [-0.01, -0.3, -2.0] {
            let direct: f64 = (1..20_000u64).map(|k| z.pmf(k) * (t * k as f64).exp()).sum();
            assert!((z.log_mgf(t) - direct.ln()).abs() < 1e-12, "t = {t}");
        }
    }

    #[test]
    fn rate_function_examples() {
        let f = ExcursionLaw::fixed(2).unwrap();
        assert_eq!(f.rate_j(2.0), 0.0);
        assert_eq!(f.rate_j(3.0), f64::INFINITY);
        let g = ExcursionLaw::geometric(0.5, 0.0).unwrap();
        let expect = 4.0 * 1.5f64.ln() - 3f64.ln();
        assert!((g.rate_j(4.0) - expect).abs() < 1e-9);
        assert!(g.rate_j(2.0).abs() < 1e-12);
        assert!((g.g(0.25) - 0.25 * expect).abs() < 1e-9);
        assert_eq!(g.g(0.0), 2f64.ln());
    }

    #[test]
    fn analytics_examples() {
        let a = ExcursionLaw::geometric(0.5, 0.0).unwrap().analytics();
        assert!((a.a_e - 2f64.ln()).abs() < 1e-15);
        assert!((a.m_e - 2.0).abs() < 1e-15);
        assert!(a.exponentially_recurrent);
        assert_eq!(a.log_m_e_at_a_e, f64::INFINITY);

        let a = ExcursionLaw::zeta(1.5, 0.0).unwrap().analytics();
        assert_eq!(a.a_e, 0.0);
        assert_eq!(a.m_e, f64::INFINITY);
        assert!(!a.exponentially_recurrent);

        let c = ExcursionLaw::custom(vec![0.5, 0.5], 0.0, TailClass::Finite).unwrap();
        let a = c.analytics();
        assert_eq!((a.r1, a.r2), (1, Some(2)));
        assert_eq!(a.p_g, 0.5);
        assert!((a.delta_e - 2.0 / 3.0).abs() < 1e-15);
        assert!(c.g(2.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn custom_law_validation() {
        let missing = ExcursionSpec::new(ExcursionFamily::Custom { pmf: vec![0.5, 0.5] }, 0.0, None);
        assert!(ExcursionLaw::new(missing).is_err());
        assert!(ExcursionLaw::custom(vec![0.7, 0.5], 0.0, TailClass::Finite).is_err());
        assert!(ExcursionLaw::custom(vec![0.5, 0.2], 0.0, TailClass::Finite).is_err());
        let law = ExcursionLaw::custom(vec![0.3, 0.3], 0.0, TailClass::Exponential { rate: 0.5, gamma: 3.0 }).unwrap();
        assert_eq!(law.a_e(), 0.5);
        assert!(law.log_mgf(0.5).is_finite());
        assert_eq!(law.aperiodicity_floor(), Some(1));
    }

    #[test]
    fn custom_tail_matches_summation() {
        let law = ExcursionLaw::custom(vec![0.2, 0.0, 0.3], 0.1, TailClass::Polynomial { gamma: 2.5 }).unwrap();
        for k in [0u64, 1, 2, 3, 4, 10] {
            let direct: f64 = 0.1 + (k + 1..200_000).map(|j| law.pmf(j)).sum::<f64>();
            assert!((law.tail(k) - direct).abs() < 1e-6, "k = {k}");
        }
        assert_eq!(law.period(), 1);
        assert_eq!(law.r2(), Some(3));
    }

    #[test]
    fn periodic_fixed_law() {
        let f = ExcursionLaw::fixed(3).unwrap();
        assert!(f.is_periodic());
        assert_eq!(f.aperiodicity_floor(), None);
        let a = f.analytics();
        assert_eq!(a.a_e, f64::INFINITY);
        assert_eq!(a.a_e_prime, 3.0);
        assert_eq!(f.g_domain(), (1.0 / 3.0, 1.0 / 3.0));
    }

    #[test]
    fn spec_json_shape() {
        let json = r#"{"family":"zeta","params":{"gamma":1.5},"p_inf":0.3}"#;
        let spec: ExcursionSpec = serde_json::from_str(json).unwrap();
        assert_eq!(spec.family, ExcursionFamily::Zeta { gamma: 1.5 });
        assert_eq!(spec.truncation_horizon, DEFAULT_TRUNCATION_HORIZON);
        let json = r#"{"family":"custom","params":{"pmf":[0.5,0.25]},"tail_class":{"kind":"exponential","rate":0.7}}"#;
        let spec: ExcursionSpec = serde_json::from_str(json).unwrap();
        let law = ExcursionLaw::new(spec.clone()).unwrap();
        assert_eq!(law.a_e(), 0.7);
        let back: ExcursionSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(back, spec);
    }
}
