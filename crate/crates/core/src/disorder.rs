//! Centered i.i.d. disorder laws: moment generating function, Cramér rate,
//! tail function and its generalized inverse, the tilted log-moment `ψ`, and
//! reproducible sampling of realizations.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::function::erf::{erfc, erfc_inv};
use statrs::function::gamma::gamma;

use crate::error::{PinningError, Result};
use crate::numeric::{bisect_predicate, log_bernoulli_mgf, ConvexProfile};
use crate::quadrature::integrate;
use crate::rng::{fingerprint, stream};
use crate::special::upper_gamma_scaled;

pub const DISORDER_SCHEMA_VERSION: u32 = 1;

const QUAD_ABS: f64 = 1e-13;
const QUAD_REL: f64 = 1e-12;

fn default_version() -> u32 {
    DISORDER_SCHEMA_VERSION
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case")]
pub enum DisorderFamily {
    /// `V ≡ 0`: the deterministic model.
    Degenerate,
    Gaussian { sigma: f64 },
    /// `v_plus` with probability `p`, `v_minus` otherwise, then centered.
    TwoPoint { v_plus: f64, v_minus: f64, p: f64 },
    /// `Exp(lambda) - 1/lambda`.
    CenteredExponential { lambda: f64 },
    /// Pareto with `P(X > x) = (scale/x)^alpha`, `x ≥ scale`, minus its mean.
    ShiftedPareto { alpha: f64, scale: f64 },
    /// `P(X > x) = exp(-(x/scale)^theta)`, `0 < theta < 1`, minus its mean.
    StretchedExpTail { theta: f64, scale: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisorderSpec {
    #[serde(default = "default_version")]
    pub version: u32,
    #[serde(flatten)]
    pub family: DisorderFamily,
}

impl DisorderSpec {
    pub fn new(family: DisorderFamily) -> Self {
        Self {
            version: DISORDER_SCHEMA_VERSION,
            family,
        }
    }
}

/// A validated, centered disorder law.
#[derive(Clone, Debug)]
pub struct DisorderLaw {
    spec: DisorderSpec,
    /// Centering constant subtracted from the raw variable.
    shift: f64,
    fingerprint: String,
}

/// One disorder realization `V_1..V_n` (stored 0-based).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisorderRealization {
    pub values: Vec<f64>,
    pub seed: u64,
    pub fingerprint: String,
}

impl DisorderRealization {
    /// All-zero realization of length `n`.
    pub fn zeros(n: usize) -> Self {
        Self {
            values: vec![0.0; n],
            seed: 0,
            fingerprint: String::new(),
        }
    }

    pub fn from_values(values: Vec<f64>) -> Self {
        Self {
            values,
            seed: 0,
            fingerprint: String::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Writes `index,value` rows (1-based index).
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["index", "value", "seed"])?;
        for (i, v) in self.values.iter().enumerate() {
            out.write_record([(i + 1).to_string(), format!("{v}"), self.seed.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}

fn invalid(msg: String) -> PinningError {
    PinningError::InvalidDisorder(msg)
}

impl DisorderLaw {
    pub fn degenerate() -> Self {
        Self::new(DisorderSpec::new(DisorderFamily::Degenerate)).expect("degenerate law is valid")
    }

    pub fn gaussian(sigma: f64) -> Result<Self> {
        Self::new(DisorderSpec::new(DisorderFamily::Gaussian { sigma }))
    }

    pub fn two_point(v_plus: f64, v_minus: f64, p: f64) -> Result<Self> {
        Self::new(DisorderSpec::new(DisorderFamily::TwoPoint { v_plus, v_minus, p }))
    }

    pub fn centered_exponential(lambda: f64) -> Result<Self> {
        Self::new(DisorderSpec::new(DisorderFamily::CenteredExponential { lambda }))
    }

    pub fn shifted_pareto(alpha: f64, scale: f64) -> Result<Self> {
        Self::new(DisorderSpec::new(DisorderFamily::ShiftedPareto { alpha, scale }))
    }

    pub fn stretched_exp_tail(theta: f64, scale: f64) -> Result<Self> {
        Self::new(DisorderSpec::new(DisorderFamily::StretchedExpTail { theta, scale }))
    }

    pub fn new(spec: DisorderSpec) -> Result<Self> {
        if spec.version != DISORDER_SCHEMA_VERSION {
            return Err(invalid(format!("unsupported disorder schema version {}", spec.version)));
        }
        let positive = |name: &str, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(invalid(format!("{name} must be positive and finite, got {x}")))
            }
        };
        let shift = match spec.family {
            DisorderFamily::Degenerate => 0.0,
            DisorderFamily::Gaussian { sigma } => {
                positive("sigma", sigma)?;
                0.0
            }
            DisorderFamily::TwoPoint { v_plus, v_minus, p } => {
                if !(v_plus > v_minus && v_plus.is_finite() && v_minus.is_finite()) {
                    return Err(invalid(format!("two_point needs finite v_plus > v_minus, got {v_plus}, {v_minus}")));
                }
                if !(p > 0.0 && p < 1.0) {
                    return Err(invalid(format!("two_point p must lie in (0, 1), got {p}")));
                }
                p * v_plus + (1.0 - p) * v_minus
            }
            DisorderFamily::CenteredExponential { lambda } => {
                positive("lambda", lambda)?;
                1.0 / lambda
            }
            DisorderFamily::ShiftedPareto { alpha, scale } => {
                positive("scale", scale)?;
                if !(alpha > 1.0 && alpha.is_finite()) {
                    return Err(invalid(format!("pareto alpha must exceed 1 for a finite mean, got {alpha}")));
                }
                alpha * scale / (alpha - 1.0)
            }
            DisorderFamily::StretchedExpTail { theta, scale } => {
                positive("scale", scale)?;
                if !(theta > 0.0 && theta < 1.0) {
                    return Err(invalid(format!("stretched exponent theta must lie in (0, 1), got {theta}")));
                }
                scale * gamma(1.0 + 1.0 / theta)
            }
        };
        let fingerprint = fingerprint(serde_json::to_string(&spec)?.as_bytes());
        Ok(Self { spec, shift, fingerprint })
    }

    pub fn spec(&self) -> &DisorderSpec {
        &self.spec
    }

    pub fn family(&self) -> &DisorderFamily {
        &self.spec.family
    }

    pub fn family_name(&self) -> &'static str {
        match self.spec.family {
            DisorderFamily::Degenerate => "degenerate",
            DisorderFamily::Gaussian { .. } => "gaussian",
            DisorderFamily::TwoPoint { .. } => "two_point",
            DisorderFamily::CenteredExponential { .. } => "centered_exponential",
            DisorderFamily::ShiftedPareto { .. } => "shifted_pareto",
            DisorderFamily::StretchedExpTail { .. } => "stretched_exp_tail",
        }
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn is_degenerate(&self) -> bool {
        matches!(self.spec.family, DisorderFamily::Degenerate)
    }

    /// The two atoms `(upper, lower)` of a two-point law after centering.
    fn atoms(&self) -> Option<(f64, f64, f64)> {
        match self.spec.family {
            DisorderFamily::TwoPoint { v_plus, v_minus, p } => Some((v_plus - self.shift, v_minus - self.shift, p)),
            _ => None,
        }
    }

    /// `sup{t ≥ 0 : E e^{t|V|} < ∞}`.
    pub fn a_v(&self) -> f64 {
        match self.spec.family {
            DisorderFamily::Degenerate | DisorderFamily::Gaussian { .. } | DisorderFamily::TwoPoint { .. } => {
                f64::INFINITY
            }
            DisorderFamily::CenteredExponential { lambda } => lambda,
            DisorderFamily::ShiftedPareto { .. } | DisorderFamily::StretchedExpTail { .. } => 0.0,
        }
    }

    /// Whether `E e^{tV} < ∞` for some `t > 0`.
    pub fn has_exponential_moment(&self) -> bool {
        self.a_v() > 0.0
    }

    pub fn variance(&self) -> f64 {
        match self.spec.family {
            DisorderFamily::Degenerate => 0.0,
            DisorderFamily::Gaussian { sigma } => sigma * sigma,
            DisorderFamily::TwoPoint { v_plus, v_minus, p } => p * (1.0 - p) * (v_plus - v_minus).powi(2),
            DisorderFamily::CenteredExponential { lambda } => 1.0 / (lambda * lambda),
            DisorderFamily::ShiftedPareto { alpha, scale } => {
                if alpha > 2.0 {
                    scale * scale * alpha / ((alpha - 1.0).powi(2) * (alpha - 2.0))
                } else {
                    f64::INFINITY
                }
            }
            DisorderFamily::StretchedExpTail { theta, scale } => {
                scale * scale * (gamma(1.0 + 2.0 / theta) - gamma(1.0 + 1.0 / theta).powi(2))
            }
        }
    }

    /// Essential infimum of `V`.
    pub fn lower_bound(&self) -> f64 {
        match self.spec.family {
            DisorderFamily::Degenerate => 0.0,
            DisorderFamily::Gaussian { .. } => f64::NEG_INFINITY,
            DisorderFamily::TwoPoint { .. } => self.atoms().map(|a| a.1).unwrap_or(0.0),
            DisorderFamily::CenteredExponential { .. } => -self.shift,
            DisorderFamily::ShiftedPareto { scale, .. } => scale - self.shift,
            DisorderFamily::StretchedExpTail { .. } => -self.shift,
        }
    }

    /// Essential supremum of `V`.
    pub fn upper_bound(&self) -> f64 {
        match self.spec.family {
            DisorderFamily::Degenerate => 0.0,
            DisorderFamily::TwoPoint { .. } => self.atoms().map(|a| a.0).unwrap_or(0.0),
            _ => f64::INFINITY,
        }
    }

    /// Density of `V` for the continuous families.
    fn density(&self, v: f64) -> f64 {
        match self.spec.family {
            DisorderFamily::Gaussian { sigma } => {
                (-0.5 * (v / sigma).powi(2)).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
            }
            DisorderFamily::CenteredExponential { lambda } => {
                let x = v + self.shift;
                if x < 0.0 {
                    0.0
                } else {
                    lambda * (-lambda * x).exp()
                }
            }
            DisorderFamily::ShiftedPareto { alpha, scale } => {
                let x = v + self.shift;
                if x < scale {
                    0.0
                } else {
                    alpha / scale * (scale / x).powf(alpha + 1.0)
                }
            }
            DisorderFamily::StretchedExpTail { theta, scale } => {
                let x = v + self.shift;
                if x <= 0.0 {
                    0.0
                } else {
                    let y = (x / scale).powf(theta);
                    theta / x * y * (-y).exp()
                }
            }
            DisorderFamily::Degenerate | DisorderFamily::TwoPoint { .. } => 0.0,
        }
    }

    /// `E f(V)`, exact for atomic laws and by quadrature otherwise.
    pub fn expect<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        match self.spec.family {
            DisorderFamily::Degenerate => f(0.0),
            DisorderFamily::TwoPoint { .. } => {
                let (a, b, p) = self.atoms().expect("two-point atoms");
                p * f(a) + (1.0 - p) * f(b)
            }
            DisorderFamily::StretchedExpTail { theta, scale } => {
                // y = (x/scale)^θ turns the weight into e^{-y}; split where V = 0.
                let g = |y: f64| f(scale * y.powf(1.0 / theta) - self.shift) * (-y).exp();
                let y0 = (self.shift / scale).powf(theta);
                integrate(g, 0.0, y0, QUAD_ABS, QUAD_REL) + integrate(g, y0, f64::INFINITY, QUAD_ABS, QUAD_REL)
            }
            _ => {
                let lo = self.lower_bound();
                let g = |v: f64| {
                    let d = self.density(v);
                    if d == 0.0 {
                        0.0
                    } else {
                        d * f(v)
                    }
                };
                // Split at 0 so the kink of ψ-type integrands sits on a node boundary.
                if lo < 0.0 {
                    integrate(g, lo, 0.0, QUAD_ABS, QUAD_REL) + integrate(g, 0.0, f64::INFINITY, QUAD_ABS, QUAD_REL)
                } else {
                    integrate(g, lo, f64::INFINITY, QUAD_ABS, QUAD_REL)
                }
            }
        }
    }

    /// `log E e^{tV}`; `+inf` outside the finiteness domain.
    pub fn log_mgf(&self, t: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        match self.spec.family {
            DisorderFamily::Degenerate => 0.0,
            DisorderFamily::Gaussian { sigma } => 0.5 * t * t * sigma * sigma,
            DisorderFamily::TwoPoint { .. } => {
                let (a, b, p) = self.atoms().expect("two-point atoms");
                // log(p e^{ta} + (1-p) e^{tb}) = t b + log(1 - p + p e^{t(a-b)})
                t * b + log_bernoulli_mgf(p, t * (a - b))
            }
            DisorderFamily::CenteredExponential { lambda } => {
                if t >= lambda {
                    f64::INFINITY
                } else {
                    -t / lambda - (-t / lambda).ln_1p()
                }
            }
            DisorderFamily::ShiftedPareto { alpha, scale } => {
                if t > 0.0 {
                    return f64::INFINITY;
                }
                let z = -t * scale;
                -t * self.shift + alpha.ln() + alpha * z.ln() + upper_gamma_scaled(-alpha, z).ln() - z
            }
            DisorderFamily::StretchedExpTail { theta, scale } => {
                if t > 0.0 {
                    return f64::INFINITY;
                }
                -t * self.shift + stretched_moment(theta, scale, t, 0.0).ln()
            }
        }
    }

    /// Derivative of `log_mgf` (left derivative at the right end of the domain).
    pub fn log_mgf_slope(&self, t: f64) -> f64 {
        match self.spec.family {
            DisorderFamily::Degenerate => 0.0,
            DisorderFamily::Gaussian { sigma } => sigma * sigma * t,
            DisorderFamily::TwoPoint { .. } => {
                let (a, b, p) = self.atoms().expect("two-point atoms");
                let w = t * (a - b) + (p / (1.0 - p)).ln();
                b + (a - b) * logistic(w)
            }
            DisorderFamily::CenteredExponential { lambda } => {
                if t >= lambda {
                    f64::INFINITY
                } else {
                    -1.0 / lambda + 1.0 / (lambda - t)
                }
            }
            DisorderFamily::ShiftedPareto { alpha, scale } => {
                if t > 0.0 {
                    return f64::INFINITY;
                }
                if t == 0.0 {
                    return 0.0;
                }
                let z = -t * scale;
                -self.shift + upper_gamma_scaled(1.0 - alpha, z) / (-t * upper_gamma_scaled(-alpha, z))
            }
            DisorderFamily::StretchedExpTail { theta, scale } => {
                if t > 0.0 {
                    return f64::INFINITY;
                }
                if t == 0.0 {
                    return 0.0;
                }
                -self.shift + stretched_moment(theta, scale, t, 1.0) / stretched_moment(theta, scale, t, 0.0)
            }
        }
    }

    fn mgf_profile_bounds(&self) -> (f64, f64, (f64, f64), (f64, f64)) {
        let (lower_asym, upper_asym) = match self.atoms() {
            Some((a, b, p)) => ((b, (1.0 - p).ln()), (a, p.ln())),
            None => (
                (self.lower_bound(), if self.is_degenerate() { 0.0 } else { f64::NEG_INFINITY }),
                (self.upper_bound(), if self.is_degenerate() { 0.0 } else { f64::NEG_INFINITY }),
            ),
        };
        let upper = match self.spec.family {
            DisorderFamily::CenteredExponential { lambda } => lambda,
            DisorderFamily::ShiftedPareto { .. } | DisorderFamily::StretchedExpTail { .. } => 0.0,
            _ => f64::INFINITY,
        };
        (f64::NEG_INFINITY, upper, lower_asym, upper_asym)
    }

    /// Cramér rate `I_V(m) = sup_x (m x - log E e^{xV})`.
    pub fn rate_i(&self, m: f64) -> f64 {
        if m == 0.0 {
            return 0.0;
        }
        let value = |x: f64| self.log_mgf(x);
        let slope = |x: f64| self.log_mgf_slope(x);
        let (lower, upper, lower_asymptote, upper_asymptote) = self.mgf_profile_bounds();
        let profile = ConvexProfile {
            value: &value,
            slope: &slope,
            lower,
            upper,
            lower_asymptote,
            upper_asymptote,
        };
        profile.conjugate(m).0.max(0.0)
    }

    /// `Ḡ(x) = P(V ≥ x)`.
    pub fn tail_prob(&self, x: f64) -> f64 {
        match self.spec.family {
            DisorderFamily::Degenerate => {
                if x <= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            DisorderFamily::Gaussian { sigma } => 0.5 * erfc(x / (sigma * std::f64::consts::SQRT_2)),
            DisorderFamily::TwoPoint { .. } => {
                let (a, b, p) = self.atoms().expect("two-point atoms");
                if x <= b {
                    1.0
                } else if x <= a {
                    p
                } else {
                    0.0
                }
            }
            DisorderFamily::CenteredExponential { lambda } => {
                let y = x + self.shift;
                if y <= 0.0 {
                    1.0
                } else {
                    (-lambda * y).exp()
                }
            }
            DisorderFamily::ShiftedPareto { alpha, scale } => {
                let y = x + self.shift;
                if y <= scale {
                    1.0
                } else {
                    (scale / y).powf(alpha)
                }
            }
            DisorderFamily::StretchedExpTail { theta, scale } => {
                let y = x + self.shift;
                if y <= 0.0 {
                    1.0
                } else {
                    (-(y / scale).powf(theta)).exp()
                }
            }
        }
    }

    /// `P(V = x)` (nonzero only at atoms).
    pub fn atom_mass(&self, x: f64) -> f64 {
        match self.spec.family {
            DisorderFamily::Degenerate => {
                if x == 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            DisorderFamily::TwoPoint { .. } => {
                let (a, b, p) = self.atoms().expect("two-point atoms");
                if x == a {
                    p
                } else if x == b {
                    1.0 - p
                } else {
                    0.0
                }
            }
            _ => 0.0,
        }
    }

    /// `sup{x ≥ 0 : Ḡ(x) ≥ t}`, and 0 when `t > Ḡ(0)`.
    pub fn tail_quantile(&self, t: f64) -> f64 {
        if t > self.tail_prob(0.0) {
            return 0.0;
        }
        match self.spec.family {
            DisorderFamily::Degenerate => 0.0,
            DisorderFamily::Gaussian { sigma } => (sigma * std::f64::consts::SQRT_2 * erfc_inv(2.0 * t)).max(0.0),
            DisorderFamily::TwoPoint { .. } => self.atoms().expect("two-point atoms").0,
            DisorderFamily::CenteredExponential { lambda } => (-t.ln() / lambda - self.shift).max(0.0),
            DisorderFamily::ShiftedPareto { alpha, scale } => (scale * t.powf(-1.0 / alpha) - self.shift).max(0.0),
            DisorderFamily::StretchedExpTail { theta, scale } => {
                (scale * (-t.ln()).powf(1.0 / theta) - self.shift).max(0.0)
            }
        }
    }

    /// Same quantity by bisection on the tail function alone.
    pub fn tail_quantile_bisect(&self, t: f64) -> f64 {
        if t > self.tail_prob(0.0) {
            return 0.0;
        }
        let mut hi = 1.0;
        while self.tail_prob(hi) >= t {
            hi *= 2.0;
            if hi > 1e300 {
                return f64::INFINITY;
            }
        }
        // predicate "Ḡ(x) < t" is false at 0 and true at hi
        let (lo, _) = bisect_predicate(|x| self.tail_prob(x) < t, 0.0, hi, 1e-13 * hi.max(1.0));
        lo
    }

    /// `ψ(t) = E log(1 - p_h + p_h e^{tV})`.
    pub fn psi(&self, t: f64, p_h: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        self.expect(|v| log_bernoulli_mgf(p_h, t * v))
    }

    pub fn psi_slope(&self, t: f64, p_h: f64) -> f64 {
        self.expect(|v| {
            let y = t * v;
            // p e^y / (1 - p + p e^y) = logistic(y + log(p/(1-p)))
            v * logistic(y + (p_h / (1.0 - p_h)).ln())
        })
    }

    /// `Ĩ(s) = sup_x (x s - ψ(x))`.
    pub fn rate_i_tilde(&self, s: f64, p_h: f64) -> f64 {
        if s == 0.0 || self.is_degenerate() {
            return if s == 0.0 { 0.0 } else { f64::INFINITY };
        }
        let value = |x: f64| self.psi(x, p_h);
        let slope = |x: f64| self.psi_slope(x, p_h);
        let positive_part = self.expect(|v| v.max(0.0));
        let p_pos = self.prob_positive();
        let p_neg = self.prob_negative();
        let profile = ConvexProfile {
            value: &value,
            slope: &slope,
            lower: f64::NEG_INFINITY,
            upper: f64::INFINITY,
            lower_asymptote: (-positive_part, p_neg * p_h.ln() + p_pos * (1.0 - p_h).ln()),
            upper_asymptote: (positive_part, p_pos * p_h.ln() + p_neg * (1.0 - p_h).ln()),
        };
        profile.conjugate(s).0.max(0.0)
    }

    fn prob_positive(&self) -> f64 {
        match self.atoms() {
            Some((a, _, p)) => {
                if a > 0.0 {
                    p
                } else {
                    0.0
                }
            }
            None => self.tail_prob(0.0),
        }
    }

    fn prob_negative(&self) -> f64 {
        match self.atoms() {
            Some((_, b, p)) => {
                if b < 0.0 {
                    1.0 - p
                } else {
                    0.0
                }
            }
            None => 1.0 - self.tail_prob(0.0) - self.atom_mass(0.0),
        }
    }

    /// Value of site `index` (0-based) under `seed`; independent of any other site.
    pub fn sample_site(&self, seed: u64, index: u64) -> f64 {
        let mut rng = stream(seed, index);
        match self.spec.family {
            DisorderFamily::Degenerate => 0.0,
            DisorderFamily::Gaussian { sigma } => {
                let z: f64 = rng.sample(StandardNormal);
                sigma * z
            }
            DisorderFamily::TwoPoint { .. } => {
                let (a, b, p) = self.atoms().expect("two-point atoms");
                if rng.random::<f64>() < p {
                    a
                } else {
                    b
                }
            }
            DisorderFamily::CenteredExponential { lambda } => {
                let u: f64 = rng.random();
                -(-u).ln_1p() / lambda - self.shift
            }
            DisorderFamily::ShiftedPareto { alpha, scale } => {
                let u: f64 = rng.random();
                scale * (1.0 - u).powf(-1.0 / alpha) - self.shift
            }
            DisorderFamily::StretchedExpTail { theta, scale } => {
                let u: f64 = rng.random();
                scale * (-(-u).ln_1p()).powf(1.0 / theta) - self.shift
            }
        }
    }

    /// `n` i.i.d. draws; bit-identical for equal `(law, n, seed)`.
    pub fn sample(&self, n: usize, seed: u64) -> DisorderRealization {
        let values = (0..n as u64).map(|i| self.sample_site(seed, i)).collect();
        DisorderRealization {
            values,
            seed,
            fingerprint: self.fingerprint.clone(),
        }
    }
}

#[inline]
fn logistic(w: f64) -> f64 {
    if w >= 0.0 {
        1.0 / (1.0 + (-w).exp())
    } else {
        let e = w.exp();
        e / (1.0 + e)
    }
}

/// `E[X^m e^{tX}]` for the stretched-exponential variable (t ≤ 0), computed
/// after the substitution `y = (x/scale)^θ`.
fn stretched_moment(theta: f64, scale: f64, t: f64, m: f64) -> f64 {
    let inv = 1.0 / theta;
    let f = |y: f64| {
        let x = scale * y.powf(inv);
        let w = t * x - y;
        if m == 0.0 {
            w.exp()
        } else {
            x * w.exp()
        }
    };
    integrate(f, 0.0, f64::INFINITY, QUAD_ABS, QUAD_REL)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn families() -> Vec<DisorderLaw> {
        vec![
            DisorderLaw::gaussian(1.3).unwrap(),
            DisorderLaw::two_point(1.0, -0.5, 0.3).unwrap(),
            DisorderLaw::centered_exponential(2.0).unwrap(),
            DisorderLaw::shifted_pareto(2.5, 1.0).unwrap(),
            DisorderLaw::stretched_exp_tail(0.5, 1.0).unwrap(),
        ]
    }

    #[test]
    fn all_families_are_centered() {
        for law in families() {
            let mean = law.expect(|v| v);
            assert!(mean.abs() < 1e-9, "{}: mean {mean}", law.family_name());
            let var = law.expect(|v| v * v);
            assert!((var - law.variance()).abs() < 1e-7 * var.max(1.0), "{}", law.family_name());
        }
    }

    #[test]
    fn log_mgf_examples() {
        let g = DisorderLaw::gaussian(1.0).unwrap();
        assert_eq!(g.log_mgf(1.0), 0.5);
        let p = DisorderLaw::shifted_pareto(1.5, 1.0).unwrap();
        assert_eq!(p.log_mgf(0.1), f64::INFINITY);
        for law in families() {
            assert_eq!(law.log_mgf(0.0), 0.0);
        }
    }

    #[test]
    fn log_mgf_matches_quadrature() {
        for law in families() {
            for t in [-0.7, -0.2, 0.3] {
                let direct = law.expect(|v| (t * v).exp());
                let closed = law.log_mgf(t);
                if closed.is_finite() {
                    assert!((closed - direct.ln()).abs() < 1e-9, "{} t = {t}", law.family_name());
                }
            }
        }
    }

    #[test]
    fn slopes_match_differences() {
        for law in families() {
            for t in [-0.6, -0.1] {
                let h = 1e-5;
                let fd = (law.log_mgf(t + h) - law.log_mgf(t - h)) / (2.0 * h);
                assert!((law.log_mgf_slope(t) - fd).abs() < 1e-6, "{} t = {t}", law.family_name());
            }
        }
    }

    #[test]
    fn rate_examples() {
        let g = DisorderLaw::gaussian(1.0).unwrap();
        assert!((g.rate_i(1.0) - 0.5).abs() < 1e-10);
        for law in families() {
            assert_eq!(law.rate_i(0.0), 0.0);
        }
        let p = DisorderLaw::shifted_pareto(1.5, 1.0).unwrap();
        assert_eq!(p.rate_i(0.7), 0.0);
    }

    #[test]
    fn quantile_conventions() {
        let g = DisorderLaw::gaussian(2.0).unwrap();
        assert_eq!(g.tail_quantile(0.5), 0.0);
        assert_eq!(g.tail_quantile(0.9), 0.0);
        let tp = DisorderLaw::two_point(1.0, -1.0, 0.5).unwrap();
        assert_eq!(tp.tail_quantile(0.5), 1.0);
        assert_eq!(tp.tail_quantile(0.2), 1.0);
        assert_eq!(tp.tail_quantile(0.6), 0.0);
        for law in families() {
            for t in [0.2, 1e-3, 1e-6] {
                let a = law.tail_quantile(t);
                let b = law.tail_quantile_bisect(t);
                assert!((a - b).abs() < 1e-9 * a.max(1.0), "{} t = {t}: {a} vs {b}", law.family_name());
            }
        }
    }

    #[test]
    fn psi_and_tilted_rate() {
        for law in families() {
            assert_eq!(law.psi(0.0, 0.5), 0.0);
            assert_eq!(law.rate_i_tilde(0.0, 0.5), 0.0);
        }
        let g = DisorderLaw::gaussian(1.0).unwrap();
        let eps = 0.05;
        let lhs = g.rate_i_tilde(0.5 * eps, 0.5);
        assert!(lhs > 0.0 && lhs <= 3.0 * 0.5 * g.rate_i(eps));
    }

    #[test]
    fn sampling_is_reproducible() {
        let tp = DisorderLaw::two_point(1.0, -1.0, 0.5).unwrap();
        let a = tp.sample(4, 7);
        assert_eq!(a, tp.sample(4, 7));
        assert!(a.values.iter().all(|&v| v == 1.0 || v == -1.0));
        let g = DisorderLaw::gaussian(1.0).unwrap();
        let r = g.sample(100_000, 1);
        let mean: f64 = r.values.iter().sum::<f64>() / 1e5;
        assert!(mean.abs() < 4.0 / 1e5f64.sqrt());
    }

    #[test]
    fn spec_json_shape() {
        let spec: DisorderSpec = serde_json::from_str(r#"{"family":"two_point","params":{"v_plus":1,"v_minus":-1,"p":0.5}}"#).unwrap();
        assert!(DisorderLaw::new(spec).is_ok());
        let spec: DisorderSpec = serde_json::from_str(r#"{"family":"degenerate"}"#).unwrap();
        assert!(DisorderLaw::new(spec).unwrap().is_degenerate());
    }
}
