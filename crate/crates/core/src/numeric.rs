//! Log-space arithmetic and the one-dimensional convex solvers shared by the
//! rate-function and free-energy code.

/// `log(e^a + e^b)` without overflow.
#[inline]
pub fn logaddexp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    if a > b {
        a + (b - a).exp().ln_1p()
    } else {
        b + (a - b).exp().ln_1p()
    }
}

/// `log Σ e^{x_i}`; returns `-inf` for an empty slice.
pub fn logsumexp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m.is_infinite() {
        return m;
    }
    let s: f64 = xs.iter().map(|&x| (x - m).exp()).sum();
    m + s.ln()
}

/// Streaming `logsumexp`; terms may arrive in any order.
#[derive(Debug, Clone, Copy)]
pub struct LogAccumulator {
    max: f64,
    scaled: f64,
}

impl Default for LogAccumulator {
    fn default() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            scaled: 0.0,
        }
    }
}

impl LogAccumulator {
    #[inline]
    pub fn add(&mut self, x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        if x > self.max {
            self.scaled = self.scaled * (self.max - x).exp() + 1.0;
            self.max = x;
        } else {
            self.scaled += (x - self.max).exp();
        }
    }

    pub fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.scaled.ln()
        }
    }
}

/// `log(1 - p + p e^y)` for `p` in [0, 1], stable for large |y|.
#[inline]
pub fn log_bernoulli_mgf(p: f64, y: f64) -> f64 {
    if y > 0.0 {
        y + (p + (1.0 - p) * (-y).exp()).ln()
    } else {
        (p * y.exp_m1()).ln_1p()
    }
}

/// Maximizes a concave function on `[lo, hi]` by golden-section search and
/// returns `(argmax, max)`. Both endpoints are always compared, so a maximum
/// sitting on the boundary is reported exactly.
pub fn golden_max<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let f_lo = f(lo);
    if hi <= lo {
        return (lo, f_lo);
    }
    let f_hi = f(hi);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let mut best = (0.5 * (a + b), f(0.5 * (a + b)));
    for cand in [(c, fc), (d, fd), (lo, f_lo), (hi, f_hi)] {
        if cand.1 > best.1 {
            best = cand;
        }
    }
    best
}

/// Minimizes a convex function on `[lo, hi]`; see [`golden_max`].
pub fn golden_min<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let (x, v) = golden_max(|x| -f(x), lo, hi, tol);
    (x, -v)
}

/// Bisection for the boundary of a monotone predicate: `pred(lo)` must be
/// false and `pred(hi)` true. Returns the final bracket.
pub fn bisect_predicate<P: FnMut(f64) -> bool>(
    mut pred: P,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> (f64, f64) {
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (lo, hi)
}

/// Interval width at which derivative bisection in Legendre transforms stops.
pub const LEGENDRE_X_TOL: f64 = 1e-12;

/// A closed convex function `Λ` given through its value and left derivative on
/// its effective domain `[lower, upper]` (either end may be infinite).
///
/// When an end of the domain is infinite, the asymptotic slope there and the
/// log-mass of the extremal atom are needed to evaluate the conjugate at the
/// boundary slope exactly: `Λ(x) ~ log_mass + slope * x`.
pub struct ConvexProfile<'a> {
    pub value: &'a dyn Fn(f64) -> f64,
    pub slope: &'a dyn Fn(f64) -> f64,
    pub lower: f64,
    pub upper: f64,
    pub lower_asymptote: (f64, f64),
    pub upper_asymptote: (f64, f64),
}

impl ConvexProfile<'_> {
    /// Evaluates `sup_x (t x - Λ(x))` and the maximizer (`±inf` when the
    /// supremum is approached at an infinite end of the domain).
    pub fn conjugate(&self, t: f64) -> (f64, f64) {
        let value = self.value;
        let slope = self.slope;

        // Boundary cases at the lower end.
        if self.lower == f64::NEG_INFINITY {
            let (s, log_mass) = self.lower_asymptote;
            if t < s {
                return (f64::INFINITY, f64::NEG_INFINITY);
            }
            if t == s {
                return (-log_mass, f64::NEG_INFINITY);
            }
        } else {
            let v_lo = value(self.lower);
            if v_lo.is_finite() && slope(self.lower) >= t {
                return (t * self.lower - v_lo, self.lower);
            }
        }

        // Boundary cases at the upper end.
        let mut upper_value = None;
        if self.upper == f64::INFINITY {
            let (s, log_mass) = self.upper_asymptote;
            if t > s {
                return (f64::INFINITY, f64::INFINITY);
            }
            if t == s {
                return (-log_mass, f64::INFINITY);
            }
        } else {
            let v_up = value(self.upper);
            if v_up.is_finite() {
                let s_up = slope(self.upper);
                if t >= s_up {
                    return (t * self.upper - v_up, self.upper);
                }
                upper_value = Some(t * self.upper - v_up);
            }
        }

        let (mut a, mut b) = self.bracket(t);
        while b - a > LEGENDRE_X_TOL * a.abs().max(b.abs()).max(1.0) {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            if slope(mid) < t {
                a = mid;
            } else {
                b = mid;
            }
        }
        let x = 0.5 * (a + b);
        let mut best = (t * x - value(x), x);
        for cand in [a, b] {
            let v = t * cand - value(cand);
            if v > best.0 {
                best = (v, cand);
            }
        }
        if let Some(v) = upper_value {
            if v > best.0 {
                best = (v, self.upper);
            }
        }
        best
    }

    /// Finds `a < b` inside the domain with `slope(a) < t <= slope(b)`.
    fn bracket(&self, t: f64) -> (f64, f64) {
        let slope = self.slope;
        let value = self.value;
        let start = match (self.lower.is_finite(), self.upper.is_finite()) {
            (false, false) => 0.0,
            (true, true) => 0.5 * (self.lower + self.upper),
            (false, true) => {
                if self.upper > 0.0 {
                    0.0
                } else {
                    self.upper - 1.0
                }
            }
            (true, false) => {
                if self.lower < 0.0 {
                    0.0
                } else {
                    self.lower + 1.0
                }
            }
        };
        if slope(start) < t {
            let a = start;
            if self.upper.is_finite() {
                if value(self.upper).is_finite() {
                    return (a, self.upper);
                }
                let mut gap = self.upper - a;
                let mut b = a;
                for _ in 0..1100 {
                    gap *= 0.5;
                    b = self.upper - gap;
                    if slope(b) >= t {
                        break;
                    }
                }
                (a, b)
            } else {
                let mut step = 1.0;
                let mut lo = a;
                let mut b = a + step;
                for _ in 0..60 {
                    if slope(b) >= t {
                        break;
                    }
                    lo = b;
                    step *= 2.0;
                    b = a + step;
                }
                (lo, b)
            }
        } else {
            let b = start;
            if self.lower.is_finite() {
                let mut gap = b - self.lower;
                let mut a = b;
                for _ in 0..1100 {
                    gap *= 0.5;
                    a = self.lower + gap;
                    if slope(a) < t {
                        break;
                    }
                }
                (a, b)
            } else {
                let mut step = 1.0;
                let mut hi = b;
                let mut a = b - step;
                for _ in 0..60 {
                    if slope(a) < t {
                        break;
                    }
                    hi = a;
                    step *= 2.0;
                    a = b - step;
                }
                (a, hi)
            }
        }
    }
}
