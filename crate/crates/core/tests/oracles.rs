//! Cross-checks of the engines against independent test-side computations.

use pinning_core::critical::{ld_rate_contacts, u_c_det_by_bisection};
use pinning_core::free_energy::annealed_shift;
use pinning_core::partition::{brute_force, contact_moments, contact_resolved, Side};
use pinning_core::*;

fn two_step(p1: f64) -> ExcursionLaw {
    ExcursionLaw::custom(vec![p1, 1.0 - p1], 0.0, TailClass::Finite).unwrap()
}

/// `log Z_n` by dynamic programming in linear scale, over return sets.
fn linear_scale_partition(law: &ExcursionLaw, w: &[f64]) -> f64 {
    let n = w.len();
    let mut c = vec![0.0; n + 1];
    c[0] = 1.0;
    for k in 1..=n {
        let mut s = 0.0;
        for j in 1..=k {
            s += law.pmf(j as u64) * c[k - j];
        }
        c[k] = s * w[k - 1].exp();
    }
    (0..=n).map(|m| c[m] * law.tail((n - m) as u64)).sum::<f64>().ln()
}

#[test]
fn recursion_matches_linear_scale_reference() {
    let law = ExcursionLaw::zeta(1.5, 0.1).unwrap();
    let d = DisorderLaw::gaussian(0.7).unwrap();
    let sys = PinningSystem::new(0.8, 0.3, law.clone(), d.clone()).unwrap();
    let r = d.sample(200, 11);
    let w: Vec<f64> = r.values.iter().map(|v| 0.8 * (0.3 + v)).collect();
    let expect = linear_scale_partition(&law, &w);
    let got = trace(&sys, &r, 200).unwrap().log_z_n();
    assert!((got - expect).abs() < 1e-11 * expect.abs().max(1.0), "{got} vs {expect}");
}

#[test]
fn contact_resolved_sums_to_trace() {
    let law = ExcursionLaw::geometric(0.6, 0.05).unwrap();
    let d = DisorderLaw::two_point(1.0, -1.0, 0.4).unwrap();
    let sys = PinningSystem::new(1.2, -0.2, law, d.clone()).unwrap();
    let r = d.sample(60, 2);
    let cr = contact_resolved(&sys, &r, 60, 1024).unwrap();
    let t = trace(&sys, &r, 60).unwrap();
    assert!((cr.total() - t.log_z_n()).abs() < 1e-12);
    let split = numeric::logaddexp(cr.restrict(0.3, Side::AtMost), cr.restrict(0.3, Side::Above));
    assert!((split - t.log_z_n()).abs() < 1e-12);
    for k in 0..=60 {
        let mut acc = numeric::LogAccumulator::default();
        for &x in &cr.log_c[k] {
            acc.add(x);
        }
        assert!((acc.value() - t.log_c[k]).abs() < 1e-12 || (k > 0 && acc.value() == t.log_c[k]));
    }
}

#[test]
fn contact_moments_match_resolved_distribution() {
    let law = ExcursionLaw::zeta(1.8, 0.0).unwrap();
    let d = DisorderLaw::gaussian(1.0).unwrap();
    let sys = PinningSystem::new(1.0, 0.1, law, d.clone()).unwrap();
    let r = d.sample(80, 4);
    let cr = contact_resolved(&sys, &r, 80, 1024).unwrap();
    let total = cr.total();
    let (mut m1, mut m2) = (0.0, 0.0);
    for (j, &x) in cr.log_z.iter().enumerate() {
        let p = (x - total).exp();
        m1 += p * j as f64;
        m2 += p * (j * j) as f64;
    }
    let m = contact_moments(&sys, &r, 80).unwrap();
    assert!((m.mean - m1).abs() < 1e-9, "{} vs {m1}", m.mean);
    assert!((m.variance - (m2 - m1 * m1)).abs() < 1e-8);
}

#[test]
fn contact_mean_is_derivative_of_log_partition() {
    let law = ExcursionLaw::zeta(1.5, 0.2).unwrap();
    let r = DisorderRealization::zeros(400);
    let h = 1e-5;
    let at = |u: f64| {
        let s = PinningSystem::deterministic(1.0, u, law.clone()).unwrap();
        trace(&s, &r, 400).unwrap().log_z_n()
    };
    let fd = (at(0.5 + h) - at(0.5 - h)) / (2.0 * h);
    let s = PinningSystem::deterministic(1.0, 0.5, law.clone()).unwrap();
    let m = contact_moments(&s, &r, 400).unwrap();
    assert!((m.mean - fd).abs() < 1e-5 * fd.abs().max(1.0), "{} vs {fd}", m.mean);
}

#[test]
fn brute_force_small_instances() {
    let d = DisorderLaw::gaussian(1.0).unwrap();
    for (i, law) in [
        two_step(0.3),
        ExcursionLaw::fixed(3).unwrap(),
        ExcursionLaw::geometric(0.4, 0.2).unwrap(),
        ExcursionLaw::zeta(2.5, 0.0).unwrap(),
    ]
    .into_iter()
    .enumerate()
    {
        let sys = PinningSystem::new(1.3, -0.4, law, d.clone()).unwrap();
        let r = d.sample(12, i as u64);
        let a = trace(&sys, &r, 12).unwrap().log_z_n();
        let b = brute_force(&sys, &r, 12).unwrap();
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }
}

/// `J_E(t)` by a dense grid over the exponent followed by a local golden
/// refinement, independent of the derivative bisection in the library.
fn rate_j_grid(law: &ExcursionLaw, t: f64, x_lo: f64) -> f64 {
    let x_hi = law.a_e();
    let steps = 4000;
    let mut best = (x_hi, t * x_hi - law.log_mgf(x_hi));
    for i in 0..steps {
        let x = x_lo + (x_hi - x_lo) * i as f64 / steps as f64;
        let v = t * x - law.log_mgf(x);
        if v > best.1 {
            best = (x, v);
        }
    }
    let h = (x_hi - x_lo) / steps as f64;
    let (_, v) = numeric::golden_max(|x| t * x - law.log_mgf(x), (best.0 - h).max(x_lo), (best.0 + h).min(x_hi), 1e-13);
    v.max(best.1)
}

#[test]
fn rate_function_matches_grid_oracle() {
    let geo = ExcursionLaw::geometric(0.5, 0.0).unwrap();
    // J_E(4) for K(k) = 2^{-k}: 4 log 1.5 - log 3
    let expect = 4.0 * 1.5f64.ln() - 3f64.ln();
    assert!((geo.rate_j(4.0) - expect).abs() < 1e-10);
    assert!((rate_j_grid(&geo, 4.0, -10.0) - expect).abs() < 1e-8);
    let zeta = ExcursionLaw::zeta(2.5, 0.1).unwrap();
    for t in [1.2, 2.0, 5.0, 20.0] {
        let a = zeta.rate_j(t);
        let b = rate_j_grid(&zeta, t, -15.0);
        assert!((a - b).abs() < 1e-7, "t = {t}: {a} vs {b}");
    }
}

#[test]
fn variational_free_energy_matches_grid_oracle() {
    // βf^d = sup over a δ grid of βuδ - δ J_E(1/δ), with J_E from the grid oracle
    let law = ExcursionLaw::zeta(2.5, 0.1).unwrap();
    for u in [0.2, 0.8, 1.5] {
        let mut best = -law.a_e();
        for i in 1..=400 {
            let d = i as f64 / 400.0;
            best = best.max(u * d - d * rate_j_grid(&law, 1.0 / d, -15.0));
        }
        let v = free_energy_det(1.0, u, &law).value;
        assert!(v >= best - 1e-9 && v - best < 2e-3, "u = {u}: {v} vs {best}");
    }
}

#[test]
fn annealed_matches_two_variable_formula() {
    // sup_{M,δ} (β(u+M) - I_V(M) - J_E(1/δ)) δ with I_V(M) = M²/2 for N(0,1)
    let law = ExcursionLaw::zeta(1.5, 0.0).unwrap();
    let (beta, u) = (1.0, -0.25);
    let js: Vec<(f64, f64)> = (1..=500)
        .map(|i| {
            let d = i as f64 / 500.0;
            (d, law.rate_j(1.0 / d))
        })
        .collect();
    let mut best = -law.a_e();
    for k in 0..=600 {
        let m = -3.0 + 6.0 * k as f64 / 600.0;
        for &(d, j) in &js {
            best = best.max((beta * (u + m) - 0.5 * m * m - j) * d);
        }
    }
    let g = DisorderLaw::gaussian(1.0).unwrap();
    let a = free_energy_annealed(beta, u, &law, &g).unwrap().value;
    assert!((a - best).abs() < 1e-3, "{a} vs {best}");
    assert!((annealed_shift(2.0, &g).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn ld_rate_matches_contact_distribution() {
    let law = ExcursionLaw::geometric(0.5, 0.0).unwrap();
    let sys = PinningSystem::deterministic(0.0, 0.0, law.clone()).unwrap();
    let n = 256;
    let cr = contact_resolved(&sys, &DisorderRealization::zeros(n), n, 1024).unwrap();
    let rate = ld_rate_contacts(&law, 0.7, 0.9).unwrap();
    let finite = cr.window(0.7, 0.9) / n as f64;
    assert!((finite + rate).abs() < 0.05, "{finite} vs {rate}");
}

#[test]
fn closed_form_and_bisection_critical_points_agree() {
    for law in [ExcursionLaw::zeta(1.5, 0.3).unwrap(), ExcursionLaw::zeta(3.0, 0.2).unwrap()] {
        let closed = u_c_det(&law).u_c;
        let b = u_c_det_by_bisection(1.0, &law, -2.0, 2.0, 1e-7).unwrap();
        assert!((closed - b).abs() < 1e-4, "{closed} vs {b}");
    }
    let custom = ExcursionLaw::custom(vec![0.3, 0.3], 0.0, TailClass::Exponential { rate: 0.5, gamma: 3.0 }).unwrap();
    let closed = u_c_det(&custom).u_c;
    assert!(closed < 0.0 && closed.is_finite());
    let b = u_c_det_by_bisection(1.0, &custom, -3.0, 1.0, 1e-7).unwrap();
    assert!((closed - b).abs() < 1e-4, "{closed} vs {b}");
}
