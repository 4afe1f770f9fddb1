use pinning_core::partition::{brute_force, contact_moments};
use pinning_core::sampler::PathSampler;
use pinning_core::tail_bounds::bound_at_l1;
use pinning_core::*;
use proptest::prelude::*;

fn law_strategy() -> impl Strategy<Value = ExcursionLaw> {
    prop_oneof![
        (1.1f64..4.0, 0.0f64..0.5).prop_map(|(g, p)| ExcursionLaw::zeta(g, p).unwrap()),
        (0.05f64..0.95, 0.0f64..0.5).prop_map(|(r, p)| ExcursionLaw::geometric(r, p).unwrap()),
        (1u64..4).prop_map(|r| ExcursionLaw::fixed(r).unwrap()),
        (0.05f64..0.5, 0.05f64..0.4).prop_map(|(a, b)| {
            ExcursionLaw::custom(vec![a, b], 0.0, TailClass::Polynomial { gamma: 2.5 }).unwrap()
        }),
    ]
}

fn disorder_strategy() -> impl Strategy<Value = DisorderLaw> {
    prop_oneof![
        Just(DisorderLaw::degenerate()),
        (0.1f64..2.0).prop_map(|s| DisorderLaw::gaussian(s).unwrap()),
        (0.1f64..0.9).prop_map(|p| DisorderLaw::two_point(1.0, -1.0, p).unwrap()),
        (0.5f64..3.0).prop_map(|l| DisorderLaw::centered_exponential(l).unwrap()),
        (1.2f64..3.0).prop_map(|a| DisorderLaw::shifted_pareto(a, 1.0).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn recursion_equals_enumeration(
        law in law_strategy(),
        disorder in disorder_strategy(),
        beta in 0.5f64..3.0,
        u in -2.0f64..2.0,
        n in 1usize..=12,
        seed in any::<u64>(),
    ) {
        let sys = PinningSystem::new(beta, u, law, disorder.clone()).unwrap();
        let r = disorder.sample(n, seed);
        let a = trace(&sys, &r, n).unwrap().log_z_n();
        let b = brute_force(&sys, &r, n).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * b.abs().max(1.0) || a == b, "{} vs {}", a, b);
    }

    #[test]
    fn zero_reward_is_normalized(law in law_strategy(), n in 1usize..600) {
        let sys = PinningSystem::deterministic(1.0, 0.0, law).unwrap();
        let t = trace(&sys, &DisorderRealization::zeros(n), n).unwrap();
        prop_assert!(t.log_z_n().abs() < 1e-12);
    }

    #[test]
    fn finite_volume_free_energy_is_convex_in_u(
        law in law_strategy(),
        u in -1.5f64..1.5,
        seed in any::<u64>(),
    ) {
        let d = DisorderLaw::gaussian(1.0).unwrap();
        let r = d.sample(128, seed);
        let h = 0.05;
        let f = |u: f64| {
            let s = PinningSystem::new(1.0, u, law.clone(), d.clone()).unwrap();
            trace(&s, &r, 128).unwrap().log_z_n() / 128.0
        };
        prop_assert!(f(u + h) + f(u - h) - 2.0 * f(u) >= -1e-9);
    }

    #[test]
    fn mean_contacts_nondecreasing_in_u(law in law_strategy(), u in -1.5f64..1.5, seed in any::<u64>()) {
        let d = DisorderLaw::gaussian(0.5).unwrap();
        let r = d.sample(150, seed);
        let m = |u: f64| {
            let s = PinningSystem::new(1.0, u, law.clone(), d.clone()).unwrap();
            contact_moments(&s, &r, 150).unwrap().mean
        };
        prop_assert!(m(u + 0.1) >= m(u) - 1e-9);
    }

    #[test]
    fn det_free_energy_at_least_minus_a_e(law in law_strategy(), u in -2.0f64..2.0) {
        let e = free_energy_det(1.0, u, &law);
        prop_assert!(e.value >= -law.a_e() - 1e-12);
    }

    #[test]
    fn contact_fraction_nondecreasing(u in -1.0f64..2.0, gamma in 1.3f64..3.5, p in 0.0f64..0.4) {
        let law = ExcursionLaw::zeta(gamma, p).unwrap();
        let a = critical::contact_fraction(1.0, u, &law).value;
        let b = critical::contact_fraction(1.0, u + 0.05, &law).value;
        prop_assert!(b >= a - 1e-6, "{} then {}", a, b);
    }

    #[test]
    fn strategy_bound_is_sound(
        beta in 0.5f64..2.0,
        u in -3.0f64..1.0,
        disorder in disorder_strategy(),
        l1 in 1u64..80,
        n in 50usize..300,
        seed in any::<u64>(),
    ) {
        let law = ExcursionLaw::zeta(2.0, 0.0).unwrap();
        let sys = PinningSystem::new(beta, u, law, disorder.clone()).unwrap();
        let r = disorder.sample(n, seed);
        let exact = trace(&sys, &r, n).unwrap().log_z_n();
        let b = bound_at_l1(&sys, &r, n, l1).unwrap();
        prop_assert!(b.log_z_lower <= exact + 1e-9);
        for w in b.j_plus.iter().chain(&b.j_minus) {
            prop_assert!(*w >= 1 && *w <= n);
        }
    }

    #[test]
    fn sampled_gaps_lie_in_support(law in law_strategy(), u in -1.0f64..2.0, seed in any::<u64>()) {
        let sys = PinningSystem::deterministic(1.0, u, law.clone()).unwrap();
        let s = PathSampler::new(&sys, &DisorderRealization::zeros(60), 60).unwrap();
        for p in s.draw_many(20, seed) {
            for g in p.gaps() {
                prop_assert!(law.pmf(g as u64) > 0.0);
            }
            prop_assert_eq!(p.escaped, p.return_times.last().copied().unwrap_or(0) < 60);
        }
    }
}

#[test]
fn quenched_estimate_is_schedule_independent() {
    let law = ExcursionLaw::zeta(1.5, 0.0).unwrap();
    let d = DisorderLaw::gaussian(1.0).unwrap();
    let sys = PinningSystem::new(1.0, -0.2, law, d).unwrap();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| free_energy_quenched_mc(&sys, 256, 9, 42).unwrap())
    };
    let a = run(1);
    let b = run(4);
    assert_eq!(a.value.to_bits(), b.value.to_bits());
    assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
}
