use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sqss_core::quantum::{
    bits_to_k, inner_product, k_to_bits, Amplitude, Basis, GhzSign, GhzSpec, Operator, SingleState, SlotId, StatePool,
};

fn rotation(theta: f64) -> Operator {
    let (s, c) = theta.sin_cos();
    Operator::from_real(2, &[c, -s, s, c]).unwrap()
}

fn state(idx: usize) -> SingleState {
    SingleState::ALL[idx % 4]
}

/// Amplitude of `|x⟩_a |y⟩_b` read out of whichever factor holds both slots.
fn joint_amp(pool: &StatePool, a: SlotId, b: SlotId, x: usize, y: usize) -> Amplitude {
    let f = pool.factor_of(a).unwrap();
    let digits: Vec<usize> = f.slots().iter().map(|&s| if s == a { x } else if s == b { y } else { 0 }).collect();
    f.amplitude(&digits).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bits_round_trip(n in 1usize..=20, raw in any::<u64>()) {
        let k = raw % (1u64 << n);
        let bits = k_to_bits(k, n).unwrap();
        prop_assert_eq!(bits.len(), n);
        prop_assert_eq!(bits_to_k(&bits).unwrap(), k);
    }

    #[test]
    fn out_of_range_k_is_rejected(n in 1usize..=20, extra in 0u64..1000) {
        prop_assert!(k_to_bits((1u64 << n) + extra, n).is_err());
    }

    #[test]
    fn unitaries_and_measurements_keep_norm(
        preps in prop::collection::vec(0usize..4, 3),
        steps in prop::collection::vec((0usize..4, 0usize..3, 0usize..3, -3.2f64..3.2), 1..12),
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pool = StatePool::new();
        let slots: Vec<SlotId> = preps.iter().map(|&p| pool.prepare_single(state(p))).collect();
        for (kind, a, b, theta) in steps {
            match kind {
                0 => pool.apply_unitary(&[slots[a]], &Operator::hadamard()).unwrap(),
                1 => pool.apply_unitary(&[slots[a]], &rotation(theta)).unwrap(),
                2 if a != b => pool.apply_unitary(&[slots[a], slots[b]], &Operator::cnot()).unwrap(),
                _ => {
                    pool.measure(slots[a], Basis::X, &mut rng).unwrap();
                }
            }
            for f in pool.factors() {
                prop_assert!((f.norm() - 1.0).abs() < 1e-10);
            }
            for &s in &slots {
                for basis in [Basis::Z, Basis::X] {
                    let total: f64 = pool.probabilities(s, basis).unwrap().iter().sum();
                    prop_assert!((total - 1.0).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn merged_factor_matches_kron(pa in 0usize..4, pb in 0usize..4, theta in -3.2f64..3.2) {
        let mut pool = StatePool::new();
        let a = pool.prepare_single(state(pa));
        let b = pool.prepare_single(state(pb));
        pool.apply_unitary(&[a], &rotation(theta)).unwrap();
        let op = Operator::cnot();
        pool.apply_unitary(&[a, b], &op).unwrap();

        let ra = rotation(theta).apply(&state(pa).amplitudes());
        let rb = state(pb).amplitudes();
        let product: Vec<Amplitude> = ra.iter().flat_map(|x| rb.iter().map(move |y| x * y)).collect();
        let expected = op.apply(&product);
        for x in 0..2 {
            for y in 0..2 {
                let got = joint_amp(&pool, a, b, x, y);
                prop_assert!((got - expected[2 * x + y]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn ghz_branches_have_equal_weight(n in 1usize..=6, raw in any::<u64>()) {
        let k = raw % (1u64 << n);
        let mut pool = StatePool::new();
        let slots = pool.prepare_ghz(&GhzSpec::plus(n, k).unwrap());
        let a = k_to_bits(k, n).unwrap();
        let p = pool.probabilities(slots[0], Basis::Z).unwrap();
        prop_assert!((p[0] - 0.5).abs() < 1e-12);
        for (i, &s) in slots[1..].iter().enumerate() {
            let q = pool.probabilities(s, Basis::Z).unwrap();
            prop_assert!((q[a[i] as usize] - 0.5).abs() < 1e-12);
        }
    }
}

#[test]
fn ghz_measurement_correlates_every_party() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for k in 0..8u64 {
        for _ in 0..20 {
            let mut pool = StatePool::new();
            let slots = pool.prepare_ghz(&GhzSpec::plus(3, k).unwrap());
            let m0 = pool.measure(slots[0], Basis::Z, &mut rng).unwrap();
            let a = k_to_bits(k, 3).unwrap();
            for (i, &s) in slots[1..].iter().enumerate() {
                assert_eq!(pool.measure(s, Basis::Z, &mut rng).unwrap(), a[i] ^ m0);
            }
        }
    }
}

#[test]
fn ghz_pairs_are_orthonormal() {
    for n in 1..=4usize {
        for sign in [GhzSign::Plus, GhzSign::Minus] {
            let mut pool = StatePool::new();
            let states: Vec<_> = (0..1u64 << n)
                .map(|k| {
                    let s = pool.prepare_ghz(&GhzSpec::new(n, k, sign).unwrap());
                    pool.factor_of(s[0]).unwrap().clone()
                })
                .collect();
            for (i, x) in states.iter().enumerate() {
                for (j, y) in states.iter().enumerate() {
                    let ip = inner_product(x, y).unwrap();
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((ip.norm() - expect).abs() < 1e-12, "n={n} k={i} k'={j}");
                }
            }
        }
    }
}

#[test]
fn measurement_splits_product_factors() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut pool = StatePool::new();
    let slots = pool.prepare_ghz(&GhzSpec::plus(3, 5).unwrap());
    assert_eq!(pool.factor_count(), 1);
    pool.measure(slots[0], Basis::Z, &mut rng).unwrap();
    assert_eq!(pool.factor_count(), 4);
}
