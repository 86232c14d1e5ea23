use std::collections::HashSet;

use octsca_core::rng::{xi_threshold, Threshold, Xoshiro256pp};
use octsca_core::{
    derive_streams, dyadic_plan, xi_arbitrary, xi_dyadic, xi_half, ModeRequest, Probability,
    RandomStream,
};
use proptest::prelude::*;
use rand_xoshiro::rand_core::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

const N: usize = 1_000_000;

#[test]
fn generator_matches_rand_xoshiro() {
    for seed in [0u64, 1, 42, u64::MAX] {
        let mut ours = Xoshiro256pp::seed_from_u64(seed);
        let mut theirs = Xoshiro256PlusPlus::seed_from_u64(seed);
        for _ in 0..1000 {
            assert_eq!(ours.next_u64(), theirs.next_u64());
        }
        ours.jump();
        theirs.jump();
        assert_eq!(ours.next_u64(), theirs.next_u64());
        ours.long_jump();
        theirs.long_jump();
        for _ in 0..100 {
            assert_eq!(ours.next_u64(), theirs.next_u64());
        }
    }
}

#[test]
fn stream_i_is_seed_after_i_long_jumps() {
    let set = derive_streams(99, 3).unwrap();
    let mut base = Xoshiro256PlusPlus::seed_from_u64(99);
    base.long_jump();
    base.long_jump();
    let mut s = set.stream(2).clone();
    // lane 0 of stream 2 produces every 8th word
    let first = s.next_u64();
    assert_eq!(first, base.next_u64());
}

#[test]
fn derivation_is_deterministic() {
    let mut a = derive_streams(7, 5).unwrap();
    let mut b = derive_streams(7, 5).unwrap();
    for i in 0..5 {
        for _ in 0..10_000 {
            assert_eq!(a.stream_mut(i).next_u64(), b.stream_mut(i).next_u64());
        }
    }
    assert_ne!(derive_streams(8, 1).unwrap().stream_mut(0).next_u64(), {
        derive_streams(7, 1).unwrap().stream_mut(0).next_u64()
    });
}

fn words(stream: &mut RandomStream, n: usize) -> Vec<u64> {
    let mut v = vec![0; n];
    stream.fill(&mut v);
    v
}

#[test]
fn streams_share_no_128_bit_window() {
    let mut set = derive_streams(2024, 4).unwrap();
    let reference: Vec<u64> = words(set.stream_mut(0), N);
    let windows: HashSet<u128> =
        reference.windows(2).map(|w| (w[0] as u128) << 64 | w[1] as u128).collect();
    for j in 1..4 {
        let other = words(set.stream_mut(j), N);
        let hits = other
            .windows(2)
            .filter(|w| windows.contains(&((w[0] as u128) << 64 | w[1] as u128)))
            .count();
        assert_eq!(hits, 0, "stream 0 and {j} overlap");
    }
}

/// Ones per bit position over `N` words of `f`, each checked at 4σ.
fn check_bit_frequency(r: f64, mut f: impl FnMut() -> u64) {
    let mut counts = [0u64; 64];
    for _ in 0..N {
        let w = f();
        for (b, c) in counts.iter_mut().enumerate() {
            *c += (w >> b) & 1;
        }
    }
    let n = N as f64;
    let sigma = (n * r * (1.0 - r)).sqrt();
    for (b, &c) in counts.iter().enumerate() {
        let z = (c as f64 - n * r) / sigma;
        assert!(z.abs() < 4.0, "r = {r}: bit {b} has z = {z:.2}");
    }
    let total: u64 = counts.iter().sum();
    let z = (total as f64 - 64.0 * n * r) / (64.0 * n * r * (1.0 - r)).sqrt();
    assert!(z.abs() < 4.0, "r = {r}: total ones z = {z:.2}");
}

#[test]
fn single_stream_bits_are_fair() {
    let mut s = derive_streams(1, 1).unwrap().stream(0).clone();
    check_bit_frequency(0.5, || s.next_u64());
}

#[test]
fn xi_half_bit_count() {
    let mut s = derive_streams(3, 1).unwrap().stream(0).clone();
    check_bit_frequency(0.5, || xi_half::<u64>(&mut s));
}

#[test]
fn xi_half_has_no_lag_one_correlation() {
    let mut s = derive_streams(5, 1).unwrap().stream(0).clone();
    let ws: Vec<u64> = (0..N).map(|_| xi_half::<u64>(&mut s)).collect();
    let n = (N - 1) as f64;
    for b in 0..64 {
        let bit = |w: u64| ((w >> b) & 1) as f64;
        let (mut sx, mut sxx) = (0.0, 0.0);
        for pair in ws.windows(2) {
            sx += bit(pair[0]);
            sxx += bit(pair[0]) * bit(pair[1]);
        }
        let m = sx / n;
        let r = (sxx / n - m * m) / (m * (1.0 - m));
        // under independence r has standard deviation 1/sqrt(n)
        assert!(r.abs() < 4.0 / n.sqrt(), "bit {b}: lag-1 correlation {r:.5}");
    }
}

#[test]
fn dyadic_frequencies() {
    for r in [0.75, 0.25] {
        let plan = dyadic_plan(r, 16).unwrap();
        let mut s = derive_streams(11, 1).unwrap().stream(0).clone();
        check_bit_frequency(r, || xi_dyadic::<u64>(&mut s, &plan));
    }
}

#[test]
fn degenerate_plan_equals_xi_half() {
    let plan = dyadic_plan(0.5, 16).unwrap();
    let mut a = derive_streams(13, 1).unwrap().stream(0).clone();
    let mut b = a.clone();
    for _ in 0..1000 {
        assert_eq!(xi_dyadic::<u64>(&mut a, &plan), xi_half::<u64>(&mut b));
    }
    assert_eq!(a.position(), b.position());
}

#[test]
fn arbitrary_frequency_and_extremes() {
    let mut s = derive_streams(17, 1).unwrap().stream(0).clone();
    assert_eq!(xi_arbitrary::<u64>(&mut s, 0.0), 0);
    assert_eq!(xi_arbitrary::<u64>(&mut s, 1.0), u64::MAX);
    assert_eq!(xi_arbitrary::<u32>(&mut s, 1.0), u32::MAX);
    let t = Threshold::new(0.95);
    check_bit_frequency(0.95, || xi_threshold::<u64>(&mut s, t));
}

#[test]
fn arbitrary_bits_follow_top_53_bit_threshold() {
    let r = 0.3;
    let mut s = derive_streams(19, 1).unwrap().stream(0).clone();
    let mut replay = s.clone();
    for _ in 0..100 {
        let w = xi_arbitrary::<u32>(&mut s, r);
        for b in 0..32 {
            let u = (replay.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
            assert_eq!((w >> b) & 1 == 1, u < r);
        }
    }
}

#[test]
fn exact_plans_up_to_eight_words() {
    for k in 1..=8u32 {
        let denom = 1u32 << k;
        for m in 1..denom {
            let r = f64::from(m) / f64::from(denom);
            let plan = dyadic_plan(r, 16).unwrap();
            assert!(plan.words() <= k as usize);
            let combos = 1u32 << plan.words();
            let ones = (0..combos)
                .filter(|c| {
                    let fair: Vec<u8> = (0..plan.words()).map(|j| ((c >> j) & 1) as u8).collect();
                    plan.combine(&fair) & 1 == 1
                })
                .count() as u32;
            assert_eq!(u64::from(ones) << k, u64::from(m) * u64::from(combos), "r = {m}/{denom}");
        }
    }
}

#[test]
fn consumption_depends_only_on_mode() {
    let cases = [
        (Probability::new(0.0, ModeRequest::Auto).unwrap(), 0),
        (Probability::new(0.5, ModeRequest::Auto).unwrap(), 1),
        (Probability::new(0.8125, ModeRequest::Auto).unwrap(), 4),
        (Probability::new(0.95, ModeRequest::Auto).unwrap(), 64),
        (Probability::new(0.75, ModeRequest::Arbitrary).unwrap(), 64),
    ];
    for (prob, expected) in cases {
        let mut s = derive_streams(23, 1).unwrap().stream(0).clone();
        for i in 1..=10u64 {
            let _: u64 = prob.draw(&mut s);
            assert_eq!(s.position(), i * expected);
        }
    }
}

fn replayed_threshold_words(replay: &mut RandomStream, t: Threshold, bits: u32, words: usize) -> Vec<u64> {
    (0..words)
        .map(|_| (0..bits).fold(0u64, |w, i| w | u64::from(t.accept(replay.next_u64())) << i))
        .collect()
}

proptest! {
    #[test]
    fn threshold_fill_matches_scalar_replay(seed: u64, skip in 0usize..20, words in 0usize..40, r in 0.0f64..1.0) {
        let mut s = derive_streams(seed, 1).unwrap().stream(0).clone();
        for _ in 0..skip {
            s.next_u64();
        }
        let t = Threshold::new(r);
        let mut replay = s.clone();
        let mut wide = vec![0u64; words];
        s.fill_threshold(t, &mut wide);
        prop_assert_eq!(&wide, &replayed_threshold_words(&mut replay, t, 64, words));
        let mut narrow = vec![0u32; words];
        s.fill_threshold(t, &mut narrow);
        let expected = replayed_threshold_words(&mut replay, t, 32, words);
        prop_assert_eq!(narrow.iter().map(|&w| u64::from(w)).collect::<Vec<_>>(), expected);
        prop_assert_eq!(s.position(), replay.position());
        prop_assert_eq!(s.next_u64(), replay.next_u64());
    }
}
