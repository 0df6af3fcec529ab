use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use uavpc::baseline::*;
use uavpc::channel::ChannelGainTensor;

#[test]
fn symmetric_ues_are_served_equally_often() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let k = 4;
    let slots = 10_000;
    let mut state = PfState::new(k);
    let mut served = vec![0usize; k];
    for _ in 0..slots {
        let rates: Vec<f64> = (0..k).map(|_| rng.random_range(0.5..3.0)).collect();
        let s = pf_select(&rates, &state).unwrap();
        served[s] += 1;
        state.update(s, rates[s]);
    }
    let fair = slots as f64 / k as f64;
    for (i, &n) in served.iter().enumerate() {
        assert!((n as f64 - fair).abs() <= 0.05 * fair, "UE {i} served {n} times, expected about {fair}");
    }
}

#[test]
fn constant_equal_rates_alternate() {
    let mut state = PfState::new(2);
    let mut order = Vec::new();
    for _ in 0..6 {
        let s = pf_select(&[1.0, 1.0], &state).unwrap();
        order.push(s);
        state.update(s, 1.0);
    }
    assert_eq!(order, vec![0, 1, 0, 1, 0, 1]);
}

#[test]
fn empty_or_mismatched_candidates_are_errors() {
    assert!(pf_select(&[], &PfState::new(0)).is_err());
    assert!(pf_select(&[1.0], &PfState::new(2)).is_err());
}

#[test]
fn olpc_from_tensor_uses_serving_loss() {
    // Without recorded coupling the band-average gain stands in for the loss.
    let g = ChannelGainTensor::from_fn(2, 2, 2, |i, j, s| if i == j { [1e-11, 3e-11][s] } else { 1e-14 });
    let p = olpc_powers_w(&g, &[0, 1], &OlpcParams { alpha: 1.0, m_rb: 1, p0_dbm: -100.0, p_max_dbm: 23.0 });
    // Mean gain 2e-11 is a 106.99 dB loss; -100 + 106.99 = 6.99 dBm.
    let want = 10f64.powf((-100.0 + 10.0 * (1.0 / 2e-11f64).log10() - 30.0) / 10.0);
    assert!((p[0] - want).abs() < 1e-12 * want && (p[1] - want).abs() < 1e-12 * want);
}

proptest! {
    #[test]
    fn olpc_never_exceeds_the_cap(pl in 0.0f64..200.0, p0 in -120.0f64..0.0, alpha in 0.0f64..=1.0, m_rb in 1u32..100) {
        let params = OlpcParams { p0_dbm: p0, alpha, m_rb, ..OlpcParams::default() };
        let p = olpc_power_dbm(pl, &params);
        prop_assert!(p <= params.p_max_dbm);
        let uncapped = p0 + 10.0 * f64::from(m_rb).log10() + alpha * pl;
        prop_assert!((p - uncapped.min(23.0)).abs() < 1e-12);
    }

    #[test]
    fn pf_select_is_scale_invariant(
        rates in proptest::collection::vec(0.01f64..10.0, 1..8),
        hist_seed in any::<u64>(),
        c in 1e-3f64..1e3,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(hist_seed);
        let state = PfState { r_hist: rates.iter().map(|_| rng.random_range(0.01..5.0)).collect(), forgetting: 0.01 };
        let scaled: Vec<f64> = rates.iter().map(|r| r * c).collect();
        let a = pf_select(&rates, &state).unwrap();
        let b = pf_select(&scaled, &state).unwrap();
        // A scaled ratio can only flip when two ratios tie to rounding.
        let ratio = |k: usize| rates[k] / state.r_hist[k];
        prop_assert!(a == b || (ratio(a) - ratio(b)).abs() <= 1e-12 * ratio(a));
    }

    #[test]
    fn pf_update_matches_the_filter(r in 0.0f64..10.0, beta in 0.0f64..=1.0, h in proptest::collection::vec(0.001f64..5.0, 1..6)) {
        let state = PfState { r_hist: h.clone(), forgetting: beta };
        let next = pf_update(&state, 0, r);
        prop_assert!((next.r_hist[0] - ((1.0 - beta) * h[0] + beta * r)).abs() < 1e-12);
        for k in 1..h.len() {
            prop_assert!((next.r_hist[k] - (1.0 - beta) * h[k]).abs() < 1e-12);
        }
    }
}
