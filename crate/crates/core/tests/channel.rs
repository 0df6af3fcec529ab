use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};
use uavpc::channel::*;
use uavpc::topology::*;

/// Modified Bessel function of the first kind, order zero, by its series.
fn bessel_i0(x: f64) -> f64 {
    let (mut term, mut sum, q) = (1.0, 1.0, x * x / 4.0);
    for k in 1..500 {
        term *= q / (k * k) as f64;
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum
}

/// Rician envelope CDF with mean power one, by Simpson integration of the pdf.
fn rician_cdf(k: f64, r: f64) -> f64 {
    let pdf = |x: f64| {
        let a = 2.0 * (k * (k + 1.0)).sqrt() * x;
        // exp(-k - (k+1)x^2) I0(a), with the large exponents cancelled.
        2.0 * (k + 1.0) * x * (-k - (k + 1.0) * x * x + a).exp() * bessel_i0(a) * (-a).exp()
    };
    let n = 4000;
    let h = r / n as f64;
    let mut s = pdf(0.0) + pdf(r);
    for i in 1..n {
        s += pdf(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[test]
fn single_tap_rician_envelope_matches_the_analytic_cdf() {
    let profile = TdlProfile { tap_delays: vec![0.0], tap_powers_db: vec![0.0], rician_k_db: 15.0 };
    let k = 10f64.powf(1.5);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 4000;
    let mut env: Vec<f64> = (0..n).map(|_| realize_tdl_with(&profile, &mut rng)[0].gain.norm()).collect();
    env.sort_by(f64::total_cmp);
    let mut d: f64 = 0.0;
    for (i, &r) in env.iter().enumerate() {
        let f = rician_cdf(k, r);
        d = d.max((f - i as f64 / n as f64).abs()).max(((i + 1) as f64 / n as f64 - f).abs());
    }
    let critical = 1.628 / (n as f64).sqrt();
    assert!(d < critical, "KS statistic {d} above the 1% critical value {critical}");
}

#[test]
fn default_profile_has_unit_mean_power() {
    let p = TdlProfile::default();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let n = 100_000;
    let mean = (0..n).map(|_| realize_tdl_with(&p, &mut rng).iter().map(|t| t.gain.norm_sqr()).sum::<f64>()).sum::<f64>()
        / n as f64;
    assert!((mean - 1.0).abs() < 0.01, "mean power {mean}");
    let total: f64 = p.tap_powers_db.iter().map(|d| 10f64.powf(d / 10.0)).sum();
    assert!((total - 1.0).abs() < 1e-12);
    assert!(p.tap_delays[0] == 0.0 && p.tap_delays.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn parseval_holds_for_two_taps_one_over_b_apart() {
    let b = 9e6;
    let taps = [
        Tap { delay: 0.0, gain: Complex64::new(0.5f64.sqrt(), 0.0) },
        Tap { delay: 1.0 / b, gain: Complex64::new(0.0, 0.5f64.sqrt()) },
    ];
    let g = block_gains(&taps, b, 20);
    let mean = g.iter().sum::<f64>() / 20.0;
    assert!((mean - 1.0).abs() < 1e-9);
    assert!(g.iter().cloned().fold(0.0, f64::max) - g.iter().cloned().fold(9.0, f64::min) > 0.5);
    // Direct numerical average of |H(f)|^2 over one block as an oracle.
    let h2 = |f: f64| {
        taps.iter()
            .map(|t| t.gain * Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * f * t.delay))
            .sum::<Complex64>()
            .norm_sqr()
    };
    let (lo, w) = (-b / 2.0 + 3.0 * b / 20.0, b / 20.0);
    let m = 20_000;
    let num = (0..m).map(|k| h2(lo + (k as f64 + 0.5) * w / m as f64)).sum::<f64>() / m as f64;
    assert!((num - g[3]).abs() < 1e-6, "{num} vs {}", g[3]);
}

#[test]
fn boresight_link_matches_closed_form() {
    let layout = build_layout(1, 2000.0, 35.0, 8.5).unwrap();
    let params = ChannelParams {
        large: LargeScaleParams { shadow_std_db: 0.0, ..Default::default() },
        tdl: TdlProfile::los_only(),
        ..Default::default()
    };
    for d in [150.0, 400.0, 900.0] {
        let drop = UeDrop { positions: vec![[d, 0.0, 60.0]], serving_cell: vec![0], ue_height: 60.0 };
        let g = build_gain_tensor(&layout, &drop, &params, 1, 3).unwrap();
        let d3 = (d * d + 25.0f64 * 25.0).sqrt();
        let pl = 32.8 + 21.0 * d3.log10();
        let el = (25.0f64 / d).atan().to_degrees() + 8.5;
        let sector = 15.0 - (12.0 * (el / 13.0).powi(2)).min(25.0);
        // Beam 3 of six points back at the site, so the UAV sees its peak gain.
        let want = 10f64.powf((sector + 8.0 - pl) / 10.0);
        assert!(((g.get(0, 0, 0) - want) / want).abs() < 1e-9, "d={d}: {} vs {want}", g.get(0, 0, 0));
        // The cell facing away sees the backlobe of both ends.
        let back = g.get(0, 1, 0) / g.get(0, 0, 0);
        assert!(back < 1.0);
    }
}

#[test]
fn behind_the_beam_is_suppressed_by_the_front_to_back_ratio() {
    let layout = build_layout(2, 2000.0, 35.0, 8.5).unwrap();
    let params = ChannelParams {
        large: LargeScaleParams { shadow_std_db: 0.0, ..Default::default() },
        tdl: TdlProfile::los_only(),
        ..Default::default()
    };
    let [sx, sy] = layout.sites[0];
    let [tx, ty] = layout.sites[1];
    let (ux, uy) = ((sx + tx) / 2.0, (sy + ty) / 2.0);
    let serving = 0;
    let pos = [ux, uy, 60.0];
    let beam_to = |cell: usize| {
        let bs = layout.bs_position(cell);
        let az = (bs[1] - uy).atan2(bs[0] - ux).to_degrees();
        (0..6).min_by(|&a, &b| wrap_deg(az - 60.0 * a as f64).abs().total_cmp(&wrap_deg(az - 60.0 * b as f64).abs())).unwrap()
    };
    let beam = beam_to(serving);
    let (_, to_serving) = antenna_gains_db(&layout, pos, serving, beam, &params);
    let other = (3..6).find(|&c| layout.site_of(c) == 1).unwrap();
    let (_, to_other) = antenna_gains_db(&layout, pos, other, beam, &params);
    assert!(to_serving - to_other > 20.0 && to_serving - to_other <= 25.0 + 1e-9);
}

#[test]
fn tensor_is_positive_finite_and_deterministic() {
    let l = default_layout();
    let cells: Vec<usize> = (0..48).collect();
    let d = drop_ues(&l, &cells, 1, 4).unwrap();
    let p = ChannelParams::default();
    let a = build_gain_tensor(&l, &d, &p, 20, 8).unwrap();
    let b = build_gain_tensor(&l, &d, &p, 20, 8).unwrap();
    assert_eq!(a, b);
    for i in 0..48 {
        for j in 0..48 {
            for s in 0..20 {
                let v = a.get(i, j, s);
                assert!(v > 0.0 && v.is_finite());
            }
        }
    }
}

#[test]
fn serving_links_are_stronger_on_average() {
    let l = default_layout();
    let cells: Vec<usize> = (0..48).collect();
    let p = ChannelParams::default();
    let (mut own, mut cross, mut n_cross) = (0.0, 0.0, 0usize);
    for seed in 0..10 {
        let d = drop_ues(&l, &cells, 1, seed).unwrap();
        let g = build_gain_tensor(&l, &d, &p, 1, seed + 100).unwrap();
        for i in 0..48 {
            own += g.get(i, i, 0);
            for j in (0..48).filter(|&j| j != i) {
                cross += g.get(i, j, 0);
                n_cross += 1;
            }
        }
    }
    assert!(own / 480.0 > 10.0 * cross / n_cross as f64);
}

#[test]
fn default_channels_are_flat_across_the_band() {
    let p = TdlProfile::default();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let n = 2000;
    let flat = (0..n)
        .filter(|_| {
            let g = block_gains(&realize_tdl_with(&p, &mut rng), 9e6, 20);
            let (hi, lo) = (g.iter().cloned().fold(0.0, f64::max), g.iter().cloned().fold(f64::INFINITY, f64::min));
            10.0 * (hi / lo).log10() < 3.0
        })
        .count();
    assert!(flat as f64 >= 0.9 * n as f64, "only {flat} of {n} realizations are flat");
}

#[test]
fn shadowing_is_zero_mean_with_the_configured_spread() {
    let l = default_layout();
    let params = ChannelParams { tdl: TdlProfile::los_only(), ..Default::default() };
    let cells: Vec<usize> = (0..48).collect();
    let mut resid = Vec::new();
    for seed in 0..20 {
        let d = drop_ues(&l, &cells, 1, seed).unwrap();
        let g = build_gain_tensor(&l, &d, &params, 1, seed).unwrap();
        for (i, ue) in d.positions.iter().enumerate() {
            for j in 0..48 {
                let bs = l.bs_position(j);
                let d3 = ((ue[0] - bs[0]).powi(2) + (ue[1] - bs[1]).powi(2) + (ue[2] - bs[2]).powi(2)).sqrt();
                resid.push(g.coupling_db(i, j).unwrap() - path_loss_db(d3, &params.large));
            }
        }
    }
    let n = resid.len() as f64;
    let mean = resid.iter().sum::<f64>() / n;
    let sd = (resid.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let z = Normal::new(0.0, 1.0).unwrap().inverse_cdf(0.995);
    assert!(mean.abs() < z * 4.4 / n.sqrt(), "mean {mean}");
    assert!((sd - 4.4).abs() < 0.05 * 4.4, "sd {sd}");
}

#[test]
fn stacking_concatenates_ues() {
    let l = build_layout(4, 2000.0, 35.0, 8.5).unwrap();
    let p = ChannelParams::default();
    let d = drop_ues(&l, &[0, 4, 9], 1, 2).unwrap();
    let full = build_gain_tensor(&l, &d, &p, 4, 2).unwrap();
    let parts: Vec<ChannelGainTensor> = (0..3).map(|i| full.select(&[i], &(0..12).collect::<Vec<_>>())).collect();
    let refs: Vec<&ChannelGainTensor> = parts.iter().collect();
    assert_eq!(ChannelGainTensor::stack(&refs).unwrap(), full);
    let other = build_gain_tensor(&l, &d, &p, 2, 2).unwrap();
    assert!(ChannelGainTensor::stack(&[&full, &other]).is_err());
    assert!(ChannelGainTensor::stack(&[]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn regrouping_keeps_the_band_average(seed in any::<u64>()) {
        let taps = realize_tdl(&TdlProfile::default(), seed);
        let fine = block_gains(&taps, 9e6, 20);
        let one = block_gains(&taps, 9e6, 1)[0];
        let coarse = block_gains(&taps, 9e6, 5);
        let mean = fine.iter().sum::<f64>() / 20.0;
        prop_assert!((mean - one).abs() < 1e-9 * one);
        for (k, c) in coarse.iter().enumerate() {
            let m = fine[4 * k..4 * k + 4].iter().sum::<f64>() / 4.0;
            prop_assert!((m - c).abs() < 1e-9 * c);
        }
    }

    #[test]
    fn csv_round_trip_is_lossless(seed in 0u64..1000) {
        let l = build_layout(1, 2000.0, 35.0, 8.5).unwrap();
        let d = drop_ues(&l, &[0, 2], 1, seed).unwrap();
        let g = build_gain_tensor(&l, &d, &ChannelParams::default(), 3, seed).unwrap();
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        let back = ChannelGainTensor::read_csv(buf.as_slice()).unwrap();
        for i in 0..2 { for j in 0..3 { for s in 0..3 {
            prop_assert!(((back.get(i, j, s) - g.get(i, j, s)) / g.get(i, j, s)).abs() < 1e-9);
        }}}
    }
}
