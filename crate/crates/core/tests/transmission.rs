use std::f64::consts::PI;

use qdcoupler::transmission::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn mode(f: f64, gamma: f64, beta: f64, phi: f64) -> ChannelMode {
    ChannelMode { f, gamma, beta, phi }
}

/// Random physical channel: `sum f <= 1`, `sum 2 g <= 1`.
fn random_channel(rng: &mut ChaCha8Rng, modes: usize) -> CouplerChannel {
    let fw: Vec<f64> = (0..modes).map(|_| rng.gen_range(0.05..1.0)).collect();
    let gw: Vec<f64> = (0..modes).map(|_| rng.gen_range(0.0..1.0)).collect();
    let fs = rng.gen_range(0.3..1.0) / fw.iter().sum::<f64>();
    let gs = rng.gen_range(0.1..0.5) / gw.iter().sum::<f64>();
    CouplerChannel::new(
        (0..modes)
            .map(|k| mode(fw[k] * fs, gw[k] * gs, rng.gen_range(4.0..12.0), rng.gen_range(-PI..PI)))
            .collect(),
    )
    .unwrap()
}

#[test]
fn single_mode_reduces_to_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..2000 {
        let f = rng.gen_range(0.0..1.0);
        let g = rng.gen_range(0.0..0.5);
        let ch = CouplerChannel::new(vec![mode(f, g, rng.gen_range(0.0..15.0), rng.gen_range(-PI..PI))]).unwrap();
        let (z, z0) = (rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0));
        let exact = f * f * (1.0 - 4.0 * g * (1.0 - g));
        assert!((on_resonance(&ch, z, z0, 0.0) - exact).abs() <= 1e-12);
        assert!((single_mode_transmission(f, g) - exact).abs() <= 1e-15);
    }
}

#[test]
fn perfect_extinction_at_half_beta_factor() {
    let ch = CouplerChannel::single(1.0, 0.5);
    for z in [0.0, 1.0, 3.7] {
        assert!(on_resonance(&ch, z, 0.4, 0.0) < 1e-30);
        assert_eq!(off_resonance(&ch, z), 1.0);
    }
}

#[test]
fn no_dipole_means_no_change() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let mut ch = random_channel(&mut rng, 3);
        ch.modes.iter_mut().for_each(|m| m.gamma = 0.0);
        let (z, z0, d) = (rng.gen_range(0.0..8.0), rng.gen_range(0.0..8.0), rng.gen_range(-3.0..3.0));
        assert_eq!(on_resonance(&ch, z, z0, d), off_resonance(&ch, z));
    }
}

#[test]
fn two_equal_modes_beat() {
    let (b1, b2) = (9.0, 8.0);
    let ch = CouplerChannel::new(vec![mode(0.5, 0.0, b1, 0.0), mode(0.5, 0.0, b2, 0.0)]).unwrap();
    let lpi = ch.beat_length_um().unwrap();
    assert!((lpi - PI / (b1 - b2)).abs() < 1e-15);
    for k in 0..50 {
        let z = 0.13 * k as f64;
        let expected = ((b1 - b2) * z / 2.0).cos().powi(2);
        assert!((off_resonance(&ch, z) - expected).abs() < 1e-14);
    }
    for odd in [1.0, 3.0, 5.0] {
        assert!(off_resonance(&ch, odd * lpi) < 1e-28);
    }
}

#[test]
fn beat_period_of_off_resonance() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let ch = random_channel(&mut rng, 2);
        let period = 2.0 * PI / (ch.modes[0].beta - ch.modes[1].beta).abs();
        for k in 0..20 {
            let z = 0.37 * k as f64;
            assert!((off_resonance(&ch, z) - off_resonance(&ch, z + period)).abs() < 1e-12);
        }
        // and not at half the period, unless the fractions are degenerate
        let f = &ch.modes;
        let z = 0.5 * period;
        let expected = (f[0].f - f[1].f).powi(2);
        assert!((off_resonance(&ch, z) - expected).abs() < 1e-12);
    }
}

#[test]
fn passivity_over_random_channels() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..500 {
        let n = rng.gen_range(1..=4);
        let ch = random_channel(&mut rng, n);
        for _ in 0..20 {
            let (z, z0, d) = (rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0), rng.gen_range(-4.0..4.0));
            let f = on_resonance(&ch, z, z0, d);
            let f0 = off_resonance(&ch, z);
            assert!(f <= 1.0 + 1e-9 && f >= 0.0, "F = {f}");
            assert!(f0 <= 1.0 + 1e-9);
        }
    }
}

#[test]
fn interference_expansion_is_real() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..200 {
        let ch = random_channel(&mut rng, 3);
        let dz = rng.gen_range(-8.0..8.0);
        let (re, im) = interference_sum(&ch, dz);
        assert!(im <= 1e-12, "{im}");
        assert!((re - ch.emission_amplitude(dz).norm_sqr()).abs() < 1e-12);
    }
}

#[test]
fn far_detuning_recovers_off_resonance() {
    let single = CouplerChannel::new(vec![mode(0.9, 0.4, 7.0, 0.3)]).unwrap();
    for d in [-1e3, 1e3] {
        assert!((on_resonance(&single, 1.7, 0.4, d) - off_resonance(&single, 1.7)).abs() < 1e-5);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    for _ in 0..50 {
        let ch = random_channel(&mut rng, 3);
        let (z, z0) = (rng.gen_range(0.0..8.0), rng.gen_range(0.0..8.0));
        let f0 = off_resonance(&ch, z);
        // the dispersive cross term decays as 1 / d
        for d in [-1e5, 1e5] {
            assert!((on_resonance(&ch, z, z0, d) - f0).abs() < 1e-5);
        }
        let dev = |d: f64| (on_resonance(&ch, z, z0, d) - f0).abs();
        assert!(dev(1e4) <= 0.11 * dev(1e3) + 1e-12);
    }
}

#[test]
fn lineshape_single_mode_closed_form_and_width() {
    let g = 0.5;
    let ch = CouplerChannel::single(1.0, g);
    let ds = qdcoupler::emission::linspace(-5.0, 5.0, 4001);
    let f = lineshape(&ch, 1.0, 0.0, &ds);
    for (d, v) in ds.iter().zip(&f) {
        let exact = (qdcoupler::C64::new(1.0, 0.0) - 2.0 * g * lorentzian(*d)).norm_sqr();
        assert!((v - exact).abs() < 1e-14);
    }
    assert!(f[2000] < 1e-30);
    let w = response_width(&ds, &f, 1.0).unwrap();
    // |1 - L|^2 = 4 d^2 / (1 + 4 d^2) falls to half depth at |d| = 1/2
    assert!((w - 1.0).abs() < 1e-3, "{w}");
}

#[test]
fn lineshape_width_of_order_linewidth() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let ds = qdcoupler::emission::linspace(-20.0, 20.0, 8001);
    let mut checked = 0;
    for _ in 0..50 {
        let ch = random_channel(&mut rng, 2);
        let (z, z0) = (rng.gen_range(0.0..8.0), rng.gen_range(0.0..8.0));
        let f0 = off_resonance(&ch, z);
        let f = lineshape(&ch, z, z0, &ds);
        if f.iter().map(|v| (v - f0).abs()).fold(0.0, f64::max) < 1e-6 {
            continue;
        }
        let w = response_width(&ds, &f, f0).unwrap();
        assert!((0.5..=2.0).contains(&w), "width {w}");
        checked += 1;
    }
    assert!(checked > 30);
}

#[test]
fn lineshape_symmetric_for_real_channels() {
    // all amplitudes real at the observation point
    let ch = CouplerChannel::new(vec![mode(0.6, 0.3, 9.0, 0.0), mode(0.3, 0.1, 8.2, 0.0)]).unwrap();
    let single = CouplerChannel::new(vec![mode(0.7, 0.2, 8.0, 1.1)]).unwrap();
    for d in [0.1, 0.7, 2.5] {
        assert!((on_resonance(&ch, 0.0, 0.0, d) - on_resonance(&ch, 0.0, 0.0, -d)).abs() < 1e-14);
        assert!((on_resonance(&single, 2.3, 0.9, d) - on_resonance(&single, 2.3, 0.9, -d)).abs() < 1e-14);
    }
}

#[test]
fn contrast_scan_consistency_and_sentinel() {
    let ch = CouplerChannel::new(vec![mode(0.5, 0.3, 9.0, 0.1), mode(0.5, 0.15, 8.0, -0.4)]).unwrap();
    let lpi = ch.beat_length_um().unwrap();
    let zs: Vec<f64> = (0..=400).map(|k| k as f64 * 2.0 * lpi / 400.0).collect();
    let s = contrast_scan(&ch, &zs, 0.5 * lpi, 0.0);
    assert_eq!(s.f0.len(), zs.len());
    for k in 0..zs.len() {
        if s.f0[k] > F0_FLOOR {
            assert!((s.dt[k] - (s.f[k] - s.f0[k]) / s.f0[k]).abs() < 1e-12);
            assert!((s.ratio[k] - s.f[k] / s.f0[k]).abs() < 1e-9 * s.ratio[k].max(1.0));
        } else {
            assert_eq!(s.ratio[k], RATIO_INFINITE);
            assert!(s.dt[k].is_nan());
        }
    }
    // z = L_pi lands on an exact zero of F0 (k = 200)
    assert!(s.flagged.contains(&200));
    assert!(s.dt_min.0 <= s.dt_max.0);
}

#[test]
fn extinction_trivial_cases() {
    let e = engineered_extinction(&CouplerChannel::single(1.0, 0.0), 11);
    assert!(e.worst_case.abs() < 1e-15);
    let e = engineered_extinction(&CouplerChannel::single(1.0, 0.25), 11);
    assert!((e.worst_case - 0.75).abs() < 1e-12);
}

#[test]
fn extinction_covers_every_position() {
    let ch = CouplerChannel::new(vec![mode(0.8, 0.42, 12.0, 0.0), mode(0.2, 0.02, 10.0, 0.0)]).unwrap();
    let e = engineered_extinction(&ch, 121);
    let period = 2.0 * PI / 2.0;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..2000 {
        let (z, z0) = (rng.gen_range(0.0..period), rng.gen_range(0.0..period));
        let f0 = off_resonance(&ch, z);
        let ext = 1.0 - on_resonance(&ch, z, z0, 0.0) / f0;
        assert!(ext >= e.worst_case - 2e-3, "{ext} < {}", e.worst_case);
    }
}

#[test]
fn lossless_single_channel_collects_everything() {
    let ch = CouplerChannel::single(1.0, 0.5);
    for z in [0.0, 1.0, 5.0] {
        let both = 2.0 * ch.emission_amplitude(z).norm_sqr();
        assert!((both - 1.0).abs() < 1e-15);
    }
}

#[test]
fn long_window_average_equals_incoherent_sum() {
    let ch = CouplerChannel::new(vec![
        mode(0.5, 0.2, 1.0, 0.3),
        mode(0.3, 0.1, 2f64.sqrt(), -1.1),
        mode(0.1, 0.05, 3f64.sqrt(), 2.0),
    ])
    .unwrap();
    let n = 20_000_000;
    let h = 0.5;
    let mean: f64 = (0..n).map(|k| ch.emission_amplitude(k as f64 * h).norm_sqr()).sum::<f64>() / n as f64;
    let incoherent: f64 = ch.modes.iter().map(|m| m.f * m.gamma).sum();
    assert!((mean - incoherent).abs() < 1e-6, "{mean} vs {incoherent}");
}

#[test]
fn invalid_channels_rejected() {
    assert!(CouplerChannel::new(vec![mode(1.2, 0.1, 1.0, 0.0)]).is_err());
    assert!(CouplerChannel::new(vec![mode(0.5, 0.3, 1.0, 0.0), mode(0.5, 0.3, 2.0, 0.0)]).is_err());
    assert!(CouplerChannel::new(vec![mode(0.5, 0.1, f64::NAN, 0.0)]).is_err());
    assert!(CouplerChannel::new(vec![mode(0.6, 0.1, 1.0, 0.0), mode(0.6, 0.1, 2.0, 0.0)]).is_err());
}
