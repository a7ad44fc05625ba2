use foliage_rt::channel::{
    average_pdp, empirical_cdf, free_space_path_loss_db, path_loss, path_loss_cir, rms_delay_spread, shape_cir,
    DelayGrid, PowerDelayProfile,
};
use foliage_rt::ray::{MultipathComponent, PathKind};
use num_complex::Complex64;
use proptest::prelude::*;

const B: f64 = 2e9;

fn mpc(delay: f64, amplitude: Complex64) -> MultipathComponent {
    MultipathComponent { delay, amplitude, interaction_count: 0, kind: PathKind::Los, faces: vec![] }
}

fn pdp(start: i64, spacing: f64, power: Vec<f64>) -> PowerDelayProfile {
    PowerDelayProfile::new(DelayGrid { start, len: power.len(), spacing }, power).unwrap()
}

/// Direct second central moment of `(delay, power)` pairs.
fn moment_spread(samples: &[(f64, f64)]) -> f64 {
    let total: f64 = samples.iter().map(|s| s.1).sum();
    let mean = samples.iter().map(|s| s.0 * s.1).sum::<f64>() / total;
    (samples.iter().map(|s| (s.0 - mean).powi(2) * s.1).sum::<f64>() / total).sqrt()
}

#[test]
fn single_tap_has_no_spread() {
    let p = pdp(17, 1e-9, vec![0.0, 0.0, 4.0, 0.0]);
    assert_eq!(rms_delay_spread(&p, 30.0).unwrap(), 0.0);
}

#[test]
fn three_tap_case() {
    let p = pdp(0, 10e-9, vec![1.0, 1.0, 2.0]);
    let d = rms_delay_spread(&p, 30.0).unwrap();
    let oracle = moment_spread(&[(0.0, 1.0), (10e-9, 1.0), (20e-9, 2.0)]);
    assert!((d - oracle).abs() / oracle < 1e-12);
    assert!((d * 1e9 - 68.75f64.sqrt()).abs() < 1e-9);
    assert!((d * 1e9 - 8.2916).abs() < 1e-4);
}

#[test]
fn gate_removes_weak_bins() {
    let p = pdp(0, 1e-9, vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1e-4]);
    assert_eq!(rms_delay_spread(&p, 30.0).unwrap(), 0.0);
    assert!(rms_delay_spread(&p, 50.0).unwrap() > 0.0);
    assert!(rms_delay_spread(&pdp(0, 1e-9, vec![0.0; 4]), 30.0).is_err());
    assert!(rms_delay_spread(&p, 0.0).is_err());
}

#[test]
fn single_component_energy_is_preserved() {
    let cir = shape_cir(&[mpc(100e-9, Complex64::new(1.0, 0.0))], B, 8).unwrap();
    let peak = cir.taps.iter().map(|h| h.norm()).fold(0.0, f64::max);
    assert!(peak >= 0.995 && peak <= 1.0 + 1e-12);
    for k in 0..40 {
        let delay = 100e-9 + k as f64 * 0.0137e-9;
        let cir = shape_cir(&[mpc(delay, Complex64::from_polar(1.0, 0.3 * k as f64))], B, 8).unwrap();
        assert!((cir.band_limited_energy() - 1.0).abs() < 0.01);
        // worst case: component half a grid step from the nearest sample
        let peak = cir.taps.iter().map(|h| h.norm()).fold(0.0, f64::max);
        assert!(peak >= foliage_rt::channel::sinc(1.0 / 16.0) - 1e-12 && peak <= 1.0 + 1e-12);
    }
}

#[test]
fn random_phase_components_keep_energy_on_average() {
    use rand::Rng;
    let mut rng = foliage_rt::rng::stream(12, foliage_rt::rng::Stage::Rays);
    let trials = 300;
    let mut total_err = 0.0;
    for _ in 0..trials {
        let n = rng.random_range(2..20);
        let mpcs: Vec<_> = (0..n)
            .map(|_| {
                let delay = 100e-9 + rng.random_range(0.0..40e-9);
                mpc(delay, Complex64::from_polar(rng.random_range(0.01..1.0), rng.random_range(0.0..std::f64::consts::TAU)))
            })
            .collect();
        let raw: f64 = mpcs.iter().map(|m| m.power()).sum();
        total_err += (shape_cir(&mpcs, B, 8).unwrap().band_limited_energy() - raw) / raw;
    }
    let mean = total_err / trials as f64;
    assert!(mean.abs() < 0.01, "{mean}");
}

#[test]
fn components_one_symbol_apart_do_not_interact() {
    let (t1, t2) = (100e-9, 100.5e-9);
    let both = shape_cir(&[mpc(t1, Complex64::new(1.0, 0.0)), mpc(t2, Complex64::new(0.5, 0.0))], B, 8).unwrap();
    let at = |t: f64| {
        let k = ((t / both.grid.spacing).round() as i64 - both.grid.start) as usize;
        both.taps[k]
    };
    assert!((at(t1) - Complex64::new(1.0, 0.0)).norm() < 1e-6);
    assert!((at(t2) - Complex64::new(0.5, 0.0)).norm() < 1e-6);
}

#[test]
fn grid_contract() {
    let cir = shape_cir(&[mpc(100e-9, Complex64::new(1.0, 0.0)), mpc(130e-9, Complex64::new(0.1, 0.0))], B, 8).unwrap();
    assert!((cir.grid.spacing - 1.0 / (8.0 * B)).abs() < 1e-24);
    let first = cir.grid.delay(0);
    let last = cir.grid.delay(cir.grid.len - 1);
    assert!(first <= 0.95 * 100e-9 + 1e-15 && first >= 0.0);
    assert!(last >= 130e-9 + 16.0 / B - 1e-15);
    assert!(shape_cir(&[], B, 8).is_err());
    assert!(shape_cir(&[mpc(1e-9, Complex64::new(1.0, 0.0))], B, 1).is_err());
}

#[test]
fn averaging() {
    let a = shape_cir(&[mpc(50e-9, Complex64::new(1.0, 0.0))], B, 8).unwrap();
    let b = shape_cir(&[mpc(50e-9, Complex64::new(3f64.sqrt(), 0.0))], B, 8).unwrap();
    let p = average_pdp(&[a.clone(), b.clone()]).unwrap();
    assert!((p.peak() - 2.0).abs() < 1e-9);
    let same = average_pdp(&[a.clone(), a.clone(), a.clone()]).unwrap();
    let one = average_pdp(std::slice::from_ref(&a)).unwrap();
    for (x, y) in same.power.iter().zip(&one.power) {
        assert!((x - y).abs() <= 1e-15 * y.max(1e-300));
    }
    let far = shape_cir(&[mpc(80e-9, Complex64::new(1.0, 0.0))], B, 8).unwrap();
    let union = average_pdp(&[a.clone(), far.clone()]).unwrap();
    assert_eq!(union.grid.start, a.grid.start);
    assert_eq!(union.grid.start + union.grid.len as i64, far.grid.start + far.grid.len as i64);
    let swapped = average_pdp(&[far, a]).unwrap();
    for (x, y) in union.power.iter().zip(&swapped.power) {
        assert!((x - y).abs() <= 1e-12 * x.abs().max(1e-300));
    }
    let coarse = shape_cir(&[mpc(50e-9, Complex64::new(1.0, 0.0))], B, 4).unwrap();
    assert!(average_pdp(&[b, coarse]).is_err());
}

#[test]
fn path_loss_examples() {
    let fs = free_space_path_loss_db(30.0, 80e9);
    assert!((fs - 100.05).abs() < 0.01);
    let unit = path_loss(&[mpc(1e-7, Complex64::new(1.0, 0.0))]).unwrap();
    assert!(unit.rss_dbm.abs() < 1e-12 && unit.pl_db.abs() < 1e-12);
    let half = Complex64::new(0.5f64.sqrt(), 0.0);
    let two = path_loss(&[mpc(1e-7, half), mpc(2e-7, half)]).unwrap();
    assert!(two.rss_dbm.abs() < 1e-12);
    assert!(path_loss(&[]).is_err());
    assert!(path_loss(&[mpc(1e-7, Complex64::new(0.0, 0.0))]).is_err());
}

#[test]
fn cdf_examples() {
    assert_eq!(empirical_cdf(&[5.0]).unwrap(), vec![(5.0, 1.0)]);
    assert_eq!(empirical_cdf(&[3.0, 1.0, 4.0, 2.0]).unwrap(), vec![(1.0, 0.25), (2.0, 0.5), (3.0, 0.75), (4.0, 1.0)]);
    assert_eq!(empirical_cdf(&[2.0, 2.0, 1.0]).unwrap(), vec![(1.0, 1.0 / 3.0), (2.0, 1.0)]);
    assert!(empirical_cdf(&[]).is_err());
    assert!(empirical_cdf(&[f64::NAN]).is_err());
}

proptest! {
    #[test]
    fn equal_taps_spread_half_separation(k in 1usize..2000, spacing_ps in 1.0f64..500.0, start in -1000i64..1000) {
        let spacing = spacing_ps * 1e-12;
        let mut power = vec![0.0; k + 1];
        power[0] = 0.7;
        power[k] = 0.7;
        let d = rms_delay_spread(&pdp(start, spacing, power), 30.0).unwrap();
        let half = k as f64 * spacing / 2.0;
        prop_assert!((d - half).abs() / half < 1e-12);
    }

    #[test]
    fn spread_is_scale_and_shift_invariant(
        power in prop::collection::vec(0.0f64..1.0, 2..200),
        scale in 1e-6f64..1e6,
        shift in -5000i64..5000,
    ) {
        prop_assume!(power.iter().any(|&p| p > 0.0));
        let base = rms_delay_spread(&pdp(0, 1e-10, power.clone()), 30.0).unwrap();
        let scaled = rms_delay_spread(&pdp(0, 1e-10, power.iter().map(|p| p * scale).collect()), 30.0).unwrap();
        let shifted = rms_delay_spread(&pdp(shift, 1e-10, power.clone()), 30.0).unwrap();
        let tol = 1e-12 * base.max(1e-10);
        prop_assert!((scaled - base).abs() <= tol, "{} vs {}", scaled, base);
        prop_assert!((shifted - base).abs() <= tol, "{} vs {}", shifted, base);
    }

    #[test]
    fn single_component_energy_within_one_percent(slot in 0u32..60, phase in 0.0f64..std::f64::consts::TAU, mag in 0.01f64..1.0) {
        let m = [mpc(100e-9 + slot as f64 / B, Complex64::from_polar(mag, phase))];
        let raw = path_loss(&m).unwrap();
        let shaped = path_loss_cir(&shape_cir(&m, B, 8).unwrap()).unwrap();
        prop_assert!((raw.pl_db - shaped.pl_db).abs() < 0.0432);
    }

    #[test]
    fn cdf_is_monotone(values in prop::collection::vec(-200.0f64..0.0, 1..300)) {
        let cdf = empirical_cdf(&values).unwrap();
        prop_assert!(cdf.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 < w[1].1));
        prop_assert_eq!(cdf.last().unwrap().1, 1.0);
        prop_assert!(cdf[0].1 > 0.0);
    }
}
