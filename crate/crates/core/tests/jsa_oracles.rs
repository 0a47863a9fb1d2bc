use std::f64::consts::PI;
use std::time::Instant;

use mrrsim_core::jsa::{compute_jsa_fast_with, JsaOptions, PumpNormalization};
use mrrsim_core::model::LinewidthOverrides;
use mrrsim_core::prelude::*;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn reference_ring() -> ResonatorSpec {
    ResonatorSpec::from_channels(39, 49, 29, 2.5e4).unwrap()
}

fn pump_pm(ring: &ResonatorSpec, pm: f64) -> PumpSpec {
    let ctx = UnitContext::at_frequency(ring.pump_center()).unwrap();
    let fwhm = bandwidth_wavelength_to_frequency(pm * 1e-12, &ctx).unwrap();
    PumpSpec::single_from_fwhm(ring.pump_center(), fwhm).unwrap()
}

/// `max|a − b| / max|b|`.
fn max_rel_dev(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    let scale = b.iter().map(|v| v.norm()).fold(0.0, f64::max);
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max) / scale
}

/// Straight transcription of the pair-generation integral, written without
/// the library's helpers. `conjugate` flips the sign of every cavity phase.
fn oracle_jsa(
    pump: &PumpSpec,
    ring: &ResonatorSpec,
    grid: &FrequencyGrid,
    quad: &QuadratureSpec,
    conjugate: bool,
) -> DMatrix<Complex64> {
    let sign = if conjugate { -1.0 } else { 1.0 };
    let cavity = |nu: f64, c: f64, g: f64| {
        let half = Complex64::new(g / 2.0, 0.0);
        half / (half + Complex64::new(0.0, sign * (nu - c)))
    };
    let alpha = |nu: f64| {
        let envelope = 1.0 / ((nu - pump.center()) * pump.tau_p()).cosh();
        if pump.eta() == 1.0 {
            return Complex64::new(envelope, 0.0);
        }
        let phase = Complex64::from_polar(1.0, -2.0 * PI * pump.delta_tau() * (nu - pump.nu0()));
        (Complex64::new(pump.eta().sqrt(), 0.0) - (1.0 - pump.eta()).sqrt() * phase) * envelope
    };
    let h = 2.0 * quad.pump_span / quad.pump_steps as f64;
    let nodes: Vec<f64> = (0..=quad.pump_steps)
        .map(|k| ring.pump_center() - quad.pump_span + k as f64 * h)
        .collect();
    let last = nodes.len() - 1;
    let weight = |k: usize| if k == 0 || k == last { 0.5f64 } else { 1.0 };
    let energy: f64 = nodes.iter().enumerate().map(|(k, &nu)| weight(k) * alpha(nu).norm_sqr()).sum::<f64>() * h;
    let s = 1.0 / energy.sqrt();
    let (cp, gp) = (ring.pump_center(), ring.pump_linewidth());
    DMatrix::from_fn(grid.n_idler(), grid.n_signal(), |i, j| {
        let (ns, ni) = (grid.signal_axis()[j], grid.idler_axis()[i]);
        let mut acc = Complex64::default();
        for (k, &nu) in nodes.iter().enumerate() {
            let other = ns + ni - nu;
            acc += weight(k) * h * s * s * alpha(nu) * alpha(other) * cavity(nu, cp, gp) * cavity(other, cp, gp);
        }
        acc * cavity(ns, ring.signal_center(), ring.signal_linewidth()).conj()
            * cavity(ni, ring.idler_center(), ring.idler_linewidth()).conj()
    })
}

struct Case {
    ring: ResonatorSpec,
    pump: PumpSpec,
    grid: FrequencyGrid,
}

fn random_case(rng: &mut ChaCha8Rng) -> Case {
    let q = rng.random_range(8e3..4e4);
    let mut ring = reference_ring().with_q(q).unwrap();
    // Unequal linewidths give unequal axis steps and exercise the general path.
    if rng.random_bool(0.4) {
        let g = ring.linewidth();
        ring = ring
            .with_overrides(LinewidthOverrides {
                pump: None,
                signal: Some(g * rng.random_range(0.7..1.4)),
                idler: Some(g * rng.random_range(0.7..1.4)),
            })
            .unwrap();
    }
    let fwhm = ring.pump_linewidth() * rng.random_range(0.3..12.0);
    let mut pump = PumpSpec::single_from_fwhm(ring.pump_center(), fwhm).unwrap();
    if rng.random_bool(0.75) {
        let eta = rng.random_range(0.2..0.95);
        let dtau = rng.random_range(0.0..60e-12);
        pump = pump.with_dual(eta, dtau).unwrap();
        let offset = rng.random_range(-5e9..5e9);
        pump = pump.with_nu0(ring.pump_center() + offset).unwrap();
    }
    let n = rng.random_range(17..40);
    let grid = make_grid(&ring, rng.random_range(3.0..9.0), n).unwrap();
    Case { ring, pump, grid }
}

#[test]
fn fast_matches_direct_on_random_configurations() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut worst: f64 = 0.0;
    for _ in 0..24 {
        let c = random_case(&mut rng);
        let quad = QuadratureSpec::auto(&c.pump, &c.ring);
        let fast = compute_jsa_fast(&c.pump, &c.ring, &c.grid, &quad).unwrap();
        let direct = compute_jsa_direct(&c.pump, &c.ring, &c.grid, &quad).unwrap();
        worst = worst.max(max_rel_dev(fast.values(), direct.values()));
    }
    assert!(worst < 1e-6, "worst relative deviation {worst:e}");
}

#[test]
fn direct_matches_independent_transcription() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..6 {
        let c = random_case(&mut rng);
        let quad = QuadratureSpec::auto(&c.pump, &c.ring);
        let direct = compute_jsa_direct(&c.pump, &c.ring, &c.grid, &quad).unwrap();
        let oracle = oracle_jsa(&c.pump, &c.ring, &c.grid, &quad, false);
        let dev = max_rel_dev(direct.values(), &oracle);
        assert!(dev < 1e-9, "{dev:e}");
    }
}

#[test]
fn fast_path_is_at_least_five_times_faster() {
    let ring = reference_ring();
    let pump = pump_pm(&ring, 420.0).with_dual(0.6, 20e-12).unwrap();
    let grid = make_grid(&ring, 8.0, 257).unwrap();
    let auto = QuadratureSpec::auto(&pump, &ring);
    let quad = QuadratureSpec::new(auto.pump_span, 2048).unwrap();

    let t = Instant::now();
    let fast = compute_jsa_fast(&pump, &ring, &grid, &quad).unwrap();
    let t_fast = t.elapsed();
    let t = Instant::now();
    let direct = compute_jsa_direct(&pump, &ring, &grid, &quad).unwrap();
    let t_direct = t.elapsed();

    assert!(max_rel_dev(fast.values(), direct.values()) < 1e-6);
    let speedup = t_direct.as_secs_f64() / t_fast.as_secs_f64();
    assert!(speedup >= 5.0, "fast {t_fast:?}, direct {t_direct:?}");
}

#[test]
fn signal_idler_relabeling_transposes() {
    let base = reference_ring();
    let swapped = ResonatorSpec::new(base.pump_center(), base.idler_center(), base.signal_center(), base.linewidth()).unwrap();
    let pump = pump_pm(&base, 420.0).with_dual(0.6, 20e-12).unwrap();
    let quad = QuadratureSpec::auto(&pump, &base);
    let a = compute_jsa_fast(&pump, &base, &make_grid(&base, 8.0, 41).unwrap(), &quad).unwrap();
    let b = compute_jsa_fast(&pump, &swapped, &make_grid(&swapped, 8.0, 41).unwrap(), &quad).unwrap();
    assert!(max_rel_dev(b.values(), &a.values().transpose()) < 1e-12);
    assert_eq!(b.grid(), &a.grid().transposed());
}

#[test]
fn conjugate_cavity_convention_preserves_magnitudes() {
    let ring = reference_ring();
    let grid = make_grid(&ring, 8.0, 33).unwrap();

    // Real pump amplitude: the flipped convention gives the complex conjugate.
    let single = pump_pm(&ring, 420.0);
    let quad = QuadratureSpec::auto(&single, &ring);
    let f = oracle_jsa(&single, &ring, &grid, &quad, false);
    let g = oracle_jsa(&single, &ring, &grid, &quad, true);
    for (x, y) in f.iter().zip(g.iter()) {
        assert!((x.norm() - y.norm()).abs() <= 1e-12 * f.iter().map(|v| v.norm()).fold(0.0, f64::max));
    }

    // Flipping the convention is a time reversal: it swaps the pulse order,
    // which for a phase-flipped pair is η ↔ 1 − η up to a phase in ν₊ only.
    let ring_pump = single.with_nu0(single.center() + 4e9).unwrap();
    for (eta, dtau) in [(0.6, 20e-12), (0.35, 54e-12)] {
        let dual = ring_pump.with_dual(eta, dtau).unwrap();
        let mirrored = ring_pump.with_dual(1.0 - eta, dtau).unwrap();
        let quad = QuadratureSpec::auto(&dual, &ring);
        let g = oracle_jsa(&dual, &ring, &grid, &quad, true);
        let f = oracle_jsa(&mirrored, &ring, &grid, &quad, false);
        let peak = f.iter().map(|v| v.norm()).fold(0.0, f64::max);
        for (x, y) in f.iter().zip(g.iter()) {
            assert!((x.norm() - y.norm()).abs() <= 1e-12 * peak);
        }
    }
}

#[test]
fn pump_scaling_scales_amplitude_quadratically() {
    let ring = reference_ring();
    let pump = pump_pm(&ring, 300.0).with_dual(0.45, 33e-12).unwrap();
    let grid = make_grid(&ring, 8.0, 33).unwrap();
    let quad = QuadratureSpec::auto(&pump, &ring);
    let opts = |s| JsaOptions {
        normalization: PumpNormalization::Scale(s),
        ..JsaOptions::default()
    };
    let unit = compute_jsa_fast_with(&pump, &ring, &grid, &quad, &opts(1.0)).unwrap();
    for s in [0.3, 2.0, 17.5] {
        let scaled = compute_jsa_fast_with(&pump, &ring, &grid, &quad, &opts(s)).unwrap();
        let expected = unit.values() * Complex64::new(s * s, 0.0);
        assert!(max_rel_dev(scaled.values(), &expected) < 1e-13);
    }
}

#[test]
fn full_split_ratio_equals_single_pulse_exactly() {
    let ring = reference_ring();
    let single = pump_pm(&ring, 420.0);
    let grid = make_grid(&ring, 8.0, 65).unwrap();
    let reference = compute_jsa_fast(&single, &ring, &grid, &QuadratureSpec::auto(&single, &ring)).unwrap();
    for dtau in [0.0, 7e-12, 54e-12] {
        let dual = PumpSpec::dual(single.center(), single.tau_p(), 1.0, dtau, single.center() + 3e9).unwrap();
        let quad = QuadratureSpec::auto(&dual, &ring);
        let jsa = compute_jsa_fast(&dual, &ring, &grid, &quad).unwrap();
        assert_eq!(jsa.values(), reference.values());
    }
}

#[test]
fn quadrature_converges_under_step_doubling() {
    let ring = reference_ring();
    let grid = make_grid(&ring, 8.0, 65).unwrap();
    for (eta, dtau) in [(1.0, 0.0), (0.6, 20e-12), (0.35, 54e-12)] {
        let pump = pump_pm(&ring, 420.0).with_dual(eta, dtau).unwrap();
        let quad = QuadratureSpec::auto(&pump, &ring);
        let fine = QuadratureSpec::new(quad.pump_span, 2 * quad.pump_steps).unwrap();
        let a = compute_jsa_fast(&pump, &ring, &grid, &quad).unwrap();
        let b = compute_jsa_fast(&pump, &ring, &grid, &fine).unwrap();
        let dev = a
            .values()
            .iter()
            .zip(b.values().iter())
            .map(|(x, y)| (x - y).norm() / y.norm())
            .fold(0.0, f64::max);
        assert!(dev < 1e-8, "eta={eta} dtau={dtau:e}: {dev:e}");
    }
}

#[test]
fn intensity_total_matches_amplitude_norm() {
    let ring = reference_ring();
    let pump = pump_pm(&ring, 420.0);
    let grid = make_grid(&ring, 8.0, 33).unwrap();
    let jsa = compute_jsa_fast(&pump, &ring, &grid, &QuadratureSpec::auto(&pump, &ring)).unwrap();
    let jsi = jsi_from_jsa(&jsa);
    let frob: f64 = jsa.values().iter().map(|v| v.norm_sqr()).sum();
    assert!((jsi.total() - frob * grid.cell_area()).abs() <= 1e-12 * jsi.total());
}
