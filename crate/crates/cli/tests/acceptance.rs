//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any criterion fails.

use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use mrrsim_core::formats::{format_grid, read_grid_csv, read_limit_table, read_sweep_table};
use mrrsim_core::model::LinewidthOverrides;
use mrrsim_core::prelude::*;
use mrrsim_core::schmidt::{flat_phase_purity, purity_via_gram_matrix, schmidt_decompose_complex};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

const REFERENCE_CONFIG: &str = "\
pump.fwhm_pm = 420
pump.eta = 0.6
pump.delta_tau_ps = 20
ring.q = 25000
";

const LOW_PURITY_CONFIG: &str = "\
pump.fwhm_pm = 420
pump.eta = 0.35
pump.delta_tau_ps = 54
ring.q = 25000
";

const Q_SERIES_CONFIG: &str = "\
pump.fwhm_pm = 280
ring.q = 25000
";

const MEASURED_CONFIG: &str = "\
pump.fwhm_pm = 420
pump.eta = 0.6
pump.delta_tau_ps = 20
ring.q = 25000
grid.n = 129
measure.idler_resolution_mhz = 1000
measure.signal_resolution_mhz = 1000
measure.snr = 1e5
measure.seed = 17
";

/// Measured purities for Q = 9.2, 12.3, 15.8, 19.6 ×10³ at a 280 pm pump.
const MEASURED_Q: [f64; 4] = [9.2e3, 12.3e3, 15.8e3, 19.6e3];
const MEASURED_PURITY: [f64; 4] = [0.961, 0.972, 0.976, 0.979];

struct Workspace {
    dir: tempfile::TempDir,
}

impl Workspace {
    fn new() -> Self {
        Self {
            dir: tempfile::tempdir().expect("temp dir"),
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn config(&self, name: &str, text: &str) -> PathBuf {
        let p = self.path(name);
        fs::write(&p, text).expect("write config");
        p
    }
}

fn mrrsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mrrsim"))
        .args(args)
        .output()
        .expect("spawn mrrsim")
}

fn run_ok(args: &[&str]) -> Result<String, String> {
    let out = mrrsim(args);
    if out.status.success() {
        Ok(String::from_utf8_lossy(&out.stdout).into_owned())
    } else {
        Err(format!(
            "`mrrsim {}` failed: {}",
            args.join(" "),
            String::from_utf8_lossy(&out.stderr).trim()
        ))
    }
}

fn stdout_value(stdout: &str, key: &str) -> Result<f64, String> {
    stdout
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")))
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| format!("no `{key}=` line in output"))
}

fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn reference_scenario() -> Scenario {
    Scenario::new(ResonatorSpec::from_channels(39, 49, 29, 2.5e4).unwrap())
}

fn pump_pm(ring: &ResonatorSpec, pm: f64) -> PumpSpec {
    let ctx = UnitContext::at_frequency(ring.pump_center()).unwrap();
    let fwhm = bandwidth_wavelength_to_frequency(pm * 1e-12, &ctx).unwrap();
    PumpSpec::single_from_fwhm(ring.pump_center(), fwhm).unwrap()
}

fn single_pulse_limit(ws: &Workspace) -> Outcome {
    let cfg = ws.config("limit.cfg", REFERENCE_CONFIG);
    let out = ws.path("limit.csv");
    let t = Instant::now();
    run_ok(&[
        "limit",
        "--config",
        s(&cfg),
        "--ratios",
        "0.1,0.2,0.5,1,2,5,10,20,50",
        "--out",
        s(&out),
    ])?;
    let elapsed = t.elapsed();
    let rows = read_limit_table(&out).map_err(|e| e.to_string())?;
    let plateau: Vec<f64> = rows.iter().filter(|r| r.ratio >= 10.0).map(|r| r.purity_true).collect();
    let max = rows.iter().map(|r| r.purity_true).fold(0.0, f64::max);
    let in_band = !plateau.is_empty() && plateau.iter().all(|p| (0.91..=0.94).contains(p));
    check(
        in_band && max <= 0.94 && elapsed < Duration::from_secs(60),
        format!(
            "plateau purity {:.4}..{:.4}, max {max:.4}, {} ratios in {elapsed:.1?}",
            plateau.iter().cloned().fold(f64::INFINITY, f64::min),
            plateau.iter().cloned().fold(0.0, f64::max),
            rows.len()
        ),
    )
}

fn high_purity_point(ws: &Workspace) -> Outcome {
    let cfg = ws.config("high.cfg", REFERENCE_CONFIG);
    let t = Instant::now();
    let stdout = run_ok(&["simulate", "--config", s(&cfg)])?;
    let elapsed = t.elapsed();
    let p = stdout_value(&stdout, "purity_flat")?;
    check(
        p >= 0.96 && elapsed < Duration::from_secs(10),
        format!("purity_flat {p:.4} (measured 0.980 ± 0.003) in {elapsed:.1?}"),
    )
}

fn low_purity_point(ws: &Workspace) -> Outcome {
    let cfg = ws.config("low.cfg", LOW_PURITY_CONFIG);
    let stdout = run_ok(&["simulate", "--config", s(&cfg)])?;
    let p = stdout_value(&stdout, "purity_flat")?;
    let out = ws.path("plateau.csv");
    run_ok(&["sweep", "--config", s(&cfg), "--eta", "1:1:1", "--dtau-ps", "0:0:1", "--out", s(&out)])?;
    let plateau = read_sweep_table(&out).map_err(|e| e.to_string())?[0].purity_flat;
    check(
        p < 0.90 && p < plateau,
        format!("purity_flat {p:.4} vs single-pulse plateau {plateau:.4} (measured 0.813 ± 0.002)"),
    )
}

fn q_series_trend(ws: &Workspace) -> Outcome {
    let cfg = ws.config("q.cfg", Q_SERIES_CONFIG);
    let out = ws.path("q.csv");
    let list: Vec<String> = MEASURED_Q.iter().map(|q| q.to_string()).collect();
    run_ok(&["qseries", "--config", s(&cfg), "--q", &list.join(","), "--out", s(&out)])?;
    let rows = read_sweep_table(&out).map_err(|e| e.to_string())?;
    let monotone = rows.len() == MEASURED_Q.len() && rows.windows(2).all(|w| w[1].purity_flat >= w[0].purity_flat);
    let cells: Vec<String> = rows
        .iter()
        .zip(MEASURED_PURITY)
        .map(|(r, m)| {
            format!(
                "Q={:.1}k: {:.4} (eta {:.2}, {:.1} ps; dev {:+.4})",
                r.q / 1e3,
                r.purity_flat,
                r.eta,
                r.delta_tau * 1e12,
                r.purity_flat - m
            )
        })
        .collect();
    check(monotone, cells.join("; "))
}

fn brightness_trade_off() -> Outcome {
    let sc = reference_scenario();
    let base = pump_pm(&sc.resonator, 420.0);
    let plateau = simulate(&base, &sc).map_err(|e| e.to_string())?.point.purity_flat;
    let dtau: Vec<f64> = (1..=60).map(|k| k as f64 * 1e-12).collect();
    let curve = brightness_vs_purity(&base, &sc, 0.5, &dtau).map_err(|e| e.to_string())?;
    let above: Vec<&SweepPoint> = curve.iter().filter(|p| p.purity_flat > plateau).collect();
    let violations = above
        .windows(2)
        .filter(|w| !(w[1].relative_brightness < w[0].relative_brightness))
        .count();
    let top = above.last().ok_or("no point above the plateau")?;
    check(
        above.len() >= 10 && violations == 0,
        format!(
            "{} points above plateau {plateau:.4}; brightness {:.3} at purity {:.4}; {violations} violations",
            above.len(),
            top.relative_brightness,
            top.purity_flat
        ),
    )
}

fn random_complex(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(rows, cols, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

fn oracle_equivalences() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let base = ResonatorSpec::from_channels(39, 49, 29, 2.5e4).unwrap();
    let mut fast_vs_direct: f64 = 0.0;
    for _ in 0..20 {
        let ring = base.with_q(rng.random_range(8e3..4e4)).unwrap();
        let ring = if rng.random_bool(0.3) {
            let g = ring.linewidth();
            ring.with_overrides(LinewidthOverrides {
                pump: None,
                signal: Some(g * rng.random_range(0.7..1.4)),
                idler: None,
            })
            .unwrap()
        } else {
            ring
        };
        let fwhm = ring.pump_linewidth() * rng.random_range(0.5..10.0);
        let pump = PumpSpec::single_from_fwhm(ring.pump_center(), fwhm)
            .unwrap()
            .with_dual(rng.random_range(0.2..1.0), rng.random_range(0.0..60e-12))
            .unwrap();
        let grid = make_grid(&ring, 8.0, rng.random_range(17..33)).unwrap();
        let quad = QuadratureSpec::auto(&pump, &ring);
        let fast = compute_jsa_fast(&pump, &ring, &grid, &quad).map_err(|e| e.to_string())?;
        let direct = compute_jsa_direct(&pump, &ring, &grid, &quad).map_err(|e| e.to_string())?;
        let peak = direct.values().iter().map(|v| v.norm()).fold(0.0, f64::max);
        let dev = fast
            .values()
            .iter()
            .zip(direct.values().iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
            / peak;
        fast_vs_direct = fast_vs_direct.max(dev);
    }

    let mut svd_vs_gram: f64 = 0.0;
    for k in 0..40 {
        let (r, c) = if k < 4 { (64, 64) } else { (rng.random_range(1..65), rng.random_range(1..65)) };
        let m = random_complex(&mut rng, r, c);
        let a = schmidt_decompose_complex(&m).map_err(|e| e.to_string())?.purity;
        let b = purity_via_gram_matrix(&m).map_err(|e| e.to_string())?;
        svd_vs_gram = svd_vs_gram.max((a - b).abs());
    }

    let mut rank_one: f64 = 0.0;
    for _ in 0..10 {
        let u = random_complex(&mut rng, 48, 1);
        let v = random_complex(&mut rng, 1, 40);
        let p = schmidt_decompose_complex(&(u * v)).map_err(|e| e.to_string())?.purity;
        rank_one = rank_one.max((p - 1.0).abs());
    }
    check(
        fast_vs_direct < 1e-6 && svd_vs_gram < 1e-9 && rank_one < 1e-12,
        format!("fast/direct {fast_vs_direct:.1e}, SVD/Gram {svd_vs_gram:.1e}, rank-1 |1-P| {rank_one:.1e}"),
    )
}

fn analysis_chain() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut flat_dev: f64 = 0.0;
    for _ in 0..30 {
        let (r, c) = (rng.random_range(2..48), rng.random_range(2..48));
        let axis = |n: usize| (0..n).map(|k| 1.9e14 + k as f64 * 2e8).collect::<Vec<_>>();
        let grid = FrequencyGrid::from_axes(axis(c), axis(r)).unwrap();
        let values = DMatrix::from_fn(r, c, |_, _| Complex64::new(rng.random_range(0.0..1.0), 0.0));
        let jsa = JointAmplitude::new(grid, values).map_err(|e| e.to_string())?;
        let truth = schmidt_decompose(&jsa).map_err(|e| e.to_string())?.purity;
        let flat = flat_phase_purity(&jsi_from_jsa(&jsa)).map_err(|e| e.to_string())?;
        flat_dev = flat_dev.max((truth - flat).abs());
    }
    let sc = reference_scenario();
    let pump = pump_pm(&sc.resonator, 420.0).with_dual(0.6, 20e-12).unwrap();
    let jsi = simulate(&pump, &sc).map_err(|e| e.to_string())?.jsi;
    let err = estimate_purity_error(&jsi).map_err(|e| e.to_string())?;
    check(
        flat_dev < 1e-9 && err < 0.005,
        format!("flat-phase deviation {flat_dev:.1e}; noiseless box-filter error {err:.2e}"),
    )
}

fn numerical_stability() -> Outcome {
    let sc = reference_scenario();
    let pump = pump_pm(&sc.resonator, 420.0).with_dual(0.6, 20e-12).unwrap();
    let reference = simulate(&pump, &sc).map_err(|e| e.to_string())?.point;

    let fine_grid = sc.clone().with_grid(GridSpec {
        n: 2 * sc.grid.n - 1,
        span_linewidths: sc.grid.span_linewidths,
    });
    let refined = simulate(&pump, &fine_grid).map_err(|e| e.to_string())?.point;

    let auto = QuadratureSpec::auto(&pump, &sc.resonator);
    let fine_quad = Scenario {
        quadrature: QuadraturePolicy::Fixed(QuadratureSpec::new(auto.pump_span, 2 * auto.pump_steps).unwrap()),
        ..sc.clone()
    };
    let doubled = simulate(&pump, &fine_quad).map_err(|e| e.to_string())?.point;

    let delta = |a: &SweepPoint, b: &SweepPoint| {
        (a.purity_true - b.purity_true).abs().max((a.purity_flat - b.purity_flat).abs())
    };
    let (dn, dq) = (delta(&reference, &refined), delta(&reference, &doubled));
    check(
        dn < 1e-4 && dq < 1e-4,
        format!("grid doubling {dn:.1e}, quadrature doubling {dq:.1e}"),
    )
}

fn sig9(a: f64, b: f64) -> bool {
    (a - b).abs() <= 5e-9 * a.abs().max(b.abs())
}

fn reproducibility(ws: &Workspace) -> Outcome {
    let cfg = ws.config("measured.cfg", MEASURED_CONFIG);
    let mut runs = Vec::new();
    for k in 0..2 {
        let prefix = ws.path(&format!("run{k}.jsa"));
        let jsi = ws.path(&format!("run{k}.jsi.csv"));
        let sweep = ws.path(&format!("run{k}.sweep.csv"));
        let analysis = ws.path(&format!("run{k}.analysis.csv"));
        let stdout = run_ok(&["simulate", "--config", s(&cfg), "--jsa-out", s(&prefix), "--jsi-out", s(&jsi)])?;
        run_ok(&["sweep", "--config", s(&cfg), "--eta", "0.5:0.7:3", "--dtau-ps", "0:30:4", "--out", s(&sweep)])?;
        run_ok(&["analyze", "--jsi", s(&jsi), "--out", s(&analysis)])?;
        let files = [
            ws.path(&format!("run{k}.jsa.re.csv")),
            ws.path(&format!("run{k}.jsa.im.csv")),
            jsi,
            sweep,
            analysis,
        ];
        let mut bytes = vec![stdout.into_bytes()];
        for f in &files {
            bytes.push(fs::read(f).map_err(|e| format!("{}: {e}", f.display()))?);
        }
        runs.push(bytes);
    }
    let identical = runs[0] == runs[1];

    // Grid round trip: the re-read grid writes back the same bytes, and
    // matches the in-memory result to 9 significant digits.
    let jsi_path = ws.path("run0.jsi.csv");
    let data = read_grid_csv(&jsi_path).map_err(|e| e.to_string())?;
    let rewritten = format_grid(&data.grid().map_err(|e| e.to_string())?, &data.values).map_err(|e| e.to_string())?;
    let same_bytes = rewritten.as_bytes() == fs::read(&jsi_path).map_err(|e| e.to_string())?.as_slice();
    let RunConfig { pump, scenario, .. } = parse_config(&cfg).map_err(|e| e.to_string())?;
    let memory = simulate(&pump, &scenario).map_err(|e| e.to_string())?.jsi;
    let values_match = data
        .values
        .iter()
        .zip(memory.values().iter())
        .all(|(a, b)| sig9(*a, *b) || (a - b).abs() < 1e-300);

    let stdout = String::from_utf8_lossy(&runs[0][0]).into_owned();
    let reported = stdout_value(&stdout, "purity_flat")?;
    let analyzed = fs::read_to_string(ws.path("run0.analysis.csv")).map_err(|e| e.to_string())?;
    let analyzed: f64 = analyzed
        .lines()
        .nth(1)
        .and_then(|l| l.split(',').next())
        .and_then(|v| v.parse().ok())
        .ok_or("malformed analysis table")?;
    let consistent = (reported - analyzed).abs() < 1e-6;
    check(
        identical && same_bytes && values_match && consistent,
        format!(
            "repeat runs identical: {identical}; grid rewrite identical: {same_bytes}; 9-digit match: {values_match}; analyze {analyzed:.6} vs simulate {reported:.6}"
        ),
    )
}

fn main() {
    let ws = Workspace::new();
    let criteria: Vec<Criterion> = vec![
        ("1 single-pulse limit", Box::new(|| single_pulse_limit(&ws))),
        ("2 high-purity operating point", Box::new(|| high_purity_point(&ws))),
        ("3 low-purity operating point", Box::new(|| low_purity_point(&ws))),
        ("4 Q-series trend", Box::new(|| q_series_trend(&ws))),
        ("5 brightness trade-off", Box::new(brightness_trade_off)),
        ("6 oracle equivalences", Box::new(oracle_equivalences)),
        ("7 analysis-chain exactness", Box::new(analysis_chain)),
        ("8 numerical stability", Box::new(numerical_stability)),
        ("9 reproducibility", Box::new(|| reproducibility(&ws))),
    ];
    let default_hook = panic::take_hook();
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, run) in &criteria {
        let outcome = panic::catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS criterion {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {name}: {detail}");
            }
        }
    }
    panic::set_hook(default_hook);
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
