//! Run configuration: flat `key = value` lines, `#` starts a comment.
//!
//! ```text
//! # pump
//! pump.fwhm_pm = 420          # or pump.fwhm_ghz
//! pump.eta = 0.6              # default 1 (single pulse)
//! pump.delta_tau_ps = 20      # default 0
//! pump.nu0_offset_ghz = 0     # phase-flip frequency relative to the pump resonance
//! pump.channel = 39           # or pump.center_thz; default: pump resonance
//!
//! # resonator
//! ring.q = 25000              # or ring.gamma_ghz
//! ring.pump_channel = 39
//! ring.signal_channel = 49
//! ring.idler_channel = 29
//! ring.pump_gamma_ghz = 7.8   # optional per-resonance overrides (also signal/idler)
//!
//! grid.n = 257
//! grid.span_linewidths = 8
//! quad.pump_steps = auto      # or an interval count
//!
//! # optional instrument model, enabled by either resolution key
//! measure.idler_resolution_pm = 1.2     # or measure.idler_resolution_mhz
//! measure.signal_resolution_pm = 2      # or measure.signal_resolution_mhz
//! measure.snr = inf
//! measure.seed = 0
//!
//! opt.eta_min = 0.3
//! opt.eta_max = 0.9
//! opt.dtau_min_ps = 5
//! opt.dtau_max_ps = 60
//! opt.eta_points = 7
//! opt.dtau_points = 12
//! opt.tolerance = 1e-6
//! opt.max_evals = 160
//!
//! out.jsa_prefix = run/jsa
//! out.jsi = run/jsi.csv
//! out.table = run/table.csv
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::experiments::{GridSpec, OptimizerConfig, Scenario};
use crate::jsa::QuadraturePolicy;
use crate::model::{
    bandwidth_wavelength_to_frequency, fwhm_to_tau, itu_channel_to_frequency, q_to_linewidth, LinewidthOverrides,
    PumpSpec, ResonatorSpec, UnitContext,
};
use crate::schmidt::MeasurementSpec;

pub const KNOWN_KEYS: &[&str] = &[
    "pump.channel",
    "pump.center_thz",
    "pump.fwhm_pm",
    "pump.fwhm_ghz",
    "pump.eta",
    "pump.delta_tau_ps",
    "pump.nu0_offset_ghz",
    "ring.q",
    "ring.gamma_ghz",
    "ring.pump_channel",
    "ring.signal_channel",
    "ring.idler_channel",
    "ring.pump_gamma_ghz",
    "ring.signal_gamma_ghz",
    "ring.idler_gamma_ghz",
    "grid.n",
    "grid.span_linewidths",
    "quad.pump_steps",
    "measure.idler_resolution_pm",
    "measure.idler_resolution_mhz",
    "measure.signal_resolution_pm",
    "measure.signal_resolution_mhz",
    "measure.snr",
    "measure.seed",
    "opt.eta_min",
    "opt.eta_max",
    "opt.dtau_min_ps",
    "opt.dtau_max_ps",
    "opt.eta_points",
    "opt.dtau_points",
    "opt.tolerance",
    "opt.max_evals",
    "out.jsa_prefix",
    "out.jsi",
    "out.table",
];

#[derive(Clone, Debug, Default, PartialEq)]
pub struct OutputPaths {
    pub jsa_prefix: Option<PathBuf>,
    pub jsi: Option<PathBuf>,
    pub table: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub pump: PumpSpec,
    pub scenario: Scenario,
    pub optimizer: OptimizerConfig,
    pub outputs: OutputPaths,
}

enum Pick {
    First,
    Second,
}

struct Entries {
    map: BTreeMap<String, (String, usize)>,
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl Entries {
    fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or_default().trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| config_err(format!("line {line_no}: expected `key = value`")))?;
            let (key, value) = (key.trim(), value.trim());
            if !KNOWN_KEYS.contains(&key) {
                return Err(config_err(format!("line {line_no}: unknown key `{key}`")));
            }
            if value.is_empty() {
                return Err(config_err(format!("line {line_no}: key `{key}` has no value")));
            }
            if let Some((_, first)) = map.get(key) {
                return Err(config_err(format!(
                    "line {line_no}: duplicate key `{key}` (first set on line {first})"
                )));
            }
            map.insert(key.to_string(), (value.to_string(), line_no));
        }
        Ok(Self { map })
    }

    fn raw(&self, key: &str) -> Option<(&str, usize)> {
        self.map.get(key).map(|(v, l)| (v.as_str(), *l))
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<(T, usize)>> {
        match self.raw(key) {
            None => Ok(None),
            Some((v, line)) => v
                .parse::<T>()
                .map(|x| Some((x, line)))
                .map_err(|_| config_err(format!("line {line}: key `{key}`: cannot parse `{v}`"))),
        }
    }

    fn number(&self, key: &str) -> Result<Option<(f64, usize)>> {
        match self.get::<f64>(key)? {
            Some((v, line)) if v.is_nan() => Err(config_err(format!("line {line}: key `{key}`: NaN is not allowed"))),
            other => Ok(other),
        }
    }

    fn number_or(&self, key: &str, default: f64) -> Result<(f64, Option<usize>)> {
        Ok(self.number(key)?.map_or((default, None), |(v, l)| (v, Some(l))))
    }

    fn positive(&self, key: &str) -> Result<Option<f64>> {
        match self.number(key)? {
            Some((v, line)) if !(v > 0.0 && v.is_finite()) => {
                Err(config_err(format!("line {line}: key `{key}` must be positive, got {v}")))
            }
            other => Ok(other.map(|(v, _)| v)),
        }
    }

    /// At most one of two alternative keys.
    fn exclusive(&self, a: &str, b: &str) -> Result<Option<Pick>> {
        match (self.raw(a), self.raw(b)) {
            (Some((_, la)), Some((_, lb))) => Err(config_err(format!(
                "conflicting keys `{a}` (line {la}) and `{b}` (line {lb}): give only one"
            ))),
            (Some(_), None) => Ok(Some(Pick::First)),
            (None, Some(_)) => Ok(Some(Pick::Second)),
            (None, None) => Ok(None),
        }
    }

    fn channel(&self, key: &str, default: u32) -> Result<u32> {
        match self.get::<u32>(key)? {
            None => Ok(default),
            Some((c, line)) => {
                itu_channel_to_frequency(c).map_err(|e| config_err(format!("line {line}: key `{key}`: {e}")))?;
                Ok(c)
            }
        }
    }

    fn path(&self, key: &str) -> Result<Option<PathBuf>> {
        match self.raw(key) {
            None => Ok(None),
            Some((v, line)) => {
                let p = PathBuf::from(v);
                check_writable(&p).map_err(|e| config_err(format!("line {line}: key `{key}`: {e}")))?;
                Ok(Some(p))
            }
        }
    }
}

/// The parent directory of `path` must exist.
pub fn check_writable(path: &Path) -> Result<()> {
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    if parent.is_dir() {
        Ok(())
    } else {
        Err(config_err(format!("{}: parent directory does not exist", path.display())))
    }
}

fn wrap(line: Option<usize>, key: &str, e: Error) -> Error {
    match line {
        Some(l) => config_err(format!("line {l}: key `{key}`: {e}")),
        None => config_err(format!("key `{key}`: {e}")),
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let e = Entries::parse(text)?;

        // Resonator.
        let pump_ch = e.channel("ring.pump_channel", 39)?;
        let signal_ch = e.channel("ring.signal_channel", 49)?;
        let idler_ch = e.channel("ring.idler_channel", 29)?;
        let pump_center = itu_channel_to_frequency(pump_ch)?;
        let gamma = match e.exclusive("ring.q", "ring.gamma_ghz")? {
            Some(Pick::First) => q_to_linewidth(e.positive("ring.q")?.unwrap_or_default(), pump_center)?,
            Some(Pick::Second) => e.positive("ring.gamma_ghz")?.unwrap_or_default() * 1e9,
            None => return Err(config_err("missing required key: one of `ring.q` or `ring.gamma_ghz`")),
        };
        let resonator = ResonatorSpec::new(
            pump_center,
            itu_channel_to_frequency(signal_ch)?,
            itu_channel_to_frequency(idler_ch)?,
            gamma,
        )
        .map_err(|err| wrap(None, "ring.*_channel", err))?
        .with_overrides(LinewidthOverrides {
            pump: e.positive("ring.pump_gamma_ghz")?.map(|g| g * 1e9),
            signal: e.positive("ring.signal_gamma_ghz")?.map(|g| g * 1e9),
            idler: e.positive("ring.idler_gamma_ghz")?.map(|g| g * 1e9),
        })?;

        // Pump.
        let center = match e.exclusive("pump.channel", "pump.center_thz")? {
            Some(Pick::First) => itu_channel_to_frequency(e.channel("pump.channel", pump_ch)?)?,
            Some(Pick::Second) => e.positive("pump.center_thz")?.unwrap_or_default() * 1e12,
            None => pump_center,
        };
        let ctx = UnitContext::at_frequency(center)?;
        let fwhm = match e.exclusive("pump.fwhm_pm", "pump.fwhm_ghz")? {
            Some(Pick::First) => bandwidth_wavelength_to_frequency(e.positive("pump.fwhm_pm")?.unwrap_or_default() * 1e-12, &ctx)?,
            Some(Pick::Second) => e.positive("pump.fwhm_ghz")?.unwrap_or_default() * 1e9,
            None => return Err(config_err("missing required key: one of `pump.fwhm_pm` or `pump.fwhm_ghz`")),
        };
        let (eta, eta_line) = e.number_or("pump.eta", 1.0)?;
        if !(0.0..=1.0).contains(&eta) {
            return Err(wrap(eta_line, "pump.eta", Error::domain(format!("must lie in [0, 1], got {eta}"))));
        }
        let (dtau_ps, dtau_line) = e.number_or("pump.delta_tau_ps", 0.0)?;
        if !(dtau_ps >= 0.0 && dtau_ps.is_finite()) {
            return Err(wrap(dtau_line, "pump.delta_tau_ps", Error::domain(format!("must be >= 0, got {dtau_ps}"))));
        }
        let (nu0_offset, nu0_line) = e.number_or("pump.nu0_offset_ghz", 0.0)?;
        let pump = PumpSpec::dual(
            center,
            fwhm_to_tau(fwhm)?,
            eta,
            dtau_ps * 1e-12,
            pump_center + nu0_offset * 1e9,
        )
        .map_err(|err| wrap(nu0_line, "pump.nu0_offset_ghz", err))?;

        // Numerics.
        let grid = GridSpec {
            n: match e.get::<usize>("grid.n")? {
                Some((n, line)) if n < crate::jsa::MIN_GRID_POINTS => {
                    return Err(config_err(format!("line {line}: key `grid.n` must be at least 8, got {n}")))
                }
                Some((n, _)) => n,
                None => GridSpec::default().n,
            },
            span_linewidths: e.positive("grid.span_linewidths")?.unwrap_or(GridSpec::default().span_linewidths),
        };
        let quadrature = match e.raw("quad.pump_steps") {
            None | Some(("auto", _)) => QuadraturePolicy::Auto,
            Some(_) => match e.get::<usize>("quad.pump_steps")? {
                Some((n, line)) if n < crate::jsa::MIN_PUMP_STEPS => {
                    return Err(config_err(format!("line {line}: key `quad.pump_steps` must be at least 64, got {n}")))
                }
                Some((n, _)) => QuadraturePolicy::Steps(n),
                None => unreachable!(),
            },
        };
        let measurement = Self::measurement(&e, &ctx)?;

        let defaults = OptimizerConfig::default();
        let optimizer = OptimizerConfig {
            eta_bounds: (
                e.number_or("opt.eta_min", defaults.eta_bounds.0)?.0,
                e.number_or("opt.eta_max", defaults.eta_bounds.1)?.0,
            ),
            delta_tau_bounds: (
                e.number_or("opt.dtau_min_ps", defaults.delta_tau_bounds.0 * 1e12)?.0 * 1e-12,
                e.number_or("opt.dtau_max_ps", defaults.delta_tau_bounds.1 * 1e12)?.0 * 1e-12,
            ),
            eta_points: e.get("opt.eta_points")?.map_or(defaults.eta_points, |(v, _)| v),
            delta_tau_points: e.get("opt.dtau_points")?.map_or(defaults.delta_tau_points, |(v, _)| v),
            tolerance: e.positive("opt.tolerance")?.unwrap_or(defaults.tolerance),
            max_evaluations: e.get("opt.max_evals")?.map_or(defaults.max_evaluations, |(v, _)| v),
        };
        optimizer.validate().map_err(|err| config_err(format!("optimizer settings: {err}")))?;

        let outputs = OutputPaths {
            jsa_prefix: e.path("out.jsa_prefix")?,
            jsi: e.path("out.jsi")?,
            table: e.path("out.table")?,
        };

        let scenario = Scenario {
            resonator,
            grid,
            quadrature,
            measurement,
        };
        // Fail at parse time if an explicit step count is too coarse.
        scenario
            .quadrature
            .resolve(&pump, &scenario.resonator)
            .map_err(|err| wrap(e.raw("quad.pump_steps").map(|(_, l)| l), "quad.pump_steps", err))?;

        Ok(Self {
            pump,
            scenario,
            optimizer,
            outputs,
        })
    }

    fn measurement(e: &Entries, ctx: &UnitContext) -> Result<Option<MeasurementSpec>> {
        let resolution = |pm: &str, mhz: &str| -> Result<Option<f64>> {
            Ok(match e.exclusive(pm, mhz)? {
                Some(Pick::First) => Some(bandwidth_wavelength_to_frequency(
                    e.positive(pm)?.unwrap_or_default() * 1e-12,
                    ctx,
                )?),
                Some(Pick::Second) => e.positive(mhz)?.map(|v| v * 1e6),
                None => None,
            })
        };
        let idler = resolution("measure.idler_resolution_pm", "measure.idler_resolution_mhz")?;
        let signal = resolution("measure.signal_resolution_pm", "measure.signal_resolution_mhz")?;
        let (idler, signal) = match (idler, signal) {
            (None, None) => {
                if let Some(k) = ["measure.snr", "measure.seed"].iter().find(|k| e.raw(k).is_some()) {
                    return Err(config_err(format!(
                        "key `{k}` needs the measurement resolutions `measure.idler_resolution_*` and `measure.signal_resolution_*`"
                    )));
                }
                return Ok(None);
            }
            (Some(i), Some(s)) => (i, s),
            (None, _) => return Err(config_err("missing required key: one of `measure.idler_resolution_pm` or `measure.idler_resolution_mhz`")),
            (_, None) => return Err(config_err("missing required key: one of `measure.signal_resolution_pm` or `measure.signal_resolution_mhz`")),
        };
        let noise_snr = match e.number("measure.snr")? {
            None => f64::INFINITY,
            Some((v, line)) if !(v > 0.0) => {
                return Err(config_err(format!("line {line}: key `measure.snr` must be positive, got {v}")))
            }
            Some((v, _)) => v,
        };
        let rng_seed = e.get::<u64>("measure.seed")?.map_or(0, |(v, _)| v);
        Ok(Some(MeasurementSpec {
            idler_resolution: idler,
            signal_resolution: signal,
            noise_snr,
            rng_seed,
        }))
    }
}

/// Read and validate a configuration file.
pub fn parse_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    RunConfig::parse(&text).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}
