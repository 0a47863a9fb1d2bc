//! Batch studies: (η, Δτ) purity maps, the Q-factor series, the single-pulse
//! limit, the brightness/purity trade-off and a grid + simplex optimizer.
//!
//! Every point is evaluated with a unit-energy pump. Relative brightness is
//! the squared JSA norm divided by that of the single pulse with the same
//! envelope on the same grid.

use crate::error::{Error, Result};
use crate::jsa::{
    compute_jsa_fast, jsi_from_jsa, make_grid, FrequencyGrid, JointAmplitude, JointIntensity, QuadraturePolicy,
};
use crate::model::{PumpSpec, ResonatorSpec};
use crate::par::map_indices;
use crate::schmidt::{
    estimate_purity_error, flat_phase_purity, schmidt_decompose, simulate_measurement, MeasurementSpec,
};
use crate::simplex::{self, SimplexSettings};

pub const DEFAULT_GRID_POINTS: usize = 257;
pub const DEFAULT_SPAN_LINEWIDTHS: f64 = 8.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub n: usize,
    pub span_linewidths: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            n: DEFAULT_GRID_POINTS,
            span_linewidths: DEFAULT_SPAN_LINEWIDTHS,
        }
    }
}

/// Everything about a run except the pump.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub resonator: ResonatorSpec,
    pub grid: GridSpec,
    pub quadrature: QuadraturePolicy,
    /// Instrument emulation applied to the JSI before flat-phase analysis.
    pub measurement: Option<MeasurementSpec>,
}

impl Scenario {
    pub fn new(resonator: ResonatorSpec) -> Self {
        Self {
            resonator,
            grid: GridSpec::default(),
            quadrature: QuadraturePolicy::Auto,
            measurement: None,
        }
    }

    pub fn with_grid(mut self, grid: GridSpec) -> Self {
        self.grid = grid;
        self
    }

    pub fn with_resonator(&self, resonator: ResonatorSpec) -> Self {
        Self {
            resonator,
            ..self.clone()
        }
    }

    pub fn frequency_grid(&self) -> Result<FrequencyGrid> {
        make_grid(&self.resonator, self.grid.span_linewidths, self.grid.n)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint {
    pub eta: f64,
    /// Seconds.
    pub delta_tau: f64,
    pub q: f64,
    /// From the complex JSA.
    pub purity_true: f64,
    /// From the flat-phase reconstruction of the (measured) JSI.
    pub purity_flat: f64,
    pub purity_error: f64,
    pub relative_brightness: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LimitRow {
    /// Pump spectral FWHM over the pump resonance linewidth.
    pub ratio: f64,
    pub purity_true: f64,
    pub purity_flat: f64,
}

/// One fully analyzed configuration.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub jsa: JointAmplitude,
    /// Measured JSI when the scenario has a measurement model.
    pub jsi: JointIntensity,
    pub point: SweepPoint,
}

/// `Σ|f|² / Σ|f_ref|²` on a shared grid.
pub fn relative_brightness(jsa: &JointAmplitude, reference: &JointAmplitude) -> Result<f64> {
    if jsa.grid() != reference.grid() {
        return Err(Error::GridMismatch(
            "brightness needs both amplitudes on the same grid".into(),
        ));
    }
    let reference_norm = reference.norm_squared();
    if !(reference_norm > 0.0) {
        return Err(Error::DegenerateState);
    }
    Ok(jsa.norm_squared() / reference_norm)
}

/// Evaluates pumps sharing one envelope against a cached single-pulse
/// reference.
pub struct Evaluator {
    scenario: Scenario,
    grid: FrequencyGrid,
    reference: JointAmplitude,
}

impl Evaluator {
    pub fn new(pump_base: &PumpSpec, scenario: &Scenario) -> Result<Self> {
        let grid = scenario.frequency_grid()?;
        let reference = Self::amplitude_on(&pump_base.single_reference(), scenario, &grid)?;
        Ok(Self {
            scenario: scenario.clone(),
            grid,
            reference,
        })
    }

    fn amplitude_on(pump: &PumpSpec, scenario: &Scenario, grid: &FrequencyGrid) -> Result<JointAmplitude> {
        let quad = scenario.quadrature.resolve(pump, &scenario.resonator)?;
        compute_jsa_fast(pump, &scenario.resonator, grid, &quad)
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn reference(&self) -> &JointAmplitude {
        &self.reference
    }

    pub fn amplitude(&self, pump: &PumpSpec) -> Result<JointAmplitude> {
        Self::amplitude_on(pump, &self.scenario, &self.grid)
    }

    fn measured(&self, jsa: &JointAmplitude) -> Result<JointIntensity> {
        let jsi = jsi_from_jsa(jsa);
        match &self.scenario.measurement {
            Some(m) => simulate_measurement(&jsi, m),
            None => Ok(jsi),
        }
    }

    /// Flat-phase purity only; the optimizer objective.
    pub fn purity_flat(&self, pump: &PumpSpec) -> Result<f64> {
        flat_phase_purity(&self.measured(&self.amplitude(pump)?)?)
    }

    pub fn evaluate(&self, pump: &PumpSpec) -> Result<Evaluation> {
        let jsa = self.amplitude(pump)?;
        let jsi = self.measured(&jsa)?;
        let point = SweepPoint {
            eta: pump.eta(),
            delta_tau: pump.delta_tau(),
            q: self.scenario.resonator.q(),
            purity_true: schmidt_decompose(&jsa)?.purity,
            purity_flat: flat_phase_purity(&jsi)?,
            purity_error: estimate_purity_error(&jsi)?,
            relative_brightness: relative_brightness(&jsa, &self.reference)?,
        };
        Ok(Evaluation { jsa, jsi, point })
    }
}

/// Pump, resonator and measurement in one call; brightness against the
/// single pulse of the same envelope.
pub fn simulate(pump: &PumpSpec, scenario: &Scenario) -> Result<Evaluation> {
    Evaluator::new(pump, scenario)?.evaluate(pump)
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SweepTable {
    pub points: Vec<SweepPoint>,
    /// `(η, Δτ)` pairs whose pump vanishes identically.
    pub skipped: Vec<(f64, f64)>,
}

/// Evaluate the Cartesian product of `eta_values × dtau_values`, η-major.
pub fn sweep_eta_dtau(
    pump_base: &PumpSpec,
    scenario: &Scenario,
    eta_values: &[f64],
    dtau_values: &[f64],
) -> Result<SweepTable> {
    if eta_values.is_empty() || dtau_values.is_empty() {
        return Err(Error::domain("sweep needs at least one eta and one delay"));
    }
    let evaluator = Evaluator::new(pump_base, scenario)?;
    let pairs: Vec<(f64, f64)> = eta_values
        .iter()
        .flat_map(|&e| dtau_values.iter().map(move |&d| (e, d)))
        .collect();
    let results = map_indices(pairs.len(), |k| {
        let (eta, dtau) = pairs[k];
        let pump = pump_base.with_dual(eta, dtau)?;
        match evaluator.evaluate(&pump) {
            Ok(e) => Ok(Some(e.point)),
            Err(Error::DegeneratePump) => Ok(None),
            Err(e) => Err(e),
        }
    });
    let mut table = SweepTable::default();
    for (pair, r) in pairs.into_iter().zip(results) {
        match r? {
            Some(p) => table.points.push(p),
            None => table.skipped.push(pair),
        }
    }
    Ok(table)
}

/// Fixed η, varying Δτ; rows sorted by ascending flat-phase purity.
pub fn brightness_vs_purity(
    pump_base: &PumpSpec,
    scenario: &Scenario,
    eta: f64,
    dtau_values: &[f64],
) -> Result<Vec<SweepPoint>> {
    let mut points = sweep_eta_dtau(pump_base, scenario, &[eta], dtau_values)?.points;
    points.sort_by(|a, b| a.purity_flat.total_cmp(&b.purity_flat));
    Ok(points)
}

/// Single-pulse purity as a function of pump FWHM over resonance linewidth.
pub fn single_pulse_limit_study(pump_base: &PumpSpec, scenario: &Scenario, ratios: &[f64]) -> Result<Vec<LimitRow>> {
    if let Some(r) = ratios.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
        return Err(Error::domain(format!("bandwidth ratios must be positive, got {r}")));
    }
    let grid = scenario.frequency_grid()?;
    let gamma = scenario.resonator.pump_linewidth();
    let rows = map_indices(ratios.len(), |k| {
        let ratio = ratios[k];
        let pump = pump_base.single_reference().with_fwhm(ratio * gamma)?;
        let quad = scenario.quadrature.resolve(&pump, &scenario.resonator)?;
        let jsa = compute_jsa_fast(&pump, &scenario.resonator, &grid, &quad)?;
        Ok(LimitRow {
            ratio,
            purity_true: schmidt_decompose(&jsa)?.purity,
            purity_flat: flat_phase_purity(&jsi_from_jsa(&jsa))?,
        })
    });
    rows.into_iter().collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimizerConfig {
    pub eta_bounds: (f64, f64),
    /// Seconds.
    pub delta_tau_bounds: (f64, f64),
    pub eta_points: usize,
    pub delta_tau_points: usize,
    /// Simplex stops once vertex purities agree to this level.
    pub tolerance: f64,
    /// Total budget including the coarse grid.
    pub max_evaluations: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            eta_bounds: (0.3, 0.9),
            delta_tau_bounds: (5e-12, 60e-12),
            eta_points: 7,
            delta_tau_points: 12,
            tolerance: 1e-6,
            max_evaluations: 160,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let (e0, e1) = self.eta_bounds;
        let (d0, d1) = self.delta_tau_bounds;
        if !(0.0 <= e0 && e0 <= e1 && e1 <= 1.0) {
            return Err(Error::domain(format!("eta bounds must satisfy 0 <= lo <= hi <= 1, got ({e0}, {e1})")));
        }
        if !(d0.is_finite() && d1.is_finite() && 0.0 <= d0 && d0 <= d1) {
            return Err(Error::domain(format!("delay bounds must satisfy 0 <= lo <= hi, got ({d0}, {d1})")));
        }
        if self.eta_points == 0 || self.delta_tau_points == 0 {
            return Err(Error::domain("coarse grid needs at least one point per axis"));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::domain(format!("tolerance must be positive, got {}", self.tolerance)));
        }
        if self.max_evaluations < self.coarse_size() {
            return Err(Error::domain(format!(
                "max_evaluations {} is smaller than the coarse grid ({} points)",
                self.max_evaluations,
                self.coarse_size()
            )));
        }
        Ok(())
    }

    fn axis_len(&self, lo: f64, hi: f64, n: usize) -> usize {
        if lo == hi {
            1
        } else {
            n
        }
    }

    fn coarse_size(&self) -> usize {
        self.axis_len(self.eta_bounds.0, self.eta_bounds.1, self.eta_points)
            * self.axis_len(self.delta_tau_bounds.0, self.delta_tau_bounds.1, self.delta_tau_points)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizationOutcome {
    pub point: SweepPoint,
    /// False when the evaluation budget ran out before the simplex settled.
    pub converged: bool,
    pub evaluations: usize,
    /// Best flat purity on the coarse grid.
    pub coarse_best: f64,
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if lo == hi || n == 1 {
        return vec![lo];
    }
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

/// Coarse grid search over (η, Δτ), then bounded Nelder–Mead refinement of
/// the flat-phase purity starting from the best grid point.
pub fn optimize_purity(pump_base: &PumpSpec, scenario: &Scenario, config: &OptimizerConfig) -> Result<OptimizationOutcome> {
    config.validate()?;
    let evaluator = Evaluator::new(pump_base, scenario)?;
    let (e0, e1) = config.eta_bounds;
    let (d0, d1) = config.delta_tau_bounds;
    let etas = linspace(e0, e1, config.eta_points);
    let dtaus = linspace(d0, d1, config.delta_tau_points);

    let objective = |eta: f64, dtau: f64| -> Result<f64> {
        let pump = pump_base.with_dual(eta, dtau)?;
        match evaluator.purity_flat(&pump) {
            Err(Error::DegeneratePump) => Ok(f64::NEG_INFINITY),
            other => other,
        }
    };

    let pairs: Vec<(f64, f64)> = etas
        .iter()
        .flat_map(|&e| dtaus.iter().map(move |&d| (e, d)))
        .collect();
    let coarse = map_indices(pairs.len(), |k| objective(pairs[k].0, pairs[k].1));
    let mut best = (f64::NEG_INFINITY, pairs[0]);
    for (pair, value) in pairs.iter().zip(coarse) {
        let value = value?;
        if value > best.0 {
            best = (value, *pair);
        }
    }
    let coarse_best = best.0;
    if !coarse_best.is_finite() {
        return Err(Error::DegeneratePump);
    }

    // Refine in unit-box coordinates over the non-collapsed axes.
    let mut free: Vec<(f64, f64, usize)> = Vec::new();
    if e1 > e0 {
        free.push((e0, e1, etas.len()));
    }
    if d1 > d0 {
        free.push((d0, d1, dtaus.len()));
    }
    let to_params = |u: &[f64]| -> (f64, f64) {
        let mut k = 0;
        let mut take = |lo: f64, hi: f64| {
            if hi > lo {
                let v = lo + u[k] * (hi - lo);
                k += 1;
                v
            } else {
                lo
            }
        };
        let eta = take(e0, e1);
        let dtau = take(d0, d1);
        (eta, dtau)
    };
    let mut start = Vec::new();
    if e1 > e0 {
        start.push((best.1 .0 - e0) / (e1 - e0));
    }
    if d1 > d0 {
        start.push((best.1 .1 - d0) / (d1 - d0));
    }
    let steps: Vec<f64> = free.iter().map(|&(_, _, n)| 1.0 / (n.max(2) - 1) as f64).collect();

    let mut failure = None;
    let remaining = config.max_evaluations - pairs.len();
    let outcome = if free.is_empty() || remaining == 0 {
        None
    } else {
        let settings = SimplexSettings {
            tolerance: config.tolerance,
            min_size: 1e-4,
            max_evaluations: remaining,
        };
        Some(simplex::minimize(
            |u| {
                let (eta, dtau) = to_params(u);
                match objective(eta, dtau) {
                    Ok(v) => -v,
                    Err(e) => {
                        failure.get_or_insert(e);
                        f64::INFINITY
                    }
                }
            },
            &start,
            &steps,
            &settings,
        ))
    };
    if let Some(e) = failure {
        return Err(e);
    }

    let (best_params, converged, evaluations) = match outcome {
        Some(o) if -o.value >= coarse_best => (to_params(&o.best), o.converged, pairs.len() + o.evaluations),
        Some(o) => (best.1, o.converged, pairs.len() + o.evaluations),
        None => (best.1, free.is_empty(), pairs.len()),
    };
    let pump = pump_base.with_dual(best_params.0, best_params.1)?;
    let point = evaluator.evaluate(&pump)?.point;
    Ok(OptimizationOutcome {
        point,
        converged,
        evaluations,
        coarse_best,
    })
}

/// Per-Q optimized operating points; `q_values` must be positive and
/// strictly ascending.
pub fn q_series(
    pump: &PumpSpec,
    scenario: &Scenario,
    q_values: &[f64],
    config: &OptimizerConfig,
) -> Result<Vec<SweepPoint>> {
    if q_values.is_empty() {
        return Err(Error::domain("q series needs at least one Q value"));
    }
    if q_values.iter().any(|q| !(q.is_finite() && *q > 0.0)) || q_values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::domain("Q values must be positive and strictly ascending"));
    }
    q_values
        .iter()
        .map(|&q| {
            let s = scenario.with_resonator(scenario.resonator.with_q(q)?);
            Ok(optimize_purity(pump, &s, config)?.point)
        })
        .collect()
}
