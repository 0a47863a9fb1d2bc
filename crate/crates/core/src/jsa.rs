//! Joint spectral amplitude of the generated pair.
//!
//! With phase matching set to one, the amplitude is
//!
//! ```text
//! f(νs, νi) = ∫ dνp α(νp) α(νs+νi−νp) Lp(νp) Lp(νs+νi−νp) · Ls*(νs) Li*(νi)
//! ```
//!
//! The integral only depends on `νs + νi`, so [`compute_jsa_fast`] evaluates
//! it once per distinct sum and multiplies by the signal/idler responses.
//! [`compute_jsa_direct`] keeps the full integrand per matrix element and
//! serves as the reference for the fast path.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{energy_scale, lorentzian, pump_amplitude, PumpSpec, ResonatorSpec};
use crate::par::map_indices;

/// Smallest axis length accepted by [`make_grid`].
pub const MIN_GRID_POINTS: usize = 8;
/// Smallest number of pump quadrature intervals.
pub const MIN_PUMP_STEPS: usize = 64;

/// Axis jitter allowance relative to the step.
const UNIFORM_REL_TOL: f64 = 1e-6;
/// Extra allowance relative to the axis magnitude, covering values that went
/// through a 9-significant-digit text round trip.
const UNIFORM_ABS_TOL: f64 = 1e-8;

/// Uniform signal and idler frequency axes, both strictly ascending.
#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyGrid {
    signal_axis: Vec<f64>,
    idler_axis: Vec<f64>,
}

fn check_axis(name: &str, axis: &[f64]) -> Result<()> {
    if axis.len() < 2 {
        return Err(Error::domain(format!("{name} axis needs at least 2 points")));
    }
    if axis.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain(format!("{name} axis has non-finite values")));
    }
    if axis.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::domain(format!("{name} axis is not strictly ascending")));
    }
    let step = axis_step(axis);
    let scale = axis.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = UNIFORM_REL_TOL * step + UNIFORM_ABS_TOL * scale;
    if axis.windows(2).any(|w| ((w[1] - w[0]) - step).abs() > tol) {
        return Err(Error::domain(format!("{name} axis is not uniform")));
    }
    Ok(())
}

fn axis_step(axis: &[f64]) -> f64 {
    (axis[axis.len() - 1] - axis[0]) / (axis.len() - 1) as f64
}

impl FrequencyGrid {
    pub fn from_axes(signal_axis: Vec<f64>, idler_axis: Vec<f64>) -> Result<Self> {
        check_axis("signal", &signal_axis)?;
        check_axis("idler", &idler_axis)?;
        Ok(Self {
            signal_axis,
            idler_axis,
        })
    }

    /// `n` points centered on `center` spanning `center ± half_span`.
    pub fn uniform_axis(center: f64, half_span: f64, n: usize) -> Result<Vec<f64>> {
        if n < 2 {
            return Err(Error::domain("axis needs at least 2 points"));
        }
        if !(half_span.is_finite() && half_span > 0.0) {
            return Err(Error::domain(format!("axis half span must be positive, got {half_span}")));
        }
        let step = 2.0 * half_span / (n - 1) as f64;
        let mid = (n - 1) as f64 / 2.0;
        Ok((0..n).map(|k| center + (k as f64 - mid) * step).collect())
    }

    pub fn signal_axis(&self) -> &[f64] {
        &self.signal_axis
    }

    pub fn idler_axis(&self) -> &[f64] {
        &self.idler_axis
    }

    pub fn n_signal(&self) -> usize {
        self.signal_axis.len()
    }

    pub fn n_idler(&self) -> usize {
        self.idler_axis.len()
    }

    pub fn step_s(&self) -> f64 {
        axis_step(&self.signal_axis)
    }

    pub fn step_i(&self) -> f64 {
        axis_step(&self.idler_axis)
    }

    /// Area of one grid cell, `step_s·step_i`.
    pub fn cell_area(&self) -> f64 {
        self.step_s() * self.step_i()
    }

    /// Swap the roles of the two axes.
    pub fn transposed(&self) -> Self {
        Self {
            signal_axis: self.idler_axis.clone(),
            idler_axis: self.signal_axis.clone(),
        }
    }

    /// Matrix shape `(rows, cols) = (idler, signal)`.
    pub fn shape(&self) -> (usize, usize) {
        (self.n_idler(), self.n_signal())
    }

    /// Both axes are exact arithmetic progressions with the same step, so
    /// `νs[j] + νi[k]` depends on `j + k` only.
    fn sums_depend_on_index_sum(&self) -> bool {
        let (hs, hi) = (self.step_s(), self.step_i());
        if (hs - hi).abs() > 1e-12 * hs {
            return false;
        }
        let exact = |axis: &[f64], h: f64| {
            axis.iter()
                .enumerate()
                .all(|(k, v)| (v - (axis[0] + k as f64 * h)).abs() <= 1e-9 * h)
        };
        exact(&self.signal_axis, hs) && exact(&self.idler_axis, hi)
    }
}

/// Grid of `n × n` points centered on the signal and idler resonances, each
/// axis spanning `±span_linewidths` linewidths of its resonance.
pub fn make_grid(resonator: &ResonatorSpec, span_linewidths: f64, n: usize) -> Result<FrequencyGrid> {
    if n < MIN_GRID_POINTS {
        return Err(Error::domain(format!("grid needs at least {MIN_GRID_POINTS} points per axis, got {n}")));
    }
    if !(span_linewidths.is_finite() && span_linewidths > 0.0) {
        return Err(Error::domain(format!("span must be positive, got {span_linewidths}")));
    }
    let signal = FrequencyGrid::uniform_axis(
        resonator.signal_center(),
        span_linewidths * resonator.signal_linewidth(),
        n,
    )?;
    let idler = FrequencyGrid::uniform_axis(
        resonator.idler_center(),
        span_linewidths * resonator.idler_linewidth(),
        n,
    )?;
    FrequencyGrid::from_axes(signal, idler)
}

/// Complex JSA sampled on a grid; rows index idler, columns index signal.
#[derive(Clone, Debug, PartialEq)]
pub struct JointAmplitude {
    grid: FrequencyGrid,
    values: DMatrix<Complex64>,
}

impl JointAmplitude {
    pub fn new(grid: FrequencyGrid, values: DMatrix<Complex64>) -> Result<Self> {
        if values.shape() != grid.shape() {
            return Err(Error::GridMismatch(format!(
                "matrix shape {:?} does not match grid shape {:?}",
                values.shape(),
                grid.shape()
            )));
        }
        if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::domain("amplitude has non-finite values"));
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn values(&self) -> &DMatrix<Complex64> {
        &self.values
    }

    pub fn into_values(self) -> DMatrix<Complex64> {
        self.values
    }

    /// `Σ|f|²·step_s·step_i`.
    pub fn norm_squared(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.cell_area()
    }
}

/// Nonnegative joint spectral intensity; rows index idler.
#[derive(Clone, Debug, PartialEq)]
pub struct JointIntensity {
    grid: FrequencyGrid,
    values: DMatrix<f64>,
}

impl JointIntensity {
    pub fn new(grid: FrequencyGrid, values: DMatrix<f64>) -> Result<Self> {
        if values.shape() != grid.shape() {
            return Err(Error::GridMismatch(format!(
                "matrix shape {:?} does not match grid shape {:?}",
                values.shape(),
                grid.shape()
            )));
        }
        if let Some((idx, v)) = values.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
            let (r, c) = (idx % values.nrows(), idx / values.nrows());
            return Err(Error::domain(format!(
                "intensity at (idler {r}, signal {c}) must be finite and nonnegative, got {v}"
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn peak(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// `Σ JSI·step_s·step_i`.
    pub fn total(&self) -> f64 {
        self.values.sum() * self.grid.cell_area()
    }
}

/// Trapezoidal pump-frequency window centered on the pump resonance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureSpec {
    /// Half-width of the window in Hz.
    pub pump_span: f64,
    /// Number of intervals; the window has `pump_steps + 1` nodes.
    pub pump_steps: usize,
}

/// How pump quadrature is chosen for each evaluated pump.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum QuadraturePolicy {
    #[default]
    Auto,
    /// Automatic window with a fixed interval count.
    Steps(usize),
    Fixed(QuadratureSpec),
}

impl QuadraturePolicy {
    pub fn resolve(&self, pump: &PumpSpec, resonator: &ResonatorSpec) -> Result<QuadratureSpec> {
        match *self {
            QuadraturePolicy::Auto => Ok(QuadratureSpec::auto(pump, resonator)),
            QuadraturePolicy::Steps(n) => {
                let q = QuadratureSpec::new(QuadratureSpec::auto_window(pump, resonator), n)?;
                q.check_resolution(pump, resonator)?;
                Ok(q)
            }
            QuadraturePolicy::Fixed(q) => {
                q.check_resolution(pump, resonator)?;
                Ok(q)
            }
        }
    }
}

impl QuadratureSpec {
    pub fn new(pump_span: f64, pump_steps: usize) -> Result<Self> {
        if !(pump_span.is_finite() && pump_span > 0.0) {
            return Err(Error::domain(format!("pump_span must be positive, got {pump_span}")));
        }
        if pump_steps < MIN_PUMP_STEPS {
            return Err(Error::domain(format!(
                "pump_steps must be at least {MIN_PUMP_STEPS}, got {pump_steps}"
            )));
        }
        Ok(Self {
            pump_span,
            pump_steps,
        })
    }

    /// Window half-width: the widest of 8 resonance linewidths, 6 pump
    /// FWHMs and 4 fringe periods. At 6 FWHMs the sech envelope is down to
    /// 5e-5, so truncation stays below the quadrature error in every cell.
    pub fn auto_window(pump: &PumpSpec, resonator: &ResonatorSpec) -> f64 {
        let widest = resonator
            .pump_linewidth()
            .max(resonator.signal_linewidth())
            .max(resonator.idler_linewidth());
        let mut half = (8.0 * widest).max(6.0 * pump.spectral_fwhm());
        if let Some(period) = fringe_period(pump) {
            half = half.max(4.0 * period);
        }
        half
    }

    /// Largest node spacing that resolves the resonances, the pump envelope
    /// and the dual-pulse fringes.
    pub fn max_step(pump: &PumpSpec, resonator: &ResonatorSpec) -> f64 {
        let mut step = (resonator.narrowest_linewidth() / 20.0).min(pump.spectral_fwhm() / 20.0);
        if let Some(period) = fringe_period(pump) {
            step = step.min(period / 10.0);
        }
        step
    }

    pub fn auto(pump: &PumpSpec, resonator: &ResonatorSpec) -> Self {
        let half = Self::auto_window(pump, resonator);
        let needed = (2.0 * half / Self::max_step(pump, resonator)).ceil() as usize;
        Self {
            pump_span: half,
            pump_steps: needed.max(MIN_PUMP_STEPS),
        }
    }

    pub fn step(&self) -> f64 {
        2.0 * self.pump_span / self.pump_steps as f64
    }

    pub fn check_resolution(&self, pump: &PumpSpec, resonator: &ResonatorSpec) -> Result<()> {
        let limit = Self::max_step(pump, resonator);
        // Slack for the rounding in `auto`.
        if self.step() > limit * (1.0 + 1e-9) {
            return Err(Error::domain(format!(
                "pump quadrature step {:e} Hz exceeds resolution limit {:e} Hz",
                self.step(),
                limit
            )));
        }
        Ok(())
    }
}

fn fringe_period(pump: &PumpSpec) -> Option<f64> {
    (!pump.is_effectively_single() && pump.delta_tau() > 0.0).then(|| 1.0 / pump.delta_tau())
}

/// Scale applied to the pump amplitude before integration.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum PumpNormalization {
    /// Unit energy on the quadrature nodes under the trapezoid rule.
    #[default]
    UnitEnergy,
    /// Multiply the raw amplitude by a fixed factor.
    Scale(f64),
}

/// Phase-matching hook `φ(νs, νi)`, applied outside the pump integral.
pub type PhaseMatching = fn(f64, f64) -> Complex64;

#[derive(Clone, Copy, Debug, Default)]
pub struct JsaOptions {
    pub normalization: PumpNormalization,
    /// `None` means `φ ≡ 1`.
    pub phase_matching: Option<PhaseMatching>,
}

/// Pump-resonance product `s·α(ν)·Lp(ν)` on the quadrature nodes, with
/// trapezoid weights and node spacing folded in.
struct PumpIntegrand<'a> {
    pump: &'a PumpSpec,
    center: f64,
    gamma: f64,
    scale: f64,
    nodes: Vec<f64>,
    weighted: Vec<Complex64>,
}

impl<'a> PumpIntegrand<'a> {
    fn new(
        pump: &'a PumpSpec,
        resonator: &ResonatorSpec,
        quad: &QuadratureSpec,
        normalization: PumpNormalization,
    ) -> Result<Self> {
        quad.check_resolution(pump, resonator)?;
        let step = quad.step();
        let center = resonator.pump_center();
        let gamma = resonator.pump_linewidth();
        let nodes: Vec<f64> = (0..=quad.pump_steps)
            .map(|k| center - quad.pump_span + k as f64 * step)
            .collect();
        let raw: Vec<Complex64> = nodes.iter().map(|&nu| pump_amplitude(nu, pump)).collect();
        let last = nodes.len() - 1;
        let weight = |k: usize| if k == 0 || k == last { 0.5f64 } else { 1.0 };
        let scale = match normalization {
            // Unit energy under the same trapezoid rule as the integral; the
            // plain Riemann sum would leave an O(step) normalization error
            // whenever the window edges carry amplitude.
            PumpNormalization::UnitEnergy => {
                let edge_adjusted: Vec<Complex64> =
                    raw.iter().enumerate().map(|(k, a)| a * weight(k).sqrt()).collect();
                energy_scale(&edge_adjusted, step)?
            }
            PumpNormalization::Scale(s) => s,
        };
        let weighted = raw
            .iter()
            .zip(&nodes)
            .enumerate()
            .map(|(k, (a, &nu))| a * scale * lorentzian(nu, center, gamma) * (weight(k) * step))
            .collect();
        Ok(Self {
            pump,
            center,
            gamma,
            scale,
            nodes,
            weighted,
        })
    }

    /// Second pump photon factor `s·α(ν)·Lp(ν)`.
    #[inline]
    fn partner(&self, nu: f64) -> Complex64 {
        pump_amplitude(nu, self.pump) * self.scale * lorentzian(nu, self.center, self.gamma)
    }

    /// `C(ν₊) = Σ_k w_k·[sαLp](ν_k)·[sαLp](ν₊ − ν_k)`.
    fn pair_envelope(&self, sum: f64) -> Complex64 {
        self.nodes
            .iter()
            .zip(&self.weighted)
            .fold(Complex64::default(), |acc, (&nu, &w)| acc + w * self.partner(sum - nu))
    }
}

struct CavityResponse {
    signal: Vec<Complex64>,
    idler: Vec<Complex64>,
}

impl CavityResponse {
    fn new(resonator: &ResonatorSpec, grid: &FrequencyGrid) -> Self {
        let conj_on = |axis: &[f64], c: f64, g: f64| axis.iter().map(|&nu| lorentzian(nu, c, g).conj()).collect();
        Self {
            signal: conj_on(
                grid.signal_axis(),
                resonator.signal_center(),
                resonator.signal_linewidth(),
            ),
            idler: conj_on(
                grid.idler_axis(),
                resonator.idler_center(),
                resonator.idler_linewidth(),
            ),
        }
    }
}

fn assemble(
    grid: &FrequencyGrid,
    options: &JsaOptions,
    element: impl Fn(usize, usize) -> Complex64 + Sync + Send,
) -> Result<JointAmplitude> {
    let (rows, cols) = grid.shape();
    let row_values = map_indices(rows, |i| (0..cols).map(|j| element(i, j)).collect::<Vec<_>>());
    let mut values = DMatrix::from_fn(rows, cols, |i, j| row_values[i][j]);
    if let Some(phi) = options.phase_matching {
        for j in 0..cols {
            for i in 0..rows {
                values[(i, j)] *= phi(grid.signal_axis()[j], grid.idler_axis()[i]);
            }
        }
    }
    JointAmplitude::new(grid.clone(), values)
}

/// Reference evaluation: the full integrand summed for every matrix element.
pub fn compute_jsa_direct(
    pump: &PumpSpec,
    resonator: &ResonatorSpec,
    grid: &FrequencyGrid,
    quad: &QuadratureSpec,
) -> Result<JointAmplitude> {
    compute_jsa_direct_with(pump, resonator, grid, quad, &JsaOptions::default())
}

pub fn compute_jsa_direct_with(
    pump: &PumpSpec,
    resonator: &ResonatorSpec,
    grid: &FrequencyGrid,
    quad: &QuadratureSpec,
    options: &JsaOptions,
) -> Result<JointAmplitude> {
    let integrand = PumpIntegrand::new(pump, resonator, quad, options.normalization)?;
    let cavity = CavityResponse::new(resonator, grid);
    assemble(grid, options, |i, j| {
        let sum = grid.signal_axis()[j] + grid.idler_axis()[i];
        let outer = cavity.signal[j] * cavity.idler[i];
        integrand
            .nodes
            .iter()
            .zip(&integrand.weighted)
            .fold(Complex64::default(), |acc, (&nu, &w)| {
                acc + w * integrand.partner(sum - nu) * outer
            })
    })
}

/// Factorized evaluation `f = C(νs+νi)·Ls*(νs)·Li*(νi)`.
pub fn compute_jsa_fast(
    pump: &PumpSpec,
    resonator: &ResonatorSpec,
    grid: &FrequencyGrid,
    quad: &QuadratureSpec,
) -> Result<JointAmplitude> {
    compute_jsa_fast_with(pump, resonator, grid, quad, &JsaOptions::default())
}

pub fn compute_jsa_fast_with(
    pump: &PumpSpec,
    resonator: &ResonatorSpec,
    grid: &FrequencyGrid,
    quad: &QuadratureSpec,
    options: &JsaOptions,
) -> Result<JointAmplitude> {
    let integrand = PumpIntegrand::new(pump, resonator, quad, options.normalization)?;
    let cavity = CavityResponse::new(resonator, grid);
    let (rows, cols) = grid.shape();
    let (s_axis, i_axis) = (grid.signal_axis(), grid.idler_axis());

    if grid.sums_depend_on_index_sum() {
        let h = grid.step_s();
        let base = s_axis[0] + i_axis[0];
        let envelope = map_indices(rows + cols - 1, |m| integrand.pair_envelope(base + m as f64 * h));
        assemble(grid, options, |i, j| envelope[i + j] * cavity.signal[j] * cavity.idler[i])
    } else {
        let envelope = map_indices(rows * cols, |idx| {
            let (i, j) = (idx / cols, idx % cols);
            integrand.pair_envelope(s_axis[j] + i_axis[i])
        });
        assemble(grid, options, |i, j| envelope[i * cols + j] * cavity.signal[j] * cavity.idler[i])
    }
}

/// Build a JSA from an arbitrary pair envelope `C(νs+νi)` and the cavity
/// responses of the signal and idler resonances.
pub fn jsa_from_pair_envelope(
    resonator: &ResonatorSpec,
    grid: &FrequencyGrid,
    envelope: impl Fn(f64) -> Complex64 + Sync + Send,
) -> Result<JointAmplitude> {
    let cavity = CavityResponse::new(resonator, grid);
    assemble(grid, &JsaOptions::default(), |i, j| {
        envelope(grid.signal_axis()[j] + grid.idler_axis()[i]) * cavity.signal[j] * cavity.idler[i]
    })
}

/// Element-wise `|f|²`.
pub fn jsi_from_jsa(jsa: &JointAmplitude) -> JointIntensity {
    JointIntensity {
        grid: jsa.grid.clone(),
        values: jsa.values.map(|v| v.norm_sqr()),
    }
}
