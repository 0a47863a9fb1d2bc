//! Browser bindings for the interactive demo page in `www/`.
//!
//! Every exported function works on a reference ring (pump on ITU channel
//! 39, signal 49, idler 29) with a coarse grid so that a single-threaded
//! wasm build answers within a frame or two.

use mrrsim_core::prelude::*;
use wasm_bindgen::prelude::*;

/// Grid points per axis. Odd so the resonance sits on a node.
const DEMO_GRID: usize = 97;
const DEMO_SPAN: f64 = 8.0;

fn setup(fwhm_pm: f64, q: f64) -> Result<(PumpSpec, Scenario), String> {
    let ring = ResonatorSpec::from_channels(39, 49, 29, q).map_err(|e| e.to_string())?;
    let ctx = UnitContext::at_frequency(ring.pump_center()).map_err(|e| e.to_string())?;
    let fwhm = bandwidth_wavelength_to_frequency(fwhm_pm * 1e-12, &ctx).map_err(|e| e.to_string())?;
    let pump = PumpSpec::single_from_fwhm(ring.pump_center(), fwhm).map_err(|e| e.to_string())?;
    let scenario = Scenario::new(ring).with_grid(GridSpec {
        n: DEMO_GRID,
        span_linewidths: DEMO_SPAN,
    });
    Ok((pump, scenario))
}

/// JSI heat map and the purities of one operating point.
#[wasm_bindgen]
pub struct JsiMap {
    size: usize,
    values: Vec<f64>,
    purity_true: f64,
    purity_flat: f64,
    relative_brightness: f64,
}

#[wasm_bindgen]
impl JsiMap {
    /// Cells per side; `values` is row-major with idler rows, signal columns.
    #[wasm_bindgen(getter)]
    pub fn size(&self) -> usize {
        self.size
    }

    /// Intensities scaled to a peak of 1.
    #[wasm_bindgen(getter)]
    pub fn values(&self) -> Vec<f64> {
        self.values.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn purity_true(&self) -> f64 {
        self.purity_true
    }

    #[wasm_bindgen(getter)]
    pub fn purity_flat(&self) -> f64 {
        self.purity_flat
    }

    #[wasm_bindgen(getter)]
    pub fn relative_brightness(&self) -> f64 {
        self.relative_brightness
    }
}

/// Purity and brightness along a delay sweep at fixed split ratio.
#[wasm_bindgen]
pub struct DelayCurve {
    delays_ps: Vec<f64>,
    purity_flat: Vec<f64>,
    relative_brightness: Vec<f64>,
    plateau: f64,
}

#[wasm_bindgen]
impl DelayCurve {
    #[wasm_bindgen(getter)]
    pub fn delays_ps(&self) -> Vec<f64> {
        self.delays_ps.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn purity_flat(&self) -> Vec<f64> {
        self.purity_flat.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn relative_brightness(&self) -> Vec<f64> {
        self.relative_brightness.clone()
    }

    /// Flat-phase purity of the single pulse with the same envelope.
    #[wasm_bindgen(getter)]
    pub fn plateau(&self) -> f64 {
        self.plateau
    }
}

pub fn jsi_map_impl(fwhm_pm: f64, q: f64, eta: f64, delta_tau_ps: f64) -> Result<JsiMap, String> {
    let (base, scenario) = setup(fwhm_pm, q)?;
    let pump = base.with_dual(eta, delta_tau_ps * 1e-12).map_err(|e| e.to_string())?;
    let run = simulate(&pump, &scenario).map_err(|e| e.to_string())?;
    let peak = run.jsi.peak();
    let m = run.jsi.values();
    // Row-major for the canvas, highest idler frequency on top.
    let values = (0..m.nrows())
        .rev()
        .flat_map(|i| (0..m.ncols()).map(move |j| m[(i, j)] / peak))
        .collect();
    Ok(JsiMap {
        size: m.nrows(),
        values,
        purity_true: run.point.purity_true,
        purity_flat: run.point.purity_flat,
        relative_brightness: run.point.relative_brightness,
    })
}

pub fn delay_curve_impl(fwhm_pm: f64, q: f64, eta: f64, max_delay_ps: f64, points: usize) -> Result<DelayCurve, String> {
    if points < 2 || !(max_delay_ps > 0.0) {
        return Err("need at least two points and a positive maximum delay".into());
    }
    let (base, scenario) = setup(fwhm_pm, q)?;
    let delays: Vec<f64> = (1..=points).map(|k| max_delay_ps * k as f64 / points as f64).collect();
    let dtau: Vec<f64> = delays.iter().map(|d| d * 1e-12).collect();
    let table = sweep_eta_dtau(&base, &scenario, &[eta], &dtau).map_err(|e| e.to_string())?;
    let plateau = simulate(&base, &scenario).map_err(|e| e.to_string())?.point.purity_flat;
    Ok(DelayCurve {
        delays_ps: table.points.iter().map(|p| p.delta_tau * 1e12).collect(),
        purity_flat: table.points.iter().map(|p| p.purity_flat).collect(),
        relative_brightness: table.points.iter().map(|p| p.relative_brightness).collect(),
        plateau,
    })
}

/// `(ratio, purity_true)` pairs, flattened.
pub fn single_pulse_limit_impl(q: f64, ratios: &[f64]) -> Result<Vec<f64>, String> {
    let (base, scenario) = setup(420.0, q)?;
    let rows = single_pulse_limit_study(&base, &scenario, ratios).map_err(|e| e.to_string())?;
    Ok(rows.iter().flat_map(|r| [r.ratio, r.purity_true]).collect())
}

#[wasm_bindgen]
pub fn jsi_map(fwhm_pm: f64, q: f64, eta: f64, delta_tau_ps: f64) -> Result<JsiMap, JsError> {
    jsi_map_impl(fwhm_pm, q, eta, delta_tau_ps).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn delay_curve(fwhm_pm: f64, q: f64, eta: f64, max_delay_ps: f64, points: usize) -> Result<DelayCurve, JsError> {
    delay_curve_impl(fwhm_pm, q, eta, max_delay_ps, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn single_pulse_limit(q: f64, ratios: Vec<f64>) -> Result<Vec<f64>, JsError> {
    single_pulse_limit_impl(q, &ratios).map_err(|e| JsError::new(&e))
}
