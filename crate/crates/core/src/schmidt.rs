//! Schmidt decomposition, purity, and emulation of the tomography chain
//! (resolution binning, intensity noise, flat-phase reconstruction and the
//! box-filter error estimate).

use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::formats;
use crate::jsa::{FrequencyGrid, JointAmplitude, JointIntensity};

#[derive(Clone, Debug, PartialEq)]
pub struct SchmidtResult {
    /// Descending, nonnegative.
    pub singular_values: Vec<f64>,
    pub purity: f64,
    pub schmidt_number: f64,
    pub purity_error: Option<f64>,
}

impl SchmidtResult {
    fn from_singular_values(mut singular_values: Vec<f64>) -> Result<Self> {
        singular_values.sort_by(|a, b| b.total_cmp(a));
        let purity = purity_from_singular_values(&singular_values)?;
        Ok(Self {
            singular_values,
            purity,
            schmidt_number: purity.recip(),
            purity_error: None,
        })
    }

    /// Normalized Schmidt weights `λ_k = σ_k² / Σσ²`.
    pub fn weights(&self) -> Vec<f64> {
        let total: f64 = self.singular_values.iter().map(|s| s * s).sum();
        self.singular_values.iter().map(|s| s * s / total).collect()
    }
}

/// `Σσ⁴ / (Σσ²)²`.
pub fn purity_from_singular_values(singular_values: &[f64]) -> Result<f64> {
    // Rescale by the largest value so σ⁴ cannot underflow or overflow.
    let top = singular_values.iter().copied().fold(0.0, f64::max);
    if !(top > 0.0) || !top.is_finite() {
        return Err(Error::DegenerateState);
    }
    let (p2, p4) = singular_values.iter().fold((0.0, 0.0), |(p2, p4), s| {
        let w = (s / top).powi(2);
        (p2 + w, p4 + w * w)
    });
    Ok(p4 / (p2 * p2))
}

fn ensure_nonzero<T>(values: &DMatrix<T>, is_zero: impl Fn(&T) -> bool) -> Result<()> {
    if values.iter().all(is_zero) {
        Err(Error::DegenerateState)
    } else {
        Ok(())
    }
}

pub fn schmidt_decompose(jsa: &JointAmplitude) -> Result<SchmidtResult> {
    schmidt_decompose_complex(jsa.values())
}

pub fn schmidt_decompose_complex(values: &DMatrix<Complex64>) -> Result<SchmidtResult> {
    ensure_nonzero(values, |v| v.norm_sqr() == 0.0)?;
    SchmidtResult::from_singular_values(values.clone().singular_values().iter().copied().collect())
}

pub fn schmidt_decompose_real(values: &DMatrix<f64>) -> Result<SchmidtResult> {
    ensure_nonzero(values, |v| *v == 0.0)?;
    SchmidtResult::from_singular_values(values.clone().singular_values().iter().copied().collect())
}

/// Purity as `Tr(G²)/Tr(G)²` with `G = f·f†`, without any decomposition.
pub fn purity_via_gram(jsa: &JointAmplitude) -> Result<f64> {
    purity_via_gram_matrix(jsa.values())
}

pub fn purity_via_gram_matrix(values: &DMatrix<Complex64>) -> Result<f64> {
    ensure_nonzero(values, |v| v.norm_sqr() == 0.0)?;
    let scale = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let f = values.map(|v| v / scale);
    // Contract over the smaller dimension.
    let gram = if f.nrows() <= f.ncols() { &f * f.adjoint() } else { f.adjoint() * &f };
    let trace = gram.trace().re;
    // Tr(G²) = Σ|G_ij|² for Hermitian G.
    let trace_sq: f64 = gram.iter().map(|g| g.norm_sqr()).sum();
    Ok(trace_sq / (trace * trace))
}

/// Instrument model for the stimulated-emission measurement.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeasurementSpec {
    /// Spectrometer bin width on the idler axis, Hz.
    pub idler_resolution: f64,
    /// Seed-laser step on the signal axis, Hz.
    pub signal_resolution: f64,
    /// Power SNR at the JSI peak; `f64::INFINITY` disables noise.
    pub noise_snr: f64,
    pub rng_seed: u64,
}

impl MeasurementSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("idler_resolution", self.idler_resolution),
            ("signal_resolution", self.signal_resolution),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::domain(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.noise_snr > 0.0) {
            return Err(Error::domain(format!("noise_snr must be positive, got {}", self.noise_snr)));
        }
        Ok(())
    }
}

fn bin_factor(axis: &'static str, requested: f64, step: f64) -> Result<usize> {
    let ratio = requested / step;
    // Relative slack for resolutions that are nominally equal to the step.
    if ratio < 1.0 - 1e-6 {
        return Err(Error::Resolution {
            axis,
            requested,
            step,
        });
    }
    Ok(ratio.round().max(1.0) as usize)
}

fn bin_axis(axis: &[f64], factor: usize) -> Vec<f64> {
    axis.chunks_exact(factor)
        .map(|c| c.iter().sum::<f64>() / factor as f64)
        .collect()
}

/// Block-average into instrument bins (trailing partial bins dropped), then
/// add seeded Gaussian noise of standard deviation `peak/snr`, clamped at 0.
pub fn simulate_measurement(jsi: &JointIntensity, spec: &MeasurementSpec) -> Result<JointIntensity> {
    spec.validate()?;
    let grid = jsi.grid();
    let fs = bin_factor("signal", spec.signal_resolution, grid.step_s())?;
    let fi = bin_factor("idler", spec.idler_resolution, grid.step_i())?;
    let rows = grid.n_idler() / fi;
    let cols = grid.n_signal() / fs;
    if rows < 2 || cols < 2 {
        return Err(Error::Resolution {
            axis: if rows < 2 { "idler" } else { "signal" },
            requested: if rows < 2 { spec.idler_resolution } else { spec.signal_resolution },
            step: if rows < 2 { grid.step_i() } else { grid.step_s() },
        });
    }
    let src = jsi.values();
    let norm = (fs * fi) as f64;
    let mut values = DMatrix::from_fn(rows, cols, |r, c| {
        let mut acc = 0.0;
        for i in r * fi..(r + 1) * fi {
            for j in c * fs..(c + 1) * fs {
                acc += src[(i, j)];
            }
        }
        acc / norm
    });
    let binned_grid = if fs == 1 && fi == 1 {
        grid.clone()
    } else {
        FrequencyGrid::from_axes(bin_axis(grid.signal_axis(), fs), bin_axis(grid.idler_axis(), fi))?
    };

    if spec.noise_snr.is_finite() {
        let peak = values.iter().copied().fold(0.0, f64::max);
        let sigma = peak / spec.noise_snr;
        if sigma > 0.0 {
            let normal = Normal::new(0.0, sigma).map_err(|e| Error::domain(e.to_string()))?;
            let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
            // Row-major draw order, fixed for reproducibility.
            for r in 0..rows {
                for c in 0..cols {
                    let v = values[(r, c)] + normal.sample(&mut rng);
                    values[(r, c)] = v.max(0.0);
                }
            }
        }
    }
    JointIntensity::new(binned_grid, values)
}

/// `√JSI` with zero phase.
pub fn reconstruct_flat_phase(jsi: &JointIntensity) -> Result<JointAmplitude> {
    if let Some(v) = jsi.values().iter().find(|v| **v < 0.0) {
        return Err(Error::domain(format!("negative intensity {v}")));
    }
    JointAmplitude::new(
        jsi.grid().clone(),
        jsi.values().map(|v| Complex64::new(v.sqrt(), 0.0)),
    )
}

/// Purity of the flat-phase reconstruction `√JSI`.
pub fn flat_phase_purity(jsi: &JointIntensity) -> Result<f64> {
    Ok(schmidt_decompose_real(&jsi.values().map(f64::sqrt))?.purity)
}

/// Mean over the in-bounds part of each 3×3 neighborhood.
pub fn box_filter_3x3(jsi: &JointIntensity) -> Result<JointIntensity> {
    let src = jsi.values();
    let (rows, cols) = src.shape();
    if rows < 3 || cols < 3 {
        return Err(Error::domain(format!("box filter needs at least 3x3 cells, got {rows}x{cols}")));
    }
    let values = DMatrix::from_fn(rows, cols, |r, c| {
        let (r0, r1) = (r.saturating_sub(1), (r + 1).min(rows - 1));
        let (c0, c1) = (c.saturating_sub(1), (c + 1).min(cols - 1));
        let mut acc = 0.0;
        for i in r0..=r1 {
            for j in c0..=c1 {
                acc += src[(i, j)];
            }
        }
        acc / ((r1 - r0 + 1) * (c1 - c0 + 1)) as f64
    });
    JointIntensity::new(jsi.grid().clone(), values)
}

/// Flat-phase purity difference between the raw and box-filtered JSI.
pub fn estimate_purity_error(jsi: &JointIntensity) -> Result<f64> {
    let filtered = box_filter_3x3(jsi)?;
    Ok((flat_phase_purity(jsi)? - flat_phase_purity(&filtered)?).abs())
}

/// Raw flat-phase Schmidt result with the box-filter error attached.
pub fn analyze_jsi(jsi: &JointIntensity) -> Result<SchmidtResult> {
    let mut result = schmidt_decompose_real(&jsi.values().map(f64::sqrt))?;
    result.purity_error = Some(estimate_purity_error(jsi)?);
    Ok(result)
}

/// Read a JSI grid CSV, rejecting negative cells.
pub fn load_jsi(path: impl AsRef<Path>) -> Result<JointIntensity> {
    let path = path.as_ref();
    let data = formats::read_grid_csv(path)?;
    data.into_intensity().map_err(|e| e.with_path(path))
}

pub fn save_jsi(path: impl AsRef<Path>, jsi: &JointIntensity) -> Result<()> {
    formats::write_grid_csv(path, jsi.grid(), jsi.values())
}
