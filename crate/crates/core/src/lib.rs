//! Simulation and analysis of heralded single photons from spontaneous
//! four-wave mixing in microring resonators pumped by one pulse or by two
//! delayed, phase-flipped copies of it.
//!
//! The crate computes joint spectral amplitudes on a signal/idler frequency
//! grid, extracts Schmidt purity from the complex amplitude and from the
//! flat-phase reconstruction of the intensity, emulates the tomography
//! chain, and drives parameter studies over the pump splitting ratio, delay
//! and cavity Q.
//!
//! ```no_run
//! use mrrsim_core::prelude::*;
//!
//! let ring = ResonatorSpec::from_channels(39, 49, 29, 2.5e4)?;
//! let ctx = UnitContext::at_frequency(ring.pump_center())?;
//! let fwhm = bandwidth_wavelength_to_frequency(420e-12, &ctx)?;
//! let pump = PumpSpec::single_from_fwhm(ring.pump_center(), fwhm)?.with_dual(0.6, 20e-12)?;
//! let run = simulate(&pump, &Scenario::new(ring))?;
//! println!("flat-phase purity {:.4}", run.point.purity_flat);
//! # Ok::<(), mrrsim_core::Error>(())
//! ```

pub mod config;
pub mod error;
pub mod experiments;
pub mod formats;
pub mod jsa;
pub mod model;
mod par;
pub mod schmidt;
pub mod simplex;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::config::{parse_config, RunConfig};
    pub use crate::error::{Error, Result};
    pub use crate::experiments::{
        brightness_vs_purity, optimize_purity, q_series, relative_brightness, simulate, single_pulse_limit_study,
        sweep_eta_dtau, Evaluator, GridSpec, LimitRow, OptimizerConfig, Scenario, SweepPoint,
    };
    pub use crate::jsa::{
        compute_jsa_direct, compute_jsa_fast, jsi_from_jsa, make_grid, FrequencyGrid, JointAmplitude, JointIntensity,
        QuadraturePolicy, QuadratureSpec,
    };
    pub use crate::model::{
        bandwidth_wavelength_to_frequency, fwhm_to_tau, itu_channel_to_frequency, lorentzian, pump_amplitude,
        q_to_linewidth, PumpSpec, ResonatorSpec, UnitContext,
    };
    pub use crate::schmidt::{
        box_filter_3x3, estimate_purity_error, purity_via_gram, reconstruct_flat_phase, schmidt_decompose,
        simulate_measurement, MeasurementSpec, SchmidtResult,
    };
}
