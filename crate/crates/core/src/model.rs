//! Physical parameters of the source: the three ring resonances, the pump
//! pulse (single or delayed dual copy), unit conversions between the
//! wavelength and frequency pictures, and the spectral response functions.
//!
//! All frequencies are ordinary (not angular) frequencies in Hz and all
//! times are in seconds.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Vacuum speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 2.997_924_58e8;

/// Maximum violation of `2·pump = signal + idler` accepted when building a
/// [`ResonatorSpec`], in Hz.
pub const ENERGY_MATCH_TOLERANCE: f64 = 1.0e3;

const ITU_ANCHOR: f64 = 190.0e12;
const ITU_SPACING: f64 = 0.1e12;

/// `2·arccosh(√2)`: the FWHM of `sech²(x)` in units of `x`.
pub fn sech_fwhm_constant() -> f64 {
    2.0 * SQRT_2.acosh()
}

fn check_positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be positive and finite, got {value}")))
    }
}

/// Three Lorentzian resonances of the ring hosting pump, signal and idler.
#[derive(Clone, Debug, PartialEq)]
pub struct ResonatorSpec {
    pump_center: f64,
    signal_center: f64,
    idler_center: f64,
    linewidth: f64,
    overrides: LinewidthOverrides,
}

/// Optional per-resonance FWHM values replacing the shared linewidth.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LinewidthOverrides {
    pub pump: Option<f64>,
    pub signal: Option<f64>,
    pub idler: Option<f64>,
}

impl ResonatorSpec {
    /// Resonances sharing one intensity FWHM `linewidth`.
    pub fn new(pump_center: f64, signal_center: f64, idler_center: f64, linewidth: f64) -> Result<Self> {
        check_positive("pump_center", pump_center)?;
        check_positive("signal_center", signal_center)?;
        check_positive("idler_center", idler_center)?;
        check_positive("linewidth", linewidth)?;
        let mismatch = 2.0 * pump_center - (signal_center + idler_center);
        if mismatch.abs() > ENERGY_MATCH_TOLERANCE {
            return Err(Error::domain(format!(
                "resonances violate energy matching: 2·pump - (signal + idler) = {mismatch:e} Hz"
            )));
        }
        Ok(Self {
            pump_center,
            signal_center,
            idler_center,
            linewidth,
            overrides: LinewidthOverrides::default(),
        })
    }

    /// Resonances on ITU channels with linewidth set from a loaded Q of the
    /// pump resonance.
    pub fn from_channels(pump: u32, signal: u32, idler: u32, q: f64) -> Result<Self> {
        let pump_center = itu_channel_to_frequency(pump)?;
        let gamma = q_to_linewidth(q, pump_center)?;
        Self::new(
            pump_center,
            itu_channel_to_frequency(signal)?,
            itu_channel_to_frequency(idler)?,
            gamma,
        )
    }

    pub fn with_overrides(mut self, overrides: LinewidthOverrides) -> Result<Self> {
        for (name, v) in [
            ("pump linewidth", overrides.pump),
            ("signal linewidth", overrides.signal),
            ("idler linewidth", overrides.idler),
        ] {
            if let Some(v) = v {
                check_positive(name, v)?;
            }
        }
        self.overrides = overrides;
        Ok(self)
    }

    /// Same centers, shared linewidth replaced by `pump_center / q`.
    /// Overrides are cleared.
    pub fn with_q(&self, q: f64) -> Result<Self> {
        let gamma = q_to_linewidth(q, self.pump_center)?;
        Self::new(self.pump_center, self.signal_center, self.idler_center, gamma)
    }

    pub fn pump_center(&self) -> f64 {
        self.pump_center
    }

    pub fn signal_center(&self) -> f64 {
        self.signal_center
    }

    pub fn idler_center(&self) -> f64 {
        self.idler_center
    }

    /// The shared linewidth.
    pub fn linewidth(&self) -> f64 {
        self.linewidth
    }

    pub fn pump_linewidth(&self) -> f64 {
        self.overrides.pump.unwrap_or(self.linewidth)
    }

    pub fn signal_linewidth(&self) -> f64 {
        self.overrides.signal.unwrap_or(self.linewidth)
    }

    pub fn idler_linewidth(&self) -> f64 {
        self.overrides.idler.unwrap_or(self.linewidth)
    }

    /// Loaded quality factor of the pump resonance.
    pub fn q(&self) -> f64 {
        self.pump_center / self.pump_linewidth()
    }

    pub fn narrowest_linewidth(&self) -> f64 {
        self.pump_linewidth()
            .min(self.signal_linewidth())
            .min(self.idler_linewidth())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PumpMode {
    Single,
    Dual,
}

/// Sech-envelope pump, optionally split into two delayed copies.
///
/// In dual mode the spectral amplitude is
/// `[√η − √(1−η)·exp(−2πi·Δτ·(ν−ν₀))]·sech((ν−ν_p)·τ_p)`, so the second
/// copy carries a π phase flip at `ν₀` and the fringe period is `1/Δτ`.
#[derive(Clone, Debug, PartialEq)]
pub struct PumpSpec {
    center: f64,
    tau_p: f64,
    eta: f64,
    delta_tau: f64,
    nu0: f64,
    mode: PumpMode,
}

impl PumpSpec {
    pub fn single(center: f64, tau_p: f64) -> Result<Self> {
        check_positive("pump center", center)?;
        check_positive("tau_p", tau_p)?;
        Ok(Self {
            center,
            tau_p,
            eta: 1.0,
            delta_tau: 0.0,
            nu0: center,
            mode: PumpMode::Single,
        })
    }

    /// Single pulse parameterized by the FWHM of its intensity spectrum.
    pub fn single_from_fwhm(center: f64, fwhm: f64) -> Result<Self> {
        Self::single(center, fwhm_to_tau(fwhm)?)
    }

    pub fn dual(center: f64, tau_p: f64, eta: f64, delta_tau: f64, nu0: f64) -> Result<Self> {
        let mut p = Self::single(center, tau_p)?;
        p.mode = PumpMode::Dual;
        p.set_dual(eta, delta_tau, nu0)?;
        Ok(p)
    }

    fn set_dual(&mut self, eta: f64, delta_tau: f64, nu0: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::domain(format!("eta must lie in [0, 1], got {eta}")));
        }
        if !(delta_tau.is_finite() && delta_tau >= 0.0) {
            return Err(Error::domain(format!("delta_tau must be >= 0, got {delta_tau}")));
        }
        check_positive("nu0", nu0)?;
        self.eta = eta;
        self.delta_tau = delta_tau;
        self.nu0 = nu0;
        Ok(())
    }

    /// Dual-pulse variant of this envelope with the same `ν₀`.
    pub fn with_dual(&self, eta: f64, delta_tau: f64) -> Result<Self> {
        Self::dual(self.center, self.tau_p, eta, delta_tau, self.nu0)
    }

    /// Same envelope, single pulse, `ν₀` kept.
    pub fn single_reference(&self) -> Self {
        Self {
            eta: 1.0,
            delta_tau: 0.0,
            mode: PumpMode::Single,
            ..self.clone()
        }
    }

    pub fn with_nu0(&self, nu0: f64) -> Result<Self> {
        let mut p = self.clone();
        check_positive("nu0", nu0)?;
        p.nu0 = nu0;
        Ok(p)
    }

    pub fn with_fwhm(&self, fwhm: f64) -> Result<Self> {
        let mut p = self.clone();
        p.tau_p = fwhm_to_tau(fwhm)?;
        Ok(p)
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn tau_p(&self) -> f64 {
        self.tau_p
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn delta_tau(&self) -> f64 {
        self.delta_tau
    }

    pub fn nu0(&self) -> f64 {
        self.nu0
    }

    pub fn mode(&self) -> PumpMode {
        self.mode
    }

    /// FWHM of the intensity spectrum `|sech((ν−ν_p)τ_p)|²`.
    pub fn spectral_fwhm(&self) -> f64 {
        sech_fwhm_constant() / self.tau_p
    }

    /// True when the dual factor is identically constant, i.e. single mode
    /// or `η = 1`. Such pumps have no delay dependence at all.
    pub fn is_effectively_single(&self) -> bool {
        self.mode == PumpMode::Single || self.eta == 1.0
    }
}

/// Context for converting wavelength bandwidths to frequency bandwidths.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnitContext {
    reference_wavelength: f64,
}

impl UnitContext {
    pub fn new(reference_wavelength: f64) -> Result<Self> {
        check_positive("reference_wavelength", reference_wavelength)?;
        Ok(Self {
            reference_wavelength,
        })
    }

    pub fn at_frequency(frequency: f64) -> Result<Self> {
        check_positive("reference frequency", frequency)?;
        Self::new(SPEED_OF_LIGHT / frequency)
    }

    pub fn reference_wavelength(&self) -> f64 {
        self.reference_wavelength
    }

    pub fn speed_of_light(&self) -> f64 {
        SPEED_OF_LIGHT
    }
}

/// Center frequency of a 100 GHz ITU grid channel, `190 THz + n·0.1 THz`.
pub fn itu_channel_to_frequency(channel: u32) -> Result<f64> {
    if !(1..=72).contains(&channel) {
        return Err(Error::domain(format!("ITU channel must lie in 1..=72, got {channel}")));
    }
    Ok(ITU_ANCHOR + f64::from(channel) * ITU_SPACING)
}

/// `c·Δλ/λ₀²`.
pub fn bandwidth_wavelength_to_frequency(delta_lambda: f64, ctx: &UnitContext) -> Result<f64> {
    check_positive("delta_lambda", delta_lambda)?;
    let lambda = ctx.reference_wavelength;
    Ok(SPEED_OF_LIGHT * delta_lambda / (lambda * lambda))
}

/// Resonance FWHM `Γ = ν₀/Q`.
pub fn q_to_linewidth(q: f64, center: f64) -> Result<f64> {
    check_positive("q", q)?;
    check_positive("center", center)?;
    Ok(center / q)
}

/// Sech scale `τ_p` whose intensity spectrum has the given FWHM.
pub fn fwhm_to_tau(delta_nu_fwhm: f64) -> Result<f64> {
    check_positive("spectral FWHM", delta_nu_fwhm)?;
    Ok(sech_fwhm_constant() / delta_nu_fwhm)
}

/// Field enhancement of one resonance, `(Γ/2) / (Γ/2 + i(ν−ν₀))`.
///
/// Unit peak at the center; `|L|² = 1/2` at `ν₀ ± Γ/2`.
#[inline]
pub fn lorentzian(nu: f64, center: f64, gamma: f64) -> Complex64 {
    let half = 0.5 * gamma;
    Complex64::new(half, 0.0) / Complex64::new(half, nu - center)
}

#[inline]
fn sech(x: f64) -> f64 {
    // cosh overflows to inf for |x| > ~710, giving exactly 0.
    1.0 / x.cosh()
}

/// Spectral amplitude of the pump at `nu`.
#[inline]
pub fn pump_amplitude(nu: f64, pump: &PumpSpec) -> Complex64 {
    let envelope = sech((nu - pump.center) * pump.tau_p);
    if pump.is_effectively_single() {
        return Complex64::new(envelope, 0.0);
    }
    let phase = -2.0 * PI * pump.delta_tau * (nu - pump.nu0);
    let fringe = Complex64::new(pump.eta.sqrt(), 0.0) - (1.0 - pump.eta).sqrt() * Complex64::cis(phase);
    fringe * envelope
}

/// Factor `s` such that `Σ|s·a_k|²·step = 1`.
pub fn energy_scale(samples: &[Complex64], step: f64) -> Result<f64> {
    check_positive("step", step)?;
    let energy: f64 = samples.iter().map(|a| a.norm_sqr()).sum::<f64>() * step;
    if !(energy > 0.0) || !energy.is_finite() {
        return Err(Error::DegeneratePump);
    }
    Ok(energy.sqrt().recip())
}

/// Rescale samples to unit energy on a grid of spacing `step`.
pub fn normalize_energy(samples: &[Complex64], step: f64) -> Result<Vec<Complex64>> {
    let s = energy_scale(samples, step)?;
    Ok(samples.iter().map(|a| a * s).collect())
}
