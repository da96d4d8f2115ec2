//! Scenario parameters, the scalar statistics derived from them, and the
//! zero-photon weight of a displaced thermal state.
//!
//! Everything downstream works at the level of conditional measurement
//! statistics; no density operators are represented.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Channel and protocol parameters of one entanglement-testing instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioParams {
    /// Transmissivity (ranging: target reflectivity), `0 < kappa <= 1`.
    pub kappa: f64,
    /// Signal brightness N_S, mean photons per mode.
    pub n_signal: f64,
    /// Background brightness N_B, mean photons per mode.
    pub n_noise: f64,
    /// Number of candidate bins m.
    pub num_bins: usize,
    /// Modes per bin M.
    pub modes_per_bin: usize,
}

impl ScenarioParams {
    pub fn new(
        kappa: f64,
        n_signal: f64,
        n_noise: f64,
        num_bins: usize,
        modes_per_bin: usize,
    ) -> Result<Self> {
        let params = Self {
            kappa,
            n_signal,
            n_noise,
            num_bins,
            modes_per_bin,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        validate_channel(self.kappa, self.n_signal, self.n_noise)?;
        if self.num_bins < 2 {
            return Err(Error::invalid("num_bins", format!("need m >= 2, got {}", self.num_bins)));
        }
        if self.modes_per_bin < self.num_bins {
            return Err(Error::invalid(
                "modes_per_bin",
                format!(
                    "need M >= m for Gram-Schmidt, got M = {} < m = {}",
                    self.modes_per_bin, self.num_bins
                ),
            ));
        }
        Ok(())
    }

    /// Same scenario with a different number of modes per bin.
    pub fn with_modes(&self, modes_per_bin: usize) -> Result<Self> {
        Self::new(
            self.kappa,
            self.n_signal,
            self.n_noise,
            self.num_bins,
            modes_per_bin,
        )
    }

    /// Effective signal-to-noise ratio M·κ·N_S/N_B of the M combined modes.
    pub fn snr(&self) -> f64 {
        self.modes_per_bin as f64 * self.kappa * self.n_signal / self.n_noise
    }

    /// Per-quadrature heterodyne variance of a bin that holds no signal.
    pub fn background_variance(&self) -> f64 {
        (self.n_noise + 1.0) / 2.0
    }
}

pub(crate) fn validate_channel(kappa: f64, n_signal: f64, n_noise: f64) -> Result<()> {
    if !(kappa > 0.0 && kappa <= 1.0) {
        return Err(Error::invalid("kappa", format!("need 0 < kappa <= 1, got {kappa}")));
    }
    if !(n_signal > 0.0 && n_signal.is_finite()) {
        return Err(Error::invalid("n_signal", format!("need N_S > 0, got {n_signal}")));
    }
    if !(n_noise >= 0.0 && n_noise.is_finite()) {
        return Err(Error::invalid("n_noise", format!("need N_B >= 0, got {n_noise}")));
    }
    Ok(())
}

/// Scalars derived from a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedStats {
    /// Per-quadrature heterodyne variance v = (N_B + κN_S + 1)/2.
    pub v_het: f64,
    /// Signal-idler correlation C_p = sqrt(κ N_S (N_S + 1)).
    pub c_pair: f64,
    /// Thermal photon number E of the conditional idler modes.
    pub e_thermal: f64,
    /// Nominal displacement α₁ = C_p sqrt(M / 2v) of the signal-bin idler mode.
    pub alpha_one: f64,
}

impl DerivedStats {
    /// Evaluates the derived scalars for an arbitrary (possibly non-integer) mode count.
    ///
    /// Only the channel parameters are validated; `modes` must be non-negative.
    pub fn evaluate(kappa: f64, n_signal: f64, n_noise: f64, modes: f64) -> Result<Self> {
        validate_channel(kappa, n_signal, n_noise)?;
        if !(modes >= 0.0 && modes.is_finite()) {
            return Err(Error::invalid("modes_per_bin", format!("need M >= 0, got {modes}")));
        }
        let two_v = n_noise + kappa * n_signal + 1.0;
        let c_pair = (kappa * n_signal * (n_signal + 1.0)).sqrt();
        Ok(Self {
            v_het: two_v / 2.0,
            c_pair,
            e_thermal: n_signal * (n_noise + 1.0 - kappa) / two_v,
            alpha_one: c_pair * (modes / two_v).sqrt(),
        })
    }

    /// Coefficient C_p/(2v) mapping a conjugated heterodyne outcome onto the idler mean.
    pub fn conditional_gain(&self) -> f64 {
        self.c_pair / (2.0 * self.v_het)
    }
}

/// Derived statistics of a validated scenario.
pub fn derive_statistics(params: &ScenarioParams) -> Result<DerivedStats> {
    params.validate()?;
    DerivedStats::evaluate(
        params.kappa,
        params.n_signal,
        params.n_noise,
        params.modes_per_bin as f64,
    )
}

/// A displaced thermal state, described by its field mean and thermal photon number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisplacedThermalMode {
    pub mean: Complex64,
    pub thermal: f64,
}

impl DisplacedThermalMode {
    pub fn new(mean: Complex64, thermal: f64) -> Result<Self> {
        if !(thermal >= 0.0) {
            return Err(Error::invalid(
                "thermal",
                format!("thermal photon number must be >= 0, got {thermal}"),
            ));
        }
        Ok(Self { mean, thermal })
    }
}

/// Natural log of the zero-photon probability, −|α|²/(E+1) − ln(1+E).
///
/// Stays finite where the probability itself would underflow.
pub fn ln_vacuum_probability(mode: &DisplacedThermalMode) -> Result<f64> {
    if !(mode.thermal >= 0.0) {
        return Err(Error::invalid(
            "thermal",
            format!("thermal photon number must be >= 0, got {}", mode.thermal),
        ));
    }
    Ok(ln_vacuum_weight(mode.mean.norm_sqr(), mode.thermal))
}

/// Zero-photon probability e^{−|α|²/(E+1)}/(1+E) of a displaced thermal state.
pub fn vacuum_probability(mode: &DisplacedThermalMode) -> Result<f64> {
    ln_vacuum_probability(mode).map(f64::exp)
}

#[inline]
pub(crate) fn ln_vacuum_weight(amplitude_sq: f64, thermal: f64) -> f64 {
    -amplitude_sq / (thermal + 1.0) - thermal.ln_1p()
}
