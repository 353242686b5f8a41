//! Coupling estimate and the rate budget against cavity and spin losses.

use serde::{Deserialize, Serialize};

use super::CavityParams;
use crate::smm::{CONSTANTS, ELECTRONIC_J};
use crate::{Error, Result};

/// Fractional hyperfine change per μV of resonator voltage.
pub const DEFAULT_SENSITIVITY_PER_UV: f64 = 1e-6;

/// Internal field `A·J/(g_N μ_N)` in Tesla, for A in MHz.
pub fn b_eff_t(a_mhz: f64, g_n: f64) -> f64 {
    a_mhz * ELECTRONIC_J / (g_n * CONSTANTS.mu_n_over_h_mhz_per_t)
}

/// Single-quantum coupling `g = s · V_rms · |m_J| · A` in kHz.
pub fn estimate_coupling(a_mhz: f64, m_j: f64, sensitivity_per_uv: f64, v_rms_uv: f64) -> Result<f64> {
    for (name, x) in [("A", a_mhz), ("sensitivity", sensitivity_per_uv), ("V_rms", v_rms_uv)] {
        if !(x.is_finite() && x >= 0.0) {
            return Err(Error::InvalidParameter(format!("{name} must be non-negative, got {x}")));
        }
    }
    if !m_j.is_finite() {
        return Err(Error::InvalidParameter("m_J must be finite".into()));
    }
    Ok(sensitivity_per_uv * v_rms_uv * m_j.abs() * a_mhz * 1e3)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateBudget {
    pub g_mhz: f64,
    /// `ω_c / Q`.
    pub kappa_mhz: f64,
    /// `1 / T₂*`.
    pub gamma_mhz: f64,
    pub strong_coupling: bool,
    /// `min(g/κ, g/γ)`.
    pub margin: f64,
    /// Strong but by less than a factor of ten.
    pub edge: bool,
}

pub fn strong_coupling_check(g_khz: f64, c: &CavityParams, t2_star_ms: f64) -> Result<RateBudget> {
    c.validate()?;
    if !(t2_star_ms.is_finite() && t2_star_ms > 0.0) {
        return Err(Error::InvalidParameter(format!("T2* must be positive, got {t2_star_ms} ms")));
    }
    if !(g_khz.is_finite() && g_khz >= 0.0) {
        return Err(Error::InvalidParameter(format!("g must be non-negative, got {g_khz} kHz")));
    }
    let g = g_khz * 1e-3;
    let kappa = c.omega_c_ghz * 1e3 / c.q_factor;
    let gamma = 1.0 / (t2_star_ms * 1e3);
    let strong = g > kappa && g > gamma;
    let margin = (g / kappa).min(g / gamma);
    Ok(RateBudget { g_mhz: g, kappa_mhz: kappa, gamma_mhz: gamma, strong_coupling: strong, margin, edge: strong && margin < 10.0 })
}
