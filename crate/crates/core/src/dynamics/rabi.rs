//! Electrically driven nuclear Rabi oscillations in the m_J = −6 manifold,
//! simulated in the lab frame with counter-rotating terms kept.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write;

use super::{propagate, Generator, TimeGrid};
use crate::format::sci;
use crate::linalg::{CMatrix, CVector};
use crate::smm::{control_operator, effective_levels, SmmParams, NUCLEAR_DIM, NUCLEAR_I};
use crate::{Error, Result};

/// Drive amplitude `√3 η A cosθ / 2` (MHz) on the 3/2 ↔ 1/2 transition.
pub fn transverse_amplitude(p: &SmmParams) -> f64 {
    3f64.sqrt() * p.eta * p.effective_a_mhz() * p.theta.cos() / 2.0
}

/// Generalized Rabi frequency `Ω_R/2π = √(Δ² + Ω₀²)` in MHz.
pub fn rabi_frequency(detuning_mhz: f64, transverse_mhz: f64) -> f64 {
    detuning_mhz.hypot(transverse_mhz)
}

/// Resonant Rabi period `4π/(√3 η A cosθ)` in μs (A in rad/μs).
pub fn rabi_period(p: &SmmParams) -> f64 {
    1.0 / transverse_amplitude(p)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RabiOptions {
    /// Steps per carrier period before refinement.
    pub points_per_period: usize,
    pub tol: f64,
}

impl Default for RabiOptions {
    fn default() -> Self {
        // The lab-frame carrier at ~2.5 GHz makes 1e-9 unaffordable over
        // microseconds; 1e-5 keeps populations accurate far below 1e-4.
        RabiOptions { points_per_period: 200, tol: 1e-5 }
    }
}

struct RabiGenerator {
    levels: CMatrix,
    drive: CMatrix,
    omega_p: f64,
}

impl Generator for RabiGenerator {
    fn dim(&self) -> usize {
        NUCLEAR_DIM
    }

    fn hamiltonian(&self, t: f64) -> CMatrix {
        &self.levels + self.drive.scale((self.omega_p * t).cos())
    }

    fn period(&self) -> Option<f64> {
        Some(2.0 * PI / self.omega_p)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RabiTrace {
    pub times_us: Vec<f64>,
    /// Population left in the initial state m_I = 3/2.
    pub p_initial: Vec<f64>,
    /// m_I = 1/2.
    pub p_target: Vec<f64>,
    /// m_I = −1/2.
    pub p_leak1: Vec<f64>,
    /// m_I = −3/2.
    pub p_leak2: Vec<f64>,
    pub carrier_mhz: f64,
    pub n_steps: usize,
    pub disagreement: f64,
}

impl RabiTrace {
    /// CSV with columns `t_us, P_target, P_leak1, P_leak2`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t_us,P_target,P_leak1,P_leak2")?;
        for k in 0..self.times_us.len() {
            writeln!(
                w,
                "{},{},{},{}",
                sci(self.times_us[k]),
                sci(self.p_target[k]),
                sci(self.p_leak1[k]),
                sci(self.p_leak2[k])
            )?;
        }
        Ok(())
    }

    pub fn max_target(&self) -> f64 {
        self.p_target.iter().cloned().fold(0.0, f64::max)
    }

    /// Oscillation period (μs) of the target population.
    pub fn period(&self) -> Option<f64> {
        oscillation_period(&self.times_us, &self.p_target)
    }
}

/// Population of m_I = 1/2 after starting in `|−6, 3/2⟩`, driven at
/// `ν₁ + detuning`. The run is extended to a whole number of carrier
/// periods covering `t_max_us` and sampled once per period.
pub fn rabi_simulation(p: &SmmParams, detuning_mhz: f64, t_max_us: f64, opts: &RabiOptions) -> Result<RabiTrace> {
    p.validate()?;
    if !(t_max_us.is_finite() && t_max_us > 0.0) {
        return Err(Error::InvalidParameter(format!("t_max must be positive, got {t_max_us}")));
    }
    if opts.points_per_period == 0 {
        return Err(Error::InvalidParameter("points_per_period must be positive".into()));
    }
    let lv = effective_levels(p, p.field_t)?;
    let mean = lv.omega_ghz.iter().sum::<f64>() / 4.0;
    let mut levels = CMatrix::zeros(NUCLEAR_DIM, NUCLEAR_DIM);
    for (slot, &m_i) in lv.m_i.iter().enumerate() {
        let k = (NUCLEAR_I - m_i).round() as usize;
        levels[(k, k)] = C64::new(2.0 * PI * (lv.omega_ghz[slot] - mean) * 1e3, 0.0);
    }
    let nu1_mhz = lv.splittings_ghz()[0] * 1e3;
    let carrier_mhz = nu1_mhz + detuning_mhz;
    if carrier_mhz <= 0.0 {
        return Err(Error::InvalidParameter(format!("carrier frequency {carrier_mhz} MHz is not positive")));
    }
    let gen = RabiGenerator { levels, drive: control_operator(p), omega_p: 2.0 * PI * carrier_mhz };
    let period = 1.0 / carrier_mhz;
    let periods = (t_max_us / period).ceil().max(1.0) as usize;
    let m = opts.points_per_period;
    let grid = TimeGrid {
        t0: 0.0,
        t1: periods as f64 * period,
        n_steps: periods * m,
        adaptive: true,
        record_stride: m,
    };
    let psi0 = CVector::from_fn(NUCLEAR_DIM, |k, _| C64::new(if k == 0 { 1.0 } else { 0.0 }, 0.0));
    let rec = propagate(&gen, &grid, opts.tol)?.with_populations(&psi0);
    let pops = rec.populations.as_ref().expect("populations requested");
    let col = |k: usize| pops.iter().map(|row| row[k]).collect::<Vec<_>>();
    Ok(RabiTrace {
        times_us: rec.times.clone(),
        p_initial: col(0),
        p_target: col(1),
        p_leak1: col(2),
        p_leak2: col(3),
        carrier_mhz,
        n_steps: rec.n_steps,
        disagreement: rec.disagreement,
    })
}

/// Peak of a sampled hump by a parabola through the maximum and its
/// neighbours.
fn refine_peak(t: &[f64], y: &[f64], k: usize) -> f64 {
    if k == 0 || k + 1 >= y.len() {
        return t[k];
    }
    let (a, b, c) = (y[k - 1], y[k], y[k + 1]);
    let denom = a - 2.0 * b + c;
    if denom == 0.0 {
        return t[k];
    }
    let shift = 0.5 * (a - c) / denom;
    t[k] + shift * (t[k + 1] - t[k - 1]) / 2.0
}

/// Spacing between the first two maxima of an oscillating trace.
///
/// The trace is split into humps where it exceeds half of its range above
/// the minimum; the maximum of each hump is refined by quadratic
/// interpolation. Returns `None` with fewer than two humps.
pub fn oscillation_period(t: &[f64], y: &[f64]) -> Option<f64> {
    if t.len() != y.len() || y.len() < 3 {
        return None;
    }
    let lo = y.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return None;
    }
    let level = lo + 0.5 * (hi - lo);
    let mut peaks = Vec::new();
    let mut k = 0;
    while k < y.len() && peaks.len() < 2 {
        if y[k] > level {
            let start = k;
            while k < y.len() && y[k] > level {
                k += 1;
            }
            // Humps touching the end of the trace may be truncated.
            if k == y.len() {
                break;
            }
            let best = (start..k).max_by(|&a, &b| y[a].total_cmp(&y[b])).unwrap();
            if start > 0 {
                peaks.push(refine_peak(t, y, best));
            }
        } else {
            k += 1;
        }
    }
    (peaks.len() == 2).then(|| peaks[1] - peaks[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formula_limits() {
        assert_eq!(rabi_frequency(2.0, 0.0), 2.0);
        assert_eq!(rabi_frequency(-2.0, 0.0), 2.0);
        assert!(rabi_frequency(1.0, 0.4) > rabi_frequency(0.5, 0.4));
        let p = SmmParams { theta: 0.0, ..Default::default() };
        // Oracle: 4π / (√3 η 2πA) with A in MHz.
        let oracle = 4.0 * PI / (3f64.sqrt() * 1e-3 * 2.0 * PI * p.a_mhz);
        assert!((rabi_period(&p) - oracle).abs() < 1e-12);
        assert!((oracle - 2.23).abs() / 2.23 < 0.02);
    }

    #[test]
    fn period_of_sampled_cosine() {
        let t: Vec<f64> = (0..2000).map(|k| k as f64 * 0.01).collect();
        let y: Vec<f64> = t.iter().map(|&x| (1.0 - (2.0 * PI * x / 3.3).cos()) / 2.0).collect();
        let p = oscillation_period(&t, &y).unwrap();
        assert!((p - 3.3).abs() < 1e-4, "{p}");
        assert!(oscillation_period(&t, &vec![0.5; 2000]).is_none());
    }

    #[test]
    fn short_resonant_run_transfers_population() {
        let p = SmmParams { theta: 0.0, ..Default::default() };
        let half = rabi_period(&p) / 2.0;
        let tr = rabi_simulation(&p, 0.0, half, &RabiOptions::default()).unwrap();
        let last = tr.p_target.len() - 1;
        assert!(tr.p_target[last] > 0.99, "{}", tr.p_target[last]);
        for k in 0..tr.times_us.len() {
            let s = tr.p_initial[k] + tr.p_target[k] + tr.p_leak1[k] + tr.p_leak2[k];
            assert!((s - 1.0).abs() < 1e-9, "{k} {s}");
        }
    }
}
