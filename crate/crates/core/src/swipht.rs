//! SWIPHT pulses: a drive that performs a π rotation on a resonant
//! transition while steering a transition detuned by δ through a cyclic
//! evolution.
//!
//! The two-level model is `H = Ω(t) σx − (δ/2) σz` (rad/μs). Everything is
//! built from `χ(t) = C (t/τ)⁴ (1 − t/τ)⁴ + π/4`.

use argmin::core::{CostFunction, Executor};
use argmin::solver::brent::BrentRoot;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::io::Write;

use crate::dynamics::Generator;
use crate::format::{round_sig, sci};
use crate::linalg::{CMatrix, I};
use crate::{Error, Result};

/// Pulse duration in units of `1/|δ|`.
pub const DURATION_PRODUCT: f64 = 5.87;
/// Amplitude the solver prefers when several roots exist.
pub const REFERENCE_AMPLITUDE: f64 = 138.9;
/// Samples per pulse handed to the gate simulation.
pub const PULSE_SAMPLES: usize = 4096;
/// Absolute tolerance requested from the ψ± and area quadratures.
pub const QUADRATURE_TOL: f64 = 1e-12;
/// Largest error estimate accepted before reporting a quadrature failure.
/// Pulses close to the constraint boundary have a steep integrand.
pub const QUADRATURE_ACCEPT: f64 = 1e-8;

/// `max_s |d/ds s⁴(1−s)⁴|`, reached at `s = (1 − 1/√7)/2`.
pub fn ansatz_slope_max() -> f64 {
    27.0 / (686.0 * 7f64.sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwiphtParams {
    /// Ansatz amplitude C.
    pub c: f64,
    /// Duration τ (μs).
    pub tau_us: f64,
    /// Detuning of the unwanted transition (rad/μs, signed).
    pub delta: f64,
}

impl SwiphtParams {
    /// Parameters with `τ = DURATION_PRODUCT/|δ|`.
    pub fn with_product(c: f64, delta: f64) -> Self {
        SwiphtParams { c, tau_us: DURATION_PRODUCT / delta.abs(), delta }
    }

    fn check(&self) -> Result<()> {
        if !(self.c.is_finite() && self.tau_us.is_finite() && self.tau_us > 0.0 && self.delta.is_finite()) {
            return Err(Error::InvalidParameter(format!("invalid SWIPHT parameters {self:?}")));
        }
        if self.delta == 0.0 {
            return Err(Error::Degenerate("SWIPHT pulse needs a non-zero detuning".into()));
        }
        Ok(())
    }

    /// `max_t |χ̇| / (|δ|/2)`.
    pub fn constraint_ratio(&self) -> f64 {
        self.c.abs() * ansatz_slope_max() / self.tau_us / (self.delta.abs() / 2.0)
    }

    fn clamp_time(&self, t: f64) -> Result<f64> {
        let slack = 1e-12 * self.tau_us;
        if !(t >= -slack && t <= self.tau_us + slack) {
            return Err(Error::OutsidePulse { t_us: t, tau_us: self.tau_us });
        }
        Ok(t.clamp(0.0, self.tau_us))
    }
}

/// `(χ, χ̇, χ̈)` at `t` (μs); derivatives in 1/μs and 1/μs².
pub fn chi(t: f64, p: &SwiphtParams) -> Result<(f64, f64, f64)> {
    let t = p.clamp_time(t)?;
    let s = t / p.tau_us;
    let u = 1.0 - s;
    let value = p.c * s.powi(4) * u.powi(4) + FRAC_PI_4;
    let d1 = p.c * 4.0 * s.powi(3) * u.powi(3) * (u - s) / p.tau_us;
    let d2 = p.c * (12.0 * s * s * u.powi(4) - 32.0 * s.powi(3) * u.powi(3) + 12.0 * s.powi(4) * u * u)
        / (p.tau_us * p.tau_us);
    Ok((value, d1, d2))
}

fn root_term(p: &SwiphtParams, t: f64, chi_dot: f64) -> Result<f64> {
    let r2 = p.delta * p.delta / 4.0 - chi_dot * chi_dot;
    if r2 <= 0.0 {
        return Err(Error::PulseSingularity { t_us: t });
    }
    Ok(r2.sqrt())
}

/// `Ω(t) = χ̈ / (2√(δ²/4 − χ̇²)) − √(δ²/4 − χ̇²) cot 2χ` in rad/μs.
pub fn omega(t: f64, p: &SwiphtParams) -> Result<f64> {
    p.check()?;
    let (x, x1, x2) = chi(t, p)?;
    let r = root_term(p, t, x1)?;
    Ok(x2 / (2.0 * r) - r * (2.0 * x).cos() / (2.0 * x).sin())
}

fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> Result<f64> {
    if b <= a {
        return Ok(0.0);
    }
    let out = quadrature::double_exponential::integrate(f, a, b, QUADRATURE_TOL);
    if !out.integral.is_finite() || out.error_estimate > QUADRATURE_ACCEPT {
        return Err(Error::Quadrature { estimate: out.error_estimate });
    }
    Ok(out.integral)
}

/// `∫₀^τ Ω dt`.
pub fn pulse_area(p: &SwiphtParams) -> Result<f64> {
    p.check()?;
    if p.constraint_ratio() >= 1.0 {
        return Err(Error::PulseSingularity { t_us: p.tau_us * (1.0 - 1.0 / 7f64.sqrt()) / 2.0 });
    }
    integrate(|t| omega(t, p).unwrap_or(f64::NAN), 0.0, p.tau_us)
}

/// Closed-form two-level propagator at time `t`:
/// `e^{−iπσy/4} [[cosχ e^{iψ⁻}, sinχ e^{−iψ⁺}], [−sinχ e^{iψ⁺}, cosχ e^{−iψ⁻}]]`.
///
/// Negative δ is handled by conjugating the |δ| solution with σx.
pub fn analytic_unitary(t: f64, p: &SwiphtParams) -> Result<CMatrix> {
    p.check()?;
    let t = p.clamp_time(t)?;
    let abs = SwiphtParams { delta: p.delta.abs(), ..*p };
    if abs.constraint_ratio() >= 1.0 {
        return Err(Error::PulseSingularity { t_us: t });
    }
    let integral = integrate(
        |u| {
            let (x, x1, _) = chi(u, &abs).unwrap_or((f64::NAN, f64::NAN, f64::NAN));
            (abs.delta * abs.delta / 4.0 - x1 * x1).sqrt() / (2.0 * x).sin()
        },
        0.0,
        t,
    )?;
    let (x, x1, _) = chi(t, &abs)?;
    let tilt = 0.5 * (2.0 * x1 / abs.delta).clamp(-1.0, 1.0).asin();
    let (psi_m, psi_p) = (integral - tilt, integral + tilt);
    let (c, s) = (x.cos(), x.sin());
    let core = CMatrix::from_row_slice(
        2,
        2,
        &[
            C64::from_polar(c, psi_m),
            C64::from_polar(s, -psi_p),
            C64::from_polar(-s, psi_p),
            C64::from_polar(c, -psi_m),
        ],
    );
    let r = std::f64::consts::FRAC_1_SQRT_2;
    // exp(−iπσy/4)
    let pre = CMatrix::from_row_slice(2, 2, &[C64::new(r, 0.0), C64::new(-r, 0.0), C64::new(r, 0.0), C64::new(r, 0.0)]);
    let u = pre * core;
    if p.delta < 0.0 {
        let sx = sigma_x();
        return Ok(&sx * u * &sx);
    }
    Ok(u)
}

fn sigma_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0)])
}

/// `H(t) = Ω(t) σx − (δ/2) σz` on `[0, τ]`, zero drive outside.
pub struct TwoLevelGenerator {
    pub params: SwiphtParams,
}

impl TwoLevelGenerator {
    pub fn new(params: SwiphtParams) -> Result<Self> {
        params.check()?;
        if params.constraint_ratio() >= 1.0 {
            return Err(Error::PulseSingularity { t_us: 0.0 });
        }
        Ok(TwoLevelGenerator { params })
    }
}

impl Generator for TwoLevelGenerator {
    fn dim(&self) -> usize {
        2
    }

    fn hamiltonian(&self, t: f64) -> CMatrix {
        let w = omega(t, &self.params).unwrap_or(0.0);
        let half = self.params.delta / 2.0;
        CMatrix::from_row_slice(2, 2, &[C64::new(-half, 0.0), C64::new(w, 0.0), C64::new(w, 0.0), C64::new(half, 0.0)])
    }
}

/// Uniformly sampled envelope.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Pulse {
    pub times_us: Vec<f64>,
    /// Ω (rad/μs).
    pub omega: Vec<f64>,
    /// Carrier angular frequency (rad/μs).
    pub omega_p: f64,
    pub meta: SwiphtParams,
    /// `∫Ω dt` by quadrature of the closed form.
    pub area: f64,
}

impl Pulse {
    /// Samples `n ≥ 2` points of Ω on `[0, τ]`.
    pub fn sample(p: &SwiphtParams, n: usize, omega_p: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter("a pulse needs at least two samples".into()));
        }
        let area = pulse_area(p)?;
        let dt = p.tau_us / (n - 1) as f64;
        let times_us: Vec<f64> = (0..n).map(|k| if k + 1 == n { p.tau_us } else { k as f64 * dt }).collect();
        let omega = times_us.iter().map(|&t| omega(t, p)).collect::<Result<_>>()?;
        Ok(Pulse { times_us, omega, omega_p, meta: *p, area })
    }

    /// A pulse of the same duration with Ω ≡ 0.
    pub fn zero(p: &SwiphtParams, n: usize) -> Self {
        let dt = p.tau_us / (n.max(2) - 1) as f64;
        let times_us: Vec<f64> = (0..n.max(2)).map(|k| k as f64 * dt).collect();
        Pulse { omega: vec![0.0; times_us.len()], times_us, omega_p: 0.0, meta: *p, area: 0.0 }
    }

    pub fn duration(&self) -> f64 {
        self.meta.tau_us
    }

    /// Linear interpolation of the samples; zero outside the window.
    pub fn envelope(&self, t: f64) -> f64 {
        let n = self.times_us.len();
        let tau = self.times_us[n - 1];
        if !(0.0..=tau).contains(&t) {
            return 0.0;
        }
        let x = t / tau * (n - 1) as f64;
        let k = (x.floor() as usize).min(n - 2);
        let f = x - k as f64;
        self.omega[k] * (1.0 - f) + self.omega[k + 1] * f
    }

    /// Trapezoid area of the samples.
    pub fn sampled_area(&self) -> f64 {
        self.times_us
            .windows(2)
            .zip(self.omega.windows(2))
            .map(|(t, w)| 0.5 * (t[1] - t[0]) * (w[0] + w[1]))
            .sum()
    }

    /// CSV with columns `t_us, omega_rad_per_us`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t_us,omega_rad_per_us")?;
        for (t, o) in self.times_us.iter().zip(&self.omega) {
            writeln!(w, "{},{}", sci(*t), sci(*o))?;
        }
        Ok(())
    }

    /// `{C, tau_us, delta_MHz, area}`.
    pub fn metadata_json(&self) -> serde_json::Value {
        serde_json::json!({
            "C": round_sig(self.meta.c),
            "tau_us": round_sig(self.meta.tau_us),
            "delta_MHz": round_sig(self.meta.delta / (2.0 * PI)),
            "area": round_sig(self.area),
        })
    }
}

struct AreaResidual {
    delta: f64,
}

impl CostFunction for AreaResidual {
    type Param = f64;
    type Output = f64;

    fn cost(&self, c: &f64) -> std::result::Result<f64, argmin::core::Error> {
        pulse_area(&SwiphtParams::with_product(*c, self.delta))
            .map(|a| a - FRAC_PI_2)
            .map_err(|e| argmin::core::Error::msg(e.to_string()))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SwiphtSolution {
    pub params: SwiphtParams,
    pub area: f64,
    /// Other amplitudes in the bracket that also give area π/2.
    pub other_roots: Vec<f64>,
}

/// Upper end of the amplitude bracket: the pulse must respect
/// `|χ̇| < |δ|/2` and keep `χ < π/2`.
pub fn amplitude_limit() -> f64 {
    let saturation = DURATION_PRODUCT / (2.0 * ansatz_slope_max());
    1e4_f64.min(saturation).min(64.0 * PI) * (1.0 - 1e-3)
}

/// Finds C with `τ|δ| = DURATION_PRODUCT` and pulse area π/2.
///
/// The bracket `[1, amplitude_limit()]` is scanned for sign changes, each is
/// polished by Brent's method, and the root closest to
/// [`REFERENCE_AMPLITUDE`] is returned.
pub fn solve_parameters(delta: f64) -> Result<SwiphtSolution> {
    if !delta.is_finite() {
        return Err(Error::InvalidParameter(format!("detuning must be finite, got {delta}")));
    }
    if delta == 0.0 {
        return Err(Error::Degenerate("zero detuning: the pulse duration diverges".into()));
    }
    let (lo, hi) = (1.0, amplitude_limit());
    let residual = AreaResidual { delta };
    let n = 96;
    let grid: Vec<f64> = (0..=n).map(|k| lo + (hi - lo) * k as f64 / n as f64).collect();
    // Points where the quadrature fails are skipped rather than fatal.
    let values: Vec<f64> = grid.iter().map(|&c| residual.cost(&c).unwrap_or(f64::NAN)).collect();
    let mut roots = Vec::new();
    for k in 0..n {
        let (a, b) = (values[k], values[k + 1]);
        if a == 0.0 {
            roots.push(grid[k]);
            continue;
        }
        if a.is_nan() || b.is_nan() || a.signum() == b.signum() {
            continue;
        }
        let solver = BrentRoot::new(grid[k], grid[k + 1], 1e-13);
        let res = Executor::new(AreaResidual { delta }, solver)
            .configure(|s| s.param(0.5 * (grid[k] + grid[k + 1])).max_iters(200))
            .run()?;
        let c = res.state.best_param.ok_or_else(|| Error::RootNotFound("Brent returned no iterate".into()))?;
        roots.push(c);
    }
    if roots.is_empty() {
        return Err(Error::RootNotFound(format!("no amplitude in [{lo}, {hi:.3}] gives pulse area pi/2")));
    }
    roots.sort_by(|a, b| (a - REFERENCE_AMPLITUDE).abs().total_cmp(&(b - REFERENCE_AMPLITUDE).abs()));
    let best = roots.remove(0);
    let params = SwiphtParams::with_product(best, delta);
    let area = pulse_area(&params)?;
    Ok(SwiphtSolution { params, area, other_roots: roots })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub constraint_ratio: f64,
    /// χ = π/4 and χ̇ = 0 at both ends.
    pub boundary_ok: bool,
    pub area: f64,
    pub max_abs_omega: f64,
    /// Constraint satisfied and Ω finite everywhere.
    pub valid: bool,
    /// Additionally the area is within 1% of π/2.
    pub valid_for_cnot: bool,
}

/// Checks the constraint, boundary values and area of a parameter set.
pub fn validate(p: &SwiphtParams) -> ValidationReport {
    let ratio = if p.delta == 0.0 { f64::INFINITY } else { p.constraint_ratio() };
    let boundary_ok = [0.0, p.tau_us].iter().all(|&t| match chi(t, p) {
        Ok((x, x1, _)) => (x - FRAC_PI_4).abs() < 1e-12 && x1.abs() < 1e-12,
        Err(_) => false,
    });
    let mut report = ValidationReport {
        constraint_ratio: ratio,
        boundary_ok,
        area: f64::NAN,
        max_abs_omega: f64::INFINITY,
        valid: false,
        valid_for_cnot: false,
    };
    if !(ratio < 1.0) || p.check().is_err() {
        return report;
    }
    let samples: Vec<f64> = (0..=512)
        .map(|k| omega(p.tau_us * k as f64 / 512.0, p).unwrap_or(f64::INFINITY))
        .collect();
    report.max_abs_omega = samples.iter().fold(0.0, |m, w| m.max(w.abs()));
    report.area = pulse_area(p).unwrap_or(f64::NAN);
    report.valid = report.max_abs_omega.is_finite() && report.area.is_finite();
    report.valid_for_cnot = report.valid && boundary_ok && ((report.area - FRAC_PI_2) / FRAC_PI_2).abs() < 0.01;
    report
}

/// `exp(−iθσ/2)`-style helper used in tests and diagnostics.
pub fn pauli_rotation(axis: [f64; 3], angle: f64) -> CMatrix {
    let (c, s) = ((angle / 2.0).cos(), (angle / 2.0).sin());
    let [x, y, z] = axis;
    CMatrix::from_row_slice(
        2,
        2,
        &[
            C64::new(c, 0.0) - I * (s * z),
            -I * (s * x) - C64::new(s * y, 0.0),
            -I * (s * x) + C64::new(s * y, 0.0),
            C64::new(c, 0.0) + I * (s * z),
        ],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{propagate, TimeGrid};
    use crate::linalg::{max_diff, unitarity_error};

    fn reference(delta: f64) -> SwiphtParams {
        SwiphtParams::with_product(138.9, delta)
    }

    #[test]
    fn ansatz_boundaries() {
        let p = reference(2.0 * PI);
        let (x, x1, x2) = chi(0.0, &p).unwrap();
        assert_eq!((x, x1, x2), (FRAC_PI_4, 0.0, 0.0));
        let (x, x1, x2) = chi(p.tau_us, &p).unwrap();
        assert!((x - FRAC_PI_4).abs() < 1e-15 && x1 == 0.0 && x2 == 0.0);
        let (x, x1, _) = chi(p.tau_us / 2.0, &p).unwrap();
        assert!((x - (138.9 / 256.0 + FRAC_PI_4)).abs() < 1e-13);
        assert!(x1.abs() < 1e-13);
        assert!(matches!(chi(-0.1, &p), Err(Error::OutsidePulse { .. })));
        assert!(matches!(chi(p.tau_us * 1.01, &p), Err(Error::OutsidePulse { .. })));
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let p = reference(2.0 * PI);
        let h = 1e-5;
        for s in [0.2, 0.45, 0.8] {
            let t = s * p.tau_us;
            let (_, d1, d2) = chi(t, &p).unwrap();
            let f = |t| chi(t, &p).unwrap();
            let fd1 = (f(t + h).0 - f(t - h).0) / (2.0 * h);
            let fd2 = (f(t + h).1 - f(t - h).1) / (2.0 * h);
            assert!((d1 - fd1).abs() < 1e-6 && (d2 - fd2).abs() < 1e-5);
        }
    }

    #[test]
    fn slope_maximum_by_scan() {
        let scan = (0..=200000)
            .map(|k| {
                let s = k as f64 / 200000.0;
                (4.0 * s.powi(3) * (1.0 - s).powi(3) * (1.0 - 2.0 * s)).abs()
            })
            .fold(0.0, f64::max);
        assert!((scan - ansatz_slope_max()).abs() < 1e-10);
    }

    #[test]
    fn omega_vanishes_at_edges_and_is_symmetric() {
        let p = reference(2.0 * PI * 3.0);
        assert!(omega(0.0, &p).unwrap().abs() < 1e-12);
        assert!(omega(p.tau_us, &p).unwrap().abs() < 1e-12);
        for k in 1..50 {
            let t = p.tau_us * k as f64 / 100.0;
            let a = omega(t, &p).unwrap();
            let b = omega(p.tau_us - t, &p).unwrap();
            assert!((a - b).abs() < 1e-10 * a.abs().max(1.0));
        }
    }

    #[test]
    fn singularity_is_reported() {
        let p = SwiphtParams::with_product(1e4, 2.0 * PI);
        assert!(matches!(omega(0.3 * p.tau_us, &p), Err(Error::PulseSingularity { .. })));
    }

    #[test]
    fn analytic_unitary_starts_at_identity_and_stays_unitary() {
        let p = reference(2.0 * PI);
        let u0 = analytic_unitary(0.0, &p).unwrap();
        assert!(max_diff(&u0, &CMatrix::identity(2, 2)) < 1e-15);
        for k in 0..=10 {
            let u = analytic_unitary(p.tau_us * k as f64 / 10.0, &p).unwrap();
            assert!(unitarity_error(&u) < 1e-9);
        }
        let end = analytic_unitary(p.tau_us, &p).unwrap();
        assert!(end[(0, 1)].norm() < 1e-6 && end[(1, 0)].norm() < 1e-6);
    }

    #[test]
    fn analytic_unitary_generates_the_two_level_hamiltonian() {
        for delta in [2.0 * PI, -2.0 * PI] {
            let p = reference(delta);
            let gen = TwoLevelGenerator::new(p).unwrap();
            let h = 1e-6;
            let t = 0.37 * p.tau_us;
            let du = (analytic_unitary(t + h, &p).unwrap() - analytic_unitary(t - h, &p).unwrap()) / C64::new(2.0 * h, 0.0);
            let hh = du * analytic_unitary(t, &p).unwrap().adjoint() * I;
            assert!(max_diff(&hh, &gen.hamiltonian(t)) < 1e-5, "delta {delta}");
        }
    }

    #[test]
    fn integrated_evolution_matches_closed_form() {
        let p = reference(2.0 * PI);
        let gen = TwoLevelGenerator::new(p).unwrap();
        let grid = TimeGrid::new(0.0, p.tau_us, 512).with_stride(64);
        let rec = propagate(&gen, &grid, 1e-9).unwrap();
        for (t, u) in rec.times.iter().zip(&rec.unitaries) {
            let exact = analytic_unitary(*t, &p).unwrap();
            assert!(max_diff(u, &exact) < 1e-6, "t = {t}");
        }
    }

    #[test]
    fn solver_reproduces_constants() {
        let sol = solve_parameters(2.0 * PI).unwrap();
        assert!(((sol.params.c - 138.9) / 138.9).abs() < 5e-3, "{sol:?}");
        assert!(((sol.params.tau_us * 2.0 * PI - 5.87) / 5.87).abs() < 5e-3);
        assert!((sol.area - FRAC_PI_2).abs() < 1e-6);
        let doubled = solve_parameters(4.0 * PI).unwrap();
        assert!((doubled.params.c - sol.params.c).abs() < 1e-9);
        assert!((doubled.params.tau_us - sol.params.tau_us / 2.0).abs() < 1e-12);
        assert!(solve_parameters(0.0).is_err());
    }

    #[test]
    fn validation_reports() {
        let good = validate(&reference(2.0 * PI));
        assert!(good.valid && good.constraint_ratio < 1.0 && good.boundary_ok, "{good:?}");
        let flat = validate(&SwiphtParams::with_product(0.0, 2.0 * PI));
        assert!(flat.valid && !flat.valid_for_cnot && flat.area.abs() < 1e-9);
        let wild = validate(&SwiphtParams::with_product(1e4, 2.0 * PI));
        assert!(!wild.valid && wild.constraint_ratio > 1.0);
    }

    #[test]
    fn pulse_sampling() {
        let p = reference(2.0 * PI);
        let pulse = Pulse::sample(&p, PULSE_SAMPLES, 1.0).unwrap();
        assert_eq!(pulse.times_us.len(), PULSE_SAMPLES);
        assert!((pulse.sampled_area() - pulse.area).abs() < 1e-5);
        let t = 0.3 * p.tau_us;
        assert!((pulse.envelope(t) - omega(t, &p).unwrap()).abs() < 1e-4);
        assert_eq!(pulse.envelope(-1.0), 0.0);
        let json = pulse.metadata_json();
        assert!((json["delta_MHz"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rotation_helper() {
        let u = pauli_rotation([0.0, 1.0, 0.0], PI / 2.0);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((u[(0, 1)].re + r).abs() < 1e-15 && (u[(1, 0)].re - r).abs() < 1e-15);
    }
}
