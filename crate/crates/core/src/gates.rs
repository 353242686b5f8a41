//! CNOT gate by a SWIPHT pulse on the second molecule, its fidelity and
//! the (g, ω_c) sweep.
//!
//! The gate is propagated in the rotating frame of the carrier (resonant
//! with |0̃0⟩ ↔ |0̃1⟩) and reported in the interaction picture of H0, so
//! free-evolution phases are excluded.

use argmin::core::{CostFunction, Executor};
use argmin::solver::neldermead::NelderMead;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::f64::consts::PI;
use std::io::Write;

use crate::cavity::{
    build_coupled_hamiltonian, transition_frequencies, CavityParams, CoupledSystem, DriveLambdas, RotatingFrameDrive,
};
use crate::dynamics::{propagate, to_interaction_picture, TimeGrid};
use crate::format::{round_sig, sci};
use crate::linalg::{kron, unitarity_error, CMatrix};
use crate::smm::SmmParams;
use crate::swipht::{solve_parameters, Pulse, SwiphtParams, PULSE_SAMPLES};
use crate::{Error, Result};

/// Tolerance on fidelity changes between Fock cutoffs and step refinements.
pub const FIDELITY_CONVERGENCE: f64 = 1e-4;

/// `F = (Tr[UU†] + |Tr[U†T]|²) / 20` for 4×4 matrices.
pub fn pedersen_fidelity(u: &CMatrix, target: &CMatrix) -> f64 {
    let tr_uu = (u * u.adjoint()).trace().re;
    let overlap = (u.adjoint() * target).trace().norm_sqr();
    (tr_uu + overlap) / 20.0
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum CnotConvention {
    /// Flips qubit 2 when qubit 1 is |0̃⟩; the transition the pulse drives.
    #[default]
    ZeroControlled,
    /// Standard CNOT, flips qubit 2 when qubit 1 is |1̃⟩.
    OneControlled,
}

/// Target in the basis (00, 01, 10, 11).
pub fn cnot_target(convention: CnotConvention) -> CMatrix {
    let perm: [usize; 4] = match convention {
        CnotConvention::ZeroControlled => [1, 0, 2, 3],
        CnotConvention::OneControlled => [0, 1, 3, 2],
    };
    let mut t = CMatrix::zeros(4, 4);
    for (col, &row) in perm.iter().enumerate() {
        t[(row, col)] = C64::new(1.0, 0.0);
    }
    t
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum LocalMode {
    /// `Z(φ₁)⊗Z(φ₂) · U · Z(φ₃)⊗Z(φ₄)` with `Z(φ) = diag(1, e^{iφ})`.
    #[default]
    ZOnly,
    /// Arbitrary single-qubit unitaries (Z-Y-Z angles) before and after.
    Full,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LocalOptimum {
    pub fidelity: f64,
    pub params: Vec<f64>,
    /// `L · U · R` at the optimum.
    pub corrected: CMatrix,
}

fn z_phase(phi: f64) -> CMatrix {
    CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![C64::new(1.0, 0.0), C64::from_polar(1.0, phi)]))
}

fn zyz(a: f64, b: f64, c: f64) -> CMatrix {
    let rz = |x: f64| {
        CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![C64::from_polar(1.0, -x / 2.0), C64::from_polar(1.0, x / 2.0)]))
    };
    let (s, co) = (b / 2.0).sin_cos();
    let ry = CMatrix::from_row_slice(2, 2, &[C64::new(co, 0.0), C64::new(-s, 0.0), C64::new(s, 0.0), C64::new(co, 0.0)]);
    rz(a) * ry * rz(c)
}

fn apply_locals(u: &CMatrix, x: &[f64], mode: LocalMode) -> CMatrix {
    match mode {
        LocalMode::ZOnly => kron(&z_phase(x[0]), &z_phase(x[1])) * u * kron(&z_phase(x[2]), &z_phase(x[3])),
        LocalMode::Full => {
            let l = kron(&zyz(x[0], x[1], x[2]), &zyz(x[3], x[4], x[5]));
            let r = kron(&zyz(x[6], x[7], x[8]), &zyz(x[9], x[10], x[11]));
            l * u * r
        }
    }
}

fn param_count(mode: LocalMode) -> usize {
    match mode {
        LocalMode::ZOnly => 4,
        LocalMode::Full => 12,
    }
}

struct Infidelity<'a> {
    u: &'a CMatrix,
    target: &'a CMatrix,
    mode: LocalMode,
}

impl CostFunction for Infidelity<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, x: &Vec<f64>) -> std::result::Result<f64, argmin::core::Error> {
        Ok(1.0 - pedersen_fidelity(&apply_locals(self.u, x, self.mode), self.target))
    }
}

/// Deterministic starting points: the origin plus a low-discrepancy
/// sequence on the torus.
fn starting_points(dim: usize, count: usize) -> Vec<Vec<f64>> {
    // Reciprocal powers of the generalized golden ratio for `dim`.
    let mut phi = 2.0f64;
    for _ in 0..64 {
        phi = (1.0 + phi).powf(1.0 / (dim as f64 + 1.0));
    }
    let alpha: Vec<f64> = (1..=dim).map(|k| phi.powi(-(k as i32)).fract()).collect();
    (0..count)
        .map(|k| {
            if k == 0 {
                vec![0.0; dim]
            } else {
                alpha.iter().map(|a| 2.0 * PI * (0.5 + k as f64 * a).fract()).collect()
            }
        })
        .collect()
}

fn nelder_mead(cost: &Infidelity, start: &[f64]) -> Option<(Vec<f64>, f64)> {
    let mut simplex = vec![start.to_vec()];
    for i in 0..start.len() {
        let mut v = start.to_vec();
        v[i] += 0.5;
        simplex.push(v);
    }
    let solver = NelderMead::new(simplex).with_sd_tolerance(1e-14).ok()?;
    let res = Executor::new(Infidelity { u: cost.u, target: cost.target, mode: cost.mode }, solver)
        .configure(|s| s.max_iters(4000))
        .run()
        .ok()?;
    let best = res.state.best_param?;
    Some((best, res.state.best_cost))
}

/// Maximizes the fidelity over local gates from 8 deterministic starts.
pub fn optimize_local_gates(u: &CMatrix, target: &CMatrix, mode: LocalMode) -> LocalOptimum {
    let cost = Infidelity { u, target, mode };
    let mut starts = starting_points(param_count(mode), 8);
    let mut best = (vec![0.0; param_count(mode)], 1.0 - pedersen_fidelity(u, target));
    if mode == LocalMode::Full {
        // Seed with the Z-only optimum; Z(φ) equals Rz(φ) up to a phase.
        let z = optimize_local_gates(u, target, LocalMode::ZOnly);
        let p = &z.params;
        let seed = vec![p[0], 0.0, 0.0, p[1], 0.0, 0.0, p[2], 0.0, 0.0, p[3], 0.0, 0.0];
        best = (seed.clone(), 1.0 - z.fidelity);
        starts.insert(0, seed);
    }
    for s in &starts {
        if let Some((x, c)) = nelder_mead(&cost, s) {
            if c < best.1 {
                best = (x, c);
            }
        }
    }
    let corrected = apply_locals(u, &best.0, mode);
    LocalOptimum { fidelity: pedersen_fidelity(&corrected, target), params: best.0, corrected }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateOptions {
    /// Initial number of time steps over the pulse.
    pub n_steps: usize,
    /// Richardson tolerance on the propagator.
    pub tol: f64,
    /// Keep dressed states with at most this many excitations.
    pub excitation_cutoff: Option<usize>,
    pub lambdas: DriveLambdas,
    pub convention: CnotConvention,
    pub local_mode: LocalMode,
    /// Replace the pulse by Ω ≡ 0 over the same duration.
    pub zero_pulse: bool,
    /// Re-run at n_max + 2 and escalate while the fidelity moves by more
    /// than [`FIDELITY_CONVERGENCE`].
    pub fock_check: bool,
    pub max_fock_escalations: usize,
}

impl Default for GateOptions {
    fn default() -> Self {
        GateOptions {
            n_steps: 256,
            tol: 1e-6,
            excitation_cutoff: Some(4),
            lambdas: DriveLambdas::default(),
            convention: CnotConvention::default(),
            local_mode: LocalMode::default(),
            zero_pulse: false,
            fock_check: true,
            max_fock_escalations: 3,
        }
    }
}

#[derive(Clone, Debug)]
pub struct GateResult {
    /// Interaction-picture propagator on the logical subspace.
    pub u_logical: CMatrix,
    /// After local-gate optimization.
    pub fidelity: f64,
    pub raw_fidelity: f64,
    pub local_params: Vec<f64>,
    pub leakage: f64,
    pub gate_time_us: f64,
    pub delta_mhz: f64,
    pub f_target_ghz: f64,
    pub swipht: SwiphtParams,
    pub g_mhz: f64,
    pub cavity: CavityParams,
    pub shift2_mhz: f64,
    pub n_steps: usize,
    /// Disagreement between the last two step refinements.
    pub step_disagreement: f64,
    /// `|F(n_max + 2) − F(n_max)|`, when checked.
    pub fock_drift: Option<f64>,
    /// Unitarity error of the full propagator.
    pub norm_error: f64,
    pub truncation_warning: bool,
    pub converged: bool,
}

impl GateResult {
    pub fn infidelity(&self) -> f64 {
        1.0 - self.fidelity
    }

    pub fn to_json(&self) -> serde_json::Value {
        let grid = |f: fn(&C64) -> f64| -> Vec<Vec<f64>> {
            (0..4).map(|r| (0..4).map(|c| round_sig(f(&self.u_logical[(r, c)]))).collect()).collect()
        };
        json!({
            "g_MHz": round_sig(self.g_mhz),
            "omega_c_GHz": round_sig(self.cavity.omega_c_ghz),
            "n_max": self.cavity.n_max,
            "shift2_MHz": round_sig(self.shift2_mhz),
            "fidelity": round_sig(self.fidelity),
            "raw_fidelity": round_sig(self.raw_fidelity),
            "infidelity": round_sig(self.infidelity()),
            "leakage": round_sig(self.leakage),
            "gate_time_us": round_sig(self.gate_time_us),
            "delta_MHz": round_sig(self.delta_mhz),
            "f_target_GHz": round_sig(self.f_target_ghz),
            "C": round_sig(self.swipht.c),
            "local_params": self.local_params.iter().map(|x| round_sig(*x)).collect::<Vec<_>>(),
            "n_steps": self.n_steps,
            "step_disagreement": round_sig(self.step_disagreement),
            "fock_drift": self.fock_drift.map(round_sig),
            "norm_error": round_sig(self.norm_error),
            "truncation_warning": self.truncation_warning,
            "converged": self.converged,
            "U_logical_re": grid(|z| z.re),
            "U_logical_im": grid(|z| z.im),
        })
    }
}

/// Drives |0̃0⟩ ↔ |0̃1⟩ with a SWIPHT pulse on molecule 2. With `sp = None`
/// the pulse is solved from the dressed detuning δ.
pub fn simulate_cnot(s: &CoupledSystem, sp: Option<SwiphtParams>, opts: &GateOptions) -> Result<GateResult> {
    let tf = transition_frequencies(s);
    let sp = match sp {
        Some(sp) => sp,
        None => {
            if !(tf.delta_mhz.abs() > 1e-12) {
                return Err(Error::Degenerate(format!(
                    "dressed detuning {:e} MHz vanishes, the gate time diverges",
                    tf.delta_mhz
                )));
            }
            solve_parameters(2.0 * PI * tf.delta_mhz)?.params
        }
    };
    let omega_p = 2.0 * PI * tf.f_target_ghz * 1e3;
    let pulse = if opts.zero_pulse {
        let mut z = Pulse::zero(&sp, PULSE_SAMPLES);
        z.omega_p = omega_p;
        z
    } else {
        Pulse::sample(&sp, PULSE_SAMPLES, omega_p)?
    };
    let rf = RotatingFrameDrive::new(s, pulse, &opts.lambdas, opts.excitation_cutoff)?;
    let grid = TimeGrid::new(0.0, sp.tau_us, opts.n_steps);
    let rec = propagate(&rf, &grid, opts.tol)?;
    let rec = to_interaction_picture(&rec, &rf.generator_diag())?;
    let u = rec.final_unitary();
    let norm_error = unitarity_error(u);

    let mut ul = CMatrix::zeros(4, 4);
    for (r, &i) in rf.logical.iter().enumerate() {
        for (c, &j) in rf.logical.iter().enumerate() {
            ul[(r, c)] = u[(i, j)];
        }
    }
    let min_col = (0..4).map(|c| ul.column(c).norm_squared()).fold(f64::INFINITY, f64::min);
    let leakage = (1.0 - min_col).max(0.0);
    let target = cnot_target(opts.convention);
    let raw_fidelity = pedersen_fidelity(&ul, &target);
    let opt = optimize_local_gates(&ul, &target, opts.local_mode);
    Ok(GateResult {
        u_logical: ul,
        fidelity: opt.fidelity,
        raw_fidelity,
        local_params: opt.params,
        leakage,
        gate_time_us: sp.tau_us,
        delta_mhz: tf.delta_mhz,
        f_target_ghz: tf.f_target_ghz,
        swipht: sp,
        g_mhz: s.g_mhz,
        cavity: s.cavity.clone(),
        shift2_mhz: s.p2.dc_shift_mhz,
        n_steps: rec.n_steps,
        step_disagreement: rec.disagreement,
        fock_drift: None,
        norm_error,
        truncation_warning: s.truncation_warning,
        converged: true,
    })
}

/// Builds the coupled system and simulates the gate, escalating the Fock
/// cutoff by two until the fidelity is stable.
pub fn run_gate(p1: &SmmParams, p2: &SmmParams, c: &CavityParams, g_mhz: f64, opts: &GateOptions) -> Result<GateResult> {
    let at = |cav: &CavityParams| -> Result<GateResult> {
        let s = build_coupled_hamiltonian(p1, p2, cav, g_mhz)?;
        simulate_cnot(&s, None, opts)
    };
    let mut cav = c.clone();
    let mut res = at(&cav)?;
    if !opts.fock_check {
        return Ok(res);
    }
    for escalation in 0..=opts.max_fock_escalations {
        let bigger = CavityParams { n_max: cav.n_max + 2, ..cav.clone() };
        let next = at(&bigger)?;
        let drift = (next.fidelity - res.fidelity).abs();
        res.fock_drift = Some(drift);
        if drift < FIDELITY_CONVERGENCE {
            return Ok(res);
        }
        if escalation == opts.max_fock_escalations {
            break;
        }
        log::info!("g = {g_mhz} MHz: fidelity moved by {drift:e}, escalating n_max {} -> {}", cav.n_max, bigger.n_max);
        cav = bigger;
        res = next;
    }
    log::warn!("g = {g_mhz} MHz: Fock cutoff did not converge up to n_max = {}", cav.n_max);
    res.converged = false;
    Ok(res)
}

/// Inputs shared by every sweep row.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepConfig {
    pub qubit1: SmmParams,
    pub qubit2: SmmParams,
    pub cavity: CavityParams,
    pub gate: GateOptions,
}

impl Default for SweepConfig {
    fn default() -> Self {
        let q1 = SmmParams::calibrated();
        let q2 = SmmParams { dc_shift_mhz: 40.0, ..q1.clone() };
        SweepConfig { qubit1: q1, qubit2: q2, cavity: CavityParams::default(), gate: GateOptions::default() }
    }
}

pub fn default_g_grid() -> Vec<f64> {
    (1..=10).map(|k| 5.0 * k as f64).collect()
}

#[derive(Clone, Debug)]
pub struct SweepRow {
    pub g_mhz: f64,
    pub omega_c_ghz: f64,
    pub result: std::result::Result<GateResult, String>,
}

#[derive(Clone, Debug)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// CSV with columns `g_MHz, omega_c_GHz, fidelity, infidelity, gate_time_us, leakage, converged`.
    /// Failed rows carry NaN and `converged = false`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "g_MHz,omega_c_GHz,fidelity,infidelity,gate_time_us,leakage,converged")?;
        for row in &self.rows {
            let (f, t, l, ok) = match &row.result {
                Ok(r) => (r.fidelity, r.gate_time_us, r.leakage, r.converged),
                Err(_) => (f64::NAN, f64::NAN, f64::NAN, false),
            };
            writeln!(w, "{},{},{},{},{},{},{}", sci(row.g_mhz), sci(row.omega_c_ghz), sci(f), sci(1.0 - f), sci(t), sci(l), ok)?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Array(
            self.rows
                .iter()
                .map(|row| match &row.result {
                    Ok(r) => r.to_json(),
                    Err(e) => json!({
                        "g_MHz": round_sig(row.g_mhz),
                        "omega_c_GHz": round_sig(row.omega_c_ghz),
                        "error": e,
                        "converged": false,
                    }),
                })
                .collect(),
        )
    }

    pub fn results_at(&self, omega_c_ghz: f64) -> Vec<(f64, &GateResult)> {
        self.rows
            .iter()
            .filter(|r| r.omega_c_ghz == omega_c_ghz)
            .filter_map(|r| r.result.as_ref().ok().map(|g| (r.g_mhz, g)))
            .collect()
    }
}

/// One gate per (g, ω_c), run on `jobs` threads and sorted by (ω_c, g).
/// Row failures are stored in the row.
pub fn sweep(g_list: &[f64], omega_c_list: &[f64], base: &SweepConfig, jobs: usize) -> Result<SweepTable> {
    if g_list.is_empty() || omega_c_list.is_empty() {
        return Err(Error::InvalidParameter("sweep grids must be non-empty".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    let cells: Vec<(f64, f64)> = omega_c_list.iter().flat_map(|&w| g_list.iter().map(move |&g| (w, g))).collect();
    let mut rows: Vec<SweepRow> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(w, g)| {
                let cav = CavityParams { omega_c_ghz: w, ..base.cavity.clone() };
                let result = run_gate(&base.qubit1, &base.qubit2, &cav, g, &base.gate).map_err(|e| e.to_string());
                if let Err(e) = &result {
                    log::warn!("row g = {g} MHz, omega_c = {w} GHz failed: {e}");
                }
                SweepRow { g_mhz: g, omega_c_ghz: w, result }
            })
            .collect()
    });
    rows.sort_by(|a, b| a.omega_c_ghz.total_cmp(&b.omega_c_ghz).then(a.g_mhz.total_cmp(&b.g_mhz)));
    Ok(SweepTable { rows })
}
