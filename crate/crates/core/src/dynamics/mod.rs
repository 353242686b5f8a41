//! Time-dependent Schrödinger propagation.
//!
//! Generators return `H(t)` in rad/μs with `t` in μs. Each step applies
//! `exp(−i H(t_mid) dt)`, so every propagator is unitary to round-off; the
//! step count is doubled until two successive runs agree to `tol`.

mod rabi;

use num_complex::Complex64 as C64;

use crate::linalg::{max_diff, nearest_unitary, propagator_step, unitarity_error, CMatrix, CVector};
use crate::{Error, Result};

pub use rabi::{
    oscillation_period, rabi_frequency, rabi_period, rabi_simulation, transverse_amplitude, RabiOptions,
    RabiTrace,
};

/// Maximum number of step doublings.
pub const MAX_REFINEMENTS: u32 = 6;

/// A time-dependent Hermitian generator.
pub trait Generator: Sync {
    fn dim(&self) -> usize;

    /// `H(t)` in rad/μs.
    fn hamiltonian(&self, t: f64) -> CMatrix;

    /// Exact period of the time dependence, when there is one. Propagation
    /// reuses step propagators across periods whenever the step divides it.
    fn period(&self) -> Option<f64> {
        None
    }
}

/// Wraps a closure as a [`Generator`].
pub struct FnGenerator<F> {
    pub dim: usize,
    pub f: F,
    pub period: Option<f64>,
}

impl<F> FnGenerator<F>
where
    F: Fn(f64) -> CMatrix + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        FnGenerator { dim, f, period: None }
    }
}

impl<F> Generator for FnGenerator<F>
where
    F: Fn(f64) -> CMatrix + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn hamiltonian(&self, t: f64) -> CMatrix {
        (self.f)(t)
    }

    fn period(&self) -> Option<f64> {
        self.period
    }
}

/// Time-independent generator.
pub struct ConstantGenerator(pub CMatrix);

impl Generator for ConstantGenerator {
    fn dim(&self) -> usize {
        self.0.nrows()
    }

    fn hamiltonian(&self, _t: f64) -> CMatrix {
        self.0.clone()
    }
}

/// Uniform stepping grid. The propagator is recorded at `t0`, after every
/// `record_stride` steps and at `t1`; the stride doubles with the step count
/// so recorded times do not move under refinement.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeGrid {
    pub t0: f64,
    pub t1: f64,
    pub n_steps: usize,
    /// Enables Richardson refinement.
    pub adaptive: bool,
    pub record_stride: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, t1: f64, n_steps: usize) -> Self {
        TimeGrid { t0, t1, n_steps, adaptive: true, record_stride: n_steps.max(1) }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.record_stride = stride;
        self
    }

    pub fn fixed(mut self) -> Self {
        self.adaptive = false;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t0.is_finite() && self.t1.is_finite() && self.t1 > self.t0) {
            return Err(Error::InvalidParameter(format!("time grid needs t1 > t0, got [{}, {}]", self.t0, self.t1)));
        }
        if self.n_steps == 0 || self.record_stride == 0 {
            return Err(Error::InvalidParameter("time grid needs at least one step and a positive stride".into()));
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        (self.t1 - self.t0) / self.n_steps as f64
    }

    fn refined(&self) -> Self {
        TimeGrid { n_steps: 2 * self.n_steps, record_stride: 2 * self.record_stride, ..self.clone() }
    }
}

#[derive(Clone, Debug)]
pub struct EvolutionRecord {
    pub times: Vec<f64>,
    pub unitaries: Vec<CMatrix>,
    /// Filled by [`EvolutionRecord::with_populations`].
    pub populations: Option<Vec<Vec<f64>>>,
    pub n_steps: usize,
    pub refinements: u32,
    /// Max-norm change of the final propagator under the last doubling.
    pub disagreement: f64,
}

impl EvolutionRecord {
    pub fn final_unitary(&self) -> &CMatrix {
        self.unitaries.last().expect("record is never empty")
    }

    /// Largest `max|U†U − I|` over the record.
    pub fn max_unitarity_error(&self) -> f64 {
        self.unitaries.iter().map(unitarity_error).fold(0.0, f64::max)
    }

    /// Populates `populations` with `|⟨k|U(t)|ψ₀⟩|²`.
    pub fn with_populations(mut self, psi0: &CVector) -> Self {
        let pops = self
            .unitaries
            .iter()
            .map(|u| (u * psi0).iter().map(|z| z.norm_sqr()).collect())
            .collect();
        self.populations = Some(pops);
        self
    }
}

fn steps_per_period(grid: &TimeGrid, period: f64) -> Option<usize> {
    let m = period / grid.dt();
    let rounded = m.round();
    (rounded >= 1.0 && (m - rounded).abs() < 1e-9 * m.max(1.0)).then_some(rounded as usize)
}

fn run_once<G: Generator + ?Sized>(gen: &G, grid: &TimeGrid) -> Result<EvolutionRecord> {
    let n = gen.dim();
    let dt = grid.dt();
    let mut u = CMatrix::identity(n, n);
    let mut times = vec![grid.t0];
    let mut unitaries = vec![u.clone()];

    let cached: Option<Vec<CMatrix>> = match gen.period().and_then(|p| steps_per_period(grid, p)) {
        Some(m) if m < grid.n_steps => Some(
            (0..m)
                .map(|k| propagator_step(&gen.hamiltonian(grid.t0 + (k as f64 + 0.5) * dt), dt))
                .collect::<Result<_>>()?,
        ),
        _ => None,
    };

    match &cached {
        Some(steps) if grid.record_stride.is_multiple_of(steps.len()) => {
            let m = steps.len();
            let period_u = nearest_unitary(&steps.iter().fold(CMatrix::identity(n, n), |acc, s| s * acc))?;
            let jump = nearest_unitary(
                &(0..grid.record_stride / m).fold(CMatrix::identity(n, n), |acc, _| &period_u * acc),
            )?;
            let mut done = 0;
            while done + grid.record_stride <= grid.n_steps {
                u = &jump * &u;
                done += grid.record_stride;
                times.push(grid.t0 + done as f64 * dt);
                unitaries.push(u.clone());
            }
            for k in done..grid.n_steps {
                u = &steps[k % m] * &u;
            }
            if done < grid.n_steps {
                times.push(grid.t1);
                unitaries.push(u.clone());
            }
        }
        _ => {
            for k in 0..grid.n_steps {
                let step = match &cached {
                    Some(steps) => steps[k % steps.len()].clone(),
                    None => propagator_step(&gen.hamiltonian(grid.t0 + (k as f64 + 0.5) * dt), dt)?,
                };
                u = step * &u;
                if (k + 1) % grid.record_stride == 0 || k + 1 == grid.n_steps {
                    times.push(grid.t0 + (k + 1) as f64 * dt);
                    unitaries.push(u.clone());
                }
            }
        }
    }
    if let Some(t) = times.last_mut() {
        *t = grid.t1;
    }
    Ok(EvolutionRecord {
        times,
        unitaries,
        populations: None,
        n_steps: grid.n_steps,
        refinements: 0,
        disagreement: f64::NAN,
    })
}

/// Propagates `U(t)` from the identity at `grid.t0`.
///
/// With `grid.adaptive` the step count doubles until the final propagator
/// changes by less than `tol` (max-norm), at most [`MAX_REFINEMENTS`] times.
pub fn propagate<G: Generator + ?Sized>(gen: &G, grid: &TimeGrid, tol: f64) -> Result<EvolutionRecord> {
    grid.validate()?;
    if !(tol > 1e-14 && tol < 1e-3) {
        return Err(Error::InvalidParameter(format!("tolerance must lie in (1e-14, 1e-3), got {tol}")));
    }
    let mut current = run_once(gen, grid)?;
    if !grid.adaptive {
        return Ok(current);
    }
    let mut g = grid.clone();
    for r in 1..=MAX_REFINEMENTS {
        g = g.refined();
        let mut next = run_once(gen, &g)?;
        let diff = max_diff(current.final_unitary(), next.final_unitary());
        next.refinements = r;
        next.disagreement = diff;
        log::debug!("refinement {r}: {} steps, change {diff:e}", g.n_steps);
        if diff < tol {
            return Ok(next);
        }
        current = next;
    }
    Err(Error::NonConvergence { refinements: MAX_REFINEMENTS, disagreement: current.disagreement })
}

fn check_frame(rec: &EvolutionRecord, h0: &CMatrix) -> Result<()> {
    let n = rec.final_unitary().nrows();
    if h0.shape() != (n, n) {
        return Err(Error::Shape(format!("frame generator is {:?}, propagators are {n}x{n}", h0.shape())));
    }
    Ok(())
}

fn frame_change(rec: &EvolutionRecord, h0: &CMatrix, sign: f64) -> Result<EvolutionRecord> {
    check_frame(rec, h0)?;
    let eig = crate::linalg::eig_hermitian(h0)?;
    let t0 = rec.times[0];
    let unitaries = rec
        .times
        .iter()
        .zip(&rec.unitaries)
        .map(|(&t, u)| eig.apply(|l| C64::from_polar(1.0, sign * l * (t - t0))) * u)
        .collect();
    Ok(EvolutionRecord { unitaries, populations: None, ..rec.clone() })
}

/// `U_I(t) = exp(+i H0 (t − t0)) U(t)` for time-independent `h0` (rad/μs).
pub fn to_interaction_picture(rec: &EvolutionRecord, h0: &CMatrix) -> Result<EvolutionRecord> {
    frame_change(rec, h0, 1.0)
}

/// Inverse of [`to_interaction_picture`].
pub fn from_interaction_picture(rec: &EvolutionRecord, h0: &CMatrix) -> Result<EvolutionRecord> {
    frame_change(rec, h0, -1.0)
}

/// `exp(−i H t)` for a constant generator, in one eigendecomposition.
pub fn constant_propagator(h: &CMatrix, t: f64) -> Result<CMatrix> {
    propagator_step(h, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::diag_real;

    fn sigma_x() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0)])
    }

    #[test]
    fn zero_generator() {
        let g = ConstantGenerator(CMatrix::zeros(3, 3));
        let rec = propagate(&g, &TimeGrid::new(0.0, 1.0, 4).with_stride(1), 1e-10).unwrap();
        assert_eq!(rec.times.len(), rec.unitaries.len());
        for u in &rec.unitaries {
            assert!(max_diff(u, &CMatrix::identity(3, 3)) < 1e-15);
        }
    }

    #[test]
    fn constant_generator_matches_closed_form() {
        let h = CMatrix::from_row_slice(
            2,
            2,
            &[C64::new(1.0, 0.0), C64::new(0.3, -0.2), C64::new(0.3, 0.2), C64::new(-0.5, 0.0)],
        );
        let rec = propagate(&ConstantGenerator(h.clone()), &TimeGrid::new(0.0, 2.0, 8), 1e-10).unwrap();
        let exact = constant_propagator(&h, 2.0).unwrap();
        assert!(max_diff(rec.final_unitary(), &exact) < 1e-11);
    }

    #[test]
    fn resonant_pi_pulse() {
        // Rotating-frame drive Ω σx/2: complete transfer at t = π/Ω.
        let omega = 3.0;
        let gen = FnGenerator::new(2, |_t| sigma_x().scale(omega / 2.0));
        let t = std::f64::consts::PI / omega;
        let rec = propagate(&gen, &TimeGrid::new(0.0, t, 16), 1e-10).unwrap();
        let psi0 = CVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
        let rec = rec.with_populations(&psi0);
        let last = rec.populations.unwrap().pop().unwrap();
        assert!((last[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn second_order_convergence() {
        // H(t) = σz + t σx, reference by a very fine run.
        let sz = diag_real(&[1.0, -1.0]);
        let gen = FnGenerator::new(2, move |t| &sz + sigma_x().scale(t));
        let reference = propagate(&gen, &TimeGrid::new(0.0, 1.0, 1 << 14).fixed(), 1e-10).unwrap();
        let e1 = max_diff(
            propagate(&gen, &TimeGrid::new(0.0, 1.0, 64).fixed(), 1e-10).unwrap().final_unitary(),
            reference.final_unitary(),
        );
        let e2 = max_diff(
            propagate(&gen, &TimeGrid::new(0.0, 1.0, 128).fixed(), 1e-10).unwrap().final_unitary(),
            reference.final_unitary(),
        );
        let ratio = e1 / e2;
        assert!((ratio - 4.0).abs() < 0.2, "{ratio}");
    }

    #[test]
    fn periodic_cache_matches_plain_stepping() {
        let sz = diag_real(&[2.0, -2.0]);
        let w = 5.0;
        let make = |period: Option<f64>| FnGenerator {
            dim: 2,
            f: {
                let sz = sz.clone();
                move |t: f64| &sz + sigma_x().scale((w * t).cos())
            },
            period,
        };
        let period = 2.0 * std::f64::consts::PI / w;
        let grid = TimeGrid::new(0.0, 7.0 * period, 7 * 40).with_stride(40).fixed();
        let plain = propagate(&make(None), &grid, 1e-10).unwrap();
        let cached = propagate(&make(Some(period)), &grid, 1e-10).unwrap();
        assert_eq!(plain.times.len(), 8);
        assert_eq!(cached.times.len(), 8);
        for (a, b) in plain.unitaries.iter().zip(&cached.unitaries) {
            assert!(max_diff(a, b) < 1e-12);
        }
        let odd = grid.clone().with_stride(3);
        let plain = propagate(&make(None), &odd, 1e-10).unwrap();
        let cached = propagate(&make(Some(period)), &odd, 1e-10).unwrap();
        assert!(max_diff(plain.final_unitary(), cached.final_unitary()) < 1e-12);
    }

    #[test]
    fn non_convergence_is_reported() {
        let gen = FnGenerator::new(2, |t: f64| sigma_x().scale((400.0 * t).cos() * 50.0));
        let err = propagate(&gen, &TimeGrid::new(0.0, 1.0, 2), 1e-12).unwrap_err();
        assert!(matches!(err, Error::NonConvergence { refinements: 6, .. }));
    }

    #[test]
    fn grid_and_tol_validation() {
        let g = ConstantGenerator(CMatrix::zeros(2, 2));
        assert!(propagate(&g, &TimeGrid::new(1.0, 0.0, 4), 1e-9).is_err());
        assert!(propagate(&g, &TimeGrid::new(0.0, 1.0, 0), 1e-9).is_err());
        assert!(propagate(&g, &TimeGrid::new(0.0, 1.0, 4), 1e-2).is_err());
    }

    #[test]
    fn interaction_picture() {
        let h0 = diag_real(&[0.7, -0.2, 1.1]);
        let rec = propagate(&ConstantGenerator(h0.clone()), &TimeGrid::new(0.0, 1.0, 10).with_stride(2), 1e-10).unwrap();
        let ui = to_interaction_picture(&rec, &h0).unwrap();
        for u in &ui.unitaries {
            assert!(max_diff(u, &CMatrix::identity(3, 3)) < 1e-12);
        }
        let same = to_interaction_picture(&rec, &CMatrix::zeros(3, 3)).unwrap();
        assert!(max_diff(same.final_unitary(), rec.final_unitary()) < 1e-15);
        let back = from_interaction_picture(&ui, &h0).unwrap();
        for (a, b) in back.unitaries.iter().zip(&rec.unitaries) {
            assert!(max_diff(a, b) < 1e-12);
        }
        assert!(to_interaction_picture(&rec, &CMatrix::zeros(2, 2)).is_err());
    }
}
