//! Two molecules coupled through one resonator mode.
//!
//! Composite basis `|l₁⟩ ⊗ |l₂⟩ ⊗ |n⟩` with index `((l₁·4) + l₂)(n_max+1) + n`.
//! Nuclear level `l = 0..3` is the l-th lowest level of the m_J = −6
//! manifold (m_I = 3/2 … −3/2). Matrices here are in MHz (linear), with
//! energies measured from each molecule's lowest level.

mod drive;
mod rates;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::io::Write;

use crate::format::sci;
use crate::linalg::{diag_real, eig_hermitian_aligned, kron_all, max_abs, CMatrix, Eigen};
use crate::smm::{effective_levels, SmmParams, NUCLEAR_DIM, NUCLEAR_I};
use crate::{Error, Result};

pub use drive::{drive_operator, DriveLambdas, LabFrameDrive, RotatingFrameDrive};
pub use rates::{b_eff_t, estimate_coupling, strong_coupling_check, RateBudget, DEFAULT_SENSITIVITY_PER_UV};

/// Population in the top Fock level that triggers a truncation warning.
pub const TRUNCATION_WARN: f64 = 1e-6;

/// Ladder factors `√(I(I+1) − m(m−1))` for the pairs (3/2,1/2), (1/2,−1/2), (−1/2,−3/2).
pub fn ladder_factors() -> [f64; 3] {
    let cas = NUCLEAR_I * (NUCLEAR_I + 1.0);
    let mut out = [0.0; 3];
    for (k, f) in out.iter_mut().enumerate() {
        let m = NUCLEAR_I - k as f64;
        *f = (cas - m * (m - 1.0)).sqrt();
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CavityParams {
    pub omega_c_ghz: f64,
    pub n_max: usize,
    pub q_factor: f64,
    pub v_rms_uv: f64,
}

impl Default for CavityParams {
    fn default() -> Self {
        CavityParams { omega_c_ghz: 2.3, n_max: 4, q_factor: 1e5, v_rms_uv: 20.0 }
    }
}

impl CavityParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega_c_ghz.is_finite() && self.omega_c_ghz > 0.0) {
            return Err(Error::InvalidParameter(format!("omega_c must be positive, got {} GHz", self.omega_c_ghz)));
        }
        if self.n_max < 1 {
            return Err(Error::InvalidParameter("n_max must be at least 1".into()));
        }
        if !(self.q_factor.is_finite() && self.q_factor > 0.0) {
            return Err(Error::InvalidParameter(format!("Q must be positive, got {}", self.q_factor)));
        }
        if !(self.v_rms_uv.is_finite() && self.v_rms_uv >= 0.0) {
            return Err(Error::InvalidParameter(format!("V_rms must be non-negative, got {}", self.v_rms_uv)));
        }
        Ok(())
    }

    pub fn fock_dim(&self) -> usize {
        self.n_max + 1
    }
}

/// Per-molecule couplings derived from `g ≡ √3 η A cosθ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MoleculeCoupling {
    /// Drive strength η implied by g.
    pub eta: f64,
    /// `η A cosθ` (MHz); ξ for a transition is this times its ladder factor.
    pub xi_unit_mhz: f64,
    /// `η A sinθ` (MHz).
    pub epsilon_mhz: f64,
}

fn coupling_for(p: &SmmParams, g_mhz: f64) -> Result<MoleculeCoupling> {
    let a = p.effective_a_mhz();
    let cos = p.theta.cos();
    if g_mhz == 0.0 {
        return Ok(MoleculeCoupling { eta: 0.0, xi_unit_mhz: 0.0, epsilon_mhz: 0.0 });
    }
    if cos.abs() < 1e-12 {
        return Err(Error::InvalidParameter("theta = pi/2 gives no transverse coupling for g > 0".into()));
    }
    let eta = g_mhz / (3f64.sqrt() * a * cos);
    Ok(MoleculeCoupling { eta, xi_unit_mhz: eta * a * cos, epsilon_mhz: eta * a * p.theta.sin() })
}

/// Nuclear levels (MHz above the lowest one), indexed as in the composite basis.
pub fn qubit_levels_mhz(p: &SmmParams) -> Result<[f64; NUCLEAR_DIM]> {
    let lv = effective_levels(p, p.field_t)?;
    let mut out = [0.0; NUCLEAR_DIM];
    for (slot, &m_i) in lv.m_i.iter().enumerate() {
        let k = (NUCLEAR_I - m_i).round() as usize;
        out[k] = (lv.omega_ghz[slot] - lv.omega_ghz[0]) * 1e3;
    }
    for k in 1..NUCLEAR_DIM {
        if out[k] <= out[k - 1] {
            return Err(Error::Numerical("nuclear levels are not ordered by m_I".into()));
        }
    }
    Ok(out)
}

/// Bare basis label `(l₁, l₂, n)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BareState {
    pub l1: usize,
    pub l2: usize,
    pub n: usize,
}

impl BareState {
    pub fn excitations(&self) -> usize {
        self.l1 + self.l2 + self.n
    }
}

impl std::fmt::Display for BareState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "|{}{}>|{}>", self.l1, self.l2, self.n)
    }
}

#[derive(Clone, Debug)]
pub struct CoupledSystem {
    pub p1: SmmParams,
    pub p2: SmmParams,
    pub cavity: CavityParams,
    pub g_mhz: f64,
    pub couplings: [MoleculeCoupling; 2],
    pub levels_mhz: [[f64; NUCLEAR_DIM]; 2],
    /// H0 in MHz.
    pub h0: CMatrix,
    /// Dressed energies (MHz) ascending and eigenvectors in the bare basis.
    pub dressed: Eigen,
    /// Dressed indices of |0̃0⟩, |0̃1⟩, |1̃0⟩, |1̃1⟩.
    pub logical: [usize; 4],
    /// Overlap `|⟨l₁ l₂ 0|ψ⟩|²` of each logical state.
    pub logical_overlaps: [f64; 4],
    /// Dominant bare state of every dressed state.
    pub dominant: Vec<BareState>,
    pub truncation_warning: bool,
}

impl CoupledSystem {
    pub fn dim(&self) -> usize {
        self.h0.nrows()
    }

    pub fn index(&self, s: BareState) -> usize {
        (s.l1 * NUCLEAR_DIM + s.l2) * self.cavity.fock_dim() + s.n
    }

    pub fn bare_state(&self, index: usize) -> BareState {
        let nf = self.cavity.fock_dim();
        BareState { l1: index / (NUCLEAR_DIM * nf), l2: (index / nf) % NUCLEAR_DIM, n: index % nf }
    }

    pub fn dressed_energies_mhz(&self) -> &[f64] {
        &self.dressed.values
    }

    /// `⟨a†a⟩` in dressed state `k`.
    pub fn photon_number(&self, k: usize) -> f64 {
        (0..self.dim()).map(|r| self.bare_state(r).n as f64 * self.dressed.vectors[(r, k)].norm_sqr()).sum()
    }

    /// CSV with columns `index, energy_GHz, bare_label, overlap`.
    pub fn write_dressed_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "index,energy_GHz,bare_label,overlap")?;
        for k in 0..self.dim() {
            let s = self.dominant[k];
            let ov = self.dressed.vectors[(self.index(s), k)].norm_sqr();
            writeln!(w, "{},{},{},{}", k, sci(self.dressed.values[k] * 1e-3), s, sci(ov))?;
        }
        Ok(())
    }
}

fn annihilation(nf: usize) -> CMatrix {
    let mut a = CMatrix::zeros(nf, nf);
    for n in 1..nf {
        a[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    a
}

/// `Σ_j d_j |j⟩⟨j+1|` on one nuclear space.
pub(crate) fn nuclear_lowering() -> CMatrix {
    let d = ladder_factors();
    let mut m = CMatrix::zeros(NUCLEAR_DIM, NUCLEAR_DIM);
    for j in 0..NUCLEAR_DIM - 1 {
        m[(j, j + 1)] = C64::new(d[j], 0.0);
    }
    m
}

/// Builds H0 of the two molecules and the resonator, in the rotating-wave
/// form `ω_c a†a + Σ ω_{n,j} + (a + a†) Σ ε_n + Σ ξ (a† σ⁻ + a σ⁺)`, and
/// diagonalizes it.
pub fn build_coupled_hamiltonian(p1: &SmmParams, p2: &SmmParams, c: &CavityParams, g_mhz: f64) -> Result<CoupledSystem> {
    p1.validate()?;
    p2.validate()?;
    c.validate()?;
    if !(g_mhz.is_finite() && g_mhz >= 0.0) {
        return Err(Error::InvalidParameter(format!("g must be non-negative, got {g_mhz} MHz")));
    }
    let nf = c.fock_dim();
    let levels = [qubit_levels_mhz(p1)?, qubit_levels_mhz(p2)?];
    let couplings = [coupling_for(p1, g_mhz)?, coupling_for(p2, g_mhz)?];

    let id4 = CMatrix::identity(NUCLEAR_DIM, NUCLEAR_DIM);
    let idf = CMatrix::identity(nf, nf);
    let a = annihilation(nf);
    let ad = a.adjoint();
    let low = nuclear_lowering();
    let omega_c = c.omega_c_ghz * 1e3;

    let mut h0 = kron_all(&[&id4, &id4, &(&ad * &a)]).scale(omega_c);
    h0 += kron_all(&[&diag_real(&levels[0]), &id4, &idf]);
    h0 += kron_all(&[&id4, &diag_real(&levels[1]), &idf]);
    let eps_total = couplings[0].epsilon_mhz + couplings[1].epsilon_mhz;
    h0 += kron_all(&[&id4, &id4, &(&a + &ad)]).scale(eps_total);
    for (q, cp) in couplings.iter().enumerate() {
        let lower = if q == 0 { kron_all(&[&low, &id4, &idf]) } else { kron_all(&[&id4, &low, &idf]) };
        // a† |j⟩⟨j+1| and its conjugate a |j+1⟩⟨j|
        let jc = &lower * kron_all(&[&id4, &id4, &ad]);
        h0 += (&jc + jc.adjoint()).scale(cp.xi_unit_mhz);
    }

    let scale = max_abs(&h0).max(1.0);
    let dressed = eig_hermitian_aligned(&h0, 1e-12 * scale)?;
    let dim = h0.nrows();
    let bare = |s: BareState| (s.l1 * NUCLEAR_DIM + s.l2) * nf + s.n;
    let unbare = |r: usize| BareState { l1: r / (NUCLEAR_DIM * nf), l2: (r / nf) % NUCLEAR_DIM, n: r % nf };

    let dominant: Vec<BareState> = (0..dim)
        .map(|k| {
            let col = dressed.vectors.column(k);
            let r = (0..dim).max_by(|&x, &y| col[x].norm_sqr().total_cmp(&col[y].norm_sqr()).then(y.cmp(&x))).unwrap();
            unbare(r)
        })
        .collect();

    let mut logical = [0usize; 4];
    let mut overlaps = [0.0; 4];
    for (slot, (l1, l2)) in [(0, 0), (0, 1), (1, 0), (1, 1)].into_iter().enumerate() {
        let r = bare(BareState { l1, l2, n: 0 });
        let (k, ov) = (0..dim)
            .map(|k| (k, dressed.vectors[(r, k)].norm_sqr()))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap();
        if ov <= 0.5 {
            return Err(Error::LogicalIdentification { index: slot, overlap: ov });
        }
        logical[slot] = k;
        overlaps[slot] = ov;
    }

    let top: f64 = logical
        .iter()
        .map(|&k| {
            (0..NUCLEAR_DIM * NUCLEAR_DIM)
                .map(|q| dressed.vectors[(q * nf + c.n_max, k)].norm_sqr())
                .sum::<f64>()
        })
        .fold(0.0, f64::max);
    let truncation_warning = top > TRUNCATION_WARN;
    if truncation_warning {
        log::warn!("Fock cutoff n_max = {} leaves {top:e} population in the top level", c.n_max);
    }

    Ok(CoupledSystem {
        p1: p1.clone(),
        p2: p2.clone(),
        cavity: c.clone(),
        g_mhz,
        couplings,
        levels_mhz: levels,
        h0,
        dressed,
        logical,
        logical_overlaps: overlaps,
        dominant,
        truncation_warning,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitionFrequencies {
    /// `E(0̃1) − E(0̃0)` (GHz).
    pub f_target_ghz: f64,
    /// `E(1̃1) − E(1̃0)` (GHz).
    pub f_unwanted_ghz: f64,
    /// `f_unwanted − f_target` (MHz, signed).
    pub delta_mhz: f64,
}

pub fn transition_frequencies(s: &CoupledSystem) -> TransitionFrequencies {
    let e = &s.dressed.values;
    let [k00, k01, k10, k11] = s.logical;
    let target = e[k01] - e[k00];
    let unwanted = e[k11] - e[k10];
    TransitionFrequencies {
        f_target_ghz: target * 1e-3,
        f_unwanted_ghz: unwanted * 1e-3,
        delta_mhz: unwanted - target,
    }
}
