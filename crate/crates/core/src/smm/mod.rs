//! Single-molecule Hamiltonian of TbPc₂: the electronic {m_J = ±6} doublet
//! coupled to the I = 3/2 terbium nucleus.
//!
//! Energies returned by this module are linear frequencies E/h in GHz
//! unless a name says otherwise. Product basis index is `e·4 + n` where `e`
//! runs over electronic m_J (descending) and `n` over m_I = 3/2 … −3/2.

mod ligand;
mod spectrum;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::linalg::{diag_real, eig_hermitian_aligned, kron, CMatrix, Eigen};
use crate::spin::{spin_operators, spin_operators_for, Spin};
use crate::{Error, Result};

pub use ligand::{stevens_operator, LigandField};
pub use spectrum::{
    find_avoided_crossings, pair_gap_ghz, sweep_spectrum, AvoidedCrossing, LevelDiagram, LevelLabel,
};

/// Fixed physical constants, expressed as frequencies.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhysicalConstants {
    pub mu_b_over_h_ghz_per_t: f64,
    pub mu_n_over_h_mhz_per_t: f64,
    pub kb_over_h_ghz_per_k: f64,
}

pub const CONSTANTS: PhysicalConstants = PhysicalConstants {
    mu_b_over_h_ghz_per_t: 13.9962,
    mu_n_over_h_mhz_per_t: 7.6226,
    kb_over_h_ghz_per_k: 20.8366,
};

/// Total electronic angular momentum of the Tb³⁺ ground multiplet.
pub const ELECTRONIC_J: f64 = 6.0;
/// Terbium nuclear spin.
pub const NUCLEAR_I: f64 = 1.5;
/// Nuclear dimension `2I + 1`.
pub const NUCLEAR_DIM: usize = 4;

/// Hyperfine constant 24.9 mK expressed in MHz.
pub fn default_hyperfine_mhz() -> f64 {
    24.9 * CONSTANTS.kb_over_h_ghz_per_k
}

/// Splittings (GHz) of the m_J = −6 manifold used to calibrate A and P.
pub const REFERENCE_SPLITTINGS_GHZ: [f64; 3] = [2.54, 3.09, 3.63];

/// Parameters of one molecule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmmParams {
    /// Hyperfine constant A (MHz).
    pub a_mhz: f64,
    /// Quadrupole constant P (MHz).
    pub p_mhz: f64,
    pub g_l: f64,
    pub g_n: f64,
    /// Hyperfine anisotropy angle θ (rad).
    pub theta: f64,
    /// Dimensionless drive strength η.
    pub eta: f64,
    /// Electronic tunnel splitting δ_t between m_J = ±6 (MHz).
    pub delta_t_mhz: f64,
    /// Relative change dA/A per mV of gate voltage.
    pub stark_per_mv: f64,
    /// Additive shift of the lowest nuclear transition (MHz).
    pub dc_shift_mhz: f64,
    /// Static field B_z at which the qubit is operated (T).
    pub field_t: f64,
    /// Full J = 6 ligand field. `None` selects the effective doublet model.
    #[serde(default)]
    pub ligand: Option<LigandField>,
}

impl Default for SmmParams {
    fn default() -> Self {
        SmmParams {
            a_mhz: default_hyperfine_mhz(),
            p_mhz: 272.5,
            g_l: 1.5,
            g_n: 1.354,
            theta: PI / 6.0,
            eta: 1e-3,
            // 1 μK
            delta_t_mhz: 1e-6 * CONSTANTS.kb_over_h_ghz_per_k * 1e3,
            stark_per_mv: 2.3e-3 / 16.0,
            dc_shift_mhz: 0.0,
            field_t: 0.1,
            ligand: None,
        }
    }
}

impl SmmParams {
    /// Defaults with A and P calibrated from [`REFERENCE_SPLITTINGS_GHZ`].
    pub fn calibrated() -> Self {
        let [n1, n2, n3] = REFERENCE_SPLITTINGS_GHZ;
        let cal = calibrate_hyperfine(n1, n2, n3).expect("reference splittings are consistent");
        SmmParams { a_mhz: cal.a_mhz, p_mhz: cal.p_mhz, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("a_mhz", self.a_mhz),
            ("p_mhz", self.p_mhz),
            ("g_l", self.g_l),
            ("g_n", self.g_n),
            ("theta", self.theta),
            ("eta", self.eta),
            ("delta_t_mhz", self.delta_t_mhz),
            ("stark_per_mv", self.stark_per_mv),
            ("dc_shift_mhz", self.dc_shift_mhz),
            ("field_t", self.field_t),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be finite, got {v}")));
            }
        }
        if self.a_mhz <= 0.0 {
            return Err(Error::InvalidParameter(format!("A must be positive, got {} MHz", self.a_mhz)));
        }
        if !(0.0..=PI / 2.0 + 1e-12).contains(&self.theta) {
            return Err(Error::InvalidParameter(format!("theta must lie in [0, pi/2], got {}", self.theta)));
        }
        if self.eta < 0.0 {
            return Err(Error::InvalidParameter(format!("eta must be non-negative, got {}", self.eta)));
        }
        if self.delta_t_mhz < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "tunnel splitting must be non-negative, got {} MHz",
                self.delta_t_mhz
            )));
        }
        if self.effective_a_mhz() <= 0.0 {
            return Err(Error::InvalidParameter("dc shift drives the hyperfine constant negative".into()));
        }
        if let Some(lf) = &self.ligand {
            lf.validate()?;
        }
        Ok(())
    }

    /// A after folding in the dc shift: ν₁ = 6A − 2P moves by `dc_shift_mhz`.
    pub fn effective_a_mhz(&self) -> f64 {
        self.a_mhz + self.dc_shift_mhz / 6.0
    }

    /// Electronic m_J values of the model basis, descending.
    pub fn electronic_m_values(&self) -> Vec<f64> {
        match self.ligand {
            None => vec![ELECTRONIC_J, -ELECTRONIC_J],
            Some(_) => Spin::from_twice(12).m_values(),
        }
    }

    /// Dimension of the single-molecule Hilbert space.
    pub fn dim(&self) -> usize {
        self.electronic_m_values().len() * NUCLEAR_DIM
    }

    /// Product-basis index of `(m_J, m_I)`.
    pub fn product_index(&self, m_j: f64, m_i: f64) -> Option<usize> {
        let e = self.electronic_m_values().iter().position(|&m| (m - m_j).abs() < 1e-9)?;
        let n = Spin::new(NUCLEAR_I).ok()?.index_of(m_i)?;
        Some(e * NUCLEAR_DIM + n)
    }

    /// `(m_J, m_I)` of a product-basis index.
    pub fn product_label(&self, index: usize) -> LevelLabel {
        let ms = self.electronic_m_values();
        LevelLabel { m_j: ms[index / NUCLEAR_DIM], m_i: NUCLEAR_I - (index % NUCLEAR_DIM) as f64 }
    }
}

/// Result of inverting the hyperfine level spacings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperfineCalibration {
    pub a_mhz: f64,
    pub p_mhz: f64,
}

/// Recovers `(A, P)` from the three m_J = −6 splittings (GHz).
///
/// In this model `ν₁ + ν₃ = 2ν₂`; triples that break the identity by more
/// than 1% of ν₂ are rejected.
pub fn calibrate_hyperfine(nu1: f64, nu2: f64, nu3: f64) -> Result<HyperfineCalibration> {
    if ![nu1, nu2, nu3].iter().all(|v| v.is_finite() && *v > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "splittings must be positive and finite, got ({nu1}, {nu2}, {nu3})"
        )));
    }
    let residual = nu1 + nu3 - 2.0 * nu2;
    if residual.abs() > 0.01 * nu2 {
        return Err(Error::InconsistentSplittings { residual_ghz: residual });
    }
    Ok(HyperfineCalibration { a_mhz: nu2 / 6.0 * 1e3, p_mhz: (nu3 - nu1) / 4.0 * 1e3 })
}

/// Single-molecule Hamiltonian (GHz) at field `b` (T).
///
/// Effective model: `g_l μ_B B_z J_z + A J_z I_z + P (I_z² − I(I+1)/3)
/// + (δ_t/2)(|+6⟩⟨−6| + h.c.) ⊗ 1`. Transverse field components have no
/// matrix elements inside the doublet.
///
/// With a ligand field the full J = 6 space is used: `g_l μ_B J·B + A J·I +
/// P (I_z² − I(I+1)/3) + Σ B_k^q O_k^q`.
pub fn build_full_hamiltonian(p: &SmmParams, b: [f64; 3]) -> Result<CMatrix> {
    if b.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter(format!("field must be finite, got {b:?}")));
    }
    let nuc = spin_operators(NUCLEAR_I)?;
    let a = p.effective_a_mhz() * 1e-3;
    let quad = p.p_mhz * 1e-3;
    let zeeman = p.g_l * CONSTANTS.mu_b_over_h_ghz_per_t;
    let iz2 = &nuc.jz * &nuc.jz - nuc.identity().scale(nuc.spin.casimir() / 3.0);

    match &p.ligand {
        None => {
            let jz = diag_real(&[ELECTRONIC_J, -ELECTRONIC_J]);
            let e_id = CMatrix::identity(2, 2);
            let mut sx = CMatrix::zeros(2, 2);
            sx[(0, 1)] = C64::new(1.0, 0.0);
            sx[(1, 0)] = C64::new(1.0, 0.0);
            let n_id = nuc.identity();
            let h = kron(&jz, &n_id).scale(zeeman * b[2])
                + kron(&jz, &nuc.jz).scale(a)
                + kron(&e_id, &iz2).scale(quad)
                + kron(&sx, &n_id).scale(0.5 * p.delta_t_mhz * 1e-3);
            Ok(h)
        }
        Some(lf) => {
            let el = spin_operators_for(Spin::from_twice(12));
            let n_id = nuc.identity();
            let e_id = el.identity();
            let zeeman_op = el.jx.scale(b[0]) + el.jy.scale(b[1]) + el.jz.scale(b[2]);
            let mut h = kron(&zeeman_op, &n_id).scale(zeeman)
                + (kron(&el.jx, &nuc.jx) + kron(&el.jy, &nuc.jy) + kron(&el.jz, &nuc.jz)).scale(a)
                + kron(&e_id, &iz2).scale(quad);
            h += kron(&lf.operator(&el), &n_id).scale(1e-3);
            Ok(h)
        }
    }
}

/// Eigendecomposition of the molecule Hamiltonian with degenerate levels
/// aligned to the product basis.
pub fn diagonalize(p: &SmmParams, b_z: f64) -> Result<Eigen> {
    let h = build_full_hamiltonian(p, [0.0, 0.0, b_z])?;
    let scale = crate::linalg::max_abs(&h).max(1.0);
    eig_hermitian_aligned(&h, 1e-12 * scale)
}

/// The four m_J = −6 nuclear levels at one field value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectiveLevels {
    pub b_z_t: f64,
    /// Ascending energies ω₁..ω₄ (GHz).
    pub omega_ghz: [f64; 4],
    /// Dominant m_I of each level.
    pub m_i: [f64; 4],
    /// Set when `b_z_t` lies within three gap widths of an anticrossing.
    pub near_crossing: bool,
}

impl EffectiveLevels {
    /// `[ν₁, ν₂, ν₃]` in GHz.
    pub fn splittings_ghz(&self) -> [f64; 3] {
        let w = &self.omega_ghz;
        [w[1] - w[0], w[2] - w[1], w[3] - w[2]]
    }
}

/// Weight of each eigenvector on the m_J = −6 manifold.
fn manifold_weights(p: &SmmParams, eig: &Eigen, m_j: f64) -> Vec<f64> {
    let cols: Vec<usize> = (0..NUCLEAR_DIM)
        .map(|n| p.product_index(m_j, NUCLEAR_I - n as f64).expect("valid product label"))
        .collect();
    (0..eig.dim())
        .map(|k| cols.iter().map(|&r| eig.vectors[(r, k)].norm_sqr()).sum())
        .collect()
}

/// Levels of the m_J = −6 manifold at `b_z` (T).
pub fn effective_levels(p: &SmmParams, b_z: f64) -> Result<EffectiveLevels> {
    p.validate()?;
    let eig = diagonalize(p, b_z)?;
    let weights = manifold_weights(p, &eig, -ELECTRONIC_J);
    let mut idx: Vec<usize> = (0..eig.dim()).collect();
    idx.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]));
    let mut chosen: Vec<usize> = idx[..NUCLEAR_DIM].to_vec();
    chosen.sort_by(|&a, &b| eig.values[a].total_cmp(&eig.values[b]));

    let mut omega = [0.0; 4];
    let mut m_i = [0.0; 4];
    for (slot, &k) in chosen.iter().enumerate() {
        omega[slot] = eig.values[k];
        let best = (0..NUCLEAR_DIM)
            .max_by(|&x, &y| {
                let wx = eig.vectors[(p.product_index(-ELECTRONIC_J, NUCLEAR_I - x as f64).unwrap(), k)].norm_sqr();
                let wy = eig.vectors[(p.product_index(-ELECTRONIC_J, NUCLEAR_I - y as f64).unwrap(), k)].norm_sqr();
                wx.total_cmp(&wy).then(y.cmp(&x))
            })
            .unwrap();
        m_i[slot] = NUCLEAR_I - best as f64;
    }
    let near_crossing = near_crossing(p, b_z)?;
    if near_crossing {
        log::warn!("B_z = {b_z} T lies within three gap widths of an avoided crossing");
    }
    Ok(EffectiveLevels { b_z_t: b_z, omega_ghz: omega, m_i, near_crossing })
}

/// Field (T) where the diagonal energies of `(+6, m_I)` and `(−6, m_I)` meet,
/// and the slope difference (GHz/T) of the two branches.
pub fn predicted_crossing(p: &SmmParams, m_i: f64) -> Result<(f64, f64)> {
    let h0 = build_full_hamiltonian(p, [0.0; 3])?;
    let h1 = build_full_hamiltonian(p, [0.0, 0.0, 1.0])?;
    let up = p.product_index(ELECTRONIC_J, m_i).ok_or_else(|| Error::InvalidParameter(format!("m_I = {m_i}")))?;
    let down = p.product_index(-ELECTRONIC_J, m_i).unwrap();
    let d0 = h0[(up, up)].re - h0[(down, down)].re;
    let slope = (h1[(up, up)].re - h1[(down, down)].re) - d0;
    Ok((-d0 / slope, slope))
}

fn near_crossing(p: &SmmParams, b_z: f64) -> Result<bool> {
    for n in 0..NUCLEAR_DIM {
        let m_i = NUCLEAR_I - n as f64;
        let (b_c, slope) = predicted_crossing(p, m_i)?;
        let gap = pair_gap_ghz(p, b_c, m_i)?;
        let width = gap / slope.abs();
        if (b_z - b_c).abs() <= 3.0 * width + 1e-12 {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Drive operator `η A (sinθ I_z + cosθ I_x)` on the nuclear space, in rad/μs.
pub fn control_operator(p: &SmmParams) -> CMatrix {
    let nuc = spin_operators(NUCLEAR_I).expect("I = 3/2");
    let a_ang = 2.0 * PI * p.effective_a_mhz();
    (nuc.jz.scale(p.theta.sin()) + nuc.jx.scale(p.theta.cos())).scale(p.eta * a_ang)
}

/// `H_c(t) = η A cos(ω_p t)(sinθ I_z + cosθ I_x)` in rad/μs, with `t` in μs
/// and `omega_p` in rad/μs.
pub fn control_hamiltonian(p: &SmmParams, t: f64, omega_p: f64) -> CMatrix {
    control_operator(p).scale((omega_p * t).cos())
}

/// Nuclear operator `Σ_α I_α A_{αz} m_J` obtained by projecting `I·A·J`
/// onto a fixed m_J. `tensor` is in MHz, result in MHz.
pub fn projected_hyperfine(tensor: [[f64; 3]; 3], m_j: f64) -> CMatrix {
    let nuc = spin_operators(NUCLEAR_I).expect("I = 3/2");
    (nuc.jx.scale(tensor[0][2]) + nuc.jy.scale(tensor[1][2]) + nuc.jz.scale(tensor[2][2])).scale(m_j)
}

/// Anisotropy angle of a tensor with `A_zz = a` and off-diagonal `A_xz`.
pub fn theta_from_tensor(a: f64, a_xz: f64) -> f64 {
    a.atan2(a_xz)
}

/// Change of ν₁ (MHz) when A is rescaled by `1 + da_over_a` with P fixed.
pub fn stark_shift(p: &SmmParams, da_over_a: f64) -> Result<f64> {
    if !(da_over_a.abs() < 0.1) {
        return Err(Error::InvalidParameter(format!("|dA/A| must be below 0.1, got {da_over_a}")));
    }
    if da_over_a == 0.0 {
        return Ok(0.0);
    }
    let base = effective_levels(p, p.field_t)?.splittings_ghz()[0];
    let shifted = SmmParams { a_mhz: p.a_mhz * (1.0 + da_over_a), ..p.clone() };
    let moved = effective_levels(&shifted, p.field_t)?.splittings_ghz()[0];
    Ok((moved - base) * 1e3)
}

/// [`stark_shift`] for a gate voltage in mV.
pub fn stark_shift_for_voltage(p: &SmmParams, voltage_mv: f64) -> Result<f64> {
    stark_shift(p, p.stark_per_mv * voltage_mv)
}
