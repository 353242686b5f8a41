//! Electric drive of the coupled system, in the lab frame and in the
//! rotating frame of the carrier.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::{annihilation, nuclear_lowering, CoupledSystem};
use crate::dynamics::Generator;
use crate::linalg::{kron_all, CMatrix};
use crate::smm::NUCLEAR_DIM;
use crate::swipht::Pulse;
use crate::{Error, Result};

/// Weights of the drive on the resonator and on each molecule.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriveLambdas {
    /// Coefficient of `(a + a†)` in MHz.
    pub cavity_mhz: f64,
    pub q1: f64,
    pub q2: f64,
}

impl Default for DriveLambdas {
    fn default() -> Self {
        DriveLambdas { cavity_mhz: 0.0, q1: 0.0, q2: 1.0 }
    }
}

/// `λ_c(a + a†) + Σ_n λ_n [ε_n + Σ_j ξ_{n,j} (|j⟩⟨j+1| + h.c.)]` in the bare
/// basis (MHz). The molecular terms act on the nuclear spin alone.
pub fn drive_operator(s: &CoupledSystem, lambdas: &DriveLambdas) -> CMatrix {
    let nf = s.cavity.fock_dim();
    let id4 = CMatrix::identity(NUCLEAR_DIM, NUCLEAR_DIM);
    let idf = CMatrix::identity(nf, nf);
    let a = annihilation(nf);
    let low = nuclear_lowering();
    let flip = &low + low.adjoint();
    let mut v = kron_all(&[&id4, &id4, &(&a + a.adjoint())]).scale(lambdas.cavity_mhz);
    for (q, weight) in [lambdas.q1, lambdas.q2].into_iter().enumerate() {
        if weight == 0.0 {
            continue;
        }
        let cp = &s.couplings[q];
        let mut local = id4.scale(cp.epsilon_mhz);
        local += flip.scale(cp.xi_unit_mhz);
        let op = if q == 0 { kron_all(&[&local, &id4, &idf]) } else { kron_all(&[&id4, &local, &idf]) };
        v += op.scale(weight);
    }
    v
}

fn to_dressed(s: &CoupledSystem, m: &CMatrix) -> CMatrix {
    let w = &s.dressed.vectors;
    w.adjoint() * m * w
}

fn excitations(s: &CoupledSystem) -> Vec<usize> {
    s.dominant.iter().map(|b| b.excitations()).collect()
}

/// Lab-frame generator in the dressed basis:
/// `H(t) = 2π E + s·Ω(t) cos(ω_p t) V`, with the envelope scale `s` chosen
/// so that the co-rotating part of the |0̃0⟩ ↔ |0̃1⟩ element has magnitude Ω(t).
pub struct LabFrameDrive {
    pub energies: Vec<f64>,
    pub v: CMatrix,
    pub omega_p: f64,
    pub envelope_scale: f64,
    pub pulse: Pulse,
}

impl LabFrameDrive {
    pub fn new(s: &CoupledSystem, pulse: Pulse, lambdas: &DriveLambdas) -> Result<Self> {
        let v = to_dressed(s, &drive_operator(s, lambdas)).scale(2.0 * PI);
        let d01 = v[(s.logical[0], s.logical[1])].norm();
        if !(d01 > 1e-12) {
            return Err(Error::Degenerate("drive does not couple |00> and |01>".into()));
        }
        Ok(LabFrameDrive {
            energies: s.dressed.values.iter().map(|e| 2.0 * PI * e).collect(),
            v,
            omega_p: pulse.omega_p,
            envelope_scale: 2.0 / d01,
            pulse,
        })
    }

    pub fn h0(&self) -> CMatrix {
        crate::linalg::diag_real(&self.energies)
    }
}

impl Generator for LabFrameDrive {
    fn dim(&self) -> usize {
        self.energies.len()
    }

    fn hamiltonian(&self, t: f64) -> CMatrix {
        let f = self.envelope_scale * self.pulse.envelope(t) * (self.omega_p * t).cos();
        let mut h = self.v.scale(f);
        for (k, e) in self.energies.iter().enumerate() {
            h[(k, k)] += C64::new(*e, 0.0);
        }
        h
    }
}

/// Rotating-wave generator in the dressed basis, in the frame
/// `exp(i ω_p N t)` with N the excitation number of the dominant bare
/// component. Only dressed states with `N ≤ cutoff` are kept.
///
/// `H(t) = D + Ω(t) W / |W₀₋₁|` with `D = 2π(E − f_p N)` and W the
/// `ΔN = ±1` part of the dressed drive, halved.
pub struct RotatingFrameDrive {
    /// Dressed indices kept, ascending.
    pub kept: Vec<usize>,
    /// Positions of the logical states within `kept`.
    pub logical: [usize; 4],
    pub excitations: Vec<usize>,
    pub detunings: Vec<f64>,
    pub w: CMatrix,
    /// Unit-modulus phase of the normalized target element.
    pub target_phase: C64,
    pub pulse: Pulse,
}

impl RotatingFrameDrive {
    pub fn new(s: &CoupledSystem, pulse: Pulse, lambdas: &DriveLambdas, cutoff: Option<usize>) -> Result<Self> {
        let n_all = excitations(s);
        let kept: Vec<usize> = (0..s.dim()).filter(|&k| cutoff.is_none_or(|c| n_all[k] <= c)).collect();
        let mut logical = [0usize; 4];
        for (slot, &k) in s.logical.iter().enumerate() {
            logical[slot] = kept
                .iter()
                .position(|&x| x == k)
                .ok_or_else(|| Error::InvalidParameter(format!("excitation cutoff {cutoff:?} removes logical state {slot}")))?;
        }
        let vd = to_dressed(s, &drive_operator(s, lambdas)).scale(2.0 * PI);
        let n = kept.len();
        let excitations: Vec<usize> = kept.iter().map(|&k| n_all[k]).collect();
        let mut w = CMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                if excitations[i].abs_diff(excitations[j]) == 1 {
                    w[(i, j)] = vd[(kept[i], kept[j])] * 0.5;
                }
            }
        }
        let target = w[(logical[0], logical[1])];
        if !(target.norm() > 1e-12) {
            return Err(Error::Degenerate("drive does not couple |00> and |01>".into()));
        }
        let w = w.unscale(target.norm());
        let f_p = pulse.omega_p / (2.0 * PI);
        let detunings = kept
            .iter()
            .zip(&excitations)
            .map(|(&k, &nk)| 2.0 * PI * (s.dressed.values[k] - f_p * nk as f64))
            .collect();
        Ok(RotatingFrameDrive { kept, logical, excitations, detunings, w, target_phase: target / target.norm(), pulse })
    }

    pub fn generator_diag(&self) -> CMatrix {
        crate::linalg::diag_real(&self.detunings)
    }
}

impl Generator for RotatingFrameDrive {
    fn dim(&self) -> usize {
        self.kept.len()
    }

    fn hamiltonian(&self, t: f64) -> CMatrix {
        let mut h = self.w.scale(self.pulse.envelope(t));
        for (k, d) in self.detunings.iter().enumerate() {
            h[(k, k)] += C64::new(*d, 0.0);
        }
        h
    }
}
