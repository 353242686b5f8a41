//! Angular-momentum matrices in the `|j, m⟩` basis, ordered by descending `m`.

use num_complex::Complex64 as C64;

use crate::linalg::{CMatrix, I};
use crate::{Error, Result};

/// Spin quantum number stored as `2j` so half-integers are exact.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Spin {
    twice: u32,
}

impl Spin {
    pub const HALF: Spin = Spin { twice: 1 };

    pub fn from_twice(twice: u32) -> Self {
        Spin { twice }
    }

    /// Accepts any non-negative `j` with `2j` integral.
    pub fn new(j: f64) -> Result<Self> {
        let twice = 2.0 * j;
        if !twice.is_finite() || twice < 0.0 || (twice - twice.round()).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "spin quantum number must be a non-negative half-integer, got {j}"
            )));
        }
        Ok(Spin { twice: twice.round() as u32 })
    }

    pub fn j(self) -> f64 {
        self.twice as f64 / 2.0
    }

    pub fn dim(self) -> usize {
        self.twice as usize + 1
    }

    /// Magnetic quantum numbers `j, j-1, …, -j`.
    pub fn m_values(self) -> Vec<f64> {
        (0..self.dim()).map(|k| self.j() - k as f64).collect()
    }

    /// Basis index of magnetic quantum number `m`.
    pub fn index_of(self, m: f64) -> Option<usize> {
        let k = self.j() - m;
        if k < -1e-9 || (k - k.round()).abs() > 1e-9 {
            return None;
        }
        let k = k.round() as usize;
        (k < self.dim()).then_some(k)
    }

    /// `j(j+1)`.
    pub fn casimir(self) -> f64 {
        let j = self.j();
        j * (j + 1.0)
    }
}

/// Cartesian and ladder spin operators, in units of ħ.
#[derive(Clone, Debug)]
pub struct SpinOperatorSet {
    pub spin: Spin,
    pub jx: CMatrix,
    pub jy: CMatrix,
    pub jz: CMatrix,
    pub jplus: CMatrix,
    pub jminus: CMatrix,
}

impl SpinOperatorSet {
    pub fn dim(&self) -> usize {
        self.spin.dim()
    }

    pub fn identity(&self) -> CMatrix {
        CMatrix::identity(self.dim(), self.dim())
    }

    /// `Jx² + Jy² + Jz²`.
    pub fn j_squared(&self) -> CMatrix {
        &self.jx * &self.jx + &self.jy * &self.jy + &self.jz * &self.jz
    }
}

/// Builds `Jx, Jy, Jz, J±` for spin `j`.
pub fn spin_operators(j: f64) -> Result<SpinOperatorSet> {
    Ok(spin_operators_for(Spin::new(j)?))
}

pub fn spin_operators_for(spin: Spin) -> SpinOperatorSet {
    let n = spin.dim();
    let ms = spin.m_values();
    let cas = spin.casimir();

    let mut jz = CMatrix::zeros(n, n);
    let mut jplus = CMatrix::zeros(n, n);
    for k in 0..n {
        jz[(k, k)] = C64::new(ms[k], 0.0);
        // J+ |m⟩ = sqrt(j(j+1) - m(m+1)) |m+1⟩, and |m+1⟩ sits one index up.
        if k > 0 {
            let m = ms[k];
            jplus[(k - 1, k)] = C64::new((cas - m * (m + 1.0)).max(0.0).sqrt(), 0.0);
        }
    }
    let jminus = jplus.adjoint();
    let jx = (&jplus + &jminus).scale(0.5);
    let jy = (&jplus - &jminus) * (-0.5 * I);
    SpinOperatorSet { spin, jx, jy, jz, jplus, jminus }
}
