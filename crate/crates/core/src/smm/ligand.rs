//! Stevens-operator ligand field for the full J = 6 multiplet.
//!
//! No coefficient set ships with the crate; callers that have one can pass
//! it through [`SmmParams::ligand`](super::SmmParams).

use serde::{Deserialize, Serialize};

use crate::linalg::CMatrix;
use crate::spin::SpinOperatorSet;
use crate::{Error, Result};

/// Stevens coefficients B_k^q (MHz) of a D4d-like ligand field.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LigandField {
    pub b20: f64,
    pub b40: f64,
    pub b44: f64,
    pub b60: f64,
    pub b64: f64,
}

impl LigandField {
    pub fn validate(&self) -> Result<()> {
        for v in [self.b20, self.b40, self.b44, self.b60, self.b64] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("Stevens coefficient must be finite, got {v}")));
            }
        }
        Ok(())
    }

    /// `Σ B_k^q O_k^q` on the electronic space (MHz).
    pub fn operator(&self, j: &SpinOperatorSet) -> CMatrix {
        let mut h = CMatrix::zeros(j.dim(), j.dim());
        for (k, q, b) in [(2, 0, self.b20), (4, 0, self.b40), (4, 4, self.b44), (6, 0, self.b60), (6, 4, self.b64)] {
            if b != 0.0 {
                h += stevens_operator(j, k, q).expect("tabulated operator").scale(b);
            }
        }
        h
    }
}

/// Stevens operator `O_k^q` for `(k, q)` in {(2,0), (4,0), (4,4), (6,0), (6,4)}.
pub fn stevens_operator(j: &SpinOperatorSet, k: u32, q: u32) -> Result<CMatrix> {
    let x = j.spin.casimir();
    let id = j.identity();
    let jz = &j.jz;
    let jz2 = jz * jz;
    let jz4 = &jz2 * &jz2;
    let jp4 = j.jplus.pow(4);
    let jm4 = j.jminus.pow(4);
    let ladder = &jp4 + &jm4;
    let op = match (k, q) {
        (2, 0) => jz2.scale(3.0) - id.scale(x),
        (4, 0) => jz4.scale(35.0) - jz2.scale(30.0 * x - 25.0) + id.scale(3.0 * x * x - 6.0 * x),
        (4, 4) => ladder.scale(0.5),
        (6, 0) => {
            let jz6 = &jz4 * &jz2;
            jz6.scale(231.0) - jz4.scale(315.0 * x - 735.0) + jz2.scale(105.0 * x * x - 525.0 * x + 294.0)
                - id.scale(5.0 * x * x * x - 40.0 * x * x + 60.0 * x)
        }
        (6, 4) => {
            let inner = jz2.scale(11.0) - id.scale(x + 38.0);
            (&inner * &ladder + &ladder * &inner).scale(0.25)
        }
        _ => {
            return Err(Error::InvalidParameter(format!("Stevens operator O_{k}^{q} is not tabulated")));
        }
    };
    Ok(op)
}
