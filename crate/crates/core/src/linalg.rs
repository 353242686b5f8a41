//! Dense complex linear algebra shared by every model in the crate.
//!
//! All matrices are small (at most a few hundred rows), so everything is
//! dense and heap allocated. Hermitian generators are exponentiated through
//! their eigendecomposition, which keeps propagators unitary to round-off.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;

use crate::{Error, Result};

/// Dense complex matrix used throughout the crate.
pub type CMatrix = DMatrix<C64>;
/// Dense complex column vector.
pub type CVector = DVector<C64>;

/// Relative tolerance on `max|M - M^dagger|` accepted by [`eig_hermitian`].
pub const HERMITIAN_TOL: f64 = 1e-12;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Eigendecomposition of a Hermitian matrix.
///
/// `values` are ascending; column `k` of `vectors` is the normalized
/// eigenvector of `values[k]`, phased so its largest-magnitude component is
/// real and positive.
#[derive(Clone, Debug)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl Eigen {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `V f(diag λ) V†` for a scalar function applied to the spectrum.
    pub fn apply<F>(&self, f: F) -> CMatrix
    where
        F: Fn(f64) -> C64,
    {
        let n = self.dim();
        let mut scaled = self.vectors.clone();
        for (k, &lambda) in self.values.iter().enumerate() {
            let w = f(lambda);
            for r in 0..n {
                scaled[(r, k)] *= w;
            }
        }
        scaled * self.vectors.adjoint()
    }

    /// Reassembles `V diag(λ) V†`.
    pub fn reconstruct(&self) -> CMatrix {
        self.apply(|l| C64::new(l, 0.0))
    }
}

/// Largest entry magnitude.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

/// `max|A - B|` over all entries.
pub fn max_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch in max_diff");
    a.iter()
        .zip(b.iter())
        .fold(0.0_f64, |acc, (x, y)| acc.max((x - y).norm()))
}

/// `max|M - M†|`.
pub fn hermiticity_error(m: &CMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    max_diff(m, &m.adjoint())
}

/// `max|U†U - I|`.
pub fn unitarity_error(u: &CMatrix) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    let n = u.nrows();
    max_diff(&(u.adjoint() * u), &CMatrix::identity(n, n))
}

/// Multiplies column `k` by a unit phase so that its largest-magnitude
/// component becomes real positive. Ties within relative `1e-10` go to the
/// lowest row index.
pub fn fix_column_phase(v: &mut CMatrix, k: usize) {
    let col = v.column(k);
    let peak = col.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()));
    if peak == 0.0 {
        return;
    }
    let pivot = col
        .iter()
        .position(|z| z.norm() >= peak * (1.0 - 1e-10))
        .unwrap_or(0);
    let z = v[(pivot, k)];
    let phase = z.conj() / z.norm();
    for r in 0..v.nrows() {
        v[(r, k)] *= phase;
    }
}

/// Eigendecomposition of a Hermitian matrix with ascending eigenvalues and a
/// deterministic eigenvector phase.
pub fn eig_hermitian(m: &CMatrix) -> Result<Eigen> {
    if !m.is_square() {
        return Err(Error::Shape(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let n = m.nrows();
    if n == 0 {
        return Ok(Eigen { values: Vec::new(), vectors: CMatrix::zeros(0, 0) });
    }
    let scale = max_abs(m);
    let herm = hermiticity_error(m);
    if herm > HERMITIAN_TOL * scale.max(f64::MIN_POSITIVE) && herm > 0.0 {
        return Err(Error::NotHermitian { deviation: herm, scale });
    }
    if scale == 0.0 {
        return Ok(Eigen { values: vec![0.0; n], vectors: CMatrix::identity(n, n) });
    }
    // Symmetrize so the solver sees an exactly Hermitian input.
    let sym = (m + m.adjoint()).scale(0.5);
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical("Hermitian eigensolver did not converge".into()))?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(src);
        let norm = col.norm();
        for r in 0..n {
            vectors[(r, dst)] = col[r] / norm;
        }
        fix_column_phase(&mut vectors, dst);
    }
    Ok(Eigen { values, vectors })
}

/// [`eig_hermitian`] followed by a rotation inside every cluster of
/// eigenvalues closer than `cluster_tol` (absolute), so that degenerate
/// eigenvectors line up with the computational basis.
///
/// Within a cluster the vectors are re-diagonalized against the operator
/// `diag(0, 1, 2, …)`, which has a distinct weight for every basis state.
pub fn eig_hermitian_aligned(m: &CMatrix, cluster_tol: f64) -> Result<Eigen> {
    let mut eig = eig_hermitian(m)?;
    let n = eig.dim();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && eig.values[end] - eig.values[end - 1] <= cluster_tol {
            end += 1;
        }
        if end - start > 1 {
            let block = eig.vectors.columns(start, end - start).into_owned();
            let weights = diag_real(&(0..n).map(|k| k as f64).collect::<Vec<_>>());
            let projected = block.adjoint() * &weights * &block;
            let inner = eig_hermitian(&projected)?;
            let rotated = &block * &inner.vectors;
            for (c, col) in (start..end).zip(0..) {
                eig.vectors.set_column(c, &rotated.column(col));
                fix_column_phase(&mut eig.vectors, c);
            }
        }
        start = end;
    }
    Ok(eig)
}

/// Kronecker product with `(A⊗B)[i·rB + k, j·cB + l] = A[i,j]·B[k,l]`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Kronecker product of a list of factors, left to right.
pub fn kron_all(factors: &[&CMatrix]) -> CMatrix {
    let mut iter = factors.iter();
    let first = match iter.next() {
        Some(m) => (*m).clone(),
        None => return CMatrix::identity(1, 1),
    };
    iter.fold(first, |acc, m| kron(&acc, m))
}

/// `exp(-i·H·dt)` for Hermitian `H` given in angular-frequency units.
pub fn propagator_step(h: &CMatrix, dt: f64) -> Result<CMatrix> {
    let eig = eig_hermitian(h)?;
    Ok(eig.apply(|l| C64::from_polar(1.0, -l * dt)))
}

/// Nearest unitary in the Frobenius norm, `W (W†W)^{-1/2}`.
///
/// Used to strip accumulated round-off from long products of step
/// propagators.
pub fn nearest_unitary(w: &CMatrix) -> Result<CMatrix> {
    let gram = eig_hermitian(&(w.adjoint() * w))?;
    if gram.values.first().is_some_and(|&l| l <= 0.0) {
        return Err(Error::Numerical("matrix is singular, no polar factor".into()));
    }
    Ok(w * gram.apply(|l| C64::new(l.sqrt().recip(), 0.0)))
}

/// Real diagonal matrix.
pub fn diag_real(values: &[f64]) -> CMatrix {
    let n = values.len();
    let mut m = CMatrix::zeros(n, n);
    for (k, &v) in values.iter().enumerate() {
        m[(k, k)] = C64::new(v, 0.0);
    }
    m
}

/// Complex matrix from a real one.
pub fn complexify(m: &DMatrix<f64>) -> CMatrix {
    m.map(|x| C64::new(x, 0.0))
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}
