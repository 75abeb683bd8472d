//! Dense complex linear algebra shared by the exact oracle and the group
//! constructions: Hermitian eigendecomposition, matrix exponentials and
//! phase-insensitive state comparison.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Eigendecomposition `H = V diag(λ) V†` of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: DVector<f64>,
    pub vectors: CMatrix,
}

impl HermitianEigen {
    pub fn new(h: &CMatrix) -> Self {
        assert!(h.is_square(), "Hermitian eigendecomposition needs a square matrix");
        // symmetrize first so the solver sees an exactly Hermitian input
        let sym = (h + h.adjoint()).scale(0.5);
        let eig = SymmetricEigen::new(sym);
        Self {
            values: eig.eigenvalues,
            vectors: eig.eigenvectors,
        }
    }

    /// `exp(coeff · H)` reassembled from the spectrum.
    pub fn exp_scaled(&self, coeff: Complex64) -> CMatrix {
        let phases = self.values.map(|l| (coeff * l).exp());
        let mut scaled = self.vectors.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= phases[j];
        }
        scaled * self.vectors.adjoint()
    }

    /// Applies `exp(coeff · H)` to a vector without forming the full matrix.
    pub fn apply_exp(&self, coeff: Complex64, v: &CVector) -> CVector {
        let mut in_eigenbasis = self.vectors.ad_mul(v);
        for (c, l) in in_eigenbasis.iter_mut().zip(self.values.iter()) {
            *c *= (coeff * *l).exp();
        }
        &self.vectors * in_eigenbasis
    }

    /// `H^{-1/2}` for a positive-definite input; `None` if some eigenvalue is
    /// not strictly positive.
    pub fn inverse_sqrt(&self) -> Option<CMatrix> {
        if self.values.iter().any(|&l| l <= 0.0) {
            return None;
        }
        let mut scaled = self.vectors.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= Complex64::from(1.0 / self.values[j].sqrt());
        }
        Some(scaled * self.vectors.adjoint())
    }
}

/// `exp(coeff · H)` for Hermitian `H`.
pub fn expm_hermitian(h: &CMatrix, coeff: Complex64) -> CMatrix {
    HermitianEigen::new(h).exp_scaled(coeff)
}

/// General matrix exponential by scaling and squaring with a Taylor series.
///
/// Used for non-Hermitian generators (raising-type operators in a fixed
/// sector), where the series is short because the generator is nilpotent.
pub fn expm(a: &CMatrix) -> CMatrix {
    assert!(a.is_square(), "matrix exponential needs a square matrix");
    let n = a.nrows();
    let norm = one_norm(a);
    let mut squarings = 0u32;
    if norm > 0.5 {
        squarings = (norm / 0.5).log2().ceil() as u32;
    }
    let scaled = a.scale(0.5f64.powi(squarings as i32));

    let mut result = CMatrix::identity(n, n);
    let mut term = CMatrix::identity(n, n);
    for k in 1..=60 {
        term = (&term * &scaled).unscale(k as f64);
        result += &term;
        if one_norm(&term) <= f64::EPSILON * one_norm(&result) {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

pub fn one_norm(a: &CMatrix) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|x| x.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn max_abs(a: impl IntoIterator<Item = Complex64>) -> f64 {
    a.into_iter().map(|x| x.norm()).fold(0.0, f64::max)
}

pub fn max_abs_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len(), "length mismatch in comparison");
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Unit phase `e^{iχ}` such that `b ≈ e^{iχ} a`, fitted on the
/// largest-magnitude component of `a`.
pub fn fitted_phase(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    let pivot = a
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.norm().total_cmp(&y.1.norm()))
        .map(|(i, _)| i);
    match pivot {
        Some(i) if a[i].norm() > 0.0 && b[i].norm() > 0.0 => {
            let ratio = b[i] / a[i];
            ratio / ratio.norm()
        }
        _ => Complex64::new(1.0, 0.0),
    }
}

/// `max_i |b_i − e^{iχ} a_i|` with the phase from [`fitted_phase`].
pub fn phase_aligned_residual(a: &[Complex64], b: &[Complex64]) -> f64 {
    let phase = fitted_phase(a, b);
    let rotated: Vec<Complex64> = a.iter().map(|x| x * phase).collect();
    max_abs_diff(&rotated, b)
}

/// `max |A − A†|`.
pub fn hermiticity_residual(a: &CMatrix) -> f64 {
    max_abs((a - a.adjoint()).iter().copied())
}
