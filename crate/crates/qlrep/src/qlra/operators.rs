//! Self-adjoint 2x2 operator representation of the observable pair.
//!
//! The b-observable is diagonal in the standard basis. The a-observable is
//! diagonal in the basis drawn from the transition weights and the
//! amplitude's phases; that basis is orthonormal exactly when conditioning
//! is symmetric, so a Gram check doubles as the structural gate here.

use num_complex::Complex64;
use serde::Serialize;

use super::{ComplexAmplitude, QlraError};
use crate::kolmogorov::ContextualData;

/// Gram-matrix deviation above this means the a-basis is unusable.
pub const GRAM_TOL: f64 = 1e-9;

/// Bound for representation identities (state decomposition, operator
/// averages) on clean input.
pub const REPRESENTATION_TOL: f64 = 1e-10;

/// Dense 2x2 complex matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Mat2c(pub [[Complex64; 2]; 2]);

impl Mat2c {
    pub fn diag(d0: f64, d1: f64) -> Self {
        Mat2c([
            [Complex64::new(d0, 0.0), Complex64::default()],
            [Complex64::default(), Complex64::new(d1, 0.0)],
        ])
    }

    /// Outer product `v v^dagger` scaled by `weight`.
    fn scaled_projector(v: &[Complex64; 2], weight: f64) -> Self {
        let mut m = Mat2c::default();
        for r in 0..2 {
            for c in 0..2 {
                m.0[r][c] = v[r] * v[c].conj() * weight;
            }
        }
        m
    }

    pub fn add(&self, rhs: &Self) -> Self {
        let mut m = Mat2c::default();
        for r in 0..2 {
            for c in 0..2 {
                m.0[r][c] = self.0[r][c] + rhs.0[r][c];
            }
        }
        m
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        let mut m = Mat2c::default();
        for r in 0..2 {
            for c in 0..2 {
                m.0[r][c] = self.0[r][c] - rhs.0[r][c];
            }
        }
        m
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        let mut m = Mat2c::default();
        for r in 0..2 {
            for c in 0..2 {
                m.0[r][c] = self.0[r][0] * rhs.0[0][c] + self.0[r][1] * rhs.0[1][c];
            }
        }
        m
    }

    pub fn mul_vec(&self, v: &[Complex64; 2]) -> [Complex64; 2] {
        [
            self.0[0][0] * v[0] + self.0[0][1] * v[1],
            self.0[1][0] * v[0] + self.0[1][1] * v[1],
        ]
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Mat2c::default();
        for r in 0..2 {
            for c in 0..2 {
                m.0[r][c] = self.0[c][r].conj();
            }
        }
        m
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        self.sub(&self.adjoint()).frobenius_norm()
    }
}

fn inner(x: &[Complex64; 2], y: &[Complex64; 2]) -> Complex64 {
    x[0] * y[0].conj() + x[1] * y[1].conj()
}

/// Commutator `ab - ba`.
pub fn commutator(a: &Mat2c, b: &Mat2c) -> Mat2c {
    a.mul(b).sub(&b.mul(a))
}

/// Anticommutator `ab + ba`.
pub fn anticommutator(a: &Mat2c, b: &Mat2c) -> Mat2c {
    a.mul(b).add(&b.mul(a))
}

/// The two observables as self-adjoint operators on C^2, written in the
/// standard (b-eigenvector) basis.
#[derive(Debug, Clone)]
pub struct ObservablePair {
    pub a_matrix: Mat2c,
    pub b_matrix: Mat2c,
    /// Eigenvectors of the a-operator, `a_basis[i]` for eigenvalue
    /// `a_eigenvalues[i]`.
    pub a_basis: [[Complex64; 2]; 2],
    /// Standard basis vectors, eigenvectors of the b-operator.
    pub b_basis: [[Complex64; 2]; 2],
    pub a_eigenvalues: [f64; 2],
    pub b_eigenvalues: [f64; 2],
    pub diagnostics: OperatorDiagnostics,
}

/// Residuals of the representation identities, recorded at build time.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct OperatorDiagnostics {
    /// Max deviation of the a-basis Gram matrix from the identity.
    pub gram_deviation: f64,
    /// Max component gap between the amplitude and its expansion in the
    /// a-basis with coefficients `sqrt(p_a(i))`.
    pub decomposition_residual: f64,
    /// Gap between the data mean of `a` and the operator average on the
    /// state.
    pub average_residual: f64,
}

/// Build the operator pair for a complex amplitude.
///
/// Fails with [`QlraError::NonOrthonormalBasis`] when the transition
/// weights and phases do not produce an orthonormal a-basis, which is the
/// operator-level signature of asymmetric conditioning.
pub fn build_operators(
    data: &ContextualData,
    amplitude: &ComplexAmplitude,
    a_eigenvalues: [f64; 2],
    b_eigenvalues: [f64; 2],
) -> Result<ObservablePair, QlraError> {
    let t = data.t_b_given_a();
    let u = [
        [t[0][0].sqrt(), t[0][1].sqrt()],
        [t[1][0].sqrt(), t[1][1].sqrt()],
    ];
    let a_basis = [
        [Complex64::new(u[0][0], 0.0), Complex64::new(u[0][1], 0.0)],
        [
            Complex64::from_polar(u[1][0], amplitude.phases[0]),
            Complex64::from_polar(u[1][1], amplitude.phases[1]),
        ],
    ];

    let mut gram_deviation: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let expected = if i == j { 1.0 } else { 0.0 };
            let g = inner(&a_basis[i], &a_basis[j]);
            gram_deviation = gram_deviation.max((g - expected).norm());
        }
    }
    if gram_deviation > GRAM_TOL {
        return Err(QlraError::NonOrthonormalBasis(gram_deviation));
    }

    let a_matrix = Mat2c::scaled_projector(&a_basis[0], a_eigenvalues[0])
        .add(&Mat2c::scaled_projector(&a_basis[1], a_eigenvalues[1]));
    let b_matrix = Mat2c::diag(b_eigenvalues[0], b_eigenvalues[1]);

    let p_a = data.p_a();
    let coeffs = [p_a[0].sqrt(), p_a[1].sqrt()];
    let mut decomposition_residual: f64 = 0.0;
    for (k, component) in amplitude.components.iter().enumerate() {
        let expanded = a_basis[0][k] * coeffs[0] + a_basis[1][k] * coeffs[1];
        decomposition_residual = decomposition_residual.max((expanded - component).norm());
    }

    let mean_from_data = a_eigenvalues[0] * p_a[0] + a_eigenvalues[1] * p_a[1];
    let a_psi = a_matrix.mul_vec(&amplitude.components);
    let operator_average = inner(&a_psi, &amplitude.components);
    let average_residual = (operator_average - mean_from_data).norm();

    Ok(ObservablePair {
        a_matrix,
        b_matrix,
        a_basis,
        b_basis: [
            [Complex64::new(1.0, 0.0), Complex64::default()],
            [Complex64::default(), Complex64::new(1.0, 0.0)],
        ],
        a_eigenvalues,
        b_eigenvalues,
        diagnostics: OperatorDiagnostics {
            gram_deviation,
            decomposition_residual,
            average_residual,
        },
    })
}
