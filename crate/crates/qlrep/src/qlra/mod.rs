//! Amplitude reconstruction from contextual data.
//!
//! For dichotomous observables `a`, `b` with context marginals `p_a`, `p_b`
//! and transitions `t`, write the b-marginal against its classical prior:
//!
//! ```text
//! p_b(j) = sum_i p_a(i) t[i][j] + 2 lambda_j sqrt(prod_i p_a(i) t[i][j])
//! ```
//!
//! The interference coefficient `lambda_j` is the normalized gap between
//! the measured marginal and the chain-rule prediction. When `|lambda| <= 1`
//! it is a cosine and the data embeds into a complex amplitude
//!
//! ```text
//! psi(j) = sqrt(p_a(1) t[1][j]) + exp(i theta_j) sqrt(p_a(2) t[2][j])
//! ```
//!
//! whose squared modulus returns `p_b` exactly. When `|lambda| > 1` the
//! same construction goes through over split-complex numbers with
//! `lambda = sign * cosh theta`. The second phase is pinned to the first
//! (`theta_2 = theta_1 + pi`, or the opposite hyperbolic sign), which is
//! what makes the induced `a`-basis orthonormal under symmetric
//! conditioning.

pub mod operators;

use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::hyperbolic::Hyperbolic;
use crate::kolmogorov::ContextualData;

/// Half-width of the band around `|lambda| = 1` treated as the boundary
/// between the trigonometric and hyperbolic regimes.
pub const BOUNDARY_EPS: f64 = 1e-12;

/// Reconstruction is algebraically exact; residuals above this indicate
/// inconsistent input, not rounding.
pub const BORN_TOL: f64 = 1e-12;

/// Bound on the phase-consistency residual under exactly symmetric
/// conditioning.
pub const PHASE_TOL: f64 = 1e-9;

/// Default tolerance for the symmetric-conditioning gate; loose enough for
/// Monte Carlo estimates to pass when explicitly overridden upward.
pub const DEFAULT_CHECK_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum QlraError {
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    #[error("not a trigonometric context: {0}")]
    NotTrigonometric(String),
    #[error("not a hyperbolic context: {0}")]
    NotHyperbolic(String),
    #[error(
        "asymmetric conditioning: max deviation {max_deviation:.3e} exceeds \
         tolerance {tolerance:.3e}"
    )]
    AsymmetricConditioning { max_deviation: f64, tolerance: f64 },
    #[error("phase inconsistency: {0}")]
    PhaseInconsistency(String),
    #[error("a-basis not orthonormal: Gram deviation {0:.3e}")]
    NonOrthonormalBasis(f64),
}

/// Regime of a context as decided by its interference coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterferenceKind {
    /// All four coefficients lie strictly inside `[-1, 1]`.
    Trigonometric,
    /// At least one coefficient lies strictly outside `[-1, 1]`.
    Hyperbolic,
    /// Some coefficient sits on `|lambda| = 1` within [`BOUNDARY_EPS`];
    /// handled as trigonometric with phase 0 or pi.
    Boundary,
}

/// Interference coefficients for both observables of a context.
#[derive(Debug, Clone, Serialize)]
pub struct InterferenceReport {
    /// `lambda` for each b-outcome (amplitude side).
    pub lambda_b: [f64; 2],
    /// `lambda` for each a-outcome (dual side).
    pub lambda_a: [f64; 2],
    pub kind: InterferenceKind,
}

fn lambda_pair(
    marginal: [f64; 2],
    prior_weights: [f64; 2],
    transitions: [[f64; 2]; 2],
    side: &str,
) -> Result<[f64; 2], QlraError> {
    let mut lambda = [0.0; 2];
    for j in 0..2 {
        let first = prior_weights[0] * transitions[0][j];
        let second = prior_weights[1] * transitions[1][j];
        if first <= 0.0 || second <= 0.0 {
            return Err(QlraError::DegenerateData(format!(
                "zero prior weight for {side} outcome {j}: all marginals and \
                 transition entries must be strictly positive"
            )));
        }
        lambda[j] = (marginal[j] - (first + second)) / (2.0 * (first * second).sqrt());
    }
    Ok(lambda)
}

/// Compute the interference coefficients of `data` and classify its regime.
pub fn interference_coefficients(data: &ContextualData) -> Result<InterferenceReport, QlraError> {
    let lambda_b = lambda_pair(data.p_b(), data.p_a(), data.t_b_given_a(), "b")?;
    let lambda_a = lambda_pair(data.p_a(), data.p_b(), data.t_a_given_b(), "a")?;
    let all = lambda_b.iter().chain(lambda_a.iter());
    let max_abs = all.fold(0.0f64, |m, &l| m.max(l.abs()));
    let kind = if max_abs <= 1.0 - BOUNDARY_EPS {
        InterferenceKind::Trigonometric
    } else if lambda_b
        .iter()
        .chain(lambda_a.iter())
        .any(|&l| l.abs() > 1.0 + BOUNDARY_EPS)
    {
        InterferenceKind::Hyperbolic
    } else {
        InterferenceKind::Boundary
    };
    Ok(InterferenceReport {
        lambda_b,
        lambda_a,
        kind,
    })
}

/// Which arccos branch seeds the first phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseBranch {
    /// `theta_1 = arccos(lambda_1)` in `[0, pi]`.
    #[default]
    Principal,
    /// `theta_1 = -arccos(lambda_1)`; yields the conjugate state.
    Mirrored,
}

/// Complex amplitude over the two b-outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexAmplitude {
    pub components: [Complex64; 2],
    /// Phases `theta_1`, `theta_2 = theta_1 + pi`.
    pub phases: [f64; 2],
    pub lambda: [f64; 2],
    /// Largest `||psi_j|^2 - p_b(j)|`.
    pub born_residual: f64,
    /// `|cos(theta_2) - lambda_2|`; zero under exactly symmetric
    /// conditioning.
    pub phase_residual: f64,
}

impl ComplexAmplitude {
    pub fn squared_moduli(&self) -> [f64; 2] {
        [self.components[0].norm_sqr(), self.components[1].norm_sqr()]
    }
}

/// Split-complex amplitude over the two b-outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperbolicAmplitude {
    pub components: [Hyperbolic; 2],
    /// Shared hyperbolic angle `theta = arccosh|lambda_1| >= 0`.
    pub theta: f64,
    /// Signs attached to the interference term; `signs[1] = -signs[0]`.
    pub signs: [f64; 2],
    pub lambda: [f64; 2],
    /// Largest `|(x^2 - y^2) - p_b(j)|`.
    pub born_residual: f64,
    /// `|sign_2 cosh(theta) - lambda_2|`.
    pub phase_residual: f64,
}

impl HyperbolicAmplitude {
    pub fn squared_moduli(&self) -> [f64; 2] {
        [
            self.components[0].squared_modulus(),
            self.components[1].squared_modulus(),
        ]
    }
}

/// Amplitude in either regime.
#[derive(Debug, Clone, PartialEq)]
pub enum Amplitude {
    Complex(ComplexAmplitude),
    Hyperbolic(HyperbolicAmplitude),
}

impl Amplitude {
    pub fn born_residual(&self) -> f64 {
        match self {
            Amplitude::Complex(a) => a.born_residual,
            Amplitude::Hyperbolic(a) => a.born_residual,
        }
    }

    pub fn phase_residual(&self) -> f64 {
        match self {
            Amplitude::Complex(a) => a.phase_residual,
            Amplitude::Hyperbolic(a) => a.phase_residual,
        }
    }

    pub fn lambda(&self) -> [f64; 2] {
        match self {
            Amplitude::Complex(a) => a.lambda,
            Amplitude::Hyperbolic(a) => a.lambda,
        }
    }

    pub fn squared_moduli(&self) -> [f64; 2] {
        match self {
            Amplitude::Complex(a) => a.squared_moduli(),
            Amplitude::Hyperbolic(a) => a.squared_moduli(),
        }
    }
}

fn branch_weights(data: &ContextualData) -> [[f64; 2]; 2] {
    // [j][i]: contribution of a-outcome i to b-outcome j.
    let p_a = data.p_a();
    let t = data.t_b_given_a();
    [
        [p_a[0] * t[0][0], p_a[1] * t[1][0]],
        [p_a[0] * t[0][1], p_a[1] * t[1][1]],
    ]
}

fn require_symmetric_conditioning(
    data: &ContextualData,
    tolerance: f64,
) -> Result<(), QlraError> {
    let report = data.check_conditions(tolerance);
    if !report.r1 {
        return Err(QlraError::AsymmetricConditioning {
            max_deviation: report.r1_max_deviation,
            tolerance,
        });
    }
    Ok(())
}

/// Build the complex amplitude of a trigonometric (or boundary) context.
///
/// Requires symmetric conditioning within `tolerance`; the phases then
/// satisfy `theta_2 - theta_1 = pi` and the squared moduli return the
/// b-marginal to machine accuracy.
pub fn build_complex_amplitude(
    data: &ContextualData,
    branch: PhaseBranch,
    tolerance: f64,
) -> Result<ComplexAmplitude, QlraError> {
    let report = interference_coefficients(data)?;
    if report.kind == InterferenceKind::Hyperbolic {
        let max = report
            .lambda_b
            .iter()
            .chain(report.lambda_a.iter())
            .fold(0.0f64, |m, &l| m.max(l.abs()));
        return Err(QlraError::NotTrigonometric(format!(
            "max |lambda| = {max} exceeds 1"
        )));
    }
    require_symmetric_conditioning(data, tolerance)?;

    let lambda = report.lambda_b;
    let theta_1 = match branch {
        PhaseBranch::Principal => lambda[0].clamp(-1.0, 1.0).acos(),
        PhaseBranch::Mirrored => -lambda[0].clamp(-1.0, 1.0).acos(),
    };
    let phases = [theta_1, theta_1 + std::f64::consts::PI];

    let weights = branch_weights(data);
    let mut components = [Complex64::default(); 2];
    let mut born_residual: f64 = 0.0;
    let p_b = data.p_b();
    for j in 0..2 {
        let psi = Complex64::new(weights[j][0].sqrt(), 0.0)
            + Complex64::from_polar(weights[j][1].sqrt(), phases[j]);
        components[j] = psi;
        born_residual = born_residual.max((psi.norm_sqr() - p_b[j]).abs());
    }
    let phase_residual = (phases[1].cos() - lambda[1]).abs();

    Ok(ComplexAmplitude {
        components,
        phases,
        lambda,
        born_residual,
        phase_residual,
    })
}

/// Build the split-complex amplitude of a hyperbolic context.
///
/// The hyperbolic angle comes from the first b-outcome; the second outcome
/// takes the opposite sign, mirroring the complex phase constraint.
pub fn build_hyperbolic_amplitude(
    data: &ContextualData,
    tolerance: f64,
) -> Result<HyperbolicAmplitude, QlraError> {
    let report = interference_coefficients(data)?;
    if report.kind != InterferenceKind::Hyperbolic {
        return Err(QlraError::NotHyperbolic(format!(
            "context is {:?}",
            report.kind
        )));
    }
    let lambda = report.lambda_b;
    if lambda[0].abs() <= 1.0 {
        return Err(QlraError::NotHyperbolic(format!(
            "|lambda_b(1)| = {} does not exceed 1",
            lambda[0].abs()
        )));
    }
    require_symmetric_conditioning(data, tolerance)?;

    let theta = lambda[0].abs().acosh();
    let signs = [lambda[0].signum(), -lambda[0].signum()];
    let phase_residual = (signs[1] * theta.cosh() - lambda[1]).abs();
    let phase_gate = tolerance.max(PHASE_TOL);
    if phase_residual > phase_gate {
        return Err(QlraError::PhaseInconsistency(format!(
            "opposite-sign constraint violated: |sign_2 cosh(theta) - lambda_2| \
             = {phase_residual:.3e} exceeds {phase_gate:.3e}"
        )));
    }

    let weights = branch_weights(data);
    let mut components = [Hyperbolic::default(); 2];
    let mut born_residual: f64 = 0.0;
    let p_b = data.p_b();
    for j in 0..2 {
        let psi = Hyperbolic::new(weights[j][0].sqrt(), 0.0)
            + Hyperbolic::exp_j(theta).scale(signs[j] * weights[j][1].sqrt());
        components[j] = psi;
        born_residual = born_residual.max((psi.squared_modulus() - p_b[j]).abs());
    }

    Ok(HyperbolicAmplitude {
        components,
        theta,
        signs,
        lambda,
        born_residual,
        phase_residual,
    })
}

/// Build whichever amplitude the context's regime calls for.
pub fn build_amplitude(
    data: &ContextualData,
    branch: PhaseBranch,
    tolerance: f64,
) -> Result<Amplitude, QlraError> {
    let report = interference_coefficients(data)?;
    match report.kind {
        InterferenceKind::Trigonometric | InterferenceKind::Boundary => {
            build_complex_amplitude(data, branch, tolerance).map(Amplitude::Complex)
        }
        InterferenceKind::Hyperbolic => {
            build_hyperbolic_amplitude(data, tolerance).map(Amplitude::Hyperbolic)
        }
    }
}

/// Reconstruct both marginals from priors and interference coefficients;
/// the returned maximum residual is pure rounding (at most [`BORN_TOL`])
/// because the coefficients are defined as the normalized gaps.
pub fn verify_interference_formula(data: &ContextualData) -> Result<f64, QlraError> {
    let report = interference_coefficients(data)?;
    let mut residual: f64 = 0.0;

    let p_a = data.p_a();
    let p_b = data.p_b();
    let t_ba = data.t_b_given_a();
    let t_ab = data.t_a_given_b();
    for j in 0..2 {
        let first = p_a[0] * t_ba[0][j];
        let second = p_a[1] * t_ba[1][j];
        let recon = first + second + 2.0 * report.lambda_b[j] * (first * second).sqrt();
        residual = residual.max((recon - p_b[j]).abs());
    }
    for i in 0..2 {
        let first = p_b[0] * t_ab[0][i];
        let second = p_b[1] * t_ab[1][i];
        let recon = first + second + 2.0 * report.lambda_a[i] * (first * second).sqrt();
        residual = residual.max((recon - p_a[i]).abs());
    }
    Ok(residual)
}

// JSON layout shared by both amplitude kinds: components as [x, y] pairs,
// phases as two signed angles (for the hyperbolic kind, sign_j * theta).
#[derive(Serialize, Deserialize)]
struct AmplitudeWire {
    kind: String,
    components: [[f64; 2]; 2],
    phases: [f64; 2],
    lambda: [f64; 2],
    born_residual: f64,
    phase_residual: f64,
}

impl Serialize for Amplitude {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let wire = match self {
            Amplitude::Complex(a) => AmplitudeWire {
                kind: "complex".into(),
                components: [
                    [a.components[0].re, a.components[0].im],
                    [a.components[1].re, a.components[1].im],
                ],
                phases: a.phases,
                lambda: a.lambda,
                born_residual: a.born_residual,
                phase_residual: a.phase_residual,
            },
            Amplitude::Hyperbolic(a) => AmplitudeWire {
                kind: "hyperbolic".into(),
                components: [
                    [a.components[0].x, a.components[0].y],
                    [a.components[1].x, a.components[1].y],
                ],
                phases: [a.signs[0] * a.theta, a.signs[1] * a.theta],
                lambda: a.lambda,
                born_residual: a.born_residual,
                phase_residual: a.phase_residual,
            },
        };
        wire.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Amplitude {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let wire = AmplitudeWire::deserialize(deserializer)?;
        match wire.kind.as_str() {
            "complex" => Ok(Amplitude::Complex(ComplexAmplitude {
                components: [
                    Complex64::new(wire.components[0][0], wire.components[0][1]),
                    Complex64::new(wire.components[1][0], wire.components[1][1]),
                ],
                phases: wire.phases,
                lambda: wire.lambda,
                born_residual: wire.born_residual,
                phase_residual: wire.phase_residual,
            })),
            "hyperbolic" => {
                let theta = wire.phases[0].abs();
                let signs = [wire.phases[0].signum(), wire.phases[1].signum()];
                Ok(Amplitude::Hyperbolic(HyperbolicAmplitude {
                    components: [
                        Hyperbolic::new(wire.components[0][0], wire.components[0][1]),
                        Hyperbolic::new(wire.components[1][0], wire.components[1][1]),
                    ],
                    theta,
                    signs,
                    lambda: wire.lambda,
                    born_residual: wire.born_residual,
                    phase_residual: wire.phase_residual,
                }))
            }
            other => Err(D::Error::custom(format!("unknown amplitude kind {other:?}"))),
        }
    }
}
