//! A transition-probability inequality for triples of dichotomous
//! observables.
//!
//! When three dichotomous observables with uniform marginals admit a joint
//! distribution on one probability space, their pairwise conditional
//! probabilities obey
//!
//! ```text
//! P(a=+ | b=+) + P(c=+ | b=-) - P(a=+ | c=+) >= 0
//! ```
//!
//! This module checks the inequality on explicit triples, proves it
//! numerically over random joint distributions, scans the closed-form
//! disturbing-wall transitions for parameter triples that violate it, and
//! reproduces such a violation from simulated counts alone.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flybox::{
    analytic_transition, disturbing_sequential, measure_split, sample_flies, FoodField, SimError,
    Splitter,
};

/// Slack below which the inequality counts as violated.
pub const SLACK_TOL: f64 = 1e-9;

const TRIALS_PER_CHUNK: u64 = 1024;

#[derive(Debug, Error)]
pub enum BellError {
    #[error(
        "observable {observable} has marginal {marginal}, \
         not uniform within {tol}"
    )]
    UniformityViolation {
        observable: String,
        marginal: f64,
        tol: f64,
    },
    #[error("cannot condition on zero-probability event {event}")]
    ZeroProbabilityEvent { event: String },
    #[error("invalid joint distribution: {0}")]
    InvalidJoint(String),
    #[error("invalid triple: {0}")]
    InvalidTriple(String),
    #[error("scan grid {0} is too coarse, need at least 2 angles")]
    InvalidGrid(usize),
}

fn default_names() -> [String; 3] {
    ["a".to_owned(), "b".to_owned(), "c".to_owned()]
}

/// The statistics entering the inequality: three marginals and the three
/// conditional probabilities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBellTriple")]
pub struct BellTriple {
    pub names: [String; 3],
    pub marginals: [f64; 3],
    pub p_a_plus_given_b_plus: f64,
    pub p_c_plus_given_b_minus: f64,
    pub p_a_plus_given_c_plus: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBellTriple {
    #[serde(default = "default_names")]
    names: [String; 3],
    marginals: [f64; 3],
    p_a_plus_given_b_plus: f64,
    p_c_plus_given_b_minus: f64,
    p_a_plus_given_c_plus: f64,
}

impl TryFrom<RawBellTriple> for BellTriple {
    type Error = BellError;

    fn try_from(raw: RawBellTriple) -> Result<Self, BellError> {
        BellTriple::new(
            raw.names,
            raw.marginals,
            raw.p_a_plus_given_b_plus,
            raw.p_c_plus_given_b_minus,
            raw.p_a_plus_given_c_plus,
        )
    }
}

impl BellTriple {
    pub fn new(
        names: [String; 3],
        marginals: [f64; 3],
        p_a_plus_given_b_plus: f64,
        p_c_plus_given_b_minus: f64,
        p_a_plus_given_c_plus: f64,
    ) -> Result<Self, BellError> {
        let probabilities = [
            marginals[0],
            marginals[1],
            marginals[2],
            p_a_plus_given_b_plus,
            p_c_plus_given_b_minus,
            p_a_plus_given_c_plus,
        ];
        for p in probabilities {
            if !p.is_finite() || !(0.0..=1.0).contains(&p) {
                return Err(BellError::InvalidTriple(format!(
                    "probability {p} lies outside [0, 1]"
                )));
            }
        }
        Ok(BellTriple {
            names,
            marginals,
            p_a_plus_given_b_plus,
            p_c_plus_given_b_minus,
            p_a_plus_given_c_plus,
        })
    }
}

/// Result of checking one triple.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BellCheck {
    pub satisfied: bool,
    pub slack: f64,
}

/// Check the inequality on a triple whose marginals are uniform within
/// `tol`; `slack` is the left-hand side and `satisfied` means
/// `slack >= -tol`.
pub fn check_inequality(triple: &BellTriple, tol: f64) -> Result<BellCheck, BellError> {
    for (name, marginal) in triple.names.iter().zip(triple.marginals) {
        if (marginal - 0.5).abs() > tol {
            return Err(BellError::UniformityViolation {
                observable: name.clone(),
                marginal,
                tol,
            });
        }
    }
    let slack = triple.p_a_plus_given_b_plus + triple.p_c_plus_given_b_minus
        - triple.p_a_plus_given_c_plus;
    Ok(BellCheck {
        satisfied: slack >= -tol,
        slack,
    })
}

/// A joint distribution of three dichotomous variables.
///
/// Weights are indexed by `4*i_a + 2*i_b + i_c` where bit value 0 means
/// the `+` outcome, so index 0 is `(+, +, +)` and index 7 is `(-, -, -)`.
#[derive(Clone, Debug, PartialEq)]
pub struct JointDistribution3 {
    weights: [f64; 8],
}

impl JointDistribution3 {
    pub fn new(weights: [f64; 8]) -> Result<Self, BellError> {
        let mut sum = 0.0;
        for w in weights {
            if !w.is_finite() || w < 0.0 {
                return Err(BellError::InvalidJoint(format!(
                    "weight {w} is not a finite nonnegative number"
                )));
            }
            sum += w;
        }
        if (sum - 1.0).abs() > 1e-12 {
            return Err(BellError::InvalidJoint(format!(
                "weights sum to {sum}, not 1"
            )));
        }
        Ok(JointDistribution3 { weights })
    }

    pub fn from_unnormalized(weights: [f64; 8]) -> Result<Self, BellError> {
        let mut sum = 0.0;
        for w in weights {
            if !w.is_finite() || w < 0.0 {
                return Err(BellError::InvalidJoint(format!(
                    "weight {w} is not a finite nonnegative number"
                )));
            }
            sum += w;
        }
        if sum <= 0.0 {
            return Err(BellError::InvalidJoint("weights sum to zero".into()));
        }
        Ok(JointDistribution3 {
            weights: weights.map(|w| w / sum),
        })
    }

    pub fn uniform() -> Self {
        JointDistribution3 {
            weights: [0.125; 8],
        }
    }

    /// Average each outcome pattern with its sign-flipped partner. The
    /// result has every marginal exactly one half.
    pub fn symmetrized(&self) -> Self {
        let mut weights = [0.0; 8];
        for (i, w) in weights.iter_mut().enumerate() {
            *w = 0.5 * (self.weights[i] + self.weights[7 - i]);
        }
        JointDistribution3 { weights }
    }

    pub fn weights(&self) -> &[f64; 8] {
        &self.weights
    }

    /// Probability that variable `v` (0, 1, or 2) takes the `+` outcome.
    pub fn marginal(&self, v: usize) -> f64 {
        let bit = 4 >> v;
        self.weights
            .iter()
            .enumerate()
            .filter(|(i, _)| i & bit == 0)
            .map(|(_, w)| w)
            .sum()
    }

    /// Joint probabilities of variables `x` and `y`, indexed `[i_x][i_y]`
    /// with 0 meaning `+`.
    pub fn pair_joint(&self, x: usize, y: usize) -> [[f64; 2]; 2] {
        let bx = 4 >> x;
        let by = 4 >> y;
        let mut out = [[0.0; 2]; 2];
        for (i, w) in self.weights.iter().enumerate() {
            let ix = usize::from(i & bx != 0);
            let iy = usize::from(i & by != 0);
            out[ix][iy] += w;
        }
        out
    }
}

/// Extract the inequality's statistics from an explicit joint
/// distribution.
pub fn triple_from_joint(joint: &JointDistribution3) -> Result<BellTriple, BellError> {
    let marginals = [joint.marginal(0), joint.marginal(1), joint.marginal(2)];
    let ab = joint.pair_joint(0, 1);
    let cb = joint.pair_joint(2, 1);
    let ac = joint.pair_joint(0, 2);

    let p_b_plus = marginals[1];
    let p_b_minus = 1.0 - marginals[1];
    let p_c_plus = marginals[2];
    if p_b_plus <= 0.0 {
        return Err(BellError::ZeroProbabilityEvent {
            event: "b = +".into(),
        });
    }
    if p_b_minus <= 0.0 {
        return Err(BellError::ZeroProbabilityEvent {
            event: "b = -".into(),
        });
    }
    if p_c_plus <= 0.0 {
        return Err(BellError::ZeroProbabilityEvent {
            event: "c = +".into(),
        });
    }

    BellTriple::new(
        default_names(),
        marginals,
        ab[0][0] / p_b_plus,
        cb[0][1] / p_b_minus,
        ac[0][0] / p_c_plus,
    )
}

/// Outcome of a randomized search for violations among classical joints.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerificationReport {
    pub trials: u64,
    pub violations: u64,
    pub min_slack: f64,
    pub seed: u64,
}

/// Draw `trials` random joint distributions, symmetrize each so the
/// marginals are uniform, and check the inequality on every one. Classical
/// joints can never violate it, so `violations` is zero up to rounding.
pub fn verify_on_random_spaces(trials: u64, seed: u64) -> VerificationReport {
    let chunks = trials.div_ceil(TRIALS_PER_CHUNK);
    let partials: Vec<(f64, u64)> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk);
            let quota = TRIALS_PER_CHUNK.min(trials - chunk * TRIALS_PER_CHUNK);
            let mut min_slack = f64::INFINITY;
            let mut violations = 0u64;
            for _ in 0..quota {
                let mut weights = [0.0; 8];
                for w in &mut weights {
                    *w = 1.0 - rng.gen::<f64>();
                }
                let joint = JointDistribution3::from_unnormalized(weights)
                    .expect("positive weights form a joint")
                    .symmetrized();
                let triple = triple_from_joint(&joint).expect("uniform marginals");
                let slack = triple.p_a_plus_given_b_plus + triple.p_c_plus_given_b_minus
                    - triple.p_a_plus_given_c_plus;
                min_slack = min_slack.min(slack);
                if slack < -SLACK_TOL {
                    violations += 1;
                }
            }
            (min_slack, violations)
        })
        .collect();

    let mut min_slack = f64::INFINITY;
    let mut violations = 0u64;
    for (chunk_min, chunk_violations) in partials {
        min_slack = min_slack.min(chunk_min);
        violations += chunk_violations;
    }
    if !min_slack.is_finite() {
        min_slack = 0.0;
    }
    VerificationReport {
        trials,
        violations,
        min_slack,
        seed,
    }
}

/// One angle triple whose closed-form transitions violate the inequality.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanViolation {
    pub phi_a: f64,
    pub phi_b: f64,
    pub phi_c: f64,
    pub slack: f64,
}

/// Scan wall angles `k * pi / grid` for `k` in `0..grid` and report every
/// triple whose closed-form disturbing transitions violate the
/// inequality, most negative slack first.
pub fn violation_scan(grid: usize) -> Result<Vec<ScanViolation>, BellError> {
    if grid < 2 {
        return Err(BellError::InvalidGrid(grid));
    }
    let angles: Vec<f64> = (0..grid)
        .map(|k| k as f64 * std::f64::consts::PI / grid as f64)
        .collect();
    let mut violations = Vec::new();
    for &phi_a in &angles {
        for &phi_b in &angles {
            for &phi_c in &angles {
                let t_ab = analytic_transition(phi_b, phi_a);
                let t_cb = analytic_transition(phi_b, phi_c);
                let t_ac = analytic_transition(phi_c, phi_a);
                let slack = t_ab[0][0] + t_cb[1][0] - t_ac[0][0];
                if slack < -SLACK_TOL {
                    violations.push(ScanViolation {
                        phi_a,
                        phi_b,
                        phi_c,
                        slack,
                    });
                }
            }
        }
    }
    violations.sort_by(|x, y| x.slack.total_cmp(&y.slack));
    Ok(violations)
}

/// Estimate the triple for wall angles `[phi_a, phi_b, phi_c]` from
/// disturbing-wall simulations alone: each conditional comes from one
/// two-stage run and each marginal from an independent single-wall count.
pub fn triple_from_disturbing(
    angles: [f64; 3],
    n: u64,
    seed: u64,
) -> Result<BellTriple, SimError> {
    let [phi_a, phi_b, phi_c] = angles;
    let p_a_plus_given_b_plus = disturbing_sequential(phi_b, phi_a, n, seed)?.transitions[0][0];
    let p_c_plus_given_b_minus =
        disturbing_sequential(phi_b, phi_c, n, seed + 1)?.transitions[1][0];
    let p_a_plus_given_c_plus =
        disturbing_sequential(phi_c, phi_a, n, seed + 2)?.transitions[0][0];

    let mut marginals = [0.0; 3];
    for (i, (phi, m)) in angles.iter().zip(marginals.iter_mut()).enumerate() {
        let positions = sample_flies(&FoodField::DiscUniform, &[], n, seed + 3 + i as u64)?;
        let record = measure_split(&positions, &Splitter::Angle { phi: *phi })?;
        *m = record.frequencies["+1"];
    }

    Ok(BellTriple::new(
        default_names(),
        marginals,
        p_a_plus_given_b_plus,
        p_c_plus_given_b_minus,
        p_a_plus_given_c_plus,
    )
    .expect("estimated frequencies are probabilities"))
}
