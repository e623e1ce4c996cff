#![allow(dead_code)]

use proptest::prelude::*;
use std::f64::consts::PI;

use qlrep::kolmogorov::ContextualData;
use qlrep::qlra::{interference_coefficients, InterferenceKind};

pub fn doubly_stochastic(d: f64) -> [[f64; 2]; 2] {
    [[d, 1.0 - d], [1.0 - d, d]]
}

/// Data with the same doubly stochastic transition matrix in both
/// directions, so conditioning is exactly symmetric.
pub fn symmetric_data(p_a: [f64; 2], p_b: [f64; 2], d: f64) -> ContextualData {
    let t = doubly_stochastic(d);
    ContextualData::new(
        ["+1".into(), "-1".into()],
        ["+1".into(), "-1".into()],
        p_a,
        p_b,
        t,
        t,
    )
    .unwrap()
}

/// First-outcome probability produced by priors `(pa1, d)` and a
/// normalized interference coefficient `lambda`.
pub fn interfering_marginal(pa1: f64, d: f64, lambda: f64) -> f64 {
    let first = pa1 * d;
    let second = (1.0 - pa1) * (1.0 - d);
    first + second + 2.0 * (first * second).sqrt() * lambda
}

/// Symmetric data whose first interference coefficient is `cos(theta)`.
pub fn trigonometric_data(pa1: f64, d: f64, theta: f64) -> ContextualData {
    let pb1 = interfering_marginal(pa1, d, theta.cos());
    symmetric_data([pa1, 1.0 - pa1], [pb1, 1.0 - pb1], d)
}

/// Symmetric data whose first interference coefficient is `lambda` with
/// `|lambda| > 1`. The caller must keep the implied marginal inside (0, 1).
pub fn hyperbolic_data(pa1: f64, d: f64, lambda: f64) -> ContextualData {
    let pb1 = interfering_marginal(pa1, d, lambda);
    symmetric_data([pa1, 1.0 - pa1], [pb1, 1.0 - pb1], d)
}

pub fn is_trigonometric(data: &ContextualData) -> bool {
    matches!(
        interference_coefficients(data).map(|r| r.kind),
        Ok(InterferenceKind::Trigonometric)
    )
}

/// Strategy over strictly trigonometric contexts with interior
/// probabilities.
pub fn arb_trigonometric() -> impl Strategy<Value = ContextualData> {
    (0.05f64..0.95, 0.05f64..0.95, 0.1f64..(PI - 0.1))
        .prop_map(|(pa1, d, theta)| trigonometric_data(pa1, d, theta))
        .prop_filter("all four coefficients inside [-1, 1]", is_trigonometric)
}

/// Strategy over hyperbolic contexts with interior probabilities.
pub fn arb_hyperbolic() -> impl Strategy<Value = ContextualData> {
    (0.35f64..0.65, 0.75f64..0.95, 1.05f64..1.4, any::<bool>()).prop_filter_map(
        "implied marginal stays inside (0, 1)",
        |(pa1, d, magnitude, negate)| {
            let lambda = if negate { -magnitude } else { magnitude };
            let pb1 = interfering_marginal(pa1, d, lambda);
            (0.02..0.98)
                .contains(&pb1)
                .then(|| hyperbolic_data(pa1, d, lambda))
        },
    )
}

/// Strategy over normalized weight vectors for a four-atom space.
pub fn arb_weights4() -> impl Strategy<Value = Vec<f64>> {
    [0.05f64..1.0, 0.05f64..1.0, 0.05f64..1.0, 0.05f64..1.0].prop_map(|raw| {
        let total: f64 = raw.iter().sum();
        raw.iter().map(|w| w / total).collect()
    })
}
