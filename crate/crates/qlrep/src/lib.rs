//! Contextual probability toolkit.
//!
//! The crate models experiments in which the same pair of dichotomous
//! observables is probed under different contexts (preparation conditions).
//! It provides:
//!
//! - [`kolmogorov`]: finite probability spaces, partition observables, and
//!   extraction of contextual data (marginals plus transition matrices);
//! - [`frequency`]: relative-frequency estimation and stabilization checks
//!   for long outcome sequences;
//! - [`qlra`]: reconstruction of complex or hyperbolic probability
//!   amplitudes from contextual data, together with the 2x2 operator
//!   representation of the two observables;
//! - [`hyperbolic`]: split-complex numbers backing the hyperbolic branch;
//! - [`flybox`]: a seeded Monte Carlo simulator for a fly in a box divided
//!   by movable walls, including disturbing (redistributing) measurements;
//! - [`bell`]: a Bell-type inequality for three dichotomous observables on
//!   one space, with analytic and Monte Carlo violation witnesses.

pub mod bell;
pub mod flybox;
pub mod frequency;
pub mod hyperbolic;
pub mod kolmogorov;
pub mod qlra;
