//! Finite probability spaces, partition observables, and contextual data.
//!
//! A [`KolmogorovSpace`] is a finite set of labeled atoms with strictly
//! positive weights summing to one. Dichotomous observables are modeled as
//! two-cell partitions of the atom set. From a space, a context (an atom
//! subset with positive weight), and two partition observables one can
//! extract [`ContextualData`]: the two context-conditioned marginals plus
//! the two transition matrices between the observables.
//!
//! Transition matrices are computed on the *unconditioned* space by default
//! ([`TransitionMode::Unconditioned`]): after the first measurement selects
//! a cell, the system re-equilibrates over that cell regardless of the
//! original context. [`TransitionMode::ContextConditioned`] instead keeps
//! the context in every conditioning event; in that mode the data always
//! satisfies the classical chain rule and carries no interference.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute tolerance for normalization invariants (weight sums, marginal
/// sums, transition row sums).
pub const NORM_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum SpaceError {
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("unknown atom {0:?}")]
    UnknownAtom(String),
    #[error("event {0} has zero probability")]
    ZeroProbabilityEvent(String),
    #[error("invalid partition {name:?}: {reason}")]
    InvalidPartition { name: String, reason: String },
    #[error("observable {0:?} has {1} values, expected exactly 2")]
    NotDichotomous(String, usize),
    #[error("invalid contextual data: {0}")]
    InvalidData(String),
}

/// Finite probability space: labeled atoms with positive weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpaceRaw")]
pub struct KolmogorovSpace {
    atoms: Vec<String>,
    weights: Vec<f64>,
}

#[derive(Deserialize)]
struct SpaceRaw {
    atoms: Vec<String>,
    weights: Vec<f64>,
}

impl TryFrom<SpaceRaw> for KolmogorovSpace {
    type Error = SpaceError;
    fn try_from(raw: SpaceRaw) -> Result<Self, SpaceError> {
        KolmogorovSpace::new(raw.atoms, raw.weights)
    }
}

impl KolmogorovSpace {
    pub fn new(atoms: Vec<String>, weights: Vec<f64>) -> Result<Self, SpaceError> {
        if atoms.is_empty() {
            return Err(SpaceError::InvalidWeights("space has no atoms".into()));
        }
        if atoms.len() != weights.len() {
            return Err(SpaceError::InvalidWeights(format!(
                "{} atoms but {} weights",
                atoms.len(),
                weights.len()
            )));
        }
        let mut seen = HashSet::new();
        for a in &atoms {
            if !seen.insert(a.as_str()) {
                return Err(SpaceError::InvalidWeights(format!("duplicate atom {a:?}")));
            }
        }
        for (a, &w) in atoms.iter().zip(&weights) {
            if !w.is_finite() || w <= 0.0 {
                return Err(SpaceError::InvalidWeights(format!(
                    "atom {a:?} has weight {w}, must be strictly positive"
                )));
            }
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > NORM_TOL {
            return Err(SpaceError::InvalidWeights(format!(
                "weights sum to {sum}, expected 1 within {NORM_TOL:e}"
            )));
        }
        Ok(Self { atoms, weights })
    }

    /// Uniform space over the given atom labels.
    pub fn uniform<S: Into<String>>(atoms: Vec<S>) -> Result<Self, SpaceError> {
        let atoms: Vec<String> = atoms.into_iter().map(Into::into).collect();
        let n = atoms.len();
        if n == 0 {
            return Err(SpaceError::InvalidWeights("space has no atoms".into()));
        }
        let weights = vec![1.0 / n as f64; n];
        // A uniform vector may sum to 1 only within rounding; bypass the sum
        // check since the construction is exact by intent.
        Ok(Self { atoms, weights })
    }

    pub fn atoms(&self) -> &[String] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn index_of(&self, label: &str) -> Result<usize, SpaceError> {
        self.atoms
            .iter()
            .position(|a| a == label)
            .ok_or_else(|| SpaceError::UnknownAtom(label.to_string()))
    }

    /// Total weight of an event given as a list of atom labels (duplicates
    /// are ignored; the event is a set).
    pub fn event_weight<S: AsRef<str>>(&self, event: &[S]) -> Result<f64, SpaceError> {
        let mut seen = HashSet::new();
        let mut total = 0.0;
        for label in event {
            let idx = self.index_of(label.as_ref())?;
            if seen.insert(idx) {
                total += self.weights[idx];
            }
        }
        Ok(total)
    }

    /// Conditional distribution: the sub-space carrying the event's atoms
    /// with weights renormalized by the event weight (Bayes' formula).
    pub fn conditional<S: AsRef<str>>(&self, event: &[S]) -> Result<Self, SpaceError> {
        let mut keep = vec![false; self.atoms.len()];
        for label in event {
            keep[self.index_of(label.as_ref())?] = true;
        }
        let total: f64 = self
            .weights
            .iter()
            .zip(&keep)
            .filter(|(_, &k)| k)
            .map(|(w, _)| w)
            .sum();
        if total <= 0.0 {
            return Err(SpaceError::ZeroProbabilityEvent(format_event(event)));
        }
        let mut atoms = Vec::new();
        let mut weights = Vec::new();
        for (i, &kept) in keep.iter().enumerate() {
            if kept {
                atoms.push(self.atoms[i].clone());
                weights.push(self.weights[i] / total);
            }
        }
        Ok(Self { atoms, weights })
    }
}

fn format_event<S: AsRef<str>>(event: &[S]) -> String {
    let labels: Vec<&str> = event.iter().map(AsRef::as_ref).collect();
    format!("{{{}}}", labels.join(", "))
}

/// Observable defined by a partition of the atom set: one cell per outcome
/// value. Measuring the observable reports which cell the atom lies in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PartitionRaw")]
pub struct PartitionObservable {
    name: String,
    values: Vec<String>,
    cells: Vec<Vec<String>>,
}

#[derive(Deserialize)]
struct PartitionRaw {
    name: String,
    values: Vec<String>,
    cells: Vec<Vec<String>>,
}

impl TryFrom<PartitionRaw> for PartitionObservable {
    type Error = SpaceError;
    fn try_from(raw: PartitionRaw) -> Result<Self, SpaceError> {
        PartitionObservable::new(raw.name, raw.values, raw.cells)
    }
}

impl PartitionObservable {
    pub fn new(
        name: impl Into<String>,
        values: Vec<impl Into<String>>,
        cells: Vec<Vec<impl Into<String>>>,
    ) -> Result<Self, SpaceError> {
        let name = name.into();
        let values: Vec<String> = values.into_iter().map(Into::into).collect();
        let cells: Vec<Vec<String>> = cells
            .into_iter()
            .map(|c| c.into_iter().map(Into::into).collect())
            .collect();
        let invalid = |reason: String| SpaceError::InvalidPartition {
            name: name.clone(),
            reason,
        };
        if values.is_empty() {
            return Err(invalid("no outcome values".into()));
        }
        if values.len() != cells.len() {
            return Err(invalid(format!(
                "{} values but {} cells",
                values.len(),
                cells.len()
            )));
        }
        let mut seen_values = HashSet::new();
        for v in &values {
            if !seen_values.insert(v.as_str()) {
                return Err(invalid(format!("duplicate value {v:?}")));
            }
        }
        let mut seen_atoms = HashSet::new();
        for (v, cell) in values.iter().zip(&cells) {
            if cell.is_empty() {
                return Err(invalid(format!("cell for value {v:?} is empty")));
            }
            for atom in cell {
                if !seen_atoms.insert(atom.as_str()) {
                    return Err(invalid(format!(
                        "atom {atom:?} appears in more than one cell"
                    )));
                }
            }
        }
        Ok(Self {
            name,
            values,
            cells,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn values(&self) -> &[String] {
        &self.values
    }

    pub fn cells(&self) -> &[Vec<String>] {
        &self.cells
    }

    /// Check that the cells exactly cover the space's atom set.
    pub fn validate_against(&self, space: &KolmogorovSpace) -> Result<(), SpaceError> {
        let mut covered = HashSet::new();
        for cell in &self.cells {
            for atom in cell {
                space.index_of(atom)?;
                covered.insert(atom.as_str());
            }
        }
        if covered.len() != space.atoms().len() {
            let missing: Vec<&str> = space
                .atoms()
                .iter()
                .map(String::as_str)
                .filter(|a| !covered.contains(a))
                .collect();
            return Err(SpaceError::InvalidPartition {
                name: self.name.clone(),
                reason: format!("cells do not cover atoms {missing:?}"),
            });
        }
        Ok(())
    }
}

fn intersect(lhs: &[String], rhs: &[String]) -> Vec<String> {
    let set: HashSet<&str> = rhs.iter().map(String::as_str).collect();
    lhs.iter()
        .filter(|a| set.contains(a.as_str()))
        .cloned()
        .collect()
}

/// Transition matrix between two partition observables on one space.
///
/// Entry `[i][j]` is `P(to_j | from_i)`, conditioned by Bayes' formula on
/// the i-th cell of `from`. Rows sum to one.
pub fn transition_probabilities(
    space: &KolmogorovSpace,
    from: &PartitionObservable,
    to: &PartitionObservable,
) -> Result<Vec<Vec<f64>>, SpaceError> {
    from.validate_against(space)?;
    to.validate_against(space)?;
    let mut matrix = Vec::with_capacity(from.cells().len());
    for from_cell in from.cells() {
        let denom = space.event_weight(from_cell)?;
        let mut row = Vec::with_capacity(to.cells().len());
        for to_cell in to.cells() {
            let joint = space.event_weight(&intersect(from_cell, to_cell))?;
            row.push(joint / denom);
        }
        matrix.push(row);
    }
    Ok(matrix)
}

/// How transition matrices are conditioned during extraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransitionMode {
    /// Transitions conditioned only on the first outcome's cell; the
    /// context enters through the marginals alone.
    #[default]
    Unconditioned,
    /// Transitions conditioned on cell-and-context. Classical chain-rule
    /// semantics; extracted data shows no interference.
    ContextConditioned,
}

/// Marginals and transition matrices for a pair of dichotomous observables
/// measured under one context.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ContextualDataRaw")]
pub struct ContextualData {
    a_values: [String; 2],
    b_values: [String; 2],
    p_a: [f64; 2],
    p_b: [f64; 2],
    t_b_given_a: [[f64; 2]; 2],
    t_a_given_b: [[f64; 2]; 2],
}

#[derive(Deserialize)]
struct ContextualDataRaw {
    a_values: [String; 2],
    b_values: [String; 2],
    p_a: [f64; 2],
    p_b: [f64; 2],
    t_b_given_a: [[f64; 2]; 2],
    t_a_given_b: [[f64; 2]; 2],
}

impl TryFrom<ContextualDataRaw> for ContextualData {
    type Error = SpaceError;
    fn try_from(raw: ContextualDataRaw) -> Result<Self, SpaceError> {
        ContextualData::new(
            raw.a_values,
            raw.b_values,
            raw.p_a,
            raw.p_b,
            raw.t_b_given_a,
            raw.t_a_given_b,
        )
    }
}

fn check_distribution(name: &str, dist: &[f64]) -> Result<(), SpaceError> {
    for &p in dist {
        if !p.is_finite() || !(0.0..=1.0).contains(&p) {
            return Err(SpaceError::InvalidData(format!(
                "{name} entry {p} outside [0, 1]"
            )));
        }
    }
    let sum: f64 = dist.iter().sum();
    if (sum - 1.0).abs() > NORM_TOL {
        return Err(SpaceError::InvalidData(format!(
            "{name} sums to {sum}, expected 1 within {NORM_TOL:e}"
        )));
    }
    Ok(())
}

impl ContextualData {
    pub fn new(
        a_values: [String; 2],
        b_values: [String; 2],
        p_a: [f64; 2],
        p_b: [f64; 2],
        t_b_given_a: [[f64; 2]; 2],
        t_a_given_b: [[f64; 2]; 2],
    ) -> Result<Self, SpaceError> {
        if a_values[0] == a_values[1] {
            return Err(SpaceError::InvalidData(format!(
                "duplicate a-value {:?}",
                a_values[0]
            )));
        }
        if b_values[0] == b_values[1] {
            return Err(SpaceError::InvalidData(format!(
                "duplicate b-value {:?}",
                b_values[0]
            )));
        }
        check_distribution("p_a", &p_a)?;
        check_distribution("p_b", &p_b)?;
        for (i, row) in t_b_given_a.iter().enumerate() {
            check_distribution(&format!("t_b_given_a row {i}"), row)?;
        }
        for (i, row) in t_a_given_b.iter().enumerate() {
            check_distribution(&format!("t_a_given_b row {i}"), row)?;
        }
        Ok(Self {
            a_values,
            b_values,
            p_a,
            p_b,
            t_b_given_a,
            t_a_given_b,
        })
    }

    pub fn a_values(&self) -> &[String; 2] {
        &self.a_values
    }

    pub fn b_values(&self) -> &[String; 2] {
        &self.b_values
    }

    pub fn p_a(&self) -> [f64; 2] {
        self.p_a
    }

    pub fn p_b(&self) -> [f64; 2] {
        self.p_b
    }

    /// Rows indexed by a-value, columns by b-value.
    pub fn t_b_given_a(&self) -> [[f64; 2]; 2] {
        self.t_b_given_a
    }

    /// Rows indexed by b-value, columns by a-value.
    pub fn t_a_given_b(&self) -> [[f64; 2]; 2] {
        self.t_a_given_b
    }

    /// Project onto exactly symmetric, doubly stochastic transitions by
    /// averaging the diagonal transition weights. Marginals are kept. Used
    /// to strip Monte Carlo noise before amplitude reconstruction, whose
    /// phase constraint presumes symmetric conditioning exactly.
    pub fn symmetrized(&self) -> Self {
        let d = (self.t_b_given_a[0][0]
            + self.t_b_given_a[1][1]
            + self.t_a_given_b[0][0]
            + self.t_a_given_b[1][1])
            / 4.0;
        let t = [[d, 1.0 - d], [1.0 - d, d]];
        Self {
            a_values: self.a_values.clone(),
            b_values: self.b_values.clone(),
            p_a: self.p_a,
            p_b: self.p_b,
            t_b_given_a: t,
            t_a_given_b: t,
        }
    }

    pub fn check_conditions(&self, tolerance: f64) -> ConditionReport {
        check_conditions(self, tolerance)
    }
}

/// Outcome of the structural checks on contextual data.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionReport {
    /// Symmetric conditioning: `t_b_given_a[i][j] == t_a_given_b[j][i]`.
    pub r1: bool,
    pub r1_max_deviation: f64,
    /// All transition entries strictly positive.
    pub r2: bool,
    /// All marginal entries strictly positive.
    pub r2a: bool,
    /// Columns of `t_b_given_a` sum to one.
    pub doubly_stochastic: bool,
    pub b_given_a_column_sums: [f64; 2],
}

pub fn check_conditions(data: &ContextualData, tolerance: f64) -> ConditionReport {
    let t_ba = data.t_b_given_a();
    let t_ab = data.t_a_given_b();
    let mut r1_max_deviation: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            r1_max_deviation = r1_max_deviation.max((t_ba[i][j] - t_ab[j][i]).abs());
        }
    }
    let r2 = t_ba
        .iter()
        .chain(t_ab.iter())
        .flatten()
        .all(|&p| p > 0.0);
    let r2a = data
        .p_a()
        .iter()
        .chain(data.p_b().iter())
        .all(|&p| p > 0.0);
    let column_sums = [t_ba[0][0] + t_ba[1][0], t_ba[0][1] + t_ba[1][1]];
    let doubly_stochastic = column_sums.iter().all(|&s| (s - 1.0).abs() <= tolerance);
    ConditionReport {
        r1: r1_max_deviation <= tolerance,
        r1_max_deviation,
        r2,
        r2a,
        doubly_stochastic,
        b_given_a_column_sums: column_sums,
    }
}

/// Extract contextual data for observables `a` and `b` under `context`.
///
/// Marginals are probabilities under the context-conditioned distribution.
/// Transition matrices follow `mode` (see [`TransitionMode`]).
pub fn extract_contextual_data<S: AsRef<str>>(
    space: &KolmogorovSpace,
    context: &[S],
    a: &PartitionObservable,
    b: &PartitionObservable,
    mode: TransitionMode,
) -> Result<ContextualData, SpaceError> {
    a.validate_against(space)?;
    b.validate_against(space)?;
    if a.values().len() != 2 {
        return Err(SpaceError::NotDichotomous(
            a.name().to_string(),
            a.values().len(),
        ));
    }
    if b.values().len() != 2 {
        return Err(SpaceError::NotDichotomous(
            b.name().to_string(),
            b.values().len(),
        ));
    }
    let context: Vec<String> = context
        .iter()
        .map(|s| s.as_ref().to_string())
        .collect();
    let w_context = space.event_weight(&context)?;
    if w_context <= 0.0 {
        return Err(SpaceError::ZeroProbabilityEvent("context".into()));
    }

    let a_cells = a.cells();
    let b_cells = b.cells();
    let mut p_a = [0.0; 2];
    let mut p_b = [0.0; 2];
    for i in 0..2 {
        p_a[i] = space.event_weight(&intersect(&a_cells[i], &context))? / w_context;
        p_b[i] = space.event_weight(&intersect(&b_cells[i], &context))? / w_context;
    }

    let mut t_b_given_a = [[0.0; 2]; 2];
    let mut t_a_given_b = [[0.0; 2]; 2];
    match mode {
        TransitionMode::Unconditioned => {
            for i in 0..2 {
                for j in 0..2 {
                    let joint = space.event_weight(&intersect(&a_cells[i], &b_cells[j]))?;
                    if joint <= 0.0 {
                        return Err(SpaceError::ZeroProbabilityEvent(format!(
                            "{}={} and {}={}",
                            a.name(),
                            a.values()[i],
                            b.name(),
                            b.values()[j]
                        )));
                    }
                    t_b_given_a[i][j] = joint / space.event_weight(&a_cells[i])?;
                    t_a_given_b[j][i] = joint / space.event_weight(&b_cells[j])?;
                }
            }
        }
        TransitionMode::ContextConditioned => {
            for i in 0..2 {
                let a_in_context = intersect(&a_cells[i], &context);
                let w_a = space.event_weight(&a_in_context)?;
                if w_a <= 0.0 {
                    return Err(SpaceError::ZeroProbabilityEvent(format!(
                        "{}={} within context",
                        a.name(),
                        a.values()[i]
                    )));
                }
                for j in 0..2 {
                    let joint =
                        space.event_weight(&intersect(&a_in_context, &b_cells[j]))?;
                    t_b_given_a[i][j] = joint / w_a;
                }
            }
            for j in 0..2 {
                let b_in_context = intersect(&b_cells[j], &context);
                let w_b = space.event_weight(&b_in_context)?;
                if w_b <= 0.0 {
                    return Err(SpaceError::ZeroProbabilityEvent(format!(
                        "{}={} within context",
                        b.name(),
                        b.values()[j]
                    )));
                }
                for i in 0..2 {
                    let joint =
                        space.event_weight(&intersect(&b_in_context, &a_cells[i]))?;
                    t_a_given_b[j][i] = joint / w_b;
                }
            }
        }
    }

    ContextualData::new(
        [a.values()[0].clone(), a.values()[1].clone()],
        [b.values()[0].clone(), b.values()[1].clone()],
        p_a,
        p_b,
        t_b_given_a,
        t_a_given_b,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn firefly_uniform() -> KolmogorovSpace {
        KolmogorovSpace::uniform(vec!["w1", "w2", "w3", "w4"]).unwrap()
    }

    fn firefly_weighted() -> KolmogorovSpace {
        KolmogorovSpace::new(
            vec!["w1".into(), "w2".into(), "w3".into(), "w4".into()],
            vec![0.1, 0.2, 0.3, 0.4],
        )
        .unwrap()
    }

    fn split_a() -> PartitionObservable {
        PartitionObservable::new("a", vec!["+1", "-1"], vec![vec!["w1", "w2"], vec!["w3", "w4"]])
            .unwrap()
    }

    fn split_b() -> PartitionObservable {
        PartitionObservable::new("b", vec!["+1", "-1"], vec![vec!["w1", "w4"], vec!["w2", "w3"]])
            .unwrap()
    }

    #[test]
    fn conditional_renormalizes_by_bayes() {
        let space = firefly_weighted();
        let cond = space.conditional(&["w1", "w4"]).unwrap();
        assert_eq!(cond.atoms(), &["w1".to_string(), "w4".to_string()]);
        assert!((cond.weights()[0] - 0.2).abs() < 1e-15);
        assert!((cond.weights()[1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn conditional_is_idempotent() {
        let space = firefly_weighted();
        let once = space.conditional(&["w1", "w4"]).unwrap();
        let twice = once.conditional(&["w1", "w4"]).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn conditional_rejects_empty_event() {
        let space = firefly_uniform();
        let err = space.conditional(&[] as &[&str]).unwrap_err();
        assert!(matches!(err, SpaceError::ZeroProbabilityEvent(_)));
    }

    #[test]
    fn unknown_atom_is_reported() {
        let space = firefly_uniform();
        let err = space.event_weight(&["nope"]).unwrap_err();
        assert!(matches!(err, SpaceError::UnknownAtom(l) if l == "nope"));
    }

    #[test]
    fn uniform_space_has_flat_transitions() {
        let space = firefly_uniform();
        let t = transition_probabilities(&space, &split_a(), &split_b()).unwrap();
        for row in &t {
            for &p in row {
                assert!((p - 0.5).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn weighted_space_transition_matches_hand_computation() {
        let space = firefly_weighted();
        let t = transition_probabilities(&space, &split_a(), &split_b()).unwrap();
        assert!((t[0][0] - 0.1 / 0.3).abs() < 1e-15);
        assert!((t[0][1] - 0.2 / 0.3).abs() < 1e-15);
        assert!((t[1][0] - 0.4 / 0.7).abs() < 1e-15);
        assert!((t[1][1] - 0.3 / 0.7).abs() < 1e-15);
    }

    #[test]
    fn transition_to_self_is_identity() {
        let space = firefly_weighted();
        let t = transition_probabilities(&space, &split_a(), &split_a()).unwrap();
        assert_eq!(t, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
    }

    #[test]
    fn transition_rows_are_stochastic() {
        let space = firefly_weighted();
        let t = transition_probabilities(&space, &split_a(), &split_b()).unwrap();
        for row in &t {
            let sum: f64 = row.iter().sum();
            assert!((sum - 1.0).abs() <= NORM_TOL);
        }
    }

    #[test]
    fn extract_full_context_gives_flat_data() {
        let space = firefly_uniform();
        let data = extract_contextual_data(
            &space,
            &["w1", "w2", "w3", "w4"],
            &split_a(),
            &split_b(),
            TransitionMode::Unconditioned,
        )
        .unwrap();
        assert_eq!(data.p_a(), [0.5, 0.5]);
        assert_eq!(data.p_b(), [0.5, 0.5]);
        for row in data.t_b_given_a() {
            assert_eq!(row, [0.5, 0.5]);
        }
    }

    #[test]
    fn extract_with_degenerate_marginal_is_flagged_not_rejected() {
        let space = firefly_uniform();
        let data = extract_contextual_data(
            &space,
            &["w1", "w2"],
            &split_a(),
            &split_b(),
            TransitionMode::Unconditioned,
        )
        .unwrap();
        assert_eq!(data.p_a(), [1.0, 0.0]);
        let report = data.check_conditions(1e-9);
        assert!(!report.r2a);
        assert!(report.r2);
    }

    #[test]
    fn extract_single_atom_context() {
        let space = firefly_uniform();
        let data = extract_contextual_data(
            &space,
            &["w1"],
            &split_a(),
            &split_b(),
            TransitionMode::Unconditioned,
        )
        .unwrap();
        assert_eq!(data.p_b(), [1.0, 0.0]);
        assert!(!data.check_conditions(1e-9).r2a);
    }

    #[test]
    fn extract_rejects_empty_intersection() {
        // a measured against itself: off-diagonal cells never meet.
        let space = firefly_uniform();
        let err = extract_contextual_data(
            &space,
            &["w1", "w2", "w3", "w4"],
            &split_a(),
            &split_a(),
            TransitionMode::Unconditioned,
        )
        .unwrap_err();
        assert!(matches!(err, SpaceError::ZeroProbabilityEvent(_)));
    }

    #[test]
    fn context_conditioned_mode_differs_from_unconditioned() {
        let space = firefly_weighted();
        let ctx = ["w1", "w2", "w3"];
        let plain = extract_contextual_data(
            &space,
            &ctx,
            &split_a(),
            &split_b(),
            TransitionMode::Unconditioned,
        )
        .unwrap();
        let conditioned = extract_contextual_data(
            &space,
            &ctx,
            &split_a(),
            &split_b(),
            TransitionMode::ContextConditioned,
        )
        .unwrap();
        assert!((plain.t_a_given_b()[0][0] - 0.2).abs() < 1e-15);
        assert!((conditioned.t_a_given_b()[0][0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn context_conditioned_mode_obeys_chain_rule() {
        let space = firefly_weighted();
        let ctx = ["w1", "w2", "w3"];
        let data = extract_contextual_data(
            &space,
            &ctx,
            &split_a(),
            &split_b(),
            TransitionMode::ContextConditioned,
        )
        .unwrap();
        for j in 0..2 {
            let total: f64 = (0..2).map(|i| data.p_a()[i] * data.t_b_given_a()[i][j]).sum();
            assert!((total - data.p_b()[j]).abs() <= NORM_TOL);
        }
    }

    #[test]
    fn r1_holds_iff_opposite_cells_balance() {
        // Intersection masses are m[0][0] = w1, m[0][1] = w2, m[1][0] = w4,
        // m[1][1] = w3, and the symmetry condition needs m[0][0] = m[1][1]
        // and m[0][1] = m[1][0].
        let balanced = KolmogorovSpace::new(
            vec!["w1".into(), "w2".into(), "w3".into(), "w4".into()],
            vec![0.2, 0.3, 0.2, 0.3],
        )
        .unwrap();
        let data = extract_contextual_data(
            &balanced,
            &["w1", "w2", "w3", "w4"],
            &split_a(),
            &split_b(),
            TransitionMode::Unconditioned,
        )
        .unwrap();
        assert!(data.check_conditions(1e-12).r1);

        let lopsided = KolmogorovSpace::new(
            vec!["w1".into(), "w2".into(), "w3".into(), "w4".into()],
            vec![0.3, 0.3, 0.2, 0.2],
        )
        .unwrap();
        let data = extract_contextual_data(
            &lopsided,
            &["w1", "w2", "w3", "w4"],
            &split_a(),
            &split_b(),
            TransitionMode::Unconditioned,
        )
        .unwrap();
        assert!(!data.check_conditions(1e-9).r1);
    }

    #[test]
    fn symmetrized_data_is_exactly_symmetric() {
        let data = ContextualData::new(
            ["+1".into(), "-1".into()],
            ["+1".into(), "-1".into()],
            [0.5, 0.5],
            [0.6, 0.4],
            [[0.71, 0.29], [0.3, 0.7]],
            [[0.7, 0.3], [0.29, 0.71]],
        )
        .unwrap();
        let sym = data.symmetrized();
        let report = sym.check_conditions(0.0);
        assert!(report.r1);
        assert!(report.doubly_stochastic);
        assert_eq!(sym.p_b(), data.p_b());
    }

    #[test]
    fn partition_rejects_overlap_and_gaps() {
        let overlap = PartitionObservable::new(
            "bad",
            vec!["x", "y"],
            vec![vec!["w1", "w2"], vec!["w2", "w3"]],
        );
        assert!(matches!(
            overlap,
            Err(SpaceError::InvalidPartition { .. })
        ));

        let gappy =
            PartitionObservable::new("gap", vec!["x", "y"], vec![vec!["w1"], vec!["w2"]]).unwrap();
        let err = gappy.validate_against(&firefly_uniform()).unwrap_err();
        assert!(matches!(err, SpaceError::InvalidPartition { .. }));
    }

    #[test]
    fn space_rejects_bad_weights() {
        let err = KolmogorovSpace::new(vec!["a".into(), "b".into()], vec![0.5, 0.6]).unwrap_err();
        assert!(matches!(err, SpaceError::InvalidWeights(_)));
        let err = KolmogorovSpace::new(vec!["a".into(), "b".into()], vec![1.0, 0.0]).unwrap_err();
        assert!(matches!(err, SpaceError::InvalidWeights(_)));
    }

    #[test]
    fn serde_round_trip_preserves_space_and_data() {
        let space = firefly_weighted();
        let json = serde_json::to_string(&space).unwrap();
        assert!(json.contains("\"atoms\"") && json.contains("\"weights\""));
        let back: KolmogorovSpace = serde_json::from_str(&json).unwrap();
        assert_eq!(space, back);

        let data = extract_contextual_data(
            &space,
            &["w1", "w2", "w3"],
            &split_a(),
            &split_b(),
            TransitionMode::Unconditioned,
        )
        .unwrap();
        let json = serde_json::to_string(&data).unwrap();
        for key in [
            "a_values",
            "b_values",
            "p_a",
            "p_b",
            "t_b_given_a",
            "t_a_given_b",
        ] {
            assert!(json.contains(&format!("\"{key}\"")), "missing {key}");
        }
        let back: ContextualData = serde_json::from_str(&json).unwrap();
        assert_eq!(data, back);
    }

    #[test]
    fn deserialization_enforces_invariants() {
        let bad = r#"{"atoms":["a","b"],"weights":[0.7,0.7]}"#;
        assert!(serde_json::from_str::<KolmogorovSpace>(bad).is_err());
        let bad = r#"{
            "a_values":["+1","-1"],"b_values":["+1","-1"],
            "p_a":[0.5,0.5],"p_b":[0.9,0.2],
            "t_b_given_a":[[0.5,0.5],[0.5,0.5]],
            "t_a_given_b":[[0.5,0.5],[0.5,0.5]]
        }"#;
        assert!(serde_json::from_str::<ContextualData>(bad).is_err());
    }
}
