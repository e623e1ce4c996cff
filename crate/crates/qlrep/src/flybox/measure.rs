//! Wall measurements and sequential measurement protocols.
//!
//! A splitter wall cuts the geometry into two halves and classifies each
//! fly by side. Sequential protocols estimate a full contextual data set:
//! marginals come from context-conditioned samples, transition rows from
//! fresh samples equilibrated over the outcome half of the full field (or,
//! for disturbing walls, over the post-measurement sine density).

use std::f64::consts::{PI, TAU};

use indexmap::IndexMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::field::{FoodField, Geometry, Position, Region, Sampler};
use super::{Disturbance, SimError, SurvivalSpec};
use crate::frequency::OutcomeSequence;
use crate::kolmogorov::ContextualData;

/// RNG stream ids: each protocol stage owns a block of this many worker
/// streams, so stages never share random numbers.
const STREAMS_PER_STAGE: u64 = 1024;

const STAGE_FIRST_MARGINAL: u64 = 0;
const STAGE_SECOND_MARGINAL: u64 = 1;
const STAGE_SECOND_GIVEN_FIRST: u64 = 2;
const STAGE_FIRST_GIVEN_SECOND: u64 = 4;

/// A wall that splits the geometry into two labeled halves. The first
/// label always owns the boundary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Splitter {
    /// Wall at `x = 1/2`; outcomes `left` / `right`.
    Vertical,
    /// Wall at `y = 1/2`; outcomes `top` / `bottom`.
    Horizontal,
    /// Diameter at angle `phi`; outcome `+1` is the half-open sector
    /// `[phi, phi + pi)`.
    Angle { phi: f64 },
}

impl Splitter {
    pub fn geometry(&self) -> Geometry {
        match self {
            Splitter::Vertical | Splitter::Horizontal => Geometry::Square,
            Splitter::Angle { .. } => Geometry::Disc,
        }
    }

    pub fn labels(&self) -> [String; 2] {
        match self {
            Splitter::Vertical => ["left".into(), "right".into()],
            Splitter::Horizontal => ["top".into(), "bottom".into()],
            Splitter::Angle { .. } => ["+1".into(), "-1".into()],
        }
    }

    /// Outcome index of a position; boundary positions go to outcome 0.
    pub fn classify(&self, p: Position) -> usize {
        match self {
            Splitter::Vertical => usize::from(p.x > 0.5),
            Splitter::Horizontal => usize::from(p.y < 0.5),
            Splitter::Angle { phi } => usize::from((p.angle() - phi).rem_euclid(TAU) >= PI),
        }
    }

    /// The half of the geometry carrying an outcome.
    pub fn outcome_region(&self, outcome: usize) -> Region {
        match (self, outcome) {
            (Splitter::Vertical, 0) => Region::Rect {
                x: [0.0, 0.5],
                y: [0.0, 1.0],
            },
            (Splitter::Vertical, _) => Region::Rect {
                x: [0.5, 1.0],
                y: [0.0, 1.0],
            },
            (Splitter::Horizontal, 0) => Region::Rect {
                x: [0.0, 1.0],
                y: [0.5, 1.0],
            },
            (Splitter::Horizontal, _) => Region::Rect {
                x: [0.0, 1.0],
                y: [0.0, 0.5],
            },
            (Splitter::Angle { phi }, 0) => Region::Sector {
                start: *phi,
                span: PI,
            },
            (Splitter::Angle { phi }, _) => Region::Sector {
                start: phi + PI,
                span: PI,
            },
        }
    }

    pub fn angle(&self) -> Option<f64> {
        match self {
            Splitter::Angle { phi } => Some(*phi),
            _ => None,
        }
    }

    pub(crate) fn validate(&self, geometry: Geometry) -> Result<(), SimError> {
        if let Splitter::Angle { phi } = self {
            if !phi.is_finite() {
                return Err(SimError::InvalidScenario(
                    "splitter angle must be finite".into(),
                ));
            }
        }
        if self.geometry() != geometry {
            return Err(SimError::InvalidScenario(format!(
                "splitter {self:?} does not fit {geometry:?} geometry"
            )));
        }
        Ok(())
    }
}

/// Counts and frequencies of one measurement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub counts: IndexMap<String, u64>,
    pub frequencies: IndexMap<String, f64>,
    /// Samples that survived filtering; equals the sum of `counts`.
    pub survivors: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<RecordMeta>,
}

/// Provenance of a record produced by a scenario run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordMeta {
    pub seed: u64,
    /// Samples requested before survival filtering.
    pub requested: u64,
    pub scenario_hash: String,
}

impl MeasurementRecord {
    fn from_counts(labels: [String; 2], counts: [u64; 2]) -> Self {
        let survivors = counts[0] + counts[1];
        let freq = |c: u64| {
            if survivors == 0 {
                0.0
            } else {
                c as f64 / survivors as f64
            }
        };
        let frequencies = labels
            .iter()
            .zip(counts)
            .map(|(l, c)| (l.clone(), freq(c)))
            .collect();
        let counts = labels.iter().cloned().zip(counts).collect();
        Self {
            counts,
            frequencies,
            survivors,
            meta: None,
        }
    }

    pub(crate) fn with_meta(mut self, meta: RecordMeta) -> Self {
        self.meta = Some(meta);
        self
    }
}

/// Classify recorded positions by a splitter.
pub fn measure_split(
    positions: &[Position],
    splitter: &Splitter,
) -> Result<MeasurementRecord, SimError> {
    if positions.is_empty() {
        return Err(SimError::EmptySample);
    }
    let mut counts = [0u64; 2];
    for &p in positions {
        counts[splitter.classify(p)] += 1;
    }
    Ok(MeasurementRecord::from_counts(splitter.labels(), counts))
}

pub(crate) struct StageSpec<'a> {
    pub name: &'a str,
    /// Weighted samplers; one entry means a fixed context, several mean a
    /// per-fly draw over an ensemble of contexts.
    pub samplers: &'a [(Sampler, f64)],
    pub splitter: &'a Splitter,
    pub survival: Option<&'a SurvivalSpec>,
    pub n: u64,
    pub seed: u64,
    pub stage: u64,
    pub workers: u64,
    pub record: bool,
}

pub(crate) struct StageOutput {
    pub counts: [u64; 2],
    pub survivors: u64,
    pub outcomes: Option<Vec<u8>>,
}

/// Run one measurement stage: draw, classify, filter, count.
///
/// Worker `w` of a stage consumes the ChaCha stream
/// `stage * STREAMS_PER_STAGE + w` of the scenario seed, and partial counts
/// merge in worker order, so output depends only on `(seed, workers)`.
pub(crate) fn run_stage(spec: &StageSpec) -> Result<StageOutput, SimError> {
    let workers = spec.workers.max(1);
    let context_cumulative: Vec<f64> = if spec.samplers.len() > 1 {
        let total: f64 = spec.samplers.iter().map(|(_, w)| w).sum();
        let mut acc = 0.0;
        spec.samplers
            .iter()
            .map(|(_, w)| {
                acc += w / total;
                acc
            })
            .collect()
    } else {
        Vec::new()
    };

    let base = spec.n / workers;
    let extra = spec.n % workers;
    let parts: Vec<([u64; 2], Option<Vec<u8>>)> = (0..workers)
        .into_par_iter()
        .map(|w| {
            let quota = base + u64::from(w < extra);
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(spec.stage * STREAMS_PER_STAGE + w);
            let mut counts = [0u64; 2];
            let mut recorded = spec.record.then(|| Vec::with_capacity(quota as usize));
            for _ in 0..quota {
                let sampler = if context_cumulative.is_empty() {
                    &spec.samplers[0].0
                } else {
                    let u: f64 = rng.gen();
                    let idx = context_cumulative
                        .partition_point(|&c| c <= u)
                        .min(spec.samplers.len() - 1);
                    &spec.samplers[idx].0
                };
                let position = sampler.draw(&mut rng);
                let outcome = spec.splitter.classify(position);
                if let Some(survival) = spec.survival {
                    let rate = survival.rate(position, outcome);
                    if rate < 1.0 && rng.gen::<f64>() >= rate {
                        continue;
                    }
                }
                counts[outcome] += 1;
                if let Some(seq) = &mut recorded {
                    seq.push(outcome as u8);
                }
            }
            (counts, recorded)
        })
        .collect();

    let mut counts = [0u64; 2];
    let mut outcomes = spec.record.then(Vec::new);
    for (part_counts, part_seq) in parts {
        counts[0] += part_counts[0];
        counts[1] += part_counts[1];
        if let (Some(all), Some(part)) = (&mut outcomes, part_seq) {
            all.extend(part);
        }
    }
    let survivors = counts[0] + counts[1];
    if survivors == 0 {
        return Err(SimError::AllSamplesKilled {
            stage: spec.name.into(),
        });
    }
    Ok(StageOutput {
        counts,
        survivors,
        outcomes,
    })
}

pub(crate) struct ProtocolSpec<'a> {
    pub field: &'a FoodField,
    pub marginal_samplers: &'a [(Sampler, f64)],
    pub first: &'a Splitter,
    pub second: &'a Splitter,
    pub disturbance: &'a Disturbance,
    pub survival: Option<&'a SurvivalSpec>,
    pub n: u64,
    pub seed: u64,
    pub workers: u64,
    pub record: bool,
}

pub(crate) struct ProtocolOutput {
    pub data: ContextualData,
    pub records: IndexMap<String, MeasurementRecord>,
    pub sequences: Vec<(String, OutcomeSequence)>,
}

fn frequencies(out: &StageOutput) -> [f64; 2] {
    [
        out.counts[0] as f64 / out.survivors as f64,
        out.counts[1] as f64 / out.survivors as f64,
    ]
}

/// Estimate a full contextual data set with one splitter pair.
///
/// Marginals condition on the context; transition rows re-equilibrate over
/// the outcome half of the unconditioned field (nondisturbing walls) or
/// over the post-measurement sine density (disturbing walls).
pub(crate) fn sequential_protocol(spec: &ProtocolSpec) -> Result<ProtocolOutput, SimError> {
    let geometry = spec.field.geometry();
    spec.first.validate(geometry)?;
    spec.second.validate(geometry)?;

    let mut records = IndexMap::new();
    let mut sequences = Vec::new();

    let (p_a, p_b) = {
        let mut marginal =
            |name: &str, splitter: &Splitter, stage: u64| -> Result<[f64; 2], SimError> {
                let out = run_stage(&StageSpec {
                    name,
                    samplers: spec.marginal_samplers,
                    splitter,
                    survival: spec.survival,
                    n: spec.n,
                    seed: spec.seed,
                    stage,
                    workers: spec.workers,
                    record: spec.record,
                })?;
                let freq = frequencies(&out);
                records.insert(
                    name.to_string(),
                    MeasurementRecord::from_counts(splitter.labels(), out.counts),
                );
                if let Some(outcomes) = out.outcomes {
                    let labels = splitter.labels();
                    let sequence = OutcomeSequence::from_indices(name, labels.to_vec(), outcomes)
                        .expect("stage outputs at least one outcome with two known labels");
                    sequences.push((name.to_string(), sequence));
                }
                Ok(freq)
            };
        (
            marginal("first", spec.first, STAGE_FIRST_MARGINAL)?,
            marginal("second", spec.second, STAGE_SECOND_MARGINAL)?,
        )
    };

    let first_labels = spec.first.labels();
    let second_labels = spec.second.labels();
    let (t_b_given_a, t_a_given_b) = {
        let mut transition_row = |prepared: &Splitter,
                                  prepared_outcome: usize,
                                  measured: &Splitter,
                                  stage: u64,
                                  key: String|
         -> Result<[f64; 2], SimError> {
            let sampler = match spec.disturbance {
                Disturbance::None => Sampler::new(
                    spec.field,
                    &[prepared.outcome_region(prepared_outcome)],
                )?,
                Disturbance::SectorSine => {
                    let phi = prepared.angle().ok_or_else(|| {
                        SimError::InvalidScenario(
                            "sector-sine disturbance needs angle splitters".into(),
                        )
                    })?;
                    let redistributed = FoodField::DiscSectorSine {
                        reference_angle: phi + prepared_outcome as f64 * PI,
                    };
                    Sampler::new(&redistributed, &[])?
                }
                Disturbance::Custom { plus, minus } => {
                    let chosen = if prepared_outcome == 0 { plus } else { minus };
                    let redistributed = FoodField::from_spec(geometry, chosen)?;
                    Sampler::new(&redistributed, &[])?
                }
            };
            let samplers = [(sampler, 1.0)];
            let out = run_stage(&StageSpec {
                name: &key,
                samplers: &samplers,
                splitter: measured,
                survival: spec.survival,
                n: spec.n,
                seed: spec.seed,
                stage,
                workers: spec.workers,
                record: false,
            })?;
            let freq = frequencies(&out);
            records.insert(
                key,
                MeasurementRecord::from_counts(measured.labels(), out.counts),
            );
            Ok(freq)
        };

        let mut t_b_given_a = [[0.0; 2]; 2];
        for (i, row) in t_b_given_a.iter_mut().enumerate() {
            *row = transition_row(
                spec.first,
                i,
                spec.second,
                STAGE_SECOND_GIVEN_FIRST + i as u64,
                format!("second|first={}", first_labels[i]),
            )?;
        }
        let mut t_a_given_b = [[0.0; 2]; 2];
        for (j, row) in t_a_given_b.iter_mut().enumerate() {
            *row = transition_row(
                spec.second,
                j,
                spec.first,
                STAGE_FIRST_GIVEN_SECOND + j as u64,
                format!("first|second={}", second_labels[j]),
            )?;
        }
        (t_b_given_a, t_a_given_b)
    };

    let data = ContextualData::new(first_labels, second_labels, p_a, p_b, t_b_given_a, t_a_given_b)?;
    Ok(ProtocolOutput {
        data,
        records,
        sequences,
    })
}

/// Estimate contextual data with equilibrating (nondisturbing) walls.
pub fn nondisturbing_sequential(
    field: &FoodField,
    context: &[Region],
    first: &Splitter,
    second: &Splitter,
    n: u64,
    seed: u64,
) -> Result<ContextualData, SimError> {
    if n == 0 {
        return Err(SimError::InvalidScenario("n must be at least 1".into()));
    }
    let marginal_samplers = [(Sampler::new(field, context)?, 1.0)];
    sequential_protocol(&ProtocolSpec {
        field,
        marginal_samplers: &marginal_samplers,
        first,
        second,
        disturbance: &Disturbance::None,
        survival: None,
        n,
        seed,
        workers: 1,
        record: false,
    })
    .map(|out| out.data)
}

/// One disturbing sub-experiment: the preparation wall at `reference_angle`
/// redistributes the flies onto a sine density, the measurement wall at
/// `splitter_angle` then splits them.
#[derive(Clone, Debug, Serialize)]
pub struct DisturbingRecord {
    pub reference_angle: f64,
    pub splitter_angle: f64,
    /// `transitions[i][j]`: frequency of measured outcome `j` after
    /// preparing outcome `i`.
    pub transitions: [[f64; 2]; 2],
    /// Closed-form expectation for the same angles.
    pub analytic: [[f64; 2]; 2],
    pub branch_records: [MeasurementRecord; 2],
}

/// Estimate the transition matrix of a disturbing measurement pair.
pub fn disturbing_sequential(
    phi0: f64,
    phi: f64,
    n: u64,
    seed: u64,
) -> Result<DisturbingRecord, SimError> {
    if n == 0 {
        return Err(SimError::InvalidScenario("n must be at least 1".into()));
    }
    if !phi0.is_finite() || !phi.is_finite() {
        return Err(SimError::InvalidScenario(
            "splitter angles must be finite".into(),
        ));
    }
    let measured = Splitter::Angle { phi };
    let mut transitions = [[0.0; 2]; 2];
    let mut branch_records = Vec::with_capacity(2);
    for (i, row) in transitions.iter_mut().enumerate() {
        let field = FoodField::DiscSectorSine {
            reference_angle: phi0 + i as f64 * PI,
        };
        let samplers = [(Sampler::new(&field, &[])?, 1.0)];
        let out = run_stage(&StageSpec {
            name: "disturbing",
            samplers: &samplers,
            splitter: &measured,
            survival: None,
            n,
            seed,
            stage: STAGE_SECOND_GIVEN_FIRST + i as u64,
            workers: 1,
            record: false,
        })?;
        *row = frequencies(&out);
        branch_records.push(MeasurementRecord::from_counts(measured.labels(), out.counts));
    }
    let branch_records = match <[MeasurementRecord; 2]>::try_from(branch_records) {
        Ok(r) => r,
        Err(_) => unreachable!("exactly two branches"),
    };
    Ok(DisturbingRecord {
        reference_angle: phi0,
        splitter_angle: phi,
        transitions,
        analytic: analytic_transition(phi0, phi),
        branch_records,
    })
}

/// Closed-form disturbing transition matrix for preparation angle `phi0`
/// and measurement angle `phi`.
pub fn analytic_transition(phi0: f64, phi: f64) -> [[f64; 2]; 2] {
    let half = 0.5 * (phi - phi0);
    let same = half.cos().powi(2);
    let other = half.sin().powi(2);
    [[same, other], [other, same]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flybox::field::{sample_flies, FieldSpec};
    use crate::kolmogorov::{transition_probabilities, KolmogorovSpace, PartitionObservable};

    fn uniform_square() -> FoodField {
        FoodField::from_spec(Geometry::Square, &FieldSpec::Uniform).unwrap()
    }

    #[test]
    fn split_counts_follow_sides_with_ties_to_first() {
        let positions = [
            Position { x: 0.2, y: 0.3 },
            Position { x: 0.5, y: 0.9 },
            Position { x: 0.7, y: 0.1 },
        ];
        let record = measure_split(&positions, &Splitter::Vertical).unwrap();
        assert_eq!(record.counts["left"], 2);
        assert_eq!(record.counts["right"], 1);
        assert_eq!(record.survivors, 3);

        let record = measure_split(&positions, &Splitter::Horizontal).unwrap();
        assert_eq!(record.counts["top"], 1);
        assert_eq!(record.counts["bottom"], 2);
    }

    #[test]
    fn angle_boundary_goes_to_plus_side() {
        let splitter = Splitter::Angle { phi: 1.0 };
        assert_eq!(splitter.classify(Position::from_polar(0.5, 1.0)), 0);
        assert_eq!(splitter.classify(Position::from_polar(0.5, 1.0 + PI)), 1);
        assert_eq!(splitter.classify(Position::from_polar(0.5, 0.99)), 1);
    }

    #[test]
    fn empty_measurements_are_rejected() {
        assert!(matches!(
            measure_split(&[], &Splitter::Vertical),
            Err(SimError::EmptySample)
        ));
    }

    #[test]
    fn uniform_square_splits_evenly() {
        let flies = sample_flies(&uniform_square(), &[], 100_000, 21).unwrap();
        let record = measure_split(&flies, &Splitter::Vertical).unwrap();
        assert!((record.frequencies["left"] - 0.5).abs() < 0.005);
    }

    #[test]
    fn uniform_disc_splits_evenly_at_any_angle() {
        let flies = sample_flies(&FoodField::DiscUniform, &[], 100_000, 22).unwrap();
        let record = measure_split(&flies, &Splitter::Angle { phi: 0.7 }).unwrap();
        assert!((record.frequencies["+1"] - 0.5).abs() < 0.005);
    }

    #[test]
    fn analytic_transition_closed_forms() {
        let identity = analytic_transition(0.3, 0.3);
        assert_eq!(identity[0][0], 1.0);
        assert_eq!(identity[0][1], 0.0);

        let third = analytic_transition(0.0, PI / 3.0);
        assert!((third[0][0] - 0.75).abs() < 1e-12);
        assert!((third[0][1] - 0.25).abs() < 1e-12);

        let anti = analytic_transition(0.0, PI);
        assert!(anti[0][0].abs() < 1e-12);
        assert!((anti[0][1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn analytic_transition_is_doubly_stochastic_and_symmetric() {
        for k in 0..64 {
            let delta = k as f64 * TAU / 64.0 - PI;
            let t = analytic_transition(0.9, 0.9 + delta);
            assert!((t[0][0] + t[0][1] - 1.0).abs() < 1e-12);
            assert!((t[0][0] + t[1][0] - 1.0).abs() < 1e-12);
            assert!((t[0][1] - t[1][0]).abs() < 1e-12);
        }
    }

    #[test]
    fn disturbing_estimates_match_closed_form_over_an_angle_grid() {
        let n = 50_000u64;
        for (run, (phi0, phi)) in [
            (0.0, PI / 3.0),
            (0.0, 2.6),
            (0.7, 0.1),
            (1.4, 2.9),
            (2.2, 1.1),
        ]
        .into_iter()
        .enumerate()
        {
            let record = disturbing_sequential(phi0, phi, n, 9 + run as u64).unwrap();
            for i in 0..2 {
                let row = record.transitions[i];
                assert!((row[0] + row[1] - 1.0).abs() < 1e-12);
                for j in 0..2 {
                    let p = record.analytic[i][j];
                    let bound = 3.0 * (p * (1.0 - p) / n as f64).sqrt();
                    let gap = (record.transitions[i][j] - p).abs();
                    assert!(
                        gap <= bound,
                        "angles ({phi0},{phi}) entry ({i},{j}) off by {gap}, bound {bound}"
                    );
                }
            }
        }
    }

    #[test]
    fn identical_angles_never_leak() {
        let record = disturbing_sequential(1.1, 1.1, 20_000, 3).unwrap();
        assert_eq!(record.transitions[0][0], 1.0);
        assert_eq!(record.transitions[1][1], 1.0);
    }

    #[test]
    fn nondisturbing_uniform_square_is_symmetric() {
        let data = nondisturbing_sequential(
            &uniform_square(),
            &[],
            &Splitter::Vertical,
            &Splitter::Horizontal,
            100_000,
            31,
        )
        .unwrap();
        for value in [data.p_a()[0], data.p_b()[0]] {
            assert!((value - 0.5).abs() < 0.005);
        }
        for row in data.t_b_given_a().iter().chain(data.t_a_given_b().iter()) {
            assert!((row[0] - 0.5).abs() < 0.005);
        }
        let report = data.check_conditions(0.02);
        assert!(report.r1 && report.doubly_stochastic);
    }

    #[test]
    fn nondisturbing_estimates_match_exact_conditioning() {
        let field = FoodField::from_spec(
            Geometry::Square,
            &FieldSpec::Grid {
                weights: vec![vec![0.1, 0.2], vec![0.3, 0.4]],
            },
        )
        .unwrap();
        let n = 200_000u64;
        let data = nondisturbing_sequential(
            &field,
            &[],
            &Splitter::Vertical,
            &Splitter::Horizontal,
            n,
            5,
        )
        .unwrap();

        let space = KolmogorovSpace::new(
            vec!["bl".into(), "br".into(), "tl".into(), "tr".into()],
            vec![0.1, 0.2, 0.3, 0.4],
        )
        .unwrap();
        let side = PartitionObservable::new(
            "side",
            vec!["left", "right"],
            vec![vec!["bl", "tl"], vec!["br", "tr"]],
        )
        .unwrap();
        let level = PartitionObservable::new(
            "level",
            vec!["top", "bottom"],
            vec![vec!["tl", "tr"], vec!["bl", "br"]],
        )
        .unwrap();
        let exact_ba = transition_probabilities(&space, &side, &level).unwrap();
        let exact_ab = transition_probabilities(&space, &level, &side).unwrap();

        let three_sigma = |p: f64| 3.0 * (p * (1.0 - p) / n as f64).sqrt();
        for i in 0..2 {
            for j in 0..2 {
                let exact = exact_ba[i][j];
                let gap = (data.t_b_given_a()[i][j] - exact).abs();
                assert!(gap < three_sigma(exact), "t_b_given_a[{i}][{j}] off by {gap}");
                let exact = exact_ab[i][j];
                let gap = (data.t_a_given_b()[i][j] - exact).abs();
                assert!(gap < three_sigma(exact), "t_a_given_b[{i}][{j}] off by {gap}");
            }
        }
        assert!((data.p_a()[0] - 0.4).abs() < three_sigma(0.4));
        assert!((data.p_b()[0] - 0.7).abs() < three_sigma(0.7));
    }

    #[test]
    fn degenerate_context_yields_certain_marginal() {
        let context = [Region::Rect {
            x: [0.0, 0.5],
            y: [0.0, 1.0],
        }];
        let data = nondisturbing_sequential(
            &uniform_square(),
            &context,
            &Splitter::Vertical,
            &Splitter::Horizontal,
            1_000,
            8,
        )
        .unwrap();
        assert_eq!(data.p_a(), [1.0, 0.0]);
    }

    #[test]
    fn splitters_must_match_geometry() {
        let err = nondisturbing_sequential(
            &uniform_square(),
            &[],
            &Splitter::Angle { phi: 0.0 },
            &Splitter::Horizontal,
            100,
            1,
        )
        .unwrap_err();
        assert!(matches!(err, SimError::InvalidScenario(_)));
    }
}
