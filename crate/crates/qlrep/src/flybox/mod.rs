//! Monte Carlo fly-box experiments.
//!
//! Flies settle onto a food field inside a box; walls split the box and
//! the counts on each side estimate observable statistics. Scenarios
//! compose a field, a hidden geometric context, two splitter walls,
//! optional disturbing redistribution, optional survival filtering, and
//! optional run-to-run context fluctuation into one seeded, reproducible
//! estimation run.

pub mod field;
pub mod measure;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use field::{sample_flies, FieldSpec, FoodField, Geometry, GridField, Position, Region, Sampler};
pub use measure::{
    analytic_transition, disturbing_sequential, measure_split, nondisturbing_sequential,
    DisturbingRecord, MeasurementRecord, RecordMeta, Splitter,
};

use crate::frequency::OutcomeSequence;
use crate::kolmogorov::{ConditionReport, ContextualData, SpaceError};
use field::Sampler as ContextSampler;
use measure::{sequential_protocol, ProtocolSpec};

/// Tolerance for the structural condition report attached to scenario
/// outcomes; sized for Monte Carlo noise, not for exact data.
pub const CONDITION_REPORT_TOL: f64 = 1e-2;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("context region has zero field measure")]
    ZeroMeasureContext,
    #[error("survival filtering killed every sample in stage {stage:?}")]
    AllSamplesKilled { stage: String },
    #[error("no positions to measure")]
    EmptySample,
    #[error("invalid field: {0}")]
    InvalidField(String),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("estimated data is inconsistent: {0}")]
    Estimate(#[from] SpaceError),
}

/// Post-measurement redistribution behavior of the walls.
///
/// Serialized as the strings `"none"` / `"sector_sine"`, or as an object
/// `{"plus": field, "minus": field}` for custom redistribution.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "DisturbanceWire", into = "DisturbanceWire")]
pub enum Disturbance {
    /// Walls select without changing the field: flies re-equilibrate onto
    /// the original density restricted to the selected half.
    #[default]
    None,
    /// Walls redistribute the selected flies onto the sine density anchored
    /// at the wall angle. Requires angle splitters.
    SectorSine,
    /// Walls redistribute the selected flies onto a caller-supplied density
    /// per prepared outcome, over the whole geometry.
    Custom { plus: FieldSpec, minus: FieldSpec },
}

#[derive(Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum DisturbanceWire {
    Named(NamedDisturbance),
    Custom { plus: FieldSpec, minus: FieldSpec },
}

#[derive(Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum NamedDisturbance {
    None,
    SectorSine,
}

impl From<DisturbanceWire> for Disturbance {
    fn from(wire: DisturbanceWire) -> Self {
        match wire {
            DisturbanceWire::Named(NamedDisturbance::None) => Disturbance::None,
            DisturbanceWire::Named(NamedDisturbance::SectorSine) => Disturbance::SectorSine,
            DisturbanceWire::Custom { plus, minus } => Disturbance::Custom { plus, minus },
        }
    }
}

impl From<Disturbance> for DisturbanceWire {
    fn from(disturbance: Disturbance) -> Self {
        match disturbance {
            Disturbance::None => DisturbanceWire::Named(NamedDisturbance::None),
            Disturbance::SectorSine => DisturbanceWire::Named(NamedDisturbance::SectorSine),
            Disturbance::Custom { plus, minus } => DisturbanceWire::Custom { plus, minus },
        }
    }
}

/// Per-measurement retention probability, `s` in `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SurvivalSpec {
    /// Position-independent thinning; unbiased.
    Constant { rate: f64 },
    /// Position-dependent retention: `inside` applies within the region,
    /// `outside` elsewhere.
    Region {
        region: Region,
        inside: f64,
        outside: f64,
    },
    /// Outcome-dependent retention: `plus` applies to the first outcome of
    /// the wall being measured, `minus` to the second.
    SideBias { plus: f64, minus: f64 },
}

impl SurvivalSpec {
    pub(crate) fn rate(&self, position: Position, outcome: usize) -> f64 {
        match self {
            SurvivalSpec::Constant { rate } => *rate,
            SurvivalSpec::Region {
                region,
                inside,
                outside,
            } => {
                if region.contains(position) {
                    *inside
                } else {
                    *outside
                }
            }
            SurvivalSpec::SideBias { plus, minus } => {
                if outcome == 0 {
                    *plus
                } else {
                    *minus
                }
            }
        }
    }

    fn validate(&self, geometry: Geometry) -> Result<(), SimError> {
        let rates = match self {
            SurvivalSpec::Constant { rate } => vec![*rate],
            SurvivalSpec::Region {
                region,
                inside,
                outside,
            } => {
                region.validate(geometry)?;
                vec![*inside, *outside]
            }
            SurvivalSpec::SideBias { plus, minus } => vec![*plus, *minus],
        };
        for rate in rates {
            if !rate.is_finite() || !(0.0..=1.0).contains(&rate) {
                return Err(SimError::InvalidScenario(format!(
                    "survival rate {rate} must lie in [0, 1]"
                )));
            }
        }
        Ok(())
    }
}

/// One context of an ensemble with its selection weight.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightedContext {
    pub regions: Vec<Region>,
    pub weight: f64,
}

/// Run-to-run context fluctuation: each fly draws its context from this
/// distribution before settling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSpec {
    pub contexts: Vec<WeightedContext>,
}

fn default_workers() -> u64 {
    1
}

/// Complete description of one fly-box estimation run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlyBoxScenario {
    pub geometry: Geometry,
    pub field: FieldSpec,
    /// Fixed hidden context; empty means the whole geometry.
    #[serde(default)]
    pub context: Vec<Region>,
    pub first: Splitter,
    pub second: Splitter,
    #[serde(default)]
    pub disturbance: Disturbance,
    #[serde(default)]
    pub survival: Option<SurvivalSpec>,
    /// Mutually exclusive with `context`.
    #[serde(default)]
    pub ensemble: Option<EnsembleSpec>,
    /// Samples per measurement stage.
    pub n: u64,
    pub seed: u64,
    /// Parallel RNG streams per stage; results depend on this count, and
    /// the default of 1 keeps runs bit-reproducible across machines.
    #[serde(default = "default_workers")]
    pub workers: u64,
    /// Keep the per-fly outcome sequences of the two marginal stages.
    #[serde(default)]
    pub record_sequences: bool,
}

impl FlyBoxScenario {
    fn validate(&self) -> Result<(), SimError> {
        if self.n == 0 {
            return Err(SimError::InvalidScenario("n must be at least 1".into()));
        }
        if self.workers == 0 {
            return Err(SimError::InvalidScenario(
                "workers must be at least 1".into(),
            ));
        }
        self.first.validate(self.geometry)?;
        self.second.validate(self.geometry)?;
        for region in &self.context {
            region.validate(self.geometry)?;
        }
        if let Some(survival) = &self.survival {
            survival.validate(self.geometry)?;
        }
        if let Some(ensemble) = &self.ensemble {
            if !self.context.is_empty() {
                return Err(SimError::InvalidScenario(
                    "use either a fixed context or an ensemble, not both".into(),
                ));
            }
            if ensemble.contexts.is_empty() {
                return Err(SimError::InvalidScenario(
                    "ensemble needs at least one context".into(),
                ));
            }
            for weighted in &ensemble.contexts {
                if !weighted.weight.is_finite() || weighted.weight <= 0.0 {
                    return Err(SimError::InvalidScenario(format!(
                        "ensemble weight {} must be positive",
                        weighted.weight
                    )));
                }
                for region in &weighted.regions {
                    region.validate(self.geometry)?;
                }
            }
        }
        match &self.disturbance {
            Disturbance::None => {}
            Disturbance::SectorSine => {
                if self.first.angle().is_none() || self.second.angle().is_none() {
                    return Err(SimError::InvalidScenario(
                        "sector-sine disturbance requires angle splitters".into(),
                    ));
                }
            }
            Disturbance::Custom { plus, minus } => {
                FoodField::from_spec(self.geometry, plus)?;
                FoodField::from_spec(self.geometry, minus)?;
            }
        }
        Ok(())
    }
}

/// SHA-256 of the scenario's canonical JSON form.
pub fn scenario_hash(scenario: &FlyBoxScenario) -> String {
    let json = serde_json::to_string(scenario).expect("scenario serializes");
    Sha256::digest(json.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Identification of a finished run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScenarioMeta {
    pub seed: u64,
    pub n: u64,
    pub workers: u64,
    pub scenario_hash: String,
}

/// A recorded marginal-stage outcome sequence.
#[derive(Clone, Debug)]
pub struct RecordedSequence {
    pub stage: String,
    pub sequence: OutcomeSequence,
}

/// Everything a scenario run produces.
#[derive(Clone, Debug, Serialize)]
pub struct ScenarioOutcome {
    pub data: ContextualData,
    /// Structural checks of `data` at [`CONDITION_REPORT_TOL`].
    pub conditions: ConditionReport,
    pub records: IndexMap<String, MeasurementRecord>,
    pub meta: ScenarioMeta,
    /// Present only when the scenario asked for recorded sequences; not
    /// part of the serialized outcome (export them as CSV instead).
    #[serde(skip)]
    pub sequences: Vec<RecordedSequence>,
}

/// Run a scenario end to end: sample, filter, measure, estimate.
pub fn run_scenario(scenario: &FlyBoxScenario) -> Result<ScenarioOutcome, SimError> {
    scenario.validate()?;
    let field = FoodField::from_spec(scenario.geometry, &scenario.field)?;
    let hash = scenario_hash(scenario);

    let marginal_samplers: Vec<(ContextSampler, f64)> = match &scenario.ensemble {
        Some(ensemble) => ensemble
            .contexts
            .iter()
            .map(|weighted| Ok((ContextSampler::new(&field, &weighted.regions)?, weighted.weight)))
            .collect::<Result<_, SimError>>()?,
        None => vec![(ContextSampler::new(&field, &scenario.context)?, 1.0)],
    };

    let output = sequential_protocol(&ProtocolSpec {
        field: &field,
        marginal_samplers: &marginal_samplers,
        first: &scenario.first,
        second: &scenario.second,
        disturbance: &scenario.disturbance,
        survival: scenario.survival.as_ref(),
        n: scenario.n,
        seed: scenario.seed,
        workers: scenario.workers,
        record: scenario.record_sequences,
    })?;

    let conditions = output.data.check_conditions(CONDITION_REPORT_TOL);
    let meta = RecordMeta {
        seed: scenario.seed,
        requested: scenario.n,
        scenario_hash: hash.clone(),
    };
    let records: IndexMap<String, MeasurementRecord> = output
        .records
        .into_iter()
        .map(|(name, record)| (name, record.with_meta(meta.clone())))
        .collect();
    let sequences = output
        .sequences
        .into_iter()
        .map(|(stage, sequence)| RecordedSequence { stage, sequence })
        .collect();

    Ok(ScenarioOutcome {
        data: output.data,
        conditions,
        records,
        meta: ScenarioMeta {
            seed: scenario.seed,
            n: scenario.n,
            workers: scenario.workers,
            scenario_hash: hash,
        },
        sequences,
    })
}
