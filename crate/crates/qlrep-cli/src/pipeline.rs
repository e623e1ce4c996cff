//! Multi-stage runner: simulate, estimate, reconstruct, and check in one
//! seeded pass, leaving every artifact and a manifest in one directory.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::json;

use qlrep::bell::{check_inequality, verify_on_random_spaces, violation_scan, BellTriple};
use qlrep::flybox::{run_scenario, FlyBoxScenario, ScenarioOutcome};
use qlrep::frequency::{default_window, detect_stabilization, DEFAULT_STABILIZATION_TOL};
use qlrep::qlra::{build_amplitude, Amplitude, PhaseBranch, DEFAULT_CHECK_TOL};

use crate::error::{
    from_bell, from_frequency, from_io, from_json, from_qlra, from_sim, CliError,
};
use crate::seed_override;

const STAGE: &str = "pipeline";

fn default_true() -> bool {
    true
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PipelineConfig {
    /// Overrides every stage and scenario seed; QLRA_SEED overrides this.
    #[serde(default)]
    seed: Option<u64>,
    output_dir: PathBuf,
    stages: Vec<StageConfig>,
}

#[derive(Deserialize)]
#[serde(tag = "stage", rename_all = "snake_case")]
enum StageConfig {
    Simulate {
        scenario: ScenarioSource,
    },
    Estimate {
        #[serde(default)]
        window: Option<usize>,
        #[serde(default)]
        tol: Option<f64>,
    },
    Qlra {
        #[serde(default)]
        tolerance: Option<f64>,
        #[serde(default)]
        mirror_phase: bool,
        #[serde(default = "default_true")]
        symmetrize: bool,
    },
    Bell {
        #[serde(flatten)]
        job: BellJob,
    },
}

/// Either a path to a scenario file or the scenario inline.
#[derive(Deserialize)]
#[serde(untagged)]
enum ScenarioSource {
    Path(String),
    Inline(Box<FlyBoxScenario>),
}

#[derive(Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
enum BellJob {
    Check {
        input: PathBuf,
        #[serde(default)]
        tol: Option<f64>,
    },
    Verify {
        #[serde(default)]
        trials: Option<u64>,
        #[serde(default)]
        seed: Option<u64>,
    },
    Scan {
        grid: usize,
    },
}

#[derive(Serialize)]
struct Manifest {
    timestamp_unix: u64,
    version: &'static str,
    /// Seed forced onto every stage, when one was set.
    seed: Option<u64>,
    stages: Vec<StageRecord>,
}

#[derive(Serialize)]
struct StageRecord {
    stage: &'static str,
    artifacts: Vec<String>,
    summary: serde_json::Value,
}

pub fn run(config_path: &Path) -> Result<(), CliError> {
    let text = fs::read_to_string(config_path).map_err(|e| from_io(STAGE, e))?;
    let config: PipelineConfig =
        serde_json::from_str(&text).map_err(|e| from_json(STAGE, e))?;
    let effective_seed = seed_override(STAGE)?.or(config.seed);

    let mut saw_simulate = false;
    for stage in &config.stages {
        match stage {
            StageConfig::Simulate { .. } => saw_simulate = true,
            StageConfig::Estimate { .. } | StageConfig::Qlra { .. } if !saw_simulate => {
                return Err(CliError::schema(
                    STAGE,
                    "estimate and qlra stages require a prior simulate stage",
                ));
            }
            _ => {}
        }
    }

    fs::create_dir_all(&config.output_dir).map_err(|e| from_io(STAGE, e))?;

    let mut last_outcome: Option<ScenarioOutcome> = None;
    let mut records: Vec<StageRecord> = Vec::new();
    for (idx, stage) in config.stages.iter().enumerate() {
        let prefix = format!("{:02}", idx + 1);
        let record = match stage {
            StageConfig::Simulate { scenario } => run_simulate_stage(
                &config.output_dir,
                &prefix,
                scenario,
                effective_seed,
                &mut last_outcome,
            )?,
            StageConfig::Estimate { window, tol } => {
                let outcome = require_outcome(&last_outcome, "estimate")?;
                run_estimate_stage(&config.output_dir, &prefix, *window, *tol, outcome)?
            }
            StageConfig::Qlra {
                tolerance,
                mirror_phase,
                symmetrize,
            } => {
                let outcome = require_outcome(&last_outcome, "qlra")?;
                run_qlra_stage(
                    &config.output_dir,
                    &prefix,
                    tolerance.unwrap_or(DEFAULT_CHECK_TOL),
                    *mirror_phase,
                    *symmetrize,
                    outcome,
                )?
            }
            StageConfig::Bell { job } => {
                run_bell_stage(&config.output_dir, &prefix, job, effective_seed)?
            }
        };
        records.push(record);
    }

    let manifest = Manifest {
        timestamp_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        version: env!("CARGO_PKG_VERSION"),
        seed: effective_seed,
        stages: records,
    };
    let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| from_json(STAGE, e))?;
    text.push('\n');
    fs::write(config.output_dir.join("manifest.json"), &text)
        .map_err(|e| from_io(STAGE, e))?;
    print!("{text}");
    Ok(())
}

fn require_outcome<'a>(
    outcome: &'a Option<ScenarioOutcome>,
    name: &str,
) -> Result<&'a ScenarioOutcome, CliError> {
    outcome.as_ref().ok_or_else(|| {
        CliError::schema(name, format!("{name} stage requires a prior simulate stage"))
    })
}

fn pretty(stage: &str, value: &impl Serialize) -> Result<Vec<u8>, CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| from_json(stage, e))?;
    text.push('\n');
    Ok(text.into_bytes())
}

fn write_artifact(
    dir: &Path,
    stage: &str,
    name: String,
    bytes: &[u8],
    artifacts: &mut Vec<String>,
) -> Result<(), CliError> {
    fs::write(dir.join(&name), bytes).map_err(|e| from_io(stage, e))?;
    artifacts.push(name);
    Ok(())
}

fn run_simulate_stage(
    dir: &Path,
    prefix: &str,
    source: &ScenarioSource,
    effective_seed: Option<u64>,
    last_outcome: &mut Option<ScenarioOutcome>,
) -> Result<StageRecord, CliError> {
    const NAME: &str = "simulate";
    let mut scenario = match source {
        ScenarioSource::Path(path) => {
            let text = fs::read_to_string(path).map_err(|e| from_io(NAME, e))?;
            serde_json::from_str::<FlyBoxScenario>(&text).map_err(|e| from_json(NAME, e))?
        }
        ScenarioSource::Inline(scenario) => (**scenario).clone(),
    };
    scenario.record_sequences = true;
    if let Some(seed) = effective_seed {
        scenario.seed = seed;
    }
    let outcome = run_scenario(&scenario).map_err(|e| from_sim(NAME, e))?;

    let mut artifacts = Vec::new();
    write_artifact(
        dir,
        NAME,
        format!("{prefix}_scenario_outcome.json"),
        &pretty(NAME, &outcome)?,
        &mut artifacts,
    )?;
    write_artifact(
        dir,
        NAME,
        format!("{prefix}_data.json"),
        &pretty(NAME, &outcome.data)?,
        &mut artifacts,
    )?;
    for recorded in &outcome.sequences {
        let mut buf = Vec::new();
        recorded
            .sequence
            .write_csv(&mut buf)
            .map_err(|e| from_frequency(NAME, e))?;
        write_artifact(
            dir,
            NAME,
            format!("{prefix}_sequence_{}.csv", recorded.stage),
            &buf,
            &mut artifacts,
        )?;
    }
    let survivors: serde_json::Map<String, serde_json::Value> = outcome
        .records
        .iter()
        .map(|(name, record)| (name.clone(), json!(record.survivors)))
        .collect();
    let summary = json!({
        "scenario_hash": outcome.meta.scenario_hash,
        "n": outcome.meta.n,
        "seed": outcome.meta.seed,
        "survivors": survivors,
    });
    *last_outcome = Some(outcome);
    Ok(StageRecord {
        stage: NAME,
        artifacts,
        summary,
    })
}

fn run_estimate_stage(
    dir: &Path,
    prefix: &str,
    window: Option<usize>,
    tol: Option<f64>,
    outcome: &ScenarioOutcome,
) -> Result<StageRecord, CliError> {
    const NAME: &str = "estimate";
    let mut artifacts = Vec::new();
    let mut summary = serde_json::Map::new();
    for recorded in &outcome.sequences {
        let window = window.unwrap_or_else(|| default_window(recorded.sequence.len()));
        let tol = tol.unwrap_or(DEFAULT_STABILIZATION_TOL);
        let report = detect_stabilization(&recorded.sequence, window, tol)
            .map_err(|e| from_frequency(NAME, e))?;
        write_artifact(
            dir,
            NAME,
            format!("{prefix}_stabilization_{}.json", recorded.stage),
            &pretty(NAME, &report)?,
            &mut artifacts,
        )?;
        summary.insert(
            recorded.stage.clone(),
            json!({"stabilized": report.stabilized, "max_drift": report.max_drift}),
        );
    }
    Ok(StageRecord {
        stage: NAME,
        artifacts,
        summary: summary.into(),
    })
}

fn run_qlra_stage(
    dir: &Path,
    prefix: &str,
    tolerance: f64,
    mirror_phase: bool,
    symmetrize: bool,
    outcome: &ScenarioOutcome,
) -> Result<StageRecord, CliError> {
    const NAME: &str = "qlra";
    let mut data = outcome.data.clone();
    if symmetrize {
        data = data.symmetrized();
    }
    let branch = if mirror_phase {
        PhaseBranch::Mirrored
    } else {
        PhaseBranch::Principal
    };
    let amplitude = build_amplitude(&data, branch, tolerance).map_err(|e| from_qlra(NAME, e))?;
    if amplitude.born_residual() > tolerance {
        return Err(CliError::numeric(
            NAME,
            format!(
                "squared moduli miss the marginals by {:.3e}, tolerance {:.3e}",
                amplitude.born_residual(),
                tolerance
            ),
        ));
    }
    let mut artifacts = Vec::new();
    write_artifact(
        dir,
        NAME,
        format!("{prefix}_amplitude.json"),
        &pretty(NAME, &amplitude)?,
        &mut artifacts,
    )?;
    let kind = match &amplitude {
        Amplitude::Complex(_) => "complex",
        Amplitude::Hyperbolic(_) => "hyperbolic",
    };
    let summary = json!({
        "kind": kind,
        "born_residual": amplitude.born_residual(),
        "phase_residual": amplitude.phase_residual(),
        "symmetrized": symmetrize,
    });
    Ok(StageRecord {
        stage: NAME,
        artifacts,
        summary,
    })
}

fn run_bell_stage(
    dir: &Path,
    prefix: &str,
    job: &BellJob,
    effective_seed: Option<u64>,
) -> Result<StageRecord, CliError> {
    const NAME: &str = "bell";
    let mut artifacts = Vec::new();
    let summary = match job {
        BellJob::Check { input, tol } => {
            let text = fs::read_to_string(input).map_err(|e| from_io(NAME, e))?;
            let triple: BellTriple =
                serde_json::from_str(&text).map_err(|e| from_json(NAME, e))?;
            let check = check_inequality(&triple, tol.unwrap_or(1e-9))
                .map_err(|e| from_bell(NAME, e))?;
            write_artifact(
                dir,
                NAME,
                format!("{prefix}_bell_check.json"),
                &pretty(NAME, &check)?,
                &mut artifacts,
            )?;
            json!({"satisfied": check.satisfied, "slack": check.slack})
        }
        BellJob::Verify { trials, seed } => {
            let seed = effective_seed.or(*seed).unwrap_or(0);
            let report = verify_on_random_spaces(trials.unwrap_or(10_000), seed);
            write_artifact(
                dir,
                NAME,
                format!("{prefix}_bell_verify.json"),
                &pretty(NAME, &report)?,
                &mut artifacts,
            )?;
            if report.violations > 0 {
                return Err(CliError::numeric(
                    NAME,
                    format!(
                        "{} of {} random single-space joints violated the inequality",
                        report.violations, report.trials
                    ),
                ));
            }
            json!({
                "trials": report.trials,
                "violations": report.violations,
                "min_slack": report.min_slack,
            })
        }
        BellJob::Scan { grid } => {
            let violations = violation_scan(*grid).map_err(|e| from_bell(NAME, e))?;
            let mut out = String::from("phi_a,phi_b,phi_c,slack\n");
            for v in &violations {
                out.push_str(&format!("{},{},{},{}\n", v.phi_a, v.phi_b, v.phi_c, v.slack));
            }
            write_artifact(
                dir,
                NAME,
                format!("{prefix}_bell_scan.csv"),
                out.as_bytes(),
                &mut artifacts,
            )?;
            json!({
                "grid": grid,
                "violations": violations.len(),
                "min_slack": violations.first().map(|v| v.slack),
            })
        }
    };
    Ok(StageRecord {
        stage: NAME,
        artifacts,
        summary,
    })
}
