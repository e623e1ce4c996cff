//! Relative frequencies and stabilization detection for outcome sequences.
//!
//! Probabilities here are empirical: the frequency `count / N` of each
//! outcome among the first `N` trials. A sequence is considered stabilized
//! when, over a trailing window of prefix lengths, no outcome's running
//! frequency drifts from its final value by more than a tolerance. This is
//! the operational reading of "the experiment has a probability": longer
//! prefixes stop moving the estimate.

use std::io::{BufRead, Write};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default drift tolerance for stabilization checks.
pub const DEFAULT_STABILIZATION_TOL: f64 = 1e-2;

/// Default trailing window: one tenth of the sequence, rounded up.
pub fn default_window(len: usize) -> usize {
    len.div_ceil(10)
}

#[derive(Debug, Error)]
pub enum FrequencyError {
    #[error("prefix length {n} out of range 1..={len}")]
    OutOfRange { n: usize, len: usize },
    #[error("sequence of length {len} too short for window {window} (need at least 2*window)")]
    InsufficientData { len: usize, window: usize },
    #[error("outcome {0:?} not in the declared value set")]
    UnknownOutcome(String),
    #[error("empty outcome sequence")]
    Empty,
    #[error("malformed sequence file: {0}")]
    BadFormat(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Ordered record of measurement outcomes for one observable.
///
/// Outcomes are stored as indices into the value table, so long Monte
/// Carlo sequences stay compact.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeSequence {
    observable: String,
    values: Vec<String>,
    outcomes: Vec<u8>,
}

impl OutcomeSequence {
    /// Build from labels, inferring the value set in order of first
    /// appearance.
    pub fn new<S: AsRef<str>>(
        observable: impl Into<String>,
        outcomes: &[S],
    ) -> Result<Self, FrequencyError> {
        if outcomes.is_empty() {
            return Err(FrequencyError::Empty);
        }
        let mut values: Vec<String> = Vec::new();
        let mut indices = Vec::with_capacity(outcomes.len());
        for label in outcomes {
            let label = label.as_ref();
            let idx = match values.iter().position(|v| v == label) {
                Some(i) => i,
                None => {
                    values.push(label.to_string());
                    values.len() - 1
                }
            };
            indices.push(u8::try_from(idx).map_err(|_| {
                FrequencyError::BadFormat("more than 256 distinct outcomes".into())
            })?);
        }
        Ok(Self {
            observable: observable.into(),
            values,
            outcomes: indices,
        })
    }

    /// Build from labels against a declared value set; outcomes outside the
    /// set are rejected.
    pub fn with_values<S: AsRef<str>>(
        observable: impl Into<String>,
        values: Vec<String>,
        outcomes: &[S],
    ) -> Result<Self, FrequencyError> {
        if outcomes.is_empty() {
            return Err(FrequencyError::Empty);
        }
        let mut indices = Vec::with_capacity(outcomes.len());
        for label in outcomes {
            let label = label.as_ref();
            let idx = values
                .iter()
                .position(|v| v == label)
                .ok_or_else(|| FrequencyError::UnknownOutcome(label.to_string()))?;
            indices.push(u8::try_from(idx).map_err(|_| {
                FrequencyError::BadFormat("more than 256 distinct outcomes".into())
            })?);
        }
        Ok(Self {
            observable: observable.into(),
            values,
            outcomes: indices,
        })
    }

    /// Build directly from a value table and outcome indices.
    pub fn from_indices(
        observable: impl Into<String>,
        values: Vec<String>,
        outcomes: Vec<u8>,
    ) -> Result<Self, FrequencyError> {
        if outcomes.is_empty() {
            return Err(FrequencyError::Empty);
        }
        if let Some(&bad) = outcomes.iter().find(|&&i| usize::from(i) >= values.len()) {
            return Err(FrequencyError::BadFormat(format!(
                "outcome index {bad} out of range for {} values",
                values.len()
            )));
        }
        Ok(Self {
            observable: observable.into(),
            values,
            outcomes,
        })
    }

    pub fn observable(&self) -> &str {
        &self.observable
    }

    pub fn values(&self) -> &[String] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    /// Outcome counts per value over the first `n` trials. Counts always
    /// sum to exactly `n`.
    pub fn counts(&self, n: usize) -> Result<Vec<u64>, FrequencyError> {
        if n == 0 || n > self.outcomes.len() {
            return Err(FrequencyError::OutOfRange {
                n,
                len: self.outcomes.len(),
            });
        }
        let mut counts = vec![0u64; self.values.len()];
        for &idx in &self.outcomes[..n] {
            counts[usize::from(idx)] += 1;
        }
        Ok(counts)
    }

    /// Relative frequencies `count / n` over the first `n` trials, keyed by
    /// value in table order.
    pub fn relative_frequencies(&self, n: usize) -> Result<IndexMap<String, f64>, FrequencyError> {
        let counts = self.counts(n)?;
        Ok(self
            .values
            .iter()
            .zip(&counts)
            .map(|(v, &c)| (v.clone(), c as f64 / n as f64))
            .collect())
    }

    /// Read a sequence from CSV: first line is the observable name, each
    /// following non-empty line is one outcome label.
    pub fn read_csv<R: BufRead>(reader: R) -> Result<Self, FrequencyError> {
        let mut lines = reader.lines();
        let observable = lines
            .next()
            .ok_or_else(|| FrequencyError::BadFormat("missing header line".into()))??
            .trim()
            .to_string();
        if observable.is_empty() {
            return Err(FrequencyError::BadFormat("empty header line".into()));
        }
        let mut outcomes = Vec::new();
        for line in lines {
            let line = line?;
            let label = line.trim();
            if !label.is_empty() {
                outcomes.push(label.to_string());
            }
        }
        Self::new(observable, &outcomes)
    }

    /// Write the sequence in the same CSV layout `read_csv` accepts.
    pub fn write_csv<W: Write>(&self, mut writer: W) -> Result<(), FrequencyError> {
        writeln!(writer, "{}", self.observable)?;
        for &idx in &self.outcomes {
            writeln!(writer, "{}", self.values[usize::from(idx)])?;
        }
        Ok(())
    }
}

/// Result of a stabilization check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StabilizationReport {
    pub observable: String,
    /// Final relative frequencies, keyed by value.
    pub probabilities: IndexMap<String, f64>,
    pub stabilized: bool,
    /// Trailing window length used.
    pub window: usize,
    /// Largest `|running frequency - final frequency|` seen in the window.
    pub max_drift: f64,
}

/// Check whether running frequencies have settled: for every value and
/// every prefix length in the trailing `window`, the running frequency must
/// stay within `tol` of the full-length frequency.
pub fn detect_stabilization(
    seq: &OutcomeSequence,
    window: usize,
    tol: f64,
) -> Result<StabilizationReport, FrequencyError> {
    let len = seq.len();
    if window == 0 || len < 2 * window {
        return Err(FrequencyError::InsufficientData { len, window });
    }
    let final_counts = seq.counts(len)?;
    let final_freqs: Vec<f64> = final_counts
        .iter()
        .map(|&c| c as f64 / len as f64)
        .collect();

    let mut running = vec![0u64; seq.values.len()];
    let mut max_drift: f64 = 0.0;
    let first_checked = len - window + 1;
    for (pos, &idx) in seq.outcomes.iter().enumerate() {
        running[usize::from(idx)] += 1;
        let n = pos + 1;
        if n >= first_checked {
            for (v, &c) in running.iter().enumerate() {
                let drift = (c as f64 / n as f64 - final_freqs[v]).abs();
                max_drift = max_drift.max(drift);
            }
        }
    }

    Ok(StabilizationReport {
        observable: seq.observable.clone(),
        probabilities: seq
            .values
            .iter()
            .cloned()
            .zip(final_freqs.iter().copied())
            .collect(),
        stabilized: max_drift <= tol,
        window,
        max_drift,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_sequence_has_unit_frequency() {
        let seq = OutcomeSequence::new("a", &["+1"; 50]).unwrap();
        let freqs = seq.relative_frequencies(50).unwrap();
        assert_eq!(freqs["+1"], 1.0);
    }

    #[test]
    fn counts_sum_to_n_exactly() {
        let labels: Vec<&str> = ["x", "y", "z", "y", "x", "x", "z"].to_vec();
        let seq = OutcomeSequence::new("o", &labels).unwrap();
        for n in 1..=labels.len() {
            let total: u64 = seq.counts(n).unwrap().iter().sum();
            assert_eq!(total, n as u64);
        }
    }

    #[test]
    fn prefix_out_of_range_is_rejected() {
        let seq = OutcomeSequence::new("a", &["+1", "-1"]).unwrap();
        assert!(matches!(
            seq.relative_frequencies(0),
            Err(FrequencyError::OutOfRange { .. })
        ));
        assert!(matches!(
            seq.relative_frequencies(3),
            Err(FrequencyError::OutOfRange { .. })
        ));
    }

    #[test]
    fn declared_values_reject_unknown_outcomes() {
        let err = OutcomeSequence::with_values(
            "a",
            vec!["+1".into(), "-1".into()],
            &["+1", "0"],
        )
        .unwrap_err();
        assert!(matches!(err, FrequencyError::UnknownOutcome(l) if l == "0"));
    }

    #[test]
    fn declared_values_keep_zero_count_entries() {
        let seq =
            OutcomeSequence::with_values("a", vec!["+1".into(), "-1".into()], &["+1", "+1"])
                .unwrap();
        let freqs = seq.relative_frequencies(2).unwrap();
        assert_eq!(freqs["+1"], 1.0);
        assert_eq!(freqs["-1"], 0.0);
    }

    #[test]
    fn alternating_sequence_stabilizes() {
        let labels: Vec<&str> = (0..10_000)
            .map(|i| if i % 2 == 0 { "+1" } else { "-1" })
            .collect();
        let seq = OutcomeSequence::new("a", &labels).unwrap();
        let report = detect_stabilization(&seq, 1_000, 1e-2).unwrap();
        assert!(report.stabilized);
        assert_eq!(report.probabilities["+1"], 0.5);
        assert!(report.max_drift < 1e-3);
    }

    #[test]
    fn block_drift_is_not_stabilized() {
        let mut labels = vec!["+1"; 5_000];
        labels.extend(vec!["-1"; 5_000]);
        let seq = OutcomeSequence::new("a", &labels).unwrap();
        let report = detect_stabilization(&seq, 1_000, 1e-2).unwrap();
        assert!(!report.stabilized);
        assert!(report.max_drift > 0.05);
    }

    #[test]
    fn stabilization_is_monotone_in_tolerance() {
        let mut labels = vec!["+1"; 600];
        labels.extend(vec!["-1"; 400]);
        let seq = OutcomeSequence::new("a", &labels).unwrap();
        let loose = detect_stabilization(&seq, 100, 0.5).unwrap();
        let tight = detect_stabilization(&seq, 100, 1e-6).unwrap();
        assert!(loose.stabilized);
        assert!(!tight.stabilized);
    }

    #[test]
    fn window_preconditions_are_enforced() {
        let seq = OutcomeSequence::new("a", &["+1"; 10]).unwrap();
        assert!(matches!(
            detect_stabilization(&seq, 6, 1e-2),
            Err(FrequencyError::InsufficientData { .. })
        ));
        assert!(matches!(
            detect_stabilization(&seq, 0, 1e-2),
            Err(FrequencyError::InsufficientData { .. })
        ));
    }

    #[test]
    fn seeded_bernoulli_estimate_converges() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let labels: Vec<&str> = (0..1_000_000)
            .map(|_| if rng.gen::<f64>() < 0.3 { "+1" } else { "-1" })
            .collect();
        let seq = OutcomeSequence::new("coin", &labels).unwrap();
        let report = detect_stabilization(&seq, 10_000, 5e-3).unwrap();
        assert!(report.stabilized);
        // Binomial 3-sigma at n=1e6 is ~0.0014; 0.005 leaves slack.
        assert!((report.probabilities["+1"] - 0.3).abs() < 5e-3);
    }

    #[test]
    fn csv_round_trip() {
        let seq = OutcomeSequence::new("spin", &["up", "down", "up"]).unwrap();
        let mut buf = Vec::new();
        seq.write_csv(&mut buf).unwrap();
        let back = OutcomeSequence::read_csv(buf.as_slice()).unwrap();
        assert_eq!(seq, back);
    }

    #[test]
    fn csv_rejects_empty_input() {
        assert!(OutcomeSequence::read_csv("".as_bytes()).is_err());
        assert!(OutcomeSequence::read_csv("name\n".as_bytes()).is_err());
    }

    #[test]
    fn report_serialization_keys() {
        let seq = OutcomeSequence::new("a", &["+1", "-1", "+1", "-1"]).unwrap();
        let report = detect_stabilization(&seq, 2, 0.5).unwrap();
        let json = serde_json::to_string(&report).unwrap();
        for key in ["probabilities", "stabilized", "window", "max_drift"] {
            assert!(json.contains(&format!("\"{key}\"")), "missing {key}");
        }
    }
}
