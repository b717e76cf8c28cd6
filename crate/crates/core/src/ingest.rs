// SPDX-License-Identifier: Apache-2.0

//! Profile record parsing and validation.
//!
//! A profile file holds one JSON object per line, each describing a single
//! run of one workload at one input size:
//!
//! ```text
//! # comment lines start with '#'
//! {"workload_id":"wl","input_bytes":10485760,"cached_input":true,"stages":[{"stage_index":0,"shuffle_read_bytes":0,"shuffle_write_bytes":0}]}
//! ```
//!
//! Blank lines are ignored. Every other line must match the record grammar
//! exactly; unknown keys are rejected.

use std::collections::HashMap;
use std::io::Read;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

/// Shuffle volumes observed on one stage of a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage_index: u32,
    pub shuffle_read_bytes: u64,
    pub shuffle_write_bytes: u64,
}

/// One execution of a workload at one input size.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct RunProfile {
    workload_id: String,
    input_bytes: u64,
    cached_input: bool,
    stages: Vec<StageRecord>,
}

/// All profiling runs of one workload, strictly ascending by input size.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct ProfileSet {
    workload_id: String,
    runs: Vec<RunProfile>,
}

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("line {line}: {field}: {reason}")]
    Malformed {
        line: usize,
        field: String,
        reason: String,
    },
    #[error("line {line}: workload_id {found:?} differs from {expected:?}; a file holds exactly one workload")]
    MixedWorkload {
        line: usize,
        expected: String,
        found: String,
    },
    #[error("line {line}: duplicate input_bytes {input_bytes} (first seen on line {first_line})")]
    DuplicateInput {
        line: usize,
        first_line: usize,
        input_bytes: u64,
    },
    #[error("profile contains no runs")]
    Empty,
    #[error("invalid run: {0}")]
    InvalidRun(String),
    #[error("reading profile: {0}")]
    Io(#[from] std::io::Error),
}

impl RunProfile {
    /// Builds a run, sorting stages by index.
    ///
    /// Stage indices must be exactly `0..n` after sorting.
    pub fn new(
        workload_id: impl Into<String>,
        input_bytes: u64,
        cached_input: bool,
        mut stages: Vec<StageRecord>,
    ) -> Result<Self, IngestError> {
        if input_bytes == 0 {
            return Err(IngestError::InvalidRun("input_bytes must be positive".into()));
        }
        if stages.is_empty() {
            return Err(IngestError::InvalidRun("a run needs at least one stage".into()));
        }
        stages.sort_by_key(|s| s.stage_index);
        for (expected, stage) in stages.iter().enumerate() {
            if stage.stage_index as usize != expected {
                return Err(IngestError::InvalidRun(format!(
                    "stage indices must be unique and contiguous from 0; expected {expected}, found {}",
                    stage.stage_index
                )));
            }
        }
        Ok(RunProfile {
            workload_id: workload_id.into(),
            input_bytes,
            cached_input,
            stages,
        })
    }

    pub fn workload_id(&self) -> &str {
        &self.workload_id
    }

    pub fn input_bytes(&self) -> u64 {
        self.input_bytes
    }

    pub fn cached_input(&self) -> bool {
        self.cached_input
    }

    pub fn stages(&self) -> &[StageRecord] {
        &self.stages
    }
}

impl ProfileSet {
    /// Groups runs of one workload, sorting them ascending by input size.
    pub fn new(mut runs: Vec<RunProfile>) -> Result<Self, IngestError> {
        let first = runs.first().ok_or(IngestError::Empty)?;
        let workload_id = first.workload_id.clone();
        if let Some(other) = runs.iter().find(|r| r.workload_id != workload_id) {
            return Err(IngestError::MixedWorkload {
                line: 0,
                expected: workload_id,
                found: other.workload_id.clone(),
            });
        }
        runs.sort_by_key(|r| r.input_bytes);
        if let Some(w) = runs.windows(2).find(|w| w[0].input_bytes == w[1].input_bytes) {
            return Err(IngestError::DuplicateInput {
                line: 0,
                first_line: 0,
                input_bytes: w[0].input_bytes,
            });
        }
        Ok(ProfileSet { workload_id, runs })
    }

    pub fn workload_id(&self) -> &str {
        &self.workload_id
    }

    pub fn runs(&self) -> &[RunProfile] {
        &self.runs
    }

    pub fn len(&self) -> usize {
        self.runs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.runs.is_empty()
    }

    /// Writes the set back out in the profile record format, one run per line
    /// in ascending input order.
    pub fn to_records(&self) -> String {
        let mut out = String::new();
        for run in &self.runs {
            // Serializing plain structs of strings/integers/bools cannot fail.
            out.push_str(&serde_json::to_string(run).expect("run serializes"));
            out.push('\n');
        }
        out
    }
}

/// Parses a profile record stream into a validated [`ProfileSet`].
pub fn parse_profiles<R: Read>(mut source: R) -> Result<ProfileSet, IngestError> {
    let mut buf = Vec::new();
    source.read_to_end(&mut buf)?;
    parse_profile_bytes(&buf)
}

/// Same as [`parse_profiles`] over an in-memory buffer.
pub fn parse_profile_bytes(data: &[u8]) -> Result<ProfileSet, IngestError> {
    // (run, line number) pairs
    let mut runs: Vec<(RunProfile, usize)> = Vec::new();
    // input_bytes -> first line it appeared on
    let mut seen: HashMap<u64, usize> = HashMap::new();
    for (idx, raw) in data.split(|&b| b == b'\n').enumerate() {
        let line_no = idx + 1;
        let raw = raw.strip_suffix(b"\r").unwrap_or(raw);
        let text = std::str::from_utf8(raw).map_err(|e| IngestError::Malformed {
            line: line_no,
            field: "<line>".into(),
            reason: format!("not valid UTF-8: {e}"),
        })?;
        let trimmed = text.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let run = parse_record(trimmed, line_no)?;
        if let Some((first, _)) = runs.first() {
            if first.workload_id != run.workload_id {
                return Err(IngestError::MixedWorkload {
                    line: line_no,
                    expected: first.workload_id.clone(),
                    found: run.workload_id,
                });
            }
        }
        if let Some(&first_line) = seen.get(&run.input_bytes) {
            return Err(IngestError::DuplicateInput {
                line: line_no,
                first_line,
                input_bytes: run.input_bytes,
            });
        }
        seen.insert(run.input_bytes, line_no);
        runs.push((run, line_no));
    }
    if runs.is_empty() {
        return Err(IngestError::Empty);
    }
    ProfileSet::new(runs.into_iter().map(|(r, _)| r).collect())
}

fn malformed(line: usize, field: &str, reason: impl Into<String>) -> IngestError {
    IngestError::Malformed {
        line,
        field: field.to_string(),
        reason: reason.into(),
    }
}

fn parse_record(text: &str, line: usize) -> Result<RunProfile, IngestError> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| malformed(line, "<line>", format!("invalid JSON: {e}")))?;
    let obj = value
        .as_object()
        .ok_or_else(|| malformed(line, "<line>", "expected a JSON object"))?;
    reject_unknown(obj, &["workload_id", "input_bytes", "cached_input", "stages"], line, "")?;

    let workload_id = take(obj, "workload_id", line)?
        .as_str()
        .ok_or_else(|| malformed(line, "workload_id", "expected a string"))?
        .to_string();
    let input_bytes = byte_count(take(obj, "input_bytes", line)?, line, "input_bytes")?;
    if input_bytes == 0 {
        return Err(malformed(line, "input_bytes", "must be greater than zero"));
    }
    let cached_input = take(obj, "cached_input", line)?
        .as_bool()
        .ok_or_else(|| malformed(line, "cached_input", "expected a boolean"))?;
    let stages_val = take(obj, "stages", line)?
        .as_array()
        .ok_or_else(|| malformed(line, "stages", "expected an array"))?;
    if stages_val.is_empty() {
        return Err(malformed(line, "stages", "must contain at least one stage"));
    }

    let mut stages = Vec::with_capacity(stages_val.len());
    for (i, s) in stages_val.iter().enumerate() {
        let prefix = format!("stages[{i}]");
        let so = s
            .as_object()
            .ok_or_else(|| malformed(line, &prefix, "expected an object"))?;
        reject_unknown(
            so,
            &["stage_index", "shuffle_read_bytes", "shuffle_write_bytes"],
            line,
            &prefix,
        )?;
        let field = |name: &str| -> Result<u64, IngestError> {
            let path = format!("{prefix}.{name}");
            let v = so
                .get(name)
                .ok_or_else(|| malformed(line, &path, "missing"))?;
            byte_count(v, line, &path)
        };
        let stage_index = u32::try_from(field("stage_index")?)
            .map_err(|_| malformed(line, &format!("{prefix}.stage_index"), "out of range"))?;
        stages.push(StageRecord {
            stage_index,
            shuffle_read_bytes: field("shuffle_read_bytes")?,
            shuffle_write_bytes: field("shuffle_write_bytes")?,
        });
    }

    RunProfile::new(workload_id, input_bytes, cached_input, stages).map_err(|e| match e {
        IngestError::InvalidRun(reason) => malformed(line, "stages", reason),
        other => other,
    })
}

fn take<'a>(obj: &'a Map<String, Value>, key: &str, line: usize) -> Result<&'a Value, IngestError> {
    obj.get(key).ok_or_else(|| malformed(line, key, "missing"))
}

fn reject_unknown(
    obj: &Map<String, Value>,
    allowed: &[&str],
    line: usize,
    prefix: &str,
) -> Result<(), IngestError> {
    match obj.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) if prefix.is_empty() => Err(malformed(line, k, "unknown field")),
        Some(k) => Err(malformed(line, &format!("{prefix}.{k}"), "unknown field")),
        None => Ok(()),
    }
}

fn byte_count(v: &Value, line: usize, field: &str) -> Result<u64, IngestError> {
    v.as_u64()
        .ok_or_else(|| malformed(line, field, "expected a non-negative integer"))
}

/// What can be computed from a profile set, plus anything suspicious in it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub workload_id: String,
    pub run_count: usize,
    pub alpha_computable: bool,
    pub inc_shuf_computable: bool,
    pub warnings: Vec<String>,
}

pub fn validate_for_classification(ps: &ProfileSet) -> ValidationReport {
    let mut warnings = Vec::new();
    let shuffles: Vec<u128> = ps
        .runs()
        .iter()
        .map(|r| {
            r.stages()
                .iter()
                .map(|s| u128::from(s.shuffle_read_bytes) + u128::from(s.shuffle_write_bytes))
                .max()
                .unwrap_or(0)
        })
        .collect();

    if shuffles.iter().all(|&s| s == 0) {
        warnings.push("degenerate: α = 0 in all runs".to_string());
    }
    if ps.len() < 2 {
        warnings.push(
            "only one run: the increase rate cannot be computed; add a second profiling run".to_string(),
        );
    }
    for (i, w) in shuffles.windows(2).enumerate() {
        if w[1] < w[0] {
            warnings.push(format!(
                "shuffle volume drops between runs {} and {} (negative increase rate)",
                i,
                i + 1
            ));
        }
    }
    if ps.runs().iter().any(|r| r.cached_input()) && ps.runs().iter().any(|r| !r.cached_input()) {
        warnings.push("runs disagree on cached_input".to_string());
    }

    ValidationReport {
        workload_id: ps.workload_id().to_string(),
        run_count: ps.len(),
        alpha_computable: !ps.is_empty(),
        inc_shuf_computable: ps.len() >= 2,
        warnings,
    }
}
