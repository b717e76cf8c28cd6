// SPDX-License-Identifier: Apache-2.0

//! Shuffle aggregates and the two classification metrics.
//!
//! Per stage the shuffle volume is read plus write; per run it is the
//! maximum over all stages (the loading stage included). The Data Expansion
//! Ratio α of a run is its shuffle volume over its input size, and the
//! increase rate is the unweighted mean of the slopes between consecutive
//! runs. All ratios are exact.

use serde::{Deserialize, Serialize};

use crate::ingest::{ProfileSet, RunProfile, StageRecord};
use crate::ratio::Rational;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricsError {
    #[error("shuffle byte count overflows 64 bits")]
    Overflow,
    #[error("the increase rate needs at least two runs, got {0}")]
    TooFewRuns(usize),
}

/// Metrics derived from one [`ProfileSet`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpansionMetrics {
    pub per_run_shuffle_bytes: Vec<u64>,
    pub per_run_alpha: Vec<Rational>,
    pub alpha_mean: Rational,
    /// Absent for single-run profiles.
    pub inc_shuf: Option<Rational>,
}

pub fn stage_shuffle(s: &StageRecord) -> Result<u64, MetricsError> {
    s.shuffle_read_bytes
        .checked_add(s.shuffle_write_bytes)
        .ok_or(MetricsError::Overflow)
}

pub fn run_shuffle(r: &RunProfile) -> Result<u64, MetricsError> {
    let mut max = 0;
    for s in r.stages() {
        max = max.max(stage_shuffle(s)?);
    }
    Ok(max)
}

pub fn run_alpha(r: &RunProfile) -> Result<Rational, MetricsError> {
    Ok(Rational::from_bytes_ratio(run_shuffle(r)?, r.input_bytes()))
}

pub fn mean_alpha(ps: &ProfileSet) -> Result<Rational, MetricsError> {
    let alphas = ps.runs().iter().map(run_alpha).collect::<Result<Vec<_>, _>>()?;
    Ok(Rational::mean(&alphas).unwrap_or_else(Rational::zero))
}

/// Mean of the pairwise slopes `Δshuffle / Δinput` over consecutive runs.
///
/// Negative slopes are kept.
pub fn inc_rate(ps: &ProfileSet) -> Result<Rational, MetricsError> {
    if ps.len() < 2 {
        return Err(MetricsError::TooFewRuns(ps.len()));
    }
    let shuffles = ps.runs().iter().map(run_shuffle).collect::<Result<Vec<_>, _>>()?;
    let slopes: Vec<Rational> = ps
        .runs()
        .windows(2)
        .zip(shuffles.windows(2))
        .map(|(runs, shuf)| {
            let dshuf = i128::from(shuf[1]) - i128::from(shuf[0]);
            let dinput = i128::from(runs[1].input_bytes()) - i128::from(runs[0].input_bytes());
            Rational::new(dshuf, dinput)
        })
        .collect();
    Ok(Rational::mean(&slopes).expect("at least one slope"))
}

pub fn compute(ps: &ProfileSet) -> Result<ExpansionMetrics, MetricsError> {
    let per_run_shuffle_bytes = ps.runs().iter().map(run_shuffle).collect::<Result<Vec<_>, _>>()?;
    let per_run_alpha: Vec<Rational> = ps
        .runs()
        .iter()
        .zip(&per_run_shuffle_bytes)
        .map(|(r, &s)| Rational::from_bytes_ratio(s, r.input_bytes()))
        .collect();
    let alpha_mean = Rational::mean(&per_run_alpha).unwrap_or_else(Rational::zero);
    let inc_shuf = match inc_rate(ps) {
        Ok(v) => Some(v),
        Err(MetricsError::TooFewRuns(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(ExpansionMetrics {
        per_run_shuffle_bytes,
        per_run_alpha,
        alpha_mean,
        inc_shuf,
    })
}
