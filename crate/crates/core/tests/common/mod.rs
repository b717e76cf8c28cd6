// SPDX-License-Identifier: Apache-2.0

//! Brute-force reference evaluators shared by the integration tests.
//!
//! These recompute everything from the raw formulas with big rationals and
//! explicit loops, without going through the library's integer fast paths.

#![allow(dead_code)]

use memadvisor::ingest::ProfileSet;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

pub const MB: u64 = 1 << 20;

fn q(v: u64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

fn ceil_u64(v: &BigRational) -> u64 {
    v.ceil().to_integer().to_u64().expect("fits")
}

/// Breakdown computed straight from the prediction formulas.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OraclePlan {
    pub shuffle: u64,
    pub executors: u64,
    pub first_stage: u64,
    pub other_stages: u64,
    pub spark: u64,
    pub capacity: u64,
}

pub fn oracle_plan(
    factor: u64,
    input: u64,
    block: u64,
    tasks: u64,
    parallelism: u64,
    beta: bool,
    reserved: u64,
) -> OraclePlan {
    let input_q = q(input);
    let shuffle = q(factor) * &input_q;
    let executors = (&input_q / (q(tasks) * q(block))).ceil();
    let executors = if executors < BigRational::one() { BigRational::one() } else { executors };

    let blocks_needed = &input_q / q(block);
    let first = q(block) * if q(tasks) < blocks_needed { q(tasks) } else { blocks_needed };

    let beta_q = if beta { BigRational::one() } else { BigRational::zero() };
    let concurrent = if tasks < parallelism { tasks } else { parallelism };
    let other = &input_q / &executors * beta_q + &shuffle / q(parallelism) * q(concurrent);

    let first_bytes = ceil_u64(&first);
    let other_bytes = ceil_u64(&other);
    let spark = if first_bytes > other_bytes { first_bytes } else { other_bytes };
    let scaled = ceil_u64(&(q(spark) * BigRational::new(4.into(), 3.into())));
    let scaled = if scaled < MB { MB } else { scaled };
    OraclePlan {
        shuffle: shuffle.to_integer().to_u64().unwrap(),
        executors: executors.to_integer().to_u64().unwrap(),
        first_stage: first_bytes,
        other_stages: other_bytes,
        spark,
        capacity: scaled + reserved,
    }
}

/// Metrics recomputed with explicit loops over the raw stage records.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleMetrics {
    pub shuffles: Vec<u64>,
    pub alphas: Vec<BigRational>,
    pub alpha_mean: BigRational,
    pub inc: Option<BigRational>,
}

pub fn oracle_metrics(ps: &ProfileSet) -> OracleMetrics {
    let mut shuffles = Vec::new();
    let mut alphas = Vec::new();
    for run in ps.runs() {
        let mut best = 0u64;
        for st in run.stages() {
            let s = st.shuffle_read_bytes + st.shuffle_write_bytes;
            if s > best {
                best = s;
            }
        }
        shuffles.push(best);
        alphas.push(BigRational::new(BigInt::from(best), BigInt::from(run.input_bytes())));
    }
    let mut sum = BigRational::zero();
    for a in &alphas {
        sum += a;
    }
    let alpha_mean = sum / BigInt::from(alphas.len());

    let inc = if ps.len() >= 2 {
        let mut total = BigRational::zero();
        for i in 0..ps.len() - 1 {
            let num = BigInt::from(shuffles[i + 1]) - BigInt::from(shuffles[i]);
            let den = BigInt::from(ps.runs()[i + 1].input_bytes()) - BigInt::from(ps.runs()[i].input_bytes());
            total += BigRational::new(num, den);
        }
        Some(total / BigInt::from(ps.len() - 1))
    } else {
        None
    };
    OracleMetrics { shuffles, alphas, alpha_mean, inc }
}

/// Input sizes (bytes) of the predictor verification grid.
pub fn grid_inputs() -> Vec<u64> {
    vec![
        64 * MB,
        100 * MB,
        256 * MB,
        600 * MB,
        1000 * MB,
        1024 * MB + 7,
        1500 * MB,
        2048 * MB,
    ]
}

pub const GRID_BLOCKS_MB: [u64; 4] = [32, 64, 128, 256];
pub const GRID_TASKS: [u32; 4] = [1, 2, 4, 8];
pub const GRID_PARALLELISM: [u32; 5] = [1, 2, 4, 8, 16];

/// A profile record line.
pub fn record(id: &str, input: u64, stages: &[(u64, u64)]) -> String {
    let stages: Vec<String> = stages
        .iter()
        .enumerate()
        .map(|(i, (r, w))| format!(r#"{{"stage_index":{i},"shuffle_read_bytes":{r},"shuffle_write_bytes":{w}}}"#))
        .collect();
    format!(
        r#"{{"workload_id":"{id}","input_bytes":{input},"cached_input":true,"stages":[{}]}}"#,
        stages.join(",")
    )
}

/// The five-run profile: inputs 10..50 MB, shuffle twice the input.
pub fn worked_example_profile() -> String {
    (1..=5u64)
        .map(|i| record("wl", i * 10 * MB, &[(0, 0), (i * 10 * MB, i * 10 * MB)]))
        .collect::<Vec<_>>()
        .join("\n")
}
