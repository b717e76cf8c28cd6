// SPDX-License-Identifier: Apache-2.0

//! Per-executor memory capacity prediction.
//!
//! Given a category (through its expansion factor), a target input size and
//! the cluster configuration:
//!
//! ```text
//! shuffle      = factor × input
//! executors    = ⌈input / (tasks_per_executor × block)⌉
//! first_stage  = block × min(tasks_per_executor, input / block)
//! other_stages = input / executors × β + shuffle / parallelism × min(tasks_per_executor, parallelism)
//! spark        = max(first_stage, other_stages)
//! capacity     = spark × 4/3 + reserved
//! ```
//!
//! `input / block` inside the first-stage minimum is a real quotient, so the
//! first stage never charges more than the input itself. Intermediate values
//! are exact; the other-stage term and the 4/3 scaling are each rounded up to
//! whole bytes. The 4/3 comes from the Spark share being 75% of the heap
//! above the reserved region; a different `user_memory_fraction` changes it
//! to `1 / (1 - fraction)`.

use serde::{Deserialize, Serialize};

use crate::classifier::{expansion_factor, Category};
use crate::ratio::Rational;
use crate::units::MIB;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PlanError {
    #[error("input size must be positive")]
    ZeroInput,
    #[error("expansion factor {0} is outside 1..=4")]
    InvalidFactor(u8),
    #[error("invalid cluster configuration: {0}")]
    InvalidConfig(String),
    #[error("capacity arithmetic overflows 64-bit byte counts")]
    Overflow,
}

/// Deployment parameters that feed the model.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterConfig {
    /// HDFS-style block size; one first-stage task loads one block.
    pub block_size_bytes: u64,
    /// Concurrent tasks per executor (`spark.executor.cores`).
    pub tasks_per_executor: u32,
    /// Total task count of shuffle stages (`spark.default.parallelism`).
    pub parallelism: u32,
    /// Whether the input stays cached in executors after loading.
    pub cache_input: bool,
    pub reserved_memory_bytes: u64,
    /// Share of the above-reserved heap left to user code.
    pub user_memory_fraction: Rational,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        ClusterConfig {
            block_size_bytes: 128 * MIB,
            tasks_per_executor: 4,
            parallelism: 4,
            cache_input: true,
            reserved_memory_bytes: 300 * MIB,
            user_memory_fraction: Rational::new(1, 4),
        }
    }
}

impl ClusterConfig {
    pub fn validate(&self) -> Result<(), PlanError> {
        if self.block_size_bytes == 0 {
            return Err(PlanError::InvalidConfig("block size must be positive".into()));
        }
        if self.tasks_per_executor == 0 {
            return Err(PlanError::InvalidConfig("tasks per executor must be at least 1".into()));
        }
        if self.parallelism == 0 {
            return Err(PlanError::InvalidConfig("parallelism must be at least 1".into()));
        }
        let f = &self.user_memory_fraction;
        if f.is_negative() || *f >= Rational::from_integer(1) {
            return Err(PlanError::InvalidConfig(format!(
                "user memory fraction {f} must lie in [0, 1)"
            )));
        }
        if f.to_u128_parts().is_none() {
            return Err(PlanError::InvalidConfig(format!("user memory fraction {f} is too precise")));
        }
        Ok(())
    }

    /// `(numer, denom)` of the Spark share `1 - user_memory_fraction`.
    fn spark_share(&self) -> (u128, u128) {
        let (n, d) = self
            .user_memory_fraction
            .to_u128_parts()
            .expect("validated fraction");
        (d - n, d)
    }
}

/// Predicted executor capacity with its breakdown.
///
/// `capacity_bytes = reserved_bytes + mem_spark_bytes + user_memory_bytes`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryPlan {
    pub category: Option<Category>,
    pub factor_shuf: u8,
    pub input_bytes: u64,
    pub predicted_shuffle_bytes: u64,
    pub num_executors: u64,
    pub mem_first_stage_bytes: u64,
    pub mem_other_stages_bytes: u64,
    pub mem_spark_bytes: u64,
    pub user_memory_bytes: u64,
    pub reserved_bytes: u64,
    pub capacity_bytes: u64,
}

fn to_u64(v: u128) -> Result<u64, PlanError> {
    u64::try_from(v).map_err(|_| PlanError::Overflow)
}

pub fn predict_shuffle(input_bytes: u64, factor_shuf: u8) -> Result<u64, PlanError> {
    if input_bytes == 0 {
        return Err(PlanError::ZeroInput);
    }
    if !(1..=4).contains(&factor_shuf) {
        return Err(PlanError::InvalidFactor(factor_shuf));
    }
    input_bytes
        .checked_mul(u64::from(factor_shuf))
        .ok_or(PlanError::Overflow)
}

/// Executors needed to run the first stage in one wave; at least one.
pub fn executors_needed(input_bytes: u64, cfg: &ClusterConfig) -> u64 {
    let per_executor = u128::from(cfg.tasks_per_executor) * u128::from(cfg.block_size_bytes);
    let n = u128::from(input_bytes).div_ceil(per_executor.max(1)).max(1);
    // n <= input_bytes, so it fits
    n as u64
}

pub fn mem_first_stage(input_bytes: u64, cfg: &ClusterConfig) -> u64 {
    let wave = u128::from(cfg.tasks_per_executor) * u128::from(cfg.block_size_bytes);
    wave.min(u128::from(input_bytes)) as u64
}

pub fn mem_other_stages(input_bytes: u64, shuffle_bytes: u64, cfg: &ClusterConfig) -> Result<u64, PlanError> {
    let executors = u128::from(executors_needed(input_bytes, cfg));
    let par = u128::from(cfg.parallelism);
    let concurrent = u128::from(cfg.tasks_per_executor.min(cfg.parallelism));
    let beta = u128::from(cfg.cache_input);

    // input·β/executors + shuffle·concurrent/par over the common denominator
    let cached = u128::from(input_bytes)
        .checked_mul(beta * par)
        .ok_or(PlanError::Overflow)?;
    let shuffled = u128::from(shuffle_bytes)
        .checked_mul(concurrent)
        .and_then(|v| v.checked_mul(executors))
        .ok_or(PlanError::Overflow)?;
    let numer = cached.checked_add(shuffled).ok_or(PlanError::Overflow)?;
    let denom = executors.checked_mul(par).ok_or(PlanError::Overflow)?;
    to_u64(numer.div_ceil(denom))
}

/// Plans for a category at a target input size.
pub fn plan(category: Category, input_bytes: u64, cfg: &ClusterConfig) -> Result<MemoryPlan, PlanError> {
    let mut p = plan_with_factor(expansion_factor(category), input_bytes, cfg)?;
    p.category = Some(category);
    Ok(p)
}

/// Plans from a raw expansion factor in `1..=4`.
pub fn plan_with_factor(factor_shuf: u8, input_bytes: u64, cfg: &ClusterConfig) -> Result<MemoryPlan, PlanError> {
    cfg.validate()?;
    let predicted_shuffle_bytes = predict_shuffle(input_bytes, factor_shuf)?;
    let num_executors = executors_needed(input_bytes, cfg);
    let mem_first_stage_bytes = mem_first_stage(input_bytes, cfg);
    let mem_other_stages_bytes = mem_other_stages(input_bytes, predicted_shuffle_bytes, cfg)?;
    let mem_spark_bytes = mem_first_stage_bytes.max(mem_other_stages_bytes);

    let (share_n, share_d) = cfg.spark_share();
    let above_reserved = u128::from(mem_spark_bytes)
        .checked_mul(share_d)
        .ok_or(PlanError::Overflow)?
        .div_ceil(share_n);
    // degenerate plans still get one MB of working room
    let above_reserved = to_u64(above_reserved)?.max(MIB);
    let capacity_bytes = above_reserved
        .checked_add(cfg.reserved_memory_bytes)
        .ok_or(PlanError::Overflow)?;

    Ok(MemoryPlan {
        category: None,
        factor_shuf,
        input_bytes,
        predicted_shuffle_bytes,
        num_executors,
        mem_first_stage_bytes,
        mem_other_stages_bytes,
        mem_spark_bytes,
        user_memory_bytes: above_reserved - mem_spark_bytes,
        reserved_bytes: cfg.reserved_memory_bytes,
        capacity_bytes,
    })
}
