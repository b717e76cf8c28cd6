// SPDX-License-Identifier: Apache-2.0

//! Synthetic executor memory simulator.
//!
//! Generates stage-structured workloads whose shuffle profile lies in a
//! category's α band and replays them against a candidate executor capacity.
//!
//! Memory model per executor: a reserved region, a user region, and a Spark
//! region of `(capacity - reserved) × (1 - user_memory_fraction)` bytes
//! shared by Storage and Execution. Each stage charges:
//!
//! * stage 0 (loading): `min(tasks, ⌈input / block⌉) × block` of evictable
//!   Storage;
//! * later stages: `β × input / executors` of pinned (cached) Storage plus
//!   `shuffle_i / parallelism × min(tasks, parallelism)` of Execution.
//!
//! Pinned Storage always stays resident. Execution takes what is left and may
//! evict evictable Storage; whatever still does not fit spills. The run is out
//! of memory when pinned Storage alone exceeds the Spark region. Stages run
//! serially and release everything but the cache when they finish.
//!
//! This module deliberately does not call into [`crate::predictor`] for its
//! charges so that it can serve as an independent check on plans.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classifier::Category;
use crate::predictor::{self, ClusterConfig, MemoryPlan, PlanError};
use crate::units::MIB;

/// Default baseline executor capacity: a static 2 GB configuration.
pub const DEFAULT_BASELINE_BYTES: u64 = 2048 * MIB;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SimError {
    #[error("invalid workload spec: {0}")]
    InvalidSpec(String),
    #[error("capacity {capacity} bytes does not exceed the reserved region of {reserved} bytes")]
    CapacityTooSmall { capacity: u64, reserved: u64 },
    #[error("trials must be at least 1")]
    NoTrials,
    #[error(transparent)]
    Plan(#[from] PlanError),
}

/// Which α range generated workloads are drawn from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GenerationBand {
    /// The full band of the category: Shrinking (0, 0.5], Medium (0.5, 1),
    /// ExpandingMedium [1, 3), ExpandingRapid [3, 6].
    #[default]
    Category,
    /// The category band clipped at the category's expansion factor, so
    /// every generated stage satisfies `shuffle ≤ factor × input`.
    WithinFactor,
}

/// Inclusive range of admissible peak shuffle bytes for `input_bytes`.
pub fn peak_shuffle_range(category: Category, input_bytes: u64, band: GenerationBand) -> Option<(u64, u64)> {
    let input = u128::from(input_bytes);
    let (lo, hi) = match category {
        Category::Shrinking => (1, input / 2),
        Category::Medium => (input / 2 + 1, input.saturating_sub(1)),
        Category::ExpandingMedium => (input, 3 * input - 1),
        Category::ExpandingRapid => match band {
            GenerationBand::Category => (3 * input, 6 * input),
            GenerationBand::WithinFactor => (3 * input, 4 * input),
        },
    };
    if input == 0 || lo > hi {
        return None;
    }
    Some((u64::try_from(lo).ok()?, u64::try_from(hi).ok()?))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimWorkloadSpec {
    pub category: Category,
    pub input_bytes: u64,
    pub stage_count: u32,
    /// Shuffle volume of each stage; stage 0 is the loading stage and is 0.
    pub per_stage_shuffle_bytes: Vec<u64>,
    pub seed: u64,
}

impl SimWorkloadSpec {
    /// Builds a spec by hand, checking the peak lies in the category band.
    pub fn new(
        category: Category,
        input_bytes: u64,
        per_stage_shuffle_bytes: Vec<u64>,
        seed: u64,
    ) -> Result<Self, SimError> {
        let spec = SimWorkloadSpec {
            category,
            input_bytes,
            stage_count: u32::try_from(per_stage_shuffle_bytes.len())
                .map_err(|_| SimError::InvalidSpec("too many stages".into()))?,
            per_stage_shuffle_bytes,
            seed,
        };
        spec.check(GenerationBand::Category)?;
        Ok(spec)
    }

    fn check(&self, band: GenerationBand) -> Result<(), SimError> {
        if self.stage_count < 2 || self.per_stage_shuffle_bytes.len() != self.stage_count as usize {
            return Err(SimError::InvalidSpec("need at least two stages".into()));
        }
        if self.per_stage_shuffle_bytes[0] != 0 {
            return Err(SimError::InvalidSpec("the loading stage has no shuffle".into()));
        }
        let (lo, hi) = peak_shuffle_range(self.category, self.input_bytes, band).ok_or_else(|| {
            SimError::InvalidSpec(format!(
                "no {} band at input size {}",
                self.category, self.input_bytes
            ))
        })?;
        let peak = self.peak_shuffle_bytes();
        if peak < lo || peak > hi {
            return Err(SimError::InvalidSpec(format!(
                "peak shuffle {peak} outside the {} band [{lo}, {hi}]",
                self.category
            )));
        }
        Ok(())
    }

    pub fn peak_shuffle_bytes(&self) -> u64 {
        self.per_stage_shuffle_bytes.iter().copied().max().unwrap_or(0)
    }
}

pub fn generate(category: Category, input_bytes: u64, stage_count: u32, seed: u64) -> Result<SimWorkloadSpec, SimError> {
    generate_in(category, input_bytes, stage_count, seed, GenerationBand::Category)
}

/// Deterministic for a given seed: one non-loading stage hits a peak drawn
/// uniformly from the band, the others draw uniformly from `[0, peak]`.
pub fn generate_in(
    category: Category,
    input_bytes: u64,
    stage_count: u32,
    seed: u64,
    band: GenerationBand,
) -> Result<SimWorkloadSpec, SimError> {
    if stage_count < 2 {
        return Err(SimError::InvalidSpec("need at least two stages".into()));
    }
    let (lo, hi) = peak_shuffle_range(category, input_bytes, band).ok_or_else(|| {
        SimError::InvalidSpec(format!("no {category} band at input size {input_bytes}"))
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let peak = rng.random_range(lo..=hi);
    let peak_stage = rng.random_range(1..stage_count) as usize;
    let mut shuffles = vec![0u64; stage_count as usize];
    for (i, s) in shuffles.iter_mut().enumerate().skip(1) {
        *s = if i == peak_stage { peak } else { rng.random_range(0..=peak) };
    }
    Ok(SimWorkloadSpec {
        category,
        input_bytes,
        stage_count,
        per_stage_shuffle_bytes: shuffles,
        seed,
    })
}

/// Memory accounting of one stage.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageOccupancy {
    pub stage_index: u32,
    pub pinned_storage_bytes: u64,
    pub evictable_storage_bytes: u64,
    pub execution_bytes: u64,
    /// Bytes resident in the Spark region at the stage's high-water mark.
    pub occupancy_bytes: u64,
    pub spilled_bytes: u64,
    pub evicted_bytes: u64,
}

impl StageOccupancy {
    pub fn charged_bytes(&self) -> u64 {
        self.pinned_storage_bytes + self.evictable_storage_bytes + self.execution_bytes
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimResult {
    pub capacity_bytes: u64,
    pub spark_share_bytes: u64,
    pub peak_executor_bytes: u64,
    /// Execution bytes that did not fit.
    pub spilled_bytes: u64,
    /// Evictable storage pushed out of memory.
    pub evicted_bytes: u64,
    pub oom: bool,
    /// Spark share minus peak; negative iff `oom`.
    pub headroom_bytes: i64,
    pub timeline: Vec<StageOccupancy>,
}

/// Spark-managed share of a capacity under `cfg`.
pub fn spark_share(capacity_bytes: u64, cfg: &ClusterConfig) -> Result<u64, SimError> {
    cfg.validate()?;
    if capacity_bytes <= cfg.reserved_memory_bytes {
        return Err(SimError::CapacityTooSmall {
            capacity: capacity_bytes,
            reserved: cfg.reserved_memory_bytes,
        });
    }
    let (user_n, user_d) = cfg
        .user_memory_fraction
        .to_u128_parts()
        .ok_or_else(|| PlanError::InvalidConfig("user memory fraction".into()))?;
    let heap = u128::from(capacity_bytes - cfg.reserved_memory_bytes);
    // floor(heap × (d - n) / d) <= heap
    Ok((heap * (user_d - user_n) / user_d) as u64)
}

pub fn simulate(spec: &SimWorkloadSpec, capacity_bytes: u64, cfg: &ClusterConfig) -> Result<SimResult, SimError> {
    let share = spark_share(capacity_bytes, cfg)?;
    if spec.per_stage_shuffle_bytes.is_empty() || spec.input_bytes == 0 {
        return Err(SimError::InvalidSpec("empty workload".into()));
    }

    let input = u128::from(spec.input_bytes);
    let block = u128::from(cfg.block_size_bytes);
    let tasks = u128::from(cfg.tasks_per_executor);
    let par = u128::from(cfg.parallelism);

    let load_tasks = tasks.min(input.div_ceil(block));
    let executors = input.div_ceil(tasks * block).max(1);
    let cached = if cfg.cache_input { input.div_ceil(executors) } else { 0 };
    let concurrent = tasks.min(par);

    let sat = |v: u128| u64::try_from(v).unwrap_or(u64::MAX);

    let mut timeline = Vec::with_capacity(spec.per_stage_shuffle_bytes.len());
    for (i, &shuffle) in spec.per_stage_shuffle_bytes.iter().enumerate() {
        let (pinned, evictable, execution) = if i == 0 {
            (0, sat(load_tasks * block), 0)
        } else {
            (sat(cached), 0, sat((u128::from(shuffle) * concurrent).div_ceil(par)))
        };
        let free = share.saturating_sub(pinned);
        let exec_resident = execution.min(free);
        let storage_resident = evictable.min(free - exec_resident);
        timeline.push(StageOccupancy {
            stage_index: i as u32,
            pinned_storage_bytes: pinned,
            evictable_storage_bytes: evictable,
            execution_bytes: execution,
            occupancy_bytes: pinned + exec_resident + storage_resident,
            spilled_bytes: execution - exec_resident,
            evicted_bytes: evictable - storage_resident,
        });
    }

    let peak = timeline.iter().map(|s| s.occupancy_bytes).max().unwrap_or(0);
    Ok(SimResult {
        capacity_bytes,
        spark_share_bytes: share,
        peak_executor_bytes: peak,
        spilled_bytes: timeline.iter().map(|s| s.spilled_bytes).sum(),
        evicted_bytes: timeline.iter().map(|s| s.evicted_bytes).sum(),
        oom: timeline.iter().any(|s| s.pinned_storage_bytes > share),
        headroom_bytes: headroom(share, peak),
        timeline,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalOptions {
    pub trials: u32,
    pub seed: u64,
    pub baseline_capacity_bytes: u64,
    pub band: GenerationBand,
    /// Stage counts are drawn uniformly from `2..=max_stages`.
    pub max_stages: u32,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            trials: 100,
            seed: 0,
            baseline_capacity_bytes: DEFAULT_BASELINE_BYTES,
            band: GenerationBand::Category,
            max_stages: 8,
        }
    }
}

/// Aggregate outcome of all trials at one capacity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapacityOutcome {
    pub capacity_bytes: u64,
    pub spark_share_bytes: u64,
    pub oom_trials: u32,
    pub oom_rate: f64,
    /// Mean of headroom / Spark share over trials.
    pub mean_waste_ratio: f64,
    pub min_headroom_bytes: i64,
    pub total_spilled_bytes: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub category: Category,
    pub input_bytes: u64,
    pub options: EvalOptions,
    pub plan: MemoryPlan,
    pub planned: CapacityOutcome,
    pub baseline: CapacityOutcome,
    /// `1 - planned capacity / baseline capacity`; negative when the plan
    /// asks for more than the baseline.
    pub savings_ratio: f64,
}

struct Tally {
    capacity: u64,
    share: u64,
    oom: u32,
    waste_sum: f64,
    min_headroom: i64,
    spilled: u64,
}

impl Tally {
    fn new(capacity: u64, share: u64) -> Self {
        Tally { capacity, share, oom: 0, waste_sum: 0.0, min_headroom: i64::MAX, spilled: 0 }
    }

    fn add(&mut self, r: &SimResult) {
        self.oom += u32::from(r.oom);
        self.waste_sum += r.headroom_bytes as f64 / r.spark_share_bytes.max(1) as f64;
        self.min_headroom = self.min_headroom.min(r.headroom_bytes);
        self.spilled = self.spilled.saturating_add(r.spilled_bytes);
    }

    fn finish(self, trials: u32) -> CapacityOutcome {
        CapacityOutcome {
            capacity_bytes: self.capacity,
            spark_share_bytes: self.share,
            oom_trials: self.oom,
            oom_rate: f64::from(self.oom) / f64::from(trials),
            mean_waste_ratio: self.waste_sum / f64::from(trials),
            min_headroom_bytes: self.min_headroom,
            total_spilled_bytes: self.spilled,
        }
    }
}

// Saturates at the i64 range; real executors are nowhere near it.
fn headroom(share: u64, peak: u64) -> i64 {
    let d = i128::from(share) - i128::from(peak);
    i64::try_from(d).unwrap_or(if d < 0 { i64::MIN } else { i64::MAX })
}

/// Replays `opts.trials` generated workloads against the predicted plan and
/// against the baseline capacity.
pub fn evaluate_plan(
    category: Category,
    input_bytes: u64,
    cfg: &ClusterConfig,
    opts: &EvalOptions,
) -> Result<EvaluationReport, SimError> {
    if opts.trials == 0 {
        return Err(SimError::NoTrials);
    }
    let max_stages = opts.max_stages.max(2);
    let plan = predictor::plan(category, input_bytes, cfg)?;
    let mut planned = Tally::new(plan.capacity_bytes, spark_share(plan.capacity_bytes, cfg)?);
    let mut baseline = Tally::new(
        opts.baseline_capacity_bytes,
        spark_share(opts.baseline_capacity_bytes, cfg)?,
    );

    let mut master = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..opts.trials {
        let trial_seed = master.next_u64();
        let stages = master.random_range(2..=max_stages);
        let spec = generate_in(category, input_bytes, stages, trial_seed, opts.band)?;
        planned.add(&simulate(&spec, plan.capacity_bytes, cfg)?);
        baseline.add(&simulate(&spec, opts.baseline_capacity_bytes, cfg)?);
    }

    let savings_ratio = 1.0 - plan.capacity_bytes as f64 / opts.baseline_capacity_bytes as f64;
    Ok(EvaluationReport {
        category,
        input_bytes,
        options: opts.clone(),
        plan,
        planned: planned.finish(opts.trials),
        baseline: baseline.finish(opts.trials),
        savings_ratio,
    })
}
