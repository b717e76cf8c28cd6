// SPDX-License-Identifier: Apache-2.0

//! Command implementations behind the `memadvisor` binary.
//!
//! Every command produces a [`Report`]; the binary either renders it for
//! humans or prints it as a single JSON document (`--json`).

use std::fs::File;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use memadvisor::classifier::{classify_profile, Category, ClassificationResult};
use memadvisor::ingest::{self, ProfileSet, ValidationReport};
use memadvisor::knowledge_base::{KbEntry, KnowledgeBase, PutOutcome, KB_ENV};
use memadvisor::predictor::{self, ClusterConfig, MemoryPlan};
use memadvisor::simulator::{self, EvalOptions, EvaluationReport, GenerationBand, SimResult, SimWorkloadSpec};
use memadvisor::units::{bytes_to_mb_ceil, mb_to_bytes};
use memadvisor::Rational;

#[derive(Parser, Debug)]
#[command(
    name = "memadvisor",
    version,
    about = "Classify analytic workloads by data expansion and size executor memory",
    long_about = "Classify stage-based analytic workloads by their Data Expansion Ratio and \
                  predict the executor memory capacity (the spark.executor.memory analogue) \
                  they need."
)]
pub struct Cli {
    /// Print a single machine-readable JSON report.
    #[arg(long, global = true)]
    pub json: bool,

    /// Knowledge base file.
    #[arg(long, global = true, env = KB_ENV, value_name = "PATH")]
    pub kb: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check a profile file and report which metrics it supports.
    Validate {
        profile: PathBuf,
    },
    /// Classify a profiled workload; stores the result when a knowledge base is set.
    Classify {
        profile: PathBuf,
    },
    /// Predict the executor memory capacity for a target input size.
    Predict(PredictArgs),
    /// Manage the knowledge base of classified workloads.
    Kb {
        #[command(subcommand)]
        action: KbCommand,
    },
    /// Replay one synthetic workload against a capacity.
    Simulate(SimulateArgs),
    /// Compare the predicted capacity with a static baseline over many synthetic workloads.
    Evaluate(EvaluateArgs),
}

#[derive(Subcommand, Debug)]
pub enum KbCommand {
    /// Classify a profile file and store the result.
    Put { profile: PathBuf },
    /// Show the stored entry for a workload id.
    Get { workload_id: String },
    /// List all stored entries.
    List,
}

#[derive(Args, Debug, Clone)]
pub struct ClusterArgs {
    /// Data block size in MB (Size_block).
    #[arg(long, default_value_t = 128)]
    pub block_mb: u64,
    /// Concurrent tasks per executor (Task_ex, spark.executor.cores).
    #[arg(long, default_value_t = 4)]
    pub tasks_per_executor: u32,
    /// Total task count of shuffle stages (spark.default.parallelism).
    #[arg(long, default_value_t = 4)]
    pub parallelism: u32,
    /// Keep the input cached in executors (β = 1). On by default.
    #[arg(long, overrides_with = "no_cache_input")]
    pub cache_input: bool,
    /// Do not cache the input (β = 0).
    #[arg(long, overrides_with = "cache_input")]
    pub no_cache_input: bool,
    /// Reserved memory per executor in MB.
    #[arg(long, default_value_t = 300)]
    pub reserved_mb: u64,
}

impl ClusterArgs {
    pub fn to_config(&self) -> Result<ClusterConfig> {
        let cfg = ClusterConfig {
            block_size_bytes: mb(self.block_mb, "--block-mb")?,
            tasks_per_executor: self.tasks_per_executor,
            parallelism: self.parallelism,
            cache_input: !self.no_cache_input,
            reserved_memory_bytes: mb(self.reserved_mb, "--reserved-mb")?,
            user_memory_fraction: Rational::new(1, 4),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args, Debug, Clone)]
pub struct PredictArgs {
    /// Workload category (shrinking, medium, expanding-medium, expanding-rapid).
    #[arg(long, conflicts_with = "workload")]
    pub category: Option<Category>,
    /// Look the category up in the knowledge base by workload id.
    #[arg(long)]
    pub workload: Option<String>,
    /// Target input size in MB.
    #[arg(long)]
    pub input_mb: u64,
    #[command(flatten)]
    pub cluster: ClusterArgs,
}

#[derive(Args, Debug, Clone)]
pub struct SimulateArgs {
    #[arg(long)]
    pub category: Category,
    #[arg(long)]
    pub input_mb: u64,
    /// Number of stages, including the loading stage.
    #[arg(long, default_value_t = 4)]
    pub stages: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Executor capacity in MB; defaults to the predicted capacity.
    #[arg(long)]
    pub capacity_mb: Option<u64>,
    /// Draw shuffle volumes no larger than the category factor allows.
    #[arg(long)]
    pub in_band_only: bool,
    #[command(flatten)]
    pub cluster: ClusterArgs,
}

#[derive(Args, Debug, Clone)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub category: Category,
    #[arg(long)]
    pub input_mb: u64,
    #[arg(long, default_value_t = 100)]
    pub trials: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Static baseline capacity in MB.
    #[arg(long, default_value_t = 2048)]
    pub baseline_mb: u64,
    /// Largest stage count of generated workloads.
    #[arg(long, default_value_t = 8)]
    pub max_stages: u32,
    /// Draw shuffle volumes no larger than the category factor allows.
    #[arg(long)]
    pub in_band_only: bool,
    #[command(flatten)]
    pub cluster: ClusterArgs,
}

fn mb(v: u64, flag: &str) -> Result<u64> {
    mb_to_bytes(v).ok_or_else(|| anyhow!("{flag} {v} is too large"))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub inputs: serde_json::Value,
    pub result: ReportResult,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReportResult {
    Validation(ValidationReport),
    Classification {
        classification: ClassificationResult,
        stored: Option<PutOutcome>,
    },
    Plan(MemoryPlan),
    Entry(KbEntry),
    Entries {
        entries: Vec<KbEntry>,
    },
    Simulation {
        spec: SimWorkloadSpec,
        result: SimResult,
    },
    Evaluation(EvaluationReport),
}

fn read_profile(path: &Path) -> Result<ProfileSet> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    ingest::parse_profiles(f).with_context(|| format!("parsing {}", path.display()))
}

fn require_kb(kb: Option<&Path>) -> Result<KnowledgeBase> {
    kb.map(KnowledgeBase::open)
        .ok_or_else(|| anyhow!("no knowledge base: pass --kb PATH or set {KB_ENV}"))
}

pub fn cmd_validate(profile: &Path) -> Result<Report> {
    let ps = read_profile(profile)?;
    let report = ingest::validate_for_classification(&ps);
    Ok(Report {
        command: "validate".into(),
        inputs: json!({ "profile": profile }),
        warnings: report.warnings.clone(),
        result: ReportResult::Validation(report),
    })
}

pub fn cmd_classify(profile: &Path, kb: Option<&Path>) -> Result<Report> {
    let ps = read_profile(profile)?;
    let classification = classify_profile(&ps)?;
    let stored = match kb {
        Some(path) => Some(KnowledgeBase::open(path).put(KbEntry::new(&ps, classification.clone()))?),
        None => None,
    };
    Ok(Report {
        command: "classify".into(),
        inputs: json!({ "profile": profile, "kb": kb }),
        warnings: ingest::validate_for_classification(&ps).warnings,
        result: ReportResult::Classification { classification, stored },
    })
}

pub fn cmd_predict(args: &PredictArgs, kb: Option<&Path>) -> Result<Report> {
    let cfg = args.cluster.to_config()?;
    let category = match (&args.category, &args.workload) {
        (Some(c), _) => *c,
        (None, Some(id)) => {
            let store = require_kb(kb)?;
            match store.get(id)? {
                Some(entry) => entry.classification.category,
                None => {
                    let known: Vec<String> = store.list()?.into_iter().map(|e| e.workload_id).collect();
                    bail!(
                        "unknown workload {id:?}; known ids: [{}]",
                        known.join(", ")
                    );
                }
            }
        }
        (None, None) => bail!("pass --category or --workload"),
    };
    let input = mb(args.input_mb, "--input-mb")?;
    let plan = predictor::plan(category, input, &cfg)?;
    Ok(Report {
        command: "predict".into(),
        inputs: json!({
            "category": category,
            "workload": args.workload,
            "input_mb": args.input_mb,
            "cluster": cfg,
        }),
        result: ReportResult::Plan(plan),
        warnings: Vec::new(),
    })
}

pub fn cmd_kb(action: &KbCommand, kb: Option<&Path>) -> Result<Report> {
    let store = require_kb(kb)?;
    let inputs = json!({ "kb": store.path() });
    match action {
        KbCommand::Put { profile } => {
            let ps = read_profile(profile)?;
            let classification = classify_profile(&ps)?;
            let outcome = store.put(KbEntry::new(&ps, classification.clone()))?;
            Ok(Report {
                command: "kb put".into(),
                inputs,
                result: ReportResult::Classification {
                    classification,
                    stored: Some(outcome),
                },
                warnings: Vec::new(),
            })
        }
        KbCommand::Get { workload_id } => {
            let entry = store
                .get(workload_id)?
                .ok_or_else(|| anyhow!("no entry for {workload_id:?} in {}", store.path().display()))?;
            Ok(Report {
                command: "kb get".into(),
                inputs,
                result: ReportResult::Entry(entry),
                warnings: Vec::new(),
            })
        }
        KbCommand::List => Ok(Report {
            command: "kb list".into(),
            inputs,
            result: ReportResult::Entries { entries: store.list()? },
            warnings: Vec::new(),
        }),
    }
}

fn band(in_band_only: bool) -> GenerationBand {
    if in_band_only {
        GenerationBand::WithinFactor
    } else {
        GenerationBand::Category
    }
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<Report> {
    let cfg = args.cluster.to_config()?;
    let input = mb(args.input_mb, "--input-mb")?;
    let capacity = match args.capacity_mb {
        Some(c) => mb(c, "--capacity-mb")?,
        None => predictor::plan(args.category, input, &cfg)?.capacity_bytes,
    };
    let spec = simulator::generate_in(args.category, input, args.stages, args.seed, band(args.in_band_only))?;
    let result = simulator::simulate(&spec, capacity, &cfg)?;
    let mut warnings = Vec::new();
    if result.oom {
        warnings.push("cached input does not fit: out of memory".into());
    }
    Ok(Report {
        command: "simulate".into(),
        inputs: json!({
            "category": args.category,
            "input_mb": args.input_mb,
            "stages": args.stages,
            "seed": args.seed,
            "capacity_bytes": capacity,
            "in_band_only": args.in_band_only,
            "cluster": cfg,
        }),
        result: ReportResult::Simulation { spec, result },
        warnings,
    })
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<Report> {
    let cfg = args.cluster.to_config()?;
    let opts = EvalOptions {
        trials: args.trials,
        seed: args.seed,
        baseline_capacity_bytes: mb(args.baseline_mb, "--baseline-mb")?,
        band: band(args.in_band_only),
        max_stages: args.max_stages,
    };
    let report = simulator::evaluate_plan(args.category, mb(args.input_mb, "--input-mb")?, &cfg, &opts)?;
    let mut warnings = Vec::new();
    if report.savings_ratio < 0.0 {
        warnings.push("predicted capacity exceeds the baseline".into());
    }
    Ok(Report {
        command: "evaluate".into(),
        inputs: json!({
            "category": args.category,
            "input_mb": args.input_mb,
            "cluster": cfg,
            "options": opts,
        }),
        result: ReportResult::Evaluation(report),
        warnings,
    })
}

pub fn run(cli: &Cli) -> Result<Report> {
    let kb = cli.kb.as_deref();
    match &cli.command {
        Command::Validate { profile } => cmd_validate(profile),
        Command::Classify { profile } => cmd_classify(profile, kb),
        Command::Predict(args) => cmd_predict(args, kb),
        Command::Kb { action } => cmd_kb(action, kb),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Evaluate(args) => cmd_evaluate(args),
    }
}

fn mb_str(bytes: u64) -> String {
    format!("{} MB ({bytes} bytes)", bytes_to_mb_ceil(bytes))
}

fn opt_ratio(r: &Option<Rational>) -> String {
    r.as_ref().map_or("n/a".into(), |v| format!("{v} (≈{:.4})", v.to_f64()))
}

/// Human-readable rendering. Numbers come from the same report fields as the
/// JSON output; MB values are rounded up.
pub fn render(report: &Report) -> String {
    let mut out = Vec::new();
    match &report.result {
        ReportResult::Validation(v) => {
            out.push(format!("workload:            {}", v.workload_id));
            out.push(format!("runs:                {}", v.run_count));
            out.push(format!("alpha computable:    {}", v.alpha_computable));
            out.push(format!("inc_shuf computable: {}", v.inc_shuf_computable));
        }
        ReportResult::Classification { classification: c, stored } => {
            out.push(format!("category:    {}", c.category));
            out.push(format!("alpha_mean:  {} (≈{:.4})", c.alpha_mean, c.alpha_mean.to_f64()));
            out.push(format!("inc_shuf:    {}", opt_ratio(&c.inc_shuf)));
            out.push(format!("factor_shuf: {}", c.factor_shuf));
            if let Some(s) = stored {
                out.push(format!(
                    "stored:      {} ({})",
                    s.entry.workload_id,
                    if s.replaced { "replaced" } else { "new" }
                ));
            }
        }
        ReportResult::Plan(p) => {
            if let Some(c) = p.category {
                out.push(format!("category:          {c} (factor {})", p.factor_shuf));
            }
            out.push(format!("input:             {}", mb_str(p.input_bytes)));
            out.push(format!("predicted shuffle: {}", mb_str(p.predicted_shuffle_bytes)));
            out.push(format!("executors:         {}", p.num_executors));
            out.push(format!("first stage:       {}", mb_str(p.mem_first_stage_bytes)));
            out.push(format!("other stages:      {}", mb_str(p.mem_other_stages_bytes)));
            out.push(format!("spark memory:      {}", mb_str(p.mem_spark_bytes)));
            out.push(format!("user memory:       {}", mb_str(p.user_memory_bytes)));
            out.push(format!("reserved:          {}", mb_str(p.reserved_bytes)));
            out.push(format!("executor memory:   {}", mb_str(p.capacity_bytes)));
        }
        ReportResult::Entry(e) => render_entry(&mut out, e),
        ReportResult::Entries { entries } => {
            if entries.is_empty() {
                out.push("(empty)".into());
            }
            for e in entries {
                out.push(format!(
                    "{}\t{}\tfactor {}\talpha {}\t{}",
                    e.workload_id,
                    e.classification.category,
                    e.classification.factor_shuf,
                    e.classification.alpha_mean,
                    e.created_at.to_rfc3339()
                ));
            }
        }
        ReportResult::Simulation { spec, result } => {
            out.push(format!("category:     {} ({} stages, seed {})", spec.category, spec.stage_count, spec.seed));
            out.push(format!("capacity:     {}", mb_str(result.capacity_bytes)));
            out.push(format!("spark share:  {}", mb_str(result.spark_share_bytes)));
            out.push(format!("peak:         {}", mb_str(result.peak_executor_bytes)));
            out.push(format!("headroom:     {} bytes", result.headroom_bytes));
            out.push(format!("spilled:      {}", mb_str(result.spilled_bytes)));
            out.push(format!("evicted:      {}", mb_str(result.evicted_bytes)));
            out.push(format!("oom:          {}", result.oom));
            for s in &result.timeline {
                out.push(format!(
                    "  stage {:>2}: occupancy {} bytes, spilled {}, evicted {}",
                    s.stage_index, s.occupancy_bytes, s.spilled_bytes, s.evicted_bytes
                ));
            }
        }
        ReportResult::Evaluation(r) => {
            out.push(format!(
                "category:  {} at {} ({} trials, seed {})",
                r.category,
                mb_str(r.input_bytes),
                r.options.trials,
                r.options.seed
            ));
            for (label, o) in [("planned", &r.planned), ("baseline", &r.baseline)] {
                out.push(format!(
                    "{label:<9} capacity {}, oom rate {:.4}, mean waste {:.4}, min headroom {} bytes, spilled {} bytes",
                    mb_str(o.capacity_bytes),
                    o.oom_rate,
                    o.mean_waste_ratio,
                    o.min_headroom_bytes,
                    o.total_spilled_bytes
                ));
            }
            out.push(format!("savings:   {:.4} of baseline", r.savings_ratio));
        }
    }
    for w in &report.warnings {
        out.push(format!("warning: {w}"));
    }
    out.join("\n")
}

fn render_entry(out: &mut Vec<String>, e: &KbEntry) {
    out.push(format!("workload:    {}", e.workload_id));
    out.push(format!("category:    {}", e.classification.category));
    out.push(format!("alpha_mean:  {}", e.classification.alpha_mean));
    out.push(format!("inc_shuf:    {}", opt_ratio(&e.classification.inc_shuf)));
    out.push(format!("factor_shuf: {}", e.classification.factor_shuf));
    out.push(format!("digest:      {}", e.profile_digest));
    out.push(format!("created:     {}", e.created_at.to_rfc3339()));
}
