// SPDX-License-Identifier: Apache-2.0

//! Workload classification and executor memory capacity planning for
//! stage-based in-memory analytic jobs.
//!
//! The pipeline runs in three steps:
//!
//! 1. [`ingest`] parses profiling runs of a workload at several small input
//!    sizes into a [`ProfileSet`].
//! 2. [`metrics`] and [`classifier`] derive the Data Expansion Ratio and its
//!    increase rate, then assign one of four categories with a fixed
//!    Data Expansion Factor.
//! 3. [`predictor`] turns a category, a target input size and a cluster
//!    configuration into a per-executor [`MemoryPlan`].
//!
//! [`knowledge_base`] persists classifications so a workload seen before does
//! not have to be profiled again, and [`simulator`] is a synthetic executor
//! memory model used to validate plans without a cluster.
//!
//! ```
//! use memadvisor::{classifier, ingest, predictor, units::MIB};
//!
//! let text = (1..=5)
//!     .map(|i| {
//!         format!(
//!             r#"{{"workload_id":"wl","input_bytes":{},"cached_input":true,"stages":[{{"stage_index":0,"shuffle_read_bytes":0,"shuffle_write_bytes":0}},{{"stage_index":1,"shuffle_read_bytes":{},"shuffle_write_bytes":{}}}]}}"#,
//!             i * 10 * MIB,
//!             i * 10 * MIB,
//!             i * 10 * MIB
//!         )
//!     })
//!     .collect::<Vec<_>>()
//!     .join("\n");
//! let profiles = ingest::parse_profiles(text.as_bytes()).unwrap();
//! let result = classifier::classify_profile(&profiles).unwrap();
//! assert_eq!(result.factor_shuf, 4);
//!
//! let plan = predictor::plan(result.category, 1024 * MIB, &predictor::ClusterConfig::default()).unwrap();
//! assert!(plan.capacity_bytes > plan.reserved_bytes);
//! ```

#![forbid(unsafe_code)]
#![warn(rust_2018_idioms, missing_debug_implementations)]

pub mod classifier;
pub mod ingest;
pub mod knowledge_base;
pub mod metrics;
pub mod predictor;
pub mod ratio;
pub mod simulator;
pub mod units;

pub use classifier::{Category, ClassificationResult};
pub use ingest::{ProfileSet, RunProfile, StageRecord};
pub use metrics::ExpansionMetrics;
pub use predictor::{ClusterConfig, MemoryPlan};
pub use ratio::Rational;
