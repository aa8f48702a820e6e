//! Experiment harness for APIG and APIG-FP: scenario configs, instance generation,
//! parallel suites and CSV / markdown reports.

pub mod config;
pub mod instances;
pub mod report;
pub mod suite;

pub use config::{AlgorithmSpec, ConfigError, InstanceParams, ProblemKind, ScenarioConfig};
pub use instances::{generate_instances, BenchInstance, GenerationError, GenerationReport, LabeledInstance};
pub use report::{emit_report, render_markdown, summarize, AlgorithmSummary, ReportError, ReportFormat};
pub use suite::{run_suite, RunOutcome, RunRow};
