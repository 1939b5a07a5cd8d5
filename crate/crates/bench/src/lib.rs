//! Synthetic workloads and the lookup and face-matching benchmarks.

pub mod scenario;
pub mod stats;
pub mod workload;

pub use scenario::{plan, run_scenario, spec_at, BenchError, BenchOptions, BenchResult, Preset, Scenario, ScenarioPlan};
pub use stats::{write_csv, CsvMeta, Summary, CSV_HEADER};
pub use workload::{group_photo, PoliciesPerLocation, ProbeKind, Workload, WorkloadError, WorkloadSpec};
