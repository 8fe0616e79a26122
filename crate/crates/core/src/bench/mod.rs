//! Benchmark harness: repeated paired runs, learning curves, ALC, paired
//! t-tests, summaries and result files.

pub mod aggregate;
pub mod experiment;
pub mod io;
pub mod stats;

pub use aggregate::{aggregate, StrategySummary, Summary, WinTieLoss, SCHEMA_VERSION};
pub use experiment::{run_experiment, ExperimentConfig, ExperimentRecord};
pub use io::{read_records, write_results, RecordsFile, ResultsError};
pub use stats::{alc, paired_t_test, Outcome, StatsError};
