//! Seeded Monte Carlo experiments.
//!
//! A trial draws its topology and observation noise from two independent
//! ChaCha streams keyed by `(seed, trial)`, each positioned by iteration, so
//! a trial's output is a pure function of the config and its index and
//! trials can run in any order or in parallel.
//!
//! Result files are plain CSV with one header line of the form
//! `# config_hash=<sha256> columns=<name>,<name>,...`.

mod config;
mod experiment;
mod streams;
mod trial;

pub use config::{
    CentralSpec, CovarianceSpec, Experiment, ExperimentConfig, GainSpec, GluSpec, GraphSpec,
    InitialSpec, ScaleSpec, SensingSpec, TopologySpec, TopologyTable,
};
pub use experiment::{
    aggregate_csv, median, run_experiment, summarize, trial_csv, trial_file_name, AggregateRow,
    DivergedTrial, ExperimentSummary,
};
pub use trial::{run_trial, run_trial_for, RecordRow, TrialRecord, DIVERGENCE_GUARD};
