use nalgebra::DVector;

use super::config::Experiment;
use super::streams::{Purpose, TrialStream};
use crate::error::Result;
use crate::estimators::{centralized_step, glu_step, network_average, CentralState, NetworkState};
use crate::graph::sample_topology;
use crate::sensing::sample_observation;

/// Max-norm above which a trajectory is declared divergent and stopped.
pub const DIVERGENCE_GUARD: f64 = 1e12;

/// Diagnostics at one recorded iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordRow {
    pub i: u64,
    /// `‖x_n(i) − θ*‖` per sensor.
    pub sensor_errors: Vec<f64>,
    /// `‖x_avg(i) − θ*‖`.
    pub average_error: f64,
    /// `‖x(i) − 1_N ⊗ x_avg(i)‖`.
    pub disagreement: f64,
    /// `‖x_n(i) − u(i)‖` per sensor; empty without a centralized estimator.
    pub gaps: Vec<f64>,
    /// `‖u(i) − θ*‖`.
    pub central_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial: u64,
    pub rows: Vec<RecordRow>,
    /// `√(i+1)(x_n(i) − θ*)` per sensor at the last recorded iteration.
    pub scaled_errors: Vec<DVector<f64>>,
    /// `√(i+1)(u(i) − θ*)` at the last recorded iteration.
    pub central_scaled_error: Option<DVector<f64>>,
    /// Iteration at which the divergence guard stopped the trial.
    pub diverged_at: Option<u64>,
}

impl TrialRecord {
    pub fn last(&self) -> &RecordRow {
        self.rows.last().expect("a record always holds the initial snapshot")
    }
}

/// Runs trial `trial` of the experiment for its configured iteration count.
pub fn run_trial(exp: &Experiment, trial: u64) -> Result<TrialRecord> {
    run_trial_for(exp, trial, exp.config.iterations)
}

/// Runs `iterations` steps of the distributed and (if configured) centralized
/// recursions on shared topology and observation draws.
pub fn run_trial_for(exp: &Experiment, trial: u64, iterations: u64) -> Result<TrialRecord> {
    let seed = exp.config.seed;
    let stride = exp.config.record_every;
    let n = exp.model.n_sensors();
    let m = exp.model.field_dim();
    let mut topo_rng = TrialStream::new(seed, trial, Purpose::Topology);
    let mut noise_rng = TrialStream::new(seed, trial, Purpose::Noise);

    let mut x = NetworkState::new(exp.initial.clone(), m)?;
    let mut u = exp
        .central
        .as_ref()
        .map(|_| CentralState::new(network_average(&x)));
    let mut rows = vec![snapshot(exp, &x, u.as_ref())];
    let mut diverged_at = None;

    for i in 0..iterations {
        let l = sample_topology(&exp.topology, topo_rng.at(i));
        let z = sample_observation(&exp.model, &exp.theta_star, i, noise_rng.at(i))?;
        x = glu_step(&x, &l, &z, &exp.glu, &exp.model)?;
        if let (Some(state), Some(params)) = (u.as_mut(), exp.central.as_ref()) {
            *state = centralized_step(state, &z, params, &exp.model)?;
        }
        let next = i + 1;
        let blown = !within_guard(&x.x) || u.as_ref().is_some_and(|c| !within_guard(&c.u));
        if blown || next % stride == 0 || next == iterations {
            rows.push(snapshot(exp, &x, u.as_ref()));
        }
        if blown {
            diverged_at = Some(next);
            break;
        }
    }

    let scale = ((x.i + 1) as f64).sqrt();
    let scaled_errors = (0..n).map(|k| (x.sensor(k) - &exp.theta_star) * scale).collect();
    let central_scaled_error = u.map(|c| (c.u - &exp.theta_star) * scale);
    Ok(TrialRecord {
        trial,
        rows,
        scaled_errors,
        central_scaled_error,
        diverged_at,
    })
}

fn within_guard(v: &DVector<f64>) -> bool {
    v.iter().all(|e| e.is_finite() && e.abs() <= DIVERGENCE_GUARD)
}

fn snapshot(exp: &Experiment, x: &NetworkState, u: Option<&CentralState>) -> RecordRow {
    let n = x.n_sensors();
    let sensors: Vec<_> = (0..n).map(|k| x.sensor(k)).collect();
    RecordRow {
        i: x.i,
        sensor_errors: sensors.iter().map(|s| (s - &exp.theta_star).norm()).collect(),
        average_error: (network_average(x) - &exp.theta_star).norm(),
        disagreement: x.disagreement(),
        gaps: u
            .map(|c| sensors.iter().map(|s| (s - &c.u).norm()).collect())
            .unwrap_or_default(),
        central_error: u.map(|c| (&c.u - &exp.theta_star).norm()),
    }
}
