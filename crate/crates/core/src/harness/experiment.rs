use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;

use super::config::Experiment;
use super::trial::{run_trial, TrialRecord};
use crate::analysis::{
    asymptotic_covariance, burn_in_window, normality_check, rate_fit, AsymptoticCovariance,
    NormalityReport, RateFit, MIN_NORMALITY_SAMPLES,
};
use crate::error::{Error, Result};

/// Cross-trial statistics at one recorded iteration. Statistics over sensor
/// errors and gaps pool every (trial, sensor) pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateRow {
    pub i: u64,
    /// Trials that reached this iteration without tripping the guard.
    pub trials: usize,
    pub mean_error: f64,
    pub median_error: f64,
    pub median_average_error: f64,
    pub mean_disagreement: f64,
    pub median_disagreement: f64,
    pub median_gap: Option<f64>,
    pub median_central_error: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentSummary {
    pub config_hash: String,
    pub trials: u64,
    pub iterations: u64,
    pub diverged: Vec<DivergedTrial>,
    /// Power-law fit of the median sensor error curve.
    pub error_fit: Option<RateFit>,
    pub disagreement_fit: Option<RateFit>,
    pub gap_fit: Option<RateFit>,
    pub asymptotic_covariance: Option<AsymptoticCovariance>,
    /// Per sensor: terminal scaled errors against the asymptotic covariance.
    pub normality: Vec<NormalityReport>,
    pub central_normality: Option<NormalityReport>,
    /// Reasons an optional statistic was not produced.
    pub notes: Vec<String>,
    #[serde(skip)]
    pub aggregate: Vec<AggregateRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DivergedTrial {
    pub trial: u64,
    pub iteration: u64,
}

/// Runs every trial in parallel and aggregates. Writes per-trial CSVs,
/// `aggregate.csv` and `summary.json` into `out` when given.
pub fn run_experiment(exp: &Experiment, out: Option<&Path>) -> Result<ExperimentSummary> {
    let records = (0..exp.config.trials)
        .into_par_iter()
        .map(|t| run_trial(exp, t))
        .collect::<Result<Vec<_>>>()?;
    let summary = summarize(exp, &records)?;
    if let Some(dir) = out {
        write_results(dir, exp, &records, &summary)?;
    }
    Ok(summary)
}

/// Aggregates trial records. Results do not depend on record order.
pub fn summarize(exp: &Experiment, records: &[TrialRecord]) -> Result<ExperimentSummary> {
    let aggregate = aggregate(records)?;
    let mut notes = Vec::new();
    let last = aggregate.last().map_or(0, |r| r.i);
    let window = burn_in_window(last, exp.config.burn_in);

    let mut fit = |name: &str, curve: Vec<(u64, f64)>| -> Option<RateFit> {
        match rate_fit(&curve, window) {
            Ok(f) => Some(f),
            Err(e) => {
                notes.push(format!("{name} fit: {e}"));
                None
            }
        }
    };
    let error_fit = fit("error", aggregate.iter().map(|r| (r.i, r.median_error)).collect());
    let disagreement_fit = fit(
        "disagreement",
        aggregate.iter().map(|r| (r.i, r.median_disagreement)).collect(),
    );
    let gap_fit = if exp.central.is_some() {
        fit(
            "gap",
            aggregate
                .iter()
                .filter_map(|r| r.median_gap.map(|g| (r.i, g)))
                .collect(),
        )
    } else {
        None
    };

    let mut normality = Vec::new();
    let mut central_normality = None;
    let asymptotic = match asymptotic_covariance(&exp.model, exp.glu.a, &exp.glu.gain) {
        Ok(cov) => Some(cov),
        Err(e) => {
            notes.push(format!("asymptotic covariance: {e}"));
            None
        }
    };
    if let (Some(cov), Some(_)) = (&asymptotic, &exp.central) {
        let finished: Vec<_> = records
            .iter()
            .filter(|r| r.diverged_at.is_none())
            .collect();
        if finished.len() >= MIN_NORMALITY_SAMPLES {
            for k in 0..exp.model.n_sensors() {
                let samples: Vec<DVector<f64>> = finished.iter().map(|r| r.scaled_errors[k].clone()).collect();
                normality.push(normality_check(&samples, &cov.s_c)?);
            }
            let central: Vec<_> = finished
                .iter()
                .filter_map(|r| r.central_scaled_error.clone())
                .collect();
            central_normality = Some(normality_check(&central, &cov.s_c)?);
        } else {
            notes.push(format!(
                "normality check skipped: {} completed trials, need {MIN_NORMALITY_SAMPLES}",
                finished.len()
            ));
        }
    }

    let mut diverged: Vec<_> = records
        .iter()
        .filter_map(|r| r.diverged_at.map(|iteration| DivergedTrial { trial: r.trial, iteration }))
        .collect();
    diverged.sort_by_key(|d| d.trial);

    Ok(ExperimentSummary {
        config_hash: exp.config_hash().to_owned(),
        trials: exp.config.trials,
        iterations: exp.config.iterations,
        diverged,
        error_fit,
        disagreement_fit,
        gap_fit,
        asymptotic_covariance: asymptotic,
        normality,
        central_normality,
        notes,
        aggregate,
    })
}

/// Median of a sample; sorts in place.
pub fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(f64::total_cmp);
    let k = values.len();
    if k % 2 == 1 {
        values[k / 2]
    } else {
        0.5 * (values[k / 2 - 1] + values[k / 2])
    }
}

/// Mean summed in sorted order, so the result is independent of input order.
fn sorted_mean(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    values.iter().sum::<f64>() / values.len() as f64
}

fn aggregate(records: &[TrialRecord]) -> Result<Vec<AggregateRow>> {
    // Completed trials define the iteration grid; a diverged trial follows
    // it up to its final, off-grid guard row.
    let longest = records
        .iter()
        .max_by_key(|r| (r.diverged_at.is_none(), r.rows.len(), std::cmp::Reverse(r.trial)))
        .ok_or_else(|| Error::InsufficientData("no trial records".into()))?;
    let first = &records[0].rows[0];
    let (n, has_central) = (first.sensor_errors.len(), first.central_error.is_some());
    for r in records {
        let on_grid = match r.diverged_at {
            Some(_) => &r.rows[..r.rows.len() - 1],
            None => &r.rows[..],
        };
        let prefix = on_grid.len() <= longest.rows.len()
            && on_grid.iter().zip(&longest.rows).all(|(a, b)| a.i == b.i);
        let shape = r
            .rows
            .iter()
            .all(|row| row.sensor_errors.len() == n && row.central_error.is_some() == has_central);
        let complete = r.diverged_at.is_some() || r.rows.len() == longest.rows.len();
        if !(prefix && shape && complete) {
            return Err(Error::Contract(format!("trial {} record does not match the others", r.trial)));
        }
    }

    let mut out = Vec::with_capacity(longest.rows.len());
    for (k, reference) in longest.rows.iter().enumerate() {
        let rows: Vec<_> = records
            .iter()
            .filter_map(|r| r.rows.get(k))
            .filter(|row| row.i == reference.i)
            .collect();
        let mut errors: Vec<f64> = rows.iter().flat_map(|r| r.sensor_errors.iter().copied()).collect();
        let mut avg: Vec<f64> = rows.iter().map(|r| r.average_error).collect();
        let mut dis: Vec<f64> = rows.iter().map(|r| r.disagreement).collect();
        let mut gaps: Vec<f64> = rows.iter().flat_map(|r| r.gaps.iter().copied()).collect();
        let mut central: Vec<f64> = rows.iter().filter_map(|r| r.central_error).collect();
        out.push(AggregateRow {
            i: reference.i,
            trials: rows.len(),
            mean_error: sorted_mean(&mut errors),
            median_error: median(&mut errors),
            median_average_error: median(&mut avg),
            mean_disagreement: sorted_mean(&mut dis),
            median_disagreement: median(&mut dis),
            median_gap: has_central.then(|| median(&mut gaps)),
            median_central_error: has_central.then(|| median(&mut central)),
        });
    }
    Ok(out)
}

fn header(hash: &str, columns: &[String]) -> String {
    format!("# config_hash={hash} columns={}\n", columns.join(","))
}

fn push_row(out: &mut String, values: impl IntoIterator<Item = f64>) {
    let line: Vec<String> = values.into_iter().map(|v| v.to_string()).collect();
    out.push_str(&line.join(","));
    out.push('\n');
}

/// Per-trial CSV: `i, error_1..error_N, average_error, disagreement` and,
/// with a centralized estimator, `gap_1..gap_N, central_error`.
pub fn trial_csv(hash: &str, record: &TrialRecord) -> String {
    let n = record.rows[0].sensor_errors.len();
    let has_central = record.rows[0].central_error.is_some();
    let mut columns = vec!["i".to_owned()];
    columns.extend((1..=n).map(|k| format!("error_{k}")));
    columns.extend(["average_error".to_owned(), "disagreement".to_owned()]);
    if has_central {
        columns.extend((1..=n).map(|k| format!("gap_{k}")));
        columns.push("central_error".to_owned());
    }
    let mut text = header(hash, &columns);
    for row in &record.rows {
        let mut values = vec![row.i as f64];
        values.extend(&row.sensor_errors);
        values.extend([row.average_error, row.disagreement]);
        values.extend(&row.gaps);
        values.extend(row.central_error);
        push_row(&mut text, values);
    }
    text
}

/// Aggregate CSV, one row per recorded iteration.
pub fn aggregate_csv(hash: &str, rows: &[AggregateRow]) -> String {
    let has_central = rows.first().is_some_and(|r| r.median_gap.is_some());
    let mut columns: Vec<String> = [
        "i",
        "trials",
        "mean_error",
        "median_error",
        "median_average_error",
        "mean_disagreement",
        "median_disagreement",
    ]
    .map(String::from)
    .to_vec();
    if has_central {
        columns.extend(["median_gap".to_owned(), "median_central_error".to_owned()]);
    }
    let mut text = header(hash, &columns);
    for r in rows {
        let mut values = vec![
            r.i as f64,
            r.trials as f64,
            r.mean_error,
            r.median_error,
            r.median_average_error,
            r.mean_disagreement,
            r.median_disagreement,
        ];
        values.extend(r.median_gap);
        values.extend(r.median_central_error);
        push_row(&mut text, values);
    }
    text
}

pub fn trial_file_name(trial: u64) -> String {
    format!("trial_{trial:05}.csv")
}

fn write(path: PathBuf, contents: &str) -> Result<()> {
    fs::write(&path, contents).map_err(|e| Error::io(path, e))
}

fn write_results(dir: &Path, exp: &Experiment, records: &[TrialRecord], summary: &ExperimentSummary) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let hash = exp.config_hash();
    records
        .par_iter()
        .try_for_each(|r| write(dir.join(trial_file_name(r.trial)), &trial_csv(hash, r)))?;
    write(dir.join("aggregate.csv"), &aggregate_csv(hash, &summary.aggregate))?;
    let mut json = serde_json::to_string_pretty(summary).map_err(|e| Error::Numerical(e.to_string()))?;
    json.push('\n');
    write(dir.join("summary.json"), &json)?;
    let mut config = exp.config.to_toml_string()?;
    let _ = writeln!(config);
    write(dir.join("config.toml"), &config)
}
