//! Regret traces, time-point thinning and CSV output.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::trajectory::Trajectory;

pub const TRACE_HEADER: [&str; 9] = [
    "t",
    "action",
    "reward_observed",
    "reward_mean",
    "comparator_mean",
    "cum_regret_noisy",
    "cum_regret_mean",
    "avg_regret_mean",
    "episode",
];

pub const AGGREGATE_HEADER: [&str; 4] = ["t", "mean_avg_regret", "std_avg_regret", "n_reps"];

/// Steps logged one by one before thinning kicks in.
pub const THIN_DENSE_PREFIX: usize = 1000;
pub const THIN_RATIO: f64 = 1.05;

/// Algorithm trajectory paired with the comparator's per-step mean reward.
///
/// Regret at step `t` is `comparator_cum(t) - alg_cum(t)` with both running
/// sums accumulated left to right.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretTrace {
    pub trajectory: Trajectory,
    pub comparator: Vec<f64>,
    pub cum_comparator: Vec<f64>,
    pub cum_observed: Vec<f64>,
    pub cum_mean: Vec<f64>,
}

impl RegretTrace {
    pub fn new(trajectory: Trajectory, comparator: Vec<f64>) -> Result<Self> {
        if comparator.len() != trajectory.len() {
            return Err(Error::domain(format!(
                "comparator has {} steps, trajectory {}",
                comparator.len(),
                trajectory.len()
            )));
        }
        let running = |xs: &[f64]| {
            let mut acc = 0.0;
            xs.iter()
                .map(|x| {
                    acc += x;
                    acc
                })
                .collect::<Vec<f64>>()
        };
        Ok(Self {
            cum_comparator: running(&comparator),
            cum_observed: running(&trajectory.observed),
            cum_mean: running(&trajectory.mean),
            trajectory,
            comparator,
        })
    }

    pub fn len(&self) -> usize {
        self.comparator.len()
    }

    pub fn is_empty(&self) -> bool {
        self.comparator.is_empty()
    }

    /// Policy regret against noisy observed rewards, through 1-based step `t`.
    pub fn cum_regret_noisy(&self, t: usize) -> f64 {
        self.cum_comparator[t - 1] - self.cum_observed[t - 1]
    }

    pub fn cum_regret_mean(&self, t: usize) -> f64 {
        self.cum_comparator[t - 1] - self.cum_mean[t - 1]
    }

    pub fn avg_regret_mean(&self, t: usize) -> f64 {
        self.cum_regret_mean(t) / t as f64
    }

    /// Write the rows at `points` (1-based steps).
    pub fn write_csv<W: Write>(&self, out: W, points: &[usize]) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(TRACE_HEADER)?;
        for &t in points {
            let i = t - 1;
            w.write_record([
                t.to_string(),
                self.trajectory.actions[i].to_string(),
                self.trajectory.observed[i].to_string(),
                self.trajectory.mean[i].to_string(),
                self.comparator[i].to_string(),
                self.cum_regret_noisy(t).to_string(),
                self.cum_regret_mean(t).to_string(),
                self.avg_regret_mean(t).to_string(),
                self.trajectory.episode[i].to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<trace>", e))?;
        Ok(())
    }

    pub fn write_csv_file(&self, path: &Path, points: &[usize]) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file), points)
    }
}

/// 1-based steps to log: all of them, or every step up to 1000 and then a
/// geometric grid with ratio 1.05. The horizon is always included.
pub fn log_points(horizon: usize, thin: bool) -> Vec<usize> {
    if !thin || horizon <= THIN_DENSE_PREFIX {
        return (1..=horizon).collect();
    }
    let mut points: Vec<usize> = (1..=THIN_DENSE_PREFIX).collect();
    let mut t = THIN_DENSE_PREFIX;
    loop {
        t = ((t as f64 * THIN_RATIO).ceil() as usize).max(t + 1);
        if t >= horizon {
            break;
        }
        points.push(t);
    }
    points.push(horizon);
    points
}

/// Mean and sample standard deviation of the average mean-regret across
/// replications at each point.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub t: usize,
    pub mean: f64,
    pub std: f64,
    pub n_reps: usize,
}

pub fn aggregate(traces: &[RegretTrace], points: &[usize]) -> Vec<AggregateRow> {
    points
        .iter()
        .map(|&t| {
            let vals: Vec<f64> = traces.iter().map(|tr| tr.avg_regret_mean(t)).collect();
            let (mean, std) = mean_std(&vals);
            AggregateRow {
                t,
                mean,
                std,
                n_reps: vals.len(),
            }
        })
        .collect()
}

/// Mean and sample (n - 1) standard deviation; the deviation of a single
/// value is 0.
pub fn mean_std(vals: &[f64]) -> (f64, f64) {
    let n = vals.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = vals.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

pub fn write_aggregate_csv<W: Write>(out: W, rows: &[AggregateRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(AGGREGATE_HEADER)?;
    for r in rows {
        w.write_record([r.t.to_string(), r.mean.to_string(), r.std.to_string(), r.n_reps.to_string()])?;
    }
    w.flush().map_err(|e| Error::io("<aggregate>", e))?;
    Ok(())
}

pub fn write_aggregate_file(path: &Path, rows: &[AggregateRow]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_aggregate_csv(std::io::BufWriter::new(file), rows)
}
