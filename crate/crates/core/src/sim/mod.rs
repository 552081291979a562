//! Monte-Carlo experiments in the regulated and competitive markets.

pub mod competitive;
pub mod metrics;
pub mod regulated;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use competitive::simulate_competitive;
pub use metrics::{impact_metric, summarize, Histogram, PathMetrics, Summary, TrajectoryPoint, HISTOGRAM_BINS};
pub use regulated::{simulate_regulated, Policy};

use crate::error::{invalid, Result};
use crate::model::DarkPoolSpec;

/// Market experiment to run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scenario {
    /// Regulated market with the first dark pool only.
    #[default]
    #[serde(rename = "regulated-M1")]
    RegulatedM1,
    /// Regulated market with both dark pools.
    #[serde(rename = "regulated-M2")]
    RegulatedM2,
    #[serde(rename = "competitive")]
    Competitive,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::RegulatedM1, Scenario::RegulatedM2, Scenario::Competitive];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::RegulatedM1 => "regulated-M1",
            Scenario::RegulatedM2 => "regulated-M2",
            Scenario::Competitive => "competitive",
        }
    }

    /// Pools used by the scenario out of the preset list.
    pub fn pools(self, all: &[DarkPoolSpec]) -> Result<Vec<DarkPoolSpec>> {
        let m = match self {
            Scenario::RegulatedM1 => 1,
            Scenario::RegulatedM2 => 2,
            Scenario::Competitive => all.len(),
        };
        if all.len() < m {
            return Err(invalid(format!("{} needs {m} dark pools, {} configured", self.name(), all.len())));
        }
        Ok(all[..m].to_vec())
    }
}

impl std::str::FromStr for Scenario {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| invalid(format!("unknown scenario {s:?}; expected regulated-M1, regulated-M2 or competitive")))
    }
}

/// Where the regulated fees and contract sensitivities come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FeeSource {
    Zero,
    /// Constant fees with the hedging contract.
    Constant { lit: f64, dark: f64 },
    /// A trained actor checkpoint.
    Trained { checkpoint: String },
}

impl Default for FeeSource {
    fn default() -> Self {
        FeeSource::Constant { lit: crate::model::FEE_CAP, dark: crate::model::FEE_CAP }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub n_paths: usize,
    /// Steps of the regulated simulation; the competitive one uses the equilibrium grid.
    pub n_steps: usize,
    pub seed: u64,
    pub scenario: Scenario,
    pub fees: FeeSource,
    /// Paths, counted from index 0, whose trajectories are kept.
    pub record_paths: usize,
    /// Paths simulated in lockstep per task.
    pub block: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_paths: 10_000,
            n_steps: 1000,
            seed: 0,
            scenario: Scenario::RegulatedM1,
            fees: FeeSource::default(),
            record_paths: 10,
            block: 64,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_paths == 0 {
            return Err(invalid("n_paths must be at least 1"));
        }
        if self.n_steps == 0 || self.block == 0 {
            return Err(invalid("n_steps and block must be positive"));
        }
        if let FeeSource::Constant { lit, dark } = self.fees {
            let cap = crate::model::FEE_CAP;
            if !(0.0..=cap).contains(&lit) || !(0.0..=cap).contains(&dark) {
                return Err(invalid(format!("constant fees must lie in [0, {cap}]")));
            }
        }
        Ok(())
    }
}

/// `paths.csv`: one row per path, dark volumes as `dark_1..dark_M`.
pub fn write_paths_csv(path: &Path, metrics: &[PathMetrics]) -> Result<()> {
    let m = metrics.first().map_or(0, |x| x.dark_volume.len());
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = [
        "path",
        "impact",
        "terminal_q",
        "terminal_s",
        "terminal_x",
        "lit_sold",
        "dark_total",
        "xi",
        "exchange_pnl",
        "running_penalty",
        "clamp_events",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend((1..=m).map(|i| format!("dark_{i}")));
    w.write_record(&header)?;
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
    for p in metrics {
        let mut rec = vec![
            p.path.to_string(),
            p.impact.to_string(),
            p.terminal.q.to_string(),
            p.terminal.s.to_string(),
            p.terminal.x.to_string(),
            p.lit_sold.to_string(),
            p.total_dark().to_string(),
            opt(p.xi),
            opt(p.exchange_pnl),
            p.running_penalty.to_string(),
            p.clamp_events.to_string(),
        ];
        rec.extend(p.dark_volume.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Scalar metrics summarized in `summary.csv` and histogrammed.
pub fn metric_columns(metrics: &[PathMetrics]) -> Vec<(String, Vec<f64>)> {
    let mut cols = vec![
        ("impact".to_string(), metrics.iter().map(|m| m.impact).collect::<Vec<_>>()),
        ("terminal_q".to_string(), metrics.iter().map(|m| m.terminal.q).collect()),
        ("dark_total".to_string(), metrics.iter().map(|m| m.total_dark()).collect()),
    ];
    let m = metrics.first().map_or(0, |x| x.dark_volume.len());
    for i in 0..m {
        cols.push((format!("dark_{}", i + 1), metrics.iter().map(|x| x.dark_volume[i]).collect()));
    }
    if metrics.iter().all(|x| x.xi.is_some()) {
        cols.push(("xi".to_string(), metrics.iter().filter_map(|x| x.xi).collect()));
    }
    if metrics.iter().all(|x| x.exchange_pnl.is_some()) {
        cols.push(("exchange_pnl".to_string(), metrics.iter().filter_map(|x| x.exchange_pnl).collect()));
    }
    cols
}

/// `summary.csv`: one row per metric.
pub fn write_summary_csv(path: &Path, metrics: &[PathMetrics]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["metric", "n", "mean", "std", "min", "q1", "median", "q3", "max", "mode"])?;
    for (name, v) in metric_columns(metrics) {
        let s = summarize(&v)?;
        w.write_record([
            name,
            s.n.to_string(),
            s.mean.to_string(),
            s.std.to_string(),
            s.min.to_string(),
            s.q1.to_string(),
            s.median.to_string(),
            s.q3.to_string(),
            s.max.to_string(),
            s.mode.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `histograms.csv`: `metric, bin_left, bin_right, count` with 64 bins per metric.
pub fn write_histograms_csv(path: &Path, metrics: &[PathMetrics]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["metric", "bin_left", "bin_right", "count"])?;
    for (name, v) in metric_columns(metrics) {
        let h = Histogram::new(&v, HISTOGRAM_BINS)?;
        for k in 0..h.count.len() {
            w.write_record([name.clone(), h.left[k].to_string(), h.right[k].to_string(), h.count[k].to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `trajectories.csv`: recorded paths step by step.
pub fn write_trajectories_csv(path: &Path, metrics: &[PathMetrics]) -> Result<()> {
    let m = metrics.first().map_or(0, |x| x.dark_volume.len());
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = ["path", "t", "q", "s", "nu", "c_l", "z"].iter().map(|s| s.to_string()).collect();
    for i in 1..=m {
        header.extend([format!("ell_{i}"), format!("c_d_{i}"), format!("u_{i}")]);
    }
    w.write_record(&header)?;
    for pm in metrics {
        for pt in pm.trajectory.iter().flatten() {
            let mut rec = vec![
                pm.path.to_string(),
                pt.t.to_string(),
                pt.q.to_string(),
                pt.s.to_string(),
                pt.nu.to_string(),
                pt.fees.lit.to_string(),
                pt.z.to_string(),
            ];
            for i in 0..m {
                rec.extend([pt.ell[i].to_string(), pt.fees.dark[i].to_string(), pt.u[i].to_string()]);
            }
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes the four CSVs of a simulation into `dir`.
pub fn write_all(dir: &Path, metrics: &[PathMetrics]) -> Result<()> {
    write_paths_csv(&dir.join("paths.csv"), metrics)?;
    write_summary_csv(&dir.join("summary.csv"), metrics)?;
    write_histograms_csv(&dir.join("histograms.csv"), metrics)?;
    write_trajectories_csv(&dir.join("trajectories.csv"), metrics)?;
    Ok(())
}
