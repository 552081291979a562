//! Subcommand orchestration, CSV artifacts and run manifests.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::ExperimentSpec;
use crate::error::{Error, Result};
use crate::fees::{extract_fee_schedule, train, ActorSchedule, Checkpoint};
use crate::mfg::{mfg_fixed_point, MfgSolution};
use crate::model::Fees;
use crate::sim::{self, FeeSource, Policy, Scenario, SimConfig};
use crate::trader::{
    almgren_chriss_benchmark, hamiltonian, optimal_dark_alloc_linear, optimal_lit_rate_linear, y0_from_reservation,
    Reservation,
};

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    SolveTrader,
    SolveMfg,
    TrainFees,
    Simulate,
    BenchmarkAc,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::SolveTrader => "solve-trader",
            Command::SolveMfg => "solve-mfg",
            Command::TrainFees => "train-fees",
            Command::Simulate => "simulate",
            Command::BenchmarkAc => "benchmark-ac",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    pub name: String,
    pub sha256: String,
}

/// Everything needed to reproduce a run: the command and the resolved
/// configuration, which is also written next to it as `config.toml`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub manifest_version: u32,
    pub command: String,
    pub package: String,
    pub package_version: String,
    pub seed: u64,
    pub scenario: String,
    pub config_sha256: String,
    pub config: String,
    pub outputs: Vec<OutputFile>,
    pub notes: Vec<(String, f64)>,
}

/// Outcome of a subcommand.
#[derive(Clone, Debug, PartialEq)]
pub struct RunReport {
    pub out: PathBuf,
    pub manifest: Manifest,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn write_rows<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = f64>,
{
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r.into_iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

fn policy_parts(spec: &ExperimentSpec, m: usize) -> Result<(Option<ActorSchedule>, Fees)> {
    match &spec.sim.fees {
        FeeSource::Zero => Ok((None, Fees::zero(m))),
        FeeSource::Constant { lit, dark } => Ok((None, Fees::constant(*lit, *dark, m))),
        FeeSource::Trained { checkpoint } => {
            let ck = Checkpoint::load(Path::new(checkpoint))?;
            if ck.actor.n_pools != m {
                return Err(Error::Config(format!(
                    "checkpoint {checkpoint} was trained for {} pools, the scenario has {m}",
                    ck.actor.n_pools
                )));
            }
            Ok((Some(extract_fee_schedule(&ck.actor)), Fees::zero(m)))
        }
    }
}

fn reservation(spec: &ExperimentSpec) -> Reservation {
    almgren_chriss_benchmark(&spec.market, spec.benchmark.n_steps, spec.benchmark.n_paths, spec.seed).1
}

fn regulated_pools(spec: &ExperimentSpec) -> Result<Vec<crate::model::DarkPoolSpec>> {
    if spec.scenario == Scenario::Competitive {
        return Err(Error::Config("this command needs a regulated scenario (regulated-M1 or regulated-M2)".into()));
    }
    spec.scenario.pools(&spec.pools)
}

fn solve_trader(spec: &ExperimentSpec, dir: &Path, notes: &mut Vec<(String, f64)>) -> Result<Vec<String>> {
    let pools = regulated_pools(spec)?;
    let m = pools.len();
    let (actor, fees) = policy_parts(spec, m)?;
    if actor.is_some() {
        return Err(Error::Config("solve-trader tabulates constant fees; use simulate for a trained schedule".into()));
    }
    let p = &spec.market;
    let n = 100;
    let mut rows = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let q = p.q0 * k as f64 / n as f64;
        let z = -q * p.sigma;
        let (h, c) = hamiltonian(q, z, &vec![0.0; m], &fees, p, &pools)?;
        let lin = optimal_dark_alloc_linear(q, &pools, p.k_c, &fees.dark)?;
        let nu_lin = optimal_lit_rate_linear(q, z, fees.lit, p, &pools, &fees.dark, &lin.ell)?;
        let mut r = vec![q, h, c.nu];
        r.extend(&c.ell);
        r.push(nu_lin);
        r.extend(&lin.ell);
        rows.push(r);
    }
    notes.push(("nu_at_q0".into(), rows[n][2]));
    let mut header: Vec<String> = ["q", "hamiltonian", "nu_exp"].iter().map(|s| s.to_string()).collect();
    header.extend((1..=m).map(|i| format!("ell_exp_{i}")));
    header.push("nu_linear".into());
    header.extend((1..=m).map(|i| format!("ell_linear_{i}")));
    let h: Vec<&str> = header.iter().map(String::as_str).collect();
    write_rows(&dir.join("trader_controls.csv"), &h, rows)?;
    Ok(vec!["trader_controls.csv".into()])
}

fn write_mfg(sol: &MfgSolution, dir: &Path) -> Result<Vec<String>> {
    let mi = &sol.minor;
    write_rows(
        &dir.join("mfg_paths.csv"),
        &["t", "mu", "E", "h0", "h1", "h2", "phi", "psi", "q0bar", "nu0"],
        (0..mi.t.len()).map(|i| {
            [mi.t[i], mi.mu[i], mi.e[i], mi.h0[i], mi.h1[i], mi.h2[i], mi.phi[i], mi.psi[i], sol.q0bar[i], sol.nu0_path[i]]
        }),
    )?;
    write_rows(
        &dir.join("mfg_residuals.csv"),
        &["iteration", "residual"],
        sol.residuals.iter().enumerate().map(|(k, r)| [(k + 1) as f64, *r]),
    )?;
    let mut dens = Vec::new();
    for snap in &mi.m {
        for (q, d) in snap.cell_centers().into_iter().zip(snap.density()) {
            dens.push([snap.t, q, d]);
        }
    }
    write_rows(&dir.join("mfg_density.csv"), &["t", "q", "density"], dens)?;
    let mj = &sol.major;
    let npool = mj.ell0.shape()[2];
    let stride = (mj.t.len() / 100).max(1);
    let mut rows = Vec::new();
    for i in (0..mj.t.len()).step_by(stride) {
        for j in 0..mj.q.len() {
            let mut r = vec![mj.t[i], mj.q[j], mj.h0_grid[[i, j]], mj.nu0[[i, j]]];
            r.extend((0..npool).map(|k| mj.ell0[[i, j, k]]));
            rows.push(r);
        }
    }
    let mut header: Vec<String> = ["t", "q", "value", "nu0"].iter().map(|s| s.to_string()).collect();
    header.extend((1..=npool).map(|k| format!("ell0_{k}")));
    let h: Vec<&str> = header.iter().map(String::as_str).collect();
    write_rows(&dir.join("major_feedback.csv"), &h, rows)?;
    Ok(["mfg_paths.csv", "mfg_residuals.csv", "mfg_density.csv", "major_feedback.csv"].map(String::from).to_vec())
}

fn solve_mfg(spec: &ExperimentSpec, dir: &Path, notes: &mut Vec<(String, f64)>) -> Result<Vec<String>> {
    let sol = mfg_fixed_point(&spec.mfg, &spec.competitive, &spec.competitive_pools)?;
    notes.push(("iterations".into(), sol.iterations() as f64));
    notes.push(("final_residual".into(), *sol.residuals.last().unwrap_or(&0.0)));
    write_mfg(&sol, dir)
}

fn fee_curve(spec: &ExperimentSpec, actor: &ActorSchedule, pools: &[crate::model::DarkPoolSpec], dir: &Path) -> Result<()> {
    let n = spec.sim.n_paths.min(200);
    let cfg = SimConfig { n_paths: n, record_paths: n, ..spec.sim.clone() };
    let out = sim::simulate_regulated(&cfg, &spec.market, pools, &Policy::Actor(actor), 0.0)?;
    let m = pools.len();
    let steps = cfg.n_steps;
    let mut rows = Vec::with_capacity(steps);
    for k in 0..steps {
        let pts: Vec<&sim::TrajectoryPoint> = out.iter().filter_map(|p| p.trajectory.as_ref().map(|t| &t[k])).collect();
        let avg = |f: &dyn Fn(&sim::TrajectoryPoint) -> f64| pts.iter().map(|p| f(p)).sum::<f64>() / pts.len() as f64;
        let mut r = vec![pts[0].t, avg(&|p| p.q), avg(&|p| p.nu), avg(&|p| p.fees.lit), avg(&|p| p.z)];
        for i in 0..m {
            r.push(avg(&|p| p.fees.dark[i]));
            r.push(avg(&|p| p.u[i]));
        }
        rows.push(r);
    }
    let mut header: Vec<String> = ["t", "q", "nu", "c_l", "z"].iter().map(|s| s.to_string()).collect();
    for i in 1..=m {
        header.extend([format!("c_d_{i}"), format!("u_{i}")]);
    }
    let h: Vec<&str> = header.iter().map(String::as_str).collect();
    write_rows(&dir.join("fee_curve.csv"), &h, rows)
}

fn train_fees(spec: &ExperimentSpec, dir: &Path, notes: &mut Vec<(String, f64)>) -> Result<Vec<String>> {
    let pools = regulated_pools(spec)?;
    let trained = train(&spec.train, &spec.market, &pools)?;
    trained.log.write_csv(&dir.join("train_log.csv"))?;
    Checkpoint::new(&spec.train, &trained).save(&dir.join("checkpoint.json"))?;
    let h = trained.log.holdout();
    if let (Some(first), Some(last)) = (h.first(), h.last()) {
        notes.push(("holdout_loss_first".into(), first.1));
        notes.push(("holdout_loss_last".into(), last.1));
    }
    fee_curve(spec, &extract_fee_schedule(&trained.actor), &pools, dir)?;
    Ok(["train_log.csv", "checkpoint.json", "fee_curve.csv"].map(String::from).to_vec())
}

fn simulate(spec: &ExperimentSpec, dir: &Path, notes: &mut Vec<(String, f64)>) -> Result<Vec<String>> {
    let metrics = if spec.scenario == Scenario::Competitive {
        let sol = mfg_fixed_point(&spec.mfg, &spec.competitive, &spec.competitive_pools)?;
        notes.push(("mfg_iterations".into(), sol.iterations() as f64));
        sim::simulate_competitive(&spec.sim, &sol, &spec.competitive, spec.market.sigma, spec.market.s0, &spec.competitive_pools)?
    } else {
        let pools = regulated_pools(spec)?;
        let (actor, fees) = policy_parts(spec, pools.len())?;
        let res = reservation(spec);
        let y0 = y0_from_reservation(res.r0, &spec.market);
        notes.push(("r0".into(), res.r0));
        notes.push(("y0".into(), y0));
        let policy = match &actor {
            Some(a) => Policy::Actor(a),
            None => Policy::Hedged(fees),
        };
        sim::simulate_regulated(&spec.sim, &spec.market, &pools, &policy, y0)?
    };
    let impact = sim::summarize(&metrics.iter().map(|m| m.impact).collect::<Vec<_>>())?;
    notes.push(("impact_mean".into(), impact.mean));
    notes.push(("impact_mode".into(), impact.mode));
    notes.push(("impact_std".into(), impact.std));
    notes.push(("clamp_events".into(), metrics.iter().map(|m| m.clamp_events as f64).sum()));
    sim::write_all(dir, &metrics)?;
    Ok(["paths.csv", "summary.csv", "histograms.csv", "trajectories.csv"].map(String::from).to_vec())
}

fn benchmark_ac(spec: &ExperimentSpec, dir: &Path, notes: &mut Vec<(String, f64)>) -> Result<Vec<String>> {
    let (sched, res) = almgren_chriss_benchmark(&spec.market, spec.benchmark.n_steps, spec.benchmark.n_paths, spec.seed);
    write_rows(
        &dir.join("ac_schedule.csv"),
        &["t", "q", "nu"],
        (0..sched.t.len()).map(|k| [sched.t[k], sched.q[k], sched.nu.get(k).copied().unwrap_or(0.0)]),
    )?;
    let fields = [
        ("n_paths", res.n_paths as f64),
        ("wealth_mean", res.wealth_mean),
        ("wealth_var", res.wealth_var),
        ("certainty_equivalent", res.certainty_equivalent),
        ("certainty_equivalent_se", res.certainty_equivalent_se),
        ("r0", res.r0),
        ("r0_sample_mean", res.r0_sample_mean),
        ("r0_sample_se", res.r0_sample_se),
        ("y0", y0_from_reservation(res.r0, &spec.market)),
    ];
    let mut w = csv::Writer::from_path(dir.join("reservation.csv"))?;
    w.write_record(["quantity", "value"])?;
    for (k, v) in fields {
        w.write_record([k.to_string(), v.to_string()])?;
    }
    w.flush()?;
    notes.push(("r0".into(), res.r0));
    Ok(["ac_schedule.csv", "reservation.csv"].map(String::from).to_vec())
}

/// Runs one subcommand into `spec.out` and writes `config.toml` and `manifest.json`.
pub fn run(cmd: Command, spec: &ExperimentSpec) -> Result<RunReport> {
    let dir = spec.out.clone();
    fs::create_dir_all(&dir)?;
    let config = spec.to_toml()?;
    fs::write(dir.join("config.toml"), &config)?;
    let mut notes = Vec::new();
    let files = match cmd {
        Command::SolveTrader => solve_trader(spec, &dir, &mut notes)?,
        Command::SolveMfg => solve_mfg(spec, &dir, &mut notes)?,
        Command::TrainFees => train_fees(spec, &dir, &mut notes)?,
        Command::Simulate => simulate(spec, &dir, &mut notes)?,
        Command::BenchmarkAc => benchmark_ac(spec, &dir, &mut notes)?,
    };
    let outputs = files
        .into_iter()
        .map(|name| {
            let bytes = fs::read(dir.join(&name))?;
            Ok(OutputFile { sha256: sha256_hex(&bytes), name })
        })
        .collect::<Result<Vec<_>>>()?;
    let manifest = Manifest {
        manifest_version: MANIFEST_VERSION,
        command: cmd.name().into(),
        package: env!("CARGO_PKG_NAME").into(),
        package_version: env!("CARGO_PKG_VERSION").into(),
        seed: spec.seed,
        scenario: spec.scenario.name().into(),
        config_sha256: sha256_hex(config.as_bytes()),
        config,
        outputs,
        notes,
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Config(e.to_string()))?;
    fs::write(dir.join("manifest.json"), text)?;
    Ok(RunReport { out: dir, manifest })
}
