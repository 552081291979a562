//! Acceptance criteria. Prints one `PASS`/`FAIL` line per criterion and exits
//! non-zero when a hard criterion fails. Pass criterion ids (`ac3`, `ac8`, ...)
//! as arguments to run a subset.

use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use darklit::fees::{
    evaluate_operator, extract_fee_schedule, sample_states, terminal_relative_error, train, ActorOutput, OperatorConfig,
    OperatorForm, TrainConfig, Trained,
};
use darklit::io::{run, Command, ExperimentFile};
use darklit::mfg::minor::riccati_h2;
use darklit::mfg::{mfg_fixed_point, InitialGuess, MfgConfig, MfgParams, MfgSolution};
use darklit::model::{
    exp_min_exponential_moment, exp_min_linear_moment, sample_dark_fill, table1_pools, table2_pools, DarkPoolSpec, Fees,
    FillLaw, LiquidityParam, MarketParams, FEE_CAP,
};
use darklit::rng::{stream, Purpose};
use darklit::sim::{simulate_competitive, simulate_regulated, summarize, PathMetrics, Policy, SimConfig};
use darklit::trader::{
    almgren_chriss_benchmark, hamiltonian, optimal_dark_alloc_exp, optimal_dark_alloc_linear, optimal_lit_rate_linear,
    y0_from_reservation,
};

#[derive(Clone, Copy, PartialEq)]
enum Kind {
    Hard,
    Soft,
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Results shared between criteria.
#[derive(Default)]
struct Shared {
    mfg: Option<MfgSolution>,
    conservation: Vec<(String, f64)>,
}

fn record_conservation(sh: &mut Shared, label: &str, paths: &[PathMetrics], q0: f64) {
    let worst = paths.iter().map(|m| m.conservation_residual(q0).abs()).fold(0.0, f64::max);
    sh.conservation.push((label.to_string(), worst));
}

fn m1_pools() -> Vec<DarkPoolSpec> {
    table1_pools(LiquidityParam::default())[..1].to_vec()
}

fn regulated(n_paths: usize, n_steps: usize, seed: u64, pools: &[DarkPoolSpec], p: &MarketParams, y0: f64) -> Vec<PathMetrics> {
    let cfg = SimConfig { n_paths, n_steps, seed, record_paths: 0, ..Default::default() };
    let fees = Fees::constant(FEE_CAP, FEE_CAP, pools.len());
    simulate_regulated(&cfg, p, pools, &Policy::Hedged(fees), y0).expect("regulated simulation")
}

fn ac1(_: &mut Shared) -> Outcome {
    let p = MarketParams::table1();
    let closed = optimal_lit_rate_linear(1.0, 0.0, 0.01, &p, &[], &[], &[]).unwrap();
    let (_, ctrl) = hamiltonian(1.0, -p.sigma, &[], &Fees::constant(0.01, 0.0, 0), &p, &[]).unwrap();
    let err = (closed + 1.75).abs().max((ctrl.nu + 1.75).abs());
    outcome(err <= 4.0 * f64::EPSILON, format!("nu_hat = {closed} (closed form), {} (hedged Hamiltonian)", ctrl.nu))
}

fn ac2(_: &mut Shared) -> Outcome {
    let mp = MfgParams::table2();
    let n = 1000;
    let dt = mp.horizon / n as f64;
    let f = |h: f64| -h * h / mp.eta;
    // Backward from h2(T) = -alpha.
    let mut h = -mp.alpha;
    let mut worst: f64 = 0.0;
    for i in (0..n).rev() {
        let k1 = f(h);
        let k2 = f(h - 0.5 * dt * k1);
        let k3 = f(h - 0.5 * dt * k2);
        let k4 = f(h - dt * k3);
        h -= dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        let t = i as f64 * dt;
        worst = worst.max((h - riccati_h2(t, mp.alpha, mp.eta, mp.horizon)).abs());
    }
    outcome(worst < 1e-8, format!("sup |h2 - RK4| = {worst:.3e} on {n} steps"))
}

fn ac3(sh: &mut Shared) -> Outcome {
    let mp = MfgParams::table2();
    let pools = table2_pools(LiquidityParam::default());
    let cfg = MfgConfig::default();
    let a = match mfg_fixed_point(&cfg, &mp, &pools) {
        Ok(s) => s,
        Err(e) => return outcome(false, format!("from the minor response: {e}")),
    };
    let other = MfgConfig { initial: InitialGuess::Constant(-1.0), ..cfg.clone() };
    let b = match mfg_fixed_point(&other, &mp, &pools) {
        Ok(s) => s,
        Err(e) => return outcome(false, format!("from mu = -1: {e}")),
    };
    let dt = a.major.t[1] - a.major.t[0];
    let gap = a.minor.mu.iter().zip(&b.minor.mu).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let mass = a.minor.m.iter().map(|s| (s.total_mass() - 1.0).abs()).fold(0.0, f64::max);
    let n = a.minor.e.len() - 1;
    let robin = (a.minor.mu[n] + mp.alpha / mp.eta * a.minor.e[n]).abs();
    // Forward differences against midpoint rates, a stencil independent of the solver's.
    let (e, mu) = (&a.minor.e, &a.minor.mu);
    let mu_gap = (0..n).map(|i| ((e[i + 1] - e[i]) / dt - 0.5 * (mu[i] + mu[i + 1])).abs()).fold(0.0, f64::max);
    let last = |s: &MfgSolution| *s.residuals.last().unwrap();
    let pass = last(&a) < 1e-6
        && a.iterations() <= 200
        && last(&b) < 1e-6
        && b.iterations() <= 200
        && gap < 1e-5
        && mass < 1e-6
        && robin < 10.0 * dt
        && mu_gap < 10.0 * dt;
    let detail = format!(
        "iterations {}/{} residual {:.2e}/{:.2e}; |mu_a - mu_b| {gap:.2e}; mass {mass:.2e}; Robin {robin:.2e}; |E' - mu| {mu_gap:.2e} (10 dt = {:.0e})",
        a.iterations(),
        b.iterations(),
        last(&a),
        last(&b),
        10.0 * dt
    );
    sh.mfg = Some(a);
    outcome(pass, detail)
}

/// Grid search of the split of `q` over two pools, `ell_1` on a grid of step
/// `1e-4`. Returns the interval of grid points whose objective ties the grid
/// maximum to floating precision: deep in the tail of the fill laws the
/// objective is flat far below machine epsilon and the argmax is not resolved.
fn grid_optima(q: f64, objective: impl Fn(f64, f64) -> f64) -> (f64, f64) {
    let n = (q / 1e-4).floor() as usize;
    let vals: Vec<(f64, f64)> = (0..=n).map(|k| k as f64 * 1e-4).map(|l1| (l1, objective(l1, q - l1))).collect();
    let best = vals.iter().map(|v| v.1).fold(f64::NEG_INFINITY, f64::max);
    let tie = 64.0 * f64::EPSILON * best.abs();
    let ties: Vec<f64> = vals.iter().filter(|v| v.1 >= best - tie).map(|v| v.0).collect();
    (ties[0], *ties.last().unwrap())
}

fn distance_to(x: f64, (lo, hi): (f64, f64)) -> f64 {
    (lo - x).max(x - hi).max(0.0)
}

fn ac4(_: &mut Shared) -> Outcome {
    let p = MarketParams::table1();
    let pools = table1_pools(LiquidityParam::default());
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    let mut budget: f64 = 0.0;
    let mut resolved = 0;
    let n = 20;
    for _ in 0..n {
        let q = rng.random_range(0.05..1.0);
        let fees = [rng.random_range(0.0..FEE_CAP), rng.random_range(0.0..FEE_CAP)];
        let objective = |util: usize| {
            let pools = &pools;
            move |a: f64, b: f64| -> f64 {
                [a, b]
                    .iter()
                    .zip(pools)
                    .zip(&fees)
                    .map(|((l, pl), c)| match util {
                        0 => pl.theta * exp_min_linear_moment(pl, p.k_c, *l, *c, q).unwrap(),
                        _ => -pl.theta * exp_min_exponential_moment(pl, p.k_c, *l, *c, q, p.rho, p.alpha).unwrap(),
                    })
                    .sum()
            }
        };
        let lin = optimal_dark_alloc_linear(q, &pools, p.k_c, &fees).unwrap().ell;
        let exp = optimal_dark_alloc_exp(q, &pools, p.k_c, &fees, p.rho, p.alpha).unwrap().ell;
        for (ell, util) in [(lin, 0), (exp, 1)] {
            let set = grid_optima(q, objective(util));
            if set.1 - set.0 < 1e-3 {
                resolved += 1;
            }
            worst = worst.max(distance_to(ell[0], set));
            budget = budget.max((ell[0] + ell[1] - q).abs());
        }
    }
    outcome(
        worst < 1e-3 && budget < 1e-9,
        format!(
            "{n} instances x 2 utilities, max distance to the grid optima {worst:.2e} ({resolved} of {} with an argmax narrower than 1e-3), budget error {budget:.1e}",
            2 * n
        ),
    )
}

fn ac5(_: &mut Shared) -> Outcome {
    let p = MarketParams::table1();
    let pool = table1_pools(LiquidityParam::default()).remove(0);
    let n = 1_000_000;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst_z: f64 = 0.0;
    let mut points = 0;
    for q in [0.2, 0.6, 1.0] {
        for frac in [0.1, 0.5, 1.0] {
            for c_d in [0.0, 0.005, 0.01] {
                let ell = frac * q;
                let c = p.rho * p.alpha;
                let (mut s1, mut s1s, mut s2, mut s2s) = (0.0, 0.0, 0.0, 0.0);
                for _ in 0..n {
                    let m = sample_dark_fill(&pool, p.k_c, ell, c_d, &mut rng);
                    let a = m * (2.0 * q - m);
                    let b = (-c * a).exp();
                    s1 += a;
                    s1s += a * a;
                    s2 += b;
                    s2s += b * b;
                }
                let nf = n as f64;
                let z = |s: f64, ss: f64, want: f64| {
                    let mean = s / nf;
                    let se = ((ss / nf - mean * mean).max(0.0) / (nf - 1.0)).sqrt();
                    if se == 0.0 {
                        if (mean - want).abs() < 1e-12 { 0.0 } else { f64::INFINITY }
                    } else {
                        (mean - want).abs() / se
                    }
                };
                let lin = exp_min_linear_moment(&pool, p.k_c, ell, c_d, q).unwrap();
                let ex = exp_min_exponential_moment(&pool, p.k_c, ell, c_d, q, p.rho, p.alpha).unwrap();
                worst_z = worst_z.max(z(s1, s1s, lin)).max(z(s2, s2s, ex));
                points += 1;
            }
        }
    }
    outcome(worst_z < 3.0, format!("{points} grid points x 2 moments, 10^6 draws each, max |z| = {worst_z:.2}"))
}

fn ac6(sh: &mut Shared) -> Outcome {
    let p = MarketParams::table1();
    let pools = m1_pools();
    let (_, res) = almgren_chriss_benchmark(&p, 1000, 10_000, 6);
    let y0 = y0_from_reservation(res.r0, &p);
    let ybar0 = y0 + p.x0 + p.q0 * (p.s0 - p.alpha * p.q0);
    // The at-most-one-fill-per-step scheme carries an O(theta^2 dt) bias in
    // the exponential martingale; dt = 1e-4 keeps it below the sampling error.
    let paths = regulated(10_000, 10_000, 6, &pools, &p, y0);
    record_conservation(sh, "ac6 regulated-M1", &paths, p.q0);
    let w: Vec<f64> = paths
        .iter()
        .map(|m| (-p.rho * (m.xi.unwrap() + m.terminal_wealth(&p) - ybar0)).exp())
        .collect();
    let s = summarize(&w).unwrap();
    let se = s.std / (s.n as f64).sqrt();
    let z = (s.mean - 1.0) / se;
    outcome(
        z.abs() < 3.0,
        format!(
            "E[-exp(-rho(xi + W))] / R0 = {:.5} +- {:.5} (z = {z:.2}), R0 = {:.4e}, y0 = {y0:.6}",
            s.mean, se, res.r0
        ),
    )
}

fn ac7(sh: &mut Shared) -> Outcome {
    if sh.conservation.is_empty() {
        let p = MarketParams::table1();
        for (label, pools) in [("regulated-M1", m1_pools()), ("regulated-M2", table1_pools(LiquidityParam::default()))] {
            let paths = regulated(2000, 1000, 7, &pools, &p, 0.0);
            record_conservation(sh, label, &paths, p.q0);
        }
    }
    let worst = sh.conservation.iter().map(|(_, r)| *r).fold(0.0, f64::max);
    let runs: Vec<String> = sh.conservation.iter().map(|(l, r)| format!("{l} {r:.1e}")).collect();
    outcome(worst < 1e-10, format!("max |Q0 - q_T - lit - dark| = {worst:.2e} ({})", runs.join(", ")))
}

fn polynomial_operator_gap(form: OperatorForm) -> f64 {
    let p = MarketParams::table1();
    let pools = table1_pools(LiquidityParam::default());
    let critic = |s: &[f64]| s[4] + 0.3 * s[3] - 0.2 * s[1] + s[2].powi(3) / 3.0 + 0.5 * s[0] * s[2] * s[2];
    let zero = |_: &[f64]| 0.0;
    let cfg = OperatorConfig { form, ..Default::default() };
    let controls = ActorOutput { c_l: 0.008, c_d: vec![0.004, 0.007], z: -0.01, u: vec![0.002, 0.001] };
    let mut worst: f64 = 0.0;
    for state in [[0.3, 0.8, 1.1, 0.4, 0.02], [0.7, 0.25, 0.9, 1.2, 0.01]] {
        let got = evaluate_operator(&state, &controls, &critic, &p, &pools, &cfg).unwrap();
        let base = evaluate_operator(&state, &controls, &zero, &p, &pools, &cfg).unwrap();
        let (t, s) = (state[0], state[2]);
        let nu = got.nu;
        let lam = p.lambda_rate;
        let (d_iota, d_x, d_q) = (1.0, 0.3, -0.2);
        let d_s = s * s + t * s;
        let d_ss = 2.0 * s + t;
        let drift = (-controls.c_l * (nu + lam) + p.kappa * (p.gamma * nu + p.epsilon * lam)) * d_iota
            + nu * d_q
            + (p.gamma * nu + p.epsilon * lam) * d_s
            - ((s + p.eta * nu) * nu - controls.c_l * nu) * d_x
            + 0.5 * p.sigma * p.sigma * d_ss;
        let intensity = (p.k_theta * nu).exp();
        let jump: f64 = pools
            .iter()
            .zip(&controls.c_d)
            .zip(&got.ell)
            .map(|((pl, c), l)| pl.theta * intensity * (c * d_iota + s * d_x - d_q) * FillLaw::new(pl, p.k_c, *c).mean_fill(*l))
            .sum();
        let want = drift + base.bracket + jump;
        worst = worst.max((got.value - want).abs());
    }
    worst
}

fn ac8(sh: &mut Shared) -> Outcome {
    let p = MarketParams::table1();
    let pools = m1_pools();
    let cfg = TrainConfig { epochs: 2000, lr_final: Some(1e-4), seed: 0, ..Default::default() };
    let t0 = Instant::now();
    let trained: Trained = match train(&cfg, &p, &pools) {
        Ok(t) => t,
        Err(e) => return outcome(false, format!("training failed: {e}")),
    };
    let secs = t0.elapsed().as_secs_f64();

    let x = sample_states(100_000, &cfg.bounds, cfg.dt, &mut stream(8, Purpose::Holdout, 0));
    let out = trained.actor.forward(x.view());
    let in_cap = |v: f64| (0.0..=FEE_CAP).contains(&v);
    let a_ok = out.iter().all(|o| in_cap(o.c_l) && o.c_d.iter().all(|c| in_cap(*c)) && o.u.iter().all(|u| *u >= 0.0));

    let h = trained.log.holdout();
    let (first, last) = (h.first().unwrap().1, h.last().unwrap().1);
    let b_ok = last <= 0.5 * first;

    let schedule = extract_fee_schedule(&trained.actor);
    let sim = SimConfig { n_paths: 200, record_paths: 200, seed: 8, ..Default::default() };
    let paths = simulate_regulated(&sim, &p, &pools, &Policy::Actor(&schedule), 0.0).expect("actor simulation");
    record_conservation(sh, "ac8 trained actor", &paths, p.q0);
    let pts: Vec<_> = paths.iter().flat_map(|m| m.trajectory.iter().flatten()).collect();
    let mean_lit = pts.iter().map(|pt| pt.fees.lit).sum::<f64>() / pts.len() as f64;
    let a_ok = a_ok && pts.iter().all(|pt| in_cap(pt.fees.lit) && pt.fees.dark.iter().all(|c| in_cap(*c)));
    let c_ok = mean_lit >= 0.009;

    let xs = sample_states(500, &cfg.bounds, cfg.dt, &mut stream(8, Purpose::Holdout, 1));
    let term = terminal_relative_error(xs.view(), &trained.critic, cfg.bounds.horizon);
    let d_ok = term < 0.1;

    let h2 = cfg.fd_step * cfg.fd_step;
    let gaps = [polynomial_operator_gap(OperatorForm::Printed), polynomial_operator_gap(OperatorForm::Derived)];
    let e_ok = gaps.iter().all(|g| *g < 10.0 * h2);

    let flag = |b: bool| if b { "ok" } else { "FAIL" };
    outcome(
        a_ok && b_ok && c_ok && d_ok && e_ok,
        format!(
            "(a) ranges {}; (b) holdout {first:.3e} -> {last:.3e} {}; (c) mean lit fee {mean_lit:.5} {}; (d) terminal rel. error {term:.3} {}; (e) polynomial critic gap {:.1e}/{:.1e} {}; {} epochs in {secs:.0} s",
            flag(a_ok),
            flag(b_ok),
            flag(c_ok),
            flag(d_ok),
            gaps[0],
            gaps[1],
            flag(e_ok),
            cfg.epochs
        ),
    )
}

fn ac9(sh: &mut Shared) -> Outcome {
    let p = MarketParams::table1();
    let seed = 7;
    let m1 = regulated(10_000, 1000, seed, &m1_pools(), &p, 0.0);
    let m2 = regulated(10_000, 1000, seed, &table1_pools(LiquidityParam::default()), &p, 0.0);
    record_conservation(sh, "ac9 regulated-M1", &m1, p.q0);
    record_conservation(sh, "ac9 regulated-M2", &m2, p.q0);
    let mp = MfgParams::table2();
    let comp_pools = table2_pools(LiquidityParam::default());
    let sol = match sh.mfg.take() {
        Some(s) => s,
        None => mfg_fixed_point(&MfgConfig::default(), &mp, &comp_pools).expect("equilibrium"),
    };
    let cfg = SimConfig { n_paths: 10_000, seed, record_paths: 0, ..Default::default() };
    let comp = simulate_competitive(&cfg, &sol, &mp, p.sigma, p.s0, &comp_pools).expect("competitive simulation");
    record_conservation(sh, "ac9 competitive", &comp, mp.q0);
    let impact = |v: &[PathMetrics]| summarize(&v.iter().map(|m| m.impact).collect::<Vec<_>>()).unwrap();
    let (s1, s2, sc) = (impact(&m1), impact(&m2), impact(&comp));
    let near = |x: f64, target: f64| (x - target).abs() <= 0.3 * target.abs();
    let mode_ok = near(s1.mode, -0.007);
    let centre_ok = near(sc.mean, -0.0074);
    let wider_ok = sc.std > s1.std;
    let shift = (s2.mean - s1.mean) / s1.mean.abs();
    let shift_ok = near(shift, 0.07);
    let flag = |b: bool| if b { "ok" } else { "off" };
    outcome(
        mode_ok && centre_ok && wider_ok && shift_ok,
        format!(
            "seed {seed}: M1 mode {:.5} {}; competitive mean {:.5} {}, std {:.3e} vs M1 {:.3e} {}; M2 mean shift {:+.1}% {}",
            s1.mode,
            flag(mode_ok),
            sc.mean,
            flag(centre_ok),
            sc.std,
            s1.std,
            flag(wider_ok),
            100.0 * shift,
            flag(shift_ok)
        ),
    )
}

fn csv_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv" || x == "json") && !p.ends_with("manifest.json"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn ac10(_: &mut Shared) -> Outcome {
    let root = tempfile::tempdir().unwrap();
    let text = r#"
preset = "table1"
seed = 11

[sim]
n_paths = 300

[benchmark]
n_paths = 500

[train]
epochs = 6
batch_size = 32
holdout_size = 32
holdout_every = 2

[mfg]
n_time = 400
n_q = 120
"#;
    let jobs = [
        (Command::Simulate, "regulated-M2"),
        (Command::Simulate, "competitive"),
        (Command::TrainFees, "regulated-M1"),
        (Command::SolveMfg, "competitive"),
        (Command::BenchmarkAc, "regulated-M1"),
    ];
    let mut compared = 0;
    let mut mismatched = Vec::new();
    for (j, (cmd, scenario)) in jobs.iter().enumerate() {
        let mut outs = Vec::new();
        for rep in 0..2 {
            let mut file = ExperimentFile::parse(text).unwrap();
            file.scenario = Some(scenario.parse().unwrap());
            file.out = Some(root.path().join(format!("{j}-{rep}")));
            let spec = file.resolve().unwrap();
            match run(*cmd, &spec) {
                Ok(r) => outs.push(csv_bytes(&r.out)),
                Err(e) => return outcome(false, format!("{} {scenario}: {e}", cmd.name())),
            }
        }
        if outs[0].is_empty() {
            mismatched.push(format!("{} wrote no CSV", cmd.name()));
        }
        for (a, b) in outs[0].iter().zip(&outs[1]) {
            compared += 1;
            if a != b {
                mismatched.push(format!("{} {}", cmd.name(), a.0));
            }
        }
        if outs[0].len() != outs[1].len() {
            mismatched.push(format!("{} file sets differ", cmd.name()));
        }
    }
    let detail = if mismatched.is_empty() {
        format!("{compared} output files byte-identical across two runs")
    } else {
        format!("differences: {}", mismatched.join(", "))
    };
    outcome(mismatched.is_empty(), detail)
}

type Criterion = (&'static str, Kind, fn(&mut Shared) -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("ac1", Kind::Hard, ac1),
        ("ac2", Kind::Hard, ac2),
        ("ac3", Kind::Hard, ac3),
        ("ac4", Kind::Hard, ac4),
        ("ac5", Kind::Hard, ac5),
        ("ac6", Kind::Hard, ac6),
        ("ac8", Kind::Hard, ac8),
        ("ac9", Kind::Soft, ac9),
        ("ac7", Kind::Hard, ac7),
        ("ac10", Kind::Hard, ac10),
    ];
    let wanted: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut shared = Shared::default();
    let mut hard_failures = 0;
    let mut lines = Vec::new();
    for (id, kind, f) in criteria {
        if !wanted.is_empty() && !wanted.iter().any(|w| w == id) {
            continue;
        }
        let t = Instant::now();
        let o = f(&mut shared);
        let tag = match (o.pass, kind) {
            (true, _) => "PASS",
            (false, Kind::Hard) => "FAIL",
            (false, Kind::Soft) => "FAIL (soft target)",
        };
        if !o.pass && kind == Kind::Hard {
            hard_failures += 1;
        }
        let line = format!("{} {tag} [{:.1} s] {}", id.to_uppercase(), t.elapsed().as_secs_f64(), o.detail);
        println!("{line}");
        lines.push(line);
    }
    println!();
    lines.sort_by_key(|l| l[2..].split(' ').next().and_then(|n| n.parse::<u32>().ok()));
    for l in &lines {
        println!("{}", l.split(" [").next().unwrap_or(l));
    }
    if hard_failures > 0 {
        eprintln!("{hard_failures} hard criteria failed");
        std::process::exit(1);
    }
}
