use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use darklit::io::{run, Command, ExperimentFile, ExperimentSpec, Preset};
use darklit::sim::{FeeSource, Scenario};
use darklit::Result;

#[derive(Parser)]
#[command(name = "darklit", version, about = "Liquidation across lit and dark venues: trader, fees, mean-field game, simulation")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args, Clone)]
struct Common {
    /// Parameter preset (table1 or table2); overrides the config file's preset.
    #[arg(long)]
    preset: Option<Preset>,
    /// Experiment file (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Root seed for every random stream.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Tabulate the trader's best response across inventory at constant fees.
    SolveTrader {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        scenario: Option<Scenario>,
    },
    /// Solve the competitive equilibrium.
    SolveMfg {
        #[command(flatten)]
        common: Common,
    },
    /// Train the fee and contract networks.
    TrainFees {
        #[command(flatten)]
        common: Common,
        /// Training epochs.
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        scenario: Option<Scenario>,
    },
    /// Monte-Carlo simulation of one market scenario.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// regulated-M1, regulated-M2 or competitive.
        #[arg(long)]
        scenario: Option<Scenario>,
        /// Number of Monte-Carlo paths.
        #[arg(long)]
        paths: Option<usize>,
        /// Trained checkpoint supplying fees and contract controls.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Almgren-Chriss schedule and reservation utility.
    BenchmarkAc {
        #[command(flatten)]
        common: Common,
        /// Number of Monte-Carlo paths.
        #[arg(long)]
        paths: Option<usize>,
    },
}

fn base(common: &Common) -> Result<ExperimentFile> {
    let mut file = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                darklit::Error::Config(format!("cannot read config {}: {e}", path.display()))
            })?;
            ExperimentFile::parse(&text).map_err(|e| darklit::Error::Config(format!("{}: {e}", path.display())))?
        }
        None => ExperimentFile::default(),
    };
    if let Some(p) = common.preset {
        file.preset = Some(p);
    }
    if let Some(s) = common.seed {
        file.seed = Some(s);
    }
    if let Some(o) = &common.out {
        file.out = Some(o.clone());
    }
    Ok(file)
}

fn build(cli: &Cli) -> Result<(Command, ExperimentSpec)> {
    let (cmd, common, scenario) = match &cli.command {
        Cmd::SolveTrader { common, scenario } => (Command::SolveTrader, common, *scenario),
        Cmd::SolveMfg { common } => (Command::SolveMfg, common, Some(Scenario::Competitive)),
        Cmd::TrainFees { common, scenario, .. } => (Command::TrainFees, common, *scenario),
        Cmd::Simulate { common, scenario, .. } => (Command::Simulate, common, *scenario),
        Cmd::BenchmarkAc { common, .. } => (Command::BenchmarkAc, common, None),
    };
    let mut file = base(common)?;
    if scenario.is_some() {
        file.scenario = scenario;
    }
    match &cli.command {
        Cmd::TrainFees { epochs: Some(n), .. } => {
            let mut t = file.train.clone().unwrap_or_default();
            t.epochs = *n;
            file.train = Some(t);
        }
        Cmd::Simulate { paths, checkpoint, .. } => {
            let mut s = file.sim.clone().unwrap_or_default();
            if let Some(n) = paths {
                s.n_paths = *n;
            }
            if let Some(c) = checkpoint {
                s.fees = FeeSource::Trained { checkpoint: c.display().to_string() };
            }
            file.sim = Some(s);
        }
        Cmd::BenchmarkAc { paths: Some(n), .. } => {
            let mut b = file.benchmark.clone().unwrap_or_default();
            b.n_paths = *n;
            file.benchmark = Some(b);
        }
        _ => {}
    }
    Ok((cmd, file.resolve()?))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = build(&cli).and_then(|(cmd, spec)| run(cmd, &spec));
    match result {
        Ok(rep) => {
            println!("wrote {}", rep.out.display());
            for f in &rep.manifest.outputs {
                println!("  {}  {}", f.sha256, f.name);
            }
            for (k, v) in &rep.manifest.notes {
                println!("  {k} = {v}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
