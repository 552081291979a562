//! Experiment files: presets, strict parsing and overrides.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fees::TrainConfig;
use crate::mfg::{MfgConfig, MfgParams};
use crate::model::{table1_pools, table2_pools, DarkPoolSpec, LiquidityParam, MarketParams};
use crate::sim::{Scenario, SimConfig};

/// Named parameter sets.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// Regulated-market constants, with the competitive constants alongside.
    #[default]
    Table1,
    /// Competitive-market constants.
    Table2,
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "table1" => Ok(Preset::Table1),
            "table2" => Ok(Preset::Table2),
            _ => Err(Error::Config(format!("unknown preset {s:?}; expected table1 or table2"))),
        }
    }
}

/// A dark pool entry: either a tabulated size parameter `a`, read through
/// `liquidity_param`, or an explicit `size_mean`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoolEntry {
    pub theta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size_mean: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support_eps: Option<f64>,
}

impl PoolEntry {
    fn resolve(&self, how: LiquidityParam, key: &str) -> Result<DarkPoolSpec> {
        let size_mean = match (self.a, self.size_mean) {
            (Some(a), None) => how.mean_size(a),
            (None, Some(m)) => m,
            _ => return Err(Error::Config(format!("{key}: give exactly one of `a` and `size_mean`"))),
        };
        let spec = DarkPoolSpec { theta: self.theta, size_mean, support_eps: self.support_eps.unwrap_or(0.0) };
        spec.validate().map_err(|e| Error::Config(format!("{key}: {e}")))?;
        Ok(spec)
    }

    fn explicit(p: &DarkPoolSpec) -> Self {
        Self { theta: p.theta, a: None, size_mean: Some(p.size_mean), support_eps: Some(p.support_eps) }
    }
}

/// Monte-Carlo size of the Almgren-Chriss reservation benchmark.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchmarkConfig {
    pub n_steps: usize,
    pub n_paths: usize,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self { n_steps: 1000, n_paths: 10_000 }
    }
}

/// On-disk layout of an experiment file. Every key is optional; unknown keys
/// are errors. `market` and `competitive` are partial overrides of the preset.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    pub preset: Option<Preset>,
    pub scenario: Option<Scenario>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub liquidity_param: Option<LiquidityParam>,
    pub market: Option<toml::Table>,
    pub pools: Option<Vec<PoolEntry>>,
    pub competitive: Option<toml::Table>,
    pub competitive_pools: Option<Vec<PoolEntry>>,
    pub mfg: Option<MfgConfig>,
    pub train: Option<TrainConfig>,
    pub sim: Option<SimConfig>,
    pub benchmark: Option<BenchmarkConfig>,
}

/// Fully resolved experiment. The root seed is copied into every consumer.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    pub preset: Preset,
    pub scenario: Scenario,
    pub seed: u64,
    pub out: PathBuf,
    pub liquidity_param: LiquidityParam,
    pub market: MarketParams,
    pub pools: Vec<DarkPoolSpec>,
    pub competitive: MfgParams,
    pub competitive_pools: Vec<DarkPoolSpec>,
    pub mfg: MfgConfig,
    pub train: TrainConfig,
    pub sim: SimConfig,
    pub benchmark: BenchmarkConfig,
}

/// Applies `over` on top of `base`, rejecting keys `base` does not have.
fn merge<T: Serialize + DeserializeOwned>(base: &T, over: Option<&toml::Table>, section: &str) -> Result<T> {
    let mut table = to_table(base)?;
    if let Some(over) = over {
        for (k, v) in over {
            if !table.contains_key(k) {
                let known: Vec<&str> = table.keys().map(String::as_str).collect();
                return Err(Error::Config(format!("{section}.{k}: unknown key (expected one of {})", known.join(", "))));
            }
            table.insert(k.clone(), v.clone());
        }
    }
    table.try_into().map_err(|e: toml::de::Error| Error::Config(format!("{section}: {}", e.message())))
}

fn to_table<T: Serialize>(v: &T) -> Result<toml::Table> {
    toml::Table::try_from(v).map_err(|e| Error::Config(e.to_string()))
}

fn resolve_pools(entries: Option<&[PoolEntry]>, default: Vec<DarkPoolSpec>, how: LiquidityParam, key: &str) -> Result<Vec<DarkPoolSpec>> {
    match entries {
        None => Ok(default),
        Some(list) => list.iter().enumerate().map(|(i, e)| e.resolve(how, &format!("{key}[{i}]"))).collect(),
    }
}

impl ExperimentFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Resolves presets and overrides into a validated spec.
    pub fn resolve(&self) -> Result<ExperimentSpec> {
        let preset = self.preset.unwrap_or_default();
        let how = self.liquidity_param.unwrap_or_default();
        let base_market = match preset {
            Preset::Table1 => MarketParams::table1(),
            Preset::Table2 => MarketParams::table2(),
        };
        let market: MarketParams = merge(&base_market, self.market.as_ref(), "market")?;
        market.validate().map_err(|e| Error::Config(format!("market: {e}")))?;
        let pools = resolve_pools(self.pools.as_deref(), table1_pools(how), how, "pools")?;
        let base_comp = MfgParams::from_market(&market, MfgParams::table2().e0);
        let competitive: MfgParams = merge(&base_comp, self.competitive.as_ref(), "competitive")?;
        competitive.validate().map_err(|e| Error::Config(format!("competitive: {e}")))?;
        let competitive_pools =
            resolve_pools(self.competitive_pools.as_deref(), table2_pools(how), how, "competitive_pools")?;
        let seed = self.seed.unwrap_or(0);
        let mfg = self.mfg.clone().unwrap_or_default();
        mfg.validate().map_err(|e| Error::Config(format!("mfg: {e}")))?;
        let mut train = self.train.clone().unwrap_or_default();
        train.seed = seed;
        if train.bounds.horizon != market.horizon {
            return Err(Error::Config(format!(
                "train.bounds.T = {} differs from market.T = {}",
                train.bounds.horizon, market.horizon
            )));
        }
        train.validate().map_err(|e| Error::Config(format!("train: {e}")))?;
        let mut sim = self.sim.clone().unwrap_or_default();
        sim.seed = seed;
        let scenario = self.scenario.unwrap_or(sim.scenario);
        sim.scenario = scenario;
        sim.validate().map_err(|e| Error::Config(format!("sim: {e}")))?;
        let benchmark = self.benchmark.clone().unwrap_or_default();
        if benchmark.n_steps == 0 || benchmark.n_paths < 2 {
            return Err(Error::Config("benchmark: need n_steps >= 1 and n_paths >= 2".into()));
        }
        Ok(ExperimentSpec {
            preset,
            scenario,
            seed,
            out: self.out.clone().unwrap_or_else(|| PathBuf::from("out")),
            liquidity_param: how,
            market,
            pools,
            competitive,
            competitive_pools,
            mfg,
            train,
            sim,
            benchmark,
        })
    }
}

impl ExperimentSpec {
    pub fn preset(preset: Preset) -> Self {
        ExperimentFile { preset: Some(preset), ..Default::default() }.resolve().expect("presets are valid")
    }

    /// Equivalent file with every value explicit.
    pub fn to_file(&self) -> Result<ExperimentFile> {
        Ok(ExperimentFile {
            preset: Some(self.preset),
            scenario: Some(self.scenario),
            seed: Some(self.seed),
            out: Some(self.out.clone()),
            liquidity_param: Some(self.liquidity_param),
            market: Some(to_table(&self.market)?),
            pools: Some(self.pools.iter().map(PoolEntry::explicit).collect()),
            competitive: Some(to_table(&self.competitive)?),
            competitive_pools: Some(self.competitive_pools.iter().map(PoolEntry::explicit).collect()),
            mfg: Some(self.mfg.clone()),
            train: Some(self.train.clone()),
            sim: Some(self.sim.clone()),
            benchmark: Some(self.benchmark.clone()),
        })
    }

    /// Canonical TOML text of the resolved experiment.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(&self.to_file()?).map_err(|e| Error::Config(e.to_string()))
    }
}

/// Reads and resolves an experiment file.
pub fn load_config(path: &Path) -> Result<ExperimentSpec> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
    ExperimentFile::parse(&text)
        .and_then(|f| f.resolve())
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}
