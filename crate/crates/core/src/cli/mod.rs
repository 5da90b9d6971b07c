//! Experiment runner behind the `spendchain` binary.
//!
//! A run takes a [`SimConfig`] (JSON) and a [`Command`], executes the
//! matching simulation and produces flat [`Record`]s that put each measured
//! value next to its closed-form counterpart. [`write_outputs`] stores them as
//! `<command>.csv` plus `<command>.summary.json` (which echoes the config).

pub mod config;
pub mod theory;

use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use serde_json::json;
use thiserror::Error;

pub use config::{ConfigError, GenesisEntry, HashrateEntry, SimConfig};
pub use theory::{earning_rate_formula, steady_block_time, theoretical_time, TheoreticalTime, EULER_GAMMA};

use crate::consensus::success_probability;
use crate::simulator::{self, ChainBuildConfig, PartySpec, RaceConfig, SimError};
use crate::strategies::{self, EarningSetup, EconomicsError, Strategy};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Command {
    BlockTime,
    ChainBuild,
    Race,
    EarningRate,
    Sustainability,
}

impl Command {
    pub const ALL: [Command; 5] =
        [Command::BlockTime, Command::ChainBuild, Command::Race, Command::EarningRate, Command::Sustainability];

    pub fn as_str(self) -> &'static str {
        match self {
            Command::BlockTime => "block-time",
            Command::ChainBuild => "chain-build",
            Command::Race => "race",
            Command::EarningRate => "earning-rate",
            Command::Sustainability => "sustainability",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Command::ALL.into_iter().find(|c| c.as_str() == s).ok_or_else(|| format!("unknown command {s:?}"))
    }
}

/// One CSV row. Column order is part of the output format.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Record {
    pub command: String,
    pub rule: String,
    #[serde(rename = "D")]
    pub difficulty: u32,
    #[serde(rename = "F")]
    pub freshness: u64,
    #[serde(rename = "E")]
    pub experience: u64,
    #[serde(rename = "Rwd")]
    pub reward: f64,
    #[serde(rename = "FPC")]
    pub fee_per_coin: f64,
    #[serde(rename = "WR")]
    pub work_ratio: f64,
    #[serde(rename = "L")]
    pub length: u64,
    pub trials: usize,
    pub seed: u64,
    pub metric: String,
    pub empirical: Option<f64>,
    pub theoretical: Option<f64>,
    pub relative_error: Option<f64>,
}

pub const CSV_COLUMNS: [&str; 15] = [
    "command", "rule", "D", "F", "E", "Rwd", "FPC", "WR", "L", "trials", "seed", "metric", "empirical",
    "theoretical", "relative_error",
];

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("simulation failed: {0}")]
    Sim(#[from] SimError),
    #[error("{0}")]
    Economics(EconomicsError),
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl From<EconomicsError> for RunError {
    fn from(e: EconomicsError) -> Self {
        match e {
            EconomicsError::Sim(s) => RunError::Sim(s),
            other => RunError::Economics(other),
        }
    }
}

impl RunError {
    /// 2 for configuration problems, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Economics(EconomicsError::NotOverspending)
            | RunError::Economics(EconomicsError::NotWindowed(_))
            | RunError::Economics(EconomicsError::WorkRatio(_)) => 2,
            _ => 1,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunOutput {
    pub command: String,
    pub seed: u64,
    pub config: SimConfig,
    pub records: Vec<Record>,
    /// Command-specific detail for the summary document.
    pub details: serde_json::Value,
    /// Some trial could not fund its strategy. Expected for `sustainability`.
    pub infeasible: bool,
}

impl RunOutput {
    /// Process exit code for a finished run: 3 when a strategy turned out
    /// infeasible, except for `sustainability`, where that is the point.
    pub fn exit_code(&self) -> i32 {
        if self.infeasible && self.command != Command::Sustainability.as_str() {
            3
        } else {
            0
        }
    }

    pub fn csv_bytes(&self) -> Result<Vec<u8>, RunError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        if self.records.is_empty() {
            w.write_record(CSV_COLUMNS)?;
        }
        for r in &self.records {
            w.serialize(r)?;
        }
        w.into_inner().map_err(|e| RunError::Io(e.into_error()))
    }

    pub fn summary_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }
}

fn rel_err(empirical: f64, theoretical: f64) -> Option<f64> {
    (theoretical != 0.0 && theoretical.is_finite() && empirical.is_finite())
        .then(|| (empirical - theoretical).abs() / theoretical.abs())
}

struct Recorder<'a> {
    cfg: &'a SimConfig,
    command: Command,
    work_ratio: f64,
    records: Vec<Record>,
}

impl Recorder<'_> {
    fn push(&mut self, metric: &str, empirical: Option<f64>, theoretical: Option<f64>) {
        let relative_error = match (empirical, theoretical) {
            (Some(e), Some(t)) => rel_err(e, t),
            _ => None,
        };
        self.records.push(Record {
            command: self.command.as_str().to_string(),
            rule: self.cfg.rule.as_str().to_string(),
            difficulty: self.cfg.difficulty,
            freshness: self.cfg.freshness,
            experience: self.cfg.experience,
            reward: self.cfg.reward,
            fee_per_coin: self.cfg.fee_per_coin,
            work_ratio: self.work_ratio,
            length: self.cfg.length,
            trials: self.cfg.trials,
            seed: self.cfg.seed,
            metric: metric.to_string(),
            empirical,
            theoretical,
            relative_error,
        });
    }
}

fn build_config(cfg: &SimConfig) -> ChainBuildConfig {
    let params = cfg.ledger_params();
    let rule = cfg.consensus_rule();
    let builder = cfg.builder();
    ChainBuildConfig {
        rule,
        params,
        genesis: cfg.allocations(),
        builder,
        hashrate: cfg.hashrate(builder),
        strategy: Strategy::self_spend(&params, cfg.work_ratio, rule.min_age()),
        length: cfg.length,
        prefix_blocks: cfg.prefix_blocks(),
        prefix_creator: crate::ledger::PartyId(u64::MAX),
        mode: cfg.mode,
        stop_on_infeasible: true,
    }
}

/// Runs `command` on `cfg` and returns its records.
pub fn run_experiment(cfg: &SimConfig, command: Command) -> Result<RunOutput, RunError> {
    cfg.validate()?;
    let mut rec = Recorder { cfg, command, work_ratio: cfg.work_ratio, records: Vec::new() };
    let mut infeasible = false;
    let details = match command {
        Command::BlockTime => {
            let rule = cfg.consensus_rule();
            let s = cfg.statistic();
            let hashrate = cfg.hashrate(cfg.builder());
            let stats = simulator::measure_block_time(&rule, s, hashrate, cfg.trials, cfg.seed, cfg.mode)?;
            let p = success_probability(rule.difficulty, s);
            rec.push("mean_block_time", Some(stats.mean), Some(1.0 / p / hashrate));
            rec.push("stderr_block_time", Some(stats.stderr), None);
            rec.push("success_probability", None, Some(p));
            json!({ "statistic": s.to_coins(), "stats": stats })
        }
        Command::ChainBuild => {
            let build = build_config(cfg);
            let report = simulator::run_chain_build(&build, cfg.trials, cfg.seed)?;
            let theory = theoretical_time(cfg);
            infeasible = report.failures > 0;
            rec.push("total_time", Some(report.total.mean), Some(theory.exact_oracle));
            rec.push("total_time_capped", Some(report.total.mean), Some(theory.exact_capped));
            let after_first: Vec<f64> = report
                .trials
                .iter()
                .filter(|t| t.failure.is_none())
                .map(|t| t.total_time - t.block_times[0])
                .collect();
            let after = simulator::TrialStats::from_samples(&after_first);
            rec.push("total_time_after_first", Some(after.mean), theory.asymptotic);
            if let Some(steady) = steady_block_time(cfg) {
                let skip = cfg.freshness as usize;
                let tail = &report.per_block_mean.get(skip..).unwrap_or(&[]);
                let mean = (!tail.is_empty()).then(|| tail.iter().sum::<f64>() / tail.len() as f64);
                rec.push("steady_block_time", mean, Some(steady));
            }
            rec.push("failures", Some(report.failures as f64), None);
            json!({
                "total": report.total,
                "after_first": after,
                "theory": theory,
                "per_block_mean": report.per_block_mean,
                "failure_heights": report.trials.iter().filter_map(|t| t.failure.as_ref().map(|f| f.blocks_built)).collect::<Vec<_>>(),
            })
        }
        Command::Race => {
            let params = cfg.ledger_params();
            let rule = cfg.consensus_rule();
            let honest_id = cfg.builder();
            let adversary_id = cfg.adversary()?;
            let horizon = cfg.horizon.ok_or_else(|| ConfigError::new("horizon", "race needs a horizon"))?;
            let adversary_wr = cfg.adversary_work_ratio.unwrap_or(cfg.work_ratio);
            let honest_wr = cfg.honest_work_ratio.unwrap_or(1.0);
            rec.work_ratio = adversary_wr;
            let race = RaceConfig {
                rule,
                params,
                genesis: cfg.allocations(),
                honest: PartySpec {
                    id: honest_id,
                    hashrate: cfg.hashrate(honest_id),
                    strategy: Strategy::honest(&params, honest_wr, Vec::new(), rule.min_age()),
                },
                adversary: PartySpec {
                    id: adversary_id,
                    hashrate: cfg.hashrate(adversary_id),
                    strategy: Strategy::self_spend(&params, adversary_wr, rule.min_age()),
                },
                horizon,
                prefix_blocks: cfg.prefix_blocks(),
                mode: cfg.mode,
            };
            let summary = simulator::race_frequency(&race, cfg.trials, cfg.seed)?;
            let mean = |f: &dyn Fn(&simulator::RaceResult) -> f64| {
                summary.results.iter().map(f).sum::<f64>() / summary.runs as f64
            };
            rec.push("overtake_frequency", Some(summary.frequency), None);
            rec.push("honest_length", Some(mean(&|r| r.honest_length as f64)), None);
            rec.push("adversary_length", Some(mean(&|r| r.adversary_length as f64)), None);
            rec.push("honest_net_coins", Some(mean(&|r| r.honest_net as f64 / crate::ledger::COIN as f64)), None);
            rec.push("adversary_net_coins", Some(mean(&|r| r.adversary_net as f64 / crate::ledger::COIN as f64)), None);
            let interval = |times: &mut dyn Iterator<Item = &Vec<f64>>| {
                let (sum, n) = times.fold((0.0, 0usize), |(s, n), v| {
                    let half = &v[v.len() / 2..];
                    (s + half.iter().sum::<f64>(), n + half.len())
                });
                (n > 0).then(|| sum / n as f64)
            };
            let h = interval(&mut summary.results.iter().map(|r| &r.honest_block_times));
            let a = interval(&mut summary.results.iter().map(|r| &r.adversary_block_times));
            let ratio = h.zip(a).map(|(h, a)| a / h);
            let expected = rule.kind.is_spending_rule().then(|| honest_wr / adversary_wr);
            rec.push("interval_ratio", ratio, expected);
            json!({ "runs": summary.runs, "overtakes": summary.overtakes, "frequency": summary.frequency, "stderr": summary.stderr })
        }
        Command::EarningRate => {
            let rule = cfg.consensus_rule();
            let sweep = if cfg.sweep.is_empty() { vec![cfg.work_ratio] } else { cfg.sweep.clone() };
            let mut rows = Vec::new();
            for &wr in &sweep {
                let setup = EarningSetup {
                    rule,
                    params: cfg.ledger_params(),
                    work_ratio: wr,
                    hashrate: cfg.hashrate(cfg.builder()),
                    measured_blocks: cfg.length,
                    mode: cfg.mode,
                };
                let rate = strategies::adversary_earning_rate(&setup, cfg.trials, cfg.seed)?;
                rec.work_ratio = wr;
                rec.push("earning_rate", Some(rate.measured), Some(rate.formula));
                rec.push("earning_rate_exact", Some(rate.measured), Some(rate.exact));
                rows.push(rate);
            }
            let peak = rows
                .iter()
                .max_by(|a, b| a.measured.total_cmp(&b.measured))
                .map(|r| r.work_ratio);
            rec.work_ratio = cfg.work_ratio;
            rec.push("peak_work_ratio", peak, (sweep.len() > 1).then_some(0.5));
            json!({ "sweep": rows.iter().map(|r| json!({
                "work_ratio": r.work_ratio, "measured": r.measured, "formula": r.formula,
                "exact": r.exact, "mean_block_time": r.block_time.mean,
            })).collect::<Vec<_>>() })
        }
        Command::Sustainability => {
            let build = build_config(cfg);
            let report = strategies::sustainability_check(&build, cfg.length, cfg.seed)?;
            let initial = report.balances.first().copied().unwrap_or_default();
            let predicted = strategies::predicted_failure_height(&build.params, build.strategy.spend_per_block, initial);
            infeasible = report.failure_height.is_some();
            rec.push("failure_height", report.failure_height.map(|h| h as f64), predicted.map(|h| h as f64));
            rec.push("failure_height_bound", None, report.upper_bound);
            rec.push("balance_delta_per_block", Some(report.delta_per_block as f64 / crate::ledger::COIN as f64), None);
            json!({
                "failure_height": report.failure_height,
                "predicted_failure_height": predicted,
                "upper_bound": report.upper_bound,
                "initial_balance": initial.to_coins(),
                "final_balance": report.balances.last().map(|b| b.to_coins()),
            })
        }
    };
    Ok(RunOutput {
        command: command.as_str().to_string(),
        seed: cfg.seed,
        config: cfg.clone(),
        records: rec.records,
        details,
        infeasible,
    })
}

/// Writes `<command>.csv` and `<command>.summary.json` into `dir`.
pub fn write_outputs(out: &RunOutput, dir: &Path) -> Result<(PathBuf, PathBuf), RunError> {
    fs::create_dir_all(dir)?;
    let csv_path = dir.join(format!("{}.csv", out.command));
    let json_path = dir.join(format!("{}.summary.json", out.command));
    fs::write(&csv_path, out.csv_bytes()?)?;
    fs::write(&json_path, out.summary_json())?;
    Ok((csv_path, json_path))
}
