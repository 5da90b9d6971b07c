//! Python bindings. Amounts cross the boundary as whole-coin floats.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use spendchain::cli::{self, Command, SimConfig};
use spendchain::consensus::{self, ConsensusRule, Digest, RuleKind};
use spendchain::ledger::{self, Allocation, Amount, Block, FeeRate, LedgerParams, PartyId};
use spendchain::simulator::{self, SimMode};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn coins(v: f64) -> PyResult<Amount> {
    Amount::from_coins(v).ok_or_else(|| PyValueError::new_err(format!("invalid coin amount {v}")))
}

fn parse_rule(kind: &str, difficulty: u32, freshness: u64, experience: u64) -> PyResult<ConsensusRule> {
    let kind: RuleKind = kind.parse().map_err(value_err)?;
    ConsensusRule::new(kind, difficulty, freshness, experience).map_err(value_err)
}

fn parse_mode(mode: &str) -> PyResult<SimMode> {
    match mode {
        "geometric" => Ok(SimMode::Geometric),
        "grind" => Ok(SimMode::Grind),
        other => Err(PyValueError::new_err(format!("unknown mode {other:?}"))),
    }
}

/// A ledger chain. Blocks appended here skip the consensus threshold.
#[pyclass(name = "Chain")]
struct PyChain {
    inner: ledger::Chain,
}

#[pymethods]
impl PyChain {
    #[new]
    #[pyo3(signature = (reward, fee_per_coin, genesis, experience = 0))]
    fn new(reward: f64, fee_per_coin: f64, genesis: Vec<(u64, f64)>, experience: u64) -> PyResult<Self> {
        let fee_rate = FeeRate::from_per_coin(fee_per_coin).ok_or_else(|| PyValueError::new_err("invalid fee_per_coin"))?;
        let params = LedgerParams::new(coins(reward)?, fee_rate).with_experience(experience);
        let allocations =
            genesis.into_iter().map(|(p, a)| Ok(Allocation::new(PartyId(p), coins(a)?))).collect::<PyResult<_>>()?;
        Ok(PyChain { inner: ledger::Chain::new(params, allocations) })
    }

    fn __len__(&self) -> usize {
        self.inner.len() as usize
    }

    fn balance(&self, party: u64) -> f64 {
        self.inner.balance(PartyId(party)).to_coins()
    }

    fn spent_total(&self, party: u64) -> f64 {
        self.inner.spent_total(PartyId(party)).to_coins()
    }

    fn spent_recent(&self, party: u64, freshness: u64) -> f64 {
        self.inner.spent_recent(PartyId(party), freshness).to_coins()
    }

    fn spent_old(&self, party: u64, experience: u64) -> f64 {
        self.inner.spent_old(PartyId(party), experience).to_coins()
    }

    fn spent_recent_old(&self, party: u64, freshness: u64, experience: u64) -> f64 {
        self.inner.spent_recent_old(PartyId(party), freshness, experience).to_coins()
    }

    fn total_supply(&self) -> f64 {
        self.inner.total_supply().to_coins()
    }

    fn tip_digest(&self) -> String {
        self.inner.tip_digest().to_string()
    }

    /// Appends a block by `creator` holding one payment per `(payer, payee, amount)`.
    #[pyo3(signature = (creator, payments, min_age = 0))]
    fn append_block(&mut self, creator: u64, payments: Vec<(u64, u64, f64)>, min_age: u64) -> PyResult<String> {
        let mut transactions = Vec::new();
        for (payer, payee, amount) in payments {
            let tx = self
                .inner
                .make_transaction(PartyId(payer), PartyId(payee), coins(amount)?, min_age)
                .map_err(value_err)?;
            transactions.push(tx);
        }
        let block = Block {
            time: self.inner.tip_time(),
            prev_digest: self.inner.tip_digest(),
            transactions,
            creator: PartyId(creator),
            nonce: 0,
            reward: self.inner.params().reward,
        };
        self.inner.apply_block(block).map(|d| d.to_string()).map_err(value_err)
    }

    /// The rule's spending statistic for `party`, in coins.
    #[pyo3(signature = (rule, party, freshness = 1, experience = 0))]
    fn statistic(&self, rule: &str, party: u64, freshness: u64, experience: u64) -> PyResult<f64> {
        let rule = parse_rule(rule, 1, freshness, experience)?;
        Ok(consensus::spending_statistic(&rule, PartyId(party), &self.inner).to_coins())
    }
}

/// Leading zero bits of a 32-byte digest.
#[pyfunction]
fn nlz(digest: [u8; 32]) -> u32 {
    consensus::nlz(&Digest(digest))
}

/// Target for difficulty `d` at statistic `s` coins, as a hex string.
#[pyfunction]
fn target(d: u32, s: f64) -> PyResult<String> {
    if !(1..=256).contains(&d) {
        return Err(PyValueError::new_err("difficulty must be in 1..=256"));
    }
    Ok(consensus::target(d, coins(s)?).to_string())
}

#[pyfunction]
fn success_probability(d: u32, s: f64) -> PyResult<f64> {
    if !(1..=256).contains(&d) {
        return Err(PyValueError::new_err("difficulty must be in 1..=256"));
    }
    Ok(consensus::success_probability(d, coins(s)?))
}

/// Mean ticks to one block: returns `{"mean", "stderr", "n"}`.
#[pyfunction]
#[pyo3(signature = (d, s, trials, seed, hashrate = 1.0, mode = "geometric"))]
fn measure_block_time<'py>(
    py: Python<'py>,
    d: u32,
    s: f64,
    trials: usize,
    seed: u64,
    hashrate: f64,
    mode: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let rule = parse_rule("POW", d, 1, 0)?;
    let stats = simulator::measure_block_time(&rule, coins(s)?, hashrate, trials, seed, parse_mode(mode)?)
        .map_err(value_err)?;
    let out = PyDict::new(py);
    out.set_item("mean", stats.mean)?;
    out.set_item("stderr", stats.stderr)?;
    out.set_item("n", stats.n)?;
    Ok(out)
}

/// `{"asymptotic", "exact_oracle", "exact_capped", "first_block"}` for a JSON config.
#[pyfunction]
fn theoretical_time<'py>(py: Python<'py>, config_json: &str) -> PyResult<Bound<'py, PyDict>> {
    let cfg = SimConfig::from_json(config_json).map_err(value_err)?;
    let t = cli::theoretical_time(&cfg);
    let out = PyDict::new(py);
    out.set_item("asymptotic", t.asymptotic)?;
    out.set_item("exact_oracle", t.exact_oracle)?;
    out.set_item("exact_capped", t.exact_capped)?;
    out.set_item("first_block", t.first_block)?;
    Ok(out)
}

/// Runs a CLI command on a JSON config; returns `(csv, summary_json, exit_code)`.
#[pyfunction]
fn run_experiment(command: &str, config_json: &str) -> PyResult<(String, String, i32)> {
    let command: Command = command.parse().map_err(PyValueError::new_err)?;
    let cfg = SimConfig::from_json(config_json).map_err(value_err)?;
    let out = cli::run_experiment(&cfg, command).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    let csv = out.csv_bytes().map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok((String::from_utf8(csv).expect("csv is utf-8"), out.summary_json(), out.exit_code()))
}

#[pymodule]
#[pyo3(name = "spendchain")]
fn spendchain_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyChain>()?;
    m.add_function(wrap_pyfunction!(nlz, m)?)?;
    m.add_function(wrap_pyfunction!(target, m)?)?;
    m.add_function(wrap_pyfunction!(success_probability, m)?)?;
    m.add_function(wrap_pyfunction!(measure_block_time, m)?)?;
    m.add_function(wrap_pyfunction!(theoretical_time, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
