"""Smoke test for the spendchain Python extension.

Build and install first:  maturin build --release -m crates/python/Cargo.toml
then pip install the wheel, and run  python python/smoke_test.py
"""

import json

import spendchain


def main():
    chain = spendchain.Chain(50.0, 0.1, [(1, 100.0)])
    chain.append_block(2, [(1, 3, 10.0)])
    assert chain.balance(1) == 89.0
    assert chain.balance(3) == 10.0
    assert chain.balance(2) == 50.0
    assert chain.spent_total(1) == 10.0
    assert chain.statistic("PSP", 1) == 10.0
    assert chain.statistic("POW", 1) == 0.0
    assert len(chain) == 1
    assert chain.total_supply() == 149.0

    assert spendchain.nlz(bytes(32)) == 256
    assert spendchain.nlz(b"\x01" + bytes(31)) == 7
    assert spendchain.success_probability(16, 15) == 1 / 4096
    assert int(spendchain.target(8, 0), 16) == 2**248

    stats = spendchain.measure_block_time(12, 63.0, trials=10000, seed=1)
    assert abs(stats["mean"] / 64 - 1) < 0.05, stats

    cfg = {
        "rule": "PSP", "D": 16, "Rwd": 50, "FPC": 0.1, "WR": 1.0, "L": 512,
        "trials": 20, "seed": 3, "genesis": [{"party": 1, "amount": 1000}],
    }
    theory = spendchain.theoretical_time(json.dumps(cfg))
    assert abs(theory["asymptotic"] - 893.3) < 0.1

    csv, summary, code = spendchain.run_experiment("chain-build", json.dumps(cfg))
    assert code == 0
    assert csv.startswith("command,rule,D,F,E,Rwd,FPC,WR,L,trials,seed,metric,")
    assert json.loads(summary)["seed"] == 3

    try:
        spendchain.run_experiment("chain-build", json.dumps({**cfg, "D": 0}))
    except ValueError as e:
        assert "difficulty" in str(e)
    else:
        raise AssertionError("invalid config accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()
