import math

import numpy as np
import pytest

from bellratio.errors import DegenerateDenominatorError, DomainError
from bellratio.outcomes import CELL_ORDER, DETECTED, PAIR_NAMES, SETTING_PAIRS, Outcome
from bellratio.qm_model import full_outcome_distribution, singles_probability
from bellratio.simulator import (
    CountsTable,
    efficiency_invariance_check,
    estimate_statistic,
    run_experiment,
    sample_shard,
    uniforms,
)

from conftest import make_config


def test_zero_pairs_rejected():
    with pytest.raises(DomainError):
        make_config(n=0)


def test_counts_table_invariants():
    cfg = make_config(n=5000)
    counts = run_experiment(cfg)
    assert (counts.table.sum(axis=(1, 2)) == 5000).all()
    for pair in PAIR_NAMES:
        for x in DETECTED:
            assert counts.singles(pair, 1, x) == sum(counts.cell(pair, x, y) for y in Outcome)
            assert counts.singles(pair, 2, x) == sum(counts.cell(pair, y, x) for y in Outcome)
    bad = counts.table.copy()
    bad[0, 0, 0] += 1
    with pytest.raises(ValueError):
        CountsTable(bad, 5000)


def test_determinism_and_sharding():
    cfg = make_config(n=1000, seed=123)
    base = run_experiment(cfg)
    assert np.array_equal(base.table, run_experiment(cfg).table)
    assert np.array_equal(base.table, run_experiment(cfg, workers=4, shard_size=64).table)
    assert np.array_equal(base.table, run_experiment(cfg, workers=1, shard_size=4).table)
    other = run_experiment(cfg.replace(seed=124))
    assert not np.array_equal(base.table, other.table)


def test_uniform_stream_is_order_independent():
    whole = uniforms(7, 3, 0, 103)
    parts = np.concatenate([uniforms(7, 3, 0, 37), uniforms(7, 3, 37, 90), uniforms(7, 3, 90, 103)])
    assert np.array_equal(whole, parts)
    assert whole.min() >= 0.0 and whole.max() < 1.0


def test_shard_size_must_be_multiple_of_four():
    with pytest.raises(ValueError):
        run_experiment(make_config(n=10), shard_size=6)


def test_inverse_cdf_uses_fixed_cell_order():
    cdf = np.cumsum(np.full(9, 1 / 9))
    cdf[-1] = 1.0
    tallies = sample_shard(cdf, 0, 0, 0, 90_000)
    assert tallies.sum() == 90_000
    assert (np.abs(tallies - 10_000) < 5 * math.sqrt(10_000)).all()
    # a point mass lands in the matching slot of CELL_ORDER
    for slot in range(9):
        p = np.zeros(9)
        p[slot] = 1.0
        c = np.cumsum(p)
        c[-1] = 1.0
        assert sample_shard(c, 1, 0, 0, 50)[slot] == 50


@pytest.mark.slow
def test_frequencies_match_distribution(reference_config):
    counts = run_experiment(reference_config)
    n = reference_config.pairs_per_setting
    for k, (name, first, second) in enumerate(SETTING_PAIRS):
        st = reference_config.settings
        dist = full_outcome_distribution(reference_config, st[first], st[second])
        for x, y in CELL_ORDER:
            p = dist[x, y]
            sigma = math.sqrt(n * p * (1 - p))
            assert abs(counts.table[k, x, y] - n * p) <= 4 * sigma + 1e-9, (name, x, y)
    single = singles_probability(reference_config)
    sigma = math.sqrt(n * single * (1 - single))
    for pair in PAIR_NAMES:
        for side in (1, 2):
            for x in DETECTED:
                assert abs(counts.singles(pair, side, x) - n * single) <= 4 * sigma


def proportional_counts():
    # coincidences 2(1 +- c) per channel: exactly proportional to the QM cells
    table = np.zeros((7, 3, 3), dtype=np.int64)
    c_of = {"a_b": -0.5, "a_bp": -0.5, "ap_b": -0.5, "ap_bp": 1.0, "ap_s": 0.0, "r_bp": 0.0, "r_s": 0.0}
    for k, name in enumerate(PAIR_NAMES):
        c = c_of[name]
        table[k, 0, 0] = table[k, 1, 1] = round(2 * (1 + c))
        table[k, 0, 1] = table[k, 1, 0] = round(2 * (1 - c))
    table[:, 2, 2] = 100 - table.sum(axis=(1, 2))
    return CountsTable(table, 100)


def test_estimate_exact_counts():
    res = estimate_statistic(proportional_counts(), bootstrap_resamples=0)
    assert res.statistic.value == pytest.approx(-1.5, abs=1e-12)
    assert res.std_error is None and res.statistic.std_error is None


def test_estimate_zero_denominator():
    table = np.zeros((7, 3, 3), dtype=np.int64)
    table[:, 2, 2] = 10
    with pytest.raises(DegenerateDenominatorError):
        estimate_statistic(CountsTable(table, 10), bootstrap_resamples=10)


def test_bootstrap_deterministic():
    counts = run_experiment(make_config(n=200_000, seed=5))
    a = estimate_statistic(counts, 50, seed=9)
    b = estimate_statistic(counts, 50, seed=9)
    assert a.std_error == b.std_error and a.std_error > 0


def test_csv_roundtrip():
    counts = run_experiment(make_config(n=2000))
    text = counts.to_csv(header_comment="manifest: {}")
    assert text.splitlines()[0].startswith("# ")
    assert text.splitlines()[1] == "pair,outcome1,outcome2,count"
    assert len(text.splitlines()) == 2 + 63
    again = CountsTable.from_csv(text)
    assert np.array_equal(again.table, counts.table)


@pytest.mark.slow
def test_statistic_consistent_with_qm(reference_config):
    from bellratio.simulator import simulate

    res = simulate(reference_config)
    assert abs(res.statistic.value + 1.5) < 3 * res.std_error


def test_same_eta_is_identical():
    cfg = make_config(n=300_000)
    rep = efficiency_invariance_check(cfg, 0.2, bootstrap_resamples=20)
    assert rep.statistic == rep.statistic_alt and rep.consistent


def test_invalid_eta_propagates():
    with pytest.raises(DomainError):
        efficiency_invariance_check(make_config(n=100), 1.5)
